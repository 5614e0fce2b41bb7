//! The classical (local-realist) polytope.
//!
//! A [`DeterministicVertex`] fixes one outcome for every (party, setting).
//! Its index is the mixed-radix number whose digits are those outcomes,
//! ordered party-major then setting, most significant first; enumeration
//! runs through indices in increasing order.
//!
//! [`BellInequality`] stores coefficients over joint entries `p(s; o)`, so
//! its value on a law is a plain dot product. The conditional-form
//! coefficient of an entry is the joint coefficient times `pi(s)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{decode, encode, ProbabilityLaw, Relabeling, Scenario, ScenarioCaps, SettingDistribution};

/// Default cap on `r^(p q)` for explicit enumeration.
pub const VERTEX_CAP: u64 = 1 << 24;
/// Slack allowed when certifying that a built inequality holds on every vertex.
pub const CERTIFY_SLACK: f64 = 1e-12;
/// Ladders up to this many rungs are certified by brute force at build time.
pub const LADDER_CERTIFY_MAX_RUNGS: usize = 10;

/// `r^(p q)`, the number of deterministic vertices.
pub fn vertex_count(s: Scenario) -> u128 {
    (s.outcomes as u128).pow((s.parties * s.settings) as u32)
}

fn check_cap(s: Scenario, cap: u64) -> Result<()> {
    let count = vertex_count(s);
    if count > cap as u128 {
        return Err(Error::TooManyVertices { count, cap });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DeterministicVertex {
    scenario: Scenario,
    index: u64,
}

impl DeterministicVertex {
    pub fn from_index(scenario: Scenario, index: u64) -> Result<Self> {
        if index as u128 >= vertex_count(scenario) {
            return Err(Error::ShapeMismatch(format!("vertex index {index} out of range")));
        }
        Ok(Self { scenario, index })
    }

    /// `assignment[party][setting]` is the outcome.
    pub fn from_assignment(scenario: Scenario, assignment: &[Vec<usize>]) -> Result<Self> {
        if assignment.len() != scenario.parties
            || assignment
                .iter()
                .any(|a| a.len() != scenario.settings || a.iter().any(|&x| x >= scenario.outcomes))
        {
            return Err(Error::ShapeMismatch("assignment does not fit the scenario".into()));
        }
        let r = scenario.outcomes as u64;
        let index = assignment.iter().flatten().fold(0u64, |acc, &x| acc * r + x as u64);
        Ok(Self { scenario, index })
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn assignment(&self) -> Vec<Vec<usize>> {
        let s = self.scenario;
        let digits = decode_u64(self.index, s.outcomes, s.parties * s.settings);
        digits.chunks(s.settings).map(<[usize]>::to_vec).collect()
    }

    pub fn outcome(&self, party: usize, setting: usize) -> usize {
        let s = self.scenario;
        let pos_from_end = s.parties * s.settings - 1 - (party * s.settings + setting);
        ((self.index / (s.outcomes as u64).pow(pos_from_end as u32)) % s.outcomes as u64) as usize
    }

    /// Outcome pattern produced under a setting pattern.
    pub fn outcome_pattern(&self, setting_pattern: usize) -> usize {
        let s = self.scenario;
        let settings = s.decode_settings(setting_pattern);
        let outcomes: Vec<usize> = settings.iter().enumerate().map(|(k, &a)| self.outcome(k, a)).collect();
        s.encode_outcomes(&outcomes)
    }
}

fn decode_u64(mut index: u64, radix: usize, digits: usize) -> Vec<usize> {
    let mut out = vec![0; digits];
    for slot in out.iter_mut().rev() {
        *slot = (index % radix as u64) as usize;
        index /= radix as u64;
    }
    out
}

/// Every deterministic vertex, in index order.
pub fn enumerate_vertices(s: Scenario) -> Result<impl Iterator<Item = DeterministicVertex>> {
    enumerate_vertices_capped(s, VERTEX_CAP)
}

pub fn enumerate_vertices_capped(s: Scenario, cap: u64) -> Result<impl Iterator<Item = DeterministicVertex>> {
    check_cap(s, cap)?;
    let n = vertex_count(s) as u64;
    Ok((0..n).map(move |index| DeterministicVertex { scenario: s, index }))
}

/// `p(s; o) = pi(s) * 1[o = outcomes the vertex assigns under s]`.
pub fn vertex_law(v: &DeterministicVertex, pi: &SettingDistribution) -> Result<ProbabilityLaw> {
    let s = v.scenario();
    if pi.scenario() != s {
        return Err(Error::ShapeMismatch("vertex and setting distribution scenarios differ".into()));
    }
    let mut entries = vec![0.0; s.len()];
    for sp in 0..s.setting_patterns() {
        entries[s.entry_index(sp, v.outcome_pattern(sp))] = pi.weight(sp);
    }
    Ok(ProbabilityLaw::from_parts_unchecked(pi.clone(), entries))
}

/// Sum of `scores[s, o_v(s)]` over the given setting patterns.
pub fn vertex_score(s: Scenario, scores: &[f64], patterns: &[usize], index: u64) -> f64 {
    let v = DeterministicVertex { scenario: s, index };
    patterns.iter().map(|&sp| scores[s.entry_index(sp, v.outcome_pattern(sp))]).sum()
}

/// Maximises `sum_s scores[s, o_v(s)]` over all vertices.
///
/// Assignments of every party but the last are enumerated; the last party
/// best-responds setting by setting, which is exact because its choices for
/// different settings do not interact. Ties go to the smallest vertex index.
/// `cap` bounds the number of enumerated partial assignments.
pub fn argmax_vertex(s: Scenario, scores: &[f64], patterns: &[usize], cap: u64) -> Result<(f64, u64)> {
    let (p, q, r) = (s.parties, s.settings, s.outcomes);
    let prefix_digits = (p - 1) * q;
    let prefix_count = (r as u128).pow(prefix_digits as u32);
    if prefix_count > cap as u128 {
        return Err(Error::TooManyVertices { count: vertex_count(s), cap });
    }
    let prefix_count = prefix_count as u64;
    let no = s.outcome_patterns();
    // Patterns grouped by the last party's setting, with the prefix parties' settings.
    let mut groups: Vec<Vec<(usize, Vec<usize>)>> = vec![Vec::new(); q];
    for &sp in patterns {
        let digits = s.decode_settings(sp);
        groups[digits[p - 1]].push((sp, digits[..p - 1].to_vec()));
    }
    let last_block = (r as u64).pow(q as u32);

    let eval_prefix = |prefix: u64| -> (f64, u64) {
        let assign = decode_u64(prefix, r, prefix_digits);
        let mut total = 0.0;
        let mut last = vec![0usize; q];
        for (b, group) in groups.iter().enumerate() {
            if group.is_empty() {
                continue;
            }
            let bases: Vec<usize> = group
                .iter()
                .map(|(sp, settings)| {
                    let prefix_outcomes: Vec<usize> =
                        settings.iter().enumerate().map(|(k, &a)| assign[k * q + a]).collect();
                    sp * no + encode(&prefix_outcomes, r) * r
                })
                .collect();
            let mut best = f64::NEG_INFINITY;
            let mut best_y = 0;
            for y in 0..r {
                let val: f64 = bases.iter().map(|&base| scores[base + y]).sum();
                if val > best {
                    best = val;
                    best_y = y;
                }
            }
            total += best;
            last[b] = best_y;
        }
        let last_index = last.iter().fold(0u64, |acc, &y| acc * r as u64 + y as u64);
        (total, prefix * last_block + last_index)
    };

    let better = |a: (f64, u64), b: (f64, u64)| -> (f64, u64) {
        if a.0 > b.0 || (a.0 == b.0 && a.1 <= b.1) {
            a
        } else {
            b
        }
    };

    let work = prefix_count as usize * patterns.len().max(1) * r;
    if work < 1 << 16 {
        Ok((0..prefix_count).map(eval_prefix).fold((f64::NEG_INFINITY, u64::MAX), better))
    } else {
        let chunk = 256u64;
        let chunks = prefix_count.div_ceil(chunk);
        Ok((0..chunks)
            .into_par_iter()
            .map(|c| {
                let hi = ((c + 1) * chunk).min(prefix_count);
                (c * chunk..hi).map(eval_prefix).fold((f64::NEG_INFINITY, u64::MAX), better)
            })
            .reduce(|| (f64::NEG_INFINITY, u64::MAX), better))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InequalityForm {
    Raw,
    Canonical,
}

/// `sum coefficients * p <= bound`, over joint entries.
#[derive(Clone, Debug, PartialEq)]
pub struct BellInequality {
    scenario: Scenario,
    pi: SettingDistribution,
    coefficients: Vec<f64>,
    bound: f64,
    form: InequalityForm,
}

impl BellInequality {
    pub fn new(pi: SettingDistribution, coefficients: Vec<f64>, bound: f64, form: InequalityForm) -> Result<Self> {
        let scenario = pi.scenario();
        if coefficients.len() != scenario.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} coefficients, got {}",
                scenario.len(),
                coefficients.len()
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) || !bound.is_finite() {
            return Err(Error::ShapeMismatch("non-finite coefficient or bound".into()));
        }
        Ok(Self { scenario, pi, coefficients, bound, form })
    }

    pub fn zero(pi: SettingDistribution) -> Self {
        let scenario = pi.scenario();
        Self { scenario, pi, coefficients: vec![0.0; scenario.len()], bound: 0.0, form: InequalityForm::Raw }
    }

    /// Builds from conditional-form coefficients `c(s, o)` so that the
    /// inequality reads `sum_s sum_o c(s, o) p(o|s) <= bound`.
    pub fn from_conditional(pi: SettingDistribution, conditional: &[f64], bound: f64) -> Result<Self> {
        let s = pi.scenario();
        if conditional.len() != s.len() {
            return Err(Error::ShapeMismatch("conditional coefficient length".into()));
        }
        let no = s.outcome_patterns();
        let mut coefficients = vec![0.0; s.len()];
        for (i, &c) in conditional.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let w = pi.weight(i / no);
            if w <= 0.0 {
                return Err(Error::ZeroSettingWeight { pattern: i / no });
            }
            coefficients[i] = c / w;
        }
        Self::new(pi, coefficients, bound, InequalityForm::Raw)
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn pi(&self) -> &SettingDistribution {
        &self.pi
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn form(&self) -> InequalityForm {
        self.form
    }

    /// Conditional-form coefficients `pi(s) * c(s; o)`.
    pub fn conditional_coefficients(&self) -> Vec<f64> {
        let no = self.scenario.outcome_patterns();
        self.coefficients.iter().enumerate().map(|(i, c)| c * self.pi.weight(i / no)).collect()
    }

    /// Setting patterns with at least one nonzero coefficient.
    pub fn active_setting_patterns(&self) -> Vec<usize> {
        let no = self.scenario.outcome_patterns();
        (0..self.scenario.setting_patterns())
            .filter(|&sp| self.coefficients[sp * no..(sp + 1) * no].iter().any(|&c| c != 0.0))
            .collect()
    }

    pub fn evaluate(&self, law: &ProbabilityLaw) -> Result<f64> {
        if law.scenario() != self.scenario {
            return Err(Error::ShapeMismatch("inequality and law scenarios differ".into()));
        }
        Ok(self.coefficients.iter().zip(law.entries()).map(|(c, p)| c * p).sum())
    }

    /// `evaluate - bound`; positive means violated.
    pub fn violation(&self, law: &ProbabilityLaw) -> Result<f64> {
        Ok(self.evaluate(law)? - self.bound)
    }

    pub fn relabeled(&self, relabel: &Relabeling) -> Result<Self> {
        let s = self.scenario;
        let pi = self.pi.relabeled(relabel)?;
        let mut coefficients = vec![0.0; self.coefficients.len()];
        for sp in 0..s.setting_patterns() {
            let settings = s.decode_settings(sp);
            let new_sp = relabel.map_settings(s, sp);
            for op in 0..s.outcome_patterns() {
                let new_op = relabel.map_outcomes(s, &settings, op);
                coefficients[s.entry_index(new_sp, new_op)] = self.coefficients[s.entry_index(sp, op)];
            }
        }
        Ok(Self { scenario: s, pi, coefficients, bound: self.bound, form: self.form })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&InequalityFile::from(self)).expect("inequality serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: InequalityFile =
            serde_json::from_str(text).map_err(|e| Error::ShapeMismatch(format!("malformed inequality JSON: {e}")))?;
        f.try_into()
    }
}

/// On-disk inequality: `{"scenario":..,"coefficients":[..],"bound":b,"form":"raw"|"canonical"}`
/// plus an optional `"pi"` (uniform when absent).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InequalityFile {
    pub scenario: Scenario,
    pub coefficients: Vec<f64>,
    pub bound: f64,
    pub form: InequalityForm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<f64>>,
}

impl From<&BellInequality> for InequalityFile {
    fn from(i: &BellInequality) -> Self {
        Self {
            scenario: i.scenario,
            coefficients: i.coefficients.clone(),
            bound: i.bound,
            form: i.form,
            pi: Some(i.pi.weights().to_vec()),
        }
    }
}

impl TryFrom<InequalityFile> for BellInequality {
    type Error = Error;
    fn try_from(f: InequalityFile) -> Result<Self> {
        f.scenario.validate(ScenarioCaps::default())?;
        let pi = match f.pi {
            Some(w) => SettingDistribution::new(f.scenario, w)?,
            None => SettingDistribution::uniform(f.scenario),
        };
        BellInequality::new(pi, f.coefficients, f.bound, f.form)
    }
}

/// Per-entry vertex scores `pi(s) * c(s; o)` and the patterns with weight.
fn vertex_scores(ineq: &BellInequality, pi: &SettingDistribution) -> (Vec<f64>, Vec<usize>) {
    let s = ineq.scenario;
    let no = s.outcome_patterns();
    let scores = ineq.coefficients.iter().enumerate().map(|(i, c)| c * pi.weight(i / no)).collect();
    (scores, pi.support())
}

/// Exact maximum of the inequality's left-hand side over the vertex laws
/// `vertex_law(v, pi)`; ties go to the first vertex in index order.
pub fn classical_max(ineq: &BellInequality, pi: &SettingDistribution) -> Result<(f64, DeterministicVertex)> {
    let s = ineq.scenario;
    if pi.scenario() != s {
        return Err(Error::ShapeMismatch("inequality and setting distribution scenarios differ".into()));
    }
    check_cap(s, VERTEX_CAP)?;
    let (scores, patterns) = vertex_scores(ineq, pi);
    let (value, index) = argmax_vertex(s, &scores, &patterns, VERTEX_CAP)?;
    Ok((value, DeterministicVertex { scenario: s, index }))
}

/// Brute-force check that no vertex exceeds the bound by more than `slack`.
pub fn certify(ineq: &BellInequality, slack: f64) -> Result<()> {
    let s = ineq.scenario;
    check_cap(s, VERTEX_CAP)?;
    let (scores, patterns) = vertex_scores(ineq, &ineq.pi);
    let n = vertex_count(s) as u64;
    let worst = (0..n)
        .into_par_iter()
        .map(|i| (vertex_score(s, &scores, &patterns, i), i))
        .reduce(|| (f64::NEG_INFINITY, u64::MAX), |a, b| if a.0 > b.0 || (a.0 == b.0 && a.1 < b.1) { a } else { b });
    if worst.0 > ineq.bound + slack {
        return Err(Error::ValidityCheckFailed { vertex: worst.1, value: worst.0, bound: ineq.bound });
    }
    Ok(())
}

/// A hidden variable in a two-party chain: (party, setting).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Var {
    party: usize,
    setting: usize,
}

/// Conditional coefficients of `P(first < last) - sum_j P(chain[j] < chain[j+1])`
/// for a two-party chain that alternates parties.
fn chain_conditional(s: Scenario, chain: &[Var]) -> Vec<f64> {
    let mut cond = vec![0.0; s.len()];
    let mut add_less = |u: Var, v: Var, sign: f64| {
        assert_ne!(u.party, v.party, "chain must alternate parties");
        let mut settings = [0usize; 2];
        settings[u.party] = u.setting;
        settings[v.party] = v.setting;
        let sp = s.encode_settings(&settings);
        for x in 0..s.outcomes {
            for y in 0..s.outcomes {
                let (ou, ov) = if u.party == 0 { (x, y) } else { (y, x) };
                if ou < ov {
                    cond[s.entry_index(sp, s.encode_outcomes(&[x, y]))] += sign;
                }
            }
        }
    };
    add_less(chain[0], chain[chain.len() - 1], 1.0);
    for w in chain.windows(2) {
        add_less(w[0], w[1], -1.0);
    }
    cond
}

fn require_weight(pi: &SettingDistribution, patterns: &[Vec<usize>]) -> Result<()> {
    let s = pi.scenario();
    for p in patterns {
        let sp = s.encode_settings(p);
        if pi.weight(sp) <= 0.0 {
            return Err(Error::ZeroSettingWeight { pattern: sp });
        }
    }
    Ok(())
}

/// CGLMP inequality for 2 x 2 x d in chained-order form, written as
/// `P(A2 < B1) - P(A2 < B2) - P(B2 < A1) - P(A1 < B1) <= 0`,
/// where `A_a`, `B_b` are the outcomes under Alice's setting `a` and Bob's
/// setting `b` (settings 1, 2 are indices 0, 1). For d = 2 this is CHSH.
pub fn cglmp_inequality(d: usize, pi: &SettingDistribution) -> Result<BellInequality> {
    let s = Scenario::new(2, 2, d)?;
    if pi.scenario() != s {
        return Err(Error::ShapeMismatch(format!("CGLMP({d}) needs a 2x2x{d} setting distribution")));
    }
    require_weight(pi, &[vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]])?;
    let a = |setting| Var { party: 0, setting };
    let b = |setting| Var { party: 1, setting };
    let cond = chain_conditional(s, &[a(1), b(1), a(0), b(0)]);
    BellInequality::from_conditional(pi.clone(), &cond, 0.0)
}

/// CGLMP with uniform setting weights.
pub fn cglmp_inequality_uniform(d: usize) -> Result<BellInequality> {
    cglmp_inequality(d, &SettingDistribution::uniform(Scenario::new(2, 2, d)?))
}

/// Setting pairs `(alice, bob)` carrying ladder terms: the two end rungs and
/// the crossing comparisons. There are `2K + 2` of them.
pub fn ladder_pairs(rungs: usize) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = ladder_chain(rungs)
        .windows(2)
        .map(|w| pair_of(w[0], w[1]))
        .chain(std::iter::once(pair_of(ladder_chain(rungs)[0], *ladder_chain(rungs).last().unwrap())))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

fn pair_of(u: Var, v: Var) -> (usize, usize) {
    if u.party == 0 {
        (u.setting, v.setting)
    } else {
        (v.setting, u.setting)
    }
}

/// The chain `X1, Y2, X3, ... , (K+1 end), ..., X2, Y1` of a K-rung ladder.
/// Hidden variable `X_i` is Alice's setting `K + 1 - i`, `Y_i` is Bob's
/// setting `i - 1`, so a single rung coincides with [`cglmp_inequality`].
fn ladder_chain(rungs: usize) -> Vec<Var> {
    let k = rungs;
    let var = |j: usize, label: usize| {
        if j % 2 == 0 {
            Var { party: 0, setting: k + 1 - label }
        } else {
            Var { party: 1, setting: label - 1 }
        }
    };
    (0..2 * k + 2)
        .map(|j| {
            let label = if j <= k { j + 1 } else { 2 * k + 2 - j };
            var(j, label)
        })
        .collect()
}

/// Ladder inequality with `rungs` chained CGLMP rungs on 2 x (K+1) x 2.
///
/// Consecutive rungs alternate orientation so their shared horizontal terms
/// cancel; what remains is `P(X1 < Y1)` against the crossing terms and the
/// far end term. Certified over every vertex for `K <= 10`.
pub fn ladder_inequality(rungs: usize, pi: &SettingDistribution) -> Result<BellInequality> {
    if rungs == 0 {
        return Err(Error::InvalidArgument("a ladder needs at least one rung".into()));
    }
    let s = Scenario::new(2, rungs + 1, 2)?;
    if pi.scenario() != s {
        return Err(Error::ShapeMismatch(format!("ladder({rungs}) needs a 2x{}x2 setting distribution", rungs + 1)));
    }
    let pairs: Vec<Vec<usize>> = ladder_pairs(rungs).into_iter().map(|(a, b)| vec![a, b]).collect();
    require_weight(pi, &pairs)?;
    let cond = chain_conditional(s, &ladder_chain(rungs));
    let ineq = BellInequality::from_conditional(pi.clone(), &cond, 0.0)?;
    if rungs <= LADDER_CERTIFY_MAX_RUNGS {
        certify(&ineq, CERTIFY_SLACK)?;
    }
    Ok(ineq)
}

/// How setting pairs are drawn in a ladder experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LadderPolicy {
    /// Uniform over the `2K + 2` pairs carrying ladder terms.
    Surviving,
    /// Uniform over all `(K + 1)^2` pairs.
    All,
}

pub fn ladder_settings(rungs: usize, policy: LadderPolicy) -> Result<SettingDistribution> {
    let s = Scenario::new(2, rungs + 1, 2)?;
    Ok(match policy {
        LadderPolicy::All => SettingDistribution::uniform(s),
        LadderPolicy::Surviving => {
            let pairs: Vec<Vec<usize>> = ladder_pairs(rungs).into_iter().map(|(a, b)| vec![a, b]).collect();
            SettingDistribution::uniform_on(s, &pairs)?
        }
    })
}

/// The four GHZ setting patterns: (1,2,2), (2,1,2), (2,2,1), (1,1,1).
pub fn ghz_patterns() -> Vec<Vec<usize>> {
    vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0], vec![0, 0, 0]]
}

/// GHZ inequality on 3 x 2 x 2: the number of paradox patterns whose
/// outcome parity matches the quantum prediction is at most 3 classically
/// (4 for the GHZ state). Outcome 0 stands for +1.
pub fn ghz_inequality(pi: &SettingDistribution) -> Result<BellInequality> {
    let s = Scenario::new(3, 2, 2)?;
    if pi.scenario() != s {
        return Err(Error::ShapeMismatch("GHZ inequality needs a 3x2x2 setting distribution".into()));
    }
    let patterns = ghz_patterns();
    require_weight(pi, &patterns)?;
    let mut cond = vec![0.0; s.len()];
    for (i, p) in patterns.iter().enumerate() {
        // product +1 on the first three, -1 on (1,1,1)
        let want_odd = i == 3;
        let sp = s.encode_settings(p);
        for op in 0..s.outcome_patterns() {
            let odd = s.decode_outcomes(op).iter().sum::<usize>() % 2 == 1;
            if odd == want_odd {
                cond[s.entry_index(sp, op)] = 1.0;
            }
        }
    }
    BellInequality::from_conditional(pi.clone(), &cond, 3.0)
}

/// Rewrites an inequality on the no-signalling subspace so that it only
/// involves joint terms with every outcome nonzero and lower-order
/// marginals with nonzero outcomes (outcome 0 is the reference).
///
/// On every no-signalling law, `canonical.evaluate - canonical.bound`
/// equals `raw.evaluate - raw.bound`. The canonical bound is 0 whenever the
/// all-reference vertex lies on the face, as it does for every built-in
/// inequality.
pub fn canonicalize(ineq: &BellInequality) -> Result<BellInequality> {
    canonicalize_with_reference(ineq, 0)
}

pub fn canonicalize_with_reference(ineq: &BellInequality, reference: usize) -> Result<BellInequality> {
    let s = ineq.scenario;
    if reference >= s.outcomes {
        return Err(Error::InvalidArgument(format!("reference outcome {reference} out of range")));
    }
    let np = s.parties;
    let (q, r) = (s.settings, s.outcomes);
    let nonref: Vec<usize> = (0..r).filter(|&x| x != reference).collect();
    let rank = |x: usize| if x < reference { x } else { x - 1 };
    let pi = &ineq.pi;
    let gamma = ineq.conditional_coefficients();

    // beta[T][s_T * (r-1)^|T| + o_T]: coefficient of the conditional marginal
    // of party subset T (bitmask) with all outcomes non-reference.
    let subsets = 1usize << np;
    let members = |t: usize| -> Vec<usize> { (0..np).filter(|k| t >> k & 1 == 1).collect() };
    let mut beta: Vec<Vec<f64>> = (0..subsets)
        .map(|t| {
            let m = members(t).len() as u32;
            vec![0.0; q.pow(m) * (r - 1).pow(m)]
        })
        .collect();
    let beta_index = |t: usize, settings: &[usize], outcomes: &[usize]| -> usize {
        let mem = members(t);
        let st: Vec<usize> = mem.iter().map(|&k| settings[k]).collect();
        let ot: Vec<usize> = mem.iter().map(|&k| rank(outcomes[k])).collect();
        encode(&st, q) * (r - 1).pow(mem.len() as u32) + encode(&ot, r - 1)
    };

    let mut constant = 0.0;
    for sp in pi.support() {
        let settings = s.decode_settings(sp);
        for op in 0..s.outcome_patterns() {
            let g = gamma[s.entry_index(sp, op)];
            if g == 0.0 {
                continue;
            }
            let outcomes = s.decode_outcomes(op);
            let n_mask: usize = (0..np).filter(|&k| outcomes[k] != reference).map(|k| 1 << k).sum();
            let z_mask = (subsets - 1) & !n_mask;
            // P(o|s) = sum_{U subset Z} (-1)^|U| sum_{o'_U non-ref} M_{N u U}(o_N, o'_U)
            let mut u = z_mask;
            loop {
                let t = n_mask | u;
                let sign = if u.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                if t == 0 {
                    constant += g;
                } else {
                    let u_members = members(u);
                    let combos = (r - 1).pow(u_members.len() as u32);
                    for c in 0..combos {
                        let picks = decode(c, r - 1, u_members.len());
                        let mut o = outcomes.clone();
                        for (&k, &pick) in u_members.iter().zip(&picks) {
                            o[k] = nonref[pick];
                        }
                        beta[t][beta_index(t, &settings, &o)] += sign * g;
                    }
                }
                if u == 0 {
                    break;
                }
                u = (u - 1) & z_mask;
            }
        }
    }

    // Marginal setting weights pi_T(s_T).
    let mut pi_t: Vec<Vec<f64>> = (0..subsets).map(|t| vec![0.0; q.pow(members(t).len() as u32)]).collect();
    for sp in pi.support() {
        let settings = s.decode_settings(sp);
        for (t, slot) in pi_t.iter_mut().enumerate() {
            let st: Vec<usize> = members(t).iter().map(|&k| settings[k]).collect();
            slot[encode(&st, q)] += pi.weight(sp);
        }
    }

    // M_T(s_T; o_T) = sum over extensions of p(s; o) / pi_T(s_T).
    let mut coefficients = vec![0.0; s.len()];
    for sp in pi.support() {
        let settings = s.decode_settings(sp);
        for op in 0..s.outcome_patterns() {
            let outcomes = s.decode_outcomes(op);
            let n_mask: usize = (0..np).filter(|&k| outcomes[k] != reference).map(|k| 1 << k).sum();
            let mut t = n_mask;
            let mut acc = 0.0;
            while t != 0 {
                let st: Vec<usize> = members(t).iter().map(|&k| settings[k]).collect();
                let w = pi_t[t][encode(&st, q)];
                let b = beta[t][beta_index(t, &settings, &outcomes)];
                if b != 0.0 {
                    acc += b / w;
                }
                t = (t - 1) & n_mask;
            }
            coefficients[s.entry_index(sp, op)] = acc;
        }
    }
    let residual = ineq.bound - constant;
    let bound = if residual.abs() <= 1e-12 * (1.0 + ineq.bound.abs()) { 0.0 } else { residual };
    BellInequality::new(pi.clone(), coefficients, bound, InequalityForm::Canonical)
}

/// Divergence (bits) from the law to the classical polytope; zero for classical laws.
pub fn membership_gap(law: &ProbabilityLaw) -> Result<f64> {
    let res = crate::strength::inf_divergence(law, &crate::strength::SolverConfig::default())?;
    Ok(res.divergence)
}
