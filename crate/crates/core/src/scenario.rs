//! The p x q x r Bell experiment data model.
//!
//! Setting patterns `(a, b, ...)` and outcome patterns `(x, y, ...)` are
//! mixed-radix integers with party 0 as the most significant digit. A
//! [`ProbabilityLaw`] stores joint entries `p(a, b, ...; x, y, ...)`
//! (already multiplied by the setting weight) at index
//! `setting_pattern * outcome_patterns + outcome_pattern`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the setting weights summing to one.
pub const PI_SUM_TOL: f64 = 1e-12;
/// Tolerance on each setting pattern's entries summing to its weight.
pub const LAW_SUM_TOL: f64 = 1e-10;

/// Upper limits on scenario sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScenarioCaps {
    pub max_parties: usize,
    pub max_settings: usize,
    pub max_outcomes: usize,
}

impl Default for ScenarioCaps {
    fn default() -> Self {
        Self { max_parties: 4, max_settings: 8, max_outcomes: 128 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    pub parties: usize,
    pub settings: usize,
    pub outcomes: usize,
}

impl Scenario {
    pub fn new(parties: usize, settings: usize, outcomes: usize) -> Result<Self> {
        Self::with_caps(parties, settings, outcomes, ScenarioCaps::default())
    }

    pub fn with_caps(parties: usize, settings: usize, outcomes: usize, caps: ScenarioCaps) -> Result<Self> {
        let s = Self { parties, settings, outcomes };
        s.validate(caps)?;
        Ok(s)
    }

    pub fn validate(&self, caps: ScenarioCaps) -> Result<()> {
        if self.parties < 2 || self.settings < 2 || self.outcomes < 2 {
            return Err(Error::InvalidScenario(format!(
                "parties, settings and outcomes must all be at least 2 (got {}x{}x{})",
                self.parties, self.settings, self.outcomes
            )));
        }
        if self.parties > caps.max_parties || self.settings > caps.max_settings || self.outcomes > caps.max_outcomes {
            return Err(Error::InvalidScenario(format!(
                "{}x{}x{} exceeds caps {}x{}x{}",
                self.parties, self.settings, self.outcomes, caps.max_parties, caps.max_settings, caps.max_outcomes
            )));
        }
        Ok(())
    }

    pub fn setting_patterns(&self) -> usize {
        self.settings.pow(self.parties as u32)
    }

    pub fn outcome_patterns(&self) -> usize {
        self.outcomes.pow(self.parties as u32)
    }

    /// Number of joint entries, `q^p * r^p`.
    pub fn len(&self) -> usize {
        self.setting_patterns() * self.outcome_patterns()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entry_index(&self, setting_pattern: usize, outcome_pattern: usize) -> usize {
        setting_pattern * self.outcome_patterns() + outcome_pattern
    }

    pub fn decode_settings(&self, pattern: usize) -> Vec<usize> {
        decode(pattern, self.settings, self.parties)
    }

    pub fn decode_outcomes(&self, pattern: usize) -> Vec<usize> {
        decode(pattern, self.outcomes, self.parties)
    }

    pub fn encode_settings(&self, digits: &[usize]) -> usize {
        encode(digits, self.settings)
    }

    pub fn encode_outcomes(&self, digits: &[usize]) -> usize {
        encode(digits, self.outcomes)
    }
}

/// Mixed-radix decode, most significant digit first.
pub fn decode(mut index: usize, radix: usize, digits: usize) -> Vec<usize> {
    let mut out = vec![0; digits];
    for slot in out.iter_mut().rev() {
        *slot = index % radix;
        index /= radix;
    }
    out
}

pub fn encode(digits: &[usize], radix: usize) -> usize {
    digits.iter().fold(0, |acc, &d| acc * radix + d)
}

/// Joint distribution `pi(a, b, ...)` of the setting pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct SettingDistribution {
    scenario: Scenario,
    weights: Vec<f64>,
}

impl SettingDistribution {
    pub fn new(scenario: Scenario, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != scenario.setting_patterns() {
            return Err(Error::InvalidSettingDistribution(format!(
                "expected {} weights, got {}",
                scenario.setting_patterns(),
                weights.len()
            )));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidSettingDistribution(format!("weight {i} is {w}, must be finite and >= 0")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > PI_SUM_TOL {
            return Err(Error::InvalidSettingDistribution(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { scenario, weights })
    }

    pub fn uniform(scenario: Scenario) -> Self {
        let n = scenario.setting_patterns();
        Self { scenario, weights: vec![1.0 / n as f64; n] }
    }

    /// Uniform over the listed setting patterns (given as digit lists), zero elsewhere.
    pub fn uniform_on(scenario: Scenario, patterns: &[Vec<usize>]) -> Result<Self> {
        let mut weights = vec![0.0; scenario.setting_patterns()];
        for p in patterns {
            if p.len() != scenario.parties || p.iter().any(|&a| a >= scenario.settings) {
                return Err(Error::InvalidSettingDistribution(format!("bad setting pattern {p:?}")));
            }
            weights[scenario.encode_settings(p)] = 1.0;
        }
        let n = weights.iter().filter(|&&w| w > 0.0).count();
        if n == 0 {
            return Err(Error::InvalidSettingDistribution("empty support".into()));
        }
        for w in &mut weights {
            *w /= n as f64;
        }
        Self::new(scenario, weights)
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, pattern: usize) -> f64 {
        self.weights[pattern]
    }

    /// Indices of setting patterns with positive weight.
    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len()).filter(|&i| self.weights[i] > 0.0).collect()
    }

    /// Setting-pattern weights after permuting parties and settings.
    pub fn relabeled(&self, relabel: &Relabeling) -> Result<Self> {
        let s = self.scenario;
        relabel.check(s)?;
        let mut weights = vec![0.0; self.weights.len()];
        for (pat, &w) in self.weights.iter().enumerate() {
            weights[relabel.map_settings(s, pat)] = w;
        }
        Ok(Self { scenario: s, weights })
    }
}

/// Joint probability law `p(a, b, ...; x, y, ...) = pi(a, b, ...) p(x, y, ...|a, b, ...)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityLaw {
    scenario: Scenario,
    pi: SettingDistribution,
    entries: Vec<f64>,
}

impl ProbabilityLaw {
    /// Validates nonnegativity and per-pattern normalisation.
    pub fn new(pi: SettingDistribution, entries: Vec<f64>) -> Result<Self> {
        let scenario = pi.scenario();
        if entries.len() != scenario.len() {
            return Err(Error::InvalidLaw(format!("expected {} entries, got {}", scenario.len(), entries.len())));
        }
        if let Some((i, v)) = entries.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidLaw(format!("entry {i} is {v}, must be finite and >= 0")));
        }
        let no = scenario.outcome_patterns();
        for s in 0..scenario.setting_patterns() {
            let total: f64 = entries[s * no..(s + 1) * no].iter().sum();
            let w = pi.weight(s);
            if (total - w).abs() > LAW_SUM_TOL {
                return Err(Error::InvalidLaw(format!(
                    "entries of setting pattern {:?} sum to {total}, but its setting weight is {w}",
                    scenario.decode_settings(s)
                )));
            }
        }
        Ok(Self { scenario, pi, entries })
    }

    /// Builds the joint law from conditionals `p(o|s)`, one slice of length
    /// `r^p` per setting pattern. Conditionals of zero-weight patterns are ignored.
    pub fn from_conditionals(pi: SettingDistribution, conditionals: &[Vec<f64>]) -> Result<Self> {
        let s = pi.scenario();
        if conditionals.len() != s.setting_patterns() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} conditionals, got {}",
                s.setting_patterns(),
                conditionals.len()
            )));
        }
        let mut entries = Vec::with_capacity(s.len());
        for (pat, cond) in conditionals.iter().enumerate() {
            if cond.len() != s.outcome_patterns() {
                return Err(Error::ShapeMismatch(format!("conditional {pat} has {} entries", cond.len())));
            }
            let w = pi.weight(pat);
            entries.extend(cond.iter().map(|&c| if w > 0.0 { w * c } else { 0.0 }));
        }
        Self::new(pi, entries)
    }

    /// Same conditionals everywhere: uniform over outcome patterns.
    pub fn uniform_outcomes(pi: &SettingDistribution) -> Self {
        let s = pi.scenario();
        let no = s.outcome_patterns();
        let mut entries = Vec::with_capacity(s.len());
        for pat in 0..s.setting_patterns() {
            let w = pi.weight(pat);
            entries.extend(std::iter::repeat_n(w / no as f64, no));
        }
        Self { scenario: s, pi: pi.clone(), entries }
    }

    pub(crate) fn from_parts_unchecked(pi: SettingDistribution, entries: Vec<f64>) -> Self {
        Self { scenario: pi.scenario(), pi, entries }
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn pi(&self) -> &SettingDistribution {
        &self.pi
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn entry(&self, setting_pattern: usize, outcome_pattern: usize) -> f64 {
        self.entries[self.scenario.entry_index(setting_pattern, outcome_pattern)]
    }

    /// Joint entries of one setting pattern.
    pub fn pattern_entries(&self, setting_pattern: usize) -> &[f64] {
        let no = self.scenario.outcome_patterns();
        &self.entries[setting_pattern * no..(setting_pattern + 1) * no]
    }

    /// `p(x, y, ...|a, b, ...)` for one setting pattern.
    pub fn conditional(&self, setting_pattern: usize) -> Result<Vec<f64>> {
        let w = self.pi.weight(setting_pattern);
        if w <= 0.0 {
            return Err(Error::ZeroSettingWeight { pattern: setting_pattern });
        }
        Ok(self.pattern_entries(setting_pattern).iter().map(|v| v / w).collect())
    }

    /// Largest discrepancy, over every party and every conditional marginal of
    /// the remaining parties, between the values seen under different
    /// settings of that party.
    pub fn check_no_signalling(&self, tol: f64) -> NoSignallingReport {
        let s = self.scenario;
        let mut report = NoSignallingReport { max_violation: 0.0, worst: None, tolerance: tol };
        let np = s.parties;
        let rest_settings = s.settings.pow(np as u32 - 1);
        let rest_outcomes = s.outcomes.pow(np as u32 - 1);
        for dropped in 0..np {
            for rest_s in 0..rest_settings {
                let others = decode(rest_s, s.settings, np - 1);
                // (min, max) of each marginal entry across the dropped party's settings
                let mut ranges: Vec<Option<(f64, f64)>> = vec![None; rest_outcomes];
                for a in 0..s.settings {
                    let full = insert(&others, dropped, a);
                    let pat = s.encode_settings(&full);
                    let w = self.pi.weight(pat);
                    if w <= 0.0 {
                        continue;
                    }
                    let mut marg = vec![0.0; rest_outcomes];
                    for (o, v) in self.pattern_entries(pat).iter().enumerate() {
                        let digits = s.decode_outcomes(o);
                        marg[encode(&remove(&digits, dropped), s.outcomes)] += v / w;
                    }
                    for (slot, m) in ranges.iter_mut().zip(marg) {
                        *slot = Some(match *slot {
                            None => (m, m),
                            Some((lo, hi)) => (lo.min(m), hi.max(m)),
                        });
                    }
                }
                for (o, r) in ranges.iter().enumerate() {
                    if let Some((lo, hi)) = r {
                        let gap = hi - lo;
                        if gap > report.max_violation {
                            report.max_violation = gap;
                            report.worst = Some(SignallingMarginal {
                                dropped_party: dropped,
                                other_settings: others.clone(),
                                other_outcomes: decode(o, s.outcomes, np - 1),
                            });
                        }
                    }
                }
            }
        }
        report
    }

    /// Convex combination of laws sharing scenario and setting distribution.
    pub fn mix(laws: &[ProbabilityLaw], weights: &[f64]) -> Result<Self> {
        let first = laws.first().ok_or_else(|| Error::ShapeMismatch("no laws to mix".into()))?;
        if laws.len() != weights.len() {
            return Err(Error::ShapeMismatch(format!("{} laws but {} weights", laws.len(), weights.len())));
        }
        if weights.iter().any(|&w| !w.is_finite() || w < 0.0) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::ShapeMismatch("mixing weights are not on the simplex".into()));
        }
        for l in laws {
            if l.scenario != first.scenario || l.pi != first.pi {
                return Err(Error::ShapeMismatch("laws differ in scenario or setting distribution".into()));
            }
        }
        let mut entries = vec![0.0; first.entries.len()];
        for (l, &w) in laws.iter().zip(weights) {
            for (e, v) in entries.iter_mut().zip(&l.entries) {
                *e += w * v;
            }
        }
        Ok(Self { scenario: first.scenario, pi: first.pi.clone(), entries })
    }

    /// `(1 - w) * law + w * uniform-outcomes law` with the same setting weights.
    pub fn add_noise(&self, noise_weight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&noise_weight) {
            return Err(Error::InvalidArgument(format!("noise weight {noise_weight} outside [0, 1]")));
        }
        let uniform = Self::uniform_outcomes(&self.pi);
        Self::mix(&[self.clone(), uniform], &[1.0 - noise_weight, noise_weight])
    }

    /// Applies a relabeling of parties, settings and outcomes.
    pub fn relabeled(&self, relabel: &Relabeling) -> Result<Self> {
        let s = self.scenario;
        relabel.check(s)?;
        let pi = self.pi.relabeled(relabel)?;
        let mut entries = vec![0.0; self.entries.len()];
        for sp in 0..s.setting_patterns() {
            let settings = s.decode_settings(sp);
            let new_sp = relabel.map_settings(s, sp);
            for op in 0..s.outcome_patterns() {
                let new_op = relabel.map_outcomes(s, &settings, op);
                entries[s.entry_index(new_sp, new_op)] = self.entries[s.entry_index(sp, op)];
            }
        }
        Ok(Self { scenario: s, pi, entries })
    }
}

/// Outcome of [`ProbabilityLaw::check_no_signalling`].
#[derive(Clone, Debug, PartialEq)]
pub struct NoSignallingReport {
    pub max_violation: f64,
    pub worst: Option<SignallingMarginal>,
    pub tolerance: f64,
}

impl NoSignallingReport {
    pub fn passes(&self) -> bool {
        self.max_violation <= self.tolerance
    }
}

/// The marginal whose value depends on a dropped party's setting.
#[derive(Clone, Debug, PartialEq)]
pub struct SignallingMarginal {
    pub dropped_party: usize,
    pub other_settings: Vec<usize>,
    pub other_outcomes: Vec<usize>,
}

/// A relabeling of parties, per-party settings and per-(party, setting) outcomes.
///
/// Party `k` of the original becomes party `parties[k]`; its setting `a`
/// becomes `settings[k][a]`; outcome `x` under setting `a` becomes
/// `outcomes[k][a][x]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Relabeling {
    pub parties: Vec<usize>,
    pub settings: Vec<Vec<usize>>,
    pub outcomes: Vec<Vec<Vec<usize>>>,
}

impl Relabeling {
    pub fn identity(s: Scenario) -> Self {
        Self {
            parties: (0..s.parties).collect(),
            settings: vec![(0..s.settings).collect(); s.parties],
            outcomes: vec![vec![(0..s.outcomes).collect(); s.settings]; s.parties],
        }
    }

    fn check(&self, s: Scenario) -> Result<()> {
        let is_perm = |p: &[usize], n: usize| {
            let mut seen = vec![false; n];
            p.len() == n && p.iter().all(|&i| i < n && !std::mem::replace(&mut seen[i], true))
        };
        let ok = is_perm(&self.parties, s.parties)
            && self.settings.len() == s.parties
            && self.settings.iter().all(|p| is_perm(p, s.settings))
            && self.outcomes.len() == s.parties
            && self
                .outcomes
                .iter()
                .all(|per| per.len() == s.settings && per.iter().all(|p| is_perm(p, s.outcomes)));
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch("relabeling is not a permutation of the scenario".into()))
        }
    }

    pub(crate) fn map_settings(&self, s: Scenario, pattern: usize) -> usize {
        let old = s.decode_settings(pattern);
        let mut new = vec![0; s.parties];
        for (k, &a) in old.iter().enumerate() {
            new[self.parties[k]] = self.settings[k][a];
        }
        s.encode_settings(&new)
    }

    pub(crate) fn map_outcomes(&self, s: Scenario, settings: &[usize], pattern: usize) -> usize {
        let old = s.decode_outcomes(pattern);
        let mut new = vec![0; s.parties];
        for (k, &x) in old.iter().enumerate() {
            new[self.parties[k]] = self.outcomes[k][settings[k]][x];
        }
        s.encode_outcomes(&new)
    }
}

fn insert(digits: &[usize], at: usize, value: usize) -> Vec<usize> {
    let mut v = digits.to_vec();
    v.insert(at, value);
    v
}

fn remove(digits: &[usize], at: usize) -> Vec<usize> {
    let mut v = digits.to_vec();
    v.remove(at);
    v
}

/// On-disk form of a law: `{"scenario":{...},"pi":[...],"entries":[...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LawFile {
    pub scenario: Scenario,
    pub pi: Vec<f64>,
    pub entries: Vec<f64>,
}

impl From<&ProbabilityLaw> for LawFile {
    fn from(law: &ProbabilityLaw) -> Self {
        Self { scenario: law.scenario, pi: law.pi.weights.clone(), entries: law.entries.clone() }
    }
}

impl TryFrom<LawFile> for ProbabilityLaw {
    type Error = Error;
    fn try_from(f: LawFile) -> Result<Self> {
        f.scenario.validate(ScenarioCaps::default())?;
        let pi = SettingDistribution::new(f.scenario, f.pi)?;
        ProbabilityLaw::new(pi, f.entries)
    }
}

impl ProbabilityLaw {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&LawFile::from(self)).expect("law serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: LawFile = serde_json::from_str(text).map_err(|e| Error::InvalidLaw(format!("malformed JSON: {e}")))?;
        file.try_into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chsh_scenario() -> Scenario {
        Scenario::new(2, 2, 2).unwrap()
    }

    #[test]
    fn scenario_caps() {
        assert!(Scenario::new(1, 2, 2).is_err());
        assert!(Scenario::new(5, 2, 2).is_err());
        assert!(Scenario::new(2, 9, 2).is_err());
        assert!(Scenario::new(2, 2, 129).is_err());
        assert_eq!(Scenario::new(3, 2, 2).unwrap().len(), 64);
    }

    #[test]
    fn mixed_radix_party_zero_most_significant() {
        let s = Scenario::new(3, 2, 3).unwrap();
        assert_eq!(s.encode_outcomes(&[1, 0, 2]), 11);
        assert_eq!(s.decode_outcomes(11), vec![1, 0, 2]);
        assert_eq!(s.encode_settings(&[1, 1, 0]), 6);
    }

    #[test]
    fn uniform_law_conditionals() {
        let pi = SettingDistribution::uniform(chsh_scenario());
        let law = ProbabilityLaw::uniform_outcomes(&pi);
        for pat in 0..4 {
            assert_eq!(law.conditional(pat).unwrap(), vec![0.25; 4]);
        }
    }

    #[test]
    fn zero_weight_conditional_is_an_error() {
        let s = chsh_scenario();
        let pi = SettingDistribution::uniform_on(s, &[vec![0, 0], vec![1, 1]]).unwrap();
        let law = ProbabilityLaw::uniform_outcomes(&pi);
        assert_eq!(law.conditional(1), Err(Error::ZeroSettingWeight { pattern: 1 }));
    }

    #[test]
    fn signalling_law_is_detected() {
        // Alice's outcome copies Bob's setting.
        let s = chsh_scenario();
        let pi = SettingDistribution::uniform(s);
        let conds: Vec<Vec<f64>> = (0..4)
            .map(|pat| {
                let b = s.decode_settings(pat)[1];
                let mut c = vec![0.0; 4];
                c[s.encode_outcomes(&[b, 0])] = 1.0;
                c
            })
            .collect();
        let law = ProbabilityLaw::from_conditionals(pi, &conds).unwrap();
        let report = law.check_no_signalling(1e-10);
        assert!((report.max_violation - 1.0).abs() < 1e-15);
        assert_eq!(report.worst.unwrap().dropped_party, 1);
    }

    #[test]
    fn mix_and_noise() {
        let s = chsh_scenario();
        let pi = SettingDistribution::uniform(s);
        let mut e = vec![0.0; 16];
        for pat in 0..4 {
            e[pat * 4] = 0.25;
        }
        let l = ProbabilityLaw::new(pi.clone(), e).unwrap();
        assert_eq!(ProbabilityLaw::mix(&[l.clone()], &[1.0]).unwrap(), l);
        let m = ProbabilityLaw::mix(&[l.clone(), l.clone()], &[0.3, 0.7]).unwrap();
        for (a, b) in m.entries().iter().zip(l.entries()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(l.add_noise(0.0).unwrap(), l);
        let n = l.add_noise(1.0).unwrap();
        for pat in 0..4 {
            for v in n.conditional(pat).unwrap() {
                assert!((v - 0.25).abs() < 1e-15);
            }
        }
        assert!(l.add_noise(1.5).is_err());
    }

    #[test]
    fn mix_rejects_mismatched_laws() {
        let s = chsh_scenario();
        let a = ProbabilityLaw::uniform_outcomes(&SettingDistribution::uniform(s));
        let pi2 = SettingDistribution::uniform_on(s, &[vec![0, 0]]).unwrap();
        let b = ProbabilityLaw::uniform_outcomes(&pi2);
        assert!(matches!(ProbabilityLaw::mix(&[a, b], &[0.5, 0.5]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn json_reader_names_first_violation() {
        let text = r#"{"scenario":{"parties":2,"settings":2,"outcomes":2},"pi":[0.25,0.25,0.25,0.25],
            "entries":[0.25,0,0,0, 0.25,0,0,0, 0.25,0,0,0, 0.2,0,0,0]}"#;
        let err = ProbabilityLaw::from_json(text).unwrap_err();
        assert!(err.to_string().contains("[1, 1]"), "{err}");
        let text = r#"{"scenario":{"parties":2,"settings":2,"outcomes":2},"pi":[0.5,0.25,0.25,0.25],"entries":[]}"#;
        assert!(matches!(ProbabilityLaw::from_json(text), Err(Error::InvalidSettingDistribution(_))));
        let text = r#"{"scenario":{"parties":2,"settings":2,"outcomes":2},"pi":[0.25,0.25,0.25,0.25],
            "entries":[0.3,-0.05,0,0, 0.25,0,0,0, 0.25,0,0,0, 0.25,0,0,0]}"#;
        assert!(ProbabilityLaw::from_json(text).unwrap_err().to_string().contains("entry 1"));
    }

    #[test]
    fn json_round_trip() {
        let law = ProbabilityLaw::uniform_outcomes(&SettingDistribution::uniform(chsh_scenario()));
        assert_eq!(ProbabilityLaw::from_json(&law.to_json()).unwrap(), law);
    }
}
