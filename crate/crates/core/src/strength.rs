//! Statistical strength: `inf_p D(q : p)` over the classical polytope.
//!
//! The infimum is a mixture maximum-likelihood problem: maximise
//! `sum_i q_i log p_i` over mixtures `p = sum_v w_v v` of vertex laws. The
//! solver keeps a sparse active set of vertices and combines
//!
//! * conditional-gradient steps towards the vertex maximising
//!   `g_v = sum_i q_i v_i / p_i` (found exactly by [`argmax_vertex`]),
//! * Newton steps on the active set (a quadratic model of the
//!   log-likelihood, stepped to the simplex boundary, dropping the vertex
//!   that hits zero),
//! * EM multiplicative updates `w_v <- w_v g_v` as a fallback.
//!
//! It stops once `max_v g_v - 1 <= epsilon` (which bounds the suboptimality
//! of `D` by `log2(1 + epsilon)`) and every active vertex has `g_v = 1`
//! within [`STATIONARITY_TOL`].

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{
    argmax_vertex, canonicalize_with_reference, classical_max, ladder_settings, BellInequality, DeterministicVertex,
    InequalityFile, InequalityForm, LadderPolicy, VERTEX_CAP,
};
use crate::error::{Error, Result};
use crate::quantum::{
    born_law, cglmp_model, ladder_chain_angles, ladder_model, maximally_entangled, with_detection_efficiency,
    QuantumModel, SchmidtState,
};
use crate::scenario::{ProbabilityLaw, Scenario, SettingDistribution};
use crate::tensor::{hermitian_eig, largest_eig, ComplexMatrix, ComplexVector, C64};

pub const DEFAULT_EPSILON: f64 = 1e-9;
pub const STATIONARITY_TOL: f64 = 1e-8;
pub const PRUNE_TOL: f64 = 1e-14;
/// Atoms lighter than this are dropped when their gradient is below 1.
const LIGHT_ATOM: f64 = 1e-6;
pub const MAX_INNER_ITERATIONS: usize = 100_000;
pub const MAX_OUTER_ITERATIONS: usize = 200;
/// Smallest divergence gain the polish accepts; the inner solve is only
/// accurate to about `log2(1 + epsilon)`.
pub const POLISH_GAIN: f64 = 1e-11;
/// Divergences at or below this count as "no violation".
pub const VIOLATION_FLOOR: f64 = 1e-7;
/// Ladder sweeps stop here: 2^(2(K+1)) vertices.
pub const MAX_SWEEP_RUNGS: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub vertex_cap: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { epsilon: DEFAULT_EPSILON, max_iterations: MAX_INNER_ITERATIONS, vertex_cap: VERTEX_CAP }
    }
}

impl SolverConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self { epsilon, ..Self::default() }
    }
}

#[derive(Clone, Debug)]
pub struct StrengthResult {
    /// `D(q : p_hat)` in bits.
    pub divergence: f64,
    pub closest_law: ProbabilityLaw,
    /// `(vertex index, weight)`, sorted by vertex index.
    pub mixture: Vec<(u64, f64)>,
    pub kkt_slack: f64,
    /// Largest `|g_v - 1|` over vertices carrying weight.
    pub support_gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl StrengthResult {
    /// `Ok(self)` when converged, otherwise [`Error::IterationCapExceeded`].
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::IterationCapExceeded { iterations: self.iterations, kkt_slack: self.kkt_slack })
        }
    }
}

/// `sum_i q_i log2(q_i / p_i)` over entries with `q_i > 0`.
pub fn divergence(q: &ProbabilityLaw, p: &ProbabilityLaw) -> Result<f64> {
    if q.scenario() != p.scenario() {
        return Err(Error::ShapeMismatch("laws live in different scenarios".into()));
    }
    Ok(q.entries()
        .iter()
        .zip(p.entries())
        .filter(|(&qi, _)| qi > 0.0)
        .map(|(&qi, &pi)| if pi > 0.0 { qi * (qi / pi).log2() } else { f64::INFINITY })
        .sum())
}

/// The rows (joint entries with `q > 0`) and, per vertex, which row it hits
/// under each setting pattern with weight.
struct Problem {
    scenario: Scenario,
    /// Setting patterns with positive weight.
    patterns: Vec<usize>,
    pi: Vec<f64>,
    /// Row number of each joint entry, if `q > 0` there.
    row_of: Vec<Option<usize>>,
    q: Vec<f64>,
    rows: Vec<usize>,
    cap: u64,
}

/// A vertex restricted to the rows: `(row, pi(s))` pairs.
#[derive(Clone, Debug)]
struct Column {
    index: u64,
    hits: Vec<(usize, f64)>,
}

impl Problem {
    fn new(q: &ProbabilityLaw, cap: u64) -> Self {
        let s = q.scenario();
        let patterns = q.pi().support();
        let mut row_of = vec![None; s.len()];
        let mut rows = Vec::new();
        let mut qs = Vec::new();
        for (i, &qi) in q.entries().iter().enumerate() {
            if qi > 0.0 {
                row_of[i] = Some(rows.len());
                rows.push(i);
                qs.push(qi);
            }
        }
        let total: f64 = qs.iter().sum();
        qs.iter_mut().for_each(|x| *x /= total);
        Self { scenario: s, patterns, pi: q.pi().weights().to_vec(), row_of, q: qs, rows, cap }
    }

    fn column(&self, index: u64) -> Column {
        let v = DeterministicVertex::from_index(self.scenario, index).expect("index in range");
        let hits = self
            .patterns
            .iter()
            .filter_map(|&sp| {
                let e = self.scenario.entry_index(sp, v.outcome_pattern(sp));
                self.row_of[e].map(|r| (r, self.pi[sp]))
            })
            .collect();
        Column { index, hits }
    }

    fn mixture_rows(&self, cols: &[Column], w: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.q.len()];
        for (c, &wv) in cols.iter().zip(w) {
            for &(r, pv) in &c.hits {
                p[r] += wv * pv;
            }
        }
        p
    }

    /// `sum q log p` (natural log); `-inf` if some row has no mass.
    fn loglik(&self, p: &[f64]) -> f64 {
        self.q.iter().zip(p).map(|(&q, &p)| if p > 0.0 { q * p.ln() } else { f64::NEG_INFINITY }).sum()
    }

    fn gradient(&self, col: &Column, p: &[f64]) -> f64 {
        col.hits.iter().map(|&(r, pv)| self.q[r] * pv / p[r]).sum()
    }

    /// Best vertex for the linear functional `sum_i q_i v_i / p_i`.
    fn best_vertex(&self, p: &[f64]) -> Result<(f64, u64)> {
        let mut scores = vec![0.0; self.scenario.len()];
        for (r, &e) in self.rows.iter().enumerate() {
            let sp = e / self.scenario.outcome_patterns();
            scores[e] = self.pi[sp] * self.q[r] / p[r];
        }
        argmax_vertex(self.scenario, &scores, &self.patterns, self.cap)
    }

    /// Vertices where every party answers a fixed outcome for all settings.
    fn constant_vertices(&self) -> Vec<u64> {
        let s = self.scenario;
        let r = s.outcomes;
        (0..r.pow(s.parties as u32))
            .map(|o| {
                let digits = crate::scenario::decode(o, r, s.parties);
                let assignment: Vec<Vec<usize>> = digits.iter().map(|&x| vec![x; s.settings]).collect();
                DeterministicVertex::from_assignment(s, &assignment).expect("fits").index()
            })
            .collect()
    }
}

/// Newton step for the quadratic model of the log-likelihood on the active
/// set: minimise `sum_i q_i (p'_i / p_i - 2)^2` over weights summing to one.
fn newton_target(prob: &Problem, cols: &[Column], w: &[f64], p: &[f64]) -> Option<Vec<f64>> {
    let n = cols.len();
    let m = prob.q.len();
    if n == 1 {
        return Some(vec![1.0]);
    }
    let mut a = DMatrix::<f64>::zeros(m, n);
    for (j, c) in cols.iter().enumerate() {
        for &(r, pv) in &c.hits {
            a[(r, j)] += prob.q[r].sqrt() * pv / p[r];
        }
    }
    let b = DVector::from_iterator(m, prob.q.iter().map(|q| 2.0 * q.sqrt()));
    // w' = w + N y with N's columns e_j - e_{n-1}, j < n - 1; the
    // minimum-norm y keeps degenerate directions where they are.
    let w0 = DVector::from_column_slice(w);
    let mut nmat = DMatrix::<f64>::zeros(n, n - 1);
    for j in 0..n - 1 {
        nmat[(j, j)] = 1.0;
        nmat[(n - 1, j)] = -1.0;
    }
    let an = &a * &nmat;
    let rhs = &b - &a * &w0;
    let svd = an.svd(true, true);
    let y = svd.solve(&rhs, 1e-12).ok()?;
    let w = w0 + nmat * y;
    w.iter().all(|x| x.is_finite()).then(|| w.iter().copied().collect())
}

/// `max |g_v - 1|` over the atoms carrying weight.
fn active_gap(prob: &Problem, cols: &[Column], w: &[f64], p: &[f64]) -> f64 {
    cols.iter()
        .zip(w)
        .filter(|(_, &wv)| wv > 1e-12)
        .map(|(c, _)| (prob.gradient(c, p) - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Maximiser over `lambda in [0, 1]` of `sum q log((1 - lambda) p + lambda v)`.
fn line_search(prob: &Problem, p: &[f64], v: &[f64]) -> f64 {
    let deriv = |lam: f64| -> f64 {
        prob.q
            .iter()
            .zip(p.iter().zip(v))
            .map(|(&q, (&pi, &vi))| {
                let mix = (1.0 - lam) * pi + lam * vi;
                if mix > 0.0 {
                    q * (vi - pi) / mix
                } else {
                    f64::NEG_INFINITY
                }
            })
            .sum()
    };
    if deriv(1.0) >= 0.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if deriv(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Minimises `D(q : p)` over the classical polytope.
///
/// Hitting the iteration cap is not an error here: the best iterate comes
/// back with `converged = false` (see [`StrengthResult::require_converged`]).
pub fn inf_divergence(q: &ProbabilityLaw, config: &SolverConfig) -> Result<StrengthResult> {
    inf_divergence_from(q, config, &[])
}

/// As [`inf_divergence`], starting from a previous mixture blended with the
/// constant-vertex mixture.
pub fn inf_divergence_from(q: &ProbabilityLaw, config: &SolverConfig, warm: &[(u64, f64)]) -> Result<StrengthResult> {
    if !(config.epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let prob = Problem::new(q, config.vertex_cap);
    let s = prob.scenario;
    let prefix = (s.outcomes as u128).pow(((s.parties - 1) * s.settings) as u32);
    if prefix > config.vertex_cap as u128 {
        return Err(Error::TooManyVertices { count: crate::classical::vertex_count(s), cap: config.vertex_cap });
    }

    // Initial mixture: the constant vertices put mass on every entry.
    let constants = prob.constant_vertices();
    let mut weights: BTreeMap<u64, f64> = BTreeMap::new();
    let warm_total: f64 = warm.iter().map(|&(_, w)| w).sum();
    let blend = if warm.is_empty() || !(warm_total > 0.0) { 1.0 } else { 0.01 };
    for &v in &constants {
        *weights.entry(v).or_default() += blend / constants.len() as f64;
    }
    if blend < 1.0 {
        for &(v, w) in warm {
            if (v as u128) < crate::classical::vertex_count(s) && w > 0.0 {
                *weights.entry(v).or_default() += (1.0 - blend) * w / warm_total;
            }
        }
    }
    let mut cols: Vec<Column> = weights.keys().map(|&v| prob.column(v)).collect();
    let mut w: Vec<f64> = weights.values().copied().collect();

    let mut p = prob.mixture_rows(&cols, &w);
    let mut ll = prob.loglik(&p);
    let mut slack = f64::INFINITY;
    let mut support_gap = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iterations {
        iterations += 1;
        let (g_best, v_best) = prob.best_vertex(&p)?;
        slack = g_best - 1.0;
        support_gap = active_gap(&prob, &cols, &w, &p);
        if slack <= config.epsilon && support_gap <= STATIONARITY_TOL {
            converged = true;
            break;
        }

        // Conditional-gradient step towards the best vertex.
        if slack > config.epsilon {
            let pos = match cols.iter().position(|c| c.index == v_best) {
                Some(pos) => pos,
                None => {
                    cols.push(prob.column(v_best));
                    w.push(0.0);
                    cols.len() - 1
                }
            };
            let mut vrow = vec![0.0; prob.q.len()];
            for &(r, pv) in &cols[pos].hits {
                vrow[r] += pv;
            }
            let lam = line_search(&prob, &p, &vrow);
            if lam > 0.0 {
                w.iter_mut().for_each(|x| *x *= 1.0 - lam);
                w[pos] += lam;
                p = prob.mixture_rows(&cols, &w);
                ll = prob.loglik(&p);
            }
        }

        // Newton step on the active set.
        let mut improved = false;
        if let Some(target) = newton_target(&prob, &cols, &w, &p) {
            let dir: Vec<f64> = target.iter().zip(&w).map(|(t, x)| t - x).collect();
            let mut t_max: f64 = 1.0;
            let mut blocking = None;
            for (j, (&d, &x)) in dir.iter().zip(&w).enumerate() {
                if d < 0.0 && x + d < 0.0 {
                    let t = x / -d;
                    if t < t_max {
                        t_max = t;
                        blocking = Some(j);
                    }
                }
            }
            let mut t = t_max;
            for _ in 0..40 {
                let mut cand: Vec<f64> = w.iter().zip(&dir).map(|(x, d)| (x + t * d).max(0.0)).collect();
                if t == t_max {
                    if let Some(j) = blocking {
                        cand[j] = 0.0;
                    }
                }
                let total: f64 = cand.iter().sum();
                cand.iter_mut().for_each(|x| *x /= total);
                let cp = prob.mixture_rows(&cols, &cand);
                let cll = prob.loglik(&cp);
                // Near the optimum the likelihood gain drops below rounding;
                // a flat step that tightens stationarity still counts.
                let flat = cll >= ll - 4.0 * f64::EPSILON * ll.abs().max(1.0);
                if cll > ll || (flat && active_gap(&prob, &cols, &cand, &cp) < support_gap) {
                    w = cand;
                    p = cp;
                    ll = cll;
                    improved = true;
                    break;
                }
                t *= 0.5;
            }
        }

        if !improved {
            // EM update.
            let g: Vec<f64> = cols.iter().map(|c| prob.gradient(c, &p)).collect();
            let cand: Vec<f64> = w.iter().zip(&g).map(|(x, g)| x * g).collect();
            let total: f64 = cand.iter().sum();
            let cand: Vec<f64> = cand.iter().map(|x| x / total).collect();
            let cp = prob.mixture_rows(&cols, &cand);
            let cll = prob.loglik(&cp);
            if cll >= ll {
                w = cand;
                p = cp;
                ll = cll;
            }
        }

        // Prune negligible atoms, and light atoms with g_v < 1: dropping
        // those raises the likelihood by about w_v (1 - g_v), a move EM
        // only makes geometrically. Rows must stay covered.
        let g: Vec<f64> = cols.iter().map(|c| prob.gradient(c, &p)).collect();
        let keep: Vec<bool> = w
            .iter()
            .zip(&g)
            .map(|(&x, &gv)| x >= PRUNE_TOL && !(x < LIGHT_ATOM && gv < 1.0 - STATIONARITY_TOL))
            .collect();
        if keep.iter().any(|k| !k) && keep.iter().any(|&k| k) {
            let kc: Vec<Column> = cols.iter().zip(&keep).filter(|(_, &k)| k).map(|(c, _)| c.clone()).collect();
            let mut kw: Vec<f64> = w.iter().zip(&keep).filter(|(_, &k)| k).map(|(&x, _)| x).collect();
            let total: f64 = kw.iter().sum();
            kw.iter_mut().for_each(|x| *x /= total);
            let kp = prob.mixture_rows(&kc, &kw);
            let kll = prob.loglik(&kp);
            if kp.iter().all(|&x| x > 0.0) && kll >= ll - 1e-13 * ll.abs().max(1.0) {
                cols = kc;
                w = kw;
                p = kp;
                ll = kll;
            }
        }
    }

    let mut mixture: Vec<(u64, f64)> =
        cols.iter().zip(&w).filter(|(_, &x)| x > 0.0).map(|(c, &x)| (c.index, x)).collect();
    mixture.sort_by_key(|&(v, _)| v);
    let closest_law = mixture_law(q.pi(), &mixture)?;
    let divergence = divergence(q, &closest_law)?.max(0.0);
    Ok(StrengthResult { divergence, closest_law, mixture, kkt_slack: slack, support_gap, iterations, converged })
}

/// `sum_v w_v vertex_law(v, pi)`.
pub fn mixture_law(pi: &SettingDistribution, mixture: &[(u64, f64)]) -> Result<ProbabilityLaw> {
    let s = pi.scenario();
    let mut entries = vec![0.0; s.len()];
    for &(index, weight) in mixture {
        let v = DeterministicVertex::from_index(s, index)?;
        for sp in pi.support() {
            entries[s.entry_index(sp, v.outcome_pattern(sp))] += weight * pi.weight(sp);
        }
    }
    Ok(ProbabilityLaw::from_parts_unchecked(pi.clone(), entries))
}

/// Supporting hyperplane of the polytope at `p_hat`, facing `q`.
#[derive(Clone, Debug)]
pub struct FaceCertificate {
    /// Canonical form of `raw`.
    pub inequality: BellInequality,
    /// Joint coefficients `q / p_hat` (0 where `q = 0`), bound = classical max.
    pub raw: BellInequality,
    /// `log2(q / p_hat)` on entries with `q > 0`, 0 elsewhere.
    pub log_ratio: Vec<f64>,
    pub quantum_value: f64,
    pub classical_bound: f64,
}

/// Reads off the face of the polytope closest to `q`.
///
/// The functional `p -> sum_i (q_i / p_hat_i) p_i` is at most 1 on every
/// vertex (the KKT condition), equals 1 on the vertices carrying `p_hat`,
/// and exceeds 1 at `q`. Its canonical form uses outcome `reference` as
/// the eliminated outcome.
pub fn extract_face(q: &ProbabilityLaw, res: &StrengthResult) -> Result<FaceCertificate> {
    extract_face_with_reference(q, res, 0)
}

pub fn extract_face_with_reference(q: &ProbabilityLaw, res: &StrengthResult, reference: usize) -> Result<FaceCertificate> {
    if !res.converged {
        return Err(Error::NotConverged);
    }
    if res.divergence <= VIOLATION_FLOOR {
        return Err(Error::ZeroDivergence);
    }
    let p = res.closest_law.entries();
    let mut coefficients = vec![0.0; q.entries().len()];
    let mut log_ratio = vec![0.0; q.entries().len()];
    for (i, &qi) in q.entries().iter().enumerate() {
        if qi > 0.0 {
            coefficients[i] = qi / p[i];
            log_ratio[i] = (qi / p[i]).log2();
        }
    }
    let pi = q.pi().clone();
    let unbounded = BellInequality::new(pi.clone(), coefficients.clone(), 0.0, InequalityForm::Raw)?;
    let (bound, _) = classical_max(&unbounded, &pi)?;
    let raw = BellInequality::new(pi.clone(), coefficients, bound, InequalityForm::Raw)?;
    let inequality = canonicalize_with_reference(&raw, reference)?;
    let quantum_value = inequality.evaluate(q)?;
    let (classical_bound, _) = classical_max(&inequality, &pi)?;
    Ok(FaceCertificate { inequality, raw, log_ratio, quantum_value, classical_bound })
}

/// Values of the face functional on the active vertices minus the bound.
pub fn support_tightness(face: &FaceCertificate, res: &StrengthResult) -> Result<f64> {
    let pi = face.raw.pi();
    let mut worst: f64 = 0.0;
    for &(v, w) in &res.mixture {
        if w > 1e-12 {
            let law = crate::classical::vertex_law(&DeterministicVertex::from_index(pi.scenario(), v)?, pi)?;
            worst = worst.max((face.raw.evaluate(&law)? - face.raw.bound()).abs());
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Schmidt-coefficient optimisation

#[derive(Clone, Debug)]
pub struct OuterConfig {
    pub solver: SolverConfig,
    pub max_iterations: usize,
    /// Stop alternating when the divergence gains less than this.
    pub tolerance: f64,
    /// Random starts in addition to the structured one.
    pub random_starts: usize,
    pub seed: u64,
    /// Smallest step of the coordinate-search polish.
    pub polish_floor: f64,
}

impl Default for OuterConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            max_iterations: MAX_OUTER_ITERATIONS,
            tolerance: 1e-10,
            random_starts: 4,
            seed: 0,
            polish_floor: 1e-6,
        }
    }
}

fn cglmp_strength(c: &[f64], solver: &SolverConfig, warm: &[(u64, f64)]) -> Result<(SchmidtState, StrengthResult)> {
    let state = SchmidtState::from_unnormalized(c)?;
    let d = state.d();
    let model = cglmp_model(d, &state)?;
    let law = born_law(&model, &SettingDistribution::uniform(model.scenario()))?;
    let res = inf_divergence_from(&law, solver, warm)?;
    Ok((state, res))
}

/// `M[x][x'] = Re <xx| B |x'x'>` with `B = sum_i pi(s) log2(q_i / p_hat_i) P_i`,
/// so that `D ~ c^T M c` near the current state with `p_hat` held fixed.
fn schmidt_bell_matrix(model: &QuantumModel, q: &ProbabilityLaw, p_hat: &ProbabilityLaw) -> Vec<Vec<f64>> {
    let s = model.scenario();
    let d = model.party_dims()[0];
    let mut m = vec![vec![0.0; d]; d];
    for sp in q.pi().support() {
        let w = q.pi().weight(sp);
        let settings = s.decode_settings(sp);
        let (fa, la) = model.measurements()[0][settings[0]].frame();
        let (fb, lb) = model.measurements()[1][settings[1]].frame();
        for ja in 0..d {
            for jb in 0..d {
                let e = s.entry_index(sp, s.encode_outcomes(&[la[ja], lb[jb]]));
                let (qi, pi) = (q.entries()[e], p_hat.entries()[e]);
                if qi <= 0.0 || pi <= 0.0 {
                    continue;
                }
                let coef = w * (qi / pi).log2();
                // <xx| (|u><u| (x) |v><v|) |x'x'> = u_x v_x conj(u_x' v_x')
                let z: Vec<C64> = (0..d).map(|x| fa[(x, ja)] * fb[(x, jb)]).collect();
                for x in 0..d {
                    for y in 0..d {
                        m[x][y] += coef * (z[x] * z[y].conj()).re;
                    }
                }
            }
        }
    }
    m
}

fn top_eigenvector(m: &[Vec<f64>]) -> Result<Vec<f64>> {
    let d = m.len();
    let v = if d <= 64 {
        let cm = ComplexMatrix::from_real(d, d, &m.concat())?;
        hermitian_eig(&cm)?.top().1
    } else {
        let apply = |x: &ComplexVector| {
            ComplexVector::new((0..d).map(|i| (0..d).map(|j| x[j] * m[i][j]).sum()).collect())
        };
        largest_eig(apply, d)?.1
    };
    // Remove the global phase so the vector is real.
    let k = (0..d).max_by(|&a, &b| v[a].norm().total_cmp(&v[b].norm())).unwrap_or(0);
    let phase = if v[k].norm() > 0.0 { v[k].conj() / v[k].norm() } else { C64::new(1.0, 0.0) };
    Ok((0..d).map(|i| (v[i] * phase).re).collect())
}

/// Improves `c` by eigenvector / projected-gradient alternation, then polishes.
fn optimize_schmidt_from(c0: Vec<f64>, cfg: &OuterConfig) -> Result<(SchmidtState, StrengthResult)> {
    let (mut state, mut res) = cglmp_strength(&c0, &cfg.solver, &[])?;
    let d = state.d();
    let mut step = 0.5;
    for _ in 0..cfg.max_iterations {
        let model = cglmp_model(d, &state)?;
        let q = born_law(&model, &SettingDistribution::uniform(model.scenario()))?;
        let m = schmidt_bell_matrix(&model, &q, &res.closest_law);
        let c = state.coefficients().to_vec();
        let before = res.divergence;

        let mut accepted = false;
        let top = top_eigenvector(&m)?;
        if let Ok((st, r)) = cglmp_strength(&top, &cfg.solver, &res.mixture) {
            if r.divergence > before + cfg.tolerance {
                state = st;
                res = r;
                accepted = true;
            }
        }
        if !accepted {
            // Projected gradient ascent on the sphere.
            let g: Vec<f64> = (0..d).map(|x| 2.0 * (0..d).map(|y| m[x][y] * c[y]).sum::<f64>()).collect();
            let radial: f64 = g.iter().zip(&c).map(|(a, b)| a * b).sum();
            let gt: Vec<f64> = g.iter().zip(&c).map(|(a, b)| a - radial * b).collect();
            let gn = gt.iter().map(|x| x * x).sum::<f64>().sqrt();
            if gn < 1e-14 {
                break;
            }
            while step > 1e-8 {
                let cand: Vec<f64> = c.iter().zip(&gt).map(|(a, b)| a + step * b / gn).collect();
                if let Ok((st, r)) = cglmp_strength(&cand, &cfg.solver, &res.mixture) {
                    if r.divergence > before + cfg.tolerance {
                        state = st;
                        res = r;
                        accepted = true;
                        step *= 1.5;
                        break;
                    }
                }
                step *= 0.5;
            }
        }
        if !accepted {
            break;
        }
    }
    let (state, res) = coordinate_polish(
        state.coefficients().to_vec(),
        res,
        cfg,
        |c, warm| cglmp_strength(c, &cfg.solver, warm).map(|(st, r)| (st.coefficients().to_vec(), r)),
    )?;
    Ok((SchmidtState::new(state)?, res))
}

/// Derivative-free coordinate search with a step per coordinate: a step
/// that improves is kept and doubled, one that fails both ways is halved;
/// stops once every step is below the floor or the budget is spent.
fn coordinate_polish<F>(
    mut x: Vec<f64>,
    mut res: StrengthResult,
    cfg: &OuterConfig,
    eval: F,
) -> Result<(Vec<f64>, StrengthResult)>
where
    F: Fn(&[f64], &[(u64, f64)]) -> Result<(Vec<f64>, StrengthResult)>,
{
    let mut steps = vec![0.02; x.len()];
    let budget = 40 * x.len() * 20;
    let mut evaluations = 0;
    while steps.iter().any(|&h| h >= cfg.polish_floor) && evaluations < budget {
        for k in 0..x.len() {
            if steps[k] < cfg.polish_floor {
                continue;
            }
            let mut moved = false;
            for sign in [1.0, -1.0] {
                let mut cand = x.clone();
                cand[k] += sign * steps[k];
                evaluations += 1;
                if let Ok((cx, r)) = eval(&cand, &res.mixture) {
                    if r.divergence > res.divergence + POLISH_GAIN {
                        x = cx;
                        res = r;
                        moved = true;
                        break;
                    }
                }
            }
            steps[k] = if moved { (2.0 * steps[k]).min(0.2) } else { 0.5 * steps[k] };
        }
    }
    Ok((x, res))
}

/// Local maximum of the CGLMP strength over Schmidt coefficients, from the
/// maximally entangled state and `random_starts` seeded random states; the
/// best run wins (earliest start on ties).
pub fn optimize_schmidt(d: usize, cfg: &OuterConfig) -> Result<(SchmidtState, StrengthResult)> {
    if d < 2 {
        return Err(Error::InvalidArgument("Schmidt optimisation needs d >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut starts = vec![maximally_entangled(d).coefficients().to_vec()];
    for _ in 0..cfg.random_starts {
        starts.push((0..d).map(|_| rng.gen_range(0.05..1.0)).collect());
    }
    let runs: Vec<Result<(SchmidtState, StrengthResult)>> =
        starts.into_par_iter().map(|c| optimize_schmidt_from(c, cfg)).collect();
    pick_best(runs)
}

fn pick_best<T>(runs: Vec<Result<(T, StrengthResult)>>) -> Result<(T, StrengthResult)> {
    let mut best: Option<(T, StrengthResult)> = None;
    let mut first_err = None;
    for r in runs {
        match r {
            Ok(run) => {
                if best.as_ref().is_none_or(|b| run.1.divergence > b.1.divergence) {
                    best = Some(run);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.unwrap_or(Error::NotConverged))
}

// ---------------------------------------------------------------------------
// Ladders

#[derive(Clone, Debug)]
pub struct LadderRun {
    pub rungs: usize,
    pub policy: LadderPolicy,
    pub alice: Vec<f64>,
    pub bob: Vec<f64>,
    pub result: StrengthResult,
}

fn ladder_strength(
    angles: &[f64],
    pi: &SettingDistribution,
    solver: &SolverConfig,
    warm: &[(u64, f64)],
) -> Result<(ProbabilityLaw, StrengthResult)> {
    let n = angles.len() / 2;
    let model = ladder_model(&angles[..n], &angles[n..])?;
    let law = born_law(&model, pi)?;
    let res = inf_divergence_from(&law, solver, warm)?;
    Ok((law, res))
}

/// `sum_i q_i(theta) log2(q_i(theta) / p_hat_i)` with `p_hat` frozen; its
/// gradient equals that of the strength where the closest law is unique.
fn frozen_objective(angles: &[f64], pi: &SettingDistribution, p_hat: &ProbabilityLaw) -> Result<f64> {
    let n = angles.len() / 2;
    let law = born_law(&ladder_model(&angles[..n], &angles[n..])?, pi)?;
    divergence(&law, p_hat)
}

fn optimize_ladder_from(start: Vec<f64>, pi: &SettingDistribution, cfg: &OuterConfig) -> Result<(Vec<f64>, StrengthResult)> {
    let mut x = start;
    let (_, mut res) = ladder_strength(&x, pi, &cfg.solver, &[])?;
    let mut step = 0.05;
    let h = 1e-6;
    for _ in 0..cfg.max_iterations {
        let grad: Vec<f64> = (0..x.len())
            .map(|k| {
                let mut a = x.clone();
                let mut b = x.clone();
                a[k] += h;
                b[k] -= h;
                let fa = frozen_objective(&a, pi, &res.closest_law).unwrap_or(f64::NAN);
                let fb = frozen_objective(&b, pi, &res.closest_law).unwrap_or(f64::NAN);
                (fa - fb) / (2.0 * h)
            })
            .collect();
        let gn = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !gn.is_finite() || gn < 1e-10 {
            break;
        }
        let mut accepted = false;
        while step > 1e-7 {
            let cand: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a + step * g / gn).collect();
            let (_, r) = ladder_strength(&cand, pi, &cfg.solver, &res.mixture)?;
            if r.divergence > res.divergence + cfg.tolerance {
                x = cand;
                res = r;
                accepted = true;
                step *= 1.5;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    coordinate_polish(x, res, cfg, |a, warm| ladder_strength(a, pi, &cfg.solver, warm).map(|(_, r)| (a.to_vec(), r)))
}

/// Maximally entangled K-rung ladder with angles optimised numerically:
/// gradient ascent from evenly spaced chain angles (both orientations) and
/// seeded random angles, then coordinate-search polish.
pub fn ladder_experiment(rungs: usize, policy: LadderPolicy, cfg: &OuterConfig) -> Result<LadderRun> {
    let pi = ladder_settings(rungs, policy)?;
    let mut starts = Vec::new();
    for dir in [1.0, -1.0] {
        let (a, b) = ladder_chain_angles(rungs, dir);
        starts.push([a, b].concat());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (rungs as u64) << 8);
    for _ in 0..cfg.random_starts.min(2) {
        starts.push((0..2 * (rungs + 1)).map(|_| rng.gen_range(0.0..std::f64::consts::PI)).collect());
    }
    let runs: Vec<Result<(Vec<f64>, StrengthResult)>> =
        starts.into_par_iter().map(|s| optimize_ladder_from(s, &pi, cfg)).collect();
    let (angles, result) = pick_best(runs)?;
    let n = rungs + 1;
    Ok(LadderRun { rungs, policy, alice: angles[..n].to_vec(), bob: angles[n..].to_vec(), result })
}

/// Strength of optimised ladders for `K = 1..=max_rungs`, both policies.
pub fn ladder_sweep(max_rungs: usize, cfg: &OuterConfig) -> Result<Vec<LadderRun>> {
    if max_rungs == 0 || max_rungs > MAX_SWEEP_RUNGS {
        return Err(Error::InvalidArgument(format!("ladder sweeps cover 1..={MAX_SWEEP_RUNGS} rungs")));
    }
    let mut rows = Vec::new();
    for k in 1..=max_rungs {
        for policy in [LadderPolicy::Surviving, LadderPolicy::All] {
            rows.push(ladder_experiment(k, policy, cfg)?);
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Losses and discounting

/// Smallest detection efficiency at which the lossy law still lies outside
/// the polytope (divergence above [`VIOLATION_FLOOR`]), to within `tol`.
pub fn detection_threshold(law: &ProbabilityLaw, tol: f64, solver: &SolverConfig) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let strength = |eta: f64| -> Result<f64> { Ok(inf_divergence(&with_detection_efficiency(law, eta)?, solver)?.divergence) };
    if strength(1.0)? <= VIOLATION_FLOOR {
        return Err(Error::NoViolation);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if strength(mid)? > VIOLATION_FLOOR {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `divergence * setting_acceptance / pairs_per_trial`.
pub fn discounted_strength(divergence: f64, pairs_per_trial: u32, setting_acceptance: f64) -> Result<f64> {
    if pairs_per_trial == 0 || !(setting_acceptance > 0.0 && setting_acceptance <= 1.0) || !(divergence >= 0.0) {
        return Err(Error::InvalidArgument(
            "need divergence >= 0, pairs_per_trial >= 1 and acceptance in (0, 1]".into(),
        ));
    }
    Ok(divergence * setting_acceptance / pairs_per_trial as f64)
}

// ---------------------------------------------------------------------------
// JSON

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MixtureAtom {
    pub vertex: u64,
    pub weight: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FaceJson {
    pub inequality: InequalityFile,
    pub raw: InequalityFile,
    pub log_ratio: Vec<f64>,
    pub quantum_value: f64,
    pub classical_bound: f64,
}

/// `{"divergence_bits", "kkt_slack", "iterations", "converged", "mixture", "face"?}`
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StrengthReport {
    pub divergence_bits: f64,
    pub kkt_slack: f64,
    pub iterations: usize,
    pub converged: bool,
    pub mixture: Vec<MixtureAtom>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub face: Option<FaceJson>,
}

impl StrengthReport {
    pub fn new(res: &StrengthResult, face: Option<&FaceCertificate>) -> Self {
        Self {
            divergence_bits: res.divergence,
            kkt_slack: res.kkt_slack,
            iterations: res.iterations,
            converged: res.converged,
            mixture: res.mixture.iter().map(|&(vertex, weight)| MixtureAtom { vertex, weight }).collect(),
            face: face.map(|f| FaceJson {
                inequality: InequalityFile::from(&f.inequality),
                raw: InequalityFile::from(&f.raw),
                log_ratio: f.log_ratio.clone(),
                quantum_value: f.quantum_value,
                classical_bound: f.classical_bound,
            }),
        }
    }
}
