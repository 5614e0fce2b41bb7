//! Pure states, projective measurements and the Born rule.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{ghz_patterns, LadderPolicy};
use crate::error::{Error, Result};
use crate::scenario::{ProbabilityLaw, Scenario, SettingDistribution};
use crate::tensor::{fourier, hermitian_eig, kron_all, sigma_1, sigma_2, ComplexMatrix, ComplexVector, C64};

pub const PROJECTOR_TOL: f64 = 1e-10;
pub const STATE_NORM_TOL: f64 = 1e-12;
/// Minimum gap below the top eigenvalue of the GHZ operator.
pub const GHZ_GAP_TOL: f64 = 1e-6;

/// A complete family of mutually orthogonal projectors, one per outcome.
///
/// Alongside the projectors we keep an orthonormal frame spanning the whole
/// space, each frame vector labelled by the outcome whose range it lies in;
/// the Born rule works on the frame.
#[derive(Clone, Debug)]
pub struct ProjectorFamily {
    dim: usize,
    projectors: Vec<ComplexMatrix>,
    frame: ComplexMatrix,
    labels: Vec<usize>,
}

impl ProjectorFamily {
    pub fn from_projectors(projectors: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = projectors.first().map(|p| p.rows()).ok_or_else(|| Error::InvalidModel("empty family".into()))?;
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for (i, p) in projectors.iter().enumerate() {
            if p.rows() != dim || p.cols() != dim {
                return Err(Error::InvalidModel(format!("projector {i} is not {dim}x{dim}")));
            }
            if p.hermitian_deviation() > PROJECTOR_TOL {
                return Err(Error::InvalidModel(format!("projector {i} is not Hermitian")));
            }
            if p.matmul(p)?.max_abs_diff(p) > PROJECTOR_TOL {
                return Err(Error::InvalidModel(format!("projector {i} is not idempotent")));
            }
            for (j, other) in projectors.iter().enumerate().skip(i + 1) {
                if p.matmul(other)?.max_abs() > PROJECTOR_TOL {
                    return Err(Error::InvalidModel(format!("projectors {i} and {j} are not orthogonal")));
                }
            }
            sum = &sum + p;
        }
        if sum.max_abs_diff(&ComplexMatrix::identity(dim)) > PROJECTOR_TOL {
            return Err(Error::InvalidModel("projectors do not sum to the identity".into()));
        }
        let mut columns = Vec::with_capacity(dim);
        let mut labels = Vec::with_capacity(dim);
        for (i, p) in projectors.iter().enumerate() {
            let eig = hermitian_eig(p)?;
            for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
                if lambda > 0.5 {
                    columns.push(eig.eigenvector(k));
                    labels.push(i);
                }
            }
        }
        if columns.len() != dim {
            return Err(Error::InvalidModel("projector ranks do not add up to the dimension".into()));
        }
        let frame = ComplexMatrix::from_columns(&columns)?;
        Ok(Self { dim, projectors, frame, labels })
    }

    /// Rank-one family `|u_x><u_x|` from the columns of a unitary.
    pub fn from_basis(basis: &ComplexMatrix) -> Result<Self> {
        if !basis.is_square() || !basis.is_unitary(PROJECTOR_TOL) {
            return Err(Error::InvalidModel("measurement basis is not unitary".into()));
        }
        let dim = basis.rows();
        let projectors = (0..dim).map(|x| ComplexMatrix::outer(&basis.column(x))).collect();
        Ok(Self { dim, projectors, frame: basis.clone(), labels: (0..dim).collect() })
    }

    /// Measuring after applying `u`: projectors `u^H |x><x| u`.
    pub fn after_unitary(u: &ComplexMatrix) -> Result<Self> {
        Self::from_basis(&u.adjoint())
    }

    pub fn computational(dim: usize) -> Self {
        Self::from_basis(&ComplexMatrix::identity(dim)).expect("identity is unitary")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> usize {
        self.projectors.len()
    }

    pub fn projectors(&self) -> &[ComplexMatrix] {
        &self.projectors
    }

    /// Orthonormal frame columns and the outcome each one belongs to.
    pub fn frame(&self) -> (&ComplexMatrix, &[usize]) {
        (&self.frame, &self.labels)
    }

    /// `u P u^H` for every projector.
    pub fn conjugated(&self, u: &ComplexMatrix) -> Result<Self> {
        let frame = u.matmul(&self.frame)?;
        let projectors =
            self.projectors.iter().map(|p| u.matmul(p)?.matmul(&u.adjoint())).collect::<Result<Vec<_>>>()?;
        Ok(Self { dim: self.dim, projectors, frame, labels: self.labels.clone() })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchmidtState {
    coefficients: Vec<f64>,
}

impl SchmidtState {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() || coefficients.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
            return Err(Error::InvalidModel("Schmidt coefficients must be finite and nonnegative".into()));
        }
        let norm: f64 = coefficients.iter().map(|c| c * c).sum();
        if (norm - 1.0).abs() > STATE_NORM_TOL {
            return Err(Error::InvalidModel(format!("Schmidt coefficients have squared norm {norm}")));
        }
        Ok(Self { coefficients })
    }

    /// `|u| / ||u||`; errors on the zero vector.
    pub fn from_unnormalized(u: &[f64]) -> Result<Self> {
        let norm = u.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidModel("cannot normalise a zero Schmidt vector".into()));
        }
        let c: Vec<f64> = u.iter().map(|x| x.abs() / norm).collect();
        let n2: f64 = c.iter().map(|x| x * x).sum();
        Self::new(c.iter().map(|x| x / n2.sqrt()).collect())
    }

    pub fn d(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `sum_x c_x |xx>` on `C^d (x) C^d`.
    pub fn to_vector(&self) -> ComplexVector {
        let d = self.d();
        let mut v = ComplexVector::zeros(d * d);
        for (x, &c) in self.coefficients.iter().enumerate() {
            v[x * d + x] = C64::new(c, 0.0);
        }
        v
    }
}

pub fn maximally_entangled(d: usize) -> SchmidtState {
    assert!(d >= 1, "dimension must be positive");
    let c = 1.0 / (d as f64).sqrt();
    SchmidtState { coefficients: vec![c; d] }
}

#[derive(Clone, Debug)]
pub struct QuantumModel {
    scenario: Scenario,
    party_dims: Vec<usize>,
    state: ComplexVector,
    measurements: Vec<Vec<ProjectorFamily>>,
}

impl QuantumModel {
    pub fn new(
        scenario: Scenario,
        party_dims: Vec<usize>,
        state: ComplexVector,
        measurements: Vec<Vec<ProjectorFamily>>,
    ) -> Result<Self> {
        if party_dims.len() != scenario.parties || party_dims.contains(&0) {
            return Err(Error::InvalidModel("need one positive dimension per party".into()));
        }
        let total: usize = party_dims.iter().product();
        if state.dim() != total {
            return Err(Error::InvalidModel(format!("state has dimension {}, expected {total}", state.dim())));
        }
        if !state.is_finite() || (state.norm_sqr() - 1.0).abs() > STATE_NORM_TOL {
            return Err(Error::InvalidModel(format!("state norm^2 is {}", state.norm_sqr())));
        }
        if measurements.len() != scenario.parties {
            return Err(Error::InvalidModel("need measurements for every party".into()));
        }
        for (k, per_party) in measurements.iter().enumerate() {
            if per_party.len() != scenario.settings {
                return Err(Error::InvalidModel(format!("party {k} needs {} settings", scenario.settings)));
            }
            for (a, fam) in per_party.iter().enumerate() {
                if fam.dim() != party_dims[k] || fam.outcomes() != scenario.outcomes {
                    return Err(Error::InvalidModel(format!(
                        "party {k} setting {a}: family of {} projectors on C^{}, expected {} on C^{}",
                        fam.outcomes(),
                        fam.dim(),
                        scenario.outcomes,
                        party_dims[k]
                    )));
                }
            }
        }
        Ok(Self { scenario, party_dims, state, measurements })
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn party_dims(&self) -> &[usize] {
        &self.party_dims
    }

    pub fn state(&self) -> &ComplexVector {
        &self.state
    }

    pub fn measurements(&self) -> &[Vec<ProjectorFamily>] {
        &self.measurements
    }

    /// Applies `u` to one party's factor of the state and conjugates all of
    /// that party's projectors by `u`.
    pub fn rotated(&self, party: usize, u: &ComplexMatrix) -> Result<Self> {
        let mut factors: Vec<ComplexMatrix> = self.party_dims.iter().map(|&d| ComplexMatrix::identity(d)).collect();
        factors[party] = u.clone();
        let refs: Vec<&ComplexMatrix> = factors.iter().collect();
        let state = kron_all(&refs).apply(&self.state)?;
        let mut measurements = self.measurements.clone();
        for fam in measurements[party].iter_mut() {
            *fam = fam.conjugated(u)?;
        }
        Self::new(self.scenario, self.party_dims.clone(), state, measurements)
    }

    /// Conditional outcome distribution for one setting pattern.
    pub fn conditional(&self, settings: &[usize]) -> Vec<f64> {
        let s = self.scenario;
        let mut amp = self.state.entries().to_vec();
        for (k, &a) in settings.iter().enumerate() {
            let w = self.measurements[k][a].frame.adjoint();
            amp = apply_axis(&amp, &self.party_dims, k, &w);
        }
        let mut probs = vec![0.0; s.outcome_patterns()];
        let mut idx = vec![0usize; s.parties];
        for a in &amp {
            let outcomes: Vec<usize> =
                idx.iter().enumerate().map(|(k, &j)| self.measurements[k][settings[k]].labels[j]).collect();
            probs[s.encode_outcomes(&outcomes)] += a.norm_sqr();
            for k in (0..s.parties).rev() {
                idx[k] += 1;
                if idx[k] < self.party_dims[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        probs
    }
}

/// Applies `m` along axis `axis` of a row-major tensor with shape `dims`.
fn apply_axis(t: &[C64], dims: &[usize], axis: usize, m: &ComplexMatrix) -> Vec<C64> {
    let d = dims[axis];
    let inner: usize = dims[axis + 1..].iter().product();
    let outer: usize = dims[..axis].iter().product();
    let me = m.entries();
    let mut out = vec![C64::new(0.0, 0.0); t.len()];
    for o in 0..outer {
        let base = o * d * inner;
        for i in 0..d {
            let row = &me[i * d..(i + 1) * d];
            let dst = base + i * inner;
            for (j, &mij) in row.iter().enumerate() {
                if mij == C64::new(0.0, 0.0) {
                    continue;
                }
                let src = base + j * inner;
                for l in 0..inner {
                    out[dst + l] += mij * t[src + l];
                }
            }
        }
    }
    out
}

/// `p(s; o) = pi(s) * || (P_{o_1} (x) ... ) psi ||^2`, over patterns with weight.
pub fn born_law(m: &QuantumModel, pi: &SettingDistribution) -> Result<ProbabilityLaw> {
    let s = m.scenario;
    if pi.scenario() != s {
        return Err(Error::InvalidModel("model and setting distribution scenarios differ".into()));
    }
    let no = s.outcome_patterns();
    let blocks: Vec<Vec<f64>> = (0..s.setting_patterns())
        .into_par_iter()
        .map(|sp| {
            let w = pi.weight(sp);
            if w == 0.0 {
                return vec![0.0; no];
            }
            let cond = m.conditional(&s.decode_settings(sp));
            let total: f64 = cond.iter().sum();
            cond.iter().map(|p| w * p / total).collect()
        })
        .collect();
    ProbabilityLaw::new(pi.clone(), blocks.concat())
}

/// How a measurement angle enters the diagonal phase `diag(phase(x, theta))`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseConvention {
    /// `exp(4 i x theta / d)`: reduces to `exp(2 i x theta)` at d = 2 and puts
    /// the settings a quarter and a half period apart in the Fourier basis.
    #[default]
    Standard,
    /// `exp(2 i x theta)` for every d.
    TwoTheta,
    /// `exp(i x theta / d)`, the formula read literally.
    Literal,
}

impl PhaseConvention {
    pub fn phase(self, x: usize, theta: f64, d: usize) -> C64 {
        let (x, d) = (x as f64, d as f64);
        let arg = match self {
            Self::Standard => 4.0 * x * theta / d,
            Self::TwoTheta => 2.0 * x * theta,
            Self::Literal => x * theta / d,
        };
        C64::from_polar(1.0, arg)
    }

    fn diag(self, theta: f64, d: usize) -> ComplexMatrix {
        ComplexMatrix::diagonal(&(0..d).map(|x| self.phase(x, theta, d)).collect::<Vec<_>>())
    }
}

pub const CGLMP_ALICE_ANGLES: [f64; 2] = [0.0, PI / 4.0];
pub const CGLMP_BOB_ANGLES: [f64; 2] = [PI / 8.0, -PI / 8.0];

/// Two d-level parties sharing `sum_x c_x |xx>`. Alice rotates by
/// `Q diag(phase(x, alpha_a))`, Bob by `Q^* diag(phase(x, beta_b))`, and both
/// then read the computational basis.
pub fn cglmp_model(d: usize, state: &SchmidtState) -> Result<QuantumModel> {
    cglmp_model_with(d, state, PhaseConvention::Standard)
}

pub fn cglmp_model_with(d: usize, state: &SchmidtState, convention: PhaseConvention) -> Result<QuantumModel> {
    if d < 2 || state.d() != d {
        return Err(Error::InvalidModel(format!("CGLMP model needs d >= 2 and a {d}-term Schmidt state")));
    }
    let q = fourier(d);
    let qc = q.conj();
    let family = |base: &ComplexMatrix, theta: f64| -> Result<ProjectorFamily> {
        ProjectorFamily::after_unitary(&base.matmul(&convention.diag(theta, d))?)
    };
    let alice = CGLMP_ALICE_ANGLES.iter().map(|&t| family(&q, t)).collect::<Result<Vec<_>>>()?;
    let bob = CGLMP_BOB_ANGLES.iter().map(|&t| family(&qc, t)).collect::<Result<Vec<_>>>()?;
    QuantumModel::new(Scenario::new(2, 2, d)?, vec![d, d], state.to_vector(), vec![alice, bob])
}

/// The GHZ Bell operator `X1 Y2 Z2 + X2 Y1 Z2 + X2 Y2 Z1 - X1 Y1 Z1`, where
/// setting 1 is `sigma_1` and setting 2 is `sigma_2` on each qubit.
pub fn ghz_operator() -> ComplexMatrix {
    let ops = [sigma_1(), sigma_2()];
    let term = |a: usize, b: usize, c: usize| kron_all(&[&ops[a], &ops[b], &ops[c]]);
    let mut sum = ComplexMatrix::zeros(8, 8);
    for p in ghz_patterns() {
        let t = term(p[0], p[1], p[2]);
        sum = if p == [0, 0, 0] { &sum - &t } else { &sum + &t };
    }
    sum
}

/// Three qubits in the eigenvalue-4 eigenvector of [`ghz_operator`];
/// setting 1 measures `sigma_1`, setting 2 `sigma_2`, outcome 0 is +1.
pub fn ghz_model() -> Result<QuantumModel> {
    let eig = hermitian_eig(&ghz_operator())?;
    let n = eig.eigenvalues.len();
    let gap = eig.eigenvalues[n - 1] - eig.eigenvalues[n - 2];
    if gap < GHZ_GAP_TOL {
        return Err(Error::DegenerateEigenvector { gap });
    }
    let state = eig.eigenvector(n - 1).normalized();
    let h = 1.0 / 2f64.sqrt();
    let x_basis = ComplexMatrix::from_real(2, 2, &[h, h, h, -h])?;
    let families = vec![ProjectorFamily::from_basis(&x_basis)?, ProjectorFamily::computational(2)];
    QuantumModel::new(Scenario::new(3, 2, 2)?, vec![2, 2, 2], state, vec![families; 3])
}

/// GHZ setting distribution: uniform on the four paradox patterns.
pub fn ghz_settings() -> SettingDistribution {
    SettingDistribution::uniform_on(Scenario::new(3, 2, 2).expect("3x2x2"), &ghz_patterns()).expect("patterns")
}

/// Qubit measurement at angle `theta`: `Q diag(1, e^{2 i theta})` for Alice,
/// the conjugate Fourier matrix for Bob.
fn qubit_family(theta: f64, bob: bool) -> Result<ProjectorFamily> {
    let q = if bob { fourier(2).conj() } else { fourier(2) };
    ProjectorFamily::after_unitary(&q.matmul(&PhaseConvention::TwoTheta.diag(theta, 2))?)
}

/// A K-rung ladder on a maximally entangled qubit pair with the given
/// per-setting angles (`K + 1` each).
pub fn ladder_model(alice: &[f64], bob: &[f64]) -> Result<QuantumModel> {
    if alice.len() != bob.len() || alice.len() < 2 {
        return Err(Error::InvalidModel("ladder needs K + 1 >= 2 angles per party".into()));
    }
    let settings = alice.len();
    let fa = alice.iter().map(|&t| qubit_family(t, false)).collect::<Result<Vec<_>>>()?;
    let fb = bob.iter().map(|&t| qubit_family(t, true)).collect::<Result<Vec<_>>>()?;
    QuantumModel::new(Scenario::new(2, settings, 2)?, vec![2, 2], maximally_entangled(2).to_vector(), vec![fa, fb])
}

/// Evenly spaced chain angles: consecutive links of the ladder chain differ
/// by `pi / (4 (K + 1))`, as the CHSH angles do for one rung. Outcomes agree
/// with probability `cos^2(alpha + beta)`, so Bob's angles enter negated.
pub fn ladder_chain_angles(rungs: usize, direction: f64) -> (Vec<f64>, Vec<f64>) {
    let k = rungs;
    let step = direction * PI / (4.0 * (k + 1) as f64);
    let mut alice = vec![0.0; k + 1];
    let mut bob = vec![0.0; k + 1];
    for j in 0..2 * k + 2 {
        let label = if j <= k { j + 1 } else { 2 * k + 2 - j };
        let theta = j as f64 * step;
        if j % 2 == 0 {
            alice[k + 1 - label] = theta;
        } else {
            bob[label - 1] = -theta;
        }
    }
    (alice, bob)
}

/// Lossy detection: each party independently reports "no event" (the new
/// outcome `r`) with probability `1 - eta`. The result lives on `2 x q x (r+1)`.
pub fn with_detection_efficiency(law: &ProbabilityLaw, eta: f64) -> Result<ProbabilityLaw> {
    let s = law.scenario();
    if s.parties != 2 {
        return Err(Error::InvalidArgument("detection efficiency needs two parties".into()));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidArgument(format!("efficiency {eta} outside [0, 1]")));
    }
    let r = s.outcomes;
    let t = Scenario::new(2, s.settings, r + 1)?;
    let pi = SettingDistribution::new(t, law.pi().weights().to_vec())?;
    let mut entries = vec![0.0; t.len()];
    let miss = 1.0 - eta;
    for sp in 0..s.setting_patterns() {
        let w = law.pi().weight(sp);
        if w == 0.0 {
            continue;
        }
        let block = law.pattern_entries(sp);
        // marginals of the lossless law
        let mut ma = vec![0.0; r];
        let mut mb = vec![0.0; r];
        for x in 0..r {
            for y in 0..r {
                let p = block[x * r + y];
                ma[x] += p;
                mb[y] += p;
                entries[t.entry_index(sp, x * (r + 1) + y)] = eta * eta * p;
            }
        }
        for x in 0..r {
            entries[t.entry_index(sp, x * (r + 1) + r)] = eta * miss * ma[x];
            entries[t.entry_index(sp, r * (r + 1) + x)] = miss * eta * mb[x];
        }
        entries[t.entry_index(sp, r * (r + 1) + r)] = miss * miss * w;
    }
    ProbabilityLaw::new(pi, entries)
}

/// Named models accepted in model files and on the command line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "named", rename_all = "lowercase")]
pub enum NamedModel {
    Chsh,
    Ghz,
    Cglmp {
        d: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        schmidt: Option<Vec<f64>>,
    },
    Ladder {
        rungs: usize,
        #[serde(default = "default_policy")]
        policy: LadderPolicy,
    },
}

fn default_policy() -> LadderPolicy {
    LadderPolicy::Surviving
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComplexArray {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// Explicit model: `measurements[party][setting]` is a list of `r` projectors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExplicitModel {
    pub scenario: Scenario,
    pub party_dims: Vec<usize>,
    pub state: ComplexArray,
    pub measurements: Vec<Vec<Vec<MatrixJson>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelFile {
    Named(NamedModel),
    Explicit(ExplicitModel),
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidModel(format!("malformed model JSON: {e}")))
    }
}

fn matrix_from_json(m: &MatrixJson) -> Result<ComplexMatrix> {
    let rows = m.re.len();
    if m.im.len() != rows {
        return Err(Error::InvalidModel("re/im row counts differ".into()));
    }
    let mut entries = Vec::with_capacity(rows * rows);
    for (re, im) in m.re.iter().zip(&m.im) {
        if re.len() != rows || im.len() != rows {
            return Err(Error::InvalidModel("projector matrices must be square".into()));
        }
        entries.extend(re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)));
    }
    ComplexMatrix::from_entries(rows, rows, entries)
}

fn matrix_to_json(m: &ComplexMatrix) -> MatrixJson {
    let row = |i: usize, f: fn(&C64) -> f64| (0..m.cols()).map(|j| f(&m[(i, j)])).collect();
    MatrixJson {
        re: (0..m.rows()).map(|i| row(i, |z| z.re)).collect(),
        im: (0..m.rows()).map(|i| row(i, |z| z.im)).collect(),
    }
}

impl ExplicitModel {
    pub fn to_model(&self) -> Result<(QuantumModel, SettingDistribution)> {
        self.scenario.validate(Default::default())?;
        if self.state.re.len() != self.state.im.len() {
            return Err(Error::InvalidModel("state re/im lengths differ".into()));
        }
        let state =
            ComplexVector::new(self.state.re.iter().zip(&self.state.im).map(|(&a, &b)| C64::new(a, b)).collect());
        let measurements = self
            .measurements
            .iter()
            .map(|party| {
                party
                    .iter()
                    .map(|fam| {
                        let ps = fam.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
                        ProjectorFamily::from_projectors(ps)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let model = QuantumModel::new(self.scenario, self.party_dims.clone(), state, measurements)?;
        let pi = match &self.pi {
            Some(w) => SettingDistribution::new(self.scenario, w.clone())?,
            None => SettingDistribution::uniform(self.scenario),
        };
        Ok((model, pi))
    }

    pub fn from_model(m: &QuantumModel, pi: Option<&SettingDistribution>) -> Self {
        Self {
            scenario: m.scenario,
            party_dims: m.party_dims.clone(),
            state: ComplexArray {
                re: m.state.entries().iter().map(|z| z.re).collect(),
                im: m.state.entries().iter().map(|z| z.im).collect(),
            },
            measurements: m
                .measurements
                .iter()
                .map(|party| party.iter().map(|f| f.projectors.iter().map(matrix_to_json).collect()).collect())
                .collect(),
            pi: pi.map(|p| p.weights().to_vec()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{cglmp_inequality_uniform, ghz_inequality};

    fn random_unitary(d: usize, seed: u64) -> ComplexMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        // Gram-Schmidt on a random complex matrix.
        let mut cols: Vec<ComplexVector> = Vec::new();
        while cols.len() < d {
            let mut v = ComplexVector::new(
                (0..d).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(),
            );
            for c in &cols {
                let p = c.inner(&v);
                v.axpy(-p, c);
            }
            if v.norm() > 1e-3 {
                cols.push(v.normalized());
            }
        }
        ComplexMatrix::from_columns(&cols).unwrap()
    }

    #[test]
    fn maximally_entangled_coefficients() {
        let s = maximally_entangled(2);
        assert!((s.coefficients()[0] - 0.70710678).abs() < 1e-8);
        assert_eq!(maximally_entangled(4).coefficients(), &[0.5; 4]);
        for d in 1..8 {
            let n: f64 = maximally_entangled(d).coefficients().iter().map(|c| c * c).sum();
            assert!((n - 1.0).abs() < 1e-12);
            assert!(SchmidtState::new(maximally_entangled(d).coefficients().to_vec()).is_ok());
        }
    }

    #[test]
    fn schmidt_validation() {
        assert!(SchmidtState::new(vec![1.0, 0.5]).is_err());
        assert!(SchmidtState::new(vec![-1.0, 0.0]).is_err());
        let s = SchmidtState::from_unnormalized(&[3.0, -4.0]).unwrap();
        assert!((s.coefficients()[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn trivial_family_gives_certain_outcome() {
        let z = ComplexMatrix::zeros(2, 2);
        let fam = ProjectorFamily::from_projectors(vec![ComplexMatrix::identity(2), z]).unwrap();
        let s = Scenario::new(2, 2, 2).unwrap();
        let state = maximally_entangled(2).to_vector();
        let m = QuantumModel::new(s, vec![2, 2], state, vec![vec![fam.clone(), fam.clone()], vec![fam.clone(), fam]]).unwrap();
        let law = born_law(&m, &SettingDistribution::uniform(s)).unwrap();
        for sp in 0..4 {
            assert!((law.conditional(sp).unwrap()[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_families_rejected() {
        let half = ComplexMatrix::identity(2).scale(C64::new(0.5, 0.0));
        assert!(ProjectorFamily::from_projectors(vec![half.clone(), half]).is_err());
        let p0 = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(ProjectorFamily::from_projectors(vec![p0.clone(), p0]).is_err());
        assert!(ProjectorFamily::from_basis(&ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]).unwrap()).is_err());
    }

    #[test]
    fn cglmp_families_are_valid() {
        for d in 2..=5 {
            let m = cglmp_model(d, &maximally_entangled(d)).unwrap();
            for party in m.measurements() {
                for fam in party {
                    // revalidate from the projectors alone
                    ProjectorFamily::from_projectors(fam.projectors().to_vec()).unwrap();
                }
            }
        }
    }

    #[test]
    fn cglmp_laws_violate_and_do_not_signal() {
        let expected = [0.20710678, 0.29098, 0.33609, 0.36422];
        for d in 2..=5 {
            let m = cglmp_model(d, &maximally_entangled(d)).unwrap();
            let pi = SettingDistribution::uniform(m.scenario());
            let law = born_law(&m, &pi).unwrap();
            assert!(law.check_no_signalling(1e-10).passes());
            let ineq = cglmp_inequality_uniform(d).unwrap();
            // joint coefficients carry 1/pi, so this is the conditional-form value
            let v = ineq.violation(&law).unwrap();
            assert!((v - expected[d - 2]).abs() < 1e-4, "d={d}: {v}");
        }
    }

    #[test]
    fn ghz_law_is_deterministic_on_paradox_patterns() {
        let m = ghz_model().unwrap();
        let pi = ghz_settings();
        let law = born_law(&m, &pi).unwrap();
        let s = m.scenario();
        for (i, p) in ghz_patterns().iter().enumerate() {
            let sp = s.encode_settings(p);
            let cond = law.conditional(sp).unwrap();
            let plus: f64 = (0..8).filter(|&o| s.decode_outcomes(o).iter().sum::<usize>() % 2 == 0).map(|o| cond[o]).sum();
            let want = if i == 3 { 0.0 } else { 1.0 };
            assert!((plus - want).abs() < 1e-12, "{p:?}: {plus}");
        }
        let ineq = ghz_inequality(&pi).unwrap();
        assert!((ineq.evaluate(&law).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn ghz_terms_commute() {
        let ops = [sigma_1(), sigma_2()];
        let terms: Vec<ComplexMatrix> =
            ghz_patterns().iter().map(|p| kron_all(&[&ops[p[0]], &ops[p[1]], &ops[p[2]]])).collect();
        for a in &terms {
            for b in &terms {
                assert!(a.commutator(b).unwrap().max_abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn local_unitary_leaves_law_unchanged() {
        let m = cglmp_model(3, &maximally_entangled(3)).unwrap();
        let pi = SettingDistribution::uniform(m.scenario());
        let before = born_law(&m, &pi).unwrap();
        for party in 0..2 {
            let after = born_law(&m.rotated(party, &random_unitary(3, 11 + party as u64)).unwrap(), &pi).unwrap();
            for (a, b) in before.entries().iter().zip(after.entries()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn detection_efficiency_endpoints() {
        let m = cglmp_model(2, &maximally_entangled(2)).unwrap();
        let pi = SettingDistribution::uniform(m.scenario());
        let law = born_law(&m, &pi).unwrap();
        let full = with_detection_efficiency(&law, 1.0).unwrap();
        let t = full.scenario();
        assert_eq!((t.settings, t.outcomes), (2, 3));
        for sp in 0..4 {
            for x in 0..2 {
                for y in 0..2 {
                    assert!((full.entry(sp, x * 3 + y) - law.entry(sp, x * 2 + y)).abs() < 1e-15);
                }
            }
            assert_eq!(full.entry(sp, 8), 0.0);
        }
        let none = with_detection_efficiency(&law, 0.0).unwrap();
        for sp in 0..4 {
            assert!((none.entry(sp, 8) - 0.25).abs() < 1e-15);
        }
        let mid = with_detection_efficiency(&law, 0.7).unwrap();
        for sp in 0..4 {
            let c = mid.conditional(sp).unwrap();
            let alice_miss: f64 = (0..3).map(|y| c[2 * 3 + y]).sum();
            assert!((alice_miss - 0.3).abs() < 1e-12);
        }
        assert!(mid.check_no_signalling(1e-10).passes());
    }

    #[test]
    fn ladder_one_rung_reproduces_chsh_law() {
        let (a, b) = ladder_chain_angles(1, 1.0);
        let lad = ladder_model(&a, &b).unwrap();
        let chsh = cglmp_model(2, &maximally_entangled(2)).unwrap();
        let pi = SettingDistribution::uniform(lad.scenario());
        let l1 = born_law(&lad, &pi).unwrap();
        let l2 = born_law(&chsh, &pi).unwrap();
        let ineq = cglmp_inequality_uniform(2).unwrap();
        let v1 = ineq.violation(&l1).unwrap();
        let v2 = ineq.violation(&l2).unwrap();
        assert!((v1 - v2).abs() < 1e-12, "{v1} vs {v2}");
    }

    #[test]
    fn model_json_round_trip() {
        let m = ghz_model().unwrap();
        let pi = ghz_settings();
        let text = serde_json::to_string(&ModelFile::Explicit(ExplicitModel::from_model(&m, Some(&pi)))).unwrap();
        let ModelFile::Explicit(e) = ModelFile::from_json(&text).unwrap() else { panic!("explicit expected") };
        let (m2, pi2) = e.to_model().unwrap();
        let a = born_law(&m, &pi).unwrap();
        let b = born_law(&m2, &pi2).unwrap();
        for (x, y) in a.entries().iter().zip(b.entries()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(ModelFile::from_json(r#"{"named":"ghz"}"#).unwrap().clone_named(), Some(NamedModel::Ghz));
        assert_eq!(
            ModelFile::from_json(r#"{"named":"cglmp","d":3,"schmidt":[0.6,0.52915026,0.6]}"#).unwrap().clone_named(),
            Some(NamedModel::Cglmp { d: 3, schmidt: Some(vec![0.6, 0.52915026, 0.6]) })
        );
        assert_eq!(
            ModelFile::from_json(r#"{"named":"ladder","rungs":4}"#).unwrap().clone_named(),
            Some(NamedModel::Ladder { rungs: 4, policy: LadderPolicy::Surviving })
        );
    }

    impl ModelFile {
        fn clone_named(&self) -> Option<NamedModel> {
            match self {
                ModelFile::Named(n) => Some(n.clone()),
                ModelFile::Explicit(_) => None,
            }
        }
    }
}
