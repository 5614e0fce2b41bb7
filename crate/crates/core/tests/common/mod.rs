// Random instances and an independent projected-gradient oracle, shared by
// the property tests and the acceptance target.
#![allow(dead_code)]

use bell_core::classical::{enumerate_vertices, vertex_law};
use bell_core::experiments::chsh_law;
use bell_core::quantum::{born_law, ProjectorFamily, QuantumModel};
use bell_core::scenario::Relabeling;
use bell_core::tensor::{ComplexMatrix, ComplexVector, C64};
use bell_core::{ProbabilityLaw, Scenario, SettingDistribution};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

pub fn random_vector(rng: &mut ChaCha8Rng, d: usize) -> ComplexVector {
    ComplexVector::new((0..d).map(|_| C64::new(gaussian(rng), gaussian(rng))).collect()).normalized()
}

/// Haar-ish unitary by Gram-Schmidt on Gaussian columns.
pub fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> ComplexMatrix {
    let mut cols: Vec<ComplexVector> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v = random_vector(rng, d);
        for c in &cols {
            let k = c.inner(&v);
            v.axpy(-k, c);
        }
        if v.norm() > 1e-6 {
            cols.push(v.normalized());
        }
    }
    ComplexMatrix::from_columns(&cols).unwrap()
}

/// Positive weights on every setting pattern.
pub fn random_pi(rng: &mut ChaCha8Rng, s: Scenario) -> SettingDistribution {
    let w = dirichlet(rng, s.setting_patterns());
    SettingDistribution::new(s, w.iter().map(|x| 0.5 * x + 0.5 / w.len() as f64).collect()).unwrap()
}

pub fn dirichlet(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -rng.gen_range(f64::EPSILON..1.0f64).ln()).collect();
    let t: f64 = e.iter().sum();
    e.iter().map(|x| x / t).collect()
}

/// Rank-one projective measurements in random bases on a random pure state,
/// local dimension = number of outcomes.
pub fn random_model(rng: &mut ChaCha8Rng, s: Scenario) -> QuantumModel {
    let d = s.outcomes;
    let state = random_vector(rng, d.pow(s.parties as u32));
    let measurements = (0..s.parties)
        .map(|_| (0..s.settings).map(|_| ProjectorFamily::from_basis(&random_unitary(rng, d)).unwrap()).collect())
        .collect();
    QuantumModel::new(s, vec![d; s.parties], state, measurements).unwrap()
}

pub fn random_quantum_law(rng: &mut ChaCha8Rng, s: Scenario, pi: &SettingDistribution) -> ProbabilityLaw {
    born_law(&random_model(rng, s), pi).unwrap()
}

/// A 2x2x2 law that is often non-local: CHSH mixed with a random quantum law.
pub fn chsh_blend(r: &mut ChaCha8Rng) -> ProbabilityLaw {
    let s = Scenario::new(2, 2, 2).unwrap();
    let pi = SettingDistribution::uniform(s);
    let other = random_quantum_law(r, s, &pi);
    let t = r.gen_range(0.0..0.6);
    ProbabilityLaw::mix(&[chsh_law().unwrap(), other], &[1.0 - t, t]).unwrap()
}

/// Arbitrary (generally signalling) conditionals.
pub fn random_conditionals(rng: &mut ChaCha8Rng, s: Scenario) -> Vec<Vec<f64>> {
    (0..s.setting_patterns()).map(|_| dirichlet(rng, s.outcome_patterns())).collect()
}

fn permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

pub fn random_relabeling(rng: &mut ChaCha8Rng, s: Scenario) -> Relabeling {
    Relabeling {
        parties: permutation(rng, s.parties),
        settings: (0..s.parties).map(|_| permutation(rng, s.settings)).collect(),
        outcomes: (0..s.parties)
            .map(|_| (0..s.settings).map(|_| permutation(rng, s.outcomes)).collect())
            .collect(),
    }
}

/// `sum q log2(q / p)` written out independently of the library.
pub fn kl_bits(q: &[f64], p: &[f64]) -> f64 {
    q.iter().zip(p).filter(|(&a, _)| a > 0.0).map(|(&a, &b)| a * (a / b).log2()).sum()
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (k, &x) in u.iter().enumerate() {
        acc += x;
        let t = (acc - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Minimum over mixture weights of `D(q : sum_v w_v v)`, by projected
/// gradient descent with Armijo backtracking from `starts` random points
/// (plus the barycenter). Vertices are enumerated explicitly.
pub fn oracle_divergence(q: &ProbabilityLaw, starts: usize, seed: u64) -> f64 {
    let pi = q.pi();
    let cols: Vec<Vec<f64>> =
        enumerate_vertices(q.scenario()).unwrap().map(|v| vertex_law(&v, pi).unwrap().entries().to_vec()).collect();
    let n = cols.len();
    let m = q.entries().len();
    let qv = q.entries();
    let mix = |w: &[f64]| -> Vec<f64> {
        let mut p = vec![0.0; m];
        for (c, &x) in cols.iter().zip(w) {
            for i in 0..m {
                p[i] += x * c[i];
            }
        }
        p
    };
    let f = |w: &[f64]| -> f64 {
        let p = mix(w);
        if qv.iter().zip(&p).any(|(&a, &b)| a > 0.0 && b <= 0.0) {
            return f64::INFINITY;
        }
        kl_bits(qv, &p)
    };
    let grad = |w: &[f64]| -> Vec<f64> {
        let p = mix(w);
        let ln2 = std::f64::consts::LN_2;
        cols.iter()
            .map(|c| -(0..m).filter(|&i| qv[i] > 0.0).map(|i| qv[i] * c[i] / p[i]).sum::<f64>() / ln2)
            .collect()
    };

    let mut rng = rng(seed);
    let mut best = f64::INFINITY;
    for start in 0..=starts {
        let mut w = if start == 0 { vec![1.0 / n as f64; n] } else { dirichlet(&mut rng, n) };
        let mut fw = f(&w);
        let mut step = 1.0;
        for _ in 0..20_000 {
            let g = grad(&w);
            // Frank-Wolfe gap bounds the suboptimality of a convex objective.
            let gmin = g.iter().cloned().fold(f64::INFINITY, f64::min);
            let gap: f64 = w.iter().zip(&g).map(|(x, gi)| x * gi).sum::<f64>() - gmin;
            if gap < 1e-10 {
                break;
            }
            let mut moved = false;
            while step > 1e-14 {
                let cand = project_simplex(&w.iter().zip(&g).map(|(x, gi)| x - step * gi).collect::<Vec<_>>());
                let fc = f(&cand);
                let decrease: f64 = g.iter().zip(cand.iter().zip(&w)).map(|(gi, (c, x))| gi * (x - c)).sum();
                if fc.is_finite() && fc <= fw - 1e-4 * decrease {
                    w = cand;
                    fw = fc;
                    moved = true;
                    step *= 2.0;
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        best = best.min(fw);
    }
    best.max(0.0)
}
