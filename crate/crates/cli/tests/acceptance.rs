//! One PASS/FAIL line per acceptance criterion, tolerances as specified.
//!
//! Criteria 1, 2 and the all-pairs half of 7 pin reference values that the
//! computation does not reproduce. Their lines report FAIL, and their tests
//! assert the independently checked values instead (see README).

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::io::Write;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use bell_core::classical::{
    canonicalize, certify, cglmp_inequality_uniform, enumerate_vertices, vertex_law, LadderPolicy, CERTIFY_SLACK,
};
use bell_core::experiments::{chsh_law, ghz_law, prepare, Named, SchmidtChoice};
use bell_core::quantum::{born_law, cglmp_model, ghz_model, ghz_settings, ladder_model, maximally_entangled};
use bell_core::quantum::{with_detection_efficiency, SchmidtState};
use bell_core::strength::{
    discounted_strength, extract_face, inf_divergence, ladder_sweep, optimize_schmidt, LadderRun, OuterConfig,
    SolverConfig, StrengthResult,
};
use bell_core::{ProbabilityLaw, Scenario, SettingDistribution};
use common::{chsh_blend, oracle_divergence, random_quantum_law, rng};
use serde_json::Value;

const CHSH_REFERENCE: f64 = 0.0423;
const GHZ_REFERENCE: f64 = 0.400;

fn report(criterion: u32, pass: bool, detail: &str) {
    // Bypass the test harness's capture so the line always shows.
    let verdict = if pass { "PASS" } else { "FAIL" };
    writeln!(std::io::stdout().lock(), "acceptance {criterion:>2}: {verdict} {detail}").unwrap();
}

fn run_cli(args: &[&str]) -> (Value, Duration) {
    let t = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_bell")).args(args).output().unwrap();
    let elapsed = t.elapsed();
    assert!(out.status.success(), "bell {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    (serde_json::from_slice(&out.stdout).unwrap(), elapsed)
}

/// `(max_v g_v - 1, max over weighted atoms |g_v - 1|)` with every vertex enumerated.
fn kkt(q: &ProbabilityLaw, res: &StrengthResult) -> (f64, f64) {
    let p = res.closest_law.entries();
    let mut slack = f64::NEG_INFINITY;
    let mut support = 0.0f64;
    for v in enumerate_vertices(q.scenario()).unwrap() {
        let law = vertex_law(&v, q.pi()).unwrap();
        let g: f64 = q
            .entries()
            .iter()
            .zip(law.entries())
            .zip(p)
            .filter(|((a, _), _)| **a > 0.0)
            .map(|((a, x), b)| a * x / b)
            .sum();
        slack = slack.max(g - 1.0);
        if res.mixture.iter().any(|&(i, w)| i == v.index() && w > 1e-12) {
            support = support.max((g - 1.0).abs());
        }
    }
    (slack, support)
}

fn schmidt_runs() -> &'static Vec<(SchmidtState, StrengthResult, f64, Duration)> {
    static RUNS: OnceLock<Vec<(SchmidtState, StrengthResult, f64, Duration)>> = OnceLock::new();
    RUNS.get_or_init(|| {
        [3, 4]
            .iter()
            .map(|&d| {
                let t = Instant::now();
                let (state, res) = optimize_schmidt(d, &OuterConfig::default()).unwrap();
                let elapsed = t.elapsed();
                let flat = prepare(&Named::Cglmp { d, schmidt: SchmidtChoice::MaximallyEntangled }, &OuterConfig::default())
                    .unwrap();
                let flat_d = inf_divergence(&flat.law, &SolverConfig::default()).unwrap().divergence;
                (state, res, flat_d, elapsed)
            })
            .collect()
    })
}

fn ladder_runs() -> &'static (Vec<LadderRun>, Duration) {
    static RUNS: OnceLock<(Vec<LadderRun>, Duration)> = OnceLock::new();
    RUNS.get_or_init(|| {
        let t = Instant::now();
        let runs = ladder_sweep(4, &OuterConfig::default()).unwrap();
        (runs, t.elapsed())
    })
}

fn ladder_law(run: &LadderRun) -> ProbabilityLaw {
    let pi = bell_core::classical::ladder_settings(run.rungs, run.policy).unwrap();
    born_law(&ladder_model(&run.alice, &run.bob).unwrap(), &pi).unwrap()
}

fn cglmp_law(d: usize, state: &SchmidtState) -> ProbabilityLaw {
    let m = cglmp_model(d, state).unwrap();
    born_law(&m, &SettingDistribution::uniform(m.scenario())).unwrap()
}

#[test]
fn criterion_01_chsh_strength() {
    let (out, elapsed) = run_cli(&["strength", "--named", "chsh"]);
    let d = out["divergence_bits"].as_f64().unwrap();
    let pass = (d - CHSH_REFERENCE).abs() <= 5e-4 && elapsed < Duration::from_secs(60);
    report(1, pass, &format!("CHSH D = {d:.7} bits (target {CHSH_REFERENCE} +- 5e-4), {elapsed:.2?}"));
    // The reference value is not reproduced; pin the independently verified one.
    let oracle = oracle_divergence(&chsh_law().unwrap(), 20, 1);
    assert!((d - oracle).abs() < 1e-6, "solver {d} vs oracle {oracle}");
    assert!((d - 0.0462738469).abs() < 1e-9);
    assert!(elapsed < Duration::from_secs(60));
}

#[test]
fn criterion_02_ghz_strength() {
    let (out, elapsed) = run_cli(&["strength", "--named", "ghz"]);
    let d = out["divergence_bits"].as_f64().unwrap();
    let pass = (d - GHZ_REFERENCE).abs() <= 1e-3 && elapsed < Duration::from_secs(60);
    report(2, pass, &format!("GHZ D = {d:.7} bits (target {GHZ_REFERENCE} +- 1e-3), {elapsed:.2?}"));
    // Every vertex misses at least one of the four parity constraints, which
    // forces D >= log2(4/3); the symmetric mixture attains it.
    assert!((d - (4.0f64 / 3.0).log2()).abs() < 1e-9);
    let oracle = oracle_divergence(&ghz_law().unwrap(), 20, 2);
    assert!((d - oracle).abs() < 1e-6, "solver {d} vs oracle {oracle}");
    assert!(elapsed < Duration::from_secs(60));
}

#[test]
fn criterion_03_ghz_discount() {
    let v = discounted_strength(GHZ_REFERENCE, 4, 0.5).unwrap();
    let pass = v == 0.05;
    report(3, pass, &format!("discounted_strength(0.400, 4, 0.5) = {v}"));
    assert!(pass);
}

#[test]
fn criterion_04_ghz_law() {
    let law = born_law(&ghz_model().unwrap(), &ghz_settings()).unwrap();
    let s = law.scenario();
    // 1-based setting labels; outcome 0 is +1.
    let cases = [([1, 2, 2], 1.0), ([2, 1, 2], 1.0), ([2, 2, 1], 1.0), ([1, 1, 1], -1.0)];
    let mut worst: f64 = 0.0;
    for (settings, product) in cases {
        let sp = s.encode_settings(&settings.iter().map(|x| x - 1).collect::<Vec<_>>());
        let cond = law.conditional(sp).unwrap();
        let mass: f64 = (0..s.outcome_patterns())
            .filter(|&op| {
                let minus = s.decode_outcomes(op).iter().filter(|&&o| o == 1).count();
                (if minus % 2 == 0 { 1.0 } else { -1.0 }) == product
            })
            .map(|op| cond[op])
            .sum();
        worst = worst.max((mass - 1.0).abs());
    }
    let pass = worst <= 1e-12;
    report(4, pass, &format!("max |P(predicted parity) - 1| = {worst:.1e}"));
    assert!(pass);
}

#[test]
fn criterion_05_cglmp_violation() {
    let mut pass = true;
    let mut detail = Vec::new();
    for d in 2..=5 {
        let t = Instant::now();
        let ineq = cglmp_inequality_uniform(d).unwrap();
        let certified = certify(&ineq, CERTIFY_SLACK).is_ok();
        let violation = ineq.violation(&cglmp_law(d, &maximally_entangled(d))).unwrap();
        let elapsed = t.elapsed();
        pass &= certified && violation > 0.0 && elapsed < Duration::from_secs(30);
        detail.push(format!("d={d}: {violation:.5} ({elapsed:.1?})"));
    }
    report(5, pass, &format!("violations {}", detail.join(", ")));
    assert!(pass);
}

#[test]
fn criterion_06_u_shape() {
    let mut pass = true;
    let mut detail = Vec::new();
    for (state, res, flat, elapsed) in schmidt_runs() {
        let c = state.coefficients();
        let d = c.len();
        let symmetric = (0..d).all(|i| (c[i] - c[d - 1 - i]).abs() <= 1e-4);
        let middle = c[(d - 1) / 2].min(c[d / 2]);
        let gain = res.divergence - flat;
        pass &= symmetric && c[0] > middle && gain > 1e-5 && res.converged;
        detail.push(format!("d={d}: c={c:.5?} D={:.6} (+{gain:.2e} over maxent, {elapsed:.1?})", res.divergence));
    }
    report(6, pass, &detail.join("; "));
    assert!(pass);
}

#[test]
fn criterion_07_ladder_ordering() {
    let (runs, elapsed) = ladder_runs();
    let at = |policy| runs.iter().find(|r| r.rungs == 4 && r.policy == policy).unwrap().result.divergence;
    let (surviving, all) = (at(LadderPolicy::Surviving), at(LadderPolicy::All));
    let in_time = *elapsed < Duration::from_secs(600);
    let pass = surviving > CHSH_REFERENCE && all < CHSH_REFERENCE && in_time;
    report(
        7,
        pass,
        &format!("K=4 surviving D={surviving:.6}, all-25 D={all:.6} (threshold {CHSH_REFERENCE}), sweep {elapsed:.1?}"),
    );
    // The surviving half and the runtime hold as stated. The all-pairs
    // optimum sits just above the reference but below the computed CHSH value.
    let chsh = inf_divergence(&chsh_law().unwrap(), &SolverConfig::default()).unwrap().divergence;
    assert!(surviving > CHSH_REFERENCE && surviving > chsh);
    assert!(all < chsh);
    assert!(in_time);
}

#[test]
fn criterion_08_kkt_certificates() {
    let cfg = SolverConfig::default();
    let mut cases: Vec<(String, ProbabilityLaw, StrengthResult)> = Vec::new();
    for (name, law) in [("chsh", chsh_law().unwrap()), ("ghz", ghz_law().unwrap())] {
        let res = inf_divergence(&law, &cfg).unwrap();
        cases.push((name.into(), law, res));
    }
    for d in 2..=5 {
        let law = cglmp_law(d, &maximally_entangled(d));
        let res = inf_divergence(&law, &cfg).unwrap();
        cases.push((format!("cglmp{d}"), law, res));
    }
    for (state, res, _, _) in schmidt_runs() {
        cases.push((format!("schmidt{}", state.d()), cglmp_law(state.d(), state), res.clone()));
    }
    for run in &ladder_runs().0 {
        cases.push((format!("ladder{}-{:?}", run.rungs, run.policy), ladder_law(run), run.result.clone()));
    }
    let mut pass = true;
    let (mut worst_slack, mut worst_support) = (f64::NEG_INFINITY, 0.0f64);
    for (name, law, res) in &cases {
        assert!(res.converged, "{name} did not converge");
        let (slack, support) = kkt(law, res);
        pass &= slack <= 1e-9 && support <= 1e-8;
        worst_slack = worst_slack.max(slack);
        worst_support = worst_support.max(support);
    }
    report(
        8,
        pass,
        &format!("{} solves: max slack {worst_slack:.1e}, max support deviation {worst_support:.1e}", cases.len()),
    );
    assert!(pass);
}

#[test]
fn criterion_09_oracle_equivalence() {
    let s = Scenario::new(2, 2, 2).unwrap();
    let pi = SettingDistribution::uniform(s);
    let mut r = rng(20_240_909);
    let mut worst: f64 = 0.0;
    let mut nonlocal = 0;
    // 25 random laws as specified, then 25 CHSH blends so that most
    // comparisons are away from zero.
    for i in 0..50 {
        let q = if i < 25 { random_quantum_law(&mut r, s, &pi) } else { chsh_blend(&mut r) };
        let d = inf_divergence(&q, &SolverConfig::default()).unwrap().divergence;
        let oracle = oracle_divergence(&q, 20, i);
        worst = worst.max((d - oracle).abs());
        nonlocal += usize::from(d > 1e-7);
    }
    let pass = worst <= 1e-6;
    report(9, pass, &format!("25 random laws + 25 CHSH blends ({nonlocal} non-local): max |solver - oracle| = {worst:.1e}"));
    assert!(pass);
}

#[test]
fn criterion_10_canonicalization() {
    let all_zero_outcome = |s: Scenario, i: usize| i % s.outcome_patterns() == 0;
    let chsh = canonicalize(&cglmp_inequality_uniform(2).unwrap()).unwrap();
    let s = chsh.scenario();
    let chsh_ok = chsh.bound() == 0.0
        && chsh.coefficients().iter().enumerate().all(|(i, c)| !all_zero_outcome(s, i) || c.abs() <= 1e-12);

    let lossy = with_detection_efficiency(&chsh_law().unwrap(), 0.9).unwrap();
    let res = inf_divergence(&lossy, &SolverConfig::default()).unwrap();
    let face = extract_face(&lossy, &res).unwrap();
    let fs = face.inequality.scenario();
    let face_bound = face.inequality.bound();
    let face_ok = face_bound.abs() <= 1e-8
        && face.inequality.coefficients().iter().enumerate().all(|(i, c)| !all_zero_outcome(fs, i) || c.abs() <= 1e-12);

    let mut r = rng(10);
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let (raw, canonical) = if k % 2 == 0 {
            (cglmp_inequality_uniform(2).unwrap(), chsh.clone())
        } else {
            (face.raw.clone(), face.inequality.clone())
        };
        let law = random_quantum_law(&mut r, raw.scenario(), raw.pi());
        let a = raw.evaluate(&law).unwrap() - raw.bound();
        let b = canonical.evaluate(&law).unwrap() - canonical.bound();
        worst = worst.max((a - b).abs());
    }
    let pass = chsh_ok && face_ok && worst <= 1e-12;
    report(
        10,
        pass,
        &format!(
            "CHSH canonical ok={chsh_ok}, eta=0.9 face ok={face_ok} (bound {face_bound:.1e}), raw/canonical gap {worst:.1e}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_11_no_signalling() {
    let mut laws = vec![chsh_law().unwrap(), ghz_law().unwrap()];
    for d in 2..=5 {
        laws.push(cglmp_law(d, &maximally_entangled(d)));
    }
    for (state, _, _, _) in schmidt_runs() {
        laws.push(cglmp_law(state.d(), state));
    }
    for run in &ladder_runs().0 {
        laws.push(ladder_law(run));
    }
    laws.push(with_detection_efficiency(&chsh_law().unwrap(), 0.9).unwrap());
    let s = Scenario::new(2, 2, 2).unwrap();
    let mut r = rng(20_240_909);
    for _ in 0..25 {
        laws.push(random_quantum_law(&mut r, s, &SettingDistribution::uniform(s)));
    }
    let worst = laws.iter().map(|l| l.check_no_signalling(1e-10).max_violation).fold(0.0, f64::max);
    let pass = worst <= 1e-10;
    report(11, pass, &format!("{} Born laws: max signalling {worst:.1e}", laws.len()));
    assert!(pass);
}
