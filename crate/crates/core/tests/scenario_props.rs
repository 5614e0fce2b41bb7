mod common;

use bell_core::{ProbabilityLaw, Scenario};
use common::{dirichlet, random_conditionals, random_pi, random_relabeling, rng};
use proptest::prelude::*;

fn scenario() -> impl Strategy<Value = Scenario> {
    (2usize..4, 2usize..4, 2usize..4).prop_map(|(p, q, r)| Scenario::new(p, q, r).unwrap())
}

fn assert_law_invariants(law: &ProbabilityLaw) -> Result<(), TestCaseError> {
    let s = law.scenario();
    prop_assert!(law.entries().iter().all(|&x| x >= 0.0));
    for sp in 0..s.setting_patterns() {
        let total: f64 = law.pattern_entries(sp).iter().sum();
        prop_assert!((total - law.pi().weight(sp)).abs() < 1e-12);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conditionals_round_trip(seed in any::<u64>(), s in scenario()) {
        let mut r = rng(seed);
        let pi = random_pi(&mut r, s);
        let cond = random_conditionals(&mut r, s);
        let law = ProbabilityLaw::from_conditionals(pi, &cond).unwrap();
        for (sp, c) in cond.iter().enumerate() {
            let back = law.conditional(sp).unwrap();
            for (x, y) in c.iter().zip(&back) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mixing_keeps_law_invariants(seed in any::<u64>(), s in scenario(), k in 1usize..5) {
        let mut r = rng(seed);
        let pi = random_pi(&mut r, s);
        let laws: Vec<ProbabilityLaw> = (0..k)
            .map(|_| ProbabilityLaw::from_conditionals(pi.clone(), &random_conditionals(&mut r, s)).unwrap())
            .collect();
        let weights = dirichlet(&mut r, k);
        let mixed = ProbabilityLaw::mix(&laws, &weights).unwrap();
        assert_law_invariants(&mixed)?;
        assert_law_invariants(&mixed.add_noise(0.3).unwrap())?;
    }

    #[test]
    fn signalling_check_ignores_labels(seed in any::<u64>(), s in scenario()) {
        let mut r = rng(seed);
        let pi = random_pi(&mut r, s);
        let law = ProbabilityLaw::from_conditionals(pi, &random_conditionals(&mut r, s)).unwrap();
        let relabel = random_relabeling(&mut r, s);
        let a = law.check_no_signalling(1e-10).max_violation;
        let b = law.relabeled(&relabel).unwrap().check_no_signalling(1e-10).max_violation;
        prop_assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}
