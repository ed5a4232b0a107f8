use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stlopt::checks::{random_formula, random_predicate, random_raw_formula, random_trajectory};
use stlopt::formula::{eval_robustness, Formula, Predicate};
use stlopt::trajectory::Trajectory;

fn preds(rng: &mut ChaCha8Rng) -> Vec<Predicate> {
    (0..4).map(|i| random_predicate(rng, &format!("p{i}"))).collect()
}

/// Boolean semantics of a formula in negation normal form, with `h ≥ 0`
/// atoms and the same until convention as the robustness.
fn holds(f: &Formula, x: &Trajectory, t: usize) -> bool {
    match f {
        Formula::Pred(p) => p.eval(x.state(t)) >= 0.0,
        Formula::Not(g) => !holds(g, x, t),
        Formula::And(fs) => fs.iter().all(|g| holds(g, x, t)),
        Formula::Or(fs) => fs.iter().any(|g| holds(g, x, t)),
        Formula::Always(i, g) => i.steps().all(|s| holds(g, x, t + s)),
        Formula::Eventually(i, g) => i.steps().any(|s| holds(g, x, t + s)),
        Formula::Until(i, a, b) => i
            .steps()
            .any(|s| holds(b, x, t + s) && (0..s).all(|r| holds(a, x, t + r))),
    }
}

/// Reverses the operands of every conjunction and disjunction, recursively,
/// after shuffling the top level.
fn permuted(f: &Formula, rng: &mut ChaCha8Rng) -> Formula {
    match f {
        Formula::Pred(_) => f.clone(),
        Formula::Not(g) => Formula::not(permuted(g, rng)),
        Formula::And(fs) | Formula::Or(fs) => {
            let mut parts: Vec<Formula> = fs.iter().map(|g| permuted(g, rng)).collect();
            parts.shuffle(rng);
            if matches!(f, Formula::And(_)) {
                Formula::And(parts)
            } else {
                Formula::Or(parts)
            }
        }
        Formula::Always(i, g) => Formula::always(*i, permuted(g, rng)),
        Formula::Eventually(i, g) => Formula::eventually(*i, permuted(g, rng)),
        Formula::Until(i, a, b) => Formula::until(*i, permuted(a, rng), permuted(b, rng)),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn sign_agrees_with_boolean_semantics(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = preds(&mut rng);
        let f = random_formula(&mut rng, &p, 4, 20);
        let x = random_trajectory(&mut rng, f.horizon());
        let rho = eval_robustness(&f, &x, 0).unwrap();
        prop_assert_eq!(rho >= 0.0, holds(&f, &x, 0), "rho {} for {}", rho, f);
    }

    #[test]
    fn nnf_preserves_robustness(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = preds(&mut rng);
        let raw = random_raw_formula(&mut rng, &p, 4, 20);
        let nnf = raw.to_nnf().unwrap();
        prop_assert!(nnf.is_nnf());
        let x = random_trajectory(&mut rng, raw.horizon());
        for t in 0..=x.horizon() - raw.horizon() {
            prop_assert_eq!(eval_robustness(&raw, &x, t).unwrap(), eval_robustness(&nnf, &x, t).unwrap());
        }
    }

    #[test]
    fn and_or_are_permutation_invariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = preds(&mut rng);
        let f = random_formula(&mut rng, &p, 4, 20);
        let g = permuted(&f, &mut rng);
        let x = random_trajectory(&mut rng, f.horizon());
        prop_assert_eq!(eval_robustness(&f, &x, 0).unwrap(), eval_robustness(&g, &x, 0).unwrap());
    }

    #[test]
    fn display_parses_back(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = preds(&mut rng);
        let f = random_formula(&mut rng, &p, 3, 12);
        let text = f.to_string();
        let parsed = stlopt::formula::parse(&text).unwrap();
        prop_assert_eq!(parsed.to_string(), text);
    }
}
