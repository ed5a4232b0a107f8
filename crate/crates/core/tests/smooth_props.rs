use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stlopt::checks::random_case;
use stlopt::smooth::{error_lower_bounds, smooth_max, smooth_min, smooth_robustness};
use stlopt::tree::eval_tree;

fn vectors() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 2..=8)
}

fn sharpness() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![0.5, 1.0, 5.0, 25.0])
}

fn exact(a: &[f64]) -> (f64, f64) {
    let max = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = a.iter().copied().fold(f64::INFINITY, f64::min);
    (max, min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn smooth_operators_under_approximate(a in vectors(), k in sharpness()) {
        let (max, min) = exact(&a);
        prop_assert!(smooth_max(&a, k).unwrap() <= max + 1e-12);
        prop_assert!(smooth_min(&a, k).unwrap() <= min + 1e-12);
    }

    #[test]
    fn errors_dominate_lower_bounds(a in vectors(), k in sharpness()) {
        let (max, min) = exact(&a);
        let lb = error_lower_bounds(&a, k).unwrap();
        let d_max = max - smooth_max(&a, k).unwrap();
        let d_min = min - smooth_min(&a, k).unwrap();
        prop_assert!(d_max >= lb.max - 1e-12, "{} < {}", d_max, lb.max);
        prop_assert!(d_min >= lb.min - 1e-12, "{} < {}", d_min, lb.min);
        // Entries within [-10, 10] and k ≤ 25 keep the bound representable.
        if lb.min > 1e-13 {
            prop_assert!(d_min > 0.0);
        }
    }

    #[test]
    fn two_entry_bounds_are_tight(a in -10.0f64..10.0, b in -10.0f64..10.0, k in sharpness()) {
        let v = [a, b];
        let (max, min) = exact(&v);
        let lb = error_lower_bounds(&v, k).unwrap();
        prop_assert!((max - smooth_max(&v, k).unwrap() - lb.max).abs() <= 1e-12);
        prop_assert!((min - smooth_min(&v, k).unwrap() - lb.min).abs() <= 1e-12);
    }

    #[test]
    fn permutation_invariant(a in vectors(), k in sharpness(), rot in 0usize..8) {
        let mut b = a.clone();
        b.rotate_left(rot % a.len());
        b.reverse();
        prop_assert!((smooth_max(&a, k).unwrap() - smooth_max(&b, k).unwrap()).abs() <= 1e-12);
        prop_assert!((smooth_min(&a, k).unwrap() - smooth_min(&b, k).unwrap()).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn surrogate_robustness_is_sound(seed in any::<u64>(), k in 0.3f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, tree, x) = random_case(&mut rng);
        prop_assert!(smooth_robustness(&tree, &x, k).unwrap() <= eval_tree(&tree, &x) + 1e-12);
    }
}
