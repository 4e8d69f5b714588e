mod support;

use num_complex::Complex64;
use passive_net::system::TransferEvaluator;
use passive_net::transforms::{
    bottom_inversion, chain_transform, external_cayley, full_inversion, hybrid_transform, internal_cayley,
    inverse_chain, inverse_external_cayley, inverse_hybrid, inverse_internal_cayley, output_flip, sign_reversal,
    top_inversion, ResistanceMatrix,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::{random_system, sys_dev};

fn system(seed: u64, n: usize, wide: bool) -> passive_net::StateSpaceSystem {
    let half = if wide { 2 } else { 1 };
    random_system(&mut ChaCha8Rng::seed_from_u64(seed), n, half, half)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn involutions_recover_the_system(seed in any::<u64>(), n in 1usize..=12, wide in any::<bool>()) {
        let s = system(seed, n, wide);
        prop_assert!(sys_dev(&full_inversion(&full_inversion(&s).unwrap()).unwrap(), &s) <= 1e-10);
        prop_assert!(sys_dev(&output_flip(&output_flip(&s).unwrap()).unwrap(), &s) == 0.0);
        prop_assert!(sys_dev(&top_inversion(&top_inversion(&s).unwrap()).unwrap(), &s) <= 1e-10);
        prop_assert!(sys_dev(&sign_reversal(&sign_reversal(&s)), &s) == 0.0);
    }

    #[test]
    fn bottom_inversion_composes_top_and_full(seed in any::<u64>(), n in 1usize..=8, wide in any::<bool>()) {
        let s = system(seed, n, wide);
        let bi = bottom_inversion(&s).unwrap();
        let ti_fi = top_inversion(&full_inversion(&s).unwrap()).unwrap();
        let fi_ti = full_inversion(&top_inversion(&s).unwrap()).unwrap();
        prop_assert!(sys_dev(&bi, &ti_fi) <= 1e-10);
        prop_assert!(sys_dev(&bi, &fi_ti) <= 1e-10);
    }

    #[test]
    fn paired_transforms_invert_each_other(seed in any::<u64>(), n in 1usize..=12, wide in any::<bool>(), sigma in 0.5f64..5.0) {
        let s = system(seed, n, wide);
        let r = ResistanceMatrix::scalar(s.m1, 1.0, s.m2, 1.0).unwrap();
        prop_assert!(sys_dev(&inverse_internal_cayley(&internal_cayley(&s, sigma).unwrap()).unwrap(), &s) <= 1e-10);
        prop_assert!(sys_dev(&inverse_external_cayley(&external_cayley(&s, &r).unwrap(), &r).unwrap(), &s) <= 1e-10);
        prop_assert!(sys_dev(&inverse_chain(&chain_transform(&s).unwrap()).unwrap(), &s) <= 1e-10);
        prop_assert!(sys_dev(&inverse_hybrid(&hybrid_transform(&s).unwrap()).unwrap(), &s) <= 1e-10);
    }

    #[test]
    fn internal_cayley_maps_the_transfer(seed in any::<u64>(), n in 1usize..=8, sigma in 0.5f64..5.0, re in -0.9f64..0.9, im in -0.9f64..0.9) {
        let z = Complex64::new(re, im);
        prop_assume!(z.norm() < 0.95);
        let s = system(seed, n, false);
        let phi = internal_cayley(&s, sigma).unwrap();
        let g = TransferEvaluator::new(&s).eval((Complex64::new(1.0, 0.0) - z) / (Complex64::new(1.0, 0.0) + z) * sigma).unwrap();
        let gd = phi.transfer(z).unwrap();
        let scale = g.iter().map(|x| x.norm()).fold(1.0, f64::max);
        prop_assert!((g - gd).iter().all(|x| x.norm() <= 1e-9 * scale));
    }
}
