mod support;

use passive_net::linalg::cond2;
use passive_net::passivity::{
    discrete_scattering_certificate, impedance_certificate, properly_impedance_passive, scattering_certificate, Verdict,
};
use passive_net::transforms::{external_cayley, internal_cayley, internal_reciprocal, ResistanceMatrix};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::{passive_impedance, Class};

fn class_of(k: u8) -> Class {
    [Class::Conservative, Class::Strict, Class::Active][k as usize % 3]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn verdicts_follow_the_construction(seed in any::<u64>(), n in 1usize..=10, k in 0u8..3, wide in any::<bool>()) {
        let m = if wide { 2 } else { 1 };
        let class = class_of(k);
        let z = passive_impedance(&mut ChaCha8Rng::seed_from_u64(seed), n, m, m, class);
        let v = impedance_certificate(&z).verdict;
        match class {
            Class::Conservative => prop_assert_eq!(v, Verdict::Conservative),
            Class::Strict => prop_assert!(matches!(v, Verdict::StrictlyPassive | Verdict::Passive)),
            Class::Active => prop_assert_eq!(v, Verdict::NotPassive),
        }
        prop_assert_eq!(properly_impedance_passive(&z).proper, class == Class::Strict);
    }

    #[test]
    fn transforms_preserve_the_verdict(seed in any::<u64>(), n in 1usize..=10, k in 0u8..3, r in 0.2f64..5.0, sigma in 0.5f64..5.0) {
        let class = class_of(k);
        let z = passive_impedance(&mut ChaCha8Rng::seed_from_u64(seed), n, 1, 1, class);
        let passive = class != Class::Active;
        let s = external_cayley(&z, &ResistanceMatrix::scalar(1, r, 1, r).unwrap()).unwrap();
        prop_assert_eq!(scattering_certificate(&s).is_passive(), passive);
        if let Ok(phi) = internal_cayley(&s, sigma) {
            prop_assert_eq!(discrete_scattering_certificate(&phi).is_passive(), passive);
        }
        if cond2(&z.a) < 1e8 {
            prop_assert_eq!(impedance_certificate(&internal_reciprocal(&z).unwrap()).is_passive(), passive);
        }
    }
}
