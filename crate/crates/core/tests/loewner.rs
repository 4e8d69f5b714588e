use num_complex::Complex64;
use passive_net::feedback::regularize;
use passive_net::linalg::cond2;
use passive_net::loewner::{
    default_scheme, loewner_matrices, passive_coordinates, piston_impedance, realify, reduce, sample_piston, KypShift,
    PistonParams,
};
use passive_net::passivity::{impedance_certificate, Verdict};
use passive_net::system::eigenvalues;
use proptest::prelude::*;

fn piston() -> PistonParams {
    PistonParams::new(0.01, 1.225, 343.0).unwrap()
}

fn piston_model(k: usize, seed: u64) -> passive_net::loewner::ReducedModel {
    let p = piston();
    let scheme = default_scheme(&p, 150, seed).unwrap();
    let set = sample_piston(&scheme, &p).unwrap();
    let pencil = loewner_matrices(&scheme, &set.values_mu, &set.values_lambda).unwrap();
    reduce(&realify(&pencil).unwrap(), k).unwrap().reduced.unwrap()
}

#[test]
fn order_sixteen_piston_model_is_accurate_up_to_20_khz() {
    let p = piston();
    let red = piston_model(16, 1);
    assert!(red.condition <= 1e12, "cond {:e}", red.condition);
    let mut worst = 0.0_f64;
    for j in 0..500 {
        let f = 40.0 + (20_000.0 - 40.0) * j as f64 / 499.0;
        let s = Complex64::new(0.0, 2.0 * std::f64::consts::PI * f);
        let z = piston_impedance(s, &p).unwrap();
        let h = red.system.transfer(s).unwrap()[(0, 0)];
        worst = worst.max((h - z).norm() / z.norm());
    }
    assert!(worst <= 1e-4, "max relative error {worst:e}");
}

#[test]
fn order_sixteen_piston_model_is_stable() {
    let red = piston_model(16, 1);
    assert!(eigenvalues(&red.system.a).iter().all(|l| l.re < 0.0));
}

#[test]
fn regularised_piston_model_has_passive_coordinates() {
    let p = piston();
    let red = piston_model(16, 1);
    let reg = regularize(&red.system, 0.194 * p.z0()).unwrap();
    let fixed = passive_coordinates(&reg, KypShift::default()).unwrap();
    assert_eq!(impedance_certificate(&fixed).verdict, Verdict::StrictlyPassive);
}

#[test]
fn piston_loewner_matrix_is_invertible() {
    let p = piston();
    let scheme = default_scheme(&p, 8, 3).unwrap();
    let set = sample_piston(&scheme, &p).unwrap();
    let r = realify(&loewner_matrices(&scheme, &set.values_mu, &set.values_lambda).unwrap()).unwrap();
    assert!(cond2(&r.l_mat) <= 1e12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn full_order_interpolant_reproduces_the_samples(seed in any::<u64>(), half in 1usize..4) {
        let p = piston();
        let scheme = default_scheme(&p, 2 * half, seed).unwrap();
        let set = sample_piston(&scheme, &p).unwrap();
        let r = realify(&loewner_matrices(&scheme, &set.values_mu, &set.values_lambda).unwrap()).unwrap();
        prop_assume!(cond2(&r.l_mat) <= 1e8);
        let red = reduce(&r, scheme.m()).unwrap().reduced.unwrap();
        let pts = scheme.mu.iter().zip(&set.values_mu).chain(scheme.lambda.iter().zip(&set.values_lambda));
        for (&s, &z) in pts {
            let h = red.system.transfer(s).unwrap()[(0, 0)];
            prop_assert!((h - z).norm() <= 1e-8 * z.norm(), "{} vs {}", h, z);
        }
    }

    #[test]
    fn realification_preserves_the_transfer(seed in any::<u64>(), re in -1e5f64..1e5, im in 1e3f64..3e5) {
        let p = piston();
        let scheme = default_scheme(&p, 4, seed).unwrap();
        let set = sample_piston(&scheme, &p).unwrap();
        let pencil = loewner_matrices(&scheme, &set.values_mu, &set.values_lambda).unwrap();
        let r = realify(&pencil).unwrap();
        let s = Complex64::new(re, im);
        let (a, b) = (pencil.transfer(s).unwrap(), r.transfer(s).unwrap());
        prop_assert!((a - b).norm() <= 1e-10 * a.norm().max(1.0));
    }
}
