use passive_net::passivity::{impedance_certificate, Verdict};
use passive_net::system::eigenvalues;
use passive_net::websterfem::{assemble, assemble_matrices, AreaFunction};
use std::f64::consts::PI;

const C: f64 = 343.0;
const L: f64 = 0.175;

fn resonances(n: usize, count: usize) -> Vec<f64> {
    let area = AreaFunction::uniform(L, 1e-4).unwrap();
    let model = assemble(&area, n, C, 1.2).unwrap();
    let mut im: Vec<f64> = eigenvalues(&model.system.a).iter().map(|z| z.im).filter(|x| *x > 1.0).collect();
    im.sort_by(f64::total_cmp);
    im.truncate(count);
    im
}

#[test]
fn uniform_tube_resonances_match_half_wavelength_series() {
    let im = resonances(99, 5);
    for (k, w) in im.iter().enumerate() {
        let exact = 2.0 * PI * (k + 1) as f64 * C / (2.0 * L);
        assert!((w - exact).abs() / exact < 1e-3, "mode {}: {w} vs {exact}", k + 1);
    }
}

#[test]
fn first_resonance_converges_monotonically() {
    let exact = 2.0 * PI * C / (2.0 * L);
    let errs: Vec<f64> = [8, 16, 32, 64].iter().map(|&n| (resonances(n, 1)[0] - exact).abs() / exact).collect();
    for w in errs.windows(2) {
        assert!(w[1] < w[0], "{errs:?}");
        assert!(w[0] / w[1] >= 4.0 || w[1] < 1e-12, "order below 2: {errs:?}");
    }
}

#[test]
fn matrices_are_symmetric_and_stiffness_has_one_dimensional_kernel() {
    let area = AreaFunction::new(vec![0.0, 0.05, 0.175], vec![3e-4, 1e-4, 2e-4]).unwrap();
    let (m, k) = assemble_matrices(&area, 20, C).unwrap();
    assert!((&m - m.transpose()).amax() <= 1e-13 * m.amax());
    assert!((&k - k.transpose()).amax() <= 1e-13 * k.amax());
    let em = m.clone().symmetric_eigen().eigenvalues;
    assert!(em.min() > 0.0);
    let ek = k.clone().symmetric_eigen().eigenvalues;
    let tol = 1e-10 * ek.amax();
    assert_eq!(ek.iter().filter(|l| l.abs() <= tol).count(), 1);
    assert!(ek.min() >= -tol);
}

#[test]
fn waveguide_has_state_dimension_four_n_and_is_conservative() {
    let area = AreaFunction::sections(&[(0.09, 8e-4), (0.085, PI * 1e-4)], 1e-3).unwrap();
    let model = assemble(&area, 99, C, 1.2).unwrap();
    assert_eq!(model.system.n(), 396);
    assert_eq!(model.system.d, nalgebra::DMatrix::zeros(2, 2));
    assert_eq!(model.system.b, model.system.c.transpose());
    let cert = impedance_certificate(&model.system);
    assert_eq!(cert.verdict, Verdict::Conservative);
    assert!(cert.margin.abs() <= 1e-8 * cert.test_matrix_norm);
}
