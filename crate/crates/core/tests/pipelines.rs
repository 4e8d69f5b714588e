use nalgebra::DMatrix;
use num_complex::Complex64;
use passive_net::passivity::{impedance_certificate, Verdict};
use passive_net::pipelines::{
    butterworth_compose, extirpate, formants, log_grid, sparams, waveguide_compose, waveguide_report,
    ButterworthConfig, Geometry, WaveguideConfig,
};
use passive_net::simulate::{resonances, ExcitationSpec};
use passive_net::system::{eigenvalues, io_equivalent, TransferEvaluator};

fn full_pi_impedance(cfg: &ButterworthConfig, s: Complex64) -> DMatrix<Complex64> {
    let (c1, c3, l) = (cfg.c1, cfg.c3(), cfg.l1);
    let s2 = s * s;
    let num = s2 * s2 * (l * l * c1 * c3) + s2 * (l * (2.0 * c1 + c3)) + 1.0;
    let den = s * (s2 * (l * c1) + 1.0) * (s2 * (l * c1 * c3) + (2.0 * c1 + c3));
    DMatrix::from_row_slice(2, 2, &[num / den, 1.0 / den, 1.0 / den, num / den])
}

#[test]
fn composed_impedance_matches_the_closed_form() {
    let cfg = ButterworthConfig::default();
    let models = butterworth_compose(&cfg).unwrap();
    let ev = TransferEvaluator::new(&models.impedance);
    let mut worst = 0.0_f64;
    for f in log_grid(1e4, 1e8, 50) {
        let s = Complex64::new(0.0, 2.0 * std::f64::consts::PI * f);
        let z = ev.eval(s).unwrap();
        let exact = full_pi_impedance(&cfg, s);
        let scale = exact.iter().map(|x| x.norm()).fold(0.0, f64::max);
        let err = (z - &exact).iter().map(|x| x.norm()).fold(0.0, f64::max);
        worst = worst.max(err / scale);
    }
    assert!(worst <= 1e-4, "relative deviation {worst:e}");
}

#[test]
fn extirpated_model_is_io_equivalent_to_the_minimal_one() {
    let cfg = ButterworthConfig { epsilon: 1e-12, ..Default::default() };
    let models = butterworth_compose(&cfg).unwrap();
    let red = extirpate(&models.regularized, 2, 3).unwrap();
    assert!(io_equivalent(&red, &models.minimal, 1e-6).unwrap());
}

#[test]
fn minimal_model_is_lossless_on_the_axis() {
    let models = butterworth_compose(&ButterworthConfig::default()).unwrap();
    for p in sparams(&models.minimal, &log_grid(1e5, 1e8, 40)).unwrap() {
        let total = p.s11.norm_sqr() + p.s21.norm_sqr();
        assert!((total - 1.0).abs() <= 1e-12, "{} Hz: {total}", p.frequency);
    }
}

#[test]
fn default_waveguide_composite_is_passive_and_stable() {
    let wg = waveguide_compose(&WaveguideConfig::default(), None).unwrap();
    assert_eq!(wg.composite_impedance.n(), 4 * 99 + 16);
    assert_eq!(wg.composite_impedance.m(), 1);
    let cert = impedance_certificate(&wg.composite_impedance);
    assert!(matches!(cert.verdict, Verdict::StrictlyPassive | Verdict::Passive), "{:?}", cert.verdict);
    let worst = eigenvalues(&wg.composite_impedance.a).iter().map(|l| l.re).fold(f64::MIN, f64::max);
    assert!(worst <= 1e-9, "max Re λ = {worst:e}");
}

#[test]
fn radiation_load_damps_every_resonance_below_5_khz() {
    let wg = waveguide_compose(&WaveguideConfig::default(), None).unwrap();
    let hard = resonances(&wg.tube.system);
    let loaded = resonances(&wg.composite_impedance);
    for h in hard.within(100.0, 5000.0) {
        let near = loaded
            .entries
            .iter()
            .min_by(|a, b| (a.frequency - h.frequency).abs().total_cmp(&(b.frequency - h.frequency).abs()))
            .unwrap();
        assert!(near.decay_rate > h.decay_rate, "{} Hz", h.frequency);
    }
}

#[test]
fn regularisation_mostly_moves_the_first_resonance() {
    let run = |eps: f64| {
        let cfg = WaveguideConfig { epsilon: eps, ..Default::default() };
        let wg = waveguide_compose(&cfg, None).unwrap();
        formants(&resonances(&wg.composite_impedance), 3, 100.0, 1.0)
    };
    let f: Vec<Vec<f64>> = [0.1, 0.2, 0.3].iter().map(|&e| run(e)).collect();
    assert!(f.iter().all(|v| v.len() == 3));
    let d1 = [f[1][0] - f[0][0], f[2][0] - f[1][0]];
    assert!(d1[0] * d1[1] > 0.0, "first resonance not monotone: {f:?}");
    let rel = |j: usize| ((f[2][j] - f[0][j]) / f[0][j]).abs();
    assert!(rel(2) < rel(0), "{f:?}");
}

#[test]
fn report_produces_finite_pressure_signals() {
    let cfg = WaveguideConfig { geometry: Geometry::Uniform { length: 0.17, area: 3e-4 }, n: 40, ..Default::default() };
    let wg = waveguide_compose(&cfg, None).unwrap();
    let spec = ExcitationSpec::lf_pulse_train(120.0, 0.05, 44_100.0);
    let report = waveguide_report(&wg, &spec, &log_grid(50.0, 5000.0, 20)).unwrap();
    assert_eq!(report.mouth_pressure.len(), report.excitation.len());
    assert!(report.mouth_pressure.iter().chain(&report.glottal_pressure).all(|v| v.is_finite()));
    assert!(report.mouth_pressure.iter().any(|v| v.abs() > 0.0));
    let first = report.resonances.within(100.0, 5000.0)[0].frequency;
    assert!((first - 343.0 / (4.0 * 0.17)).abs() < 60.0, "first resonance {first}");
}
