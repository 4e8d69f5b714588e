mod support;

use nalgebra::DVector;
use passive_net::simulate::{
    excitation, frequency_response, resonances, semitone_discrepancy, step_response, step_response_with, EnergyMode,
    ExcitationSpec, ImplicitStepper,
};
use passive_net::transforms::{external_cayley, internal_cayley, ResistanceMatrix};
use passive_net::websterfem::{assemble, AreaFunction};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{passive_impedance, Class};

fn random_inputs(rng: &mut ChaCha8Rng, steps: usize, m: usize) -> Vec<DVector<f64>> {
    (0..steps).map(|_| DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn conservative_impedance_steps_balance_energy(seed in any::<u64>(), n in 1usize..=8, sigma in 0.2f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = passive_impedance(&mut rng, n, 1, 1, Class::Conservative);
        let phi = internal_cayley(&z, sigma).unwrap();
        let inputs = random_inputs(&mut rng, 200, 2);
        let sim = step_response_with(&phi, &inputs, &DVector::zeros(n), Some(EnergyMode::Impedance)).unwrap();
        let (e, s) = (sim.energy_excess.unwrap(), sim.energy_scale.unwrap());
        prop_assert!(e.iter().zip(&s).all(|(e, s)| e.abs() <= 1e-10 * (1.0 + s)));
    }

    #[test]
    fn strictly_passive_scattering_steps_dissipate(seed in any::<u64>(), n in 1usize..=8, sigma in 0.2f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = passive_impedance(&mut rng, n, 1, 1, Class::Strict);
        let s = external_cayley(&z, &ResistanceMatrix::scalar(1, 1.0, 1, 1.0).unwrap()).unwrap();
        let phi = internal_cayley(&s, sigma).unwrap();
        let inputs = random_inputs(&mut rng, 200, 2);
        let sim = step_response_with(&phi, &inputs, &DVector::zeros(n), Some(EnergyMode::Scattering)).unwrap();
        prop_assert!(sim.energy_balance_holds().unwrap());
    }

    #[test]
    fn implicit_stepper_matches_the_discrete_system(seed in any::<u64>(), n in 1usize..=8, sigma in 0.2f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = passive_impedance(&mut rng, n, 1, 1, Class::Strict);
        let inputs = random_inputs(&mut rng, 100, 2);
        let x0 = DVector::zeros(n);
        let explicit = step_response(&internal_cayley(&z, sigma).unwrap(), &inputs, &x0).unwrap();
        let implicit = ImplicitStepper::new(&z, sigma).unwrap().run(&inputs, &x0, None).unwrap().outputs;
        for (a, b) in explicit.iter().zip(&implicit) {
            prop_assert!((a - b).amax() <= 1e-9 * (1.0 + a.amax()));
        }
    }
}

#[test]
fn tube_response_peaks_at_the_hard_wall_resonances() {
    let model = assemble(&AreaFunction::uniform(0.175, 1e-4).unwrap(), 60, 343.0, 1.2).unwrap();
    let first = resonances(&model.system).within(1.0, 2000.0)[0].frequency;
    assert!(semitone_discrepancy(first, 980.0).unwrap().abs() < 0.01);
    let grid: Vec<f64> = (0..50).map(|k| 900.0 + 4.0 * k as f64).collect();
    let resp = frequency_response(&model.system, &grid).unwrap();
    let mags: Vec<f64> = resp.iter().map(|p| p.value.as_ref().map_or(f64::INFINITY, |g| g[(0, 0)].norm())).collect();
    let peak = grid[mags.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0];
    assert!((peak - first).abs() <= 4.0, "peak {peak} vs {first}");
}

#[test]
fn excitations_have_the_requested_length() {
    let lf = excitation(&ExcitationSpec::lf_pulse_train(100.0, 0.1, 8000.0)).unwrap();
    assert_eq!(lf.len(), 800);
    assert!(lf.iter().all(|v| *v >= 0.0));
    let sweep = excitation(&ExcitationSpec::log_sweep(50.0, 2000.0, 0.25, 8000.0)).unwrap();
    assert_eq!(sweep.len(), 2000);
    assert!(sweep.iter().all(|v| v.abs() <= 1.0));
}
