use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::DVector;
use num_complex::Complex64;
use passive_net::feedback::{star_of_impedance_pair, PairOutput};
use passive_net::loewner::{default_scheme, loewner_matrices, realify, reduce, sample_piston, PistonParams};
use passive_net::passivity::impedance_certificate;
use passive_net::pipelines::{butterworth_compose, waveguide_compose, ButterworthConfig};
use passive_net::simulate::{excitation, step_response, ExcitationSpec};
use passive_net::system::TransferEvaluator;
use passive_net::transforms::{internal_cayley, ResistanceMatrix};
use passive_net::websterfem::{assemble, AreaFunction};
use passive_net_bench::{default_pi, waveguide_config};

fn butterworth(c: &mut Criterion) {
    let p = default_pi();
    let r = ResistanceMatrix::scalar(1, 50.0, 1, 50.0).unwrap();
    c.bench_function("star_of_impedance_pair/pi", |b| {
        b.iter(|| star_of_impedance_pair(black_box(&p), &p, &r, &r, 1e-9, 1e-9, PairOutput::Impedance).unwrap())
    });
    let models = butterworth_compose(&ButterworthConfig::default()).unwrap();
    let ev = TransferEvaluator::new(&models.impedance);
    let s = Complex64::new(0.0, 2.0 * std::f64::consts::PI * 1e6);
    c.bench_function("transfer/butterworth_impedance", |b| b.iter(|| ev.eval(black_box(s)).unwrap()));
}

fn waveguide(c: &mut Criterion) {
    let area = AreaFunction::uniform(0.175, 1e-4).unwrap();
    c.bench_function("assemble/n99", |b| b.iter(|| assemble(black_box(&area), 99, 343.0, 1.2).unwrap()));
    let model = assemble(&area, 99, 343.0, 1.2).unwrap();
    c.bench_function("impedance_certificate/n99", |b| b.iter(|| impedance_certificate(black_box(&model.system))));

    let piston = PistonParams::new(0.01, 1.225, 343.0).unwrap();
    let scheme = default_scheme(&piston, 150, 1).unwrap();
    let set = sample_piston(&scheme, &piston).unwrap();
    c.bench_function("loewner/k16_m150", |b| {
        b.iter(|| {
            let pencil = loewner_matrices(&scheme, &set.values_mu, &set.values_lambda).unwrap();
            reduce(&realify(&pencil).unwrap(), 16).unwrap()
        })
    });

    let mut group = c.benchmark_group("waveguide");
    group.sample_size(10);
    group.bench_function("compose/n40", |b| {
        b.iter(|| waveguide_compose(black_box(&waveguide_config(40)), None).unwrap())
    });
    let wg = waveguide_compose(&waveguide_config(40), None).unwrap();
    let phi = internal_cayley(&wg.composite_impedance, 88_200.0).unwrap();
    let flow = excitation(&ExcitationSpec::lf_pulse_train(120.0, 0.05, 44_100.0)).unwrap();
    let inputs: Vec<_> = flow.iter().map(|&u| DVector::from_element(1, u)).collect();
    let x0 = DVector::zeros(phi.n());
    group.bench_function("step/n40_2205", |b| b.iter(|| step_response(black_box(&phi), &inputs, &x0).unwrap()));
    group.finish();
}

criterion_group!(benches, butterworth, waveguide);
criterion_main!(benches);
