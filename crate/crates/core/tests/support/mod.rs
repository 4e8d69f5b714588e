//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use passive_net::quadrature::gauss_legendre;

/// Composite Gauss–Legendre integral of a complex integrand.
pub fn integrate(f: impl Fn(f64) -> Complex64, a: f64, b: f64, panels: usize) -> Complex64 {
    let (x, w) = gauss_legendre(20);
    let h = (b - a) / panels as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let mid = a + h * (p as f64 + 0.5);
        for (t, wt) in x.iter().zip(&w) {
            acc += f(mid + 0.5 * h * t) * (wt * 0.5 * h);
        }
    }
    acc
}

fn panels_for(z: Complex64) -> usize {
    (8.0 + 2.0 * z.norm()).ceil() as usize
}

/// `J1(z) = (1/π) ∫₀^π cos(θ − z sin θ) dθ`.
pub fn j1_oracle(z: Complex64) -> Complex64 {
    let pi = std::f64::consts::PI;
    integrate(|t| (Complex64::new(t, 0.0) - z * t.sin()).cos(), 0.0, pi, panels_for(z)) / pi
}

/// `H1(z) = (2z/π) ∫₀^{π/2} sin(z cos θ) sin²θ dθ`.
pub fn h1_oracle(z: Complex64) -> Complex64 {
    let pi = std::f64::consts::PI;
    integrate(|t| (z * t.cos()).sin() * t.sin().powi(2), 0.0, 0.5 * pi, panels_for(z)) * z * (2.0 / pi)
}

/// Error scale for oscillatory functions: `max(|f|, e^{|Im z|}/√(1+|z|))`.
pub fn special_scale(z: Complex64, f: Complex64) -> f64 {
    f.norm().max(z.im.abs().exp() / (1.0 + z.norm()).sqrt())
}

use nalgebra::DMatrix;
use passive_net::linalg::{cond2, max_abs};
use passive_net::system::eigenvalues;
use passive_net::StateSpaceSystem;
use rand::Rng;

pub fn random_matrix(rng: &mut impl Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

/// Random Hurwitz system whose `D`, `D11`, `D21`, `D22` and `D + I` are
/// well conditioned, so that every representation transform applies.
pub fn random_system(rng: &mut impl Rng, n: usize, m1: usize, m2: usize) -> StateSpaceSystem {
    let m = m1 + m2;
    loop {
        let mut a = random_matrix(rng, n, n);
        let shift = eigenvalues(&a).iter().map(|l| l.re).fold(f64::MIN, f64::max) + rng.random_range(0.5..2.0);
        for i in 0..n {
            a[(i, i)] -= shift;
        }
        let mut d = random_matrix(rng, m, m);
        for i in 0..m1.min(m2) {
            d[(i, i)] += 2.0;
            d[(m1 + i, m1 + i)] += 2.0;
            d[(m1 + i, i)] += 2.0;
        }
        let sys = StateSpaceSystem::new(a, random_matrix(rng, n, m), random_matrix(rng, m, n), d, m1, m2).unwrap();
        let blocks = [sys.d.clone(), sys.d11(), sys.d21(), sys.d22(), &sys.d + DMatrix::identity(m, m), sys.a.clone()];
        if blocks.iter().all(|b| cond2(b) < 1e3) {
            return sys;
        }
    }
}

/// Passivity class of a constructed impedance system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Class {
    Conservative,
    Strict,
    Active,
}

fn skew(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let r = random_matrix(rng, n, n);
    &r - r.transpose()
}

fn psd(rng: &mut impl Rng, n: usize, floor: f64) -> DMatrix<f64> {
    let r = random_matrix(rng, n, n);
    &r * r.transpose() + DMatrix::identity(n, n) * floor
}

/// Impedance system `(J − R, B, Bᵀ, S + P)` with `J`, `S` skew and `R`, `P`
/// chosen for the requested class; `Active` adds an unstable diagonal entry.
pub fn passive_impedance(rng: &mut impl Rng, n: usize, m1: usize, m2: usize, class: Class) -> StateSpaceSystem {
    let m = m1 + m2;
    let (mut a, d) = match class {
        Class::Conservative => (skew(rng, n), skew(rng, m)),
        Class::Strict | Class::Active => (skew(rng, n) - psd(rng, n, 0.5), skew(rng, m) + psd(rng, m, 0.5)),
    };
    if class == Class::Active {
        a[(0, 0)] += 2.0 * max_abs(&a) + 1.0;
    }
    let b = random_matrix(rng, n, m);
    StateSpaceSystem::new(a, b.clone(), b.transpose(), d, m1, m2).unwrap()
}

/// Scattering conservative system: the external Cayley transform of a
/// conservative impedance system at `R = I`.
pub fn conservative_scattering(rng: &mut impl Rng, n: usize, m1: usize, m2: usize) -> StateSpaceSystem {
    let z = passive_impedance(rng, n, m1, m2, Class::Conservative);
    let r = passive_net::transforms::ResistanceMatrix::scalar(m1, 1.0, m2, 1.0).unwrap();
    passive_net::transforms::external_cayley(&z, &r).unwrap()
}

/// Largest entry of `x − y` relative to the largest entry of `y`.
pub fn rel_dev(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    max_abs(&(x - y)) / max_abs(y).max(1.0)
}

/// Relative deviation of all four blocks.
pub fn sys_dev(x: &StateSpaceSystem, y: &StateSpaceSystem) -> f64 {
    [(&x.a, &y.a), (&x.b, &y.b), (&x.c, &y.c), (&x.d, &y.d)].iter().map(|(p, q)| rel_dev(p, q)).fold(0.0, f64::max)
}
