//! Piston radiation impedance and its real, SVD-reduced Löwner interpolant.
//!
//! The pipeline is: pick conjugate-paired points ([`default_scheme`]), sample
//! the impedance ([`sample_piston`]), form the complex Löwner pencil
//! ([`loewner_matrices`]), rotate it to real arithmetic ([`realify`]) and
//! truncate it to an explicit state-space model ([`reduce`]).
//! [`passive_coordinates`] then moves a positive-real realisation into
//! coordinates where the impedance certificate holds.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cond2, from_blocks, lu_solve, sym_eigen, sym_function, vstack, COND_GATE};
use crate::special::piston_ratio;
use crate::system::{eigenvalues, StateSpaceSystem};

/// Relative size of the imaginary residue tolerated by [`realify`].
pub const REALIFY_TOL: f64 = 1e-12;

/// Circular piston in an infinite baffle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PistonParams {
    /// Aperture radius in m.
    pub a: f64,
    /// Density in kg/m³.
    pub rho: f64,
    /// Speed of sound in m/s.
    pub c: f64,
}

impl PistonParams {
    pub fn new(a: f64, rho: f64, c: f64) -> Result<Self> {
        if !(a > 0.0 && rho > 0.0 && c > 0.0) || !(a.is_finite() && rho.is_finite() && c.is_finite()) {
            return Err(Error::NonPositive);
        }
        Ok(PistonParams { a, rho, c })
    }

    /// Piston whose aperture has the given area.
    pub fn from_area(area: f64, rho: f64, c: f64) -> Result<Self> {
        if !(area > 0.0) {
            return Err(Error::NonPositive);
        }
        Self::new((area / PI).sqrt(), rho, c)
    }

    pub fn area(&self) -> f64 {
        PI * self.a * self.a
    }

    /// Characteristic impedance `ρc/(πa²)`.
    pub fn z0(&self) -> f64 {
        self.rho * self.c / self.area()
    }
}

/// `Z(s) = Z0 (1 − (c/(a s)) (i J1(z) + H1(z)))` with `z = −2ias/c`.
pub fn piston_impedance(s: Complex64, p: &PistonParams) -> Result<Complex64> {
    if s == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroFrequency);
    }
    let z = Complex64::new(0.0, -2.0 * p.a / p.c) * s;
    Ok(p.z0() * piston_ratio(z)?)
}

/// Two disjoint, conjugate-paired point sets of equal even size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationScheme {
    pub mu: Vec<Complex64>,
    pub lambda: Vec<Complex64>,
}

fn check_paired(name: &str, pts: &[Complex64]) -> Result<()> {
    if pts.is_empty() || !pts.len().is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("{name} must have a positive even number of points")));
    }
    for (i, p) in pts.iter().enumerate() {
        if p.im == 0.0 || !p.re.is_finite() || !p.im.is_finite() {
            return Err(Error::InvalidArgument(format!("{name}[{i}] = {p} is real or not finite")));
        }
    }
    for j in (0..pts.len()).step_by(2) {
        if pts[j + 1] != pts[j].conj() {
            return Err(Error::InvalidArgument(format!("{name}[{}] is not the conjugate of {name}[{j}]", j + 1)));
        }
    }
    Ok(())
}

impl InterpolationScheme {
    pub fn new(mu: Vec<Complex64>, lambda: Vec<Complex64>) -> Result<Self> {
        let s = InterpolationScheme { mu, lambda };
        s.validate()?;
        Ok(s)
    }

    /// Points per set.
    pub fn m(&self) -> usize {
        self.mu.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu.len() != self.lambda.len() {
            return Err(Error::DimensionMismatch(format!(
                "|mu| = {} but |lambda| = {}",
                self.mu.len(),
                self.lambda.len()
            )));
        }
        check_paired("mu", &self.mu)?;
        check_paired("lambda", &self.lambda)?;
        let all: Vec<Complex64> = self.mu.iter().chain(&self.lambda).copied().collect();
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                if all[i] == all[j] {
                    return Err(Error::CoincidentPoints(format!("{} appears twice", all[i])));
                }
            }
        }
        Ok(())
    }
}

/// Placement of interpolation points in the rectangle
/// `Re s ∈ [−wr, wr]`, `Im s ∈ (1e-3·w, w]` and its mirror image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    /// Upper imaginary bound in rad/s.
    pub w: f64,
    /// Real half-width in rad/s.
    pub wr: f64,
    /// Share of base points placed next to minima of `|Z(iω)|`.
    pub near_fraction: f64,
    /// Number of frequencies of the coarse imaginary-axis search grid.
    pub grid: usize,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig { w: 3e5, wr: 1.5e5, near_fraction: 0.1, grid: 300 }
    }
}

/// Seeded scheme with [`SchemeConfig::default`].
pub fn default_scheme(p: &PistonParams, m: usize, seed: u64) -> Result<InterpolationScheme> {
    scheme_with(p, m, seed, &SchemeConfig::default())
}

/// Frequencies of the coarse grid where `|Z(iω)|` has a local minimum; the
/// first grid frequency is always included since `Z(0) = 0`.
fn axis_minima(p: &PistonParams, cfg: &SchemeConfig) -> Vec<f64> {
    let omegas: Vec<f64> = (1..=cfg.grid).map(|j| cfg.w * j as f64 / cfg.grid as f64).collect();
    let mags: Vec<f64> = omegas
        .iter()
        .map(|&w| piston_impedance(Complex64::new(0.0, w), p).map(|z| z.norm()).unwrap_or(f64::INFINITY))
        .collect();
    let mut out = vec![omegas[0]];
    for j in 1..omegas.len().saturating_sub(1) {
        if mags[j] < mags[j - 1] && mags[j] < mags[j + 1] {
            out.push(omegas[j]);
        }
    }
    out
}

/// Seeded scheme with `m` points per set: `m` base points in the upper
/// rectangle, each joined by its conjugate, assigned alternately to `μ` and `λ`.
pub fn scheme_with(p: &PistonParams, m: usize, seed: u64, cfg: &SchemeConfig) -> Result<InterpolationScheme> {
    if m == 0 || !m.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("m = {m} must be positive and even")));
    }
    if !(cfg.w > 0.0 && cfg.wr > 0.0) || cfg.grid < 2 || !(0.0..=1.0).contains(&cfg.near_fraction) {
        return Err(Error::InvalidArgument("scheme configuration out of range".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = 1e-3 * cfg.w;
    let near = ((cfg.near_fraction * m as f64).round() as usize).min(m);
    let mut base = Vec::with_capacity(m);
    if near > 0 {
        let minima = axis_minima(p, cfg);
        let step = cfg.w / cfg.grid as f64;
        for q in 0..near {
            let w0 = minima[q % minima.len()];
            let im = (w0 + step * rng.random_range(-0.5..0.5)).clamp(lo * (1.0 + 1e-9), cfg.w);
            let re = 0.05 * cfg.wr * rng.random_range(-1.0..=1.0);
            base.push(Complex64::new(re, im));
        }
    }
    while base.len() < m {
        let re = rng.random_range(-cfg.wr..=cfg.wr);
        let im = rng.random_range(lo..=cfg.w);
        if im > 0.0 {
            base.push(Complex64::new(re, im));
        }
    }
    base.shuffle(&mut rng);
    let (mut mu, mut lambda) = (Vec::with_capacity(m), Vec::with_capacity(m));
    for (i, z) in base.into_iter().enumerate() {
        let set = if i % 2 == 0 { &mut mu } else { &mut lambda };
        set.push(z);
        set.push(z.conj());
    }
    InterpolationScheme::new(mu, lambda)
}

/// A scheme with the sampled values at its points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub scheme: InterpolationScheme,
    pub values_mu: Vec<Complex64>,
    pub values_lambda: Vec<Complex64>,
}

/// Samples `f` at every point of the scheme in parallel.
pub fn sample<F>(scheme: &InterpolationScheme, f: F) -> Result<SampleSet>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let values_mu = scheme.mu.par_iter().map(|&s| f(s)).collect::<Result<Vec<_>>>()?;
    let values_lambda = scheme.lambda.par_iter().map(|&s| f(s)).collect::<Result<Vec<_>>>()?;
    Ok(SampleSet { scheme: scheme.clone(), values_mu, values_lambda })
}

pub fn sample_piston(scheme: &InterpolationScheme, p: &PistonParams) -> Result<SampleSet> {
    sample(scheme, |s| piston_impedance(s, p))
}

/// Complex Löwner pencil: `𝕃`, `𝕄`, `b = Z(μ)` and `c = Z(λ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoewnerPencil {
    pub mu: Vec<Complex64>,
    pub lambda: Vec<Complex64>,
    pub l_mat: DMatrix<Complex64>,
    pub m_mat: DMatrix<Complex64>,
    pub b: DMatrix<Complex64>,
    pub c: DMatrix<Complex64>,
}

fn descriptor_transfer(
    l: &DMatrix<Complex64>,
    m: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
    c: &DMatrix<Complex64>,
    s: Complex64,
) -> Result<Complex64> {
    let pencil = l * s - m;
    let x =
        pencil.lu().solve(&(-b)).ok_or_else(|| Error::Numerical(format!("pencil sL − M is singular at s = {s}")))?;
    Ok((c * x)[(0, 0)])
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

impl LoewnerPencil {
    /// `c (s𝕃 − 𝕄)⁻¹ (−b)`.
    pub fn transfer(&self, s: Complex64) -> Result<Complex64> {
        descriptor_transfer(&self.l_mat, &self.m_mat, &self.b, &self.c, s)
    }
}

/// Löwner and shifted Löwner matrices of the samples.
pub fn loewner_matrices(
    scheme: &InterpolationScheme,
    values_mu: &[Complex64],
    values_lambda: &[Complex64],
) -> Result<LoewnerPencil> {
    let (mu, la) = (&scheme.mu, &scheme.lambda);
    if values_mu.len() != mu.len() || values_lambda.len() != la.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} / {} values for {} / {} points",
            values_mu.len(),
            values_lambda.len(),
            mu.len(),
            la.len()
        )));
    }
    let (p, q) = (mu.len(), la.len());
    let mut l = DMatrix::zeros(p, q);
    let mut mm = DMatrix::zeros(p, q);
    for i in 0..p {
        for j in 0..q {
            let den = mu[i] - la[j];
            if den == Complex64::new(0.0, 0.0) {
                return Err(Error::CoincidentPoints(format!("mu[{i}] = lambda[{j}] = {}", mu[i])));
            }
            l[(i, j)] = (values_mu[i] - values_lambda[j]) / den;
            mm[(i, j)] = (mu[i] * values_mu[i] - la[j] * values_lambda[j]) / den;
        }
    }
    Ok(LoewnerPencil {
        mu: mu.clone(),
        lambda: la.clone(),
        l_mat: l,
        m_mat: mm,
        b: DMatrix::from_column_slice(p, 1, values_mu),
        c: DMatrix::from_row_slice(1, q, values_lambda),
    })
}

/// Explicit model obtained by SVD truncation of the real pencil.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedModel {
    pub order: usize,
    /// `(𝕃_k⁻¹𝕄_k, −𝕃_k⁻¹U_kᵀb, cV_k, 0)` with port split `(1, 0)`.
    pub system: StateSpaceSystem,
    /// Spectral condition number of `𝕃_k`.
    pub condition: f64,
}

/// Real Löwner pencil with an optional reduced explicit model.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorInterpolant {
    pub l_mat: DMatrix<f64>,
    pub m_mat: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub reduced: Option<ReducedModel>,
}

impl DescriptorInterpolant {
    pub fn m(&self) -> usize {
        self.l_mat.nrows()
    }

    /// `c (s𝕃 − 𝕄)⁻¹ (−b)` of the full pencil.
    pub fn transfer(&self, s: Complex64) -> Result<Complex64> {
        descriptor_transfer(
            &to_complex(&self.l_mat),
            &to_complex(&self.m_mat),
            &to_complex(&self.b),
            &to_complex(&self.c),
            s,
        )
    }

    /// Singular values of `𝕃` in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut sv: Vec<f64> = self.l_mat.singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }
}

/// Block-diagonal unitary `P` with blocks `[[1, 1], [i, −i]]/√2`.
fn pairing_unitary(n: usize) -> DMatrix<Complex64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut p = DMatrix::zeros(n, n);
    for k in (0..n).step_by(2) {
        p[(k, k)] = Complex64::new(h, 0.0);
        p[(k, k + 1)] = Complex64::new(h, 0.0);
        p[(k + 1, k)] = Complex64::new(0.0, h);
        p[(k + 1, k + 1)] = Complex64::new(0.0, -h);
    }
    p
}

fn split_real(name: &str, x: &DMatrix<Complex64>, worst: &mut f64) -> DMatrix<f64> {
    let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let im = x.iter().fold(0.0_f64, |acc, z| acc.max(z.im.abs()));
    if norm > 0.0 && !name.is_empty() {
        *worst = worst.max(im / norm);
    }
    x.map(|z| z.re)
}

/// Rotates a conjugate-paired pencil to real arithmetic:
/// `𝕃r = P𝕃P*`, `𝕄r = P𝕄P*`, `br = Pb`, `cr = cP*`.
pub fn realify(pencil: &LoewnerPencil) -> Result<DescriptorInterpolant> {
    check_paired("mu", &pencil.mu)?;
    check_paired("lambda", &pencil.lambda)?;
    let pm = pairing_unitary(pencil.mu.len());
    let pl = pairing_unitary(pencil.lambda.len()).adjoint();
    let mut worst = 0.0_f64;
    let l_mat = split_real("L", &(&pm * &pencil.l_mat * &pl), &mut worst);
    let m_mat = split_real("M", &(&pm * &pencil.m_mat * &pl), &mut worst);
    let b = split_real("b", &(&pm * &pencil.b), &mut worst);
    let c = split_real("c", &(&pencil.c * &pl), &mut worst);
    if worst > REALIFY_TOL || !worst.is_finite() {
        return Err(Error::PairingViolation { residue: worst });
    }
    Ok(DescriptorInterpolant { l_mat, m_mat, b, c, reduced: None })
}

/// Truncates the real pencil to order `k` using the leading singular
/// vectors of `𝕃`.
pub fn reduce(interp: &DescriptorInterpolant, k: usize) -> Result<DescriptorInterpolant> {
    let (p, q) = interp.l_mat.shape();
    if k == 0 || k > p.min(q) {
        return Err(Error::InvalidArgument(format!("order k = {k} outside 1..={}", p.min(q))));
    }
    let svd = interp.l_mat.clone().svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::Numerical("SVD of the Löwner matrix failed".into())),
    };
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let uk = DMatrix::from_fn(p, k, |r, j| u[(r, idx[j])]);
    let vk = DMatrix::from_fn(q, k, |r, j| vt[(idx[j], r)]);
    let ukt = uk.transpose();
    let lk = &ukt * &interp.l_mat * &vk;
    let mk = &ukt * &interp.m_mat * &vk;
    let cond = cond2(&lk);
    if !(cond <= COND_GATE) {
        return Err(Error::RankDeficient { cond });
    }
    let singular = || Error::RankDeficient { cond };
    let a = lu_solve(&lk, &mk).ok_or_else(singular)?;
    let b = -lu_solve(&lk, &(&ukt * &interp.b)).ok_or_else(singular)?;
    let c = &interp.c * &vk;
    let system = StateSpaceSystem::new(a, b, c, DMatrix::zeros(1, 1), 1, 0)?;
    let mut out = interp.clone();
    out.reduced = Some(ReducedModel { order: k, system, condition: cond });
    Ok(out)
}

/// Shifts applied to the Riccati data in [`passive_coordinates`]:
/// `A + αI` with `α = alpha_rel·min|Re λ(A)|` and `R = (D + Dᵀ)(1 − delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KypShift {
    pub alpha_rel: f64,
    pub delta: f64,
}

impl Default for KypShift {
    fn default() -> Self {
        KypShift { alpha_rel: 1e-3, delta: 1e-3 }
    }
}

/// Newton iteration for the matrix sign function with determinant scaling
/// during the first steps.
fn matrix_sign(h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = h.nrows();
    let mut w = h.clone();
    let mut prev = f64::INFINITY;
    for it in 0..200 {
        let lu = w.clone().lu();
        let logdet: f64 = lu.u().diagonal().iter().map(|x| x.abs().ln()).sum();
        let wi =
            lu.try_inverse().ok_or_else(|| Error::Numerical("Hamiltonian has imaginary-axis eigenvalues".into()))?;
        let cs = if it < 8 { (-logdet / n as f64).exp() } else { 1.0 };
        let wn = (&w * cs + wi / cs) * 0.5;
        let d = (&wn - &w).abs().sum() / wn.abs().sum();
        w = wn;
        if !d.is_finite() {
            break;
        }
        if d < 1e-13 || (it >= 8 && d < 1e-8 && d >= prev) {
            return Ok(w);
        }
        prev = d;
    }
    Err(Error::Numerical("sign iteration did not converge".into()))
}

/// Similarity `T = X^{1/2}` from the stabilising solution `X` of the
/// shifted KYP Riccati equation, so that the impedance certificate of the
/// returned system holds strictly. Requires a Hurwitz `A` and `D + Dᵀ > 0`.
pub fn passive_coordinates(sys: &StateSpaceSystem, shift: KypShift) -> Result<StateSpaceSystem> {
    let n = sys.n();
    if n == 0 {
        return Ok(sys.clone());
    }
    let re_max = eigenvalues(&sys.a).iter().fold(f64::NEG_INFINITY, |acc, l| acc.max(l.re));
    if !(re_max < 0.0) {
        return Err(Error::Numerical(format!("generator is not Hurwitz (max Re λ = {re_max:e})")));
    }
    let min_decay = eigenvalues(&sys.a).iter().fold(f64::INFINITY, |acc, l| acc.min(l.re.abs()));
    let r = (&sys.d + sys.d.transpose()) * (1.0 - shift.delta);
    let (rl, _) = sym_eigen(&r);
    if !(rl.min() > 0.0) {
        return Err(Error::NotProperlyPassive);
    }
    let ri = sym_function(&r, |x| 1.0 / x);
    let id = DMatrix::<f64>::identity(n, n);
    let a_s = &sys.a + &id * (shift.alpha_rel * min_decay);
    let f = &a_s - &sys.b * &ri * &sys.c;
    let g = &sys.b * &ri * sys.b.transpose();
    let q = sys.c.transpose() * &ri * &sys.c;
    let h = from_blocks(&[&[&f, &g], &[&(-q), &(-f.transpose())]]);
    let w = matrix_sign(&h)?;
    let w11 = w.view((0, 0), (n, n)).into_owned();
    let w12 = w.view((0, n), (n, n)).into_owned();
    let w21 = w.view((n, 0), (n, n)).into_owned();
    let w22 = w.view((n, n), (n, n)).into_owned();
    let lhs = vstack(&w12, &(w22 + &id));
    let rhs = -vstack(&(w11 + &id), &w21);
    let svd = lhs.svd(true, true);
    let eps = f64::EPSILON * (2 * n) as f64 * svd.singular_values.max();
    let x = svd.solve(&rhs, eps).map_err(|e| Error::Numerical(e.into()))?;
    let x = (&x + x.transpose()) * 0.5;
    let (lam, v) = sym_eigen(&x);
    if !(lam.min() > 0.0) {
        return Err(Error::Numerical(format!("KYP solution is not positive definite (λmin = {:e})", lam.min())));
    }
    let t = &v * DMatrix::from_diagonal(&lam.map(f64::sqrt)) * v.transpose();
    let ti = &v * DMatrix::from_diagonal(&lam.map(|x| 1.0 / x.sqrt())) * v.transpose();
    StateSpaceSystem::new(&t * &sys.a * &ti, &t * &sys.b, &sys.c * &ti, sys.d.clone(), sys.m1, sys.m2)
}
