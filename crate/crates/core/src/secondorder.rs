//! First-order realisations of second-order systems
//! `M z'' + P z' + K z = F u` with observations built from `z` and `z'`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{cond2, hstack, sym_eigen, vstack, COND_GATE};
use crate::system::StateSpaceSystem;

/// Relative threshold below which eigenvalues of a PSD matrix are clipped.
pub const PSD_CLIP: f64 = 1e-12;

/// Observation of a second-order system.
#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    /// `y = Q1 z + Q2 z'` with `Q1, Q2` of size `k×m`; needs invertible `K`.
    General { q1: DMatrix<f64>, q2: DMatrix<f64> },
    /// `y = Fᵀ z'`; `K` may be singular.
    Collocated,
}

/// `M z'' + P z' + K z = F u` with an observation.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderSystem {
    pub m: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub f: DMatrix<f64>,
    pub observation: Observation,
}

fn check_sym(name: &str, x: &DMatrix<f64>) -> Result<()> {
    if x.nrows() != x.ncols() {
        return Err(Error::NotSpd(format!("{name} is not square")));
    }
    let scale = x.amax().max(f64::MIN_POSITIVE);
    if (x - x.transpose()).amax() > 1e-12 * scale {
        return Err(Error::NotSpd(format!("{name} is not symmetric")));
    }
    Ok(())
}

fn check_psd(name: &str, x: &DMatrix<f64>) -> Result<(nalgebra::DVector<f64>, DMatrix<f64>)> {
    check_sym(name, x)?;
    let (w, v) = sym_eigen(x);
    let scale = w.iter().fold(0.0_f64, |a, l| a.max(l.abs()));
    if let Some(lo) = w.iter().cloned().reduce(f64::min) {
        if lo < -PSD_CLIP * scale {
            return Err(Error::NotSpd(format!("{name} has eigenvalue {lo:e}")));
        }
    }
    Ok((w, v))
}

fn spectral(w: &nalgebra::DVector<f64>, v: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let fw = w.map(f);
    let r = v * DMatrix::from_diagonal(&fw) * v.transpose();
    (&r + r.transpose()) * 0.5
}

/// Symmetric PSD square root, eigenvalues below `1e-12·‖X‖` clipped to zero.
pub fn spd_sqrt(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (w, v) = check_psd("X", x)?;
    let cut = PSD_CLIP * w.iter().fold(0.0_f64, |a, l| a.max(l.abs()));
    Ok(spectral(&w, &v, |l| if l <= cut { 0.0 } else { l.sqrt() }))
}

/// Inverse square root of a symmetric positive definite matrix.
pub fn spd_inv_sqrt(name: &str, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (w, v) = check_psd(name, x)?;
    let hi = w.iter().fold(0.0_f64, |a, l| a.max(l.abs()));
    let lo = w.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(lo > 0.0) || hi / lo > COND_GATE {
        return Err(Error::NotSpd(format!("{name} is not positive definite")));
    }
    Ok(spectral(&w, &v, |l| 1.0 / l.sqrt()))
}

impl SecondOrderSystem {
    /// Checks shapes and definiteness of the coefficient matrices.
    pub fn new(
        m: DMatrix<f64>,
        p: DMatrix<f64>,
        k: DMatrix<f64>,
        f: DMatrix<f64>,
        observation: Observation,
    ) -> Result<Self> {
        let dim = m.nrows();
        for (name, x) in [("M", &m), ("P", &p), ("K", &k)] {
            if x.shape() != (dim, dim) {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {}×{}, expected {dim}×{dim}",
                    x.nrows(),
                    x.ncols()
                )));
            }
        }
        if f.nrows() != dim {
            return Err(Error::DimensionMismatch(format!("F has {} rows, expected {dim}", f.nrows())));
        }
        if let Observation::General { q1, q2 } = &observation {
            let want = (f.ncols(), dim);
            if q1.shape() != want || q2.shape() != want {
                return Err(Error::DimensionMismatch(format!("Q1, Q2 must be {}×{dim}", f.ncols())));
            }
        }
        spd_inv_sqrt("M", &m)?;
        check_psd("P", &p)?;
        check_psd("K", &k)?;
        Ok(SecondOrderSystem { m, p, k, f, observation })
    }

    /// Degrees of freedom `m`.
    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// Number of inputs `k`.
    pub fn inputs(&self) -> usize {
        self.f.ncols()
    }
}

/// First-order realisation with state `(K^{1/2} z, M^{1/2} z')`, scaled by
/// `1/√2` on the general path. The feedthrough is zero and the port split is
/// `(k, 0)`.
pub fn first_order_realization(so: &SecondOrderSystem) -> Result<StateSpaceSystem> {
    let dim = so.dim();
    let kin = so.inputs();
    let mi = spd_inv_sqrt("M", &so.m)?;
    let kh = spd_sqrt(&so.k)?;
    let top = &kh * &mi;
    let damp = -(&mi * &so.p * &mi);
    let damp = (&damp + damp.transpose()) * 0.5;
    let a = vstack(&hstack(&DMatrix::zeros(dim, dim), &top), &hstack(&(-top.transpose()), &damp));
    let mif = &mi * &so.f;
    let (b, c) = match &so.observation {
        Observation::Collocated => {
            let b = vstack(&DMatrix::zeros(dim, kin), &mif);
            let c = b.transpose();
            (b, c)
        }
        Observation::General { q1, q2 } => {
            let cond = cond2(&so.k);
            if !(cond <= COND_GATE) {
                return Err(Error::SingularStiffness { cond });
            }
            let (w, v) = sym_eigen(&so.k);
            let kih = spectral(&w, &v, |l| 1.0 / l.sqrt());
            let s2 = std::f64::consts::SQRT_2;
            let b = vstack(&DMatrix::zeros(dim, kin), &mif) / s2;
            let c = hstack(&(q1 * &kih), &(q2 * &mi)) * s2;
            (b, c)
        }
    };
    StateSpaceSystem::new(a, b, c, DMatrix::zeros(kin, kin), kin, 0)
}

/// Which passivity pattern the observation `(Q1, Q2)` realises.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassivityPattern {
    /// `‖Q1‖₂`.
    pub q1_residual: f64,
    /// `‖Q2 − ½Fᵀ‖₂`.
    pub q2_residual: f64,
    /// `P = 0`.
    pub undamped: bool,
    /// `Q1 = 0` and `Q2 = ½Fᵀ` (always true for the collocated observation).
    pub passive: bool,
    /// Passive pattern with `P = 0`.
    pub conservative: bool,
}

/// Checks the observation against the impedance passive and conservative patterns.
pub fn passivity_conditions(so: &SecondOrderSystem) -> PassivityPattern {
    let tol = 1e-10 * (1.0 + so.f.amax());
    let undamped = so.p.amax() <= 1e-12 * (1.0 + so.m.amax().max(so.k.amax()));
    let (q1_residual, q2_residual) = match &so.observation {
        Observation::Collocated => (0.0, 0.0),
        Observation::General { q1, q2 } => {
            let half = so.f.transpose() * 0.5;
            (crate::linalg::norm2(q1), crate::linalg::norm2(&(q2 - half)))
        }
    };
    let passive = q1_residual <= tol && q2_residual <= tol;
    PassivityPattern { q1_residual, q2_residual, undamped, passive, conservative: passive && undamped }
}
