//! Passivity and conservativity certificates from symmetric test matrices.
//!
//! Every certificate is phrased as "test matrix `T ≤ 0`". The margin is the
//! largest eigenvalue of `T`; the tolerance is `1e-10·(1 + norm)` where `norm`
//! is the size of the terms that make up `T` before cancellation.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{from_blocks, norm2, sym_eigenvalues};
use crate::system::{DiscreteSystem, StateSpaceSystem};
use crate::transforms::internal_cayley;

/// Relative tolerance of all certificates.
pub const CERT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Conservative,
    StrictlyPassive,
    Passive,
    NotPassive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Conservative => "Conservative",
            Verdict::StrictlyPassive => "StrictlyPassive",
            Verdict::Passive => "Passive",
            Verdict::NotPassive => "NotPassive",
        }
    }
}

/// Verdict with its signed margin and the scale used for the tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassivityCertificate {
    pub verdict: Verdict,
    pub margin: f64,
    #[serde(rename = "norm")]
    pub test_matrix_norm: f64,
}

impl PassivityCertificate {
    /// Any verdict other than `NotPassive`.
    pub fn is_passive(&self) -> bool {
        self.verdict != Verdict::NotPassive
    }

    pub fn tolerance(&self) -> f64 {
        CERT_TOL * (1.0 + self.test_matrix_norm)
    }
}

fn fro(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

/// Classifies a symmetric "≤ 0" test matrix.
pub fn certify(t: &DMatrix<f64>, scale: f64) -> PassivityCertificate {
    let eig = sym_eigenvalues(t);
    let (lo, hi) = if eig.is_empty() { (0.0, 0.0) } else { (eig[0], eig[eig.len() - 1]) };
    let norm = scale.max(lo.abs().max(hi.abs()));
    let tol = CERT_TOL * (1.0 + norm);
    let verdict = if lo.abs().max(hi.abs()) <= tol {
        Verdict::Conservative
    } else if hi < -tol {
        Verdict::StrictlyPassive
    } else if hi <= tol {
        Verdict::Passive
    } else {
        Verdict::NotPassive
    };
    PassivityCertificate { verdict, margin: hi, test_matrix_norm: norm }
}

/// Impedance test matrix `[[Aᵀ+A, B−Cᵀ], [Bᵀ−C, −Dᵀ−D]]`.
pub fn impedance_test_matrix(sys: &StateSpaceSystem) -> DMatrix<f64> {
    let at = &sys.a + sys.a.transpose();
    let bc = &sys.b - sys.c.transpose();
    let bct = bc.transpose();
    let dd = -(&sys.d + sys.d.transpose());
    from_blocks(&[&[&at, &bc], &[&bct, &dd]])
}

/// Impedance passivity certificate.
pub fn impedance_certificate(sys: &StateSpaceSystem) -> PassivityCertificate {
    let scale = 2.0 * fro(&sys.a) + fro(&sys.b) + fro(&sys.c) + 2.0 * fro(&sys.d);
    certify(&impedance_test_matrix(sys), scale)
}

/// Continuous-time scattering test matrix `[[A+Aᵀ+CᵀC, B+CᵀD], [Bᵀ+DᵀC, DᵀD−I]]`.
pub fn scattering_test_matrix(sys: &StateSpaceSystem) -> DMatrix<f64> {
    let m = sys.m();
    let tl = &sys.a + sys.a.transpose() + sys.c.transpose() * &sys.c;
    let tr = &sys.b + sys.c.transpose() * &sys.d;
    let trt = tr.transpose();
    let br = sys.d.transpose() * &sys.d - DMatrix::identity(m, m);
    from_blocks(&[&[&tl, &tr], &[&trt, &br]])
}

/// Scattering passivity certificate from the continuous-time LMI.
pub fn scattering_certificate(sys: &StateSpaceSystem) -> PassivityCertificate {
    let (a, b, c, d) = (fro(&sys.a), fro(&sys.b), fro(&sys.c), fro(&sys.d));
    let scale = 2.0 * a + c * c + b + c * d + d * d + 1.0;
    certify(&scattering_test_matrix(sys), scale)
}

/// Residuals of `A+Aᵀ = −CᵀC = −BBᵀ`, `C = −DBᵀ`, `DᵀD = I`; the margin is
/// the largest residual and the verdict is `Conservative` or `NotPassive`.
pub fn scattering_conservative_check(sys: &StateSpaceSystem) -> PassivityCertificate {
    let m = sys.m();
    let at = &sys.a + sys.a.transpose();
    let r1 = norm2(&(&at + sys.c.transpose() * &sys.c));
    let r2 = norm2(&(&at + &sys.b * sys.b.transpose()));
    let r3 = norm2(&(&sys.c + &sys.d * sys.b.transpose()));
    let r4 = norm2(&(sys.d.transpose() * &sys.d - DMatrix::identity(m, m)));
    let margin = r1.max(r2).max(r3).max(r4);
    let (a, b, c, d) = (fro(&sys.a), fro(&sys.b), fro(&sys.c), fro(&sys.d));
    let scale = 2.0 * a + b * b + c * c + c + d * b + d * d + 1.0;
    let verdict = if margin <= CERT_TOL * (1.0 + scale) { Verdict::Conservative } else { Verdict::NotPassive };
    PassivityCertificate { verdict, margin, test_matrix_norm: scale }
}

/// Discrete scattering certificate: `SᵀS − I ≤ 0` with `S = [[A_d, B_d], [C_d, D_d]]`.
pub fn discrete_scattering_certificate(phi: &DiscreteSystem) -> PassivityCertificate {
    let s = phi.block_matrix();
    let k = s.ncols();
    let t = s.transpose() * &s - DMatrix::identity(k, k);
    let sn = fro(&s);
    certify(&t, sn * sn + 1.0)
}

/// Discrete impedance certificate:
/// `[[I−AᵀA, Cᵀ−AᵀB], [C−BᵀA, D+Dᵀ−BᵀB]] ≥ 0`.
pub fn discrete_impedance_certificate(phi: &DiscreteSystem) -> PassivityCertificate {
    let n = phi.n();
    let tl = DMatrix::identity(n, n) - phi.a.transpose() * &phi.a;
    let tr = phi.c.transpose() - phi.a.transpose() * &phi.b;
    let trt = tr.transpose();
    let br = &phi.d + phi.d.transpose() - phi.b.transpose() * &phi.b;
    let nmat = from_blocks(&[&[&tl, &tr], &[&trt, &br]]);
    let (a, b, c, d) = (fro(&phi.a), fro(&phi.b), fro(&phi.c), fro(&phi.d));
    let scale = a * a + 1.0 + c + a * b + 2.0 * d + b * b;
    certify(&(-nmat), scale)
}

/// Scattering passivity through the internal Cayley transform at `sigma`.
pub fn scattering_passive_via_cayley(sys: &StateSpaceSystem, sigma: f64) -> Result<PassivityCertificate> {
    Ok(discrete_scattering_certificate(&internal_cayley(sys, sigma)?))
}

/// Proper impedance passivity with the margin `λ_min(Dᵀ + D)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProperPassivity {
    pub proper: bool,
    pub margin: f64,
}

/// Impedance passive with `Dᵀ + D` positive definite (relative to `‖D‖`).
pub fn properly_impedance_passive(sys: &StateSpaceSystem) -> ProperPassivity {
    let cert = impedance_certificate(sys);
    let sym = &sys.d + sys.d.transpose();
    let eig = sym_eigenvalues(&sym);
    let margin = if eig.is_empty() { 0.0 } else { eig[0] };
    let dn = norm2(&sys.d);
    let proper = cert.is_passive() && dn > 0.0 && margin > CERT_TOL * dn;
    ProperPassivity { proper, margin }
}
