//! Representation changes: the fundamental block operations, internal and
//! external Cayley transforms, the internal reciprocal, and the hybrid and
//! chain transforms with their inverses.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{
    block_diag, cond2, from_blocks, gated_inverse, hstack, lu_inverse, spd_sqrt_generic, sym_eigenvalues, vstack,
    COND_GATE,
};
use crate::system::{DiscreteSystem, StateSpaceSystem};
use crate::xprec::Real;

/// Port resistances `R = diag(R1, R2)`, both symmetric positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct ResistanceMatrix {
    pub r1: DMatrix<f64>,
    pub r2: DMatrix<f64>,
}

fn check_spd(name: &str, r: &DMatrix<f64>) -> Result<()> {
    if r.nrows() != r.ncols() {
        return Err(Error::NotSpd(format!("{name} is not square")));
    }
    let asym = (r - r.transpose()).amax();
    if asym > 1e-12 * r.amax().max(f64::MIN_POSITIVE) {
        return Err(Error::NotSpd(format!("{name} is not symmetric")));
    }
    let eig = sym_eigenvalues(r);
    if !eig.is_empty() && !(eig[0] > 0.0) {
        return Err(Error::NotSpd(format!("{name} has eigenvalue {:e}", eig[0])));
    }
    Ok(())
}

impl ResistanceMatrix {
    pub fn new(r1: DMatrix<f64>, r2: DMatrix<f64>) -> Result<Self> {
        check_spd("R1", &r1)?;
        check_spd("R2", &r2)?;
        Ok(ResistanceMatrix { r1, r2 })
    }

    /// `R1 = r1·I_{m1}`, `R2 = r2·I_{m2}`.
    pub fn scalar(m1: usize, r1: f64, m2: usize, r2: f64) -> Result<Self> {
        Self::new(DMatrix::identity(m1, m1) * r1, DMatrix::identity(m2, m2) * r2)
    }

    /// The composite `diag(R1, R2)`.
    pub fn full(&self) -> DMatrix<f64> {
        block_diag(&self.r1, &self.r2)
    }

    fn check_split(&self, sys_m1: usize, sys_m2: usize) -> Result<()> {
        if self.r1.nrows() != sys_m1 || self.r2.nrows() != sys_m2 {
            return Err(Error::DimensionMismatch(format!(
                "resistance blocks {}+{} do not match split {}+{}",
                self.r1.nrows(),
                self.r2.nrows(),
                sys_m1,
                sys_m2
            )));
        }
        Ok(())
    }
}

/// Quadruple over a generic scalar, used for extended-precision chains.
#[derive(Debug, Clone)]
pub(crate) struct Quad<T: Real> {
    pub a: DMatrix<T>,
    pub b: DMatrix<T>,
    pub c: DMatrix<T>,
    pub d: DMatrix<T>,
    pub m1: usize,
    pub m2: usize,
}

impl<T: Real> Quad<T> {
    pub fn from_sys(s: &StateSpaceSystem) -> Self {
        let cv = |m: &DMatrix<f64>| m.map(T::from_f64);
        Quad { a: cv(&s.a), b: cv(&s.b), c: cv(&s.c), d: cv(&s.d), m1: s.m1, m2: s.m2 }
    }

    pub fn to_sys(&self) -> StateSpaceSystem {
        let cv = |m: &DMatrix<T>| m.map(|x| x.to_f64());
        StateSpaceSystem { a: cv(&self.a), b: cv(&self.b), c: cv(&self.c), d: cv(&self.d), m1: self.m1, m2: self.m2 }
    }
}

pub(crate) fn gate<T: Real>(m: &DMatrix<T>, err: impl Fn(f64) -> Error) -> Result<DMatrix<T>> {
    let c = cond2(&m.map(|x| x.to_f64()));
    if !(c <= COND_GATE) {
        return Err(err(c));
    }
    lu_inverse(m).ok_or_else(|| err(f64::INFINITY))
}

/// External Cayley transform of `D + εI` with resistance `R`, over any scalar.
pub(crate) fn ext_cayley_g<T: Real>(q: &Quad<T>, r: &DMatrix<f64>, eps: f64) -> Result<Quad<T>> {
    let m = q.m1 + q.m2;
    let eye = DMatrix::<T>::identity(m, m);
    let shifted = &q.d + &eye * T::from_f64(eps) + r.map(T::from_f64);
    let x = gate(&shifted, |cond| Error::SingularShiftedFeedthrough { cond })?;
    let rh = spd_sqrt_generic::<T>(r);
    let s2 = T::from_f64(2.0).sqrt();
    let xc = &x * &q.c;
    let xrh = &x * &rh;
    Ok(Quad {
        a: &q.a - &q.b * &xc,
        b: &q.b * &xrh * s2,
        c: &rh * &xc * s2,
        d: &eye - &rh * &xrh * T::from_f64(2.0),
        m1: q.m1,
        m2: q.m2,
    })
}

/// Inverse external Cayley transform with resistance `R`, over any scalar.
pub(crate) fn inv_ext_cayley_g<T: Real>(q: &Quad<T>, r: &DMatrix<f64>) -> Result<Quad<T>> {
    let m = q.m1 + q.m2;
    let eye = DMatrix::<T>::identity(m, m);
    let y = gate(&(&eye - &q.d), |cond| Error::OneEigenvalue { cond })?;
    let rh = spd_sqrt_generic::<T>(r);
    let s2 = T::from_f64(2.0).sqrt();
    let yc = &y * &q.c;
    Ok(Quad {
        a: &q.a + &q.b * &yc,
        b: &q.b * &y * &rh * s2,
        c: &rh * &yc * s2,
        d: &rh * &y * (&eye + &q.d) * &rh,
        m1: q.m1,
        m2: q.m2,
    })
}

fn inv_gate(m: &DMatrix<f64>, err: impl Fn(f64) -> Error) -> Result<DMatrix<f64>> {
    gated_inverse(m).map_err(err)
}

fn require_equal_split(sys: &StateSpaceSystem) -> Result<()> {
    if sys.m1 != sys.m2 {
        return Err(Error::SplitMismatch { m1: sys.m1, m2: sys.m2 });
    }
    Ok(())
}

fn assemble(
    a: DMatrix<f64>,
    b1: &DMatrix<f64>,
    b2: &DMatrix<f64>,
    c1: &DMatrix<f64>,
    c2: &DMatrix<f64>,
    d: [&DMatrix<f64>; 4],
) -> StateSpaceSystem {
    let m1 = c1.nrows();
    let m2 = c2.nrows();
    StateSpaceSystem {
        a,
        b: hstack(b1, b2),
        c: vstack(c1, c2),
        d: from_blocks(&[&[d[0], d[1]], &[d[2], d[3]]]),
        m1,
        m2,
    }
}

/// Full inversion: `(A − BD⁻¹C, BD⁻¹, −D⁻¹C, D⁻¹)`.
pub fn full_inversion(sys: &StateSpaceSystem) -> Result<StateSpaceSystem> {
    let di = inv_gate(&sys.d, |cond| Error::SingularFeedthrough { cond })?;
    let dic = &di * &sys.c;
    Ok(StateSpaceSystem { a: &sys.a - &sys.b * &dic, b: &sys.b * &di, c: -dic, d: di, m1: sys.m1, m2: sys.m2 })
}

/// Output flip: exchanges the top and bottom output channels.
pub fn output_flip(sys: &StateSpaceSystem) -> Result<StateSpaceSystem> {
    require_equal_split(sys)?;
    Ok(assemble(
        sys.a.clone(),
        &sys.b1(),
        &sys.b2(),
        &sys.c2(),
        &sys.c1(),
        [&sys.d21(), &sys.d22(), &sys.d11(), &sys.d12()],
    ))
}

/// Input flip: exchanges the top and bottom input channels.
pub fn input_flip(sys: &StateSpaceSystem) -> Result<StateSpaceSystem> {
    require_equal_split(sys)?;
    Ok(assemble(
        sys.a.clone(),
        &sys.b2(),
        &sys.b1(),
        &sys.c1(),
        &sys.c2(),
        [&sys.d12(), &sys.d11(), &sys.d22(), &sys.d21()],
    ))
}

/// Sign reversal of the bottom output channel.
pub fn sign_reversal(sys: &StateSpaceSystem) -> StateSpaceSystem {
    let mut out = sys.clone();
    let (n, m1, m2) = (sys.n(), sys.m1, sys.m2);
    out.c.view_mut((m1, 0), (m2, n)).neg_mut();
    out.d.view_mut((m1, 0), (m2, m1 + m2)).neg_mut();
    out
}

/// Top inversion: new inputs `(−y1, u2)`, outputs `(−u1, y2)`; an involution.
pub fn top_inversion(sys: &StateSpaceSystem) -> Result<StateSpaceSystem> {
    let e = inv_gate(&sys.d11(), |cond| Error::SingularBlock { block: "D11".into(), cond })?;
    let (b1, b2, c1, c2) = (sys.b1(), sys.b2(), sys.c1(), sys.c2());
    let (d12, d21, d22) = (sys.d12(), sys.d21(), sys.d22());
    let ec1 = &e * &c1;
    let ed12 = &e * &d12;
    let b1e = &b1 * &e;
    let d21e = &d21 * &e;
    Ok(assemble(
        &sys.a - &b1 * &ec1,
        &(-&b1e),
        &(&b2 - &b1 * &ed12),
        &ec1,
        &(&c2 - &d21 * &ec1),
        [&e, &ed12, &(-&d21e), &(&d22 - &d21 * &ed12)],
    ))
}

/// Bottom inversion `TI ∘ FI = FI ∘ TI`: new inputs `(−u1, y2)`, outputs `(−y1, u2)`.
pub fn bottom_inversion(sys: &StateSpaceSystem) -> Result<StateSpaceSystem> {
    let e = inv_gate(&sys.d22(), |cond| Error::SingularBlock { block: "D22".into(), cond })?;
    let (b1, b2, c1, c2) = (sys.b1(), sys.b2(), sys.c1(), sys.c2());
    let (d11, d12, d21) = (sys.d11(), sys.d12(), sys.d21());
    let ec2 = &e * &c2;
    let ed21 = &e * &d21;
    let b2e = &b2 * &e;
    let d12e = &d12 * &e;
    Ok(assemble(
        &sys.a - &b2 * &ec2,
        &(&b2 * &ed21 - &b1),
        &b2e,
        &(&d12 * &ec2 - &c1),
        &(-&ec2),
        [&(&d11 - &d12 * &ed21), &(-&d12e), &ed21, &e],
    ))
}

/// Internal Cayley transform with parameter `sigma > 0`.
pub fn internal_cayley(sys: &StateSpaceSystem, sigma: f64) -> Result<DiscreteSystem> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    let n = sys.n();
    let eye = DMatrix::<f64>::identity(n, n);
    let r = inv_gate(&(&eye * sigma - &sys.a), |_| Error::NearSpectrum { re: sigma, im: 0.0 })?;
    let k = (2.0 * sigma).sqrt();
    let rb = &r * &sys.b;
    Ok(DiscreteSystem {
        a: (&eye * sigma + &sys.a) * &r,
        b: &rb * k,
        c: &sys.c * &r * k,
        d: &sys.d + &sys.c * &rb,
        sigma,
        m1: sys.m1,
        m2: sys.m2,
    })
}

/// Inverse internal Cayley transform; requires `−1 ∉ σ(A_d)`.
pub fn inverse_internal_cayley(phi: &DiscreteSystem) -> Result<StateSpaceSystem> {
    let n = phi.n();
    let sigma = phi.sigma;
    let eye = DMatrix::<f64>::identity(n, n);
    let e = inv_gate(&(&eye + &phi.a), |cond| Error::MinusOneEigenvalue { cond })?;
    let k = (2.0 * sigma).sqrt();
    let eb = &e * &phi.b;
    Ok(StateSpaceSystem {
        a: &e * (&phi.a - &eye) * sigma,
        b: &eb * k,
        c: &phi.c * &e * k,
        d: &phi.d - &phi.c * &eb,
        m1: phi.m1,
        m2: phi.m2,
    })
}

/// Internal reciprocal `(A⁻¹, A⁻¹B, −CA⁻¹, D − CA⁻¹B)`.
pub fn internal_reciprocal(sys: &StateSpaceSystem) -> Result<StateSpaceSystem> {
    let ai = inv_gate(&sys.a, |cond| Error::SingularGenerator { cond })?;
    let aib = &ai * &sys.b;
    Ok(StateSpaceSystem {
        b: aib.clone(),
        c: -(&sys.c * &ai),
        d: &sys.d - &sys.c * &aib,
        a: ai,
        m1: sys.m1,
        m2: sys.m2,
    })
}

/// External Cayley transform from impedance to scattering form.
pub fn external_cayley(sys_i: &StateSpaceSystem, r: &ResistanceMatrix) -> Result<StateSpaceSystem> {
    r.check_split(sys_i.m1, sys_i.m2)?;
    Ok(ext_cayley_g(&Quad::<f64>::from_sys(sys_i), &r.full(), 0.0)?.to_sys())
}

/// Inverse external Cayley transform from scattering to impedance form.
pub fn inverse_external_cayley(sys: &StateSpaceSystem, r: &ResistanceMatrix) -> Result<StateSpaceSystem> {
    r.check_split(sys.m1, sys.m2)?;
    Ok(inv_ext_cayley_g(&Quad::<f64>::from_sys(sys), &r.full())?.to_sys())
}

/// Hybrid transform: new inputs `(i1, v2)`, outputs `(v1, −i2)`.
pub fn hybrid_transform(sys_i: &StateSpaceSystem) -> Result<StateSpaceSystem> {
    let e = inv_gate(&sys_i.d22(), |cond| Error::SingularBlock { block: "D22".into(), cond })?;
    let s = sys_i;
    let (b1, b2, c1, c2) = (s.b1(), s.b2(), s.c1(), s.c2());
    let (d11, d12, d21) = (s.d11(), s.d12(), s.d21());
    let ec2 = &e * &c2;
    let ed21 = &e * &d21;
    let d12e = &d12 * &e;
    Ok(assemble(
        &s.a - &b2 * &ec2,
        &(&b1 - &b2 * &ed21),
        &(&b2 * &e),
        &(&c1 - &d12 * &ec2),
        &ec2,
        [&(&d11 - &d12 * &ed21), &d12e, &ed21, &(-&e)],
    ))
}

/// Inverse of [`hybrid_transform`].
pub fn inverse_hybrid(sys_h: &StateSpaceSystem) -> Result<StateSpaceSystem> {
    let e = inv_gate(&sys_h.d22(), |cond| Error::SingularBlock { block: "Dh22".into(), cond })?;
    let s = sys_h;
    let (b1, b2, c1, c2) = (s.b1(), s.b2(), s.c1(), s.c2());
    let (d11, d12, d21) = (s.d11(), s.d12(), s.d21());
    let ec2 = &e * &c2;
    let ed21 = &e * &d21;
    let d12e = &d12 * &e;
    Ok(assemble(
        &s.a - &b2 * &ec2,
        &(&b1 - &b2 * &ed21),
        &(-(&b2 * &e)),
        &(&c1 - &d12 * &ec2),
        &(-&ec2),
        [&(&d11 - &d12 * &ed21), &(-&d12e), &(-&ed21), &(-&e)],
    ))
}

/// Chain transform: new inputs `(u2, y2)`, outputs `(y1, u1)`; needs `D21` invertible.
pub fn chain_transform(sys: &StateSpaceSystem) -> Result<StateSpaceSystem> {
    require_equal_split(sys)?;
    let e = inv_gate(&sys.d21(), |cond| Error::SingularBlock { block: "D21".into(), cond })?;
    let (b1, b2, c1, c2) = (sys.b1(), sys.b2(), sys.c1(), sys.c2());
    let (d11, d12, d22) = (sys.d11(), sys.d12(), sys.d22());
    let ec2 = &e * &c2;
    let ed22 = &e * &d22;
    let b1e = &b1 * &e;
    let d11e = &d11 * &e;
    Ok(assemble(
        &sys.a - &b1 * &ec2,
        &(&b2 - &b1 * &ed22),
        &b1e,
        &(&c1 - &d11 * &ec2),
        &(-&ec2),
        [&(&d12 - &d11 * &ed22), &d11e, &(-&ed22), &e],
    ))
}

/// Inverse of [`chain_transform`]; needs `D_c22` invertible.
pub fn inverse_chain(sys_c: &StateSpaceSystem) -> Result<StateSpaceSystem> {
    require_equal_split(sys_c)?;
    let f = inv_gate(&sys_c.d22(), |cond| Error::SingularBlock { block: "Dc22".into(), cond })?;
    let s = sys_c;
    let (b1, b2, c1, c2) = (s.b1(), s.b2(), s.c1(), s.c2());
    let (d11, d12, d21) = (s.d11(), s.d12(), s.d21());
    let fc2 = &f * &c2;
    let fd21 = &f * &d21;
    let b2f = &b2 * &f;
    let d12f = &d12 * &f;
    Ok(assemble(
        &s.a - &b2 * &fc2,
        &b2f,
        &(&b1 - &b2 * &fd21),
        &(&c1 - &d12 * &fc2),
        &(-&fc2),
        [&d12f, &(&d11 - &d12 * &fd21), &f, &(-&fd21)],
    ))
}
