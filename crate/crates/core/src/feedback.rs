//! Redheffer star product, cascade-of-chains identity and ε-regularisation.
//!
//! Port convention: `p` has inputs `(u1, u2)` and outputs `(y1, y2)`, `q` has
//! `(ũ1, ũ2)` and `(ỹ1, ỹ2)`. The loop closes with `u2 = ỹ1` and `ũ1 = y2`;
//! the product maps `(u1, ũ2)` to `(y1, ỹ2)` with state `(x_p, x_q)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{block, cond2, from_blocks, lu_inverse, norm2, to_f64, COND_GATE};
use crate::passivity::properly_impedance_passive;
use crate::system::{cascade_product, StateSpaceSystem};
use crate::transforms::{chain_transform, ext_cayley_g, inv_ext_cayley_g, inverse_chain, Quad, ResistanceMatrix};
use crate::xprec::{Dd, Real};

/// Loop-matrix diagnostics of a feedback interconnection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellPosednessReport {
    pub delta1_condition: f64,
    pub delta2_condition: f64,
    pub norm_sum: f64,
    pub well_posed: bool,
}

impl WellPosednessReport {
    /// `‖D_{p22}‖ + ‖D_{q11}‖ < 2`, which suffices for contractive feedthroughs.
    pub fn norm_bound_holds(&self) -> bool {
        self.norm_sum < 2.0
    }
}

fn coupled_blocks<T: Real>(d_p: &DMatrix<T>, p_m1: usize, d_q: &DMatrix<T>, q_m1: usize) -> (DMatrix<T>, DMatrix<T>) {
    let pm2 = d_p.nrows() - p_m1;
    (block(d_p, p_m1, p_m1, pm2, pm2), block(d_q, 0, 0, q_m1, q_m1))
}

fn report_from(dp22: &DMatrix<f64>, dq11: &DMatrix<f64>) -> WellPosednessReport {
    let k = dp22.nrows();
    let eye = DMatrix::<f64>::identity(k, k);
    let delta1_condition = cond2(&(&eye - dp22 * dq11));
    let delta2_condition = cond2(&(&eye - dq11 * dp22));
    WellPosednessReport {
        delta1_condition,
        delta2_condition,
        norm_sum: norm2(dp22) + norm2(dq11),
        well_posed: delta1_condition <= COND_GATE && delta2_condition <= COND_GATE,
    }
}

fn check_coupling(p_m2: usize, q_m1: usize) -> Result<()> {
    if p_m2 != q_m1 {
        return Err(Error::DimensionMismatch(format!("coupled channels differ: p.m2 = {p_m2}, q.m1 = {q_m1}")));
    }
    Ok(())
}

/// Conditions of `Δ1 = I − D_{p22}D_{q11}` and `Δ2 = I − D_{q11}D_{p22}`.
pub fn well_posedness(p: &StateSpaceSystem, q: &StateSpaceSystem) -> Result<WellPosednessReport> {
    check_coupling(p.m2, q.m1)?;
    Ok(report_from(&p.d22(), &q.d11()))
}

/// Star product over a generic scalar. Only `Δ1` is inverted:
/// `Δ2⁻¹D_{q11} = D_{q11}Δ1⁻¹` and `Δ2⁻¹ = I + D_{q11}Δ1⁻¹D_{p22}`.
pub(crate) fn star_g<T: Real>(p: &Quad<T>, q: &Quad<T>) -> Result<Quad<T>> {
    check_coupling(p.m2, q.m1)?;
    let (dp22, dq11) = coupled_blocks(&p.d, p.m1, &q.d, q.m1);
    let report = report_from(&to_f64(&dp22), &to_f64(&dq11));
    if !report.well_posed {
        return Err(Error::NotWellPosed(report));
    }
    let (np, nq) = (p.a.nrows(), q.a.nrows());
    let (p1, k, q2) = (p.m1, p.m2, q.m2);
    let eye = DMatrix::<T>::identity(k, k);
    let l = lu_inverse(&(&eye - &dp22 * &dq11)).ok_or_else(|| Error::NotWellPosed(report.clone()))?;
    let kq = &dq11 * &l;
    let d2 = &eye + &kq * &dp22;
    let ldp = &l * &dp22;

    let bp1 = block(&p.b, 0, 0, np, p1);
    let bp2 = block(&p.b, 0, p1, np, k);
    let cp1 = block(&p.c, 0, 0, p1, np);
    let cp2 = block(&p.c, p1, 0, k, np);
    let dp11 = block(&p.d, 0, 0, p1, p1);
    let dp12 = block(&p.d, 0, p1, p1, k);
    let dp21 = block(&p.d, p1, 0, k, p1);
    let bq1 = block(&q.b, 0, 0, nq, k);
    let bq2 = block(&q.b, 0, k, nq, q2);
    let cq1 = block(&q.c, 0, 0, k, nq);
    let cq2 = block(&q.c, k, 0, q2, nq);
    let dq12 = block(&q.d, 0, k, k, q2);
    let dq21 = block(&q.d, k, 0, q2, k);
    let dq22 = block(&q.d, k, k, q2, q2);

    let kcp2 = &kq * &cp2;
    let kdp21 = &kq * &dp21;
    let d2cq1 = &d2 * &cq1;
    let d2dq12 = &d2 * &dq12;
    let lcp2 = &l * &cp2;
    let ldp21 = &l * &dp21;
    let ldcq1 = &ldp * &cq1;
    let lddq12 = &ldp * &dq12;

    let a11 = &p.a + &bp2 * &kcp2;
    let a12 = &bp2 * &d2cq1;
    let a21 = &bq1 * &lcp2;
    let a22 = &q.a + &bq1 * &ldcq1;
    let b11 = &bp1 + &bp2 * &kdp21;
    let b12 = &bp2 * &d2dq12;
    let b21 = &bq1 * &ldp21;
    let b22 = &bq2 + &bq1 * &lddq12;
    let c11 = &cp1 + &dp12 * &kcp2;
    let c12 = &dp12 * &d2cq1;
    let c21 = &dq21 * &lcp2;
    let c22 = &cq2 + &dq21 * &ldcq1;
    let d11 = &dp11 + &dp12 * &kdp21;
    let d12 = &dp12 * &d2dq12;
    let d21 = &dq21 * &ldp21;
    let d22 = &dq22 + &dq21 * &lddq12;
    Ok(Quad {
        a: from_blocks(&[&[&a11, &a12], &[&a21, &a22]]),
        b: from_blocks(&[&[&b11, &b12], &[&b21, &b22]]),
        c: from_blocks(&[&[&c11, &c12], &[&c21, &c22]]),
        d: from_blocks(&[&[&d11, &d12], &[&d21, &d22]]),
        m1: p1,
        m2: q2,
    })
}

/// Redheffer star product `p ⋆ q` with split `(p.m1, q.m2)`.
pub fn star_product(p: &StateSpaceSystem, q: &StateSpaceSystem) -> Result<StateSpaceSystem> {
    Ok(star_g(&Quad::<f64>::from_sys(p), &Quad::<f64>::from_sys(q))?.to_sys())
}

/// Star product through the cascade of chain transforms.
pub fn star_via_chain(p: &StateSpaceSystem, q: &StateSpaceSystem) -> Result<StateSpaceSystem> {
    let report = well_posedness(p, q)?;
    if !report.well_posed {
        return Err(Error::NotWellPosed(report));
    }
    let cp = chain_transform(p)?;
    let cq = chain_transform(q)?;
    let product = cascade_product(&cp, &cq)?;
    inverse_chain(&product)
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("regularisation ε = {eps} must be non-negative")));
    }
    Ok(())
}

/// Shift-and-invert regularisation `D ↦ D + εI`.
pub fn regularize(sys_i: &StateSpaceSystem, epsilon: f64) -> Result<StateSpaceSystem> {
    check_epsilon(epsilon)?;
    let m = sys_i.m();
    let mut out = sys_i.clone();
    out.d += DMatrix::<f64>::identity(m, m) * epsilon;
    Ok(out)
}

/// External Cayley transform of the regularised system `D + εI`.
pub fn regularized_external_cayley(
    sys_i: &StateSpaceSystem,
    r: &ResistanceMatrix,
    epsilon: f64,
) -> Result<StateSpaceSystem> {
    check_epsilon(epsilon)?;
    let sys = sys_i;
    if r.r1.nrows() != sys.m1 || r.r2.nrows() != sys.m2 {
        return Err(Error::DimensionMismatch(format!(
            "resistance blocks {}+{} do not match split {}+{}",
            r.r1.nrows(),
            r.r2.nrows(),
            sys.m1,
            sys.m2
        )));
    }
    Ok(ext_cayley_g(&Quad::<f64>::from_sys(sys), &r.full(), epsilon)?.to_sys())
}

/// Representation returned by [`star_of_impedance_pair`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairOutput {
    /// The scattering star product at resistance `diag(Rp.R1, Rq.R2)`.
    Scattering,
    /// Its inverse external Cayley transform, an impedance passive system.
    Impedance,
}

/// Couples two impedance passive systems by external Cayley transforms and a
/// star product. The whole chain runs in double-double arithmetic so that
/// `1/ε` entries from small regularisations keep their low-order digits.
pub fn star_of_impedance_pair(
    p_i: &StateSpaceSystem,
    q_i: &StateSpaceSystem,
    rp: &ResistanceMatrix,
    rq: &ResistanceMatrix,
    epsilon_p: f64,
    epsilon_q: f64,
    output: PairOutput,
) -> Result<StateSpaceSystem> {
    check_coupling(p_i.m2, q_i.m1)?;
    for (r, s, name) in [(rp, p_i, "Rp"), (rq, q_i, "Rq")] {
        if r.r1.nrows() != s.m1 || r.r2.nrows() != s.m2 {
            return Err(Error::DimensionMismatch(format!("{name} does not match the port split")));
        }
    }
    if rp.r2 != rq.r1 {
        return Err(Error::ResistanceMismatch);
    }
    let proper_p = properly_impedance_passive(&regularize(p_i, epsilon_p)?).proper;
    let proper_q = properly_impedance_passive(&regularize(q_i, epsilon_q)?).proper;
    if !proper_p && !proper_q {
        return Err(Error::NotProperlyPassive);
    }
    let sp = ext_cayley_g(&Quad::<Dd>::from_sys(p_i), &rp.full(), epsilon_p)?;
    let sq = ext_cayley_g(&Quad::<Dd>::from_sys(q_i), &rq.full(), epsilon_q)?;
    let star = star_g(&sp, &sq)?;
    match output {
        PairOutput::Scattering => Ok(star.to_sys()),
        PairOutput::Impedance => {
            let r = ResistanceMatrix::new(rp.r1.clone(), rq.r2.clone())?;
            Ok(inv_ext_cayley_g(&star, &r.full())?.to_sys())
        }
    }
}
