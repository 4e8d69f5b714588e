//! Bessel `J1` and Struve `H1` of complex argument.
//!
//! Power series are summed in double-double complex arithmetic, which keeps
//! full double accuracy despite terms of size up to `e^{|z|}`. Beyond the
//! series range the Hankel expansions of `J1`, `Y1` and `H1 − Y1` are used
//! on the half-plane `Re z ≥ 0`, reached through `J1(−z) = −J1(z)` and
//! `H1(−z) = H1(z)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::xprec::{CDd, Dd};

/// Largest supported `|z|`.
pub const ENVELOPE: f64 = 200.0;
/// `J1` uses the series for `|z| ≤ J1_SERIES_RADIUS`.
pub const J1_SERIES_RADIUS: f64 = 16.0;
/// `H1` uses the series while `|z| − |Im z|` (the cancellation exponent) stays below this.
pub const H1_SERIES_CANCELLATION: f64 = 40.0;

const PI_DD: Dd = Dd { hi: std::f64::consts::PI, lo: 1.224_646_799_147_353_2e-16 };

fn check(z: Complex64) -> Result<()> {
    let abs = z.norm();
    if !(abs <= ENVELOPE) {
        return Err(Error::OutOfEnvelope { abs });
    }
    Ok(())
}

/// `Σ_k (−1)^k w^k / (a_k)` with `t_{k+1} = −t_k·w/den(k)`, summed until the
/// terms drop below the double-double resolution of the largest term.
fn alternating_series(t0: CDd, w: CDd, den: impl Fn(usize) -> Dd) -> CDd {
    let mut term = t0;
    let mut sum = t0;
    let mut biggest = t0.norm_f64();
    for k in 0..2000 {
        term = -(term * w).scale(Dd::ONE / den(k));
        sum = sum + term;
        let size = term.norm_f64();
        biggest = biggest.max(size);
        if size <= 1e-34 * biggest && k as f64 > w.norm_f64().sqrt() {
            break;
        }
    }
    sum
}

fn half_sq(z: Complex64) -> CDd {
    let h = CDd::from_c64(z * 0.5);
    h * h
}

/// `J1` series: `(z/2) Σ (−1)^k (z/2)^{2k} / (k!(k+1)!)`.
fn j1_series(z: Complex64) -> CDd {
    let w = half_sq(z);
    let t0 = CDd::from_c64(z * 0.5);
    alternating_series(t0, w, |k| Dd::new(((k + 1) * (k + 2)) as f64))
}

/// `H1` series: `(z/2)² Σ (−1)^k (z/2)^{2k} / (Γ(k+3/2)Γ(k+5/2))`.
fn h1_series(z: Complex64) -> CDd {
    let w = half_sq(z);
    let t0 = w.scale(Dd::new(8.0) / (Dd::new(3.0) * PI_DD));
    alternating_series(t0, w, |k| Dd::new((k as f64 + 1.5) * (k as f64 + 2.5)))
}

/// Hankel `P`, `Q` for order one: `J1 = √(2/πz)(P cos χ − Q sin χ)`,
/// `Y1 = √(2/πz)(P sin χ + Q cos χ)`, `χ = z − 3π/4`.
fn hankel_pq(z: Complex64) -> (Complex64, Complex64) {
    let mu = 4.0;
    let inv8z = 1.0 / (8.0 * z);
    let mut p = Complex64::new(1.0, 0.0);
    let mut q = Complex64::new(0.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) * inv8z / k as f64;
        let size = term.norm();
        if size > last || size < 1e-17 * p.norm().max(q.norm()) {
            break;
        }
        last = size;
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
    }
    (p, q)
}

fn bessel_asymptotic(z: Complex64) -> (Complex64, Complex64) {
    let (p, q) = hankel_pq(z);
    let chi = z - 0.75 * std::f64::consts::PI;
    let amp = (2.0 / (std::f64::consts::PI * z)).sqrt();
    let (c, s) = (chi.cos(), chi.sin());
    (amp * (p * c - q * s), amp * (p * s + q * c))
}

/// `H1 − Y1 ~ (1/π) Σ Γ(k+½)/Γ(3/2−k) (z/2)^{−2k}`, truncated at its smallest term.
fn struve_minus_neumann(z: Complex64) -> Complex64 {
    let w = (z * 0.5).powi(-2);
    let mut term = Complex64::new(2.0, 0.0);
    let mut sum = term;
    let mut last = 2.0;
    for k in 0..200 {
        let kf = k as f64;
        let ratio = (kf + 0.5) * (0.5 - kf);
        let next = term * w * ratio;
        let size = next.norm();
        if size >= last || size < 1e-18 * sum.norm() {
            break;
        }
        last = size;
        term = next;
        sum += term;
    }
    sum / std::f64::consts::PI
}

/// Bessel function of the first kind of order one.
pub fn bessel_j1(z: Complex64) -> Result<Complex64> {
    check(z)?;
    if z.norm() <= J1_SERIES_RADIUS {
        return Ok(j1_series(z).to_c64());
    }
    let (zz, sign) = if z.re < 0.0 { (-z, -1.0) } else { (z, 1.0) };
    Ok(bessel_asymptotic(zz).0 * sign)
}

/// Struve function of order one.
pub fn struve_h1(z: Complex64) -> Result<Complex64> {
    check(z)?;
    if z.norm() - z.im.abs() <= H1_SERIES_CANCELLATION {
        return Ok(h1_series(z).to_c64());
    }
    let zz = if z.re < 0.0 { -z } else { z };
    Ok(bessel_asymptotic(zz).1 + struve_minus_neumann(zz))
}

/// Below this `|z|` the piston ratio is summed from the power series.
pub const PISTON_SERIES_RADIUS: f64 = 40.0;

/// Hankel functions `(H1⁽¹⁾, H1⁽²⁾)` of order one for `Re z ≥ 0`.
fn hankel_functions(z: Complex64) -> (Complex64, Complex64) {
    let (p, q) = hankel_pq(z);
    let chi = z - 0.75 * std::f64::consts::PI;
    let amp = (2.0 / (std::f64::consts::PI * z)).sqrt();
    let i = Complex64::i();
    (amp * (i * chi).exp() * (p + i * q), amp * (-i * chi).exp() * (p - i * q))
}

/// `1 + (2i/z)(i J1(z) + H1(z))`, the normalised piston impedance.
///
/// Inside [`PISTON_SERIES_RADIUS`] both series are combined in double-double
/// arithmetic before rounding. Outside it the sum `i J1 + H1` is rewritten as
/// `i H1⁽²⁾(z) + (H1 − Y1)(z)`, which avoids the exponentially large terms
/// that cancel between `J1` and `H1` when `Im z < 0`.
pub fn piston_ratio(z: Complex64) -> Result<Complex64> {
    check(z)?;
    if z == Complex64::new(0.0, 0.0) {
        return Ok(z);
    }
    if z.norm() <= PISTON_SERIES_RADIUS {
        let w = half_sq(z);
        let r1 = alternating_series(w.scale(Dd::new(0.5)), w, |k| Dd::new(((k + 2) * (k + 3)) as f64));
        let t0 = CDd::from_c64(z * 0.5).scale(Dd::new(8.0) / (Dd::new(3.0) * PI_DD));
        let r2 = alternating_series(t0, w, |k| Dd::new((k as f64 + 1.5) * (k as f64 + 2.5)));
        return Ok((r1 + CDd::new(-r2.im, r2.re)).to_c64());
    }
    let i = Complex64::i();
    let k = if z.re >= 0.0 {
        i * hankel_functions(z).1 + struve_minus_neumann(z)
    } else {
        -i * hankel_functions(-z).0 + struve_minus_neumann(-z)
    };
    Ok(1.0 + 2.0 * i / z * k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_argument() {
        assert_eq!(bessel_j1(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        assert_eq!(struve_h1(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn tabulated_real_values() {
        assert!((bessel_j1(c(1.0, 0.0)).unwrap().re - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((struve_h1(c(1.0, 0.0)).unwrap().re - 0.198_457_336_201_944_9).abs() < 1e-15);
    }

    #[test]
    fn series_and_asymptotics_agree_near_the_switch() {
        for z in [c(16.5, 0.3), c(15.0, -2.0), c(-17.0, 1.0)] {
            let s = j1_series(z).to_c64();
            let a = if z.re < 0.0 { -bessel_asymptotic(-z).0 } else { bessel_asymptotic(z).0 };
            assert!((s - a).norm() < 1e-13 * (1.0 + s.norm()), "{z}: {s} vs {a}");
        }
        for z in [c(41.0, 0.5), c(45.0, -3.0)] {
            let s = h1_series(z).to_c64();
            let a = bessel_asymptotic(z).1 + struve_minus_neumann(z);
            assert!((s - a).norm() < 1e-13 * (1.0 + s.norm()), "{z}: {s} vs {a}");
        }
    }

    #[test]
    fn parity() {
        let z = c(20.0, 3.0);
        assert!((bessel_j1(-z).unwrap() + bessel_j1(z).unwrap()).norm() < 1e-14);
        assert!((struve_h1(-z).unwrap() - struve_h1(z).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn piston_ratio_branches_agree_with_separate_functions() {
        for z in [c(3.0, -1.0), c(30.0, 2.0), c(-25.0, -4.0), c(60.0, -5.0), c(-80.0, 3.0)] {
            let direct = 1.0 - 2.0 * bessel_j1(z).unwrap() / z + 2.0 * c(0.0, 1.0) * struve_h1(z).unwrap() / z;
            let r = piston_ratio(z).unwrap();
            assert!((r - direct).norm() < 1e-11 * direct.norm().max(1.0), "{z}: {r} vs {direct}");
        }
    }

    #[test]
    fn piston_ratio_series_and_asymptotics_agree_at_the_switch() {
        let i = c(0.0, 1.0);
        for z in [c(40.5, -1.0), c(3.0, -40.5), c(-28.0, -29.0), c(-30.0, 27.0)] {
            let a = {
                let zz = if z.re >= 0.0 { z } else { -z };
                let (h1, h2) = hankel_functions(zz);
                let k = if z.re >= 0.0 { i * h2 } else { -i * h1 } + struve_minus_neumann(zz);
                1.0 + 2.0 * i / z * k
            };
            let w = half_sq(z);
            let r1 = alternating_series(w.scale(Dd::new(0.5)), w, |k| Dd::new(((k + 2) * (k + 3)) as f64));
            let t0 = CDd::from_c64(z * 0.5).scale(Dd::new(8.0) / (Dd::new(3.0) * PI_DD));
            let r2 = alternating_series(t0, w, |k| Dd::new((k as f64 + 1.5) * (k as f64 + 2.5)));
            let s = (r1 + CDd::new(-r2.im, r2.re)).to_c64();
            assert!((s - a).norm() < 1e-13 * s.norm().max(1.0), "{z}: {s} vs {a}");
        }
    }

    #[test]
    fn envelope() {
        assert!(matches!(bessel_j1(c(250.0, 0.0)), Err(Error::OutOfEnvelope { .. })));
    }
}
