//! Gauss–Legendre quadrature on `[-1, 1]` and on arbitrary intervals.

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes ascending. Computed by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= 1e-16 * z.abs().max(1.0) {
                dp = legendre_with_derivative(n, z).1;
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (z * p - p0) / (z * z - 1.0);
    (p, d)
}

/// Nodes and weights mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    (x.iter().map(|t| mid + half * t).collect(), w.iter().map(|v| v * half).collect())
}

/// Composite `n`-point rule over `panels` equal panels of `[a, b]`.
pub fn integrate_composite(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let (x, w) = gauss_legendre(n);
    (0..panels)
        .map(|p| {
            let lo = a + h * p as f64;
            let mid = lo + 0.5 * h;
            x.iter().zip(&w).map(|(t, wt)| wt * f(mid + 0.5 * h * t)).sum::<f64>() * 0.5 * h
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_point_rule_matches_closed_form() {
        let (x, w) = gauss_legendre(5);
        let r = (10.0_f64 / 7.0).sqrt();
        assert!((x[4] - (5.0 + 2.0 * r).sqrt() / 3.0).abs() < 1e-15);
        assert!((w[2] - 128.0 / 225.0).abs() < 1e-15);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn exact_for_degree_nine() {
        let (x, w) = gauss_legendre_on(5, 0.0, 2.0);
        let s: f64 = x.iter().zip(&w).map(|(t, v)| v * t.powi(9)).sum();
        assert!((s - 2f64.powi(10) / 10.0).abs() < 1e-12);
    }

    #[test]
    fn composite_integrates_sine() {
        let s = integrate_composite(f64::sin, 0.0, std::f64::consts::PI, 8, 16);
        assert!((s - 2.0).abs() < 1e-14);
    }
}
