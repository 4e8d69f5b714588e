//! Cubic Hermite finite elements for Webster's horn equation.
//!
//! Degrees of freedom on an equidistant mesh `0 = χ_0 < … < χ_n = L`: the
//! value at node `j` has index `j` (`0 ≤ j ≤ n`) and the derivative at an
//! interior node `j` has index `n + j` (`0 < j < n`), `2n` in total.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::secondorder::{first_order_realization, Observation, SecondOrderSystem};
use crate::system::StateSpaceSystem;

/// Cross-sectional area `𝒜(χ)`, piecewise linear between geometry nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaFunction {
    nodes: Vec<f64>,
    areas: Vec<f64>,
}

impl AreaFunction {
    pub fn new(nodes: Vec<f64>, areas: Vec<f64>) -> Result<Self> {
        if nodes.len() != areas.len() {
            return Err(Error::BadGeometry(format!("{} nodes but {} areas", nodes.len(), areas.len())));
        }
        if nodes.len() < 2 {
            return Err(Error::BadGeometry("at least two nodes are required".into()));
        }
        if nodes[0] != 0.0 {
            return Err(Error::BadGeometry(format!("first node is {} instead of 0", nodes[0])));
        }
        if let Some(i) = nodes.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Monotonicity { line: i + 2 });
        }
        if let Some(a) = areas.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::BadGeometry(format!("area {a} is not positive")));
        }
        Ok(AreaFunction { nodes, areas })
    }

    /// Uniform tube of length `l` and area `a`.
    pub fn uniform(l: f64, a: f64) -> Result<Self> {
        Self::new(vec![0.0, l], vec![a, a])
    }

    /// Piecewise constant sections `(length, area)` joined by steep linear
    /// ramps of width `ramp` centred on each junction.
    pub fn sections(parts: &[(f64, f64)], ramp: f64) -> Result<Self> {
        let mut nodes = vec![0.0];
        let mut areas = vec![parts.first().ok_or_else(|| Error::BadGeometry("no sections".into()))?.1];
        let mut x = 0.0;
        for (i, &(len, a)) in parts.iter().enumerate() {
            x += len;
            if i + 1 < parts.len() {
                nodes.push(x - 0.5 * ramp);
                areas.push(a);
                nodes.push(x + 0.5 * ramp);
                areas.push(parts[i + 1].1);
            } else {
                nodes.push(x);
                areas.push(a);
            }
        }
        Self::new(nodes, areas)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    /// Tube length `L`.
    pub fn length(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Linear interpolation, clamped to the end values outside `[0, L]`.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        if x <= self.nodes[0] {
            return self.areas[0];
        }
        if x >= self.nodes[n - 1] {
            return self.areas[n - 1];
        }
        let i = self.nodes.partition_point(|&v| v <= x) - 1;
        let t = (x - self.nodes[i]) / (self.nodes[i + 1] - self.nodes[i]);
        self.areas[i] + t * (self.areas[i + 1] - self.areas[i])
    }
}

/// Value and derivative of the local Hermite function `φ^kind` on `[a, b]`.
pub fn hermite_basis_eval(a: f64, b: f64, kind: usize, x: f64) -> Result<(f64, f64)> {
    if !(x >= a && x <= b) {
        return Err(Error::OutOfElement { x, a, b });
    }
    let h = b - a;
    let l = (x - a) / h;
    let (l2, l3) = (l * l, l * l * l);
    let d1 = (6.0 * l2 - 6.0 * l) / h;
    Ok(match kind {
        1 => (2.0 * l3 - 3.0 * l2 + 1.0, d1),
        2 => (-2.0 * l3 + 3.0 * l2, -d1),
        3 => ((l3 - 2.0 * l2 + l) * h, 3.0 * l2 - 4.0 * l + 1.0),
        4 => ((l3 - l2) * h, 3.0 * l2 - 2.0 * l),
        _ => return Err(Error::InvalidArgument(format!("Hermite basis kind {kind} not in 1..=4"))),
    })
}

/// Assembled waveguide: impedance conservative two-port with inputs volume
/// velocities `(i1, i2)` and outputs pressures `(p1, p2)`.
#[derive(Debug, Clone)]
pub struct WaveguideModel {
    pub system: StateSpaceSystem,
    pub mass: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    pub n_elements: usize,
    pub c: f64,
    pub rho: f64,
}

fn global_index(n: usize, node: usize, derivative: bool) -> Option<usize> {
    match derivative {
        false => Some(node),
        true if node > 0 && node < n => Some(n + node),
        true => None,
    }
}

/// Local basis values and `χ`-derivatives at `s = 2ℓ − 1` on an element of
/// width `h`. Written in `s` so that mirrored points give bitwise mirrored values.
fn reference_basis(s: f64, h: f64) -> ([f64; 4], [f64; 4]) {
    let s2 = s * s;
    let odd = 3.0 * s - s2 * s;
    let val = [
        (2.0 - odd) * 0.25,
        (2.0 + odd) * 0.25,
        h * (1.0 + s) * (s - 1.0) * (s - 1.0) * 0.125,
        h * (1.0 + s) * (1.0 + s) * (s - 1.0) * 0.125,
    ];
    let d1 = 1.5 * (s2 - 1.0) / h;
    let der = [d1, -d1, (3.0 * s2 - 2.0 * s - 1.0) * 0.25, (3.0 * s2 + 2.0 * s - 1.0) * 0.25];
    (val, der)
}

/// Mass and stiffness matrices for `k1 = 𝒜/c²`, `k2 = 𝒜`.
pub fn assemble_matrices(area: &AreaFunction, n: usize, c: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if n < 2 {
        return Err(Error::BadGeometry(format!("need at least 2 elements, got {n}")));
    }
    if !(c > 0.0) {
        return Err(Error::BadGeometry(format!("speed of sound {c} must be positive")));
    }
    let l = area.length();
    let h = l / n as f64;
    let dim = 2 * n;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    let mut k = DMatrix::<f64>::zeros(dim, dim);
    let (gx, gw) = gauss_legendre(5);
    let q = gx.len();
    let c2 = c * c;
    for e in 1..=n {
        let mid = h * (e as f64 - 0.5);
        let mut terms_m = vec![[[0.0; 4]; 4]; q];
        let mut terms_k = vec![[[0.0; 4]; 4]; q];
        for p in 0..q {
            let ar = area.eval(mid + 0.5 * h * gx[p]);
            let (val, der) = reference_basis(gx[p], h);
            let wk = gw[p] * 0.5 * h * ar;
            let wm = wk / c2;
            for i in 0..4 {
                for j in 0..4 {
                    terms_m[p][i][j] = wm * val[i] * val[j];
                    terms_k[p][i][j] = wk * der[i] * der[j];
                }
            }
        }
        let dofs = [
            global_index(n, e - 1, false),
            global_index(n, e, false),
            global_index(n, e - 1, true),
            global_index(n, e, true),
        ];
        for i in 0..4 {
            let Some(gi) = dofs[i] else { continue };
            for j in 0..4 {
                let Some(gj) = dofs[j] else { continue };
                m[(gi, gj)] += mirrored_sum(&terms_m, i, j);
                k[(gi, gj)] += mirrored_sum(&terms_k, i, j);
            }
        }
    }
    Ok((m, k))
}

/// Sums quadrature terms in mirrored pairs `(p, q−1−p)`, innermost last.
fn mirrored_sum(terms: &[[[f64; 4]; 4]], i: usize, j: usize) -> f64 {
    let q = terms.len();
    let mut acc = if q % 2 == 1 { terms[q / 2][i][j] } else { 0.0 };
    for p in (0..q / 2).rev() {
        acc += terms[p][i][j] + terms[q - 1 - p][i][j];
    }
    acc
}

/// Assembles the impedance conservative waveguide two-port with `n` elements.
pub fn assemble(area: &AreaFunction, n: usize, c: f64, rho: f64) -> Result<WaveguideModel> {
    if !(rho > 0.0) {
        return Err(Error::BadGeometry(format!("density {rho} must be positive")));
    }
    let (mass, stiffness) = assemble_matrices(area, n, c)?;
    let dim = 2 * n;
    let mut f = DMatrix::<f64>::zeros(dim, 2);
    f[(0, 0)] = 1.0;
    f[(n, 1)] = 1.0;
    let so =
        SecondOrderSystem::new(mass.clone(), DMatrix::zeros(dim, dim), stiffness.clone(), f, Observation::Collocated)?;
    let first = first_order_realization(&so)?;
    let b = first.b * rho.sqrt();
    let cm = b.transpose();
    let system = StateSpaceSystem::new(first.a, b, cm, DMatrix::zeros(2, 2), 1, 1)?;
    Ok(WaveguideModel { system, mass, stiffness, n_elements: n, c, rho })
}

/// Reads an area CSV: header `chi_m,area_m2`, `#` comments and blank lines ignored.
pub fn parse_area_csv(text: &str) -> Result<AreaFunction> {
    let mut nodes = Vec::new();
    let mut areas = Vec::new();
    let mut header_seen = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            header_seen = true;
            if line.replace(' ', "") == "chi_m,area_m2" {
                continue;
            }
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(Error::Parse { line: line_no, msg: format!("expected 2 fields, found {}", fields.len()) });
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse { line: line_no, msg: format!("{s:?}: {e}") });
        let x = parse(fields[0])?;
        let a = parse(fields[1])?;
        if let Some(&prev) = nodes.last() {
            if !(x > prev) {
                return Err(Error::Monotonicity { line: line_no });
            }
        }
        nodes.push(x);
        areas.push(a);
    }
    AreaFunction::new(nodes, areas)
}

/// Reads and validates an area CSV file.
pub fn load_area_csv(path: impl AsRef<Path>) -> Result<AreaFunction> {
    parse_area_csv(&fs::read_to_string(path)?)
}

/// Writes an area CSV with round-trip exact decimal fields.
pub fn write_area_csv(area: &AreaFunction, mut out: impl Write) -> Result<()> {
    writeln!(out, "chi_m,area_m2")?;
    for (x, a) in area.nodes.iter().zip(&area.areas) {
        writeln!(out, "{x:e},{a:e}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::passivity::{impedance_certificate, Verdict};

    #[test]
    fn cardinal_properties() {
        assert_eq!(hermite_basis_eval(0.0, 2.0, 1, 0.0).unwrap(), (1.0, 0.0));
        assert_eq!(hermite_basis_eval(0.0, 2.0, 1, 2.0).unwrap(), (0.0, 0.0));
        assert_eq!(hermite_basis_eval(0.0, 2.0, 3, 0.0).unwrap().1, 1.0);
        assert!(matches!(hermite_basis_eval(0.0, 1.0, 1, 1.5), Err(Error::OutOfElement { .. })));
    }

    #[test]
    fn value_functions_sum_to_one() {
        for i in 1..=5 {
            let x = 0.3 + 0.9 * i as f64 / 6.0;
            let s = hermite_basis_eval(0.3, 1.2, 1, x).unwrap().0 + hermite_basis_eval(0.3, 1.2, 2, x).unwrap().0;
            assert!((s - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn constants_are_in_the_stiffness_kernel() {
        let area = AreaFunction::uniform(0.175, 1e-4).unwrap();
        let (_, k) = assemble_matrices(&area, 4, 343.0).unwrap();
        let mut v = nalgebra::DVector::zeros(8);
        for j in 0..=4 {
            v[j] = 1.0;
        }
        let r = &k * v;
        assert!(r.iter().all(|x| *x == 0.0), "{r}");
    }

    #[test]
    fn assembled_system_is_conservative() {
        let area = AreaFunction::new(vec![0.0, 0.1, 0.175], vec![2e-4, 5e-4, 1e-4]).unwrap();
        let model = assemble(&area, 12, 343.0, 1.2).unwrap();
        assert_eq!(model.system.n(), 48);
        assert_eq!(impedance_certificate(&model.system).verdict, Verdict::Conservative);
    }

    #[test]
    fn csv_round_trip_and_monotonicity() {
        let area = AreaFunction::new(vec![0.0, 0.1 / 3.0, 0.175], vec![1e-4, 2.0 / 3.0 * 1e-4, 1e-4]).unwrap();
        let mut buf = Vec::new();
        write_area_csv(&area, &mut buf).unwrap();
        let back = parse_area_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, area);
        let bad = "chi_m,area_m2\n0,1e-4\n0.2,1e-4\n0.1,1e-4\n";
        assert_eq!(parse_area_csv(bad).unwrap_err(), Error::Monotonicity { line: 4 });
        let garbage = "chi_m,area_m2\n# note\n0,abc\n";
        assert!(matches!(parse_area_csv(garbage), Err(Error::Parse { line: 3, .. })));
    }
}
