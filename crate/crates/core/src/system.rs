//! State-space system values, realisation algebra, transfer evaluation,
//! minimality and sampled I/O equivalence.

use nalgebra::{DMatrix, Hessenberg, Schur};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{block, block_diag, from_blocks, hstack, vstack};
use crate::xprec::{two_prod, Dd};

/// Continuous-time quadruple `(A, B, C, D)` with port split `m = m1 + m2`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub m1: usize,
    pub m2: usize,
}

/// Discrete-time quadruple `(A_d, B_d, C_d, D_d)` obtained with Cayley parameter `sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub sigma: f64,
    pub m1: usize,
    pub m2: usize,
}

/// Port signals split into top and bottom channels.
#[derive(Debug, Clone, PartialEq)]
pub struct PortSignalFrame {
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
}

impl PortSignalFrame {
    /// Splits full input and output vectors at `m1`.
    pub fn split(u: &[f64], y: &[f64], m1: usize) -> Result<Self> {
        if u.len() != y.len() || m1 > u.len() {
            return Err(Error::DimensionMismatch(format!(
                "input width {} / output width {} / m1 {}",
                u.len(),
                y.len(),
                m1
            )));
        }
        Ok(PortSignalFrame { u1: u[..m1].to_vec(), u2: u[m1..].to_vec(), y1: y[..m1].to_vec(), y2: y[m1..].to_vec() })
    }

    /// Checks widths against a split `(m1, m2)`.
    pub fn matches(&self, m1: usize, m2: usize) -> bool {
        self.u1.len() == m1 && self.y1.len() == m1 && self.u2.len() == m2 && self.y2.len() == m2
    }

    pub fn input(&self) -> Vec<f64> {
        [self.u1.as_slice(), self.u2.as_slice()].concat()
    }

    pub fn output(&self) -> Vec<f64> {
        [self.y1.as_slice(), self.y2.as_slice()].concat()
    }
}

fn check_quad(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    m1: usize,
    m2: usize,
) -> Result<()> {
    let n = a.nrows();
    let m = m1 + m2;
    let dm = |what: &str, got: (usize, usize), want: (usize, usize)| {
        Error::DimensionMismatch(format!("{what} is {}x{}, expected {}x{}", got.0, got.1, want.0, want.1))
    };
    if a.ncols() != n {
        return Err(dm("A", a.shape(), (n, n)));
    }
    if m == 0 {
        return Err(Error::DimensionMismatch("port width m must be at least 1".into()));
    }
    if b.shape() != (n, m) {
        return Err(dm("B", b.shape(), (n, m)));
    }
    if c.shape() != (m, n) {
        return Err(dm("C", c.shape(), (m, n)));
    }
    if d.shape() != (m, m) {
        return Err(dm("D", d.shape(), (m, m)));
    }
    for (name, mat) in [("A", a), ("B", b), ("C", c), ("D", d)] {
        if mat.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("{name} has a non-finite entry")));
        }
    }
    Ok(())
}

macro_rules! port_blocks {
    () => {
        pub fn n(&self) -> usize {
            self.a.nrows()
        }
        pub fn m(&self) -> usize {
            self.m1 + self.m2
        }
        pub fn b1(&self) -> DMatrix<f64> {
            block(&self.b, 0, 0, self.n(), self.m1)
        }
        pub fn b2(&self) -> DMatrix<f64> {
            block(&self.b, 0, self.m1, self.n(), self.m2)
        }
        pub fn c1(&self) -> DMatrix<f64> {
            block(&self.c, 0, 0, self.m1, self.n())
        }
        pub fn c2(&self) -> DMatrix<f64> {
            block(&self.c, self.m1, 0, self.m2, self.n())
        }
        pub fn d11(&self) -> DMatrix<f64> {
            block(&self.d, 0, 0, self.m1, self.m1)
        }
        pub fn d12(&self) -> DMatrix<f64> {
            block(&self.d, 0, self.m1, self.m1, self.m2)
        }
        pub fn d21(&self) -> DMatrix<f64> {
            block(&self.d, self.m1, 0, self.m2, self.m1)
        }
        pub fn d22(&self) -> DMatrix<f64> {
            block(&self.d, self.m1, self.m1, self.m2, self.m2)
        }
        /// The block operator `[[A, B], [C, D]]`.
        pub fn block_matrix(&self) -> DMatrix<f64> {
            from_blocks(&[&[&self.a, &self.b], &[&self.c, &self.d]])
        }
    };
}

impl StateSpaceSystem {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        m1: usize,
        m2: usize,
    ) -> Result<Self> {
        check_quad(&a, &b, &c, &d, m1, m2)?;
        Ok(StateSpaceSystem { a, b, c, d, m1, m2 })
    }

    /// Pure feedthrough system (`n = 0`).
    pub fn feedthrough(d: DMatrix<f64>, m1: usize) -> Result<Self> {
        let m = d.nrows();
        if m1 > m {
            return Err(Error::DimensionMismatch(format!("m1 = {m1} exceeds m = {m}")));
        }
        Self::new(DMatrix::zeros(0, 0), DMatrix::zeros(0, m), DMatrix::zeros(m, 0), d, m1, m - m1)
    }

    port_blocks!();

    /// Same quadruple with a different port split.
    pub fn with_split(&self, m1: usize) -> Result<Self> {
        let m = self.m();
        if m1 > m {
            return Err(Error::DimensionMismatch(format!("m1 = {m1} exceeds m = {m}")));
        }
        Ok(StateSpaceSystem { m1, m2: m - m1, ..self.clone() })
    }

    /// State similarity `(T A T⁻¹, T B, C T⁻¹, D)`.
    pub fn similarity(&self, t: &DMatrix<f64>) -> Result<Self> {
        let ti = crate::linalg::gated_inverse(t).map_err(|cond| Error::SingularBlock { block: "T".into(), cond })?;
        Ok(StateSpaceSystem {
            a: t * &self.a * &ti,
            b: t * &self.b,
            c: &self.c * &ti,
            d: self.d.clone(),
            m1: self.m1,
            m2: self.m2,
        })
    }

    /// Transfer matrix `D + C (sI − A)⁻¹ B`.
    pub fn transfer(&self, s: Complex64) -> Result<DMatrix<Complex64>> {
        transfer_function(self, s)
    }

    /// Eigenvalues of `A`.
    pub fn poles(&self) -> Vec<Complex64> {
        eigenvalues(&self.a)
    }
}

impl DiscreteSystem {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        sigma: f64,
        m1: usize,
        m2: usize,
    ) -> Result<Self> {
        check_quad(&a, &b, &c, &d, m1, m2)?;
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
        }
        Ok(DiscreteSystem { a, b, c, d, sigma, m1, m2 })
    }

    port_blocks!();

    /// Discrete transfer `D + z C (I − z A)⁻¹ B`.
    pub fn transfer(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        let n = self.n();
        let mut mtx = DMatrix::<Complex64>::identity(n, n);
        for j in 0..n {
            for i in 0..n {
                mtx[(i, j)] -= z * self.a[(i, j)];
            }
        }
        let rhs = self.b.map(|x| Complex64::new(x, 0.0));
        let x = mtx.lu().solve(&rhs).ok_or(Error::NearSpectrum { re: 1.0 / z.re, im: 0.0 })?;
        let cz = self.c.map(|x| Complex64::new(x, 0.0) * z);
        Ok(self.d.map(|x| Complex64::new(x, 0.0)) + cz * x)
    }
}

/// Eigenvalues of a real square matrix (empty for `n = 0`).
pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<Complex64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    match Schur::try_new(a.clone(), f64::EPSILON, 100_000) {
        Some(s) => s.complex_eigenvalues().iter().copied().collect(),
        None => a.clone().complex_eigenvalues().iter().copied().collect(),
    }
}

/// Relative distance below which `s` counts as lying on the spectrum.
pub const SPECTRUM_GUARD: f64 = 1e-12;

/// Reusable evaluator of `G(s) = D + C (sI − A)⁻¹ B`.
///
/// `A` is reduced once to Hessenberg form `A = Q H Qᵀ`, so each evaluation
/// costs `O(n² m)`. Every solve is followed by iterative refinement whose
/// residual `B − (sI − A) X` is accumulated in double-double arithmetic
/// against the original `A`, which keeps evaluations accurate for stiff
/// generators with widely spread entries.
pub struct TransferEvaluator<'a> {
    sys: &'a StateSpaceSystem,
    q: DMatrix<f64>,
    h: DMatrix<f64>,
    qtb: DMatrix<f64>,
    eig: Vec<Complex64>,
    refinement_steps: usize,
}

struct HessLu {
    n: usize,
    u: Vec<Complex64>,
    piv: Vec<bool>,
    mult: Vec<Complex64>,
}

impl HessLu {
    fn factor(h: &DMatrix<f64>, s: Complex64) -> Option<Self> {
        let n = h.nrows();
        let mut u = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in i.saturating_sub(1)..n {
                let v = -h[(i, j)];
                u[i * n + j] = if i == j { s + v } else { Complex64::new(v, 0.0) };
            }
        }
        let mut piv = vec![false; n];
        let mut mult = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..n {
            if k + 1 < n {
                let a = u[k * n + k].norm();
                let b = u[(k + 1) * n + k].norm();
                if b > a {
                    for j in k..n {
                        u.swap(k * n + j, (k + 1) * n + j);
                    }
                    piv[k] = true;
                }
                let p = u[k * n + k];
                if p.norm() == 0.0 {
                    return None;
                }
                let l = u[(k + 1) * n + k] / p;
                mult[k] = l;
                u[(k + 1) * n + k] = Complex64::new(0.0, 0.0);
                if l.norm() != 0.0 {
                    for j in (k + 1)..n {
                        let v = u[k * n + j];
                        u[(k + 1) * n + j] -= l * v;
                    }
                }
            } else if u[k * n + k].norm() == 0.0 {
                return None;
            }
        }
        Some(HessLu { n, u, piv, mult })
    }

    fn solve_in_place(&self, x: &mut [Complex64]) {
        let n = self.n;
        for k in 0..n.saturating_sub(1) {
            if self.piv[k] {
                x.swap(k, k + 1);
            }
            let v = x[k];
            x[k + 1] -= self.mult[k] * v;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            let row = &self.u[i * n..(i + 1) * n];
            for j in (i + 1)..n {
                acc -= row[j] * x[j];
            }
            x[i] = acc / row[i];
        }
    }
}

fn dd_dot_re(a_row: impl Iterator<Item = (f64, Complex64)>) -> (Dd, Dd) {
    let mut re = Dd::ZERO;
    let mut im = Dd::ZERO;
    for (a, x) in a_row {
        if a == 0.0 {
            continue;
        }
        let (p, e) = two_prod(a, x.re);
        re += Dd { hi: p, lo: e };
        let (p, e) = two_prod(a, x.im);
        im += Dd { hi: p, lo: e };
    }
    (re, im)
}

impl<'a> TransferEvaluator<'a> {
    pub fn new(sys: &'a StateSpaceSystem) -> Self {
        let n = sys.n();
        let (q, h) = if n == 0 {
            (DMatrix::zeros(0, 0), DMatrix::zeros(0, 0))
        } else {
            let hs = Hessenberg::new(sys.a.clone());
            let (q, h) = hs.unpack();
            (q, h)
        };
        let qtb = q.transpose() * &sys.b;
        let eig = eigenvalues(&sys.a);
        TransferEvaluator { sys, q, h, qtb, eig, refinement_steps: 3 }
    }

    /// Maximum number of refinement sweeps per evaluation.
    pub fn with_refinement(mut self, steps: usize) -> Self {
        self.refinement_steps = steps;
        self
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eig
    }

    /// True when `s` lies within the relative guard distance of an eigenvalue.
    pub fn near_spectrum(&self, s: Complex64) -> bool {
        self.eig.iter().any(|&l| (s - l).norm() <= SPECTRUM_GUARD * s.norm().max(l.norm()))
    }

    fn hess_solve(&self, lu: &HessLu, rhs: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let n = self.sys.n();
        let qt = self.q.transpose();
        let mut out = DMatrix::<Complex64>::zeros(n, rhs.ncols());
        let mut tmp = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..rhs.ncols() {
            for i in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += rhs[(k, j)] * qt[(i, k)];
                }
                tmp[i] = acc;
            }
            lu.solve_in_place(&mut tmp);
            for i in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += tmp[k] * self.q[(i, k)];
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    /// Solution `X` of `(sI − A) X = B`.
    pub fn state_response(&self, s: Complex64) -> Result<DMatrix<Complex64>> {
        let sys = self.sys;
        let n = sys.n();
        let m = sys.m();
        if n == 0 {
            return Ok(DMatrix::zeros(0, m));
        }
        let err = Error::NearSpectrum { re: s.re, im: s.im };
        if self.near_spectrum(s) {
            return Err(err);
        }
        let lu = HessLu::factor(&self.h, s).ok_or(err.clone())?;
        let mut x = DMatrix::<Complex64>::zeros(n, m);
        let mut tmp = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..m {
            for i in 0..n {
                tmp[i] = Complex64::new(self.qtb[(i, j)], 0.0);
            }
            lu.solve_in_place(&mut tmp);
            for i in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += tmp[k] * self.q[(i, k)];
                }
                x[(i, j)] = acc;
            }
        }
        for _ in 0..self.refinement_steps {
            let r = self.residual(s, &x);
            let dx = self.hess_solve(&lu, &r);
            let xn = x.iter().fold(0.0_f64, |a, v| a.max(v.norm()));
            let dn = dx.iter().fold(0.0_f64, |a, v| a.max(v.norm()));
            x += &dx;
            if !(dn > 1e-17 * xn) {
                break;
            }
        }
        if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(err);
        }
        Ok(x)
    }

    /// Residual `B − (sI − A) X` accumulated in double-double.
    fn residual(&self, s: Complex64, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let sys = self.sys;
        let n = sys.n();
        let mut r = DMatrix::<Complex64>::zeros(n, x.ncols());
        for j in 0..x.ncols() {
            for i in 0..n {
                let (mut re, mut im) = dd_dot_re((0..n).map(|k| (sys.a[(i, k)], x[(k, j)])));
                let xi = x[(i, j)];
                re = re + Dd::new(sys.b[(i, j)]) - Dd::prod(s.re, xi.re) + Dd::prod(s.im, xi.im);
                im = im - Dd::prod(s.re, xi.im) - Dd::prod(s.im, xi.re);
                r[(i, j)] = Complex64::new(re.value(), im.value());
            }
        }
        r
    }

    /// Transfer matrix at `s`.
    pub fn eval(&self, s: Complex64) -> Result<DMatrix<Complex64>> {
        let sys = self.sys;
        let m = sys.m();
        let x = self.state_response(s)?;
        let n = sys.n();
        let mut g = DMatrix::<Complex64>::zeros(m, m);
        for j in 0..m {
            for i in 0..m {
                let (re, im) = dd_dot_re((0..n).map(|k| (sys.c[(i, k)], x[(k, j)])));
                g[(i, j)] = Complex64::new((re + Dd::new(sys.d[(i, j)])).value(), im.value());
            }
        }
        Ok(g)
    }
}

/// `D + C (sI − A)⁻¹ B` by a refined linear solve.
pub fn transfer_function(sys: &StateSpaceSystem, s: Complex64) -> Result<DMatrix<Complex64>> {
    TransferEvaluator::new(sys).eval(s)
}

/// `(A, B, cC, cD)`.
pub fn scalar_multiple(c: f64, sys: &StateSpaceSystem) -> StateSpaceSystem {
    StateSpaceSystem { a: sys.a.clone(), b: sys.b.clone(), c: &sys.c * c, d: &sys.d * c, m1: sys.m1, m2: sys.m2 }
}

/// Parallel sum: transfer `G_p + G_q`.
pub fn parallel_sum(p: &StateSpaceSystem, q: &StateSpaceSystem) -> Result<StateSpaceSystem> {
    if p.m1 != q.m1 || p.m2 != q.m2 {
        return Err(Error::DimensionMismatch(format!("splits ({},{}) and ({},{}) differ", p.m1, p.m2, q.m1, q.m2)));
    }
    Ok(StateSpaceSystem {
        a: block_diag(&p.a, &q.a),
        b: vstack(&p.b, &q.b),
        c: hstack(&p.c, &q.c),
        d: &p.d + &q.d,
        m1: p.m1,
        m2: p.m2,
    })
}

/// Cascade product: transfer `G_p · G_q` (signal passes `q` first).
pub fn cascade_product(p: &StateSpaceSystem, q: &StateSpaceSystem) -> Result<StateSpaceSystem> {
    if p.m() != q.m() {
        return Err(Error::DimensionMismatch(format!("port widths {} and {} differ", p.m(), q.m())));
    }
    let zero = DMatrix::zeros(q.n(), p.n());
    let bc = &p.b * &q.c;
    Ok(StateSpaceSystem {
        a: from_blocks(&[&[&p.a, &bc], &[&zero, &q.a]]),
        b: vstack(&(&p.b * &q.d), &q.b),
        c: hstack(&p.c, &(&p.d * &q.c)),
        d: &p.d * &q.d,
        m1: p.m1,
        m2: p.m2,
    })
}

/// Kalman ranks and minimality verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Minimality {
    pub controllability_rank: usize,
    pub observability_rank: usize,
    pub minimal: bool,
}

/// Singular values below this fraction of the largest count as zero.
pub const RANK_THRESHOLD: f64 = 1e-10;

fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&x| x > RANK_THRESHOLD * max).count()
}

fn kalman(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let m = b.ncols();
    // Rescaling A by its norm leaves the column space unchanged and keeps powers bounded.
    let alpha = crate::linalg::max_abs(a).max(f64::MIN_POSITIVE);
    let an = a / alpha;
    let mut out = DMatrix::zeros(n, n * m);
    let mut blk = b.clone();
    for k in 0..n {
        out.view_mut((0, k * m), (n, m)).copy_from(&blk);
        blk = &an * &blk;
    }
    out
}

/// Ranks of the controllability and observability matrices.
pub fn minimality(sys: &StateSpaceSystem) -> Minimality {
    let n = sys.n();
    let cr = numerical_rank(&kalman(&sys.a, &sys.b));
    let or = numerical_rank(&kalman(&sys.a.transpose(), &sys.c.transpose()));
    Minimality { controllability_rank: cr, observability_rank: or, minimal: cr == n && or == n }
}

fn median_modulus(eigs: &[Complex64]) -> Option<f64> {
    let mut v: Vec<f64> = eigs.iter().map(|z| z.norm()).filter(|&x| x > 0.0).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    Some(v[v.len() / 2])
}

fn max_entry(g: &DMatrix<Complex64>) -> f64 {
    g.iter().fold(0.0_f64, |a, z| a.max(z.norm()))
}

/// Seed of the sampling sequence used by [`io_equivalent`].
pub const IO_EQUIVALENCE_SEED: u64 = 0x10E9_5EED;

/// Sampled I/O equivalence: transfers agree at `n_p + n_q + 1` pseudo-random
/// points in the right half of a box scaled by the median pole modulus.
pub fn io_equivalent(p: &StateSpaceSystem, q: &StateSpaceSystem, tol: f64) -> Result<bool> {
    Ok(io_deviation(p, q)? <= tol)
}

/// Largest relative transfer deviation used by [`io_equivalent`].
pub fn io_deviation(p: &StateSpaceSystem, q: &StateSpaceSystem) -> Result<f64> {
    if p.m() != q.m() {
        return Err(Error::DimensionMismatch(format!("port widths {} and {} differ", p.m(), q.m())));
    }
    let ep = TransferEvaluator::new(p);
    let eq = TransferEvaluator::new(q);
    let mut all: Vec<Complex64> = ep.eigenvalues().to_vec();
    all.extend_from_slice(eq.eigenvalues());
    let scale = median_modulus(&all).unwrap_or(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(IO_EQUIVALENCE_SEED);
    let count = p.n() + q.n() + 1;
    let mut worst = 0.0_f64;
    for _ in 0..count {
        let mut tries = 0;
        loop {
            let s = Complex64::new(rng.random_range(0.05..1.0), rng.random_range(-2.0..2.0)) * scale;
            match (ep.eval(s), eq.eval(s)) {
                (Ok(gp), Ok(gq)) => {
                    let den = max_entry(&gp).max(max_entry(&gq));
                    let num = max_entry(&(gp - gq));
                    let dev = if den == 0.0 { num } else { num / den };
                    worst = worst.max(dev);
                    break;
                }
                (Err(e @ Error::NearSpectrum { .. }), _) | (_, Err(e @ Error::NearSpectrum { .. })) => {
                    tries += 1;
                    if tries > 5 {
                        return Err(e);
                    }
                }
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
        }
    }
    Ok(worst)
}
