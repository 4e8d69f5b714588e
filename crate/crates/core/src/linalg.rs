//! Dense linear-algebra helpers: gated inverses, block assembly, symmetric
//! square roots, and a generic partial-pivoting LU for [`Real`] scalars.

use nalgebra::{DMatrix, DVector};

use crate::xprec::{Dd, Real};

/// Condition gate applied to every inverted block.
pub const COND_GATE: f64 = 1e12;

/// 2-norm condition number via SVD; infinite for singular or empty-rank input.
pub fn cond2(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    if m.iter().any(|x| !x.is_finite()) {
        return f64::INFINITY;
    }
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if max == 0.0 {
        return f64::INFINITY;
    }
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse of a square matrix, refused when its condition number exceeds the gate.
/// On refusal the condition number is returned as the error value.
pub fn gated_inverse(m: &DMatrix<f64>) -> std::result::Result<DMatrix<f64>, f64> {
    let c = cond2(m);
    if !(c <= COND_GATE) {
        return Err(c);
    }
    lu_inverse(m).ok_or(f64::INFINITY)
}

/// Inverse by Gaussian elimination with partial pivoting; `None` on a zero pivot.
pub fn lu_inverse<T: Real>(m: &DMatrix<T>) -> Option<DMatrix<T>> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "lu_inverse needs a square matrix");
    lu_solve(m, &DMatrix::identity(n, n))
}

/// Solves `M X = B` by Gaussian elimination with partial pivoting.
pub fn lu_solve<T: Real>(m: &DMatrix<T>, b: &DMatrix<T>) -> Option<DMatrix<T>> {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    assert_eq!(n, b.nrows());
    let mut a = m.clone();
    let mut x = b.clone();
    let k_rhs = x.ncols();
    for k in 0..n {
        let mut p = k;
        let mut best = a[(k, k)].abs();
        for i in (k + 1)..n {
            let v = a[(i, k)].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best == T::zero() {
            return None;
        }
        if p != k {
            a.swap_rows(k, p);
            x.swap_rows(k, p);
        }
        let piv = a[(k, k)];
        for i in (k + 1)..n {
            let l = a[(i, k)] / piv;
            if l == T::zero() {
                continue;
            }
            a[(i, k)] = T::zero();
            for j in (k + 1)..n {
                let v = a[(k, j)];
                a[(i, j)] -= l * v;
            }
            for j in 0..k_rhs {
                let v = x[(k, j)];
                x[(i, j)] -= l * v;
            }
        }
    }
    for j in 0..k_rhs {
        for i in (0..n).rev() {
            let mut s = x[(i, j)];
            for c in (i + 1)..n {
                s -= a[(i, c)] * x[(c, j)];
            }
            x[(i, j)] = s / a[(i, i)];
        }
    }
    Some(x)
}

pub fn to_dd(m: &DMatrix<f64>) -> DMatrix<Dd> {
    m.map(Dd::new)
}

pub fn to_f64<T: Real>(m: &DMatrix<T>) -> DMatrix<f64> {
    m.map(|x| x.to_f64())
}

/// Copy of the block starting at `(r0, c0)` with shape `nr × nc`.
pub fn block<T: Real>(m: &DMatrix<T>, r0: usize, c0: usize, nr: usize, nc: usize) -> DMatrix<T> {
    m.view((r0, c0), (nr, nc)).into_owned()
}

/// Assembles a matrix from a grid of blocks; zero-sized blocks are allowed.
pub fn from_blocks<T: Real>(rows: &[&[&DMatrix<T>]]) -> DMatrix<T> {
    let nr: usize = rows.iter().map(|r| r[0].nrows()).sum();
    let nc: usize = rows[0].iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(nr, nc);
    let mut r0 = 0;
    for row in rows {
        let h = row[0].nrows();
        let mut c0 = 0;
        for b in row.iter() {
            assert_eq!(b.nrows(), h, "block row heights differ");
            out.view_mut((r0, c0), (h, b.ncols())).copy_from(*b);
            c0 += b.ncols();
        }
        assert_eq!(c0, nc, "block column widths differ");
        r0 += h;
    }
    out
}

pub fn block_diag<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut(a.shape(), b.shape()).copy_from(b);
    out
}

pub fn hstack<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    from_blocks(&[&[a, b]])
}

pub fn vstack<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    from_blocks(&[&[a], &[b]])
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Spectral norm.
pub fn norm2(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Eigenvalues of the symmetric part of `m`, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    if m.nrows() == 0 {
        return DVector::zeros(0);
    }
    let s = (m + m.transpose()) * 0.5;
    let mut v: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| a.total_cmp(b));
    DVector::from_vec(v)
}

/// Symmetric eigen-decomposition `(values, vectors)` of the symmetric part.
pub fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let s = (m + m.transpose()) * 0.5;
    let e = s.symmetric_eigen();
    (e.eigenvalues, e.eigenvectors)
}

/// `V f(Λ) Vᵀ` for a symmetric matrix with eigenvalues clipped at zero.
pub fn sym_function(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let (w, v) = sym_eigen(m);
    let fw = DVector::from_iterator(w.len(), w.iter().map(|&x| f(x.max(0.0))));
    let mut vs = v.clone();
    for (j, mut col) in vs.column_iter_mut().enumerate() {
        col *= fw[j];
    }
    let out = &vs * v.transpose();
    (&out + out.transpose()) * 0.5
}

pub fn is_diagonal(m: &DMatrix<f64>) -> bool {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if i != j && m[(i, j)] != 0.0 {
                return false;
            }
        }
    }
    true
}

/// Symmetric positive definite square root in double-double precision.
/// Diagonal inputs are handled entrywise; otherwise a double-precision
/// eigen-root is polished by Newton steps `Y ← (Y + Y⁻¹R)/2`.
pub fn spd_sqrt_dd(r: &DMatrix<f64>) -> DMatrix<Dd> {
    let n = r.nrows();
    if is_diagonal(r) {
        let mut out = DMatrix::from_element(n, n, Dd::ZERO);
        for i in 0..n {
            out[(i, i)] = Real::sqrt(Dd::new(r[(i, i)]));
        }
        return out;
    }
    let rd = to_dd(r);
    let (lam, q) = sym_eigen(r);
    let lam: Vec<f64> = lam.iter().map(|l| l.max(0.0).sqrt()).collect();
    let qd = to_dd(&q);
    let qt = qd.transpose();
    let mut y = to_dd(&sym_function(r, f64::sqrt));
    for _ in 0..3 {
        let res = &rd - &y * &y;
        let mut e = &qt * res * &qd;
        for i in 0..n {
            for j in 0..n {
                let d = lam[i] + lam[j];
                if d > 0.0 {
                    e[(i, j)] /= Dd::new(d);
                }
            }
        }
        let corr = &qd * e * &qt;
        let next = &y + corr;
        let t = next.transpose();
        y = (&next + &t) * Dd::new(0.5);
    }
    y
}

/// Generic symmetric square root: double-double for [`Dd`], eigen-root for `f64`.
pub fn spd_sqrt_generic<T: Real>(r: &DMatrix<f64>) -> DMatrix<T> {
    spd_sqrt_dd(r).map(|x| T::from_f64(x.hi) + T::from_f64(x.lo))
}
