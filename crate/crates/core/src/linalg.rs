//! Dense matrix primitives: a row-major matrix type, a symmetric
//! eigendecomposition (Householder tridiagonalization followed by implicit
//! QL), and a thin SVD via one-sided Jacobi rotations.
//!
//! The sizes handled here are small enough (a few hundred rows) that a
//! self-contained implementation beats pulling in a LAPACK binding.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::float::{cast, Float};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Float> Mat<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = F::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<F>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let mut data = Vec::with_capacity(r * c);
        for row in &rows {
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [F] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<F> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[F]) {
        assert_eq!(v.len(), self.rows);
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> F {
        self.data
            .iter()
            .fold(F::zero(), |acc, x| acc.max(x.abs()))
    }

    /// max |A - Aᵀ| over all entries; zero for non-square is not defined.
    pub fn symmetry_residual(&self) -> F {
        assert_eq!(self.rows, self.cols);
        let mut r = F::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                r = r.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        r
    }

    pub fn transpose(&self) -> Mat<F> {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Matrix product, ikj loop order for cache-friendly row-major access.
    pub fn mul(&self, other: &Mat<F>) -> Mat<F> {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == F::zero() {
                    continue;
                }
                let brow = other.row(k);
                let orow = out.row_mut(i);
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += aik * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[F]) -> Vec<F> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows)
            .map(|i| dot(self.row(i), v))
            .collect()
    }

    /// AᵀA without materializing the transpose.
    pub fn at_a(&self) -> Mat<F> {
        let m = self.cols;
        let mut out = Mat::zeros(m, m);
        for k in 0..self.rows {
            let row = self.row(k);
            for p in 0..m {
                let rp = row[p];
                if rp == F::zero() {
                    continue;
                }
                for q in p..m {
                    out[(p, q)] += rp * row[q];
                }
            }
        }
        for p in 0..m {
            for q in 0..p {
                out[(p, q)] = out[(q, p)];
            }
        }
        out
    }

    pub fn scale(&self, s: F) -> Mat<F> {
        let mut out = self.clone();
        for x in &mut out.data {
            *x *= s;
        }
        out
    }
}

impl<F: Float> Index<(usize, usize)> for Mat<F> {
    type Output = F;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &F {
        &self.data[i * self.cols + j]
    }
}

impl<F: Float> IndexMut<(usize, usize)> for Mat<F> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut F {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot<F: Float>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm2<F: Float>(a: &[F]) -> F {
    dot(a, a).sqrt()
}

pub fn sq_dist<F: Float>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| {
        let d = x - y;
        acc + d * d
    })
}

/// Eigendecomposition of a real symmetric matrix, A = V diag(values) Vᵀ.
/// Eigenvalues ascending; `vectors` holds eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SymEigen<F> {
    pub values: Vec<F>,
    pub vectors: Mat<F>,
}

/// Symmetric eigendecomposition: Householder reduction to tridiagonal form
/// followed by the implicit-shift QL iteration (EISPACK tred2/tql2 lineage).
pub fn sym_eigen<F: Float>(a: &Mat<F>) -> Result<SymEigen<F>> {
    assert_eq!(a.rows(), a.cols(), "sym_eigen needs a square matrix");
    let n = a.rows();
    if n == 0 {
        return Ok(SymEigen {
            values: vec![],
            vectors: Mat::zeros(0, 0),
        });
    }
    let mut z = a.clone();
    let mut d = vec![F::zero(); n];
    let mut e = vec![F::zero(); n];
    tred2(&mut z, &mut d, &mut e);
    tql2(&mut z, &mut d, &mut e)?;

    // Sort ascending, carrying eigenvector columns along.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap_or(std::cmp::Ordering::Equal));
    let values: Vec<F> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, new_j)] = z[(i, old_j)];
        }
    }
    Ok(SymEigen { values, vectors })
}

/// Householder reduction of the symmetric matrix in `z` to tridiagonal form.
/// On return `d` holds the diagonal, `e` the subdiagonal (e[0] = 0), and `z`
/// the accumulated orthogonal transform.
fn tred2<F: Float>(z: &mut Mat<F>, d: &mut [F], e: &mut [F]) {
    let n = d.len();
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = F::zero();
        if l > 0 {
            let mut scale = F::zero();
            for k in 0..=l {
                scale += z[(i, k)].abs();
            }
            if scale == F::zero() {
                e[i] = z[(i, l)];
            } else {
                for k in 0..=l {
                    z[(i, k)] = z[(i, k)] / scale;
                    h += z[(i, k)] * z[(i, k)];
                }
                let mut f = z[(i, l)];
                let mut g = if f >= F::zero() { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                z[(i, l)] = f - g;
                f = F::zero();
                for j in 0..=l {
                    z[(j, i)] = z[(i, j)] / h;
                    g = F::zero();
                    for k in 0..=j {
                        g += z[(j, k)] * z[(i, k)];
                    }
                    for k in (j + 1)..=l {
                        g += z[(k, j)] * z[(i, k)];
                    }
                    e[j] = g / h;
                    f += e[j] * z[(i, j)];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    f = z[(i, j)];
                    g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        let upd = f * e[k] + g * z[(i, k)];
                        z[(j, k)] = z[(j, k)] - upd;
                    }
                }
            }
        } else {
            e[i] = z[(i, l)];
        }
        d[i] = h;
    }
    d[0] = F::zero();
    e[0] = F::zero();
    for i in 0..n {
        if d[i] != F::zero() {
            for j in 0..i {
                let mut g = F::zero();
                for k in 0..i {
                    g += z[(i, k)] * z[(k, j)];
                }
                for k in 0..i {
                    let upd = g * z[(k, i)];
                    z[(k, j)] = z[(k, j)] - upd;
                }
            }
        }
        d[i] = z[(i, i)];
        z[(i, i)] = F::one();
        for j in 0..i {
            z[(j, i)] = F::zero();
            z[(i, j)] = F::zero();
        }
    }
}

/// Implicit-shift QL iteration on the tridiagonal form produced by `tred2`,
/// accumulating eigenvectors into `z`.
fn tql2<F: Float>(z: &mut Mat<F>, d: &mut [F], e: &mut [F]) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = F::zero();

    // Deflation floor: RBF Gram matrices carry long clusters of eigenvalues
    // at the round-off level, where a purely relative negligibility test
    // never fires. Anything below eps·‖A‖ is noise either way.
    let scale = d
        .iter()
        .chain(e.iter())
        .fold(F::zero(), |a, x| a.max(x.abs()));
    let floor = F::epsilon() * scale;

    let two = cast::<F>(2.0);
    for l in 0..n {
        let mut iter = 0usize;
        loop {
            // Find a negligible subdiagonal element to split at.
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() + dd == dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(Error::EigenFailed { context: "linalg" });
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(F::one());
            let sign_r = if g >= F::zero() { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let mut s = F::one();
            let mut c = F::one();
            let mut p = F::zero();
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == F::zero() {
                    d[i + 1] -= p;
                    e[m] = F::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[(k, i + 1)];
                    z[(k, i + 1)] = s * z[(k, i)] + c * f;
                    z[(k, i)] = c * z[(k, i)] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = F::zero();
        }
    }
    Ok(())
}

/// Thin SVD of an n×m matrix with n ≥ m: A = U diag(sigma) Vᵀ with U n×m,
/// V m×m. Singular values are sorted descending. Columns of U matching a
/// zero singular value are left as zero vectors.
#[derive(Debug, Clone)]
pub struct ThinSvd<F> {
    pub u: Mat<F>,
    pub sigma: Vec<F>,
    pub v: Mat<F>,
}

impl<F: Float> ThinSvd<F> {
    /// Number of singular values above `rel_tol * sigma_max`.
    pub fn rank(&self, rel_tol: F) -> usize {
        let smax = self.sigma.first().copied().unwrap_or(F::zero());
        if smax <= F::zero() {
            return 0;
        }
        self.sigma.iter().filter(|&&s| s > rel_tol * smax).count()
    }
}

/// One-sided Jacobi SVD. Rotates column pairs until all are mutually
/// orthogonal; accuracy on small singular values is what the Procrustes
/// step needs.
pub fn svd_thin<F: Float>(a: &Mat<F>) -> ThinSvd<F> {
    let n = a.rows();
    let m = a.cols();
    assert!(n >= m, "svd_thin expects a tall (n >= m) matrix");
    let mut u = a.clone();
    let mut v = Mat::identity(m);
    let eps = F::epsilon();
    let conv = eps * cast::<F>(8.0);

    for _sweep in 0..64 {
        let mut off = F::zero();
        for p in 0..m {
            for q in (p + 1)..m {
                let mut alpha = F::zero();
                let mut beta = F::zero();
                let mut gamma = F::zero();
                for i in 0..n {
                    let up = u[(i, p)];
                    let uq = u[(i, q)];
                    alpha += up * up;
                    beta += uq * uq;
                    gamma += up * uq;
                }
                let denom = (alpha * beta).sqrt();
                if denom == F::zero() || gamma.abs() <= eps * denom {
                    continue;
                }
                off = off.max(gamma.abs() / denom);
                let zeta = (beta - alpha) / (two::<F>() * gamma);
                let t = {
                    let mag = zeta.abs() + (F::one() + zeta * zeta).sqrt();
                    if zeta >= F::zero() {
                        F::one() / mag
                    } else {
                        -F::one() / mag
                    }
                };
                let c = F::one() / (F::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let up = u[(i, p)];
                    let uq = u[(i, q)];
                    u[(i, p)] = c * up - s * uq;
                    u[(i, q)] = s * up + c * uq;
                }
                for i in 0..m {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if off <= conv {
            break;
        }
    }

    let mut sigma: Vec<F> = (0..m).map(|j| norm2(&u.col(j))).collect();
    // Sort descending; normalize nonzero columns of U.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap_or(std::cmp::Ordering::Equal));
    let mut u_sorted = Mat::zeros(n, m);
    let mut v_sorted = Mat::zeros(m, m);
    let mut s_sorted = Vec::with_capacity(m);
    for (new_j, &old_j) in order.iter().enumerate() {
        let s = sigma[old_j];
        s_sorted.push(s);
        for i in 0..n {
            u_sorted[(i, new_j)] = if s > F::zero() { u[(i, old_j)] / s } else { F::zero() };
        }
        for i in 0..m {
            v_sorted[(i, new_j)] = v[(i, old_j)];
        }
    }
    sigma = s_sorted;
    ThinSvd {
        u: u_sorted,
        sigma,
        v: v_sorted,
    }
}

#[inline]
fn two<F: Float>() -> F {
    F::one() + F::one()
}

/// Replace zero columns of `u` (flagged false in `ok`) with unit vectors
/// orthonormal to every other column. Deterministic: candidates are standard
/// basis vectors in index order.
pub fn complete_orthonormal<F: Float>(u: &mut Mat<F>, ok: &[bool]) {
    let n = u.rows();
    let m = u.cols();
    let mut filled = ok.to_vec();
    for j in 0..m {
        if filled[j] {
            continue;
        }
        let mut placed = false;
        for cand in 0..n {
            let mut w = vec![F::zero(); n];
            w[cand] = F::one();
            // Two rounds of Gram-Schmidt against the already-valid columns.
            for _ in 0..2 {
                for k in 0..m {
                    if !filled[k] {
                        continue;
                    }
                    let col = u.col(k);
                    let proj = dot(&w, &col);
                    for (wi, ci) in w.iter_mut().zip(&col) {
                        *wi -= proj * *ci;
                    }
                }
            }
            let nrm = norm2(&w);
            if nrm > cast::<F>(1e-6) {
                for x in &mut w {
                    *x /= nrm;
                }
                u.set_col(j, &w);
                filled[j] = true;
                placed = true;
                break;
            }
        }
        assert!(placed, "orthonormal completion exhausted basis candidates");
    }
}

/// Modified Gram-Schmidt (two passes) on the columns of `a`. Requires full
/// column rank.
pub fn orthonormalize_columns<F: Float>(a: &Mat<F>) -> Mat<F> {
    let mut q = a.clone();
    let m = a.cols();
    for j in 0..m {
        for _ in 0..2 {
            for k in 0..j {
                let ck = q.col(k);
                let cj = q.col(j);
                let proj = dot(&cj, &ck);
                for i in 0..q.rows() {
                    q[(i, j)] = q[(i, j)] - proj * ck[i];
                }
            }
        }
        let nrm = norm2(&q.col(j));
        assert!(nrm > F::zero(), "orthonormalize_columns: rank-deficient input");
        for i in 0..q.rows() {
            q[(i, j)] = q[(i, j)] / nrm;
        }
    }
    q
}

/// Largest principal angle (radians) between the column spans of `a` and
/// `b`. Both must have full column rank and the same column count.
pub fn max_principal_angle<F: Float>(a: &Mat<F>, b: &Mat<F>) -> F {
    assert_eq!(a.cols(), b.cols());
    let qa = orthonormalize_columns(a);
    let qb = orthonormalize_columns(b);
    let inner = qa.transpose().mul(&qb);
    let svd = svd_thin(&inner);
    let smin = svd
        .sigma
        .last()
        .copied()
        .unwrap_or(F::zero())
        .min(F::one())
        .max(-F::one());
    smin.acos()
}

/// Least-squares solve min_w ||A w - b||₂ via the normal equations and a
/// floored eigen-inverse of AᵀA.
pub fn lstsq<F: Float>(a: &Mat<F>, b: &[F]) -> Result<Vec<F>> {
    assert_eq!(a.rows(), b.len());
    let ata = a.at_a();
    let atb: Vec<F> = (0..a.cols()).map(|j| dot(&a.col(j), b)).collect();
    let eig = sym_eigen(&ata)?;
    let lmax = eig.values.last().copied().unwrap_or(F::zero()).max(F::zero());
    let floor = lmax * cast::<F>(1e-12);
    let m = a.cols();
    let mut w = vec![F::zero(); m];
    for k in 0..m {
        let lam = eig.values[k];
        if lam <= floor {
            continue;
        }
        let vk = eig.vectors.col(k);
        let coef = dot(&vk, &atb) / lam;
        for i in 0..m {
            w[i] += coef * vk[i];
        }
    }
    Ok(w)
}
