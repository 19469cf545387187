//! RBF kernel evaluation, Gram-matrix construction, kernel-space centering
//! for training and query points, and the truncated eigendecomposition the
//! rest of the pipeline consumes.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::float::{cast, Float};
use crate::linalg::{sq_dist, sym_eigen, Mat};

/// Training data: n sample rows of dimension d with stable integer ids.
#[derive(Debug, Clone)]
pub struct DataMatrix<F> {
    data: Mat<F>,
    row_ids: Vec<u64>,
}

impl<F: Float> DataMatrix<F> {
    /// Builds from row vectors, assigning ids 0..n. Requires n ≥ 2, a common
    /// positive dimension, and finite entries.
    pub fn new(rows: Vec<Vec<F>>) -> Result<Self> {
        let n = rows.len();
        let ids = (0..n as u64).collect();
        Self::with_ids(rows, ids)
    }

    pub fn with_ids(rows: Vec<Vec<F>>, row_ids: Vec<u64>) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::TooFewSamples {
                context: "kernel_core::DataMatrix",
                needed: 2,
                got: n,
            });
        }
        if row_ids.len() != n {
            return Err(Error::DimensionMismatch {
                context: "kernel_core::DataMatrix ids",
                expected: n,
                got: row_ids.len(),
            });
        }
        let d = rows[0].len();
        if d == 0 {
            return Err(Error::EmptyInput {
                context: "kernel_core::DataMatrix",
            });
        }
        for row in &rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    context: "kernel_core::DataMatrix rows",
                    expected: d,
                    got: row.len(),
                });
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    context: "kernel_core::DataMatrix",
                });
            }
        }
        Ok(DataMatrix {
            data: Mat::from_rows(rows),
            row_ids,
        })
    }

    pub fn n(&self) -> usize {
        self.data.rows()
    }

    pub fn dim(&self) -> usize {
        self.data.cols()
    }

    pub fn row(&self, i: usize) -> &[F] {
        self.data.row(i)
    }

    pub fn row_ids(&self) -> &[u64] {
        &self.row_ids
    }

    pub fn rows_mat(&self) -> &Mat<F> {
        &self.data
    }
}

/// RBF bandwidth: k(x,y) = exp(-‖x-y‖² / (2 sigma_sq)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams<F> {
    sigma_sq: F,
}

impl<F: Float> KernelParams<F> {
    pub fn new(sigma_sq: F) -> Result<Self> {
        if !(sigma_sq > F::zero()) || !sigma_sq.is_finite() {
            return Err(Error::InvalidBandwidth {
                got: sigma_sq.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(KernelParams { sigma_sq })
    }

    pub fn sigma_sq(&self) -> F {
        self.sigma_sq
    }
}

/// k(x,y) = exp(-‖x-y‖²/(2 sigma_sq)); always in (0, 1].
pub fn rbf_eval<F: Float>(x: &[F], y: &[F], params: &KernelParams<F>) -> Result<F> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            context: "kernel_core::rbf_eval",
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "kernel_core::rbf_eval",
        });
    }
    let d2 = sq_dist(x, y);
    Ok((-d2 / (cast::<F>(2.0) * params.sigma_sq)).exp())
}

/// Bandwidth heuristic: sigma_sq = mean of ‖x_i - x_j‖² over all unordered
/// pairs i ≠ j. Errors when every point coincides.
pub fn sigma_heuristic<F: Float>(x: &DataMatrix<F>) -> Result<KernelParams<F>> {
    let n = x.n();
    let mut sum = F::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            sum += sq_dist(x.row(i), x.row(j));
        }
    }
    let pairs = cast::<F>((n * (n - 1)) as f64 / 2.0);
    let mean = sum / pairs;
    if mean <= F::zero() {
        return Err(Error::DegenerateData);
    }
    KernelParams::new(mean)
}

/// Symmetric PSD kernel matrix with centering state. The full symmetric
/// eigendecomposition is computed once on demand and cached.
#[derive(Debug)]
pub struct GramMatrix<F> {
    values: Mat<F>,
    centered: bool,
    params: KernelParams<F>,
    source_ids: Vec<u64>,
    eigen: OnceLock<EigenPairs<F>>,
}

impl<F: Float> Clone for GramMatrix<F> {
    fn clone(&self) -> Self {
        GramMatrix {
            values: self.values.clone(),
            centered: self.centered,
            params: self.params,
            source_ids: self.source_ids.clone(),
            eigen: self.eigen.clone(),
        }
    }
}

/// Full eigendecomposition of a Gram matrix, eigenvalues descending and
/// eigenvector signs fixed so the largest-magnitude entry is positive.
#[derive(Debug, Clone)]
pub struct EigenPairs<F> {
    pub values: Vec<F>,
    pub vectors: Mat<F>,
}

impl<F: Float> GramMatrix<F> {
    /// Wraps an explicit symmetric matrix. Validates squareness, finiteness
    /// and symmetry to within 1e-12 relative.
    pub fn from_parts(
        values: Mat<F>,
        centered: bool,
        params: KernelParams<F>,
        source_ids: Vec<u64>,
    ) -> Result<Self> {
        if values.rows() != values.cols() {
            return Err(Error::DimensionMismatch {
                context: "kernel_core::GramMatrix",
                expected: values.rows(),
                got: values.cols(),
            });
        }
        if !values.is_finite() {
            return Err(Error::NonFinite {
                context: "kernel_core::GramMatrix",
            });
        }
        let scale = values.max_abs();
        if values.symmetry_residual() > cast::<F>(1e-12) * scale.max(F::one()) {
            return Err(Error::Asymmetric {
                context: "kernel_core::GramMatrix",
            });
        }
        if source_ids.len() != values.rows() {
            return Err(Error::DimensionMismatch {
                context: "kernel_core::GramMatrix ids",
                expected: values.rows(),
                got: source_ids.len(),
            });
        }
        Ok(GramMatrix {
            values,
            centered,
            params,
            source_ids,
            eigen: OnceLock::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }

    pub fn values(&self) -> &Mat<F> {
        &self.values
    }

    pub fn centered(&self) -> bool {
        self.centered
    }

    pub fn params(&self) -> &KernelParams<F> {
        &self.params
    }

    pub fn source_ids(&self) -> &[u64] {
        &self.source_ids
    }

    /// Mean of each row (equals each column mean by symmetry). Computed as
    /// sum-then-divide so fit-time Gram-row scoring and query-time kernel
    /// re-evaluation agree bitwise.
    pub fn row_means(&self) -> Vec<F> {
        let n = cast::<F>(self.n() as f64);
        (0..self.n())
            .map(|i| self.values.row(i).iter().fold(F::zero(), |a, &x| a + x) / n)
            .collect()
    }

    pub fn grand_mean(&self) -> F {
        let n = cast::<F>(self.n() as f64);
        self.row_means().iter().fold(F::zero(), |a, &x| a + x) / n
    }

    pub fn trace(&self) -> F {
        (0..self.n()).fold(F::zero(), |a, i| a + self.values[(i, i)])
    }

    /// Cached full eigendecomposition, descending, sign-fixed.
    pub fn full_eigen(&self) -> &EigenPairs<F> {
        self.eigen.get_or_init(|| {
            let eig = sym_eigen(&self.values).expect("symmetric eigen iteration converges");
            let n = self.n();
            let mut vectors = Mat::zeros(n, n);
            let mut values = Vec::with_capacity(n);
            // sym_eigen sorts ascending; flip to descending.
            for (new_j, old_j) in (0..n).rev().enumerate() {
                values.push(eig.values[old_j]);
                let mut col = eig.vectors.col(old_j);
                fix_sign(&mut col);
                for (i, &v) in col.iter().enumerate() {
                    vectors[(i, new_j)] = v;
                }
            }
            EigenPairs { values, vectors }
        })
    }

    /// Retained rank under the floor 1e-10 · λ_max.
    pub fn retained_rank(&self) -> usize {
        let eig = self.full_eigen();
        let lmax = eig.values.first().copied().unwrap_or(F::zero()).max(F::zero());
        let floor = lmax * cast::<F>(1e-10);
        eig.values.iter().filter(|&&v| v > floor).count()
    }
}

/// Deterministic sign convention: largest-magnitude entry positive, ties
/// broken by the first occurrence.
fn fix_sign<F: Float>(v: &mut [F]) {
    let mut best = 0usize;
    let mut best_abs = F::zero();
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    if v[best] < F::zero() {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Raw (uncentered) RBF Gram matrix: values[i][j] = k(x_i, x_j).
pub fn gram<F: Float>(x: &DataMatrix<F>, params: &KernelParams<F>) -> Result<GramMatrix<F>> {
    let k = gram_values(x.rows_mat(), params)?;
    GramMatrix::from_parts(k, false, *params, x.row_ids().to_vec())
}

pub(crate) fn gram_values<F: Float>(rows: &Mat<F>, params: &KernelParams<F>) -> Result<Mat<F>> {
    let n = rows.rows();
    let mut k = Mat::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = F::one();
        for j in (i + 1)..n {
            let v = rbf_eval(rows.row(i), rows.row(j), params)?;
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// Double centering: K̃ = K - 1ₙK - K1ₙ + 1ₙK1ₙ with 1ₙ the n×n matrix of
/// 1/n entries. Idempotent; every row of the result sums to zero.
pub fn center_gram<F: Float>(k: &GramMatrix<F>) -> Result<GramMatrix<F>> {
    let n = k.n();
    let means = k.row_means();
    let grand = k.grand_mean();
    let mut out = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = k.values()[(i, j)] - means[i] - means[j] + grand;
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    GramMatrix::from_parts(out, true, *k.params(), k.source_ids().to_vec())
}

/// Centers a query point's kernel column against the raw training Gram:
/// k̃_i = k_i - mean(k) - mean(row i of K_raw) + grand-mean(K_raw).
/// Querying at training point x_j reproduces row j of the centered Gram.
pub fn center_cross_kernel<F: Float>(k_vec: &[F], k_raw: &GramMatrix<F>) -> Result<Vec<F>> {
    if k_raw.centered() {
        return Err(Error::InvalidConfig {
            context: "kernel_core::center_cross_kernel",
            reason: "expected the raw (uncentered) training Gram matrix".into(),
        });
    }
    let n = k_raw.n();
    if k_vec.len() != n {
        return Err(Error::DimensionMismatch {
            context: "kernel_core::center_cross_kernel",
            expected: n,
            got: k_vec.len(),
        });
    }
    let means = k_raw.row_means();
    let grand = k_raw.grand_mean();
    let kmean = k_vec.iter().fold(F::zero(), |a, &x| a + x) / cast::<F>(n as f64);
    Ok((0..n)
        .map(|i| k_vec[i] - kmean - means[i] + grand)
        .collect())
}

/// Leading eigenpairs of a Gram matrix with the rank floor applied.
#[derive(Debug, Clone)]
pub struct EigenBasis<F> {
    eigenvalues: Vec<F>,
    eigenvectors: Mat<F>,
    rank_tolerance: F,
    truncated: bool,
}

impl<F: Float> EigenBasis<F> {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[F] {
        &self.eigenvalues
    }

    /// n×r matrix of eigenvector columns.
    pub fn eigenvectors(&self) -> &Mat<F> {
        &self.eigenvectors
    }

    pub fn rank_tolerance(&self) -> F {
        self.rank_tolerance
    }

    /// True when fewer than the requested number of eigenvalues survived
    /// the rank floor.
    pub fn truncated(&self) -> bool {
        self.truncated
    }
}

/// The m largest eigenpairs of K, floored at 1e-10 · λ_max. Returns fewer
/// pairs (flagged) when the floor cuts in earlier.
pub fn top_eigen<F: Float>(k: &GramMatrix<F>, m: usize) -> Result<EigenBasis<F>> {
    let n = k.n();
    if m < 1 || m > n {
        return Err(Error::InvalidConfig {
            context: "kernel_core::top_eigen",
            reason: format!("component count m={m} outside 1..={n}"),
        });
    }
    let eig = k.full_eigen();
    let lmax = eig.values.first().copied().unwrap_or(F::zero()).max(F::zero());
    let rank_tolerance = lmax * cast::<F>(1e-10);
    let keep: Vec<usize> = (0..n)
        .take(m)
        .filter(|&j| eig.values[j] > rank_tolerance)
        .collect();
    let truncated = keep.len() < m;
    let mut vectors = Mat::zeros(n, keep.len());
    let mut values = Vec::with_capacity(keep.len());
    for (out_j, &j) in keep.iter().enumerate() {
        values.push(eig.values[j]);
        for i in 0..n {
            vectors[(i, out_j)] = eig.vectors[(i, j)];
        }
    }
    Ok(EigenBasis {
        eigenvalues: values,
        eigenvectors: vectors,
        rank_tolerance,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(s: f64) -> KernelParams<f64> {
        KernelParams::new(s).unwrap()
    }

    fn random_data(n: usize, d: usize, seed: u64) -> DataMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DataMatrix::new(
            (0..n)
                .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn rbf_identity_is_one() {
        let x = [0.3, -0.7, 2.0];
        for s in [0.1, 0.5, 3.0] {
            assert_eq!(rbf_eval(&x, &x, &params(s)).unwrap(), 1.0);
        }
    }

    #[test]
    fn rbf_small_displacement_bound() {
        // sigma = 1/sqrt(2), ‖x-y‖ = 0.1/sqrt(2) → exp(-0.005) ≥ 0.995.
        let x = [0.0];
        let y = [0.1 / 2.0_f64.sqrt()];
        let v = rbf_eval(&x, &y, &params(0.5)).unwrap();
        assert!((v - (-0.005_f64).exp()).abs() < 1e-15);
        assert!(v >= 0.995);
    }

    #[test]
    fn rbf_unit_distance() {
        let v = rbf_eval(&[0.0], &[1.0], &params(0.5)).unwrap();
        assert!((v - (-1.0_f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn rbf_dimension_mismatch() {
        assert!(matches!(
            rbf_eval(&[0.0], &[1.0, 2.0], &params(1.0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rbf_rejects_non_finite() {
        assert!(matches!(
            rbf_eval(&[f64::NAN], &[1.0], &params(1.0)),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn sigma_heuristic_single_pair() {
        let x: DataMatrix<f64> =
            DataMatrix::new(vec![vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let p = sigma_heuristic(&x).unwrap();
        assert!((p.sigma_sq() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn sigma_heuristic_identical_points_errors() {
        let x = DataMatrix::new(vec![vec![1.0, 2.0]; 4]).unwrap();
        assert!(matches!(sigma_heuristic(&x), Err(Error::DegenerateData)));
    }

    #[test]
    fn sigma_heuristic_matches_double_loop() {
        let x = random_data(4, 3, 11);
        let p = sigma_heuristic(&x).unwrap();
        // Brute-force oracle over all 6 unordered pairs.
        let mut sum = 0.0;
        let mut cnt = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    sum += sq_dist(x.row(i), x.row(j));
                    cnt += 1.0;
                }
            }
        }
        assert!((p.sigma_sq() - sum / cnt).abs() < 1e-12);
    }

    #[test]
    fn gram_single_point() {
        // DataMatrix enforces n ≥ 2; build the 1-row matrix directly to
        // exercise the 1×1 Gram case.
        let dm = DataMatrix {
            data: Mat::from_rows(vec![vec![1.0, 2.0]]),
            row_ids: vec![0],
        };
        let g = gram(&dm, &params(1.0)).unwrap();
        assert_eq!(g.n(), 1);
        assert_eq!(g.values()[(0, 0)], 1.0);
    }

    #[test]
    fn gram_unit_diagonal_and_line_case() {
        let x = DataMatrix::new(vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let g = gram(&x, &params(0.5)).unwrap();
        for i in 0..3 {
            assert_eq!(g.values()[(i, i)], 1.0);
        }
        let e1 = (-1.0_f64).exp();
        let e4 = (-4.0_f64).exp();
        assert!((g.values()[(0, 1)] - e1).abs() < 1e-15);
        assert!((g.values()[(0, 2)] - e4).abs() < 1e-15);
        assert!((g.values()[(1, 2)] - e1).abs() < 1e-15);
        // Elementwise against the scalar oracle.
        for i in 0..3 {
            for j in 0..3 {
                let o = rbf_eval(x.row(i), x.row(j), &params(0.5)).unwrap();
                assert_eq!(g.values()[(i, j)], o);
            }
        }
    }

    #[test]
    fn center_gram_zero_row_sums_and_idempotent() {
        let x = random_data(6, 2, 5);
        let g = gram(&x, &params(1.0)).unwrap();
        let c = center_gram(&g).unwrap();
        assert!(c.centered());
        let scale = c.values().max_abs();
        for i in 0..6 {
            let s: f64 = c.values().row(i).iter().sum();
            assert!(s.abs() <= 1e-8 * scale.max(1.0) * 6.0);
        }
        // Idempotence: centering the centered matrix changes nothing.
        let raw_again = GramMatrix::from_parts(
            c.values().clone(),
            false,
            *c.params(),
            c.source_ids().to_vec(),
        )
        .unwrap();
        let cc = center_gram(&raw_again).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert!((cc.values()[(i, j)] - c.values()[(i, j)]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn center_gram_1x1_is_zero() {
        let k = Mat::from_rows(vec![vec![1.0]]);
        let g = GramMatrix::from_parts(k, false, params(1.0), vec![0]).unwrap();
        let c = center_gram(&g).unwrap();
        assert_eq!(c.values()[(0, 0)], 0.0);
    }

    #[test]
    fn center_gram_matches_feature_space_oracle() {
        // Linear-kernel Gram K = XXᵀ: centering K must equal the Gram of
        // explicitly mean-subtracted rows.
        let rows = [
            vec![1.0, 0.5],
            vec![-0.3, 2.0],
            vec![0.7, -1.1],
            vec![0.2, 0.4],
        ];
        let n = rows.len();
        let lin = |a: &[f64], b: &[f64]| dot(a, b);
        let k = Mat::from_fn(n, n, |i, j| lin(&rows[i], &rows[j]));
        let g = GramMatrix::from_parts(k, false, params(1.0), (0..4).collect()).unwrap();
        let c = center_gram(&g).unwrap();

        let mut mean = vec![0.0; 2];
        for r in &rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / n as f64;
            }
        }
        let sub: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().zip(&mean).map(|(v, m)| v - m).collect())
            .collect();
        for i in 0..n {
            for j in 0..n {
                assert!((c.values()[(i, j)] - lin(&sub[i], &sub[j])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cross_kernel_consistency_with_gram_row() {
        let x = random_data(5, 3, 7);
        let p = params(0.8);
        let g = gram(&x, &p).unwrap();
        let c = center_gram(&g).unwrap();
        for j in 0..5 {
            let k_vec: Vec<f64> = (0..5)
                .map(|i| rbf_eval(x.row(j), x.row(i), &p).unwrap())
                .collect();
            let tilde = center_cross_kernel(&k_vec, &g).unwrap();
            for i in 0..5 {
                assert!((tilde[i] - c.values()[(j, i)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cross_kernel_column_means_vector_is_zeroed() {
        let x = random_data(5, 2, 13);
        let g = gram(&x, &params(1.0)).unwrap();
        let k_vec = g.row_means();
        let tilde = center_cross_kernel(&k_vec, &g).unwrap();
        for v in tilde {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn cross_kernel_matches_feature_space_oracle() {
        // Linear kernel: centered cross column must equal dot products of
        // mean-subtracted features.
        let rows = [vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let z = [0.5, -0.5];
        let n = rows.len();
        let k = Mat::from_fn(n, n, |i, j| dot(&rows[i], &rows[j]));
        let g = GramMatrix::from_parts(k, false, params(1.0), (0..3).collect()).unwrap();
        let k_vec: Vec<f64> = rows.iter().map(|r| dot(&z, r)).collect();
        let tilde = center_cross_kernel(&k_vec, &g).unwrap();

        let mean = [2.0 / 3.0, 2.0 / 3.0];
        let z_c: Vec<f64> = z.iter().zip(&mean).map(|(v, m)| v - m).collect();
        for (i, r) in rows.iter().enumerate() {
            let r_c: Vec<f64> = r.iter().zip(&mean).map(|(v, m)| v - m).collect();
            assert!((tilde[i] - dot(&z_c, &r_c)).abs() < 1e-12);
        }
    }

    #[test]
    fn cross_kernel_length_mismatch() {
        let x = random_data(4, 2, 1);
        let g = gram(&x, &params(1.0)).unwrap();
        assert!(matches!(
            center_cross_kernel(&[1.0, 2.0], &g),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn top_eigen_analytic_2x2() {
        let k = Mat::from_rows(vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
        let g = GramMatrix::from_parts(k, true, params(1.0), vec![0, 1]).unwrap();
        let e = top_eigen(&g, 2).unwrap();
        assert!((e.eigenvalues()[0] - 3.0).abs() < 1e-12);
        assert!((e.eigenvalues()[1] - 1.0).abs() < 1e-12);
        let s = 1.0 / 2.0_f64.sqrt();
        let v0 = e.eigenvectors().col(0);
        assert!((v0[0] - s).abs() < 1e-12 && (v0[1] - s).abs() < 1e-12);
        let v1 = e.eigenvectors().col(1);
        assert!((v1[0].abs() - s).abs() < 1e-12 && (v1[1].abs() - s).abs() < 1e-12);
        assert!(v1[0] * v1[1] < 0.0);
    }

    #[test]
    fn top_eigen_diagonal_sorted() {
        let k = Mat::from_rows(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 5.0, 0.0],
            vec![0.0, 0.0, 3.0],
        ]);
        let g = GramMatrix::from_parts(k, true, params(1.0), (0..3).collect()).unwrap();
        let e = top_eigen(&g, 3).unwrap();
        assert_eq!(e.len(), 3);
        assert!((e.eigenvalues()[0] - 5.0).abs() < 1e-12);
        assert!((e.eigenvalues()[1] - 3.0).abs() < 1e-12);
        assert!((e.eigenvalues()[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn top_eigen_residual_oracle_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let m = Mat::from_fn(6, 6, |_, _| rng.gen_range(-1.0..1.0_f64));
        let k = m.transpose().mul(&m);
        let g = GramMatrix::from_parts(k.clone(), true, params(1.0), (0..6).collect()).unwrap();
        let e = top_eigen(&g, 6).unwrap();
        let dmax = e.eigenvalues()[0];
        for j in 0..e.len() {
            let v = e.eigenvectors().col(j);
            let kv = k.mul_vec(&v);
            for i in 0..6 {
                assert!((kv[i] - e.eigenvalues()[j] * v[i]).abs() <= 1e-8 * dmax);
            }
        }
        // Orthonormal columns within 1e-10.
        for p in 0..e.len() {
            for q in 0..e.len() {
                let d = dot(&e.eigenvectors().col(p), &e.eigenvectors().col(q));
                let want = if p == q { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn top_eigen_floors_rank() {
        // Rank-1 PSD matrix: asking for 2 pairs returns 1, flagged.
        let k = Mat::from_rows(vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        let g = GramMatrix::from_parts(k, true, params(1.0), vec![0, 1]).unwrap();
        let e = top_eigen(&g, 2).unwrap();
        assert_eq!(e.len(), 1);
        assert!(e.truncated());
    }

    #[test]
    fn top_eigen_rejects_bad_m() {
        let k = Mat::identity(3);
        let g = GramMatrix::from_parts(k, true, params(1.0), (0..3).collect()).unwrap();
        assert!(top_eigen(&g, 0).is_err());
        assert!(top_eigen(&g, 4).is_err());
    }

    #[test]
    fn gram_rejects_asymmetric() {
        let mut k = Mat::identity(2);
        k[(0, 1)] = 0.5;
        assert!(matches!(
            GramMatrix::from_parts(k, false, params(1.0), vec![0, 1]),
            Err(Error::Asymmetric { .. })
        ));
    }

    #[test]
    fn rbf_entries_in_unit_interval() {
        let x = random_data(8, 3, 17);
        let g = gram(&x, &params(0.7)).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let v = g.values()[(i, j)];
                assert!(v > 0.0 && v <= 1.0);
            }
        }
    }
}
