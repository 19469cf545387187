//! The alternating sparse-KPCA fit: eigenbasis initialization, elastic-net
//! coefficient step, generalized-Procrustes loading step, convergence
//! control and kernel-norm normalization, plus the dense-KPCA and naive
//! thresholding baselines.

use crate::enet::{solve_enet_from, EnetProblem};
use crate::error::{Error, Result};
use crate::float::{cast, Float};
use crate::kernel::{top_eigen, EigenBasis, GramMatrix};
use crate::linalg::{complete_orthonormal, svd_thin, Mat};

/// Ridge weight: fixed, or scale-matched to K² as 1e-4 · λ_max(K)².
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ridge<F> {
    Auto,
    Fixed(F),
}

/// Fit configuration. `l1_ratio` is the single sparsity knob λ_j/λ shared
/// by every component.
#[derive(Debug, Clone)]
pub struct AlgoConfig<F> {
    pub m: usize,
    pub ridge: Ridge<F>,
    pub l1_ratio: F,
    pub outer_tol: F,
    pub max_outer_iter: usize,
    /// KKT tolerance for the per-column solves, relative to the spectral
    /// scale λ_max(K)² + λ of the quadratic; an absolute 1e-6 on a Gram
    /// matrix with λ_max in the hundreds is unreachable for coordinate
    /// descent and means nothing physically.
    pub enet_tol: F,
    pub enet_max_iter: usize,
    pub seed: u64,
}

impl<F: Float> AlgoConfig<F> {
    pub fn new(m: usize) -> Self {
        AlgoConfig {
            m,
            ridge: Ridge::Auto,
            l1_ratio: F::zero(),
            outer_tol: cast(1e-5),
            max_outer_iter: 200,
            enet_tol: cast(1e-6),
            enet_max_iter: 10_000,
            seed: 0,
        }
    }

    pub fn with_l1_ratio(mut self, r: F) -> Self {
        self.l1_ratio = r;
        self
    }

    pub fn with_ridge(mut self, ridge: Ridge<F>) -> Self {
        self.ridge = ridge;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::InvalidConfig {
                context: "skpca::AlgoConfig",
                reason: "component count m must be at least 1".into(),
            });
        }
        if !(self.l1_ratio >= F::zero()) {
            return Err(Error::InvalidConfig {
                context: "skpca::AlgoConfig",
                reason: "l1_ratio must be nonnegative".into(),
            });
        }
        if let Ridge::Fixed(r) = self.ridge {
            if !(r > F::zero()) {
                return Err(Error::InvalidConfig {
                    context: "skpca::AlgoConfig",
                    reason: "ridge weight must be positive".into(),
                });
            }
        }
        if !(self.outer_tol > F::zero()) || !(self.enet_tol > F::zero()) {
            return Err(Error::InvalidConfig {
                context: "skpca::AlgoConfig",
                reason: "tolerances must be positive".into(),
            });
        }
        Ok(())
    }

    /// Concrete ridge weight for a given Gram matrix.
    pub fn resolve_ridge(&self, k: &GramMatrix<F>) -> F {
        match self.ridge {
            Ridge::Fixed(r) => r,
            Ridge::Auto => {
                let lmax = k
                    .full_eigen()
                    .values
                    .first()
                    .copied()
                    .unwrap_or(F::zero())
                    .max(F::zero());
                (cast::<F>(1e-4) * lmax * lmax).max(F::min_positive_value())
            }
        }
    }
}

/// Fitted pair of coefficient matrices over the training points.
#[derive(Debug, Clone)]
pub struct SparseBasis<F> {
    /// Constraint-satisfying loadings: αᵀKα = I.
    pub alpha: Mat<F>,
    /// Sparse coefficients as returned by the alternation.
    pub beta: Mat<F>,
    /// β with each column rescaled to unit kernel norm (cᵀKc = 1); columns
    /// that came out identically zero stay zero and are listed in
    /// `degenerate_columns`.
    pub normalized_beta: Mat<F>,
    /// Objective value after every (β, α) alternation.
    pub objective_trace: Vec<F>,
    /// Percent of nonzero entries across all of β.
    pub sparsity_pct: F,
    pub degenerate_columns: Vec<usize>,
    pub converged: bool,
    pub iterations: usize,
}

impl<F: Float> SparseBasis<F> {
    pub fn n(&self) -> usize {
        self.beta.rows()
    }

    pub fn m(&self) -> usize {
        self.beta.cols()
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate_columns.len() == self.m()
    }

    /// Mean count of nonzero entries per component column.
    pub fn mean_nonzeros_per_pc(&self) -> F {
        let thresh = cast::<F>(1e-12);
        let total = self
            .beta
            .data()
            .iter()
            .filter(|x| x.abs() > thresh)
            .count();
        cast::<F>(total as f64 / self.m() as f64)
    }
}

/// Percent of entries of β with magnitude above 1e-12.
pub fn sparsity_pct<F: Float>(basis: &SparseBasis<F>) -> F {
    nonzero_pct(&basis.beta)
}

fn nonzero_pct<F: Float>(m: &Mat<F>) -> F {
    let thresh = cast::<F>(1e-12);
    let total = m.data().len();
    if total == 0 {
        return F::zero();
    }
    let nz = m.data().iter().filter(|x| x.abs() > thresh).count();
    cast::<F>(100.0 * nz as f64 / total as f64)
}

/// Initial loadings: column j = E_j / √D_j, which satisfies αᵀKα = I
/// exactly at the start.
pub fn init_alpha<F: Float>(eig: &EigenBasis<F>, m: usize) -> Result<Mat<F>> {
    if eig.len() < m {
        return Err(Error::RankDeficient {
            context: "skpca::init_alpha",
            rank: eig.len(),
            needed: m,
        });
    }
    let n = eig.eigenvectors().rows();
    let mut alpha = Mat::zeros(n, m);
    for j in 0..m {
        let scale = F::one() / eig.eigenvalues()[j].sqrt();
        for i in 0..n {
            alpha[(i, j)] = eig.eigenvectors()[(i, j)] * scale;
        }
    }
    Ok(alpha)
}

/// Coefficient step: column j solves the elastic-net subproblem with linear
/// term K²α_j, ridge λ and L1 weight l1_ratio·λ. The solve warm-starts at α
/// itself: α is the λ→0 unpenalized solution and, coming out of the
/// Procrustes step, carries no component in the null space of K, so the
/// descent path stays short and does not pick up null-space drift that the
/// KKT certificate cannot see.
pub fn update_beta<F: Float>(
    k: &GramMatrix<F>,
    alpha: &Mat<F>,
    cfg: &AlgoConfig<F>,
) -> Result<Mat<F>> {
    let k2 = k.values().mul(k.values());
    let ridge = cfg.resolve_ridge(k);
    let tol = enet_tol_for(k, ridge, cfg);
    update_beta_with(&k2, alpha, alpha, ridge, tol, cfg)
}

/// Absolute KKT tolerance for the column solves on this Gram matrix.
fn enet_tol_for<F: Float>(k: &GramMatrix<F>, ridge: F, cfg: &AlgoConfig<F>) -> F {
    let lmax = k
        .full_eigen()
        .values
        .first()
        .copied()
        .unwrap_or(F::zero())
        .max(F::zero());
    cfg.enet_tol * (lmax * lmax + ridge).max(F::one())
}

fn update_beta_with<F: Float>(
    k2: &Mat<F>,
    alpha: &Mat<F>,
    warm: &Mat<F>,
    ridge: F,
    tol: F,
    cfg: &AlgoConfig<F>,
) -> Result<Mat<F>> {
    let n = alpha.rows();
    let m = alpha.cols();
    let l1 = cfg.l1_ratio * ridge;
    let lin = k2.mul(alpha);
    let mut beta = Mat::zeros(n, m);
    for j in 0..m {
        let p = EnetProblem::new(k2, ridge, l1, lin.col(j))?;
        let sol = solve_enet_from(&p, tol, cfg.enet_max_iter, &warm.col(j))?;
        beta.set_col(j, &sol.beta);
    }
    Ok(beta)
}

/// Result of the constrained trace maximization. `degenerate` marks inputs
/// whose transformed matrix had fewer than m nonzero singular values; the
/// returned loadings still satisfy the constraint, but the maximizer is not
/// unique.
#[derive(Debug, Clone)]
pub struct Procrustes<F> {
    pub alpha: Mat<F>,
    pub degenerate: bool,
}

/// Maximizes tr(αᵀB) subject to αᵀQα = I_m:  α̂ = UΣ^{-1/2}U*V*ᵀ where
/// Q = UΣUᵀ on its retained rank and U*Σ*V*ᵀ is the SVD of Σ^{-1/2}UᵀB.
pub fn generalized_procrustes<F: Float>(b: &Mat<F>, q: &GramMatrix<F>) -> Result<Procrustes<F>> {
    let n = q.n();
    if b.rows() != n {
        return Err(Error::DimensionMismatch {
            context: "skpca::generalized_procrustes",
            expected: n,
            got: b.rows(),
        });
    }
    if !b.is_finite() {
        return Err(Error::NonFinite {
            context: "skpca::generalized_procrustes",
        });
    }
    let m = b.cols();
    let eig = q.full_eigen();
    let lmax = eig.values.first().copied().unwrap_or(F::zero()).max(F::zero());
    let floor = lmax * cast::<F>(1e-10);
    let r = eig.values.iter().filter(|&&v| v > floor).count();
    if r < m {
        return Err(Error::RankDeficient {
            context: "skpca::generalized_procrustes",
            rank: r,
            needed: m,
        });
    }

    // T = Σ^{-1/2} U_rᵀ B  (r × m)
    let mut t = Mat::zeros(r, m);
    for p in 0..r {
        let inv_sqrt = F::one() / eig.values[p].sqrt();
        for j in 0..m {
            let mut acc = F::zero();
            for i in 0..n {
                acc += eig.vectors[(i, p)] * b[(i, j)];
            }
            t[(p, j)] = acc * inv_sqrt;
        }
    }

    let svd = svd_thin(&t);
    let smax = svd.sigma.first().copied().unwrap_or(F::zero());
    let stol = smax * cast::<F>(1e-12);
    let ok: Vec<bool> = svd
        .sigma
        .iter()
        .map(|&s| smax > F::zero() && s > stol)
        .collect();
    let degenerate = ok.iter().any(|&o| !o);
    let mut u_star = svd.u;
    if degenerate {
        complete_orthonormal(&mut u_star, &ok);
    }

    // w = Σ^{-1/2} (U* V*ᵀ), then α = U_r w.
    let mut w = u_star.mul(&svd.v.transpose());
    for p in 0..r {
        let inv_sqrt = F::one() / eig.values[p].sqrt();
        for j in 0..m {
            w[(p, j)] *= inv_sqrt;
        }
    }
    let mut alpha = Mat::zeros(n, m);
    for i in 0..n {
        for p in 0..r {
            let uip = eig.vectors[(i, p)];
            if uip == F::zero() {
                continue;
            }
            for j in 0..m {
                alpha[(i, j)] += uip * w[(p, j)];
            }
        }
    }
    Ok(Procrustes { alpha, degenerate })
}

/// Loading step of the alternation: maximize tr(αᵀK²β) under αᵀKα = I.
pub fn update_alpha<F: Float>(k: &GramMatrix<F>, beta: &Mat<F>) -> Result<Procrustes<F>> {
    let kb = k.values().mul(beta);
    let k2b = k.values().mul(&kb);
    generalized_procrustes(&k2b, k)
}

/// Full alternating fit on a centered Gram matrix. Alternates the β and α
/// steps from the eigenbasis initialization until the elementwise β change
/// drops below outer_tol·(1 + max|β|) or the iteration cap is reached.
pub fn fit_skpca<F: Float>(k: &GramMatrix<F>, cfg: &AlgoConfig<F>) -> Result<SparseBasis<F>> {
    cfg.validate()?;
    if !k.centered() {
        return Err(Error::InvalidConfig {
            context: "skpca::fit_skpca",
            reason: "expected a centered Gram matrix".into(),
        });
    }
    let rank = k.retained_rank();
    if rank < cfg.m {
        return Err(Error::RankDeficient {
            context: "skpca::fit_skpca",
            rank,
            needed: cfg.m,
        });
    }
    let m = cfg.m;
    let eig_basis = top_eigen(k, m)?;
    let ridge = cfg.resolve_ridge(k);
    let l1 = cfg.l1_ratio * ridge;
    let enet_tol = enet_tol_for(k, ridge, cfg);
    let k2 = k.values().mul(k.values());

    let mut alpha = init_alpha(&eig_basis, m)?;
    // First warm start is α itself; see `update_beta` for why.
    let mut beta = alpha.clone();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0usize;

    for it in 0..cfg.max_outer_iter {
        iterations = it + 1;
        let new_beta = update_beta_with(&k2, &alpha, &beta, ridge, enet_tol, cfg)?;

        let mut delta = F::zero();
        for (a, b) in new_beta.data().iter().zip(beta.data()) {
            delta = delta.max((*a - *b).abs());
        }

        let k2b = k2.mul(&new_beta);
        let proc = generalized_procrustes(&k2b, k)?;
        alpha = proc.alpha;
        beta = new_beta;
        trace.push(alternation_objective(k, &k2b, &alpha, &beta, ridge, l1));

        if delta <= cfg.outer_tol * (F::one() + beta.max_abs()) {
            converged = true;
            break;
        }
    }

    let (normalized_beta, degenerate_columns) = normalize_to_kernel_norm(&beta, k);
    Ok(SparseBasis {
        alpha,
        sparsity_pct: nonzero_pct(&beta),
        normalized_beta,
        objective_trace: trace,
        degenerate_columns,
        converged,
        iterations,
        beta,
    })
}

/// The multi-component objective
/// J = tr(K) − 2 tr(αᵀK²β) + tr(βᵀ(K²+λI)β) + Σ_j λ_j |β_j|₁,
/// evaluated with K²β already in hand.
fn alternation_objective<F: Float>(
    k: &GramMatrix<F>,
    k2b: &Mat<F>,
    alpha: &Mat<F>,
    beta: &Mat<F>,
    ridge: F,
    l1: F,
) -> F {
    let two = cast::<F>(2.0);
    let mut cross = F::zero();
    let mut quad = F::zero();
    for (i, (&a, &b)) in alpha.data().iter().zip(beta.data()).enumerate() {
        let k2b_i = k2b.data()[i];
        cross += a * k2b_i;
        quad += b * k2b_i + ridge * b * b;
    }
    let l1_term = l1 * beta.data().iter().fold(F::zero(), |acc, &x| acc + x.abs());
    k.trace() - two * cross + quad + l1_term
}

fn normalize_to_kernel_norm<F: Float>(beta: &Mat<F>, k: &GramMatrix<F>) -> (Mat<F>, Vec<usize>) {
    let n = beta.rows();
    let m = beta.cols();
    let mut out = Mat::zeros(n, m);
    let mut degenerate = Vec::new();
    for j in 0..m {
        let c = beta.col(j);
        let kc = k.values().mul_vec(&c);
        let s = c.iter().zip(&kc).fold(F::zero(), |a, (&x, &y)| a + x * y);
        if s > F::zero() {
            let inv = F::one() / s.sqrt();
            for i in 0..n {
                out[(i, j)] = c[i] * inv;
            }
        } else {
            degenerate.push(j);
        }
    }
    (out, degenerate)
}

/// Dense KPCA baseline: every coefficient column is E_j/√D_j, fully dense,
/// already at unit kernel norm.
pub fn kpca_dense<F: Float>(k: &GramMatrix<F>, m: usize) -> Result<SparseBasis<F>> {
    let eig = top_eigen(k, m)?;
    if eig.len() < m {
        return Err(Error::RankDeficient {
            context: "skpca::kpca_dense",
            rank: eig.len(),
            needed: m,
        });
    }
    let alpha = init_alpha(&eig, m)?;
    let beta = alpha.clone();
    Ok(SparseBasis {
        sparsity_pct: nonzero_pct(&beta),
        alpha: alpha.clone(),
        normalized_beta: beta.clone(),
        objective_trace: Vec::new(),
        degenerate_columns: Vec::new(),
        converged: true,
        iterations: 0,
        beta,
    })
}

/// Baseline that keeps only the `keep` largest-magnitude entries of each
/// dense column (ties broken toward the lower index) and rescales survivors
/// to unit kernel norm.
pub fn naive_threshold<F: Float>(
    dense: &SparseBasis<F>,
    keep: usize,
    k: &GramMatrix<F>,
) -> Result<SparseBasis<F>> {
    let n = dense.n();
    let m = dense.m();
    if keep < 1 || keep > n {
        return Err(Error::InvalidConfig {
            context: "skpca::naive_threshold",
            reason: format!("keep={keep} outside 1..={n}"),
        });
    }
    let mut beta = Mat::zeros(n, m);
    for j in 0..m {
        let col = dense.beta.col(j);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            col[b]
                .abs()
                .partial_cmp(&col[a].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        for &i in order.iter().take(keep) {
            beta[(i, j)] = col[i];
        }
    }
    let (normalized_beta, degenerate_columns) = normalize_to_kernel_norm(&beta, k);
    Ok(SparseBasis {
        alpha: dense.alpha.clone(),
        sparsity_pct: nonzero_pct(&beta),
        normalized_beta,
        objective_trace: Vec::new(),
        degenerate_columns,
        converged: true,
        iterations: 0,
        beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{center_gram, gram, DataMatrix, KernelParams};
    use crate::linalg::{dot, max_principal_angle};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(s: f64) -> KernelParams<f64> {
        KernelParams::new(s).unwrap()
    }

    fn psd_gram(n: usize, seed: u64) -> GramMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = Mat::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let k = m.transpose().mul(&m);
        GramMatrix::from_parts(k, true, params(1.0), (0..n as u64).collect()).unwrap()
    }

    /// Centered PSD matrix with a prescribed, well-gapped spectrum.
    fn gapped_centered_gram(n: usize, spectrum: &[f64], seed: u64) -> GramMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = spectrum.len();
        // Random vectors orthogonal to the all-ones direction, orthonormalized.
        let mut cols = Mat::from_fn(n, r, |_, _| rng.gen_range(-1.0..1.0_f64));
        for j in 0..r {
            let mean: f64 = cols.col(j).iter().sum::<f64>() / n as f64;
            for i in 0..n {
                cols[(i, j)] -= mean;
            }
        }
        let q = crate::linalg::orthonormalize_columns(&cols);
        let mut k: Mat<f64> = Mat::zeros(n, n);
        for (j, &lam) in spectrum.iter().enumerate() {
            let v = q.col(j);
            for a in 0..n {
                for b in 0..n {
                    k[(a, b)] += lam * v[a] * v[b];
                }
            }
        }
        // Blend away asymmetry from accumulation order.
        let sym = Mat::from_fn(n, n, |i, j| 0.5 * (k[(i, j)] + k[(j, i)]));
        GramMatrix::from_parts(sym, true, params(1.0), (0..n as u64).collect()).unwrap()
    }

    fn alpha_constraint_residual(alpha: &Mat<f64>, k: &GramMatrix<f64>) -> f64 {
        let ka = k.values().mul(alpha);
        let gram = alpha.transpose().mul(&ka);
        let m = alpha.cols();
        let mut worst = 0.0_f64;
        for i in 0..m {
            for j in 0..m {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - want).abs());
            }
        }
        worst
    }

    #[test]
    fn init_alpha_scales_by_sqrt_eigenvalue() {
        let k = Mat::from_rows(vec![vec![4.0, 0.0], vec![0.0, 1.0]]);
        let g = GramMatrix::from_parts(k, true, params(1.0), vec![0, 1]).unwrap();
        let eig = top_eigen(&g, 1).unwrap();
        let a = init_alpha(&eig, 1).unwrap();
        // E_1 = e_1, D_1 = 4 → column = e_1 / 2.
        assert!((a[(0, 0)] - 0.5).abs() < 1e-14);
        assert!(a[(1, 0)].abs() < 1e-14);
    }

    #[test]
    fn init_alpha_diagonal_full_rank() {
        let k = Mat::from_rows(vec![
            vec![9.0, 0.0, 0.0],
            vec![0.0, 4.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        let g = GramMatrix::from_parts(k, true, params(1.0), (0..3).collect()).unwrap();
        let eig = top_eigen(&g, 3).unwrap();
        let a = init_alpha(&eig, 3).unwrap();
        assert!((a[(0, 0)] - 1.0 / 3.0).abs() < 1e-13);
        assert!((a[(1, 1)] - 0.5).abs() < 1e-13);
        assert!((a[(2, 2)] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn init_alpha_satisfies_constraint() {
        let g = psd_gram(8, 3);
        let eig = top_eigen(&g, 4).unwrap();
        let a = init_alpha(&eig, 4).unwrap();
        assert!(alpha_constraint_residual(&a, &g) < 1e-10);
    }

    #[test]
    fn init_alpha_rejects_excess_m() {
        let g = psd_gram(5, 4);
        let eig = top_eigen(&g, 3).unwrap();
        assert!(init_alpha(&eig, 4).is_err());
    }

    #[test]
    fn update_beta_zero_l1_matches_closed_form() {
        let g = psd_gram(7, 11);
        let mut cfg = AlgoConfig::new(2)
            .with_ridge(Ridge::Fixed(0.5))
            .with_l1_ratio(0.0);
        cfg.enet_tol = 1e-12;
        let eig = top_eigen(&g, 2).unwrap();
        let alpha = init_alpha(&eig, 2).unwrap();
        let beta = update_beta(&g, &alpha, &cfg).unwrap();

        // Closed form via the eigendecomposition of K: β_j = E diag(D²/(D²+λ)) Eᵀ α_j.
        let e = g.full_eigen();
        for j in 0..2 {
            let aj = alpha.col(j);
            let mut want = vec![0.0; 7];
            for p in 0..7 {
                let d = e.values[p];
                let v = e.vectors.col(p);
                let c = dot(&v, &aj) * (d * d) / (d * d + 0.5);
                for i in 0..7 {
                    want[i] += c * v[i];
                }
            }
            for i in 0..7 {
                assert!(
                    (beta[(i, j)] - want[i]).abs() < 1e-7,
                    "col {j} row {i}: {} vs {}",
                    beta[(i, j)],
                    want[i]
                );
            }
        }
    }

    #[test]
    fn update_beta_huge_l1_gives_zero() {
        let g = psd_gram(6, 13);
        let cfg = AlgoConfig::new(2)
            .with_ridge(Ridge::Fixed(1.0))
            .with_l1_ratio(1e9);
        let eig = top_eigen(&g, 2).unwrap();
        let alpha = init_alpha(&eig, 2).unwrap();
        let beta = update_beta(&g, &alpha, &cfg).unwrap();
        assert!(beta.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn update_beta_single_pc_spectral_shrinkage() {
        // β₁ = (D₁²/(D₁²+λ)) E₁/√D₁ for the ridge-only single-component step.
        let g = psd_gram(6, 17);
        let lambda = 0.25;
        let mut cfg = AlgoConfig::new(1)
            .with_ridge(Ridge::Fixed(lambda))
            .with_l1_ratio(0.0);
        cfg.enet_tol = 1e-12;
        let eig = top_eigen(&g, 1).unwrap();
        let alpha = init_alpha(&eig, 1).unwrap();
        let beta = update_beta(&g, &alpha, &cfg).unwrap();
        let d1 = eig.eigenvalues()[0];
        let shrink = d1 * d1 / (d1 * d1 + lambda);
        for i in 0..6 {
            assert!((beta[(i, 0)] - shrink * alpha[(i, 0)]).abs() < 1e-8);
        }
    }

    #[test]
    fn procrustes_identity_reduces_to_polar_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let b: Mat<f64> = Mat::from_fn(5, 2, |_, _| rng.gen_range(-1.0..1.0));
        let q = GramMatrix::from_parts(Mat::identity(5), true, params(1.0), (0..5).collect())
            .unwrap();
        let got = generalized_procrustes(&b, &q).unwrap();
        assert!(!got.degenerate);
        let svd = svd_thin(&b);
        let polar = svd.u.mul(&svd.v.transpose());
        for i in 0..5 {
            for j in 0..2 {
                assert!((got.alpha[(i, j)] - polar[(i, j)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn procrustes_constraint_and_optimality() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let q = psd_gram(5, 31);
        let b: Mat<f64> = Mat::from_fn(5, 2, |_, _| rng.gen_range(-1.0..1.0));
        let got = generalized_procrustes(&b, &q).unwrap();
        assert!(alpha_constraint_residual(&got.alpha, &q) < 1e-8);

        let obj = |a: &Mat<f64>| -> f64 {
            let mut t = 0.0;
            for i in 0..5 {
                for j in 0..2 {
                    t += a[(i, j)] * b[(i, j)];
                }
            }
            t
        };
        let best = obj(&got.alpha);
        for _ in 0..200 {
            let cand = random_feasible(&q, 2, &mut rng);
            assert!(obj(&cand) <= best + 1e-9 * best.abs().max(1.0));
        }
    }

    /// Q-orthonormalized random matrix: feasible point of the constraint set.
    fn random_feasible(
        q: &GramMatrix<f64>,
        m: usize,
        rng: &mut ChaCha8Rng,
    ) -> Mat<f64> {
        let n = q.n();
        let mut a = Mat::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0));
        for j in 0..m {
            for _ in 0..2 {
                for k in 0..j {
                    let ck = a.col(k);
                    let cj = a.col(j);
                    let q_ck = q.values().mul_vec(&ck);
                    let proj = dot(&cj, &q_ck);
                    for i in 0..n {
                        a[(i, j)] = a[(i, j)] - proj * ck[i];
                    }
                }
            }
            let cj = a.col(j);
            let q_cj = q.values().mul_vec(&cj);
            let nrm = dot(&cj, &q_cj).sqrt();
            for i in 0..n {
                a[(i, j)] /= nrm;
            }
        }
        a
    }

    #[test]
    fn update_alpha_zero_beta_is_degenerate() {
        let g = psd_gram(5, 37);
        let beta = Mat::zeros(5, 2);
        let got = update_alpha(&g, &beta).unwrap();
        assert!(got.degenerate);
        // Completion still satisfies the constraint.
        assert!(alpha_constraint_residual(&got.alpha, &g) < 1e-8);
    }

    #[test]
    fn update_alpha_rank_one_direction() {
        // m = 1: the maximizer of αᵀK²β under αᵀKα = 1 is K⁻¹K²β = Kβ
        // normalized in the K inner product, signed for a positive trace.
        let g = psd_gram(6, 41);
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let beta = Mat::from_fn(6, 1, |_, _| rng.gen_range(-1.0..1.0));
        let got = update_alpha(&g, &beta).unwrap();
        assert!(!got.degenerate);
        assert!(alpha_constraint_residual(&got.alpha, &g) < 1e-8);

        let kb = g.values().mul_vec(&beta.col(0));
        let k_kb = g.values().mul_vec(&kb);
        let nrm = dot(&kb, &k_kb).sqrt();
        let k2b = g.values().mul(&g.values().mul(&beta));
        let tr: f64 = (0..6).map(|i| got.alpha[(i, 0)] * k2b[(i, 0)]).sum();
        assert!(tr > 0.0);
        for i in 0..6 {
            assert!((got.alpha[(i, 0)] - kb[i] / nrm).abs() < 1e-8);
        }
    }

    #[test]
    fn alternation_fixed_point_preserves_eigenspace() {
        // Without the L1 term, one β-step from the eigenbasis init followed
        // by an α-step must stay in the span of the top eigenvectors.
        let g = psd_gram(9, 45);
        let mut cfg = AlgoConfig::new(3)
            .with_ridge(Ridge::Fixed(0.05))
            .with_l1_ratio(0.0);
        cfg.enet_tol = 1e-12;
        let eig = top_eigen(&g, 3).unwrap();
        let alpha0 = init_alpha(&eig, 3).unwrap();
        let beta = update_beta(&g, &alpha0, &cfg).unwrap();
        let alpha1 = update_alpha(&g, &beta).unwrap().alpha;
        let angle = max_principal_angle(&alpha1, &alpha0);
        assert!(angle <= 1e-6, "principal angle {angle}");
    }

    #[test]
    fn update_alpha_invariant_under_positive_scaling() {
        let g = psd_gram(6, 47);
        let mut rng = ChaCha8Rng::seed_from_u64(49);
        let beta = Mat::from_fn(6, 1, |_, _| rng.gen_range(-1.0..1.0));
        let a1 = update_alpha(&g, &beta).unwrap().alpha;
        let a2 = update_alpha(&g, &beta.scale(3.5)).unwrap().alpha;
        for i in 0..6 {
            assert!((a1[(i, 0)] - a2[(i, 0)]).abs() < 1e-9);
        }
    }

    #[test]
    fn fit_recovers_eigenspace_without_l1() {
        let g = gapped_centered_gram(12, &[10.0, 6.0, 3.0], 51);
        let cfg = AlgoConfig::new(2)
            .with_ridge(Ridge::Fixed(1e-8 * 100.0))
            .with_l1_ratio(0.0);
        let basis = fit_skpca(&g, &cfg).unwrap();
        assert!(basis.converged);
        assert!(basis.degenerate_columns.is_empty());
        let eig = top_eigen(&g, 2).unwrap();
        let angle = max_principal_angle(&basis.normalized_beta, eig.eigenvectors());
        assert!(angle <= 1e-3, "principal angle {angle}");
    }

    #[test]
    fn fit_flags_total_annihilation() {
        let g = gapped_centered_gram(10, &[5.0, 2.0], 57);
        let cfg = AlgoConfig::new(2)
            .with_ridge(Ridge::Fixed(1.0))
            .with_l1_ratio(1e9);
        let basis = fit_skpca(&g, &cfg).unwrap();
        assert!(basis.is_degenerate());
        assert!(basis.beta.data().iter().all(|&x| x == 0.0));
        assert_eq!(basis.sparsity_pct, 0.0);
    }

    #[test]
    fn fit_two_clusters_sparsifies_and_trace_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let mut rows = Vec::new();
        for _ in 0..12 {
            rows.push(vec![rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)]);
        }
        for _ in 0..12 {
            rows.push(vec![4.0 + rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)]);
        }
        let x = DataMatrix::new(rows).unwrap();
        let p = crate::kernel::sigma_heuristic(&x).unwrap();
        let k = center_gram(&gram(&x, &p).unwrap()).unwrap();
        let cfg = AlgoConfig::new(1).with_l1_ratio(10.0);
        let basis = fit_skpca(&k, &cfg).unwrap();
        let nz = basis
            .beta
            .data()
            .iter()
            .filter(|x: &&f64| x.abs() > 1e-12)
            .count();
        assert!(nz > 0 && nz < 24, "expected a sparse nonzero column, got {nz}");
        for w in basis.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0));
        }
    }

    #[test]
    fn fit_alpha_constraint_holds() {
        let g = gapped_centered_gram(10, &[8.0, 4.0, 2.0], 67);
        let cfg = AlgoConfig::new(2).with_l1_ratio(0.3);
        let basis = fit_skpca(&g, &cfg).unwrap();
        assert!(alpha_constraint_residual(&basis.alpha, &g) < 1e-6);
        // Normalized columns have unit kernel norm.
        for j in 0..2 {
            if basis.degenerate_columns.contains(&j) {
                continue;
            }
            let c = basis.normalized_beta.col(j);
            let kc = g.values().mul_vec(&c);
            let s = dot(&c, &kc);
            assert!((s - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn fit_rejects_uncentered() {
        let x = DataMatrix::new(vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let k = gram(&x, &params(1.0)).unwrap();
        let cfg = AlgoConfig::new(1);
        assert!(fit_skpca(&k, &cfg).is_err());
    }

    #[test]
    fn dense_baseline_diagonal_and_scores() {
        let k = Mat::from_rows(vec![
            vec![9.0, 0.0, 0.0],
            vec![0.0, 4.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        let g = GramMatrix::from_parts(k, true, params(1.0), (0..3).collect()).unwrap();
        let basis = kpca_dense(&g, 2).unwrap();
        // Scaled standard basis columns.
        assert!((basis.beta[(0, 0)] - 1.0 / 3.0).abs() < 1e-12);
        assert!((basis.beta[(1, 1)] - 0.5).abs() < 1e-12);
        // Training projections K·β_j must equal √D_j E_j.
        let scores = g.values().mul(&basis.normalized_beta);
        let eig = top_eigen(&g, 2).unwrap();
        for j in 0..2 {
            let want = eig.eigenvalues()[j].sqrt();
            for i in 0..3 {
                let expect = want * eig.eigenvectors()[(i, j)];
                assert!((scores[(i, j)] - expect).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn dense_baseline_projection_identity_random() {
        let x = DataMatrix::new(
            (0..9)
                .map(|i| vec![(i as f64) * 0.37 % 1.9, ((i * i) as f64) * 0.11 % 1.3])
                .collect(),
        )
        .unwrap();
        let p = crate::kernel::sigma_heuristic(&x).unwrap();
        let kc = center_gram(&gram(&x, &p).unwrap()).unwrap();
        let m = kc.retained_rank().min(4);
        let basis = kpca_dense(&kc, m).unwrap();
        let eig = top_eigen(&kc, m).unwrap();
        let scores = kc.values().mul(&basis.normalized_beta);
        for j in 0..m {
            let sd = eig.eigenvalues()[j].sqrt();
            for i in 0..9 {
                assert!((scores[(i, j)] - sd * eig.eigenvectors()[(i, j)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn naive_threshold_keep_all_and_keep_one() {
        let g = psd_gram(6, 71);
        let dense = kpca_dense(&g, 2).unwrap();
        let all = naive_threshold(&dense, 6, &g).unwrap();
        for j in 0..2 {
            // Same support, unit kernel norm.
            let c = all.normalized_beta.col(j);
            let kc = g.values().mul_vec(&c);
            assert!((dot(&c, &kc) - 1.0).abs() < 1e-10);
        }
        let one = naive_threshold(&dense, 1, &g).unwrap();
        for j in 0..2 {
            let nz = one.beta.col(j).iter().filter(|x| x.abs() > 0.0).count();
            assert_eq!(nz, 1);
            let max_idx = (0..6)
                .max_by(|&a, &b| {
                    dense.beta[(a, j)]
                        .abs()
                        .partial_cmp(&dense.beta[(b, j)].abs())
                        .unwrap()
                })
                .unwrap();
            assert!(one.beta[(max_idx, j)] != 0.0);
        }
    }

    #[test]
    fn naive_threshold_tie_breaks_low_index() {
        // Column (0.6, -0.6, 0.1), keep 2 → indices 0 and 1 survive.
        let k = Mat::identity(3);
        let g = GramMatrix::from_parts(k, true, params(1.0), (0..3).collect()).unwrap();
        let col = vec![0.6, -0.6, 0.1];
        let mut beta: Mat<f64> = Mat::zeros(3, 1);
        beta.set_col(0, &col);
        let dense = SparseBasis {
            alpha: beta.clone(),
            beta: beta.clone(),
            normalized_beta: beta.clone(),
            objective_trace: vec![],
            sparsity_pct: 100.0,
            degenerate_columns: vec![],
            converged: true,
            iterations: 0,
        };
        let t = naive_threshold(&dense, 2, &g).unwrap();
        assert!(t.beta[(0, 0)] != 0.0);
        assert!(t.beta[(1, 0)] != 0.0);
        assert_eq!(t.beta[(2, 0)], 0.0);
    }

    #[test]
    fn sparsity_pct_edge_cases() {
        let g = psd_gram(4, 73);
        let mut basis = kpca_dense(&g, 2).unwrap();
        assert_eq!(sparsity_pct(&basis), 100.0);
        basis.beta = Mat::zeros(4, 2);
        assert_eq!(sparsity_pct(&basis), 0.0);
    }

    #[test]
    fn sparsity_pct_fractional_percentage() {
        // 15 components over 2000 points, 67 nonzeros per column → 3.35%.
        let n = 2000;
        let m = 15;
        let mut beta: Mat<f64> = Mat::zeros(n, m);
        for j in 0..m {
            for i in 0..67 {
                beta[(i * 7 % n, j)] = 1.0;
            }
        }
        let basis = SparseBasis {
            alpha: beta.clone(),
            normalized_beta: beta.clone(),
            beta,
            objective_trace: vec![],
            sparsity_pct: 0.0,
            degenerate_columns: vec![],
            converged: true,
            iterations: 0,
        };
        assert!((sparsity_pct(&basis) - 3.35).abs() < 1e-12);
    }
}
