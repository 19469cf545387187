//! One-class outlier detection in kernel feature space: spherical potential,
//! reconstruction error against the (sparse) component basis, threshold
//! policies, and compression of the model down to the training points that
//! carry nonzero coefficients.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::basis::SparseBasis;
use crate::error::{Error, Result};
use crate::float::{cast, Float};
use crate::kernel::{gram, rbf_eval, DataMatrix, KernelParams};
use crate::linalg::Mat;

/// Class label; the outlier class is the positive class everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Inlier,
    Outlier,
}

/// Score plus the thresholded decision. Equality with the threshold counts
/// as inlier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict<F> {
    pub score: F,
    pub label: Label,
}

/// How the decision threshold is chosen at fit time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdPolicy<F> {
    /// p-quantile of the training reconstruction errors (default p = 0.95).
    Quantile(F),
    /// Externally supplied value, stored as-is.
    External(F),
}

impl<F: Float> Default for ThresholdPolicy<F> {
    fn default() -> Self {
        ThresholdPolicy::Quantile(cast(0.95))
    }
}

/// How the model evaluates the mean kernel sum S(z) = (1/n)Σᵢ k(z, xᵢ)
/// that both the spherical potential and query centering need.
#[derive(Debug, Clone)]
pub enum PotentialData<F> {
    /// Side array of all n training rows with their Gram column means;
    /// S(z) is exact.
    Exact { points: Mat<F>, col_means: Vec<F> },
    /// Only retained points survive; S(z) ≈ scale · mean_r k(z, x_r).
    /// `reported_bound` is the max absolute error of that approximation
    /// observed over the training points at compression time.
    Approximate { scale: F, reported_bound: F },
}

/// Everything a detector model consists of, in plain data form. Used to
/// build models from persisted files and to serialize them back.
#[derive(Debug, Clone)]
pub struct ModelParts<F> {
    pub params: KernelParams<F>,
    pub q: usize,
    pub threshold: F,
    pub n_train: usize,
    pub grand_mean: F,
    pub retained_points: Mat<F>,
    pub retained_ids: Vec<u64>,
    pub retained_col_means: Vec<F>,
    /// |retained| × q coefficient block (rows follow `retained_points`).
    pub coeffs: Mat<F>,
    pub potential: PotentialData<F>,
}

/// Fitted detector. Immutable after construction; scoring is reentrant.
#[derive(Debug)]
pub struct DetectorModel<F> {
    parts: ModelParts<F>,
    clamp_events: AtomicU64,
}

impl<F: Float> Clone for DetectorModel<F> {
    fn clone(&self) -> Self {
        DetectorModel {
            parts: self.parts.clone(),
            clamp_events: AtomicU64::new(self.clamp_events.load(Ordering::Relaxed)),
        }
    }
}

impl<F: Float> DetectorModel<F> {
    pub fn from_parts(parts: ModelParts<F>) -> Result<Self> {
        let r = parts.retained_points.rows();
        if parts.coeffs.rows() != r || parts.coeffs.cols() != parts.q {
            return Err(Error::DimensionMismatch {
                context: "detector::ModelParts coeffs",
                expected: r * parts.q,
                got: parts.coeffs.rows() * parts.coeffs.cols(),
            });
        }
        if parts.retained_col_means.len() != r || parts.retained_ids.len() != r {
            return Err(Error::DimensionMismatch {
                context: "detector::ModelParts retained",
                expected: r,
                got: parts.retained_col_means.len(),
            });
        }
        if parts.q < 1 {
            return Err(Error::InvalidConfig {
                context: "detector::ModelParts",
                reason: "q must be at least 1".into(),
            });
        }
        if !parts.threshold.is_finite() {
            return Err(Error::NonFinite {
                context: "detector::ModelParts threshold",
            });
        }
        if let PotentialData::Exact { points, col_means } = &parts.potential {
            if points.rows() != parts.n_train || col_means.len() != parts.n_train {
                return Err(Error::DimensionMismatch {
                    context: "detector::ModelParts potential",
                    expected: parts.n_train,
                    got: points.rows(),
                });
            }
        }
        Ok(DetectorModel {
            parts,
            clamp_events: AtomicU64::new(0),
        })
    }

    pub fn to_parts(&self) -> ModelParts<F> {
        self.parts.clone()
    }

    pub fn q(&self) -> usize {
        self.parts.q
    }

    pub fn threshold(&self) -> F {
        self.parts.threshold
    }

    pub fn n_train(&self) -> usize {
        self.parts.n_train
    }

    pub fn retained_count(&self) -> usize {
        self.parts.retained_points.rows()
    }

    pub fn retained_ids(&self) -> &[u64] {
        &self.parts.retained_ids
    }

    pub fn params(&self) -> &KernelParams<F> {
        &self.parts.params
    }

    pub fn dim(&self) -> usize {
        self.parts.retained_points.cols()
    }

    pub fn is_potential_exact(&self) -> bool {
        matches!(self.parts.potential, PotentialData::Exact { .. })
    }

    /// Max training-point error of the approximate potential sum, when the
    /// model has been lossily compressed.
    pub fn approx_bound(&self) -> Option<F> {
        match self.parts.potential {
            PotentialData::Approximate { reported_bound, .. } => Some(reported_bound),
            PotentialData::Exact { .. } => None,
        }
    }

    /// Number of times a reconstruction error was clamped up to zero.
    pub fn clamp_events(&self) -> u64 {
        self.clamp_events.load(Ordering::Relaxed)
    }

    fn check_dim(&self, z: &[F]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "detector::query",
                expected: self.dim(),
                got: z.len(),
            });
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "detector::query",
            });
        }
        Ok(())
    }

    /// Kernel column against the retained points plus the mean kernel sum
    /// S(z) over the (conceptual) full training set.
    fn kernel_stats(&self, z: &[F]) -> Result<(Vec<F>, F)> {
        let r = self.retained_count();
        let mut k_r = Vec::with_capacity(r);
        for i in 0..r {
            k_r.push(rbf_eval(z, self.parts.retained_points.row(i), &self.parts.params)?);
        }
        let s = match &self.parts.potential {
            PotentialData::Exact { points, .. } => {
                let n = points.rows();
                let mut acc = F::zero();
                for i in 0..n {
                    acc += rbf_eval(z, points.row(i), &self.parts.params)?;
                }
                acc / cast::<F>(n as f64)
            }
            PotentialData::Approximate { scale, .. } => {
                let mean = k_r.iter().fold(F::zero(), |a, &x| a + x) / cast::<F>(r as f64);
                *scale * mean
            }
        };
        Ok((k_r, s))
    }

    fn scores_from(&self, k_r: &[F], s: F) -> (F, F) {
        let p_s = F::one() - cast::<F>(2.0) * s + self.parts.grand_mean;
        // Centered query column restricted to the retained points.
        let r = k_r.len();
        let mut energy = F::zero();
        for j in 0..self.parts.q {
            let mut proj = F::zero();
            for i in 0..r {
                let c = self.parts.coeffs[(i, j)];
                if c == F::zero() {
                    continue;
                }
                let centered = k_r[i] - s - self.parts.retained_col_means[i] + self.parts.grand_mean;
                proj += c * centered;
            }
            energy += proj * proj;
        }
        let raw = p_s - energy;
        let err = if raw < F::zero() {
            self.clamp_events.fetch_add(1, Ordering::Relaxed);
            F::zero()
        } else {
            raw
        };
        (p_s, err)
    }
}

/// p_s(z) = ‖φ(z) − φ₀‖² = k(z,z) − (2/n)Σᵢ k(z,xᵢ) + (1/n²)ΣᵢΣⱼ k(xᵢ,xⱼ),
/// which for the RBF kernel is 1 − 2·S(z) + grand mean. On a lossily
/// compressed model S(z) is the documented approximation.
pub fn spherical_potential<F: Float>(z: &[F], model: &DetectorModel<F>) -> Result<F> {
    model.check_dim(z)?;
    let (_, s) = model.kernel_stats(z)?;
    Ok(F::one() - cast::<F>(2.0) * s + model.parts.grand_mean)
}

/// Reconstruction error: spherical potential minus the captured projection
/// energy onto the q components. Slightly negative values (possible for
/// non-orthogonal sparse bases) are clamped to zero and counted.
pub fn reconstruction_error<F: Float>(z: &[F], model: &DetectorModel<F>) -> Result<F> {
    model.check_dim(z)?;
    let (k_r, s) = model.kernel_stats(z)?;
    Ok(model.scores_from(&k_r, s).1)
}

/// Score and threshold: outlier iff score is strictly greater than the
/// model threshold.
pub fn classify<F: Float>(z: &[F], model: &DetectorModel<F>) -> Result<Verdict<F>> {
    let score = reconstruction_error(z, model)?;
    let label = if score > model.parts.threshold {
        Label::Outlier
    } else {
        Label::Inlier
    };
    Ok(Verdict { score, label })
}

/// Builds the detector from a fitted basis. Keeps only training rows that
/// carry a nonzero coefficient in some nondegenerate component; the full
/// training set is retained as an exact side array for the potential sums
/// until `compress` drops it.
pub fn fit_detector<F: Float>(
    x: &DataMatrix<F>,
    basis: &SparseBasis<F>,
    params: &KernelParams<F>,
    policy: ThresholdPolicy<F>,
) -> Result<DetectorModel<F>> {
    let n = x.n();
    if basis.n() != n {
        return Err(Error::DimensionMismatch {
            context: "detector::fit_detector",
            expected: n,
            got: basis.n(),
        });
    }
    if let ThresholdPolicy::Quantile(p) = policy {
        if !(p >= F::zero() && p <= F::one()) {
            return Err(Error::InvalidConfig {
                context: "detector::fit_detector",
                reason: "quantile must lie in [0, 1]".into(),
            });
        }
    }

    // Components that survived normalization.
    let kept_cols: Vec<usize> = (0..basis.m())
        .filter(|j| !basis.degenerate_columns.contains(j))
        .collect();
    if kept_cols.is_empty() {
        return Err(Error::DegenerateBasis {
            context: "detector::fit_detector",
        });
    }
    let q = kept_cols.len();

    let raw = gram(x, params)?;
    let col_means = raw.row_means();
    let grand_mean = raw.grand_mean();

    // Support union across kept columns.
    let retained_idx: Vec<usize> = (0..n)
        .filter(|&i| kept_cols.iter().any(|&j| basis.normalized_beta[(i, j)] != F::zero()))
        .collect();
    if retained_idx.is_empty() {
        return Err(Error::DegenerateBasis {
            context: "detector::fit_detector",
        });
    }
    let r = retained_idx.len();
    let mut retained_points = Mat::zeros(r, x.dim());
    let mut coeffs = Mat::zeros(r, q);
    let mut retained_ids = Vec::with_capacity(r);
    let mut retained_col_means = Vec::with_capacity(r);
    for (out_i, &i) in retained_idx.iter().enumerate() {
        retained_points.row_mut(out_i).copy_from_slice(x.row(i));
        retained_ids.push(x.row_ids()[i]);
        retained_col_means.push(col_means[i]);
        for (out_j, &j) in kept_cols.iter().enumerate() {
            coeffs[(out_i, out_j)] = basis.normalized_beta[(i, j)];
        }
    }

    let mut points = Mat::zeros(n, x.dim());
    for i in 0..n {
        points.row_mut(i).copy_from_slice(x.row(i));
    }

    let model = DetectorModel {
        parts: ModelParts {
            params: *params,
            q,
            threshold: F::zero(),
            n_train: n,
            grand_mean,
            retained_points,
            retained_ids,
            retained_col_means,
            coeffs,
            potential: PotentialData::Exact {
                points,
                col_means: col_means.clone(),
            },
        },
        clamp_events: AtomicU64::new(0),
    };

    // Training scores straight from the Gram rows; identical values to what
    // classify would recompute from the stored vectors.
    let mut scores: Vec<F> = Vec::with_capacity(n);
    for i in 0..n {
        let k_r: Vec<F> = retained_idx.iter().map(|&j| raw.values()[(i, j)]).collect();
        let s = col_means[i];
        scores.push(model.scores_from(&k_r, s).1);
    }

    let threshold = match policy {
        ThresholdPolicy::External(t) => t,
        ThresholdPolicy::Quantile(p) => {
            let mut sorted = scores.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            let idx_f = (p * cast::<F>(n as f64)).ceil();
            let idx = idx_f.to_f64().unwrap_or(1.0).max(1.0) as usize - 1;
            sorted[idx.min(n - 1)]
        }
    };

    // The clamp counter now reflects the training-score pass; callers can
    // read it to spot strongly non-orthogonal bases.
    let mut model = model;
    model.parts.threshold = threshold;
    Ok(model)
}

/// Drops or keeps the full-training-set side array. With
/// `keep_potential_exact` the scores stay bit-identical to the fitted
/// model; without it the potential sums switch to the documented
/// retained-point approximation and the observed training error bound is
/// recorded. An already-approximate model is returned unchanged.
pub fn compress<F: Float>(model: &DetectorModel<F>, keep_potential_exact: bool) -> DetectorModel<F> {
    if keep_potential_exact {
        return model.clone();
    }
    let (points, col_means) = match &model.parts.potential {
        PotentialData::Approximate { .. } => return model.clone(),
        PotentialData::Exact { points, col_means } => (points, col_means),
    };
    let r = model.retained_count();
    let n = model.parts.n_train;
    let mean_retained = model
        .parts
        .retained_col_means
        .iter()
        .fold(F::zero(), |a, &x| a + x)
        / cast::<F>(r as f64);
    let scale = model.parts.grand_mean / mean_retained;

    // Observed approximation error over the training points themselves.
    let mut bound = F::zero();
    for t in 0..n {
        let exact = col_means[t];
        let mut acc = F::zero();
        for i in 0..r {
            acc += rbf_eval(
                points.row(t),
                model.parts.retained_points.row(i),
                &model.parts.params,
            )
            .expect("stored points are finite");
        }
        let approx = scale * acc / cast::<F>(r as f64);
        bound = bound.max((exact - approx).abs());
    }

    let mut parts = model.parts.clone();
    parts.potential = PotentialData::Approximate {
        scale,
        reported_bound: bound,
    };
    DetectorModel {
        parts,
        clamp_events: AtomicU64::new(0),
    }
}
