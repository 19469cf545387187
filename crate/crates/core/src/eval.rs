//! Experiment harness: F1 / ROC / AUROC metrics, the sparsity sweep and
//! repeated-trial protocols, and the empirical probe of how well kernel
//! eigenvectors are representable over a small data subset.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::basis::{fit_skpca, kpca_dense, naive_threshold, AlgoConfig, SparseBasis};
use crate::detector::{fit_detector, reconstruction_error, Label, ThresholdPolicy};
use crate::error::{Error, Result};
use crate::float::{cast, Float};
use crate::kernel::{
    center_gram, gram, rbf_eval, sigma_heuristic, top_eigen, DataMatrix, KernelParams,
};
use crate::linalg::{lstsq, norm2, sq_dist, Mat};

/// Scores with ground-truth labels; outliers are the positive class.
#[derive(Debug, Clone)]
pub struct LabeledScores<F> {
    scores: Vec<F>,
    labels: Vec<Label>,
}

impl<F: Float> LabeledScores<F> {
    pub fn new(scores: Vec<F>, labels: Vec<Label>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::EmptyInput {
                context: "eval_harness::LabeledScores",
            });
        }
        if scores.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                context: "eval_harness::LabeledScores",
                expected: scores.len(),
                got: labels.len(),
            });
        }
        Ok(LabeledScores { scores, labels })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn scores(&self) -> &[F] {
        &self.scores
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&l| l == Label::Outlier).count();
        (pos, self.labels.len() - pos)
    }

    fn require_both_classes(&self) -> Result<(usize, usize)> {
        let (pos, neg) = self.class_counts();
        if pos == 0 || neg == 0 {
            return Err(Error::SingleClass);
        }
        Ok((pos, neg))
    }
}

/// F1 with outlier as the positive class, predicted positive iff
/// score > threshold. Returns 0 when precision + recall is 0.
pub fn f1_score<F: Float>(ls: &LabeledScores<F>, threshold: F) -> Result<F> {
    ls.require_both_classes()?;
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (&s, &l) in ls.scores.iter().zip(&ls.labels) {
        let predicted_outlier = s > threshold;
        match (predicted_outlier, l) {
            (true, Label::Outlier) => tp += 1,
            (true, Label::Inlier) => fp += 1,
            (false, Label::Outlier) => fn_ += 1,
            (false, Label::Inlier) => {}
        }
    }
    if tp == 0 {
        return Ok(F::zero());
    }
    let tp = cast::<F>(tp as f64);
    let p = tp / (tp + cast::<F>(fp as f64));
    let r = tp / (tp + cast::<F>(fn_ as f64));
    Ok(cast::<F>(2.0) * p * r / (p + r))
}

/// ROC points at every distinct score threshold, tied scores grouped.
/// Starts at (0,0), ends at (1,1), monotone in both coordinates.
pub fn roc_curve<F: Float>(ls: &LabeledScores<F>) -> Result<Vec<(F, F)>> {
    let (pos, neg) = ls.require_both_classes()?;
    let mut order: Vec<usize> = (0..ls.len()).collect();
    order.sort_by(|&a, &b| {
        ls.scores[b]
            .partial_cmp(&ls.scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let pos_f = cast::<F>(pos as f64);
    let neg_f = cast::<F>(neg as f64);
    let mut points = vec![(F::zero(), F::zero())];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let s = ls.scores[order[i]];
        let mut j = i;
        while j < order.len() && ls.scores[order[j]] == s {
            match ls.labels[order[j]] {
                Label::Outlier => tp += 1,
                Label::Inlier => fp += 1,
            }
            j += 1;
        }
        points.push((cast::<F>(fp as f64) / neg_f, cast::<F>(tp as f64) / pos_f));
        i = j;
    }
    Ok(points)
}

/// Trapezoidal area under the ROC curve. Equals the probability that a
/// random outlier outscores a random inlier, plus half the tie mass.
pub fn auroc<F: Float>(ls: &LabeledScores<F>) -> Result<F> {
    let curve = roc_curve(ls)?;
    let half = cast::<F>(0.5);
    let mut area = F::zero();
    for w in curve.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        area += (x1 - x0) * (y0 + y1) * half;
    }
    Ok(area)
}

/// Metric triple reported for every fitted operating point.
#[derive(Debug, Clone, Copy)]
pub struct PointMetrics<F> {
    pub sparsity_pct: F,
    pub f1: F,
    pub auroc: F,
}

/// Pool of rows with ground-truth labels, from which seeded train/test
/// splits are drawn.
#[derive(Debug, Clone)]
pub struct LabeledDataset<F> {
    data: DataMatrix<F>,
    labels: Vec<Label>,
}

impl<F: Float> LabeledDataset<F> {
    pub fn new(data: DataMatrix<F>, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != data.n() {
            return Err(Error::DimensionMismatch {
                context: "eval_harness::LabeledDataset",
                expected: data.n(),
                got: labels.len(),
            });
        }
        Ok(LabeledDataset { data, labels })
    }

    pub fn data(&self) -> &DataMatrix<F> {
        &self.data
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Seeded uniform split without replacement: train inliers, then test
    /// inliers and test outliers. Deterministic for a fixed seed.
    pub fn split(&self, spec: &SplitSpec, seed: u64) -> Result<Split<F>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut inliers: Vec<usize> = (0..self.data.n())
            .filter(|&i| self.labels[i] == Label::Inlier)
            .collect();
        let mut outliers: Vec<usize> = (0..self.data.n())
            .filter(|&i| self.labels[i] == Label::Outlier)
            .collect();
        if inliers.len() < spec.train_inliers + spec.test_inliers {
            return Err(Error::TooFewSamples {
                context: "eval_harness::split inliers",
                needed: spec.train_inliers + spec.test_inliers,
                got: inliers.len(),
            });
        }
        if outliers.len() < spec.test_outliers {
            return Err(Error::TooFewSamples {
                context: "eval_harness::split outliers",
                needed: spec.test_outliers,
                got: outliers.len(),
            });
        }
        inliers.shuffle(&mut rng);
        outliers.shuffle(&mut rng);

        let take = |idx: &[usize]| -> (Vec<Vec<F>>, Vec<u64>) {
            let rows = idx.iter().map(|&i| self.data.row(i).to_vec()).collect();
            let ids = idx.iter().map(|&i| self.data.row_ids()[i]).collect();
            (rows, ids)
        };

        let train_idx = &inliers[..spec.train_inliers];
        let (train_rows, train_ids) = take(train_idx);
        let train = DataMatrix::with_ids(train_rows, train_ids)?;

        let test_in = &inliers[spec.train_inliers..spec.train_inliers + spec.test_inliers];
        let test_out = &outliers[..spec.test_outliers];
        let mut test_idx: Vec<usize> = test_in.to_vec();
        test_idx.extend_from_slice(test_out);
        let (test_rows, test_ids) = take(&test_idx);
        let test = DataMatrix::with_ids(test_rows, test_ids)?;
        let test_labels: Vec<Label> = std::iter::repeat(Label::Inlier)
            .take(spec.test_inliers)
            .chain(std::iter::repeat(Label::Outlier).take(spec.test_outliers))
            .collect();
        Ok(Split {
            train,
            test,
            test_labels,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    pub train_inliers: usize,
    pub test_inliers: usize,
    pub test_outliers: usize,
}

#[derive(Debug)]
pub struct Split<F> {
    pub train: DataMatrix<F>,
    pub test: DataMatrix<F>,
    pub test_labels: Vec<Label>,
}

/// Scores a test set against a fitted basis and summarizes it.
pub fn evaluate_basis<F: Float>(
    train: &DataMatrix<F>,
    test: &DataMatrix<F>,
    test_labels: &[Label],
    basis: &SparseBasis<F>,
    params: &KernelParams<F>,
    policy: ThresholdPolicy<F>,
) -> Result<PointMetrics<F>> {
    let model = fit_detector(train, basis, params, policy)?;
    let mut scores = Vec::with_capacity(test.n());
    for i in 0..test.n() {
        scores.push(reconstruction_error(test.row(i), &model)?);
    }
    let ls = LabeledScores::new(scores, test_labels.to_vec())?;
    Ok(PointMetrics {
        sparsity_pct: basis.sparsity_pct,
        f1: f1_score(&ls, model.threshold())?,
        auroc: auroc(&ls)?,
    })
}

/// One grid entry of the sparsity sweep: the SKPCA point and the
/// matched-sparsity naive-thresholding point. Degenerate fits leave holes.
#[derive(Debug, Clone)]
pub struct SweepPoint<F> {
    pub l1_ratio: F,
    pub skpca: Option<PointMetrics<F>>,
    pub naive: Option<PointMetrics<F>>,
}

#[derive(Debug, Clone)]
pub struct SweepReport<F> {
    pub points: Vec<SweepPoint<F>>,
    /// Dense-KPCA reference line.
    pub kpca: PointMetrics<F>,
}

/// F1/AUROC-vs-sparsity sweep over a grid of L1 ratios, with the dense-KPCA
/// reference and a naive-thresholding baseline matched to the mean number
/// of nonzero coefficients per component.
pub fn sparsity_sweep<F: Float>(
    train: &DataMatrix<F>,
    test: &DataMatrix<F>,
    test_labels: &[Label],
    grid: &[F],
    cfg: &AlgoConfig<F>,
    params: &KernelParams<F>,
    policy: ThresholdPolicy<F>,
) -> Result<SweepReport<F>> {
    if grid.is_empty() {
        return Err(Error::EmptyInput {
            context: "eval_harness::sparsity_sweep",
        });
    }
    let kc = center_gram(&gram(train, params)?)?;
    let dense = kpca_dense(&kc, cfg.m)?;
    let kpca = evaluate_basis(train, test, test_labels, &dense, params, policy)?;

    let mut points = Vec::with_capacity(grid.len());
    for &ratio in grid {
        let mut c = cfg.clone();
        c.l1_ratio = ratio;
        let basis = fit_skpca(&kc, &c)?;
        if basis.is_degenerate() {
            points.push(SweepPoint {
                l1_ratio: ratio,
                skpca: None,
                naive: None,
            });
            continue;
        }
        let skpca = evaluate_basis(train, test, test_labels, &basis, params, policy)?;
        let keep = basis
            .mean_nonzeros_per_pc()
            .round()
            .to_f64()
            .unwrap_or(1.0)
            .max(1.0) as usize;
        let keep = keep.min(train.n());
        let thresholded = naive_threshold(&dense, keep, &kc)?;
        let naive = if thresholded.is_degenerate() {
            None
        } else {
            Some(evaluate_basis(
                train,
                test,
                test_labels,
                &thresholded,
                params,
                policy,
            )?)
        };
        points.push(SweepPoint {
            l1_ratio: ratio,
            skpca: Some(skpca),
            naive,
        });
    }
    Ok(SweepReport { points, kpca })
}

/// Per-trial results across seeded resampled splits, with the dense and
/// naive baselines carried along for comparison.
#[derive(Debug, Clone)]
pub struct TrialStats<F> {
    pub seeds: Vec<u64>,
    pub f1: Vec<F>,
    pub sparsity: Vec<F>,
    pub auroc: Vec<F>,
    pub naive_f1: Vec<F>,
    pub naive_auroc: Vec<F>,
    pub kpca_f1: Vec<F>,
    pub kpca_auroc: Vec<F>,
    pub f1_mean: F,
    pub f1_std: F,
    pub sparsity_mean: F,
    pub sparsity_std: F,
}

fn mean_std<F: Float>(xs: &[F]) -> (F, F) {
    let n = cast::<F>(xs.len() as f64);
    let mean = xs.iter().fold(F::zero(), |a, &x| a + x) / n;
    let var = xs
        .iter()
        .fold(F::zero(), |a, &x| a + (x - mean) * (x - mean))
        / n;
    (mean, var.sqrt())
}

/// Runs the same experiment over `n_trials` seeded train/test resamples
/// (seed base_seed + t). The bandwidth is re-estimated per trial unless
/// `sigma` pins it.
pub fn repeated_trials<F: Float>(
    pool: &LabeledDataset<F>,
    spec: &SplitSpec,
    cfg: &AlgoConfig<F>,
    sigma: Option<KernelParams<F>>,
    policy: ThresholdPolicy<F>,
    n_trials: usize,
    base_seed: u64,
) -> Result<TrialStats<F>> {
    if n_trials < 1 {
        return Err(Error::EmptyInput {
            context: "eval_harness::repeated_trials",
        });
    }
    let mut stats = TrialStats {
        seeds: Vec::new(),
        f1: Vec::new(),
        sparsity: Vec::new(),
        auroc: Vec::new(),
        naive_f1: Vec::new(),
        naive_auroc: Vec::new(),
        kpca_f1: Vec::new(),
        kpca_auroc: Vec::new(),
        f1_mean: F::zero(),
        f1_std: F::zero(),
        sparsity_mean: F::zero(),
        sparsity_std: F::zero(),
    };
    for t in 0..n_trials {
        let seed = base_seed.wrapping_add(t as u64);
        let split = pool.split(spec, seed)?;
        let params = match sigma {
            Some(p) => p,
            None => sigma_heuristic(&split.train)?,
        };
        let kc = center_gram(&gram(&split.train, &params)?)?;
        let basis = fit_skpca(&kc, cfg)?;
        if basis.is_degenerate() {
            return Err(Error::DegenerateBasis {
                context: "eval_harness::repeated_trials",
            });
        }
        let point = evaluate_basis(
            &split.train,
            &split.test,
            &split.test_labels,
            &basis,
            &params,
            policy,
        )?;
        let dense = kpca_dense(&kc, cfg.m)?;
        let kpca = evaluate_basis(
            &split.train,
            &split.test,
            &split.test_labels,
            &dense,
            &params,
            policy,
        )?;
        let keep = basis
            .mean_nonzeros_per_pc()
            .round()
            .to_f64()
            .unwrap_or(1.0)
            .max(1.0) as usize;
        let thresholded = naive_threshold(&dense, keep.min(split.train.n()), &kc)?;
        let naive = evaluate_basis(
            &split.train,
            &split.test,
            &split.test_labels,
            &thresholded,
            &params,
            policy,
        )?;

        stats.seeds.push(seed);
        stats.f1.push(point.f1);
        stats.sparsity.push(point.sparsity_pct);
        stats.auroc.push(point.auroc);
        stats.naive_f1.push(naive.f1);
        stats.naive_auroc.push(naive.auroc);
        stats.kpca_f1.push(kpca.f1);
        stats.kpca_auroc.push(kpca.auroc);
    }
    let (m, s) = mean_std(&stats.f1);
    stats.f1_mean = m;
    stats.f1_std = s;
    let (m, s) = mean_std(&stats.sparsity);
    stats.sparsity_mean = m;
    stats.sparsity_std = s;
    Ok(stats)
}

/// Outcome of the subset-representability probe.
#[derive(Debug, Clone)]
pub struct ProbeReport<F> {
    pub m_total: usize,
    pub n_subset: usize,
    /// Diameter of the chosen subset (max pairwise distance).
    pub d_max_subset: F,
    /// max over held-out points i and queries x' of
    /// |k(x_i, x') − k(x_f(i), x')| with f(i) the nearest subset point.
    pub max_kernel_deviation: F,
    /// Relative L2 residual of the full Gram's top eigenvector against the
    /// span of the kernel columns of the subset.
    pub eigvec_residual: F,
    pub subset: Vec<usize>,
}

/// Picks the minimum-diameter subset among `trials` seeded random
/// candidates, maps every held-out point to its nearest subset neighbor,
/// and measures the worst kernel deviation over the supplied query draws
/// plus the eigenvector-span residual.
pub fn representability_probe<F: Float>(
    x: &DataMatrix<F>,
    queries: &DataMatrix<F>,
    n_subset: usize,
    params: &KernelParams<F>,
    trials: usize,
    seed: u64,
) -> Result<ProbeReport<F>> {
    let m = x.n();
    if n_subset < 1 || n_subset > m {
        return Err(Error::InvalidConfig {
            context: "eval_harness::representability_probe",
            reason: format!("n_subset={n_subset} outside 1..={m}"),
        });
    }
    if queries.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            context: "eval_harness::representability_probe",
            expected: x.dim(),
            got: queries.dim(),
        });
    }
    let trials = trials.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let diameter = |idx: &[usize]| -> F {
        let mut worst = F::zero();
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                worst = worst.max(sq_dist(x.row(i), x.row(j)));
            }
        }
        worst.sqrt()
    };

    let mut best_subset: Vec<usize> = Vec::new();
    let mut best_diam = F::infinity();
    if n_subset == m {
        best_subset = (0..m).collect();
        best_diam = diameter(&best_subset);
    } else {
        let mut all: Vec<usize> = (0..m).collect();
        for _ in 0..trials {
            all.shuffle(&mut rng);
            let mut cand: Vec<usize> = all[..n_subset].to_vec();
            cand.sort_unstable();
            let d = diameter(&cand);
            if d < best_diam {
                best_diam = d;
                best_subset = cand;
            }
        }
    }

    let in_subset: Vec<bool> = {
        let mut mask = vec![false; m];
        for &i in &best_subset {
            mask[i] = true;
        }
        mask
    };

    // Worst deviation between each held-out point's kernel column and its
    // nearest subset representative, over the query draws.
    let mut max_dev = F::zero();
    for i in 0..m {
        if in_subset[i] {
            continue;
        }
        let mut f_i = best_subset[0];
        let mut best_d = F::infinity();
        for &j in &best_subset {
            let d = sq_dist(x.row(i), x.row(j));
            if d < best_d {
                best_d = d;
                f_i = j;
            }
        }
        for qi in 0..queries.n() {
            let q = queries.row(qi);
            let a = rbf_eval(x.row(i), q, params)?;
            let b = rbf_eval(x.row(f_i), q, params)?;
            max_dev = max_dev.max((a - b).abs());
        }
    }

    // Residual of the top eigenvector against the subset's kernel columns.
    let kc = center_gram(&gram(x, params)?)?;
    let eig = top_eigen(&kc, 1)?;
    let v = eig.eigenvectors().col(0);
    let mut cols = Mat::zeros(m, n_subset);
    for (out_j, &j) in best_subset.iter().enumerate() {
        for i in 0..m {
            cols[(i, out_j)] = kc.values()[(i, j)];
        }
    }
    let w = lstsq(&cols, &v)?;
    let fit = cols.mul_vec(&w);
    let mut resid = vec![F::zero(); m];
    for i in 0..m {
        resid[i] = v[i] - fit[i];
    }
    let eigvec_residual = norm2(&resid) / norm2(&v);

    Ok(ProbeReport {
        m_total: m,
        n_subset,
        d_max_subset: best_diam,
        max_kernel_deviation: max_dev,
        eigvec_residual,
        subset: best_subset,
    })
}
