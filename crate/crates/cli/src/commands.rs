//! Implementations of the CLI commands. Every command reads its inputs,
//! resolves flags against the optional config file, runs the corresponding
//! library pipeline, and writes data files first (text/TSV/JSON), with SVG
//! rendering as a best-effort extra.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use skpca::basis::{fit_skpca, AlgoConfig, Ridge};
use skpca::detector::{
    classify, compress as compress_model, fit_detector, reconstruction_error, Label,
    ThresholdPolicy,
};
use skpca::eval::{
    auroc, f1_score, representability_probe, roc_curve, sparsity_sweep, LabeledDataset,
    LabeledScores, SplitSpec,
};
use skpca::kernel::{center_gram, gram, sigma_heuristic, DataMatrix, KernelParams};
use skpca::synth;

use crate::cli::{DataArgs, DataFormat, ModelArgs, SplitArgs};
use crate::config::{pick, pick_opt, FileConfig};
use crate::data::{load_csv_pool, load_csv_rows, load_idx_pool, LabelSelector};
use crate::model_file::{load_model, save_model};
use crate::output::{aligned_table, atomic_write_str, svg_plot, tsv, Series};

const DEFAULT_PCS: usize = 15;
const DEFAULT_L1_RATIO: f64 = 0.5;
const DEFAULT_QUANTILE: f64 = 0.95;
const DEFAULT_TRAIN: usize = 500;
const DEFAULT_TEST_INLIERS: usize = 500;
const DEFAULT_TEST_OUTLIERS: usize = 500;
const DEFAULT_TRIALS: usize = 10;
const DEFAULT_GRID: &[f64] = &[0.25, 0.5, 1.0, 2.0, 4.0];

/// Flags resolved against the config file and defaults.
struct Resolved {
    pcs: usize,
    l1_ratio: f64,
    ridge: Option<f64>,
    sigma_sq: Option<f64>,
    quantile: f64,
    max_outer_iter: usize,
    seed: u64,
    label_col: String,
    selector: LabelSelector,
    train_count: Option<usize>,
    test_inliers: usize,
    test_outliers: usize,
    grid: Vec<f64>,
    trials: usize,
}

fn resolve(model: &ModelArgs, data: Option<&DataArgs>, split: Option<&SplitArgs>) -> Result<Resolved> {
    let file = FileConfig::load(model.config.as_deref())?;
    let (inlier_flag, outlier_flag, label_col_flag) = match data {
        Some(d) => (d.inlier.clone(), d.outlier.clone(), d.label_col.clone()),
        None => (None, None, None),
    };
    let (train_flag, ti_flag, to_flag) = match split {
        Some(s) => (s.train_count, s.test_inliers, s.test_outliers),
        None => (None, None, None),
    };
    Ok(Resolved {
        pcs: pick(model.pcs, file.pcs, DEFAULT_PCS),
        l1_ratio: pick(model.l1_ratio, file.l1_ratio, DEFAULT_L1_RATIO),
        ridge: pick_opt(model.ridge, file.ridge),
        sigma_sq: if model.sigma_auto {
            None
        } else {
            pick_opt(model.sigma_sq, file.sigma_sq)
        },
        quantile: pick(model.threshold_quantile, file.threshold_quantile, DEFAULT_QUANTILE),
        max_outer_iter: pick(model.max_outer_iter, file.max_outer_iter, 200),
        seed: pick(model.seed, file.seed, 0),
        label_col: pick(label_col_flag, file.label_col, "label".into()),
        selector: LabelSelector {
            inlier: pick(inlier_flag, file.inlier, "0".into()),
            outlier: pick(outlier_flag, file.outlier, "rest".into()),
        },
        train_count: pick_opt(train_flag, file.train_count),
        test_inliers: pick(ti_flag, file.test_inliers, DEFAULT_TEST_INLIERS),
        test_outliers: pick(to_flag, file.test_outliers, DEFAULT_TEST_OUTLIERS),
        grid: file.grid.unwrap_or_else(|| DEFAULT_GRID.to_vec()),
        trials: file.trials.unwrap_or(DEFAULT_TRIALS),
    })
}

impl Resolved {
    fn algo_config(&self) -> AlgoConfig<f64> {
        let mut cfg = AlgoConfig::new(self.pcs)
            .with_l1_ratio(self.l1_ratio)
            .with_seed(self.seed);
        if let Some(r) = self.ridge {
            cfg = cfg.with_ridge(Ridge::Fixed(r));
        }
        cfg.max_outer_iter = self.max_outer_iter;
        cfg
    }

    fn kernel_params(&self, train: &DataMatrix<f64>) -> Result<KernelParams<f64>> {
        match self.sigma_sq {
            Some(s) => KernelParams::new(s).map_err(|e| anyhow!("{e}")),
            None => sigma_heuristic(train).map_err(|e| anyhow!("{e}")),
        }
    }

    fn policy(&self) -> ThresholdPolicy<f64> {
        ThresholdPolicy::Quantile(self.quantile)
    }

    fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_inliers: self.train_count.unwrap_or(DEFAULT_TRAIN),
            test_inliers: self.test_inliers,
            test_outliers: self.test_outliers,
        }
    }
}

fn load_pool(data: &DataArgs, r: &Resolved) -> Result<LabeledDataset<f64>> {
    match data.format {
        DataFormat::Csv => load_csv_pool(&data.data, &r.label_col, &r.selector),
        DataFormat::Idx => {
            let labels = data
                .labels_file
                .as_ref()
                .ok_or_else(|| anyhow!("--format idx requires --labels-file"))?;
            load_idx_pool(&data.data, labels, &r.selector)
        }
    }
}

fn file_stem(p: &Path) -> String {
    p.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".into())
}

// ---------------------------------------------------------------- fit

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CompressMode {
    /// Keep a side array of all training points: scores stay exact
    Exact,
    /// Keep only coefficient-carrying points; potential sums approximated
    Lossy,
}

#[derive(Debug, Args)]
pub struct FitCmd {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Training inliers to draw (default: all inliers in the file)
    #[arg(long)]
    train_count: Option<usize>,
    /// Model compression mode
    #[arg(long, value_enum, default_value = "exact")]
    compress: CompressMode,
    /// Output model path
    #[arg(long)]
    out: PathBuf,
}

pub fn fit(cmd: FitCmd) -> Result<()> {
    let mut r = resolve(&cmd.model, Some(&cmd.data), None)?;
    if cmd.train_count.is_some() {
        r.train_count = cmd.train_count;
    }
    let pool = load_pool(&cmd.data, &r)?;
    let train = training_inliers(&pool, r.train_count, r.seed)?;
    let params = r.kernel_params(&train)?;
    let kc = center_gram(&gram(&train, &params)?)?;
    let cfg = r.algo_config();
    let basis = fit_skpca(&kc, &cfg)
        .with_context(|| "fitting sparse components (try a lower --l1-ratio?)")?;
    if basis.is_degenerate() {
        bail!("every coefficient column was annihilated; lower --l1-ratio");
    }
    let model = fit_detector(&train, &basis, &params, r.policy())?;
    let model = match cmd.compress {
        CompressMode::Exact => compress_model(&model, true),
        CompressMode::Lossy => compress_model(&model, false),
    };
    let meta = format!(
        "skpca {} seed={} source={}",
        env!("CARGO_PKG_VERSION"),
        r.seed,
        file_stem(&cmd.data.data)
    );
    let info = save_model(&model, &cmd.out, &meta)?;

    let rows = vec![
        vec!["training points".to_string(), model.n_train().to_string()],
        vec!["retained points".to_string(), model.retained_count().to_string()],
        vec!["components".to_string(), model.q().to_string()],
        vec!["sparsity %".to_string(), format!("{:.2}", basis.sparsity_pct)],
        vec!["sigma_sq".to_string(), format!("{:.6}", params.sigma_sq())],
        vec!["threshold".to_string(), format!("{:.6e}", model.threshold())],
        vec!["alternations".to_string(), basis.iterations.to_string()],
        vec!["model bytes".to_string(), info.bytes_total.to_string()],
        vec!["coeff bytes".to_string(), info.bytes_coeffs.to_string()],
        vec!["clamped train scores".to_string(), model.clamp_events().to_string()],
    ];
    print!("{}", aligned_table(&["field", "value"], &rows));
    let clamp_frac = model.clamp_events() as f64 / model.n_train() as f64;
    if clamp_frac > 0.05 {
        println!(
            "warning: {:.0}% of training scores clamped at zero; the sparse \
             components overlap heavily (consider a lower --l1-ratio or fewer --pcs)",
            100.0 * clamp_frac
        );
    }
    if let Some(b) = model.approx_bound() {
        println!("potential approximation bound (training): {b:.3e}");
    }
    println!("model written to {}", cmd.out.display());
    Ok(())
}

/// Seeded draw of training inliers from the pool.
fn training_inliers(
    pool: &LabeledDataset<f64>,
    count: Option<usize>,
    seed: u64,
) -> Result<DataMatrix<f64>> {
    let mut idx: Vec<usize> = (0..pool.data().n())
        .filter(|&i| pool.labels()[i] == Label::Inlier)
        .collect();
    let want = count.unwrap_or(idx.len());
    if idx.len() < want {
        bail!("pool has {} inliers, --train-count wants {want}", idx.len());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    idx.truncate(want);
    let rows: Vec<Vec<f64>> = idx.iter().map(|&i| pool.data().row(i).to_vec()).collect();
    let ids: Vec<u64> = idx.iter().map(|&i| pool.data().row_ids()[i]).collect();
    DataMatrix::with_ids(rows, ids).map_err(|e| anyhow!("{e}"))
}

// ---------------------------------------------------------------- score

#[derive(Debug, Args)]
pub struct ScoreCmd {
    /// Saved model file
    #[arg(long)]
    model: PathBuf,
    /// Rows to score: CSV (label column skipped if present) or IDX images
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: DataFormat,
    /// IDX labels file (only needed to skip labels in idx scoring)
    #[arg(long)]
    labels_file: Option<PathBuf>,
    /// CSV label column to skip, if the file has one
    #[arg(long, default_value = "label")]
    label_col: String,
    /// Output TSV (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn score(cmd: ScoreCmd) -> Result<()> {
    let (model, meta) = load_model(&cmd.model)?;
    let rows = match cmd.format {
        DataFormat::Csv => load_csv_rows(&cmd.data, Some(cmd.label_col.as_str()))?,
        DataFormat::Idx => {
            // Accept any labels; we only need the pixel rows.
            let labels = cmd
                .labels_file
                .clone()
                .ok_or_else(|| anyhow!("--format idx requires --labels-file"))?;
            let sel = LabelSelector {
                inlier: "__none__".into(),
                outlier: "rest".into(),
            };
            let pool = load_idx_pool(&cmd.data, &labels, &sel)?;
            pool.data().clone()
        }
    };
    if rows.dim() != model.dim() {
        bail!(
            "data dimension {} does not match model dimension {}",
            rows.dim(),
            model.dim()
        );
    }
    let mut lines = vec![vec![
        "row".to_string(),
        "score".to_string(),
        "verdict".to_string(),
    ]];
    let mut outliers = 0usize;
    for i in 0..rows.n() {
        let v = classify(rows.row(i), &model)?;
        if v.label == Label::Outlier {
            outliers += 1;
        }
        lines.push(vec![
            rows.row_ids()[i].to_string(),
            format!("{:.12e}", v.score),
            match v.label {
                Label::Outlier => "outlier".to_string(),
                Label::Inlier => "inlier".to_string(),
            },
        ]);
    }
    let header: Vec<&str> = lines[0].iter().map(String::as_str).collect();
    let body = tsv(&header, &lines[1..].to_vec());
    match &cmd.out {
        Some(p) => {
            atomic_write_str(p, &body)?;
            println!(
                "scored {} rows ({} outliers) with model '{}'; wrote {}",
                rows.n(),
                outliers,
                meta,
                p.display()
            );
        }
        None => print!("{body}"),
    }
    Ok(())
}

// ---------------------------------------------------------------- eval

#[derive(Debug, Args)]
pub struct EvalCmd {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    split: SplitArgs,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct EvalJson {
    sigma_sq: f64,
    pcs: usize,
    l1_ratio: f64,
    seed: u64,
    train_count: usize,
    test_inliers: usize,
    test_outliers: usize,
    sparsity_pct: f64,
    retained_points: usize,
    threshold: f64,
    f1: f64,
    auroc: f64,
    alternations: usize,
    converged: bool,
}

pub fn eval(cmd: EvalCmd) -> Result<()> {
    let r = resolve(&cmd.model, Some(&cmd.data), Some(&cmd.split))?;
    let pool = load_pool(&cmd.data, &r)?;
    let spec = r.split_spec();
    let split = pool.split(&spec, r.seed)?;
    let params = r.kernel_params(&split.train)?;
    let kc = center_gram(&gram(&split.train, &params)?)?;
    let cfg = r.algo_config();
    let basis = fit_skpca(&kc, &cfg)?;
    if basis.is_degenerate() {
        bail!("every coefficient column was annihilated; lower --l1-ratio");
    }
    let model = fit_detector(&split.train, &basis, &params, r.policy())?;
    let mut scores = Vec::with_capacity(split.test.n());
    for i in 0..split.test.n() {
        scores.push(reconstruction_error(split.test.row(i), &model)?);
    }
    let ls = LabeledScores::new(scores, split.test_labels.clone())?;
    let f1 = f1_score(&ls, model.threshold())?;
    let auc = auroc(&ls)?;
    let curve = roc_curve(&ls)?;

    let json = EvalJson {
        sigma_sq: params.sigma_sq(),
        pcs: r.pcs,
        l1_ratio: r.l1_ratio,
        seed: r.seed,
        train_count: spec.train_inliers,
        test_inliers: spec.test_inliers,
        test_outliers: spec.test_outliers,
        sparsity_pct: basis.sparsity_pct,
        retained_points: model.retained_count(),
        threshold: model.threshold(),
        f1,
        auroc: auc,
        alternations: basis.iterations,
        converged: basis.converged,
    };

    let rows = vec![
        vec!["sigma_sq".into(), format!("{:.6}", json.sigma_sq)],
        vec!["components".into(), json.pcs.to_string()],
        vec!["l1_ratio".into(), format!("{}", json.l1_ratio)],
        vec!["seed".into(), json.seed.to_string()],
        vec!["sparsity %".into(), format!("{:.2}", json.sparsity_pct)],
        vec!["retained points".into(), json.retained_points.to_string()],
        vec!["threshold".into(), format!("{:.6e}", json.threshold)],
        vec!["F1".into(), format!("{:.4}", json.f1)],
        vec!["AUROC".into(), format!("{:.4}", json.auroc)],
    ];
    let text = aligned_table(&["metric", "value"], &rows);

    std::fs::create_dir_all(&cmd.out)?;
    atomic_write_str(&cmd.out.join("metrics.txt"), &text)?;
    atomic_write_str(
        &cmd.out.join("metrics.json"),
        &serde_json::to_string_pretty(&json)?,
    )?;
    let roc_rows: Vec<Vec<String>> = curve
        .iter()
        .map(|(x, y)| vec![format!("{x:.12}"), format!("{y:.12}")])
        .collect();
    atomic_write_str(&cmd.out.join("roc.tsv"), &tsv(&["fpr", "tpr"], &roc_rows))?;
    atomic_write_str(
        &cmd.out.join("roc.svg"),
        &svg_plot(
            "ROC",
            "false positive rate",
            "true positive rate",
            &[Series {
                name: "skpca",
                points: curve.clone(),
                color: "#c0392b",
            }],
        ),
    )?;
    print!("{text}");
    println!("reports written to {}", cmd.out.display());
    Ok(())
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Args)]
pub struct SweepCmd {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    split: SplitArgs,
    /// Comma-separated L1-ratio grid, e.g. 0.25,0.5,1,2
    #[arg(long)]
    grid: Option<String>,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct SweepRowJson {
    l1_ratio: f64,
    sparsity_pct: Option<f64>,
    f1: Option<f64>,
    auroc: Option<f64>,
    naive_sparsity_pct: Option<f64>,
    naive_f1: Option<f64>,
    naive_auroc: Option<f64>,
}

#[derive(Serialize)]
struct SweepJson {
    kpca_sparsity_pct: f64,
    kpca_f1: f64,
    kpca_auroc: f64,
    points: Vec<SweepRowJson>,
}

pub fn sweep(cmd: SweepCmd) -> Result<()> {
    let r = resolve(&cmd.model, Some(&cmd.data), Some(&cmd.split))?;
    let grid: Vec<f64> = match &cmd.grid {
        Some(s) => s
            .split(',')
            .map(|t| t.trim().parse::<f64>().context("parsing --grid"))
            .collect::<Result<_>>()?,
        None => r.grid.clone(),
    };
    let pool = load_pool(&cmd.data, &r)?;
    let split = pool.split(&r.split_spec(), r.seed)?;
    let params = r.kernel_params(&split.train)?;
    let report = sparsity_sweep(
        &split.train,
        &split.test,
        &split.test_labels,
        &grid,
        &r.algo_config(),
        &params,
        r.policy(),
    )?;

    let mut json_points = Vec::new();
    let mut table = Vec::new();
    let fmt = |v: Option<f64>, prec: usize| -> String {
        v.map(|x| format!("{x:.prec$}")).unwrap_or_else(|| "-".into())
    };
    for p in &report.points {
        let s = p.skpca.as_ref();
        let n = p.naive.as_ref();
        json_points.push(SweepRowJson {
            l1_ratio: p.l1_ratio,
            sparsity_pct: s.map(|m| m.sparsity_pct),
            f1: s.map(|m| m.f1),
            auroc: s.map(|m| m.auroc),
            naive_sparsity_pct: n.map(|m| m.sparsity_pct),
            naive_f1: n.map(|m| m.f1),
            naive_auroc: n.map(|m| m.auroc),
        });
        table.push(vec![
            format!("{}", p.l1_ratio),
            fmt(s.map(|m| m.sparsity_pct), 2),
            fmt(s.map(|m| m.f1), 4),
            fmt(s.map(|m| m.auroc), 4),
            fmt(n.map(|m| m.sparsity_pct), 2),
            fmt(n.map(|m| m.f1), 4),
            fmt(n.map(|m| m.auroc), 4),
        ]);
    }
    table.push(vec![
        "kpca".into(),
        format!("{:.2}", report.kpca.sparsity_pct),
        format!("{:.4}", report.kpca.f1),
        format!("{:.4}", report.kpca.auroc),
        "-".into(),
        "-".into(),
        "-".into(),
    ]);
    let header = [
        "l1_ratio",
        "sparsity_pct",
        "f1",
        "auroc",
        "naive_sparsity",
        "naive_f1",
        "naive_auroc",
    ];

    std::fs::create_dir_all(&cmd.out)?;
    atomic_write_str(&cmd.out.join("sweep.tsv"), &tsv(&header, &table))?;
    let json = SweepJson {
        kpca_sparsity_pct: report.kpca.sparsity_pct,
        kpca_f1: report.kpca.f1,
        kpca_auroc: report.kpca.auroc,
        points: json_points,
    };
    atomic_write_str(
        &cmd.out.join("sweep.json"),
        &serde_json::to_string_pretty(&json)?,
    )?;

    let skpca_curve: Vec<(f64, f64)> = report
        .points
        .iter()
        .filter_map(|p| p.skpca.as_ref().map(|m| (m.sparsity_pct, m.f1)))
        .collect();
    let naive_curve: Vec<(f64, f64)> = report
        .points
        .iter()
        .filter_map(|p| p.naive.as_ref().map(|m| (m.sparsity_pct, m.f1)))
        .collect();
    let kpca_line = vec![
        (0.0, report.kpca.f1),
        (report.kpca.sparsity_pct, report.kpca.f1),
    ];
    atomic_write_str(
        &cmd.out.join("sweep.svg"),
        &svg_plot(
            "F1 vs sparsity",
            "nonzero coefficients (%)",
            "F1",
            &[
                Series {
                    name: "skpca",
                    points: skpca_curve,
                    color: "#c0392b",
                },
                Series {
                    name: "naive",
                    points: naive_curve,
                    color: "#2980b9",
                },
                Series {
                    name: "kpca",
                    points: kpca_line,
                    color: "#7f8c8d",
                },
            ],
        ),
    )?;
    print!("{}", aligned_table(&header, &table));
    println!("sweep written to {}", cmd.out.display());
    Ok(())
}

// ---------------------------------------------------------------- trials

#[derive(Debug, Args)]
pub struct TrialsCmd {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    split: SplitArgs,
    /// Number of seeded resampling trials
    #[arg(long, short = 'n')]
    trials: Option<usize>,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct TrialsJson {
    trials: usize,
    base_seed: u64,
    f1: Vec<f64>,
    sparsity_pct: Vec<f64>,
    auroc: Vec<f64>,
    naive_f1: Vec<f64>,
    naive_auroc: Vec<f64>,
    kpca_f1: Vec<f64>,
    kpca_auroc: Vec<f64>,
    f1_mean: f64,
    f1_std: f64,
    sparsity_mean: f64,
    sparsity_std: f64,
}

pub fn trials(cmd: TrialsCmd) -> Result<()> {
    let r = resolve(&cmd.model, Some(&cmd.data), Some(&cmd.split))?;
    let n_trials = cmd.trials.unwrap_or(r.trials);
    let pool = load_pool(&cmd.data, &r)?;
    let sigma = match r.sigma_sq {
        Some(s) => Some(KernelParams::new(s).map_err(|e| anyhow!("{e}"))?),
        None => None,
    };
    let stats = skpca::eval::repeated_trials(
        &pool,
        &r.split_spec(),
        &r.algo_config(),
        sigma,
        r.policy(),
        n_trials,
        r.seed,
    )?;

    let mut rows = Vec::new();
    for t in 0..n_trials {
        rows.push(vec![
            stats.seeds[t].to_string(),
            format!("{:.4}", stats.f1[t]),
            format!("{:.2}", stats.sparsity[t]),
            format!("{:.4}", stats.auroc[t]),
            format!("{:.4}", stats.naive_f1[t]),
            format!("{:.4}", stats.naive_auroc[t]),
            format!("{:.4}", stats.kpca_f1[t]),
            format!("{:.4}", stats.kpca_auroc[t]),
        ]);
    }
    let header = [
        "seed",
        "f1",
        "sparsity_pct",
        "auroc",
        "naive_f1",
        "naive_auroc",
        "kpca_f1",
        "kpca_auroc",
    ];
    let summary = vec![
        vec!["F1 mean".into(), format!("{:.4}", stats.f1_mean)],
        vec!["F1 std".into(), format!("{:.4}", stats.f1_std)],
        vec!["sparsity mean %".into(), format!("{:.2}", stats.sparsity_mean)],
        vec!["sparsity std %".into(), format!("{:.2}", stats.sparsity_std)],
    ];

    std::fs::create_dir_all(&cmd.out)?;
    atomic_write_str(&cmd.out.join("trials.tsv"), &tsv(&header, &rows))?;
    let text = format!(
        "{}\n{}",
        aligned_table(&header, &rows),
        aligned_table(&["stat", "value"], &summary)
    );
    atomic_write_str(&cmd.out.join("trials.txt"), &text)?;
    let json = TrialsJson {
        trials: n_trials,
        base_seed: r.seed,
        f1: stats.f1.clone(),
        sparsity_pct: stats.sparsity.clone(),
        auroc: stats.auroc.clone(),
        naive_f1: stats.naive_f1.clone(),
        naive_auroc: stats.naive_auroc.clone(),
        kpca_f1: stats.kpca_f1.clone(),
        kpca_auroc: stats.kpca_auroc.clone(),
        f1_mean: stats.f1_mean,
        f1_std: stats.f1_std,
        sparsity_mean: stats.sparsity_mean,
        sparsity_std: stats.sparsity_std,
    };
    atomic_write_str(
        &cmd.out.join("trials.json"),
        &serde_json::to_string_pretty(&json)?,
    )?;
    print!("{text}");
    println!("trials written to {}", cmd.out.display());
    Ok(())
}

// ---------------------------------------------------------------- probe

#[derive(Debug, Args)]
pub struct ProbeCmd {
    /// Optional CSV of points; omitted means a synthetic Gaussian cloud
    #[arg(long)]
    data: Option<PathBuf>,
    /// CSV label column to skip, if present
    #[arg(long)]
    label_col: Option<String>,
    /// Synthetic cloud size
    #[arg(long, default_value = "500")]
    m: usize,
    /// Synthetic cloud dimension
    #[arg(long, default_value = "2")]
    dim: usize,
    /// Subset size to probe
    #[arg(long)]
    n_subset: usize,
    /// Random candidate subsets examined
    #[arg(long, default_value = "50")]
    probe_trials: usize,
    /// Fresh query draws for the deviation measurement
    #[arg(long, default_value = "100")]
    queries: usize,
    /// Fixed RBF bandwidth (default: pairwise heuristic on the cloud)
    #[arg(long)]
    sigma_sq: Option<f64>,
    #[arg(long, default_value = "0")]
    seed: u64,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct ProbeJson {
    m_total: usize,
    n_subset: usize,
    queries: usize,
    sigma_sq: f64,
    d_max_subset: f64,
    max_kernel_deviation: f64,
    eigvec_residual: f64,
}

pub fn probe(cmd: ProbeCmd) -> Result<()> {
    let (x, queries) = match &cmd.data {
        Some(path) => {
            let all = load_csv_rows(path, cmd.label_col.as_deref())?;
            if all.n() <= cmd.queries + 2 {
                bail!("file has {} rows; need more than queries + 2", all.n());
            }
            // Seeded shuffle; first rows become the query draws.
            let mut idx: Vec<usize> = (0..all.n()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(cmd.seed);
            idx.shuffle(&mut rng);
            let (q_idx, x_idx) = idx.split_at(cmd.queries);
            let take = |ids: &[usize]| -> Result<DataMatrix<f64>> {
                DataMatrix::with_ids(
                    ids.iter().map(|&i| all.row(i).to_vec()).collect(),
                    ids.iter().map(|&i| all.row_ids()[i]).collect(),
                )
                .map_err(|e| anyhow!("{e}"))
            };
            (take(x_idx)?, take(q_idx)?)
        }
        None => (
            synth::gaussian::<f64>(cmd.m, cmd.dim, cmd.seed),
            synth::gaussian::<f64>(cmd.queries, cmd.dim, cmd.seed.wrapping_add(1)),
        ),
    };
    let params = match cmd.sigma_sq {
        Some(s) => KernelParams::new(s).map_err(|e| anyhow!("{e}"))?,
        None => sigma_heuristic(&x).map_err(|e| anyhow!("{e}"))?,
    };
    let report = representability_probe(&x, &queries, cmd.n_subset, &params, cmd.probe_trials, cmd.seed)?;

    let rows = vec![
        vec!["points".into(), report.m_total.to_string()],
        vec!["subset size".into(), report.n_subset.to_string()],
        vec!["queries".into(), queries.n().to_string()],
        vec!["sigma_sq".into(), format!("{:.6}", params.sigma_sq())],
        vec!["subset diameter".into(), format!("{:.6}", report.d_max_subset)],
        vec!["max kernel deviation".into(), format!("{:.6}", report.max_kernel_deviation)],
        vec!["eigvec residual".into(), format!("{:.6e}", report.eigvec_residual)],
    ];
    let text = aligned_table(&["field", "value"], &rows);
    std::fs::create_dir_all(&cmd.out)?;
    atomic_write_str(&cmd.out.join("probe.txt"), &text)?;
    let json = ProbeJson {
        m_total: report.m_total,
        n_subset: report.n_subset,
        queries: queries.n(),
        sigma_sq: params.sigma_sq(),
        d_max_subset: report.d_max_subset,
        max_kernel_deviation: report.max_kernel_deviation,
        eigvec_residual: report.eigvec_residual,
    };
    atomic_write_str(
        &cmd.out.join("probe.json"),
        &serde_json::to_string_pretty(&json)?,
    )?;
    print!("{text}");
    println!("probe written to {}", cmd.out.display());
    Ok(())
}

// ---------------------------------------------------------------- synth

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// Inliers on the unit ring, outliers on an inner ring
    TwoRings,
    /// Unlabeled standard-normal cloud (label column all zero)
    Gaussian,
}

#[derive(Debug, Args)]
pub struct SynthCmd {
    #[arg(long, value_enum, default_value = "two-rings")]
    kind: SynthKind,
    /// Inlier count (two-rings) or total count (gaussian)
    #[arg(long, default_value = "2000")]
    inliers: usize,
    /// Outlier count (two-rings only)
    #[arg(long, default_value = "1000")]
    outliers: usize,
    /// Dimension (gaussian only)
    #[arg(long, default_value = "2")]
    dim: usize,
    #[arg(long, default_value = "0")]
    seed: u64,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

pub fn synth(cmd: SynthCmd) -> Result<()> {
    let (data, labels): (DataMatrix<f64>, Vec<Label>) = match cmd.kind {
        SynthKind::TwoRings => {
            let pool = synth::two_rings::<f64>(cmd.inliers, cmd.outliers, cmd.seed);
            (pool.data().clone(), pool.labels().to_vec())
        }
        SynthKind::Gaussian => {
            let data = synth::gaussian::<f64>(cmd.inliers, cmd.dim, cmd.seed);
            let labels = vec![Label::Inlier; cmd.inliers];
            (data, labels)
        }
    };
    let mut out = String::new();
    for j in 0..data.dim() {
        out.push_str(&format!("x{j},"));
    }
    out.push_str("label\n");
    for i in 0..data.n() {
        for v in data.row(i) {
            out.push_str(&format!("{v:.17e},"));
        }
        out.push_str(match labels[i] {
            Label::Inlier => "0\n",
            Label::Outlier => "1\n",
        });
    }
    atomic_write_str(&cmd.out, &out)?;
    println!(
        "wrote {} rows ({} outliers) to {}",
        data.n(),
        labels.iter().filter(|&&l| l == Label::Outlier).count(),
        cmd.out.display()
    );
    Ok(())
}
