//! Dataset ingestion: labeled CSV and big-endian IDX image/label pairs,
//! plus the seeded filter/split plumbing shared by the commands.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

use skpca::detector::Label;
use skpca::eval::LabeledDataset;
use skpca::kernel::DataMatrix;

/// Which rows count as inliers / outliers.
#[derive(Debug, Clone)]
pub struct LabelSelector {
    pub inlier: String,
    /// Explicit label, or "rest" for everything that is not the inlier.
    pub outlier: String,
}

impl LabelSelector {
    fn classify(&self, label: &str) -> Option<Label> {
        if label == self.inlier {
            Some(Label::Inlier)
        } else if self.outlier == "rest" || label == self.outlier {
            Some(Label::Outlier)
        } else {
            None
        }
    }
}

/// Parses a labeled CSV with a header row into a pool. Rows whose label
/// matches neither selector are dropped; a selector matching no row at all
/// is an error.
pub fn load_csv_pool(
    path: &Path,
    label_col: &str,
    selector: &LabelSelector,
) -> Result<LabeledDataset<f64>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| anyhow!("empty csv"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let label_idx = cols
        .iter()
        .position(|c| *c == label_col)
        .ok_or_else(|| anyhow!("csv has no label column named '{label_col}'"))?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<Label> = Vec::new();
    let mut saw_inlier = false;
    let mut saw_outlier = false;
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != cols.len() {
            bail!(
                "ragged csv row {} ({} cells, header has {})",
                lineno + 2,
                cells.len(),
                cols.len()
            );
        }
        let label_str = cells[label_idx];
        let Some(label) = selector.classify(label_str) else {
            continue;
        };
        let mut row = Vec::with_capacity(cells.len() - 1);
        for (j, cell) in cells.iter().enumerate() {
            if j == label_idx {
                continue;
            }
            let v: f64 = cell.parse().with_context(|| {
                format!("row {}, column '{}': not numeric", lineno + 2, cols[j])
            })?;
            row.push(v);
        }
        match label {
            Label::Inlier => saw_inlier = true,
            Label::Outlier => saw_outlier = true,
        }
        rows.push(row);
        labels.push(label);
    }
    if !saw_inlier {
        bail!("no row matches inlier label '{}'", selector.inlier);
    }
    if !saw_outlier && selector.outlier != "rest" {
        bail!("no row matches outlier label '{}'", selector.outlier);
    }
    let data = DataMatrix::new(rows).map_err(|e| anyhow!("{e}"))?;
    LabeledDataset::new(data, labels).map_err(|e| anyhow!("{e}"))
}

/// Unlabeled CSV rows (for `score`): every column is a feature unless a
/// label column name is given, in which case it is skipped.
pub fn load_csv_rows(path: &Path, skip_col: Option<&str>) -> Result<DataMatrix<f64>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| anyhow!("empty csv"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let skip_idx = skip_col.and_then(|name| cols.iter().position(|c| *c == name));
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != cols.len() {
            bail!("ragged csv row {}", lineno + 2);
        }
        let mut row = Vec::with_capacity(cells.len());
        for (j, cell) in cells.iter().enumerate() {
            if Some(j) == skip_idx {
                continue;
            }
            row.push(cell.parse::<f64>().with_context(|| {
                format!("row {}, column '{}': not numeric", lineno + 2, cols[j])
            })?);
        }
        rows.push(row);
    }
    DataMatrix::new(rows).map_err(|e| anyhow!("{e}"))
}

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|s| u32::from_be_bytes(s.try_into().unwrap()))
        .ok_or_else(|| anyhow!("idx header truncated at offset {at}"))
}

/// IDX image/label pair: big-endian headers, pixel bytes row-major,
/// intensities scaled to [0, 1].
pub fn load_idx_pool(
    images_path: &Path,
    labels_path: &Path,
    selector: &LabelSelector,
) -> Result<LabeledDataset<f64>> {
    let img =
        fs::read(images_path).with_context(|| format!("reading {}", images_path.display()))?;
    let lab =
        fs::read(labels_path).with_context(|| format!("reading {}", labels_path.display()))?;

    let magic = be_u32(&img, 0)?;
    if magic != IDX_IMAGES_MAGIC {
        bail!("bad images magic {magic:#010x} (expected {IDX_IMAGES_MAGIC:#010x})");
    }
    let count = be_u32(&img, 4)? as usize;
    let rows = be_u32(&img, 8)? as usize;
    let cols = be_u32(&img, 12)? as usize;
    let pixels = rows * cols;
    if img.len() != 16 + count * pixels {
        bail!(
            "images payload is {} bytes, header declares {}",
            img.len() - 16,
            count * pixels
        );
    }

    let lmagic = be_u32(&lab, 0)?;
    if lmagic != IDX_LABELS_MAGIC {
        bail!("bad labels magic {lmagic:#010x} (expected {IDX_LABELS_MAGIC:#010x})");
    }
    let lcount = be_u32(&lab, 4)? as usize;
    if lab.len() != 8 + lcount {
        bail!("labels payload is {} bytes, header declares {lcount}", lab.len() - 8);
    }
    if lcount != count {
        bail!("images declare {count} items, labels declare {lcount}");
    }

    let mut data_rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..count {
        let digit = lab[8 + i].to_string();
        let Some(label) = selector.classify(&digit) else {
            continue;
        };
        let start = 16 + i * pixels;
        let row: Vec<f64> = img[start..start + pixels]
            .iter()
            .map(|&b| b as f64 / 255.0)
            .collect();
        data_rows.push(row);
        labels.push(label);
    }
    if data_rows.is_empty() {
        bail!("no idx rows match the label selectors");
    }
    let data = DataMatrix::new(data_rows).map_err(|e| anyhow!("{e}"))?;
    LabeledDataset::new(data, labels).map_err(|e| anyhow!("{e}"))
}
