//! Detector model persistence.
//!
//! Layout: magic "SKPCA", one version byte, a flags byte, then fixed-width
//! little-endian sections (scalars, retained points, sparse coefficient
//! triplets, potential data, a metadata string), closed by a CRC-32 of all
//! preceding bytes. Scoring a loaded model needs no original dataset.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

use skpca::detector::{DetectorModel, ModelParts, PotentialData};
use skpca::kernel::KernelParams;
use skpca::linalg::Mat;

use crate::output::atomic_write;

const MAGIC: &[u8; 5] = b"SKPCA";
const VERSION: u8 = 1;

/// Byte accounting returned by `save_model`; the coefficient payload is
/// what compression is judged on.
#[derive(Debug, Clone, Copy)]
pub struct SavedModelInfo {
    pub bytes_total: usize,
    pub bytes_coeffs: usize,
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new() -> Self {
        Writer { buf: Vec::new() }
    }
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            bail!("model file truncated at offset {}", self.pos);
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn crc32(bytes: &[u8]) -> u32 {
    // IEEE polynomial, table built on first use.
    use std::sync::OnceLock;
    static TABLE: OnceLock<[u32; 256]> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = [0u32; 256];
        for (i, slot) in t.iter_mut().enumerate() {
            let mut c = i as u32;
            for _ in 0..8 {
                c = if c & 1 != 0 { 0xEDB8_8320 ^ (c >> 1) } else { c >> 1 };
            }
            *slot = c;
        }
        t
    });
    let mut c = 0xFFFF_FFFFu32;
    for &b in bytes {
        c = table[((c ^ b as u32) & 0xFF) as usize] ^ (c >> 8);
    }
    c ^ 0xFFFF_FFFF
}

/// Serializes the model; `meta` is a caller-supplied description line and
/// must be deterministic for byte-identical outputs.
pub fn save_model(model: &DetectorModel<f64>, path: &Path, meta: &str) -> Result<SavedModelInfo> {
    let parts = model.to_parts();
    let r = parts.retained_points.rows();
    let d = parts.retained_points.cols();

    let mut w = Writer::new();
    w.buf.extend_from_slice(MAGIC);
    w.u8(VERSION);
    let exact = matches!(parts.potential, PotentialData::Exact { .. });
    w.u8(exact as u8);
    w.f64(parts.params.sigma_sq());
    w.u32(parts.q as u32);
    w.f64(parts.threshold);
    w.u32(parts.n_train as u32);
    w.f64(parts.grand_mean);
    w.u32(d as u32);
    w.u32(r as u32);
    for &id in &parts.retained_ids {
        w.u64(id);
    }
    for i in 0..r {
        for &v in parts.retained_points.row(i) {
            w.f64(v);
        }
    }
    for &v in &parts.retained_col_means {
        w.f64(v);
    }

    // Sparse coefficient triplets (row-in-retained-block, component, value).
    let mut triplets = Vec::new();
    for i in 0..r {
        for j in 0..parts.q {
            let v = parts.coeffs[(i, j)];
            if v != 0.0 {
                triplets.push((i as u32, j as u32, v));
            }
        }
    }
    let coeff_start = w.buf.len();
    w.u32(triplets.len() as u32);
    for (i, j, v) in &triplets {
        w.u32(*i);
        w.u32(*j);
        w.f64(*v);
    }
    let bytes_coeffs = w.buf.len() - coeff_start;

    match &parts.potential {
        PotentialData::Exact { points, col_means } => {
            w.u32(points.rows() as u32);
            for i in 0..points.rows() {
                for &v in points.row(i) {
                    w.f64(v);
                }
            }
            for &v in col_means {
                w.f64(v);
            }
        }
        PotentialData::Approximate {
            scale,
            reported_bound,
        } => {
            w.f64(*scale);
            w.f64(*reported_bound);
        }
    }

    let meta_bytes = meta.as_bytes();
    w.u32(meta_bytes.len() as u32);
    w.buf.extend_from_slice(meta_bytes);

    let crc = crc32(&w.buf);
    w.u32(crc);

    let bytes_total = w.buf.len();
    atomic_write(path, &w.buf)
        .with_context(|| format!("writing model to {}", path.display()))?;
    Ok(SavedModelInfo {
        bytes_total,
        bytes_coeffs,
    })
}

/// Reads a model back, verifying magic, version and the trailing checksum.
/// Returns the model and its metadata line.
pub fn load_model(path: &Path) -> Result<(DetectorModel<f64>, String)> {
    let buf = fs::read(path).with_context(|| format!("reading model {}", path.display()))?;
    if buf.len() < MAGIC.len() + 2 + 4 {
        bail!("model file too short");
    }
    let (body, crc_bytes) = buf.split_at(buf.len() - 4);
    let stored = u32::from_le_bytes(crc_bytes.try_into().unwrap());
    let computed = crc32(body);
    if stored != computed {
        bail!("model file checksum mismatch (stored {stored:08x}, computed {computed:08x})");
    }

    let mut r = Reader::new(body);
    if r.take(5)? != MAGIC {
        bail!("not a model file (bad magic)");
    }
    let version = r.u8()?;
    if version != VERSION {
        bail!("unsupported model version {version} (expected {VERSION})");
    }
    let exact = r.u8()? != 0;
    let sigma_sq = r.f64()?;
    let q = r.u32()? as usize;
    let threshold = r.f64()?;
    let n_train = r.u32()? as usize;
    let grand_mean = r.f64()?;
    let d = r.u32()? as usize;
    let count = r.u32()? as usize;

    let mut retained_ids = Vec::with_capacity(count);
    for _ in 0..count {
        retained_ids.push(r.u64()?);
    }
    let mut retained_points = Mat::zeros(count, d);
    for i in 0..count {
        for j in 0..d {
            retained_points[(i, j)] = r.f64()?;
        }
    }
    let mut retained_col_means = Vec::with_capacity(count);
    for _ in 0..count {
        retained_col_means.push(r.f64()?);
    }

    let n_triplets = r.u32()? as usize;
    let mut coeffs = Mat::zeros(count, q);
    for _ in 0..n_triplets {
        let i = r.u32()? as usize;
        let j = r.u32()? as usize;
        let v = r.f64()?;
        if i >= count || j >= q {
            bail!("coefficient triplet ({i}, {j}) out of bounds");
        }
        coeffs[(i, j)] = v;
    }

    let potential = if exact {
        let side = r.u32()? as usize;
        if side != n_train {
            bail!("side-array count {side} does not match n_train {n_train}");
        }
        let mut points = Mat::zeros(side, d);
        for i in 0..side {
            for j in 0..d {
                points[(i, j)] = r.f64()?;
            }
        }
        let mut col_means = Vec::with_capacity(side);
        for _ in 0..side {
            col_means.push(r.f64()?);
        }
        PotentialData::Exact { points, col_means }
    } else {
        let scale = r.f64()?;
        let reported_bound = r.f64()?;
        PotentialData::Approximate {
            scale,
            reported_bound,
        }
    };

    let meta_len = r.u32()? as usize;
    let meta = String::from_utf8(r.take(meta_len)?.to_vec()).context("metadata not utf-8")?;

    let params = KernelParams::new(sigma_sq).map_err(|e| anyhow::anyhow!("{e}"))?;
    let model = DetectorModel::from_parts(ModelParts {
        params,
        q,
        threshold,
        n_train,
        grand_mean,
        retained_points,
        retained_ids,
        retained_col_means,
        coeffs,
        potential,
    })
    .map_err(|e| anyhow::anyhow!("{e}"))?;
    Ok((model, meta))
}
