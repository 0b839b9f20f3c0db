//! On-disk formats: binary portable graymaps for frames and masks, a dataset
//! directory layout, a versioned binary model file, detection dumps, and the
//! CSV outputs.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView2};

use crate::cluster::ClusterMap;
use crate::config::RunConfig;
use crate::detector::{DetectorModel, ScaleModel};
use crate::error::{Error, Result};
use crate::eval::GroundTruth;
use crate::patch::{bilinear_resize, Frame};
use crate::rbm::RbmParams;

const MODEL_MAGIC: &[u8; 8] = b"VGLMODL\0";
const MODEL_VERSION: u32 = 1;
/// Tag for the frame-resampling kernel baked into a model's training data.
const KERNEL_BILINEAR: u8 = 0;

const DUMP_MAGIC: &[u8; 8] = b"VGLDUMP\0";
const DUMP_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// Portable graymap (P5)

/// Read a binary graymap: `(samples, max_value)`. Handles 8-bit and 16-bit
/// (big-endian) samples and `#` comments in the header.
pub fn read_pgm(path: &Path) -> Result<(Array2<u16>, u16)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes).map_err(|msg| {
        Error::Input(format!("{}: {msg}", path.display()))
    })
}

fn parse_pgm(bytes: &[u8]) -> std::result::Result<(Array2<u16>, u16), String> {
    let mut pos = 0usize;
    let mut token = |bytes: &[u8]| -> std::result::Result<String, String> {
        // Skip whitespace and comment lines between tokens.
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated header".into());
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    if token(bytes)? != "P5" {
        return Err("not a binary graymap (missing P5 magic)".into());
    }
    let width: usize = token(bytes)?.parse().map_err(|_| "bad width")?;
    let height: usize = token(bytes)?.parse().map_err(|_| "bad height")?;
    let maxval: u32 = token(bytes)?.parse().map_err(|_| "bad max value")?;
    if !(1..=65_535).contains(&maxval) {
        return Err(format!("max value {maxval} outside 1..=65535"));
    }
    if width == 0 || height == 0 {
        return Err("zero image dimension".into());
    }
    // Exactly one whitespace byte separates the header from the samples.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err("missing separator before samples".into());
    }
    pos += 1;

    let wide = maxval > 255;
    let expected = width * height * if wide { 2 } else { 1 };
    let data = &bytes[pos..];
    if data.len() < expected {
        return Err(format!(
            "truncated samples: {} bytes for {expected} expected",
            data.len()
        ));
    }
    let mut out = Array2::zeros((height, width));
    for (i, px) in out.iter_mut().enumerate() {
        *px = if wide {
            u16::from_be_bytes([data[2 * i], data[2 * i + 1]])
        } else {
            u16::from(data[i])
        };
    }
    Ok((out, maxval as u16))
}

/// Write a binary graymap; 16-bit samples are big-endian per the format.
pub fn write_pgm(path: &Path, samples: ArrayView2<u16>, maxval: u16) -> Result<()> {
    if maxval == 0 {
        return Err(Error::Input("graymap max value must be positive".into()));
    }
    if let Some(&bad) = samples.iter().find(|&&s| s > maxval) {
        return Err(Error::Input(format!(
            "sample {bad} exceeds max value {maxval}"
        )));
    }
    let (h, w) = samples.dim();
    let mut out = Vec::with_capacity(32 + samples.len() * 2);
    out.extend_from_slice(format!("P5\n{w} {h}\n{maxval}\n").as_bytes());
    for &s in samples.iter() {
        if maxval > 255 {
            out.extend_from_slice(&s.to_be_bytes());
        } else {
            out.push(s as u8);
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Write a unit-interval map as an 8-bit graymap, scaled so `scale_max`
/// maps to white.
pub fn write_map_pgm(path: &Path, map: ArrayView2<f64>, scale_max: f64) -> Result<()> {
    let denom = if scale_max > 0.0 { scale_max } else { 1.0 };
    let samples = map.mapv(|v| ((v / denom).clamp(0.0, 1.0) * 255.0).round() as u16);
    write_pgm(path, samples.view(), 255)
}

// ---------------------------------------------------------------------------
// Dataset layout

/// A dataset on disk: numbered frame graymaps, optional same-named masks,
/// optional one-label-per-line file.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetLayout {
    pub frames_dir: PathBuf,
    pub masks_dir: Option<PathBuf>,
    pub labels_path: Option<PathBuf>,
}

impl DatasetLayout {
    /// Conventional layout under one root: `frames/`, optional `masks/`,
    /// optional `labels.txt`.
    pub fn from_root(root: &Path) -> Result<Self> {
        let frames_dir = root.join("frames");
        if !frames_dir.is_dir() {
            return Err(Error::Dataset(format!(
                "{}: no frames/ directory",
                root.display()
            )));
        }
        let masks_dir = Some(root.join("masks")).filter(|p| p.is_dir());
        let labels_path = Some(root.join("labels.txt")).filter(|p| p.is_file());
        Ok(Self {
            frames_dir,
            masks_dir,
            labels_path,
        })
    }
}

/// Numerically sorted `(index, path)` pairs for every graymap in a
/// directory. Indices must be consecutive.
fn numbered_files(dir: &Path) -> Result<Vec<(usize, PathBuf)>> {
    let mut entries = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("pgm") {
            continue;
        }
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::Dataset(format!("{}: unreadable name", path.display())))?;
        let index: usize = stem.parse().map_err(|_| {
            Error::Dataset(format!(
                "{}: frame names must be numeric, got {stem:?}",
                dir.display()
            ))
        })?;
        entries.push((index, path));
    }
    if entries.is_empty() {
        return Err(Error::Dataset(format!("{}: no frames", dir.display())));
    }
    entries.sort();
    for w in entries.windows(2) {
        if w[1].0 == w[0].0 {
            return Err(Error::Dataset(format!(
                "duplicate frame number {}",
                w[0].0
            )));
        }
        if w[1].0 != w[0].0 + 1 {
            return Err(Error::Dataset(format!(
                "gap in frame numbering between {} and {}",
                w[0].0, w[1].0
            )));
        }
    }
    Ok(entries)
}

/// Nearest-neighbor resize with the floor mapping; keeps masks binary.
fn nearest_resize_u8(src: &Array2<u8>, out_h: usize, out_w: usize) -> Array2<u8> {
    let (h, w) = src.dim();
    Array2::from_shape_fn((out_h, out_w), |(r, c)| src[[r * h / out_h, c * w / out_w]])
}

/// Load a dataset: frames normalized to `[0, 1]` and bilinearly resized to
/// `(resize_h, resize_w)`; masks nearest-resized; labels parsed when
/// present. Ground truth is returned when labels exist.
pub fn load_dataset(
    layout: &DatasetLayout,
    resize_h: usize,
    resize_w: usize,
) -> Result<(Vec<Frame>, Option<GroundTruth>)> {
    let files = numbered_files(&layout.frames_dir)?;
    let mut native_dims: Option<(usize, usize)> = None;
    let mut frames = Vec::with_capacity(files.len());
    for (seq, (_, path)) in files.iter().enumerate() {
        let (raw, maxval) = read_pgm(path)?;
        match native_dims {
            None => native_dims = Some(raw.dim()),
            Some(d) if d != raw.dim() => {
                return Err(Error::Dataset(format!(
                    "{}: frame is {:?}, others are {d:?}",
                    path.display(),
                    raw.dim()
                )))
            }
            _ => {}
        }
        let scale = 1.0 / f64::from(maxval);
        let pixels = raw.mapv(|v| f64::from(v) * scale);
        let resized = if pixels.dim() == (resize_h, resize_w) {
            pixels
        } else {
            bilinear_resize(pixels.view(), resize_h, resize_w)
        };
        frames.push(Frame::new(resized, seq)?);
    }

    let masks = match &layout.masks_dir {
        None => None,
        Some(dir) => {
            let mask_files = numbered_files(dir)?;
            if mask_files.len() != files.len() {
                return Err(Error::Dataset(format!(
                    "{} masks for {} frames",
                    mask_files.len(),
                    files.len()
                )));
            }
            let mut masks = Vec::with_capacity(mask_files.len());
            for (_, path) in &mask_files {
                let (raw, maxval) = read_pgm(path)?;
                let binary = raw.mapv(|v| u8::from(u32::from(v) * 2 > u32::from(maxval)));
                masks.push(nearest_resize_u8(&binary, resize_h, resize_w));
            }
            Some(masks)
        }
    };

    let labels = match &layout.labels_path {
        None => None,
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let labels: Vec<u8> = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(|l| {
                    l.parse::<u8>()
                        .map_err(|_| Error::Dataset(format!("bad label line {l:?}")))
                })
                .collect::<Result<_>>()?;
            Some(labels)
        }
    };

    let gt = match (labels, masks) {
        (None, None) => None,
        (None, Some(_)) => {
            return Err(Error::Dataset(
                "masks present but labels.txt missing".into(),
            ))
        }
        (Some(frame_labels), masks) => {
            let gt = GroundTruth {
                frame_labels,
                masks,
            };
            gt.validate(frames.len(), Some((resize_h, resize_w)))?;
            Some(gt)
        }
    };
    Ok((frames, gt))
}

/// Write a generated dataset in the layout `load_dataset` expects.
pub fn save_dataset(
    root: &Path,
    frames: &[Frame],
    masks: Option<&[Array2<u8>]>,
    labels: Option<&[u8]>,
) -> Result<()> {
    let frames_dir = root.join("frames");
    fs::create_dir_all(&frames_dir).map_err(|e| Error::io(&frames_dir, e))?;
    for (i, frame) in frames.iter().enumerate() {
        let samples = frame.pixels.mapv(|v| (v * 255.0).round() as u16);
        write_pgm(&frames_dir.join(format!("{i:06}.pgm")), samples.view(), 255)?;
    }
    if let Some(masks) = masks {
        let masks_dir = root.join("masks");
        fs::create_dir_all(&masks_dir).map_err(|e| Error::io(&masks_dir, e))?;
        for (i, mask) in masks.iter().enumerate() {
            let samples = mask.mapv(|b| u16::from(b) * 255);
            write_pgm(&masks_dir.join(format!("{i:06}.pgm")), samples.view(), 255)?;
        }
    }
    if let Some(labels) = labels {
        let mut text = String::new();
        for l in labels {
            text.push_str(&format!("{l}\n"));
        }
        let path = root.join("labels.txt");
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Binary primitives

struct Writer<W: Write>(W);

impl<W: Write> Writer<W> {
    fn bytes(&mut self, b: &[u8]) -> Result<()> {
        self.0
            .write_all(b)
            .map_err(|e| Error::ModelFile(format!("write failed: {e}")))
    }
    fn u32(&mut self, v: u32) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    fn u64(&mut self, v: u64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    fn f64(&mut self, v: f64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    fn f64_slice(&mut self, vs: impl Iterator<Item = f64>) -> Result<()> {
        for v in vs {
            self.f64(v)?;
        }
        Ok(())
    }
}

struct Reader<R: Read>(R);

impl<R: Read> Reader<R> {
    fn bytes(&mut self, n: usize) -> Result<Vec<u8>> {
        let mut buf = vec![0u8; n];
        self.0
            .read_exact(&mut buf)
            .map_err(|e| Error::ModelFile(format!("truncated file: {e}")))?;
        Ok(buf)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes(8)?.try_into().unwrap()))
    }
    fn usize32(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }
    fn f64_vec(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

fn write_rbm<W: Write>(w: &mut Writer<W>, rbm: &RbmParams) -> Result<()> {
    w.u32(rbm.num_visible() as u32)?;
    w.u32(rbm.num_hidden() as u32)?;
    w.f64_slice(rbm.visible_bias.iter().copied())?;
    w.f64_slice(rbm.hidden_bias.iter().copied())?;
    w.f64_slice(rbm.weights.iter().copied())
}

fn read_rbm<R: Read>(r: &mut Reader<R>) -> Result<RbmParams> {
    let m = r.usize32()?;
    let k = r.usize32()?;
    if m == 0 || k == 0 || m > 1 << 24 || k > 1 << 24 {
        return Err(Error::ModelFile(format!("implausible model size {m}x{k}")));
    }
    let visible_bias = ndarray::Array1::from_vec(r.f64_vec(m)?);
    let hidden_bias = ndarray::Array1::from_vec(r.f64_vec(k)?);
    let weights = Array2::from_shape_vec((m, k), r.f64_vec(m * k)?)
        .expect("shape matches read count");
    let params = RbmParams::new(visible_bias, hidden_bias, weights)?;
    if !params.is_finite() {
        return Err(Error::ModelFile("non-finite parameter in file".into()));
    }
    Ok(params)
}

// ---------------------------------------------------------------------------
// Model file

/// Serialize a model. Bit-exact: floating values are stored as raw
/// little-endian words, map labels in ascending order.
pub fn save_model(path: &Path, model: &DetectorModel) -> Result<()> {
    model.validate()?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = Writer(BufWriter::new(file));
    w.bytes(MODEL_MAGIC)?;
    w.u32(MODEL_VERSION)?;
    w.u32(model.frame_h as u32)?;
    w.u32(model.frame_w as u32)?;
    w.u32(model.patch_h as u32)?;
    w.u32(model.patch_w as u32)?;
    w.f64(model.overlap)?;
    w.f64(model.beta)?;
    w.u32(model.gamma as u32)?;
    w.u64(model.seed)?;
    w.bytes(&[KERNEL_BILINEAR])?;
    w.u32(model.scales.len() as u32)?;
    for sm in &model.scales {
        w.f64(sm.scale)?;
        write_rbm(&mut w, &sm.cluster_rbm)?;
        let labels = &sm.cluster_map.labels;
        w.u32(labels.nrows() as u32)?;
        w.u32(labels.ncols() as u32)?;
        for &l in labels.iter() {
            w.u32(l)?;
        }
        w.u32(sm.detectors.len() as u32)?;
        for (label, rbm) in &sm.detectors {
            w.u32(*label)?;
            write_rbm(&mut w, rbm)?;
        }
    }
    w.0.flush()
        .map_err(|e| Error::ModelFile(format!("write failed: {e}")))
}

pub fn load_model(path: &Path) -> Result<DetectorModel> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader(BufReader::new(file));
    let magic = r.bytes(8)?;
    if magic != MODEL_MAGIC {
        return Err(Error::ModelFile(format!(
            "{}: not a model file (bad magic)",
            path.display()
        )));
    }
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(Error::ModelFile(format!(
            "{}: unsupported model version {version} (this build reads {MODEL_VERSION})",
            path.display()
        )));
    }
    let frame_h = r.usize32()?;
    let frame_w = r.usize32()?;
    let patch_h = r.usize32()?;
    let patch_w = r.usize32()?;
    let overlap = r.f64()?;
    let beta = r.f64()?;
    let gamma = r.usize32()?;
    let seed = r.u64()?;
    let kernel = r.u8()?;
    if kernel != KERNEL_BILINEAR {
        return Err(Error::ModelFile(format!(
            "unknown resampling kernel tag {kernel}"
        )));
    }
    let n_scales = r.usize32()?;
    if n_scales == 0 || n_scales > 64 {
        return Err(Error::ModelFile(format!("implausible scale count {n_scales}")));
    }
    let mut scales = Vec::with_capacity(n_scales);
    for _ in 0..n_scales {
        let scale = r.f64()?;
        let cluster_rbm = read_rbm(&mut r)?;
        let n_rows = r.usize32()?;
        let n_cols = r.usize32()?;
        if n_rows == 0 || n_cols == 0 || n_rows * n_cols > 1 << 24 {
            return Err(Error::ModelFile(format!(
                "implausible region map {n_rows}x{n_cols}"
            )));
        }
        let mut labels = Array2::zeros((n_rows, n_cols));
        for l in labels.iter_mut() {
            *l = r.u32()?;
        }
        let n_detectors = r.usize32()?;
        let mut detectors = BTreeMap::new();
        for _ in 0..n_detectors {
            let label = r.u32()?;
            detectors.insert(label, read_rbm(&mut r)?);
        }
        scales.push(ScaleModel {
            scale,
            cluster_rbm,
            cluster_map: ClusterMap::new(scale, labels),
            detectors,
        });
    }
    let model = DetectorModel {
        frame_h,
        frame_w,
        patch_h,
        patch_w,
        overlap,
        beta,
        gamma,
        seed,
        scales,
    };
    model.validate()?;
    Ok(model)
}

/// Cross-check a loaded model against a run configuration before use.
pub fn verify_model_matches_config(model: &DetectorModel, cfg: &RunConfig) -> Result<()> {
    if (model.patch_h, model.patch_w) != (cfg.patch_h, cfg.patch_w) {
        return Err(Error::DimMismatch {
            context: "model patch size vs config",
            expected: cfg.patch_h * cfg.patch_w,
            actual: model.patch_h * model.patch_w,
        });
    }
    if (model.frame_h, model.frame_w) != (cfg.resize_h, cfg.resize_w) {
        return Err(Error::Config(format!(
            "model expects {}x{} frames, config resizes to {}x{}",
            model.frame_h, model.frame_w, cfg.resize_h, cfg.resize_w
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Detection dump

/// Raw and persistence-filtered score maps with the thresholds that
/// produced them; everything evaluation needs without re-scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedDetections {
    pub beta: f64,
    pub gamma: usize,
    pub chunk_len: usize,
    pub raw_maps: Vec<Array2<f64>>,
    pub final_maps: Vec<Array2<f64>>,
}

pub fn save_detections(path: &Path, d: &SavedDetections) -> Result<()> {
    let first = d
        .raw_maps
        .first()
        .ok_or_else(|| Error::Input("no detection maps to save".into()))?;
    let (h, w) = first.dim();
    if d.final_maps.len() != d.raw_maps.len() {
        return Err(Error::Input("raw and filtered map counts differ".into()));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut wtr = Writer(BufWriter::new(file));
    wtr.bytes(DUMP_MAGIC)?;
    wtr.u32(DUMP_VERSION)?;
    wtr.u32(d.raw_maps.len() as u32)?;
    wtr.u32(h as u32)?;
    wtr.u32(w as u32)?;
    wtr.f64(d.beta)?;
    wtr.u32(d.gamma as u32)?;
    wtr.u32(d.chunk_len as u32)?;
    for set in [&d.raw_maps, &d.final_maps] {
        for map in set {
            if map.dim() != (h, w) {
                return Err(Error::Input("detection maps differ in size".into()));
            }
            wtr.f64_slice(map.iter().copied())?;
        }
    }
    wtr.0
        .flush()
        .map_err(|e| Error::ModelFile(format!("write failed: {e}")))
}

pub fn load_detections(path: &Path) -> Result<SavedDetections> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader(BufReader::new(file));
    if r.bytes(8)? != DUMP_MAGIC {
        return Err(Error::ModelFile(format!(
            "{}: not a detection dump (bad magic)",
            path.display()
        )));
    }
    let version = r.u32()?;
    if version != DUMP_VERSION {
        return Err(Error::ModelFile(format!(
            "{}: unsupported dump version {version} (this build reads {DUMP_VERSION})",
            path.display()
        )));
    }
    let n = r.usize32()?;
    let h = r.usize32()?;
    let w = r.usize32()?;
    if n == 0 || h == 0 || w == 0 || h * w > 1 << 28 {
        return Err(Error::ModelFile(format!("implausible dump shape {n}x{h}x{w}")));
    }
    let beta = r.f64()?;
    let gamma = r.usize32()?;
    let chunk_len = r.usize32()?;
    let mut read_maps = || -> Result<Vec<Array2<f64>>> {
        (0..n)
            .map(|_| {
                Ok(Array2::from_shape_vec((h, w), r.f64_vec(h * w)?)
                    .expect("shape matches read count"))
            })
            .collect()
    };
    let raw_maps = read_maps()?;
    let final_maps = read_maps()?;
    Ok(SavedDetections {
        beta,
        gamma,
        chunk_len,
        raw_maps,
        final_maps,
    })
}

// ---------------------------------------------------------------------------
// CSV output

/// Per-frame results: `frame_index,frame_score,n_abnormal_pixels`.
pub fn scores_csv(final_maps: &[Array2<f64>]) -> String {
    let mut out = String::from("frame_index,frame_score,n_abnormal_pixels\n");
    for (i, map) in final_maps.iter().enumerate() {
        let score = crate::eval::frame_score(map);
        let n_abnormal = map.iter().filter(|&&v| v > 0.0).count();
        out.push_str(&format!("{i},{score},{n_abnormal}\n"));
    }
    out
}

/// One curve: `threshold,fpr,tpr` per swept threshold.
pub fn roc_csv(curve: &crate::eval::RocCurve) -> String {
    let mut out = String::from("threshold,fpr,tpr\n");
    for (t, (fpr, tpr)) in curve.thresholds.iter().zip(&curve.points) {
        out.push_str(&format!("{t},{fpr},{tpr}\n"));
    }
    out
}

/// Summary across levels: `level,auc,eer` (EER blank where undefined).
pub fn summary_csv(rows: &[(&str, &crate::eval::RocCurve)]) -> String {
    let mut out = String::from("level,auc,eer\n");
    for (level, curve) in rows {
        let eer = curve.eer.map(|e| e.to_string()).unwrap_or_default();
        out.push_str(&format!("{level},{},{eer}\n", curve.auc));
    }
    out
}
