//! Frame normalization, multi-scale rescaling, overlapping patch grids, and
//! reassembly of per-patch quantities into pixel maps.

use ndarray::{s, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// A grayscale frame with values in `[0, 1]` and its position in the stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub pixels: Array2<f64>,
    pub index: usize,
}

impl Frame {
    pub fn new(pixels: Array2<f64>, index: usize) -> Result<Self> {
        for &x in pixels.iter() {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::Input(format!("pixel value {x} outside [0, 1]")));
            }
        }
        Ok(Self { pixels, index })
    }

    pub fn height(&self) -> usize {
        self.pixels.nrows()
    }

    pub fn width(&self) -> usize {
        self.pixels.ncols()
    }
}

/// Patch geometry shared by training and detection: the scale pyramid, the
/// patch size, and the fractional overlap between adjacent patches.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleConfig {
    pub ratios: Vec<f64>,
    pub patch_h: usize,
    pub patch_w: usize,
    pub overlap: f64,
}

impl Default for ScaleConfig {
    fn default() -> Self {
        Self {
            ratios: vec![1.0, 0.5, 0.25],
            patch_h: 12,
            patch_w: 18,
            overlap: 0.5,
        }
    }
}

impl ScaleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ratios.is_empty() {
            return Err(Error::Config("at least one scale ratio required".into()));
        }
        for &r in &self.ratios {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::Config(format!("scale ratio {r} outside (0, 1]")));
            }
        }
        if self.patch_h == 0 || self.patch_w == 0 {
            return Err(Error::Config("patch dimensions must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::Config(format!("overlap {} outside [0, 1)", self.overlap)));
        }
        self.strides()?;
        Ok(())
    }

    /// Row/column strides implied by the overlap fraction. The overlap must
    /// map to whole-pixel strides of at least one.
    pub fn strides(&self) -> Result<(usize, usize)> {
        let stride = |dim: usize| -> Result<usize> {
            let exact = dim as f64 * (1.0 - self.overlap);
            let rounded = exact.round();
            if (exact - rounded).abs() > 1e-9 || rounded < 1.0 {
                return Err(Error::Config(format!(
                    "overlap {} does not yield an integer stride for patch dimension {dim}",
                    self.overlap
                )));
            }
            Ok(rounded as usize)
        };
        Ok((stride(self.patch_h)?, stride(self.patch_w)?))
    }

    pub fn patch_len(&self) -> usize {
        self.patch_h * self.patch_w
    }
}

/// All patches of one frame at one scale, flattened row-major, with the grid
/// geometry needed to place them back into the (scaled) frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchGrid {
    pub scale: f64,
    pub patch_h: usize,
    pub patch_w: usize,
    pub frame_h: usize,
    pub frame_w: usize,
    /// Top-left pixel row of each grid row of patches.
    pub row_offsets: Vec<usize>,
    /// Top-left pixel column of each grid column of patches.
    pub col_offsets: Vec<usize>,
    /// `(n_rows * n_cols) x (patch_h * patch_w)`; patch `(i, j)` is row
    /// `i * n_cols + j`.
    pub data: Array2<f64>,
}

impl PatchGrid {
    pub fn n_rows(&self) -> usize {
        self.row_offsets.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_offsets.len()
    }

    pub fn n_patches(&self) -> usize {
        self.n_rows() * self.n_cols()
    }

    pub fn patch_len(&self) -> usize {
        self.patch_h * self.patch_w
    }

    pub fn patch(&self, i: usize, j: usize) -> ArrayView1<'_, f64> {
        self.data.row(i * self.n_cols() + j)
    }
}

/// Divide integer pixels by `max_value` into a unit-interval frame.
pub fn normalize_frame(raw: ArrayView2<u16>, max_value: u16, index: usize) -> Result<Frame> {
    if max_value == 0 {
        return Err(Error::Input("max_value must be positive".into()));
    }
    for &x in raw.iter() {
        if x > max_value {
            return Err(Error::Input(format!(
                "raw pixel {x} exceeds max value {max_value}"
            )));
        }
    }
    let scale = 1.0 / max_value as f64;
    Frame::new(raw.mapv(|x| x as f64 * scale), index)
}

/// Bilinear resize with half-pixel center alignment, clamped at the borders.
/// Output values are convex combinations of inputs, so `[0, 1]` is preserved,
/// and a same-size resize reproduces the input exactly.
pub(crate) fn bilinear_resize(src: ArrayView2<f64>, out_h: usize, out_w: usize) -> Array2<f64> {
    let (in_h, in_w) = src.dim();
    let ry = in_h as f64 / out_h as f64;
    let rx = in_w as f64 / out_w as f64;
    Array2::from_shape_fn((out_h, out_w), |(r, c)| {
        let y = ((r as f64 + 0.5) * ry - 0.5).clamp(0.0, (in_h - 1) as f64);
        let x = ((c as f64 + 0.5) * rx - 0.5).clamp(0.0, (in_w - 1) as f64);
        let y0 = y.floor() as usize;
        let x0 = x.floor() as usize;
        let y1 = (y0 + 1).min(in_h - 1);
        let x1 = (x0 + 1).min(in_w - 1);
        let wy = y - y0 as f64;
        let wx = x - x0 as f64;
        (1.0 - wy) * ((1.0 - wx) * src[[y0, x0]] + wx * src[[y0, x1]])
            + wy * ((1.0 - wx) * src[[y1, x0]] + wx * src[[y1, x1]])
    })
}

/// Rescale a frame to `(round(H * ratio), round(W * ratio))` by bilinear
/// interpolation. `ratio = 1` is the identity.
pub fn rescale_frame(frame: &Frame, ratio: f64) -> Result<Frame> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::Config(format!("rescale ratio {ratio} outside (0, 1]")));
    }
    let out_h = (frame.height() as f64 * ratio).round() as usize;
    let out_w = (frame.width() as f64 * ratio).round() as usize;
    if out_h == 0 || out_w == 0 {
        return Err(Error::Input(format!(
            "rescale ratio {ratio} collapses a {}x{} frame",
            frame.height(),
            frame.width()
        )));
    }
    Ok(Frame {
        pixels: bilinear_resize(frame.pixels.view(), out_h, out_w),
        index: frame.index,
    })
}

/// Patch anchor offsets along one dimension: a regular stride walk, plus a
/// final offset flush with the far edge when the stride does not divide
/// evenly. Guarantees full coverage for stride <= patch.
fn grid_offsets(dim: usize, patch: usize, stride: usize) -> Vec<usize> {
    let span = dim - patch;
    let mut offsets: Vec<usize> = (0..=span).step_by(stride.max(1)).collect();
    if *offsets.last().unwrap() != span {
        offsets.push(span);
    }
    offsets
}

/// Cut a frame into overlapping `patch_h x patch_w` patches, flattened
/// row-major.
pub fn extract_patches(frame: &Frame, cfg: &ScaleConfig, scale: f64) -> Result<PatchGrid> {
    let (stride_r, stride_c) = cfg.strides()?;
    let (h, w) = frame.pixels.dim();
    if h < cfg.patch_h || w < cfg.patch_w {
        return Err(Error::Input(format!(
            "frame {h}x{w} smaller than patch {}x{}",
            cfg.patch_h, cfg.patch_w
        )));
    }
    let row_offsets = grid_offsets(h, cfg.patch_h, stride_r);
    let col_offsets = grid_offsets(w, cfg.patch_w, stride_c);
    let mut data = Array2::zeros((row_offsets.len() * col_offsets.len(), cfg.patch_len()));
    let mut row = 0;
    for &r in &row_offsets {
        for &c in &col_offsets {
            let block = frame.pixels.slice(s![r..r + cfg.patch_h, c..c + cfg.patch_w]);
            for (dst, &src) in data.row_mut(row).iter_mut().zip(block.iter()) {
                *dst = src;
            }
            row += 1;
        }
    }
    Ok(PatchGrid {
        scale,
        patch_h: cfg.patch_h,
        patch_w: cfg.patch_w,
        frame_h: h,
        frame_w: w,
        row_offsets,
        col_offsets,
        data,
    })
}

fn accumulate(
    grid: &PatchGrid,
    mut contribution: impl FnMut(usize, usize, usize) -> f64,
) -> Result<Array2<f64>> {
    let mut sum = Array2::<f64>::zeros((grid.frame_h, grid.frame_w));
    let mut count = Array2::<f64>::zeros((grid.frame_h, grid.frame_w));
    for (i, &r) in grid.row_offsets.iter().enumerate() {
        for (j, &c) in grid.col_offsets.iter().enumerate() {
            let patch_idx = i * grid.n_cols() + j;
            for pr in 0..grid.patch_h {
                for pc in 0..grid.patch_w {
                    sum[[r + pr, c + pc]] += contribution(patch_idx, pr, pc);
                    count[[r + pr, c + pc]] += 1.0;
                }
            }
        }
    }
    if count.iter().any(|&n| n == 0.0) {
        return Err(Error::Input("patch grid leaves uncovered pixels".into()));
    }
    Ok(sum / &count)
}

/// Broadcast one scalar per patch over its footprint and average overlaps.
pub fn assemble_scalar_map(values: &[f64], grid: &PatchGrid) -> Result<Array2<f64>> {
    if values.len() != grid.n_patches() {
        return Err(Error::DimMismatch {
            context: "assemble_scalar_map values",
            expected: grid.n_patches(),
            actual: values.len(),
        });
    }
    accumulate(grid, |patch_idx, _, _| values[patch_idx])
}

/// Paste full per-patch pixel blocks back into the frame, averaging where
/// patches overlap.
pub fn assemble_block_map(blocks: ArrayView2<f64>, grid: &PatchGrid) -> Result<Array2<f64>> {
    if blocks.nrows() != grid.n_patches() || blocks.ncols() != grid.patch_len() {
        return Err(Error::ShapeMismatch {
            context: "assemble_block_map blocks",
            expected: (grid.n_patches(), grid.patch_len()),
            actual: blocks.dim(),
        });
    }
    accumulate(grid, |patch_idx, pr, pc| {
        blocks[[patch_idx, pr * grid.patch_w + pc]]
    })
}

/// Nearest-neighbor upsampling. Chosen over interpolation for score maps so
/// local maxima survive unchanged.
pub fn upsample_map(map: ArrayView2<f64>, target_h: usize, target_w: usize) -> Result<Array2<f64>> {
    let (h, w) = map.dim();
    if target_h < h || target_w < w {
        return Err(Error::Input(format!(
            "upsample target {target_h}x{target_w} smaller than source {h}x{w}"
        )));
    }
    Ok(Array2::from_shape_fn((target_h, target_w), |(r, c)| {
        map[[r * h / target_h, c * w / target_w]]
    }))
}

/// Element-wise maximum across same-shaped maps.
pub fn fuse_scales_max(maps: &[Array2<f64>]) -> Result<Array2<f64>> {
    let first = maps
        .first()
        .ok_or_else(|| Error::Input("fuse_scales_max needs at least one map".into()))?;
    let mut fused = first.clone();
    for map in &maps[1..] {
        if map.dim() != fused.dim() {
            return Err(Error::ShapeMismatch {
                context: "fuse_scales_max",
                expected: fused.dim(),
                actual: map.dim(),
            });
        }
        fused.zip_mut_with(map, |a, &b| *a = a.max(b));
    }
    Ok(fused)
}
