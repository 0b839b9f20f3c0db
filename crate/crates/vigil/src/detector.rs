//! The detector proper: per scale, a clustering model assigns every patch
//! location to a region, and each region gets its own reconstruction model.
//! A patch scores by how badly its region's model reproduces it; per-pixel
//! maps are fused across scales and persistence-filtered over frame chunks.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView1, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cluster::{build_cluster_map, rows_by_cluster, ClusterMap};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::exec::{par_map, par_map_indexed};
use crate::patch::{
    assemble_scalar_map, extract_patches, fuse_scales_max, rescale_frame, upsample_map, Frame,
    PatchGrid, ScaleConfig,
};
use crate::rbm::{train, train_more, RbmParams, TrainConfig};
use crate::volume::{persistence_filter, ErrorTensor};

/// Seed-space tags so every trained model draws from its own stream.
const TAG_CLUSTER: u64 = 1;
const TAG_DETECT: u64 = 2;
const TAG_STREAM: u64 = 3;

/// Mix a base seed with context tags (scale index, cluster label, phase) into
/// an independent stream seed. Stable across platforms.
pub(crate) fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut z = base;
    for &t in tags {
        z = z
            .wrapping_add(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(t.wrapping_mul(0xD1B5_4A32_D192_ED03));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

/// Everything needed to score one scale: the clustering model, the frozen
/// region map it voted, and one reconstruction model per region.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleModel {
    pub scale: f64,
    pub cluster_rbm: RbmParams,
    pub cluster_map: ClusterMap,
    pub detectors: BTreeMap<u32, RbmParams>,
}

/// A trained multi-scale detector plus the geometry and thresholds it was
/// built with.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel {
    /// Processing resolution; input frames must already be this size.
    pub frame_h: usize,
    pub frame_w: usize,
    pub patch_h: usize,
    pub patch_w: usize,
    pub overlap: f64,
    pub beta: f64,
    pub gamma: usize,
    pub seed: u64,
    pub scales: Vec<ScaleModel>,
}

impl DetectorModel {
    fn per_scale_config(&self, ratio: f64) -> ScaleConfig {
        ScaleConfig {
            ratios: vec![ratio],
            patch_h: self.patch_h,
            patch_w: self.patch_w,
            overlap: self.overlap,
        }
    }

    /// Structural consistency: non-empty scale list, a detector for every
    /// region label, matching visible dimensions.
    pub fn validate(&self) -> Result<()> {
        if self.scales.is_empty() {
            return Err(Error::Config("model has no scales".into()));
        }
        let patch_len = self.patch_h * self.patch_w;
        for sm in &self.scales {
            if sm.cluster_rbm.num_visible() != patch_len {
                return Err(Error::DimMismatch {
                    context: "cluster model visible units",
                    expected: patch_len,
                    actual: sm.cluster_rbm.num_visible(),
                });
            }
            for label in &sm.cluster_map.unique_labels {
                let rbm = sm.detectors.get(label).ok_or_else(|| {
                    Error::Config(format!(
                        "scale {}: no detector for region {label}",
                        sm.scale
                    ))
                })?;
                if rbm.num_visible() != patch_len {
                    return Err(Error::DimMismatch {
                        context: "detector visible units",
                        expected: patch_len,
                        actual: rbm.num_visible(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Score one frame: per-pixel reconstruction-error map fused over scales.
    pub fn score_frame(&self, frame: &Frame) -> Result<Array2<f64>> {
        Ok(self.score_frame_grids(frame)?.0)
    }

    /// Score frames independently (parallel when the feature is on).
    pub fn score_frames(&self, frames: &[Frame]) -> Result<Vec<Array2<f64>>> {
        par_map(frames, |f| self.score_frame(f))
            .into_iter()
            .collect()
    }

    /// Score a frame and also hand back its per-scale patch grids, so a
    /// streaming caller can reuse them for model updates.
    fn score_frame_grids(&self, frame: &Frame) -> Result<(Array2<f64>, Vec<PatchGrid>)> {
        if frame.pixels.dim() != (self.frame_h, self.frame_w) {
            return Err(Error::ShapeMismatch {
                context: "frame to score",
                expected: (self.frame_h, self.frame_w),
                actual: frame.pixels.dim(),
            });
        }
        let mut maps = Vec::with_capacity(self.scales.len());
        let mut grids = Vec::with_capacity(self.scales.len());
        for sm in &self.scales {
            let scaled = rescale_frame(frame, sm.scale)?;
            let grid = extract_patches(&scaled, &self.per_scale_config(sm.scale), sm.scale)?;
            if (grid.n_rows(), grid.n_cols()) != sm.cluster_map.labels.dim() {
                return Err(Error::ShapeMismatch {
                    context: "patch grid vs region map",
                    expected: sm.cluster_map.labels.dim(),
                    actual: (grid.n_rows(), grid.n_cols()),
                });
            }
            let values = score_grid(&grid, sm)?;
            let map = assemble_scalar_map(&values, &grid)?;
            maps.push(upsample_map(map.view(), self.frame_h, self.frame_w)?);
            grids.push(grid);
        }
        Ok((fuse_scales_max(&maps)?, grids))
    }
}

/// Average reconstruction error of one patch: the Euclidean norm of the
/// pixel-wise difference divided by the pixel count.
pub fn patch_error(patch: ArrayView1<f64>, recon: ArrayView1<f64>) -> f64 {
    let sq: f64 = patch
        .iter()
        .zip(recon.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    sq.sqrt() / patch.len() as f64
}

/// Score every patch of a grid with its region's model, batched per region.
fn score_grid(grid: &PatchGrid, sm: &ScaleModel) -> Result<Vec<f64>> {
    let flat: Vec<u32> = sm.cluster_map.labels.iter().copied().collect();
    let patch_len = grid.patch_len() as f64;
    let mut values = vec![f64::NAN; grid.n_patches()];
    for (label, rbm) in &sm.detectors {
        let rows: Vec<usize> = flat
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == *label)
            .map(|(i, _)| i)
            .collect();
        if rows.is_empty() {
            continue;
        }
        let sub = grid.data.select(Axis(0), &rows);
        let recon = rbm.reconstruct_batch(sub.view());
        let diff = &sub - &recon;
        for (k, &loc) in rows.iter().enumerate() {
            let sq: f64 = diff.row(k).iter().map(|d| d * d).sum();
            values[loc] = sq.sqrt() / patch_len;
        }
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Config("region map location without a detector".into()));
    }
    Ok(values)
}

/// Train the full multi-scale detector on normal frames.
///
/// Scales are processed one at a time to bound peak memory; within a scale,
/// the per-region models train in parallel, each on its own seeded stream, so
/// the result is independent of scheduling.
pub fn train_detector(frames: &[Frame], cfg: &RunConfig) -> Result<DetectorModel> {
    cfg.validate()?;
    let first = frames
        .first()
        .ok_or_else(|| Error::Input("no training frames".into()))?;
    let (h, w) = first.pixels.dim();
    if (h, w) != (cfg.resize_h, cfg.resize_w) {
        return Err(Error::ShapeMismatch {
            context: "training frame",
            expected: (cfg.resize_h, cfg.resize_w),
            actual: (h, w),
        });
    }
    for f in frames {
        if f.pixels.dim() != (h, w) {
            return Err(Error::Input("training frames differ in size".into()));
        }
    }

    let mut scales = Vec::with_capacity(cfg.scales.len());
    for (si, &ratio) in cfg.scales.iter().enumerate() {
        let per_scale = ScaleConfig {
            ratios: vec![ratio],
            patch_h: cfg.patch_h,
            patch_w: cfg.patch_w,
            overlap: cfg.overlap,
        };
        let grids: Vec<PatchGrid> = par_map(frames, |f| {
            rescale_frame(f, ratio).and_then(|s| extract_patches(&s, &per_scale, ratio))
        })
        .into_iter()
        .collect::<Result<_>>()?;

        let cluster_cfg = TrainConfig {
            seed: derive_seed(cfg.seed, &[TAG_CLUSTER, si as u64]),
            ..cfg.train_config()
        };
        // Regions with fewer than two minibatches of patches are too thin to
        // train on and get folded into the dominant region.
        let min_patches = 2 * cfg.batch_size;
        let (cluster_rbm, cluster_map) =
            build_cluster_map(&grids, cfg.cluster_hidden, &cluster_cfg, min_patches)?;

        let groups = rows_by_cluster(&cluster_map, grids.len());
        let jobs: Vec<(u32, Array2<f64>)> = groups
            .into_iter()
            .map(|(label, rows)| (label, gather_rows(&grids, &rows)))
            .collect();
        drop(grids);

        let detectors: BTreeMap<u32, RbmParams> =
            par_map_indexed(jobs, |_, (label, matrix)| {
                let dcfg = TrainConfig {
                    seed: derive_seed(cfg.seed, &[TAG_DETECT, si as u64, u64::from(label)]),
                    ..cfg.train_config()
                };
                train(matrix.view(), cfg.detect_hidden, &dcfg).map(|p| (label, p))
            })
            .into_iter()
            .collect::<Result<_>>()?;

        scales.push(ScaleModel {
            scale: ratio,
            cluster_rbm,
            cluster_map,
            detectors,
        });
    }

    let model = DetectorModel {
        frame_h: h,
        frame_w: w,
        patch_h: cfg.patch_h,
        patch_w: cfg.patch_w,
        overlap: cfg.overlap,
        beta: cfg.beta,
        gamma: cfg.gamma,
        seed: cfg.seed,
        scales,
    };
    model.validate()?;
    Ok(model)
}

/// Copy the given frame-major patch rows out of per-frame grids into one
/// matrix. Row index `f * n_patches + loc` addresses frame `f`, location
/// `loc`.
fn gather_rows(grids: &[PatchGrid], rows: &[usize]) -> Array2<f64> {
    let n_patches = grids[0].n_patches();
    let mut out = Array2::zeros((rows.len(), grids[0].patch_len()));
    for (dst, &row) in rows.iter().enumerate() {
        let (f, loc) = (row / n_patches, row % n_patches);
        out.row_mut(dst).assign(&grids[f].data.row(loc));
    }
    out
}

/// Whether detection adapts the region models as it goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectMode {
    /// Score with the trained model unchanged.
    Frozen,
    /// After scoring each chunk, continue training every region model on
    /// that chunk's patches, so the detector tracks gradual scene change.
    Streaming,
}

/// Detection results over a frame sequence.
#[derive(Debug, Clone)]
pub struct DetectionOutput {
    /// Fused per-pixel score map per frame, before persistence filtering.
    pub raw_maps: Vec<Array2<f64>>,
    /// Score maps with non-persistent responses zeroed.
    pub final_maps: Vec<Array2<f64>>,
    /// Max of each raw map.
    pub raw_frame_scores: Vec<f64>,
    /// Max of each filtered map; zero when nothing persistent remains.
    pub frame_scores: Vec<f64>,
    /// Chunk length used, so downstream sweeps can refilter consistently.
    pub chunk_len: usize,
}

fn map_max(map: &Array2<f64>) -> f64 {
    map.iter().copied().fold(0.0, f64::max)
}

/// Run detection over `frames` in consecutive chunks. In
/// [`DetectMode::Streaming`] the model is updated after each chunk is scored,
/// so a chunk is never scored by a model that has already seen it.
pub fn detect(
    frames: &[Frame],
    model: &mut DetectorModel,
    mode: DetectMode,
    cfg: &RunConfig,
) -> Result<DetectionOutput> {
    if frames.is_empty() {
        return Err(Error::Input("no frames to score".into()));
    }
    model.validate()?;
    let mut out = DetectionOutput {
        raw_maps: Vec::with_capacity(frames.len()),
        final_maps: Vec::with_capacity(frames.len()),
        raw_frame_scores: Vec::with_capacity(frames.len()),
        frame_scores: Vec::with_capacity(frames.len()),
        chunk_len: cfg.chunk_len,
    };
    for (ci, chunk) in frames.chunks(cfg.chunk_len).enumerate() {
        let scored: Vec<(Array2<f64>, Vec<PatchGrid>)> =
            par_map(chunk, |f| model.score_frame_grids(f))
                .into_iter()
                .collect::<Result<_>>()?;
        let (maps, grids): (Vec<_>, Vec<_>) = scored.into_iter().unzip();

        let errors = ErrorTensor::from_frames(&maps)?;
        let filtered = persistence_filter(&errors, model.beta, model.gamma)?;
        for (t, map) in maps.iter().enumerate() {
            let final_map = filtered.values.index_axis(Axis(0), t).to_owned();
            out.raw_frame_scores.push(map_max(map));
            out.frame_scores.push(map_max(&final_map));
            out.final_maps.push(final_map);
        }
        out.raw_maps.extend(maps);

        if mode == DetectMode::Streaming {
            update_model(model, &grids, ci, cfg)?;
        }
    }
    Ok(out)
}

/// Continue training every region model on one chunk's patches.
fn update_model(
    model: &mut DetectorModel,
    frame_grids: &[Vec<PatchGrid>],
    chunk_idx: usize,
    cfg: &RunConfig,
) -> Result<()> {
    let base_seed = model.seed;
    let update_cfg = cfg.train_config();
    for (si, sm) in model.scales.iter_mut().enumerate() {
        let grids: Vec<PatchGrid> = frame_grids.iter().map(|g| g[si].clone()).collect();
        let groups = rows_by_cluster(&sm.cluster_map, grids.len());
        let jobs: Vec<(u32, Array2<f64>)> = groups
            .into_iter()
            .map(|(label, rows)| (label, gather_rows(&grids, &rows)))
            .collect();
        let updated: Vec<(u32, RbmParams)> = par_map_indexed(jobs, |_, (label, matrix)| {
            let mut rbm = sm.detectors[&label].clone();
            let seed = derive_seed(
                base_seed,
                &[TAG_STREAM, chunk_idx as u64, si as u64, u64::from(label)],
            );
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            train_more(&mut rbm, matrix.view(), cfg.update_epochs, &update_cfg, &mut rng)
                .map(|()| (label, rbm))
        })
        .into_iter()
        .collect::<Result<_>>()?;
        for (label, rbm) in updated {
            sm.detectors.insert(label, rbm);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array1};
    use rand::Rng;

    fn small_config() -> RunConfig {
        RunConfig {
            scales: vec![1.0, 0.5],
            patch_h: 4,
            patch_w: 4,
            overlap: 0.5,
            resize_h: 16,
            resize_w: 24,
            cluster_hidden: 2,
            detect_hidden: 8,
            epochs: 20,
            batch_size: 16,
            chunk_len: 4,
            gamma: 2,
            beta: 0.02,
            update_epochs: 2,
            seed: 5,
            ..RunConfig::default()
        }
    }

    fn textured_frame(h: usize, w: usize, index: usize, rng: &mut ChaCha8Rng) -> Frame {
        let pixels = Array2::from_shape_fn((h, w), |(_, c)| {
            let base = if c < w / 2 { 0.2 } else { 0.8 };
            (base + 0.04 * (rng.random::<f64>() - 0.5)).clamp(0.0, 1.0)
        });
        Frame::new(pixels, index).unwrap()
    }

    fn training_frames(cfg: &RunConfig, n: usize, seed: u64) -> Vec<Frame> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| textured_frame(cfg.resize_h, cfg.resize_w, i, &mut rng))
            .collect()
    }

    fn plant_square(frame: &mut Frame, r0: usize, c0: usize, size: usize, value: f64) {
        for r in r0..r0 + size {
            for c in c0..c0 + size {
                frame.pixels[[r, c]] = value;
            }
        }
    }

    #[test]
    fn patch_error_fixture_values() {
        let ones = Array1::ones(216);
        let zeros = Array1::zeros(216);
        // sqrt(216) / 216 = 1 / sqrt(216)
        assert_abs_diff_eq!(
            patch_error(ones.view(), zeros.view()),
            1.0 / 216f64.sqrt(),
            epsilon = 1e-12
        );
        assert_eq!(patch_error(ones.view(), ones.view()), 0.0);
        let x = array![0.5, 0.5];
        let y = array![0.0, 1.0];
        // sqrt(0.25 + 0.25) / 2
        assert_abs_diff_eq!(patch_error(x.view(), y.view()), 0.5f64.sqrt() / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn derive_seed_separates_contexts() {
        let a = derive_seed(7, &[TAG_DETECT, 0, 1]);
        let b = derive_seed(7, &[TAG_DETECT, 0, 2]);
        let c = derive_seed(7, &[TAG_DETECT, 1, 1]);
        let d = derive_seed(8, &[TAG_DETECT, 0, 1]);
        let e = derive_seed(7, &[TAG_STREAM, 0, 1]);
        let all = [a, b, c, d, e];
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                assert_ne!(all[i], all[j]);
            }
        }
        // Stable across calls.
        assert_eq!(a, derive_seed(7, &[TAG_DETECT, 0, 1]));
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = small_config();
        let frames = training_frames(&cfg, 8, 1);
        let m1 = train_detector(&frames, &cfg).unwrap();
        let m2 = train_detector(&frames, &cfg).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(m1.scales.len(), 2);
        m1.validate().unwrap();
    }

    #[test]
    fn scoring_is_deterministic_and_shaped() {
        let cfg = small_config();
        let frames = training_frames(&cfg, 8, 2);
        let model = train_detector(&frames, &cfg).unwrap();
        let a = model.score_frame(&frames[0]).unwrap();
        let b = model.score_frame(&frames[0]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dim(), (cfg.resize_h, cfg.resize_w));
        assert!(a.iter().all(|&x| x.is_finite() && x >= 0.0));
    }

    #[test]
    fn grouped_scoring_matches_per_patch_oracle() {
        let cfg = small_config();
        let frames = training_frames(&cfg, 6, 3);
        let model = train_detector(&frames, &cfg).unwrap();
        let sm = &model.scales[0];
        let scaled = rescale_frame(&frames[0], sm.scale).unwrap();
        let grid = extract_patches(&scaled, &model.per_scale_config(sm.scale), sm.scale).unwrap();
        let values = score_grid(&grid, sm).unwrap();
        for i in 0..grid.n_rows() {
            for j in 0..grid.n_cols() {
                let label = sm.cluster_map.labels[[i, j]];
                let rbm = &sm.detectors[&label];
                let patch = grid.patch(i, j);
                let recon = rbm.reconstruct(patch).unwrap();
                let expected = patch_error(patch, recon.view());
                assert_abs_diff_eq!(
                    values[i * grid.n_cols() + j],
                    expected,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn planted_square_scores_above_normal_frames() {
        let cfg = small_config();
        let frames = training_frames(&cfg, 24, 4);
        let model = train_detector(&frames, &cfg).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let normal = textured_frame(cfg.resize_h, cfg.resize_w, 0, &mut rng);
        let mut abnormal = textured_frame(cfg.resize_h, cfg.resize_w, 1, &mut rng);
        // A near-white square on the dark half violates the learned texture.
        plant_square(&mut abnormal, 4, 4, 6, 0.95);

        let normal_score = map_max(&model.score_frame(&normal).unwrap());
        let abnormal_map = model.score_frame(&abnormal).unwrap();
        let abnormal_score = map_max(&abnormal_map);
        assert!(
            abnormal_score > 2.0 * normal_score,
            "abnormal {abnormal_score} vs normal {normal_score}"
        );
        // The response concentrates on the planted region.
        let mut best = (0, 0);
        let mut best_v = 0.0;
        for ((r, c), &v) in abnormal_map.indexed_iter() {
            if v > best_v {
                best_v = v;
                best = (r, c);
            }
        }
        assert!(best.0 >= 2 && best.0 < 12 && best.1 >= 2 && best.1 < 12, "peak at {best:?}");
    }

    #[test]
    fn mismatched_frame_size_is_rejected() {
        let cfg = small_config();
        let frames = training_frames(&cfg, 6, 5);
        let model = train_detector(&frames, &cfg).unwrap();
        let wrong = Frame::new(Array2::zeros((8, 8)), 0).unwrap();
        assert!(model.score_frame(&wrong).is_err());
        assert!(train_detector(&[wrong], &cfg).is_err());
        assert!(train_detector(&[], &cfg).is_err());
    }

    #[test]
    fn persistence_drops_single_frame_blip_in_detection() {
        let cfg = small_config();
        let frames = training_frames(&cfg, 24, 6);
        let mut model = train_detector(&frames, &cfg).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut test: Vec<Frame> = (0..8)
            .map(|i| textured_frame(cfg.resize_h, cfg.resize_w, i, &mut rng))
            .collect();
        // Persistent event on frames 0..=3 of the first chunk; a one-frame
        // blip on frame 5 (second chunk).
        for f in &mut test[0..4] {
            plant_square(f, 4, 4, 6, 0.95);
        }
        plant_square(&mut test[5], 8, 2, 6, 0.95);

        // Calibrate beta between normal and planted responses.
        let normal_max = map_max(&model.score_frame(&frames[0]).unwrap());
        let planted_max = map_max(&model.score_frame(&test[0]).unwrap());
        assert!(planted_max > normal_max);
        model.beta = (normal_max + planted_max) / 2.0;
        model.gamma = 2;

        let out = detect(&test, &mut model, DetectMode::Frozen, &cfg).unwrap();
        assert_eq!(out.frame_scores.len(), 8);
        for t in 0..4 {
            assert!(out.frame_scores[t] > 0.0, "persistent event lost at frame {t}");
        }
        // The blip passes beta (raw) but fails the persistence filter.
        assert!(out.raw_frame_scores[5] >= model.beta);
        assert_eq!(out.frame_scores[5], 0.0);
    }

    #[test]
    fn streaming_updates_change_the_model_frozen_does_not() {
        let cfg = small_config();
        let frames = training_frames(&cfg, 12, 8);
        let model = train_detector(&frames, &cfg).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let test: Vec<Frame> = (0..8)
            .map(|i| textured_frame(cfg.resize_h, cfg.resize_w, i, &mut rng))
            .collect();

        let mut frozen = model.clone();
        detect(&test, &mut frozen, DetectMode::Frozen, &cfg).unwrap();
        assert_eq!(frozen, model);

        let mut adaptive = model.clone();
        let out = detect(&test, &mut adaptive, DetectMode::Streaming, &cfg).unwrap();
        assert_ne!(adaptive, model);
        assert_eq!(out.frame_scores.len(), 8);

        // Streaming detection is itself deterministic.
        let mut adaptive2 = model.clone();
        let out2 = detect(&test, &mut adaptive2, DetectMode::Streaming, &cfg).unwrap();
        assert_eq!(adaptive, adaptive2);
        assert_eq!(out.raw_maps, out2.raw_maps);
    }

    #[test]
    fn first_chunk_scores_identically_in_both_modes() {
        // Updates happen after scoring, so the first chunk sees the same
        // model either way.
        let cfg = small_config();
        let frames = training_frames(&cfg, 12, 9);
        let model = train_detector(&frames, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let test: Vec<Frame> = (0..cfg.chunk_len)
            .map(|i| textured_frame(cfg.resize_h, cfg.resize_w, i, &mut rng))
            .collect();
        let mut m1 = model.clone();
        let a = detect(&test, &mut m1, DetectMode::Frozen, &cfg).unwrap();
        let mut m2 = model.clone();
        let b = detect(&test, &mut m2, DetectMode::Streaming, &cfg).unwrap();
        assert_eq!(a.raw_maps, b.raw_maps);
    }
}
