//! Region discovery: a small binary-code model groups patch locations by
//! appearance, so each image region gets its own detector. A seeded k-means
//! baseline is included for comparison.

use std::collections::{BTreeMap, BTreeSet};

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::patch::PatchGrid;
use crate::rbm::{train, RbmParams, TrainConfig};

/// Per-location cluster assignment for one scale's patch grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterMap {
    pub scale: f64,
    /// `n_rows x n_cols` grid of cluster labels.
    pub labels: Array2<u32>,
    pub unique_labels: BTreeSet<u32>,
}

impl ClusterMap {
    pub fn new(scale: f64, labels: Array2<u32>) -> Self {
        let unique_labels = labels.iter().copied().collect();
        Self {
            scale,
            labels,
            unique_labels,
        }
    }

    pub fn n_clusters(&self) -> usize {
        self.unique_labels.len()
    }
}

/// Collapse hidden activation probabilities into an integer by thresholding
/// each unit at 1/2 and reading the bits most-significant first: with K units,
/// bits `(h_1 .. h_K)` give `sum h_k * 2^(K-1-k)`, so `0101 -> 5`.
pub fn pseudo_label(hidden_probs: ArrayView1<f64>) -> u32 {
    let mut label = 0u32;
    for &p in hidden_probs.iter() {
        label = (label << 1) | u32::from(p > 0.5);
    }
    label
}

/// Pseudo-label every row of a patch matrix under `params`.
pub fn pseudo_labels_batch(patches: ArrayView2<f64>, params: &RbmParams) -> Result<Vec<u32>> {
    if patches.ncols() != params.num_visible() {
        return Err(Error::DimMismatch {
            context: "pseudo_labels_batch patches",
            expected: params.num_visible(),
            actual: patches.ncols(),
        });
    }
    let probs = params.hidden_probs_batch(patches);
    Ok(probs.rows().into_iter().map(pseudo_label).collect())
}

/// Modal label over a location's history; ties break to the smallest label so
/// the result is independent of input order.
pub fn vote_label(labels: &[u32]) -> Result<u32> {
    if labels.is_empty() {
        return Err(Error::Input("cannot vote over an empty label history".into()));
    }
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    // BTreeMap iterates ascending, and strict `>` keeps the first (smallest)
    // label among maxima.
    let mut best = (0u32, 0usize);
    for (&label, &n) in &counts {
        if n > best.1 {
            best = (label, n);
        }
    }
    Ok(best.0)
}

/// Vote a label for every grid location from per-frame label grids.
/// `per_frame[f]` holds frame `f`'s labels in patch-grid row-major order.
pub fn vote_location_labels(
    per_frame: &[Vec<u32>],
    n_rows: usize,
    n_cols: usize,
) -> Result<Array2<u32>> {
    let n_locations = n_rows * n_cols;
    if per_frame.is_empty() {
        return Err(Error::Input("no frames to vote over".into()));
    }
    for labels in per_frame {
        if labels.len() != n_locations {
            return Err(Error::DimMismatch {
                context: "vote_location_labels frame",
                expected: n_locations,
                actual: labels.len(),
            });
        }
    }
    let mut grid = Array2::zeros((n_rows, n_cols));
    for loc in 0..n_locations {
        let history: Vec<u32> = per_frame.iter().map(|f| f[loc]).collect();
        grid[[loc / n_cols, loc % n_cols]] = vote_label(&history)?;
    }
    Ok(grid)
}

/// Reassign labels whose patch population is below `min_patches` to the most
/// frequent surviving label, so every remaining cluster has enough data to
/// train on. `patches_per_location` is the number of training frames.
pub fn merge_small_clusters(
    labels: &mut Array2<u32>,
    patches_per_location: usize,
    min_patches: usize,
) -> Result<()> {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for &l in labels.iter() {
        *counts.entry(l).or_insert(0) += patches_per_location;
    }
    let keep: Vec<u32> = counts
        .iter()
        .filter(|(_, &n)| n >= min_patches)
        .map(|(&l, _)| l)
        .collect();
    if keep.is_empty() {
        // Degenerate but consistent: collapse everything into one cluster.
        let all = vote_label(&labels.iter().copied().collect::<Vec<_>>())?;
        labels.fill(all);
        return Ok(());
    }
    let target = *keep
        .iter()
        .max_by_key(|&&l| (counts[&l], std::cmp::Reverse(l)))
        .unwrap();
    for l in labels.iter_mut() {
        if !keep.contains(l) {
            *l = target;
        }
    }
    Ok(())
}

/// Cluster the locations of one scale: train a small model on all patches
/// pooled across frames, pseudo-label every patch, vote per location, then
/// fold undersized clusters into the dominant one.
///
/// Returns the trained model alongside the map so detection can re-derive
/// labels for unseen data.
pub fn build_cluster_map(
    grids: &[PatchGrid],
    num_hidden: usize,
    cfg: &TrainConfig,
    min_cluster_patches: usize,
) -> Result<(RbmParams, ClusterMap)> {
    let first = grids
        .first()
        .ok_or_else(|| Error::Input("build_cluster_map needs at least one frame".into()))?;
    let (n_rows, n_cols, patch_len) = (first.n_rows(), first.n_cols(), first.patch_len());
    for g in grids {
        if g.n_rows() != n_rows || g.n_cols() != n_cols || g.patch_len() != patch_len {
            return Err(Error::Input("inconsistent patch grids across frames".into()));
        }
    }

    let mut pooled = Array2::zeros((grids.len() * n_rows * n_cols, patch_len));
    for (f, g) in grids.iter().enumerate() {
        let start = f * n_rows * n_cols;
        pooled
            .slice_mut(ndarray::s![start..start + g.n_patches(), ..])
            .assign(&g.data);
    }

    let params = train(pooled.view(), num_hidden, cfg)?;

    let per_frame: Vec<Vec<u32>> = grids
        .iter()
        .map(|g| pseudo_labels_batch(g.data.view(), &params))
        .collect::<Result<_>>()?;
    let mut labels = vote_location_labels(&per_frame, n_rows, n_cols)?;
    merge_small_clusters(&mut labels, grids.len(), min_cluster_patches)?;
    Ok((params, ClusterMap::new(first.scale, labels)))
}

/// Group patch-matrix rows by their location's cluster label. Returns, per
/// label, the row indices (frame-major order) belonging to that cluster.
pub fn rows_by_cluster(map: &ClusterMap, n_frames: usize) -> BTreeMap<u32, Vec<usize>> {
    let n_locations = map.labels.len();
    let flat: Vec<u32> = map.labels.iter().copied().collect();
    let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for f in 0..n_frames {
        for (loc, &label) in flat.iter().enumerate() {
            groups.entry(label).or_default().push(f * n_locations + loc);
        }
    }
    groups
}

/// Lloyd's k-means with seeded initialization from distinct data points.
/// Ties in the nearest-centroid step break to the lowest index; empty
/// clusters keep their previous centroid. Returns per-row assignments.
pub fn kmeans(data: ArrayView2<f64>, k: usize, seed: u64, max_iters: usize) -> Result<Vec<u32>> {
    let n = data.nrows();
    if k == 0 || n == 0 {
        return Err(Error::Input("kmeans needs k >= 1 and at least one row".into()));
    }
    if n < k {
        return Err(Error::Input(format!("kmeans: {n} rows for k = {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = Array2::zeros((k, data.ncols()));
    for (c, idx) in rand::seq::index::sample(&mut rng, n, k).into_iter().enumerate() {
        centroids.row_mut(c).assign(&data.row(idx));
    }

    let mut assignment = vec![0u32; n];
    for _ in 0..max_iters {
        let mut changed = false;
        for (i, row) in data.rows().into_iter().enumerate() {
            let mut best = (0u32, f64::INFINITY);
            for (c, centroid) in centroids.rows().into_iter().enumerate() {
                let d: f64 = row
                    .iter()
                    .zip(centroid.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if d < best.1 {
                    best = (c as u32, d);
                }
            }
            if assignment[i] != best.0 {
                assignment[i] = best.0;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = Array2::<f64>::zeros((k, data.ncols()));
        let mut counts = vec![0usize; k];
        for (i, row) in data.rows().into_iter().enumerate() {
            let c = assignment[i] as usize;
            sums.row_mut(c).zip_mut_with(&row, |s, &x| *s += x);
            counts[c] += 1;
        }
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                centroids
                    .row_mut(c)
                    .assign(&(&sums.row(c) / count as f64));
            }
        }
    }
    Ok(assignment)
}

/// Baseline location clustering: k-means over per-location mean patches.
pub fn kmeans_cluster_map(grids: &[PatchGrid], k: usize, seed: u64) -> Result<ClusterMap> {
    let first = grids
        .first()
        .ok_or_else(|| Error::Input("kmeans_cluster_map needs at least one frame".into()))?;
    let (n_rows, n_cols) = (first.n_rows(), first.n_cols());
    let mut means = Array2::zeros((n_rows * n_cols, first.patch_len()));
    for g in grids {
        if g.n_rows() != n_rows || g.n_cols() != n_cols {
            return Err(Error::Input("inconsistent patch grids across frames".into()));
        }
        means += &g.data;
    }
    means /= grids.len() as f64;
    let assignment = kmeans(means.view(), k, seed, 100)?;
    let labels = Array2::from_shape_vec((n_rows, n_cols), assignment)
        .expect("assignment length matches grid");
    Ok(ClusterMap::new(first.scale, labels))
}
