//! Detection quality metrics: ROC curves with AUC and equal error rate, at
//! frame level (any detection in a frame), pixel level (40% ground-truth
//! coverage), and the stricter dual criterion (coverage plus detection
//! precision).

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::exec::par_map;
use crate::volume::{
    components_to_indicator, connected_components_3d, filter_components, ErrorTensor,
    IndicatorTensor,
};

/// Labels per frame (1 = abnormal), with optional per-frame binary masks
/// marking the abnormal pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub frame_labels: Vec<u8>,
    pub masks: Option<Vec<Array2<u8>>>,
}

impl GroundTruth {
    /// Check label values, mask alignment, and that every abnormal frame has
    /// a non-empty mask (the coverage rule is undefined otherwise).
    pub fn validate(&self, n_frames: usize, frame_dims: Option<(usize, usize)>) -> Result<()> {
        if self.frame_labels.len() != n_frames {
            return Err(Error::DimMismatch {
                context: "ground-truth frame labels",
                expected: n_frames,
                actual: self.frame_labels.len(),
            });
        }
        if let Some(bad) = self.frame_labels.iter().find(|&&l| l > 1) {
            return Err(Error::Input(format!("frame label {bad} is not 0/1")));
        }
        if let Some(masks) = &self.masks {
            if masks.len() != n_frames {
                return Err(Error::DimMismatch {
                    context: "ground-truth masks",
                    expected: n_frames,
                    actual: masks.len(),
                });
            }
            for (t, mask) in masks.iter().enumerate() {
                if let Some(dims) = frame_dims {
                    if mask.dim() != dims {
                        return Err(Error::ShapeMismatch {
                            context: "ground-truth mask",
                            expected: dims,
                            actual: mask.dim(),
                        });
                    }
                }
                if mask.iter().any(|&b| b > 1) {
                    return Err(Error::Input(format!("mask {t} has non-binary entries")));
                }
                let on = mask.iter().filter(|&&b| b == 1).count();
                if self.frame_labels[t] == 1 && on == 0 {
                    return Err(Error::Input(format!(
                        "abnormal frame {t} has an empty mask"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.frame_labels.iter().filter(|&&l| l == 1).count();
        (pos, self.frame_labels.len() - pos)
    }
}

/// An ROC curve swept over descending thresholds, with trapezoidal AUC and,
/// where defined, the interpolated equal error rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// Descending; `thresholds[i]` produced `points[i]`. The leading
    /// infinity anchors the curve at (0, 0).
    pub thresholds: Vec<f64>,
    /// `(false positive rate, true positive rate)` per threshold.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
    pub eer: Option<f64>,
}

/// Frame score: the peak of its per-pixel map.
pub fn frame_score(map: &Array2<f64>) -> f64 {
    map.iter().copied().fold(0.0, f64::max)
}

/// Trapezoidal area over integer count points, times `2 * P * N`. Exact in
/// u64, so the division at the end is the only rounding step.
fn twice_area_counts(points: &[(u64, u64)]) -> u64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum()
}

/// Interpolated crossing of FPR = 1 - TPR along the piecewise-linear curve.
fn interpolate_eer(points: &[(f64, f64)]) -> Option<f64> {
    let d = |p: (f64, f64)| p.0 - (1.0 - p.1);
    for w in points.windows(2) {
        let (d0, d1) = (d(w[0]), d(w[1]));
        if d0 == 0.0 {
            return Some(w[0].0);
        }
        if d0 < 0.0 && d1 >= 0.0 {
            let denom = (w[1].0 - w[0].0) + (w[1].1 - w[0].1);
            if denom == 0.0 {
                return Some(w[1].0);
            }
            let s = (1.0 - w[0].1 - w[0].0) / denom;
            return Some(w[0].0 + s * (w[1].0 - w[0].0));
        }
    }
    // Incomplete curves (custom sweeps that never reach the anti-diagonal)
    // have no equal error rate.
    None
}

/// ROC over raw scores: sweep every distinct score as a threshold
/// (predicting positive at `score >= threshold`), descending, so tied scores
/// flip together. Requires both classes.
pub fn roc_auc_eer(scores: &[f64], labels: &[u8]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::DimMismatch {
            context: "roc scores vs labels",
            expected: labels.len(),
            actual: scores.len(),
        });
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::Input(format!("non-finite score {bad}")));
    }
    let p: u64 = labels.iter().filter(|&&l| l == 1).count() as u64;
    let n: u64 = labels.len() as u64 - p;
    if p == 0 || n == 0 {
        return Err(Error::Input(
            "ROC needs both an abnormal and a normal example".into(),
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut count_points: Vec<(u64, u64)> = vec![(0, 0)];
    let mut thresholds = vec![f64::INFINITY];
    let (mut fp, mut tp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        thresholds.push(t);
        count_points.push((fp, tp));
    }

    let auc = twice_area_counts(&count_points) as f64 / (2 * p * n) as f64;
    let points: Vec<(f64, f64)> = count_points
        .iter()
        .map(|&(f, t)| (f as f64 / n as f64, t as f64 / p as f64))
        .collect();
    let eer = interpolate_eer(&points);
    Ok(RocCurve {
        thresholds,
        points,
        auc,
        eer,
    })
}

/// Frame-level evaluation: sweep the continuous per-frame scores.
pub fn frame_level_eval(frame_scores: &[f64], gt: &GroundTruth) -> Result<RocCurve> {
    gt.validate(frame_scores.len(), None)?;
    roc_auc_eer(frame_scores, &gt.frame_labels)
}

/// How each level decides what counts as a true positive.
#[derive(Debug, Clone, Copy, PartialEq)]
enum TpRule {
    /// >= 40% of the frame's ground-truth abnormal pixels detected.
    Coverage,
    /// Coverage, plus at least this fraction of detected pixels must be
    /// true abnormal pixels.
    CoverageAndPrecision(f64),
}

/// Surviving detection mask per frame: threshold the raw maps, label the
/// chunk volume, drop non-persistent components.
fn surviving_masks(
    maps: &[Array2<f64>],
    threshold: f64,
    gamma: usize,
    chunk_len: usize,
) -> Result<Vec<Array2<u8>>> {
    let mut out = Vec::with_capacity(maps.len());
    for chunk in maps.chunks(chunk_len) {
        let errors = ErrorTensor::from_frames(chunk)?;
        let indicator = IndicatorTensor::from_threshold(&errors, threshold);
        let kept = filter_components(connected_components_3d(&indicator), gamma);
        let mask = components_to_indicator(&kept, errors.values.dim());
        for t in 0..chunk.len() {
            out.push(mask.bits.index_axis(ndarray::Axis(0), t).to_owned());
        }
    }
    Ok(out)
}

/// Frame rates at one threshold under the given true-positive rule.
/// Returns integer `(fp, tp)` counts over normal/abnormal frames.
fn rates_at_threshold(
    maps: &[Array2<f64>],
    gt: &GroundTruth,
    masks: &[Array2<u8>],
    threshold: f64,
    gamma: usize,
    chunk_len: usize,
    rule: TpRule,
) -> Result<(u64, u64)> {
    let detected = surviving_masks(maps, threshold, gamma, chunk_len)?;
    let (mut fp, mut tp) = (0u64, 0u64);
    for (t, det) in detected.iter().enumerate() {
        let det_count = det.iter().filter(|&&b| b == 1).count();
        if gt.frame_labels[t] == 0 {
            if det_count > 0 {
                fp += 1;
            }
            continue;
        }
        let mask = &masks[t];
        let mask_count = mask.iter().filter(|&&b| b == 1).count();
        let covered = det
            .iter()
            .zip(mask.iter())
            .filter(|(&d, &m)| d == 1 && m == 1)
            .count();
        // Integer form of covered / mask_count >= 0.4, exact at the boundary.
        let mut is_tp = covered * 10 >= mask_count * 4;
        if let TpRule::CoverageAndPrecision(alpha) = rule {
            let precise = det_count > 0
                && covered as f64 >= alpha * det_count as f64 - 1e-9;
            is_tp = is_tp && precise;
        }
        if is_tp {
            tp += 1;
        }
    }
    Ok((fp, tp))
}

/// Default sweep: evenly spaced quantiles of the pooled map values, plus
/// zero so the loosest threshold detects everything.
fn default_thresholds(maps: &[Array2<f64>], count: usize) -> Vec<f64> {
    let mut values: Vec<f64> = maps.iter().flat_map(|m| m.iter().copied()).collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut thresholds = vec![0.0];
    if !values.is_empty() {
        for k in 0..count {
            let idx = (k * (values.len() - 1)) / count.max(1);
            thresholds.push(values[idx]);
        }
        thresholds.push(values[values.len() - 1]);
    }
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    thresholds
}

fn masked_eval(
    maps: &[Array2<f64>],
    gt: &GroundTruth,
    gamma: usize,
    chunk_len: usize,
    thresholds: Option<&[f64]>,
    rule: TpRule,
    with_eer: bool,
) -> Result<RocCurve> {
    let dims = maps
        .first()
        .map(|m| m.dim())
        .ok_or_else(|| Error::Input("no score maps to evaluate".into()))?;
    gt.validate(maps.len(), Some(dims))?;
    let masks = gt
        .masks
        .as_ref()
        .ok_or_else(|| Error::Input("pixel-level evaluation needs ground-truth masks".into()))?;
    if chunk_len == 0 || gamma == 0 {
        return Err(Error::Config("gamma and chunk_len must be >= 1".into()));
    }
    let (p, n) = gt.class_counts();
    if p == 0 || n == 0 {
        return Err(Error::Input(
            "ROC needs both an abnormal and a normal frame".into(),
        ));
    }

    let mut sweep = match thresholds {
        Some(t) => t.to_vec(),
        None => default_thresholds(maps, 64),
    };
    sweep.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sweep.dedup();

    let counts: Vec<(u64, u64)> = par_map(&sweep, |&t| {
        rates_at_threshold(maps, gt, masks, t, gamma, chunk_len, rule)
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let mut thresholds = vec![f64::INFINITY];
    thresholds.extend(sweep);
    let mut points = vec![(0.0, 0.0)];
    points.extend(
        counts
            .iter()
            .map(|&(fp, tp)| (fp as f64 / n as f64, tp as f64 / p as f64)),
    );

    // Trapezoid over the achieved curve, in threshold order; no
    // extrapolation past the last point.
    let auc = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum();
    let eer = if with_eer {
        interpolate_eer(&points)
    } else {
        None
    };
    Ok(RocCurve {
        thresholds,
        points,
        auc,
        eer,
    })
}

/// Pixel-level evaluation: a frame is a true positive at a threshold when
/// the persistence-filtered detection covers at least 40% of its mask; any
/// detection in a normal frame is a false positive.
pub fn pixel_level_eval(
    maps: &[Array2<f64>],
    gt: &GroundTruth,
    gamma: usize,
    chunk_len: usize,
    thresholds: Option<&[f64]>,
) -> Result<RocCurve> {
    masked_eval(maps, gt, gamma, chunk_len, thresholds, TpRule::Coverage, true)
}

/// Dual-criterion evaluation: coverage as at pixel level, and additionally
/// at least `alpha` of the detected pixels must be true abnormal pixels.
/// The curve may top out below (1, 1); no equal error rate is reported.
pub fn dual_pixel_eval(
    maps: &[Array2<f64>],
    gt: &GroundTruth,
    gamma: usize,
    chunk_len: usize,
    alpha: f64,
    thresholds: Option<&[f64]>,
) -> Result<RocCurve> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha {alpha} outside [0, 1]")));
    }
    masked_eval(
        maps,
        gt,
        gamma,
        chunk_len,
        thresholds,
        TpRule::CoverageAndPrecision(alpha),
        false,
    )
}
