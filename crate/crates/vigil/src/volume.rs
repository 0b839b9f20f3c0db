//! Spatiotemporal post-processing: binarize per-pixel scores over a chunk of
//! frames, find 26-connected 3D components, and keep only events that persist
//! long enough in time.

use std::collections::VecDeque;

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};

/// Per-pixel scores over a chunk: `(frames, height, width)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTensor {
    pub values: Array3<f64>,
}

impl ErrorTensor {
    pub fn from_frames(frames: &[Array2<f64>]) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::Input("error tensor needs at least one frame".into()))?;
        let (h, w) = first.dim();
        let mut values = Array3::zeros((frames.len(), h, w));
        for (t, frame) in frames.iter().enumerate() {
            if frame.dim() != (h, w) {
                return Err(Error::ShapeMismatch {
                    context: "error tensor frame",
                    expected: (h, w),
                    actual: frame.dim(),
                });
            }
            values.index_axis_mut(ndarray::Axis(0), t).assign(frame);
        }
        Ok(Self { values })
    }
}

/// Binary abnormality volume: 1 where the score reached the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorTensor {
    pub bits: Array3<u8>,
}

impl IndicatorTensor {
    /// Threshold inclusively: a score exactly at `beta` counts as abnormal.
    pub fn from_threshold(errors: &ErrorTensor, beta: f64) -> Self {
        Self {
            bits: errors.values.mapv(|e| u8::from(e >= beta)),
        }
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }
}

/// One connected component: the voxels it covers, as `(t, r, c)` triples in
/// discovery order.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub voxels: Vec<(usize, usize, usize)>,
}

impl Component {
    /// Longest run of consecutive frame indices touched by the component.
    /// A component spanning frames {0,1,2,5,6} has a longest run of 3.
    pub fn max_consecutive_frames(&self) -> usize {
        let mut ts: Vec<usize> = self.voxels.iter().map(|&(t, _, _)| t).collect();
        ts.sort_unstable();
        ts.dedup();
        let mut best = 0usize;
        let mut run = 0usize;
        let mut prev: Option<usize> = None;
        for t in ts {
            run = match prev {
                Some(p) if t == p + 1 => run + 1,
                _ => 1,
            };
            best = best.max(run);
            prev = Some(t);
        }
        best
    }
}

/// Label 26-connected components of the binary volume by breadth-first
/// search in a fixed scan order, so output is deterministic.
pub fn connected_components_3d(indicator: &IndicatorTensor) -> Vec<Component> {
    let (nt, nh, nw) = indicator.bits.dim();
    let mut visited = Array3::<u8>::zeros((nt, nh, nw));
    let mut components = Vec::new();
    for t0 in 0..nt {
        for r0 in 0..nh {
            for c0 in 0..nw {
                if indicator.bits[[t0, r0, c0]] == 0 || visited[[t0, r0, c0]] == 1 {
                    continue;
                }
                let mut voxels = Vec::new();
                let mut queue = VecDeque::new();
                visited[[t0, r0, c0]] = 1;
                queue.push_back((t0, r0, c0));
                while let Some((t, r, c)) = queue.pop_front() {
                    voxels.push((t, r, c));
                    for dt in -1i64..=1 {
                        for dr in -1i64..=1 {
                            for dc in -1i64..=1 {
                                if dt == 0 && dr == 0 && dc == 0 {
                                    continue;
                                }
                                let (nt2, nr, nc) =
                                    (t as i64 + dt, r as i64 + dr, c as i64 + dc);
                                if nt2 < 0
                                    || nr < 0
                                    || nc < 0
                                    || nt2 >= nt as i64
                                    || nr >= nh as i64
                                    || nc >= nw as i64
                                {
                                    continue;
                                }
                                let idx = [nt2 as usize, nr as usize, nc as usize];
                                if indicator.bits[idx] == 1 && visited[idx] == 0 {
                                    visited[idx] = 1;
                                    queue.push_back((idx[0], idx[1], idx[2]));
                                }
                            }
                        }
                    }
                }
                components.push(Component { voxels });
            }
        }
    }
    components
}

/// Keep components that persist for at least `gamma` consecutive frames.
pub fn filter_components(components: Vec<Component>, gamma: usize) -> Vec<Component> {
    components
        .into_iter()
        .filter(|c| c.max_consecutive_frames() >= gamma)
        .collect()
}

/// Rebuild a binary volume holding only the given components.
pub fn components_to_indicator(
    components: &[Component],
    shape: (usize, usize, usize),
) -> IndicatorTensor {
    let mut bits = Array3::zeros(shape);
    for comp in components {
        for &(t, r, c) in &comp.voxels {
            bits[[t, r, c]] = 1;
        }
    }
    IndicatorTensor { bits }
}

/// Zero out scores everywhere the surviving-component mask is off.
pub fn masked_scores(errors: &ErrorTensor, mask: &IndicatorTensor) -> Result<ErrorTensor> {
    if errors.values.dim() != mask.bits.dim() {
        return Err(Error::Input(format!(
            "score volume {:?} does not match mask {:?}",
            errors.values.dim(),
            mask.bits.dim()
        )));
    }
    let mut values = errors.values.clone();
    values.zip_mut_with(&mask.bits, |v, &b| {
        if b == 0 {
            *v = 0.0;
        }
    });
    Ok(ErrorTensor { values })
}

/// Full chunk pipeline: threshold, label, persistence-filter, mask.
pub fn persistence_filter(errors: &ErrorTensor, beta: f64, gamma: usize) -> Result<ErrorTensor> {
    let indicator = IndicatorTensor::from_threshold(errors, beta);
    let kept = filter_components(connected_components_3d(&indicator), gamma);
    let mask = components_to_indicator(&kept, errors.values.dim());
    masked_scores(errors, &mask)
}
