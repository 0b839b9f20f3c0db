//! Exact quantities for small RBMs by enumeration: partition function,
//! log-likelihood, model expectations and the exact gradient. These exist to
//! test the sampled estimators against ground truth; everything here is
//! guarded to `M + K <= 24` states.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;

use super::{data_stats, gradient_from_stats, sigmoid, RbmGradient, RbmParams, SufficientStats};
use crate::error::{Error, Result};

/// Hard cap on `M + K` for full-state enumeration.
pub const ENUM_GUARD: usize = 24;

fn check_guard(params: &RbmParams) -> Result<()> {
    let size = params.num_visible() + params.num_hidden();
    if size > ENUM_GUARD {
        return Err(Error::EnumGuard {
            size,
            limit: ENUM_GUARD,
        });
    }
    Ok(())
}

fn bits_to_vec(code: u32, len: usize) -> Array1<f64> {
    Array1::from_shape_fn(len, |i| ((code >> i) & 1) as f64)
}

/// `log Z = log sum_{v,h} exp(-E(v,h))` over every joint configuration,
/// accumulated in the log domain with a running log-sum-exp.
pub fn exact_partition(params: &RbmParams) -> Result<f64> {
    check_guard(params)?;
    let m = params.num_visible();
    let k = params.num_hidden();
    let mut max = f64::NEG_INFINITY;
    let mut terms = Vec::with_capacity(1usize << (m + k));
    for v_code in 0..(1u32 << m) {
        let v = bits_to_vec(v_code, m);
        let v_proj = v.dot(&params.weights);
        let v_bias = params.visible_bias.dot(&v);
        for h_code in 0..(1u32 << k) {
            let h = bits_to_vec(h_code, k);
            let neg_energy = v_bias + params.hidden_bias.dot(&h) + v_proj.dot(&h);
            max = max.max(neg_energy);
            terms.push(neg_energy);
        }
    }
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    Ok(max + sum.ln())
}

/// Free energy `F(v) = -a·v - sum_j softplus(b_j + v·w_{.j})`, i.e. the
/// hidden units summed out analytically.
pub fn free_energy(v: ArrayView1<f64>, params: &RbmParams) -> Result<f64> {
    if v.len() != params.num_visible() {
        return Err(Error::DimMismatch {
            context: "free_energy",
            expected: params.num_visible(),
            actual: v.len(),
        });
    }
    let act = v.dot(&params.weights) + &params.hidden_bias;
    let hidden_term: f64 = act.iter().map(|&x| softplus(x)).sum();
    Ok(-params.visible_bias.dot(&v) - hidden_term)
}

#[inline]
fn softplus(x: f64) -> f64 {
    // ln(1 + e^x) without overflow.
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `log p(v) = -F(v) - log Z`.
pub fn exact_log_likelihood(v: ArrayView1<f64>, params: &RbmParams) -> Result<f64> {
    let log_z = exact_partition(params)?;
    Ok(-free_energy(v, params)? - log_z)
}

/// Mean `log p(v)` over the rows of `batch`, computing `log Z` once.
pub fn exact_mean_log_likelihood(batch: ArrayView2<f64>, params: &RbmParams) -> Result<f64> {
    if batch.nrows() == 0 {
        return Err(Error::Input("empty batch".into()));
    }
    let log_z = exact_partition(params)?;
    let mut total = 0.0;
    for row in batch.rows() {
        total += -free_energy(row, params)? - log_z;
    }
    Ok(total / batch.nrows() as f64)
}

/// Exact model expectations `<v>`, `<p(h|v)>`, `<v p(h|v)'>` under the
/// model distribution, enumerating visible states and weighting each by
/// `p(v) = exp(-F(v)) / Z`.
pub fn model_stats_exact(params: &RbmParams) -> Result<SufficientStats> {
    check_guard(params)?;
    let m = params.num_visible();
    let k = params.num_hidden();
    let log_z = exact_partition(params)?;
    let mut visible = Array1::zeros(m);
    let mut hidden = Array1::zeros(k);
    let mut joint = Array2::zeros((m, k));
    for v_code in 0..(1u32 << m) {
        let v = bits_to_vec(v_code, m);
        let p = (-free_energy(v.view(), params)? - log_z).exp();
        let h_probs = (v.dot(&params.weights) + &params.hidden_bias).mapv(sigmoid);
        visible.scaled_add(p, &v);
        hidden.scaled_add(p, &h_probs);
        for i in 0..m {
            if v[i] != 0.0 {
                for j in 0..k {
                    joint[[i, j]] += p * v[i] * h_probs[j];
                }
            }
        }
    }
    Ok(SufficientStats {
        visible,
        hidden,
        joint,
    })
}

/// Exact `grad log p(v)`: analytic positive phase minus the enumerated model
/// expectation. Shares the positive-phase path with `cd_gradient`.
pub fn exact_gradient(v: ArrayView1<f64>, params: &RbmParams) -> Result<RbmGradient> {
    let batch = v
        .to_owned()
        .into_shape_with_order((1, v.len()))
        .expect("row reshape");
    let positive = data_stats(batch.view(), params)?;
    let negative = model_stats_exact(params)?;
    Ok(gradient_from_stats(&positive, &negative))
}

/// Draw `n` exact samples of the visible layer by enumerating the marginal
/// `p(v)` and inverting its CDF. Tiny models only.
pub fn sample_visible_exact(
    params: &RbmParams,
    n: usize,
    rng: &mut impl Rng,
) -> Result<Array2<f64>> {
    check_guard(params)?;
    let m = params.num_visible();
    let log_z = exact_partition(params)?;
    let probs: Vec<f64> = (0..(1u32 << m))
        .map(|code| {
            let v = bits_to_vec(code, m);
            (-free_energy(v.view(), params).unwrap() - log_z).exp()
        })
        .collect();
    let mut samples = Array2::zeros((n, m));
    for mut row in samples.rows_mut() {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = (1u32 << m) - 1;
        for (code, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                chosen = code as u32;
                break;
            }
        }
        row.assign(&bits_to_vec(chosen, m));
    }
    Ok(samples)
}
