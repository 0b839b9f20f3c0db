//! Binary restricted Boltzmann machine: energy, factorized conditionals,
//! Gibbs sampling, contrastive-divergence training and mean-field
//! reconstruction.
//!
//! The model is a bipartite network of `M` visible and `K` hidden units with
//! energy `E(v,h) = -(a·v + b·h + v'Wh)`. Visible inputs are accepted as real
//! values in `[0,1]` (normalized pixels) and treated as Bernoulli means in the
//! positive phase; hidden units are always binary.

pub mod exact;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Network parameters: visible biases `a`, hidden biases `b` and the
/// `M x K` weight matrix `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmParams {
    pub visible_bias: Array1<f64>,
    pub hidden_bias: Array1<f64>,
    pub weights: Array2<f64>,
}

impl RbmParams {
    pub fn new(
        visible_bias: Array1<f64>,
        hidden_bias: Array1<f64>,
        weights: Array2<f64>,
    ) -> Result<Self> {
        if weights.nrows() != visible_bias.len() {
            return Err(Error::DimMismatch {
                context: "RbmParams weight rows vs visible bias",
                expected: visible_bias.len(),
                actual: weights.nrows(),
            });
        }
        if weights.ncols() != hidden_bias.len() {
            return Err(Error::DimMismatch {
                context: "RbmParams weight cols vs hidden bias",
                expected: hidden_bias.len(),
                actual: weights.ncols(),
            });
        }
        Ok(Self {
            visible_bias,
            hidden_bias,
            weights,
        })
    }

    /// All-zero parameters for the given layer sizes.
    pub fn zeros(num_visible: usize, num_hidden: usize) -> Self {
        Self {
            visible_bias: Array1::zeros(num_visible),
            hidden_bias: Array1::zeros(num_hidden),
            weights: Array2::zeros((num_visible, num_hidden)),
        }
    }

    /// Fresh parameters: weights drawn from `Normal(0, std^2)`, biases zero.
    pub fn init(num_visible: usize, num_hidden: usize, std: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut params = Self::zeros(num_visible, num_hidden);
        if std > 0.0 {
            let normal = Normal::new(0.0, std).expect("std must be finite and non-negative");
            params.weights = Array2::from_shape_fn((num_visible, num_hidden), |_| {
                normal.sample(rng)
            });
        }
        params
    }

    pub fn num_visible(&self) -> usize {
        self.visible_bias.len()
    }

    pub fn num_hidden(&self) -> usize {
        self.hidden_bias.len()
    }

    pub fn is_finite(&self) -> bool {
        self.visible_bias.iter().all(|x| x.is_finite())
            && self.hidden_bias.iter().all(|x| x.is_finite())
            && self.weights.iter().all(|x| x.is_finite())
    }

    fn check_visible(&self, len: usize, context: &'static str) -> Result<()> {
        if len != self.num_visible() {
            return Err(Error::DimMismatch {
                context,
                expected: self.num_visible(),
                actual: len,
            });
        }
        Ok(())
    }

    fn check_hidden(&self, len: usize, context: &'static str) -> Result<()> {
        if len != self.num_hidden() {
            return Err(Error::DimMismatch {
                context,
                expected: self.num_hidden(),
                actual: len,
            });
        }
        Ok(())
    }

    /// Energy of a joint configuration: `E(v,h) = -(a·v + b·h + v'Wh)`.
    pub fn energy(&self, v: ArrayView1<f64>, h: ArrayView1<f64>) -> Result<f64> {
        self.check_visible(v.len(), "energy visible")?;
        self.check_hidden(h.len(), "energy hidden")?;
        let interaction = v.dot(&self.weights).dot(&h);
        Ok(-(self.visible_bias.dot(&v) + self.hidden_bias.dot(&h) + interaction))
    }

    /// Hidden posterior `p(h_j = 1 | v) = sigmoid(b_j + v·w_{.j})`.
    pub fn hidden_conditional(&self, v: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check_visible(v.len(), "hidden_conditional")?;
        let mut act = v.dot(&self.weights);
        act += &self.hidden_bias;
        Ok(act.mapv(sigmoid))
    }

    /// Visible conditional `p(v_i = 1 | h) = sigmoid(a_i + w_{i.}·h)`.
    pub fn visible_conditional(&self, h: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check_hidden(h.len(), "visible_conditional")?;
        let mut act = self.weights.dot(&h);
        act += &self.visible_bias;
        Ok(act.mapv(sigmoid))
    }

    /// Hidden posteriors for a batch of visible rows (`B x M` in, `B x K` out).
    pub fn hidden_probs_batch(&self, v: ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(v.ncols(), self.num_visible(), "batch visible width");
        let mut act = v.dot(&self.weights);
        act += &self.hidden_bias;
        act.mapv_inplace(sigmoid);
        act
    }

    /// Visible conditionals for a batch of hidden rows (`B x K` in, `B x M` out).
    pub fn visible_probs_batch(&self, h: ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(h.ncols(), self.num_hidden(), "batch hidden width");
        let mut act = h.dot(&self.weights.t());
        act += &self.visible_bias;
        act.mapv_inplace(sigmoid);
        act
    }

    /// Deterministic mean-field reconstruction: propagate `v` to hidden
    /// probabilities, then map those probabilities straight back to the
    /// visible layer without sampling.
    pub fn reconstruct(&self, v: ArrayView1<f64>) -> Result<Array1<f64>> {
        let hidden = self.hidden_conditional(v)?;
        self.visible_conditional(hidden.view())
    }

    /// Sampling reconstruction: binary hidden and visible draws at both steps.
    pub fn reconstruct_sampled(
        &self,
        v: ArrayView1<f64>,
        rng: &mut impl Rng,
    ) -> Result<Array1<f64>> {
        let hidden = self.hidden_conditional(v)?;
        let h_sample = sample_bernoulli(hidden.view(), rng)?;
        let visible = self.visible_conditional(h_sample.view())?;
        sample_bernoulli(visible.view(), rng)
    }

    /// Mean-field reconstructions for a batch of rows.
    pub fn reconstruct_batch(&self, v: ArrayView2<f64>) -> Array2<f64> {
        let hidden = self.hidden_probs_batch(v);
        self.visible_probs_batch(hidden.view())
    }
}

/// Reconstruction mode used when scoring patches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reconstruction {
    /// Deterministic conditional probabilities at both layers (default).
    MeanField,
    /// Binary samples at both layers.
    Sampled,
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Draw independent Bernoulli variables, one per probability entry.
/// Entry `k` is 1.0 with probability `probs[k]`; draws consume the RNG in
/// entry order, so results are reproducible for a fixed seed.
pub fn sample_bernoulli(probs: ArrayView1<f64>, rng: &mut impl Rng) -> Result<Array1<f64>> {
    for &p in probs.iter() {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Input(format!(
                "Bernoulli probability {p} outside [0, 1]"
            )));
        }
    }
    Ok(probs.mapv(|p| if rng.random::<f64>() < p { 1.0 } else { 0.0 }))
}

fn sample_bernoulli_batch_inplace(probs: &mut Array2<f64>, rng: &mut impl Rng) {
    // Row-major draw order.
    probs.mapv_inplace(|p| if rng.random::<f64>() < p { 1.0 } else { 0.0 });
}

/// Alternate `h ~ p(h|v)` then `v ~ p(v|h)` for `steps` rounds starting from
/// `v0`. Returns the final visible sample together with the hidden
/// conditional evaluated at it.
pub fn gibbs_chain(
    v0: ArrayView1<f64>,
    steps: usize,
    params: &RbmParams,
    rng: &mut impl Rng,
) -> Result<(Array1<f64>, Array1<f64>)> {
    if steps == 0 {
        return Err(Error::Input("gibbs_chain requires steps >= 1".into()));
    }
    params.check_visible(v0.len(), "gibbs_chain")?;
    let mut v = v0.to_owned();
    for _ in 0..steps {
        let h_probs = params.hidden_conditional(v.view())?;
        let h = sample_bernoulli(h_probs.view(), rng)?;
        let v_probs = params.visible_conditional(h.view())?;
        v = sample_bernoulli(v_probs.view(), rng)?;
    }
    let h_probs = params.hidden_conditional(v.view())?;
    Ok((v, h_probs))
}

/// Advance a batch of chains `steps` Gibbs rounds in place. Returns the
/// hidden conditionals at the final visible states.
fn gibbs_batch(chains: &mut Array2<f64>, steps: usize, params: &RbmParams, rng: &mut impl Rng) -> Array2<f64> {
    for _ in 0..steps {
        let mut h = params.hidden_probs_batch(chains.view());
        sample_bernoulli_batch_inplace(&mut h, rng);
        let mut v = params.visible_probs_batch(h.view());
        sample_bernoulli_batch_inplace(&mut v, rng);
        *chains = v;
    }
    params.hidden_probs_batch(chains.view())
}

/// First moments of a set of (visible, hidden-probability) pairs:
/// `<v>`, `<p(h|v)>` and the joint `<v p(h|v)'>`, averaged over the batch.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    pub visible: Array1<f64>,
    pub hidden: Array1<f64>,
    pub joint: Array2<f64>,
}

impl SufficientStats {
    fn from_batch(v: ArrayView2<f64>, h_probs: ArrayView2<f64>) -> Self {
        let n = v.nrows() as f64;
        Self {
            visible: v.sum_axis(Axis(0)) / n,
            hidden: h_probs.sum_axis(Axis(0)) / n,
            joint: v.t().dot(&h_probs) / n,
        }
    }
}

/// Data expectation (positive phase). The hidden term is analytic: the
/// posterior probabilities at the observed rows, no sampling involved.
pub fn data_stats(batch: ArrayView2<f64>, params: &RbmParams) -> Result<SufficientStats> {
    if batch.nrows() == 0 {
        return Err(Error::Input("empty batch".into()));
    }
    params.check_visible(batch.ncols(), "data_stats")?;
    let h_probs = params.hidden_probs_batch(batch);
    Ok(SufficientStats::from_batch(batch, h_probs.view()))
}

/// Gradient of the log-likelihood: positive minus negative phase.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmGradient {
    pub d_visible_bias: Array1<f64>,
    pub d_hidden_bias: Array1<f64>,
    pub d_weights: Array2<f64>,
}

impl RbmGradient {
    pub fn zeros_like(params: &RbmParams) -> Self {
        Self {
            d_visible_bias: Array1::zeros(params.num_visible()),
            d_hidden_bias: Array1::zeros(params.num_hidden()),
            d_weights: Array2::zeros(params.weights.dim()),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.d_visible_bias
            .iter()
            .chain(self.d_hidden_bias.iter())
            .chain(self.d_weights.iter())
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

/// Difference of two expectations as a gradient. Shared by the CD estimator
/// and the exact-enumeration oracle so both take the same positive-phase path.
pub fn gradient_from_stats(positive: &SufficientStats, negative: &SufficientStats) -> RbmGradient {
    RbmGradient {
        d_visible_bias: &positive.visible - &negative.visible,
        d_hidden_bias: &positive.hidden - &negative.hidden,
        d_weights: &positive.joint - &negative.joint,
    }
}

/// CD-m gradient estimate for one minibatch.
///
/// Positive phase: analytic hidden posteriors at the data. Negative phase:
/// chain states after `cd_steps` Gibbs rounds, started from the data (CD) or
/// advanced from the provided persistent chains (PCD). The persistent chains
/// are updated in place when given.
pub fn cd_gradient(
    batch: ArrayView2<f64>,
    params: &RbmParams,
    cd_steps: usize,
    rng: &mut impl Rng,
    persistent: Option<&mut Array2<f64>>,
) -> Result<RbmGradient> {
    if cd_steps == 0 {
        return Err(Error::Input("cd_gradient requires cd_steps >= 1".into()));
    }
    let positive = data_stats(batch, params)?;
    let negative = match persistent {
        Some(chains) => {
            params.check_visible(chains.ncols(), "cd_gradient persistent chains")?;
            let h_probs = gibbs_batch(chains, cd_steps, params, rng);
            SufficientStats::from_batch(chains.view(), h_probs.view())
        }
        None => {
            let mut chains = batch.to_owned();
            let h_probs = gibbs_batch(&mut chains, cd_steps, params, rng);
            SufficientStats::from_batch(chains.view(), h_probs.view())
        }
    };
    Ok(gradient_from_stats(&positive, &negative))
}

/// Gradient-ascent step `psi <- psi + eta * grad`, returning fresh parameters.
pub fn apply_update(params: &RbmParams, gradient: &RbmGradient, learning_rate: f64) -> Result<RbmParams> {
    if learning_rate <= 0.0 {
        return Err(Error::Config(format!(
            "learning rate must be positive, got {learning_rate}"
        )));
    }
    let mut updated = params.clone();
    apply_update_mut(&mut updated, gradient, learning_rate)?;
    Ok(updated)
}

fn apply_update_mut(params: &mut RbmParams, gradient: &RbmGradient, learning_rate: f64) -> Result<()> {
    params
        .visible_bias
        .scaled_add(learning_rate, &gradient.d_visible_bias);
    params
        .hidden_bias
        .scaled_add(learning_rate, &gradient.d_hidden_bias);
    params.weights.scaled_add(learning_rate, &gradient.d_weights);
    if !params.is_finite() {
        return Err(Error::NonFinite("parameter update"));
    }
    Ok(())
}

/// Hyperparameters for CD training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Learning rate `eta`.
    pub learning_rate: f64,
    /// Gibbs steps `m` per gradient estimate.
    pub cd_steps: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Std of the Normal(0, std^2) weight initialization.
    pub init_weight_std: f64,
    /// Persistent chains (PCD) instead of data-restarted chains.
    pub persistent: bool,
    /// Momentum on the gradient; 0 disables it.
    pub momentum: f64,
    /// L2 weight decay on W; 0 disables it.
    pub weight_decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            cd_steps: 1,
            epochs: 50,
            batch_size: 64,
            seed: 0,
            init_weight_std: 0.01,
            persistent: false,
            momentum: 0.0,
            weight_decay: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let lr_positive = self.learning_rate.is_finite() && self.learning_rate > 0.0;
        if !lr_positive {
            return Err(Error::Config(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.cd_steps == 0 {
            return Err(Error::Config("cd_steps must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.init_weight_std < 0.0 {
            return Err(Error::Config("init_weight_std must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("momentum must be in [0, 1)".into()));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::Config("weight_decay must be >= 0".into()));
        }
        Ok(())
    }
}

/// Minibatch state that persists across epochs within one training run.
struct TrainState {
    velocity: RbmGradient,
    chains: Option<Array2<f64>>,
}

/// Train a fresh RBM on `patches` (rows of length M, values in [0,1]).
/// Initialization and every stochastic choice derive from `cfg.seed`, so a
/// repeated run is bitwise identical.
pub fn train(patches: ArrayView2<f64>, num_hidden: usize, cfg: &TrainConfig) -> Result<RbmParams> {
    cfg.validate()?;
    check_patch_matrix(patches)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = RbmParams::init(patches.ncols(), num_hidden, cfg.init_weight_std, &mut rng);
    run_epochs(&mut params, patches, cfg.epochs, cfg, &mut rng)?;
    Ok(params)
}

/// Continue training existing parameters for `epochs` passes. Used by the
/// streaming updates, which reuse the caller's RNG stream.
pub fn train_more(
    params: &mut RbmParams,
    patches: ArrayView2<f64>,
    epochs: usize,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    cfg.validate()?;
    check_patch_matrix(patches)?;
    params.check_visible(patches.ncols(), "train_more")?;
    run_epochs(params, patches, epochs, cfg, rng)
}

fn run_epochs(
    params: &mut RbmParams,
    patches: ArrayView2<f64>,
    epochs: usize,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let n = patches.nrows();
    let mut state = TrainState {
        velocity: RbmGradient::zeros_like(params),
        chains: None,
    };
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..epochs {
        order.shuffle(rng);
        for chunk in order.chunks(cfg.batch_size) {
            let mut batch = Array2::zeros((chunk.len(), patches.ncols()));
            for (dst, &src) in chunk.iter().enumerate() {
                batch.row_mut(dst).assign(&patches.row(src));
            }
            step(params, batch.view(), cfg, rng, &mut state)?;
        }
    }
    Ok(())
}

fn step(
    params: &mut RbmParams,
    batch: ArrayView2<f64>,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
    state: &mut TrainState,
) -> Result<()> {
    if cfg.persistent && state.chains.is_none() {
        // Fantasy particles start at the first minibatch and are never reset.
        state.chains = Some(batch.to_owned());
    }
    let mut gradient = cd_gradient(batch, params, cfg.cd_steps, rng, state.chains.as_mut())?;
    if cfg.weight_decay > 0.0 {
        gradient
            .d_weights
            .scaled_add(-cfg.weight_decay, &params.weights);
    }
    if cfg.momentum > 0.0 {
        state.velocity.d_visible_bias *= cfg.momentum;
        state.velocity.d_visible_bias += &gradient.d_visible_bias;
        state.velocity.d_hidden_bias *= cfg.momentum;
        state.velocity.d_hidden_bias += &gradient.d_hidden_bias;
        state.velocity.d_weights *= cfg.momentum;
        state.velocity.d_weights += &gradient.d_weights;
        apply_update_mut(params, &state.velocity, cfg.learning_rate)
    } else {
        apply_update_mut(params, &gradient, cfg.learning_rate)
    }
}

fn check_patch_matrix(patches: ArrayView2<f64>) -> Result<()> {
    if patches.nrows() == 0 {
        return Err(Error::Input("empty training set".into()));
    }
    for &x in patches.iter() {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Input(format!(
                "training value {x} outside [0, 1]"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;
