//! Run configuration: one flat struct covering geometry, model sizes,
//! training, thresholding, and streaming, with a `key = value` text format
//! for the CLI.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::patch::ScaleConfig;
use crate::rbm::TrainConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Scale pyramid, largest first.
    pub scales: Vec<f64>,
    pub patch_h: usize,
    pub patch_w: usize,
    pub overlap: f64,
    /// Frames are resized to this shape before any processing.
    pub resize_h: usize,
    pub resize_w: usize,
    /// Hidden units of the clustering model; clusters are its binary codes,
    /// so at most `2^cluster_hidden` regions per scale.
    pub cluster_hidden: usize,
    /// Hidden units of each per-region scoring model.
    pub detect_hidden: usize,
    pub learning_rate: f64,
    pub cd_steps: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub init_weight_std: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub persistent: bool,
    /// Per-pixel score threshold for the abnormality indicator.
    pub beta: f64,
    /// Minimum consecutive-frame persistence for a detected event.
    pub gamma: usize,
    /// Frames per processing chunk in detection.
    pub chunk_len: usize,
    /// Extra training passes per chunk when adapting online.
    pub update_epochs: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scales: vec![1.0, 0.5, 0.25],
            patch_h: 12,
            patch_w: 18,
            overlap: 0.5,
            resize_h: 240,
            resize_w: 360,
            cluster_hidden: 4,
            detect_hidden: 100,
            learning_rate: 0.1,
            cd_steps: 1,
            epochs: 50,
            batch_size: 64,
            init_weight_std: 0.01,
            momentum: 0.0,
            weight_decay: 0.0,
            persistent: false,
            beta: 0.003,
            gamma: 10,
            chunk_len: 20,
            update_epochs: 20,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.scale_config().validate()?;
        self.train_config().validate()?;
        if self.resize_h < self.patch_h || self.resize_w < self.patch_w {
            return Err(Error::Config(format!(
                "resize {}x{} smaller than patch {}x{}",
                self.resize_h, self.resize_w, self.patch_h, self.patch_w
            )));
        }
        if self.cluster_hidden == 0 || self.cluster_hidden > 16 {
            return Err(Error::Config(format!(
                "cluster_hidden {} outside 1..=16",
                self.cluster_hidden
            )));
        }
        if self.detect_hidden == 0 {
            return Err(Error::Config("detect_hidden must be positive".into()));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::Config(format!("beta {} must be >= 0", self.beta)));
        }
        if self.gamma == 0 {
            return Err(Error::Config("gamma must be >= 1".into()));
        }
        if self.chunk_len == 0 {
            return Err(Error::Config("chunk_len must be >= 1".into()));
        }
        Ok(())
    }

    pub fn scale_config(&self) -> ScaleConfig {
        ScaleConfig {
            ratios: self.scales.clone(),
            patch_h: self.patch_h,
            patch_w: self.patch_w,
            overlap: self.overlap,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            cd_steps: self.cd_steps,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            init_weight_std: self.init_weight_std,
            persistent: self.persistent,
            momentum: self.momentum,
            weight_decay: self.weight_decay,
        }
    }

    /// Parse `key = value` lines; `#` starts a comment, blank lines are
    /// skipped, unknown keys are errors. Keys not mentioned keep defaults.
    pub fn from_str_cfg(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Apply one `key`/`value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
        }
        match key {
            "scales" => {
                self.scales = value
                    .split(',')
                    .map(|s| parse("scales", s.trim()))
                    .collect::<Result<_>>()?;
            }
            "patch_h" => self.patch_h = parse(key, value)?,
            "patch_w" => self.patch_w = parse(key, value)?,
            "overlap" => self.overlap = parse(key, value)?,
            "resize_h" => self.resize_h = parse(key, value)?,
            "resize_w" => self.resize_w = parse(key, value)?,
            "cluster_hidden" => self.cluster_hidden = parse(key, value)?,
            "detect_hidden" => self.detect_hidden = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "cd_steps" => self.cd_steps = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "init_weight_std" => self.init_weight_std = parse(key, value)?,
            "momentum" => self.momentum = parse(key, value)?,
            "weight_decay" => self.weight_decay = parse(key, value)?,
            "persistent" => self.persistent = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "chunk_len" => self.chunk_len = parse(key, value)?,
            "update_epochs" => self.update_epochs = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Emit every key in a fixed order. `{f64}` Display round-trips exactly
    /// through parse, so emit-then-parse is the identity.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let scales: Vec<String> = self.scales.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "scales = {}", scales.join(", "));
        let _ = writeln!(out, "patch_h = {}", self.patch_h);
        let _ = writeln!(out, "patch_w = {}", self.patch_w);
        let _ = writeln!(out, "overlap = {}", self.overlap);
        let _ = writeln!(out, "resize_h = {}", self.resize_h);
        let _ = writeln!(out, "resize_w = {}", self.resize_w);
        let _ = writeln!(out, "cluster_hidden = {}", self.cluster_hidden);
        let _ = writeln!(out, "detect_hidden = {}", self.detect_hidden);
        let _ = writeln!(out, "learning_rate = {}", self.learning_rate);
        let _ = writeln!(out, "cd_steps = {}", self.cd_steps);
        let _ = writeln!(out, "epochs = {}", self.epochs);
        let _ = writeln!(out, "batch_size = {}", self.batch_size);
        let _ = writeln!(out, "init_weight_std = {}", self.init_weight_std);
        let _ = writeln!(out, "momentum = {}", self.momentum);
        let _ = writeln!(out, "weight_decay = {}", self.weight_decay);
        let _ = writeln!(out, "persistent = {}", self.persistent);
        let _ = writeln!(out, "beta = {}", self.beta);
        let _ = writeln!(out, "gamma = {}", self.gamma);
        let _ = writeln!(out, "chunk_len = {}", self.chunk_len);
        let _ = writeln!(out, "update_epochs = {}", self.update_epochs);
        let _ = writeln!(out, "seed = {}", self.seed);
        out
    }
}
