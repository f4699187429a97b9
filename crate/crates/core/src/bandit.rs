//! Epsilon-greedy bandits over tile-coded log rates, and the ensemble that
//! samples from one random member while training all of them.
//!
//! A bandit enumerates candidate arms on a fine base grid of width `res` over
//! `[l, r]`. Arm weights are the average, across the bandit's random tile
//! codings, of the value of the tile covering each base tile. Every coding's
//! offset and width is an integer multiple of `res`, so each base tile lies in
//! exactly one tile of every coding.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reward::{immediate_reward, ErrorVector, TransformConfig};
use crate::tilecoding::TileCoding;

/// Width choices for the random codings, in base tiles (0.18 to 0.39 at a
/// base width of 0.03).
pub const WIDTH_UNITS: std::ops::RangeInclusive<usize> = 6..=13;
/// Offset choices for the random codings, in base tiles (0 to 0.15).
pub const OFFSET_UNITS: std::ops::RangeInclusive<usize> = 0..=5;

/// Linear annealing of the exploration rate over the first generations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub anneal_generations: usize,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self { start: 1.0, end: 0.01, anneal_generations: 5 }
    }
}

impl EpsilonSchedule {
    pub fn at(&self, generation: usize) -> f64 {
        let t = if self.anneal_generations == 0 {
            1.0
        } else {
            (generation as f64 / self.anneal_generations as f64).min(1.0)
        };
        self.start + (self.end - self.start) * t
    }
}

/// Shape of one bandit, shared by every ensemble member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditConfig {
    /// Lower end of the log-rate search interval.
    pub lower: f64,
    /// Upper end of the log-rate search interval.
    pub upper: f64,
    /// Base tile width.
    pub resolution: f64,
    pub num_codings: usize,
    pub momentum: f64,
    /// Exploration noise around the greedy arm, in base tiles.
    pub sigma: f64,
    pub len_history: usize,
}

impl BanditConfig {
    /// Defaults for UMAD rates in symbolic regression.
    pub fn umad() -> Self {
        Self {
            lower: -10.0,
            upper: 0.0,
            resolution: 0.03,
            num_codings: 20,
            momentum: 0.9,
            sigma: 3.0,
            len_history: 100,
        }
    }

    /// Defaults for Gaussian mutation strengths in function minimization.
    pub fn gaussian() -> Self {
        Self { lower: -100.0, upper: 100.0, sigma: 7.0, ..Self::umad() }
    }

    fn validate(&self) -> Result<usize> {
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower < self.upper) {
            return Err(Error::Contract(format!(
                "invalid log-rate interval [{}, {}]",
                self.lower, self.upper
            )));
        }
        if !(self.resolution > 0.0) {
            return Err(Error::Contract("resolution must be positive".into()));
        }
        if self.num_codings == 0 {
            return Err(Error::Contract("a bandit needs at least one tile coding".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Contract(format!("momentum {} must lie in [0, 1)", self.momentum)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Contract(format!("sampling noise {} must be non-negative", self.sigma)));
        }
        let base_tiles = ((self.upper - self.lower) / self.resolution).floor() as usize;
        if base_tiles < 2 {
            return Err(Error::Contract("the base coding needs at least two tiles".into()));
        }
        Ok(base_tiles)
    }
}

/// Offset and width of a coding, both in base tiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodingShape {
    pub offset: usize,
    pub width: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bandit {
    config: BanditConfig,
    num_base_tiles: usize,
    learning_rate: f64,
    shapes: Vec<CodingShape>,
    codings: Vec<TileCoding>,
    // Mirror of `base_weights()`, refreshed locally after each update.
    #[serde(skip)]
    weights: Vec<f64>,
}

impl PartialEq for Bandit {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.learning_rate == other.learning_rate
            && self.shapes == other.shapes
            && self.codings == other.codings
    }
}

impl Bandit {
    /// A bandit with `num_codings` randomly shaped codings.
    pub fn random(config: BanditConfig, learning_rate: f64, rng: &mut dyn RngCore) -> Result<Self> {
        let shapes = (0..config.num_codings)
            .map(|_| CodingShape {
                offset: rng.random_range(OFFSET_UNITS),
                width: rng.random_range(WIDTH_UNITS),
            })
            .collect();
        Self::with_shapes(config, learning_rate, shapes)
    }

    pub fn with_shapes(mut config: BanditConfig, learning_rate: f64, shapes: Vec<CodingShape>) -> Result<Self> {
        config.num_codings = shapes.len();
        let num_base_tiles = config.validate()?;
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::Contract(format!("learning rate {learning_rate} must be positive")));
        }
        let res = config.resolution;
        let codings = shapes
            .iter()
            .map(|s| {
                if s.width == 0 || s.offset >= num_base_tiles {
                    return Err(Error::Contract(format!("invalid coding shape {s:?}")));
                }
                TileCoding::new(
                    config.lower,
                    config.upper,
                    s.offset as f64 * res,
                    s.width as f64 * res,
                    config.len_history,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let mut bandit = Self {
            config,
            num_base_tiles,
            learning_rate,
            shapes,
            codings,
            weights: Vec::new(),
        };
        bandit.weights = bandit.base_weights();
        Ok(bandit)
    }

    pub fn config(&self) -> &BanditConfig {
        &self.config
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn num_base_tiles(&self) -> usize {
        self.num_base_tiles
    }

    pub fn codings(&self) -> &[TileCoding] {
        &self.codings
    }

    pub fn shapes(&self) -> &[CodingShape] {
        &self.shapes
    }

    /// Tile of coding `j` covering base tile `i`.
    fn covering_tile(&self, j: usize, i: usize) -> usize {
        let CodingShape { offset, width } = self.shapes[j];
        let idx = if i < offset { 0 } else { (i - offset) / width + 1 };
        idx.min(self.codings[j].tile_count() - 1)
    }

    /// Range of base tiles covered by tile `t` of coding `j`.
    fn covered_base_tiles(&self, j: usize, t: usize) -> std::ops::Range<usize> {
        let CodingShape { offset, width } = self.shapes[j];
        let nb = self.num_base_tiles;
        let start = if t == 0 { 0 } else { offset + (t - 1) * width };
        let end = if t + 1 == self.codings[j].tile_count() {
            nb
        } else if t == 0 {
            offset
        } else {
            offset + t * width
        };
        start.min(nb)..end.min(nb)
    }

    fn weight_at(&self, i: usize) -> f64 {
        let total: f64 = (0..self.codings.len())
            .map(|j| self.codings[j].value(self.covering_tile(j, i)))
            .sum();
        total / self.codings.len() as f64
    }

    /// Average covering-tile value for every base tile, recomputed from the
    /// codings.
    pub fn base_weights(&self) -> Vec<f64> {
        (0..self.num_base_tiles).map(|i| self.weight_at(i)).collect()
    }

    /// The cached weights the sampler reads.
    pub fn cached_weights(&self) -> &[f64] {
        &self.weights
    }

    /// Lowest-index maximum of the base weights.
    pub fn greedy_tile(&self) -> usize {
        let mut best = 0;
        for (i, &w) in self.weights.iter().enumerate() {
            if w > self.weights[best] {
                best = i;
            }
        }
        best
    }

    /// Picks a base tile and returns `(log_rate, base_tile)`.
    pub fn sample_log_rate(&self, epsilon: f64, rng: &mut dyn RngCore) -> (f64, usize) {
        let nb = self.num_base_tiles;
        let tile = if rng.random::<f64>() < epsilon {
            rng.random_range(0..nb)
        } else {
            let noise = Normal::new(0.0, self.config.sigma)
                .expect("sigma validated at construction")
                .sample(rng)
                .floor();
            let shifted = self.greedy_tile() as f64 + noise;
            shifted.clamp(0.0, (nb - 1) as f64) as usize
        };
        let res = self.config.resolution;
        let lo = self.config.lower + res * tile as f64;
        let hi = (self.config.lower + res * (tile + 1) as f64).min(self.config.upper);
        let mut x = rng.random_range(lo..hi);
        if x >= self.config.upper {
            x = self.config.upper.next_down();
        }
        (x.max(self.config.lower), tile)
    }

    pub fn sample_rate(&self, epsilon: f64, rng: &mut dyn RngCore) -> f64 {
        self.sample_log_rate(epsilon, rng).0.exp()
    }

    /// Feeds a reward observed at `log_rate` to every coding.
    pub fn observe(&mut self, log_rate: f64, reward: f64) -> Result<()> {
        let (lr, mu) = (self.learning_rate, self.config.momentum);
        let mut touched = usize::MAX..0;
        for j in 0..self.codings.len() {
            let t = self.codings[j].observe(log_rate, reward, lr, mu)?;
            let span = self.covered_base_tiles(j, t);
            touched = touched.start.min(span.start)..touched.end.max(span.end);
        }
        for i in touched {
            self.weights[i] = self.weight_at(i);
        }
        Ok(())
    }

    /// Scores the child against its parent and trains on the outcome.
    pub fn update(
        &mut self,
        rate: f64,
        parent: &ErrorVector,
        child: &ErrorVector,
        cfg: &TransformConfig,
    ) -> Result<()> {
        if !(rate > 0.0) {
            return Err(Error::Domain(format!("rate {rate} must be positive")));
        }
        let reward = immediate_reward(parent, child, cfg)?;
        self.observe(rate.ln(), reward)
    }

    fn rebuild_cache(&mut self) {
        self.weights = self.base_weights();
    }
}

/// A sampled rate and the ensemble member that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSample {
    pub rate: f64,
    pub log_rate: f64,
    pub bandit: usize,
}

/// Bandits with independent learning rates, trained on the same stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditEnsemble {
    bandits: Vec<Bandit>,
    schedule: EpsilonSchedule,
    generation: usize,
}

impl BanditEnsemble {
    /// Draws each member's learning rate from `10^U([lr_exp.0, lr_exp.1])`.
    pub fn random(
        config: BanditConfig,
        num_bandits: usize,
        lr_exponents: (f64, f64),
        schedule: EpsilonSchedule,
        rng: &mut dyn RngCore,
    ) -> Result<Self> {
        if num_bandits == 0 {
            return Err(Error::Contract("ensemble needs at least one bandit".into()));
        }
        let (lo, hi) = lr_exponents;
        if !(lo <= hi) {
            return Err(Error::Contract(format!("invalid learning-rate exponents [{lo}, {hi}]")));
        }
        let bandits = (0..num_bandits)
            .map(|_| {
                let lr = 10f64.powf(if lo == hi { lo } else { rng.random_range(lo..hi) });
                Bandit::random(config.clone(), lr, rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bandits(bandits, schedule)
    }

    pub fn from_bandits(bandits: Vec<Bandit>, schedule: EpsilonSchedule) -> Result<Self> {
        if bandits.is_empty() {
            return Err(Error::Contract("ensemble needs at least one bandit".into()));
        }
        Ok(Self { bandits, schedule, generation: 0 })
    }

    pub fn bandits(&self) -> &[Bandit] {
        &self.bandits
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn epsilon(&self) -> f64 {
        self.schedule.at(self.generation)
    }

    pub fn advance_generation(&mut self) {
        self.generation += 1;
    }

    /// Samples from a uniformly chosen member.
    pub fn sample(&self, rng: &mut dyn RngCore) -> EnsembleSample {
        let bandit = rng.random_range(0..self.bandits.len());
        let (log_rate, _) = self.bandits[bandit].sample_log_rate(self.epsilon(), rng);
        EnsembleSample { rate: log_rate.exp(), log_rate, bandit }
    }

    /// Trains every member on one observation made at `log_rate`.
    pub fn update_log(
        &mut self,
        log_rate: f64,
        parent: &ErrorVector,
        child: &ErrorVector,
        cfg: &TransformConfig,
    ) -> Result<()> {
        let reward = immediate_reward(parent, child, cfg)?;
        for b in &mut self.bandits {
            b.observe(log_rate, reward)?;
        }
        Ok(())
    }

    pub fn update(
        &mut self,
        rate: f64,
        parent: &ErrorVector,
        child: &ErrorVector,
        cfg: &TransformConfig,
    ) -> Result<()> {
        if !(rate > 0.0) {
            return Err(Error::Domain(format!("rate {rate} must be positive")));
        }
        self.update_log(rate.ln(), parent, child, cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("ensemble state is always serializable")
    }

    pub fn from_json(json: &str) -> std::result::Result<Self, serde_json::Error> {
        let mut e: Self = serde_json::from_str(json)?;
        for b in &mut e.bandits {
            b.rebuild_cache();
        }
        Ok(e)
    }
}
