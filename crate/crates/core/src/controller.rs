//! Mutation-rate controllers behind one interface: a fixed rate, the
//! self-adaptive and group-elite baselines, the look-ahead oracle and the
//! bandit ensemble.
//!
//! The evolutionary loop asks a controller for a rate before every child,
//! reports the parent/child errors right after evaluating it, and advances the
//! controller once per generation.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::bandit::{BanditConfig, BanditEnsemble, EpsilonSchedule};
use crate::error::{Error, Result};
use crate::reward::{immediate_reward, ErrorVector, TransformConfig};

/// Smallest and largest rate any controller hands out.
pub const MIN_RATE: f64 = 1e-300;
pub const MAX_RATE: f64 = 1e300;

fn clamp_rate(rate: f64) -> f64 {
    rate.clamp(MIN_RATE, MAX_RATE)
}

/// `n` values spaced evenly in log space from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
        }
    }
}

/// `rate * factor^u` with `u ~ U[-1, 1]`.
pub fn meta_mutate(rate: f64, factor: f64, rng: &mut dyn RngCore) -> f64 {
    let u: f64 = rng.random_range(-1.0..=1.0);
    clamp_rate(rate * factor.powf(u))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerMode {
    Fixed,
    Samr,
    Gesmr,
    Lamr,
    Bandit,
}

impl ControllerMode {
    pub const ALL: [ControllerMode; 5] = [
        ControllerMode::Fixed,
        ControllerMode::Samr,
        ControllerMode::Gesmr,
        ControllerMode::Lamr,
        ControllerMode::Bandit,
    ];
}

impl fmt::Display for ControllerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ControllerMode::Fixed => "fixed",
            ControllerMode::Samr => "samr",
            ControllerMode::Gesmr => "gesmr",
            ControllerMode::Lamr => "lamr",
            ControllerMode::Bandit => "bandit",
        })
    }
}

impl FromStr for ControllerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ControllerMode::ALL
            .into_iter()
            .find(|m| m.to_string() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Contract(format!("unknown controller `{s}`")))
    }
}

/// What the loop knows about the child it is about to create.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleContext {
    /// Position of the child among this generation's offspring.
    pub child_index: usize,
    /// Rate carried by the selected parent (self-adaptive mode only).
    pub parent_rate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSample {
    pub rate: f64,
    /// Natural log of `rate`, kept exact for controllers that sample in log space.
    pub log_rate: f64,
}

impl RateSample {
    pub fn new(rate: f64) -> Self {
        let rate = clamp_rate(rate);
        Self { rate, log_rate: rate.ln() }
    }
}

/// A finished parent/child variation.
#[derive(Debug, Clone, Copy)]
pub struct Outcome<'a> {
    pub sample: RateSample,
    pub child_index: usize,
    pub parent: &'a ErrorVector,
    pub child: &'a ErrorVector,
}

pub trait RateController {
    fn mode(&self) -> ControllerMode;

    /// Rates attached to the initial population, for controllers that carry
    /// one rate per individual.
    fn initial_rates(&self, _population_size: usize) -> Option<Vec<f64>> {
        None
    }

    fn sample(&mut self, ctx: &SampleContext, rng: &mut dyn RngCore) -> RateSample;

    fn report(&mut self, outcome: &Outcome<'_>) -> Result<()>;

    fn advance_generation(&mut self, rng: &mut dyn RngCore) -> Result<()>;

    /// Current exploration probability, for controllers that have one.
    fn epsilon(&self) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedRate {
    rate: f64,
}

impl FixedRate {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Contract(format!("fixed rate must be positive, got {rate}")));
        }
        Ok(Self { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

impl RateController for FixedRate {
    fn mode(&self) -> ControllerMode {
        ControllerMode::Fixed
    }

    fn sample(&mut self, _ctx: &SampleContext, _rng: &mut dyn RngCore) -> RateSample {
        RateSample::new(self.rate)
    }

    fn report(&mut self, _outcome: &Outcome<'_>) -> Result<()> {
        Ok(())
    }

    fn advance_generation(&mut self, _rng: &mut dyn RngCore) -> Result<()> {
        Ok(())
    }
}

/// Self-adaptive rates: every individual carries a rate that its children
/// inherit after multiplying by `factor^U[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Samr {
    pub factor: f64,
    /// Initial rates are log-spaced over this range and handed out in order.
    pub init_range: (f64, f64),
}

impl Default for Samr {
    fn default() -> Self {
        Self { factor: 2.0, init_range: (1e-3, 1e3) }
    }
}

/// Child rate of a self-adaptive parent.
pub fn samr_child_rate(parent_rate: f64, factor: f64, rng: &mut dyn RngCore) -> f64 {
    meta_mutate(parent_rate, factor, rng)
}

impl RateController for Samr {
    fn mode(&self) -> ControllerMode {
        ControllerMode::Samr
    }

    fn initial_rates(&self, population_size: usize) -> Option<Vec<f64>> {
        Some(log_spaced(self.init_range.0, self.init_range.1, population_size))
    }

    fn sample(&mut self, ctx: &SampleContext, rng: &mut dyn RngCore) -> RateSample {
        let parent = ctx.parent_rate.expect("self-adaptive parents always carry a rate");
        RateSample::new(samr_child_rate(parent, self.factor, rng))
    }

    fn report(&mut self, _outcome: &Outcome<'_>) -> Result<()> {
        Ok(())
    }

    fn advance_generation(&mut self, _rng: &mut dyn RngCore) -> Result<()> {
        Ok(())
    }
}

/// Group elite selection of mutation rates. Child `i` of a generation uses
/// rate `i mod K`; a rate's fitness is the best reward in its group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gesmr {
    rates: Vec<f64>,
    pub truncation: usize,
    pub factor: f64,
    pub transform: TransformConfig,
    #[serde(skip)]
    groups: Vec<Vec<f64>>,
}

impl Gesmr {
    pub fn new(rates: Vec<f64>, truncation: usize, factor: f64, transform: TransformConfig) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::Contract("rate population must not be empty".into()));
        }
        if let Some(r) = rates.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(Error::Contract(format!("rates must be positive, got {r}")));
        }
        if truncation == 0 || truncation > rates.len() {
            return Err(Error::Contract(format!(
                "meta truncation {truncation} must lie in 1..={}",
                rates.len()
            )));
        }
        let groups = vec![Vec::new(); rates.len()];
        Ok(Self { rates, truncation, factor, transform, groups })
    }

    /// Ten log-spaced rates from 1e-3 to 1e3, meta truncation 4, factor 2.
    pub fn with_defaults(transform: TransformConfig) -> Self {
        Self::new(log_spaced(1e-3, 1e3, 10), 4, 2.0, transform).expect("defaults are valid")
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }
}

/// One GESMR step. `improvements[k]` holds the rewards of the children
/// produced with `rates[k]`. The best rate survives unchanged (lowest index on
/// ties) at position 0; the rest are meta-mutated copies drawn uniformly from
/// the `truncation` fittest rates.
pub fn gesmr_generation(
    rates: &[f64],
    improvements: &[Vec<f64>],
    truncation: usize,
    factor: f64,
    rng: &mut dyn RngCore,
) -> Result<Vec<f64>> {
    if rates.len() != improvements.len() {
        return Err(Error::Contract(format!(
            "{} rates but {} improvement groups",
            rates.len(),
            improvements.len()
        )));
    }
    if truncation == 0 || truncation > rates.len() {
        return Err(Error::Contract(format!("meta truncation {truncation} out of range")));
    }
    let fitness = improvements
        .iter()
        .enumerate()
        .map(|(k, g)| {
            g.iter()
                .copied()
                .reduce(f64::max)
                .ok_or_else(|| Error::Contract(format!("rate group {k} produced no children")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut order: Vec<usize> = (0..rates.len()).collect();
    // Stable sort, so equal fitness keeps the lower index first.
    order.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]));
    let mut next = Vec::with_capacity(rates.len());
    next.push(rates[order[0]]);
    for _ in 1..rates.len() {
        let pick = order[rng.random_range(0..truncation)];
        next.push(meta_mutate(rates[pick], factor, rng));
    }
    Ok(next)
}

impl RateController for Gesmr {
    fn mode(&self) -> ControllerMode {
        ControllerMode::Gesmr
    }

    fn sample(&mut self, ctx: &SampleContext, _rng: &mut dyn RngCore) -> RateSample {
        let k = ctx.child_index % self.rates.len();
        RateSample { rate: self.rates[k], log_rate: self.rates[k].ln() }
    }

    fn report(&mut self, outcome: &Outcome<'_>) -> Result<()> {
        if self.groups.len() != self.rates.len() {
            self.groups = vec![Vec::new(); self.rates.len()];
        }
        let r = immediate_reward(outcome.parent, outcome.child, &self.transform)?;
        self.groups[outcome.child_index % self.rates.len()].push(r);
        Ok(())
    }

    fn advance_generation(&mut self, rng: &mut dyn RngCore) -> Result<()> {
        self.rates = gesmr_generation(&self.rates, &self.groups, self.truncation, self.factor, rng)?;
        self.groups = vec![Vec::new(); self.rates.len()];
        Ok(())
    }
}

/// Look-ahead oracle state. The simulations themselves are run by the
/// evolutionary loop, which owns the population they start from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lamr {
    pub candidates: Vec<f64>,
    /// Generations simulated per candidate, and the spacing of re-selections.
    pub lookahead: usize,
    current: f64,
    selections: Vec<(usize, f64)>,
}

impl Lamr {
    pub fn new(candidates: Vec<f64>, lookahead: usize) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::Contract("look-ahead needs at least one candidate rate".into()));
        }
        if let Some(r) = candidates.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(Error::Contract(format!("candidate rates must be positive, got {r}")));
        }
        if lookahead == 0 {
            return Err(Error::Contract("look-ahead horizon must be at least one generation".into()));
        }
        let current = candidates[0];
        Ok(Self { candidates, lookahead, current, selections: Vec::new() })
    }

    /// Ten log-spaced candidates from 1e-3 to 1, re-selected every 100 generations.
    pub fn with_defaults() -> Self {
        Self::new(log_spaced(1e-3, 1.0, 10), 100).expect("defaults are valid")
    }

    pub fn current(&self) -> f64 {
        self.current
    }

    /// Whether a re-selection happens before the given 0-based generation.
    pub fn due(&self, generations_done: usize) -> bool {
        generations_done % self.lookahead == 0
    }

    pub fn adopt(&mut self, generations_done: usize, rate: f64) {
        self.current = rate;
        self.selections.push((generations_done, rate));
    }

    /// `(generations completed, chosen rate)` for each re-selection so far.
    pub fn selections(&self) -> &[(usize, f64)] {
        &self.selections
    }
}

impl RateController for Lamr {
    fn mode(&self) -> ControllerMode {
        ControllerMode::Lamr
    }

    fn sample(&mut self, _ctx: &SampleContext, _rng: &mut dyn RngCore) -> RateSample {
        RateSample::new(self.current)
    }

    fn report(&mut self, _outcome: &Outcome<'_>) -> Result<()> {
        Ok(())
    }

    fn advance_generation(&mut self, _rng: &mut dyn RngCore) -> Result<()> {
        Ok(())
    }
}

/// The bandit ensemble together with the error transform its rewards use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditController {
    pub ensemble: BanditEnsemble,
    pub transform: TransformConfig,
}

/// Construction parameters of [`BanditController`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditSettings {
    pub config: BanditConfig,
    pub num_bandits: usize,
    /// Learning rates are `10^U[lo, hi]`.
    pub lr_exponents: (f64, f64),
    pub schedule: EpsilonSchedule,
}

impl BanditSettings {
    pub fn umad() -> Self {
        Self::with_config(BanditConfig::umad())
    }

    pub fn gaussian() -> Self {
        Self::with_config(BanditConfig::gaussian())
    }

    fn with_config(config: BanditConfig) -> Self {
        Self { config, num_bandits: 5, lr_exponents: (-4.0, -3.0), schedule: EpsilonSchedule::default() }
    }
}

impl BanditController {
    pub fn new(settings: &BanditSettings, transform: TransformConfig, rng: &mut dyn RngCore) -> Result<Self> {
        let ensemble = BanditEnsemble::random(
            settings.config.clone(),
            settings.num_bandits,
            settings.lr_exponents,
            settings.schedule,
            rng,
        )?;
        Ok(Self { ensemble, transform })
    }
}

impl RateController for BanditController {
    fn mode(&self) -> ControllerMode {
        ControllerMode::Bandit
    }

    fn sample(&mut self, _ctx: &SampleContext, rng: &mut dyn RngCore) -> RateSample {
        let s = self.ensemble.sample(rng);
        RateSample { rate: clamp_rate(s.rate), log_rate: s.log_rate }
    }

    fn report(&mut self, outcome: &Outcome<'_>) -> Result<()> {
        self.ensemble.update_log(outcome.sample.log_rate, outcome.parent, outcome.child, &self.transform)
    }

    fn advance_generation(&mut self, _rng: &mut dyn RngCore) -> Result<()> {
        self.ensemble.advance_generation();
        Ok(())
    }

    fn epsilon(&self) -> Option<f64> {
        Some(self.ensemble.epsilon())
    }
}

/// Any of the controllers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Controller {
    Fixed(FixedRate),
    Samr(Samr),
    Gesmr(Gesmr),
    Lamr(Lamr),
    Bandit(Box<BanditController>),
}

macro_rules! dispatch {
    ($self:expr, $c:ident => $body:expr) => {
        match $self {
            Controller::Fixed($c) => $body,
            Controller::Samr($c) => $body,
            Controller::Gesmr($c) => $body,
            Controller::Lamr($c) => $body,
            Controller::Bandit($c) => $body,
        }
    };
}

impl RateController for Controller {
    fn mode(&self) -> ControllerMode {
        dispatch!(self, c => c.mode())
    }

    fn initial_rates(&self, population_size: usize) -> Option<Vec<f64>> {
        dispatch!(self, c => c.initial_rates(population_size))
    }

    fn sample(&mut self, ctx: &SampleContext, rng: &mut dyn RngCore) -> RateSample {
        dispatch!(self, c => c.sample(ctx, rng))
    }

    fn report(&mut self, outcome: &Outcome<'_>) -> Result<()> {
        dispatch!(self, c => c.report(outcome))
    }

    fn advance_generation(&mut self, rng: &mut dyn RngCore) -> Result<()> {
        dispatch!(self, c => c.advance_generation(rng))
    }

    fn epsilon(&self) -> Option<f64> {
        dispatch!(self, c => c.epsilon())
    }
}

/// Parameters for building any controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerParams {
    pub fixed_rate: f64,
    pub samr: Samr,
    pub gesmr_size: usize,
    pub gesmr_init_range: (f64, f64),
    pub gesmr_truncation: usize,
    pub gesmr_factor: f64,
    pub lamr_candidates: usize,
    pub lamr_range: (f64, f64),
    pub lamr_lookahead: usize,
    pub bandit: BanditSettings,
}

impl ControllerParams {
    /// Defaults for UMAD rates.
    pub fn umad() -> Self {
        Self::with_bandit(BanditSettings::umad())
    }

    /// Defaults for Gaussian mutation strengths.
    pub fn gaussian() -> Self {
        Self::with_bandit(BanditSettings::gaussian())
    }

    fn with_bandit(bandit: BanditSettings) -> Self {
        Self {
            fixed_rate: 0.1,
            samr: Samr::default(),
            gesmr_size: 10,
            gesmr_init_range: (1e-3, 1e3),
            gesmr_truncation: 4,
            gesmr_factor: 2.0,
            lamr_candidates: 10,
            lamr_range: (1e-3, 1.0),
            lamr_lookahead: 100,
            bandit,
        }
    }

    /// Builds the controller for `mode`. Only the bandit draws from `rng`.
    pub fn build(&self, mode: ControllerMode, transform: TransformConfig, rng: &mut dyn RngCore) -> Result<Controller> {
        Ok(match mode {
            ControllerMode::Fixed => Controller::Fixed(FixedRate::new(self.fixed_rate)?),
            ControllerMode::Samr => {
                let (lo, hi) = self.samr.init_range;
                if !(lo > 0.0 && lo <= hi && hi.is_finite()) || !(self.samr.factor > 0.0) {
                    return Err(Error::Contract("invalid self-adaptive parameters".into()));
                }
                Controller::Samr(self.samr.clone())
            }
            ControllerMode::Gesmr => {
                let (lo, hi) = self.gesmr_init_range;
                Controller::Gesmr(Gesmr::new(
                    log_spaced(lo, hi, self.gesmr_size),
                    self.gesmr_truncation,
                    self.gesmr_factor,
                    transform,
                )?)
            }
            ControllerMode::Lamr => {
                let (lo, hi) = self.lamr_range;
                Controller::Lamr(Lamr::new(log_spaced(lo, hi, self.lamr_candidates), self.lamr_lookahead)?)
            }
            ControllerMode::Bandit => Controller::Bandit(Box::new(BanditController::new(&self.bandit, transform, rng)?)),
        })
    }
}
