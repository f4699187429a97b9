//! Reward-landscape probe.
//!
//! Alongside a fixed-rate host run, every generation draws shadow
//! parent/child pairs at a set of probe rates and records their rewards. The
//! shadow children never enter the population and all probe randomness comes
//! from forked streams, so the host trajectory is unchanged.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{ewma, max_pool_1d};
use crate::controller::{Controller, RateController};
use crate::error::{Error, Result};
use crate::evolution::{Evolution, EvolutionConfig, RunRecord};
use crate::problem::Problem;
use crate::reward::immediate_reward;
use crate::rng::{fork, RunRng, StreamTag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub rates: Vec<f64>,
    pub samples_per_rate: usize,
    /// Max-pooling kernel, normally the reward history length.
    pub kernel: usize,
    pub ewma_alpha: f64,
}

impl ProbeConfig {
    /// Rates {0.01, 0.03, 0.1, 0.3, 1}, one sample per individual.
    pub fn new(population_size: usize) -> Self {
        Self { rates: vec![0.01, 0.03, 0.1, 0.3, 1.0], samples_per_rate: population_size, kernel: 100, ewma_alpha: 0.01 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rates.is_empty() || self.rates.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::Contract("probe rates must be a nonempty list of positive numbers".into()));
        }
        if self.samples_per_rate == 0 || self.kernel == 0 {
            return Err(Error::Contract("probe sample count and kernel must be positive".into()));
        }
        if !(self.ewma_alpha > 0.0 && self.ewma_alpha <= 1.0) {
            return Err(Error::Contract(format!("smoothing rate {} outside (0, 1]", self.ewma_alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    Immediate,
    MaxWindow,
}

impl fmt::Display for RewardKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RewardKind::Immediate => "immediate",
            RewardKind::MaxWindow => "max_window",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    /// 1-based host generation.
    pub generation: usize,
    pub rate: f64,
    pub kind: RewardKind,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeTrace {
    pub config: ProbeConfig,
    /// `rewards[r][g]`: shadow rewards at rate `r` during generation `g + 1`.
    pub rewards: Vec<Vec<Vec<f64>>>,
    pub record: RunRecord,
}

impl ProbeTrace {
    pub fn generations(&self) -> usize {
        self.rewards.first().map_or(0, |r| r.len())
    }

    fn stream(&self, r: usize) -> (Vec<f64>, Vec<usize>) {
        let mut all = Vec::new();
        let mut ends = Vec::new();
        for g in &self.rewards[r] {
            all.extend_from_slice(g);
            ends.push(all.len() - 1);
        }
        (all, ends)
    }

    /// Smoothed immediate rewards of rate `r`, one value per generation (the
    /// smoother's state after that generation's last sample).
    pub fn immediate_series(&self, r: usize) -> Result<Vec<f64>> {
        let (all, ends) = self.stream(r);
        let y = ewma(&all, self.config.ewma_alpha)?;
        Ok(ends.iter().map(|&e| y[e]).collect())
    }

    /// Max-pooled then smoothed rewards of rate `r`, one value per generation.
    /// Pooling runs over the whole concatenated stream; a generation reads the
    /// window that ends at its last sample.
    pub fn max_window_series(&self, r: usize) -> Result<Vec<f64>> {
        let (all, ends) = self.stream(r);
        let k = self.config.kernel.min(all.len());
        let y = ewma(&max_pool_1d(&all, k)?, self.config.ewma_alpha)?;
        Ok(ends.iter().map(|&e| y[(e + 1).saturating_sub(k)]).collect())
    }

    pub fn rows(&self) -> Result<Vec<ProbeRow>> {
        let mut per_rate = Vec::with_capacity(self.config.rates.len());
        for r in 0..self.config.rates.len() {
            per_rate.push((self.immediate_series(r)?, self.max_window_series(r)?));
        }
        let mut rows = Vec::new();
        for g in 0..self.generations() {
            for (r, &rate) in self.config.rates.iter().enumerate() {
                let (imm, max) = &per_rate[r];
                rows.push(ProbeRow { generation: g + 1, rate, kind: RewardKind::Immediate, value: imm[g] });
                rows.push(ProbeRow { generation: g + 1, rate, kind: RewardKind::MaxWindow, value: max[g] });
            }
        }
        Ok(rows)
    }
}

/// Runs a fixed-rate host and probes it every generation.
pub fn run_probe<P: Problem>(
    problem: &P,
    config: EvolutionConfig,
    controller: Controller,
    probe: &ProbeConfig,
    rng: RunRng,
) -> Result<ProbeTrace> {
    probe.validate()?;
    if !matches!(controller, Controller::Fixed(_)) {
        return Err(Error::Contract(format!("the probe needs a fixed-rate host, not {}", controller.mode())));
    }
    let transform = config.transform;
    let mut evo = Evolution::new(problem, config, controller, rng)?;
    let mut rewards = vec![Vec::new(); probe.rates.len()];
    while !evo.is_finished() {
        let gen = evo.generations_done() as u64;
        let selector = evo.selector()?;
        let population = evo.population();
        let host_rng = evo.rng();
        let per_rate = probe
            .rates
            .par_iter()
            .enumerate()
            .map(|(r, &rate)| {
                let mut rng = fork(host_rng, StreamTag::Probe, gen * probe.rates.len() as u64 + r as u64);
                (0..probe.samples_per_rate)
                    .map(|_| {
                        let parent = &population[selector.select(&mut rng)];
                        let child = problem.mutate(&parent.genome, rate, &mut rng)?;
                        immediate_reward(&parent.errors, &problem.evaluate(&child)?, &transform)
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        drop(selector);
        for (dst, src) in rewards.iter_mut().zip(per_rate) {
            dst.push(src);
        }
        evo.step()?;
    }
    Ok(ProbeTrace { config: probe.clone(), rewards, record: evo.into_record() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::stats::welch_t_test;
    use crate::controller::FixedRate;
    use crate::funcmin::{FuncMinProblem, TestFunction};
    use crate::rng::seeded;

    fn setup() -> (FuncMinProblem, EvolutionConfig) {
        let p = FuncMinProblem::new(TestFunction::Rastrigin, 10);
        let cfg = EvolutionConfig { population_size: 41, generations: 15, ..EvolutionConfig::funcmin() };
        (p, cfg)
    }

    fn fixed(rate: f64) -> Controller {
        Controller::Fixed(FixedRate::new(rate).unwrap())
    }

    #[test]
    fn probe_leaves_the_host_untouched() {
        let (p, cfg) = setup();
        let probe = ProbeConfig { kernel: 10, ..ProbeConfig::new(40) };
        let trace = run_probe(&p, cfg.clone(), fixed(0.1), &probe, seeded(1)).unwrap();
        let plain = Evolution::new(&p, cfg, fixed(0.1), seeded(1)).unwrap().run().unwrap();
        assert!(trace.record.same_trajectory(&plain));
        assert_eq!(trace.generations(), 15);
        assert!(trace.rewards.iter().all(|r| r.iter().all(|g| g.len() == 40)));
        let rows = trace.rows().unwrap();
        assert_eq!(rows.len(), 15 * 5 * 2);
        assert_eq!((rows[0].generation, rows[0].kind), (1, RewardKind::Immediate));
    }

    #[test]
    fn vanishing_rate_gives_zero_rewards() {
        let (p, cfg) = setup();
        let probe = ProbeConfig { rates: vec![1e-300], kernel: 10, ..ProbeConfig::new(40) };
        let trace = run_probe(&p, cfg, fixed(0.1), &probe, seeded(2)).unwrap();
        assert!(trace.rewards[0].iter().flatten().all(|&r| r == 0.0));
    }

    #[test]
    fn probe_at_the_host_rate_matches_real_children() {
        let (p, cfg) = setup();
        let cfg = EvolutionConfig { verbose: true, ..cfg };
        let probe = ProbeConfig { rates: vec![0.1], kernel: 10, ..ProbeConfig::new(40) };
        let trace = run_probe(&p, cfg, fixed(0.1), &probe, seeded(3)).unwrap();
        let shadow: Vec<f64> = trace.rewards[0].iter().flatten().copied().collect();
        let real: Vec<f64> =
            trace.record.rows.iter().flat_map(|r| r.rewards.clone().unwrap()).collect();
        assert_eq!(shadow.len(), real.len());
        assert!(welch_t_test(&shadow, &real).unwrap().p > 0.01);
    }

    #[test]
    fn series_follow_the_documented_layout() {
        let trace = ProbeTrace {
            config: ProbeConfig { rates: vec![1.0], samples_per_rate: 2, kernel: 2, ewma_alpha: 1.0 },
            rewards: vec![vec![vec![1.0, -1.0], vec![3.0, 0.0], vec![-2.0, -5.0]]],
            record: RunRecord { rows: vec![], solved: false, solve_generation: None, final_best_error: 0.0 },
        };
        // Stream [1, -1, 3, 0, -2, -5]; windows of 2: [1, 3, 3, 0, -2].
        assert_eq!(trace.immediate_series(0).unwrap(), vec![-1.0, 0.0, -5.0]);
        assert_eq!(trace.max_window_series(0).unwrap(), vec![1.0, 3.0, -2.0]);
    }

    #[test]
    fn probe_rejects_adaptive_hosts_and_bad_settings() {
        let (p, cfg) = setup();
        let samr = Controller::Samr(Default::default());
        assert!(run_probe(&p, cfg.clone(), samr, &ProbeConfig::new(40), seeded(4)).is_err());
        let bad = ProbeConfig { rates: vec![], ..ProbeConfig::new(40) };
        assert!(run_probe(&p, cfg, fixed(0.1), &bad, seeded(4)).is_err());
    }
}
