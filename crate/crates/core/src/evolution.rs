//! Generational, mutation-only evolution.
//!
//! Each generation copies the elites, then creates the remaining children one
//! at a time: select a parent, ask the controller for a rate, mutate, evaluate
//! and report the outcome straight back to the controller. Runs end at the
//! generation limit or as soon as any individual solves the problem.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controller::{Controller, FixedRate, Outcome, RateController, SampleContext};
use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::reward::{immediate_reward, ErrorVector, TransformConfig};
use crate::rng::{fork, RunRng, StreamTag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual<G> {
    pub genome: G,
    pub errors: ErrorVector,
    /// Only present under self-adaptive control.
    pub attached_rate: Option<f64>,
}

impl<G> Individual<G> {
    pub fn mean_error(&self) -> f64 {
        self.errors.mean()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Selection {
    /// Uniform over the `size` best individuals by mean raw error.
    Truncation { size: usize },
    Lexicase,
    /// Lexicase with per-case tolerance equal to the median absolute deviation
    /// of that case's errors, recomputed every generation.
    EpsilonLexicase,
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selection::Truncation { size } => write!(f, "truncation:{size}"),
            Selection::Lexicase => f.write_str("lexicase"),
            Selection::EpsilonLexicase => f.write_str("epsilon-lexicase"),
        }
    }
}

impl FromStr for Selection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "lexicase" => Ok(Selection::Lexicase),
            "epsilon-lexicase" | "epsilon_lexicase" => Ok(Selection::EpsilonLexicase),
            _ => match s.strip_prefix("truncation:") {
                Some(n) => n
                    .parse()
                    .map(|size| Selection::Truncation { size })
                    .map_err(|_| Error::Contract(format!("bad truncation size `{n}`"))),
                None => Err(Error::Contract(format!("unknown selection `{s}`"))),
            },
        }
    }
}

/// Indices of the population sorted by mean raw error; ties keep their order.
pub fn rank_by_mean_error(errors: &[&[f64]]) -> Vec<usize> {
    let means: Vec<f64> = errors.iter().map(|e| e.iter().map(|v| v / e.len() as f64).sum()).collect();
    let mut order: Vec<usize> = (0..errors.len()).collect();
    order.sort_by(|&a, &b| means[a].total_cmp(&means[b]));
    order
}

/// Uniform draw among the first `size` entries of `ranking`.
pub fn truncation_select(ranking: &[usize], size: usize, rng: &mut dyn RngCore) -> usize {
    let size = size.clamp(1, ranking.len());
    ranking[rng.random_range(0..size)]
}

pub fn lexicase_select(errors: &[&[f64]], rng: &mut dyn RngCore) -> usize {
    let cases = errors.first().map_or(0, |e| e.len());
    epsilon_lexicase_select(errors, &vec![0.0; cases], rng)
}

/// Lexicase where survivors on a case are those within `epsilon[case]` of the
/// best. Cases are visited in a fresh random order, drawn lazily.
pub fn epsilon_lexicase_select(errors: &[&[f64]], epsilon: &[f64], rng: &mut dyn RngCore) -> usize {
    let mut pool: Vec<usize> = (0..errors.len()).collect();
    let mut cases: Vec<usize> = (0..epsilon.len()).collect();
    let mut remaining = cases.len();
    while pool.len() > 1 && remaining > 0 {
        let j = rng.random_range(0..remaining);
        remaining -= 1;
        cases.swap(j, remaining);
        let case = cases[remaining];
        let best = pool.iter().map(|&i| errors[i][case]).fold(f64::INFINITY, f64::min);
        let cutoff = best + epsilon[case];
        pool.retain(|&i| errors[i][case] <= cutoff);
    }
    pool[rng.random_range(0..pool.len())]
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Per-case median absolute deviation across the population.
pub fn case_mads(errors: &[&[f64]]) -> Vec<f64> {
    let cases = errors.first().map_or(0, |e| e.len());
    (0..cases)
        .map(|c| {
            let mut col: Vec<f64> = errors.iter().map(|e| e[c]).collect();
            let m = median(&mut col);
            let mut dev: Vec<f64> = col.iter().map(|v| (v - m).abs()).collect();
            median(&mut dev)
        })
        .collect()
}

/// A selection operator prepared for one population.
pub struct Selector<'a> {
    errors: Vec<&'a [f64]>,
    mode: Prepared,
}

enum Prepared {
    Truncation { ranking: Vec<usize>, size: usize },
    Lexicase { epsilon: Vec<f64> },
}

impl<'a> Selector<'a> {
    pub fn new(errors: Vec<&'a [f64]>, selection: Selection) -> Result<Self> {
        if errors.is_empty() {
            return Err(Error::Contract("cannot select from an empty population".into()));
        }
        let cases = errors[0].len();
        if errors.iter().any(|e| e.len() != cases) {
            return Err(Error::Contract("error vectors differ in length".into()));
        }
        let mode = match selection {
            Selection::Truncation { size } => {
                if size == 0 || size > errors.len() {
                    return Err(Error::Contract(format!(
                        "truncation size {size} must lie in 1..={}",
                        errors.len()
                    )));
                }
                Prepared::Truncation { ranking: rank_by_mean_error(&errors), size }
            }
            Selection::Lexicase => Prepared::Lexicase { epsilon: vec![0.0; cases] },
            Selection::EpsilonLexicase => Prepared::Lexicase { epsilon: case_mads(&errors) },
        };
        Ok(Self { errors, mode })
    }

    pub fn for_population<G>(population: &'a [Individual<G>], selection: Selection) -> Result<Self> {
        Self::new(population.iter().map(|i| i.errors.as_slice()).collect(), selection)
    }

    pub fn select(&self, rng: &mut dyn RngCore) -> usize {
        match &self.mode {
            Prepared::Truncation { ranking, size } => truncation_select(ranking, *size, rng),
            Prepared::Lexicase { epsilon } => epsilon_lexicase_select(&self.errors, epsilon, rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub elites: usize,
    pub generations: usize,
    pub selection: Selection,
    /// Used for the transformed-error column of the run record.
    pub transform: TransformConfig,
    /// Keep every sampled rate and reward in the run record.
    pub verbose: bool,
}

impl EvolutionConfig {
    /// 100 children plus one elite, truncation 10, 1000 generations.
    pub fn funcmin() -> Self {
        Self {
            population_size: 101,
            elites: 1,
            generations: 1000,
            selection: Selection::Truncation { size: 10 },
            transform: TransformConfig::identity(),
            verbose: false,
        }
    }

    /// 1000 individuals, no elites, epsilon-lexicase, 300 generations.
    pub fn symbolic_regression() -> Self {
        Self {
            population_size: 1000,
            elites: 0,
            generations: 300,
            selection: Selection::EpsilonLexicase,
            transform: TransformConfig::symbolic_regression(),
            verbose: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::Contract(format!("population size must be at least 2, got {}", self.population_size)));
        }
        if self.elites >= self.population_size {
            return Err(Error::Contract(format!(
                "elite count {} leaves no room for children in a population of {}",
                self.elites, self.population_size
            )));
        }
        if self.generations == 0 {
            return Err(Error::Contract("generation limit must be at least 1".into()));
        }
        if let Selection::Truncation { size } = self.selection {
            if size == 0 || size > self.population_size {
                return Err(Error::Contract(format!(
                    "truncation size {size} must lie in 1..={}",
                    self.population_size
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRow {
    /// 1-based.
    pub generation: usize,
    pub best_error: f64,
    pub best_transformed: f64,
    pub mean_log_rate: f64,
    /// Exploration probability used during this generation, if any.
    pub epsilon: Option<f64>,
    pub solved: bool,
    pub rates: Option<Vec<f64>>,
    pub rewards: Option<Vec<f64>>,
    /// Seconds since the run started.
    pub elapsed: f64,
}

impl GenerationRow {
    /// Equality ignoring wall-clock time.
    pub fn same_trajectory(&self, other: &Self) -> bool {
        Self { elapsed: 0.0, ..self.clone() } == Self { elapsed: 0.0, ..other.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub rows: Vec<GenerationRow>,
    pub solved: bool,
    /// Generation whose population first contained a solution; 0 means the
    /// initial population already did.
    pub solve_generation: Option<usize>,
    pub final_best_error: f64,
}

impl RunRecord {
    pub fn same_trajectory(&self, other: &Self) -> bool {
        self.solved == other.solved
            && self.solve_generation == other.solve_generation
            && self.final_best_error == other.final_best_error
            && self.rows.len() == other.rows.len()
            && self.rows.iter().zip(&other.rows).all(|(a, b)| a.same_trajectory(b))
    }
}

/// State of one run.
#[derive(Clone)]
pub struct Evolution<'p, P: Problem> {
    problem: &'p P,
    config: EvolutionConfig,
    controller: Controller,
    population: Vec<Individual<P::Genome>>,
    rng: RunRng,
    generations_done: usize,
    solve_generation: Option<usize>,
    rows: Vec<GenerationRow>,
    started: Instant,
}

impl<'p, P: Problem> Evolution<'p, P> {
    /// Draws and evaluates the initial population from `rng`.
    pub fn new(problem: &'p P, config: EvolutionConfig, controller: Controller, mut rng: RunRng) -> Result<Self> {
        config.validate()?;
        let n = config.population_size;
        let rates = controller.initial_rates(n);
        let mut population = Vec::with_capacity(n);
        for i in 0..n {
            let genome = problem.random_genome(&mut rng);
            let errors = problem.evaluate(&genome)?;
            population.push(Individual { genome, errors, attached_rate: rates.as_ref().map(|r| r[i]) });
        }
        Self::from_population(problem, config, controller, population, rng)
    }

    pub fn from_population(
        problem: &'p P,
        config: EvolutionConfig,
        controller: Controller,
        population: Vec<Individual<P::Genome>>,
        rng: RunRng,
    ) -> Result<Self> {
        config.validate()?;
        if population.len() != config.population_size {
            return Err(Error::Contract(format!(
                "population holds {} individuals, config expects {}",
                population.len(),
                config.population_size
            )));
        }
        let solved = population.iter().any(|i| problem.is_solved(&i.errors));
        Ok(Self {
            problem,
            config,
            controller,
            population,
            rng,
            generations_done: 0,
            solve_generation: solved.then_some(0),
            rows: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn problem(&self) -> &'p P {
        self.problem
    }

    pub fn config(&self) -> &EvolutionConfig {
        &self.config
    }

    pub fn controller(&self) -> &Controller {
        &self.controller
    }

    pub fn population(&self) -> &[Individual<P::Genome>] {
        &self.population
    }

    pub fn rng(&self) -> &RunRng {
        &self.rng
    }

    pub fn generations_done(&self) -> usize {
        self.generations_done
    }

    pub fn rows(&self) -> &[GenerationRow] {
        &self.rows
    }

    pub fn is_finished(&self) -> bool {
        self.solve_generation.is_some() || self.generations_done >= self.config.generations
    }

    pub fn best_error(&self) -> f64 {
        self.population.iter().map(|i| i.mean_error()).fold(f64::INFINITY, f64::min)
    }

    /// The selection operator prepared on the current population.
    pub fn selector(&self) -> Result<Selector<'_>> {
        Selector::for_population(&self.population, self.config.selection)
    }

    /// Runs one generation and returns its row.
    pub fn step(&mut self) -> Result<&GenerationRow> {
        if self.is_finished() {
            return Err(Error::Contract("run already finished".into()));
        }
        if let Controller::Lamr(l) = &self.controller {
            if l.due(self.generations_done) {
                let rate = self.look_ahead()?;
                if let Controller::Lamr(l) = &mut self.controller {
                    l.adopt(self.generations_done, rate);
                }
            }
        }

        let n = self.config.population_size;
        let elites = self.config.elites;
        let epsilon = self.controller.epsilon();
        let mut next = Vec::with_capacity(n);
        let mut log_rates = Vec::with_capacity(n - elites);
        let mut rates = self.config.verbose.then(Vec::new);
        let mut rewards = self.config.verbose.then(Vec::new);
        {
            let selector = Selector::for_population(&self.population, self.config.selection)?;
            let errors: Vec<&[f64]> = self.population.iter().map(|i| i.errors.as_slice()).collect();
            for &i in rank_by_mean_error(&errors).iter().take(elites) {
                next.push(self.population[i].clone());
            }
            for child_index in 0..n - elites {
                let parent = &self.population[selector.select(&mut self.rng)];
                let ctx = SampleContext { child_index, parent_rate: parent.attached_rate };
                let sample = self.controller.sample(&ctx, &mut self.rng);
                let genome = self.problem.mutate(&parent.genome, sample.rate, &mut self.rng)?;
                let errors = self.problem.evaluate(&genome).map_err(|e| {
                    Error::Evaluation(format!(
                        "generation {}, child {child_index}: {e}",
                        self.generations_done + 1
                    ))
                })?;
                self.controller.report(&Outcome { sample, child_index, parent: &parent.errors, child: &errors })?;
                if let Some(r) = rewards.as_mut() {
                    r.push(immediate_reward(&parent.errors, &errors, &self.config.transform)?);
                }
                if let Some(r) = rates.as_mut() {
                    r.push(sample.rate);
                }
                log_rates.push(sample.log_rate);
                let attached_rate = parent.attached_rate.map(|_| sample.rate);
                next.push(Individual { genome, errors, attached_rate });
            }
        }
        self.population = next;
        self.generations_done += 1;
        self.controller.advance_generation(&mut self.rng)?;

        let solved = self.population.iter().any(|i| self.problem.is_solved(&i.errors));
        if solved {
            self.solve_generation = Some(self.generations_done);
        }
        let transform = self.config.transform;
        self.rows.push(GenerationRow {
            generation: self.generations_done,
            best_error: self.best_error(),
            best_transformed: self
                .population
                .iter()
                .map(|i| i.errors.transformed_mean(&transform))
                .fold(f64::INFINITY, f64::min),
            mean_log_rate: log_rates.iter().sum::<f64>() / log_rates.len() as f64,
            epsilon,
            solved,
            rates,
            rewards,
            elapsed: self.started.elapsed().as_secs_f64(),
        });
        Ok(self.rows.last().expect("row just pushed"))
    }

    /// Runs to completion, handing every row to `on_row` as it is produced.
    pub fn run_with(mut self, mut on_row: impl FnMut(&GenerationRow)) -> Result<RunRecord> {
        while !self.is_finished() {
            on_row(self.step()?);
        }
        Ok(self.into_record())
    }

    pub fn run(self) -> Result<RunRecord> {
        self.run_with(|_| {})
    }

    pub fn into_record(self) -> RunRecord {
        let final_best_error = self.best_error();
        RunRecord {
            rows: self.rows,
            solved: self.solve_generation.is_some(),
            solve_generation: self.solve_generation,
            final_best_error,
        }
    }

    /// Simulates every look-ahead candidate from a copy of the current state,
    /// each on its own forked stream, and returns the best candidate: solving
    /// earliest wins, otherwise the lowest best error at the end of the window.
    /// Ties go to the earlier candidate.
    fn look_ahead(&self) -> Result<f64> {
        let Controller::Lamr(lamr) = &self.controller else {
            return Err(Error::Contract("look-ahead requires the look-ahead controller".into()));
        };
        let candidates = &lamr.candidates;
        if candidates.len() == 1 {
            return Ok(candidates[0]);
        }
        let base = (self.generations_done / lamr.lookahead) as u64 * candidates.len() as u64;
        let config = EvolutionConfig {
            generations: lamr.lookahead,
            verbose: false,
            ..self.config.clone()
        };
        let scores = candidates
            .par_iter()
            .enumerate()
            .map(|(k, &rate)| {
                let sim = Evolution::from_population(
                    self.problem,
                    config.clone(),
                    Controller::Fixed(FixedRate::new(rate)?),
                    self.population.clone(),
                    fork(&self.rng, StreamTag::Lookahead, base + k as u64),
                )?;
                let record = sim.run()?;
                Ok((record.solve_generation.unwrap_or(usize::MAX), record.final_best_error))
            })
            .collect::<Result<Vec<(usize, f64)>>>()?;
        let mut best = 0;
        for k in 1..scores.len() {
            let (g, e) = scores[k];
            let (bg, be) = scores[best];
            if g < bg || (g == bg && e < be) {
                best = k;
            }
        }
        Ok(candidates[best])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::{Lamr, Samr};
    use crate::funcmin::{FuncMinProblem, TestFunction};
    use crate::rng::seeded;
    use crate::sr::{NguyenTarget, SrProblem};

    fn rows(v: &[Vec<f64>]) -> Vec<&[f64]> {
        v.iter().map(|e| e.as_slice()).collect()
    }

    #[test]
    fn truncation_frequencies() {
        let mut rng = seeded(1);
        let ranking: Vec<usize> = (0..100).collect();
        let mut counts = [0usize; 100];
        for _ in 0..100_000 {
            counts[truncation_select(&ranking, 10, &mut rng)] += 1;
        }
        assert!(counts[..10].iter().all(|&c| (9_500..=10_500).contains(&c)), "{counts:?}");
        assert!(counts[10..].iter().all(|&c| c == 0));
        assert!((0..100).all(|_| truncation_select(&ranking, 1, &mut rng) == 0));
    }

    #[test]
    fn truncation_is_uniform_when_it_covers_everyone() {
        let mut rng = seeded(2);
        let ranking: Vec<usize> = (0..5).collect();
        let mut counts = [0usize; 5];
        for _ in 0..50_000 {
            counts[truncation_select(&ranking, 5, &mut rng)] += 1;
        }
        assert!(counts.iter().all(|&c| (9_500..=10_500).contains(&c)));
    }

    #[test]
    fn ranking_is_stable() {
        let e = vec![vec![2.0], vec![1.0], vec![2.0], vec![0.5]];
        assert_eq!(rank_by_mean_error(&rows(&e)), vec![3, 1, 0, 2]);
    }

    #[test]
    fn lexicase_examples() {
        let mut rng = seeded(3);
        let e = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 2.0]];
        assert!((0..1000).all(|_| lexicase_select(&rows(&e), &mut rng) == 0));

        let e = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let mut counts = [0usize; 3];
        for _ in 0..10_000 {
            counts[lexicase_select(&rows(&e), &mut rng)] += 1;
        }
        assert_eq!(counts[2], 0);
        assert!((counts[0] as f64 / 1e4 - 0.5).abs() < 0.02);

        let e = vec![vec![3.0, 1.0], vec![3.0, 1.0]];
        let a = (0..10_000).filter(|_| lexicase_select(&rows(&e), &mut rng) == 0).count();
        assert!((a as f64 / 1e4 - 0.5).abs() < 0.02);
    }

    #[test]
    fn epsilon_lexicase_examples() {
        let mut rng = seeded(4);
        let e = vec![vec![0.0, 1.0], vec![0.001, 0.0], vec![5.0, 5.0]];
        for _ in 0..5000 {
            assert_ne!(epsilon_lexicase_select(&rows(&e), &[0.01, 0.01], &mut rng), 2);
        }
        // Everyone within tolerance everywhere: uniform.
        let e = vec![vec![0.0, 0.1], vec![0.05, 0.0], vec![0.1, 0.05]];
        let mut counts = [0usize; 3];
        for _ in 0..30_000 {
            counts[epsilon_lexicase_select(&rows(&e), &[1.0, 1.0], &mut rng)] += 1;
        }
        assert!(counts.iter().all(|&c| (9_500..=10_500).contains(&c)), "{counts:?}");
    }

    #[test]
    fn zero_epsilon_matches_lexicase() {
        let e = vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 2.0], vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 3.0]];
        let (mut a, mut b) = (seeded(5), seeded(5));
        for _ in 0..2000 {
            assert_eq!(lexicase_select(&rows(&e), &mut a), epsilon_lexicase_select(&rows(&e), &[0.0; 3], &mut b));
        }
    }

    #[test]
    fn lexicase_never_picks_a_strictly_dominated_individual() {
        let mut rng = seeded(6);
        for _ in 0..300 {
            let n = rng.random_range(2..12);
            let m = rng.random_range(1..6);
            let e: Vec<Vec<f64>> =
                (0..n).map(|_| (0..m).map(|_| rng.random_range(0..4) as f64).collect()).collect();
            for _ in 0..20 {
                let s = lexicase_select(&rows(&e), &mut rng);
                let dominated = e.iter().any(|o| o.iter().zip(&e[s]).all(|(a, b)| a < b));
                assert!(!dominated);
            }
        }
    }

    #[test]
    fn mads() {
        let e = vec![vec![1.0, 0.0], vec![2.0, 0.0], vec![4.0, 0.0], vec![10.0, 1.0]];
        // Case 0: median 3, deviations {2, 1, 1, 7} -> 1.5.
        assert_eq!(case_mads(&rows(&e)), vec![1.5, 0.0]);
    }

    #[test]
    fn selection_parses() {
        assert_eq!("truncation:10".parse::<Selection>().unwrap(), Selection::Truncation { size: 10 });
        assert_eq!("epsilon-lexicase".parse::<Selection>().unwrap(), Selection::EpsilonLexicase);
        for s in [Selection::Lexicase, Selection::Truncation { size: 3 }, Selection::EpsilonLexicase] {
            assert_eq!(s.to_string().parse::<Selection>().unwrap(), s);
        }
        assert!("tournament".parse::<Selection>().is_err());
    }

    fn small_funcmin() -> (FuncMinProblem, EvolutionConfig) {
        let p = FuncMinProblem::new(TestFunction::Sphere, 10);
        let cfg = EvolutionConfig { generations: 30, population_size: 21, ..EvolutionConfig::funcmin() };
        (p, cfg)
    }

    #[test]
    fn fixed_controller_samples_its_rate_and_elite_survives() {
        let (p, cfg) = small_funcmin();
        let cfg = EvolutionConfig { verbose: true, ..cfg };
        let ctl = Controller::Fixed(FixedRate::new(0.1).unwrap());
        let mut evo = Evolution::new(&p, cfg, ctl, seeded(7)).unwrap();
        let mut prev_best = evo.best_error();
        while !evo.is_finished() {
            let errors: Vec<&[f64]> = evo.population().iter().map(|i| i.errors.as_slice()).collect();
            let best = evo.population()[rank_by_mean_error(&errors)[0]].genome.clone();
            let row = evo.step().unwrap().clone();
            assert!(row.rates.as_ref().unwrap().iter().all(|&r| r == 0.1));
            assert_eq!(row.rates.as_ref().unwrap().len(), 20);
            assert!((row.mean_log_rate - 0.1f64.ln()).abs() < 1e-12);
            assert_eq!(evo.population()[0].genome, best);
            assert!(row.best_error <= prev_best);
            assert_eq!(evo.population().len(), 21);
            prev_best = row.best_error;
        }
        assert_eq!(evo.rows().len(), 30);
        assert!(evo.rows().iter().enumerate().all(|(i, r)| r.generation == i + 1 && r.epsilon.is_none()));
    }

    #[test]
    fn runs_are_deterministic() {
        let (p, cfg) = small_funcmin();
        let run = |seed| {
            let mut rng = seeded(seed);
            let ctl = crate::controller::ControllerParams::gaussian()
                .build(crate::controller::ControllerMode::Bandit, TransformConfig::identity(), &mut rng)
                .unwrap();
            Evolution::new(&p, cfg.clone(), ctl, rng).unwrap().run().unwrap()
        };
        let (a, b, c) = (run(1), run(1), run(2));
        assert!(a.same_trajectory(&b));
        assert!(!a.same_trajectory(&c));
        assert_eq!(a.rows[0].epsilon, Some(1.0));
    }

    #[test]
    fn samr_attaches_rates() {
        let (p, cfg) = small_funcmin();
        let evo = Evolution::new(&p, cfg, Controller::Samr(Samr::default()), seeded(8)).unwrap();
        let r: Vec<f64> = evo.population().iter().map(|i| i.attached_rate.unwrap()).collect();
        assert!((r[0] - 1e-3).abs() < 1e-15 && (r[20] - 1e3).abs() < 1e-9);
        let mut evo = evo;
        evo.step().unwrap();
        assert!(evo.population().iter().all(|i| i.attached_rate.is_some_and(|r| r > 0.0)));
        let fixed = Evolution::new(&p, small_funcmin().1, Controller::Fixed(FixedRate::new(1.0).unwrap()), seeded(8))
            .unwrap();
        assert!(fixed.population().iter().all(|i| i.attached_rate.is_none()));
    }

    #[test]
    fn sr_runs_stop_when_solved() {
        let p = SrProblem::new(NguyenTarget::Nguyen1);
        let cfg = EvolutionConfig { population_size: 200, generations: 60, ..EvolutionConfig::symbolic_regression() };
        let rec = Evolution::new(&p, cfg, Controller::Fixed(FixedRate::new(0.1).unwrap()), seeded(9))
            .unwrap()
            .run()
            .unwrap();
        if rec.solved {
            let g = rec.solve_generation.unwrap();
            assert_eq!(rec.rows.len(), g);
            assert!(rec.rows.last().unwrap().solved);
            assert!(rec.final_best_error < 0.01);
        } else {
            assert_eq!(rec.rows.len(), 60);
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let (p, cfg) = small_funcmin();
        let ctl = || Controller::Fixed(FixedRate::new(1.0).unwrap());
        for bad in [
            EvolutionConfig { population_size: 1, ..cfg.clone() },
            EvolutionConfig { elites: 21, ..cfg.clone() },
            EvolutionConfig { generations: 0, ..cfg.clone() },
            EvolutionConfig { selection: Selection::Truncation { size: 22 }, ..cfg.clone() },
        ] {
            assert!(Evolution::new(&p, bad, ctl(), seeded(0)).is_err());
        }
    }

    #[test]
    fn look_ahead_does_not_touch_the_main_run() {
        let (p, cfg) = small_funcmin();
        let cfg = EvolutionConfig { generations: 12, ..cfg };
        let lamr = Lamr::new(vec![0.01, 0.1, 1.0], 5).unwrap();
        let mut evo = Evolution::new(&p, cfg.clone(), Controller::Lamr(lamr), seeded(10)).unwrap();
        let pop = evo.population().to_vec();
        let rng = evo.rng().clone();
        let chosen = evo.look_ahead().unwrap();
        assert_eq!(evo.population(), pop.as_slice());
        assert_eq!(evo.rng(), &rng);

        // The main run equals a fixed-rate run as long as the rate agrees.
        let mut fixed = Evolution::new(&p, cfg, Controller::Fixed(FixedRate::new(chosen).unwrap()), seeded(10)).unwrap();
        for _ in 0..5 {
            let a = evo.step().unwrap().clone();
            let b = fixed.step().unwrap().clone();
            assert!(a.same_trajectory(&b));
        }
        let Controller::Lamr(l) = evo.controller() else { unreachable!() };
        assert_eq!(l.selections(), &[(0, chosen)]);
        evo.step().unwrap();
        let Controller::Lamr(l) = evo.controller() else { unreachable!() };
        assert_eq!(l.selections().len(), 2);
        assert_eq!(l.selections()[1].0, 5);
    }

    #[test]
    fn single_candidate_look_ahead_is_a_fixed_run() {
        let (p, cfg) = small_funcmin();
        let lamr = Lamr::new(vec![0.3], 4).unwrap();
        let a = Evolution::new(&p, cfg.clone(), Controller::Lamr(lamr), seeded(11)).unwrap().run().unwrap();
        let b = Evolution::new(&p, cfg, Controller::Fixed(FixedRate::new(0.3).unwrap()), seeded(11))
            .unwrap()
            .run()
            .unwrap();
        assert!(a.same_trajectory(&b));
    }
}
