//! Batch execution and CSV output.
//!
//! Runs execute in parallel, but rows reach the files in canonical order:
//! controllers in config order, then run index. A run's generation rows are
//! written and flushed as soon as every earlier run has finished, so the
//! files only depend on the spec and the seed base, never on scheduling.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io;
use std::path::{Path, PathBuf};
use std::sync::mpsc::{self, Sender};

use mutrate::analysis::{run_probe, ProbeRow, RewardKind};
use mutrate::controller::ControllerMode;
use mutrate::evolution::{Evolution, GenerationRow, RunRecord};
use mutrate::funcmin::FuncMinProblem;
use mutrate::rng::seeded;
use mutrate::sr::SrProblem;
use mutrate::Problem;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ExperimentSpec, ProblemId};

pub const RUNS_CSV: &str = "runs.csv";
pub const GENERATIONS_CSV: &str = "generations.csv";
pub const PROBE_CSV: &str = "probe.csv";
pub const PROBE_RUNS_CSV: &str = "probe_runs.csv";
pub const SPEC_FILE: &str = "spec.cfg";

pub const RUNS_HEADER: [&str; 7] =
    ["run_id", "seed", "controller", "problem", "solved", "solve_generation", "final_best_error"];
pub const GENERATIONS_HEADER: [&str; 5] = ["run_id", "generation", "best_error", "mean_log_rate", "epsilon"];
pub const PROBE_HEADER: [&str; 4] = ["generation", "rate", "reward_kind", "smoothed_value"];

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{} already exists; pass --force to overwrite", path.display())]
    Exists { path: PathBuf },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("writing CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("run {run_id} ({controller}, seed {seed}) failed: {source}")]
    Run {
        run_id: usize,
        seed: u64,
        controller: ControllerMode,
        #[source]
        source: mutrate::Error,
    },
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: u64, message: String },
}

/// One row of `runs.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub run_id: usize,
    pub seed: u64,
    pub controller: ControllerMode,
    pub problem: String,
    pub solved: bool,
    pub solve_generation: Option<usize>,
    pub final_best_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub run_id: usize,
    pub seed: u64,
    pub controller: ControllerMode,
}

/// Jobs in canonical order; run `i` of every controller uses `seed_base + i`.
pub fn jobs(spec: &ExperimentSpec) -> Vec<Job> {
    spec.controllers
        .iter()
        .flat_map(|&controller| (0..spec.runs).map(move |i| (controller, i)))
        .enumerate()
        .map(|(run_id, (controller, i))| Job { run_id, seed: spec.seed(i), controller })
        .collect()
}

/// Builds the problem instance described by `spec`.
pub fn with_problem<R>(spec: &ExperimentSpec, f: impl FnOnce(&dyn ProblemRunner) -> R) -> R {
    match spec.problem {
        ProblemId::FuncMin(function) => {
            f(&FuncMinProblem { function, dimension: spec.dimension, init_sigma: spec.init_sigma })
        }
        ProblemId::Sr(target) => {
            let mut p = SrProblem::new(target);
            p.init_len = spec.sr_init_len;
            p.max_len = spec.sr_max_len;
            f(&p)
        }
    }
}

/// Object-safe runner over the concrete problem types.
pub trait ProblemRunner: Sync {
    fn run_one(&self, spec: &ExperimentSpec, job: Job, on_row: &mut dyn FnMut(&GenerationRow)) -> RunOutput;
}

pub struct RunOutput {
    pub record: mutrate::Result<RunRecord>,
    pub probe: Option<Vec<ProbeRow>>,
}

impl<P: Problem> ProblemRunner for P {
    fn run_one(&self, spec: &ExperimentSpec, job: Job, on_row: &mut dyn FnMut(&GenerationRow)) -> RunOutput {
        let mut attempt = || -> mutrate::Result<(RunRecord, Option<Vec<ProbeRow>>)> {
            let mut rng = seeded(job.seed);
            let controller = spec.params.build(job.controller, spec.evolution.transform, &mut rng)?;
            if spec.probe && job.controller == ControllerMode::Fixed {
                let trace = run_probe(self, spec.evolution.clone(), controller, &spec.probe_config(), rng)?;
                trace.record.rows.iter().for_each(&mut *on_row);
                let rows = trace.rows()?;
                Ok((trace.record, Some(rows)))
            } else {
                let record = Evolution::new(self, spec.evolution.clone(), controller, rng)?.run_with(&mut *on_row)?;
                Ok((record, None))
            }
        };
        match attempt() {
            Ok((record, probe)) => RunOutput { record: Ok(record), probe },
            Err(e) => RunOutput { record: Err(e), probe: None },
        }
    }
}

enum Event {
    Row(usize, GenerationRow),
    Done(usize, RunOutput),
}

/// Everything a batch produced.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutcome {
    pub results: Vec<RunResult>,
    /// Probe rows averaged over runs, if the probe was on.
    pub probe: Option<Vec<ProbeRow>>,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

/// Shortest round-trip form, switching to exponents for extreme values.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn csv_writer(path: &Path, header: &[&str]) -> Result<csv::Writer<File>, RunError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header)?;
    w.flush().map_err(io_err(path))?;
    Ok(w)
}

/// Files a batch writes into `spec.out`.
pub fn output_files(spec: &ExperimentSpec) -> Vec<&'static str> {
    let mut files = vec![SPEC_FILE, RUNS_CSV, GENERATIONS_CSV];
    if spec.probe {
        files.extend([PROBE_CSV, PROBE_RUNS_CSV]);
    }
    files
}

/// Checks that the output files may be written, creating the directory.
pub fn prepare_output(spec: &ExperimentSpec, force: bool) -> Result<(), RunError> {
    fs::create_dir_all(&spec.out).map_err(io_err(&spec.out))?;
    if !force {
        for name in output_files(spec) {
            let path = spec.out.join(name);
            if path.exists() {
                return Err(RunError::Exists { path });
            }
        }
    }
    Ok(())
}

struct Sink {
    spec_problem: String,
    jobs: Vec<Job>,
    runs: csv::Writer<File>,
    generations: csv::Writer<File>,
    probe_runs: Option<csv::Writer<File>>,
    out: PathBuf,
    next: usize,
    pending_rows: BTreeMap<usize, Vec<GenerationRow>>,
    done: BTreeMap<usize, RunOutput>,
    results: Vec<RunResult>,
    probes: Vec<Vec<ProbeRow>>,
    failure: Option<RunError>,
}

impl Sink {
    fn flush(&mut self) -> Result<(), RunError> {
        let path = self.out.clone();
        self.generations.flush().map_err(io_err(&path))?;
        self.runs.flush().map_err(io_err(&path))?;
        if let Some(w) = &mut self.probe_runs {
            w.flush().map_err(io_err(&path))?;
        }
        Ok(())
    }

    fn write_row(&mut self, run_id: usize, row: &GenerationRow) -> Result<(), RunError> {
        let epsilon = row.epsilon.map(num).unwrap_or_default();
        self.generations.write_record([
            run_id.to_string(),
            row.generation.to_string(),
            num(row.best_error),
            num(row.mean_log_rate),
            epsilon,
        ])?;
        Ok(())
    }

    fn handle(&mut self, event: Event) -> Result<(), RunError> {
        match event {
            Event::Row(id, row) if id == self.next => {
                self.write_row(id, &row)?;
                self.generations.flush().map_err(io_err(&self.out))?;
            }
            Event::Row(id, row) => self.pending_rows.entry(id).or_default().push(row),
            Event::Done(id, output) => {
                self.done.insert(id, output);
            }
        }
        self.advance()
    }

    /// Writes everything the next runs in canonical order have produced.
    fn advance(&mut self) -> Result<(), RunError> {
        while self.next < self.jobs.len() {
            let id = self.next;
            if let Some(rows) = self.pending_rows.remove(&id) {
                for row in &rows {
                    self.write_row(id, row)?;
                }
            }
            let Some(output) = self.done.remove(&id) else { break };
            let job = self.jobs[id];
            match output.record {
                Ok(record) => {
                    let result = RunResult {
                        run_id: id,
                        seed: job.seed,
                        controller: job.controller,
                        problem: self.spec_problem.clone(),
                        solved: record.solved,
                        solve_generation: record.solve_generation,
                        final_best_error: record.final_best_error,
                    };
                    self.runs.write_record([
                        id.to_string(),
                        job.seed.to_string(),
                        job.controller.to_string(),
                        result.problem.clone(),
                        result.solved.to_string(),
                        result.solve_generation.map(|g| g.to_string()).unwrap_or_default(),
                        num(result.final_best_error),
                    ])?;
                    if let (Some(w), Some(rows)) = (&mut self.probe_runs, output.probe) {
                        for r in &rows {
                            w.write_record([
                                id.to_string(),
                                r.generation.to_string(),
                                num(r.rate),
                                r.kind.to_string(),
                                num(r.value),
                            ])?;
                        }
                        self.probes.push(rows);
                    }
                    self.results.push(result);
                }
                Err(source) => {
                    log::error!("run {id} failed: {source}");
                    self.failure.get_or_insert(RunError::Run {
                        run_id: id,
                        seed: job.seed,
                        controller: job.controller,
                        source,
                    });
                }
            }
            self.flush()?;
            self.next += 1;
        }
        Ok(())
    }
}

/// Averages per-run probe rows over the runs that reached each generation.
pub fn average_probe(runs: &[Vec<ProbeRow>], rates: &[f64]) -> Vec<ProbeRow> {
    let kind_index = |k: RewardKind| if k == RewardKind::Immediate { 0 } else { 1 };
    let mut acc: BTreeMap<(usize, usize, usize), (f64, usize)> = BTreeMap::new();
    for row in runs.iter().flatten() {
        let r = rates.iter().position(|&x| x == row.rate).unwrap_or(rates.len());
        let slot = acc.entry((row.generation, r, kind_index(row.kind))).or_insert((0.0, 0));
        slot.0 += row.value;
        slot.1 += 1;
    }
    acc.into_iter()
        .map(|((generation, r, k), (sum, n))| ProbeRow {
            generation,
            rate: rates[r],
            kind: if k == 0 { RewardKind::Immediate } else { RewardKind::MaxWindow },
            value: sum / n as f64,
        })
        .collect()
}

/// Runs the whole batch, writing CSVs into `spec.out`.
pub fn run_experiment(spec: &ExperimentSpec, force: bool) -> Result<BatchOutcome, RunError> {
    spec.validate()?;
    prepare_output(spec, force)?;
    let spec_path = spec.out.join(SPEC_FILE);
    fs::write(&spec_path, spec.to_config_text()).map_err(io_err(&spec_path))?;
    let out = &spec.out;
    let jobs = jobs(spec);
    let mut sink = Sink {
        spec_problem: spec.problem.to_string(),
        jobs: jobs.clone(),
        runs: csv_writer(&out.join(RUNS_CSV), &RUNS_HEADER)?,
        generations: csv_writer(&out.join(GENERATIONS_CSV), &GENERATIONS_HEADER)?,
        probe_runs: if spec.probe {
            let header: Vec<&str> = std::iter::once("run_id").chain(PROBE_HEADER).collect();
            Some(csv_writer(&out.join(PROBE_RUNS_CSV), &header)?)
        } else {
            None
        },
        out: out.clone(),
        next: 0,
        pending_rows: BTreeMap::new(),
        done: BTreeMap::new(),
        results: Vec::new(),
        probes: Vec::new(),
        failure: None,
    };

    let (tx, rx) = mpsc::channel::<Event>();
    std::thread::scope(|scope| -> Result<(), RunError> {
        scope.spawn(move || {
            with_problem(spec, |problem| {
                jobs.par_iter().for_each_with(tx, |tx: &mut Sender<Event>, job| {
                    let mut on_row = |row: &GenerationRow| {
                        let _ = tx.send(Event::Row(job.run_id, row.clone()));
                    };
                    let output = problem.run_one(spec, *job, &mut on_row);
                    let _ = tx.send(Event::Done(job.run_id, output));
                })
            })
        });
        for event in rx {
            sink.handle(event)?;
        }
        Ok(())
    })?;

    let probe = if spec.probe {
        let averaged = average_probe(&sink.probes, &spec.probe_rates);
        let path = out.join(PROBE_CSV);
        let mut w = csv_writer(&path, &PROBE_HEADER)?;
        for r in &averaged {
            w.write_record([r.generation.to_string(), num(r.rate), r.kind.to_string(), num(r.value)])?;
        }
        w.flush().map_err(io_err(&path))?;
        Some(averaged)
    } else {
        None
    };
    if let Some(failure) = sink.failure {
        return Err(failure);
    }
    Ok(BatchOutcome { results: sink.results, probe })
}

/// Reads `runs.csv` back.
pub fn read_runs(path: &Path) -> Result<Vec<RunResult>, RunError> {
    let shown = path.display().to_string();
    let mut reader = csv::Reader::from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != RUNS_HEADER {
        return Err(RunError::Parse { path: shown, line: 1, message: format!("unexpected header {header:?}") });
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let fail = |message: String| RunError::Parse { path: shown.clone(), line, message };
        let field = |i: usize| record.get(i).unwrap_or("");
        let num = |i: usize| -> Result<f64, RunError> {
            field(i).parse().map_err(|_| fail(format!("bad {} `{}`", RUNS_HEADER[i], field(i))))
        };
        out.push(RunResult {
            run_id: num(0)? as usize,
            seed: field(1).parse().map_err(|_| fail(format!("bad seed `{}`", field(1))))?,
            controller: field(2).parse().map_err(|e: mutrate::Error| fail(e.to_string()))?,
            problem: field(3).to_string(),
            solved: field(4).parse().map_err(|_| fail(format!("bad solved flag `{}`", field(4))))?,
            solve_generation: match field(5) {
                "" => None,
                g => Some(g.parse().map_err(|_| fail(format!("bad solve_generation `{g}`")))?),
            },
            final_best_error: num(6)?,
        });
    }
    Ok(out)
}
