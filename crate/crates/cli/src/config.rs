//! Experiment configuration.
//!
//! Configs are flat `key = value` files. Keys before the first `[section]`
//! header belong to the implicit `run` section. Values are layered, later
//! layers winning: domain defaults, preset, config file, `MUTRATE_<SECTION>_<KEY>`
//! environment variables, command-line flags. Every value remembers where it
//! came from so diagnostics can point at the offending line.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mutrate::analysis::ProbeConfig;
use mutrate::controller::{ControllerMode, ControllerParams};
use mutrate::evolution::{EvolutionConfig, Selection};
use mutrate::funcmin::TestFunction;
use mutrate::rng::seeded;
use mutrate::sr::NguyenTarget;
use mutrate::TransformConfig;
use thiserror::Error;

pub const ENV_PREFIX: &str = "MUTRATE_";

const SECTIONS: [&str; 10] = ["run", "transform", "funcmin", "sr", "fixed", "samr", "gesmr", "lamr", "bandit", "probe"];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}: {message}")]
    Entry { origin: Origin, message: String },
    #[error("no problem given: set `problem = <name>`, e.g. `problem = ackley` or `problem = nguyen1`")]
    MissingProblem,
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Where a configuration value came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    Preset(Preset),
    File { path: PathBuf, line: usize },
    Env(String),
    Flag(&'static str),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Preset(p) => write!(f, "preset {p}"),
            Origin::File { path, line } => write!(f, "{}:{line}", path.display()),
            Origin::Env(var) => write!(f, "environment variable {var}"),
            Origin::Flag(flag) => write!(f, "flag --{flag}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub section: String,
    pub key: String,
    pub value: String,
    pub origin: Origin,
}

impl Entry {
    fn fail(&self, message: impl Into<String>) -> ConfigError {
        ConfigError::Entry { origin: self.origin.clone(), message: message.into() }
    }

    fn name(&self) -> String {
        if self.section == "run" {
            format!("`{}`", self.key)
        } else {
            format!("`{}.{}`", self.section, self.key)
        }
    }
}

/// Parses config text. `path` is only used in diagnostics.
pub fn parse_text(text: &str, path: &Path) -> Result<Vec<Entry>, ConfigError> {
    let mut section = "run".to_string();
    let mut entries: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let origin = Origin::File { path: path.to_path_buf(), line: i + 1 };
        let fail = |message: String| ConfigError::Entry { origin: origin.clone(), message };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| fail(format!("unterminated section header `{line}`")))?
                .trim()
                .to_ascii_lowercase();
            if !SECTIONS.contains(&name.as_str()) {
                return Err(fail(format!("unknown section `[{name}]`; known sections: {}", SECTIONS.join(", "))));
            }
            section = name;
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| fail(format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim().to_ascii_lowercase();
        if key.is_empty() {
            return Err(fail("missing key before `=`".into()));
        }
        if let Some(prev) = entries.iter().find(|e| e.section == section && e.key == key) {
            return Err(fail(format!("`{key}` already set at {}", prev.origin)));
        }
        entries.push(Entry { section: section.clone(), key, value: value.trim().to_string(), origin });
    }
    Ok(entries)
}

pub fn read_file(path: &Path) -> Result<Vec<Entry>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_text(&text, path)
}

/// Picks out `MUTRATE_<SECTION>_<KEY>` variables, e.g. `MUTRATE_BANDIT_LEN_HISTORY`
/// or `MUTRATE_RUN_SEED_BASE`.
pub fn env_entries(vars: impl IntoIterator<Item = (String, String)>) -> Result<Vec<Entry>, ConfigError> {
    let mut entries = Vec::new();
    for (var, value) in vars {
        let Some(rest) = var.strip_prefix(ENV_PREFIX) else { continue };
        let rest = rest.to_ascii_lowercase();
        let origin = Origin::Env(var.clone());
        let Some((section, key)) = rest.split_once('_').filter(|(s, k)| SECTIONS.contains(s) && !k.is_empty()) else {
            return Err(ConfigError::Entry {
                origin,
                message: format!("expected {ENV_PREFIX}<SECTION>_<KEY> with a section among {}", SECTIONS.join(", ")),
            });
        };
        entries.push(Entry { section: section.into(), key: key.into(), value: value.trim().into(), origin });
    }
    entries.sort_by(|a, b| (&a.section, &a.key).cmp(&(&b.section, &b.key)));
    Ok(entries)
}

/// A command-line override of a `run` key.
pub fn flag(name: &'static str, key: &str, value: impl ToString) -> Entry {
    Entry { section: "run".into(), key: key.into(), value: value.to_string(), origin: Origin::Flag(name) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    FuncMin,
    SymbolicRegression,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Domain::FuncMin => "function minimization",
            Domain::SymbolicRegression => "symbolic regression",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemId {
    FuncMin(TestFunction),
    Sr(NguyenTarget),
}

impl ProblemId {
    pub fn domain(self) -> Domain {
        match self {
            ProblemId::FuncMin(_) => Domain::FuncMin,
            ProblemId::Sr(_) => Domain::SymbolicRegression,
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemId::FuncMin(t) => t.fmt(f),
            ProblemId::Sr(t) => t.fmt(f),
        }
    }
}

impl FromStr for ProblemId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Ok(t) = s.parse() {
            return Ok(ProblemId::FuncMin(t));
        }
        if let Ok(t) = s.parse() {
            return Ok(ProblemId::Sr(t));
        }
        let funcs: Vec<String> = TestFunction::ALL.iter().map(|t| t.to_string()).collect();
        Err(format!("unknown problem `{s}`; expected one of {}, nguyen1..nguyen8", funcs.join(", ")))
    }
}

/// Bundled scale settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// d = 100, N = 101, 200 generations, 20 runs.
    FuncminDesk,
    /// N = 500, 150 generations, 10 runs.
    SrDesk,
    /// Full-scale function minimization: 1000 generations (100 for Linear), 50 runs.
    FuncminPaper,
    /// Full-scale symbolic regression: N = 1000, 300 generations, 50 runs.
    SrPaper,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::FuncminDesk, Preset::SrDesk, Preset::FuncminPaper, Preset::SrPaper];

    pub fn domain(self) -> Domain {
        match self {
            Preset::FuncminDesk | Preset::FuncminPaper => Domain::FuncMin,
            Preset::SrDesk | Preset::SrPaper => Domain::SymbolicRegression,
        }
    }

    fn settings(self) -> &'static [(&'static str, &'static str, &'static str)] {
        match self {
            Preset::FuncminDesk => &[
                ("funcmin", "dimension", "100"),
                ("run", "population", "101"),
                ("run", "elites", "1"),
                ("run", "selection", "truncation:10"),
                ("run", "generations", "200"),
                ("run", "runs", "20"),
            ],
            Preset::SrDesk => &[("run", "population", "500"), ("run", "generations", "150"), ("run", "runs", "10")],
            Preset::FuncminPaper => &[
                ("funcmin", "dimension", "100"),
                ("run", "population", "101"),
                ("run", "elites", "1"),
                ("run", "selection", "truncation:10"),
                ("run", "runs", "50"),
            ],
            Preset::SrPaper => &[
                ("run", "population", "1000"),
                ("run", "elites", "0"),
                ("run", "selection", "epsilon-lexicase"),
                ("run", "generations", "300"),
                ("run", "runs", "50"),
            ],
        }
    }

    pub fn entries(self) -> Vec<Entry> {
        self.settings()
            .iter()
            .map(|&(section, key, value)| Entry {
                section: section.into(),
                key: key.into(),
                value: value.into(),
                origin: Origin::Preset(self),
            })
            .collect()
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::FuncminDesk => "funcmin-desk",
            Preset::SrDesk => "sr-desk",
            Preset::FuncminPaper => "funcmin-paper",
            Preset::SrPaper => "sr-paper",
        })
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Preset::ALL.into_iter().find(|p| p.to_string() == s).ok_or_else(|| {
            let names: Vec<String> = Preset::ALL.iter().map(|p| p.to_string()).collect();
            format!("unknown preset `{s}`; expected one of {}", names.join(", "))
        })
    }
}

/// Everything needed to run a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub problem: ProblemId,
    pub controllers: Vec<ControllerMode>,
    pub runs: usize,
    pub seed_base: u64,
    pub out: PathBuf,
    pub evolution: EvolutionConfig,
    pub params: ControllerParams,
    pub dimension: usize,
    pub init_sigma: f64,
    pub sr_init_len: (usize, usize),
    pub sr_max_len: usize,
    pub probe: bool,
    pub probe_rates: Vec<f64>,
    /// Defaults to the population size.
    pub probe_samples: Option<usize>,
    /// Defaults to the reward history length.
    pub probe_kernel: Option<usize>,
    pub probe_alpha: f64,
}

impl ExperimentSpec {
    /// Paper-scale defaults for `problem`'s domain.
    pub fn defaults(problem: ProblemId) -> Self {
        let probe = ProbeConfig::new(0);
        let (evolution, params, init_sigma) = match problem {
            ProblemId::FuncMin(f) => (
                EvolutionConfig { generations: f.default_generations(), ..EvolutionConfig::funcmin() },
                ControllerParams::gaussian(),
                f.init_sigma(),
            ),
            ProblemId::Sr(_) => (EvolutionConfig::symbolic_regression(), ControllerParams::umad(), 0.0),
        };
        Self {
            problem,
            controllers: vec![ControllerMode::Bandit],
            runs: 50,
            seed_base: 0,
            out: PathBuf::from("results"),
            evolution,
            params,
            dimension: 100,
            init_sigma,
            sr_init_len: (5, 50),
            sr_max_len: 500,
            probe: false,
            probe_rates: probe.rates,
            probe_samples: None,
            probe_kernel: None,
            probe_alpha: probe.ewma_alpha,
        }
    }

    pub fn probe_config(&self) -> ProbeConfig {
        ProbeConfig {
            rates: self.probe_rates.clone(),
            samples_per_rate: self.probe_samples.unwrap_or(self.evolution.population_size),
            kernel: self.probe_kernel.unwrap_or(self.params.bandit.config.len_history),
            ewma_alpha: self.probe_alpha,
        }
    }

    /// Seed of run `i` within each controller's batch.
    pub fn seed(&self, i: usize) -> u64 {
        self.seed_base.wrapping_add(i as u64)
    }

    fn apply(&mut self, e: &Entry) -> Result<(), ConfigError> {
        let p = &mut self.params;
        let b = &mut p.bandit;
        match (e.section.as_str(), e.key.as_str()) {
            ("run", "problem") => self.problem = e.value.parse().map_err(|m| e.fail(m))?,
            ("run", "controllers") => self.controllers = controller_list(e)?,
            ("run", "runs") => self.runs = positive(e)?,
            ("run", "seed_base") => self.seed_base = number(e)?,
            ("run", "out") => {
                if e.value.is_empty() {
                    return Err(e.fail("`out` must name a directory"));
                }
                self.out = PathBuf::from(&e.value)
            }
            ("run", "population") => self.evolution.population_size = positive(e)?,
            ("run", "elites") => self.evolution.elites = number(e)?,
            ("run", "generations") => self.evolution.generations = positive(e)?,
            ("run", "selection") => {
                self.evolution.selection = e.value.parse::<Selection>().map_err(|err| e.fail(err.to_string()))?
            }
            ("run", "len_history") => b.config.len_history = positive(e)?,
            ("run", "probe") => self.probe = switch(e)?,
            ("transform", "kind") => {
                self.evolution.transform = match e.value.to_ascii_lowercase().as_str() {
                    "identity" => TransformConfig::identity(),
                    "log" => TransformConfig { identity: false, ..self.evolution.transform },
                    _ => return Err(e.fail(format!("{} must be `identity` or `log`, got `{}`", e.name(), e.value))),
                }
            }
            ("transform", "c") => self.evolution.transform.c = positive_real(e)?,
            ("funcmin", "dimension") => self.dimension = positive(e)?,
            ("funcmin", "init_sigma") => self.init_sigma = positive_real(e)?,
            ("sr", "init_min_len") => self.sr_init_len.0 = positive(e)?,
            ("sr", "init_max_len") => self.sr_init_len.1 = positive(e)?,
            ("sr", "max_len") => self.sr_max_len = positive(e)?,
            ("fixed", "rate") => p.fixed_rate = positive_real(e)?,
            ("samr", "factor") => p.samr.factor = positive_real(e)?,
            ("samr", "init_min") => p.samr.init_range.0 = positive_real(e)?,
            ("samr", "init_max") => p.samr.init_range.1 = positive_real(e)?,
            ("gesmr", "size") => p.gesmr_size = positive(e)?,
            ("gesmr", "truncation") => p.gesmr_truncation = positive(e)?,
            ("gesmr", "factor") => p.gesmr_factor = positive_real(e)?,
            ("gesmr", "init_min") => p.gesmr_init_range.0 = positive_real(e)?,
            ("gesmr", "init_max") => p.gesmr_init_range.1 = positive_real(e)?,
            ("lamr", "candidates") => p.lamr_candidates = positive(e)?,
            ("lamr", "min") => p.lamr_range.0 = positive_real(e)?,
            ("lamr", "max") => p.lamr_range.1 = positive_real(e)?,
            ("lamr", "lookahead") => p.lamr_lookahead = positive(e)?,
            ("bandit", "num_bandits") => b.num_bandits = positive(e)?,
            ("bandit", "num_codings") => b.config.num_codings = positive(e)?,
            ("bandit", "momentum") => b.config.momentum = real(e)?,
            ("bandit", "sigma") => b.config.sigma = real(e)?,
            ("bandit", "lower") => b.config.lower = real(e)?,
            ("bandit", "upper") => b.config.upper = real(e)?,
            ("bandit", "resolution") => b.config.resolution = positive_real(e)?,
            ("bandit", "lr_exp_min") => b.lr_exponents.0 = real(e)?,
            ("bandit", "lr_exp_max") => b.lr_exponents.1 = real(e)?,
            ("bandit", "epsilon_start") => b.schedule.start = probability(e)?,
            ("bandit", "epsilon_end") => b.schedule.end = probability(e)?,
            ("bandit", "anneal_generations") => b.schedule.anneal_generations = number(e)?,
            ("probe", "rates") => self.probe_rates = real_list(e)?,
            ("probe", "samples") => self.probe_samples = Some(positive(e)?),
            ("probe", "kernel") => self.probe_kernel = Some(positive(e)?),
            ("probe", "alpha") => self.probe_alpha = positive_real(e)?,
            _ => return Err(e.fail(format!("unknown key {}", e.name()))),
        }
        Ok(())
    }

    /// Cross-field checks that single values cannot catch.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| ConfigError::Invalid(m);
        self.evolution.validate().map_err(|e| invalid(e.to_string()))?;
        if self.evolution.elites >= self.evolution.population_size {
            return Err(invalid("`elites` must be smaller than `population`".into()));
        }
        let (lo, hi) = self.sr_init_len;
        if self.problem.domain() == Domain::SymbolicRegression && !(lo <= hi && hi <= self.sr_max_len) {
            return Err(invalid(format!(
                "SR lengths need init_min_len <= init_max_len <= max_len, got {lo}, {hi}, {}",
                self.sr_max_len
            )));
        }
        let b = &self.params.bandit;
        if b.lr_exponents.0 > b.lr_exponents.1 {
            return Err(invalid("`bandit.lr_exp_min` exceeds `bandit.lr_exp_max`".into()));
        }
        // Building each controller once runs the library's own parameter checks.
        for &mode in &self.controllers {
            self.params
                .build(mode, self.evolution.transform, &mut seeded(0))
                .map_err(|e| invalid(format!("{mode}: {e}")))?;
        }
        if self.probe {
            self.probe_config().validate().map_err(|e| invalid(format!("probe: {e}")))?;
            if !self.controllers.contains(&ControllerMode::Fixed) {
                return Err(invalid("`probe = on` needs `fixed` among the controllers".into()));
            }
        }
        Ok(())
    }

    /// Canonical text form with every value spelled out; parsing it back
    /// yields the same spec.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let ev = &self.evolution;
        let p = &self.params;
        let b = &p.bandit;
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let modes: Vec<String> = self.controllers.iter().map(|m| m.to_string()).collect();
        let _ = writeln!(s, "problem = {}", self.problem);
        let _ = writeln!(s, "controllers = {}", modes.join(", "));
        let _ = writeln!(s, "runs = {}", self.runs);
        let _ = writeln!(s, "seed_base = {}", self.seed_base);
        let _ = writeln!(s, "out = {}", self.out.display());
        let _ = writeln!(s, "population = {}", ev.population_size);
        let _ = writeln!(s, "elites = {}", ev.elites);
        let _ = writeln!(s, "generations = {}", ev.generations);
        let _ = writeln!(s, "selection = {}", ev.selection);
        let _ = writeln!(s, "len_history = {}", b.config.len_history);
        let _ = writeln!(s, "probe = {}", if self.probe { "on" } else { "off" });
        let _ = writeln!(s, "\n[transform]");
        let _ = writeln!(s, "kind = {}", if ev.transform.identity { "identity" } else { "log" });
        let _ = writeln!(s, "c = {:?}", ev.transform.c);
        match self.problem.domain() {
            Domain::FuncMin => {
                let _ = writeln!(s, "\n[funcmin]");
                let _ = writeln!(s, "dimension = {}", self.dimension);
                let _ = writeln!(s, "init_sigma = {:?}", self.init_sigma);
            }
            Domain::SymbolicRegression => {
                let _ = writeln!(s, "\n[sr]");
                let _ = writeln!(s, "init_min_len = {}", self.sr_init_len.0);
                let _ = writeln!(s, "init_max_len = {}", self.sr_init_len.1);
                let _ = writeln!(s, "max_len = {}", self.sr_max_len);
            }
        }
        let _ = writeln!(s, "\n[fixed]\nrate = {:?}", p.fixed_rate);
        let _ = writeln!(s, "\n[samr]");
        let _ = writeln!(s, "factor = {:?}", p.samr.factor);
        let _ = writeln!(s, "init_min = {:?}", p.samr.init_range.0);
        let _ = writeln!(s, "init_max = {:?}", p.samr.init_range.1);
        let _ = writeln!(s, "\n[gesmr]");
        let _ = writeln!(s, "size = {}", p.gesmr_size);
        let _ = writeln!(s, "truncation = {}", p.gesmr_truncation);
        let _ = writeln!(s, "factor = {:?}", p.gesmr_factor);
        let _ = writeln!(s, "init_min = {:?}", p.gesmr_init_range.0);
        let _ = writeln!(s, "init_max = {:?}", p.gesmr_init_range.1);
        let _ = writeln!(s, "\n[lamr]");
        let _ = writeln!(s, "candidates = {}", p.lamr_candidates);
        let _ = writeln!(s, "min = {:?}", p.lamr_range.0);
        let _ = writeln!(s, "max = {:?}", p.lamr_range.1);
        let _ = writeln!(s, "lookahead = {}", p.lamr_lookahead);
        let _ = writeln!(s, "\n[bandit]");
        let _ = writeln!(s, "num_bandits = {}", b.num_bandits);
        let _ = writeln!(s, "num_codings = {}", b.config.num_codings);
        let _ = writeln!(s, "momentum = {:?}", b.config.momentum);
        let _ = writeln!(s, "sigma = {:?}", b.config.sigma);
        let _ = writeln!(s, "lower = {:?}", b.config.lower);
        let _ = writeln!(s, "upper = {:?}", b.config.upper);
        let _ = writeln!(s, "resolution = {:?}", b.config.resolution);
        let _ = writeln!(s, "lr_exp_min = {:?}", b.lr_exponents.0);
        let _ = writeln!(s, "lr_exp_max = {:?}", b.lr_exponents.1);
        let _ = writeln!(s, "epsilon_start = {:?}", b.schedule.start);
        let _ = writeln!(s, "epsilon_end = {:?}", b.schedule.end);
        let _ = writeln!(s, "anneal_generations = {}", b.schedule.anneal_generations);
        let probe = self.probe_config();
        let _ = writeln!(s, "\n[probe]");
        let _ = writeln!(s, "rates = {}", list(&probe.rates));
        let _ = writeln!(s, "samples = {}", probe.samples_per_rate);
        let _ = writeln!(s, "kernel = {}", probe.kernel);
        let _ = writeln!(s, "alpha = {:?}", probe.ewma_alpha);
        s
    }
}

/// Merges layers in order and builds the spec. The problem is looked up
/// first because it decides the defaults everything else overrides.
pub fn build(layers: Vec<Entry>) -> Result<ExperimentSpec, ConfigError> {
    let problem_entry = layers.iter().rev().find(|e| e.section == "run" && e.key == "problem");
    let problem: ProblemId = match problem_entry {
        Some(e) => e.value.parse().map_err(|m| e.fail(m))?,
        None => return Err(ConfigError::MissingProblem),
    };
    let mut spec = ExperimentSpec::defaults(problem);
    for e in &layers {
        if let Origin::Preset(preset) = e.origin {
            if preset.domain() != problem.domain() {
                return Err(ConfigError::Invalid(format!(
                    "preset {preset} is for {}, but {problem} is {}",
                    preset.domain(),
                    problem.domain()
                )));
            }
        }
        spec.apply(e)?;
    }
    spec.validate()?;
    Ok(spec)
}

/// Sources for [`load`].
#[derive(Debug, Clone, Default)]
pub struct Sources {
    pub preset: Option<Preset>,
    pub config: Option<PathBuf>,
    pub env: Vec<(String, String)>,
    pub flags: Vec<Entry>,
}

impl Sources {
    /// Reads the process environment.
    pub fn with_process_env(mut self) -> Self {
        self.env = std::env::vars().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        self
    }
}

pub fn load(sources: &Sources) -> Result<ExperimentSpec, ConfigError> {
    let mut layers = Vec::new();
    if let Some(preset) = sources.preset {
        layers.extend(preset.entries());
    }
    if let Some(path) = &sources.config {
        layers.extend(read_file(path)?);
    }
    layers.extend(env_entries(sources.env.iter().cloned())?);
    layers.extend(sources.flags.iter().cloned());
    build(layers)
}

fn number<T: FromStr>(e: &Entry) -> Result<T, ConfigError> {
    e.value.parse().map_err(|_| e.fail(format!("{} expects a non-negative integer, got `{}`", e.name(), e.value)))
}

fn positive(e: &Entry) -> Result<usize, ConfigError> {
    match e.value.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(e.fail(format!("{} expects a positive integer, got `{}`", e.name(), e.value))),
    }
}

fn real(e: &Entry) -> Result<f64, ConfigError> {
    match e.value.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(e.fail(format!("{} expects a finite number, got `{}`", e.name(), e.value))),
    }
}

fn positive_real(e: &Entry) -> Result<f64, ConfigError> {
    match real(e)? {
        x if x > 0.0 => Ok(x),
        _ => Err(e.fail(format!("{} must be positive, got `{}`", e.name(), e.value))),
    }
}

fn probability(e: &Entry) -> Result<f64, ConfigError> {
    match real(e)? {
        x if (0.0..=1.0).contains(&x) => Ok(x),
        _ => Err(e.fail(format!("{} must lie in [0, 1], got `{}`", e.name(), e.value))),
    }
}

fn switch(e: &Entry) -> Result<bool, ConfigError> {
    match e.value.to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(e.fail(format!("{} expects on or off, got `{}`", e.name(), e.value))),
    }
}

fn real_list(e: &Entry) -> Result<Vec<f64>, ConfigError> {
    let items: Vec<&str> = e.value.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(e.fail(format!("{} needs at least one value", e.name())));
    }
    items
        .into_iter()
        .map(|s| match s.parse::<f64>() {
            Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
            _ => Err(e.fail(format!("{} expects positive numbers, got `{s}`", e.name()))),
        })
        .collect()
}

fn controller_list(e: &Entry) -> Result<Vec<ControllerMode>, ConfigError> {
    let mut modes = Vec::new();
    for s in e.value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let mode: ControllerMode = s.parse().map_err(|err: mutrate::Error| e.fail(err.to_string()))?;
        if modes.contains(&mode) {
            return Err(e.fail(format!("controller `{mode}` listed twice")));
        }
        modes.push(mode);
    }
    if modes.is_empty() {
        return Err(e.fail("`controllers` needs at least one of fixed, samr, gesmr, lamr, bandit"));
    }
    Ok(modes)
}
