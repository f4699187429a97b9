use std::fmt;

use mutrate::analysis::{bootstrap_ci, mean, two_proportion_z_test, welch_t_test, StatReport};
use mutrate::controller::ControllerMode;
use mutrate::rng::{fork, seeded, StreamTag};

use crate::runner::RunResult;

const RESAMPLES: usize = 10_000;
const LEVEL: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerSummary {
    pub controller: ControllerMode,
    pub runs: usize,
    pub successes: usize,
    pub mean_final_error: f64,
    /// Percentile bootstrap interval of the mean final error.
    pub ci: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub a: ControllerMode,
    pub b: ControllerMode,
    /// Two-sided Welch p-value on final errors.
    pub welch_p: Option<f64>,
    /// One-sided Welch p-value for `mean(a) < mean(b)`.
    pub welch_p_less: Option<f64>,
    /// Two-proportion z-test p-value on success counts.
    pub z_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub problem: String,
    pub controllers: Vec<ControllerSummary>,
    pub comparisons: Vec<Comparison>,
}

impl Summary {
    pub fn controller(&self, mode: ControllerMode) -> Option<&ControllerSummary> {
        self.controllers.iter().find(|c| c.controller == mode)
    }

    pub fn comparison(&self, a: ControllerMode, b: ControllerMode) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| c.a == a && c.b == b)
    }
}

/// Summarises finished runs per controller, in order of first appearance.
/// `seed` drives the bootstrap.
pub fn summarize(results: &[RunResult], seed: u64) -> Summary {
    let mut modes: Vec<ControllerMode> = Vec::new();
    for r in results {
        if !modes.contains(&r.controller) {
            modes.push(r.controller);
        }
    }
    let finals = |m: ControllerMode| -> Vec<f64> {
        results.iter().filter(|r| r.controller == m).map(|r| r.final_best_error).collect()
    };
    let successes = |m: ControllerMode| results.iter().filter(|r| r.controller == m && r.solved).count();
    let root = seeded(seed);
    let controllers = modes
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let errors = finals(m);
            let mut rng = fork(&root, StreamTag::Analysis, i as u64);
            let ci = bootstrap_ci(&errors, RESAMPLES, LEVEL, &mut rng).ok().map(|r: StatReport| (r.lower, r.upper));
            ControllerSummary {
                controller: m,
                runs: errors.len(),
                successes: successes(m),
                mean_final_error: mean(&errors),
                ci,
            }
        })
        .collect();
    let mut comparisons = Vec::new();
    for (i, &a) in modes.iter().enumerate() {
        for &b in &modes[i + 1..] {
            let welch = welch_t_test(&finals(a), &finals(b)).ok();
            let (na, nb) = (finals(a).len() as u64, finals(b).len() as u64);
            let z = two_proportion_z_test(successes(a) as u64, na, successes(b) as u64, nb).ok();
            comparisons.push(Comparison {
                a,
                b,
                welch_p: welch.map(|w| w.p),
                welch_p_less: welch.map(|w| w.p_less),
                z_p: z.map(|z| z.p),
            });
        }
    }
    let problem = results.first().map(|r| r.problem.clone()).unwrap_or_default();
    Summary { problem, controllers, comparisons }
}

fn opt(p: Option<f64>) -> String {
    p.map_or_else(|| "n/a".to_string(), |p| format!("{p:.4}"))
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "problem: {}", self.problem)?;
        writeln!(f, "{:<10} {:>9} {:>16} {:>35}", "controller", "solved", "mean final error", "95% bootstrap CI")?;
        for c in &self.controllers {
            let ci = c.ci.map_or_else(|| "n/a".to_string(), |(lo, hi)| format!("[{lo:.6e}, {hi:.6e}]"));
            let solved = format!("{}/{}", c.successes, c.runs);
            writeln!(f, "{:<10} {:>9} {:>16.6e} {:>35}", c.controller.to_string(), solved, c.mean_final_error, ci)?;
        }
        if !self.comparisons.is_empty() {
            writeln!(f)?;
            writeln!(f, "{:<18} {:>10} {:>12} {:>10}", "comparison", "welch p", "welch p (<)", "z-test p")?;
            for c in &self.comparisons {
                let pair = format!("{} vs {}", c.a, c.b);
                writeln!(f, "{:<18} {:>10} {:>12} {:>10}", pair, opt(c.welch_p), opt(c.welch_p_less), opt(c.z_p))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(id: usize, controller: ControllerMode, solved: bool, err: f64) -> RunResult {
        RunResult {
            run_id: id,
            seed: id as u64,
            controller,
            problem: "nguyen1".into(),
            solved,
            solve_generation: solved.then_some(3),
            final_best_error: err,
        }
    }

    #[test]
    fn counts_and_tests_per_pair() {
        let mut runs = Vec::new();
        for i in 0..50 {
            runs.push(result(i, ControllerMode::Bandit, i < 45, i as f64));
            runs.push(result(50 + i, ControllerMode::Samr, i < 16, 100.0 + i as f64));
        }
        let s = summarize(&runs, 7);
        assert_eq!(s.controller(ControllerMode::Bandit).unwrap().successes, 45);
        let c = s.comparison(ControllerMode::Bandit, ControllerMode::Samr).unwrap();
        assert!((c.z_p.unwrap() - 2.753288911836586e-09).abs() < 1e-12);
        assert!(c.welch_p_less.unwrap() < 1e-6);
        let (lo, hi) = s.controller(ControllerMode::Samr).unwrap().ci.unwrap();
        assert!(lo < 124.5 && 124.5 < hi);
        let text = s.to_string();
        assert!(text.contains("bandit vs samr") && text.contains("45/50"));
        assert_eq!(summarize(&runs, 7), s);
    }

    #[test]
    fn single_runs_report_missing_tests() {
        let runs = vec![result(0, ControllerMode::Fixed, true, 0.0), result(1, ControllerMode::Bandit, false, 1.0)];
        let s = summarize(&runs, 0);
        assert_eq!(s.comparisons[0].welch_p, None);
        assert!(s.to_string().contains("n/a"));
    }
}
