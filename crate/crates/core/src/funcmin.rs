//! Real-valued function minimization: the benchmark functions, Gaussian
//! mutation whose standard deviation is the controlled rate, and population
//! initialization.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::reward::ErrorVector;

/// Mutation standard deviations are clamped to this range after
/// exponentiating a log rate.
pub const MIN_SIGMA: f64 = 1e-300;
pub const MAX_SIGMA: f64 = 1e300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestFunction {
    Ackley,
    Griewank,
    Rastrigin,
    Rosenbrock,
    Sphere,
    Linear,
}

impl TestFunction {
    pub const ALL: [TestFunction; 6] = [
        TestFunction::Ackley,
        TestFunction::Griewank,
        TestFunction::Rastrigin,
        TestFunction::Rosenbrock,
        TestFunction::Sphere,
        TestFunction::Linear,
    ];

    /// Standard deviation of the initial population.
    pub fn init_sigma(self) -> f64 {
        match self {
            TestFunction::Ackley => 10.0,
            TestFunction::Griewank => 1000.0,
            TestFunction::Rastrigin => 10.0,
            TestFunction::Rosenbrock => 1.0,
            TestFunction::Sphere => 10.0,
            TestFunction::Linear => 1.0,
        }
    }

    /// Generation limit of the full-length experiment.
    pub fn default_generations(self) -> usize {
        match self {
            TestFunction::Linear => 100,
            _ => 1000,
        }
    }

    pub fn minimizer(self, d: usize) -> Option<Vec<f64>> {
        match self {
            TestFunction::Linear => None,
            TestFunction::Rosenbrock => Some(vec![1.0; d]),
            _ => Some(vec![0.0; d]),
        }
    }

    /// Raw function value; may be non-finite for extreme inputs.
    pub fn value(self, x: &[f64]) -> f64 {
        let d = x.len() as f64;
        match self {
            TestFunction::Ackley => {
                let (a, b, c) = (20.0, 0.2, 2.0 * PI);
                let sq = x.iter().map(|v| v * v).sum::<f64>() / d;
                let cs = x.iter().map(|v| (c * v).cos()).sum::<f64>() / d;
                -a * (-b * sq.sqrt()).exp() - cs.exp() + a + E
            }
            TestFunction::Griewank => {
                let sum = x.iter().map(|v| v * v / 4000.0).sum::<f64>();
                let prod = x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
                    .product::<f64>();
                sum - prod + 1.0
            }
            TestFunction::Rastrigin => {
                10.0 * d + x.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>()
            }
            TestFunction::Rosenbrock => x
                .windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (w[0] - 1.0).powi(2))
                .sum(),
            TestFunction::Sphere => x.iter().map(|v| v * v).sum(),
            TestFunction::Linear => x.iter().sum(),
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TestFunction::Ackley => "ackley",
            TestFunction::Griewank => "griewank",
            TestFunction::Rastrigin => "rastrigin",
            TestFunction::Rosenbrock => "rosenbrock",
            TestFunction::Sphere => "sphere",
            TestFunction::Linear => "linear",
        };
        f.write_str(s)
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TestFunction::ALL
            .into_iter()
            .find(|f| f.to_string() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Contract(format!("unknown test function `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealVector(pub Vec<f64>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuncMinProblem {
    pub function: TestFunction,
    pub dimension: usize,
    pub init_sigma: f64,
}

impl FuncMinProblem {
    pub fn new(function: TestFunction, dimension: usize) -> Self {
        Self { function, dimension, init_sigma: function.init_sigma() }
    }

    /// Single-case error, clamped to the finite range.
    pub fn evaluate_vector(&self, x: &RealVector) -> Result<ErrorVector> {
        if x.0.len() != self.dimension {
            return Err(Error::Contract(format!(
                "expected {} coordinates, got {}",
                self.dimension,
                x.0.len()
            )));
        }
        let mut v = self.function.value(&x.0);
        if !v.is_finite() {
            log::warn!("{} overflowed to {v}; clamping", self.function);
            v = if v == f64::NEG_INFINITY { -f64::MAX } else { f64::MAX };
        }
        ErrorVector::single(v)
    }

    pub fn init_population(&self, size: usize, rng: &mut dyn RngCore) -> Vec<RealVector> {
        (0..size).map(|_| self.random_vector(rng)).collect()
    }

    fn random_vector(&self, rng: &mut dyn RngCore) -> RealVector {
        let n = Normal::new(0.0, self.init_sigma).expect("init sigma is positive");
        RealVector((0..self.dimension).map(|_| n.sample(rng)).collect())
    }
}

/// Adds `N(0, sigma^2)` noise to every coordinate. `sigma` is clamped to
/// `[MIN_SIGMA, MAX_SIGMA]` and coordinates stay finite.
pub fn gaussian_mutate(x: &RealVector, sigma: f64, rng: &mut dyn RngCore) -> Result<RealVector> {
    if !(sigma > 0.0) {
        return Err(Error::Contract(format!("mutation strength must be positive, got {sigma}")));
    }
    let sigma = sigma.clamp(MIN_SIGMA, MAX_SIGMA);
    Ok(RealVector(
        x.0.iter()
            .map(|&v| {
                let z: f64 = StandardNormal.sample(rng);
                (v + sigma * z).clamp(-f64::MAX, f64::MAX)
            })
            .collect(),
    ))
}

impl Problem for FuncMinProblem {
    type Genome = RealVector;

    fn name(&self) -> String {
        self.function.to_string()
    }

    fn random_genome(&self, rng: &mut dyn RngCore) -> RealVector {
        self.random_vector(rng)
    }

    fn evaluate(&self, genome: &RealVector) -> Result<ErrorVector> {
        self.evaluate_vector(genome)
    }

    fn mutate(&self, genome: &RealVector, rate: f64, rng: &mut dyn RngCore) -> Result<RealVector> {
        gaussian_mutate(genome, rate, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    #[test]
    fn minima_are_zero() {
        for f in TestFunction::ALL {
            if let Some(x) = f.minimizer(100) {
                assert!(f.value(&x).abs() < 1e-12, "{f}: {}", f.value(&x));
            }
        }
        assert_eq!(TestFunction::Linear.value(&[0.0; 100]), 0.0);
        assert_eq!(TestFunction::Sphere.value(&[1.0; 100]), 100.0);
    }

    #[test]
    fn known_values() {
        // Single coordinate at 1: Rastrigin = 10 + 1 - 10 cos(2 pi) = 1.
        assert!((TestFunction::Rastrigin.value(&[1.0]) - 1.0).abs() < 1e-12);
        // Rosenbrock(0, 0) = 1.
        assert_eq!(TestFunction::Rosenbrock.value(&[0.0, 0.0]), 1.0);
        // Linear sums.
        assert_eq!(TestFunction::Linear.value(&[1.0, -3.0, 0.5]), -1.5);
        // Griewank at (pi*sqrt(1), 0): pi^2/4000 - (cos(pi) * 1) + 1.
        let g = TestFunction::Griewank.value(&[PI, 0.0]);
        assert!((g - (PI * PI / 4000.0 + 2.0)).abs() < 1e-12);
    }

    #[test]
    fn ackley_and_rastrigin_are_non_negative() {
        let mut rng = seeded(1);
        for _ in 0..100_000 {
            let d = rng.random_range(1..8);
            let scale = 10f64.powf(rng.random_range(-3.0..3.0));
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-scale..scale)).collect();
            assert!(TestFunction::Ackley.value(&x) >= -1e-12);
            assert!(TestFunction::Rastrigin.value(&x) >= -1e-9);
        }
    }

    #[test]
    fn sphere_gradient_matches_finite_differences() {
        let mut rng = seeded(2);
        let h = 1e-5;
        for _ in 0..100 {
            let x: Vec<f64> = (0..10).map(|_| rng.random_range(-5.0..5.0)).collect();
            for i in 0..x.len() {
                let (mut up, mut down) = (x.clone(), x.clone());
                up[i] += h;
                down[i] -= h;
                let fd = (TestFunction::Sphere.value(&up) - TestFunction::Sphere.value(&down)) / (2.0 * h);
                let exact = 2.0 * x[i];
                assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0), "{fd} vs {exact}");
            }
        }
    }

    #[test]
    fn overflow_is_clamped() {
        let p = FuncMinProblem::new(TestFunction::Sphere, 2);
        let e = p.evaluate_vector(&RealVector(vec![1e300, 1e300])).unwrap();
        assert_eq!(e.as_slice(), &[f64::MAX]);
        let p = FuncMinProblem::new(TestFunction::Linear, 2);
        let e = p.evaluate_vector(&RealVector(vec![-f64::MAX, -f64::MAX])).unwrap();
        assert_eq!(e.as_slice(), &[-f64::MAX]);
        assert!(p.evaluate_vector(&RealVector(vec![0.0])).is_err());
    }

    #[test]
    fn init_sigmas() {
        assert_eq!(TestFunction::Rosenbrock.init_sigma(), 1.0);
        assert_eq!(TestFunction::Griewank.init_sigma(), 1000.0);
        assert_eq!(TestFunction::Ackley.init_sigma(), 10.0);
        assert_eq!(TestFunction::Linear.default_generations(), 100);
        let mut rng = seeded(3);
        for f in [TestFunction::Rosenbrock, TestFunction::Griewank] {
            let p = FuncMinProblem::new(f, 100);
            let pop = p.init_population(1000, &mut rng);
            let all: Vec<f64> = pop.iter().flat_map(|v| v.0.iter().copied()).collect();
            let sd = (all.iter().map(|v| v * v).sum::<f64>() / all.len() as f64).sqrt();
            assert!((sd / p.init_sigma - 1.0).abs() < 0.01, "{f}: {sd}");
        }
    }

    #[test]
    fn gaussian_mutation_statistics() {
        let mut rng = seeded(4);
        let x = RealVector(vec![0.0; 1_000_000]);
        let y = gaussian_mutate(&x, 1.0, &mut rng).unwrap();
        let n = y.0.len() as f64;
        let mean = y.0.iter().sum::<f64>() / n;
        let sd = (y.0.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(mean.abs() < 3.0 / n.sqrt());
        assert!((sd - 1.0).abs() < 0.01);
        assert!(y.0.iter().all(|&v| v != 0.0));

        let x = RealVector(vec![1.5, -2.0]);
        let y = gaussian_mutate(&x, 1e-300, &mut rng).unwrap();
        assert_eq!(x, y);
        assert!(gaussian_mutate(&x, 0.0, &mut rng).is_err());
        let y = gaussian_mutate(&x, f64::INFINITY, &mut rng).unwrap();
        assert!(y.0.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn parse_names() {
        for f in TestFunction::ALL {
            assert_eq!(f.to_string().parse::<TestFunction>().unwrap(), f);
        }
        assert!("Ackley".parse::<TestFunction>().is_ok());
        assert!("bohachevsky".parse::<TestFunction>().is_err());
    }
}
