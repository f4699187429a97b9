//! Credit assignment: the symmetric log error transform, the immediate reward
//! of a parent/child pair and the windowed maximum over recent rewards.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-case errors of one individual. Never empty, every entry finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorVector(Vec<f64>);

impl ErrorVector {
    pub fn new(errors: Vec<f64>) -> Result<Self> {
        if errors.is_empty() {
            return Err(Error::Contract("error vector must hold at least one case".into()));
        }
        if let Some(bad) = errors.iter().find(|e| !e.is_finite()) {
            return Err(Error::Domain(format!("non-finite error {bad}")));
        }
        Ok(Self(errors))
    }

    pub fn single(error: f64) -> Result<Self> {
        Self::new(vec![error])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Mean of the raw errors.
    pub fn mean(&self) -> f64 {
        finite_mean(self.0.iter().copied())
    }

    /// Mean of the transformed errors.
    pub fn transformed_mean(&self, cfg: &TransformConfig) -> f64 {
        finite_mean(self.0.iter().map(|&e| cfg.apply(e)))
    }
}

// Divides before summing so that errors near f64::MAX do not overflow.
fn finite_mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len() as f64;
    values.map(|v| v / n).sum::<f64>().clamp(-f64::MAX, f64::MAX)
}

/// Parameters of `sgn(x) * ln(c + |x|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformConfig {
    /// Resolution constant: the transform is roughly linear on `[-c, c]`.
    pub c: f64,
    /// Skip the transform entirely (single-case errors).
    pub identity: bool,
}

impl TransformConfig {
    pub fn log(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Domain(format!("transform constant must be positive, got {c}")));
        }
        Ok(Self { c, identity: false })
    }

    pub const fn identity() -> Self {
        Self { c: 1.0, identity: true }
    }

    /// Integer-valued error domains.
    pub const fn integer_errors() -> Self {
        Self { c: 1.0, identity: false }
    }

    /// Symbolic regression, where errors below 0.01 count as hits.
    pub const fn symbolic_regression() -> Self {
        Self { c: 0.01, identity: false }
    }

    fn apply(&self, x: f64) -> f64 {
        if self.identity {
            x
        } else if x == 0.0 {
            0.0
        } else {
            x.signum() * (self.c + x.abs()).ln()
        }
    }
}

/// Symmetric log transform of a single error value.
pub fn transform_error(x: f64, cfg: &TransformConfig) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("cannot transform non-finite error {x}")));
    }
    Ok(cfg.apply(x))
}

/// Decrease of the mean transformed error from `parent` to `child`.
/// Positive when the child improved.
pub fn immediate_reward(parent: &ErrorVector, child: &ErrorVector, cfg: &TransformConfig) -> Result<f64> {
    if parent.len() != child.len() {
        return Err(Error::Contract(format!(
            "parent has {} cases but child has {}",
            parent.len(),
            child.len()
        )));
    }
    let r = parent.transformed_mean(cfg) - child.transformed_mean(cfg);
    Ok(r.clamp(-f64::MAX, f64::MAX))
}

/// Bounded FIFO of recent rewards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardHistory {
    buffer: VecDeque<f64>,
    capacity: usize,
}

impl RewardHistory {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Contract("reward history capacity must be at least 1".into()));
        }
        Ok(Self { buffer: VecDeque::new(), capacity })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.buffer.iter().copied()
    }

    pub fn push(&mut self, reward: f64) {
        if self.buffer.len() == self.capacity {
            self.buffer.pop_front();
        }
        self.buffer.push_back(reward);
    }

    pub fn max(&self) -> Option<f64> {
        self.buffer.iter().copied().reduce(f64::max)
    }
}

/// Pushes `new_reward` (evicting the oldest entry when full) and returns the
/// maximum over what remains in the window.
pub fn windowed_max(history: &mut RewardHistory, new_reward: f64) -> f64 {
    history.push(new_reward);
    history.max().expect("history holds the reward just pushed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::E;

    fn ev(v: &[f64]) -> ErrorVector {
        ErrorVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn transform_examples() {
        let cfg = TransformConfig::integer_errors();
        assert_eq!(transform_error(0.0, &cfg).unwrap(), 0.0);
        assert!((transform_error(E - 1.0, &cfg).unwrap() - 1.0).abs() < 1e-15);
        assert!((transform_error(-(E - 1.0), &cfg).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(transform_error(-3.5, &TransformConfig::identity()).unwrap(), -3.5);
        assert!(matches!(transform_error(f64::NAN, &cfg), Err(Error::Domain(_))));
        assert!(transform_error(f64::INFINITY, &cfg).is_err());
        assert!(TransformConfig::log(0.0).is_err());
    }

    #[test]
    fn reward_examples() {
        let cfg = TransformConfig::integer_errors();
        assert_eq!(immediate_reward(&ev(&[0.0]), &ev(&[0.0]), &cfg).unwrap(), 0.0);
        let r = immediate_reward(&ev(&[E - 1.0, E - 1.0]), &ev(&[0.0, 0.0]), &cfg).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
        let r = immediate_reward(&ev(&[0.0]), &ev(&[E - 1.0]), &cfg).unwrap();
        assert!((r + 1.0).abs() < 1e-15);
        assert!(matches!(
            immediate_reward(&ev(&[0.0]), &ev(&[0.0, 1.0]), &cfg),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn reward_saturates_instead_of_overflowing() {
        let r = immediate_reward(&ev(&[f64::MAX]), &ev(&[-f64::MAX]), &TransformConfig::identity()).unwrap();
        assert_eq!(r, f64::MAX);
    }

    #[test]
    fn error_vector_rejects_bad_input() {
        assert!(ErrorVector::new(vec![]).is_err());
        assert!(ErrorVector::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn windowed_max_examples() {
        let mut h = RewardHistory::new(3).unwrap();
        assert_eq!(windowed_max(&mut h, -0.5), -0.5);

        let mut h = RewardHistory::new(3).unwrap();
        h.push(-0.5);
        h.push(0.2);
        assert_eq!(windowed_max(&mut h, -0.1), 0.2);

        let mut h = RewardHistory::new(3).unwrap();
        for r in [0.9, 0.1, 0.1] {
            h.push(r);
        }
        assert_eq!(windowed_max(&mut h, 0.1), 0.1);
        assert_eq!(h.len(), 3);
        assert!(RewardHistory::new(0).is_err());
    }

    #[test]
    fn windowed_max_matches_brute_force_on_random_streams() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let cap = rng.random_range(1..20);
            let len = rng.random_range(1..60);
            let stream: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut h = RewardHistory::new(cap).unwrap();
            for (i, &r) in stream.iter().enumerate() {
                let got = windowed_max(&mut h, r);
                let start = (i + 1).saturating_sub(cap);
                let want = stream[start..=i].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                assert_eq!(got, want);
            }
        }
    }

    proptest! {
        #[test]
        fn transform_is_odd(x in -1e12f64..1e12, c in 1e-3f64..10.0) {
            let cfg = TransformConfig::log(c).unwrap();
            prop_assert_eq!(transform_error(-x, &cfg).unwrap(), -transform_error(x, &cfg).unwrap());
        }

        // For c < 1 the transform jumps at 0 (ln c < 0), so global monotonicity
        // needs c >= 1; on the positive half-line it holds for every c.
        #[test]
        fn transform_is_increasing(a in -1e6f64..1e6, b in -1e6f64..1e6, c in 1.0f64..10.0) {
            prop_assume!(a < b);
            let cfg = TransformConfig::log(c).unwrap();
            prop_assert!(transform_error(a, &cfg).unwrap() < transform_error(b, &cfg).unwrap());
        }

        #[test]
        fn transform_is_increasing_on_positive_errors(a in 1e-9f64..1e6, b in 1e-9f64..1e6, c in 1e-3f64..1.0) {
            prop_assume!(a < b);
            let cfg = TransformConfig::log(c).unwrap();
            prop_assert!(transform_error(a, &cfg).unwrap() < transform_error(b, &cfg).unwrap());
        }

        #[test]
        fn reward_is_antisymmetric(
            pairs in proptest::collection::vec((-1e4f64..1e4, -1e4f64..1e4), 1..20)
        ) {
            let cfg = TransformConfig::symbolic_regression();
            let a = ErrorVector::new(pairs.iter().map(|p| p.0).collect()).unwrap();
            let b = ErrorVector::new(pairs.iter().map(|p| p.1).collect()).unwrap();
            prop_assert_eq!(
                immediate_reward(&a, &b, &cfg).unwrap(),
                -immediate_reward(&b, &a, &cfg).unwrap()
            );
        }
    }
}
