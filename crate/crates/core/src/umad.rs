//! Linear token genomes and size-neutral uniform mutation by addition and
//! deletion, extended to addition rates above 1.

use std::ops::Deref;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on genome length after mutation.
pub const DEFAULT_MAX_LEN: usize = 500;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenGenome<T>(Vec<T>);

impl<T> TokenGenome<T> {
    pub fn new(tokens: Vec<T>) -> Self {
        Self(tokens)
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }
}

impl<T> Deref for TokenGenome<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.0
    }
}

impl<T> FromIterator<T> for TokenGenome<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// Deletion probability that balances an addition rate of `rate`.
pub fn deletion_rate(rate: f64) -> f64 {
    rate / (1.0 + rate)
}

pub fn random_genome<T: Copy>(len: usize, instructions: &[T], rng: &mut dyn RngCore) -> TokenGenome<T> {
    assert!(!instructions.is_empty(), "instruction set must not be empty");
    (0..len).map(|_| instructions[rng.random_range(0..instructions.len())]).collect()
}

/// Number of tokens inserted next to one parent token: `floor(rate) + 1` with
/// probability `rate - floor(rate)`, otherwise `floor(rate)`.
pub(crate) fn insertion_count(rate: f64, rng: &mut dyn RngCore) -> usize {
    let whole = rate.floor();
    whole as usize + (rng.random::<f64>() < rate - whole) as usize
}

/// Applies UMAD with addition rate `rate`.
///
/// Every parent token receives `floor(rate)` or `floor(rate) + 1` new random
/// neighbours (the latter with probability equal to the fractional part, so the
/// expected number is `rate`), placed before or after it with equal odds. Each
/// token of the augmented genome is then dropped with probability
/// `rate / (1 + rate)`, and the result is cut to `max_len`.
pub fn umad_mutate<T: Copy>(
    genome: &[T],
    rate: f64,
    instructions: &[T],
    max_len: usize,
    rng: &mut dyn RngCore,
) -> Result<TokenGenome<T>> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::Contract(format!("UMAD rate must be positive and finite, got {rate}")));
    }
    if instructions.is_empty() {
        return Err(Error::Contract("instruction set must not be empty".into()));
    }
    let mut augmented = Vec::with_capacity(genome.len() * (rate as usize + 2));
    let random_token = |rng: &mut dyn RngCore| instructions[rng.random_range(0..instructions.len())];
    for &token in genome {
        let k = insertion_count(rate, rng);
        let before = rng.random_bool(0.5);
        if !before {
            augmented.push(token);
        }
        for _ in 0..k {
            augmented.push(random_token(rng));
        }
        if before {
            augmented.push(token);
        }
    }
    let p_delete = deletion_rate(rate);
    let mut child: Vec<T> = augmented.into_iter().filter(|_| rng.random::<f64>() >= p_delete).collect();
    child.truncate(max_len);
    Ok(TokenGenome(child))
}
