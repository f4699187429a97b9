//! One tiling of a closed log-rate interval.
//!
//! A coding over `[l, r]` with offset `o` and width `w` partitions the domain
//! into `[l, l+o)`, `[l+o, l+o+w)`, `[l+o+w, l+o+2w)`, ... Tile 0 is the partial
//! leading interval and is empty when `o = 0`. Each tile carries a value
//! estimate (the expected windowed-max reward), a momentum term and its own
//! bounded reward history.
//!
//! Coordinates are log rates throughout; callers convert once at the bandit
//! boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reward::{windowed_max, RewardHistory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileCoding {
    lower: f64,
    upper: f64,
    offset: f64,
    width: f64,
    values: Vec<f64>,
    momenta: Vec<f64>,
    histories: Vec<RewardHistory>,
}

impl TileCoding {
    pub fn new(lower: f64, upper: f64, offset: f64, width: f64, len_history: usize) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::Contract(format!("invalid coding interval [{lower}, {upper}]")));
        }
        if !(offset >= 0.0 && offset < upper - lower) {
            return Err(Error::Contract(format!("offset {offset} must lie in [0, {})", upper - lower)));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::Contract(format!("tile width must be positive, got {width}")));
        }
        let count = Self::tile_count_for(lower, upper, offset, width);
        let history = RewardHistory::new(len_history)?;
        Ok(Self {
            lower,
            upper,
            offset,
            width,
            values: vec![0.0; count],
            momenta: vec![0.0; count],
            histories: vec![history; count],
        })
    }

    fn tile_count_for(lower: f64, upper: f64, offset: f64, width: f64) -> usize {
        if offset > 0.0 {
            ((upper - lower - offset) / width).floor() as usize + 2
        } else {
            ((upper - lower) / width).floor() as usize + 1
        }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn tile_count(&self) -> usize {
        self.values.len()
    }

    /// Left edge of tile `idx` (the last tile extends to `upper`).
    pub fn tile_start(&self, idx: usize) -> f64 {
        if idx == 0 {
            self.lower
        } else {
            self.lower + self.offset + (idx - 1) as f64 * self.width
        }
    }

    /// Index of the tile covering `x`, for `x` in `[lower, upper)`.
    pub fn tile_index(&self, x: f64) -> Result<usize> {
        if !(x >= self.lower && x < self.upper) {
            return Err(Error::Range { value: x, lower: self.lower, upper: self.upper });
        }
        let last = self.tile_count() - 1;
        let rel = (x - self.lower - self.offset) / self.width;
        let mut idx = if rel < 0.0 { 0 } else { (rel.floor() as usize + 1).min(last) };
        // The division can round across a boundary; settle against the
        // boundaries themselves.
        while idx > 0 && x < self.tile_start(idx) {
            idx -= 1;
        }
        while idx < last && x >= self.tile_start(idx + 1) {
            idx += 1;
        }
        Ok(idx)
    }

    pub fn tile_value(&self, x: f64) -> Result<f64> {
        Ok(self.values[self.tile_index(x)?])
    }

    /// Value stored at tile `idx`.
    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    #[cfg(test)]
    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn momentum(&self, idx: usize) -> f64 {
        self.momenta[idx]
    }

    pub fn history(&self, idx: usize) -> &RewardHistory {
        &self.histories[idx]
    }

    /// One SGD step with momentum on the squared error between the tile value
    /// and `max_reward`.
    pub fn update_tile(&mut self, x: f64, max_reward: f64, lr: f64, momentum: f64) -> Result<usize> {
        let idx = self.tile_index(x)?;
        self.step(idx, max_reward, lr, momentum);
        Ok(idx)
    }

    // Rewards can be as large as f64::MAX in magnitude (clamped overflowing
    // errors), so every intermediate is saturated to keep the state finite.
    fn step(&mut self, idx: usize, target: f64, lr: f64, momentum: f64) {
        let sat = |v: f64| v.clamp(-f64::MAX, f64::MAX);
        let grad = sat(2.0 * (self.values[idx] - target));
        let m = sat(momentum * self.momenta[idx] + grad);
        self.momenta[idx] = m;
        self.values[idx] = sat(self.values[idx] - sat(lr * sat(grad + momentum * m)));
    }

    /// Records `immediate` in the covering tile's history and moves the tile's
    /// value towards the window maximum. Returns the touched tile index.
    pub fn observe(&mut self, x: f64, immediate: f64, lr: f64, momentum: f64) -> Result<usize> {
        let idx = self.tile_index(x)?;
        let max_reward = windowed_max(&mut self.histories[idx], immediate);
        self.step(idx, max_reward, lr, momentum);
        Ok(idx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Linear scan over the explicit boundary list `[l, l+o, l+o+w, ..., r]`,
    /// with the final partial interval folded into the last tile.
    fn scan_index(l: f64, r: f64, o: f64, w: f64, count: usize, x: f64) -> usize {
        let mut bounds = vec![l];
        let mut k = 0usize;
        loop {
            let b = l + o + k as f64 * w;
            if b >= r {
                break;
            }
            bounds.push(b);
            k += 1;
        }
        let mut idx = 0;
        for (i, &b) in bounds.iter().enumerate() {
            if x >= b {
                idx = i;
            }
        }
        idx.min(count - 1)
    }

    #[test]
    fn tile_index_examples() {
        let c = TileCoding::new(-10.0, 0.0, 0.06, 0.24, 100).unwrap();
        assert_eq!(c.tile_index(-9.9).unwrap(), 1);
        assert_eq!(c.tile_index(-9.97).unwrap(), 0);
        let c = TileCoding::new(0.0, 10.0, 0.0, 1.0, 100).unwrap();
        assert_eq!(c.tile_index(2.5).unwrap(), 3);
        assert_eq!(c.tile_count(), 11);
    }

    #[test]
    fn tile_index_rejects_out_of_range() {
        let c = TileCoding::new(-10.0, 0.0, 0.06, 0.24, 100).unwrap();
        assert!(c.tile_index(-10.0).is_ok());
        assert!(matches!(c.tile_index(0.0), Err(Error::Range { .. })));
        assert!(c.tile_index(-10.1).is_err());
        assert!(c.tile_index(f64::NAN).is_err());
    }

    #[test]
    fn constructor_validates() {
        assert!(TileCoding::new(0.0, 0.0, 0.0, 1.0, 1).is_err());
        assert!(TileCoding::new(0.0, 1.0, 1.0, 0.1, 1).is_err());
        assert!(TileCoding::new(0.0, 1.0, 0.0, 0.0, 1).is_err());
        assert!(TileCoding::new(0.0, 1.0, 0.0, 0.1, 0).is_err());
    }

    #[test]
    fn partition_matches_boundary_scan() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let l = rng.random_range(-100.0..100.0);
            let r = l + rng.random_range(0.1..50.0);
            let o = if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..(r - l)) };
            let w = rng.random_range(0.01..(r - l));
            let c = TileCoding::new(l, r, o, w, 4).unwrap();
            for _ in 0..5 {
                let x = rng.random_range(l..r);
                assert_eq!(c.tile_index(x).unwrap(), scan_index(l, r, o, w, c.tile_count(), x));
            }
        }
    }

    #[test]
    fn update_tile_examples() {
        let mut c = TileCoding::new(0.0, 1.0, 0.0, 0.5, 10).unwrap();
        let idx = c.update_tile(0.1, 1.0, 0.001, 0.9).unwrap();
        assert!((c.value(idx) - 0.0038).abs() < 1e-15);
        assert_eq!(c.momentum(idx), -2.0);

        let mut c = TileCoding::new(0.0, 1.0, 0.0, 0.5, 10).unwrap();
        c.values[1] = 0.7;
        c.update_tile(0.1, 0.7, 0.3, 0.5).unwrap();
        assert_eq!(c.value(1), 0.7);
        assert_eq!(c.momentum(1), 0.0);

        let mut c = TileCoding::new(0.0, 1.0, 0.0, 0.5, 10).unwrap();
        c.values[1] = 1.0;
        c.update_tile(0.1, 0.0, 0.01, 0.0).unwrap();
        assert!((c.value(1) - 0.98).abs() < 1e-15);
        assert_eq!(c.momentum(1), 2.0);
    }

    #[test]
    fn observe_uses_window_max() {
        let mut c = TileCoding::new(0.0, 1.0, 0.0, 0.5, 100).unwrap();
        c.observe(0.1, 0.5, 0.001, 0.9).unwrap();
        let mut fresh = TileCoding::new(0.0, 1.0, 0.0, 0.5, 100).unwrap();
        fresh.update_tile(0.1, 0.5, 0.001, 0.9).unwrap();
        assert_eq!(c.value(1), fresh.value(1));

        let mut c = TileCoding::new(0.0, 1.0, 0.0, 0.5, 2).unwrap();
        c.histories[1].push(0.9);
        let mut expect = c.clone();
        c.observe(0.1, -0.1, 0.001, 0.9).unwrap();
        expect.update_tile(0.1, 0.9, 0.001, 0.9).unwrap();
        assert_eq!(c.value(1), expect.value(1));

        let mut c = TileCoding::new(0.0, 1.0, 0.0, 0.5, 100).unwrap();
        for _ in 0..101 {
            c.observe(0.1, -1.0, 0.001, 0.9).unwrap();
        }
        let mut expect = c.clone();
        c.observe(0.1, 0.5, 0.001, 0.9).unwrap();
        expect.update_tile(0.1, 0.5, 0.001, 0.9).unwrap();
        assert_eq!(c.value(1), expect.value(1));
        assert_eq!(c.history(1).len(), 100);
    }

    #[test]
    fn tile_value_examples() {
        let mut c = TileCoding::new(-10.0, 0.0, 0.06, 0.24, 100).unwrap();
        assert_eq!(c.tile_value(-3.3).unwrap(), 0.0);
        c.observe(-3.3, 1.0, 0.001, 0.9).unwrap();
        assert!((c.tile_value(-3.3).unwrap() - 0.0038).abs() < 1e-15);
        let idx = c.tile_index(-3.3).unwrap();
        let (a, b) = (c.tile_start(idx), c.tile_start(idx + 1));
        assert_eq!(c.tile_value(a).unwrap(), c.tile_value(b - 1e-9).unwrap());
    }

    #[test]
    fn update_touches_only_one_tile() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let mut c = TileCoding::new(-10.0, 0.0, 0.09, 0.21, 5).unwrap();
        for _ in 0..500 {
            let x = rng.random_range(-10.0..0.0);
            let before = c.clone();
            let idx = c.observe(x, rng.random_range(-1.0..1.0), 1e-3, 0.9).unwrap();
            for j in 0..c.tile_count() {
                if j != idx {
                    assert_eq!(c.value(j), before.value(j));
                    assert_eq!(c.momentum(j), before.momentum(j));
                    assert_eq!(c.history(j), before.history(j));
                }
            }
        }
    }

    #[test]
    fn piecewise_constant_on_tiles() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut c = TileCoding::new(-10.0, 0.0, 0.12, 0.33, 5).unwrap();
        for _ in 0..300 {
            c.observe(rng.random_range(-10.0..0.0), rng.random_range(-1.0..1.0), 1e-3, 0.9).unwrap();
        }
        for _ in 0..2000 {
            let x = rng.random_range(-10.0..0.0);
            let idx = c.tile_index(x).unwrap();
            let start = c.tile_start(idx);
            let end = if idx + 1 < c.tile_count() { c.tile_start(idx + 1) } else { c.upper() };
            let y = rng.random_range(start..end);
            assert_eq!(c.tile_value(x).unwrap(), c.tile_value(y).unwrap());
        }
    }

    #[test]
    fn converges_to_constant_reward() {
        for &lr in &[1e-4, 3e-4, 1e-3] {
            for &target in &[-2.0, 0.5, 3.0] {
                let mut c = TileCoding::new(0.0, 1.0, 0.0, 0.5, 100).unwrap();
                let mut steps = 0;
                while (c.value(1) - target).abs() >= 1e-3 {
                    c.observe(0.1, target, lr, 0.9).unwrap();
                    steps += 1;
                    assert!(steps <= 100_000, "lr {lr} target {target} did not converge");
                }
            }
        }
    }
}
