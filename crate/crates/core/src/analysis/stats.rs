use std::collections::VecDeque;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// `out[i] = max(seq[i..i + k])`.
pub fn max_pool_1d(seq: &[f64], k: usize) -> Result<Vec<f64>> {
    if k == 0 || seq.len() < k {
        return Err(Error::Contract(format!("cannot pool {} values with kernel {k}", seq.len())));
    }
    // Indices whose values are strictly decreasing from front to back.
    let mut window: VecDeque<usize> = VecDeque::with_capacity(k);
    let mut out = Vec::with_capacity(seq.len() - k + 1);
    for (i, &v) in seq.iter().enumerate() {
        while window.back().is_some_and(|&j| seq[j] <= v) {
            window.pop_back();
        }
        window.push_back(i);
        if window[0] + k <= i {
            window.pop_front();
        }
        if i + 1 >= k {
            out.push(seq[window[0]]);
        }
    }
    Ok(out)
}

/// `y[0] = x[0]`, `y[i] = (1 - alpha) y[i-1] + alpha x[i]`.
pub fn ewma(seq: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Contract(format!("smoothing rate must lie in (0, 1], got {alpha}")));
    }
    let mut out = Vec::with_capacity(seq.len());
    for &x in seq {
        let y = match out.last() {
            None => x,
            Some(&prev) => (1.0 - alpha) * prev + alpha * x,
        };
        out.push(y);
    }
    Ok(out)
}

pub fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

fn variance(samples: &[f64]) -> f64 {
    let m = mean(samples);
    samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (samples.len() - 1) as f64
}

/// Linear-interpolation quantile of sorted data (the "type 7" rule).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub p_value: Option<f64>,
}

/// Percentile bootstrap interval for the mean.
pub fn bootstrap_ci(samples: &[f64], resamples: usize, level: f64, rng: &mut dyn RngCore) -> Result<StatReport> {
    bootstrap_ci_with(samples, mean, resamples, level, rng)
}

pub fn bootstrap_ci_with(
    samples: &[f64],
    statistic: impl Fn(&[f64]) -> f64,
    resamples: usize,
    level: f64,
    rng: &mut dyn RngCore,
) -> Result<StatReport> {
    if samples.is_empty() {
        return Err(Error::Contract("bootstrap needs at least one sample".into()));
    }
    if resamples == 0 || !(level > 0.0 && level < 1.0) {
        return Err(Error::Contract(format!("bad bootstrap settings: {resamples} resamples at level {level}")));
    }
    let estimate = statistic(samples);
    let mut buf = vec![0.0; samples.len()];
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = samples[rng.random_range(0..samples.len())];
            }
            statistic(&buf)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok(StatReport {
        estimate,
        lower: quantile(&stats, tail).min(estimate),
        upper: quantile(&stats, 1.0 - tail).max(estimate),
        p_value: None,
    })
}

/// Regularized incomplete beta `I_x(a, b)`, by Lentz's continued fraction.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    // The fraction converges fast only below the mean; use symmetry above it.
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_fraction(x, a, b) / a
    } else {
        1.0 - ln_front.exp() * beta_fraction(1.0 - x, b, a) / b
    }
}

fn beta_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let guard = |v: f64| if v.abs() < TINY { TINY } else { v };
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 / guard(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// `P(T > t)` for Student's t with `df` degrees of freedom (`df` may be fractional).
pub fn student_t_sf(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    let tail = 0.5 * regularized_incomplete_beta(df / (df + t * t), df / 2.0, 0.5);
    if t >= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    /// Two-sided p-value.
    pub p: f64,
    /// One-sided p-value for the alternative `mean(a) < mean(b)`.
    pub p_less: f64,
}

/// Welch's unequal-variance t-test.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Contract(format!(
            "t-test needs two samples per group, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (variance(a) / na, variance(b) / nb);
    let diff = mean(a) - mean(b);
    let se2 = va + vb;
    if se2 == 0.0 {
        let (t, p, p_less) = if diff == 0.0 {
            (0.0, 1.0, 0.5)
        } else if diff < 0.0 {
            (f64::NEG_INFINITY, 0.0, 0.0)
        } else {
            (f64::INFINITY, 0.0, 1.0)
        };
        return Ok(WelchTest { t, df: na + nb - 2.0, p, p_less });
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    let upper = student_t_sf(t.abs(), df);
    let p = (2.0 * upper).min(1.0);
    let p_less = if t < 0.0 { upper } else { 1.0 - upper };
    Ok(WelchTest { t, df, p, p_less })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZTest {
    pub z: f64,
    /// Two-sided p-value.
    pub p: f64,
}

/// Pooled two-proportion z-test of `s1/n1` against `s2/n2`.
pub fn two_proportion_z_test(s1: u64, n1: u64, s2: u64, n2: u64) -> Result<ZTest> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::Contract("both groups need at least one trial".into()));
    }
    if s1 > n1 || s2 > n2 {
        return Err(Error::Contract(format!("successes exceed trials: {s1}/{n1}, {s2}/{n2}")));
    }
    let (p1, p2) = (s1 as f64 / n1 as f64, s2 as f64 / n2 as f64);
    let pooled = (s1 + s2) as f64 / (n1 + n2) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    if se == 0.0 {
        return Ok(ZTest { z: 0.0, p: 1.0 });
    }
    let z = (p1 - p2) / se;
    Ok(ZTest { z, p: erfc(z.abs() / std::f64::consts::SQRT_2) })
}
