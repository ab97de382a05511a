//! Seeded tick streams drawn by inverting the cumulative hazard, and
//! empirical estimators with bootstrap uncertainties.
//!
//! Generator: ChaCha20 (`rand_chacha` 0.9) seeded with `seed_from_u64(seed)`.
//! Independent streams use the ChaCha stream id; stream 0 is the default
//! tick stream and the bootstrap uses ids from `2^63` upward.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ClockError, Result};
use crate::model::ClockParams;
use crate::tick_stats::HazardModel;

pub const GENERATOR_ID: &str = "chacha20/rand_chacha-0.9";
pub const BOOTSTRAP_RESAMPLES: usize = 1000;
const BOOTSTRAP_STREAM_BASE: u64 = 1 << 63;

/// Waiting times between consecutive ticks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickSample {
    pub seed: u64,
    pub stream: u64,
    pub count: usize,
    pub tick_times: Vec<f64>,
}

fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Unit-mean exponential variate, `-ln(1 - U)`, never zero.
fn unit_exponential(rng: &mut ChaCha20Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        let e = -(-u).ln_1p();
        if e > 0.0 {
            return e;
        }
    }
}

/// Waiting time whose cumulative hazard equals `u`.
pub fn invert_cumulative_hazard(model: &HazardModel, u: f64) -> f64 {
    let lc = model.cycle_hazard;
    let mut q = (u / lc).floor();
    let mut rem = u - q * lc;
    if rem >= lc {
        q += 1.0;
        rem -= lc;
    }
    let theta = q * PI + model.invert_cycle(rem.max(0.0));
    theta / model.g
}

pub fn sample_with_model(model: &HazardModel, count: usize, seed: u64, stream: u64) -> Result<TickSample> {
    if count == 0 {
        return Err(ClockError::param("count", "must be >= 1"));
    }
    let mut rng = rng_for(seed, stream);
    let mut tick_times = Vec::with_capacity(count);
    while tick_times.len() < count {
        let t = invert_cumulative_hazard(model, unit_exponential(&mut rng));
        if t > 0.0 {
            tick_times.push(t);
        }
    }
    Ok(TickSample {
        seed,
        stream,
        count,
        tick_times,
    })
}

/// `count` i.i.d. waiting times for the clock described by `params`.
pub fn sample_ticks(params: &ClockParams, count: usize, seed: u64) -> Result<TickSample> {
    let model = HazardModel::from_params(params)?;
    sample_with_model(&model, count, seed, 0)
}

/// Several independent streams, generated concurrently. Stream `i` uses
/// ChaCha stream id `i`, so the result does not depend on scheduling.
pub fn sample_streams(model: &HazardModel, count: usize, seed: u64, streams: u64) -> Result<Vec<TickSample>> {
    (0..streams)
        .into_par_iter()
        .map(|s| sample_with_model(model, count, seed, s))
        .collect()
}

/// Sample estimates of the clock figures of merit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMetrics {
    pub t_bar_hat: f64,
    pub t_bar_se: f64,
    pub n_hat: f64,
    pub n_se: f64,
    pub r_hat: f64,
    pub r_se: f64,
}

fn mean_and_accuracy(xs: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = xs.clone().sum::<f64>() / n as f64;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, mean * mean / var)
}

fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt()
}

pub fn empirical_metrics(sample: &TickSample) -> Result<EmpiricalMetrics> {
    let xs = &sample.tick_times;
    let n = xs.len();
    if n < 2 {
        return Err(ClockError::DegenerateSample(format!("need at least 2 ticks, got {n}")));
    }
    let (t_bar_hat, n_hat) = mean_and_accuracy(xs.iter().copied(), n);
    if !n_hat.is_finite() {
        return Err(ClockError::DegenerateSample("sample variance is zero".into()));
    }

    let boot: Vec<(f64, f64)> = (0..BOOTSTRAP_RESAMPLES as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng_for(sample.seed, BOOTSTRAP_STREAM_BASE + b);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            mean_and_accuracy(idx.iter().map(|&i| xs[i]), n)
        })
        .collect();
    let means: Vec<f64> = boot.iter().map(|b| b.0).collect();
    let accs: Vec<f64> = boot.iter().filter(|b| b.1.is_finite()).map(|b| b.1).collect();
    let rates: Vec<f64> = means.iter().map(|m| 1.0 / m).collect();

    Ok(EmpiricalMetrics {
        t_bar_hat,
        t_bar_se: std_dev(&means),
        n_hat,
        n_se: std_dev(&accs),
        r_hat: 1.0 / t_bar_hat,
        r_se: std_dev(&rates),
    })
}

/// Cumulative hazard of each waiting time; unit exponential if the sampler
/// is correct.
pub fn rescaled_times(model: &HazardModel, sample: &TickSample) -> Vec<f64> {
    sample.tick_times.iter().map(|&t| model.cumulative_hazard(t)).collect()
}

/// Kolmogorov-Smirnov distance between the empirical law of `values` and
/// the unit exponential.
pub fn ks_statistic_exp1(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = -(-x).exp_m1();
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            (cdf - lo).abs().max((hi - cdf).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// Single-column CSV with a `# key=value` metadata header.
pub fn write_sample_csv<W: Write>(out: &mut W, params: &ClockParams, sample: &TickSample) -> Result<()> {
    for (k, v) in metadata(params, sample) {
        writeln!(out, "# {k}={v}")?;
    }
    writeln!(out, "tick_time")?;
    for t in &sample.tick_times {
        writeln!(out, "{t:.16e}")?;
    }
    Ok(())
}

fn metadata(params: &ClockParams, sample: &TickSample) -> Vec<(&'static str, String)> {
    vec![
        ("d", params.d.to_string()),
        ("M", params.machines.to_string()),
        ("g", params.g.to_string()),
        ("c", params.c.to_string()),
        ("beta_c", params.beta_c.to_string()),
        ("beta_h", params.beta_h.to_string()),
        ("e_c", params.e_c.to_string()),
        ("e_h", params.e_h.to_string()),
        ("seed", sample.seed.to_string()),
        ("stream", sample.stream.to_string()),
        ("count", sample.count.to_string()),
        ("generator", GENERATOR_ID.to_string()),
        ("reset_latency", "0".to_string()),
        ("tool_version", env!("CARGO_PKG_VERSION").to_string()),
    ]
}
