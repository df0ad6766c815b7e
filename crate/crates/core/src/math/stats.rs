//! Monte-Carlo mean estimation with deterministic parallel reduction.
//!
//! Samples are drawn in fixed-size chunks; chunk `k` always uses the stream
//! `(seed, hash(stream_id, k))`, so the result does not depend on how many
//! worker threads run or in which order chunks complete. Chunk summaries are
//! merged pairwise in chunk order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{stream_id_for, RngStream};

pub const CHUNK: usize = 1 << 14;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub samples: usize,
}

impl MeanEstimate {
    /// Standard error of the difference of two independent estimates.
    pub fn combined_se(&self, other: &Self) -> f64 {
        self.standard_error.hypot(other.standard_error)
    }
}

/// Running count, mean and sum of squared deviations (Chan et al. merge).
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        Self { n, mean, m2 }
    }

    pub fn estimate(&self) -> MeanEstimate {
        let se = if self.n > 1 {
            (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
        } else {
            0.0
        };
        MeanEstimate {
            mean: self.mean,
            standard_error: se,
            samples: self.n,
        }
    }
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

fn merge_tree(parts: &[Vec<Moments>]) -> Vec<Moments> {
    match parts.len() {
        0 => Vec::new(),
        1 => parts[0].clone(),
        len => {
            let (l, r) = parts.split_at(len / 2);
            let (a, b) = (merge_tree(l), merge_tree(r));
            a.iter().zip(&b).map(|(x, y)| x.merge(y)).collect()
        }
    }
}

/// Estimate `dim` expectations at once from `n` joint draws.
///
/// `draw` fills its output slice with one realization of the `dim` quantities.
pub fn monte_carlo_vec<F>(
    n: usize,
    dim: usize,
    seed: u64,
    stream_id: u64,
    draw: F,
) -> Vec<MeanEstimate>
where
    F: Fn(&mut RngStream, &mut [f64]) + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Vec<Moments>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = RngStream::new(seed, stream_id_for(&[stream_id, k as u64]));
            let count = CHUNK.min(n - k * CHUNK);
            let mut acc = vec![Moments::default(); dim];
            let mut buf = vec![0.0; dim];
            for _ in 0..count {
                draw(&mut rng, &mut buf);
                for (a, &v) in acc.iter_mut().zip(&buf) {
                    a.push(v);
                }
            }
            acc
        })
        .collect();
    let merged = merge_tree(&parts);
    if merged.is_empty() {
        return vec![Moments::default().estimate(); dim];
    }
    merged.iter().map(Moments::estimate).collect()
}

/// Scalar version of [`monte_carlo_vec`].
pub fn monte_carlo<F>(n: usize, seed: u64, stream_id: u64, draw: F) -> MeanEstimate
where
    F: Fn(&mut RngStream) -> f64 + Sync,
{
    monte_carlo_vec(n, 1, seed, stream_id, |rng, out| out[0] = draw(rng))[0]
}

/// Least-squares slope of `log|y|` against `log x`.
///
/// Returns `None` when fewer than two points are given or any `y` is zero.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.len() != ys.len() || ys.iter().any(|&y| y == 0.0 || !y.is_finite()) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.abs().ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
