//! Exact t-SNE over cosine distances.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SimprojError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneParams {
    pub perplexity: f64,
    pub iterations: usize,
    pub exaggeration: f64,
    pub exaggeration_iterations: usize,
    /// `None` means N / 12.
    pub learning_rate: Option<f64>,
    pub seed: u64,
}

impl Default for TsneParams {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
            exaggeration: 12.0,
            exaggeration_iterations: 250,
            learning_rate: None,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneOutput {
    pub coords: Vec<[f64; 2]>,
    /// Per-point Gaussian precision found by the entropy search.
    pub betas: Vec<f64>,
    /// Entropy in bits of each conditional distribution.
    pub entropies: Vec<f64>,
    pub exaggeration_kl: f64,
    pub final_kl: f64,
}

/// `1 - cos` between rows; rows must be non-zero.
pub fn cosine_distances(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points.len();
    let norms: Vec<f64> = points.iter().map(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let mut d = vec![0.0; n * n];
    d.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for j in 0..n {
            if i != j {
                let dot: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| a * b).sum();
                row[j] = (1.0 - dot / (norms[i] * norms[j])).max(0.0);
            }
        }
    });
    d
}

/// Conditional distribution of row `i` at precision `beta`, returning the
/// entropy in bits.
fn conditional_row(dist: &[f64], i: usize, beta: f64, out: &mut [f64]) -> f64 {
    let min = dist.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, d)| *d).fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    for (j, (o, d)) in out.iter_mut().zip(dist).enumerate() {
        // shift by the nearest distance so the largest weight is 1
        *o = if j == i { 0.0 } else { (-beta * (d - min)).exp() };
        sum += *o;
    }
    let mut h = 0.0;
    for o in out.iter_mut() {
        *o /= sum;
        if *o > 0.0 {
            h -= *o * o.ln();
        }
    }
    h / std::f64::consts::LN_2
}

/// Finds the precision for row `i` whose entropy is `log2(perplexity)`.
pub fn calibrate_row(dist: &[f64], i: usize, perplexity: f64, out: &mut [f64]) -> (f64, f64) {
    let target = perplexity.log2();
    let mut beta = 1.0;
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    let mut h = conditional_row(dist, i, beta, out);
    for _ in 0..200 {
        let diff = h - target;
        if diff.abs() < 1e-10 {
            break;
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = (beta + lo) / 2.0;
        }
        h = conditional_row(dist, i, beta, out);
    }
    (beta, h)
}

fn kl(p: &[f64], q_num: &[f64], z: f64) -> f64 {
    p.iter()
        .zip(q_num)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, qn)| {
            let q = (qn / z).max(f64::MIN_POSITIVE);
            p * (p / q).ln()
        })
        .sum()
}

/// Student-t numerators and their sum, row-parallel with an ordered sum.
fn q_numerators(y: &[[f64; 2]], num: &mut [f64]) -> f64 {
    let n = y.len();
    let row_sums: Vec<f64> = num
        .par_chunks_mut(n)
        .enumerate()
        .map(|(i, row)| {
            let mut s = 0.0;
            for j in 0..n {
                row[j] = if i == j {
                    0.0
                } else {
                    let dx = y[i][0] - y[j][0];
                    let dy = y[i][1] - y[j][1];
                    1.0 / (1.0 + dx * dx + dy * dy)
                };
                s += row[j];
            }
            s
        })
        .collect();
    row_sums.iter().sum()
}

pub fn tsne(points: &[Vec<f64>], params: &TsneParams) -> Result<TsneOutput, SimprojError> {
    let n = points.len();
    if n < 4 {
        return Err(SimprojError::TooFewPoints(n));
    }
    if !(params.perplexity > 0.0 && params.perplexity < (n as f64 - 1.0) / 3.0) {
        return Err(SimprojError::PerplexityTooLarge { perplexity: params.perplexity, n });
    }
    let dist = cosine_distances(points);

    let mut cond = vec![0.0; n * n];
    let calib: Vec<(f64, f64)> = cond
        .par_chunks_mut(n)
        .enumerate()
        .map(|(i, row)| calibrate_row(&dist[i * n..(i + 1) * n], i, params.perplexity, row))
        .collect();
    let mut p = vec![0.0; n * n];
    let total = 2.0 * n as f64;
    p.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for j in 0..n {
            row[j] = (cond[i * n + j] + cond[j * n + i]) / total;
        }
    });
    drop(cond);

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let normal = Normal::new(0.0, 1e-2).expect("valid normal");
    let mut y: Vec<[f64; 2]> = (0..n).map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)]).collect();
    let mut update = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let lr = params.learning_rate.unwrap_or(n as f64 / 12.0);
    let mut num = vec![0.0; n * n];
    let mut exaggeration_kl = f64::NAN;

    for iter in 0..params.iterations {
        let exaggerating = iter < params.exaggeration_iterations;
        let exag = if exaggerating { params.exaggeration } else { 1.0 };
        let momentum = if exaggerating { 0.5 } else { 0.8 };
        let z = q_numerators(&y, &mut num);
        let grad: Vec<[f64; 2]> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut g = [0.0; 2];
                for j in 0..n {
                    let w = (exag * p[i * n + j] - num[i * n + j] / z) * num[i * n + j];
                    g[0] += w * (y[i][0] - y[j][0]);
                    g[1] += w * (y[i][1] - y[j][1]);
                }
                [4.0 * g[0], 4.0 * g[1]]
            })
            .collect();
        for i in 0..n {
            for k in 0..2 {
                let same_sign = (grad[i][k] > 0.0) == (update[i][k] > 0.0);
                gains[i][k] = if same_sign { (gains[i][k] * 0.8).max(0.01) } else { gains[i][k] + 0.2 };
                update[i][k] = momentum * update[i][k] - lr * gains[i][k] * grad[i][k];
                y[i][k] += update[i][k];
            }
        }
        let mean = y.iter().fold([0.0; 2], |m, p| [m[0] + p[0], m[1] + p[1]]);
        for p in y.iter_mut() {
            p[0] -= mean[0] / n as f64;
            p[1] -= mean[1] / n as f64;
        }
        if iter + 1 == params.exaggeration_iterations {
            let z = q_numerators(&y, &mut num);
            exaggeration_kl = kl(&p, &num, z);
        }
    }
    let z = q_numerators(&y, &mut num);
    let final_kl = kl(&p, &num, z);
    if exaggeration_kl.is_nan() {
        exaggeration_kl = final_kl;
    }
    Ok(TsneOutput {
        coords: y,
        betas: calib.iter().map(|c| c.0).collect(),
        entropies: calib.iter().map(|c| c.1).collect(),
        exaggeration_kl,
        final_kl,
    })
}

/// Mean silhouette of 2-D points under Euclidean distance.
pub fn silhouette(coords: &[[f64; 2]], labels: &[usize]) -> f64 {
    let n = coords.len();
    let dist = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut total = 0.0;
    for i in 0..n {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for j in 0..n {
            if i != j {
                sums[labels[j]] += dist(coords[i], coords[j]);
                counts[labels[j]] += 1;
            }
        }
        let own = labels[i];
        if counts[own] == 0 {
            continue;
        }
        let a = sums[own] / counts[own] as f64;
        let b = (0..k)
            .filter(|c| *c != own && counts[*c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        total += (b - a) / a.max(b);
    }
    total / n as f64
}
