//! Two-proportion tests, FDR control, effect sizes and power, and the
//! compliance tables built from them.

pub mod normal;
pub mod table;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use normal::{normal_cdf, normal_quantile, normal_sf};
pub use table::{
    build_contrast, compliance_table, format_delta, format_pct, stratified_table, Contrast, ContrastRow,
    ObligationTable, StratifiedTable,
};

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_POWER: f64 = 0.8;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("sample has {successes} successes out of {n}")]
    InvalidSample { successes: u64, n: u64 },
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("mde needs n1, n2 >= 2, got {0} and {1}")]
    SampleTooSmall(u64, u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProportionSample {
    pub successes: u64,
    pub n: u64,
}

impl ProportionSample {
    pub fn new(successes: u64, n: u64) -> Result<Self, StatsError> {
        if n == 0 || successes > n {
            return Err(StatsError::InvalidSample { successes, n });
        }
        Ok(Self { successes, n })
    }

    pub fn proportion(&self) -> f64 {
        self.successes as f64 / self.n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZTest {
    /// `None` when the pooled proportion is 0 or 1.
    pub z: Option<f64>,
    pub p_value: f64,
}

impl ZTest {
    pub fn is_degenerate(&self) -> bool {
        self.z.is_none()
    }
}

/// Pooled-variance two-sided test of `a` against `b`; z is positive when
/// `a` has the larger proportion.
pub fn two_prop_z(a: ProportionSample, b: ProportionSample) -> ZTest {
    let (n1, n2) = (a.n as f64, b.n as f64);
    let pooled = (a.successes + b.successes) as f64 / (n1 + n2);
    if pooled <= 0.0 || pooled >= 1.0 {
        return ZTest { z: None, p_value: 1.0 };
    }
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2)).sqrt();
    let z = (a.proportion() - b.proportion()) / se;
    let p_value = (2.0 * normal_sf(z.abs())).min(1.0);
    ZTest { z: Some(z), p_value }
}

/// Benjamini-Hochberg step-up: reject flags and adjusted q-values, both in
/// input order.
pub fn bh_fdr(p_values: &[f64], alpha: f64) -> Result<(Vec<bool>, Vec<f64>), StatsError> {
    if let Some(p) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(StatsError::InvalidProbability(*p));
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| p_values[i].total_cmp(&p_values[j]).then(i.cmp(&j)));
    let mut q = vec![0.0; m];
    let mut running = 1.0f64;
    for rank in (0..m).rev() {
        let i = order[rank];
        running = running.min(p_values[i] * m as f64 / (rank + 1) as f64);
        q[i] = running;
    }
    let cutoff = (0..m).rev().find(|&rank| p_values[order[rank]] <= (rank + 1) as f64 * alpha / m as f64);
    let mut reject = vec![false; m];
    if let Some(k) = cutoff {
        for &i in &order[..=k] {
            reject[i] = true;
        }
    }
    Ok((reject, q))
}

/// `|2·asin√p1 − 2·asin√p2|`
pub fn cohens_h(p1: f64, p2: f64) -> f64 {
    (2.0 * p1.sqrt().asin() - 2.0 * p2.sqrt().asin()).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mde {
    pub mde_h: f64,
    /// Upward shift from `baseline` that corresponds to `mde_h`.
    pub mde_pp: f64,
}

pub fn mde(n1: u64, n2: u64, alpha: f64, power: f64, baseline: f64) -> Result<Mde, StatsError> {
    if n1 < 2 || n2 < 2 {
        return Err(StatsError::SampleTooSmall(n1, n2));
    }
    for p in [alpha, power, baseline] {
        if !(0.0..=1.0).contains(&p) {
            return Err(StatsError::InvalidProbability(p));
        }
    }
    let mde_h =
        (normal_quantile(1.0 - alpha / 2.0) + normal_quantile(power)) * (1.0 / n1 as f64 + 1.0 / n2 as f64).sqrt();
    let phi = (2.0 * baseline.sqrt().asin() + mde_h).min(std::f64::consts::PI);
    let target = (phi / 2.0).sin().powi(2).clamp(0.0, 1.0);
    Ok(Mde { mde_h, mde_pp: target - baseline })
}

pub fn is_significant(q_value: f64, h: f64, mde_h: f64, alpha: f64) -> bool {
    q_value < alpha && h >= mde_h
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub p1: f64,
    pub p2: f64,
    pub z: Option<f64>,
    pub p_value: f64,
    pub q_value: f64,
    pub h: f64,
    pub mde_h: f64,
    pub mde_pp: f64,
    pub significant: bool,
}

/// Runs one FDR family: a z-test, h and MDE per pair of (baseline,
/// comparison) samples, then BH across the whole family. Every sample
/// needs n >= 2.
pub fn test_family(
    pairs: &[(ProportionSample, ProportionSample)],
    alpha: f64,
    power: f64,
) -> Result<Vec<TestResult>, StatsError> {
    let tests: Vec<ZTest> = pairs.iter().map(|(a, b)| two_prop_z(*a, *b)).collect();
    let p: Vec<f64> = tests.iter().map(|t| t.p_value).collect();
    let (_, q) = bh_fdr(&p, alpha)?;
    pairs
        .iter()
        .zip(tests)
        .zip(q)
        .map(|(((a, b), t), q_value)| {
            let (p1, p2) = (a.proportion(), b.proportion());
            let h = cohens_h(p1, p2);
            let Mde { mde_h, mde_pp } = mde(a.n, b.n, alpha, power, p1)?;
            Ok(TestResult {
                p1,
                p2,
                z: t.z,
                p_value: t.p_value,
                q_value,
                h,
                mde_h,
                mde_pp,
                significant: !t.is_degenerate() && is_significant(q_value, h, mde_h, alpha),
            })
        })
        .collect()
}
