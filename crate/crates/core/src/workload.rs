//! Seeded random instances.
//!
//! Worst-case utilizations are drawn with UUniFast-discard so that
//! `sum w_i / f_M` matches the requested fraction of `m * D`; each task then
//! gets a cycle distribution of the requested shape topped at its WCEC.
//! Draws are repeated until the static partitioning accepts the instance.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CycleDistribution, FrequencySet, SystemConfig};
use crate::partition::{static_partition, PartitionOptions};

pub const MAX_ATTEMPTS: usize = 1000;

/// Support size of the uniform and decreasing shapes.
const SUPPORT_POINTS: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// Evenly spaced cycle counts, equally likely.
    Uniform,
    /// 80% around 0.3 WCEC, 20% at the WCEC.
    #[default]
    Bimodal,
    /// Evenly spaced cycle counts, shorter ones more likely.
    Decreasing,
}

impl Shape {
    pub const ALL: [Shape; 3] = [Shape::Uniform, Shape::Bimodal, Shape::Decreasing];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Uniform => "uniform",
            Shape::Bimodal => "bimodal",
            Shape::Decreasing => "decreasing",
        }
    }

    pub fn distribution(self, wcec: u64) -> CycleDistribution {
        let points = || {
            let k = SUPPORT_POINTS.min(wcec);
            (1..=k).map(move |j| ((j * wcec).div_ceil(k), j, k))
        };
        match self {
            Shape::Uniform => CycleDistribution::new(points().map(|(x, _, k)| (x, 1.0 / k as f64)).collect()),
            Shape::Decreasing => CycleDistribution::new(
                points()
                    .map(|(x, j, k)| (x, (k - j + 1) as f64 / (k * (k + 1) / 2) as f64))
                    .collect(),
            ),
            Shape::Bimodal => {
                let low = ((0.3 * wcec as f64).round() as u64).max(1);
                if low >= wcec {
                    CycleDistribution::degenerate(wcec)
                } else {
                    CycleDistribution::new(vec![(low, 0.8), (wcec, 0.2)])
                }
            }
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Shape {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Shape::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown shape `{s}` (expected uniform, bimodal or decreasing)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub n: usize,
    pub m: usize,
    pub frame_length: f64,
    pub freq_levels: usize,
    /// `sum w_i / f_M` over `m * D`, in (0, 1).
    pub utilization: f64,
    pub shape: Shape,
    pub seed: u64,
}

impl WorkloadSpec {
    fn check(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidWorkload(msg));
        if !(self.utilization > 0.0 && self.utilization < 1.0) {
            return fail(format!("utilization {} outside (0, 1)", self.utilization));
        }
        if self.m == 0 || self.n < self.m {
            return fail(format!("need n >= m >= 1, got n = {}, m = {}", self.n, self.m));
        }
        if self.freq_levels == 0 || self.freq_levels > u8::MAX as usize {
            return fail(format!("frequency levels {} outside 1..=255", self.freq_levels));
        }
        if !(self.frame_length >= 1.0 && self.frame_length.is_finite()) {
            return fail(format!("frame length {} must be at least 1", self.frame_length));
        }
        Ok(())
    }
}

/// `n` utilizations summing to `total`, uniformly over the simplex.
fn uunifast(rng: &mut impl Rng, n: usize, total: f64) -> Vec<f64> {
    let mut shares = Vec::with_capacity(n);
    let mut sum = total;
    for i in 1..n {
        let next = sum * rng.gen::<f64>().powf(1.0 / (n - i) as f64);
        shares.push(sum - next);
        sum = next;
    }
    shares.push(sum);
    shares
}

/// Integer WCECs proportional to `shares`, at least 1 each, summing to `total`
/// (largest remainder).
fn apportion(shares: &[f64], total: u64) -> Vec<u64> {
    let sum: f64 = shares.iter().sum();
    let exact: Vec<f64> = shares.iter().map(|s| s / sum * total as f64).collect();
    let mut w: Vec<u64> = exact.iter().map(|e| (e.floor() as u64).max(1)).collect();
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let mut assigned: u64 = w.iter().sum();
    for &i in order.iter().cycle().take(4 * w.len()) {
        if assigned >= total {
            break;
        }
        w[i] += 1;
        assigned += 1;
    }
    while assigned > total {
        let i = (0..w.len()).max_by_key(|&i| (w[i], std::cmp::Reverse(i))).unwrap();
        if w[i] <= 1 {
            break;
        }
        w[i] -= 1;
        assigned -= 1;
    }
    w
}

/// Draws an instance that the static partitioning accepts, with grid step `D / 1000`.
pub fn generate(spec: &WorkloadSpec) -> Result<SystemConfig> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let freqs = FrequencySet::uniform(spec.freq_levels);
    let fmax = freqs.max().value();
    let total = (spec.utilization * spec.m as f64 * spec.frame_length * fmax).round().max(spec.n as f64) as u64;

    for _ in 0..MAX_ATTEMPTS {
        let shares = uunifast(&mut rng, spec.n, spec.utilization * spec.m as f64);
        if shares.iter().any(|&s| s > 1.0) {
            continue;
        }
        let dists = apportion(&shares, total)
            .into_iter()
            .map(|w| spec.shape.distribution(w))
            .collect();
        let cfg = SystemConfig::new(spec.frame_length, spec.m, freqs.clone(), spec.frame_length / 1000.0, dists);
        if static_partition(&cfg, PartitionOptions::default()).is_ok() {
            return Ok(cfg);
        }
    }
    Err(Error::GenerationFailed { attempts: MAX_ATTEMPTS })
}
