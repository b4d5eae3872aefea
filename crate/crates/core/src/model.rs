//! Problem instances: tasks with stochastic cycle counts, identical DVFS
//! processors and a common frame.
//!
//! Frequencies are normalized so that the fastest one is `1.0`; time is
//! measured in the same unit as the frame length and running `x` cycles at
//! frequency `f` takes exactly `x / f`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent of the dynamic power model `P(f) = f^ALPHA`.
pub const POWER_EXPONENT: i32 = 3;

/// Slack used when comparing a requested frequency against the available
/// levels, absorbing rounding in `w / (D - A - t)`.
pub const FREQ_EPS: f64 = 1e-12;

/// Tolerance on sums of probabilities.
pub const PROB_EPS: f64 = 1e-9;

/// A normalized processor frequency in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Frequency(f64);

impl Frequency {
    pub const MAX: Frequency = Frequency(1.0);

    pub fn new(value: f64) -> Option<Self> {
        (value > 0.0 && value <= 1.0).then_some(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The available frequency levels, strictly increasing and ending at `1.0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrequencySet(Vec<Frequency>);

impl FrequencySet {
    pub fn new(values: &[f64]) -> Result<Self> {
        let set = Self(values.iter().map(|&v| Frequency(v)).collect());
        let mut diags = Vec::new();
        set.check("freqs", &mut diags);
        if diags.is_empty() {
            Ok(set)
        } else {
            Err(Error::InvalidConfig(diags))
        }
    }

    /// `k` evenly spaced levels `1/k, 2/k, ..., 1`.
    pub fn uniform(levels: usize) -> Self {
        assert!(levels > 0, "at least one frequency level is required");
        Self(
            (1..=levels)
                .map(|k| Frequency(k as f64 / levels as f64))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, idx: usize) -> Frequency {
        self.0[idx]
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = Frequency> + ExactSizeIterator + '_ {
        self.0.iter().copied()
    }

    pub fn max(&self) -> Frequency {
        *self.0.last().expect("frequency set is empty")
    }

    pub fn min(&self) -> Frequency {
        self.0[0]
    }

    fn check(&self, field: &str, diags: &mut Vec<Diagnostic>) {
        if self.0.is_empty() {
            diags.push(Diagnostic::error(field, "frequency set is empty"));
            return;
        }
        for (k, f) in self.0.iter().enumerate() {
            if !(f.0 > 0.0 && f.0 <= 1.0) {
                diags.push(Diagnostic::error(
                    format!("{field}[{k}]"),
                    format!("frequency {} outside (0, 1]", f.0),
                ));
            }
        }
        if self.0.windows(2).any(|w| w[0].0 >= w[1].0) {
            diags.push(Diagnostic::error(field, "frequencies not strictly increasing"));
        }
        let last = self.0[self.0.len() - 1].0;
        if last != 1.0 {
            diags.push(Diagnostic::error(
                field,
                format!("maximum frequency is {last}, expected 1"),
            ));
        }
    }
}

/// Smallest available frequency that is at least `requested`.
pub fn ceil_freq(requested: f64, freqs: &FrequencySet) -> Result<Frequency> {
    freqs
        .iter()
        .find(|f| f.0 >= requested - FREQ_EPS)
        .ok_or(Error::FrequencyAboveMax {
            requested,
            max: freqs.max().0,
        })
}

/// Energy spent running `cycles` cycles at `freq`: `cycles * f^(ALPHA - 1)`.
pub fn energy_of_execution(cycles: u64, freq: Frequency) -> f64 {
    cycles as f64 * freq.0.powi(POWER_EXPONENT - 1)
}

/// Probability mass function over cycle counts, as `(cycles, probability)`
/// pairs with strictly increasing cycle counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CycleDistribution(Vec<(u64, f64)>);

impl CycleDistribution {
    pub fn new(support: Vec<(u64, f64)>) -> Self {
        Self(support)
    }

    pub fn degenerate(cycles: u64) -> Self {
        Self(vec![(cycles, 1.0)])
    }

    pub fn support(&self) -> &[(u64, f64)] {
        &self.0
    }

    pub fn max_cycles(&self) -> Option<u64> {
        self.0.last().map(|&(x, _)| x)
    }

    pub fn is_degenerate(&self) -> bool {
        self.0.len() == 1
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().map(|&(x, p)| x as f64 * p).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    /// 1-based position in the frame order.
    #[serde(skip)]
    pub index: usize,
    /// Worst-case execution cycles.
    pub wcec: u64,
    pub dist: CycleDistribution,
}

impl Task {
    pub fn new(index: usize, dist: CycleDistribution) -> Self {
        let wcec = dist.max_cycles().unwrap_or(0);
        Self { index, wcec, dist }
    }

    /// Worst-case execution time at `freq`.
    pub fn worst_time(&self, freq: Frequency) -> f64 {
        self.wcec as f64 / freq.value()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    #[serde(rename = "D")]
    pub frame_length: f64,
    pub m: usize,
    pub freqs: FrequencySet,
    /// Step of the remaining-time grid the frequency tables are built on.
    pub grid_step: f64,
    pub tasks: Vec<Task>,
}

impl SystemConfig {
    /// Builds a config from WCEC-consistent distributions, numbering tasks in order.
    pub fn new(
        frame_length: f64,
        m: usize,
        freqs: FrequencySet,
        grid_step: f64,
        dists: Vec<CycleDistribution>,
    ) -> Self {
        let tasks = dists
            .into_iter()
            .enumerate()
            .map(|(k, d)| Task::new(k + 1, d))
            .collect();
        Self {
            frame_length,
            m,
            freqs,
            grid_step,
            tasks,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let mut cfg: SystemConfig = serde_json::from_str(s)?;
        cfg.renumber();
        Ok(cfg)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Reads a config file and rejects it if any error-level diagnostic fires.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let cfg = Self::from_json_str(&std::fs::read_to_string(path)?)?;
        let errors: Vec<_> = validate_config(&cfg)
            .into_iter()
            .filter(|d| d.severity == Severity::Error)
            .collect();
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::InvalidConfig(errors))
        }
    }

    pub fn renumber(&mut self) {
        for (k, t) in self.tasks.iter_mut().enumerate() {
            t.index = k + 1;
        }
    }

    pub fn n(&self) -> usize {
        self.tasks.len()
    }

    pub fn fmax(&self) -> Frequency {
        self.freqs.max()
    }

    /// `m * D`, the horizon of the virtual single processor.
    pub fn virtual_horizon(&self) -> f64 {
        self.m as f64 * self.frame_length
    }

    /// `sum w_i / f_M`.
    pub fn total_worst_time(&self) -> f64 {
        self.tasks.iter().map(|t| t.worst_time(self.fmax())).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub field: String,
    pub rule: String,
    pub severity: Severity,
}

impl Diagnostic {
    fn error(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            rule: rule.into(),
            severity: Severity::Error,
        }
    }

    fn warning(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            rule: rule.into(),
            severity: Severity::Warning,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{level}: {}: {}", self.field, self.rule)
    }
}

/// Checks every invariant of the instance. Returns one diagnostic per
/// violated rule; an empty list means the instance is well formed.
///
/// Overloaded instances (`sum w_i / f_M > m * D`) only yield a warning since
/// the static partitioning is the binding test.
pub fn validate_config(cfg: &SystemConfig) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    if !(cfg.frame_length > 0.0 && cfg.frame_length.is_finite()) {
        diags.push(Diagnostic::error("D", format!("frame length {} must be positive", cfg.frame_length)));
    }
    if cfg.m == 0 {
        diags.push(Diagnostic::error("m", "at least one processor is required"));
    }
    if !(cfg.grid_step > 0.0 && cfg.grid_step.is_finite()) {
        diags.push(Diagnostic::error("grid_step", format!("grid step {} must be positive", cfg.grid_step)));
    }
    cfg.freqs.check("freqs", &mut diags);

    for (k, task) in cfg.tasks.iter().enumerate() {
        let field = format!("tasks[{k}]");
        if task.index != k + 1 {
            diags.push(Diagnostic::error(
                format!("{field}.index"),
                format!("index {} does not match position {}", task.index, k + 1),
            ));
        }
        if task.wcec == 0 {
            diags.push(Diagnostic::error(format!("{field}.wcec"), "wcec must be positive"));
        }
        let support = task.dist.support();
        if support.is_empty() {
            diags.push(Diagnostic::error(format!("{field}.dist"), "distribution is empty"));
            continue;
        }
        if support.iter().any(|&(x, _)| x == 0) {
            diags.push(Diagnostic::error(format!("{field}.dist"), "cycle counts must be positive"));
        }
        if support.iter().any(|&(_, p)| !(p > 0.0 && p <= 1.0)) {
            diags.push(Diagnostic::error(format!("{field}.dist"), "probabilities must lie in (0, 1]"));
        }
        if support.windows(2).any(|w| w[0].0 >= w[1].0) {
            diags.push(Diagnostic::error(format!("{field}.dist"), "cycle counts not strictly increasing"));
        }
        let total: f64 = support.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > PROB_EPS {
            diags.push(Diagnostic::error(
                format!("{field}.dist"),
                format!("probabilities sum to {}", (total * 1e9).round() / 1e9),
            ));
        }
        let max = support[support.len() - 1].0;
        if max != task.wcec {
            diags.push(Diagnostic::error(
                format!("{field}.wcec"),
                format!("wcec mismatch: wcec {} but distribution max {max}", task.wcec),
            ));
        }
    }

    let fmax_ok = !cfg.freqs.is_empty() && cfg.freqs.max().value() > 0.0;
    if diags.is_empty() && fmax_ok && cfg.total_worst_time() > cfg.virtual_horizon() {
        diags.push(Diagnostic::warning(
            "tasks",
            format!(
                "total worst-case time {} exceeds m * D = {}",
                cfg.total_worst_time(),
                cfg.virtual_horizon()
            ),
        ));
    }
    diags
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_task() -> SystemConfig {
        SystemConfig::new(
            20.0,
            1,
            FrequencySet::new(&[1.0]).unwrap(),
            1.0,
            vec![CycleDistribution::degenerate(10)],
        )
    }

    #[test]
    fn valid_single_task_has_no_diagnostics() {
        assert!(validate_config(&one_task()).is_empty());
    }

    #[test]
    fn probability_sum_is_reported() {
        let mut cfg = one_task();
        cfg.tasks[0] = Task::new(1, CycleDistribution::new(vec![(5, 0.5), (10, 0.4)]));
        let diags = validate_config(&cfg);
        assert_eq!(diags.len(), 1);
        assert!(diags[0].rule.contains("probabilities sum to 0.9"), "{}", diags[0]);
    }

    #[test]
    fn wcec_mismatch_is_reported() {
        let mut cfg = one_task();
        cfg.tasks[0].wcec = 8;
        let diags = validate_config(&cfg);
        assert_eq!(diags.len(), 1);
        assert!(diags[0].rule.contains("wcec mismatch"));
        assert_eq!(diags[0].field, "tasks[0].wcec");
    }

    #[test]
    fn overload_is_only_a_warning() {
        let mut cfg = one_task();
        cfg.frame_length = 5.0;
        let diags = validate_config(&cfg);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].severity, Severity::Warning);
    }

    #[test]
    fn ceil_freq_examples() {
        let fs = FrequencySet::new(&[0.5, 0.75, 1.0]).unwrap();
        assert_eq!(ceil_freq(0.6, &fs).unwrap().value(), 0.75);
        assert_eq!(ceil_freq(0.5, &fs).unwrap().value(), 0.5);
        assert_eq!(ceil_freq(0.01, &fs).unwrap().value(), 0.5);
        let fs = FrequencySet::new(&[0.5, 1.0]).unwrap();
        assert!(matches!(ceil_freq(1.001, &fs), Err(Error::FrequencyAboveMax { .. })));
    }

    #[test]
    fn energy_examples() {
        assert_eq!(energy_of_execution(1000, Frequency::MAX), 1000.0);
        assert_eq!(energy_of_execution(1000, Frequency::new(0.5).unwrap()), 250.0);
        assert_eq!(energy_of_execution(0, Frequency::new(0.75).unwrap()), 0.0);
    }

    #[test]
    fn json_field_names() {
        let json = r#"{"D": 10.0, "m": 2, "freqs": [0.5, 1.0], "grid_step": 0.5,
                       "tasks": [{"wcec": 4, "dist": [[2, 0.5], [4, 0.5]]}]}"#;
        let cfg = SystemConfig::from_json_str(json).unwrap();
        assert_eq!(cfg.frame_length, 10.0);
        assert_eq!(cfg.tasks[0].index, 1);
        assert!(validate_config(&cfg).is_empty());
        let back = SystemConfig::from_json_str(&cfg.to_json_string().unwrap()).unwrap();
        assert_eq!(back, cfg);
        let v: serde_json::Value = serde_json::from_str(&cfg.to_json_string().unwrap()).unwrap();
        assert!(v.get("D").is_some() && v["tasks"][0].get("index").is_none());
    }

    #[test]
    fn bad_frequency_sets() {
        assert!(FrequencySet::new(&[]).is_err());
        assert!(FrequencySet::new(&[0.5, 0.5, 1.0]).is_err());
        assert!(FrequencySet::new(&[0.5, 0.9]).is_err());
        assert!(FrequencySet::new(&[0.0, 1.0]).is_err());
        assert_eq!(FrequencySet::uniform(4).get(1).value(), 0.5);
    }

    fn arb_valid_config() -> impl Strategy<Value = SystemConfig> {
        (
            1usize..4,
            1usize..4,
            prop::collection::vec(prop::collection::btree_map(1u64..50, 1u32..10, 1..4), 1..5),
        )
            .prop_map(|(m, levels, supports)| {
                let dists: Vec<_> = supports
                    .into_iter()
                    .map(|s| {
                        let total: u32 = s.values().sum();
                        CycleDistribution::new(
                            s.into_iter().map(|(x, w)| (x, w as f64 / total as f64)).collect(),
                        )
                    })
                    .collect();
                SystemConfig::new(500.0, m, FrequencySet::uniform(levels), 1.0, dists)
            })
    }

    proptest! {
        #[test]
        fn ceil_freq_is_an_upper_member(req in 0.0f64..=1.0, levels in 1usize..6) {
            let fs = FrequencySet::uniform(levels);
            let f = ceil_freq(req, &fs).unwrap();
            prop_assert!(f.value() >= req - FREQ_EPS);
            prop_assert!(fs.iter().any(|g| g == f));
            for g in fs.iter() {
                prop_assert_eq!(ceil_freq(g.value(), &fs).unwrap(), g);
            }
        }

        #[test]
        fn energy_is_monotone(x in 0u64..10_000, dx in 0u64..100, a in 0.01f64..=1.0, b in 0.01f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let lo = Frequency::new(lo).unwrap();
            let hi = Frequency::new(hi).unwrap();
            prop_assert!(energy_of_execution(x, lo) <= energy_of_execution(x, hi));
            prop_assert!(energy_of_execution(x, hi) <= energy_of_execution(x + dx, hi));
            let half = Frequency::new(hi.value() / 2.0).unwrap();
            let ratio = energy_of_execution(x, half) * 4.0 - energy_of_execution(x, hi);
            prop_assert!(ratio.abs() <= 1e-9 * (x as f64 + 1.0));
        }

        #[test]
        fn valid_configs_have_no_errors(cfg in arb_valid_config()) {
            prop_assert!(validate_config(&cfg).iter().all(|d| d.severity == Severity::Warning));
        }

        #[test]
        fn every_mutation_is_diagnosed(cfg in arb_valid_config(), which in 0usize..8, pick in any::<prop::sample::Index>()) {
            let mut cfg = cfg;
            let t = pick.index(cfg.tasks.len());
            match which {
                0 => cfg.frame_length = -1.0,
                1 => cfg.m = 0,
                2 => cfg.grid_step = 0.0,
                3 => cfg.freqs = FrequencySet(vec![Frequency(0.5)]),
                4 => cfg.tasks[t].wcec += 1,
                5 => cfg.tasks[t].dist.0[0].1 += 0.25,
                6 => cfg.tasks[t].index += 1,
                _ => {
                    let d = &mut cfg.tasks[t].dist.0;
                    let first = d[0];
                    d.push(first);
                }
            }
            prop_assert!(validate_config(&cfg).iter().any(|d| d.severity == Severity::Error));
        }
    }
}
