//! Exhaustive reference computations for tiny instances.
//!
//! These are deliberately naive and use exact rational arithmetic. They
//! check the frequency tables and the partitioning heuristic in tests and
//! stay usable for comparing alternative heuristics.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::model::SystemConfig;

pub const MAX_TASKS: usize = 3;
pub const MAX_LEVELS: usize = 2;
pub const MAX_CYCLES: u64 = 4;
pub const MAX_SUPPORT: usize = 3;

/// Exact value of the shortest decimal that reads back as `v`, so a config
/// step of `0.3` means 3/10 rather than the nearest binary fraction.
fn rat(v: f64) -> BigRational {
    assert!(v.is_finite(), "finite value");
    let text = v.abs().to_string();
    let (int_part, frac) = text.split_once('.').unwrap_or((&text, ""));
    let digits: BigInt = format!("{int_part}{frac}").parse().expect("decimal digits");
    let value = BigRational::new(digits, BigInt::from(10u8).pow(frac.len() as u32));
    if v < 0.0 {
        -value
    } else {
        value
    }
}

fn int(v: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

struct Exact {
    step: BigRational,
    freqs: Vec<BigRational>,
    wcec: Vec<BigRational>,
    dists: Vec<Vec<(BigRational, BigRational)>>,
    horizon: BigRational,
}

impl Exact {
    fn new(cfg: &SystemConfig) -> Result<Self> {
        if cfg.n() > MAX_TASKS || cfg.freqs.len() > MAX_LEVELS {
            return Err(Error::TooLarge(format!(
                "{} tasks and {} levels (limits {MAX_TASKS} and {MAX_LEVELS})",
                cfg.n(),
                cfg.freqs.len()
            )));
        }
        if let Some(t) = cfg
            .tasks
            .iter()
            .find(|t| t.wcec > MAX_CYCLES || t.dist.support().len() > MAX_SUPPORT)
        {
            return Err(Error::TooLarge(format!("task {} exceeds {MAX_CYCLES} cycles or {MAX_SUPPORT} outcomes", t.index)));
        }
        Ok(Self {
            step: rat(cfg.grid_step),
            freqs: cfg.freqs.iter().map(|f| rat(f.value())).collect(),
            wcec: cfg.tasks.iter().map(|t| int(t.wcec)).collect(),
            dists: cfg
                .tasks
                .iter()
                .map(|t| t.dist.support().iter().map(|&(x, p)| (int(x), rat(p))).collect())
                .collect(),
            horizon: rat(cfg.virtual_horizon()),
        })
    }

    /// Largest grid point not above `d`, never below zero.
    fn to_grid(&self, d: &BigRational) -> BigRational {
        if d <= &BigRational::zero() {
            return BigRational::zero();
        }
        (d / &self.step).floor() * &self.step
    }

    fn fmax(&self) -> &BigRational {
        self.freqs.last().expect("non-empty frequency set")
    }

    /// Indices of frequencies satisfying the worst-case guard for task `i`
    /// with `d` left, or just the fastest one if none does.
    fn candidates(&self, i: usize, d: &BigRational) -> Vec<usize> {
        let rest: BigRational = self.wcec[i + 1..].iter().map(|w| w / self.fmax()).sum();
        let ok: Vec<usize> = (0..self.freqs.len())
            .filter(|&k| &self.wcec[i] / &self.freqs[k] + &rest <= *d)
            .collect();
        if ok.is_empty() {
            vec![self.freqs.len() - 1]
        } else {
            ok
        }
    }

    fn step_cost(&self, k: usize, x: &BigRational) -> BigRational {
        x * &self.freqs[k] * &self.freqs[k]
    }

    fn next_time(&self, d: &BigRational, k: usize, x: &BigRational) -> BigRational {
        self.to_grid(&(d - x / &self.freqs[k]))
    }

    /// Expands every outcome below `(i, d)`, minimizing at each decision.
    fn best(&self, i: usize, d: &BigRational) -> BigRational {
        if i == self.wcec.len() {
            return BigRational::zero();
        }
        self.candidates(i, d)
            .into_iter()
            .map(|k| {
                self.dists[i]
                    .iter()
                    .map(|(x, p)| p * (self.step_cost(k, x) + self.best(i + 1, &self.next_time(d, k, x))))
                    .sum::<BigRational>()
            })
            .min()
            .expect("at least one candidate")
    }
}

/// Minimal expected energy over all frequency policies, by full expansion of
/// the outcome tree starting from the grid point at or below `m * D`.
///
/// Cycle outcomes and decisions alternate down the tree. Since a policy's
/// choice in one subtree never affects another, the minimum over all
/// policies is the tree with a minimum taken at every decision node.
pub fn brute_force_expected_energy(cfg: &SystemConfig) -> Result<f64> {
    let ex = Exact::new(cfg)?;
    let start = ex.to_grid(&ex.horizon);
    Ok(ex.best(0, &start).to_f64().expect("representable"))
}

/// Every deterministic policy restricted to the states it can reach,
/// enumerated explicitly as a mapping `(task, remaining time) -> frequency`.
pub struct PolicyEnumeration {
    ex: Exact,
    /// Reachable states per task with their admissible frequency indices.
    states: Vec<Vec<(BigRational, Vec<usize>)>>,
}

impl PolicyEnumeration {
    pub fn new(cfg: &SystemConfig) -> Result<Self> {
        let ex = Exact::new(cfg)?;
        let mut states = Vec::new();
        let mut frontier: BTreeSet<BigRational> = [ex.to_grid(&ex.horizon)].into();
        for i in 0..cfg.n() {
            let mut next = BTreeSet::new();
            let mut row = Vec::new();
            for d in frontier {
                let cands = ex.candidates(i, &d);
                for &k in &cands {
                    for (x, _) in &ex.dists[i] {
                        next.insert(ex.next_time(&d, k, x));
                    }
                }
                row.push((d, cands));
            }
            states.push(row);
            frontier = next;
        }
        Ok(Self { ex, states })
    }

    /// Number of distinct policies.
    pub fn count(&self) -> u128 {
        self.states
            .iter()
            .flatten()
            .map(|(_, c)| c.len() as u128)
            .product()
    }

    fn evaluate(&self, choice: &[Vec<usize>], i: usize, d: &BigRational) -> BigRational {
        if i == self.states.len() {
            return BigRational::zero();
        }
        let s = self.states[i].iter().position(|(sd, _)| sd == d).expect("reachable state");
        let k = self.states[i][s].1[choice[i][s]];
        self.ex.dists[i]
            .iter()
            .map(|(x, p)| p * (self.ex.step_cost(k, x) + self.evaluate(choice, i + 1, &self.ex.next_time(d, k, x))))
            .sum()
    }

    /// Minimum expected energy over the explicit list of policies.
    pub fn minimum(&self) -> f64 {
        let mut choice: Vec<Vec<usize>> = self.states.iter().map(|r| vec![0; r.len()]).collect();
        let start = self.ex.to_grid(&self.ex.horizon);
        let mut best: Option<BigRational> = None;
        loop {
            let v = self.evaluate(&choice, 0, &start);
            if best.as_ref().is_none_or(|b| v < *b) {
                best = Some(v);
            }
            // Odometer increment over all states.
            let mut carried = true;
            'outer: for (i, row) in self.states.iter().enumerate() {
                for (s, (_, cands)) in row.iter().enumerate() {
                    choice[i][s] += 1;
                    if choice[i][s] < cands.len() {
                        carried = false;
                        break 'outer;
                    }
                    choice[i][s] = 0;
                }
            }
            if carried {
                break;
            }
        }
        best.map_or(0.0, |b| b.to_f64().expect("representable"))
    }
}

/// Shortest completion time over every non-preemptive assignment of tasks
/// with the given cycle counts to processors, all at the maximum frequency.
pub fn brute_force_min_makespan(cfg: &SystemConfig, cycles: &[u64]) -> Result<f64> {
    let m = cfg.m.max(1);
    let combos = (m as f64).powi(cycles.len() as i32);
    if combos > 2e6 {
        return Err(Error::TooLarge(format!("{m}^{} assignments", cycles.len())));
    }
    let fmax = cfg.fmax().value();
    // Order on a processor does not change its total busy time.
    let mut load = vec![0u64; m];
    fn search(cycles: &[u64], load: &mut [u64], best: &mut u64) {
        let Some((&x, rest)) = cycles.split_first() else {
            *best = (*best).min(*load.iter().max().unwrap());
            return;
        };
        for p in 0..load.len() {
            load[p] += x;
            search(rest, load, best);
            load[p] -= x;
        }
    }
    let mut best = u64::MAX;
    search(cycles, &mut load, &mut best);
    Ok(if cycles.is_empty() { 0.0 } else { best as f64 / fmax })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CycleDistribution, FrequencySet};
    use crate::partition::{static_partition, PartitionOptions};

    fn cfg(m: usize, d: f64, freqs: &[f64], dists: Vec<CycleDistribution>) -> SystemConfig {
        SystemConfig::new(d, m, FrequencySet::new(freqs).unwrap(), 1.0, dists)
    }

    #[test]
    fn decimal_reading() {
        assert_eq!(rat(0.3), BigRational::new(3.into(), 10.into()));
        assert_eq!(rat(12.0), int(12));
        assert_eq!(rat(-0.25), BigRational::new((-1).into(), 4.into()));
        assert_eq!(rat(1e-7), BigRational::new(1.into(), 10_000_000.into()));
    }

    #[test]
    fn two_leaf_expectation() {
        let c = cfg(1, 4.0, &[1.0], vec![CycleDistribution::new(vec![(1, 0.5), (2, 0.5)])]);
        assert_eq!(brute_force_expected_energy(&c).unwrap(), 1.5);
    }

    #[test]
    fn deterministic_task_with_ample_time() {
        let c = cfg(1, 20.0, &[0.5, 1.0], vec![CycleDistribution::degenerate(4)]);
        assert_eq!(brute_force_expected_energy(&c).unwrap(), 1.0);
    }

    #[test]
    fn no_tasks() {
        let c = cfg(1, 20.0, &[0.5, 1.0], vec![]);
        assert_eq!(brute_force_expected_energy(&c).unwrap(), 0.0);
        assert_eq!(PolicyEnumeration::new(&c).unwrap().minimum(), 0.0);
    }

    #[test]
    fn refuses_large_instances() {
        let c = cfg(1, 20.0, &[0.5, 1.0], vec![CycleDistribution::degenerate(5)]);
        assert!(matches!(brute_force_expected_energy(&c), Err(Error::TooLarge(_))));
        let c = cfg(1, 20.0, &[0.25, 0.5, 1.0], vec![CycleDistribution::degenerate(1)]);
        assert!(brute_force_expected_energy(&c).is_err());
    }

    #[test]
    fn explicit_enumeration_agrees_with_tree() {
        let c = cfg(
            2,
            4.0,
            &[0.5, 1.0],
            vec![
                CycleDistribution::new(vec![(1, 0.5), (3, 0.5)]),
                CycleDistribution::new(vec![(1, 0.25), (2, 0.75)]),
                CycleDistribution::degenerate(2),
            ],
        );
        let e = PolicyEnumeration::new(&c).unwrap();
        assert!(e.count() > 1);
        assert_eq!(e.minimum(), brute_force_expected_energy(&c).unwrap());
    }

    #[test]
    fn makespan_of_three_equal_tasks() {
        let c = cfg(2, 12.0, &[1.0], [6, 6, 6].iter().map(|&w| CycleDistribution::degenerate(w)).collect());
        assert_eq!(brute_force_min_makespan(&c, &[6, 6, 6]).unwrap(), 12.0);
        // The heuristic rejects it even though the frame is long enough.
        assert!(static_partition(&c, PartitionOptions::default()).is_err());
    }

    #[test]
    fn makespan_trivial_cases() {
        let c = cfg(4, 12.0, &[1.0], [3, 5, 2].iter().map(|&w| CycleDistribution::degenerate(w)).collect());
        assert_eq!(brute_force_min_makespan(&c, &[3, 5, 2]).unwrap(), 5.0);
        let c = cfg(1, 12.0, &[1.0], vec![CycleDistribution::degenerate(7)]);
        assert_eq!(brute_force_min_makespan(&c, &[7]).unwrap(), 7.0);
    }
}
