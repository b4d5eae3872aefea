//! Scheduling policies: the reservation-based global scheduler and the
//! reference points it is compared against.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::{run_frame_with, FrameTrace, Policy};
use crate::error::Result;
use crate::model::{ceil_freq, FrequencySet, SystemConfig};
use crate::partition::{static_partition, Partition, PartitionOptions};
use crate::scheduler::{local_slack, SchedulerState, StartDecision};
use crate::sfunc::{build_table, compute_s_tables, STable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyId {
    /// Reservation-based global scheduling with migrations.
    GlobalStochastic,
    /// Everything at the maximum frequency.
    MaxFreq,
    /// Tasks pinned to their reserved processor, one uniprocessor table each.
    PartitionedUniproc,
    /// Global frequency selection without reservations.
    NaiveGlobal,
}

impl PolicyId {
    pub const ALL: [PolicyId; 4] = [
        PolicyId::GlobalStochastic,
        PolicyId::MaxFreq,
        PolicyId::PartitionedUniproc,
        PolicyId::NaiveGlobal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyId::GlobalStochastic => "global_stochastic",
            PolicyId::MaxFreq => "max_freq",
            PolicyId::PartitionedUniproc => "partitioned_uniproc",
            PolicyId::NaiveGlobal => "naive_global",
        }
    }
}

impl fmt::Display for PolicyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        PolicyId::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = PolicyId::ALL.iter().map(|p| p.name()).collect();
                format!("unknown policy `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// The reservation-based global scheduler as an engine policy.
pub struct GlobalStochastic<'a> {
    state: SchedulerState,
    table: &'a STable,
    freqs: &'a FrequencySet,
}

impl<'a> GlobalStochastic<'a> {
    pub fn new(cfg: &'a SystemConfig, table: &'a STable, partition: Partition) -> Self {
        Self {
            state: SchedulerState::new(cfg.frame_length, partition),
            table,
            freqs: &cfg.freqs,
        }
    }

    pub fn state(&self) -> &SchedulerState {
        &self.state
    }
}

impl Policy for GlobalStochastic<'_> {
    fn has_pending(&self) -> bool {
        !self.state.pending().is_empty()
    }

    fn on_idle(&mut self, t: f64, cpu: usize) -> Result<Option<StartDecision>> {
        self.state.start_task(self.table, self.freqs, t, cpu).map(Some)
    }

    fn on_finish(&mut self, cpu: usize, t: f64) {
        self.state.finish(cpu, t);
    }
}

/// First pending task at the maximum frequency on whichever processor is idle.
pub struct MaxFreq {
    pending: VecDeque<usize>,
    wcec: Vec<u64>,
    fmax: crate::model::Frequency,
}

impl MaxFreq {
    pub fn new(cfg: &SystemConfig) -> Self {
        Self {
            pending: (0..cfg.n()).collect(),
            wcec: cfg.tasks.iter().map(|t| t.wcec).collect(),
            fmax: cfg.fmax(),
        }
    }
}

impl Policy for MaxFreq {
    fn has_pending(&self) -> bool {
        !self.pending.is_empty()
    }

    fn on_idle(&mut self, t: f64, cpu: usize) -> Result<Option<StartDecision>> {
        Ok(self.pending.pop_front().map(|task| StartDecision {
            task,
            cpu,
            freq: self.fmax,
            worst_end: t + self.wcec[task] as f64 / self.fmax.value(),
            skipped: Vec::new(),
            moves: Vec::new(),
        }))
    }

    fn on_finish(&mut self, _cpu: usize, _t: f64) {}
}

/// Tasks reserved on one processor, in frame order, with their own table.
#[derive(Debug, Clone)]
pub struct CpuPlan {
    pub tasks: Vec<usize>,
    pub table: STable,
    wcec: Vec<u64>,
}

impl CpuPlan {
    /// One plan per processor of `part`, each with a table of horizon `D`.
    pub fn for_partition(cfg: &SystemConfig, part: &Partition) -> Vec<CpuPlan> {
        (0..part.cpus())
            .map(|cpu| {
                let tasks: Vec<usize> = part.assigned(cpu).iter().copied().collect();
                let local: Vec<_> = tasks.iter().map(|&t| cfg.tasks[t].clone()).collect();
                CpuPlan {
                    table: build_table(&local, cfg.frame_length, cfg.grid_step, &cfg.freqs),
                    wcec: local.iter().map(|t| t.wcec).collect(),
                    tasks,
                }
            })
            .collect()
    }
}

/// Each processor runs its reserved tasks in frame order with a
/// uniprocessor table over `D`; no migration.
pub struct PartitionedUniproc<'a> {
    plans: &'a [CpuPlan],
    next: Vec<usize>,
    frame_length: f64,
    freqs: &'a FrequencySet,
}

impl<'a> PartitionedUniproc<'a> {
    pub fn new(cfg: &'a SystemConfig, plans: &'a [CpuPlan]) -> Self {
        Self {
            plans,
            next: vec![0; plans.len()],
            frame_length: cfg.frame_length,
            freqs: &cfg.freqs,
        }
    }
}

impl Policy for PartitionedUniproc<'_> {
    fn has_pending(&self) -> bool {
        self.plans.iter().zip(&self.next).any(|(p, &k)| k < p.tasks.len())
    }

    fn on_idle(&mut self, t: f64, cpu: usize) -> Result<Option<StartDecision>> {
        let plan = &self.plans[cpu];
        let k = self.next[cpu];
        if k >= plan.tasks.len() {
            return Ok(None);
        }
        let fmax = self.freqs.max().value();
        let rest = plan.wcec[k + 1..].iter().sum::<u64>() as f64 / fmax;
        let w = plan.wcec[k] as f64;
        let mut freq = plan.table.lookup(k, self.frame_length - t)?;
        let slack = local_slack(self.frame_length, t, rest);
        if slack < w / freq.value() {
            freq = ceil_freq(w / slack, self.freqs)?;
        }
        self.next[cpu] += 1;
        Ok(Some(StartDecision {
            task: plan.tasks[k],
            cpu,
            freq,
            worst_end: t + w / freq.value(),
            skipped: Vec::new(),
            moves: Vec::new(),
        }))
    }

    fn on_finish(&mut self, _cpu: usize, _t: f64) {}
}

/// Global frequency selection from the `m * D` table with no reservations:
/// the first pending task starts on the idle processor at the table's
/// frequency, raised only as needed to end by `D` on that processor.
pub struct NaiveGlobal<'a> {
    table: &'a STable,
    freqs: &'a FrequencySet,
    frame_length: f64,
    wcec: Vec<u64>,
    pending: VecDeque<usize>,
    worst_end: Vec<f64>,
    busy: Vec<bool>,
}

impl<'a> NaiveGlobal<'a> {
    pub fn new(cfg: &'a SystemConfig, table: &'a STable) -> Self {
        Self {
            table,
            freqs: &cfg.freqs,
            frame_length: cfg.frame_length,
            wcec: cfg.tasks.iter().map(|t| t.wcec).collect(),
            pending: (0..cfg.n()).collect(),
            worst_end: vec![0.0; cfg.m],
            busy: vec![false; cfg.m],
        }
    }
}

impl Policy for NaiveGlobal<'_> {
    fn has_pending(&self) -> bool {
        !self.pending.is_empty()
    }

    fn on_idle(&mut self, t: f64, cpu: usize) -> Result<Option<StartDecision>> {
        let Some(task) = self.pending.pop_front() else {
            return Ok(None);
        };
        for (end, &busy) in self.worst_end.iter_mut().zip(&self.busy) {
            if !busy {
                *end = t;
            }
        }
        let m = self.worst_end.len();
        let others: f64 = (0..m).filter(|&q| q != cpu).map(|q| self.worst_end[q]).sum();
        let remaining = (m as f64 * self.frame_length - (t + others)).max(0.0);
        let mut freq = self.table.lookup(task, remaining)?;

        let w = self.wcec[task] as f64;
        let local = self.frame_length - t;
        if w / freq.value() > local {
            freq = if local > 0.0 && w / local <= self.freqs.max().value() {
                ceil_freq(w / local, self.freqs)?
            } else {
                self.freqs.max()
            };
        }
        let worst_end = t + w / freq.value();
        self.worst_end[cpu] = worst_end;
        self.busy[cpu] = true;
        Ok(Some(StartDecision {
            task,
            cpu,
            freq,
            worst_end,
            skipped: Vec::new(),
            moves: Vec::new(),
        }))
    }

    fn on_finish(&mut self, cpu: usize, t: f64) {
        self.busy[cpu] = false;
        self.worst_end[cpu] = t;
    }
}

/// A configured experiment: the instance, its partition and whatever tables
/// the chosen policy needs.
#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: SystemConfig,
    policy: PolicyId,
    partition: Partition,
    table: Option<STable>,
    plans: Vec<CpuPlan>,
}

impl Simulation {
    /// Partitions the instance and precomputes tables. Fails if the static
    /// partitioning does, whatever the policy.
    pub fn new(cfg: SystemConfig, policy: PolicyId, opts: PartitionOptions) -> Result<Self> {
        let partition = static_partition(&cfg, opts)?;
        Ok(Self::with_partition(cfg, policy, partition))
    }

    pub fn with_partition(cfg: SystemConfig, policy: PolicyId, partition: Partition) -> Self {
        let table = matches!(policy, PolicyId::GlobalStochastic | PolicyId::NaiveGlobal)
            .then(|| compute_s_tables(&cfg));
        let plans = if policy == PolicyId::PartitionedUniproc {
            CpuPlan::for_partition(&cfg, &partition)
        } else {
            Vec::new()
        };
        Self {
            cfg,
            policy,
            partition,
            table,
            plans,
        }
    }

    pub fn config(&self) -> &SystemConfig {
        &self.cfg
    }

    pub fn policy(&self) -> PolicyId {
        self.policy
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn table(&self) -> Option<&STable> {
        self.table.as_ref()
    }

    pub fn run_frame(&self, seed: u64) -> Result<FrameTrace> {
        let cfg = &self.cfg;
        match self.policy {
            PolicyId::GlobalStochastic => {
                let table = self.table.as_ref().expect("table computed");
                run_frame_with(cfg, &mut GlobalStochastic::new(cfg, table, self.partition.clone()), seed)
            }
            PolicyId::MaxFreq => run_frame_with(cfg, &mut MaxFreq::new(cfg), seed),
            PolicyId::PartitionedUniproc => run_frame_with(cfg, &mut PartitionedUniproc::new(cfg, &self.plans), seed),
            PolicyId::NaiveGlobal => {
                let table = self.table.as_ref().expect("table computed");
                run_frame_with(cfg, &mut NaiveGlobal::new(cfg, table), seed)
            }
        }
    }

    pub fn run(&self, seeds: &[u64]) -> Result<Vec<FrameTrace>> {
        seeds.iter().map(|&s| self.run_frame(s)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::EventKind;
    use crate::model::{energy_of_execution, CycleDistribution};

    fn cfg(m: usize, d: f64, freqs: &[f64], dists: Vec<CycleDistribution>) -> SystemConfig {
        SystemConfig::new(d, m, FrequencySet::new(freqs).unwrap(), 1.0, dists)
    }

    fn stochastic(m: usize) -> SystemConfig {
        cfg(
            m,
            if m == 1 { 30.0 } else { 14.0 },
            &[0.25, 0.5, 0.75, 1.0],
            vec![
                CycleDistribution::new(vec![(1, 0.5), (4, 0.5)]),
                CycleDistribution::new(vec![(2, 0.7), (5, 0.3)]),
                CycleDistribution::new(vec![(1, 0.1), (3, 0.9)]),
                CycleDistribution::degenerate(2),
                CycleDistribution::new(vec![(1, 0.6), (6, 0.4)]),
            ],
        )
    }

    fn sim(c: &SystemConfig, p: PolicyId) -> Simulation {
        Simulation::new(c.clone(), p, PartitionOptions::default()).unwrap()
    }

    #[test]
    fn policy_names_round_trip() {
        for p in PolicyId::ALL {
            assert_eq!(p.name().parse::<PolicyId>().unwrap(), p);
            assert_eq!(serde_json::to_string(&p).unwrap(), format!("\"{}\"", p.name()));
        }
        assert!("fastest".parse::<PolicyId>().is_err());
    }

    #[test]
    fn max_freq_runs_everything_at_fmax() {
        let c = stochastic(2);
        for seed in 0..20 {
            let trace = sim(&c, PolicyId::MaxFreq).run_frame(seed).unwrap();
            assert!(trace.starts().all(|e| e.freq.unwrap().value() == 1.0));
            let cycles: u64 = trace.starts().map(|e| e.cycles.unwrap()).sum();
            assert_eq!(trace.total_energy, cycles as f64);
            assert!(trace.deadline_met);
        }
    }

    #[test]
    fn max_freq_energy_on_deterministic_instance() {
        let c = cfg(2, 10.0, &[0.5, 1.0], [3, 4, 2].iter().map(|&w| CycleDistribution::degenerate(w)).collect());
        let trace = sim(&c, PolicyId::MaxFreq).run_frame(0).unwrap();
        assert_eq!(trace.total_energy, 9.0);
    }

    #[test]
    fn partitioned_never_migrates() {
        let c = stochastic(2);
        let s = sim(&c, PolicyId::PartitionedUniproc);
        for seed in 0..30 {
            let trace = s.run_frame(seed).unwrap();
            assert!(trace.deadline_met);
            assert_eq!(trace.reservation_moves(), 0);
            for e in trace.starts() {
                assert_eq!(s.partition().owner(e.task), Some(e.cpu));
            }
        }
    }

    #[test]
    fn single_cpu_partitioned_equals_global() {
        let c = stochastic(1);
        let g = sim(&c, PolicyId::GlobalStochastic);
        let p = sim(&c, PolicyId::PartitionedUniproc);
        for seed in 0..30 {
            let a = g.run_frame(seed).unwrap();
            let b = p.run_frame(seed).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn naive_global_misses_on_fragmented_frame() {
        // Reservations: 8 on cpu 0, 4 + 4 on cpu 1. Without them the first
        // two tasks pick slow frequencies and leave no room for the 8.
        let c = cfg(2, 10.0, &[0.5, 1.0], [4, 4, 8].iter().map(|&w| CycleDistribution::degenerate(w)).collect());
        let naive = sim(&c, PolicyId::NaiveGlobal).run_frame(0).unwrap();
        assert!(!naive.deadline_met);
        let global = sim(&c, PolicyId::GlobalStochastic).run_frame(0).unwrap();
        assert!(global.deadline_met);
        assert_eq!(global.skips(), 2);
    }

    #[test]
    fn naive_global_single_cpu_with_room() {
        let c = stochastic(1);
        let s = sim(&c, PolicyId::NaiveGlobal);
        for seed in 0..30 {
            assert!(s.run_frame(seed).unwrap().deadline_met);
        }
    }

    #[test]
    fn naive_and_global_agree_with_one_task_per_cpu() {
        let c = cfg(3, 10.0, &[0.5, 0.75, 1.0], [3, 6, 7].iter().map(|&w| CycleDistribution::degenerate(w)).collect());
        let a = sim(&c, PolicyId::NaiveGlobal).run_frame(0).unwrap();
        let b = sim(&c, PolicyId::GlobalStochastic).run_frame(0).unwrap();
        assert_eq!(a.total_energy, b.total_energy);
    }

    #[test]
    fn global_energy_never_exceeds_max_freq() {
        let c = stochastic(2);
        let g = sim(&c, PolicyId::GlobalStochastic);
        let mx = sim(&c, PolicyId::MaxFreq);
        for seed in 0..30 {
            let a = g.run_frame(seed).unwrap();
            let b = mx.run_frame(seed).unwrap();
            assert!(a.total_energy <= b.total_energy);
            let recomputed: f64 = a
                .events
                .iter()
                .filter(|e| e.kind == EventKind::Start)
                .map(|e| energy_of_execution(e.cycles.unwrap(), e.freq.unwrap()))
                .sum();
            assert_eq!(recomputed, a.total_energy);
        }
    }
}
