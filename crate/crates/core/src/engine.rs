//! Discrete-event simulation of one frame.
//!
//! All tasks are released at time 0. Whenever a processor is idle and tasks
//! are pending, the policy is asked what to start there, right away. The
//! actual number of cycles of each task is drawn at the start of the frame
//! (in task order, so every policy sees the same realization for a given
//! seed) but is only revealed through the finish time.

use std::io::Write;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::baselines::GlobalStochastic;
use crate::error::Result;
use crate::model::{energy_of_execution, CycleDistribution, Frequency, SystemConfig};
use crate::partition::Partition;
use crate::scheduler::{StartDecision, TIME_EPS};
use crate::sfunc::STable;

/// An online scheduling policy driven by the engine.
pub trait Policy {
    fn has_pending(&self) -> bool;

    /// Called when `cpu` is idle at `t` and tasks are pending. `None` leaves
    /// the processor idle.
    fn on_idle(&mut self, t: f64, cpu: usize) -> Result<Option<StartDecision>>;

    fn on_finish(&mut self, cpu: usize, t: f64);
}

/// Seeded random stream for one frame (ChaCha8).
pub struct FrameRng(ChaCha8Rng);

impl FrameRng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl RngCore for FrameRng {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}

/// Draws a cycle count from `dist`.
pub fn sample_cycles(dist: &CycleDistribution, rng: &mut FrameRng) -> u64 {
    let support = dist.support();
    if support.len() == 1 {
        return support[0].0;
    }
    let index = WeightedIndex::new(support.iter().map(|&(_, p)| p)).expect("valid distribution");
    support[index.sample(rng)].0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Start,
    Finish,
    Skip,
    ReservationMove,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub time: f64,
    pub kind: EventKind,
    pub task: usize,
    /// Processor the event happens on; the destination for reservation moves.
    pub cpu: usize,
    /// Source processor of a reservation move.
    pub from_cpu: Option<usize>,
    pub freq: Option<Frequency>,
    pub cycles: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameTrace {
    pub seed: u64,
    pub events: Vec<TraceEvent>,
    pub total_energy: f64,
    pub deadline_met: bool,
    /// Time the last task finished.
    pub makespan: f64,
}

impl FrameTrace {
    pub fn skips(&self) -> usize {
        self.count(EventKind::Skip)
    }

    pub fn reservation_moves(&self) -> usize {
        self.count(EventKind::ReservationMove)
    }

    fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    pub fn starts(&self) -> impl Iterator<Item = &TraceEvent> {
        self.events.iter().filter(|e| e.kind == EventKind::Start)
    }
}

#[derive(Serialize)]
struct TraceRow {
    frame: usize,
    time: f64,
    kind: EventKind,
    task: usize,
    cpu: usize,
    freq: Option<f64>,
    cycles: Option<u64>,
}

/// Writes traces as CSV (`frame,time,kind,task,cpu,freq,cycles`), with
/// 1-based task and processor numbers. `frame` is the position in `traces`.
pub fn write_traces_csv<W: Write>(traces: &[FrameTrace], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (frame, trace) in traces.iter().enumerate() {
        for e in &trace.events {
            w.serialize(TraceRow {
                frame,
                time: e.time,
                kind: e.kind,
                task: e.task + 1,
                cpu: e.cpu + 1,
                freq: e.freq.map(Frequency::value),
                cycles: e.cycles,
            })?;
        }
    }
    if traces.iter().all(|t| t.events.is_empty()) {
        w.write_record(["frame", "time", "kind", "task", "cpu", "freq", "cycles"])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct Running {
    task: usize,
    freq: Frequency,
    cycles: u64,
    finish: f64,
}

/// Simulates one frame under `policy`.
pub fn run_frame_with(cfg: &SystemConfig, policy: &mut dyn Policy, seed: u64) -> Result<FrameTrace> {
    let mut rng = FrameRng::new(seed);
    let cycles: Vec<u64> = cfg.tasks.iter().map(|t| sample_cycles(&t.dist, &mut rng)).collect();

    let mut running: Vec<Option<Running>> = vec![None; cfg.m];
    let mut events = Vec::new();
    let mut total_energy = 0.0;
    let mut makespan = 0.0;
    let mut t = 0.0;
    let mut idle: Vec<usize> = (0..cfg.m).collect();

    loop {
        for &cpu in &idle {
            if !policy.has_pending() {
                break;
            }
            let Some(dec) = policy.on_idle(t, cpu)? else {
                continue;
            };
            debug_assert_eq!(dec.cpu, cpu);
            events.extend(dec.skipped.iter().map(|&task| TraceEvent {
                time: t,
                kind: EventKind::Skip,
                task,
                cpu,
                from_cpu: None,
                freq: None,
                cycles: None,
            }));
            events.extend(dec.moves.iter().map(|mv| TraceEvent {
                time: t,
                kind: EventKind::ReservationMove,
                task: mv.task,
                cpu: mv.to,
                from_cpu: Some(mv.from),
                freq: None,
                cycles: None,
            }));
            let x = cycles[dec.task];
            total_energy += energy_of_execution(x, dec.freq);
            events.push(TraceEvent {
                time: t,
                kind: EventKind::Start,
                task: dec.task,
                cpu,
                from_cpu: None,
                freq: Some(dec.freq),
                cycles: Some(x),
            });
            running[cpu] = Some(Running {
                task: dec.task,
                freq: dec.freq,
                cycles: x,
                finish: t + x as f64 / dec.freq.value(),
            });
        }

        let Some(next) = running.iter().flatten().map(|r| r.finish).min_by(f64::total_cmp) else {
            break;
        };
        t = next;
        makespan = next;
        idle.clear();
        for (cpu, slot) in running.iter_mut().enumerate() {
            if let Some(r) = slot.filter(|r| r.finish == next) {
                events.push(TraceEvent {
                    time: t,
                    kind: EventKind::Finish,
                    task: r.task,
                    cpu,
                    from_cpu: None,
                    freq: Some(r.freq),
                    cycles: Some(r.cycles),
                });
                policy.on_finish(cpu, t);
                *slot = None;
                idle.push(cpu);
            }
        }
    }

    // Tasks a policy never managed to place count as missed.
    let deadline_met = !policy.has_pending() && makespan <= cfg.frame_length + TIME_EPS;
    Ok(FrameTrace {
        seed,
        events,
        total_energy,
        deadline_met,
        makespan,
    })
}

/// Simulates one frame under the reservation-based global scheduler.
pub fn run_frame(cfg: &SystemConfig, table: &STable, part: &Partition, seed: u64) -> Result<FrameTrace> {
    let mut policy = GlobalStochastic::new(cfg, table, part.clone());
    run_frame_with(cfg, &mut policy, seed)
}

/// Aggregate over independent frames.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub mean_energy: f64,
    /// Half-width of the normal-approximation 95% confidence interval of the
    /// mean energy; absent with a single frame.
    pub ci95: Option<f64>,
    pub misses: usize,
    pub skips: usize,
    pub frames: usize,
}

impl Summary {
    pub fn from_traces(traces: &[FrameTrace]) -> Self {
        let n = traces.len();
        assert!(n > 0, "no frames to summarize");
        let mean = traces.iter().map(|t| t.total_energy).sum::<f64>() / n as f64;
        let ci95 = (n > 1).then(|| {
            let var = traces.iter().map(|t| (t.total_energy - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            1.96 * (var / n as f64).sqrt()
        });
        Self {
            mean_energy: mean,
            ci95,
            misses: traces.iter().filter(|t| !t.deadline_met).count(),
            skips: traces.iter().map(FrameTrace::skips).sum(),
            frames: n,
        }
    }
}

/// Runs the global scheduler once per seed and aggregates the frames.
pub fn run_replications(cfg: &SystemConfig, table: &STable, part: &Partition, seeds: &[u64]) -> Result<Summary> {
    let traces = seeds
        .iter()
        .map(|&s| run_frame(cfg, table, part, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(Summary::from_traces(&traces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FrequencySet;
    use crate::partition::{static_partition, PartitionOptions};
    use crate::sfunc::compute_s_tables;

    fn cfg(m: usize, d: f64, freqs: &[f64], dists: Vec<CycleDistribution>) -> SystemConfig {
        SystemConfig::new(d, m, FrequencySet::new(freqs).unwrap(), 1.0, dists)
    }

    fn run(c: &SystemConfig, seed: u64) -> FrameTrace {
        let part = static_partition(c, PartitionOptions::default()).unwrap();
        run_frame(c, &compute_s_tables(c), &part, seed).unwrap()
    }

    #[test]
    fn degenerate_distribution_always_gives_wcec() {
        let d = CycleDistribution::degenerate(17);
        let mut rng = FrameRng::new(3);
        assert!((0..100).all(|_| sample_cycles(&d, &mut rng) == 17));
    }

    #[test]
    fn two_point_sampling_frequencies() {
        let d = CycleDistribution::new(vec![(1, 0.5), (2, 0.5)]);
        let mut rng = FrameRng::new(11);
        let n = 100_000;
        let ones = (0..n).filter(|_| sample_cycles(&d, &mut rng) == 1).count() as f64;
        // Binomial(n, 1/2): sigma = sqrt(n)/2.
        let sigma = (n as f64).sqrt() / 2.0;
        assert!((ones - n as f64 / 2.0).abs() < 3.0 * sigma, "{ones}");
    }

    #[test]
    fn samples_stay_in_support() {
        let d = CycleDistribution::new(vec![(3, 0.2), (8, 0.3), (13, 0.5)]);
        let mut rng = FrameRng::new(5);
        for _ in 0..1000 {
            let x = sample_cycles(&d, &mut rng);
            assert!([3, 8, 13].contains(&x));
        }
    }

    #[test]
    fn single_task_runs_slow_and_just_meets_the_deadline() {
        let c = cfg(1, 20.0, &[0.5, 1.0], vec![CycleDistribution::degenerate(10)]);
        let trace = run(&c, 0);
        let start = trace.starts().next().unwrap();
        assert_eq!(start.freq.unwrap().value(), 0.5);
        assert_eq!(trace.makespan, 20.0);
        assert!(trace.deadline_met);
        assert_eq!(trace.total_energy, 2.5);
    }

    #[test]
    fn deterministic_instances_ignore_the_seed() {
        let c = cfg(
            2,
            10.0,
            &[0.5, 0.75, 1.0],
            [4, 3, 5, 2].iter().map(|&w| CycleDistribution::degenerate(w)).collect(),
        );
        let a = run(&c, 1);
        let b = run(&c, 999);
        assert_eq!(a.events, b.events);
        assert_eq!(a.total_energy, b.total_energy);
    }

    #[test]
    fn enough_cpus_start_everything_at_zero() {
        let c = cfg(
            4,
            10.0,
            &[0.5, 1.0],
            vec![
                CycleDistribution::new(vec![(1, 0.5), (3, 0.5)]),
                CycleDistribution::degenerate(4),
                CycleDistribution::new(vec![(2, 0.9), (5, 0.1)]),
            ],
        );
        let trace = run(&c, 7);
        let starts: Vec<_> = trace.starts().collect();
        assert_eq!(starts.len(), 3);
        assert!(starts.iter().all(|e| e.time == 0.0));
        let mut cpus: Vec<_> = starts.iter().map(|e| e.cpu).collect();
        cpus.sort();
        cpus.dedup();
        assert_eq!(cpus.len(), 3);
    }

    #[test]
    fn trace_is_consistent() {
        let c = cfg(
            2,
            12.0,
            &[0.25, 0.5, 0.75, 1.0],
            vec![
                CycleDistribution::new(vec![(1, 0.5), (4, 0.5)]),
                CycleDistribution::new(vec![(2, 0.7), (5, 0.3)]),
                CycleDistribution::new(vec![(1, 0.1), (3, 0.9)]),
                CycleDistribution::degenerate(2),
                CycleDistribution::new(vec![(1, 0.6), (6, 0.4)]),
            ],
        );
        for seed in 0..50 {
            let trace = run(&c, seed);
            assert!(trace.events.windows(2).all(|w| w[0].time <= w[1].time));
            let mut energy = 0.0;
            for task in 0..c.n() {
                let starts: Vec<_> = trace.starts().filter(|e| e.task == task).collect();
                let finishes: Vec<_> = trace
                    .events
                    .iter()
                    .filter(|e| e.task == task && e.kind == EventKind::Finish)
                    .collect();
                assert_eq!((starts.len(), finishes.len()), (1, 1));
                let (s, f) = (starts[0], finishes[0]);
                assert_eq!((s.cpu, s.freq), (f.cpu, f.freq));
                let x = s.cycles.unwrap();
                assert_eq!(f.time, s.time + x as f64 / s.freq.unwrap().value());
                energy += energy_of_execution(x, s.freq.unwrap());
            }
            assert_eq!(energy, trace.total_energy);
            assert!(trace.deadline_met);
        }
    }

    #[test]
    fn summary_statistics() {
        let c = cfg(1, 20.0, &[0.5, 1.0], vec![CycleDistribution::degenerate(10)]);
        let part = static_partition(&c, PartitionOptions::default()).unwrap();
        let table = compute_s_tables(&c);
        let one = run_replications(&c, &table, &part, &[4]).unwrap();
        assert_eq!(one, Summary { mean_energy: 2.5, ci95: None, misses: 0, skips: 0, frames: 1 });
        let many = run_replications(&c, &table, &part, &[1, 2, 3]).unwrap();
        assert_eq!(many.ci95, Some(0.0));
        let json = serde_json::to_string(&one).unwrap();
        assert_eq!(json, r#"{"mean_energy":2.5,"ci95":null,"misses":0,"skips":0,"frames":1}"#);
    }

    #[test]
    fn trace_csv_format() {
        let c = cfg(1, 20.0, &[0.5, 1.0], vec![CycleDistribution::degenerate(10)]);
        let mut buf = Vec::new();
        write_traces_csv(&[run(&c, 0)], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "frame,time,kind,task,cpu,freq,cycles\n0,0.0,start,1,1,0.5,10\n0,20.0,finish,1,1,0.5,10\n"
        );
    }
}
