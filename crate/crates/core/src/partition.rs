//! Virtual static partitioning.
//!
//! Every task gets its worst-case time at the maximum frequency reserved on
//! some processor. Tasks are free to run elsewhere; the reservation only
//! witnesses that the frame can always absorb them.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::SystemConfig;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PartitionOptions {
    /// Accept a task when it exactly fills the remaining frame
    /// (`D - A_q >= w / f_M` instead of `>`).
    pub allow_exact_fit: bool,
}

/// Reserved tasks per processor. Task ids are 0-based positions in the
/// frame order.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    assigned: Vec<BTreeSet<usize>>,
    reserved_cycles: Vec<u64>,
    owner: Vec<Option<usize>>,
    wcec: Vec<u64>,
    fmax: f64,
}

impl Partition {
    /// An empty partition over `m` processors for tasks with the given WCECs.
    pub fn empty(m: usize, wcec: Vec<u64>, fmax: f64) -> Self {
        Self {
            assigned: vec![BTreeSet::new(); m],
            reserved_cycles: vec![0; m],
            owner: vec![None; wcec.len()],
            wcec,
            fmax,
        }
    }

    pub fn tasks(&self) -> usize {
        self.wcec.len()
    }

    pub fn cpus(&self) -> usize {
        self.assigned.len()
    }

    /// Tasks reserved on `cpu`, ascending.
    pub fn assigned(&self, cpu: usize) -> &BTreeSet<usize> {
        &self.assigned[cpu]
    }

    /// `A_p`: reserved time on `cpu`.
    pub fn reserved(&self, cpu: usize) -> f64 {
        self.reserved_cycles[cpu] as f64 / self.fmax
    }

    pub fn owner(&self, task: usize) -> Option<usize> {
        self.owner[task]
    }

    /// Worst-case time of `task` at the maximum frequency.
    pub fn demand(&self, task: usize) -> f64 {
        self.wcec[task] as f64 / self.fmax
    }

    pub fn wcec(&self, task: usize) -> u64 {
        self.wcec[task]
    }

    pub fn total_reserved(&self) -> f64 {
        self.reserved_cycles.iter().sum::<u64>() as f64 / self.fmax
    }

    pub fn insert(&mut self, task: usize, cpu: usize) {
        assert!(self.owner[task].is_none(), "task {task} already reserved");
        self.assigned[cpu].insert(task);
        self.reserved_cycles[cpu] += self.wcec[task];
        self.owner[task] = Some(cpu);
    }

    /// Drops the reservation of `task`; returns the processor it was on.
    pub fn release(&mut self, task: usize) -> Option<usize> {
        let cpu = self.owner[task].take()?;
        self.assigned[cpu].remove(&task);
        self.reserved_cycles[cpu] -= self.wcec[task];
        Some(cpu)
    }

    /// Moves the reservation of `task` to `to`; returns the previous owner.
    pub fn transfer(&mut self, task: usize, to: usize) -> Option<usize> {
        let from = self.release(task)?;
        self.insert(task, to);
        Some(from)
    }

    /// Checks that reservation totals match their task sets and fit in `frame_length`.
    pub fn check(&self, frame_length: f64) -> std::result::Result<(), String> {
        for (cpu, set) in self.assigned.iter().enumerate() {
            let sum: u64 = set.iter().map(|&t| self.wcec[t]).sum();
            if sum != self.reserved_cycles[cpu] {
                return Err(format!("cpu {cpu}: reserved {} but tasks sum to {sum}", self.reserved_cycles[cpu]));
            }
            if self.reserved(cpu) > frame_length {
                return Err(format!("cpu {cpu}: reserved {} exceeds frame {frame_length}", self.reserved(cpu)));
            }
            if let Some(&t) = set.iter().find(|&&t| self.owner[t] != Some(cpu)) {
                return Err(format!("task {t} listed on cpu {cpu} but owned by {:?}", self.owner[t]));
            }
        }
        Ok(())
    }
}

/// Reserves every task on the processor with the least reserved time, in
/// order of decreasing WCEC (ties by task order, then processor index).
///
/// Failing does not mean the instance is unschedulable, only that this
/// heuristic could not place some task.
pub fn static_partition(cfg: &SystemConfig, opts: PartitionOptions) -> Result<Partition> {
    let fmax = cfg.fmax().value();
    let mut part = Partition::empty(cfg.m, cfg.tasks.iter().map(|t| t.wcec).collect(), fmax);

    let mut order: Vec<usize> = (0..cfg.n()).collect();
    order.sort_by(|&a, &b| cfg.tasks[b].wcec.cmp(&cfg.tasks[a].wcec).then(a.cmp(&b)));

    for task in order {
        let cpu = (0..cfg.m)
            .min_by(|&a, &b| part.reserved_cycles[a].cmp(&part.reserved_cycles[b]).then(a.cmp(&b)))
            .expect("at least one processor");
        let available = cfg.frame_length - part.reserved(cpu);
        let needed = part.demand(task);
        let fits = if opts.allow_exact_fit {
            available >= needed
        } else {
            available > needed
        };
        if !fits {
            return Err(Error::PartitionFailed {
                task,
                cpu,
                needed,
                available,
            });
        }
        part.insert(task, cpu);
    }
    Ok(part)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CycleDistribution, FrequencySet};
    use proptest::prelude::*;

    fn cfg(wcec: &[u64], d: f64, m: usize) -> SystemConfig {
        SystemConfig::new(
            d,
            m,
            FrequencySet::new(&[1.0]).unwrap(),
            1.0,
            wcec.iter().map(|&w| CycleDistribution::degenerate(w)).collect(),
        )
    }

    fn set(ids: &[usize]) -> BTreeSet<usize> {
        ids.iter().copied().collect()
    }

    #[test]
    fn balanced_two_cpus() {
        let p = static_partition(&cfg(&[7, 5, 3, 2], 10.0, 2), PartitionOptions::default()).unwrap();
        assert_eq!(p.assigned(0), &set(&[0, 3]));
        assert_eq!(p.assigned(1), &set(&[1, 2]));
        assert_eq!(p.reserved(0), 9.0);
        assert_eq!(p.reserved(1), 8.0);
    }

    #[test]
    fn third_task_does_not_fit() {
        let err = static_partition(&cfg(&[6, 6, 6], 10.0, 2), PartitionOptions::default()).unwrap_err();
        match err {
            Error::PartitionFailed { task, available, .. } => {
                assert_eq!(task, 2);
                assert_eq!(available, 4.0);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn exact_fit_is_rejected_unless_allowed() {
        let c = cfg(&[10], 10.0, 1);
        assert!(static_partition(&c, PartitionOptions::default()).is_err());
        let p = static_partition(&c, PartitionOptions { allow_exact_fit: true }).unwrap();
        assert_eq!(p.reserved(0), 10.0);
    }

    #[test]
    fn equal_wcec_keeps_task_order() {
        let p = static_partition(&cfg(&[3, 3, 3], 10.0, 3), PartitionOptions::default()).unwrap();
        assert_eq!((0..3).map(|t| p.owner(t).unwrap()).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn transfer_and_release_keep_totals() {
        let mut p = static_partition(&cfg(&[7, 5, 3, 2], 10.0, 2), PartitionOptions::default()).unwrap();
        assert_eq!(p.transfer(3, 1), Some(0));
        assert_eq!(p.reserved(0), 7.0);
        assert_eq!(p.reserved(1), 10.0);
        assert_eq!(p.release(0), Some(0));
        assert_eq!(p.release(0), None);
        assert_eq!(p.total_reserved(), 10.0);
        p.check(10.0).unwrap();
    }

    proptest! {
        #[test]
        fn successful_partitions_are_valid_witnesses(
            wcec in prop::collection::vec(1u64..40, 1..12),
            m in 1usize..5,
            d in 10u32..120,
        ) {
            let c = cfg(&wcec, d as f64, m);
            let first = static_partition(&c, PartitionOptions::default());
            let again = static_partition(&c, PartitionOptions::default());
            prop_assert_eq!(first.is_ok(), again.is_ok());
            if let Ok(p) = first {
                prop_assert_eq!(Some(&p), again.as_ref().ok());
                p.check(c.frame_length).unwrap();
                for t in 0..wcec.len() {
                    let owner = p.owner(t).unwrap();
                    prop_assert!(p.assigned(owner).contains(&t));
                }
                // Running each processor's tasks back to back at f_M ends
                // strictly before the frame does.
                for cpu in 0..m {
                    let mut clock = 0.0;
                    for &t in p.assigned(cpu) {
                        clock += wcec[t] as f64;
                    }
                    prop_assert!(clock < c.frame_length || p.assigned(cpu).is_empty());
                }
            }
        }
    }
}
