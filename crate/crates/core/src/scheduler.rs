//! Online reservation-based global scheduler.
//!
//! Each time a processor becomes idle the scheduler picks the first pending
//! task, asks the frequency table which frequency it would like given the
//! time left on the whole platform, and then reconciles that wish with the
//! reservations of the static partitioning:
//!
//! * a task may only start on a processor holding its reservation, so the
//!   reservation is pulled over first ([`SchedulerState::move_task_in`]);
//! * other reservations may be pushed away to make room for a slower run
//!   ([`SchedulerState::move_tasks_out`]);
//! * when not enough room can be freed the frequency is raised to the
//!   smallest level that still ends before the remaining reservations.
//!
//! A running task never eats into the reserved time of a task that has not
//! started, which is what guarantees every deadline.

use crate::error::{Error, Result};
use crate::model::{ceil_freq, Frequency, FrequencySet};
use crate::partition::Partition;
use crate::sfunc::STable;

/// Slack allowed when checking the frame-fit invariant.
pub const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReservationMove {
    pub task: usize,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StartDecision {
    pub task: usize,
    pub cpu: usize,
    pub freq: Frequency,
    /// Start time plus the worst-case duration at `freq`.
    pub worst_end: f64,
    /// Tasks that were passed over, in the order they were tried.
    pub skipped: Vec<usize>,
    pub moves: Vec<ReservationMove>,
}

/// `D - t - A`: free time on a processor between now and its reservations.
pub(crate) fn local_slack(frame_length: f64, t: f64, reserved: f64) -> f64 {
    frame_length - t - reserved
}

#[derive(Debug, Clone)]
pub struct SchedulerState {
    frame_length: f64,
    partition: Partition,
    /// `t_p`: worst time at which each processor becomes available.
    worst_end: Vec<f64>,
    busy: Vec<bool>,
    pending: Vec<usize>,
    started: Vec<bool>,
}

impl SchedulerState {
    /// Fresh frame state: every task pending in frame order, all processors idle at 0.
    pub fn new(frame_length: f64, partition: Partition) -> Self {
        let m = partition.cpus();
        let n = partition.tasks();
        Self {
            frame_length,
            worst_end: vec![0.0; m],
            busy: vec![false; m],
            pending: (0..n).collect(),
            started: vec![false; n],
            partition,
        }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn pending(&self) -> &[usize] {
        &self.pending
    }

    pub fn is_started(&self, task: usize) -> bool {
        self.started[task]
    }

    pub fn worst_end(&self, cpu: usize) -> f64 {
        self.worst_end[cpu]
    }

    pub fn is_busy(&self, cpu: usize) -> bool {
        self.busy[cpu]
    }

    pub fn cpus(&self) -> usize {
        self.busy.len()
    }

    pub fn frame_length(&self) -> f64 {
        self.frame_length
    }

    /// Marks `cpu` idle at time `t`.
    pub fn finish(&mut self, cpu: usize, t: f64) {
        self.busy[cpu] = false;
        self.worst_end[cpu] = t;
    }

    /// Idle processors are available now.
    fn sync_idle(&mut self, t: f64) {
        for (end, &busy) in self.worst_end.iter_mut().zip(&self.busy) {
            if !busy {
                *end = t;
            }
        }
    }

    fn slack(&self, cpu: usize, t: f64) -> f64 {
        local_slack(self.frame_length, t, self.partition.reserved(cpu))
    }

    /// Pushes reservations off `cpu`, largest first, until more than `space`
    /// time units are free after `t` or every reservation has been tried.
    /// Each one goes to the other processor with the most free time, if it
    /// fits there. May return without having freed `space`. Idle processors
    /// count as free from `t` on.
    pub fn move_tasks_out(&mut self, cpu: usize, t: f64, space: f64) -> Vec<ReservationMove> {
        self.sync_idle(t);
        let mut moves = Vec::new();
        self.move_tasks_out_into(cpu, t, space, &mut moves);
        moves
    }

    fn move_tasks_out_into(&mut self, cpu: usize, t: f64, space: f64, moves: &mut Vec<ReservationMove>) {
        let mut tried = Vec::new();
        while self.slack(cpu, t) <= space {
            let part = &self.partition;
            let Some(task) = part
                .assigned(cpu)
                .iter()
                .copied()
                .filter(|t| !tried.contains(t))
                .max_by(|&a, &b| part.wcec(a).cmp(&part.wcec(b)).then(b.cmp(&a)))
            else {
                break;
            };
            tried.push(task);

            let free = |r: usize| self.frame_length - part.reserved(r) - self.worst_end[r];
            let target = (0..self.cpus())
                .filter(|&r| r != cpu)
                .fold(None, |best: Option<usize>, r| match best {
                    Some(b) if free(b) >= free(r) => Some(b),
                    _ => Some(r),
                });
            if let Some(to) = target {
                if free(to) > part.demand(task) {
                    self.partition.transfer(task, to);
                    moves.push(ReservationMove { task, from: cpu, to });
                }
            }
        }
    }

    /// Tries to bring the reservation of `task` onto `cpu`, first making room
    /// with [`move_tasks_out`](Self::move_tasks_out). Moves made while
    /// making room are kept even when the task does not fit in the end.
    pub fn move_task_in(&mut self, cpu: usize, task: usize, t: f64) -> (bool, Vec<ReservationMove>) {
        self.sync_idle(t);
        let mut moves = Vec::new();
        let ok = self.move_task_in_into(cpu, task, t, &mut moves);
        (ok, moves)
    }

    fn move_task_in_into(&mut self, cpu: usize, task: usize, t: f64, moves: &mut Vec<ReservationMove>) -> bool {
        let demand = self.partition.demand(task);
        self.move_tasks_out_into(cpu, t, demand, moves);
        if self.slack(cpu, t) >= demand {
            let from = self.partition.transfer(task, cpu).expect("pending task has a reservation");
            moves.push(ReservationMove { task, from, to: cpu });
            true
        } else {
            false
        }
    }

    /// Starts a task on idle processor `cpu` at time `t`.
    ///
    /// The first pending task is preferred. When its reservation cannot be
    /// brought onto `cpu` the next pending one is tried, and so on; passed
    /// over tasks stay pending in place. Fails only if no pending task can
    /// start at all.
    pub fn start_task(&mut self, table: &STable, freqs: &FrequencySet, t: f64, cpu: usize) -> Result<StartDecision> {
        assert!(!self.busy[cpu], "cpu {cpu} is not idle");
        self.sync_idle(t);
        let others: f64 = (0..self.cpus()).filter(|&q| q != cpu).map(|q| self.worst_end[q]).sum();
        let remaining = (self.cpus() as f64 * self.frame_length - (t + others)).max(0.0);

        let mut skipped = Vec::new();
        let mut moves = Vec::new();
        for pos in 0..self.pending.len() {
            let task = self.pending[pos];
            let mut freq = table.lookup(task, remaining)?;

            if self.partition.owner(task) != Some(cpu) && !self.move_task_in_into(cpu, task, t, &mut moves) {
                skipped.push(task);
                continue;
            }

            self.partition.release(task);
            let wcec = self.partition.wcec(task) as f64;
            self.move_tasks_out_into(cpu, t, wcec / freq.value(), &mut moves);
            if self.slack(cpu, t) < wcec / freq.value() {
                freq = ceil_freq(wcec / self.slack(cpu, t), freqs)?;
            }

            let worst_end = t + wcec / freq.value();
            self.worst_end[cpu] = worst_end;
            self.busy[cpu] = true;
            self.pending.remove(pos);
            self.started[task] = true;
            return Ok(StartDecision {
                task,
                cpu,
                freq,
                worst_end,
                skipped,
                moves,
            });
        }
        Err(Error::Liveness { time: t, cpu })
    }

    /// Reservation conservation and frame fit.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        self.partition.check(self.frame_length)?;
        let mut pending_demand = 0.0;
        for (task, &started) in self.started.iter().enumerate() {
            match (started, self.partition.owner(task)) {
                (true, Some(p)) => return Err(format!("started task {task} still reserved on cpu {p}")),
                (false, None) => return Err(format!("pending task {task} has no reservation")),
                (false, Some(_)) => pending_demand += self.partition.demand(task),
                (true, None) => {}
            }
        }
        if (pending_demand - self.partition.total_reserved()).abs() > TIME_EPS {
            return Err(format!(
                "reserved {} but pending tasks need {pending_demand}",
                self.partition.total_reserved()
            ));
        }
        for cpu in 0..self.cpus() {
            let end = self.worst_end[cpu] + self.partition.reserved(cpu);
            if end > self.frame_length + TIME_EPS {
                return Err(format!("cpu {cpu}: t_p + A_p = {end} exceeds frame {}", self.frame_length));
            }
        }
        Ok(())
    }
}
