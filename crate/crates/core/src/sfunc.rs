//! Offline frequency-selection tables.
//!
//! For every task `i` and every remaining time `d` on a grid of step
//! `grid_step`, the table stores the frequency minimizing the expected
//! energy of `tau_i, ..., tau_n` on a single processor whose deadline is `d`
//! time units away. A frequency is admissible only if, after the worst case
//! of `tau_i`, every later task still fits at the maximum frequency.
//!
//! The global scheduler builds the table with horizon `m * D` and treats the
//! whole platform as one processor `m` times longer.

use std::io::Write;

use crate::error::{Error, Result};
use crate::model::{energy_of_execution, Frequency, FrequencySet, SystemConfig, Task};

/// Absorbs floating point noise when mapping a time onto the grid.
pub const GRID_EPS: f64 = 1e-9;

/// Relative tolerance under which two expected energies count as equal.
const TIE_EPS: f64 = 1e-12;

/// Grid index of `d / step`, rounded down.
pub fn grid_floor(d: f64, step: f64) -> usize {
    let v = (d / step + GRID_EPS).floor();
    if v <= 0.0 {
        0
    } else {
        v as usize
    }
}

#[derive(Debug, Clone)]
struct Row {
    freq: Vec<u8>,
    energy: Vec<f64>,
    forced: Vec<bool>,
}

/// One table entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub freq: Frequency,
    pub expected_energy: f64,
    /// No frequency satisfies the worst-case guard; the maximum one is used.
    pub forced: bool,
}

#[derive(Debug, Clone)]
pub struct STable {
    grid_step: f64,
    horizon: f64,
    freqs: FrequencySet,
    rows: Vec<Row>,
}

/// Tables for `cfg.tasks` on a virtual processor with deadline `m * D`.
pub fn compute_s_tables(cfg: &SystemConfig) -> STable {
    build_table(&cfg.tasks, cfg.virtual_horizon(), cfg.grid_step, &cfg.freqs)
}

/// Tables for an arbitrary task sequence and horizon. Rows follow the order
/// of `tasks`.
pub fn build_table(tasks: &[Task], horizon: f64, grid_step: f64, freqs: &FrequencySet) -> STable {
    assert!(grid_step > 0.0 && horizon >= 0.0);
    assert!(freqs.len() <= u8::MAX as usize);
    let last = (horizon / grid_step - GRID_EPS).ceil().max(0.0) as usize;
    let points = last + 1;
    let fmax = freqs.max();

    // suffix[i] = worst-case time of tasks i.. at f_M
    let mut suffix = vec![0.0; tasks.len() + 1];
    for i in (0..tasks.len()).rev() {
        suffix[i] = suffix[i + 1] + tasks[i].worst_time(fmax);
    }

    let mut rows = Vec::with_capacity(tasks.len());
    let mut next = vec![0.0; points];
    for (i, task) in tasks.iter().enumerate().rev() {
        let rest = suffix[i + 1];
        // Per frequency: worst-case duration and (probability, energy, offset in grid units).
        let options: Vec<(f64, Vec<(f64, f64, f64)>)> = freqs
            .iter()
            .map(|f| {
                let outcomes = task
                    .dist
                    .support()
                    .iter()
                    .map(|&(x, p)| (p, energy_of_execution(x, f), x as f64 / f.value() / grid_step))
                    .collect();
                (task.worst_time(f), outcomes)
            })
            .collect();
        let expected = |k: usize, outcomes: &[(f64, f64, f64)]| -> f64 {
            outcomes
                .iter()
                .map(|&(p, e, offset)| {
                    let v = (k as f64 - offset + GRID_EPS).floor();
                    let idx = if v <= 0.0 { 0 } else { (v as usize).min(last) };
                    p * (e + next[idx])
                })
                .sum()
        };

        let mut row = Row {
            freq: vec![0; points],
            energy: vec![0.0; points],
            forced: vec![false; points],
        };
        for k in 0..points {
            let d = k as f64 * grid_step;
            let mut best: Option<(usize, f64)> = None;
            for (fi, (worst, outcomes)) in options.iter().enumerate() {
                if worst + rest > d + GRID_EPS {
                    continue;
                }
                let cost = expected(k, outcomes);
                match best {
                    Some((_, b)) if cost >= b - TIE_EPS * b.abs().max(1.0) => {}
                    _ => best = Some((fi, cost)),
                }
            }
            let (fi, cost) = best.unwrap_or_else(|| {
                row.forced[k] = true;
                let top = freqs.len() - 1;
                (top, expected(k, &options[top].1))
            });
            row.freq[k] = fi as u8;
            row.energy[k] = cost;
        }
        next.clone_from(&row.energy);
        rows.push(row);
    }
    rows.reverse();

    STable {
        grid_step,
        horizon,
        freqs: freqs.clone(),
        rows,
    }
}

impl STable {
    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn tasks(&self) -> usize {
        self.rows.len()
    }

    /// Number of grid points per task, `ceil(horizon / step) + 1`.
    pub fn points(&self) -> usize {
        self.rows.first().map_or_else(
            || (self.horizon / self.grid_step - GRID_EPS).ceil().max(0.0) as usize + 1,
            |r| r.freq.len(),
        )
    }

    pub fn entry_at(&self, task: usize, k: usize) -> Entry {
        let row = &self.rows[task];
        Entry {
            freq: self.freqs.get(row.freq[k] as usize),
            expected_energy: row.energy[k],
            forced: row.forced[k],
        }
    }

    /// Entry for task position `task` (0-based) with `d` time units left,
    /// using the grid point at or below `d`.
    pub fn entry(&self, task: usize, d: f64) -> Result<Entry> {
        if task >= self.rows.len() {
            return Err(Error::TaskOutOfRange {
                task,
                rows: self.rows.len(),
            });
        }
        if d < -GRID_EPS {
            return Err(Error::NegativeRemainingTime(d));
        }
        let k = grid_floor(d, self.grid_step).min(self.points() - 1);
        Ok(self.entry_at(task, k))
    }

    /// The frequency for task position `task` (0-based) given `d` time left.
    pub fn lookup(&self, task: usize, d: f64) -> Result<Frequency> {
        self.entry(task, d).map(|e| e.freq)
    }

    /// Minimal expected energy of the whole sequence with the full horizon.
    pub fn expected_energy_full(&self) -> f64 {
        if self.rows.is_empty() {
            0.0
        } else {
            self.entry_at(0, grid_floor(self.horizon, self.grid_step).min(self.points() - 1))
                .expected_energy
        }
    }

    /// Smallest grid time from which the task's entries are no longer
    /// forced, or `None` if every entry is forced.
    pub fn forced_boundary(&self, task: usize) -> Option<f64> {
        let row = &self.rows[task];
        row.forced
            .iter()
            .rposition(|&f| f)
            .map_or(Some(0), |k| (k + 1 < row.forced.len()).then_some(k + 1))
            .map(|k| k as f64 * self.grid_step)
    }

    /// Count of `(task, k)` cells where a larger remaining time selects a
    /// strictly higher frequency than the previous grid point.
    pub fn monotonicity_violations(&self) -> usize {
        self.rows
            .iter()
            .map(|r| r.freq.windows(2).filter(|w| w[1] > w[0]).count())
            .sum()
    }

    /// Dumps the table as CSV: `task_index,d,freq,expected_energy,forced_flag`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["task_index", "d", "freq", "expected_energy", "forced_flag"])?;
        for task in 0..self.rows.len() {
            for k in 0..self.points() {
                let e = self.entry_at(task, k);
                w.write_record(&[
                    (task + 1).to_string(),
                    (k as f64 * self.grid_step).to_string(),
                    e.freq.to_string(),
                    e.expected_energy.to_string(),
                    u8::from(e.forced).to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
