//! Worst-fit decreasing reservation of every task, and an instance the
//! heuristic rejects although a valid schedule exists.
//!
//!     cargo run --example partition

use frame_dvfs::model::{CycleDistribution, FrequencySet, SystemConfig};
use frame_dvfs::oracle::brute_force_min_makespan;
use frame_dvfs::partition::{static_partition, PartitionOptions};

fn deterministic(wcec: &[u64], d: f64, m: usize) -> SystemConfig {
    let dists = wcec.iter().map(|&w| CycleDistribution::degenerate(w)).collect();
    SystemConfig::new(d, m, FrequencySet::new(&[0.5, 1.0]).unwrap(), 1.0, dists)
}

fn main() -> frame_dvfs::Result<()> {
    let cfg = deterministic(&[5, 3, 8, 2, 6, 4], 15.0, 2);
    let part = static_partition(&cfg, PartitionOptions::default())?;
    for cpu in 0..part.cpus() {
        let tasks: Vec<usize> = part.assigned(cpu).iter().map(|t| t + 1).collect();
        println!("cpu {}: tasks {tasks:?}, reserved {}", cpu + 1, part.reserved(cpu));
    }

    // Three tasks of 6 on two processors of length 12: the third one would
    // fill a processor exactly.
    let tight = deterministic(&[6, 6, 6], 12.0, 2);
    match static_partition(&tight, PartitionOptions::default()) {
        Ok(_) => println!("[6, 6, 6] accepted"),
        Err(e) => println!("[6, 6, 6]: {e}"),
    }
    let exact = static_partition(&tight, PartitionOptions { allow_exact_fit: true })?;
    println!("with exact fits allowed: reserved {} and {}", exact.reserved(0), exact.reserved(1));
    let best = brute_force_min_makespan(&tight, &[6, 6, 6])?;
    println!("shortest makespan over all assignments: {best} (frame {})", tight.frame_length);
    Ok(())
}
