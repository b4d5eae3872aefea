//! Compares every policy on one generated workload with paired seeds.
//!
//!     cargo run --release --example bench_policies

use frame_dvfs::baselines::{PolicyId, Simulation};
use frame_dvfs::engine::Summary;
use frame_dvfs::partition::{static_partition, PartitionOptions};
use frame_dvfs::workload::{generate, Shape, WorkloadSpec};

fn main() -> frame_dvfs::Result<()> {
    let cfg = generate(&WorkloadSpec {
        n: 12,
        m: 3,
        frame_length: 1000.0,
        freq_levels: 4,
        utilization: 0.6,
        shape: Shape::Bimodal,
        seed: 1,
    })?;
    let part = static_partition(&cfg, PartitionOptions::default())?;
    let seeds: Vec<u64> = (0..200).collect();

    println!("{:<20} {:>12} {:>10} {:>7} {:>7}", "policy", "mean energy", "ci95", "misses", "skips");
    for policy in PolicyId::ALL {
        let sim = Simulation::with_partition(cfg.clone(), policy, part.clone());
        let s = Summary::from_traces(&sim.run(&seeds)?);
        println!(
            "{:<20} {:>12.2} {:>10.2} {:>7} {:>7}",
            policy.name(),
            s.mean_energy,
            s.ci95.unwrap_or(f64::NAN),
            s.misses,
            s.skips
        );
    }
    Ok(())
}
