//! Without reservations, picking frequencies from the pooled remaining time
//! can leave no single processor long enough for the last task.
//!
//!     cargo run --example naive_miss

use frame_dvfs::baselines::{PolicyId, Simulation};
use frame_dvfs::model::SystemConfig;
use frame_dvfs::partition::PartitionOptions;

fn main() -> frame_dvfs::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/adversarial.json");
    let cfg = SystemConfig::load(path)?;
    for policy in [PolicyId::NaiveGlobal, PolicyId::GlobalStochastic] {
        let sim = Simulation::new(cfg.clone(), policy, PartitionOptions::default())?;
        let trace = sim.run_frame(0)?;
        println!(
            "{policy}: makespan {} (frame {}), energy {}, skips {}, deadline met: {}",
            trace.makespan,
            cfg.frame_length,
            trace.total_energy,
            trace.skips(),
            trace.deadline_met
        );
        for e in trace.starts() {
            println!("    t = {:>4}: task {} on cpu {} at f = {}", e.time, e.task + 1, e.cpu + 1, e.freq.unwrap());
        }
    }
    Ok(())
}
