//! Runs one frame of the global scheduler on the bundled fixture and prints
//! its event trace.
//!
//!     cargo run --example simulate_frame [seed]

use frame_dvfs::baselines::{PolicyId, Simulation};
use frame_dvfs::engine::{write_traces_csv, EventKind};
use frame_dvfs::model::SystemConfig;
use frame_dvfs::partition::PartitionOptions;

fn main() -> frame_dvfs::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/fixture.json");
    let cfg = SystemConfig::load(path)?;
    let sim = Simulation::new(cfg, PolicyId::GlobalStochastic, PartitionOptions::default())?;
    let trace = sim.run_frame(seed)?;

    for e in &trace.events {
        match e.kind {
            EventKind::Start => println!(
                "{:>8.3}  start   task {} on cpu {} at f = {} ({} cycles)",
                e.time,
                e.task + 1,
                e.cpu + 1,
                e.freq.unwrap(),
                e.cycles.unwrap()
            ),
            EventKind::Finish => println!("{:>8.3}  finish  task {} on cpu {}", e.time, e.task + 1, e.cpu + 1),
            EventKind::Skip => println!("{:>8.3}  skip    task {} (cpu {})", e.time, e.task + 1, e.cpu + 1),
            EventKind::ReservationMove => println!(
                "{:>8.3}  move    reservation of task {} to cpu {}",
                e.time,
                e.task + 1,
                e.cpu + 1
            ),
        }
    }
    println!(
        "energy {:.4}, makespan {:.3} of {}, deadline met: {}",
        trace.total_energy,
        trace.makespan,
        sim.config().frame_length,
        trace.deadline_met
    );

    println!("\nas CSV:");
    write_traces_csv(&[trace], std::io::stdout().lock())?;
    Ok(())
}
