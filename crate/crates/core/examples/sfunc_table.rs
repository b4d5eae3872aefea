//! Builds the frequency tables for a small two-processor instance and reads
//! a few entries back.
//!
//!     cargo run --example sfunc_table

use frame_dvfs::model::{CycleDistribution, FrequencySet, SystemConfig};
use frame_dvfs::sfunc::compute_s_tables;

fn main() -> frame_dvfs::Result<()> {
    let cfg = SystemConfig::new(
        20.0,
        2,
        FrequencySet::new(&[0.25, 0.5, 0.75, 1.0])?,
        0.5,
        vec![
            CycleDistribution::new(vec![(2, 0.8), (8, 0.2)]),
            CycleDistribution::new(vec![(2, 0.5), (4, 0.3), (6, 0.2)]),
            CycleDistribution::new(vec![(1, 0.6), (5, 0.4)]),
            CycleDistribution::degenerate(4),
        ],
    );
    let table = compute_s_tables(&cfg);
    println!(
        "{} tasks, {} grid points over [0, {}]",
        table.tasks(),
        table.points(),
        table.horizon()
    );
    println!("expected energy of the whole frame: {:.4}", table.expected_energy_full());

    for task in 0..table.tasks() {
        let boundary = table
            .forced_boundary(task)
            .map_or("everywhere".to_string(), |d| format!("below d = {d}"));
        print!("task {}: forced {boundary};", task + 1);
        for d in [10.0, 20.0, 30.0, 40.0] {
            let e = table.entry(task, d)?;
            print!("  S({d}) = {}", e.freq);
        }
        println!();
    }

    table.write_csv(std::io::sink())?;
    Ok(())
}
