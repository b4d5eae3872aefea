//! Checks the table's expected energy against exhaustive search on tiny
//! instances, and shows a case where more remaining time selects a faster
//! frequency.
//!
//!     cargo run --example oracle_check

use frame_dvfs::model::{CycleDistribution, FrequencySet, SystemConfig};
use frame_dvfs::oracle::{brute_force_expected_energy, PolicyEnumeration};
use frame_dvfs::sfunc::compute_s_tables;

fn main() -> frame_dvfs::Result<()> {
    let cfg = SystemConfig::new(
        4.0,
        2,
        FrequencySet::new(&[0.5, 1.0])?,
        0.5,
        vec![
            CycleDistribution::new(vec![(1, 0.5), (3, 0.5)]),
            CycleDistribution::new(vec![(1, 0.25), (2, 0.75)]),
            CycleDistribution::degenerate(2),
        ],
    );
    let dp = compute_s_tables(&cfg).expected_energy_full();
    let exact = brute_force_expected_energy(&cfg)?;
    let policies = PolicyEnumeration::new(&cfg)?;
    println!("table {dp}, outcome tree {exact}, {} explicit policies give {}", policies.count(), policies.minimum());

    let cfg = SystemConfig::new(
        5.0,
        1,
        FrequencySet::new(&[0.5, 1.0])?,
        1.0,
        vec![CycleDistribution::degenerate(1), CycleDistribution::degenerate(2)],
    );
    let table = compute_s_tables(&cfg);
    for d in [4.0, 5.0] {
        let e = table.entry(0, d)?;
        println!("task 1 with {d} left: f = {}, expected energy {}", e.freq, e.expected_energy);
    }
    Ok(())
}
