//! Steps the online scheduler by hand: which task starts where, at which
//! frequency, and which reservations move to make it fit.
//!
//!     cargo run --example reservations

use frame_dvfs::model::{CycleDistribution, FrequencySet, SystemConfig};
use frame_dvfs::partition::{static_partition, PartitionOptions};
use frame_dvfs::scheduler::SchedulerState;
use frame_dvfs::sfunc::compute_s_tables;

fn main() -> frame_dvfs::Result<()> {
    let cfg = SystemConfig::new(
        10.0,
        2,
        FrequencySet::new(&[0.5, 1.0])?,
        0.5,
        [4, 4, 8].iter().map(|&w| CycleDistribution::degenerate(w)).collect(),
    );
    let table = compute_s_tables(&cfg);
    let mut st = SchedulerState::new(cfg.frame_length, static_partition(&cfg, PartitionOptions::default())?);
    let show = |st: &SchedulerState| {
        for cpu in 0..st.cpus() {
            let tasks: Vec<usize> = st.partition().assigned(cpu).iter().map(|t| t + 1).collect();
            println!("    cpu {}: busy until {}, reserved {tasks:?}", cpu + 1, st.worst_end(cpu));
        }
    };
    show(&st);

    // Both processors idle at 0, then cpu 1 frees up at 4.
    for (t, cpu) in [(0.0, 0), (0.0, 1)] {
        let dec = st.start_task(&table, &cfg.freqs, t, cpu)?;
        println!(
            "t = {t}: task {} on cpu {} at f = {}, worst end {}, skipped {:?}, moves {:?}",
            dec.task + 1,
            cpu + 1,
            dec.freq,
            dec.worst_end,
            dec.skipped.iter().map(|t| t + 1).collect::<Vec<_>>(),
            dec.moves
        );
        show(&st);
    }
    st.finish(1, 4.0);
    let dec = st.start_task(&table, &cfg.freqs, 4.0, 1)?;
    println!("t = 4: task {} on cpu 2 at f = {}, worst end {}", dec.task + 1, dec.freq, dec.worst_end);
    st.check_invariants().expect("reservations consistent");
    Ok(())
}
