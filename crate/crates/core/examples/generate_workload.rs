//! Draws random instances for each distribution shape and shows what came out.
//!
//!     cargo run --example generate_workload

use frame_dvfs::workload::{generate, Shape, WorkloadSpec};

fn main() {
    for shape in Shape::ALL {
        let spec = WorkloadSpec {
            n: 6,
            m: 2,
            frame_length: 100.0,
            freq_levels: 3,
            utilization: 0.7,
            shape,
            seed: 5,
        };
        match generate(&spec) {
            Ok(cfg) => {
                let wcec: Vec<u64> = cfg.tasks.iter().map(|t| t.wcec).collect();
                let mean: f64 = cfg.tasks.iter().map(|t| t.dist.mean()).sum();
                println!(
                    "{shape:<10} wcec {wcec:?}  worst-case load {:.1} of {}  mean cycles {mean:.1}",
                    cfg.total_worst_time(),
                    cfg.virtual_horizon()
                );
            }
            Err(e) => println!("{shape:<10} {e}"),
        }
    }

    // Nearly saturated processors with one task each rarely partition.
    let spec = WorkloadSpec {
        n: 4,
        m: 4,
        frame_length: 100.0,
        freq_levels: 3,
        utilization: 0.99,
        shape: Shape::Bimodal,
        seed: 5,
    };
    println!("u = 0.99, n = m = 4: {:?}", generate(&spec).map(|c| c.n()));
}
