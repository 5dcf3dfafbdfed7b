//! Static-scaling sweep over mesh sizes for a few anisotropy strengths.
//!
//! cargo run --release -p perf-spectrum --example sweep

use perf_spectrum::metrics::{convergence_slope, display_slope};
use perf_spectrum::workloads::{run_benchmark, BenchConfig};

fn main() {
    for alpha in [0.0, 1000.0] {
        let mut pts = Vec::new();
        for n in [4, 8, 16, 20, 32] {
            let mut cfg = BenchConfig::new(n, alpha);
            cfg.tol = 1e-9;
            let r = run_benchmark(&cfg).expect("benchmark");
            println!(
                "alpha={alpha:<6} n={n:<3} dofs={:<7} its={:<4} time={:.4}s err={:.3e} rate1={:.0} rate2={:.1}",
                r.dofs,
                r.linear_iterations.unwrap(),
                r.wall_time,
                r.l2_error.unwrap(),
                r.dofs as f64 / r.wall_time,
                r.dofs as f64 / r.wall_time / r.linear_iterations.unwrap() as f64,
            );
            if n != 20 {
                pts.push((r.h_size.unwrap(), r.l2_error.unwrap()));
            }
        }
        println!("alpha={alpha}: slope {}", display_slope(convergence_slope(&pts).unwrap()));
    }
}
