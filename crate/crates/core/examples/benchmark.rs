//! Haplotype-count engine against the individual-based simulator on a
//! small grid, then engine-only timings as the number of loci grows.
//!
//! `cargo run --release --example benchmark`

use std::time::Duration;

use hapsim::bench::{bench_cell, format_report, loci_sweep, BenchSettings};

fn main() -> hapsim::Result<()> {
    let settings = BenchSettings {
        replicates: 5,
        naive_timeout: Some(Duration::from_secs(20)),
        ..Default::default()
    };
    let mut cells = Vec::new();
    for k in [1000, 5000] {
        for mu in [0.001, 0.003] {
            cells.push(bench_cell(k, 100, mu, &settings)?);
        }
    }
    print!("{}", format_report(&cells));

    println!("\nloci,fast_median_s");
    for (r, t) in loci_sweep(10_000, 100, 0.003, 1..=12, &settings)? {
        println!("{r},{:.6}", t.as_secs_f64());
    }
    Ok(())
}
