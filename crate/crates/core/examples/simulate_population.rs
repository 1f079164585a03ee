//! Ten thousand founders, three loci, slow growth for a thousand
//! generations; then the most common haplotypes and a two-locus table.
//!
//! `cargo run --release --example simulate_population`

use hapsim::stats::{contingency, top_k};
use hapsim::{simulate, GrowthSchedule, MutationRates, SimulationConfig};

fn main() -> hapsim::Result<()> {
    let config = SimulationConfig::new(
        10_000,
        1000,
        MutationRates::symmetric(3, 0.003)?,
        GrowthSchedule::constant(1.001)?,
    )
    .with_seed(1);
    let result = simulate(&config)?;

    let table = &result.final_haplotypes;
    println!(
        "final size {} (expected {:.1}), {} distinct haplotypes",
        result.final_size(),
        result.expected_sizes[config.generations],
        table.len()
    );

    println!("\nmost common haplotypes:");
    for (h, n) in top_k(table, 10) {
        println!("  {:?}  {n}", h.alleles());
    }

    println!("\nLocus1 x Locus2:\n{}", contingency(table, 0, 1)?);
    Ok(())
}
