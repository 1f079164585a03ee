//! Allele frequencies at a single locus, recorded every 100 generations.
//! Prints the trajectory as CSV (alleles -2..2 plus everything else).
//!
//! `cargo run --release --example allele_drift > drift.csv`

use hapsim::stats::allele_trajectory;
use hapsim::{simulate, GrowthSchedule, MutationRates, SimulationConfig};

fn main() -> hapsim::Result<()> {
    let g = 3000;
    let config = SimulationConfig::new(
        1_000_000,
        g,
        MutationRates::symmetric(1, 0.003)?,
        GrowthSchedule::constant(1.0)?,
    )
    .with_seed(1)
    .with_snapshots((100..g).step_by(100));
    let result = simulate(&config)?;
    let trajectory = allele_trajectory(&result.intermediates, 0, 2)?;
    print!("{}", trajectory.to_csv());
    Ok(())
}
