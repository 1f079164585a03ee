//! Frequency of the founding allele under three mutation rates, same seed.
//!
//! `cargo run --release --example drift_by_mutation_rate`

use hapsim::stats::drift_vs_mu;
use hapsim::{GrowthSchedule, MutationRates, SimulationConfig};

fn main() -> hapsim::Result<()> {
    let g = 5000;
    let mus = [0.001, 0.002, 0.003];
    let base = SimulationConfig::new(
        1_000_000,
        g,
        MutationRates::zero(1)?,
        GrowthSchedule::constant(1.0)?,
    )
    .with_seed(1)
    .with_snapshots((250..=g).step_by(250));
    let trajectories = drift_vs_mu(&mus, &base, 0)?;

    print!("generation");
    for mu in mus {
        print!(",mu={mu}");
    }
    println!();
    for (row, (gen, _)) in trajectories[0].points.iter().enumerate() {
        print!("{gen}");
        for t in &trajectories {
            match t.points[row].1 {
                Some(f) => print!(",{f:.5}"),
                None => print!(",NA"),
            }
        }
        println!();
    }
    Ok(())
}
