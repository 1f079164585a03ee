//! Extinction of a lineage started from one individual. With Poisson(α)
//! offspring the eventual extinction probability solves `q = exp(α(q - 1))`.
//!
//! `cargo run --release --example extinction`

use hapsim::{GrowthSchedule, MutationRates, SimulationConfig, Simulator};

fn extinction_probability(alpha: f64) -> f64 {
    if alpha <= 1.0 {
        return 1.0;
    }
    let mut q = 0.0;
    for _ in 0..1000 {
        q = (alpha * (q - 1.0)).exp();
    }
    q
}

fn main() -> hapsim::Result<()> {
    let reps = 20_000;
    println!("alpha  extinct by 50  fixed point");
    for alpha in [0.8, 1.0, 1.2, 1.5, 2.0] {
        let config = SimulationConfig::new(
            1,
            50,
            MutationRates::zero(1)?,
            GrowthSchedule::constant(alpha)?,
        )
        .with_seed(9);
        let runs = Simulator::new(config)?.run_many(reps, 4)?;
        let extinct = runs.iter().filter(|r| r.extinct_at.is_some()).count();
        println!(
            "{alpha:5.1}  {:13.4}  {:11.4}",
            extinct as f64 / reps as f64,
            extinction_probability(alpha)
        );
    }
    Ok(())
}
