//! Expected and realised sizes under each growth schedule.
//!
//! `cargo run --release --example growth_schedules`

use hapsim::{GrowthSchedule, MutationRates, SimulationConfig, Simulator};

fn main() -> hapsim::Result<()> {
    let g = 60;
    let schedules = [
        "constant:1.02",
        "piecewise:beta=1.08,t=20,alpha=0.99",
        "logistic:alpha=1.15,nmax=5000",
    ];
    for spec in schedules {
        let schedule = GrowthSchedule::parse(spec)?;
        let config = SimulationConfig::new(
            500,
            g,
            MutationRates::symmetric(2, 0.002)?,
            schedule.clone(),
        )
        .with_seed(4);
        let runs = Simulator::new(config)?.run_many(200, 4)?;
        let expected = &runs[0].expected_sizes;
        let approx = if schedule.is_approximate() {
            " (approximate)"
        } else {
            ""
        };
        println!("{spec}{approx}");
        println!("  gen  expected   mean of 200 runs");
        for i in (0..=g).step_by(10) {
            let mean = runs.iter().map(|r| r.sizes[i] as f64).sum::<f64>() / runs.len() as f64;
            println!("  {i:>3}  {:>9.1}  {mean:>9.1}", expected[i]);
        }
    }

    let custom = GrowthSchedule::Custom(vec![2.0, 2.0, 0.5, 0.5]);
    let config = SimulationConfig::new(100, 4, MutationRates::zero(1)?, custom).with_seed(1);
    let sizes = Simulator::new(config)?.run(0)?.sizes;
    println!("custom rates [2, 2, 0.5, 0.5]: {sizes:?}");
    Ok(())
}
