//! Category probabilities and per-category tables for asymmetric rates.
//!
//! `cargo run --example mutation_tables`

use hapsim::mutation::{extended_row_count, MutationTables};
use hapsim::{MutationRates, RandomStream};

fn main() -> hapsim::Result<()> {
    let rates = MutationRates::new(vec![0.001, 0.002, 0.004], vec![0.002, 0.002, 0.001])?;
    let tables = MutationTables::build(&rates, 1_000_000)?;

    for (d, eta) in tables.eta().iter().enumerate() {
        println!(
            "eta_{d} = {eta:.6e}  ({} configurations)",
            extended_row_count(3, d)
        );
    }

    println!("\nd\tloci\tsteps\tp");
    tables
        .dump(std::io::stdout())
        .map_err(|e| hapsim::Error::io("<stdout>", e))?;

    let mut stream = RandomStream::new(1);
    println!("\nfive category-2 draws:");
    for _ in 0..5 {
        println!("  {:?}", tables.sample_config(2, &mut stream));
    }

    let big = MutationRates::symmetric(16, 0.003)?;
    let capped = MutationTables::build(&big, 1_000_000)?;
    println!(
        "\nr=16: categories sampled without a full table: {:?}",
        capped.fallback_categories()
    );
    Ok(())
}
