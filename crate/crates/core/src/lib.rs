//! Forward-time Fisher–Wright simulation on haplotype count tables.
//!
//! Populations are stored as counts of distinct haplotypes (integer vectors of
//! microsatellite repeat numbers) rather than as individuals. Each generation
//! the total size is Poisson around `α_i` times the previous size, children
//! pick parents in proportion to their counts, and every child mutates under
//! a per-locus single-step model. Mutation probabilities are tabulated once
//! per run by the number of mutating loci, so a generation costs time in the
//! number of distinct haplotypes, not individuals.
//!
//! ```
//! use hapsim::{GrowthSchedule, MutationRates, SimulationConfig, simulate};
//!
//! let config = SimulationConfig::new(
//!     1_000,
//!     50,
//!     MutationRates::symmetric(3, 0.003).unwrap(),
//!     GrowthSchedule::constant(1.0).unwrap(),
//! )
//! .with_seed(7);
//! let result = simulate(&config).unwrap();
//! assert_eq!(result.sizes.len(), 51);
//! assert_eq!(result.final_haplotypes.total(), result.final_size());
//! ```

pub mod bench;
pub mod cli;
pub mod engine;
pub mod error;
pub mod growth;
pub mod mutation;
pub mod oracle;
pub mod rng;
pub mod stats;
pub mod store;
pub mod table;

pub use engine::{simulate, PopulationState, SimulationConfig, SimulationResult, Simulator};
pub use error::{Error, Result};
pub use growth::GrowthSchedule;
pub use mutation::{MutationConfig, MutationRates, MutationTables};
pub use oracle::{classic_fw_step, naive_simulate};
pub use rng::{CategoricalSampler, RandomStream};
pub use store::{Haplotype, KdCountTree};
pub use table::CountTable;
