//! Reference simulators.
//!
//! [`naive_simulate`] follows every individual: each one begets
//! `Poisson(α_i)` children and each child mutates locus by locus. It has the
//! same law as the haplotype-count engine and serves both as a test oracle
//! and as the baseline in speed comparisons. [`classic_fw_step`] is the
//! constant-size multinomial Fisher–Wright transition.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::engine::{run_parallel, SimulationConfig, SimulationResult};
use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::store::Haplotype;
use crate::table::CountTable;

/// Substream id used by the naive simulator.
const NAIVE_STREAM: u64 = 3;

/// One entry per living individual.
#[derive(Clone, Debug, Default)]
pub struct IndividualPopulation {
    pub individuals: Vec<Haplotype>,
}

impl IndividualPopulation {
    pub fn from_table(table: &CountTable) -> Self {
        let mut individuals = Vec::with_capacity(table.total() as usize);
        for (h, n) in table.rows() {
            for _ in 0..*n {
                individuals.push(h.clone());
            }
        }
        Self { individuals }
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    pub fn to_table(&self, loci: usize) -> CountTable {
        let mut counts: BTreeMap<&Haplotype, u64> = BTreeMap::new();
        for h in &self.individuals {
            *counts.entry(h).or_default() += 1;
        }
        CountTable::from_rows(
            loci,
            counts.into_iter().map(|(h, n)| (h.clone(), n)).collect(),
        )
        .expect("aggregated rows are valid")
    }
}

pub fn naive_simulate(config: &SimulationConfig) -> Result<SimulationResult> {
    naive_simulate_replicate(config, 0, None)
}

/// Replicate `replicate` of the individual-based simulator. Fails with
/// [`Error::Timeout`] once `deadline` has passed.
pub fn naive_simulate_replicate(
    config: &SimulationConfig,
    replicate: u64,
    deadline: Option<Instant>,
) -> Result<SimulationResult> {
    config.validate()?;
    let loci = config.loci();
    let g = config.generations;
    let down = config.rates.down().to_vec();
    let up = config.rates.up().to_vec();
    let mut stream = RandomStream::derive(config.seed, replicate).substream(NAIVE_STREAM);

    let initial = config.initial_population();
    let mut population = IndividualPopulation::from_table(&initial);
    let mut sizes = vec![population.len() as u64];
    let mut saved: Vec<usize> = config.save_generations.clone();
    saved.sort_unstable();
    saved.dedup();
    let mut intermediates = BTreeMap::new();
    let mut clamped_generations = Vec::new();
    let mut extinct_at = None;

    for i in 1..=g {
        if let Some(deadline) = deadline {
            if Instant::now() >= deadline {
                return Err(Error::Timeout { generation: i - 1 });
            }
        }
        let rate = config.schedule.rate_at(i, population.len() as f64)?;
        if rate.clamped {
            clamped_generations.push(i);
        }
        let mut next = Vec::new();
        for parent in &population.individuals {
            let children = stream.poisson(rate.value)?;
            for _ in 0..children {
                let mut alleles = parent.alleles().to_vec();
                for (j, a) in alleles.iter_mut().enumerate() {
                    let u = stream.uniform();
                    if u < down[j] {
                        *a -= 1;
                    } else if u < down[j] + up[j] {
                        *a += 1;
                    }
                }
                next.push(Haplotype::from(alleles));
            }
        }
        population = IndividualPopulation { individuals: next };
        sizes.push(population.len() as u64);
        if saved.binary_search(&i).is_ok() {
            intermediates.insert(i, population.to_table(loci));
        }
        if population.is_empty() {
            extinct_at = Some(i);
            break;
        }
    }
    if extinct_at.is_some() {
        sizes.resize(g + 1, 0);
        for &i in &saved {
            intermediates
                .entry(i)
                .or_insert_with(|| CountTable::empty(loci));
        }
    }
    Ok(SimulationResult {
        sizes,
        expected_sizes: config.schedule.expected_sizes(initial.total() as f64, g)?,
        expected_sizes_approximate: config.schedule.is_approximate(),
        final_haplotypes: population.to_table(loci),
        intermediates,
        extinct_at,
        seed: config.seed,
        replicate,
        clamped_generations,
    })
}

/// Replicates `0..count` of the naive simulator on up to `jobs` threads.
pub fn naive_simulate_many(
    config: &SimulationConfig,
    count: u64,
    jobs: usize,
) -> Result<Vec<SimulationResult>> {
    run_parallel(count, jobs, |rep| {
        naive_simulate_replicate(config, rep, None)
    })
}

/// Constant-size Fisher–Wright step: next counts are
/// `Multinomial(N, {n(x) / N})`.
pub fn classic_fw_step(
    counts: &CountTable,
    n_const: u64,
    stream: &mut RandomStream,
) -> Result<CountTable> {
    let total = counts.total();
    if total != n_const {
        return Err(Error::invalid(format!(
            "table holds {total} individuals, constant size is {n_const}"
        )));
    }
    if total == 0 {
        return Ok(counts.clone());
    }
    let probs: Vec<f64> = counts
        .rows()
        .iter()
        .map(|(_, n)| *n as f64 / total as f64)
        .collect();
    let mut next = vec![0u64; probs.len()];
    stream.split_weights(n_const, &probs, &mut next)?;
    let rows = counts
        .rows()
        .iter()
        .zip(next)
        .filter(|(_, n)| *n > 0)
        .map(|((h, _), n)| (h.clone(), n))
        .collect();
    CountTable::from_rows(counts.loci(), rows)
}
