//! Haplotype-count Fisher–Wright engine.
//!
//! A generation is a [`KdCountTree`] of haplotype counts. One transition:
//!
//! 1. draw the next total `N_{i+1} ~ Poisson(α_i N_i)` from the size
//!    substream;
//! 2. split `N_{i+1}` over mutation categories `d = 0..=r` with weights `η_d`;
//! 3. split each category over parent haplotypes with weights `n_i(x)`;
//! 4. place every mutated child on a configuration from the category's
//!    extended table (or the fallback sampler) and add it to the new tree.
//!
//! By Poisson splitting this is the same law as drawing independent
//! `Poisson(α η_d n_i(x))` children per `(x, d)` cell, which is what
//! [`evolve_haplotype`] does literally. Keeping the size draw on its own
//! substream makes the size trajectory a function of the seed and growth
//! schedule alone, whatever the mutation rates.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::growth::GrowthSchedule;
use crate::mutation::{MutationRates, MutationTables, DEFAULT_TABLE_CAP};
use crate::rng::RandomStream;
use crate::store::{Haplotype, KdCountTree};
use crate::table::CountTable;

/// Substream ids under a replicate's root stream.
pub(crate) const SIZE_STREAM: u64 = 1;
pub(crate) const ALLOCATION_STREAM: u64 = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    /// `N_0`. Ignored in favour of the table total when `initial_table` is set.
    pub initial_size: u64,
    pub generations: usize,
    pub rates: MutationRates,
    pub schedule: GrowthSchedule,
    /// Generations (in `1..=generations`) whose tables are kept.
    pub save_generations: Vec<usize>,
    pub seed: u64,
    pub initial_haplotype: Haplotype,
    pub initial_table: Option<CountTable>,
    pub table_cap: usize,
}

impl SimulationConfig {
    /// Monomorphic start at the origin, no snapshots, seed 0.
    pub fn new(
        initial_size: u64,
        generations: usize,
        rates: MutationRates,
        schedule: GrowthSchedule,
    ) -> Self {
        let loci = rates.loci();
        Self {
            initial_size,
            generations,
            rates,
            schedule,
            save_generations: Vec::new(),
            seed: 0,
            initial_haplotype: Haplotype::origin(loci),
            initial_table: None,
            table_cap: DEFAULT_TABLE_CAP,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_snapshots(mut self, generations: impl IntoIterator<Item = usize>) -> Self {
        self.save_generations = generations.into_iter().collect();
        self
    }

    pub fn loci(&self) -> usize {
        self.rates.loci()
    }

    pub fn validate(&self) -> Result<()> {
        if self.generations == 0 {
            return Err(Error::invalid("at least one generation is required"));
        }
        self.schedule.validate()?;
        if let Some(h) = self.schedule.horizon() {
            if h < self.generations {
                return Err(Error::invalid(format!(
                    "custom growth schedule covers {h} generations, {} requested",
                    self.generations
                )));
            }
        }
        if let Some(&bad) = self
            .save_generations
            .iter()
            .find(|&&i| i == 0 || i > self.generations)
        {
            return Err(Error::invalid(format!(
                "snapshot generation {bad} is outside 1..={}",
                self.generations
            )));
        }
        if self.initial_haplotype.loci() != self.loci() {
            return Err(Error::invalid(
                "initial haplotype length differs from locus count",
            ));
        }
        if let Some(table) = &self.initial_table {
            if table.loci() != self.loci() {
                return Err(Error::invalid(
                    "initial table locus count differs from mutation rates",
                ));
            }
        }
        if self.table_cap == 0 {
            return Err(Error::invalid("table cap must be positive"));
        }
        Ok(())
    }

    /// Generation-0 population.
    pub fn initial_population(&self) -> CountTable {
        match &self.initial_table {
            Some(t) => t.clone(),
            None => CountTable::monomorphic(self.initial_haplotype.clone(), self.initial_size),
        }
    }

    fn snapshot_set(&self) -> Vec<usize> {
        let mut s = self.save_generations.clone();
        s.sort_unstable();
        s.dedup();
        s
    }
}

/// One complete generation.
#[derive(Clone, Debug)]
pub struct PopulationState {
    pub generation: usize,
    store: KdCountTree,
}

impl PopulationState {
    pub fn new(generation: usize, store: KdCountTree) -> Self {
        Self { generation, store }
    }

    pub fn from_table(generation: usize, table: &CountTable) -> Self {
        Self::new(generation, table.to_tree())
    }

    pub fn store(&self) -> &KdCountTree {
        &self.store
    }

    pub fn size(&self) -> u64 {
        self.store.total()
    }

    pub fn table(&self) -> CountTable {
        CountTable::from_tree(&self.store)
    }
}

/// Random streams owned by one replicate.
#[derive(Clone, Debug)]
pub struct EngineStreams {
    pub size: RandomStream,
    pub allocation: RandomStream,
}

impl EngineStreams {
    pub fn new(seed: u64, replicate: u64) -> Self {
        let root = RandomStream::derive(seed, replicate);
        Self {
            size: root.substream(SIZE_STREAM),
            allocation: root.substream(ALLOCATION_STREAM),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationResult {
    /// `N_0..=N_g`.
    pub sizes: Vec<u64>,
    /// `e_0..=e_g`; see [`GrowthSchedule::expected_sizes`].
    pub expected_sizes: Vec<f64>,
    pub expected_sizes_approximate: bool,
    pub final_haplotypes: CountTable,
    pub intermediates: BTreeMap<usize, CountTable>,
    /// First generation of size zero.
    pub extinct_at: Option<usize>,
    pub seed: u64,
    pub replicate: u64,
    /// Generations whose logistic rate was floored.
    pub clamped_generations: Vec<usize>,
}

impl SimulationResult {
    pub fn final_size(&self) -> u64 {
        *self.sizes.last().unwrap_or(&0)
    }
}

/// Evolves one parent haplotype with `n` copies by independent per-category
/// Poisson draws, adding every child to `sink`. Returns the number of
/// children.
pub fn evolve_haplotype(
    h: &[i32],
    n: u64,
    alpha: f64,
    tables: &MutationTables,
    stream: &mut RandomStream,
    sink: &mut KdCountTree,
) -> Result<u64> {
    if h.len() != tables.loci() || sink.loci() != tables.loci() {
        return Err(Error::invalid("haplotype length differs from locus count"));
    }
    let mut buf = vec![0i32; h.len()];
    let mut born = 0;
    for (d, &eta) in tables.eta().iter().enumerate() {
        let z = stream.poisson(alpha * eta * n as f64)?;
        if z == 0 {
            continue;
        }
        born += z;
        if d == 0 {
            sink.add(h, z);
        } else {
            tables.allocate(d, z, stream, |config, m| {
                config.apply_into(h, &mut buf);
                sink.add(&buf, m);
            })?;
        }
    }
    Ok(born)
}

/// One transition by [`evolve_haplotype`] on every parent, all draws from
/// a single stream.
pub fn evolve_generation_independent(
    state: &PopulationState,
    alpha: f64,
    tables: &MutationTables,
    stream: &mut RandomStream,
) -> Result<PopulationState> {
    let mut next = KdCountTree::with_capacity(tables.loci(), state.store.distinct());
    for (h, n) in state.store.iter() {
        evolve_haplotype(h, n, alpha, tables, stream, &mut next)?;
    }
    Ok(PopulationState::new(state.generation + 1, next))
}

/// One transition: total from `streams.size`, allocation from
/// `streams.allocation`.
pub fn evolve_generation(
    state: &PopulationState,
    alpha: f64,
    tables: &MutationTables,
    streams: &mut EngineStreams,
) -> Result<PopulationState> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid(format!(
            "growth rate must be positive, got {alpha}"
        )));
    }
    let total = streams.size.poisson(alpha * state.size() as f64)?;
    allocate_generation(state, total, tables, &mut streams.allocation)
}

/// Distributes exactly `total` children over the parents of `state`,
/// conditionally on the next generation's size.
pub fn allocate_generation(
    state: &PopulationState,
    total: u64,
    tables: &MutationTables,
    stream: &mut RandomStream,
) -> Result<PopulationState> {
    let parents = &state.store;
    let loci = tables.loci();
    if parents.loci() != loci {
        return Err(Error::invalid(
            "population locus count differs from mutation tables",
        ));
    }
    let mut next = KdCountTree::with_capacity(loci, parents.distinct() + parents.distinct() / 4);
    let generation = state.generation + 1;
    let parent_total = parents.total();
    if total == 0 {
        return Ok(PopulationState::new(generation, next));
    }
    if parent_total == 0 {
        return Err(Error::invalid(
            "children allocated to an extinct generation",
        ));
    }

    let mut by_category = vec![0u64; loci + 1];
    stream.split_weights(total, tables.eta(), &mut by_category)?;

    let mut buf = vec![0i32; loci];
    let mut cumulative: Option<Vec<u64>> = None;
    for (d, &children) in by_category.iter().enumerate() {
        if children == 0 {
            continue;
        }
        if d > 0 && children.saturating_mul(8) < parents.distinct() as u64 {
            // Few children relative to parents: pick a parent per child.
            let cum = cumulative.get_or_insert_with(|| {
                parents
                    .iter()
                    .scan(0u64, |acc, (_, n)| {
                        *acc += n;
                        Some(*acc)
                    })
                    .collect()
            });
            for _ in 0..children {
                let u = stream.below(parent_total);
                let idx = cum.partition_point(|&c| c <= u);
                let (h, _) = parents.entry(idx);
                let config = tables.sample_config(d, stream);
                config.apply_into(h, &mut buf);
                next.add(&buf, 1);
            }
            continue;
        }
        let mut remaining_children = children;
        let mut remaining_parents = parent_total;
        for (h, n) in parents.iter() {
            if remaining_children == 0 {
                break;
            }
            let x = if n == remaining_parents {
                remaining_children
            } else {
                stream.binomial(remaining_children, n as f64 / remaining_parents as f64)?
            };
            remaining_parents -= n;
            remaining_children -= x;
            if x == 0 {
                continue;
            }
            if d == 0 {
                next.add(h, x);
            } else {
                tables.allocate(d, x, stream, |config, m| {
                    config.apply_into(h, &mut buf);
                    next.add(&buf, m);
                })?;
            }
        }
    }
    Ok(PopulationState::new(generation, next))
}

/// A validated configuration with its mutation tables, ready to run
/// replicates. Tables are shared read-only between replicates.
#[derive(Debug)]
pub struct Simulator {
    config: SimulationConfig,
    tables: MutationTables,
}

impl Simulator {
    pub fn new(config: SimulationConfig) -> Result<Self> {
        config.validate()?;
        let tables = MutationTables::build(&config.rates, config.table_cap)?;
        Ok(Self { config, tables })
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn tables(&self) -> &MutationTables {
        &self.tables
    }

    /// Runs replicate `replicate` on stream `(seed, replicate)`.
    pub fn run(&self, replicate: u64) -> Result<SimulationResult> {
        let cfg = &self.config;
        let g = cfg.generations;
        let mut streams = EngineStreams::new(cfg.seed, replicate);
        let initial = cfg.initial_population();
        let n0 = initial.total();
        let expected_sizes = cfg.schedule.expected_sizes(n0 as f64, g)?;
        let snapshots = cfg.snapshot_set();
        let mut next_snapshot = snapshots.iter().copied().peekable();

        let mut state = PopulationState::from_table(0, &initial);
        let mut sizes = Vec::with_capacity(g + 1);
        sizes.push(n0);
        let mut intermediates = BTreeMap::new();
        let mut clamped_generations = Vec::new();
        let mut extinct_at = None;

        for i in 1..=g {
            let rate = cfg.schedule.rate_at(i, state.size() as f64)?;
            if rate.clamped {
                clamped_generations.push(i);
            }
            state = evolve_generation(&state, rate.value, &self.tables, &mut streams)?;
            sizes.push(state.size());
            if next_snapshot.peek() == Some(&i) {
                next_snapshot.next();
                intermediates.insert(i, state.table());
            }
            if state.size() == 0 {
                extinct_at = Some(i);
                break;
            }
        }
        if extinct_at.is_some() {
            sizes.resize(g + 1, 0);
            for i in next_snapshot {
                intermediates.insert(i, CountTable::empty(cfg.loci()));
            }
        }
        Ok(SimulationResult {
            sizes,
            expected_sizes,
            expected_sizes_approximate: cfg.schedule.is_approximate(),
            final_haplotypes: state.table(),
            intermediates,
            extinct_at,
            seed: cfg.seed,
            replicate,
            clamped_generations,
        })
    }

    /// Replicates `0..count`, up to `jobs` at a time. Results are in
    /// replicate order and do not depend on `jobs`.
    pub fn run_many(&self, count: u64, jobs: usize) -> Result<Vec<SimulationResult>> {
        run_parallel(count, jobs, |rep| self.run(rep))
    }
}

pub(crate) fn run_parallel<T: Send>(
    count: u64,
    jobs: usize,
    f: impl Fn(u64) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    if jobs <= 1 {
        return (0..count).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..count).into_par_iter().map(&f).collect())
}

/// Runs replicate 0 of `config`.
pub fn simulate(config: &SimulationConfig) -> Result<SimulationResult> {
    Simulator::new(config.clone())?.run(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(k: u64, g: usize, rates: MutationRates, alpha: f64) -> SimulationConfig {
        SimulationConfig::new(k, g, rates, GrowthSchedule::constant(alpha).unwrap())
    }

    #[test]
    fn zero_rates_copy_parents() {
        let res =
            simulate(&config(200, 30, MutationRates::zero(4).unwrap(), 1.0).with_seed(3)).unwrap();
        let t = &res.final_haplotypes;
        assert!(t.len() <= 1);
        assert_eq!(t.count_of(&[0, 0, 0, 0]), res.final_size());
    }

    #[test]
    fn single_locus_child_fractions() {
        let rates = MutationRates::new(vec![0.25], vec![0.25]).unwrap();
        let sim = Simulator::new(config(10_000, 1, rates, 1.0)).unwrap();
        let mut counts = [0u64; 3];
        for rep in 0..20 {
            let t = sim.run(rep).unwrap().final_haplotypes;
            for (i, a) in [-1, 0, 1].into_iter().enumerate() {
                counts[i] += t.count_of(&[a]);
            }
        }
        let total: u64 = counts.iter().sum();
        for (c, p) in counts.iter().zip([0.25, 0.5, 0.25]) {
            let f = *c as f64 / total as f64;
            assert!(
                (f - p).abs() < 4.0 * (p * (1.0 - p) / total as f64).sqrt(),
                "{f} vs {p}"
            );
        }
    }

    #[test]
    fn growth_mean() {
        let sim = Simulator::new(config(
            500,
            1,
            MutationRates::symmetric(2, 0.01).unwrap(),
            2.0,
        ))
        .unwrap();
        let reps = 2000;
        let sum: u64 = (0..reps).map(|r| sim.run(r).unwrap().final_size()).sum();
        let mean = sum as f64 / reps as f64;
        assert!(
            (mean - 1000.0).abs() < 4.0 * (1000.0f64 / reps as f64).sqrt(),
            "{mean}"
        );
    }

    #[test]
    fn large_population_mean() {
        let sim =
            Simulator::new(config(1_000_000, 1, MutationRates::zero(2).unwrap(), 1.0)).unwrap();
        let reps = 500;
        let sum: u64 = (0..reps).map(|r| sim.run(r).unwrap().final_size()).sum();
        let mean = sum as f64 / reps as f64;
        assert!(
            (mean - 1e6).abs() < 4.0 * 1e3 / (reps as f64).sqrt(),
            "{mean}"
        );
    }

    #[test]
    fn extinction_is_absorbing() {
        let res =
            simulate(&config(0, 4, MutationRates::zero(2).unwrap(), 3.0).with_snapshots([2, 4]))
                .unwrap();
        assert_eq!(res.extinct_at, Some(1));
        assert_eq!(res.sizes, vec![0; 5]);
        assert!(res.intermediates.values().all(CountTable::is_empty));
        assert_eq!(res.intermediates.len(), 2);
    }

    #[test]
    fn children_are_one_step_from_parents() {
        let rates = MutationRates::symmetric(3, 0.3).unwrap();
        let tables = MutationTables::build(&rates, DEFAULT_TABLE_CAP).unwrap();
        let parent = CountTable::monomorphic(Haplotype::from(vec![5, -2, 9]), 400);
        let state = PopulationState::from_table(0, &parent);
        let mut streams = EngineStreams::new(1, 0);
        let next = evolve_generation(&state, 1.0, &tables, &mut streams).unwrap();
        assert!(next.size() > 0);
        for (h, _) in next.store().iter() {
            for (a, b) in h.iter().zip([5, -2, 9]) {
                assert!((a - b).abs() <= 1);
            }
        }
    }

    #[test]
    fn snapshots_match_sizes() {
        let cfg = config(300, 20, MutationRates::symmetric(3, 0.05).unwrap(), 1.02)
            .with_snapshots(1..=20);
        let res = simulate(&cfg).unwrap();
        for (i, t) in &res.intermediates {
            assert_eq!(t.total(), res.sizes[*i]);
        }
        assert_eq!(res.intermediates[&20], res.final_haplotypes);
    }

    #[test]
    fn runs_are_reproducible() {
        let cfg = config(1000, 25, MutationRates::symmetric(4, 0.01).unwrap(), 1.0).with_seed(11);
        let sim = Simulator::new(cfg).unwrap();
        assert_eq!(sim.run(2).unwrap(), sim.run(2).unwrap());
        assert_ne!(sim.run(2).unwrap().sizes, sim.run(3).unwrap().sizes);
        let serial = sim.run_many(6, 1).unwrap();
        assert_eq!(serial, sim.run_many(6, 3).unwrap());
    }

    #[test]
    fn sizes_ignore_mutation_rates() {
        let a =
            simulate(&config(800, 40, MutationRates::zero(3).unwrap(), 1.01).with_seed(5)).unwrap();
        let b = simulate(
            &config(800, 40, MutationRates::symmetric(3, 0.2).unwrap(), 1.01).with_seed(5),
        )
        .unwrap();
        assert_eq!(a.sizes, b.sizes);
        assert_ne!(a.final_haplotypes, b.final_haplotypes);
    }

    #[test]
    fn independent_route_conserves_mean() {
        let rates = MutationRates::symmetric(2, 0.1).unwrap();
        let tables = MutationTables::build(&rates, DEFAULT_TABLE_CAP).unwrap();
        let parent = CountTable::monomorphic(Haplotype::origin(2), 50);
        let state = PopulationState::from_table(0, &parent);
        let mut stream = RandomStream::new(9);
        let reps = 4000;
        let mut sum = 0;
        for _ in 0..reps {
            sum += evolve_generation_independent(&state, 1.5, &tables, &mut stream)
                .unwrap()
                .size();
        }
        let mean = sum as f64 / reps as f64;
        assert!(
            (mean - 75.0).abs() < 4.0 * (75.0f64 / reps as f64).sqrt(),
            "{mean}"
        );
    }

    #[test]
    fn bad_inputs_rejected() {
        let rates = MutationRates::zero(2).unwrap();
        let tables = MutationTables::build(&rates, DEFAULT_TABLE_CAP).unwrap();
        let state =
            PopulationState::from_table(0, &CountTable::monomorphic(Haplotype::origin(2), 5));
        let mut streams = EngineStreams::new(1, 0);
        assert!(evolve_generation(&state, 0.0, &tables, &mut streams).is_err());
        assert!(evolve_generation(&state, f64::NAN, &tables, &mut streams).is_err());
        let mut sink = KdCountTree::new(2);
        assert!(
            evolve_haplotype(&[0, 0, 0], 1, 1.0, &tables, &mut streams.size, &mut sink).is_err()
        );
    }
}
