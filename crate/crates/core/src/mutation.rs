//! Stepwise mutation model.
//!
//! Each locus independently steps down with probability `δ_j`, up with
//! probability `ω_j`, and stays put otherwise. A child is classified by the
//! number `d` of loci that mutate. For each category we precompute
//!
//! * a *simple table*: every `d`-subset `s` of loci with
//!   `p(s) = Π_{j∈s} μ_j · Π_{j∉s} (1 − μ_j)`, where `μ_j = δ_j + ω_j`;
//! * an *extended table*: every pair `(s, q)` with `q : s → {−1, +1}` and
//!   `p(s, q) = Π_{j∈s} p_j(q(j)) · Π_{j∉s} (1 − μ_j)`.
//!
//! Both tables of category `d` sum to `η_d`, the probability of exactly `d`
//! mutations. Extended tables grow as `2^d · C(r, d)`, so categories beyond a
//! row cap are sampled from the simple table plus per-locus directions.

use std::fmt;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::rng::{CategoricalSampler, RandomStream};
use crate::store::Haplotype;

/// Largest supported locus count.
pub const MAX_LOCI: usize = 20;

/// Default maximum row count for a materialised extended table.
pub const DEFAULT_TABLE_CAP: usize = 1_000_000;

/// Per-locus downward (`δ`) and upward (`ω`) step probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct MutationRates {
    down: Vec<f64>,
    up: Vec<f64>,
}

impl MutationRates {
    pub fn new(down: Vec<f64>, up: Vec<f64>) -> Result<Self> {
        if down.len() != up.len() {
            return Err(Error::invalid(format!(
                "{} downward rates but {} upward rates",
                down.len(),
                up.len()
            )));
        }
        if down.is_empty() || down.len() > MAX_LOCI {
            return Err(Error::invalid(format!(
                "locus count must be between 1 and {MAX_LOCI}, got {}",
                down.len()
            )));
        }
        for (&d, &u) in down.iter().zip(&up) {
            locus_step_probs(d, u)?;
        }
        Ok(Self { down, up })
    }

    /// `δ_j = ω_j = mu / 2` on every locus.
    pub fn symmetric(loci: usize, mu: f64) -> Result<Self> {
        Self::new(vec![mu / 2.0; loci], vec![mu / 2.0; loci])
    }

    pub fn zero(loci: usize) -> Result<Self> {
        Self::symmetric(loci, 0.0)
    }

    pub fn loci(&self) -> usize {
        self.down.len()
    }

    pub fn down(&self) -> &[f64] {
        &self.down
    }

    pub fn up(&self) -> &[f64] {
        &self.up
    }

    /// `μ_j = δ_j + ω_j`.
    pub fn total(&self, locus: usize) -> f64 {
        self.down[locus] + self.up[locus]
    }

    /// Probability of moving by `step` ∈ {−1, 0, +1} at `locus`.
    pub fn step_prob(&self, locus: usize, step: i8) -> f64 {
        match step {
            -1 => self.down[locus],
            0 => 1.0 - self.down[locus] - self.up[locus],
            1 => self.up[locus],
            _ => 0.0,
        }
    }
}

/// `(p(−1), p(0), p(+1))` for one locus.
pub fn locus_step_probs(down: f64, up: f64) -> Result<[f64; 3]> {
    if !down.is_finite() || !up.is_finite() || down < 0.0 || up < 0.0 || down + up >= 1.0 {
        return Err(Error::invalid(format!(
            "mutation rates need 0 <= delta, 0 <= omega, delta + omega < 1; got ({down}, {up})"
        )));
    }
    Ok([down, 1.0 - down - up, up])
}

/// Probability of the full per-locus step vector `q`.
pub fn config_prob(q: &[i8], rates: &MutationRates) -> Result<f64> {
    if q.len() != rates.loci() {
        return Err(Error::invalid(
            "step vector length differs from locus count",
        ));
    }
    if let Some(bad) = q.iter().find(|s| !(-1..=1).contains(*s)) {
        return Err(Error::invalid(format!(
            "step {bad} is outside {{-1, 0, 1}}"
        )));
    }
    Ok(q.iter()
        .enumerate()
        .map(|(j, &s)| rates.step_prob(j, s))
        .product())
}

/// One mutation configuration `(s, q)`: the set of loci that mutate and the
/// direction of each. Loci are bit positions; `up ⊆ loci` marks the loci
/// that step upward.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MutationConfig {
    loci: u32,
    up: u32,
}

impl MutationConfig {
    pub const NONE: MutationConfig = MutationConfig { loci: 0, up: 0 };

    pub fn new(loci: u32, up: u32) -> Result<Self> {
        if up & !loci != 0 {
            return Err(Error::invalid(
                "direction given for a locus outside the subset",
            ));
        }
        Ok(Self { loci, up })
    }

    /// Builds a configuration from `(locus, direction)` pairs.
    pub fn from_steps(steps: &[(usize, i8)]) -> Result<Self> {
        let mut loci = 0u32;
        let mut up = 0u32;
        for &(j, dir) in steps {
            if j >= 32 {
                return Err(Error::invalid(format!("locus index {j} out of range")));
            }
            if loci & (1 << j) != 0 {
                return Err(Error::invalid(format!("locus {j} listed twice")));
            }
            loci |= 1 << j;
            match dir {
                1 => up |= 1 << j,
                -1 => {}
                _ => return Err(Error::invalid(format!("direction {dir} is not -1 or +1"))),
            }
        }
        Ok(Self { loci, up })
    }

    pub fn loci_mask(&self) -> u32 {
        self.loci
    }

    pub fn up_mask(&self) -> u32 {
        self.up
    }

    /// Number of mutating loci.
    pub fn category(&self) -> usize {
        self.loci.count_ones() as usize
    }

    pub fn loci(&self) -> impl Iterator<Item = usize> {
        BitIter(self.loci)
    }

    /// Step at `locus`: −1, 0 or +1.
    pub fn step(&self, locus: usize) -> i8 {
        let bit = 1u32 << locus;
        if self.loci & bit == 0 {
            0
        } else if self.up & bit != 0 {
            1
        } else {
            -1
        }
    }

    /// Full step vector over `loci` loci.
    pub fn to_steps(&self, loci: usize) -> Vec<i8> {
        (0..loci).map(|j| self.step(j)).collect()
    }

    /// Same loci, every direction reversed.
    pub fn inverse(&self) -> Self {
        Self {
            loci: self.loci,
            up: self.loci & !self.up,
        }
    }

    /// Writes `h + q` into `out`.
    #[inline]
    pub fn apply_into(&self, h: &[i32], out: &mut [i32]) {
        out.copy_from_slice(h);
        let mut bits = self.loci;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            out[j] += if self.up & (1 << j) != 0 { 1 } else { -1 };
            bits &= bits - 1;
        }
    }

    pub fn apply(&self, h: &Haplotype) -> Haplotype {
        let mut out = vec![0; h.loci()];
        self.apply_into(h.alleles(), &mut out);
        Haplotype::from(out)
    }
}

impl fmt::Debug for MutationConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, j) in self.loci().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            let sign = if self.step(j) > 0 { '+' } else { '-' };
            write!(f, "{sign}{}", j + 1)?;
        }
        f.write_str("}")
    }
}

struct BitIter(u32);

impl Iterator for BitIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let j = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(j)
    }
}

/// Binomial coefficient, exact in `u64` for the locus counts used here.
pub fn binomial_coefficient(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// `2^d · C(r, d)`.
pub fn extended_row_count(loci: usize, category: usize) -> u64 {
    binomial_coefficient(loci, category) << category
}

/// All `d`-subsets of `0..loci` as bit masks, in lexicographic order of their
/// sorted element lists.
fn subsets(loci: usize, d: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(binomial_coefficient(loci, d) as usize);
    if d > loci {
        return out;
    }
    let mut idx: Vec<usize> = (0..d).collect();
    loop {
        out.push(idx.iter().fold(0u32, |m, &j| m | (1 << j)));
        // advance to the next combination
        let mut i = d;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < loci - d + i {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for k in i + 1..d {
            idx[k] = idx[k - 1] + 1;
        }
    }
}

fn complement_prob(mask: u32, rates: &MutationRates) -> f64 {
    (0..rates.loci())
        .filter(|j| mask & (1 << j) == 0)
        .map(|j| 1.0 - rates.total(j))
        .product()
}

fn subset_prob(mask: u32, rates: &MutationRates) -> f64 {
    (0..rates.loci())
        .map(|j| {
            if mask & (1 << j) != 0 {
                rates.total(j)
            } else {
                1.0 - rates.total(j)
            }
        })
        .product()
}

/// Direction patterns of a subset in lexicographic order of the step vector
/// read over increasing loci (−1 before +1).
fn direction_patterns(mask: u32) -> impl Iterator<Item = u32> {
    let loci: Vec<u32> = BitIter(mask).map(|j| 1u32 << j).collect();
    let d = loci.len();
    (0u32..(1u32 << d)).map(move |k| {
        let mut up = 0;
        for (pos, bit) in loci.iter().enumerate() {
            if k & (1 << (d - 1 - pos)) != 0 {
                up |= bit;
            }
        }
        up
    })
}

/// `p(s, q) = Π_{j∈s} p_j(q(j)) · Π_{j∉s} (1 − μ_j)`.
pub fn extended_row_prob(config: MutationConfig, rates: &MutationRates) -> Result<f64> {
    if rates.loci() < 32 && config.loci_mask() >> rates.loci() != 0 {
        return Err(Error::invalid(
            "configuration mutates a locus beyond the locus count",
        ));
    }
    let inside: f64 = config
        .loci()
        .map(|j| rates.step_prob(j, config.step(j)))
        .product();
    Ok(inside * complement_prob(config.loci_mask(), rates))
}

/// Simple table `S_d`.
#[derive(Clone, Debug)]
pub struct SimpleTable {
    category: usize,
    subsets: Vec<u32>,
    probs: Vec<f64>,
    sampler: Option<CategoricalSampler>,
}

impl SimpleTable {
    pub fn build(rates: &MutationRates, category: usize) -> Result<Self> {
        if category > rates.loci() {
            return Err(Error::invalid(format!(
                "category {category} exceeds locus count {}",
                rates.loci()
            )));
        }
        let subsets = subsets(rates.loci(), category);
        let probs: Vec<f64> = subsets.iter().map(|&s| subset_prob(s, rates)).collect();
        let sampler = if probs.iter().any(|&p| p > 0.0) {
            Some(CategoricalSampler::new(&probs)?)
        } else {
            None
        };
        Ok(Self {
            category,
            subsets,
            probs,
            sampler,
        })
    }

    pub fn category(&self) -> usize {
        self.category
    }

    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    /// `(subset mask, p(s))` rows.
    pub fn rows(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.subsets.iter().copied().zip(self.probs.iter().copied())
    }

    /// `η_d`.
    pub fn mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    fn sample_subset(&self, stream: &mut RandomStream) -> u32 {
        let sampler = self
            .sampler
            .as_ref()
            .expect("sampling a mutation category with zero probability");
        self.subsets[sampler.sample(stream)]
    }
}

/// Extended table `E_d` with a prepared constant-time row sampler.
#[derive(Clone, Debug)]
pub struct ExtendedTable {
    category: usize,
    rows: Vec<MutationConfig>,
    probs: Vec<f64>,
    sampler: Option<CategoricalSampler>,
}

impl ExtendedTable {
    pub fn build(rates: &MutationRates, category: usize) -> Result<Self> {
        if category > rates.loci() {
            return Err(Error::invalid(format!(
                "category {category} exceeds locus count {}",
                rates.loci()
            )));
        }
        let n = extended_row_count(rates.loci(), category) as usize;
        let mut rows = Vec::with_capacity(n);
        let mut probs = Vec::with_capacity(n);
        for s in subsets(rates.loci(), category) {
            let outside = complement_prob(s, rates);
            for up in direction_patterns(s) {
                let config = MutationConfig { loci: s, up };
                let inside: f64 = config
                    .loci()
                    .map(|j| rates.step_prob(j, config.step(j)))
                    .product();
                rows.push(config);
                probs.push(inside * outside);
            }
        }
        let sampler = if probs.iter().any(|&p| p > 0.0) {
            Some(CategoricalSampler::new(&probs)?)
        } else {
            None
        };
        Ok(Self {
            category,
            rows,
            probs,
            sampler,
        })
    }

    pub fn category(&self) -> usize {
        self.category
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = (MutationConfig, f64)> + '_ {
        self.rows.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Row drawn with probability `p(e) / η_d`.
    pub fn sample(&self, stream: &mut RandomStream) -> MutationConfig {
        let sampler = self
            .sampler
            .as_ref()
            .expect("sampling a mutation category with zero probability");
        self.rows[sampler.sample(stream)]
    }
}

/// Draws a category-`d` configuration without an extended table: the subset
/// from `S_d`, then each selected locus independently steps down with
/// probability `δ_j / μ_j` and up otherwise.
pub fn sample_config_fallback(
    rates: &MutationRates,
    simple: &SimpleTable,
    stream: &mut RandomStream,
) -> MutationConfig {
    let loci = simple.sample_subset(stream);
    let mut up = 0u32;
    for j in BitIter(loci) {
        let mu = rates.total(j);
        assert!(mu > 0.0, "selected locus {j} has zero mutation rate");
        if stream.uniform() * mu >= rates.down()[j] {
            up |= 1 << j;
        }
    }
    MutationConfig { loci, up }
}

/// Everything the engine needs to sample mutations, built once per run.
#[derive(Clone, Debug)]
pub struct MutationTables {
    rates: MutationRates,
    eta: Vec<f64>,
    simple: Vec<SimpleTable>,
    extended: Vec<Option<ExtendedTable>>,
    table_cap: usize,
}

impl MutationTables {
    pub fn build(rates: &MutationRates, table_cap: usize) -> Result<Self> {
        if table_cap == 0 {
            return Err(Error::invalid("table cap must be positive"));
        }
        let r = rates.loci();
        let simple = (0..=r)
            .map(|d| SimpleTable::build(rates, d))
            .collect::<Result<Vec<_>>>()?;
        let eta: Vec<f64> = simple.iter().map(SimpleTable::mass).collect();
        let extended = (0..=r)
            .map(|d| {
                if d == 0 || extended_row_count(r, d) > table_cap as u64 {
                    Ok(None)
                } else {
                    ExtendedTable::build(rates, d).map(Some)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            rates: rates.clone(),
            eta,
            simple,
            extended,
            table_cap,
        })
    }

    pub fn rates(&self) -> &MutationRates {
        &self.rates
    }

    pub fn loci(&self) -> usize {
        self.rates.loci()
    }

    /// `η_0 ..= η_r`.
    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn table_cap(&self) -> usize {
        self.table_cap
    }

    pub fn simple(&self, category: usize) -> &SimpleTable {
        &self.simple[category]
    }

    pub fn extended(&self, category: usize) -> Option<&ExtendedTable> {
        self.extended.get(category).and_then(Option::as_ref)
    }

    /// Categories sampled through the fallback path.
    pub fn fallback_categories(&self) -> Vec<usize> {
        (1..=self.loci())
            .filter(|&d| self.extended[d].is_none())
            .collect()
    }

    /// One configuration from category `d ≥ 1`.
    pub fn sample_config(&self, category: usize, stream: &mut RandomStream) -> MutationConfig {
        debug_assert!(category >= 1);
        match &self.extended[category] {
            Some(table) => table.sample(stream),
            None => sample_config_fallback(&self.rates, &self.simple[category], stream),
        }
    }

    /// Allocates `count` children of category `d` to configurations and
    /// reports each `(configuration, multiplicity)` to `emit`. Large counts
    /// against an extended table use one multinomial over its rows; otherwise
    /// children are placed one draw at a time. Both give the same law.
    pub fn allocate(
        &self,
        category: usize,
        count: u64,
        stream: &mut RandomStream,
        mut emit: impl FnMut(MutationConfig, u64),
    ) -> Result<()> {
        if count == 0 {
            return Ok(());
        }
        if category == 0 {
            emit(MutationConfig::NONE, count);
            return Ok(());
        }
        if let Some(table) = &self.extended[category] {
            if count as usize >= table.len() {
                let mut cells = vec![0u64; table.len()];
                stream.split_weights(count, &table.probs, &mut cells)?;
                for (config, n) in table.rows.iter().zip(cells) {
                    if n > 0 {
                        emit(*config, n);
                    }
                }
                return Ok(());
            }
        }
        for _ in 0..count {
            emit(self.sample_config(category, stream), 1);
        }
        Ok(())
    }

    /// Plain-text dump: one row per line, tab separated:
    /// `d`, mutating loci (1-based, comma joined), signed loci, `p`.
    /// Categories without an extended table list their simple-table rows
    /// with an empty direction field.
    pub fn dump(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "{}\t\t\t{:e}", 0, self.eta[0])?;
        for d in 1..=self.loci() {
            match &self.extended[d] {
                Some(table) => {
                    for (config, p) in table.rows() {
                        writeln!(
                            out,
                            "{d}\t{}\t{}\t{p:e}",
                            loci_field(config.loci_mask()),
                            signed_field(config)
                        )?;
                    }
                }
                None => {
                    for (mask, p) in self.simple[d].rows() {
                        writeln!(out, "{d}\t{}\t\t{p:e}", loci_field(mask))?;
                    }
                }
            }
        }
        Ok(())
    }
}

fn loci_field(mask: u32) -> String {
    BitIter(mask)
        .map(|j| (j + 1).to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn signed_field(config: MutationConfig) -> String {
    config
        .loci()
        .map(|j| {
            let sign = if config.step(j) > 0 { '+' } else { '-' };
            format!("{sign}{}", j + 1)
        })
        .collect::<Vec<_>>()
        .join(",")
}
