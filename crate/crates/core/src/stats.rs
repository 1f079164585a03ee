//! Summaries of haplotype tables: contingency tables of two loci, the most
//! frequent haplotypes, and allele-frequency trajectories over snapshots.

use std::collections::BTreeMap;
use std::fmt;

use crate::engine::{SimulationConfig, Simulator};
use crate::error::{Error, Result};
use crate::mutation::MutationRates;
use crate::store::Haplotype;
use crate::table::CountTable;

/// Allele-by-allele counts for two loci.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Contingency {
    pub row_alleles: Vec<i32>,
    pub col_alleles: Vec<i32>,
    /// `cells[u][v]`: individuals with `row_alleles[u]` at the first locus
    /// and `col_alleles[v]` at the second.
    pub cells: Vec<Vec<u64>>,
}

impl Contingency {
    pub fn row_totals(&self) -> Vec<u64> {
        self.cells.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        (0..self.col_alleles.len())
            .map(|v| self.cells.iter().map(|r| r[v]).sum())
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().sum()
    }

    pub fn get(&self, row_allele: i32, col_allele: i32) -> u64 {
        let u = self.row_alleles.binary_search(&row_allele);
        let v = self.col_alleles.binary_search(&col_allele);
        match (u, v) {
            (Ok(u), Ok(v)) => self.cells[u][v],
            _ => 0,
        }
    }
}

/// Right-aligned matrix with allele labels and a `Sum` margin.
impl fmt::Display for Contingency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cols = self.col_totals();
        let mut header: Vec<String> = vec![String::new()];
        header.extend(self.col_alleles.iter().map(|a| a.to_string()));
        header.push("Sum".into());
        let mut lines = vec![header];
        for ((a, row), total) in self
            .row_alleles
            .iter()
            .zip(&self.cells)
            .zip(self.row_totals())
        {
            let mut line = vec![a.to_string()];
            line.extend(row.iter().map(|c| c.to_string()));
            line.push(total.to_string());
            lines.push(line);
        }
        let mut footer = vec!["Sum".to_string()];
        footer.extend(cols.iter().map(|c| c.to_string()));
        footer.push(self.total().to_string());
        lines.push(footer);
        let width = lines.iter().flatten().map(String::len).max().unwrap_or(1);
        for line in lines {
            let cells: Vec<String> = line.iter().map(|c| format!("{c:>width$}")).collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}

pub fn contingency(table: &CountTable, locus_a: usize, locus_b: usize) -> Result<Contingency> {
    let loci = table.loci();
    if locus_a >= loci || locus_b >= loci {
        return Err(Error::invalid(format!(
            "locus index out of range for a {loci}-locus table"
        )));
    }
    if locus_a == locus_b {
        return Err(Error::invalid("contingency needs two distinct loci"));
    }
    let mut counts: BTreeMap<(i32, i32), u64> = BTreeMap::new();
    for (h, n) in table.rows() {
        let a = h.alleles();
        *counts.entry((a[locus_a], a[locus_b])).or_default() += n;
    }
    let mut row_alleles: Vec<i32> = counts.keys().map(|k| k.0).collect();
    row_alleles.dedup();
    let mut col_alleles: Vec<i32> = counts.keys().map(|k| k.1).collect();
    col_alleles.sort_unstable();
    col_alleles.dedup();
    let mut cells = vec![vec![0u64; col_alleles.len()]; row_alleles.len()];
    for ((a, b), n) in counts {
        let u = row_alleles.binary_search(&a).expect("row allele present");
        let v = col_alleles
            .binary_search(&b)
            .expect("column allele present");
        cells[u][v] = n;
    }
    Ok(Contingency {
        row_alleles,
        col_alleles,
        cells,
    })
}

/// The `k` most frequent haplotypes, ties broken by haplotype order.
pub fn top_k(table: &CountTable, k: usize) -> Vec<(Haplotype, u64)> {
    let mut rows = table.rows().to_vec();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    rows.truncate(k);
    rows
}

/// Frequencies of alleles `−a_lim..=a_lim` at one locus per snapshot, with
/// everything outside the window pooled into a final "other" column.
#[derive(Clone, Debug, PartialEq)]
pub struct AlleleTrajectory {
    pub locus: usize,
    pub alleles: Vec<i32>,
    /// `(generation, frequencies)`; `None` for an empty (extinct) snapshot.
    /// Each frequency vector has `alleles.len() + 1` entries.
    pub rows: Vec<(usize, Option<Vec<f64>>)>,
}

impl AlleleTrajectory {
    /// Frequency series of one allele in the window.
    pub fn series(&self, allele: i32) -> Vec<(usize, Option<f64>)> {
        let idx = self.alleles.iter().position(|&a| a == allele);
        self.rows
            .iter()
            .map(|(g, f)| (*g, f.as_ref().and_then(|f| idx.map(|i| f[i]))))
            .collect()
    }

    /// CSV with header `generation,allele_-2,...,allele_2,other`; extinct
    /// generations have empty fields.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("generation");
        for a in &self.alleles {
            out.push_str(&format!(",allele_{a}"));
        }
        out.push_str(",other\n");
        for (g, freqs) in &self.rows {
            out.push_str(&g.to_string());
            match freqs {
                Some(f) => f.iter().for_each(|x| out.push_str(&format!(",{x}"))),
                None => (0..=self.alleles.len()).for_each(|_| out.push(',')),
            }
            out.push('\n');
        }
        out
    }
}

pub fn allele_trajectory(
    snapshots: &BTreeMap<usize, CountTable>,
    locus: usize,
    a_lim: u32,
) -> Result<AlleleTrajectory> {
    if snapshots.is_empty() {
        return Err(Error::invalid("no snapshots to summarise"));
    }
    let lim = a_lim as i32;
    let alleles: Vec<i32> = (-lim..=lim).collect();
    let mut rows = Vec::with_capacity(snapshots.len());
    for (&g, table) in snapshots {
        if locus >= table.loci() {
            return Err(Error::invalid(format!(
                "locus index {locus} out of range for a {}-locus table",
                table.loci()
            )));
        }
        let total = table.total();
        if total == 0 {
            rows.push((g, None));
            continue;
        }
        let mut counts = vec![0u64; alleles.len() + 1];
        for (h, n) in table.rows() {
            let a = h.alleles()[locus];
            let slot = if a.abs() <= lim {
                (a + lim) as usize
            } else {
                alleles.len()
            };
            counts[slot] += n;
        }
        let freqs = counts.iter().map(|&c| c as f64 / total as f64).collect();
        rows.push((g, Some(freqs)));
    }
    Ok(AlleleTrajectory {
        locus,
        alleles,
        rows,
    })
}

/// Allele-0 frequency at one locus over the snapshot grid, for one rate.
#[derive(Clone, Debug, PartialEq)]
pub struct RateTrajectory {
    pub mu: f64,
    pub points: Vec<(usize, Option<f64>)>,
}

/// Reruns `base` once per total mutation rate (split evenly up and down on
/// every locus) with the same seed, tracking the frequency of allele 0 at
/// `locus` across `base.save_generations`.
pub fn drift_vs_mu(
    mus: &[f64],
    base: &SimulationConfig,
    locus: usize,
) -> Result<Vec<RateTrajectory>> {
    if base.save_generations.is_empty() {
        return Err(Error::invalid("drift sweep needs snapshot generations"));
    }
    mus.iter()
        .map(|&mu| {
            let mut cfg = base.clone();
            cfg.rates = MutationRates::symmetric(base.loci(), mu)?;
            let result = Simulator::new(cfg)?.run(0)?;
            let trajectory = allele_trajectory(&result.intermediates, locus, 0)?;
            Ok(RateTrajectory {
                mu,
                points: trajectory.series(0),
            })
        })
        .collect()
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let rx = ranks(x);
    let ry = ranks(y);
    pearson(&rx, &ry)
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}
