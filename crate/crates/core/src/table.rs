//! Sorted haplotype count tables and their CSV form.
//!
//! Header `Locus1,...,LocusR,N`, one row per haplotype in lexicographic
//! order.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::store::{Haplotype, KdCountTree};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountTable {
    loci: usize,
    rows: Vec<(Haplotype, u64)>,
}

impl CountTable {
    pub fn empty(loci: usize) -> Self {
        Self {
            loci,
            rows: Vec::new(),
        }
    }

    /// Builds a table from arbitrary rows. Rows must have `loci` alleles,
    /// positive counts, and no repeated haplotype.
    pub fn from_rows(loci: usize, mut rows: Vec<(Haplotype, u64)>) -> Result<Self> {
        for (h, n) in &rows {
            if h.loci() != loci {
                return Err(Error::invalid(format!(
                    "haplotype {h:?} has {} loci, table expects {loci}",
                    h.loci()
                )));
            }
            if *n == 0 {
                return Err(Error::invalid(format!("haplotype {h:?} has zero count")));
            }
        }
        rows.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid(format!(
                "haplotype {:?} listed twice",
                w[0].0
            )));
        }
        Ok(Self { loci, rows })
    }

    pub fn monomorphic(h: Haplotype, count: u64) -> Self {
        let loci = h.loci();
        let rows = if count > 0 {
            vec![(h, count)]
        } else {
            Vec::new()
        };
        Self { loci, rows }
    }

    pub fn from_tree(tree: &KdCountTree) -> Self {
        Self {
            loci: tree.loci(),
            rows: tree.collect_sorted(),
        }
    }

    pub fn to_tree(&self) -> KdCountTree {
        let mut tree = KdCountTree::with_capacity(self.loci, self.rows.len());
        for (h, n) in &self.rows {
            tree.add(h.alleles(), *n);
        }
        tree
    }

    pub fn loci(&self) -> usize {
        self.loci
    }

    pub fn rows(&self) -> &[(Haplotype, u64)] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.rows.iter().map(|r| r.1).sum()
    }

    pub fn count_of(&self, h: &[i32]) -> u64 {
        self.rows
            .binary_search_by(|(x, _)| x.alleles().cmp(h))
            .map(|i| self.rows[i].1)
            .unwrap_or(0)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for j in 1..=self.loci {
            let _ = write!(out, "Locus{j},");
        }
        out.push_str("N\n");
        for (h, n) in &self.rows {
            for a in h.alleles() {
                let _ = write!(out, "{a},");
            }
            let _ = writeln!(out, "{n}");
        }
        out
    }

    pub fn parse_csv(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| err(1, "missing header".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let loci = cols.len().saturating_sub(1);
        let header_ok = loci >= 1
            && cols.last() == Some(&"N")
            && cols[..loci]
                .iter()
                .enumerate()
                .all(|(j, c)| *c == format!("Locus{}", j + 1));
        if !header_ok {
            return Err(err(
                1,
                format!("expected header Locus1,...,LocusR,N, got `{header}`"),
            ));
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != loci + 1 {
                return Err(err(
                    i + 1,
                    format!("expected {} fields, got {}", loci + 1, fields.len()),
                ));
            }
            let alleles = fields[..loci]
                .iter()
                .map(|f| {
                    f.parse::<i32>()
                        .map_err(|_| err(i + 1, format!("bad allele `{f}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            let n: u64 = fields[loci]
                .parse()
                .map_err(|_| err(i + 1, format!("bad count `{}`", fields[loci])))?;
            if n == 0 {
                return Err(err(i + 1, "zero count".into()));
            }
            rows.push((Haplotype::from(alleles), n));
        }
        Self::from_rows(loci, rows).map_err(|e| err(0, e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text, path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}
