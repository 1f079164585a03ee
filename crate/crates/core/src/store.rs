//! Haplotype count store.
//!
//! A generation is kept as a k-d tree over points of `Z^r`, each node carrying
//! the number of individuals with that haplotype. Trees are built fresh for
//! every generation and are never rebalanced; insertion order is effectively
//! random so expected depth stays logarithmic.

use std::fmt;

use crate::error::{Error, Result};

/// Allele repeat values at each locus.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Haplotype(Box<[i32]>);

impl Haplotype {
    pub fn new(alleles: impl Into<Box<[i32]>>) -> Self {
        Self(alleles.into())
    }

    /// The all-zero haplotype on `loci` loci.
    pub fn origin(loci: usize) -> Self {
        Self(vec![0; loci].into_boxed_slice())
    }

    pub fn alleles(&self) -> &[i32] {
        &self.0
    }

    pub fn loci(&self) -> usize {
        self.0.len()
    }
}

impl From<Vec<i32>> for Haplotype {
    fn from(v: Vec<i32>) -> Self {
        Self(v.into_boxed_slice())
    }
}

impl From<&[i32]> for Haplotype {
    fn from(v: &[i32]) -> Self {
        Self(v.into())
    }
}

impl AsRef<[i32]> for Haplotype {
    fn as_ref(&self) -> &[i32] {
        &self.0
    }
}

impl fmt::Debug for Haplotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

const NIL: u32 = u32::MAX;

#[inline]
fn same(a: &[i32], b: &[i32]) -> bool {
    a.iter().zip(b).all(|(x, y)| x == y)
}

/// k-d tree mapping haplotypes to positive counts.
///
/// Nodes live in flat arrays indexed by insertion order; node `i` stores its
/// point at `points[i * loci..(i + 1) * loci]`. The split dimension of a node
/// is its depth modulo the locus count, and points whose split coordinate
/// equals the node's descend to the right.
#[derive(Clone, Debug)]
pub struct KdCountTree {
    loci: usize,
    points: Vec<i32>,
    counts: Vec<u64>,
    left: Vec<u32>,
    right: Vec<u32>,
    total: u64,
}

impl KdCountTree {
    pub fn new(loci: usize) -> Self {
        assert!(loci > 0, "a haplotype has at least one locus");
        Self {
            loci,
            points: Vec::new(),
            counts: Vec::new(),
            left: Vec::new(),
            right: Vec::new(),
            total: 0,
        }
    }

    pub fn with_capacity(loci: usize, nodes: usize) -> Self {
        let mut tree = Self::new(loci);
        tree.points.reserve(nodes * loci);
        tree.counts.reserve(nodes);
        tree.left.reserve(nodes);
        tree.right.reserve(nodes);
        tree
    }

    pub fn loci(&self) -> usize {
        self.loci
    }

    fn check(&self, h: &[i32]) -> Result<()> {
        if h.len() != self.loci {
            return Err(Error::invalid(format!(
                "haplotype has {} loci, store expects {}",
                h.len(),
                self.loci
            )));
        }
        Ok(())
    }

    /// Adds `delta` copies of `h`.
    pub fn insert_or_add(&mut self, h: &[i32], delta: u64) -> Result<()> {
        self.check(h)?;
        if delta == 0 {
            return Err(Error::invalid("count increment must be positive"));
        }
        self.add(h, delta);
        Ok(())
    }

    /// Unchecked variant of [`insert_or_add`](Self::insert_or_add) for the
    /// engine's hot loop.
    pub(crate) fn add(&mut self, h: &[i32], delta: u64) {
        debug_assert_eq!(h.len(), self.loci);
        debug_assert!(delta > 0);
        self.total += delta;
        if self.counts.is_empty() {
            self.push_node(h, delta);
            return;
        }
        let mut node = 0usize;
        let mut dim = 0usize;
        loop {
            let p = self.point(node);
            let go_left = h[dim] < p[dim];
            if h[dim] == p[dim] && same(p, h) {
                self.counts[node] += delta;
                return;
            }
            let child = if go_left {
                self.left[node]
            } else {
                self.right[node]
            };
            if child == NIL {
                let new = self.push_node(h, delta);
                if go_left {
                    self.left[node] = new;
                } else {
                    self.right[node] = new;
                }
                return;
            }
            node = child as usize;
            dim += 1;
            if dim == self.loci {
                dim = 0;
            }
        }
    }

    fn push_node(&mut self, h: &[i32], count: u64) -> u32 {
        let idx = self.counts.len();
        assert!(idx < NIL as usize, "k-d tree node capacity exhausted");
        self.points.extend_from_slice(h);
        self.counts.push(count);
        self.left.push(NIL);
        self.right.push(NIL);
        idx as u32
    }

    #[inline]
    fn point(&self, node: usize) -> &[i32] {
        &self.points[node * self.loci..(node + 1) * self.loci]
    }

    /// Stored count of `h`, zero when absent.
    pub fn lookup(&self, h: &[i32]) -> Result<u64> {
        self.check(h)?;
        if self.counts.is_empty() {
            return Ok(0);
        }
        let mut node = 0usize;
        let mut dim = 0usize;
        loop {
            let p = self.point(node);
            if h[dim] == p[dim] && same(p, h) {
                return Ok(self.counts[node]);
            }
            let child = if h[dim] < p[dim] {
                self.left[node]
            } else {
                self.right[node]
            };
            if child == NIL {
                return Ok(0);
            }
            node = child as usize;
            dim = (dim + 1) % self.loci;
        }
    }

    /// `(distinct haplotypes, total individuals)`.
    pub fn totals(&self) -> (usize, u64) {
        (self.counts.len(), self.total)
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Entries in node (insertion) order. Deterministic for a given
    /// insertion sequence.
    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&[i32], u64)> + '_ {
        self.points
            .chunks_exact(self.loci)
            .zip(self.counts.iter().copied())
    }

    /// Node `idx` in insertion order.
    pub fn entry(&self, idx: usize) -> (&[i32], u64) {
        (self.point(idx), self.counts[idx])
    }

    /// Entries in lexicographic haplotype order.
    pub fn collect_sorted(&self) -> Vec<(Haplotype, u64)> {
        let mut rows: Vec<(Haplotype, u64)> =
            self.iter().map(|(h, n)| (Haplotype::from(h), n)).collect();
        rows.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        rows
    }

    /// Depth of every node (root at depth 0), in node order.
    pub fn depths(&self) -> Vec<u32> {
        let mut depth = vec![0u32; self.counts.len()];
        // Children always have larger indices than their parents.
        for node in 0..self.counts.len() {
            for child in [self.left[node], self.right[node]] {
                if child != NIL {
                    depth[child as usize] = depth[node] + 1;
                }
            }
        }
        depth
    }

    pub fn mean_depth(&self) -> f64 {
        if self.counts.is_empty() {
            return 0.0;
        }
        let d = self.depths();
        d.iter().map(|&x| x as f64).sum::<f64>() / d.len() as f64
    }

    /// Checks the ordering invariant of every node. Used by tests.
    pub fn validate(&self) -> bool {
        let mut stack = vec![(0usize, 0usize)];
        if self.counts.is_empty() {
            return self.total == 0;
        }
        let mut seen = 0;
        while let Some((node, dim)) = stack.pop() {
            seen += 1;
            if self.counts[node] == 0 {
                return false;
            }
            let split = self.point(node)[dim];
            let next = (dim + 1) % self.loci;
            if self.left[node] != NIL {
                let l = self.left[node] as usize;
                if !self.subtree(l).all(|n| self.point(n)[dim] < split) {
                    return false;
                }
                stack.push((l, next));
            }
            if self.right[node] != NIL {
                let r = self.right[node] as usize;
                if !self.subtree(r).all(|n| self.point(n)[dim] >= split) {
                    return false;
                }
                stack.push((r, next));
            }
        }
        seen == self.counts.len() && self.counts.iter().sum::<u64>() == self.total
    }

    fn subtree(&self, root: usize) -> impl Iterator<Item = usize> + '_ {
        let mut stack = vec![root];
        std::iter::from_fn(move || {
            let n = stack.pop()?;
            for c in [self.left[n], self.right[n]] {
                if c != NIL {
                    stack.push(c as usize);
                }
            }
            Some(n)
        })
    }
}
