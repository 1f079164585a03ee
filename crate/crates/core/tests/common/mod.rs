#![allow(dead_code)]

use std::collections::BTreeMap;
use std::hash::Hash;

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Two-sample chi-square homogeneity test on categorical outcomes. Cells
/// whose combined count is below `min_cell` are pooled into one. Returns
/// the p-value.
pub fn two_sample_chi_square<K: Ord + Hash + Clone>(a: &[K], b: &[K], min_cell: u64) -> f64 {
    let mut cells: BTreeMap<K, (u64, u64)> = BTreeMap::new();
    for k in a {
        cells.entry(k.clone()).or_default().0 += 1;
    }
    for k in b {
        cells.entry(k.clone()).or_default().1 += 1;
    }
    let mut kept: Vec<(u64, u64)> = Vec::new();
    let mut pooled = (0u64, 0u64);
    for (x, y) in cells.into_values() {
        if x + y < min_cell {
            pooled.0 += x;
            pooled.1 += y;
        } else {
            kept.push((x, y));
        }
    }
    if pooled.0 + pooled.1 > 0 {
        kept.push(pooled);
    }
    chi_square_2xk(&kept)
}

/// p-value of the chi-square test of homogeneity for a 2×k table.
pub fn chi_square_2xk(cells: &[(u64, u64)]) -> f64 {
    let na: u64 = cells.iter().map(|c| c.0).sum();
    let nb: u64 = cells.iter().map(|c| c.1).sum();
    let n = (na + nb) as f64;
    let cells: Vec<_> = cells.iter().filter(|c| c.0 + c.1 > 0).collect();
    if cells.len() < 2 {
        return 1.0;
    }
    let mut stat = 0.0;
    for &&(x, y) in &cells {
        let col = (x + y) as f64;
        let ea = col * na as f64 / n;
        let eb = col * nb as f64 / n;
        stat += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
    }
    ChiSquared::new((cells.len() - 1) as f64).unwrap().sf(stat)
}

/// p-value of a goodness-of-fit chi-square against expected probabilities.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = observed.iter().sum();
    let mut stat = 0.0;
    let mut df = 0;
    for (&o, &p) in observed.iter().zip(probs) {
        if p > 0.0 {
            let e = p * n as f64;
            stat += (o as f64 - e).powi(2) / e;
            df += 1;
        } else {
            assert_eq!(o, 0, "observed a zero-probability cell");
        }
    }
    ChiSquared::new((df - 1) as f64).unwrap().sf(stat)
}

pub fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}

fn two_sided(z: f64) -> f64 {
    2.0 * Normal::new(0.0, 1.0).unwrap().sf(z.abs())
}

/// Large-sample z test for equal means. Returns the p-value.
pub fn mean_test(a: &[f64], b: &[f64]) -> f64 {
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let se = (va / a.len() as f64 + vb / b.len() as f64).sqrt();
    if se == 0.0 {
        return if ma == mb { 1.0 } else { 0.0 };
    }
    two_sided((ma - mb) / se)
}

/// Large-sample z test for equal variances, comparing the means of squared
/// deviations from each sample's own mean.
pub fn variance_test(a: &[f64], b: &[f64]) -> f64 {
    let sq = |x: &[f64]| {
        let (m, _) = mean_var(x);
        x.iter().map(|v| (v - m).powi(2)).collect::<Vec<_>>()
    };
    mean_test(&sq(a), &sq(b))
}
