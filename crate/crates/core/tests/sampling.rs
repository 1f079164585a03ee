mod common;

use std::collections::BTreeMap;

use hapsim::mutation::{sample_config_fallback, ExtendedTable, SimpleTable};
use hapsim::{
    CountTable, GrowthSchedule, Haplotype, MutationConfig, MutationRates, RandomStream,
    SimulationConfig, Simulator,
};

use common::{chi_square_gof, mean_var};

#[test]
fn fallback_matches_extended_table() {
    let rates = MutationRates::new(vec![0.01, 0.03, 0.002], vec![0.02, 0.01, 0.006]).unwrap();
    let simple = SimpleTable::build(&rates, 2).unwrap();
    let extended = ExtendedTable::build(&rates, 2).unwrap();
    let index: BTreeMap<MutationConfig, usize> = extended
        .rows()
        .enumerate()
        .map(|(i, (c, _))| (c, i))
        .collect();
    let probs: Vec<f64> = extended.rows().map(|(_, p)| p / extended.mass()).collect();

    let mut stream = RandomStream::new(31);
    let draws = 1_000_000;
    let mut fallback = vec![0u64; probs.len()];
    let mut direct = vec![0u64; probs.len()];
    for _ in 0..draws {
        fallback[index[&sample_config_fallback(&rates, &simple, &mut stream)]] += 1;
        direct[index[&extended.sample(&mut stream)]] += 1;
    }
    let p_fallback = chi_square_gof(&fallback, &probs);
    let p_direct = chi_square_gof(&direct, &probs);
    assert!(p_fallback > 1e-3, "fallback p={p_fallback}");
    assert!(p_direct > 1e-3, "extended p={p_direct}");
}

/// Given the realised next size `m`, descendants of a haplotype holding a
/// share `p` of the parents are Binomial(m, p).
#[test]
fn descendants_are_conditionally_binomial() {
    let share = 0.2;
    let initial = CountTable::from_rows(
        2,
        vec![
            (Haplotype::from(vec![0, 0]), 20),
            (Haplotype::from(vec![5, 5]), 80),
        ],
    )
    .unwrap();
    let mut config = SimulationConfig::new(
        100,
        1,
        MutationRates::symmetric(2, 0.02).unwrap(),
        GrowthSchedule::constant(1.0).unwrap(),
    )
    .with_seed(12);
    config.initial_table = Some(initial);
    let runs = Simulator::new(config).unwrap().run_many(40_000, 4).unwrap();

    // Family of the [0, 0] founders: alleles within one step of 0.
    let mut bins: BTreeMap<u64, Vec<(u64, u64)>> = BTreeMap::new();
    for r in &runs {
        let m = r.final_size();
        let focal: u64 = r
            .final_haplotypes
            .rows()
            .iter()
            .filter(|(h, _)| h.alleles().iter().all(|a| a.abs() <= 1))
            .map(|(_, n)| n)
            .sum();
        bins.entry(m / 10).or_default().push((m, focal));
    }

    let mut tested = 0;
    for group in bins.values().filter(|g| g.len() >= 2000) {
        let z: Vec<f64> = group
            .iter()
            .map(|&(m, x)| {
                (x as f64 - m as f64 * share) / (m as f64 * share * (1.0 - share)).sqrt()
            })
            .collect();
        let (mean, var) = mean_var(&z);
        let n = z.len() as f64;
        let level = 4.5;
        assert!(mean.abs() < level / n.sqrt(), "bin mean {mean}");
        assert!(
            (var - 1.0).abs() < level * (2.0 / n).sqrt(),
            "bin variance {var}"
        );
        tested += 1;
    }
    assert!(tested >= 3, "only {tested} bins populated");
}
