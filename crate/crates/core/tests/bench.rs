use hapsim::bench::{bench_cell, BenchSettings};

#[test]
fn small_grid_cell_is_faster_than_naive() {
    let settings = BenchSettings {
        replicates: 10,
        ..Default::default()
    };
    let cell = bench_cell(1000, 100, 0.001, &settings).unwrap();
    assert!(cell.speedup >= 20.0, "speed-up {:.1}", cell.speedup);
    assert_eq!(cell.sizes_agree, Some(true));
}
