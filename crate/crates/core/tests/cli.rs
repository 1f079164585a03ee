use std::path::Path;
use std::process::{Command, Output};

fn hapsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hapsim"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn simulate_into(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["simulate", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    hapsim(&args)
}

#[test]
fn simulate_writes_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = simulate_into(
        &out,
        &[
            "--k",
            "2000",
            "--g",
            "50",
            "--r",
            "3",
            "--mu",
            "0.003",
            "--growth",
            "constant:1.001",
            "--seed",
            "1",
            "--save",
            "10:50:10",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("replicate 0: final size"));

    let sizes = std::fs::read_to_string(out.join("sizes.csv")).unwrap();
    assert_eq!(sizes.lines().next(), Some("generation,value"));
    assert_eq!(sizes.lines().count(), 52);
    let table = std::fs::read_to_string(out.join("haplotypes.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("Locus1,Locus2,Locus3,N"));
    let last_size: u64 = sizes
        .lines()
        .last()
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    let table_total: u64 = table
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(last_size, table_total);

    let index = std::fs::read_to_string(out.join("snapshots/index.csv")).unwrap();
    assert_eq!(index.lines().count(), 6);
    assert!(out.join("snapshots/gen_50.csv").exists());

    let manifest = std::fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("k=2000"));
    assert!(manifest.contains("growth=constant:1.001"));
}

#[test]
fn empty_start_reports_extinction() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = simulate_into(&out, &["--k", "0", "--g", "10", "--r", "2", "--mu", "0.01"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("extinct_at=1"), "{}", stdout(&o));
    let table = std::fs::read_to_string(out.join("haplotypes.csv")).unwrap();
    assert_eq!(table, "Locus1,Locus2,N\n");
}

#[test]
fn replicates_get_subdirectories() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = simulate_into(
        &out,
        &[
            "--k",
            "100",
            "--g",
            "5",
            "--r",
            "2",
            "--mu",
            "0.01",
            "--replicates",
            "3",
            "--jobs",
            "2",
        ],
    );
    assert!(o.status.success());
    for i in 0..3 {
        assert!(out.join(format!("rep_{i}/haplotypes.csv")).exists());
    }
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn naive_engine_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = simulate_into(
        &out,
        &[
            "--k", "50", "--g", "3", "--r", "2", "--mu", "0.05", "--engine", "naive",
        ],
    );
    assert!(o.status.success());
    assert!(std::fs::read_to_string(out.join("manifest.txt"))
        .unwrap()
        .contains("engine=naive"));
}

#[test]
fn stats_subcommands() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = simulate_into(
        &out,
        &[
            "--k",
            "5000",
            "--g",
            "200",
            "--r",
            "3",
            "--mu",
            "0.01",
            "--seed",
            "3",
            "--save",
            "50:200:50",
        ],
    );
    assert!(o.status.success());
    let table = out.join("haplotypes.csv");

    let top = hapsim(&["stats", "top", "--k", "10", table.to_str().unwrap()]);
    assert!(top.status.success());
    let text = stdout(&top);
    let counts: Vec<u64> = text
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(counts.len(), 10);
    assert!(counts.windows(2).all(|w| w[0] >= w[1]));

    let xtab = hapsim(&[
        "stats",
        "xtab",
        "--a",
        "1",
        "--b",
        "2",
        table.to_str().unwrap(),
    ]);
    assert!(xtab.status.success());
    let text = stdout(&xtab);
    let grand: u64 = text
        .lines()
        .last()
        .unwrap()
        .split_whitespace()
        .last()
        .unwrap()
        .parse()
        .unwrap();
    let sizes = std::fs::read_to_string(out.join("sizes.csv")).unwrap();
    let last: u64 = sizes
        .lines()
        .last()
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(grand, last);

    let drift = hapsim(&[
        "stats",
        "drift",
        "--locus",
        "1",
        "--alim",
        "2",
        out.join("snapshots").to_str().unwrap(),
    ]);
    assert!(drift.status.success());
    let text = stdout(&drift);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 1 + 2 * 2 + 2);
    for line in lines {
        let sum: f64 = line
            .split(',')
            .skip(1)
            .map(|x| x.parse::<f64>().unwrap())
            .sum();
        assert!((sum - 1.0).abs() < 1e-9, "{line}");
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let out = out.to_str().unwrap();

    let usage = hapsim(&["simulate", "--k", "ten"]);
    assert_eq!(usage.status.code(), Some(2));
    let conflicting = hapsim(&[
        "simulate", "--mu", "0.1", "--delta", "0.1", "--omega", "0.1", "--out", out,
    ]);
    assert_eq!(conflicting.status.code(), Some(2));

    let missing = hapsim(&[
        "stats",
        "top",
        tmp.path().join("nope.csv").to_str().unwrap(),
    ]);
    assert_eq!(missing.status.code(), Some(3));

    let bad_rate = hapsim(&[
        "simulate", "--k", "10", "--g", "2", "--r", "2", "--mu", "1.5", "--out", out,
    ]);
    assert_eq!(bad_rate.status.code(), Some(4));
    let bad_growth = hapsim(&[
        "simulate",
        "--k",
        "10",
        "--g",
        "2",
        "--r",
        "2",
        "--mu",
        "0.1",
        "--growth",
        "constant:-1",
        "--out",
        out,
    ]);
    assert_eq!(bad_growth.status.code(), Some(4));
}

#[test]
fn parse_errors_name_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let table = tmp.path().join("t.csv");
    std::fs::write(&table, "Locus1,Locus2,N\n0,0,5\n1,x,2\n").unwrap();
    let o = hapsim(&["stats", "top", table.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn init_table_and_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let init = tmp.path().join("start.csv");
    std::fs::write(&init, "Locus1,Locus2,N\n0,0,30\n4,4,10\n").unwrap();
    let config = tmp.path().join("run.cfg");
    std::fs::write(
        &config,
        "# a comment\ng=3\nr=2\nmu=0.01\nseed=5\ninit=start.csv\n",
    )
    .unwrap();
    let out = tmp.path().join("run");
    let o = hapsim(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--g",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sizes = std::fs::read_to_string(out.join("sizes.csv")).unwrap();
    assert_eq!(sizes.lines().nth(1), Some("0,40"));
    assert_eq!(sizes.lines().count(), 6);
    assert!(out.join("initial.csv").exists());
}

#[test]
fn bench_reports_cells() {
    let o = hapsim(&[
        "bench",
        "--k",
        "100",
        "--g",
        "10",
        "--mu",
        "0.003",
        "--replicates",
        "2",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("100,10,0.003,"));
}
