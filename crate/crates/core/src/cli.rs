//! Command-line front end: `simulate`, `stats` and `bench`.
//!
//! Every `simulate` run writes a `manifest.txt` of `key=value` lines next to
//! its outputs. The same format is accepted by `--config`, so
//! `hapsim simulate --config OLD/manifest.txt --out NEW` reproduces a run.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{bench_cell, format_report, loci_sweep, BenchSettings};
use crate::engine::{run_parallel, SimulationConfig, SimulationResult, Simulator};
use crate::error::{Error, Result};
use crate::growth::{write_custom_rates, GrowthSchedule, CUSTOM_RATES_FILE};
use crate::mutation::{MutationRates, DEFAULT_TABLE_CAP};
use crate::oracle::naive_simulate_replicate;
use crate::stats::{allele_trajectory, contingency, top_k};
use crate::store::Haplotype;
use crate::table::CountTable;

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const INITIAL_TABLE_FILE: &str = "initial.csv";

#[derive(Debug, Parser)]
#[command(
    name = "hapsim",
    version,
    about = "Forward-time haplotype-count Fisher-Wright simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a simulation and write its tables.
    Simulate(SimulateArgs),
    /// Summarise haplotype tables.
    #[command(subcommand)]
    Stats(StatsCommand),
    /// Time the haplotype engine against the individual-based simulator.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EngineKind {
    Fast,
    Naive,
}

impl EngineKind {
    fn name(self) -> &'static str {
        match self {
            EngineKind::Fast => "fast",
            EngineKind::Naive => "naive",
        }
    }
}

impl FromStr for EngineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(EngineKind::Fast),
            "naive" => Ok(EngineKind::Naive),
            _ => Err(Error::Usage(format!("unknown engine `{s}`"))),
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct SimulateArgs {
    /// key=value file accepting any of the flags below; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Initial population size.
    #[arg(long)]
    pub k: Option<u64>,
    /// Generations to evolve.
    #[arg(long)]
    pub g: Option<usize>,
    /// Number of loci.
    #[arg(long)]
    pub r: Option<usize>,
    /// Per-locus mutation rate, split evenly between the two directions.
    #[arg(long, conflicts_with_all = ["delta", "omega"])]
    pub mu: Option<f64>,
    /// Comma-separated downward rates, one per locus.
    #[arg(long, requires = "omega")]
    pub delta: Option<String>,
    /// Comma-separated upward rates, one per locus.
    #[arg(long, requires = "delta")]
    pub omega: Option<String>,
    /// constant:A | piecewise:beta=B,t=T,alpha=A | logistic:alpha=A,nmax=M | custom:@FILE
    #[arg(long)]
    pub growth: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Generations to snapshot: indices and A:B:S ranges, comma separated.
    #[arg(long)]
    pub save: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub engine: Option<EngineKind>,
    #[arg(long)]
    pub replicates: Option<u64>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub table_cap: Option<usize>,
    /// Initial population table (same CSV layout as output tables).
    #[arg(long)]
    pub init: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    /// Most frequent haplotypes.
    Top {
        #[arg(long, default_value_t = 10)]
        k: usize,
        table: PathBuf,
    },
    /// Contingency table of two loci (1-based).
    Xtab {
        #[arg(long)]
        a: usize,
        #[arg(long)]
        b: usize,
        table: PathBuf,
    },
    /// Allele frequencies at one locus (1-based) across a snapshot directory.
    Drift {
        #[arg(long)]
        locus: usize,
        #[arg(long, default_value_t = 2)]
        alim: u32,
        dir: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated initial sizes.
    #[arg(long, default_value = "1000,5000")]
    pub k: String,
    /// Comma-separated generation counts.
    #[arg(long, default_value = "100,200")]
    pub g: String,
    /// Comma-separated mutation rates.
    #[arg(long, default_value = "0.001,0.003")]
    pub mu: String,
    #[arg(long, default_value_t = 3)]
    pub r: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 10)]
    pub replicates: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Seconds allowed per naive run.
    #[arg(long)]
    pub timeout: Option<f64>,
    /// Engine-only timing over locus counts `A:B` instead of the grid.
    #[arg(long)]
    pub loci_sweep: Option<String>,
}

/// Runs the CLI and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("hapsim: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli, out: &mut impl Write) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(&args, out),
        Command::Stats(cmd) => cmd_stats(&cmd, out),
        Command::Bench(args) => cmd_bench(&args, out),
    }
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

/// Parses `1,5,10:100:10` (ranges inclusive, step optional).
pub fn parse_genlist(s: &str) -> Result<Vec<usize>> {
    let bad = |part: &str| Error::Usage(format!("bad generation list entry `{part}`"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let nums = part
            .split(':')
            .map(|x| x.trim().parse::<usize>().map_err(|_| bad(part)))
            .collect::<Result<Vec<_>>>()?;
        match nums[..] {
            [i] => out.push(i),
            [a, b] if a <= b => out.extend(a..=b),
            [a, b, step] if a <= b && step > 0 => out.extend((a..=b).step_by(step)),
            _ => return Err(bad(part)),
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse()
                .map_err(|_| Error::Usage(format!("bad {what} value `{p}`")))
        })
        .collect()
}

/// Reads `key=value` lines; `#` starts a comment.
pub fn read_key_values(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: format!("expected key=value, got `{line}`"),
        })?;
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

/// Flag values merged with a config file.
struct Merged<'a> {
    file: BTreeMap<String, String>,
    base: Option<&'a Path>,
}

impl Merged<'_> {
    fn get<T: FromStr>(&self, cli: Option<T>, key: &str) -> Result<Option<T>> {
        if cli.is_some() {
            return Ok(cli);
        }
        match self.file.get(key) {
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Usage(format!("bad value `{v}` for `{key}` in config file"))),
            None => Ok(None),
        }
    }

    fn raw(&self, cli: Option<&String>, key: &str) -> Option<String> {
        cli.cloned().or_else(|| self.file.get(key).cloned())
    }

    /// Path values from the file are relative to the file's directory.
    fn path(&self, cli: Option<&PathBuf>, key: &str) -> Option<PathBuf> {
        cli.cloned().or_else(|| {
            self.file.get(key).map(|v| match self.base {
                Some(base) => base.join(v),
                None => PathBuf::from(v),
            })
        })
    }
}

/// Fully resolved `simulate` invocation.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub config: SimulationConfig,
    pub out: PathBuf,
    pub engine: EngineKind,
    pub replicates: u64,
    pub jobs: usize,
}

impl RunManifest {
    pub fn resolve(args: &SimulateArgs) -> Result<Self> {
        let (file, base) = match &args.config {
            Some(path) => (read_key_values(path)?, path.parent().map(Path::to_path_buf)),
            None => (BTreeMap::new(), None),
        };
        let m = Merged {
            file,
            base: base.as_deref(),
        };
        let init = match m.path(args.init.as_ref(), "init") {
            Some(p) => Some(CountTable::read(&p)?),
            None => None,
        };
        let mu: Option<f64> = m.get(args.mu, "mu")?;
        let delta = m.raw(args.delta.as_ref(), "delta");
        let omega = m.raw(args.omega.as_ref(), "omega");
        let r: Option<usize> = m.get(args.r, "r")?;
        let rates = match (mu, delta, omega) {
            (_, Some(d), Some(o)) if args.mu.is_none() => {
                let rates = MutationRates::new(parse_list(&d, "delta")?, parse_list(&o, "omega")?)?;
                if r.is_some_and(|r| r != rates.loci()) {
                    return Err(Error::Usage(
                        "--r disagrees with the length of --delta/--omega".into(),
                    ));
                }
                rates
            }
            (Some(mu), _, _) => {
                let r = r
                    .or(init.as_ref().map(CountTable::loci))
                    .ok_or_else(|| Error::Usage("--r is required with --mu".into()))?;
                MutationRates::symmetric(r, mu)?
            }
            _ => return Err(Error::Usage("give --mu or both --delta and --omega".into())),
        };
        let k: Option<u64> = m.get(args.k, "k")?;
        let initial_size = match (&init, k) {
            (Some(t), Some(k)) if k != t.total() => {
                return Err(Error::Usage(format!(
                    "--k {k} disagrees with the initial table total {}",
                    t.total()
                )))
            }
            (Some(t), _) => t.total(),
            (None, Some(k)) => k,
            (None, None) => return Err(Error::Usage("--k is required".into())),
        };
        let generations: usize = m
            .get(args.g, "g")?
            .ok_or_else(|| Error::Usage("--g is required".into()))?;
        let schedule = match m.raw(args.growth.as_ref(), "growth") {
            Some(spec) => {
                // custom files named in the config file resolve against it
                let from_file = args.growth.is_none();
                GrowthSchedule::parse_in(&spec, if from_file { m.base } else { None })?
            }
            None => GrowthSchedule::Constant { alpha: 1.0 },
        };
        let save = match m.raw(args.save.as_ref(), "save") {
            Some(s) => parse_genlist(&s)?,
            None => Vec::new(),
        };
        let out = args
            .out
            .clone()
            .or_else(|| m.file.get("out").map(PathBuf::from))
            .ok_or_else(|| Error::Usage("--out is required".into()))?;
        let loci = rates.loci();
        let config = SimulationConfig {
            initial_size,
            generations,
            rates,
            schedule,
            save_generations: save,
            seed: m.get(args.seed, "seed")?.unwrap_or(1),
            initial_haplotype: Haplotype::origin(loci),
            initial_table: init,
            table_cap: m
                .get(args.table_cap, "table-cap")?
                .unwrap_or(DEFAULT_TABLE_CAP),
        };
        config.validate()?;
        let replicates = m.get(args.replicates, "replicates")?.unwrap_or(1);
        if replicates == 0 {
            return Err(Error::Usage("--replicates must be at least 1".into()));
        }
        Ok(Self {
            config,
            out,
            engine: m.get(args.engine, "engine")?.unwrap_or(EngineKind::Fast),
            replicates,
            jobs: m.get(args.jobs, "jobs")?.unwrap_or(1).max(1),
        })
    }

    /// Manifest text. Everything but the `#` lines is reproducible input.
    pub fn render(&self) -> String {
        let c = &self.config;
        let join = |xs: &[f64]| xs.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let created = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        let mut s = String::new();
        s.push_str("# hapsim run manifest\n");
        s.push_str(&format!("# version={}\n", env!("CARGO_PKG_VERSION")));
        s.push_str(&format!("# created={created}\n"));
        if c.schedule.is_approximate() {
            s.push_str("# expected_sizes=approximate (deterministic logistic recursion)\n");
        }
        s.push_str(&format!("k={}\n", c.initial_population().total()));
        s.push_str(&format!("g={}\n", c.generations));
        s.push_str(&format!("r={}\n", c.loci()));
        s.push_str(&format!("delta={}\n", join(c.rates.down())));
        s.push_str(&format!("omega={}\n", join(c.rates.up())));
        s.push_str(&format!("growth={}\n", c.schedule));
        s.push_str(&format!("seed={}\n", c.seed));
        let save: Vec<String> = c.save_generations.iter().map(usize::to_string).collect();
        s.push_str(&format!("save={}\n", save.join(",")));
        s.push_str(&format!("engine={}\n", self.engine.name()));
        s.push_str(&format!("replicates={}\n", self.replicates));
        s.push_str(&format!("jobs={}\n", self.jobs));
        s.push_str(&format!("table-cap={}\n", c.table_cap));
        if c.initial_table.is_some() {
            s.push_str(&format!("init={INITIAL_TABLE_FILE}\n"));
        }
        s
    }
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn series_csv<T: ToString>(values: &[T]) -> String {
    let mut s = String::from("generation,value\n");
    for (i, v) in values.iter().enumerate() {
        s.push_str(&format!("{i},{}\n", v.to_string()));
    }
    s
}

/// Writes one replicate's tables under `dir`.
pub fn write_result(result: &SimulationResult, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    write_file(&dir.join("sizes.csv"), &series_csv(&result.sizes))?;
    write_file(
        &dir.join("expected_sizes.csv"),
        &series_csv(&result.expected_sizes),
    )?;
    result.final_haplotypes.write(&dir.join("haplotypes.csv"))?;
    if !result.intermediates.is_empty() {
        let snap_dir = dir.join("snapshots");
        create_dir(&snap_dir)?;
        let mut index = String::from("generation,file,size\n");
        for (g, table) in &result.intermediates {
            let name = format!("gen_{g}.csv");
            table.write(&snap_dir.join(&name))?;
            index.push_str(&format!("{g},{name},{}\n", table.total()));
        }
        write_file(&snap_dir.join("index.csv"), &index)?;
    }
    Ok(())
}

pub fn cmd_simulate(args: &SimulateArgs, out: &mut impl Write) -> Result<()> {
    let manifest = RunManifest::resolve(args)?;
    let dir = &manifest.out;
    create_dir(dir)?;
    if let GrowthSchedule::Custom(rates) = &manifest.config.schedule {
        write_custom_rates(rates, &dir.join(CUSTOM_RATES_FILE))?;
    }
    if let Some(t) = &manifest.config.initial_table {
        t.write(&dir.join(INITIAL_TABLE_FILE))?;
    }
    write_file(&dir.join(MANIFEST_FILE), &manifest.render())?;

    let results = match manifest.engine {
        EngineKind::Fast => {
            let sim = Simulator::new(manifest.config.clone())?;
            sim.run_many(manifest.replicates, manifest.jobs)?
        }
        EngineKind::Naive => run_parallel(manifest.replicates, manifest.jobs, |rep| {
            naive_simulate_replicate(&manifest.config, rep, None)
        })?,
    };
    for result in &results {
        let target = if manifest.replicates == 1 {
            dir.clone()
        } else {
            dir.join(format!("rep_{}", result.replicate))
        };
        write_result(result, &target)?;
        if !result.clamped_generations.is_empty() {
            eprintln!(
                "warning: replicate {}: growth rate floored in {} generation(s), first at {}",
                result.replicate,
                result.clamped_generations.len(),
                result.clamped_generations[0]
            );
        }
        let mut line = format!(
            "replicate {}: final size {}, distinct haplotypes {}",
            result.replicate,
            result.final_size(),
            result.final_haplotypes.len()
        );
        if let Some(g) = result.extinct_at {
            line.push_str(&format!(", extinct_at={g}"));
        }
        writeln!(out, "{line}").map_err(stdout_err)?;
    }
    Ok(())
}

/// Loads `gen_<i>.csv` tables from a snapshot directory.
pub fn read_snapshots(dir: &Path) -> Result<BTreeMap<usize, CountTable>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut snaps = BTreeMap::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let Some(g) = name
            .strip_prefix("gen_")
            .and_then(|s| s.strip_suffix(".csv"))
            .and_then(|s| s.parse::<usize>().ok())
        else {
            continue;
        };
        snaps.insert(g, CountTable::read(&entry.path())?);
    }
    if snaps.is_empty() {
        return Err(Error::Usage(format!(
            "no gen_<i>.csv files in {}",
            dir.display()
        )));
    }
    Ok(snaps)
}

fn one_based(i: usize, what: &str) -> Result<usize> {
    i.checked_sub(1)
        .ok_or_else(|| Error::Usage(format!("{what} indices start at 1")))
}

pub fn cmd_stats(cmd: &StatsCommand, out: &mut impl Write) -> Result<()> {
    match cmd {
        StatsCommand::Top { k, table } => {
            if *k == 0 {
                return Err(Error::Usage("--k must be at least 1".into()));
            }
            let t = CountTable::read(table)?;
            let mut text: String = (1..=t.loci()).map(|j| format!("Locus{j},")).collect();
            text.push_str("N\n");
            for (h, n) in top_k(&t, *k) {
                let alleles: Vec<String> = h.alleles().iter().map(i32::to_string).collect();
                text.push_str(&format!("{},{n}\n", alleles.join(",")));
            }
            out.write_all(text.as_bytes()).map_err(stdout_err)
        }
        StatsCommand::Xtab { a, b, table } => {
            let t = CountTable::read(table)?;
            let c = contingency(&t, one_based(*a, "locus")?, one_based(*b, "locus")?)?;
            write!(out, "{c}").map_err(stdout_err)
        }
        StatsCommand::Drift { locus, alim, dir } => {
            let snaps = read_snapshots(dir)?;
            let traj = allele_trajectory(&snaps, one_based(*locus, "locus")?, *alim)?;
            out.write_all(traj.to_csv().as_bytes()).map_err(stdout_err)
        }
    }
}

pub fn cmd_bench(args: &BenchArgs, out: &mut impl Write) -> Result<()> {
    let settings = BenchSettings {
        loci: args.r,
        alpha: args.alpha,
        replicates: args.replicates,
        seed: args.seed,
        naive_timeout: args.timeout.map(Duration::from_secs_f64),
    };
    let ks: Vec<u64> = parse_list(&args.k, "k")?;
    let gs: Vec<usize> = parse_list(&args.g, "g")?;
    let mus: Vec<f64> = parse_list(&args.mu, "mu")?;
    if let Some(range) = &args.loci_sweep {
        let loci = parse_genlist(range)?;
        let (&k, &g, &mu) = match (ks.first(), gs.first(), mus.first()) {
            (Some(k), Some(g), Some(mu)) => (k, g, mu),
            _ => return Err(Error::Usage("loci sweep needs one k, g and mu".into())),
        };
        writeln!(out, "r,fast_median_s").map_err(stdout_err)?;
        for (r, t) in loci_sweep(k, g, mu, loci, &settings)? {
            writeln!(out, "{r},{:.6}", t.as_secs_f64()).map_err(stdout_err)?;
        }
        return Ok(());
    }
    let mut cells = Vec::new();
    for &k in &ks {
        for &g in &gs {
            for &mu in &mus {
                cells.push(bench_cell(k, g, mu, &settings)?);
            }
        }
    }
    out.write_all(format_report(&cells).as_bytes())
        .map_err(stdout_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn genlists() {
        assert_eq!(parse_genlist("1,5,3").unwrap(), vec![1, 3, 5]);
        assert_eq!(parse_genlist("10:30:10,2").unwrap(), vec![2, 10, 20, 30]);
        assert_eq!(parse_genlist("4:6").unwrap(), vec![4, 5, 6]);
        assert!(parse_genlist("5:1").is_err());
        assert!(parse_genlist("1:5:0").is_err());
        assert!(parse_genlist("x").is_err());
    }

    #[test]
    fn key_value_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.txt");
        std::fs::write(&p, "# comment\nk=10\n--table_cap = 5\n\n").unwrap();
        let m = read_key_values(&p).unwrap();
        assert_eq!(m["k"], "10");
        assert_eq!(m["table-cap"], "5");
        std::fs::write(&p, "k=10\nnonsense\n").unwrap();
        assert!(matches!(
            read_key_values(&p),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn resolve_requires_core_flags() {
        let args = SimulateArgs {
            k: Some(10),
            g: Some(5),
            mu: Some(0.01),
            out: Some("x".into()),
            ..Default::default()
        };
        // --r missing
        assert!(matches!(RunManifest::resolve(&args), Err(Error::Usage(_))));
        let args = SimulateArgs { r: Some(2), ..args };
        let m = RunManifest::resolve(&args).unwrap();
        assert_eq!(m.config.rates.down(), &[0.005, 0.005]);
        assert_eq!(m.config.schedule, GrowthSchedule::Constant { alpha: 1.0 });
        assert_eq!(m.engine, EngineKind::Fast);
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.txt");
        std::fs::write(&p, "k=10\ng=5\nr=2\nmu=0.01\nseed=9\nout=o\n").unwrap();
        let args = SimulateArgs {
            config: Some(p),
            seed: Some(3),
            ..Default::default()
        };
        let m = RunManifest::resolve(&args).unwrap();
        assert_eq!(m.config.seed, 3);
        assert_eq!(m.config.initial_size, 10);
    }
}
