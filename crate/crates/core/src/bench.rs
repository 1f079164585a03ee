//! Wall-clock comparison of the haplotype-count engine against the
//! individual-based simulator.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::engine::{SimulationConfig, Simulator};
use crate::error::{Error, Result};
use crate::growth::GrowthSchedule;
use crate::mutation::MutationRates;
use crate::oracle::naive_simulate_replicate;

#[derive(Clone, Debug)]
pub struct BenchSettings {
    pub loci: usize,
    pub alpha: f64,
    pub replicates: u64,
    pub seed: u64,
    /// Per-run limit for the naive simulator.
    pub naive_timeout: Option<Duration>,
}

impl Default for BenchSettings {
    fn default() -> Self {
        Self {
            loci: 3,
            alpha: 1.0,
            replicates: 10,
            seed: 1,
            naive_timeout: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchCell {
    pub k: u64,
    pub g: usize,
    pub mu: f64,
    pub fast_median: Duration,
    pub naive_median: Duration,
    /// The naive simulator hit its timeout; `naive_median` is then the
    /// timeout and `speedup` a lower bound.
    pub naive_timed_out: bool,
    pub speedup: f64,
    pub fast_mean_final: f64,
    pub naive_mean_final: Option<f64>,
    /// Mean final sizes of the two engines agree within 4 standard errors.
    pub sizes_agree: Option<bool>,
}

fn median(mut xs: Vec<Duration>) -> Duration {
    xs.sort_unstable();
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2
    }
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

pub fn cell_config(
    k: u64,
    g: usize,
    mu: f64,
    settings: &BenchSettings,
) -> Result<SimulationConfig> {
    Ok(SimulationConfig::new(
        k,
        g,
        MutationRates::symmetric(settings.loci, mu)?,
        GrowthSchedule::constant(settings.alpha)?,
    )
    .with_seed(settings.seed))
}

/// Times one `fast` run (table construction included).
pub fn time_fast(config: &SimulationConfig, replicate: u64) -> Result<(Duration, u64)> {
    let start = Instant::now();
    let result = Simulator::new(config.clone())?.run(replicate)?;
    Ok((start.elapsed(), result.final_size()))
}

/// Runs both engines `settings.replicates` times on one grid cell.
pub fn bench_cell(k: u64, g: usize, mu: f64, settings: &BenchSettings) -> Result<BenchCell> {
    if settings.replicates == 0 {
        return Err(Error::invalid("benchmark needs at least one replicate"));
    }
    let config = cell_config(k, g, mu, settings)?;
    let mut fast_times = Vec::new();
    let mut fast_finals = Vec::new();
    for rep in 0..settings.replicates {
        let (t, n) = time_fast(&config, rep)?;
        fast_times.push(t);
        fast_finals.push(n as f64);
    }

    let mut naive_times = Vec::new();
    let mut naive_finals = Vec::new();
    let mut timed_out = false;
    for rep in 0..settings.replicates {
        let start = Instant::now();
        let deadline = settings.naive_timeout.map(|t| start + t);
        match naive_simulate_replicate(&config, rep, deadline) {
            Ok(result) => {
                naive_times.push(start.elapsed());
                naive_finals.push(result.final_size() as f64);
            }
            Err(Error::Timeout { .. }) => {
                timed_out = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }

    let fast_median = median(fast_times);
    let naive_median = if timed_out {
        settings.naive_timeout.expect("timeout implies a limit")
    } else {
        median(naive_times)
    };
    let speedup = naive_median.as_secs_f64() / fast_median.as_secs_f64().max(1e-9);
    let (fast_mean, fast_se) = mean_se(&fast_finals);
    let (naive_mean_final, sizes_agree) = if timed_out {
        (None, None)
    } else {
        let (m, se) = mean_se(&naive_finals);
        let tol = 4.0 * (fast_se.powi(2) + se.powi(2)).sqrt();
        (Some(m), Some((fast_mean - m).abs() <= tol))
    };
    Ok(BenchCell {
        k,
        g,
        mu,
        fast_median,
        naive_median,
        naive_timed_out: timed_out,
        speedup,
        fast_mean_final: fast_mean,
        naive_mean_final,
        sizes_agree,
    })
}

/// Median `fast` run time for each locus count.
pub fn loci_sweep(
    k: u64,
    g: usize,
    mu: f64,
    loci: impl IntoIterator<Item = usize>,
    settings: &BenchSettings,
) -> Result<Vec<(usize, Duration)>> {
    loci.into_iter()
        .map(|r| {
            let cfg = cell_config(
                k,
                g,
                mu,
                &BenchSettings {
                    loci: r,
                    ..settings.clone()
                },
            )?;
            let times = (0..settings.replicates.max(1))
                .map(|rep| time_fast(&cfg, rep).map(|t| t.0))
                .collect::<Result<Vec<_>>>()?;
            Ok((r, median(times)))
        })
        .collect()
}

/// CSV report, one line per cell.
pub fn format_report(cells: &[BenchCell]) -> String {
    let mut out =
        String::from("k,g,mu,fast_median_s,naive_median_s,speedup,fast_mean_final,naive_mean_final,sizes_agree\n");
    for c in cells {
        let speedup = if c.naive_timed_out {
            format!(">={:.1}", c.speedup)
        } else {
            format!("{:.1}", c.speedup)
        };
        let naive = if c.naive_timed_out {
            "timeout".to_string()
        } else {
            format!("{:.6}", c.naive_median.as_secs_f64())
        };
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{},{},{:.1},{},{}",
            c.k,
            c.g,
            c.mu,
            c.fast_median.as_secs_f64(),
            naive,
            speedup,
            c.fast_mean_final,
            c.naive_mean_final
                .map_or(String::new(), |m| format!("{m:.1}")),
            c.sizes_agree.map_or(String::new(), |a| a.to_string()),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        let ms = Duration::from_millis;
        assert_eq!(median(vec![ms(3), ms(1), ms(2)]), ms(2));
        assert_eq!(
            median(vec![ms(4), ms(1), ms(2), ms(3)]),
            Duration::from_micros(2500)
        );
    }

    #[test]
    fn small_cell_runs() {
        let settings = BenchSettings {
            replicates: 3,
            ..Default::default()
        };
        let cell = bench_cell(50, 5, 0.003, &settings).unwrap();
        assert!(!cell.naive_timed_out);
        assert!(cell.speedup > 0.0);
        let report = format_report(&[cell]);
        assert_eq!(report.lines().count(), 2);
    }

    #[test]
    fn timeout_is_reported_as_lower_bound() {
        let settings = BenchSettings {
            replicates: 2,
            naive_timeout: Some(Duration::ZERO),
            ..Default::default()
        };
        let cell = bench_cell(200, 20, 0.003, &settings).unwrap();
        assert!(cell.naive_timed_out);
        assert!(format_report(&[cell]).contains("timeout"));
    }
}
