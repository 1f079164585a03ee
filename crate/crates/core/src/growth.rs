//! Population growth schedules.
//!
//! Conditionally on the previous size, the next generation's size is
//! Poisson with mean `α_i · N_{i−1}`. A schedule supplies `α_i`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Floor applied when the logistic rule would produce a non-positive rate.
pub const MIN_RATE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum GrowthSchedule {
    /// `α_i = α`.
    Constant { alpha: f64 },
    /// `β` up to and including generation `t`, `α` afterwards.
    Piecewise { beta: f64, t: usize, alpha: f64 },
    /// `α_i = α − (α − 1) N_{i−1} / N_max`.
    Logistic { alpha: f64, n_max: f64 },
    /// Explicit rate for generations `1..=len`.
    Custom(Vec<f64>),
}

/// A rate together with whether it had to be floored at [`MIN_RATE`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthRate {
    pub value: f64,
    pub clamped: bool,
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "{name} must be positive and finite, got {x}"
        )))
    }
}

impl GrowthSchedule {
    pub fn constant(alpha: f64) -> Result<Self> {
        let s = GrowthSchedule::Constant { alpha };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GrowthSchedule::Constant { alpha } => positive("alpha", *alpha),
            GrowthSchedule::Piecewise { beta, alpha, .. } => {
                positive("beta", *beta)?;
                positive("alpha", *alpha)
            }
            GrowthSchedule::Logistic { alpha, n_max } => {
                if !(alpha.is_finite() && *alpha >= 1.0) {
                    return Err(Error::invalid(format!(
                        "logistic alpha must be >= 1, got {alpha}"
                    )));
                }
                if !(n_max.is_finite() && *n_max >= 1.0) {
                    return Err(Error::invalid(format!(
                        "logistic nmax must be >= 1, got {n_max}"
                    )));
                }
                Ok(())
            }
            GrowthSchedule::Custom(rates) => {
                if rates.is_empty() {
                    return Err(Error::invalid("custom growth schedule is empty"));
                }
                rates.iter().try_for_each(|&r| positive("custom rate", r))
            }
        }
    }

    /// Whether [`expected_sizes`](Self::expected_sizes) is only a
    /// mean-field approximation.
    pub fn is_approximate(&self) -> bool {
        matches!(self, GrowthSchedule::Logistic { .. })
    }

    /// Number of generations the schedule covers, if bounded.
    pub fn horizon(&self) -> Option<usize> {
        match self {
            GrowthSchedule::Custom(rates) => Some(rates.len()),
            _ => None,
        }
    }

    /// Rate for the transition into generation `i ≥ 1`.
    pub fn rate_at(&self, i: usize, n_prev: f64) -> Result<GrowthRate> {
        if i == 0 {
            return Err(Error::invalid("growth rates are indexed from generation 1"));
        }
        let exact = |value| {
            Ok(GrowthRate {
                value,
                clamped: false,
            })
        };
        match self {
            GrowthSchedule::Constant { alpha } => exact(*alpha),
            GrowthSchedule::Piecewise { beta, t, alpha } => {
                exact(if i <= *t { *beta } else { *alpha })
            }
            GrowthSchedule::Logistic { alpha, n_max } => {
                let value = alpha - (alpha - 1.0) * n_prev / n_max;
                if value > 0.0 {
                    exact(value)
                } else {
                    Ok(GrowthRate {
                        value: MIN_RATE,
                        clamped: true,
                    })
                }
            }
            GrowthSchedule::Custom(rates) => match rates.get(i - 1) {
                Some(&r) => exact(r),
                None => Err(Error::invalid(format!(
                    "custom growth schedule has {} rates, generation {i} requested",
                    rates.len()
                ))),
            },
        }
    }

    /// `e_0 = n0`, `e_i = α_i(e_{i−1}) · e_{i−1}` for `i = 1..=g`.
    pub fn expected_sizes(&self, n0: f64, g: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(g + 1);
        let mut e = n0;
        out.push(e);
        for i in 1..=g {
            e *= self.rate_at(i, e)?.value;
            out.push(e);
        }
        Ok(out)
    }

    /// Parses the schedule grammar, resolving `custom:@FILE` relative to the
    /// working directory.
    pub fn parse(spec: &str) -> Result<Self> {
        Self::parse_in(spec, None)
    }

    /// Like [`parse`](Self::parse) but resolves relative custom-rate files
    /// against `base`.
    pub fn parse_in(spec: &str, base: Option<&Path>) -> Result<Self> {
        let (kind, rest) = spec.split_once(':').ok_or_else(|| {
            Error::invalid(format!("growth spec `{spec}` lacks a `kind:` prefix"))
        })?;
        let schedule = match kind {
            "constant" => GrowthSchedule::Constant {
                alpha: parse_num(rest, "alpha")?,
            },
            "piecewise" => {
                let kv = key_values(rest, &["beta", "t", "alpha"])?;
                GrowthSchedule::Piecewise {
                    beta: parse_num(kv[0], "beta")?,
                    t: kv[1].parse().map_err(|_| {
                        Error::invalid(format!("bad generation count t=`{}`", kv[1]))
                    })?,
                    alpha: parse_num(kv[2], "alpha")?,
                }
            }
            "logistic" => {
                let kv = key_values(rest, &["alpha", "nmax"])?;
                GrowthSchedule::Logistic {
                    alpha: parse_num(kv[0], "alpha")?,
                    n_max: parse_num(kv[1], "nmax")?,
                }
            }
            "custom" => {
                let file = rest
                    .strip_prefix('@')
                    .ok_or_else(|| Error::invalid("custom growth spec must be `custom:@FILE`"))?;
                let path = match base {
                    Some(base) => base.join(file),
                    None => Path::new(file).to_path_buf(),
                };
                let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                GrowthSchedule::Custom(parse_rate_lines(&text, &path)?)
            }
            other => return Err(Error::invalid(format!("unknown growth kind `{other}`"))),
        };
        schedule.validate()?;
        Ok(schedule)
    }
}

fn parse_num(s: &str, name: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::invalid(format!("bad value for {name}: `{s}`")))
}

/// Splits `a=1,b=2` requiring exactly `keys`, in that order.
fn key_values<'a>(s: &'a str, keys: &[&str]) -> Result<Vec<&'a str>> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != keys.len() {
        return Err(Error::invalid(format!(
            "expected {} in growth spec `{s}`",
            keys.join(",")
        )));
    }
    parts
        .iter()
        .zip(keys)
        .map(|(part, key)| {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("expected `{key}=VALUE`, got `{part}`")))?;
            if k.trim() != *key {
                return Err(Error::invalid(format!("expected `{key}=`, got `{k}=`")));
            }
            Ok(v)
        })
        .collect()
}

fn parse_rate_lines(text: &str, path: &Path) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<f64>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("expected a growth rate, got `{}`", l.trim()),
            })
        })
        .collect()
}

impl FromStr for GrowthSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// Renders the grammar form. Custom schedules need a file, so they render as
/// `custom:@growth_rates.txt`; see [`write_custom_rates`].
impl fmt::Display for GrowthSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrowthSchedule::Constant { alpha } => write!(f, "constant:{alpha}"),
            GrowthSchedule::Piecewise { beta, t, alpha } => {
                write!(f, "piecewise:beta={beta},t={t},alpha={alpha}")
            }
            GrowthSchedule::Logistic { alpha, n_max } => {
                write!(f, "logistic:alpha={alpha},nmax={n_max}")
            }
            GrowthSchedule::Custom(_) => write!(f, "custom:@{CUSTOM_RATES_FILE}"),
        }
    }
}

/// File name used when a custom schedule is written next to a run's outputs.
pub const CUSTOM_RATES_FILE: &str = "growth_rates.txt";

pub fn write_custom_rates(rates: &[f64], path: &Path) -> Result<()> {
    let mut text = String::new();
    for r in rates {
        text.push_str(&format!("{r}\n"));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
