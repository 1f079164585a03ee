//! Seedable sampling primitives.
//!
//! Every random draw in the crate goes through a [`RandomStream`]. Streams are
//! keyed by `(seed, index)` so replicates can run on separate threads and still
//! reproduce exactly; each stream can further hand out purpose-specific
//! substreams (the engine keeps population sizes on their own substream).

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Binomial, Distribution, Poisson};

use crate::error::{Error, Result};

/// Below this mean Poisson draws use sequential-search inversion.
const POISSON_INVERSION_LIMIT: f64 = 10.0;

/// Tolerance on `Σ probs = 1` accepted by [`RandomStream::multinomial`].
pub const PROB_SUM_TOLERANCE: f64 = 1e-9;

/// A single-owner random number stream.
#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    index: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self::derive(seed, 0)
    }

    /// Stream number `index` under `seed`, e.g. one per replicate.
    pub fn derive(seed: u64, index: u64) -> Self {
        Self {
            seed,
            index,
            rng: ChaCha8Rng::from_seed(key(seed, index)),
        }
    }

    /// An independent stream sharing this stream's key but running on a
    /// separate ChaCha stream id. `purpose` 0 is reserved for the parent.
    pub fn substream(&self, purpose: u64) -> Self {
        assert!(purpose > 0, "substream purpose 0 is the parent stream");
        let mut rng = ChaCha8Rng::from_seed(key(self.seed, self.index));
        rng.set_stream(purpose);
        Self {
            seed: self.seed,
            index: self.index,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// Uniform draw on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform integer in `0..n`; `n` must be positive.
    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        self.rng.random_range(0..n)
    }

    pub fn poisson(&mut self, lambda: f64) -> Result<u64> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::invalid(format!(
                "poisson mean must be finite and non-negative, got {lambda}"
            )));
        }
        if lambda == 0.0 {
            return Ok(0);
        }
        if lambda < POISSON_INVERSION_LIMIT {
            return Ok(self.poisson_inversion(lambda));
        }
        let dist = Poisson::new(lambda).map_err(|e| Error::invalid(e.to_string()))?;
        Ok(dist.sample(&mut self.rng) as u64)
    }

    fn poisson_inversion(&mut self, lambda: f64) -> u64 {
        let start = (-lambda).exp();
        loop {
            let u = self.uniform();
            let mut k = 0u64;
            let mut p = start;
            let mut cdf = p;
            while u > cdf {
                k += 1;
                p *= lambda / k as f64;
                cdf += p;
                // cdf can stall just below 1 from rounding; redraw.
                if p == 0.0 && k as f64 > lambda {
                    break;
                }
            }
            if u <= cdf {
                return k;
            }
        }
    }

    pub fn binomial(&mut self, n: u64, p: f64) -> Result<u64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!(
                "binomial probability must lie in [0, 1], got {p}"
            )));
        }
        if n == 0 || p == 0.0 {
            return Ok(0);
        }
        if p == 1.0 {
            return Ok(n);
        }
        if n == 1 {
            return Ok((self.uniform() < p) as u64);
        }
        let dist = Binomial::new(n, p).map_err(|e| Error::invalid(e.to_string()))?;
        Ok(dist.sample(&mut self.rng))
    }

    /// Multinomial draw by sequential conditional binomials.
    pub fn multinomial(&mut self, n: u64, probs: &[f64]) -> Result<Vec<u64>> {
        let mut out = vec![0; probs.len()];
        self.multinomial_into(n, probs, &mut out)?;
        Ok(out)
    }

    pub fn multinomial_into(&mut self, n: u64, probs: &[f64], out: &mut [u64]) -> Result<()> {
        if out.len() != probs.len() {
            return Err(Error::invalid("multinomial output length mismatch"));
        }
        validate_probs(probs)?;
        self.split_weights(n, probs, out)
    }

    /// Splits `n` trials over cells proportional to non-negative `weights`
    /// (not necessarily normalised). Sum of `out` is exactly `n` whenever
    /// some weight is positive.
    pub(crate) fn split_weights(&mut self, n: u64, weights: &[f64], out: &mut [u64]) -> Result<()> {
        out.iter_mut().for_each(|c| *c = 0);
        let mut remaining_mass: f64 = weights.iter().sum();
        let mut remaining = n;
        let last = match weights.iter().rposition(|&w| w > 0.0) {
            Some(last) => last,
            None if n == 0 => return Ok(()),
            None => return Err(Error::invalid("cannot split trials over zero total weight")),
        };
        for (i, &w) in weights.iter().enumerate() {
            if remaining == 0 {
                break;
            }
            if i == last {
                out[i] = remaining;
                break;
            }
            if w <= 0.0 {
                continue;
            }
            let p = (w / remaining_mass).clamp(0.0, 1.0);
            let x = self.binomial(remaining, p)?;
            out[i] = x;
            remaining -= x;
            remaining_mass -= w;
        }
        Ok(())
    }
}

fn key(seed: u64, index: u64) -> [u8; 32] {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&index.to_le_bytes());
    key
}

fn validate_probs(probs: &[f64]) -> Result<()> {
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::invalid(
            "probabilities must be finite and non-negative",
        ));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
        return Err(Error::invalid(format!(
            "probabilities sum to {sum}, expected 1"
        )));
    }
    Ok(())
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Constant-time categorical sampler (Walker/Vose alias table).
///
/// Immutable once built; share it freely between threads.
#[derive(Clone, Debug)]
pub struct CategoricalSampler {
    alias: WeightedAliasIndex<f64>,
    len: usize,
}

impl CategoricalSampler {
    pub fn new(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid(
                "categorical sampler needs at least one weight",
            ));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid(
                "categorical weights must be finite and non-negative",
            ));
        }
        if !weights.iter().any(|&w| w > 0.0) {
            return Err(Error::invalid("categorical weights are all zero"));
        }
        let alias =
            WeightedAliasIndex::new(weights.to_vec()).map_err(|e| Error::invalid(e.to_string()))?;
        Ok(Self {
            alias,
            len: weights.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn sample(&self, stream: &mut RandomStream) -> usize {
        self.alias.sample(&mut stream.rng)
    }
}
