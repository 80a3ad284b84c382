use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::lm::{NextTokenDistribution, TokenId};
use crate::{rng, Error, Result, Scalar};

/// Which leading ranks of a sorted distribution may be sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NucleusSpec {
    TopK(usize),
    TopP(f64),
    Full,
}

impl NucleusSpec {
    pub fn top_k(k: usize) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidNucleus(format!("k must be ≥ 1, got {k}")));
        }
        Ok(NucleusSpec::TopK(k))
    }

    pub fn top_p(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidNucleus(format!("p must lie in (0, 1], got {p}")));
        }
        Ok(NucleusSpec::TopP(p))
    }

    /// Whether a scored token falls inside this nucleus at its step.
    ///
    /// Top-p uses `cum_prob - prob < p`: the token is admitted when the mass
    /// strictly ahead of it has not yet reached `p`, so the token that
    /// crosses the threshold is included.
    pub fn admits<T: Scalar>(&self, rank: usize, prob: T, cum_prob: T) -> bool {
        match *self {
            NucleusSpec::TopK(k) => rank <= k,
            NucleusSpec::TopP(p) => p >= 1.0 || (cum_prob - prob) < T::of(p),
            NucleusSpec::Full => true,
        }
    }
}

impl fmt::Display for NucleusSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NucleusSpec::TopK(k) => write!(f, "k={k}"),
            NucleusSpec::TopP(p) => write!(f, "p={p}"),
            NucleusSpec::Full => f.write_str("full"),
        }
    }
}

impl FromStr for NucleusSpec {
    type Err = Error;

    /// Parses `k=40`, `p=0.9` or `full`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "full" {
            return Ok(NucleusSpec::Full);
        }
        let bad = || Error::InvalidNucleus(format!("cannot parse `{s}`"));
        let (kind, value) = s.split_once('=').ok_or_else(bad)?;
        match kind.trim() {
            "k" => NucleusSpec::top_k(value.trim().parse().map_err(|_| bad())?),
            "p" => NucleusSpec::top_p(value.trim().parse().map_err(|_| bad())?),
            _ => Err(bad()),
        }
    }
}

/// Number of leading ranks in the nucleus. Always at least 1.
pub fn nucleus_size<T: Scalar>(dist: &NextTokenDistribution<T>, spec: NucleusSpec) -> usize {
    let v = dist.len();
    match spec {
        NucleusSpec::TopK(k) => k.min(v),
        NucleusSpec::Full => v,
        NucleusSpec::TopP(p) if p >= 1.0 => v,
        NucleusSpec::TopP(_) => {
            let mut acc = T::zero();
            let mut size = 0;
            for (rank, prob) in dist.probs().enumerate() {
                acc = acc + prob;
                if !spec.admits(rank + 1, prob, acc) {
                    break;
                }
                size = rank + 1;
            }
            size.max(1)
        }
    }
}

/// 1-based ranks selected by `spec`.
pub fn nucleus_set<T: Scalar>(
    dist: &NextTokenDistribution<T>,
    spec: NucleusSpec,
) -> RangeInclusive<usize> {
    1..=nucleus_size(dist, spec)
}

/// `p_i^(1/t)` renormalized, computed in log space relative to the top
/// entry. Entry order is unchanged.
pub fn apply_temperature<T: Scalar>(
    dist: &NextTokenDistribution<T>,
    t: f64,
) -> Result<NextTokenDistribution<T>> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidTemperature(t));
    }
    if t == 1.0 || dist.is_empty() {
        return Ok(dist.clone());
    }
    let inv_t = T::of(1.0 / t);
    let top = dist.entries()[0].1.ln();
    let mut entries = Vec::with_capacity(dist.len());
    // sorted input means equal probabilities are adjacent; long uniform
    // tails cost one exp
    let mut last: Option<(T, T)> = None;
    for &(id, p) in dist.entries() {
        let q = match last {
            Some((prev, q)) if prev == p => q,
            _ => {
                let q = ((p.ln() - top) * inv_t).exp();
                last = Some((p, q));
                q
            }
        };
        entries.push((id, q));
    }
    let total: T = entries.iter().map(|e| e.1).sum();
    for e in &mut entries {
        e.1 = e.1 / total;
    }
    Ok(NextTokenDistribution::from_sorted_unchecked(entries))
}

/// Draws a token from the nucleus, renormalized over the nucleus.
pub fn sample_token<T: Scalar, R: Rng + ?Sized>(
    dist: &NextTokenDistribution<T>,
    spec: NucleusSpec,
    rng: &mut R,
) -> Result<TokenId> {
    let size = nucleus_size(dist, spec);
    let weights: Vec<T> = dist.probs().take(size).collect();
    let idx = rng::categorical(&weights, rng).ok_or(Error::EmptyNucleus)?;
    Ok(dist.entries()[idx].0)
}
