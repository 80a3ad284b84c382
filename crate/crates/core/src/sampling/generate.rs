use std::fmt;

use rand::Rng;

use super::bins::{BinDistribution, BinLayout};
use super::burst::burst_modify;
use super::nucleus::{apply_temperature, sample_token, NucleusSpec};
use crate::lm::{LanguageModel, TokenId};
use crate::{Error, Result, Scalar};

/// Decoding strategy. Temperature, when not 1, is applied to the raw
/// distribution before truncation or burst modification.
#[derive(Debug, Clone, PartialEq)]
pub enum Strategy<T> {
    Greedy,
    Temperature { t: f64 },
    TopK { k: usize, t: f64 },
    TopP { p: f64, t: f64 },
    Burst {
        layout: BinLayout,
        theta: BinDistribution<T>,
        t: f64,
    },
}

impl<T: Scalar> Strategy<T> {
    pub fn temperature(&self) -> f64 {
        match self {
            Strategy::Greedy => 1.0,
            Strategy::Temperature { t }
            | Strategy::TopK { t, .. }
            | Strategy::TopP { t, .. }
            | Strategy::Burst { t, .. } => *t,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.temperature();
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidTemperature(t));
        }
        match self {
            Strategy::TopK { k, .. } => NucleusSpec::top_k(*k).map(drop),
            Strategy::TopP { p, .. } => NucleusSpec::top_p(*p).map(drop),
            Strategy::Burst { layout, theta, .. } => theta.check_layout(layout),
            _ => Ok(()),
        }
    }
}

/// Source labels used in report columns: `k=30`, `p=0.9`, `t=0.5`, `burst`.
/// A non-unit temperature on top-k/top-p/burst is appended as `,t=…`.
impl<T> fmt::Display for Strategy<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (base, t) = match self {
            Strategy::Greedy => return f.write_str("greedy"),
            Strategy::Temperature { t } => return write!(f, "t={t}"),
            Strategy::TopK { k, t } => (format!("k={k}"), *t),
            Strategy::TopP { p, t } => (format!("p={p}"), *t),
            Strategy::Burst { t, .. } => ("burst".to_string(), *t),
        };
        if t == 1.0 {
            f.write_str(&base)
        } else {
            write!(f, "{base},t={t}")
        }
    }
}

/// Extends `prefix` by exactly `length` sampled tokens.
pub fn generate<T, M, R>(
    model: &M,
    prefix: &[TokenId],
    strategy: &Strategy<T>,
    length: usize,
    rng: &mut R,
) -> Result<Vec<TokenId>>
where
    T: Scalar,
    M: LanguageModel<T> + ?Sized,
    R: Rng + ?Sized,
{
    strategy.validate()?;
    if length < 1 {
        return Err(Error::Invalid("generation length must be ≥ 1".into()));
    }
    let t = strategy.temperature();
    let mut tokens = Vec::with_capacity(prefix.len() + length);
    tokens.extend_from_slice(prefix);
    for _ in 0..length {
        let raw = model.next_distribution(&tokens);
        let dist = apply_temperature(&raw, t)?;
        let next = match strategy {
            Strategy::Greedy => dist.token_at(1),
            Strategy::Temperature { .. } => sample_token(&dist, NucleusSpec::Full, rng)?,
            Strategy::TopK { k, .. } => sample_token(&dist, NucleusSpec::TopK(*k), rng)?,
            Strategy::TopP { p, .. } => sample_token(&dist, NucleusSpec::TopP(*p), rng)?,
            Strategy::Burst { layout, theta, .. } => {
                burst_modify(&dist, theta, layout, rng)?.sample(rng)?
            }
        };
        tokens.push(next);
    }
    Ok(tokens)
}
