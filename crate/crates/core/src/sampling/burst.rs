use rand::Rng;

use super::bins::{BinDistribution, BinLayout, RangeIncl};
use crate::lm::{NextTokenDistribution, TokenId};
use crate::{rng, Error, Result, Scalar};

/// Output of [`burst_modify`]: the input's entries in rank order, with
/// every rank outside `bin` set to zero and the bin renormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedDistribution<T> {
    entries: Vec<(TokenId, T)>,
    bin: usize,
    support: RangeIncl,
}

impl<T: Scalar> ModifiedDistribution<T> {
    pub fn entries(&self) -> &[(TokenId, T)] {
        &self.entries
    }

    /// Bin that was finally used.
    pub fn bin(&self) -> usize {
        self.bin
    }

    /// Inclusive 1-based rank range carrying the mass.
    pub fn support(&self) -> (usize, usize) {
        (self.support.start, self.support.end)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TokenId> {
        let slice = &self.entries[self.support.start - 1..self.support.end];
        let weights: Vec<T> = slice.iter().map(|e| e.1).collect();
        let i = rng::categorical(&weights, rng).ok_or(Error::EmptyNucleus)?;
        Ok(slice[i].0)
    }
}

/// One step of burst sampling: draw a bin from `theta`, keep only the ranks
/// in that bin and divide them by the bin's mass.
///
/// A draw that lands on a bin with no ranks inside the vocabulary, or with
/// zero mass, is redrawn from `theta` restricted to the usable bins.
pub fn burst_modify<T: Scalar, R: Rng + ?Sized>(
    dist: &NextTokenDistribution<T>,
    theta: &BinDistribution<T>,
    layout: &BinLayout,
    rng: &mut R,
) -> Result<ModifiedDistribution<T>> {
    theta.check_layout(layout)?;
    if layout.vocab_size() != dist.len() {
        return Err(Error::LayoutMismatch(format!(
            "layout built for V={} but distribution has {} entries",
            layout.vocab_size(),
            dist.len()
        )));
    }
    let mass = |r: RangeIncl| -> T {
        dist.entries()[r.start - 1..r.end].iter().map(|e| e.1).sum()
    };
    let usable = |b: usize| layout.ranks(b).filter(|&r| mass(r) > T::zero());

    let first = rng::categorical(theta.theta(), rng).ok_or(Error::EmptyNucleus)?;
    let (bin, span) = match usable(first) {
        Some(span) => (first, span),
        None => {
            let spans: Vec<Option<RangeIncl>> = (0..layout.n_bins()).map(usable).collect();
            let weights: Vec<T> = theta
                .theta()
                .iter()
                .zip(&spans)
                .map(|(&t, s)| if s.is_some() { t } else { T::zero() })
                .collect();
            let b = rng::categorical(&weights, rng).ok_or(Error::EmptyNucleus)?;
            (b, spans[b].expect("weighted bins are usable"))
        }
    };

    let bin_mass = mass(span);
    let entries = dist
        .entries()
        .iter()
        .enumerate()
        .map(|(i, &(id, p))| {
            if span.contains(i + 1) {
                (id, p / bin_mass)
            } else {
                (id, T::zero())
            }
        })
        .collect();
    Ok(ModifiedDistribution {
        entries,
        bin,
        support: span,
    })
}
