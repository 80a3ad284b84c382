use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::lm::DocumentScore;
use crate::{Error, Result, Scalar};

/// Powers-of-ten partition of ranks `1..=V`: bin 0 holds ranks 1–10, bin
/// `i` holds `10^i + 1 ..= 10^(i+1)`, and the last bin runs to `V`.
/// A rank sitting exactly on a power of ten belongs to the lower bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinLayout {
    n_bins: usize,
    vocab_size: usize,
}

impl BinLayout {
    /// `ceil(log10(V))` bins, at least one.
    pub fn from_vocab(vocab_size: usize) -> Self {
        let mut n = 1;
        let mut edge = 10usize;
        while edge < vocab_size {
            n += 1;
            edge = edge.saturating_mul(10);
        }
        BinLayout {
            n_bins: n,
            vocab_size,
        }
    }

    /// Fixed bin count; trailing bins may be empty when `V` is small.
    pub fn new(n_bins: usize, vocab_size: usize) -> Result<Self> {
        if n_bins < 1 || vocab_size < 1 {
            return Err(Error::Invalid("layout needs n_bins ≥ 1 and V ≥ 1".into()));
        }
        if n_bins > 19 {
            return Err(Error::Invalid(format!("too many bins: {n_bins}")));
        }
        Ok(BinLayout {
            n_bins,
            vocab_size,
        })
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Bin holding 1-based `rank`.
    pub fn bin_of(&self, rank: usize) -> usize {
        debug_assert!(rank >= 1);
        let mut bin = 0;
        let mut upper = 10usize;
        while rank > upper && bin + 1 < self.n_bins {
            bin += 1;
            upper = upper.saturating_mul(10);
        }
        bin
    }

    /// Inclusive 1-based rank range of `bin`, clipped to `V`. `None` when
    /// the bin starts past the vocabulary.
    pub fn ranks(&self, bin: usize) -> Option<RangeIncl> {
        assert!(bin < self.n_bins, "bin {bin} out of range");
        let start = if bin == 0 { 1 } else { 10usize.pow(bin as u32) + 1 };
        let end = if bin + 1 == self.n_bins {
            self.vocab_size
        } else {
            10usize.pow(bin as u32 + 1).min(self.vocab_size)
        };
        (start <= end).then_some(RangeIncl { start, end })
    }

    /// Upper rank of every bin but the last: `[10, 100, ...]`.
    pub fn boundaries(&self) -> Vec<usize> {
        (1..self.n_bins).map(|i| 10usize.pow(i as u32)).collect()
    }
}

/// Inclusive rank span.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RangeIncl {
    pub start: usize,
    pub end: usize,
}

impl RangeIncl {
    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, rank: usize) -> bool {
        (self.start..=self.end).contains(&rank)
    }
}

/// Categorical distribution over the bins of a layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinDistribution<T> {
    theta: Vec<T>,
}

impl<T: Scalar> BinDistribution<T> {
    pub fn new(theta: Vec<T>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::Invalid("theta is empty".into()));
        }
        if theta.iter().any(|&t| !(t >= T::zero()) || !t.is_finite()) {
            return Err(Error::Invalid("theta entries must be finite and ≥ 0".into()));
        }
        let total: T = theta.iter().copied().sum();
        let tol = T::of(1e-9).max(T::epsilon() * T::of(64.0));
        if (total - T::one()).abs() > tol {
            return Err(Error::Invalid(format!("theta sums to {total}, not 1")));
        }
        Ok(BinDistribution { theta })
    }

    pub fn theta(&self) -> &[T] {
        &self.theta
    }

    pub fn n_bins(&self) -> usize {
        self.theta.len()
    }

    pub fn check_layout(&self, layout: &BinLayout) -> Result<()> {
        if self.theta.len() != layout.n_bins() {
            return Err(Error::LayoutMismatch(format!(
                "{} theta entries for {} bins",
                self.theta.len(),
                layout.n_bins()
            )));
        }
        Ok(())
    }
}

/// Bin frequencies of the realized tokens in `docs`:
/// `θ_i = #(records with rank in bin i) / #records`.
pub fn learn_bin_distribution<T: Scalar>(
    docs: &[DocumentScore<T>],
    layout: &BinLayout,
) -> Result<BinDistribution<T>> {
    let mut counts = vec![0u64; layout.n_bins()];
    let mut total = 0u64;
    for doc in docs {
        for r in &doc.records {
            counts[layout.bin_of(r.rank)] += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::InsufficientData("no scored tokens to learn bins from".into()));
    }
    let n = total as f64;
    BinDistribution::new(counts.iter().map(|&c| T::of(c as f64 / n)).collect())
}

/// On-disk form: `{"vocab_size":V,"boundaries":[10,100,…],"theta":[…]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaFile {
    pub vocab_size: usize,
    pub boundaries: Vec<usize>,
    pub theta: Vec<f64>,
}

impl ThetaFile {
    pub fn new(layout: &BinLayout, theta: &BinDistribution<f64>) -> Self {
        ThetaFile {
            vocab_size: layout.vocab_size(),
            boundaries: layout.boundaries(),
            theta: theta.theta().to_vec(),
        }
    }

    pub fn parts(&self) -> Result<(BinLayout, BinDistribution<f64>)> {
        let layout = BinLayout::new(self.boundaries.len() + 1, self.vocab_size)?;
        if layout.boundaries() != self.boundaries {
            return Err(Error::LayoutMismatch(format!(
                "boundaries {:?} are not successive powers of ten",
                self.boundaries
            )));
        }
        let theta = BinDistribution::new(self.theta.clone())?;
        theta.check_layout(&layout)?;
        Ok((layout, theta))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::TokenRecord;

    #[test]
    fn bin_counts_from_vocab() {
        assert_eq!(BinLayout::from_vocab(2).n_bins(), 1);
        assert_eq!(BinLayout::from_vocab(10).n_bins(), 1);
        assert_eq!(BinLayout::from_vocab(11).n_bins(), 2);
        assert_eq!(BinLayout::from_vocab(1000).n_bins(), 3);
        assert_eq!(BinLayout::from_vocab(1001).n_bins(), 4);
        assert_eq!(BinLayout::from_vocab(5001).n_bins(), 4);
        assert_eq!(BinLayout::from_vocab(5001).boundaries(), vec![10, 100, 1000]);
    }

    #[test]
    fn boundary_ranks_go_low() {
        let l = BinLayout::from_vocab(5000);
        let bins: Vec<usize> = [1, 10, 11, 100, 101, 1000, 1001, 5000]
            .iter()
            .map(|&r| l.bin_of(r))
            .collect();
        assert_eq!(bins, vec![0, 0, 1, 1, 2, 2, 3, 3]);
    }

    #[test]
    fn bins_partition_ranks() {
        for v in [1, 2, 9, 10, 11, 99, 100, 101, 999, 1234, 20000] {
            let l = BinLayout::from_vocab(v);
            let mut next = 1;
            for b in 0..l.n_bins() {
                let r = l.ranks(b).unwrap();
                assert_eq!(r.start, next);
                for rank in [r.start, r.end] {
                    assert_eq!(l.bin_of(rank), b);
                }
                next = r.end + 1;
            }
            assert_eq!(next, v + 1);
        }
        let sparse = BinLayout::new(4, 50).unwrap();
        assert_eq!(sparse.ranks(1), Some(RangeIncl { start: 11, end: 50 }));
        assert_eq!(sparse.ranks(2), None);
        assert_eq!(sparse.ranks(3), None);
    }

    #[test]
    fn learned_theta_counts_ranks() {
        let recs = [1, 3, 10, 12, 150]
            .iter()
            .map(|&r| TokenRecord::new(0, r, 0.1, 0.5))
            .collect();
        let doc = DocumentScore::new("d", recs).unwrap();
        let l = BinLayout::from_vocab(500);
        let th = learn_bin_distribution(&[doc], &l).unwrap();
        assert_eq!(th.theta(), &[0.6, 0.2, 0.2]);
        assert!(learn_bin_distribution::<f64>(&[], &l).is_err());
    }

    #[test]
    fn theta_validation() {
        assert!(BinDistribution::new(vec![0.5, 0.4]).is_err());
        assert!(BinDistribution::new(vec![1.5, -0.5]).is_err());
        assert!(BinDistribution::new(vec![0.25f32, 0.75]).is_ok());
    }

    #[test]
    fn theta_file_round_trip() {
        let l = BinLayout::from_vocab(3000);
        let th = BinDistribution::new(vec![0.7, 0.2, 0.05, 0.05]).unwrap();
        let f = ThetaFile::new(&l, &th);
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(json, r#"{"vocab_size":3000,"boundaries":[10,100,1000],"theta":[0.7,0.2,0.05,0.05]}"#);
        let (l2, th2) = serde_json::from_str::<ThetaFile>(&json).unwrap().parts().unwrap();
        assert_eq!((l2, th2), (l, th));
    }
}
