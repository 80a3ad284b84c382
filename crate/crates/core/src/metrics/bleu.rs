use std::collections::HashMap;

use rand::seq::index;
use rayon::prelude::*;

use crate::lm::TokenId;
use crate::{rng, Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfBleuConfig {
    pub max_n: usize,
    /// Upper bound on references per document; larger collections use a
    /// seeded random subsample of the other documents.
    pub max_refs: usize,
    pub seed: u64,
}

impl Default for SelfBleuConfig {
    fn default() -> Self {
        SelfBleuConfig {
            max_n: 4,
            max_refs: 1000,
            seed: 0,
        }
    }
}

/// Maps each distinct n-gram of a collection to a dense id, per order.
struct Interner<'a> {
    ids: Vec<HashMap<&'a [TokenId], u32>>,
}

impl<'a> Interner<'a> {
    fn new(max_n: usize) -> Self {
        Interner {
            ids: (0..max_n).map(|_| HashMap::new()).collect(),
        }
    }

    fn id(&mut self, gram: &'a [TokenId]) -> u32 {
        let table = &mut self.ids[gram.len() - 1];
        let next = table.len() as u32;
        *table.entry(gram).or_insert(next)
    }
}

/// Counted n-gram ids of one document for orders `1..=max_n`, sorted by id.
struct NgramCounts {
    len: usize,
    orders: Vec<Vec<(u32, u32)>>,
}

impl NgramCounts {
    fn new<'a>(tokens: &'a [TokenId], interner: &mut Interner<'a>) -> Self {
        let orders = (1..=interner.ids.len())
            .map(|n| {
                if tokens.len() < n {
                    return Vec::new();
                }
                let mut grams: Vec<u32> = tokens.windows(n).map(|g| interner.id(g)).collect();
                grams.sort_unstable();
                let mut counted: Vec<(u32, u32)> = Vec::new();
                for g in grams {
                    match counted.last_mut() {
                        Some((last, c)) if *last == g => *c += 1,
                        _ => counted.push((g, 1)),
                    }
                }
                counted
            })
            .collect();
        NgramCounts {
            len: tokens.len(),
            orders,
        }
    }
}

/// Sum over shared n-grams of `min(count_hyp, count_ref)`.
fn clipped_matches(hyp: &[(u32, u32)], reference: &[(u32, u32)]) -> u64 {
    let (mut i, mut j, mut m) = (0, 0, 0u64);
    while i < hyp.len() && j < reference.len() {
        match hyp[i].0.cmp(&reference[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                m += hyp[i].1.min(reference[j].1) as u64;
                i += 1;
                j += 1;
            }
        }
    }
    m
}

fn bleu_counts(hyp: &NgramCounts, reference: &NgramCounts) -> f64 {
    if hyp.len == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    let mut used = 0;
    for (n, (h, r)) in hyp.orders.iter().zip(&reference.orders).enumerate() {
        if h.is_empty() {
            continue;
        }
        let total = (hyp.len - n) as f64;
        let matches = clipped_matches(h, r) as f64;
        let precision = if matches > 0.0 {
            matches / total
        } else {
            1.0 / (total + 1.0)
        };
        log_sum += precision.ln();
        used += 1;
    }
    let geo = (log_sum / used as f64).exp();
    let (c, r) = (hyp.len as f64, reference.len as f64);
    let brevity = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    brevity * geo
}

/// Sentence BLEU of `hyp` against a single reference: geometric mean of
/// clipped n-gram precisions for `n = 1..=max_n` with the standard brevity
/// penalty. A precision with no matches is smoothed to `1 / (total + 1)`;
/// orders longer than the hypothesis are left out of the mean.
pub fn bleu<T: Scalar>(hyp: &[TokenId], reference: &[TokenId], max_n: usize) -> T {
    let mut interner = Interner::new(max_n.max(1));
    let h = NgramCounts::new(hyp, &mut interner);
    let r = NgramCounts::new(reference, &mut interner);
    T::of(bleu_counts(&h, &r))
}

/// For every document, the mean BLEU against each other document taken as
/// a single reference. Higher means less diverse.
pub fn self_bleu<T: Scalar, D: AsRef<[TokenId]> + Sync>(
    collection: &[D],
    config: &SelfBleuConfig,
) -> Result<Vec<T>> {
    let n = collection.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "self-BLEU needs at least 2 documents, got {n}"
        )));
    }
    if config.max_n < 1 || config.max_refs < 1 {
        return Err(Error::Invalid("self-BLEU needs max_n ≥ 1 and max_refs ≥ 1".into()));
    }
    let mut interner = Interner::new(config.max_n);
    let counts: Vec<NgramCounts> = collection
        .iter()
        .map(|d| NgramCounts::new(d.as_ref(), &mut interner))
        .collect();
    drop(interner);
    let scores = (0..n)
        .into_par_iter()
        .map(|i| {
            let refs: Vec<usize> = if n - 1 <= config.max_refs {
                (0..n).filter(|&j| j != i).collect()
            } else {
                let mut r = rng::stream_rng(config.seed, i as u64);
                let mut picked: Vec<usize> = index::sample(&mut r, n - 1, config.max_refs)
                    .into_iter()
                    .map(|j| if j >= i { j + 1 } else { j })
                    .collect();
                picked.sort_unstable();
                picked
            };
            let sum: f64 = refs.iter().map(|&j| bleu_counts(&counts[i], &counts[j])).sum();
            T::of(sum / refs.len() as f64)
        })
        .collect();
    Ok(scores)
}
