use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// Per-feature z-scoring fitted on a training fold. Features with zero
/// spread are dropped; `kept` lists the surviving input columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer<T> {
    pub kept: Vec<usize>,
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

impl<T: Scalar> Standardizer<T> {
    /// Population mean and standard deviation of every column of `rows`.
    pub fn fit(rows: &[Vec<T>]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::InsufficientData("no rows to standardize".into()));
        };
        let n = T::of_usize(rows.len());
        let mut out = Standardizer {
            kept: Vec::new(),
            mean: Vec::new(),
            std: Vec::new(),
        };
        for c in 0..first.len() {
            let mean = rows.iter().map(|r| r[c]).sum::<T>() / n;
            let var = rows.iter().map(|r| (r[c] - mean) * (r[c] - mean)).sum::<T>() / n;
            let std = var.sqrt();
            // spread below rounding noise of the mean counts as constant
            if std > mean.abs() * T::epsilon() * T::of(16.0) && std > T::zero() {
                out.kept.push(c);
                out.mean.push(mean);
                out.std.push(std);
            }
        }
        Ok(out)
    }

    pub fn apply(&self, row: &[T]) -> Vec<T> {
        self.kept
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&c, (&m, &s))| (row[c] - m) / s)
            .collect()
    }

    /// Maps a standardized row back to the kept raw columns.
    pub fn invert(&self, z: &[T]) -> Vec<T> {
        z.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&v, (&m, &s))| v * s + m)
            .collect()
    }
}

/// Result of full-batch gradient descent on L2-regularized logistic loss.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit<T> {
    pub weights: Vec<T>,
    pub bias: T,
    pub epochs: usize,
    pub converged: bool,
    /// Objective before each update, plus the final value.
    pub losses: Vec<T>,
}

fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus<T: Scalar>(z: T) -> T {
    if z > T::zero() {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn objective<T: Scalar>(x: &[Vec<T>], y: &[bool], w: &[T], b: T, l2: T) -> T {
    let n = T::of_usize(x.len());
    let data: T = x
        .iter()
        .zip(y)
        .map(|(row, &label)| {
            let z = dot(row, w) + b;
            if label {
                softplus(-z)
            } else {
                softplus(z)
            }
        })
        .sum::<T>()
        / n;
    data + l2 * T::of(0.5) * w.iter().map(|&v| v * v).sum::<T>()
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Minimizes `mean(logloss) + l2/2·|w|²` (bias unpenalized) from zero,
/// stopping once the gradient norm drops below `tolerance` or after
/// `max_epochs` updates.
pub fn fit_logistic<T: Scalar>(
    x: &[Vec<T>],
    y: &[bool],
    learning_rate: T,
    l2: T,
    max_epochs: usize,
    tolerance: T,
) -> Result<LogisticFit<T>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(Error::InsufficientData("no training rows".into()));
    }
    let d = x[0].len();
    let n = T::of_usize(x.len());
    let mut w = vec![T::zero(); d];
    let mut b = T::zero();
    let mut losses = Vec::new();
    let mut converged = false;
    let mut epochs = 0;
    while epochs < max_epochs {
        losses.push(objective(x, y, &w, b, l2));
        let mut gw = vec![T::zero(); d];
        let mut gb = T::zero();
        for (row, &label) in x.iter().zip(y) {
            let target = if label { T::one() } else { T::zero() };
            let err = sigmoid(dot(row, &w) + b) - target;
            for (g, &v) in gw.iter_mut().zip(row) {
                *g = *g + err * v;
            }
            gb = gb + err;
        }
        for (g, &wi) in gw.iter_mut().zip(&w) {
            *g = *g / n + l2 * wi;
        }
        gb = gb / n;
        let norm = (gw.iter().map(|&g| g * g).sum::<T>() + gb * gb).sqrt();
        if norm < tolerance {
            converged = true;
            break;
        }
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi = *wi - learning_rate * *g;
        }
        b = b - learning_rate * gb;
        epochs += 1;
    }
    losses.push(objective(x, y, &w, b, l2));
    Ok(LogisticFit {
        weights: w,
        bias: b,
        epochs,
        converged,
        losses,
    })
}
