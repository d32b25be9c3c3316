//! Order-weighted convex combinations of a state vector.
//!
//! With `z` sorted ascending as `z_{s_1} ≤ … ≤ z_{s_N}` and factorial weights
//! `M_i = (c+N−2)! / (c+N−1−i)!`, the upper combination puts the heaviest
//! weight on the maximum and the lower combination on the minimum. Their gap
//! `Z = z̄ − z̲` is sandwiched as `η D_z ≤ Z ≤ D_z` with `η = 1 − 4/(c+2)`.

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexWeights {
    c: u32,
    /// `M_1 .. M_N`, built by the multiplicative recurrence from `M_1 = 1`.
    weights: Vec<f64>,
    /// `M_i / Σ M`, built from the top down so it stays finite for large `c^N`.
    normalized: Vec<f64>,
}

fn check_c(c: u32) -> Result<()> {
    if c > 2 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("convexity parameter c must be > 2, got {c}")))
    }
}

impl ConvexWeights {
    pub fn new(c: u32, n: usize) -> Result<Self> {
        check_c(c)?;
        if n == 0 {
            return Err(Error::InvalidArgument("weights need n >= 1".into()));
        }
        let cf = c as f64;
        let nf = n as f64;

        let mut weights = Vec::with_capacity(n);
        weights.push(1.0);
        for k in 0..n - 1 {
            let next = weights[k] * (cf + nf - 2.0 - k as f64);
            weights.push(next);
        }

        // relative[k] = M_{k+1} / M_N
        let mut relative = vec![1.0; n];
        for k in (0..n - 1).rev() {
            relative[k] = relative[k + 1] / (cf + nf - 2.0 - k as f64);
        }
        let total: f64 = relative.iter().sum();
        let normalized = relative.iter().map(|r| r / total).collect();

        Ok(Self {
            c,
            weights,
            normalized,
        })
    }

    pub fn c(&self) -> u32 {
        self.c
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn normalized(&self) -> &[f64] {
        &self.normalized
    }

    /// `M_N = Π_{i=0}^{N−2} (c+i)`.
    pub fn m_n(&self) -> f64 {
        *self.weights.last().expect("n >= 1")
    }

    pub fn eta(&self) -> f64 {
        1.0 - 4.0 / (self.c as f64 + 2.0)
    }
}

/// Shorthand for [`ConvexWeights::new`].
pub fn make_weights(c: u32, n: usize) -> Result<ConvexWeights> {
    ConvexWeights::new(c, n)
}

/// `η = 1 − 4/(c+2)`.
pub fn eta(c: u32) -> Result<f64> {
    check_c(c)?;
    Ok(1.0 - 4.0 / (c as f64 + 2.0))
}

/// Ascending permutation of `z`, ties broken by original index.
pub fn ascending_order(z: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..z.len()).collect();
    idx.sort_by(|&a, &b| z[a].total_cmp(&z[b]).then(a.cmp(&b)));
    idx
}

/// `Σ w_i (v_{s_i} − v_{s_{N+1−i}})` for a frozen permutation `order`.
///
/// With `v = z` this is the spread itself; with `v = ż` it is the time
/// derivative of the spread on an interval where the ordering of `z` is fixed.
pub fn spread_along(values: &[f64], order: &[usize], w: &ConvexWeights) -> f64 {
    let n = order.len();
    w.normalized
        .iter()
        .enumerate()
        .map(|(i, wi)| wi * (values[order[i]] - values[order[n - 1 - i]]))
        .sum()
}

fn check_dims(z: &[f64], w: &ConvexWeights) -> Result<()> {
    check_len("convex combination input", w.n(), z.len())
}

pub fn upper_comb(z: &[f64], w: &ConvexWeights) -> Result<f64> {
    check_dims(z, w)?;
    let order = ascending_order(z);
    Ok(order.iter().zip(&w.normalized).map(|(&s, wi)| wi * z[s]).sum())
}

pub fn lower_comb(z: &[f64], w: &ConvexWeights) -> Result<f64> {
    check_dims(z, w)?;
    let order = ascending_order(z);
    Ok(order
        .iter()
        .rev()
        .zip(&w.normalized)
        .map(|(&s, wi)| wi * z[s])
        .sum())
}

/// `z̄ − z̲`; applied to θ, ω, a, b this gives Q, P, A, B.
pub fn spread(z: &[f64], w: &ConvexWeights) -> Result<f64> {
    check_dims(z, w)?;
    Ok(spread_along(z, &ascending_order(z), w))
}
