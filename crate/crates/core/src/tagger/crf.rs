//! Linear-chain CRF inference: forward-backward in log space and
//! constrained Viterbi decoding.

use super::Tag;
use crate::error::{Error, Result};

pub(crate) const NUM_TAGS: usize = 3;

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Score of a tag path under per-position emissions and transitions.
pub(crate) fn path_score(
    emissions: &[[f64; NUM_TAGS]],
    transitions: &[[f64; NUM_TAGS]; NUM_TAGS],
    tags: &[usize],
) -> f64 {
    let mut s = 0.0;
    for (t, &y) in tags.iter().enumerate() {
        s += emissions[t][y];
        if t > 0 {
            s += transitions[tags[t - 1]][y];
        }
    }
    s
}

/// Log partition function over all `3^n` tag paths (unconstrained).
pub(crate) fn log_partition(emissions: &[[f64; NUM_TAGS]], transitions: &[[f64; NUM_TAGS]; NUM_TAGS]) -> f64 {
    forward(emissions, transitions).last().map_or(0.0, |a| log_sum_exp(a))
}

fn forward(emissions: &[[f64; NUM_TAGS]], transitions: &[[f64; NUM_TAGS]; NUM_TAGS]) -> Vec<[f64; NUM_TAGS]> {
    let mut alpha: Vec<[f64; NUM_TAGS]> = Vec::with_capacity(emissions.len());
    for (t, e) in emissions.iter().enumerate() {
        let mut a = [0.0; NUM_TAGS];
        for y in 0..NUM_TAGS {
            a[y] = if t == 0 {
                e[y]
            } else {
                let prev = &alpha[t - 1];
                let terms: [f64; NUM_TAGS] = std::array::from_fn(|p| prev[p] + transitions[p][y]);
                log_sum_exp(&terms) + e[y]
            };
        }
        alpha.push(a);
    }
    alpha
}

fn backward(emissions: &[[f64; NUM_TAGS]], transitions: &[[f64; NUM_TAGS]; NUM_TAGS]) -> Vec<[f64; NUM_TAGS]> {
    let n = emissions.len();
    let mut beta = vec![[0.0; NUM_TAGS]; n];
    for t in (0..n.saturating_sub(1)).rev() {
        for y in 0..NUM_TAGS {
            let terms: [f64; NUM_TAGS] =
                std::array::from_fn(|nx| transitions[y][nx] + emissions[t + 1][nx] + beta[t + 1][nx]);
            beta[t][y] = log_sum_exp(&terms);
        }
    }
    beta
}

/// Negative log-likelihood of `tags` with its marginals.
pub(crate) struct Posterior {
    pub nll: f64,
    /// `unary[t][y] = p(y_t = y)`
    pub unary: Vec<[f64; NUM_TAGS]>,
    /// Summed pairwise marginals `sum_t p(y_{t-1} = a, y_t = b)`.
    pub pairwise: [[f64; NUM_TAGS]; NUM_TAGS],
}

pub(crate) fn posterior(
    emissions: &[[f64; NUM_TAGS]],
    transitions: &[[f64; NUM_TAGS]; NUM_TAGS],
    tags: &[usize],
) -> Result<Posterior> {
    let alpha = forward(emissions, transitions);
    let beta = backward(emissions, transitions);
    let log_z = alpha.last().map_or(0.0, |a| log_sum_exp(a));
    let nll = log_z - path_score(emissions, transitions, tags);
    if !nll.is_finite() {
        return Err(Error::NonFinite("CRF forward pass".into()));
    }
    let unary = alpha.iter().zip(&beta).map(|(a, b)| std::array::from_fn(|y| (a[y] + b[y] - log_z).exp())).collect();
    let mut pairwise = [[0.0; NUM_TAGS]; NUM_TAGS];
    for t in 1..emissions.len() {
        for (p, row) in pairwise.iter_mut().enumerate() {
            for (y, cell) in row.iter_mut().enumerate() {
                *cell += (alpha[t - 1][p] + transitions[p][y] + emissions[t][y] + beta[t][y] - log_z).exp();
            }
        }
    }
    Ok(Posterior { nll, unary, pairwise })
}

/// Highest-scoring path in which `I` only follows `B` or `I`. Ties go to
/// the earlier tag in the order O, B, I.
pub(crate) fn viterbi(emissions: &[[f64; NUM_TAGS]], transitions: &[[f64; NUM_TAGS]; NUM_TAGS]) -> Vec<usize> {
    let n = emissions.len();
    if n == 0 {
        return Vec::new();
    }
    let (o, i) = (Tag::O.index(), Tag::I.index());
    let allowed = |prev: Option<usize>, y: usize| y != i || matches!(prev, Some(p) if p != o);
    let mut delta = vec![[f64::NEG_INFINITY; NUM_TAGS]; n];
    let mut back = vec![[0usize; NUM_TAGS]; n];
    for y in 0..NUM_TAGS {
        if allowed(None, y) {
            delta[0][y] = emissions[0][y];
        }
    }
    for t in 1..n {
        for y in 0..NUM_TAGS {
            let mut best = f64::NEG_INFINITY;
            let mut arg = None;
            for p in 0..NUM_TAGS {
                if !allowed(Some(p), y) || delta[t - 1][p] == f64::NEG_INFINITY {
                    continue;
                }
                let s = delta[t - 1][p] + transitions[p][y];
                if arg.is_none() || s > best {
                    best = s;
                    arg = Some(p);
                }
            }
            if let Some(p) = arg {
                delta[t][y] = best + emissions[t][y];
                back[t][y] = p;
            }
        }
    }
    let mut last = 0;
    for y in 1..NUM_TAGS {
        if delta[n - 1][y] > delta[n - 1][last] {
            last = y;
        }
    }
    let mut path = vec![last; n];
    for t in (1..n).rev() {
        path[t - 1] = back[t][path[t]];
    }
    path
}
