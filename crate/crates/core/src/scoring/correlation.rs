//! Product-moment and rank correlation.

use crate::error::{Error, Result};

fn check_lengths(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::TooFew { needed: 2, got: x.len() });
    }
    Ok(())
}

/// Pearson correlation, or `None` when either input has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    check_lengths(x, y)?;
    Ok(pearson_unchecked(x, y))
}

fn pearson_unchecked(x: &[f64], y: &[f64]) -> Option<f64> {
    // Checked exactly: rounding in the mean can leave a constant input
    // with a tiny nonzero variance.
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if constant(x) || constant(y) {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based fractional ranks: tied values share the mean of their positions.
pub fn fractional_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && x[order[j]] == x[order[i]] {
            j += 1;
        }
        // positions i+1..=j share rank (i+1+j)/2
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

/// Spearman correlation with average ranks for ties, or `None` when either
/// rank vector is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    check_lengths(x, y)?;
    Ok(pearson_unchecked(&fractional_ranks(x), &fractional_ranks(y)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_input_with_inexact_mean_is_undefined() {
        let x = vec![0.4; 7];
        assert_eq!(pearson(&x, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]).unwrap(), None);
        assert_eq!(pearson(&[0.1, 0.2, 0.3], &[0.1; 3]).unwrap(), None);
    }

    #[test]
    fn spearman_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(spearman(&x, &x).unwrap(), Some(1.0));
        assert_eq!(spearman(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap(), Some(-1.0));
        assert!((spearman(&x, &[1.0, 3.0, 2.0, 4.0]).unwrap().unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn pearson_examples() {
        let x = [0.0, 1.0, 2.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson(&x, &y).unwrap().unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap().unwrap() + 1.0).abs() < 1e-15);
        // sxy = 3, sxx = 2, syy = 14/3 -> 3 / sqrt(28/3) = 0.98198...
        let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap().unwrap();
        assert!((r - 0.981).abs() < 1e-3, "{r}");
    }

    #[test]
    fn errors_and_undefined() {
        assert!(matches!(spearman(&[1.0, 2.0], &[1.0]), Err(Error::LengthMismatch(2, 1))));
        assert!(matches!(spearman(&[1.0], &[1.0]), Err(Error::TooFew { .. })));
        assert!(pearson(&[1.0, 2.0, 3.0], &[1.0]).is_err());
        assert_eq!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap(), None);
        assert_eq!(pearson(&[1.0, 2.0], &[5.0, 5.0]).unwrap(), None);
    }

    #[test]
    fn ties_get_average_ranks() {
        assert_eq!(fractional_ranks(&[10.0, 20.0, 10.0, 30.0]), vec![1.5, 3.0, 1.5, 4.0]);
        assert_eq!(fractional_ranks(&[0.0, 0.0, 0.0]), vec![2.0, 2.0, 2.0]);
    }

    proptest! {
        #[test]
        fn spearman_invariant_under_increasing_transform(
            pairs in prop::collection::vec((0u8..6, 0u8..6), 2..10)
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            let tx: Vec<f64> = x.iter().map(|v| v.powi(3) + 2.0 * v - 7.0).collect();
            let base = spearman(&x, &y).unwrap();
            let moved = spearman(&tx, &y).unwrap();
            match (base, moved) {
                (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12),
                (a, b) => prop_assert_eq!(a, b),
            }
        }

        #[test]
        fn correlations_symmetric_and_bounded(
            pairs in prop::collection::vec((-50i32..50, -50i32..50), 2..12)
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            for f in [pearson, spearman] {
                let a = f(&x, &y).unwrap();
                let b = f(&y, &x).unwrap();
                prop_assert_eq!(a, b);
                if let Some(r) = a {
                    prop_assert!((-1.0..=1.0).contains(&r));
                }
            }
        }
    }
}
