//! Error summaries for Monte-Carlo angle estimates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Root mean square of `errors`; `None` when empty.
pub fn rmse(errors: &[f64]) -> Option<f64> {
    if errors.is_empty() {
        return None;
    }
    Some((errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt())
}

/// Median of `|errors|`; even counts average the two middle values.
pub fn median_abs(errors: &[f64]) -> Option<f64> {
    if errors.is_empty() {
        return None;
    }
    let mut a: Vec<f64> = errors.iter().map(|e| e.abs()).collect();
    a.sort_by(f64::total_cmp);
    let n = a.len();
    Some(if n % 2 == 1 { a[n / 2] } else { 0.5 * (a[n / 2 - 1] + a[n / 2]) })
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> Option<(f64, f64)> {
    let m = mean(xs)?;
    if xs.len() < 2 {
        return Some((m, f64::INFINITY));
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    Some((m, (var / xs.len() as f64).sqrt()))
}

/// Linear-interpolated quantile of sorted data, `p` in `[0, 1]`.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile bootstrap interval for the RMSE at confidence `level`.
pub fn bootstrap_rmse_ci(errors: &[f64], resamples: usize, level: f64, seed: u64) -> Option<(f64, f64)> {
    if errors.is_empty() || resamples == 0 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = errors.len();
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            let ss: f64 = (0..n).map(|_| errors[rng.random_range(0..n)].powi(2)).sum();
            (ss / n as f64).sqrt()
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    Some((quantile_sorted(&stats, alpha), quantile_sorted(&stats, 1.0 - alpha)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summaries() {
        assert_eq!(rmse(&[3.0, -4.0]).unwrap(), (12.5f64).sqrt());
        assert_eq!(median_abs(&[-3.0, 1.0, 2.0]).unwrap(), 2.0);
        assert_eq!(median_abs(&[-3.0, 1.0, 2.0, 10.0]).unwrap(), 2.5);
        assert!(rmse(&[]).is_none());
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bootstrap_brackets_the_estimate() {
        let errors: Vec<f64> = (0..400).map(|i| ((i * 37 % 101) as f64 - 50.0) / 10.0).collect();
        let r = rmse(&errors).unwrap();
        let (lo, hi) = bootstrap_rmse_ci(&errors, 1000, 0.95, 7).unwrap();
        assert!(lo < r && r < hi);
        assert_eq!(bootstrap_rmse_ci(&errors, 1000, 0.95, 7).unwrap(), (lo, hi));
        let constant = vec![2.0; 50];
        assert_eq!(bootstrap_rmse_ci(&constant, 100, 0.95, 1).unwrap(), (2.0, 2.0));
    }
}
