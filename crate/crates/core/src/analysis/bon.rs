use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BonError {
    #[error("best-of-{n} needs 1 <= n <= k, got k = {k}")]
    BadN { n: usize, k: usize },
    #[error("non-finite score")]
    NonFinite,
    #[error("curves do not share N values")]
    MismatchedCurves,
    #[error("gap fit needs at least 2 points, got {0}")]
    TooFewPoints(usize),
}

/// Expected maximum of `n` draws without replacement from `scores`:
/// `Σ_i C(i−1, n−1) / C(k, n) · s_(i)` over ascending order statistics.
pub fn bon_estimate(scores: &[f64], n: usize) -> Result<f64, BonError> {
    let k = scores.len();
    if n == 0 || n > k {
        return Err(BonError::BadN { n, k });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(BonError::NonFinite);
    }
    let mut s = scores.to_vec();
    s.sort_by(f64::total_cmp);
    // Weights from the top down: w_k = n/k, w_{i−1} = w_i · (i−n)/(i−1).
    let mut w = n as f64 / k as f64;
    let mut total = 0.0;
    for i in (n..=k).rev() {
        total += w * s[i - 1];
        if i > 1 {
            w = w * (i - n) as f64 / (i - 1) as f64;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BonCurve {
    pub n_values: Vec<usize>,
    pub scores: Vec<f64>,
    /// Least-squares `(slope, intercept)` of score against log10 N.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<(f64, f64)>,
}

/// Mean over prompts of the best-of-n estimate at each n.
pub fn bon_curve(per_prompt: &[Vec<f64>], n_values: &[usize]) -> Result<BonCurve, BonError> {
    let mut scores = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let mut sum = 0.0;
        for s in per_prompt {
            sum += bon_estimate(s, n)?;
        }
        scores.push(if per_prompt.is_empty() { 0.0 } else { sum / per_prompt.len() as f64 });
    }
    let xs: Vec<f64> = n_values.iter().map(|&n| (n as f64).log10()).collect();
    let fit = least_squares(&xs, &scores);
    Ok(BonCurve { n_values: n_values.to_vec(), scores, fit })
}

fn least_squares(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let a = sxy / sxx;
    Some((a, my - a * mx))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapStatus {
    Intersects,
    /// Slope ≥ 0: the gap never closes.
    NoIntersection,
    /// The curves coincide; N* is the first N.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapFit {
    pub slope: f64,
    pub intercept: f64,
    pub n_star: Option<f64>,
    pub status: GapStatus,
}

/// Fits `Δ = a·log10 N + b` to `curve − baseline`; N* = 10^(−b/a).
pub fn bon_gap_fit(curve: &BonCurve, baseline: &BonCurve) -> Result<GapFit, BonError> {
    if curve.n_values != baseline.n_values || curve.scores.len() != baseline.scores.len() {
        return Err(BonError::MismatchedCurves);
    }
    if curve.n_values.len() < 2 {
        return Err(BonError::TooFewPoints(curve.n_values.len()));
    }
    let delta: Vec<f64> = curve.scores.iter().zip(&baseline.scores).map(|(a, b)| a - b).collect();
    if delta.iter().any(|d| !d.is_finite()) {
        return Err(BonError::NonFinite);
    }
    let xs: Vec<f64> = curve.n_values.iter().map(|&n| (n as f64).log10()).collect();
    if delta.iter().all(|d| *d == 0.0) {
        return Ok(GapFit {
            slope: 0.0,
            intercept: 0.0,
            n_star: Some(curve.n_values[0] as f64),
            status: GapStatus::Degenerate,
        });
    }
    let (slope, intercept) = least_squares(&xs, &delta).ok_or(BonError::TooFewPoints(1))?;
    if slope >= 0.0 {
        return Ok(GapFit { slope, intercept, n_star: None, status: GapStatus::NoIntersection });
    }
    Ok(GapFit { slope, intercept, n_star: Some(10f64.powf(-intercept / slope)), status: GapStatus::Intersects })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(n: &[usize], s: &[f64]) -> BonCurve {
        BonCurve { n_values: n.to_vec(), scores: s.to_vec(), fit: None }
    }

    #[test]
    fn estimator_examples() {
        assert_eq!(bon_estimate(&[0.0, 1.0], 1).unwrap(), 0.5);
        assert_eq!(bon_estimate(&[0.0, 1.0], 2).unwrap(), 1.0);
        let v = bon_estimate(&[0.2, 0.5, 0.3], 2).unwrap();
        assert!((v - 1.3 / 3.0).abs() < 1e-12);
        assert_eq!(bon_estimate(&[1.0], 2), Err(BonError::BadN { n: 2, k: 1 }));
    }

    #[test]
    fn gap_examples() {
        let n = [10, 1000];
        let g = bon_gap_fit(&curve(&n, &[0.3, 0.4]), &curve(&n, &[0.1, 0.4])).unwrap();
        assert_eq!(g.status, GapStatus::Intersects);
        assert!((g.n_star.unwrap() - 1000.0).abs() < 1e-6);

        let g = bon_gap_fit(&curve(&n, &[0.5, 0.6]), &curve(&n, &[0.4, 0.5])).unwrap();
        assert_eq!(g.status, GapStatus::NoIntersection);
        assert_eq!(g.n_star, None);

        let g = bon_gap_fit(&curve(&n, &[0.5, 0.6]), &curve(&n, &[0.5, 0.6])).unwrap();
        assert_eq!(g.status, GapStatus::Degenerate);
        assert_eq!(g.n_star, Some(10.0));

        assert_eq!(bon_gap_fit(&curve(&[1], &[0.0]), &curve(&[1], &[0.0])), Err(BonError::TooFewPoints(1)));
    }
}
