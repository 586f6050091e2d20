//! Short-grid slope extraction: least squares of `y(x) - 1 = s x + c x^2`.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    pub quadratic: f64,
    /// Whether `|c| x_max < 0.1 |s|` and the residuals are consistent with
    /// roundoff-level noise.
    pub reliable: bool,
}

/// Fit `(y - 1) / x = s + c x`, which weights every grid point equally in
/// relative terms. Requires at least two distinct positive abscissae.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<SlopeFit> {
    if xs.len() != ys.len() || xs.len() < 2 || xs.iter().any(|x| !(*x > 0.0)) {
        return None;
    }
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(&x, &y)| (x, (y - 1.0) / x)).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let c = sxy / sxx;
    let s = my - c * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - s - c * p.0).powi(2)).sum();
    let dof = pts.len().saturating_sub(2);
    let stderr = if dof == 0 {
        0.0
    } else {
        let sigma2 = rss / dof as f64;
        (sigma2 * (1.0 / n + mx * mx / sxx)).sqrt()
    };
    let x_max = xs.iter().fold(0.0f64, |m, x| m.max(*x));
    let scale = s.abs().max(1e-300);
    let quadratic_small = (c * x_max).abs() <= 0.1 * scale || (s.abs() < 1e-6 && (c * x_max).abs() < 1e-6);
    let noise_ok = stderr <= 1e-3 * scale.max(1e-6);
    Some(SlopeFit { slope: s, stderr, quadratic: c, reliable: quadratic_small && noise_ok })
}

/// `n` points geometrically spaced over `[lo, hi]`.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let r = (hi / lo).ln() / (n - 1) as f64;
            (0..n).map(|k| lo * (r * k as f64).exp()).collect()
        }
    }
}
