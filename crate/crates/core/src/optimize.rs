//! Multistart gradient ascent on the angle torus `[0, 2pi)^N`.
//!
//! Each run is steepest ascent with a Barzilai-Borwein trial step and
//! backtracking. Once objective differences drop to roundoff level, steps are
//! accepted on the sign of the directional derivative instead, so the
//! gradient can be driven well below `sqrt(eps)`.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
pub struct AscentOptions {
    /// Random starts in addition to any explicit seeds.
    pub restarts: usize,
    pub max_iter: usize,
    /// Converged when `max_l |df/dtheta_l| < grad_tol`.
    pub grad_tol: f64,
    pub seed: u64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        AscentOptions { restarts: 32, max_iter: 10_000, grad_tol: 1e-10, seed: 0x5eed }
    }
}

#[derive(Clone, Debug)]
pub struct AscentResult {
    pub value: f64,
    /// Canonical representatives in `[0, 2pi)`.
    pub angles: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
}

#[derive(Clone, Debug)]
pub struct MultistartResult {
    pub best: AscentResult,
    /// Index of the winning start (explicit seeds first, then random starts).
    pub best_index: usize,
    pub starts_used: usize,
}

fn inf_norm(g: &[f64]) -> f64 {
    g.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Single gradient-ascent run. `f(theta, grad)` returns the objective and
/// writes its gradient.
pub fn ascend<F>(f: &F, start: &[f64], opts: &AscentOptions) -> AscentResult
where
    F: Fn(&[f64], &mut [f64]) -> f64,
{
    let n = start.len();
    let mut theta = start.to_vec();
    let mut grad = vec![0.0; n];
    let mut value = f(&theta, &mut grad);
    let mut cand = vec![0.0; n];
    let mut cand_grad = vec![0.0; n];
    let mut step = 1.0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        let gnorm = inf_norm(&grad);
        if gnorm < opts.grad_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let g2 = dot(&grad, &grad);
        let mut accepted = false;
        let mut trial = step;
        for _ in 0..80 {
            for ((c, t), g) in cand.iter_mut().zip(&theta).zip(&grad) {
                *c = t + trial * g;
            }
            let cv = f(&cand, &mut cand_grad);
            let roundoff = 1e-13 * (1.0 + value.abs());
            let armijo = cv >= value + 1e-4 * trial * g2;
            let flat_but_ascending = (cv - value).abs() <= roundoff && dot(&cand_grad, &grad) > 0.0;
            if cv.is_finite() && (armijo || flat_but_ascending) {
                // Barzilai-Borwein step for the next iteration.
                let s: Vec<f64> = cand.iter().zip(&theta).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = cand_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
                let curvature = -dot(&s, &y);
                step = if curvature > 0.0 { dot(&s, &s) / curvature } else { 2.0 * trial };
                step = step.clamp(1e-12, 1e6);
                std::mem::swap(&mut theta, &mut cand);
                std::mem::swap(&mut grad, &mut cand_grad);
                value = cv;
                accepted = true;
                break;
            }
            trial *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let grad_norm = inf_norm(&grad);
    AscentResult {
        value,
        angles: theta.iter().map(|t| t.rem_euclid(TAU)).collect(),
        converged: converged || grad_norm < opts.grad_tol,
        iterations,
        grad_norm,
    }
}

/// Ascent from every explicit seed followed by `opts.restarts` random starts.
/// The best value wins; ties keep the earliest start.
pub fn multistart<F>(f: &F, n: usize, seeds: &[Vec<f64>], opts: &AscentOptions) -> MultistartResult
where
    F: Fn(&[f64], &mut [f64]) -> f64 + Sync,
{
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts: Vec<Vec<f64>> = seeds.to_vec();
    for _ in 0..opts.restarts {
        starts.push((0..n).map(|_| rng.gen_range(0.0..TAU)).collect());
    }
    assert!(!starts.is_empty(), "multistart needs at least one start");
    let runs = crate::ordered_map(&starts, |s| ascend(f, s, opts));
    let mut best_index = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.value > runs[best_index].value {
            best_index = i;
        }
    }
    MultistartResult {
        best: runs[best_index].clone(),
        best_index,
        starts_used: starts.len(),
    }
}
