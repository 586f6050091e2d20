//! The coupling kernel `K({theta}) = sum_ij exp(i(theta_i + theta_j)) K_ij = R + i I`
//! and its maximization over site-local angles.
//!
//! A global shift `theta_i -> theta_i + phi` multiplies the kernel by
//! `exp(2 i phi)`. In particular `phi = pi/2` negates it and `phi = pi/4`
//! maps `(R, I)` to `(-I, R)`, so `I_max = R_max >= 0` for every spec.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CouplingSpec;
use crate::optimize::{multistart, AscentOptions};
use crate::C64;

/// One transverse-axis angle per site, canonicalized to `[0, 2pi)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleSet(Vec<f64>);

impl AngleSet {
    pub fn new(thetas: Vec<f64>) -> Result<Self> {
        if let Some(bad) = thetas.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite angle {bad}")));
        }
        Ok(AngleSet(thetas.into_iter().map(|t| t.rem_euclid(TAU)).collect()))
    }

    pub fn uniform(n: usize, theta: f64) -> Self {
        AngleSet(vec![theta.rem_euclid(TAU); n])
    }

    pub fn zeros(n: usize) -> Self {
        AngleSet(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Every angle shifted by `phi`.
    pub fn shifted(&self, phi: f64) -> Self {
        AngleSet(self.0.iter().map(|t| (t + phi).rem_euclid(TAU)).collect())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelMaxResult {
    /// `I_max` or `R_max`.
    pub value: f64,
    pub angles: AngleSet,
    /// Best value among the analytic uniform-angle seeds.
    pub analytic_lower_bound: f64,
    pub converged: bool,
    pub n_restarts_used: usize,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct KernelOptions {
    pub ascent: AscentOptions,
    /// Overrides the spec's `include_diagonal_in_kernel` flag when set.
    pub include_diagonal: Option<bool>,
}

impl KernelOptions {
    /// Only the `i != j` terms, which are the ones that act on spin-1/2 states.
    pub fn active_terms() -> Self {
        KernelOptions { include_diagonal: Some(false), ..Default::default() }
    }
}

fn check_len(spec: &CouplingSpec, n: usize) -> Result<()> {
    if spec.n_sites() != n {
        return Err(Error::DimensionMismatch { expected: spec.n_sites(), got: n });
    }
    Ok(())
}

fn phases(thetas: &[f64]) -> Vec<C64> {
    thetas.iter().map(|&t| C64::from_polar(1.0, t)).collect()
}

/// Kernel value for raw angles; `include_diag` selects the `i = j` terms.
pub(crate) fn kernel_value(spec: &CouplingSpec, thetas: &[f64], include_diag: bool) -> C64 {
    let w = phases(thetas);
    let n = spec.n_sites();
    let mut total = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if i == j && !include_diag {
                continue;
            }
            total += w[i] * w[j] * spec.k(i, j);
        }
    }
    total
}

/// `dK/dtheta_l = 2i exp(i theta_l) sum_j K_lj exp(i theta_j)` (symmetric `K`).
pub(crate) fn kernel_gradient_raw(spec: &CouplingSpec, thetas: &[f64], include_diag: bool) -> Vec<C64> {
    let w = phases(thetas);
    let n = spec.n_sites();
    (0..n)
        .map(|l| {
            let s: C64 = (0..n)
                .filter(|&j| include_diag || j != l)
                .map(|j| spec.k(l, j) * w[j])
                .sum();
            C64::new(0.0, 2.0) * w[l] * s
        })
        .collect()
}

/// `R + i I` at `angles`, honouring the spec's diagonal flag.
pub fn eval_kernel(spec: &CouplingSpec, angles: &AngleSet) -> Result<C64> {
    check_len(spec, angles.len())?;
    Ok(kernel_value(spec, angles.as_slice(), spec.include_diagonal_in_kernel()))
}

/// `dK/dtheta_l` for every site; real parts give `grad R`, imaginary `grad I`.
pub fn kernel_gradient(spec: &CouplingSpec, angles: &AngleSet) -> Result<Vec<C64>> {
    check_len(spec, angles.len())?;
    Ok(kernel_gradient_raw(spec, angles.as_slice(), spec.include_diagonal_in_kernel()))
}

/// `K({theta_i = 0}) = R_0 + i I_0`.
pub fn kernel_at_zero(spec: &CouplingSpec, include_diag: bool) -> C64 {
    kernel_value(spec, &vec![0.0; spec.n_sites()], include_diag)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Part {
    Real,
    Imag,
}

fn part(z: C64, p: Part) -> f64 {
    match p {
        Part::Real => z.re,
        Part::Imag => z.im,
    }
}

fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Uniform seeds: the textbook choices driven by the signs of `R_0` and
/// `I_0`, plus the best uniform angle `2 phi = target - arg K_0`.
fn analytic_seeds(k0: C64, p: Part) -> Vec<f64> {
    let mut seeds = Vec::new();
    let (r0, i0) = (k0.re, k0.im);
    match p {
        Part::Imag => {
            if r0 != 0.0 {
                seeds.push(FRAC_PI_4 * sign(r0));
            }
            if i0 != 0.0 {
                seeds.push(if i0 > 0.0 { 0.0 } else { FRAC_PI_2 });
            }
        }
        Part::Real => {
            if r0 != 0.0 {
                seeds.push(if r0 > 0.0 { 0.0 } else { FRAC_PI_2 });
            }
            if i0 != 0.0 {
                seeds.push(-FRAC_PI_4 * sign(i0));
            }
        }
    }
    if k0.norm() > 0.0 {
        let target = if p == Part::Imag { FRAC_PI_2 } else { 0.0 };
        seeds.push(0.5 * (target - k0.arg()));
    }
    seeds
}

fn maximize_part(spec: &CouplingSpec, p: Part, opts: &KernelOptions) -> KernelMaxResult {
    let n = spec.n_sites();
    let include_diag = opts.include_diagonal.unwrap_or(spec.include_diagonal_in_kernel());
    let all_zero = (0..n).all(|i| (0..n).all(|j| (i == j && !include_diag) || spec.k(i, j).norm() == 0.0));
    if all_zero {
        return KernelMaxResult {
            value: 0.0,
            angles: AngleSet::zeros(n),
            analytic_lower_bound: 0.0,
            converged: true,
            n_restarts_used: 0,
        };
    }

    let k0 = kernel_at_zero(spec, include_diag);
    let seeds: Vec<Vec<f64>> = analytic_seeds(k0, p).into_iter().map(|t| vec![t; n]).collect();
    let analytic_lower_bound = seeds
        .iter()
        .map(|s| part(kernel_value(spec, s, include_diag), p))
        .fold(0.0, f64::max);

    let objective = |theta: &[f64], grad: &mut [f64]| -> f64 {
        for (g, d) in grad.iter_mut().zip(kernel_gradient_raw(spec, theta, include_diag)) {
            *g = part(d, p);
        }
        part(kernel_value(spec, theta, include_diag), p)
    };
    // Gradient tolerance relative to the coupling magnitude.
    let mut ascent = opts.ascent;
    ascent.grad_tol *= spec.k_max_abs().max(1.0);
    let res = multistart(&objective, n, &seeds, &ascent);
    KernelMaxResult {
        value: res.best.value,
        angles: AngleSet::new(res.best.angles).expect("finite angles"),
        analytic_lower_bound,
        converged: res.best.converged,
        n_restarts_used: res.starts_used,
    }
}

/// `I_max = max_theta I({theta})`.
pub fn maximize_i(spec: &CouplingSpec, opts: &KernelOptions) -> KernelMaxResult {
    maximize_part(spec, Part::Imag, opts)
}

/// `R_max = max_theta R({theta})`.
pub fn maximize_r(spec: &CouplingSpec, opts: &KernelOptions) -> KernelMaxResult {
    maximize_part(spec, Part::Real, opts)
}

/// Threshold above which a kernel maximum counts as strictly positive.
pub fn positivity_threshold(spec: &CouplingSpec) -> f64 {
    let n = spec.n_sites() as f64;
    1e-9 * (spec.k_max_abs() * n * n).max(1.0)
}

/// First-order squeezing verdict for a kernel maximum.
pub fn squeezing_verdict(spec: &CouplingSpec, max_value: f64) -> bool {
    max_value > positivity_threshold(spec)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelSummary {
    pub n_sites: usize,
    pub include_diagonal: bool,
    pub r0: f64,
    pub i0: f64,
    pub i_max: KernelMaxResult,
    pub r_max: KernelMaxResult,
    pub dynamical_squeezing: bool,
    pub adiabatic_squeezing: bool,
}

/// Everything the `kernel` report needs, with the given diagonal convention.
pub fn summarize(spec: &CouplingSpec, opts: &KernelOptions) -> KernelSummary {
    let include_diagonal = opts.include_diagonal.unwrap_or(spec.include_diagonal_in_kernel());
    let k0 = kernel_at_zero(spec, include_diagonal);
    let i_max = maximize_i(spec, opts);
    let r_max = maximize_r(spec, opts);
    KernelSummary {
        n_sites: spec.n_sites(),
        include_diagonal,
        r0: k0.re,
        i0: k0.im,
        dynamical_squeezing: squeezing_verdict(spec, i_max.value),
        adiabatic_squeezing: squeezing_verdict(spec, r_max.value),
        i_max,
        r_max,
    }
}
