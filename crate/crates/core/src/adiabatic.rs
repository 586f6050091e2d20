//! Ground states of `H'(lambda) = lambda H - h sum_i S_i^z` near `lambda = 0`:
//! fitted `d xi^2 / d lambda` against `-2 R_max / (h N)`, and the explicit
//! first-order perturbative state.

use serde::{Deserialize, Serialize};

use crate::dynamics::{assemble, check_grid, HarnessOptions, SlopeResult};
use crate::error::{Error, Result};
use crate::fit::geometric_grid;
use crate::kernel::{maximize_r, positivity_threshold, AngleSet};
use crate::model::CouplingSpec;
use crate::oracle;
use crate::squeezing::{squeezing_report, squeezing_report_weighted, LocalOptions, SqueezingReport};
use crate::statevec::{ground_state_with_fields, GroundStateResult, StateVector};
use crate::model::SpinConfig;
use crate::C64;

/// Gap below `GAP_ABORT * h` along a grid aborts the harness.
pub const GAP_ABORT: f64 = 1e-8;

fn check_field(field_h: f64) -> Result<()> {
    if !(field_h > 0.0 && field_h.is_finite()) {
        return Err(Error::InvalidInput(format!("field must be positive, got {field_h}")));
    }
    Ok(())
}

/// `|CSS> - (dlambda / 2h) sum_{i != j} K*_ij |CSS_ij>` as raw amplitudes,
/// with `|CSS_ij> = S_i^- S_j^- |CSS>`. Not normalized.
pub fn perturbative_amplitudes(spec: &CouplingSpec, dlambda: f64, field_h: f64) -> Result<Vec<C64>> {
    check_field(field_h)?;
    let n = spec.n_sites();
    if n > crate::statevec::MAX_STATE_SITES {
        return Err(Error::TooLarge { n, cap: crate::statevec::MAX_STATE_SITES });
    }
    let all_up = (1usize << n) - 1;
    let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
    amps[all_up] = C64::new(1.0, 0.0);
    let c = -dlambda / (2.0 * field_h);
    for i in 0..n {
        for j in i + 1..n {
            // Both orderings reach the same basis state.
            amps[all_up ^ (1 << i) ^ (1 << j)] = (spec.k(i, j).conj() + spec.k(j, i).conj()) * c;
        }
    }
    Ok(amps)
}

/// Normalized first-order ground state. The displayed superposition is only
/// normalized to `O(dlambda^2)`; this rescales it exactly.
pub fn perturbative_state(spec: &CouplingSpec, dlambda: f64, field_h: f64) -> Result<StateVector> {
    StateVector::from_amplitudes(spec.n_sites(), perturbative_amplitudes(spec, dlambda, field_h)?)
}

fn ground(spec: &CouplingSpec, lambda: f64, fields: &[f64], field_h: f64) -> Result<GroundStateResult> {
    let gs = ground_state_with_fields(spec, lambda, fields)?;
    if gs.gap < GAP_ABORT * field_h {
        return Err(Error::GapCollapse { lambda, gap: gs.gap, threshold: GAP_ABORT * field_h });
    }
    Ok(gs)
}

/// Geometric grid `1e-4 .. 1e-2` in units of `h / ||H||`.
pub fn default_lambda_grid(spec: &CouplingSpec, field_h: f64) -> Vec<f64> {
    let s = field_h / spec.coupling_scale();
    geometric_grid(1e-4 * s, 1e-2 * s, 9)
}

fn seeded(local: &LocalOptions, angles: &AngleSet) -> LocalOptions {
    let mut l = local.clone();
    l.seeds.push(angles.clone());
    l
}

/// Squeezing reports of the exact ground state of `lambda H - sum_i fields_i S_i^z`
/// on `grid`. With `config`, the modified spin `J'` is used.
pub(crate) fn ground_reports(
    spec: &CouplingSpec,
    fields: &[f64],
    field_h: f64,
    grid: &[f64],
    config: Option<&SpinConfig>,
    local: &LocalOptions,
) -> Result<Vec<SqueezingReport>> {
    crate::ordered_map(grid, |&lambda| {
        let gs = ground(spec, lambda, fields, field_h)?;
        match config {
            Some(c) => squeezing_report_weighted(&gs.state, c, local),
            None => squeezing_report(&gs.state, local),
        }
    })
    .into_iter()
    .collect()
}

/// Fitted `d xi^2 / d lambda` of the exact ground state and the prediction
/// `-2 R_max / (h N)`.
pub fn adiabatic_slope(spec: &CouplingSpec, field_h: f64, lambda_grid: &[f64], opts: &HarnessOptions) -> Result<SlopeResult> {
    check_field(field_h)?;
    check_grid(lambda_grid)?;
    let n = spec.n_sites();
    let rmax = maximize_r(spec, &opts.kernel);
    let local = seeded(&opts.local, &rmax.angles);
    let reports = ground_reports(spec, &vec![field_h; n], field_h, lambda_grid, None, &local)?;
    let r_eff = if rmax.value > positivity_threshold(spec) { rmax.value } else { 0.0 };
    let predicted = -2.0 * r_eff / (field_h * n as f64) + 0.0; // no -0.0 in reports
    assemble(opts.which, lambda_grid.to_vec(), reports, predicted, rmax.value, opts.local.ascent.seed)
}

/// `|<J^z> - N/2|` on the exact ground state at `lambda = dlambda`.
pub fn perturbed_jz_check(spec: &CouplingSpec, dlambda: f64, field_h: f64) -> Result<f64> {
    check_field(field_h)?;
    let n = spec.n_sites();
    let gs = ground_state_with_fields(spec, dlambda, &vec![field_h; n])?;
    Ok((gs.state.jz() - n as f64 / 2.0).abs())
}

/// Dense `<CSS_ij| J_perp({theta})^2 |CSS>`; the closed form is
/// `e^{i(theta_i + theta_j)} / 2`.
pub fn matrix_element_oracle(angles: &AngleSet, i: usize, j: usize) -> Result<C64> {
    let n = angles.len();
    if n > crate::dynamics::DENSE_ORACLE_CAP {
        return Err(Error::TooLarge { n, cap: crate::dynamics::DENSE_ORACLE_CAP });
    }
    if i == j {
        return Err(Error::InvalidInput("|CSS_ii> vanishes; need i != j".into()));
    }
    if i >= n || j >= n {
        return Err(Error::InvalidInput(format!("site index out of range for n = {n}")));
    }
    let css = oracle::dense_css(n);
    let lower = oracle::two_site_op(n, i, &oracle::sm(), j, &oracle::sm());
    let css_ij = &lower * &css;
    let jp = oracle::dense_j_perp(n, angles.as_slice());
    Ok(css_ij.dotc(&(&jp * &(&jp * &css))))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationError {
    /// `|| psi_exact - psi_pert ||` with both phases fixed so the `|CSS>`
    /// amplitude is real and positive; `O(dlambda^2)`.
    pub distance: f64,
    /// `1 - |<psi_exact|psi_pert>|^2`; `O(dlambda^4)` because the leading
    /// error is itself a first-order-small amplitude.
    pub infidelity: f64,
}

/// Compare [`perturbative_state`] with the exact ground state at `dlambda`.
pub fn perturbation_error(spec: &CouplingSpec, dlambda: f64, field_h: f64) -> Result<PerturbationError> {
    check_field(field_h)?;
    let n = spec.n_sites();
    let exact = ground(spec, dlambda, &vec![field_h; n], field_h)?.state;
    let pert = perturbative_state(spec, dlambda, field_h)?;
    let all_up = (1usize << n) - 1;
    let align = |v: &StateVector| -> Vec<C64> {
        let a = v.amplitudes()[all_up];
        let phase = if a.norm() > 0.0 { a.conj() / a.norm() } else { C64::new(1.0, 0.0) };
        v.amplitudes().iter().map(|x| x * phase).collect()
    };
    let (e, p) = (align(&exact), align(&pert));
    let distance = e.iter().zip(&p).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let infidelity = (1.0 - exact.inner(&pert).norm_sqr()).max(0.0);
    Ok(PerturbationError { distance, infidelity })
}
