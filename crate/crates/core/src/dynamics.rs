//! Short-time squeezing from `|CSS>`: fitted `d xi^2 / dt` at `t -> 0`
//! against `-4 I_max / N`, and dense checks of the commutator identities
//! behind that rate.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_slope, geometric_grid};
use crate::kernel::{kernel_value, maximize_i, positivity_threshold, AngleSet, KernelOptions};
use crate::model::CouplingSpec;
use crate::oracle;
use crate::squeezing::{squeezing_report, LocalOptions, SqueezingReport};
use crate::statevec::{css_state, evolve_with, EvolveOptions};
use crate::C64;

/// Which squeezing convention a harness fits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum XiKind {
    #[default]
    Local,
    Uniform,
}

impl FromStr for XiKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local" => Ok(XiKind::Local),
            "uniform" => Ok(XiKind::Uniform),
            other => Err(Error::InvalidInput(format!("xi kind must be local or uniform, got {other:?}"))),
        }
    }
}

impl fmt::Display for XiKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            XiKind::Local => "local",
            XiKind::Uniform => "uniform",
        })
    }
}

/// Fitted slopes below this magnitude count as zero.
pub const ZERO_SLOPE: f64 = 1e-6;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlopeResult {
    pub which: XiKind,
    pub slope_estimate: f64,
    pub slope_stderr: f64,
    pub predicted_slope: f64,
    /// `I_max` (dynamics) or `R_max` (adiabatic) behind the prediction.
    pub kernel_max: f64,
    /// Times or lambdas.
    pub t_grid: Vec<f64>,
    pub xi2_values: Vec<f64>,
    pub relative_error: f64,
    pub quadratic_coeff: f64,
    pub reliable: bool,
    pub reports: Vec<SqueezingReport>,
    pub seed: u64,
}

impl SlopeResult {
    /// First-order squeezing seen in the fitted curve.
    pub fn squeezes(&self) -> bool {
        self.slope_estimate < -ZERO_SLOPE
    }

    pub fn predicts_squeezing(&self) -> bool {
        self.predicted_slope < 0.0
    }

    /// Relative agreement within `tol`, or both slopes zero.
    pub fn within(&self, tol: f64) -> bool {
        self.relative_error <= tol || (self.predicted_slope == 0.0 && self.slope_estimate.abs() < ZERO_SLOPE)
    }
}

pub(crate) fn relative_error(estimate: f64, predicted: f64) -> f64 {
    (estimate - predicted).abs() / predicted.abs().max(1e-6)
}

#[derive(Clone, Debug)]
pub struct HarnessOptions {
    pub which: XiKind,
    pub local: LocalOptions,
    pub kernel: KernelOptions,
    pub evolve: EvolveOptions,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        HarnessOptions {
            which: XiKind::Local,
            local: LocalOptions::default(),
            kernel: KernelOptions::active_terms(),
            evolve: EvolveOptions::default(),
        }
    }
}

impl HarnessOptions {
    pub fn with_which(mut self, which: XiKind) -> Self {
        self.which = which;
        self
    }
}

/// Geometric grid `1e-4 .. 1e-2` in units of the inverse coupling scale.
pub fn default_time_grid(spec: &CouplingSpec) -> Vec<f64> {
    let s = spec.coupling_scale();
    geometric_grid(1e-4 / s, 1e-2 / s, 9)
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidInput(format!("grid needs at least 2 points, got {}", grid.len())));
    }
    if grid.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::InvalidInput("grid points must be positive and finite".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("grid must be strictly increasing".into()));
    }
    Ok(())
}

pub(crate) fn assemble(
    which: XiKind,
    grid: Vec<f64>,
    reports: Vec<SqueezingReport>,
    predicted_slope: f64,
    kernel_max: f64,
    seed: u64,
) -> Result<SlopeResult> {
    let xi2_values: Vec<f64> = reports
        .iter()
        .map(|r| match which {
            XiKind::Local => r.xi2_local,
            XiKind::Uniform => r.xi2_uniform,
        })
        .collect();
    let fit = fit_slope(&grid, &xi2_values).ok_or_else(|| Error::InvalidInput("degenerate grid".into()))?;
    let converged = reports.iter().all(|r| r.local_converged) || which == XiKind::Uniform;
    Ok(SlopeResult {
        which,
        slope_estimate: fit.slope,
        slope_stderr: fit.stderr,
        predicted_slope,
        kernel_max,
        relative_error: relative_error(fit.slope, predicted_slope),
        quadratic_coeff: fit.quadratic,
        reliable: fit.reliable && converged,
        t_grid: grid,
        xi2_values,
        reports,
        seed,
    })
}

/// Squeezing reports of `exp(-i H t)|CSS>` on `t_grid`, with the local
/// minimization seeded at the kernel optimum.
pub fn evolve_reports(spec: &CouplingSpec, t_grid: &[f64], opts: &HarnessOptions) -> Result<(Vec<SqueezingReport>, f64)> {
    let kmax = maximize_i(spec, &opts.kernel);
    let mut local = opts.local.clone();
    local.seeds.push(kmax.angles.clone());
    let css = css_state(spec.n_sites())?;
    let reports = crate::ordered_map(t_grid, |&t| {
        let psi = evolve_with(spec, &css, t, &opts.evolve)?;
        squeezing_report(&psi, &local)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok((reports, kmax.value))
}

/// Fitted short-time slope of `xi^2(t)` and the prediction `-4 I_max / N`.
pub fn short_time_slope(spec: &CouplingSpec, which: XiKind, t_grid: &[f64]) -> Result<SlopeResult> {
    short_time_slope_with(spec, t_grid, &HarnessOptions::default().with_which(which))
}

pub fn short_time_slope_with(spec: &CouplingSpec, t_grid: &[f64], opts: &HarnessOptions) -> Result<SlopeResult> {
    check_grid(t_grid)?;
    let (reports, i_max) = evolve_reports(spec, t_grid, opts)?;
    let n = spec.n_sites() as f64;
    let i_eff = if i_max > positivity_threshold(spec) { i_max } else { 0.0 };
    assemble(opts.which, t_grid.to_vec(), reports, -4.0 * i_eff / n + 0.0, i_max, opts.local.ascent.seed)
}

/// Largest system the dense oracles accept.
pub const DENSE_ORACLE_CAP: usize = 6;

fn check_dense(n: usize) -> Result<()> {
    if n > DENSE_ORACLE_CAP {
        return Err(Error::TooLarge { n, cap: DENSE_ORACLE_CAP });
    }
    Ok(())
}

/// Dense `<CSS| [J_perp^2, H] |CSS>`; equals `-i I({theta})` with the
/// `i != j` kernel.
pub fn commutator_oracle(spec: &CouplingSpec, angles: &AngleSet) -> Result<C64> {
    let n = spec.n_sites();
    check_dense(n)?;
    if angles.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: angles.len() });
    }
    let h = oracle::dense_hamiltonian(spec);
    let jp = oracle::dense_j_perp(n, angles.as_slice());
    let jp2 = &jp * &jp;
    let comm = &jp2 * &h - &h * &jp2;
    Ok(oracle::expectation(&comm, &oracle::dense_css(n)))
}

/// `-i I({theta})` from the kernel formula, for comparison with
/// [`commutator_oracle`].
pub fn commutator_prediction(spec: &CouplingSpec, angles: &AngleSet) -> C64 {
    C64::new(0.0, -kernel_value(spec, angles.as_slice(), false).im)
}

/// Two-site operator types entering `H`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairKind {
    PlusPlus,
    PlusMinus,
    MinusPlus,
    MinusMinus,
    ZZ,
}

impl PairKind {
    pub const ALL: [PairKind; 5] =
        [PairKind::PlusPlus, PairKind::PlusMinus, PairKind::MinusPlus, PairKind::MinusMinus, PairKind::ZZ];

    fn locals(self) -> (DMatrix<C64>, DMatrix<C64>) {
        match self {
            PairKind::PlusPlus => (oracle::sp(), oracle::sp()),
            PairKind::PlusMinus => (oracle::sp(), oracle::sm()),
            PairKind::MinusPlus => (oracle::sm(), oracle::sp()),
            PairKind::MinusMinus => (oracle::sm(), oracle::sm()),
            PairKind::ZZ => (oracle::sz(), oracle::sz()),
        }
    }

    fn dense(self, n: usize, l: usize, m: usize) -> DMatrix<C64> {
        let (a, b) = self.locals();
        oracle::two_site_op(n, l, &a, m, &b)
    }
}

/// Dense `<CSS| [A_l A_m, B_i B_j] |CSS>` for site pairs `l != m`, `i != j`.
pub fn pair_commutator_value(n: usize, a: PairKind, (l, m): (usize, usize), b: PairKind, (i, j): (usize, usize)) -> Result<C64> {
    check_dense(n)?;
    if l == m || i == j || l.max(m).max(i).max(j) >= n {
        return Err(Error::InvalidInput("pair sites must be distinct and in range".into()));
    }
    let x = a.dense(n, l, m);
    let y = b.dense(n, i, j);
    let comm = &x * &y - &y * &x;
    Ok(oracle::expectation(&comm, &oracle::dense_css(n)))
}

/// Closed form: `delta_il delta_jm + delta_im delta_jl` for `[S+S+, S-S-]`,
/// its negative for `[S-S-, S+S+]`, zero for every other pairing.
pub fn pair_commutator_expected(a: PairKind, (l, m): (usize, usize), b: PairKind, (i, j): (usize, usize)) -> f64 {
    let delta = ((i == l && j == m) as u8 + (i == m && j == l) as u8) as f64;
    match (a, b) {
        (PairKind::PlusPlus, PairKind::MinusMinus) => delta,
        (PairKind::MinusMinus, PairKind::PlusPlus) => -delta,
        _ => 0.0,
    }
}

/// Exhaustive check of [`pair_commutator_expected`] over all site tuples
/// and operator types at `n` sites (`2 <= n <= 4`).
pub fn pair_commutator_check(n: usize) -> Result<bool> {
    if !(2..=4).contains(&n) {
        return Err(Error::InvalidInput(format!("pair commutator check needs 2 <= n <= 4, got {n}")));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|l| (0..n).filter(move |&m| m != l).map(move |m| (l, m))).collect();
    for a in PairKind::ALL {
        for b in PairKind::ALL {
            for &p in &pairs {
                for &q in &pairs {
                    let v = pair_commutator_value(n, a, p, b, q)?;
                    if (v - C64::new(pair_commutator_expected(a, p, b, q), 0.0)).norm() > 1e-12 {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

/// `|<J^z>(dt) - N/2|` after evolving `|CSS>`.
pub fn jz_first_order_check(spec: &CouplingSpec, dt: f64) -> Result<f64> {
    let n = spec.n_sites();
    let opts = EvolveOptions { tol: 1e-14, ..EvolveOptions::default() };
    let psi = evolve_with(spec, &css_state(n)?, dt, &opts)?;
    Ok((psi.jz() - n as f64 / 2.0).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::eval_kernel;
    use crate::model::{build_xyz, power_law, Geometry};
    use crate::random::{random_angles, random_xyz, random_xyz_with, RandomXyzOptions};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn commutator_matches_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let spec = random_xyz(4, &mut rng);
            let a = random_angles(4, &mut rng);
            let got = commutator_oracle(&spec, &a).unwrap();
            // Random XYZ specs have K_ii = 0, so eval_kernel agrees with the
            // active-term kernel here.
            let i = eval_kernel(&spec, &a).unwrap().im;
            assert!((got - C64::new(0.0, -i)).norm() < 1e-10, "{got} vs -i{i}");
            let shifted = commutator_oracle(&spec, &a.shifted(FRAC_PI_2)).unwrap();
            assert!((shifted + got).norm() < 1e-10);
        }
    }

    #[test]
    fn commutator_vanishes_without_pairing() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let spec = random_xyz_with(4, &mut rng, RandomXyzOptions { u1_symmetric: true, ..Default::default() });
        let a = random_angles(4, &mut rng);
        assert!(commutator_oracle(&spec, &a).unwrap().norm() < 1e-12);
    }

    #[test]
    fn pair_commutators() {
        let one = pair_commutator_value(3, PairKind::PlusPlus, (0, 1), PairKind::MinusMinus, (0, 1)).unwrap();
        assert!((one - C64::new(1.0, 0.0)).norm() < 1e-14);
        let zero = pair_commutator_value(3, PairKind::PlusPlus, (0, 1), PairKind::MinusMinus, (0, 2)).unwrap();
        assert!(zero.norm() < 1e-14);
        assert!(pair_commutator_check(3).unwrap());
        assert!(pair_commutator_value(3, PairKind::ZZ, (0, 0), PairKind::ZZ, (1, 2)).is_err());
    }

    #[test]
    fn jz_is_flat_to_first_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let spec = random_xyz(6, &mut rng);
        assert_eq!(jz_first_order_check(&spec, 0.0).unwrap(), 0.0);
        let a = jz_first_order_check(&spec, 2e-3).unwrap();
        let b = jz_first_order_check(&spec, 1e-3).unwrap();
        assert!((a / b - 4.0).abs() < 0.2, "ratio {}", a / b);
        let u1 = random_xyz_with(6, &mut rng, RandomXyzOptions { u1_symmetric: true, ..Default::default() });
        assert!(jz_first_order_check(&u1, 0.3).unwrap() < 1e-12);
    }

    #[test]
    fn heisenberg_does_not_squeeze() {
        let m = power_law(5, 1.0, 1.0, Geometry::Ring);
        let spec = build_xyz(&m, &m, &m).unwrap();
        let r = short_time_slope(&spec, XiKind::Local, &default_time_grid(&spec)).unwrap();
        assert!(r.slope_estimate.abs() < ZERO_SLOPE);
        assert_eq!(r.predicted_slope, 0.0);
        assert!(r.within(0.01));
        assert!(!r.squeezes());
    }

    #[test]
    fn random_xyz_slope_matches_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let spec = random_xyz(5, &mut rng);
        for which in [XiKind::Local, XiKind::Uniform] {
            let r = short_time_slope(&spec, which, &default_time_grid(&spec)).unwrap();
            if which == XiKind::Local {
                assert!(r.relative_error < 0.01, "{which}: {} vs {}", r.slope_estimate, r.predicted_slope);
            }
            assert!(r.t_grid.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn grid_validation() {
        let spec = random_xyz(3, &mut ChaCha8Rng::seed_from_u64(35));
        assert!(short_time_slope(&spec, XiKind::Local, &[1e-3]).is_err());
        assert!(short_time_slope(&spec, XiKind::Local, &[1e-3, 1e-4]).is_err());
        assert!(short_time_slope(&spec, XiKind::Local, &[0.0, 1e-4]).is_err());
        assert!("sideways".parse::<XiKind>().is_err());
    }
}
