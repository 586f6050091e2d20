//! Computational-basis initial states `|sigma_1 ... sigma_N>` via the flip
//! unitary `U = prod_{sigma_i = -1} i sigma_i^x`, which maps the state to
//! `|CSS>` and `H` to `U H U^dagger` in the same parity-conserving class.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::adiabatic::ground_reports;
use crate::dynamics::{assemble, check_grid, short_time_slope_with, HarnessOptions, SlopeResult};
use crate::error::{Error, Result};
use crate::kernel::{maximize_i, maximize_r, positivity_threshold};
use crate::model::{CouplingSpec, SpinConfig};
use crate::oracle;
use crate::squeezing::{collective_moments_weighted, squeezing_report_weighted, CollectiveMoments};
use crate::statevec::{evolve_with, product_state, StateVector};
use crate::C64;

fn check_config(spec: &CouplingSpec, config: &SpinConfig) -> Result<()> {
    if config.len() != spec.n_sites() {
        return Err(Error::DimensionMismatch { expected: spec.n_sites(), got: config.len() });
    }
    Ok(())
}

/// Couplings of `U H U^dagger`. At flipped sites `S^+ <-> S^-` and
/// `S^z -> -S^z`, so on a bond with exactly one flipped end the `K` and `J`
/// roles exchange.
pub fn transform_spec(spec: &CouplingSpec, config: &SpinConfig) -> Result<CouplingSpec> {
    check_config(spec, config)?;
    let n = spec.n_sites();
    let f = |i: usize| config.is_flipped(i);
    let mut k = DMatrix::zeros(n, n);
    let mut j = DMatrix::zeros(n, n);
    let mut zz = DMatrix::zeros(n, n);
    let mut fields = vec![0.0; n];
    for a in 0..n {
        for b in 0..n {
            if a == b {
                k[(a, a)] = if f(a) { spec.k(a, a).conj() } else { spec.k(a, a) };
                j[(a, a)] = spec.j(a, a);
                continue;
            }
            let (kk, jj) = match (f(a), f(b)) {
                (false, false) => (spec.k(a, b), spec.j(a, b)),
                // S_a^- S_b^+ pairs with S_b^+ S_a^- ...
                (true, false) => (spec.j(b, a), spec.k(a, b).conj()),
                (false, true) => (spec.j(a, b), spec.k(a, b)),
                (true, true) => (spec.k(a, b).conj(), spec.j(b, a)),
            };
            k[(a, b)] = kk;
            j[(a, b)] = jj;
            zz[(a, b)] = config.sigma(a) * config.sigma(b) * spec.zz(a, b);
        }
        // J_aa S^+S^- = J_aa (1/2 + S^z) becomes J_aa (1/2 - S^z).
        fields[a] = config.sigma(a) * spec.z_field(a) - if f(a) { 4.0 * spec.j(a, a).re } else { 0.0 };
    }
    Ok(CouplingSpec::new(k, j, zz, fields)?
        .with_offset(spec.offset())
        .with_include_diagonal_in_kernel(spec.include_diagonal_in_kernel()))
}

/// Largest size accepted by [`transform_spec_dense`].
pub const DENSE_TRANSFORM_CAP: usize = 10;

/// `U H U^dagger` built densely, with couplings read back from its matrix
/// elements. Diagonal `K_ii` never appear in a matrix element; they are
/// carried over as `K_ii` or `K_ii^*` (flipped).
pub fn transform_spec_dense(spec: &CouplingSpec, config: &SpinConfig) -> Result<CouplingSpec> {
    check_config(spec, config)?;
    let n = spec.n_sites();
    if n > DENSE_TRANSFORM_CAP {
        return Err(Error::TooLarge { n, cap: DENSE_TRANSFORM_CAP });
    }
    let u = oracle::dense_flip_unitary(config);
    let h = &u * oracle::dense_hamiltonian(spec) * u.adjoint();
    let dim = 1usize << n;
    let mut k = DMatrix::zeros(n, n);
    let mut j = DMatrix::zeros(n, n);
    let mut zz = DMatrix::zeros(n, n);
    for a in 0..n {
        k[(a, a)] = if config.is_flipped(a) { spec.k(a, a).conj() } else { spec.k(a, a) };
        j[(a, a)] = spec.j(a, a);
        for b in 0..n {
            if a == b {
                continue;
            }
            let (ba, bb) = (1usize << a, 1usize << b);
            // <up_a up_b| H |down_a down_b> = K_ab + K_ba
            let uu = h[(ba | bb, 0)];
            // <up_a down_b| H |down_a up_b> = J_ab + J_ba^*
            let ud = h[(ba, bb)];
            k[(a, b)] = uu * 0.5;
            j[(a, b)] = ud * 0.5;
        }
    }
    // Diagonal: E(s) = c + sum_a l_a s_a + sum_{a<b} q_ab s_a s_b with s = +-1/2.
    let s = |x: usize, a: usize| if x >> a & 1 == 1 { 0.5 } else { -0.5 };
    let mut lin = vec![0.0; n];
    let mut constant = 0.0;
    for x in 0..dim {
        let e = h[(x, x)].re;
        constant += e;
        for (a, l) in lin.iter_mut().enumerate() {
            *l += e * s(x, a);
        }
        for a in 0..n {
            for b in a + 1..n {
                zz[(a, b)] += e * s(x, a) * s(x, b);
            }
        }
    }
    let norm = dim as f64;
    for a in 0..n {
        for b in a + 1..n {
            // q_ab = 16 avg(E s_a s_b) = 2 zz_ab
            let v = 8.0 * zz[(a, b)] / norm;
            zz[(a, b)] = v;
            zz[(b, a)] = v;
        }
    }
    let fields: Vec<f64> = (0..n).map(|a| 4.0 * lin[a] / norm - 2.0 * j[(a, a)].re).collect();
    let offset = constant / norm - (0..n).map(|a| j[(a, a)].re).sum::<f64>();
    Ok(CouplingSpec::new(k, j, zz, fields)?
        .with_offset(offset)
        .with_include_diagonal_in_kernel(spec.include_diagonal_in_kernel()))
}

/// `U |psi>` with `U = prod_{flipped} i sigma^x`.
pub fn apply_flip_unitary(psi: &StateVector, config: &SpinConfig) -> Result<StateVector> {
    let n = psi.n_sites();
    if config.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: config.len() });
    }
    let mask = (0..n).filter(|&i| config.is_flipped(i)).fold(0usize, |m, i| m | 1 << i);
    let phase = C64::new(0.0, 1.0).powu(mask.count_ones());
    let src = psi.amplitudes();
    let mut out = vec![C64::new(0.0, 0.0); src.len()];
    for (b, a) in src.iter().enumerate() {
        out[b ^ mask] = a * phase;
    }
    Ok(StateVector::from_normalized(n, out))
}

/// Moments of `J' = (sum S^x, sum sigma S^y, sum sigma S^z)`.
pub fn modified_collective_moments(psi: &StateVector, config: &SpinConfig) -> Result<CollectiveMoments> {
    collective_moments_weighted(psi, config)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneralizedResult {
    /// `J'` squeezing of the evolved product state.
    pub direct: SlopeResult,
    /// Standard harness on the transformed spec from `|CSS>`.
    pub transformed: SlopeResult,
    /// Largest `|xi^2_direct - xi^2_transformed|` over the grid, both conventions.
    pub max_pointwise_diff: f64,
}

fn max_diff(a: &SlopeResult, b: &SlopeResult) -> f64 {
    a.reports
        .iter()
        .zip(&b.reports)
        .map(|(x, y)| (x.xi2_local - y.xi2_local).abs().max((x.xi2_uniform - y.xi2_uniform).abs()))
        .fold(0.0, f64::max)
}

/// Short-time slope from `|config>` with `J'` observables, checked against
/// the standard harness on `transform_spec(spec, config)`.
pub fn verify_generalized_t1(
    spec: &CouplingSpec,
    config: &SpinConfig,
    t_grid: &[f64],
    opts: &HarnessOptions,
) -> Result<GeneralizedResult> {
    check_config(spec, config)?;
    check_grid(t_grid)?;
    let flipped = transform_spec(spec, config)?;
    let transformed = short_time_slope_with(&flipped, t_grid, opts)?;

    let kmax = maximize_i(&flipped, &opts.kernel);
    let mut local = opts.local.clone();
    local.seeds.push(kmax.angles.clone());
    let start = product_state(config)?;
    let reports = crate::ordered_map(t_grid, |&t| {
        let psi = evolve_with(spec, &start, t, &opts.evolve)?;
        squeezing_report_weighted(&psi, config, &local)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let direct = assemble(
        opts.which,
        t_grid.to_vec(),
        reports,
        transformed.predicted_slope,
        kmax.value,
        opts.local.ascent.seed,
    )?;
    let max_pointwise_diff = max_diff(&direct, &transformed);
    Ok(GeneralizedResult { direct, transformed, max_pointwise_diff })
}

/// Adiabatic analogue: ground states of `lambda H - h sum sigma_i S_i^z` with
/// `J'` observables, against the standard harness on the transformed spec.
pub fn verify_generalized_t2(
    spec: &CouplingSpec,
    config: &SpinConfig,
    field_h: f64,
    lambda_grid: &[f64],
    opts: &HarnessOptions,
) -> Result<GeneralizedResult> {
    check_config(spec, config)?;
    check_grid(lambda_grid)?;
    let flipped = transform_spec(spec, config)?;
    let transformed = crate::adiabatic::adiabatic_slope(&flipped, field_h, lambda_grid, opts)?;

    let rmax = maximize_r(&flipped, &opts.kernel);
    let mut local = opts.local.clone();
    local.seeds.push(rmax.angles.clone());
    let fields: Vec<f64> = (0..spec.n_sites()).map(|i| field_h * config.sigma(i)).collect();
    let reports = ground_reports(spec, &fields, field_h, lambda_grid, Some(config), &local)?;
    let r_eff = if rmax.value > positivity_threshold(&flipped) { rmax.value } else { 0.0 };
    let predicted = -2.0 * r_eff / (field_h * spec.n_sites() as f64) + 0.0;
    let direct = assemble(opts.which, lambda_grid.to_vec(), reports, predicted, rmax.value, opts.local.ascent.seed)?;
    let max_pointwise_diff = max_diff(&direct, &transformed);
    Ok(GeneralizedResult { direct, transformed, max_pointwise_diff })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::default_time_grid;
    use crate::model::{build_xyz, power_law, verify_parity, Geometry};
    use crate::random::{random_complex_spec, random_config, random_state, random_xyz};
    use crate::squeezing::collective_moments;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec_diff(a: &CouplingSpec, b: &CouplingSpec) -> f64 {
        let n = a.n_sites();
        let mut d = (a.offset() - b.offset()).abs();
        for i in 0..n {
            d = d.max((a.z_field(i) - b.z_field(i)).abs());
            for j in 0..n {
                d = d.max((a.k(i, j) - b.k(i, j)).norm());
                d = d.max((a.j(i, j) - b.j(i, j)).norm());
                d = d.max((a.zz(i, j) - b.zz(i, j)).abs());
            }
        }
        d
    }

    #[test]
    fn identity_for_all_up() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let spec = random_complex_spec(4, &mut rng);
        let t = transform_spec(&spec, &SpinConfig::all_up(4)).unwrap();
        assert_eq!(spec_diff(&spec, &t), 0.0);
    }

    #[test]
    fn closed_form_matches_dense_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        for n in 2..=5 {
            for _ in 0..4 {
                let spec = random_complex_spec(n, &mut rng);
                let config = random_config(n, &mut rng);
                let closed = transform_spec(&spec, &config).unwrap();
                let dense = transform_spec_dense(&spec, &config).unwrap();
                assert!(spec_diff(&closed, &dense) < 1e-12, "n={n} {config}");
                let u = oracle::dense_flip_unitary(&config);
                let conj = &u * oracle::dense_hamiltonian(&spec) * u.adjoint();
                assert!(oracle::max_abs_diff(&conj, &oracle::dense_hamiltonian(&closed)) < 1e-12);
            }
        }
    }

    #[test]
    fn involution_and_parity() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..10 {
            let spec = random_complex_spec(5, &mut rng);
            let config = random_config(5, &mut rng);
            let t = transform_spec(&spec, &config).unwrap();
            let back = transform_spec(&t, &config).unwrap();
            assert!(spec_diff(&spec, &back) < 1e-14);
            assert!(verify_parity(&t, 6).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn heisenberg_single_flip_negates_y_and_z_on_touching_bonds() {
        let m = power_law(3, 1.0, 0.0, Geometry::Chain);
        let spec = build_xyz(&m, &m, &m).unwrap();
        let config: SpinConfig = "+-+".parse().unwrap();
        let t = transform_spec(&spec, &config).unwrap();
        let neg = |i: usize, j: usize| if (i == 1) != (j == 1) { -1.0 } else { 1.0 };
        let jy = DMatrix::from_fn(3, 3, |i, j| m[(i, j)] * neg(i, j));
        let want = build_xyz(&m, &jy, &jy).unwrap();
        assert!(spec_diff(&t, &want) < 1e-15);
    }

    #[test]
    fn modified_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        for _ in 0..5 {
            let config = random_config(4, &mut rng);
            let m = modified_collective_moments(&product_state(&config).unwrap(), &config).unwrap();
            assert!((m.mean[2] - 2.0).abs() < 1e-15);
            let psi = random_state(4, &mut rng);
            let direct = modified_collective_moments(&psi, &config).unwrap();
            let mapped = collective_moments(&apply_flip_unitary(&psi, &config).unwrap());
            for a in 0..3 {
                assert!((direct.mean[a] - mapped.mean[a]).abs() < 1e-12);
                for b in 0..3 {
                    assert!((direct.second[a][b] - mapped.second[a][b]).abs() < 1e-12);
                }
            }
        }
        let psi = random_state(3, &mut rng);
        let plain = collective_moments(&psi);
        assert_eq!(modified_collective_moments(&psi, &SpinConfig::all_up(3)).unwrap(), plain);
    }

    #[test]
    fn flip_unitary_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let psi = random_state(3, &mut rng);
        let config: SpinConfig = "-+-".parse().unwrap();
        let fast = oracle::to_dense(&apply_flip_unitary(&psi, &config).unwrap());
        let dense = oracle::dense_flip_unitary(&config) * oracle::to_dense(&psi);
        assert!((fast - dense).norm() < 1e-15);
    }

    #[test]
    fn direct_and_transformed_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(56);
        let spec = random_xyz(5, &mut rng);
        let config = random_config(5, &mut rng);
        let grid = default_time_grid(&spec);
        let r = verify_generalized_t1(&spec, &config, &grid, &HarnessOptions::default()).unwrap();
        assert!(r.max_pointwise_diff < 1e-9, "{}", r.max_pointwise_diff);
        assert!(r.direct.relative_error < 0.01);
        let r2 = verify_generalized_t2(&spec, &config, 1.0, &crate::adiabatic::default_lambda_grid(&spec, 1.0), &HarnessOptions::default()).unwrap();
        assert!(r2.max_pointwise_diff < 1e-9, "{}", r2.max_pointwise_diff);
    }

    #[test]
    fn all_up_matches_standard_harness() {
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        let spec = random_xyz(4, &mut rng);
        let grid = default_time_grid(&spec);
        let opts = HarnessOptions::default();
        let r = verify_generalized_t1(&spec, &SpinConfig::all_up(4), &grid, &opts).unwrap();
        let plain = short_time_slope_with(&spec, &grid, &opts).unwrap();
        assert_eq!(r.direct.xi2_values, plain.xi2_values);
    }

    #[test]
    fn length_mismatch() {
        let spec = random_xyz(3, &mut ChaCha8Rng::seed_from_u64(58));
        assert!(transform_spec(&spec, &SpinConfig::all_up(4)).is_err());
    }
}
