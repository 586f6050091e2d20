//! Collective-spin observables and the squeezing parameter
//! `xi^2 = N min_perp Var(J_perp) / |<J>|^2`.
//!
//! Two minimization conventions are provided:
//!
//! * uniform: `J_perp` ranges over collective components orthogonal to
//!   `<J>`, reduced to the smaller eigenvalue of a 2x2 covariance matrix;
//! * local: `J_perp({theta}) = sum_i (cos theta_i S_i^x + sin theta_i S_i^y)`
//!   with one angle per site, minimized numerically.
//!
//! Both are computed from [`SiteCorrelations`], a single O(N^2 2^N) pass over
//! the amplitudes. The `_weighted` variants take a [`SpinConfig`] and use the
//! modified collective spin `J' = (sum S^x, sum sigma S^y, sum sigma S^z)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::AngleSet;
use crate::model::SpinConfig;
use crate::optimize::{multistart, AscentOptions};
use crate::statevec::StateVector;
use crate::C64;

/// One- and two-site spin expectations.
#[derive(Clone, Debug)]
pub struct SiteCorrelations {
    n: usize,
    mean: Vec<[f64; 3]>,
    /// `<S_l^a S_m^b>` at index `l * n + m`; diagonal blocks hold the
    /// symmetrized value `delta_ab / 4`.
    corr: Vec<[[f64; 3]; 3]>,
}

impl SiteCorrelations {
    pub fn from_state(psi: &StateVector) -> Self {
        let n = psi.n_sites();
        let a = psi.amplitudes();
        let sz = |b: usize, i: usize| if b >> i & 1 == 1 { 0.5 } else { -0.5 };

        let mean: Vec<[f64; 3]> = (0..n)
            .map(|l| {
                let bit = 1 << l;
                let mut plus = C64::new(0.0, 0.0);
                let mut z = 0.0;
                for (b, amp) in a.iter().enumerate() {
                    z += amp.norm_sqr() * sz(b, l);
                    if b & bit == 0 {
                        plus += a[b | bit].conj() * amp;
                    }
                }
                [plus.re, plus.im, z]
            })
            .collect();

        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|l| (l + 1..n).map(move |m| (l, m))).collect();
        let blocks = crate::ordered_map(&pairs, |&(l, m)| {
            let (bl, bm) = (1usize << l, 1usize << m);
            let mut g = C64::new(0.0, 0.0); // <S_l^+ S_m^+>
            let mut f = C64::new(0.0, 0.0); // <S_l^+ S_m^->
            let mut pz = C64::new(0.0, 0.0); // <S_l^+ S_m^z>
            let mut zp = C64::new(0.0, 0.0); // <S_l^z S_m^+>
            let mut zz = 0.0;
            for (b, amp) in a.iter().enumerate() {
                zz += amp.norm_sqr() * sz(b, l) * sz(b, m);
                let l_up = b & bl != 0;
                let m_up = b & bm != 0;
                if !l_up {
                    pz += a[b | bl].conj() * amp * sz(b, m);
                    if m_up {
                        f += a[b ^ bl ^ bm].conj() * amp;
                    } else {
                        g += a[b | bl | bm].conj() * amp;
                    }
                }
                if !m_up {
                    zp += a[b | bm].conj() * amp * sz(b, l);
                }
            }
            let xx = 0.5 * (g.re + f.re);
            let yy = 0.5 * (f.re - g.re);
            let xy = 0.5 * (g.im - f.im);
            let yx = 0.5 * (g.im + f.im);
            [[xx, xy, pz.re], [yx, yy, pz.im], [zp.re, zp.im, zz]]
        });

        let mut corr = vec![[[0.0; 3]; 3]; n * n];
        for l in 0..n {
            corr[l * n + l] = [[0.25, 0.0, 0.0], [0.0, 0.25, 0.0], [0.0, 0.0, 0.25]];
        }
        for (&(l, m), block) in pairs.iter().zip(blocks) {
            corr[l * n + m] = block;
            let mut t = [[0.0; 3]; 3];
            for (r, row) in block.iter().enumerate() {
                for (c, v) in row.iter().enumerate() {
                    t[c][r] = *v;
                }
            }
            corr[m * n + l] = t;
        }
        SiteCorrelations { n, mean, corr }
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    /// `[<S_i^x>, <S_i^y>, <S_i^z>]`
    pub fn mean(&self, i: usize) -> [f64; 3] {
        self.mean[i]
    }

    /// `<S_l^a S_m^b>` (symmetrized on the diagonal).
    pub fn corr(&self, l: usize, m: usize) -> [[f64; 3]; 3] {
        self.corr[l * self.n + m]
    }
}

/// `<J>` and the symmetrized second moments `<{J^a, J^b}>/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollectiveMoments {
    pub mean: [f64; 3],
    pub second: [[f64; 3]; 3],
}

impl CollectiveMoments {
    pub fn covariance(&self) -> [[f64; 3]; 3] {
        let mut c = self.second;
        for (a, row) in c.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                *v -= self.mean[a] * self.mean[b];
            }
        }
        c
    }

    pub fn mean_length(&self) -> f64 {
        self.mean.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Per-site component weights `[w_x, w_y, w_z]`: all ones for `J`, or
/// `[1, sigma_i, sigma_i]` for the modified spin `J'`.
fn weights(n: usize, config: Option<&SpinConfig>) -> Result<Vec<[f64; 3]>> {
    match config {
        None => Ok(vec![[1.0; 3]; n]),
        Some(c) if c.len() != n => Err(Error::DimensionMismatch { expected: n, got: c.len() }),
        Some(c) => Ok((0..n).map(|i| [1.0, c.sigma(i), c.sigma(i)]).collect()),
    }
}

fn moments_from(corr: &SiteCorrelations, w: &[[f64; 3]]) -> CollectiveMoments {
    let n = corr.n_sites();
    let mut mean = [0.0; 3];
    let mut second = [[0.0; 3]; 3];
    for l in 0..n {
        let m_l = corr.mean(l);
        for a in 0..3 {
            mean[a] += w[l][a] * m_l[a];
        }
        for m in 0..n {
            let c = corr.corr(l, m);
            for a in 0..3 {
                for b in 0..3 {
                    second[a][b] += w[l][a] * w[m][b] * c[a][b];
                }
            }
        }
    }
    // l != m products commute, so `second` is already symmetric; enforce it
    // against roundoff.
    for a in 0..3 {
        for b in a + 1..3 {
            let s = 0.5 * (second[a][b] + second[b][a]);
            second[a][b] = s;
            second[b][a] = s;
        }
    }
    CollectiveMoments { mean, second }
}

pub fn collective_moments(psi: &StateVector) -> CollectiveMoments {
    let corr = SiteCorrelations::from_state(psi);
    moments_from(&corr, &vec![[1.0; 3]; psi.n_sites()])
}

/// Moments of `J'` for the product-state configuration `config`.
pub fn collective_moments_weighted(psi: &StateVector, config: &SpinConfig) -> Result<CollectiveMoments> {
    let w = weights(psi.n_sites(), Some(config))?;
    Ok(moments_from(&SiteCorrelations::from_state(psi), &w))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformSqueezing {
    pub xi2: f64,
    pub variance: f64,
    /// Angle of the minimal-variance direction in the transverse frame
    /// `(e1, e2)`; for `<J>` along `+z` that frame is `(x, y)`.
    pub angle: f64,
    /// Azimuth of the minimal-variance direction projected on the xy plane.
    pub azimuth: f64,
}

/// Minimal transverse variance of `J` from its moments.
pub fn xi2_uniform_from_moments(moments: &CollectiveMoments, n: usize) -> Result<UniformSqueezing> {
    let len = moments.mean_length();
    if len <= 1e-12 {
        return Err(Error::VanishingMeanSpin);
    }
    let m = moments.mean.map(|x| x / len);
    // Two-angle frame: e3 = (sin b cos a, sin b sin a, cos b).
    let beta = m[2].clamp(-1.0, 1.0).acos();
    let alpha = if m[0].abs() < 1e-12 && m[1].abs() < 1e-12 { 0.0 } else { m[1].atan2(m[0]) };
    let e1 = [beta.cos() * alpha.cos(), beta.cos() * alpha.sin(), -beta.sin()];
    let e2 = [-alpha.sin(), alpha.cos(), 0.0];
    let cov = moments.covariance();
    let quad = |u: &[f64; 3], v: &[f64; 3]| -> f64 {
        (0..3).map(|a| (0..3).map(|b| u[a] * cov[a][b] * v[b]).sum::<f64>()).sum()
    };
    let (p, q, r) = (quad(&e1, &e1), quad(&e1, &e2), quad(&e2, &e2));
    let variance = 0.5 * (p + r) - (0.25 * (p - r) * (p - r) + q * q).sqrt();
    // Minimal eigenvector of [[p, q], [q, r]] sits at angle phi.
    let angle = 0.5 * (2.0 * q).atan2(p - r) + std::f64::consts::FRAC_PI_2;
    let dir: Vec<f64> = (0..3).map(|a| angle.cos() * e1[a] + angle.sin() * e2[a]).collect();
    let azimuth = dir[1].atan2(dir[0]);
    Ok(UniformSqueezing {
        xi2: n as f64 * variance / (len * len),
        variance,
        angle: angle.rem_euclid(std::f64::consts::TAU),
        azimuth,
    })
}

/// Uniform-convention `xi^2` and the optimal transverse angle.
pub fn xi2_uniform(psi: &StateVector) -> Result<(f64, f64)> {
    let u = xi2_uniform_from_moments(&collective_moments(psi), psi.n_sites())?;
    Ok((u.xi2, u.angle))
}

/// `Var(J_perp({theta}))` as a closed-form quadratic in `(cos theta_i, sin theta_i)`.
#[derive(Clone, Debug)]
pub struct LocalVariance {
    n: usize,
    /// 2x2 blocks over (x, y) at `l * n + m`.
    blocks: Vec<[[f64; 2]; 2]>,
    means: Vec<[f64; 2]>,
}

impl LocalVariance {
    pub fn new(corr: &SiteCorrelations) -> Self {
        Self::weighted(corr, &vec![[1.0; 3]; corr.n_sites()])
    }

    fn weighted(corr: &SiteCorrelations, w: &[[f64; 3]]) -> Self {
        let n = corr.n_sites();
        let mut blocks = vec![[[0.0; 2]; 2]; n * n];
        for l in 0..n {
            for m in 0..n {
                let c = corr.corr(l, m);
                for a in 0..2 {
                    for b in 0..2 {
                        blocks[l * n + m][a][b] = w[l][a] * w[m][b] * c[a][b];
                    }
                }
            }
        }
        let means = (0..n)
            .map(|l| {
                let m = corr.mean(l);
                [w[l][0] * m[0], w[l][1] * m[1]]
            })
            .collect();
        LocalVariance { n, blocks, means }
    }

    pub fn value(&self, thetas: &[f64]) -> f64 {
        let u: Vec<[f64; 2]> = thetas.iter().map(|t| [t.cos(), t.sin()]).collect();
        self.value_and_gradient_impl(&u, None)
    }

    /// Variance and its gradient with respect to every angle.
    pub fn value_and_gradient(&self, thetas: &[f64], grad: &mut [f64]) -> f64 {
        let u: Vec<[f64; 2]> = thetas.iter().map(|t| [t.cos(), t.sin()]).collect();
        self.value_and_gradient_impl(&u, Some(grad))
    }

    fn value_and_gradient_impl(&self, u: &[[f64; 2]], grad: Option<&mut [f64]>) -> f64 {
        let n = self.n;
        // B u, row by row
        let bu: Vec<[f64; 2]> = (0..n)
            .map(|l| {
                let mut acc = [0.0; 2];
                for (m, um) in u.iter().enumerate() {
                    let b = &self.blocks[l * n + m];
                    acc[0] += b[0][0] * um[0] + b[0][1] * um[1];
                    acc[1] += b[1][0] * um[0] + b[1][1] * um[1];
                }
                acc
            })
            .collect();
        let second: f64 = u.iter().zip(&bu).map(|(a, b)| a[0] * b[0] + a[1] * b[1]).sum();
        let first: f64 = u.iter().zip(&self.means).map(|(a, m)| a[0] * m[0] + a[1] * m[1]).sum();
        if let Some(grad) = grad {
            for l in 0..n {
                let du = [-u[l][1], u[l][0]];
                let quad = du[0] * bu[l][0] + du[1] * bu[l][1];
                let lin = du[0] * self.means[l][0] + du[1] * self.means[l][1];
                grad[l] = 2.0 * quad - 2.0 * first * lin;
            }
        }
        second - first * first
    }
}

#[derive(Clone, Debug)]
pub struct LocalOptions {
    pub ascent: AscentOptions,
    /// Extra starting angle sets (e.g. the kernel optimum).
    pub seeds: Vec<AngleSet>,
}

impl Default for LocalOptions {
    fn default() -> Self {
        LocalOptions {
            ascent: AscentOptions { restarts: 16, grad_tol: 1e-12, ..AscentOptions::default() },
            seeds: Vec::new(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LocalSqueezing {
    pub xi2: f64,
    pub variance: f64,
    pub angles: AngleSet,
    pub jz: f64,
    pub converged: bool,
}

fn minimize_local(
    var: &LocalVariance,
    jz: f64,
    n: usize,
    uniform_seed: Option<f64>,
    opts: &LocalOptions,
) -> Result<LocalSqueezing> {
    if jz.abs() <= 1e-12 {
        return Err(Error::VanishingMeanSpin);
    }
    let mut seeds: Vec<Vec<f64>> = opts
        .seeds
        .iter()
        .filter(|s| s.len() == n)
        .map(|s| s.as_slice().to_vec())
        .collect();
    if let Some(phi) = uniform_seed {
        seeds.push(vec![phi; n]);
    }
    let objective = |t: &[f64], g: &mut [f64]| -> f64 {
        let v = var.value_and_gradient(t, g);
        for x in g.iter_mut() {
            *x = -*x;
        }
        -v
    };
    let res = multistart(&objective, n, &seeds, &opts.ascent);
    let variance = -res.best.value;
    Ok(LocalSqueezing {
        xi2: n as f64 * variance / (jz * jz),
        variance,
        angles: AngleSet::new(res.best.angles).expect("finite angles"),
        jz,
        converged: res.best.converged,
    })
}

/// Site-local `xi^2 = N min_theta Var(J_perp({theta})) / <J^z>^2`.
pub fn xi2_local(psi: &StateVector, opts: &LocalOptions) -> Result<(f64, AngleSet)> {
    let r = squeezing_report(psi, opts)?;
    Ok((r.xi2_local, r.optimal_local_angles))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SqueezingReport {
    pub mean_spin: [f64; 3],
    pub var_min_uniform: f64,
    pub xi2_uniform: f64,
    pub var_min_local: f64,
    pub xi2_local: f64,
    pub optimal_local_angles: AngleSet,
    pub optimal_uniform_angle: f64,
    pub local_converged: bool,
}

impl SqueezingReport {
    /// `<J^z>` (or `<J^z'>` for a weighted report).
    pub fn jz(&self) -> f64 {
        self.mean_spin[2]
    }

    /// `t_or_lambda,xi2_local,xi2_uniform,jz,var_local,var_uniform`
    pub fn csv_row(&self, t_or_lambda: f64) -> String {
        format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            t_or_lambda,
            self.xi2_local,
            self.xi2_uniform,
            self.jz(),
            self.var_min_local,
            self.var_min_uniform
        )
    }
}

pub const CSV_HEADER: &str = "t_or_lambda,xi2_local,xi2_uniform,jz,var_local,var_uniform";

fn report_from(psi: &StateVector, w: &[[f64; 3]], opts: &LocalOptions) -> Result<SqueezingReport> {
    let n = psi.n_sites();
    let corr = SiteCorrelations::from_state(psi);
    let moments = moments_from(&corr, w);
    let uniform = xi2_uniform_from_moments(&moments, n)?;
    let var = LocalVariance::weighted(&corr, w);
    let local = minimize_local(&var, moments.mean[2], n, Some(uniform.azimuth), opts)?;
    Ok(SqueezingReport {
        mean_spin: moments.mean,
        var_min_uniform: uniform.variance,
        xi2_uniform: uniform.xi2,
        var_min_local: local.variance,
        xi2_local: local.xi2,
        optimal_local_angles: local.angles,
        optimal_uniform_angle: uniform.angle,
        local_converged: local.converged,
    })
}

/// Both conventions for `J`.
pub fn squeezing_report(psi: &StateVector, opts: &LocalOptions) -> Result<SqueezingReport> {
    report_from(psi, &vec![[1.0; 3]; psi.n_sites()], opts)
}

/// Both conventions for the modified spin `J'` of `config`.
pub fn squeezing_report_weighted(psi: &StateVector, config: &SpinConfig, opts: &LocalOptions) -> Result<SqueezingReport> {
    let w = weights(psi.n_sites(), Some(config))?;
    report_from(psi, &w, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_oat;
    use crate::oracle;
    use crate::random::{random_angles, random_complex_spec, random_state};
    use crate::statevec::{css_state, evolve, product_state};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    #[test]
    fn css_moments() {
        let m = collective_moments(&css_state(4).unwrap());
        assert_eq!(m.mean, [0.0, 0.0, 2.0]);
        assert!((m.second[0][0] - 1.0).abs() < 1e-15);
        assert!((m.second[1][1] - 1.0).abs() < 1e-15);
        let down = product_state(&SpinConfig::new(vec![-1; 4]).unwrap()).unwrap();
        assert_eq!(collective_moments(&down).mean[2], -2.0);
    }

    #[test]
    fn moments_match_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let ops = oracle::dense_collective(4);
        for _ in 0..5 {
            let psi = random_state(4, &mut rng);
            let v = oracle::to_dense(&psi);
            let m = collective_moments(&psi);
            for a in 0..3 {
                assert!((oracle::expectation(&ops[a], &v).re - m.mean[a]).abs() < 1e-12);
                for b in 0..3 {
                    let anti = (&ops[a] * &ops[b] + &ops[b] * &ops[a]) * C64::new(0.5, 0.0);
                    let e = oracle::expectation(&anti, &v).re;
                    assert!((e - m.second[a][b]).abs() < 1e-12, "({a},{b}): {e} vs {}", m.second[a][b]);
                }
            }
        }
    }

    #[test]
    fn css_is_unsqueezed_both_ways() {
        for n in [1, 2, 5] {
            let css = css_state(n).unwrap();
            let (u, _) = xi2_uniform(&css).unwrap();
            assert!((u - 1.0).abs() < 1e-12);
            let r = squeezing_report(&css, &LocalOptions::default()).unwrap();
            assert!((r.xi2_local - 1.0).abs() < 1e-12);
            let var = LocalVariance::new(&SiteCorrelations::from_state(&css));
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            let a = random_angles(n, &mut rng);
            assert!((var.value(a.as_slice()) - n as f64 / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_matches_direct_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..10 {
            let psi = random_state(4, &mut rng);
            let angles = random_angles(4, &mut rng);
            let jp = oracle::dense_j_perp(4, angles.as_slice());
            let v = oracle::to_dense(&psi);
            let mean = oracle::expectation(&jp, &v).re;
            let direct = oracle::expectation(&(&jp * &jp), &v).re - mean * mean;
            let var = LocalVariance::new(&SiteCorrelations::from_state(&psi));
            assert!((var.value(angles.as_slice()) - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn closed_form_is_periodic_and_gradient_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let psi = random_state(5, &mut rng);
        let var = LocalVariance::new(&SiteCorrelations::from_state(&psi));
        let a = random_angles(5, &mut rng).as_slice().to_vec();
        let v0 = var.value(&a);
        for i in 0..5 {
            let mut b = a.clone();
            b[i] += TAU;
            assert!((var.value(&b) - v0).abs() < 1e-12);
        }
        let mut g = vec![0.0; 5];
        var.value_and_gradient(&a, &mut g);
        for i in 0..5 {
            let mut p = a.clone();
            let mut m = a.clone();
            p[i] += 1e-6;
            m[i] -= 1e-6;
            let fd = (var.value(&p) - var.value(&m)) / 2e-6;
            assert!((fd - g[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn oat_state_uniform_and_local_agree_on_uniform_angles() {
        let n = 8;
        let spec = build_oat(1.0, n).unwrap();
        let psi = evolve(&spec, &css_state(n).unwrap(), 0.1).unwrap();
        let (u, angle) = xi2_uniform(&psi).unwrap();
        assert!(u < 1.0);
        let corr = SiteCorrelations::from_state(&psi);
        let var = LocalVariance::new(&corr);
        let jz = collective_moments(&psi).mean[2];
        let restricted = n as f64 * var.value(&vec![angle; n]) / (jz * jz);
        assert!((restricted - u).abs() < 1e-12, "{restricted} vs {u}");
        let r = squeezing_report(&psi, &LocalOptions::default()).unwrap();
        assert!(r.xi2_local <= u + 1e-9);
    }

    #[test]
    fn local_never_exceeds_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..50 {
            let spec = random_complex_spec(4, &mut rng);
            let psi = evolve(&spec, &css_state(4).unwrap(), 0.3).unwrap();
            let r = squeezing_report(&psi, &LocalOptions::default()).unwrap();
            assert!(r.var_min_local <= r.var_min_uniform + 1e-9);
            assert!(r.xi2_local <= r.xi2_uniform + 1e-9);
            assert!(r.xi2_local >= 0.0);
        }
    }

    #[test]
    fn vanishing_mean_spin_is_an_error() {
        // (|up> + |down>)/sqrt(2) on one site has <J> along x; a singlet has none.
        let s = 0.5f64.sqrt();
        let singlet = StateVector::from_amplitudes(
            2,
            vec![C64::new(0.0, 0.0), C64::new(s, 0.0), C64::new(-s, 0.0), C64::new(0.0, 0.0)],
        )
        .unwrap();
        assert!(matches!(xi2_uniform(&singlet), Err(Error::VanishingMeanSpin)));
        assert!(xi2_local(&singlet, &LocalOptions::default()).is_err());
    }

    #[test]
    fn single_spin_up() {
        let (v, _) = xi2_uniform(&css_state(1).unwrap()).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }
}
