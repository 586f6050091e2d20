//! Seeded random instances for property tests and the verification suites.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rand::Rng;

use crate::kernel::AngleSet;
use crate::model::{build_xyz, CouplingSpec, SpinConfig};
use crate::statevec::StateVector;
use crate::C64;

#[derive(Clone, Copy, Debug, Default)]
pub struct RandomXyzOptions {
    /// Force `Jx = Jy` so that `K = 0`.
    pub u1_symmetric: bool,
    /// Keep only bonds with `|i - j| <= cutoff`.
    pub range_cutoff: Option<usize>,
}

fn random_symmetric<R: Rng + ?Sized>(n: usize, rng: &mut R, cutoff: Option<usize>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            if cutoff.is_some_and(|c| j - i > c) {
                continue;
            }
            let v = rng.gen_range(-1.0..=1.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// XYZ couplings i.i.d. uniform in `[-1, 1]`.
pub fn random_xyz<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CouplingSpec {
    random_xyz_with(n, rng, RandomXyzOptions::default())
}

pub fn random_xyz_with<R: Rng + ?Sized>(n: usize, rng: &mut R, opts: RandomXyzOptions) -> CouplingSpec {
    let jx = random_symmetric(n, rng, opts.range_cutoff);
    let jy = if opts.u1_symmetric { jx.clone() } else { random_symmetric(n, rng, opts.range_cutoff) };
    let jz = random_symmetric(n, rng, opts.range_cutoff);
    build_xyz(&jx, &jy, &jz).expect("random XYZ couplings are valid")
}

fn unit_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0))
}

/// Generic member of the class: complex symmetric `K` (with nonzero diagonal),
/// Hermitian `J`, random `Jz` and fields.
pub fn random_complex_spec<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CouplingSpec {
    let mut k = DMatrix::zeros(n, n);
    let mut j = DMatrix::zeros(n, n);
    for r in 0..n {
        for c in r..n {
            let kv = unit_complex(rng);
            k[(r, c)] = kv;
            k[(c, r)] = kv;
            if r == c {
                j[(r, r)] = C64::new(rng.gen_range(-1.0..=1.0), 0.0);
            } else {
                let jv = unit_complex(rng);
                j[(r, c)] = jv;
                j[(c, r)] = jv.conj();
            }
        }
    }
    let zz = random_symmetric(n, rng, None);
    let fields = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    CouplingSpec::new(k, j, zz, fields)
        .expect("random couplings are valid")
        .with_offset(rng.gen_range(-1.0..=1.0))
}

pub fn random_angles<R: Rng + ?Sized>(n: usize, rng: &mut R) -> AngleSet {
    AngleSet::new((0..n).map(|_| rng.gen_range(0.0..TAU)).collect()).expect("finite angles")
}

/// Normalized state with i.i.d. Gaussian-like amplitudes.
pub fn random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> StateVector {
    let amps = (0..1usize << n).map(|_| unit_complex(rng)).collect();
    StateVector::from_amplitudes(n, amps).expect("random state is nonzero")
}

pub fn random_config<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SpinConfig {
    SpinConfig::new((0..n).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect())
        .expect("entries are +-1")
}
