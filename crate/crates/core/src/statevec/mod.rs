//! Exact 2^N state vectors.
//!
//! Basis index bit `i` set means site `i` is up along z. The Hamiltonian is
//! applied term by term with bit tests; no 2^N x 2^N matrix is formed except
//! by the dense ground-state path.

mod ground;
mod krylov;

use nalgebra::DMatrix;

pub use ground::{ground_state, ground_state_with_fields, GroundStateMethod, GroundStateResult, DENSE_GROUND_STATE_CAP};
pub use krylov::{evolve, evolve_with, EvolveOptions};

use crate::error::{Error, Result};
use crate::model::{CouplingSpec, SpinConfig};
use crate::C64;

/// Largest system a state vector may describe.
pub const MAX_STATE_SITES: usize = 20;

pub(crate) const NORM_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_sites: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// Wrap and normalize raw amplitudes.
    pub fn from_amplitudes(n_sites: usize, amps: Vec<C64>) -> Result<Self> {
        check_sites(n_sites)?;
        if amps.len() != 1 << n_sites {
            return Err(Error::DimensionMismatch { expected: 1 << n_sites, got: amps.len() });
        }
        let norm = norm(&amps);
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidInput("state has zero or non-finite norm".into()));
        }
        let mut psi = StateVector { n_sites, amps };
        if (norm - 1.0).abs() > 0.0 {
            psi.scale(1.0 / norm);
        }
        Ok(psi)
    }

    pub(crate) fn from_normalized(n_sites: usize, amps: Vec<C64>) -> Self {
        debug_assert!((norm(&amps) - 1.0).abs() < NORM_TOL);
        StateVector { n_sites, amps }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }

    /// `<self|other>`
    pub fn inner(&self, other: &StateVector) -> C64 {
        dotc(&self.amps, &other.amps)
    }

    fn scale(&mut self, s: f64) {
        for a in &mut self.amps {
            *a *= s;
        }
    }

    /// Rotate the global phase so the largest-magnitude amplitude is real
    /// and positive (first index wins among equal magnitudes).
    pub fn fix_global_phase(&mut self) {
        let (idx, _) = self
            .amps
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, a)| if a.norm() > best.1 { (i, a.norm()) } else { best });
        let a = self.amps[idx];
        if a.norm() > 0.0 {
            let phase = a.conj() / a.norm();
            for x in &mut self.amps {
                *x *= phase;
            }
        }
    }

    /// `<J^z>`
    pub fn jz(&self) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(b, a)| a.norm_sqr() * magnetization(b, self.n_sites))
            .sum()
    }

    /// `<P>` with `P = prod_i (2 S_i^z)`.
    pub fn parity(&self) -> f64 {
        let n = self.n_sites;
        self.amps
            .iter()
            .enumerate()
            .map(|(b, a)| {
                let downs = n - (b.count_ones() as usize);
                if downs.is_multiple_of(2) {
                    a.norm_sqr()
                } else {
                    -a.norm_sqr()
                }
            })
            .sum()
    }
}

fn check_sites(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("state needs at least one site".into()));
    }
    if n > MAX_STATE_SITES {
        return Err(Error::TooLarge { n, cap: MAX_STATE_SITES });
    }
    Ok(())
}

pub(crate) fn norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn dotc(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `sum_i s_i` for basis index `b`, with `s_i = +-1/2`.
pub(crate) fn magnetization(b: usize, n: usize) -> f64 {
    b.count_ones() as f64 - n as f64 / 2.0
}

#[inline]
fn spin_z(b: usize, i: usize) -> f64 {
    if b >> i & 1 == 1 {
        0.5
    } else {
        -0.5
    }
}

/// `|CSS> = |up ... up>`.
pub fn css_state(n: usize) -> Result<StateVector> {
    product_state(&SpinConfig::all_up(n))
}

/// `|sigma_1 ... sigma_N>` with bit `i` set where `sigma_i = +1`.
pub fn product_state(config: &SpinConfig) -> Result<StateVector> {
    let n = config.len();
    check_sites(n)?;
    let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
    amps[config.basis_index()] = C64::new(1.0, 0.0);
    Ok(StateVector { n_sites: n, amps })
}

/// One unordered bond `i < j` with all four spin-flip amplitudes, indexed by
/// the target bit pattern of `(i, j)`.
#[derive(Clone, Copy, Debug)]
struct Bond {
    i: usize,
    j: usize,
    mask: usize,
    /// target up-up, source down-down: `K_ij + K_ji`
    uu: C64,
    /// target down-down, source up-up: `conj(K_ij + K_ji)`
    dd: C64,
    /// target i-up j-down: `J_ij + conj(J_ji)`
    ud: C64,
    /// target i-down j-up: `J_ji + conj(J_ij)`
    du: C64,
}

/// Precomputed bitwise form of a [`CouplingSpec`].
pub(crate) struct SparseHamiltonian {
    n: usize,
    diag: Vec<f64>,
    bonds: Vec<Bond>,
}

impl SparseHamiltonian {
    pub(crate) fn new(spec: &CouplingSpec) -> Self {
        let n = spec.n_sites();
        let mut bonds = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let k = spec.k(i, j) + spec.k(j, i);
                let bond = Bond {
                    i,
                    j,
                    mask: (1 << i) | (1 << j),
                    uu: k,
                    dd: k.conj(),
                    ud: spec.j(i, j) + spec.j(j, i).conj(),
                    du: spec.j(j, i) + spec.j(i, j).conj(),
                };
                if [bond.uu, bond.ud].iter().any(|z| z.norm() > 0.0) {
                    bonds.push(bond);
                }
            }
        }
        // S_i^+ S_i^- is the up projector; S_i^+ S_i^+ vanishes.
        let j_diag: Vec<f64> = (0..n).map(|i| 2.0 * spec.j(i, i).re).collect();
        let diag = (0..1usize << n)
            .map(|b| {
                let mut e = spec.offset();
                for i in 0..n {
                    let si = spin_z(b, i);
                    e += spec.z_field(i) * si;
                    if b >> i & 1 == 1 {
                        e += j_diag[i];
                    }
                    for j in 0..n {
                        if j != i {
                            e += spec.zz(i, j) * si * spin_z(b, j);
                        }
                    }
                }
                e
            })
            .collect();
        SparseHamiltonian { n, diag, bonds }
    }

    pub(crate) fn dim(&self) -> usize {
        1 << self.n
    }

    pub(crate) fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    #[inline]
    fn row(&self, b: usize, x: &[C64]) -> C64 {
        let mut acc = x[b] * self.diag[b];
        for bond in &self.bonds {
            let coeff = match (b >> bond.i & 1, b >> bond.j & 1) {
                (1, 1) => bond.uu,
                (0, 0) => bond.dd,
                (1, 0) => bond.ud,
                _ => bond.du,
            };
            acc += coeff * x[b ^ bond.mask];
        }
        acc
    }

    /// `out = H x`
    pub(crate) fn apply_into(&self, x: &[C64], out: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim());
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            if self.n >= 12 {
                out.par_iter_mut().enumerate().for_each(|(b, o)| *o = self.row(b, x));
                return;
            }
        }
        for (b, o) in out.iter_mut().enumerate() {
            *o = self.row(b, x);
        }
    }

    pub(crate) fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); x.len()];
        self.apply_into(x, &mut out);
        out
    }

    pub(crate) fn to_dense(&self) -> DMatrix<C64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for b in 0..dim {
            m[(b, b)] += C64::new(self.diag[b], 0.0);
            for bond in &self.bonds {
                let coeff = match (b >> bond.i & 1, b >> bond.j & 1) {
                    (1, 1) => bond.uu,
                    (0, 0) => bond.dd,
                    (1, 0) => bond.ud,
                    _ => bond.du,
                };
                m[(b, b ^ bond.mask)] += coeff;
            }
        }
        m
    }
}

/// `H |psi>` (unnormalized).
pub fn apply_hamiltonian(spec: &CouplingSpec, psi: &StateVector) -> Result<Vec<C64>> {
    if spec.n_sites() != psi.n_sites() {
        return Err(Error::DimensionMismatch { expected: spec.n_sites(), got: psi.n_sites() });
    }
    Ok(SparseHamiltonian::new(spec).apply(&psi.amps))
}

/// `<psi| H |psi>` (real part).
pub fn energy(spec: &CouplingSpec, psi: &StateVector) -> Result<f64> {
    let h_psi = apply_hamiltonian(spec, psi)?;
    Ok(dotc(&psi.amps, &h_psi).re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_tact, build_xyz, power_law, Geometry};
    use crate::oracle;
    use crate::random::{random_complex_spec, random_state};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn css_and_product_states() {
        let css = css_state(2).unwrap();
        assert_eq!(css.amplitudes()[0b11], C64::new(1.0, 0.0));
        assert!((css.jz() - 1.0).abs() < 1e-15);

        let all_up = product_state(&SpinConfig::all_up(3)).unwrap();
        assert_eq!(all_up, css_state(3).unwrap());
        let all_down = product_state(&SpinConfig::new(vec![-1, -1, -1]).unwrap()).unwrap();
        assert_eq!(all_down.amplitudes()[0], C64::new(1.0, 0.0));
        let mixed = product_state(&SpinConfig::new(vec![1, -1]).unwrap()).unwrap();
        assert_eq!(mixed.amplitudes()[0b01], C64::new(1.0, 0.0));
        assert!(css_state(MAX_STATE_SITES + 1).is_err());
    }

    #[test]
    fn bitwise_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let spec = random_complex_spec(4, &mut rng);
            let psi = random_state(4, &mut rng);
            let fast = apply_hamiltonian(&spec, &psi).unwrap();
            let dense = oracle::dense_hamiltonian(&spec) * oracle::to_dense(&psi);
            let err = fast.iter().zip(dense.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "err {err}");
        }
    }

    #[test]
    fn sparse_to_dense_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = random_complex_spec(5, &mut rng);
        let a = SparseHamiltonian::new(&spec).to_dense();
        let b = oracle::dense_hamiltonian(&spec);
        assert!(oracle::max_abs_diff(&a, &b) < 1e-12);
    }

    #[test]
    fn u1_spec_keeps_css_an_eigenstate() {
        let m = power_law(5, 1.0, 1.0, Geometry::Chain);
        let spec = build_xyz(&m, &m, &(&m * 0.4)).unwrap();
        let css = css_state(5).unwrap();
        let h = apply_hamiltonian(&spec, &css).unwrap();
        let e = h[31];
        for (b, a) in h.iter().enumerate() {
            if b != 31 {
                assert_eq!(a.norm(), 0.0);
            }
        }
        assert!(e.norm() > 0.0);
    }

    #[test]
    fn tact_on_css_makes_two_down_spins() {
        let n = 5;
        let h = apply_hamiltonian(&build_tact(1.0, n).unwrap(), &css_state(n).unwrap()).unwrap();
        for (b, a) in h.iter().enumerate() {
            if a.norm() > 0.0 {
                assert_eq!(n - b.count_ones() as usize, 2, "index {b:b}");
            }
        }
    }

    #[test]
    fn phase_fixing() {
        let mut psi = StateVector::from_amplitudes(
            1,
            vec![C64::new(0.0, 0.6), C64::new(0.0, -0.8)],
        )
        .unwrap();
        psi.fix_global_phase();
        assert!((psi.amplitudes()[1] - C64::new(0.8, 0.0)).norm() < 1e-15);
        assert!((psi.amplitudes()[0] - C64::new(-0.6, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn from_amplitudes_validates() {
        assert!(StateVector::from_amplitudes(2, vec![C64::new(0.0, 0.0); 4]).is_err());
        assert!(StateVector::from_amplitudes(2, vec![C64::new(1.0, 0.0); 3]).is_err());
        let psi = StateVector::from_amplitudes(1, vec![C64::new(3.0, 0.0), C64::new(4.0, 0.0)]).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-15);
    }
}
