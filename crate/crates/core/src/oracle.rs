//! Dense-matrix reference constructions built from Kronecker products.
//!
//! Everything here is deliberately independent of the bitwise routines in
//! [`crate::statevec`]: operators are assembled from 2x2 site matrices and
//! multiplied with nalgebra. Intended for `N <= 10`.

use nalgebra::{DMatrix, DVector};

use crate::model::{CouplingSpec, SpinConfig};
use crate::statevec::StateVector;
use crate::C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Local basis order is (down, up).
pub fn sp() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., 0.), c(1., 0.), c(0., 0.)])
}

pub fn sm() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)])
}

pub fn sz() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[c(-0.5, 0.), c(0., 0.), c(0., 0.), c(0.5, 0.)])
}

pub fn sx() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0.5, 0.), c(0.5, 0.), c(0., 0.)])
}

pub fn sy() -> DMatrix<C64> {
    // S^y = (S^+ - S^-) / (2i)
    (sp() - sm()) * c(0.0, -0.5)
}

fn embed(n: usize, locals: &[(usize, DMatrix<C64>)]) -> DMatrix<C64> {
    let id = DMatrix::<C64>::identity(2, 2);
    let local = |site: usize| -> DMatrix<C64> {
        locals
            .iter()
            .filter(|(s, _)| *s == site)
            .fold(id.clone(), |acc, (_, m)| acc * m)
    };
    // Most significant site first so that bit i of the index is site i.
    let mut out = local(n - 1);
    for site in (0..n - 1).rev() {
        out = out.kronecker(&local(site));
    }
    out
}

/// `op` acting on `site`, identity elsewhere.
pub fn site_op(n: usize, site: usize, op: &DMatrix<C64>) -> DMatrix<C64> {
    embed(n, &[(site, op.clone())])
}

/// Product `a_i b_j` (for `i == j` the local product `a b`).
pub fn two_site_op(n: usize, i: usize, a: &DMatrix<C64>, j: usize, b: &DMatrix<C64>) -> DMatrix<C64> {
    embed(n, &[(i, a.clone()), (j, b.clone())])
}

/// Dense `H` with every sum over ordered pairs taken literally.
pub fn dense_hamiltonian(spec: &CouplingSpec) -> DMatrix<C64> {
    let n = spec.n_sites();
    let dim = 1usize << n;
    let (p, m, z) = (sp(), sm(), sz());
    let mut h = DMatrix::<C64>::identity(dim, dim) * c(spec.offset(), 0.0);
    for i in 0..n {
        for j in 0..n {
            let k = spec.k(i, j);
            if k.norm() > 0.0 {
                h += two_site_op(n, i, &p, j, &p) * k;
                h += two_site_op(n, j, &m, i, &m) * k.conj();
            }
            let jj = spec.j(i, j);
            if jj.norm() > 0.0 {
                h += two_site_op(n, i, &p, j, &m) * jj;
                h += two_site_op(n, j, &p, i, &m) * jj.conj();
            }
            let zz = spec.zz(i, j);
            if zz != 0.0 {
                h += two_site_op(n, i, &z, j, &z) * c(zz, 0.0);
            }
        }
        if spec.z_field(i) != 0.0 {
            h += site_op(n, i, &z) * c(spec.z_field(i), 0.0);
        }
    }
    h
}

/// Diagonal of `P = prod_i (2 S_i^z)` as a dense matrix.
pub fn dense_parity(n: usize) -> DMatrix<C64> {
    let two_sz = sz() * c(2.0, 0.0);
    embed(n, &(0..n).map(|i| (i, two_sz.clone())).collect::<Vec<_>>())
}

/// `max |[H, P]|` entry.
pub fn parity_residual(h: &DMatrix<C64>, n: usize) -> f64 {
    let p = dense_parity(n);
    let comm = h * &p - &p * h;
    comm.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Dense `[J^x, J^y, J^z]`.
pub fn dense_collective(n: usize) -> [DMatrix<C64>; 3] {
    let sum = |op: DMatrix<C64>| {
        (0..n).fold(DMatrix::zeros(1 << n, 1 << n), |acc, i| acc + site_op(n, i, &op))
    };
    [sum(sx()), sum(sy()), sum(sz())]
}

/// Dense `J_perp({theta}) = sum_i (cos theta_i S_i^x + sin theta_i S_i^y)`.
pub fn dense_j_perp(n: usize, thetas: &[f64]) -> DMatrix<C64> {
    assert_eq!(thetas.len(), n);
    let (x, y) = (sx(), sy());
    thetas.iter().enumerate().fold(DMatrix::zeros(1 << n, 1 << n), |acc, (i, t)| {
        acc + site_op(n, i, &(&x * c(t.cos(), 0.0) + &y * c(t.sin(), 0.0)))
    })
}

/// Dense `U = prod_i exp(i (1 - sigma_i) pi S_i^x / 2)`.
pub fn dense_flip_unitary(config: &SpinConfig) -> DMatrix<C64> {
    let n = config.len();
    // exp(i pi S^x) = i sigma^x
    let flip = sx() * c(0.0, 2.0);
    let locals: Vec<_> = (0..n)
        .filter(|&i| config.is_flipped(i))
        .map(|i| (i, flip.clone()))
        .collect();
    if locals.is_empty() {
        return DMatrix::identity(1 << n, 1 << n);
    }
    embed(n, &locals)
}

pub fn dense_css(n: usize) -> DVector<C64> {
    let mut v = DVector::zeros(1 << n);
    v[(1 << n) - 1] = c(1.0, 0.0);
    v
}

pub fn to_dense(psi: &StateVector) -> DVector<C64> {
    DVector::from_column_slice(psi.amplitudes())
}

/// `<psi| op |psi>`
pub fn expectation(op: &DMatrix<C64>, psi: &DVector<C64>) -> C64 {
    psi.dotc(&(op * psi))
}

pub fn is_hermitian(m: &DMatrix<C64>, tol: f64) -> bool {
    (m - m.adjoint()).iter().all(|z| z.norm() <= tol)
}

pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
