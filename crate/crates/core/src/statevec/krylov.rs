//! `exp(-i H t) |psi>` by short-iterate Lanczos (Krylov) propagation.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{dotc, norm, SparseHamiltonian, StateVector};
use crate::error::{Error, Result};
use crate::model::CouplingSpec;
use crate::C64;

#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions {
    /// Target global error in the propagated state (2-norm).
    pub tol: f64,
    /// Maximum Krylov dimension per step.
    pub max_krylov: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { tol: 1e-10, max_krylov: 30 }
    }
}

/// Orthonormal Lanczos basis with tridiagonal coefficients.
pub(crate) struct Lanczos {
    pub basis: Vec<Vec<C64>>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    /// Norm of the residual after the last basis vector; zero on breakdown.
    pub beta_last: f64,
}

/// Build up to `m` Lanczos vectors from the normalized `start`, with full
/// reorthogonalization.
pub(crate) fn lanczos(h: &SparseHamiltonian, start: &[C64], m: usize) -> Lanczos {
    let m = m.min(h.dim()).max(1);
    let mut basis = vec![start.to_vec()];
    let mut alphas = Vec::with_capacity(m);
    let mut betas = Vec::with_capacity(m);
    let mut beta_last = 0.0;
    let mut w = vec![C64::new(0.0, 0.0); start.len()];
    let mut scale = 0.0f64;
    for k in 0..m {
        h.apply_into(&basis[k], &mut w);
        let alpha = dotc(&basis[k], &w).re;
        alphas.push(alpha);
        scale = scale.max(alpha.abs());
        // Two passes of classical Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            for q in &basis {
                let proj = dotc(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= proj * qi;
                }
            }
        }
        let beta = norm(&w);
        scale = scale.max(beta);
        if beta <= 1e-13 * scale.max(1e-300) {
            beta_last = 0.0;
            break;
        }
        if k + 1 == m {
            beta_last = beta;
            break;
        }
        betas.push(beta);
        basis.push(w.iter().map(|x| x / beta).collect());
    }
    Lanczos { basis, alphas, betas, beta_last }
}

impl Lanczos {
    pub(crate) fn tridiagonal_eigen(&self) -> SymmetricEigen<f64, nalgebra::Dyn> {
        let m = self.alphas.len();
        let t = DMatrix::from_fn(m, m, |r, c| {
            if r == c {
                self.alphas[r]
            } else if r + 1 == c {
                self.betas[r]
            } else if c + 1 == r {
                self.betas[c]
            } else {
                0.0
            }
        });
        SymmetricEigen::new(t)
    }

    /// `sum_k coeffs_k basis_k`
    pub(crate) fn combine(&self, coeffs: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.basis[0].len()];
        for (q, &c) in self.basis.iter().zip(coeffs) {
            for (o, x) in out.iter_mut().zip(q) {
                *o += c * x;
            }
        }
        out
    }
}

pub fn evolve(spec: &CouplingSpec, psi0: &StateVector, t: f64) -> Result<StateVector> {
    evolve_with(spec, psi0, t, &EvolveOptions::default())
}

pub fn evolve_with(spec: &CouplingSpec, psi0: &StateVector, t: f64, opts: &EvolveOptions) -> Result<StateVector> {
    if spec.n_sites() != psi0.n_sites() {
        return Err(Error::DimensionMismatch { expected: spec.n_sites(), got: psi0.n_sites() });
    }
    if !t.is_finite() {
        return Err(Error::InvalidInput(format!("evolution time must be finite, got {t}")));
    }
    if t == 0.0 {
        return Ok(psi0.clone());
    }
    let h = SparseHamiltonian::new(spec);
    let amps = propagate(&h, psi0.amplitudes(), t, opts)?;
    Ok(StateVector::from_normalized(psi0.n_sites(), amps))
}

/// Propagate a normalized vector; the result is renormalized after each step.
pub(crate) fn propagate(h: &SparseHamiltonian, start: &[C64], t: f64, opts: &EvolveOptions) -> Result<Vec<C64>> {
    let total = t.abs();
    let sign = t.signum();
    let mut v = start.to_vec();
    let mut elapsed = 0.0;
    while elapsed < total {
        let remaining = total - elapsed;
        let krylov = lanczos(h, &v, opts.max_krylov);
        let eig = krylov.tridiagonal_eigen();
        let m = krylov.alphas.len();
        // Q^T e1
        let first: Vec<f64> = (0..m).map(|k| eig.eigenvectors[(0, k)]).collect();
        let coeffs = |tau: f64| -> Vec<C64> {
            (0..m)
                .map(|r| {
                    (0..m)
                        .map(|k| {
                            let phase = C64::new(0.0, -sign * tau * eig.eigenvalues[k]).exp();
                            phase * eig.eigenvectors[(r, k)] * first[k]
                        })
                        .sum()
                })
                .collect()
        };
        let mut tau = remaining;
        let mut c = coeffs(tau);
        loop {
            let estimate = krylov.beta_last * c[m - 1].norm();
            if estimate <= opts.tol * tau / total {
                break;
            }
            tau *= 0.5;
            if tau < total * 1e-14 {
                return Err(Error::StepUnderflow { t: elapsed, step: tau, estimate });
            }
            c = coeffs(tau);
        }
        let mut next = krylov.combine(&c);
        let nrm = norm(&next);
        for x in &mut next {
            *x /= nrm;
        }
        v = next;
        elapsed += tau;
    }
    Ok(v)
}
