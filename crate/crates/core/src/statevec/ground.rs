//! Ground states of `H'(lambda) = lambda H - sum_i f_i S_i^z`.

use nalgebra::SymmetricEigen;

use super::krylov::lanczos;
use super::{norm, SparseHamiltonian, StateVector};
use crate::error::{Error, Result};
use crate::model::CouplingSpec;
use crate::C64;

/// Dense Hermitian eigensolve up to this many sites, restarted Lanczos above.
pub const DENSE_GROUND_STATE_CAP: usize = 10;

/// Ground levels closer than this are flagged as degenerate.
const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroundStateMethod {
    Dense,
    Lanczos,
}

#[derive(Clone, Debug)]
pub struct GroundStateResult {
    pub state: StateVector,
    pub energy: f64,
    /// `E_1 - E_0`. For the Lanczos path this is the gap within the Krylov
    /// space reachable from the start vector (the start vector's symmetry
    /// sector).
    pub gap: f64,
    pub lambda: f64,
    pub field_h: f64,
    pub degenerate: bool,
    pub residual: f64,
    pub method: GroundStateMethod,
}

/// Ground state of `lambda H - field_h sum_i S_i^z`.
pub fn ground_state(spec: &CouplingSpec, lambda: f64, field_h: f64) -> Result<GroundStateResult> {
    if !(field_h > 0.0 && field_h.is_finite()) {
        return Err(Error::InvalidInput(format!("field must be positive, got {field_h}")));
    }
    let fields = vec![field_h; spec.n_sites()];
    let mut res = ground_state_with_fields(spec, lambda, &fields)?;
    res.field_h = field_h;
    Ok(res)
}

/// Ground state of `lambda H - sum_i fields[i] S_i^z`.
pub fn ground_state_with_fields(spec: &CouplingSpec, lambda: f64, fields: &[f64]) -> Result<GroundStateResult> {
    let n = spec.n_sites();
    if fields.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: fields.len() });
    }
    if !lambda.is_finite() || fields.iter().any(|f| !f.is_finite()) {
        return Err(Error::InvalidInput("lambda and fields must be finite".into()));
    }
    if n > super::MAX_STATE_SITES {
        return Err(Error::TooLarge { n, cap: super::MAX_STATE_SITES });
    }
    let neg: Vec<f64> = fields.iter().map(|f| -f).collect();
    let perturbed = spec.scaled(lambda).with_added_fields(&neg)?;
    let h = SparseHamiltonian::new(&perturbed);
    let mut res = if n <= DENSE_GROUND_STATE_CAP {
        dense_ground(&h, n)?
    } else {
        lanczos_ground(&h, n)?
    };
    res.lambda = lambda;
    res.field_h = fields.iter().sum::<f64>() / n as f64;
    Ok(res)
}

fn residual_norm(h: &SparseHamiltonian, v: &[C64], e: f64) -> f64 {
    let hv = h.apply(v);
    hv.iter().zip(v).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt()
}

fn finish(h: &SparseHamiltonian, n: usize, amps: Vec<C64>, e0: f64, e1: f64, method: GroundStateMethod) -> Result<GroundStateResult> {
    let mut state = StateVector::from_amplitudes(n, amps)?;
    state.fix_global_phase();
    let residual = residual_norm(h, state.amplitudes(), e0);
    let gap = (e1 - e0).max(0.0);
    Ok(GroundStateResult {
        state,
        energy: e0,
        gap,
        lambda: 0.0,
        field_h: 0.0,
        degenerate: gap < DEGENERACY_TOL,
        residual,
        method,
    })
}

fn dense_ground(h: &SparseHamiltonian, n: usize) -> Result<GroundStateResult> {
    let eig = SymmetricEigen::new(h.to_dense());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let e0 = eig.eigenvalues[order[0]];
    let e1 = order.get(1).map_or(f64::INFINITY, |&k| eig.eigenvalues[k]);
    let amps: Vec<C64> = eig.eigenvectors.column(order[0]).iter().copied().collect();
    finish(h, n, amps, e0, e1, GroundStateMethod::Dense)
}

fn lanczos_ground(h: &SparseHamiltonian, n: usize) -> Result<GroundStateResult> {
    const KRYLOV_DIM: usize = 80;
    const MAX_RESTARTS: usize = 200;
    // Deterministic start: the basis state of lowest diagonal energy, which is
    // the unperturbed ground state for small lambda.
    let start = h
        .diagonal()
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (b, &e)| if e < best.1 { (b, e) } else { best })
        .0;
    let mut v = vec![C64::new(0.0, 0.0); h.dim()];
    v[start] = C64::new(1.0, 0.0);
    let mut last = None;
    for _ in 0..MAX_RESTARTS {
        let krylov = lanczos(h, &v, KRYLOV_DIM);
        let eig = krylov.tridiagonal_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let e0 = eig.eigenvalues[order[0]];
        let e1 = order.get(1).map_or(f64::INFINITY, |&k| eig.eigenvalues[k]);
        let scale = eig.eigenvalues.iter().fold(1e-300f64, |m, e| m.max(e.abs()));
        let y: Vec<C64> = eig.eigenvectors.column(order[0]).iter().map(|&x| C64::new(x, 0.0)).collect();
        let mut x = krylov.combine(&y);
        let nrm = norm(&x);
        for a in &mut x {
            *a /= nrm;
        }
        let r = residual_norm(h, &x, e0);
        if r <= 1e-9 * scale {
            return finish(h, n, x, e0, e1, GroundStateMethod::Lanczos);
        }
        last = Some(r);
        v = x;
    }
    Err(Error::NoConvergence(format!(
        "restarted Lanczos residual {:e} after {MAX_RESTARTS} restarts",
        last.unwrap_or(f64::NAN)
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_oat, build_xyz, power_law, Geometry};
    use crate::statevec::css_state;

    fn xyz_chain(n: usize) -> CouplingSpec {
        let m = power_law(n, 1.0, 1.0, Geometry::Chain);
        build_xyz(&m, &(&m * -0.4), &(&m * 0.3)).unwrap()
    }

    #[test]
    fn lambda_zero_gives_css() {
        let spec = xyz_chain(5);
        let gs = ground_state(&spec, 0.0, 1.5).unwrap();
        assert!((gs.energy + 5.0 * 1.5 / 2.0).abs() < 1e-12);
        assert!((gs.state.inner(&css_state(5).unwrap()).norm() - 1.0).abs() < 1e-12);
        assert!((gs.gap - 1.5).abs() < 1e-12);
        assert!(!gs.degenerate);
    }

    #[test]
    fn energy_slope_is_css_expectation() {
        let spec = xyz_chain(5);
        let e_css = crate::statevec::energy(&spec, &css_state(5).unwrap()).unwrap();
        let dl = 1e-5;
        let ep = ground_state(&spec, dl, 1.0).unwrap().energy;
        let em = ground_state(&spec, -dl, 1.0).unwrap().energy;
        let slope = (ep - em) / (2.0 * dl);
        assert!((slope - e_css).abs() < 1e-6, "{slope} vs {e_css}");
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        let spec = build_oat(1.0, 8).unwrap();
        let h = SparseHamiltonian::new(&spec.scaled(0.3).with_added_fields(&[-1.0; 8]).unwrap());
        let a = lanczos_ground(&h, 8).unwrap();
        assert!(a.residual < 1e-8);
        // Dense reference on the same operator.
        let b = dense_ground(&h, 8).unwrap();
        assert!((a.energy - b.energy).abs() < 1e-10);
        assert!((a.state.inner(&b.state).norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_nonpositive_field() {
        let spec = xyz_chain(3);
        assert!(ground_state(&spec, 0.1, 0.0).is_err());
        assert!(ground_state(&spec, 0.1, -1.0).is_err());
    }
}
