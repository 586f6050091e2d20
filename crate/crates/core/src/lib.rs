//! Exact small-system verification of first-order spin squeezing generated by
//! parity-conserving bilinear spin-1/2 Hamiltonians.
//!
//! A Hamiltonian of the form
//!
//! ```text
//! H = sum_ij ( K_ij S_i^+ S_j^+ + J_ij S_i^+ S_j^- + h.c. ) + H_z
//! ```
//!
//! starting from the coherent spin state |CSS> (all spins up along z) builds
//! squeezing linearly in time at rate `-4 I_max / N`, and its ground state
//! under `lambda H - h sum_i S_i^z` squeezes linearly in `lambda` at rate
//! `-2 R_max / (h N)`. Here `R + i I = sum_ij exp(i(theta_i + theta_j)) K_ij`
//! is the coupling kernel, maximized over one angle per site.
//!
//! The crate is organized as:
//!
//! * [`model`]: coupling specifications and named constructors (XYZ, OAT, TACT).
//! * [`kernel`]: kernel evaluation, gradient and multistart maximization.
//! * [`statevec`]: 2^N state vectors, bitwise Hamiltonian action, Krylov
//!   time evolution and ground states.
//! * [`squeezing`]: collective-spin moments and the squeezing parameter in
//!   the uniform and site-local conventions.
//! * [`dynamics`] / [`adiabatic`]: slope harnesses for the dynamical and
//!   adiabatic cases, with dense proof-identity oracles.
//! * [`generalize`]: arbitrary computational-basis initial states.
//!
//! Basis convention: site `i` is bit `i` of the basis index (little-endian),
//! and a set bit means spin up along z.

pub mod adiabatic;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod generalize;
pub mod io;
pub mod kernel;
pub mod model;
pub mod optimize;
pub mod oracle;
pub mod random;
pub mod squeezing;
pub mod statevec;

pub use error::{Error, Result};
pub use kernel::{AngleSet, KernelMaxResult};
pub use model::{CouplingSpec, SpinConfig};
pub use num_complex::Complex64 as C64;
pub use squeezing::SqueezingReport;
pub use statevec::StateVector;

/// Run `f` over `items`, in parallel when the `parallel` feature is on.
/// Output order always matches input order.
pub(crate) fn ordered_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
