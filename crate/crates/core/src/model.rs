//! Parity-conserving bilinear spin-1/2 Hamiltonians.
//!
//! A [`CouplingSpec`] stores
//!
//! ```text
//! H = sum_ij ( K_ij S_i^+ S_j^+ + J_ij S_i^+ S_j^- + h.c. )
//!   + sum_ij Jz_ij S_i^z S_j^z + sum_i h_i S_i^z + offset
//! ```
//!
//! where every sum runs over all ordered pairs `(i, j)`. `K` is stored complex
//! symmetric, `J` Hermitian, `Jz` real symmetric with zero diagonal.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::oracle;
use crate::C64;

const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct CouplingSpec {
    n_sites: usize,
    k: DMatrix<C64>,
    j: DMatrix<C64>,
    zz: DMatrix<f64>,
    z_fields: Vec<f64>,
    offset: f64,
    include_diagonal_in_kernel: bool,
}

/// Serialized form used for hashing and for the `explicit` model format.
#[derive(Serialize, Deserialize)]
struct CanonicalSpec {
    n_sites: usize,
    k: Vec<Vec<[f64; 2]>>,
    j: Vec<Vec<[f64; 2]>>,
    zz: Vec<Vec<f64>>,
    z_fields: Vec<f64>,
    offset: f64,
    include_diagonal_in_kernel: bool,
}

fn complex_rows(m: &DMatrix<C64>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

fn real_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
        .collect()
}

impl CouplingSpec {
    /// Validate and assemble a spec. A non-symmetric `k` is symmetrized with a
    /// warning, since only its symmetric part multiplies `S_i^+ S_j^+`.
    pub fn new(
        k: DMatrix<C64>,
        j: DMatrix<C64>,
        zz: DMatrix<f64>,
        z_fields: Vec<f64>,
    ) -> Result<Self> {
        let n = k.nrows();
        if n == 0 {
            return Err(Error::InvalidInput("spec needs at least one site".into()));
        }
        for (name, rows, cols) in [
            ("k", k.nrows(), k.ncols()),
            ("j", j.nrows(), j.ncols()),
            ("zz", zz.nrows(), zz.ncols()),
        ] {
            if rows != n || cols != n {
                return Err(Error::InvalidInput(format!(
                    "{name} matrix is {rows}x{cols}, expected {n}x{n}"
                )));
            }
        }
        if z_fields.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: z_fields.len() });
        }
        let finite = k.iter().chain(j.iter()).all(|z| z.re.is_finite() && z.im.is_finite())
            && zz.iter().chain(z_fields.iter()).all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidInput("non-finite coupling".into()));
        }

        let j_scale = 1.0 + j.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for r in 0..n {
            for c in 0..n {
                if (j[(r, c)] - j[(c, r)].conj()).norm() > HERMITIAN_TOL * j_scale {
                    return Err(Error::InvalidInput(format!(
                        "j matrix is not Hermitian at ({r}, {c})"
                    )));
                }
                if zz[(r, c)] != zz[(c, r)] {
                    return Err(Error::InvalidInput(format!(
                        "zz matrix is not symmetric at ({r}, {c})"
                    )));
                }
            }
            if zz[(r, r)] != 0.0 {
                return Err(Error::InvalidInput(format!("zz matrix has nonzero diagonal at {r}")));
            }
        }

        let k_sym = (&k + k.transpose()) * C64::new(0.5, 0.0);
        let asym = (&k - &k_sym).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if asym > 0.0 {
            log::warn!("k matrix is not symmetric (max deviation {asym:e}); symmetrized");
        }
        // Enforce exact Hermiticity so the bitwise and dense routes see the same J.
        let j_herm = (&j + j.adjoint()) * C64::new(0.5, 0.0);

        Ok(CouplingSpec {
            n_sites: n,
            k: k_sym,
            j: j_herm,
            zz,
            z_fields,
            offset: 0.0,
            include_diagonal_in_kernel: true,
        })
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::new(
            DMatrix::zeros(n, n),
            DMatrix::zeros(n, n),
            DMatrix::zeros(n, n),
            vec![0.0; n],
        )
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn k(&self, i: usize, j: usize) -> C64 {
        self.k[(i, j)]
    }

    pub fn j(&self, i: usize, j: usize) -> C64 {
        self.j[(i, j)]
    }

    pub fn zz(&self, i: usize, j: usize) -> f64 {
        self.zz[(i, j)]
    }

    pub fn z_field(&self, i: usize) -> f64 {
        self.z_fields[i]
    }

    pub fn k_matrix(&self) -> &DMatrix<C64> {
        &self.k
    }

    pub fn j_matrix(&self) -> &DMatrix<C64> {
        &self.j
    }

    pub fn zz_matrix(&self) -> &DMatrix<f64> {
        &self.zz
    }

    pub fn z_fields(&self) -> &[f64] {
        &self.z_fields
    }

    /// Scalar energy offset. Never affects any observable.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Whether the kernel sum includes the `i = j` terms. `S_i^+ S_i^+`
    /// vanishes on spin-1/2, so `K_ii` never acts on a state; it only enters
    /// the kernel value when this flag is set.
    pub fn include_diagonal_in_kernel(&self) -> bool {
        self.include_diagonal_in_kernel
    }

    pub fn with_include_diagonal_in_kernel(mut self, include: bool) -> Self {
        self.include_diagonal_in_kernel = include;
        self
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    /// Add `fields[i] * S_i^z` to the diagonal part.
    pub fn with_added_fields(mut self, fields: &[f64]) -> Result<Self> {
        if fields.len() != self.n_sites {
            return Err(Error::DimensionMismatch { expected: self.n_sites, got: fields.len() });
        }
        for (h, df) in self.z_fields.iter_mut().zip(fields) {
            *h += df;
        }
        Ok(self)
    }

    /// Multiply every term of the Hamiltonian by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let c = C64::new(factor, 0.0);
        CouplingSpec {
            n_sites: self.n_sites,
            k: &self.k * c,
            j: &self.j * c,
            zz: &self.zz * factor,
            z_fields: self.z_fields.iter().map(|h| h * factor).collect(),
            offset: self.offset * factor,
            include_diagonal_in_kernel: self.include_diagonal_in_kernel,
        }
    }

    /// True when every off-diagonal `K_ij` vanishes, i.e. the Hamiltonian
    /// conserves `J^z` and |CSS> is an eigenstate.
    pub fn conserves_jz(&self) -> bool {
        let n = self.n_sites;
        (0..n).all(|i| (0..n).all(|j| i == j || self.k[(i, j)] == C64::new(0.0, 0.0)))
    }

    pub fn k_max_abs(&self) -> f64 {
        self.k.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Rough local energy scale: the largest row sum of coupling magnitudes.
    /// Returns 1 for an empty Hamiltonian.
    pub fn coupling_scale(&self) -> f64 {
        let n = self.n_sites;
        let scale = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| 2.0 * self.k[(i, j)].norm() + 2.0 * self.j[(i, j)].norm() + self.zz[(i, j)].abs())
                    .sum::<f64>()
                    + self.z_fields[i].abs()
            })
            .fold(0.0, f64::max);
        if scale > 0.0 {
            scale
        } else {
            1.0
        }
    }

    fn canonical(&self) -> CanonicalSpec {
        CanonicalSpec {
            n_sites: self.n_sites,
            k: complex_rows(&self.k),
            j: complex_rows(&self.j),
            zz: real_rows(&self.zz),
            z_fields: self.z_fields.clone(),
            offset: self.offset,
            include_diagonal_in_kernel: self.include_diagonal_in_kernel,
        }
    }

    /// Canonical JSON: fixed field order, complex numbers as `[re, im]`.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&self.canonical()).expect("canonical spec serializes")
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn model_hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

fn check_real_symmetric(name: &str, m: &DMatrix<f64>, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "{name} is {}x{}, expected {n}x{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    for r in 0..n {
        if m[(r, r)] != 0.0 {
            return Err(Error::InvalidInput(format!("{name} has nonzero diagonal at {r}")));
        }
        for c in 0..r {
            if m[(r, c)] != m[(c, r)] {
                return Err(Error::InvalidInput(format!("{name} is not symmetric at ({r}, {c})")));
            }
        }
    }
    Ok(())
}

/// XYZ model `sum_ij (Jx_ij Sx Sx + Jy_ij Sy Sy + Jz_ij Sz Sz)`.
///
/// Maps to `K = (Jx - Jy) / 4`, `J = (Jx + Jy) / 4`.
pub fn build_xyz(jx: &DMatrix<f64>, jy: &DMatrix<f64>, jz: &DMatrix<f64>) -> Result<CouplingSpec> {
    let n = jx.nrows();
    check_real_symmetric("jx", jx, n)?;
    check_real_symmetric("jy", jy, n)?;
    check_real_symmetric("jz", jz, n)?;
    let k = (jx - jy).map(|x| C64::new(x / 4.0, 0.0));
    let j = (jx + jy).map(|x| C64::new(x / 4.0, 0.0));
    CouplingSpec::new(k, j, jz.clone(), vec![0.0; n])
}

/// One-axis twisting `(chi / N) (J^x)^2`.
///
/// Stored with `K_ij = J_ij = chi / (4N)` for all `i, j` including the
/// diagonal. The diagonal `J_ii` terms act as `chi/(4N) + chi/(2N) S_i^z`,
/// while `(S_i^x)^2 = 1/4`, so a compensating field `-chi/(2N)` is added.
pub fn build_oat(chi: f64, n: usize) -> Result<CouplingSpec> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("OAT needs n >= 2, got {n}")));
    }
    let c = chi / (4.0 * n as f64);
    let k = DMatrix::from_element(n, n, C64::new(c, 0.0));
    let fields = vec![-chi / (2.0 * n as f64); n];
    CouplingSpec::new(k.clone(), k, DMatrix::zeros(n, n), fields)
}

/// Two-axis countertwisting `(chi / (i N)) [(J^+)^2 - (J^-)^2]`, i.e.
/// `K_ij = -i chi / N` for all `i, j`.
pub fn build_tact(chi: f64, n: usize) -> Result<CouplingSpec> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("TACT needs n >= 2, got {n}")));
    }
    let k = DMatrix::from_element(n, n, C64::new(0.0, -chi / n as f64));
    CouplingSpec::new(k, DMatrix::zeros(n, n), DMatrix::zeros(n, n), vec![0.0; n])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    /// Open chain, distance `|i - j|`.
    Chain,
    /// Periodic chain, minimum-image distance.
    Ring,
}

/// `amplitude / d_ij^exponent` on a 1D lattice, zero diagonal.
pub fn power_law(n: usize, amplitude: f64, exponent: f64, geometry: Geometry) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            return 0.0;
        }
        let d = i.abs_diff(j);
        let d = match geometry {
            Geometry::Chain => d,
            Geometry::Ring => d.min(n - d),
        };
        amplitude / (d as f64).powf(exponent)
    })
}

/// Builds dense `H` and `P = prod_i (2 S_i^z)` and returns `max |[H, P]|`.
pub fn verify_parity(spec: &CouplingSpec, n_max: usize) -> Result<f64> {
    if spec.n_sites() > n_max {
        return Err(Error::TooLarge { n: spec.n_sites(), cap: n_max });
    }
    let h = oracle::dense_hamiltonian(spec);
    Ok(oracle::parity_residual(&h, spec.n_sites()))
}

/// Computational-basis product state `|sigma_1 ... sigma_N>`, `+1` = up.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(sigmas: Vec<i8>) -> Result<Self> {
        if sigmas.is_empty() {
            return Err(Error::InvalidInput("empty spin configuration".into()));
        }
        if let Some(bad) = sigmas.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidInput(format!("spin entries must be +1 or -1, got {bad}")));
        }
        Ok(SpinConfig(sigmas))
    }

    pub fn all_up(n: usize) -> Self {
        SpinConfig(vec![1; n])
    }

    /// `+ - + - ...`
    pub fn neel(n: usize) -> Self {
        SpinConfig((0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sigmas(&self) -> &[i8] {
        &self.0
    }

    pub fn sigma(&self, i: usize) -> f64 {
        f64::from(self.0[i])
    }

    pub fn is_flipped(&self, i: usize) -> bool {
        self.0[i] < 0
    }

    pub fn is_all_up(&self) -> bool {
        self.0.iter().all(|&s| s > 0)
    }

    /// Basis index with bit `i` set where `sigma_i = +1`.
    pub fn basis_index(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > 0)
            .fold(0, |acc, (i, _)| acc | (1 << i))
    }
}

impl std::str::FromStr for SpinConfig {
    type Err = Error;

    /// Accepts `+-+-`, `ud` / `UD`, or comma-separated `1,-1,...`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let sigmas: Result<Vec<i8>> = if s.contains(',') {
            s.split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<i8>()
                        .map_err(|_| Error::InvalidInput(format!("bad spin entry {tok:?}")))
                })
                .collect()
        } else {
            s.chars()
                .map(|c| match c {
                    '+' | 'u' | 'U' | '1' => Ok(1),
                    '-' | 'd' | 'D' | '0' => Ok(-1),
                    other => Err(Error::InvalidInput(format!("bad spin character {other:?}"))),
                })
                .collect()
        };
        SpinConfig::new(sigmas?)
    }
}

impl std::fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &s in &self.0 {
            f.write_str(if s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}
