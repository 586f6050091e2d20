//! Model files (JSON), curve CSV output, and the binary state dump.
//!
//! Model file fields:
//!
//! ```json
//! { "n_sites": 6, "model": "xyz",
//!   "jx": 1.0,
//!   "jy": [[0, 0.5, ...], ...],
//!   "jz": { "amplitude": 1.0, "exponent": 3.0, "geometry": "chain" },
//!   "z_fields": [0, 0, 0, 0, 0, 0] }
//! ```
//!
//! * `model`: `xyz` (default), `oat`, `tact` or `explicit`.
//! * `xyz`: `jx`, `jy`, `jz` each a number (all-to-all), a dense matrix, or a
//!   power law; missing entries are zero.
//! * `oat` / `tact`: `chi`.
//! * `explicit`: `k` and `j` as matrices of `[re, im]` pairs, `zz` real.
//! * optional everywhere: `z_fields`, `offset`, `include_diagonal_in_kernel`.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_oat, build_tact, build_xyz, power_law, CouplingSpec, Geometry};
use crate::squeezing::{SqueezingReport, CSV_HEADER};
use crate::statevec::{StateVector, MAX_STATE_SITES};
use crate::C64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Xyz,
    Oat,
    Tact,
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coupling {
    Uniform(f64),
    Matrix(Vec<Vec<f64>>),
    PowerLaw { amplitude: f64, exponent: f64, geometry: Geometry },
}

impl Coupling {
    fn to_matrix(&self, n: usize, field: &str) -> Result<DMatrix<f64>> {
        match self {
            Coupling::Uniform(v) => Ok(DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { *v })),
            Coupling::PowerLaw { amplitude, exponent, geometry } => Ok(power_law(n, *amplitude, *exponent, *geometry)),
            Coupling::Matrix(rows) => real_matrix(rows, n, field),
        }
    }

    /// Replace a number or power-law amplitude by `v`; scale a matrix by `v`.
    fn set(&mut self, v: f64) {
        match self {
            Coupling::Uniform(x) => *x = v,
            Coupling::PowerLaw { amplitude, .. } => *amplitude = v,
            Coupling::Matrix(rows) => rows.iter_mut().flatten().for_each(|x| *x *= v),
        }
    }
}

fn shape_error(field: &str, n: usize, rows: usize, row: Option<(usize, usize)>) -> Error {
    match row {
        None => Error::ModelFile(format!("field `{field}`: expected {n} rows, got {rows}")),
        Some((r, len)) => Error::ModelFile(format!("field `{field}`: row {r} has {len} entries, expected {n}")),
    }
}

fn real_matrix(rows: &[Vec<f64>], n: usize, field: &str) -> Result<DMatrix<f64>> {
    if rows.len() != n {
        return Err(shape_error(field, n, rows.len(), None));
    }
    for (r, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(shape_error(field, n, rows.len(), Some((r, row.len()))));
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn complex_matrix(rows: &[Vec<[f64; 2]>], n: usize, field: &str) -> Result<DMatrix<C64>> {
    if rows.len() != n {
        return Err(shape_error(field, n, rows.len(), None));
    }
    for (r, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(shape_error(field, n, rows.len(), Some((r, row.len()))));
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub n_sites: usize,
    #[serde(default)]
    pub model: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jx: Option<Coupling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jy: Option<Coupling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jz: Option<Coupling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zz: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_fields: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub include_diagonal_in_kernel: Option<bool>,
}

/// Parameters accepted by [`ModelFile::with_parameter`].
pub const SWEEP_PARAMETERS: [&str; 5] = ["chi", "jx", "jy", "jz", "offset"];

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ModelFile(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::ModelFile(msg) => Error::ModelFile(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes")
    }

    pub fn build(&self) -> Result<CouplingSpec> {
        let n = self.n_sites;
        if n == 0 || n > MAX_STATE_SITES {
            return Err(Error::ModelFile(format!("field `n_sites`: must be in 1..={MAX_STATE_SITES}, got {n}")));
        }
        let need_chi = || self.chi.ok_or_else(|| Error::ModelFile("field `chi`: required for oat/tact".into()));
        let wrap = |e: Error| match e {
            Error::InvalidInput(msg) => Error::ModelFile(msg),
            other => other,
        };
        let spec = match self.model {
            ModelKind::Xyz => {
                let m = |c: &Option<Coupling>, f: &str| match c {
                    Some(c) => c.to_matrix(n, f),
                    None => Ok(DMatrix::zeros(n, n)),
                };
                build_xyz(&m(&self.jx, "jx")?, &m(&self.jy, "jy")?, &m(&self.jz, "jz")?).map_err(wrap)?
            }
            ModelKind::Oat => build_oat(need_chi()?, n).map_err(wrap)?,
            ModelKind::Tact => build_tact(need_chi()?, n).map_err(wrap)?,
            ModelKind::Explicit => {
                let k = match &self.k {
                    Some(rows) => complex_matrix(rows, n, "k")?,
                    None => DMatrix::zeros(n, n),
                };
                let j = match &self.j {
                    Some(rows) => complex_matrix(rows, n, "j")?,
                    None => DMatrix::zeros(n, n),
                };
                let zz = match &self.zz {
                    Some(rows) => real_matrix(rows, n, "zz")?,
                    None => DMatrix::zeros(n, n),
                };
                CouplingSpec::new(k, j, zz, vec![0.0; n]).map_err(wrap)?
            }
        };
        let mut spec = spec;
        if let Some(f) = &self.z_fields {
            if f.len() != n {
                return Err(Error::ModelFile(format!("field `z_fields`: expected {n} entries, got {}", f.len())));
            }
            spec = spec.with_added_fields(f).map_err(wrap)?;
        }
        if let Some(o) = self.offset {
            let total = spec.offset() + o;
            spec = spec.with_offset(total);
        }
        if let Some(flag) = self.include_diagonal_in_kernel {
            spec = spec.with_include_diagonal_in_kernel(flag);
        }
        Ok(spec)
    }

    /// Copy with one scalar parameter replaced (see [`SWEEP_PARAMETERS`]).
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<Self> {
        let mut m = self.clone();
        match name {
            "chi" => m.chi = Some(value),
            "offset" => m.offset = Some(value),
            "jx" | "jy" | "jz" => {
                let slot = match name {
                    "jx" => &mut m.jx,
                    "jy" => &mut m.jy,
                    _ => &mut m.jz,
                };
                match slot {
                    Some(c) => c.set(value),
                    None => *slot = Some(Coupling::Uniform(value)),
                }
            }
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown sweep parameter {other:?}; expected one of {SWEEP_PARAMETERS:?}"
                )))
            }
        }
        Ok(m)
    }
}

/// `# key: value` lines, the column header, then one row per grid point.
pub fn curve_csv(meta: &[(&str, String)], grid: &[f64], reports: &[SqueezingReport]) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (x, r) in grid.iter().zip(reports) {
        out.push_str(&r.csv_row(*x));
        out.push('\n');
    }
    out
}

const MAGIC: &[u8; 6] = b"SQZV1\0";

/// 16-byte header (`SQZV1\0`, `u32` site count, 6 zero bytes) followed by
/// little-endian `(re, im)` pairs.
pub fn write_state<W: Write>(mut w: W, psi: &StateVector) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(psi.n_sites() as u32).to_le_bytes())?;
    w.write_all(&[0u8; 6])?;
    for a in psi.amplitudes() {
        w.write_all(&a.re.to_le_bytes())?;
        w.write_all(&a.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_state<R: Read>(mut r: R) -> Result<StateVector> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[..6] != MAGIC {
        return Err(Error::InvalidInput("not a state dump (bad magic)".into()));
    }
    let n = u32::from_le_bytes(header[6..10].try_into().expect("4 bytes")) as usize;
    if n > MAX_STATE_SITES {
        return Err(Error::TooLarge { n, cap: MAX_STATE_SITES });
    }
    let mut buf = vec![0u8; 16 << n];
    r.read_exact(&mut buf)?;
    let amps = buf
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            C64::new(re, im)
        })
        .collect::<Vec<_>>();
    // Dumps of normalized states load bit-exact.
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() < crate::statevec::NORM_TOL {
        return Ok(StateVector::from_normalized(n, amps));
    }
    StateVector::from_amplitudes(n, amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_state;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn oat_file() {
        let m = ModelFile::from_json(r#"{"n_sites": 4, "model": "oat", "chi": 1.0}"#).unwrap();
        let spec = m.build().unwrap();
        assert_eq!(spec.model_hash(), build_oat(1.0, 4).unwrap().model_hash());
    }

    #[test]
    fn xyz_mixed_entries() {
        let text = r#"{
            "n_sites": 3,
            "jx": 1.0,
            "jy": [[0, 0.5, 0], [0.5, 0, 0.5], [0, 0.5, 0]],
            "jz": {"amplitude": 2.0, "exponent": 1.0, "geometry": "ring"}
        }"#;
        let spec = ModelFile::from_json(text).unwrap().build().unwrap();
        assert!((spec.k(0, 1).re - 0.125).abs() < 1e-15);
        assert!((spec.k(0, 2).re - 0.25).abs() < 1e-15);
        assert_eq!(spec.zz(0, 2), 2.0);
    }

    #[test]
    fn explicit_complex() {
        let text = r#"{"n_sites": 2, "model": "explicit",
            "k": [[[0,0],[0,-0.5]],[[0,-0.5],[0,0]]], "z_fields": [0.1, 0.2], "offset": 1.5}"#;
        let spec = ModelFile::from_json(text).unwrap().build().unwrap();
        assert_eq!(spec.k(1, 0), C64::new(0.0, -0.5));
        assert_eq!(spec.z_field(1), 0.2);
        assert_eq!(spec.offset(), 1.5);
    }

    #[test]
    fn diagnostics_name_the_problem() {
        let e = ModelFile::from_json("{\"n_sites\": 3,\n \"jx\": \"strong\"}").unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
        let e = ModelFile::from_json(r#"{"n_sites": 3, "jq": 1}"#).unwrap_err().to_string();
        assert!(e.contains("jq"), "{e}");
        let e = ModelFile::from_json(r#"{"n_sites": 3, "jx": [[0, 1], [1, 0]]}"#).unwrap().build().unwrap_err();
        assert!(e.to_string().contains("jx"), "{e}");
        let e = ModelFile::from_json(r#"{"n_sites": 3, "model": "oat"}"#).unwrap().build().unwrap_err();
        assert!(e.to_string().contains("chi"));
        let e = ModelFile::from_json(r#"{"n_sites": 2, "jx": [[1, 1], [1, 0]]}"#).unwrap().build().unwrap_err();
        assert!(matches!(e, Error::ModelFile(_)));
    }

    #[test]
    fn sweep_parameter_override() {
        let m = ModelFile::from_json(r#"{"n_sites": 3, "jx": 1.0}"#).unwrap();
        let a = m.with_parameter("jy", 0.5).unwrap().build().unwrap();
        assert!((a.k(0, 1).re - 0.125).abs() < 1e-15);
        assert!(m.with_parameter("field", 1.0).is_err());
        let round = ModelFile::from_json(&m.to_json()).unwrap();
        assert_eq!(round, m);
    }

    #[test]
    fn state_dump_round_trip() {
        let psi = random_state(3, &mut ChaCha8Rng::seed_from_u64(61));
        let mut buf = Vec::new();
        write_state(&mut buf, &psi).unwrap();
        assert_eq!(buf.len(), 16 + 16 * 8);
        assert_eq!(&buf[..6], MAGIC);
        let back = read_state(buf.as_slice()).unwrap();
        assert_eq!(back.amplitudes(), psi.amplitudes());
        buf[0] = b'X';
        assert!(read_state(buf.as_slice()).is_err());
    }

    #[test]
    fn empty_curve_is_header_only() {
        let s = curve_csv(&[("seed", "7".into())], &[], &[]);
        assert_eq!(s, format!("# seed: 7\n{CSV_HEADER}\n"));
    }
}
