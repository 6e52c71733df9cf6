//! Stable binary persistence for spectral factors and fitted models.
//!
//! Two container formats, both versioned and little-endian:
//!
//! * `PSGF` — a factor file: header (dimensions, rank, the (α, β, seed, tol)
//!   provenance the factors were computed with), then f64 blocks for σ, P~
//!   and Q~ in row-major order.
//! * `PSGM` — a model file: a model-type tag (1 = PSGE, 2 = PureSVD,
//!   3 = EASE) followed by that model's hyperparameter block and payload.
//!
//! Readers validate magic, version, finiteness and dimension arithmetic, so
//! a truncated or foreign file fails loudly instead of producing a model.

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use thiserror::Error;

use crate::dense::DenseMatrix;
use crate::models::{EaseModel, PsgeModel, PureSvdModel};
use crate::sparse::DegreeVectors;
use crate::spectral::SpectralFactors;

const FACTOR_MAGIC: &[u8; 4] = b"PSGF";
const MODEL_MAGIC: &[u8; 4] = b"PSGM";
const FORMAT_VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a factor/model file: magic {found:?}")]
    BadMagic { found: [u8; 4] },
    #[error("format version {found} not supported (writer is at {FORMAT_VERSION})")]
    UnsupportedVersion { found: u8 },
    #[error("unknown model tag {found}")]
    UnknownTag { found: u8 },
    #[error("file is corrupt: {reason}")]
    Corrupt { reason: String },
}

fn corrupt(reason: impl Into<String>) -> IoError {
    IoError::Corrupt {
        reason: reason.into(),
    }
}

/// How a factor file was produced; stored in its header so a reload can be
/// traced back to the exact normalisation and solver inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorProvenance {
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub tol: f64,
}

fn write_f64_block(w: &mut impl Write, data: &[f64]) -> std::io::Result<()> {
    for &v in data {
        w.write_f64::<LittleEndian>(v)?;
    }
    Ok(())
}

fn read_matrix(r: &mut impl Read, rows: usize, cols: usize) -> Result<DenseMatrix, IoError> {
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| corrupt("dimension product overflows"))?;
    let mut data = vec![0.0f64; len];
    r.read_f64_into::<LittleEndian>(&mut data)?;
    DenseMatrix::from_row_major(rows, cols, data)
        .map_err(|e| corrupt(format!("matrix block invalid: {e}")))
}

fn write_factor_payload(w: &mut impl Write, factors: &SpectralFactors) -> std::io::Result<()> {
    w.write_u64::<LittleEndian>(factors.n_users() as u64)?;
    w.write_u64::<LittleEndian>(factors.n_items() as u64)?;
    w.write_u64::<LittleEndian>(factors.rank() as u64)?;
    write_f64_block(w, &factors.sigma)?;
    write_f64_block(w, factors.p_tilde.data())?;
    write_f64_block(w, factors.q_tilde.data())
}

fn read_factor_payload(r: &mut impl Read) -> Result<SpectralFactors, IoError> {
    let n_users = read_dim(r, "n_users")?;
    let n_items = read_dim(r, "n_items")?;
    let f = read_dim(r, "rank")?;
    let mut sigma = vec![0.0f64; f];
    r.read_f64_into::<LittleEndian>(&mut sigma)?;
    if sigma.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(corrupt("singular values must be finite and nonnegative"));
    }
    let p_tilde = read_matrix(r, n_users, f)?;
    let q_tilde = read_matrix(r, n_items, f)?;
    Ok(SpectralFactors {
        p_tilde,
        sigma,
        q_tilde,
    })
}

/// Upper bound keeping a corrupt header from requesting a huge allocation:
/// no dimension in scope exceeds tens of millions.
const DIM_LIMIT: u64 = 1 << 33;

fn read_dim(r: &mut impl Read, what: &str) -> Result<usize, IoError> {
    let v = r.read_u64::<LittleEndian>()?;
    if v > DIM_LIMIT {
        return Err(corrupt(format!("{what} = {v} is implausibly large")));
    }
    Ok(v as usize)
}

/// Writes a `PSGF` factor file.
pub fn write_factors(
    w: &mut impl Write,
    factors: &SpectralFactors,
    prov: &FactorProvenance,
) -> std::io::Result<()> {
    w.write_all(FACTOR_MAGIC)?;
    w.write_u8(FORMAT_VERSION)?;
    w.write_f64::<LittleEndian>(prov.alpha)?;
    w.write_f64::<LittleEndian>(prov.beta)?;
    w.write_u64::<LittleEndian>(prov.seed)?;
    w.write_f64::<LittleEndian>(prov.tol)?;
    write_factor_payload(w, factors)
}

/// Reads a `PSGF` factor file back, validating as it goes.
pub fn read_factors(r: &mut impl Read) -> Result<(SpectralFactors, FactorProvenance), IoError> {
    expect_magic(r, FACTOR_MAGIC)?;
    expect_version(r)?;
    let alpha = r.read_f64::<LittleEndian>()?;
    let beta = r.read_f64::<LittleEndian>()?;
    let seed = r.read_u64::<LittleEndian>()?;
    let tol = r.read_f64::<LittleEndian>()?;
    let factors = read_factor_payload(r)?;
    Ok((
        factors,
        FactorProvenance {
            alpha,
            beta,
            seed,
            tol,
        },
    ))
}

fn expect_magic(r: &mut impl Read, want: &[u8; 4]) -> Result<(), IoError> {
    let mut found = [0u8; 4];
    r.read_exact(&mut found)?;
    if &found != want {
        return Err(IoError::BadMagic { found });
    }
    Ok(())
}

fn expect_version(r: &mut impl Read) -> Result<(), IoError> {
    let found = r.read_u8()?;
    if found != FORMAT_VERSION {
        return Err(IoError::UnsupportedVersion { found });
    }
    Ok(())
}

/// A fitted model of any supported type, as stored in a `PSGM` file.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelFile {
    Psge(PsgeModel),
    PureSvd(PureSvdModel),
    Ease(EaseModel),
}

const TAG_PSGE: u8 = 1;
const TAG_PURESVD: u8 = 2;
const TAG_EASE: u8 = 3;

/// Writes a `PSGM` model file: tag byte, hyperparameter block, payload.
pub fn write_model(w: &mut impl Write, model: &ModelFile) -> std::io::Result<()> {
    w.write_all(MODEL_MAGIC)?;
    w.write_u8(FORMAT_VERSION)?;
    match model {
        ModelFile::Psge(m) => {
            w.write_u8(TAG_PSGE)?;
            w.write_f64::<LittleEndian>(m.alpha)?;
            w.write_f64::<LittleEndian>(m.beta)?;
            w.write_f64::<LittleEndian>(m.beta_tilde)?;
            w.write_u64::<LittleEndian>(m.degrees.user_degrees.len() as u64)?;
            w.write_u64::<LittleEndian>(m.degrees.item_degrees.len() as u64)?;
            write_f64_block(w, &m.degrees.user_degrees)?;
            write_f64_block(w, &m.degrees.item_degrees)?;
            write_factor_payload(w, &m.factors)
        }
        ModelFile::PureSvd(m) => {
            w.write_u8(TAG_PURESVD)?;
            w.write_u64::<LittleEndian>(m.q.rows() as u64)?;
            w.write_u64::<LittleEndian>(m.f as u64)?;
            write_f64_block(w, m.q.data())
        }
        ModelFile::Ease(m) => {
            w.write_u8(TAG_EASE)?;
            w.write_f64::<LittleEndian>(m.lambda_reg)?;
            w.write_u64::<LittleEndian>(m.b.rows() as u64)?;
            write_f64_block(w, m.b.data())
        }
    }
}

/// Reads a `PSGM` model file.
pub fn read_model(r: &mut impl Read) -> Result<ModelFile, IoError> {
    expect_magic(r, MODEL_MAGIC)?;
    expect_version(r)?;
    let tag = r.read_u8()?;
    match tag {
        TAG_PSGE => {
            let alpha = r.read_f64::<LittleEndian>()?;
            let beta = r.read_f64::<LittleEndian>()?;
            let beta_tilde = r.read_f64::<LittleEndian>()?;
            let n_users = read_dim(r, "n_users")?;
            let n_items = read_dim(r, "n_items")?;
            let mut user_degrees = vec![0.0f64; n_users];
            r.read_f64_into::<LittleEndian>(&mut user_degrees)?;
            let mut item_degrees = vec![0.0f64; n_items];
            r.read_f64_into::<LittleEndian>(&mut item_degrees)?;
            let factors = read_factor_payload(r)?;
            if factors.n_users() != n_users || factors.n_items() != n_items {
                return Err(corrupt(format!(
                    "degree vectors cover {n_users}x{n_items} but factors cover {}x{}",
                    factors.n_users(),
                    factors.n_items()
                )));
            }
            Ok(ModelFile::Psge(PsgeModel {
                factors,
                alpha,
                beta,
                beta_tilde,
                degrees: DegreeVectors {
                    user_degrees,
                    item_degrees,
                },
            }))
        }
        TAG_PURESVD => {
            let n_items = read_dim(r, "n_items")?;
            let f = read_dim(r, "rank")?;
            let q = read_matrix(r, n_items, f)?;
            Ok(ModelFile::PureSvd(PureSvdModel { q, f }))
        }
        TAG_EASE => {
            let lambda_reg = r.read_f64::<LittleEndian>()?;
            let n_items = read_dim(r, "n_items")?;
            let b = read_matrix(r, n_items, n_items)?;
            Ok(ModelFile::Ease(EaseModel { b, lambda_reg }))
        }
        found => Err(IoError::UnknownTag { found }),
    }
}

/// Convenience: write a factor file at `path`.
pub fn save_factors(
    path: &Path,
    factors: &SpectralFactors,
    prov: &FactorProvenance,
) -> Result<(), IoError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_factors(&mut w, factors, prov)?;
    Ok(())
}

/// Convenience: read a factor file at `path`.
pub fn load_factors(path: &Path) -> Result<(SpectralFactors, FactorProvenance), IoError> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    read_factors(&mut r)
}

/// Convenience: write a model file at `path`.
pub fn save_model(path: &Path, model: &ModelFile) -> Result<(), IoError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_model(&mut w, model)?;
    Ok(())
}

/// Convenience: read a model file at `path`.
pub fn load_model(path: &Path) -> Result<ModelFile, IoError> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    read_model(&mut r)
}
