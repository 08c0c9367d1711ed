//! Binary model container.
//!
//! Little-endian layout:
//!
//! | field   | type        |
//! |---------|-------------|
//! | magic   | 4 bytes: `EDLR` (EDLAE) or `RDGR` (ridge) |
//! | version | u32 (= 1)   |
//! | n       | u64         |
//! | k       | u64         |
//! | lambda  | f64         |
//! | dropout | f64         |
//! | U       | n·k f64, row-major |
//! | V       | n·k f64, row-major |

use std::fs;
use std::path::Path;

use crate::edlae::{EdlaeConfig, LowRankModel, ModelKind};
use crate::error::{Error, Result};
use crate::matrixops::DenseMatrix;

pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 8 + 8 + 8;

fn magic(kind: ModelKind) -> &'static [u8; 4] {
    match kind {
        ModelKind::Edlae => b"EDLR",
        ModelKind::Ridge => b"RDGR",
    }
}

pub fn encode(model: &LowRankModel) -> Vec<u8> {
    let n = model.n();
    let k = model.rank();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * n * k);
    out.extend_from_slice(magic(model.kind));
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(k as u64).to_le_bytes());
    out.extend_from_slice(&model.config.lambda.to_le_bytes());
    out.extend_from_slice(&model.config.dropout.to_le_bytes());
    for v in model.u.as_slice().iter().chain(model.v.as_slice()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<LowRankModel> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::ModelFormat(format!("file too short ({} bytes)", bytes.len())));
    }
    let kind = match &bytes[0..4] {
        b"EDLR" => ModelKind::Edlae,
        b"RDGR" => ModelKind::Ridge,
        other => return Err(Error::ModelFormat(format!("bad magic {:?}", String::from_utf8_lossy(other)))),
    };
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let version = u32_at(4);
    if version != FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let n = u64_at(8) as usize;
    let k = u64_at(16) as usize;
    let lambda = f64_at(24);
    let dropout = f64_at(32);
    let count = n
        .checked_mul(k)
        .and_then(|c| c.checked_mul(16))
        .ok_or_else(|| Error::ModelFormat("dimensions overflow".into()))?;
    if bytes.len() != HEADER_LEN + count {
        return Err(Error::ModelFormat(format!(
            "expected {} bytes for n={n}, k={k}, found {}",
            HEADER_LEN + count,
            bytes.len()
        )));
    }
    let body: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    if !lambda.is_finite() || !dropout.is_finite() {
        return Err(Error::ModelFormat("non-finite hyper-parameters".into()));
    }
    let (u, v) = body.split_at(n * k);
    let u = DenseMatrix::from_vec(n, k, u.to_vec()).map_err(|_| Error::ModelFormat("non-finite U".into()))?;
    let v = DenseMatrix::from_vec(n, k, v.to_vec()).map_err(|_| Error::ModelFormat("non-finite V".into()))?;
    Ok(LowRankModel {
        u,
        v,
        config: EdlaeConfig { lambda, dropout, rank: k },
        kind,
    })
}

pub fn save(model: &LowRankModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode(model))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<LowRankModel> {
    decode(&fs::read(path)?)
}
