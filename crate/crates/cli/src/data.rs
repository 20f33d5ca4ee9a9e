//! Mesh data files.
//!
//! Binary files start with a 32-byte header of little-endian `u32`s:
//! magic `STNF`, version, ndim, m, n, l, arity, reserved. The header is
//! followed by `points * arity` little-endian `f32` values, `m` fastest.
//!
//! Text files hold a header line `2 m n arity` or `3 m n l arity` followed
//! by whitespace-separated values. `#` starts a comment.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use stencilflow::{FieldData, MeshGeometry};

pub const MAGIC: &[u8; 4] = b"STNF";
pub const VERSION: u32 = 1;
const HEADER_BYTES: usize = 32;

pub fn encode(field: &FieldData) -> Vec<u8> {
    let g = field.geometry();
    let [m, n, l] = g.extent3();
    let mut out = Vec::with_capacity(HEADER_BYTES + 4 * field.values().len());
    out.extend_from_slice(MAGIC);
    for word in [
        VERSION,
        g.ndim() as u32,
        m as u32,
        n as u32,
        l as u32,
        g.arity() as u32,
        0,
    ] {
        out.extend_from_slice(&word.to_le_bytes());
    }
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<FieldData> {
    ensure!(
        bytes.len() >= HEADER_BYTES,
        "file shorter than the {HEADER_BYTES}-byte header"
    );
    ensure!(&bytes[..4] == MAGIC, "missing STNF magic");
    let word = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
    let version = word(1);
    ensure!(version == VERSION, "unsupported STNF version {version}");
    let ndim = word(2) as usize;
    let dims = [word(3) as usize, word(4) as usize, word(5) as usize];
    ensure!(ndim == 2 || ndim == 3, "bad dimension count {ndim}");
    if ndim == 2 {
        ensure!(dims[2] == 1, "2D file with l = {}", dims[2]);
    }
    let g = MeshGeometry::from_dims(&dims[..ndim])?.with_arity(word(6) as usize)?;
    let body = &bytes[HEADER_BYTES..];
    ensure!(
        body.len() == 4 * g.len(),
        "expected {} values after the header, found {} bytes",
        g.len(),
        body.len()
    );
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(FieldData::new(g, values)?)
}

pub fn parse_text(text: &str) -> Result<FieldData> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    let mut int = |what: &str| -> Result<usize> {
        let t = tokens.next().with_context(|| format!("missing {what} in header"))?;
        t.parse().with_context(|| format!("bad {what} {t:?}"))
    };
    let ndim = int("dimension count")?;
    let dims = match ndim {
        2 => vec![int("m")?, int("n")?],
        3 => vec![int("m")?, int("n")?, int("l")?],
        other => bail!("dimension count must be 2 or 3, got {other}"),
    };
    let arity = int("arity")?;
    let g = MeshGeometry::from_dims(&dims)?.with_arity(arity)?;
    let values = tokens
        .map(|t| t.parse::<f32>().with_context(|| format!("bad value {t:?}")))
        .collect::<Result<Vec<_>>>()?;
    Ok(FieldData::new(g, values)?)
}

/// Reads a binary file if it starts with the magic, text otherwise.
pub fn read(path: &Path) -> Result<FieldData> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let field = if bytes.starts_with(MAGIC) {
        decode(&bytes)
    } else {
        parse_text(std::str::from_utf8(&bytes).context("text mesh file is not UTF-8")?)
    };
    field.with_context(|| format!("loading mesh {}", path.display()))
}

pub fn write(path: &Path, field: &FieldData) -> Result<()> {
    std::fs::write(path, encode(field)).with_context(|| format!("writing {}", path.display()))
}
