//! LDG1 grid files.
//!
//! Little-endian layout: the magic `LDG1`, `n1` and `n2` as `u32`, then
//! `n1 * n2` records in row-major order (`j` outer, `i` inner) of five `f64`
//! values `L^(f), L^(b), τ⁺, τ⁻, flags`. Off-shell nodes hold a quiet NaN in
//! every field. Run metadata lives in a JSON sidecar next to the file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::ld::{GridMeta, LdGrid, LdSample};

pub const MAGIC: &[u8; 4] = b"LDG1";
pub const FIELDS: [&str; 5] = ["forward", "backward", "tau_plus", "tau_minus", "flags"];
const HEADER: usize = 12;
const RECORD: usize = 40;
const OFF_SHELL: u64 = 0x7ff8_0000_0000_0000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub format: String,
    pub fields: Vec<String>,
    pub meta: GridMeta,
}

pub fn encode(grid: &LdGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER + RECORD * grid.samples.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(grid.n1() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.n2() as u32).to_le_bytes());
    for s in &grid.samples {
        let rec = match s {
            Some(s) => [s.forward, s.backward, s.tau_plus, s.tau_minus, s.flags as f64].map(f64::to_bits),
            None => [OFF_SHELL; 5],
        };
        for v in rec {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Parses the binary part; `meta.resolution` must match the header.
pub fn decode(bytes: &[u8], meta: GridMeta) -> Result<LdGrid> {
    if bytes.len() < HEADER || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing LDG1 header".into()));
    }
    let word = |k: usize| u32::from_le_bytes(bytes[k..k + 4].try_into().unwrap()) as usize;
    let (n1, n2) = (word(4), word(8));
    if [n1, n2] != meta.resolution {
        return Err(Error::Format(format!("header {n1}x{n2} disagrees with metadata {:?}", meta.resolution)));
    }
    let n = n1.checked_mul(n2).ok_or_else(|| Error::Format("grid size overflows".into()))?;
    if bytes.len() != HEADER + RECORD * n {
        return Err(Error::Format(format!("expected {} bytes, found {}", HEADER + RECORD * n, bytes.len())));
    }
    let samples = bytes[HEADER..]
        .chunks_exact(RECORD)
        .map(|rec| {
            let v: Vec<f64> = rec.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
            if v.iter().all(|x| x.is_nan()) {
                return Ok(None);
            }
            if v.iter().any(|x| x.is_nan()) || v[4].fract() != 0.0 || !(0.0..=3.0).contains(&v[4]) {
                return Err(Error::Format("corrupt node record".into()));
            }
            Ok(Some(LdSample {
                forward: v[0],
                backward: v[1],
                total: v[0] + v[1],
                tau_plus: v[2],
                tau_minus: v[3],
                flags: v[4] as u8,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LdGrid { meta, samples })
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn sidecar_json(grid: &LdGrid) -> Result<String> {
    let sc = Sidecar {
        format: String::from_utf8_lossy(MAGIC).into_owned(),
        fields: FIELDS.iter().map(|s| s.to_string()).collect(),
        meta: grid.meta.clone(),
    };
    Ok(serde_json::to_string_pretty(&sc)? + "\n")
}

/// Writes the grid and its sidecar (`<path>.json`).
pub fn write(grid: &LdGrid, path: &Path) -> Result<()> {
    write_atomic(path, &encode(grid))?;
    write_atomic(&sidecar_path(path), sidecar_json(grid)?.as_bytes())
}

pub fn read(path: &Path) -> Result<LdGrid> {
    let sc: Sidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    if sc.format.as_bytes() != MAGIC {
        return Err(Error::Format(format!("unknown format {:?}", sc.format)));
    }
    decode(&fs::read(path)?, sc.meta)
}
