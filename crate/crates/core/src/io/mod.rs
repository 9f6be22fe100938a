//! File formats: LDG1 binary grids with JSON sidecars, CSV tables and PPM
//! colour maps.

pub mod grid;
pub mod ppm;
pub mod table;
mod viridis;

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::Result;

pub use viridis::VIRIDIS;

/// Writes `bytes` to a temporary sibling and renames it over `path`, so
/// readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Conventional name of a phase-space coordinate.
pub fn coordinate_name(dof: usize, index: usize) -> &'static str {
    const Q: [&str; 3] = ["x", "y", "z"];
    const P: [&str; 3] = ["p_x", "p_y", "p_z"];
    if index < dof {
        Q[index]
    } else {
        P[index - dof]
    }
}
