//! Run manifests: config echo, timing, grid statistics and detected features.

use std::path::Path;

use phasescope::ld::LdGrid;
use serde::Serialize;

use crate::config::RunConfig;

#[derive(Debug, Clone, Serialize)]
pub struct Quantiles {
    pub min: f64,
    pub q05: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q95: f64,
    pub max: f64,
}

impl Quantiles {
    /// Nearest-rank quantiles; `None` for an empty sample.
    pub fn of(mut v: Vec<f64>) -> Option<Self> {
        v.retain(|x| x.is_finite());
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let q = |p: f64| v[((p * (v.len() - 1) as f64).round() as usize).min(v.len() - 1)];
        Some(Self { min: v[0], q05: q(0.05), q25: q(0.25), median: q(0.5), q75: q(0.75), q95: q(0.95), max: v[v.len() - 1] })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridStats {
    pub name: String,
    pub resolution: [usize; 2],
    pub on_shell: usize,
    /// Fraction of on-shell nodes with any escape flag.
    pub escape_fraction: f64,
    pub total: Option<Quantiles>,
    pub stay_time: Option<Quantiles>,
}

impl GridStats {
    pub fn of(name: &str, g: &LdGrid) -> Self {
        let on: Vec<_> = g.samples.iter().flatten().collect();
        let esc = on.iter().filter(|s| s.flags != 0).count();
        Self {
            name: name.to_string(),
            resolution: g.meta.resolution,
            on_shell: on.len(),
            escape_fraction: if on.is_empty() { 0.0 } else { esc as f64 / on.len() as f64 },
            total: Quantiles::of(on.iter().map(|s| s.total).collect()),
            stay_time: Quantiles::of(on.iter().map(|s| s.stay_time()).collect()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: RunConfig,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub grids: Vec<GridStats>,
    pub features: serde_json::Value,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        phasescope::io::write_atomic(&dir.join("manifest.json"), text.as_bytes())?;
        Ok(())
    }
}
