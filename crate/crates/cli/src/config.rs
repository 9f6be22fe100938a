//! Run configuration: one JSON document per run, validated before any
//! computation.

use std::fs;
use std::path::{Path, PathBuf};

use phasescope::ld::{LdConfig, LdMode, SaddleRegion};
use phasescope::po::{Branch, ContinuationConfig, ManifoldConfig, Stability};
use phasescope::section::SectionParams;
use phasescope::io::ppm::Channel;
use phasescope::{EnergySpec, IntegratorConfig, SaddleChoice, SliceSpec, SystemModel};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::recipes;

/// Half-width of the default 2-DoF saddle region.
pub const DEFAULT_REGION_HALF_WIDTH: f64 = 2.0;

#[derive(Debug, Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    LdMap,
    PoFamily,
    Manifolds,
    Psection,
    ValidateNhim,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::LdMap => "ld-map",
            Command::PoFamily => "po-family",
            Command::Manifolds => "manifolds",
            Command::Psection => "psection",
            Command::ValidateNhim => "validate-nhim",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EnergyInput {
    Total(f64),
    Excess(f64),
}

impl EnergyInput {
    pub fn resolve(self, model: &SystemModel) -> EnergySpec {
        match self {
            EnergyInput::Total(e) => EnergySpec::from_total(model, e),
            EnergyInput::Excess(d) => EnergySpec::from_excess(model, d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Surface {
    Xpx,
    Ypy,
    Zpz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceInput {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub surface: Surface,
    /// Value of `y` on the 2-DoF surface; the 3-DoF surfaces pass through
    /// the saddle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    pub ranges: [[f64; 2]; 2],
}

impl SliceInput {
    pub fn spec(&self, model: &SystemModel, saddle: SaddleChoice) -> Result<SliceSpec, ConfigError> {
        let [a, b] = self.ranges;
        let spec = match (model.dof(), self.surface) {
            (2, Surface::Xpx) => SliceSpec::u_xpx_2dof(self.k.unwrap_or(0.0), a, b),
            (2, s) => return Err(bad(format!("surface {s:?} needs the 3-DoF model"))),
            (_, _) if self.k.is_some() => return Err(bad("3-DoF surfaces take no `k`; they pass through the saddle")),
            (_, Surface::Xpx) => SliceSpec::u_xpx_3dof(model, saddle, a, b).map_err(|e| bad(e.to_string()))?,
            (_, Surface::Ypy) => SliceSpec::u_ypy_3dof(model, saddle, a, b).map_err(|e| bad(e.to_string()))?,
            (_, Surface::Zpz) => SliceSpec::u_zpz_3dof(model, saddle, a, b).map_err(|e| bad(e.to_string()))?,
        };
        spec.validate(model).map_err(|e| bad(format!("slice {}: {e}", self.label())))?;
        Ok(spec)
    }

    pub fn label(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        let base = match self.surface {
            Surface::Xpx => "u_xpx",
            Surface::Ypy => "u_ypy",
            Surface::Zpz => "u_zpz",
        };
        match self.k {
            Some(k) => format!("{base}_y{k}"),
            None => base.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TubeSelect {
    pub stability: Stability,
    pub branch: Branch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManifoldInput {
    pub epsilon: f64,
    pub periods: f64,
    pub fibers: usize,
    pub samples: usize,
    pub tubes: Vec<TubeSelect>,
}

impl Default for ManifoldInput {
    fn default() -> Self {
        let d = ManifoldConfig::default();
        let tubes = [Stability::Stable, Stability::Unstable]
            .into_iter()
            .flat_map(|stability| [Branch::Plus, Branch::Minus].map(|branch| TubeSelect { stability, branch }))
            .collect();
        Self { epsilon: d.epsilon, periods: d.periods, fibers: d.fibers, samples: d.samples, tubes }
    }
}

impl ManifoldInput {
    pub fn config(&self, tube: TubeSelect) -> ManifoldConfig {
        ManifoldConfig {
            epsilon: self.epsilon,
            branch: tube.branch,
            stability: tube.stability,
            periods: self.periods,
            fibers: self.fibers,
            samples: self.samples,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyInput {
    pub start: EnergyInput,
    pub step: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateInput {
    pub k_values: Vec<f64>,
    pub x_range: [f64; 2],
    pub px_range: [f64; 2],
    /// Largest accepted argmax distance, in grid cells.
    pub tolerance_cells: f64,
}

impl Default for ValidateInput {
    fn default() -> Self {
        Self { k_values: vec![-7.0, -7.1, -7.2], x_range: [4.8, 6.3], px_range: [-0.6, 0.6], tolerance_cells: 1.0 }
    }
}

fn default_model() -> SystemModel {
    SystemModel::two_dof()
}

fn default_resolution() -> [usize; 2] {
    [300, 300]
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_model")]
    pub model: SystemModel,
    /// Saddle the slices, orbits and default saddle region refer to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saddle: Option<SaddleChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<EnergyInput>,
    #[serde(default)]
    pub slices: Vec<SliceInput>,
    #[serde(default)]
    pub ld: LdConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub continuation: ContinuationConfig,
    #[serde(default)]
    pub manifold: ManifoldInput,
    #[serde(default)]
    pub section: SectionParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyInput>,
    #[serde(default)]
    pub validate: ValidateInput,
    #[serde(default = "default_resolution")]
    pub resolution: [usize; 2],
    /// Channel rendered to a PPM image next to each grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<Channel>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." || path.is_empty() {
                bad(format!("{origin}: {inner}"))
            } else {
                bad(format!("{origin}: key `{path}`: {inner}"))
            }
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn from_recipe(name: &str, command: Command) -> Result<Self, ConfigError> {
        let r = recipes::find(name).ok_or_else(|| {
            bad(format!("unknown recipe `{name}`; available: {}", recipes::names().join(", ")))
        })?;
        if r.command != command {
            return Err(bad(format!("recipe `{name}` is for `{}`, not `{}`", r.command.name(), command.name())));
        }
        Self::from_json(r.json, &format!("recipe {name}"))
    }

    pub fn saddle(&self) -> SaddleChoice {
        self.saddle.unwrap_or_else(|| SaddleChoice::default_for(&self.model))
    }

    pub fn energy(&self) -> Result<EnergySpec, ConfigError> {
        self.energy.map(|e| e.resolve(&self.model)).ok_or_else(|| bad("`energy` is required for this command"))
    }

    pub fn family_energies(&self) -> Result<Vec<f64>, ConfigError> {
        let f = self.family.ok_or_else(|| bad("`family` is required for po-family"))?;
        if f.count == 0 || !(f.step > 0.0) {
            return Err(bad("`family.count` and `family.step` must be positive"));
        }
        let e0 = f.start.resolve(&self.model).total;
        Ok((0..f.count).map(|k| e0 + f.step * k as f64).collect())
    }

    pub fn slice_specs(&self) -> Result<Vec<(String, SliceSpec)>, ConfigError> {
        let mut out: Vec<(String, SliceSpec)> = Vec::new();
        for s in &self.slices {
            let label = s.label();
            if label.is_empty() || !label.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c)) {
                return Err(bad(format!("slice name `{label}` must be nonempty [A-Za-z0-9_.-]")));
            }
            if out.iter().any(|(n, _)| *n == label) {
                return Err(bad(format!("duplicate slice name `{label}`")));
            }
            out.push((label, s.spec(&self.model, self.saddle())?));
        }
        Ok(out)
    }

    /// LD settings with the default saddle region filled in for 2-DoF
    /// variable-time runs.
    pub fn ld(&self) -> Result<LdConfig, ConfigError> {
        let mut ld = self.ld.clone();
        if ld.mode == LdMode::VariableTime && ld.saddle_region.is_none() {
            if self.model.dof() != 2 {
                return Err(bad("variable-time runs on the 3-DoF model need `ld.saddle_region`"));
            }
            let region = SaddleRegion::around(&self.model, self.saddle(), DEFAULT_REGION_HALF_WIDTH)
                .map_err(|e| bad(e.to_string()))?;
            ld.saddle_region = Some(region);
        }
        ld.validate(&self.model).map_err(|e| bad(format!("ld: {e}")))?;
        Ok(ld)
    }

    fn require_two_dof(&self, command: Command) -> Result<(), ConfigError> {
        if self.model.dof() != 2 {
            return Err(bad(format!("`{}` needs the 2-DoF model", command.name())));
        }
        Ok(())
    }

    /// Checks everything the command will use and returns the config with
    /// defaults made explicit, so that echoing it reproduces the run.
    pub fn resolve(mut self, command: Command) -> Result<Self, ConfigError> {
        self.model.validate().map_err(|e| bad(format!("model: {e}")))?;
        self.model.saddle(self.saddle()).map_err(|e| bad(format!("saddle: {e}")))?;
        self.saddle = Some(self.saddle());
        self.integrator.validate().map_err(|e| bad(format!("integrator: {e}")))?;
        if self.resolution.iter().any(|&n| n < 2) {
            return Err(bad("`resolution` needs at least 2 nodes per axis"));
        }
        if self.workers == Some(0) {
            return Err(bad("`workers` must be at least 1"));
        }
        match command {
            Command::LdMap => {
                self.energy()?;
                if self.slices.is_empty() {
                    return Err(bad("ld-map needs at least one entry in `slices`"));
                }
                self.slice_specs()?;
                self.ld = self.ld()?;
            }
            Command::PoFamily => {
                self.require_two_dof(command)?;
                self.continuation.validate().map_err(|e| bad(format!("continuation: {e}")))?;
                self.family_energies()?;
            }
            Command::Manifolds => {
                self.require_two_dof(command)?;
                self.energy()?;
                self.continuation.validate().map_err(|e| bad(format!("continuation: {e}")))?;
                if self.manifold.tubes.is_empty() {
                    return Err(bad("`manifold.tubes` is empty"));
                }
                for t in &self.manifold.tubes {
                    self.manifold.config(*t).validate().map_err(|e| bad(format!("manifold: {e}")))?;
                }
                self.slice_specs()?;
            }
            Command::Psection => {
                self.require_two_dof(command)?;
                self.energy()?;
                if self.slices.len() != 1 {
                    return Err(bad("psection needs exactly one entry in `slices`"));
                }
                self.slice_specs()?;
                let p = &self.section;
                if p.max_crossings == 0 || !(p.max_time > 0.0) || p.lattice.iter().any(|&n| n < 2) {
                    return Err(bad("section: max_crossings, max_time and lattice must be positive"));
                }
            }
            Command::ValidateNhim => {
                self.require_two_dof(command)?;
                self.energy()?;
                self.continuation.validate().map_err(|e| bad(format!("continuation: {e}")))?;
                let v = &self.validate;
                if v.k_values.is_empty() || !(v.tolerance_cells >= 0.0) {
                    return Err(bad("validate: k_values must be nonempty and tolerance_cells non-negative"));
                }
                if self.ld.mode != LdMode::VariableTime {
                    return Err(bad("validate-nhim uses the variable-time descriptor; set `ld.mode`"));
                }
                self.ld = self.ld()?;
            }
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_recipe_resolves() {
        for r in recipes::RECIPES {
            let cfg = RunConfig::from_recipe(r.name, r.command).unwrap();
            cfg.resolve(r.command).unwrap_or_else(|e| panic!("{}: {e}", r.name));
        }
    }

    #[test]
    fn unknown_key_is_reported_with_its_path() {
        let err = RunConfig::from_json(r#"{"ld": {"tau": 5, "taux": 1}}"#, "cfg").unwrap_err();
        assert!(err.0.contains("key `ld.taux`"), "{}", err.0);
        assert!(err.0.contains("line 1"), "{}", err.0);
    }

    #[test]
    fn energy_forms() {
        let m = SystemModel::two_dof();
        let a: EnergyInput = serde_json::from_str(r#"{"excess": 0.125}"#).unwrap();
        let b: EnergyInput = serde_json::from_str(r#"{"total": 15.25}"#).unwrap();
        assert!((a.resolve(&m).total - 15.25).abs() < 1e-12);
        assert!((b.resolve(&m).excess - 0.125).abs() < 1e-12);
    }

    #[test]
    fn default_region_is_filled_in() {
        let cfg = RunConfig::from_json(
            r#"{"energy": {"total": 15.25}, "ld": {"mode": "variable_time"},
                "slices": [{"surface": "xpx", "k": -7.1, "ranges": [[4.8, 6.3], [-0.6, 0.6]]}]}"#,
            "cfg",
        )
        .unwrap()
        .resolve(Command::LdMap)
        .unwrap();
        let r = cfg.ld.saddle_region.clone().unwrap();
        assert!((r.lo[0] - 3.5).abs() < 1e-12 && (r.hi[1] + 5.0710678118654755).abs() < 1e-12);
        let three = RunConfig { model: SystemModel::three_dof(), saddle: None, ..cfg };
        assert!(RunConfig { ld: LdConfig { saddle_region: None, ..three.ld.clone() }, ..three }.ld().is_err());
    }

    #[test]
    fn command_requirements() {
        let cfg = RunConfig::from_json("{}", "cfg").unwrap();
        assert!(cfg.clone().resolve(Command::LdMap).is_err());
        assert!(cfg.clone().resolve(Command::PoFamily).is_err());
        let three = RunConfig { model: SystemModel::three_dof(), ..cfg };
        assert!(three.resolve(Command::Psection).is_err());
    }
}
