//! Poincaré surfaces of section on 2-DoF slices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{find_events, Direction, EventSpec, IntegratorConfig, Termination};
use crate::model::{PhaseState, SystemModel};
use crate::par::{try_map_indexed, Execution};
use crate::slice::{momentum_on_shell, SliceSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SectionParams {
    pub max_crossings: usize,
    pub max_time: f64,
    /// Follow the seeds backward in time.
    pub backward: bool,
    /// Seed lattice resolution for [`seed_lattice`].
    pub lattice: [usize; 2],
}

impl Default for SectionParams {
    fn default() -> Self {
        Self { max_crossings: 100, max_time: 1e4, backward: false, lattice: [40, 40] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    /// 1-based return count.
    pub n: usize,
    pub t: f64,
    pub point: [f64; 2],
    pub state: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectionRun {
    pub energy: f64,
    pub seeds: Vec<PhaseState>,
    pub crossings: Vec<Vec<Crossing>>,
    pub escaped: Vec<bool>,
    pub params: SectionParams,
}

impl SectionRun {
    pub fn total_crossings(&self) -> usize {
        self.crossings.iter().map(Vec::len).sum()
    }
}

/// On-shell states at the nodes of a uniform lattice over the slice window.
pub fn seed_lattice(model: &SystemModel, slice: &SliceSpec, e: f64, resolution: [usize; 2]) -> Result<Vec<PhaseState>> {
    slice.validate(model)?;
    if resolution[0] < 2 || resolution[1] < 2 {
        return Err(Error::InvalidParameter("lattice needs at least 2 nodes per axis".into()));
    }
    let mut out = Vec::new();
    for j in 0..resolution[1] {
        for i in 0..resolution[0] {
            if let Some(s) = momentum_on_shell(model, slice, slice.node(i, j, resolution), e) {
                out.push(s);
            }
        }
    }
    Ok(out)
}

/// Directional returns of every seed to the slice's section, until
/// `max_crossings`, `max_time` or escape.
pub fn run_section(
    model: &SystemModel,
    slice: &SliceSpec,
    e: f64,
    seeds: &[PhaseState],
    params: &SectionParams,
    cfg: &IntegratorConfig,
    exec: Execution,
) -> Result<SectionRun> {
    if model.dof() != 2 {
        return Err(Error::InvalidParameter("Poincaré sections are built for the 2-DoF model".into()));
    }
    slice.validate(model)?;
    cfg.validate()?;
    if params.max_crossings == 0 || !(params.max_time > 0.0) {
        return Err(Error::InvalidParameter("max_crossings and max_time must be positive".into()));
    }
    let (coordinate, value) = slice
        .section_coordinate()
        .ok_or_else(|| Error::InvalidParameter("slice has no fixed section coordinate".into()))?;
    let ev = EventSpec { coordinate, value, direction: Direction::Increasing };
    let span = if params.backward { -params.max_time } else { params.max_time };
    let runs = try_map_indexed(seeds.len(), exec, |k| {
        find_events(model, &seeds[k], span, &ev, params.max_crossings, cfg)
    })?;
    let mut crossings = Vec::with_capacity(runs.len());
    let mut escaped = Vec::with_capacity(runs.len());
    for run in runs {
        escaped.push(run.termination == Termination::Escape);
        crossings.push(
            run.crossings
                .iter()
                .enumerate()
                .map(|(n, c)| Crossing {
                    n: n + 1,
                    t: c.t,
                    point: slice.project(&c.coords),
                    state: [c.coords[0], c.coords[1], c.coords[2], c.coords[3]],
                })
                .collect(),
        );
    }
    Ok(SectionRun { energy: e, seeds: seeds.to_vec(), crossings, escaped, params: *params })
}
