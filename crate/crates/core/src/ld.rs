//! Fixed- and variable-time Lagrangian descriptors on isoenergetic slices,
//! with extraction of manifold (argmin) and NHIM (argmax) candidates.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{drive, Direction, Ended, FlowWithLd, Guard, IntegratorConfig};
use crate::model::{PhaseState, SaddleChoice, SystemModel};
use crate::par::{try_map_indexed, Execution};
use crate::slice::{momentum_on_shell, SliceSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LdMode {
    /// Integrate for `±τ`, stopping only at the escape radius.
    FixedTime,
    /// Integrate for `±τ` or until the configuration leaves the saddle region.
    VariableTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LdDirection {
    Forward,
    Backward,
}

/// Axis-aligned box in configuration space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaddleRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SaddleRegion {
    pub fn new(bounds: &[[f64; 2]]) -> Self {
        Self { lo: bounds.iter().map(|b| b[0]).collect(), hi: bounds.iter().map(|b| b[1]).collect() }
    }

    /// Cube of half-width `half` centred on a saddle.
    pub fn around(model: &SystemModel, saddle: SaddleChoice, half: f64) -> Result<Self> {
        let q = model.saddle(saddle)?.state.q().to_vec();
        Ok(Self { lo: q.iter().map(|v| v - half).collect(), hi: q.iter().map(|v| v + half).collect() })
    }

    pub fn contains(&self, q: &[f64]) -> bool {
        q.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    fn validate(&self, dof: usize) -> Result<()> {
        if self.lo.len() != dof || self.hi.len() != dof {
            return Err(Error::Dimension { expected: dof, got: self.lo.len().min(self.hi.len()) });
        }
        if self.lo.iter().zip(&self.hi).any(|(l, h)| !(h > l)) {
            return Err(Error::InvalidParameter("saddle region must be nonempty".into()));
        }
        Ok(())
    }

    fn guards(&self) -> Vec<Guard> {
        let mut g = Vec::with_capacity(2 * self.lo.len());
        for (i, (&lo, &hi)) in self.lo.iter().zip(&self.hi).enumerate() {
            // any face crossing is an exit, whichever way time runs
            g.push(Guard::Coord { index: i, value: lo, direction: Direction::Either });
            g.push(Guard::Coord { index: i, value: hi, direction: Direction::Either });
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdConfig {
    pub p_exponent: f64,
    pub tau: f64,
    pub mode: LdMode,
    /// Required in variable-time mode.
    pub saddle_region: Option<SaddleRegion>,
    pub escape_radius: f64,
}

impl Default for LdConfig {
    fn default() -> Self {
        Self { p_exponent: 0.5, tau: 50.0, mode: LdMode::FixedTime, saddle_region: None, escape_radius: 50.0 }
    }
}

impl LdConfig {
    pub fn fixed(tau: f64) -> Self {
        Self { tau, ..Self::default() }
    }

    pub fn variable(tau: f64, region: SaddleRegion) -> Self {
        Self { tau, mode: LdMode::VariableTime, saddle_region: Some(region), ..Self::default() }
    }

    pub fn validate(&self, model: &SystemModel) -> Result<()> {
        if !(self.p_exponent > 0.0 && self.p_exponent <= 1.0) {
            return Err(Error::InvalidParameter("p_exponent must lie in (0, 1]".into()));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter("tau must be finite and non-negative".into()));
        }
        if !(self.escape_radius > 0.0) {
            return Err(Error::InvalidParameter("escape_radius must be positive".into()));
        }
        match (&self.saddle_region, self.mode) {
            (Some(r), _) => r.validate(model.dof()),
            (None, LdMode::VariableTime) => {
                Err(Error::InvalidParameter("variable-time mode needs a saddle region".into()))
            }
            (None, LdMode::FixedTime) => Ok(()),
        }
    }
}

/// One-sided descriptor along a single trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdPoint {
    pub value: f64,
    /// Integration time actually used, in `[0, τ]`.
    pub time: f64,
    /// Whether the trajectory left the region before `τ`.
    pub escaped: bool,
}

pub const FLAG_FORWARD_ESCAPED: u8 = 1;
pub const FLAG_BACKWARD_ESCAPED: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdSample {
    pub forward: f64,
    pub backward: f64,
    pub total: f64,
    pub tau_plus: f64,
    pub tau_minus: f64,
    pub flags: u8,
}

impl LdSample {
    pub fn new(f: LdPoint, b: LdPoint) -> Self {
        let mut flags = 0;
        if f.escaped {
            flags |= FLAG_FORWARD_ESCAPED;
        }
        if b.escaped {
            flags |= FLAG_BACKWARD_ESCAPED;
        }
        Self { forward: f.value, backward: b.value, total: f.value + b.value, tau_plus: f.time, tau_minus: b.time, flags }
    }

    pub fn escaped(&self, dir: LdDirection) -> bool {
        match dir {
            LdDirection::Forward => self.flags & FLAG_FORWARD_ESCAPED != 0,
            LdDirection::Backward => self.flags & FLAG_BACKWARD_ESCAPED != 0,
        }
    }

    pub fn value(&self, dir: LdDirection) -> f64 {
        match dir {
            LdDirection::Forward => self.forward,
            LdDirection::Backward => self.backward,
        }
    }

    pub fn stay_time(&self) -> f64 {
        self.tau_plus.min(self.tau_minus)
    }
}

/// Everything needed to reproduce a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridMeta {
    pub energy: f64,
    pub model: SystemModel,
    pub ld: LdConfig,
    pub integrator: IntegratorConfig,
    pub slice: SliceSpec,
    pub resolution: [usize; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdGrid {
    pub meta: GridMeta,
    /// Row-major, `samples[j * n1 + i]`; `None` marks off-shell nodes.
    pub samples: Vec<Option<LdSample>>,
}

impl LdGrid {
    pub fn n1(&self) -> usize {
        self.meta.resolution[0]
    }

    pub fn n2(&self) -> usize {
        self.meta.resolution[1]
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&LdSample> {
        self.samples[j * self.n1() + i].as_ref()
    }

    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        self.meta.slice.node(i, j, self.meta.resolution)
    }

    /// Phase-space state at an on-shell node.
    pub fn state(&self, i: usize, j: usize) -> Option<PhaseState> {
        momentum_on_shell(&self.meta.model, &self.meta.slice, self.point(i, j), self.meta.energy)
    }

    pub fn on_shell_count(&self) -> usize {
        self.samples.iter().filter(|s| s.is_some()).count()
    }

    /// Grid spacing along each axis.
    pub fn spacing(&self) -> [f64; 2] {
        let r = &self.meta.slice.ranges;
        [
            (r[0][1] - r[0][0]) / (self.n1() - 1) as f64,
            (r[1][1] - r[1][0]) / (self.n2() - 1) as f64,
        ]
    }

    /// Chebyshev distance in cell units between a node and a slice point.
    pub fn cell_distance(&self, i: usize, j: usize, p: [f64; 2]) -> f64 {
        let a = self.point(i, j);
        let h = self.spacing();
        ((a[0] - p[0]) / h[0]).abs().max(((a[1] - p[1]) / h[1]).abs())
    }

    /// In-grid 4-neighbours of a node.
    pub fn neighbours(&self, i: usize, j: usize) -> impl Iterator<Item = (usize, usize)> {
        let (n1, n2) = (self.n1(), self.n2());
        [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)].into_iter().filter_map(move |(di, dj)| {
            let (a, b) = (i as i64 + di, j as i64 + dj);
            (a >= 0 && b >= 0 && (a as usize) < n1 && (b as usize) < n2).then_some((a as usize, b as usize))
        })
    }
}

/// Descriptor of one trajectory in one time direction.
pub fn ld_point(
    model: &SystemModel,
    state: &PhaseState,
    cfg: &LdConfig,
    dir: LdDirection,
    integ: &IntegratorConfig,
) -> Result<LdPoint> {
    cfg.validate(model)?;
    integ.validate()?;
    if state.coords.len() != model.phase_dim() {
        return Err(Error::Dimension { expected: model.phase_dim(), got: state.coords.len() });
    }
    ld_point_unchecked(model, &state.coords, cfg, dir, integ)
}

fn ld_point_unchecked(
    model: &SystemModel,
    x: &[f64],
    cfg: &LdConfig,
    dir: LdDirection,
    integ: &IntegratorConfig,
) -> Result<LdPoint> {
    let sign = match dir {
        LdDirection::Forward => 1.0,
        LdDirection::Backward => -1.0,
    };
    let mut guards = vec![Guard::escape(model, cfg.escape_radius)];
    if cfg.mode == LdMode::VariableTime {
        let region = cfg.saddle_region.as_ref().expect("validated");
        if !region.contains(&x[..model.dof()]) {
            return Ok(LdPoint { value: 0.0, time: 0.0, escaped: true });
        }
        guards.extend(region.guards());
    }
    let d = model.phase_dim();
    let mut y0 = Vec::with_capacity(d + 1);
    y0.extend_from_slice(x);
    y0.push(0.0);
    let sys = FlowWithLd { model, p: cfg.p_exponent, sign };
    let ended = drive(&sys, &y0, sign * cfg.tau, integ, &guards, |_| {}, |_| true)?;
    let escaped = matches!(ended, Ended::Guard(_));
    Ok(LdPoint { value: ended.y()[d], time: ended.t().abs(), escaped })
}

/// Descriptor samples at every node of an `n1 × n2` lattice on `slice`.
pub fn compute_grid(
    model: &SystemModel,
    slice: &SliceSpec,
    energy: f64,
    cfg: &LdConfig,
    integ: &IntegratorConfig,
    resolution: [usize; 2],
    exec: Execution,
) -> Result<LdGrid> {
    model.validate()?;
    slice.validate(model)?;
    cfg.validate(model)?;
    integ.validate()?;
    let [n1, n2] = resolution;
    if n1 < 2 || n2 < 2 {
        return Err(Error::InvalidParameter("grid resolution must be at least 2 per axis".into()));
    }
    let states: Vec<Option<PhaseState>> = (0..n1 * n2)
        .map(|k| momentum_on_shell(model, slice, slice.node(k % n1, k / n1, resolution), energy))
        .collect();
    if states.iter().all(Option::is_none) {
        return Err(Error::EmptySlice(energy));
    }
    let samples = try_map_indexed(n1 * n2, exec, |k| -> Result<Option<LdSample>> {
        let Some(st) = &states[k] else { return Ok(None) };
        let run = |dir| {
            ld_point_unchecked(model, &st.coords, cfg, dir, integ)
                .map_err(|e| Error::GridNode { i: k % n1, j: k / n1, source: Box::new(e) })
        };
        Ok(Some(LdSample::new(run(LdDirection::Forward)?, run(LdDirection::Backward)?)))
    })?;
    let meta = GridMeta {
        energy,
        model: *model,
        ld: cfg.clone(),
        integrator: *integ,
        slice: slice.clone(),
        resolution,
    };
    Ok(LdGrid { meta, samples })
}

/// A detected grid node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub i: usize,
    pub j: usize,
    pub point: [f64; 2],
    pub score: f64,
}

fn strict_extrema(
    grid: &LdGrid,
    beats: impl Fn(&LdSample, &LdSample) -> bool,
    score: impl Fn(&LdSample) -> f64,
) -> Vec<Feature> {
    let mut out = Vec::new();
    for j in 0..grid.n2() {
        for i in 0..grid.n1() {
            let Some(s) = grid.get(i, j) else { continue };
            let mut any = false;
            let strict = grid.neighbours(i, j).all(|(a, b)| match grid.get(a, b) {
                None => true,
                Some(n) => {
                    any = true;
                    beats(s, n)
                }
            });
            if strict && any {
                out.push(Feature { i, j, point: grid.point(i, j), score: score(s) });
            }
        }
    }
    out
}

fn stay_order(a: &LdSample, b: &LdSample) -> Ordering {
    a.stay_time().total_cmp(&b.stay_time()).then(a.total.total_cmp(&b.total))
}

/// NHIM candidates. In variable-time mode nodes are ranked by stay time
/// `min(τ⁺, τ⁻)`, then by total, so nodes integrated for the full `±τ` come
/// first; candidates are strict local maxima of that ranking, best first.
/// The total alone peaks on the invariant manifolds, where one of the exit
/// times diverges, rather than at their intersection. In fixed-time mode the
/// candidates are strict local minima of the total, sorted by increasing total.
pub fn detect_nhim(grid: &LdGrid) -> Result<Vec<Feature>> {
    if grid.on_shell_count() == 0 {
        return Err(Error::EmptySlice(grid.meta.energy));
    }
    match grid.meta.ld.mode {
        LdMode::VariableTime => {
            let mut cands = strict_extrema(grid, |a, b| stay_order(a, b) == Ordering::Greater, |s| s.total);
            let key = |f: &Feature| grid.get(f.i, f.j).copied();
            cands.sort_by(|a, b| match (key(a), key(b)) {
                (Some(x), Some(y)) => stay_order(&y, &x),
                _ => Ordering::Equal,
            });
            Ok(cands)
        }
        LdMode::FixedTime => {
            let mut cands = strict_extrema(grid, |a, b| a.total < b.total, |s| s.total);
            cands.sort_by(|a, b| a.score.total_cmp(&b.score));
            Ok(cands)
        }
    }
}

/// Manifold candidates from one half of the descriptor: strict 4-neighbour
/// minima of `L^(f)` (stable) or `L^(b)` (unstable), plus nodes whose escape
/// flag differs from a neighbour's. Sorted by row, then column.
pub fn detect_manifold_curves(grid: &LdGrid, dir: LdDirection) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = strict_extrema(grid, |a, b| a.value(dir) < b.value(dir), |s| s.value(dir))
        .into_iter()
        .map(|f| (f.i, f.j))
        .collect();
    for j in 0..grid.n2() {
        for i in 0..grid.n1() {
            let Some(s) = grid.get(i, j) else { continue };
            let edge = grid
                .neighbours(i, j)
                .any(|(a, b)| grid.get(a, b).is_some_and(|n| n.escaped(dir) != s.escaped(dir)));
            if edge {
                out.push((i, j));
            }
        }
    }
    out.sort_by_key(|&(i, j)| (j, i));
    out.dedup();
    out
}
