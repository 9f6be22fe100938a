//! Adaptive propagation of trajectories, variational equations and event
//! location on the dense interpolant.

mod dop853;
mod tableau;

pub use dop853::OdeSystem;
pub(crate) use dop853::Dop853;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PhaseState, SystemModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Configuration-space radius beyond which a trajectory counts as escaped.
    pub escape_radius: f64,
    /// Longest time span searched for events.
    pub max_time: f64,
    /// Accepted-step budget per integration.
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-12, abs_tol: 1e-12, max_step: 1.0, escape_radius: 50.0, max_time: 1e4, max_steps: 5_000_000 }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let tol_ok = |v: f64| v > 0.0 && v <= 1e-2;
        if !tol_ok(self.rel_tol) || !tol_ok(self.abs_tol) {
            return Err(Error::InvalidParameter("tolerances must lie in (0, 1e-2]".into()));
        }
        if !(self.escape_radius > 0.0) {
            return Err(Error::InvalidParameter("escape_radius must be positive".into()));
        }
        if !(self.max_step > 0.0) || !(self.max_time > 0.0) || self.max_steps == 0 {
            return Err(Error::InvalidParameter("max_step, max_time and max_steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    TimeLimit,
    Escape,
    Event,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Initial and final state only.
    Endpoints,
    /// Every accepted step.
    Steps,
    /// `n ≥ 2` equally spaced times over the span, via dense output.
    Uniform(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<PhaseState>,
    pub termination: Termination,
    pub steps: usize,
}

impl Trajectory {
    pub fn first(&self) -> &PhaseState {
        &self.samples[0]
    }

    pub fn last(&self) -> &PhaseState {
        self.samples.last().expect("trajectory has at least one sample")
    }

    /// Elapsed (signed) time from the first to the last sample.
    pub fn elapsed(&self) -> f64 {
        self.last().t - self.first().t
    }

    /// Largest `|H(sample) − H(initial)|`.
    pub fn energy_drift(&self, model: &SystemModel) -> f64 {
        let e0 = model.energy_raw(&self.first().coords);
        self.samples
            .iter()
            .map(|s| (model.energy_raw(&s.coords) - e0).abs())
            .fold(0.0, f64::max)
    }
}

/// State-transition matrix `Φ(t, t0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StmMatrix(pub DMatrix<f64>);

impl StmMatrix {
    pub fn identity(dim: usize) -> Self {
        StmMatrix(DMatrix::identity(dim, dim))
    }

    /// `‖ΦᵀJΦ − J‖∞` with the canonical symplectic form `J`.
    pub fn symplectic_residual(&self) -> f64 {
        let m = &self.0;
        let n = m.nrows() / 2;
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            j[(i, n + i)] = 1.0;
            j[(n + i, i)] = -1.0;
        }
        (m.transpose() * &j * m - j).abs().max()
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increasing,
    Decreasing,
    Either,
}

impl Direction {
    fn admits(self, rate: f64) -> bool {
        match self {
            Direction::Increasing => rate > 0.0,
            Direction::Decreasing => rate < 0.0,
            Direction::Either => rate != 0.0,
        }
    }
}

/// Crossing of phase-space coordinate `coordinate` through `value`; the
/// direction refers to the physical time derivative at the crossing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventSpec {
    pub coordinate: usize,
    pub value: f64,
    pub direction: Direction,
}

/// All crossings of one event along a single integration.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRun {
    pub crossings: Vec<PhaseState>,
    pub termination: Termination,
    pub end: PhaseState,
}

// ---------------------------------------------------------------------------
// systems

pub(crate) struct Flow<'a>(pub &'a SystemModel);

impl OdeSystem for Flow<'_> {
    fn dim(&self) -> usize {
        self.0.phase_dim()
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        self.0.vector_field_raw(y, dy);
    }
}

/// State followed by the row-major STM.
pub(crate) struct FlowWithStm<'a>(pub &'a SystemModel);

impl OdeSystem for FlowWithStm<'_> {
    fn dim(&self) -> usize {
        let d = self.0.phase_dim();
        d + d * d
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let n = self.0.dof();
        let d = 2 * n;
        self.0.vector_field_raw(&y[..d], &mut dy[..d]);
        let mut h = [0.0; 9];
        self.0.hessian_raw(&y[..n], &mut h);
        let phi = &y[d..];
        let dphi = &mut dy[d..];
        for i in 0..n {
            dphi[i * d..(i + 1) * d].copy_from_slice(&phi[(n + i) * d..(n + i + 1) * d]);
        }
        for i in 0..n {
            for c in 0..d {
                let mut acc = 0.0;
                for k in 0..n {
                    acc -= h[i * n + k] * phi[k * d + c];
                }
                dphi[(n + i) * d + c] = acc;
            }
        }
    }
}

/// State followed by the descriptor accumulator `∫ Σ|f_i|^p dt`.
pub(crate) struct FlowWithLd<'a> {
    pub model: &'a SystemModel,
    pub p: f64,
    /// +1 forward, −1 backward, so the accumulator grows in both cases.
    pub sign: f64,
}

impl OdeSystem for FlowWithLd<'_> {
    fn dim(&self) -> usize {
        self.model.phase_dim() + 1
    }

    fn error_dim(&self) -> usize {
        self.model.phase_dim()
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let d = self.model.phase_dim();
        self.model.vector_field_raw(&y[..d], &mut dy[..d]);
        let s: f64 = if self.p == 0.5 {
            dy[..d].iter().map(|v| v.abs().sqrt()).sum()
        } else if self.p == 1.0 {
            dy[..d].iter().map(|v| v.abs()).sum()
        } else {
            dy[..d].iter().map(|v| v.abs().powf(self.p)).sum()
        };
        dy[d] = self.sign * s;
    }
}

// ---------------------------------------------------------------------------
// driver

/// Scalar guard function on the physical part of the state.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Guard {
    Coord { index: usize, value: f64, direction: Direction },
    /// `|q|² − r²`, always terminal, fires when leaving the ball in either
    /// time direction.
    Radius { dof: usize, r2: f64 },
}

impl Guard {
    fn value(&self, y: &[f64]) -> f64 {
        match *self {
            Guard::Coord { index, value, .. } => y[index] - value,
            Guard::Radius { dof, r2 } => y[..dof].iter().map(|v| v * v).sum::<f64>() - r2,
        }
    }

    fn rate(&self, y: &[f64], f: &[f64]) -> f64 {
        match *self {
            Guard::Coord { index, .. } => f[index],
            Guard::Radius { dof, .. } => 2.0 * (0..dof).map(|i| y[i] * f[i]).sum::<f64>(),
        }
    }

    fn admits(&self, rate: f64) -> bool {
        match *self {
            Guard::Coord { direction, .. } => direction.admits(rate),
            // the run stops on the first exit, so every crossing is outward
            Guard::Radius { .. } => true,
        }
    }

    pub(crate) fn escape(model: &SystemModel, radius: f64) -> Self {
        Guard::Radius { dof: model.dof(), r2: radius * radius }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Hit {
    pub guard: usize,
    pub t: f64,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Ended {
    Time { t: f64, y: Vec<f64> },
    Guard(Hit),
}

impl Ended {
    pub fn t(&self) -> f64 {
        match self {
            Ended::Time { t, .. } => *t,
            Ended::Guard(h) => h.t,
        }
    }

    pub fn y(&self) -> &[f64] {
        match self {
            Ended::Time { y, .. } => y,
            Ended::Guard(h) => &h.y,
        }
    }
}

/// Integrates from `(0, y0)` to `t_end`, locating guard crossings.
/// `on_hit` returns `true` to stop at a crossing; radius guards always stop.
pub(crate) fn drive<S: OdeSystem>(
    sys: &S,
    y0: &[f64],
    t_end: f64,
    cfg: &IntegratorConfig,
    guards: &[Guard],
    mut on_step: impl FnMut(&mut Dop853<'_, S>),
    mut on_hit: impl FnMut(&Hit) -> bool,
) -> Result<Ended> {
    for (k, g) in guards.iter().enumerate() {
        if matches!(g, Guard::Radius { .. }) && g.value(y0) >= 0.0 {
            return Ok(Ended::Guard(Hit { guard: k, t: 0.0, y: y0.to_vec() }));
        }
    }
    if t_end == 0.0 {
        return Ok(Ended::Time { t: 0.0, y: y0.to_vec() });
    }
    let mut solver = Dop853::new(sys, 0.0, y0, t_end, cfg.rel_tol, cfg.abs_tol, cfg.max_step);
    let n = sys.dim();
    let mut g_old: Vec<f64> = guards.iter().map(|g| g.value(y0)).collect();
    let mut g_new = vec![0.0; guards.len()];
    let mut y_tmp = vec![0.0; n];
    let mut f_tmp = vec![0.0; n];
    let mut cands: Vec<(f64, usize)> = Vec::new();
    while !solver.finished() {
        if solver.steps >= cfg.max_steps {
            return Err(Error::StepBudget(cfg.max_steps));
        }
        solver.step()?;
        cands.clear();
        for (k, g) in guards.iter().enumerate() {
            g_new[k] = g.value(&solver.y);
            let (a, b) = (g_old[k], g_new[k]);
            if a != 0.0 && (b == 0.0 || (a < 0.0) != (b < 0.0)) {
                let t_root = bisect(&mut solver, g, a, &mut y_tmp);
                cands.push((t_root, k));
            }
        }
        if !cands.is_empty() {
            let dir = solver.direction();
            cands.sort_by(|p, q| (dir * p.0).total_cmp(&(dir * q.0)));
            for &(t_root, k) in &cands {
                let g = &guards[k];
                let t_hit = polish(&mut solver, g, t_root, &mut y_tmp, &mut f_tmp);
                if !g.admits(g.rate(&y_tmp, &f_tmp)) {
                    continue;
                }
                let hit = Hit { guard: k, t: t_hit, y: y_tmp.clone() };
                let terminal = matches!(g, Guard::Radius { .. });
                if on_hit(&hit) || terminal {
                    return Ok(Ended::Guard(hit));
                }
            }
        }
        std::mem::swap(&mut g_old, &mut g_new);
        on_step(&mut solver);
    }
    Ok(Ended::Time { t: solver.t, y: solver.y.clone() })
}

/// Bisection on the dense interpolant of the last step; `g_a` is the guard
/// value at the step start.
fn bisect<S: OdeSystem>(solver: &mut Dop853<'_, S>, g: &Guard, g_a: f64, buf: &mut [f64]) -> f64 {
    let (mut a, mut b) = (solver.t_old, solver.t);
    let neg_a = g_a < 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        solver.interpolate(m, buf);
        let gm = g.value(buf);
        if gm == 0.0 {
            return m;
        }
        if (gm < 0.0) == neg_a {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Newton iteration on real steps from the start of the last accepted step.
/// Leaves the polished state and slope in `y`, `f` and returns its time.
fn polish<S: OdeSystem>(solver: &mut Dop853<'_, S>, g: &Guard, t_root: f64, y: &mut [f64], f: &mut [f64]) -> f64 {
    let t0 = solver.t_old;
    let mut h = t_root - t0;
    let mut best: Option<(f64, f64, Vec<f64>, Vec<f64>)> = None;
    for _ in 0..12 {
        solver.restep(h, y, f);
        let gv = g.value(y);
        let better = best.as_ref().map_or(true, |b| gv.abs() < b.0);
        if better {
            best = Some((gv.abs(), h, y.to_vec(), f.to_vec()));
        }
        if gv.abs() <= 1e-15 * (1.0 + g_scale(g, y)) {
            break;
        }
        let rate = g.rate(y, f);
        if rate == 0.0 {
            break;
        }
        let dh = -gv / rate;
        if dh.abs() <= f64::EPSILON * h.abs().max(1e-300) * 0.5 {
            break;
        }
        h += dh;
    }
    let (_, h, yb, fb) = best.expect("at least one polish iteration");
    y.copy_from_slice(&yb);
    f.copy_from_slice(&fb);
    t0 + h
}

fn g_scale(g: &Guard, y: &[f64]) -> f64 {
    match *g {
        Guard::Coord { value, .. } => value.abs(),
        Guard::Radius { dof, .. } => y[..dof].iter().map(|v| v * v).sum(),
    }
}

// ---------------------------------------------------------------------------
// public entry points

fn check_state(model: &SystemModel, state: &PhaseState) -> Result<()> {
    if state.coords.len() != model.phase_dim() {
        return Err(Error::Dimension { expected: model.phase_dim(), got: state.coords.len() });
    }
    Ok(())
}

fn check_span(t_span: f64) -> Result<()> {
    if !t_span.is_finite() {
        return Err(Error::InvalidParameter("time span must be finite".into()));
    }
    Ok(())
}

/// Integrates over the signed span `t_span`, stopping early on escape.
/// Returns the initial and final states.
pub fn integrate(model: &SystemModel, state: &PhaseState, t_span: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    integrate_sampled(model, state, t_span, Sampling::Endpoints, cfg)
}

pub fn integrate_sampled(
    model: &SystemModel,
    state: &PhaseState,
    t_span: f64,
    sampling: Sampling,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    check_state(model, state)?;
    check_span(t_span)?;
    cfg.validate()?;
    if let Sampling::Uniform(n) = sampling {
        if n < 2 {
            return Err(Error::InvalidParameter("uniform sampling needs at least 2 points".into()));
        }
    }
    let t0 = state.t;
    let sys = Flow(model);
    let guards = [Guard::escape(model, cfg.escape_radius)];
    let mut samples = vec![state.clone()];
    let mut next_uniform = 1usize;
    let mut steps = 0usize;
    let ended = drive(
        &sys,
        &state.coords,
        t_span,
        cfg,
        &guards,
        |s| {
            steps = s.steps;
            match sampling {
                Sampling::Endpoints => {}
                Sampling::Steps => {
                    if !s.finished() {
                        samples.push(PhaseState::new(s.y.clone(), t0 + s.t));
                    }
                }
                Sampling::Uniform(n) => {
                    let dir = s.direction();
                    while next_uniform < n - 1 {
                        let tk = t_span * next_uniform as f64 / (n - 1) as f64;
                        if dir * (tk - s.t) > 0.0 {
                            break;
                        }
                        let mut buf = vec![0.0; s.y.len()];
                        s.interpolate(tk, &mut buf);
                        samples.push(PhaseState::new(buf, t0 + tk));
                        next_uniform += 1;
                    }
                }
            }
        },
        |_| true,
    )?;
    let termination = match ended {
        Ended::Time { .. } => Termination::TimeLimit,
        Ended::Guard(_) => Termination::Escape,
    };
    if ended.t() != 0.0 || samples.len() > 1 {
        samples.push(PhaseState::new(ended.y().to_vec(), t0 + ended.t()));
    }
    Ok(Trajectory { samples, termination, steps })
}

/// Joint propagation of the state and the variational equations.
pub fn integrate_with_stm(
    model: &SystemModel,
    state: &PhaseState,
    t_span: f64,
    cfg: &IntegratorConfig,
) -> Result<(Trajectory, StmMatrix)> {
    check_state(model, state)?;
    check_span(t_span)?;
    cfg.validate()?;
    let d = model.phase_dim();
    let sys = FlowWithStm(model);
    let y0 = stm_initial(&state.coords);
    let guards = [Guard::escape(model, cfg.escape_radius)];
    let mut steps = 0;
    let ended = drive(&sys, &y0, t_span, cfg, &guards, |s| steps = s.steps, |_| true)?;
    let termination = match ended {
        Ended::Time { .. } => Termination::TimeLimit,
        Ended::Guard(_) => Termination::Escape,
    };
    let y = ended.y();
    let end = PhaseState::new(y[..d].to_vec(), state.t + ended.t());
    let samples = if ended.t() == 0.0 { vec![state.clone()] } else { vec![state.clone(), end] };
    Ok((Trajectory { samples, termination, steps }, stm_from(y, d)))
}

pub(crate) fn stm_initial(x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let mut y = vec![0.0; d + d * d];
    y[..d].copy_from_slice(x);
    for i in 0..d {
        y[d + i * d + i] = 1.0;
    }
    y
}

pub(crate) fn stm_from(y: &[f64], d: usize) -> StmMatrix {
    StmMatrix(DMatrix::from_row_slice(d, d, &y[d..d + d * d]))
}

/// First crossing of `event` strictly after the start, searching forward
/// up to `cfg.max_time`. Returns the crossing state and the elapsed time.
pub fn integrate_to_event(
    model: &SystemModel,
    state: &PhaseState,
    event: &EventSpec,
    cfg: &IntegratorConfig,
) -> Result<(PhaseState, f64)> {
    let run = find_events(model, state, cfg.max_time, event, 1, cfg)?;
    match run.crossings.into_iter().next() {
        Some(c) => {
            let dt = c.t - state.t;
            Ok((c, dt))
        }
        None => Err(Error::NoEvent(run.end.t)),
    }
}

/// Up to `max_count` crossings of `event` over the signed span `t_span`.
pub fn find_events(
    model: &SystemModel,
    state: &PhaseState,
    t_span: f64,
    event: &EventSpec,
    max_count: usize,
    cfg: &IntegratorConfig,
) -> Result<EventRun> {
    check_state(model, state)?;
    check_span(t_span)?;
    cfg.validate()?;
    if event.coordinate >= model.phase_dim() {
        return Err(Error::InvalidParameter(format!("event coordinate {} out of range", event.coordinate)));
    }
    let sys = Flow(model);
    let guards = [
        Guard::escape(model, cfg.escape_radius),
        Guard::Coord { index: event.coordinate, value: event.value, direction: event.direction },
    ];
    let mut crossings = Vec::new();
    let ended = drive(
        &sys,
        &state.coords,
        t_span,
        cfg,
        &guards,
        |_| {},
        |hit| {
            if hit.guard == 1 {
                let mut c = hit.y.clone();
                c[event.coordinate] = event.value;
                crossings.push(PhaseState::new(c, state.t + hit.t));
                crossings.len() >= max_count
            } else {
                true
            }
        },
    )?;
    let termination = match &ended {
        Ended::Time { .. } => Termination::TimeLimit,
        Ended::Guard(h) if h.guard == 0 => Termination::Escape,
        Ended::Guard(_) => Termination::Event,
    };
    let end = PhaseState::new(ended.y().to_vec(), state.t + ended.t());
    Ok(EventRun { crossings, termination, end })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Params2D, SaddleChoice};

    fn cfg() -> IntegratorConfig {
        IntegratorConfig::default()
    }

    #[test]
    fn equilibrium_stays_put() {
        for m in [SystemModel::two_dof(), SystemModel::three_dof()] {
            let origin = PhaseState::zeros(m.dof());
            let tr = integrate(&m, &origin, 20.0, &cfg()).unwrap();
            assert_eq!(tr.termination, Termination::TimeLimit);
            assert_eq!(tr.last().coords, origin.coords);
            assert_eq!(tr.last().t, 20.0);
        }
        // the saddle amplifies its rounding residual like e^{λt}
        let m = SystemModel::two_dof();
        let eq = m.saddle(SaddleChoice::Top).unwrap();
        let tr = integrate(&m, &eq.state, 5.0, &cfg()).unwrap();
        assert!(tr.last().max_abs_diff(&eq.state) < 1e-10);
    }

    #[test]
    fn harmonic_limit() {
        // with a tiny coupling the x motion decouples when y = 0
        let m = SystemModel::TwoDof(Params2D { delta: 1e-300, ..Default::default() });
        let s = PhaseState::new(vec![1.5, 0.0, 0.0, 0.0], 0.0);
        let period = std::f64::consts::TAU;
        let tr = integrate_sampled(&m, &s, 10.0 * period, Sampling::Uniform(201), &cfg()).unwrap();
        for st in &tr.samples {
            assert!((st.coords[0] - 1.5 * st.t.cos()).abs() < 1e-9, "t = {}", st.t);
        }
    }

    #[test]
    fn stm_identity_at_zero_span() {
        let m = SystemModel::two_dof();
        let s = PhaseState::new(vec![0.1, 0.2, 0.3, 0.1], 0.0);
        let (_, phi) = integrate_with_stm(&m, &s, 0.0, &cfg()).unwrap();
        assert_eq!(phi, StmMatrix::identity(4));
    }

    #[test]
    fn stm_matches_finite_differences() {
        let m = SystemModel::two_dof();
        let s = PhaseState::new(vec![1.0, -0.5, 0.3, 0.8], 0.0);
        let t = 2.0;
        let (_, phi) = integrate_with_stm(&m, &s, t, &cfg()).unwrap();
        let base = integrate(&m, &s, t, &cfg()).unwrap().last().coords.clone();
        let eps = 1e-7;
        for j in 0..4 {
            let mut sp = s.clone();
            sp.coords[j] += eps;
            let xp = integrate(&m, &sp, t, &cfg()).unwrap().last().coords.clone();
            for i in 0..4 {
                let fd = (xp[i] - base[i]) / eps;
                assert!((fd - phi.0[(i, j)]).abs() < 1e-5, "({i},{j}) {fd} vs {}", phi.0[(i, j)]);
            }
        }
        assert!(phi.symplectic_residual() < 1e-8);
    }

    #[test]
    fn escape_is_located_on_the_sphere() {
        let m = SystemModel::two_dof();
        // start past the saddle heading out
        let s = PhaseState::new(vec![5.5, -8.0, 0.0, -1.0], 0.0);
        let c = IntegratorConfig { escape_radius: 20.0, ..cfg() };
        let tr = integrate(&m, &s, 100.0, &c).unwrap();
        assert_eq!(tr.termination, Termination::Escape);
        let q = tr.last().q();
        let r = (q[0] * q[0] + q[1] * q[1]).sqrt();
        assert!((r - 20.0).abs() < 1e-12);
        assert!(tr.elapsed() < 100.0);
    }

    #[test]
    fn start_on_event_skips_to_next_crossing() {
        let m = SystemModel::two_dof();
        let s = PhaseState::new(vec![1.0, 0.0, 0.0, 0.5], 0.0);
        let ev = EventSpec { coordinate: 1, value: 0.0, direction: Direction::Increasing };
        let (c, dt) = integrate_to_event(&m, &s, &ev, &cfg()).unwrap();
        assert!(dt > 1.0);
        assert!(c.coords[1].abs() < 1e-12);
        assert!(c.coords[3] > 0.0);
    }

    #[test]
    fn backward_event_direction_is_physical() {
        let m = SystemModel::two_dof();
        let s = PhaseState::new(vec![1.0, 0.3, 0.0, 0.2], 0.0);
        let ev = EventSpec { coordinate: 1, value: 0.0, direction: Direction::Increasing };
        let run = find_events(&m, &s, -30.0, &ev, 3, &cfg()).unwrap();
        assert_eq!(run.crossings.len(), 3);
        for c in &run.crossings {
            assert!(c.t < 0.0);
            assert!(c.coords[3] > 0.0);
        }
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig { rel_tol: 0.1, ..cfg() }.validate().is_err());
        assert!(IntegratorConfig { escape_radius: 0.0, ..cfg() }.validate().is_err());
        assert!(cfg().validate().is_ok());
    }
}
