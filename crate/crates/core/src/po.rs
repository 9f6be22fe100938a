//! Unstable periodic orbits around a 2-DoF index-1 saddle: differential
//! correction, natural-parameter continuation, monodromy spectra and tube
//! manifolds.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{
    drive, find_events, integrate_sampled, integrate_with_stm, stm_from, stm_initial, Direction, Ended, EventSpec,
    FlowWithStm, Guard, IntegratorConfig, Sampling, StmMatrix, Trajectory,
};
use crate::model::{Equilibrium, PhaseState, SaddleChoice, SystemModel};
use crate::par::{try_map_indexed, Execution};
use crate::slice::SliceSpec;

/// Points stored per orbit for slicing and plotting.
pub const ORBIT_SAMPLES: usize = 1001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationConfig {
    pub saddle: SaddleChoice,
    /// Amplitude of the first linear seed; the second seed uses twice this.
    pub amplitude: f64,
    /// Convergence threshold on `|p_y|` at the half-period crossing.
    pub d_tol: f64,
    /// Length of the x-step between family members. `None` keeps the
    /// spacing of the two seeds.
    pub extrapolation_step: Option<f64>,
    pub energy_tol: f64,
    pub max_iterations: usize,
    pub max_steps: usize,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            saddle: SaddleChoice::Bottom,
            amplitude: 1e-4,
            d_tol: 1e-10,
            extrapolation_step: None,
            energy_tol: 1e-10,
            max_iterations: 30,
            max_steps: 200_000,
        }
    }
}

impl ContinuationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0 && self.d_tol > 0.0 && self.energy_tol > 0.0) {
            return Err(Error::InvalidParameter("amplitude and tolerances must be positive".into()));
        }
        if let Some(s) = self.extrapolation_step {
            if !(s > 0.0) {
                return Err(Error::InvalidParameter("extrapolation_step must be positive".into()));
            }
        }
        if self.max_iterations == 0 || self.max_steps == 0 {
            return Err(Error::InvalidParameter("iteration budgets must be positive".into()));
        }
        Ok(())
    }
}

/// Eigenvalues of the monodromy matrix ordered `λ1 > 1`, `λ2 = 1/λ1`, then
/// the trivial pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MonodromySpectrum {
    pub eigenvalues: [Complex<f64>; 4],
    /// Unsorted output of the dense eigensolver.
    pub raw: Vec<Complex<f64>>,
    pub matrix: StmMatrix,
}

impl MonodromySpectrum {
    pub fn lambda1(&self) -> f64 {
        self.eigenvalues[0].re
    }

    pub fn lambda2(&self) -> f64 {
        self.eigenvalues[1].re
    }

    /// Largest distance of the trivial pair from 1.
    pub fn unit_defect(&self) -> f64 {
        (self.eigenvalues[2] - 1.0).norm().max((self.eigenvalues[3] - 1.0).norm())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    /// Turning point `(x0, y0, 0, 0)`.
    pub initial: PhaseState,
    pub period: f64,
    pub energy: f64,
    pub monodromy: Option<MonodromySpectrum>,
    /// Equally spaced points over one period; empty for intermediate
    /// continuation members.
    pub samples: Vec<PhaseState>,
    /// `|p_y|` at the half-period crossing after each corrector pass.
    pub residuals: Vec<f64>,
}

impl PeriodicOrbit {
    pub fn iterations(&self) -> usize {
        self.residuals.len().saturating_sub(1)
    }

    /// `|φ(T; x0) − x0|∞`.
    pub fn periodicity_residual(&self, model: &SystemModel, cfg: &IntegratorConfig) -> Result<f64> {
        let tr = crate::integrate::integrate(model, &self.initial, self.period, cfg)?;
        Ok(tr.last().max_abs_diff(&PhaseState::new(self.initial.coords.clone(), tr.last().t)))
    }

    /// Fills `samples` and `monodromy`.
    pub fn finalize(&mut self, model: &SystemModel, cfg: &IntegratorConfig) -> Result<()> {
        let tr = integrate_sampled(model, &self.initial, self.period, Sampling::Uniform(ORBIT_SAMPLES), cfg)?;
        self.samples = tr.samples;
        self.monodromy = Some(monodromy(model, self, cfg)?);
        Ok(())
    }
}

fn require_two_dof(model: &SystemModel) -> Result<()> {
    if model.dof() != 2 {
        return Err(Error::InvalidParameter("periodic-orbit tools need the 2-DoF model".into()));
    }
    Ok(())
}

/// Linear seed `x_eq + A_x (1, k2, 0, 0)` along the center eigenvector.
pub fn seed_guess(model: &SystemModel, saddle: &Equilibrium, amplitude: f64) -> Result<PhaseState> {
    require_two_dof(model)?;
    let es = model.saddle_eigensystem(saddle)?;
    let q = saddle.state.q();
    Ok(PhaseState::new(vec![q[0] + amplitude, q[1] + amplitude * es.k2_center, 0.0, 0.0], 0.0))
}

struct HalfOrbit {
    t1: f64,
    state: Vec<f64>,
    phi: StmMatrix,
}

fn half_orbit(model: &SystemModel, x0: f64, y0: f64, cfg: &IntegratorConfig) -> Result<HalfOrbit> {
    let sys = FlowWithStm(model);
    let y_init = stm_initial(&[x0, y0, 0.0, 0.0]);
    let guards = [
        Guard::escape(model, cfg.escape_radius),
        Guard::Coord { index: 2, value: 0.0, direction: Direction::Either },
    ];
    let ended = drive(&sys, &y_init, cfg.max_time, cfg, &guards, |_| {}, |_| true)?;
    match ended {
        Ended::Guard(hit) if hit.guard == 1 => {
            Ok(HalfOrbit { t1: hit.t, state: hit.y[..4].to_vec(), phi: stm_from(&hit.y, 4) })
        }
        other => Err(Error::NoEvent(other.t())),
    }
}

/// Newton correction of `y0` at fixed `x0` until the orbit crosses
/// `p_x = 0` with `|p_y| < d_tol`.
pub fn differential_correct(
    model: &SystemModel,
    guess: &PhaseState,
    cont: &ContinuationConfig,
    cfg: &IntegratorConfig,
) -> Result<PeriodicOrbit> {
    require_two_dof(model)?;
    if guess.coords.len() != 4 {
        return Err(Error::Dimension { expected: 4, got: guess.coords.len() });
    }
    if guess.coords[2] != 0.0 || guess.coords[3] != 0.0 {
        return Err(Error::InvalidParameter("corrector guess must have zero momentum".into()));
    }
    let x0 = guess.coords[0];
    let mut y0 = guess.coords[1];
    let mut half = half_orbit(model, x0, y0, cfg)?;
    let mut residuals = vec![half.state[3].abs()];
    let mut iterations = 0;
    while half.state[3].abs() >= cont.d_tol {
        if iterations >= cont.max_iterations {
            return Err(Error::NoConvergence { iterations, residual: half.state[3].abs() });
        }
        iterations += 1;
        let mut f = [0.0; 4];
        model.vector_field_raw(&half.state, &mut f);
        let phi = &half.phi.0;
        let denom = phi[(3, 1)] - phi[(2, 1)] * f[3] / f[2];
        if !denom.is_finite() || denom.abs() < 1e-14 {
            return Err(Error::SingularCorrection(denom));
        }
        let mut delta = half.state[3] / denom;
        let current = half.state[3].abs();
        // halve the step while it makes the residual grow
        let mut next = None;
        for _ in 0..30 {
            match half_orbit(model, x0, y0 - delta, cfg) {
                Ok(h) if h.state[3].abs() < current => {
                    next = Some(h);
                    break;
                }
                _ => delta *= 0.5,
            }
        }
        let Some(h) = next else {
            return Err(Error::NoConvergence { iterations, residual: current });
        };
        y0 -= delta;
        half = h;
        residuals.push(half.state[3].abs());
    }
    let initial = PhaseState::new(vec![x0, y0, 0.0, 0.0], 0.0);
    Ok(PeriodicOrbit {
        energy: model.energy_raw(&initial.coords),
        initial,
        period: 2.0 * half.t1,
        monodromy: None,
        samples: Vec::new(),
        residuals,
    })
}

/// Family continuation from the two linear seeds up to `target` total
/// energy. Returns every member in order; the last one sits at `target`
/// and is finalized.
pub fn continue_family(
    model: &SystemModel,
    cont: &ContinuationConfig,
    cfg: &IntegratorConfig,
    target: f64,
) -> Result<Vec<PeriodicOrbit>> {
    let (mut members, hits) = continuation(model, cont, cfg, &[target], true)?;
    let mut last = hits.into_iter().next().expect("one target");
    last.finalize(model, cfg)?;
    members.push(last);
    Ok(members)
}

/// One finalized orbit per requested total energy, from a single
/// continuation pass.
pub fn family_at_energies(
    model: &SystemModel,
    cont: &ContinuationConfig,
    cfg: &IntegratorConfig,
    targets: &[f64],
) -> Result<Vec<PeriodicOrbit>> {
    let (_, mut hits) = continuation(model, cont, cfg, targets, false)?;
    for po in &mut hits {
        po.finalize(model, cfg)?;
    }
    Ok(hits)
}

fn continuation(
    model: &SystemModel,
    cont: &ContinuationConfig,
    cfg: &IntegratorConfig,
    targets: &[f64],
    keep_members: bool,
) -> Result<(Vec<PeriodicOrbit>, Vec<PeriodicOrbit>)> {
    require_two_dof(model)?;
    cont.validate()?;
    let saddle = model.saddle(cont.saddle)?;
    let ec = saddle.energy;
    let mut order: Vec<usize> = (0..targets.len()).collect();
    order.sort_by(|&a, &b| targets[a].total_cmp(&targets[b]));
    if let Some(&i) = order.first() {
        if !(targets[i] > ec) {
            return Err(Error::InvalidParameter(format!("target energy {} is not above E_c = {ec}", targets[i])));
        }
    }
    let mut hits: Vec<Option<PeriodicOrbit>> = vec![None; targets.len()];
    let mut members = Vec::new();

    let mut prev = differential_correct(model, &seed_guess(model, &saddle, cont.amplitude)?, cont, cfg)?;
    let mut cur = differential_correct(model, &seed_guess(model, &saddle, 2.0 * cont.amplitude)?, cont, cfg)?;
    let mut next_target = 0;
    let mut steps = 0;
    if let Some(&i) = order.first() {
        if targets[i] < prev.energy {
            return Err(Error::InvalidParameter(format!(
                "target energy {} lies below the smallest seeded orbit ({})",
                targets[i], prev.energy
            )));
        }
    }
    if keep_members {
        members.push(prev.clone());
    }
    loop {
        while next_target < order.len() && targets[order[next_target]] <= cur.energy {
            let k = order[next_target];
            hits[k] = Some(bisect_energy(model, &prev, &cur, targets[k], cont, cfg)?);
            next_target += 1;
        }
        if next_target == order.len() {
            break;
        }
        if steps >= cont.max_steps {
            return Err(Error::FamilyFold { target: targets[order[next_target]], steps });
        }
        steps += 1;
        let dx = cur.initial.coords[0] - prev.initial.coords[0];
        let dy = cur.initial.coords[1] - prev.initial.coords[1];
        let scale = cont.extrapolation_step.map_or(1.0, |s| s / dx.abs());
        let guess = PhaseState::new(
            vec![cur.initial.coords[0] + scale * dx, cur.initial.coords[1] + scale * dy, 0.0, 0.0],
            0.0,
        );
        let next = differential_correct(model, &guess, cont, cfg)?;
        if !(next.energy > cur.energy) {
            return Err(Error::FamilyFold { target: targets[order[next_target]], steps });
        }
        if keep_members {
            members.push(cur.clone());
        }
        prev = cur;
        cur = next;
    }
    if keep_members {
        members.push(cur);
    }
    Ok((members, hits.into_iter().map(|h| h.expect("every target bracketed")).collect()))
}

/// Bisection on `x0` between two corrected members bracketing `target`.
fn bisect_energy(
    model: &SystemModel,
    lo: &PeriodicOrbit,
    hi: &PeriodicOrbit,
    target: f64,
    cont: &ContinuationConfig,
    cfg: &IntegratorConfig,
) -> Result<PeriodicOrbit> {
    let mut a = lo.clone();
    let mut b = hi.clone();
    for end in [&a, &b] {
        if (end.energy - target).abs() < cont.energy_tol {
            return Ok(end.clone());
        }
    }
    for _ in 0..200 {
        let (xa, ya) = (a.initial.coords[0], a.initial.coords[1]);
        let (xb, yb) = (b.initial.coords[0], b.initial.coords[1]);
        let xm = 0.5 * (xa + xb);
        if xm == xa || xm == xb {
            break;
        }
        let guess = PhaseState::new(vec![xm, 0.5 * (ya + yb), 0.0, 0.0], 0.0);
        let mid = differential_correct(model, &guess, cont, cfg)?;
        if (mid.energy - target).abs() < cont.energy_tol {
            return Ok(mid);
        }
        if mid.energy < target {
            a = mid;
        } else {
            b = mid;
        }
    }
    Err(Error::NoConvergence { iterations: 200, residual: (a.energy - target).abs() })
}

/// Spectrum of `M = Φ(T)`. The hyperbolic pair comes from a dense
/// eigensolver. The trivial pair is a Jordan block, so a dense solver would
/// split it by the square root of the integration error; instead `λ3` is
/// the Rayleigh quotient on the flow direction, which `M` fixes, and `λ4`
/// closes the trace.
pub fn monodromy(model: &SystemModel, po: &PeriodicOrbit, cfg: &IntegratorConfig) -> Result<MonodromySpectrum> {
    require_two_dof(model)?;
    let (_, phi) = integrate_with_stm(model, &po.initial, po.period, cfg)?;
    let m = &phi.0;
    let raw: Vec<Complex<f64>> = m.complex_eigenvalues().iter().copied().collect();
    let mut real: Vec<f64> = raw.iter().filter(|z| z.im.abs() < 1e-9 * z.norm().max(1.0)).map(|z| z.re).collect();
    real.sort_by(|a, b| b.total_cmp(a));
    let (Some(&l1), Some(&l2)) = (real.first(), real.last()) else {
        return Err(Error::NotHyperbolic);
    };
    if !(l1 > 1.0 + 1e-9 && l2 > 0.0 && l2 < 1.0) {
        return Err(Error::NotHyperbolic);
    }
    let mut f = [0.0; 4];
    model.vector_field_raw(&po.initial.coords, &mut f);
    let fv = DVector::from_column_slice(&f);
    let l3 = fv.dot(&(m * &fv)) / fv.dot(&fv);
    let l4 = m.trace() - l1 - l2 - l3;
    Ok(MonodromySpectrum {
        eigenvalues: [Complex::new(l1, 0.0), Complex::new(l2, 0.0), Complex::new(l3, 0.0), Complex::new(l4, 0.0)],
        raw,
        matrix: phi,
    })
}

/// Unit eigenvector of `m` for the real eigenvalue `lambda`, from the
/// smallest singular vector of `m − λI`, oriented with a non-negative
/// first entry.
fn eigenvector(m: &DMatrix<f64>, lambda: f64) -> Result<DVector<f64>> {
    let n = m.nrows();
    let a = m - DMatrix::identity(n, n) * lambda;
    let svd = a.svd(false, true);
    let v_t = svd.v_t.ok_or(Error::NotHyperbolic)?;
    let k = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .ok_or(Error::NotHyperbolic)?;
    let mut v: DVector<f64> = v_t.row(k).transpose();
    if v[0] < 0.0 {
        v = -v;
    }
    Ok(v.normalize())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManifoldConfig {
    pub epsilon: f64,
    pub branch: Branch,
    pub stability: Stability,
    /// Globalization time in periods.
    pub periods: f64,
    pub fibers: usize,
    /// Samples stored per fiber.
    pub samples: usize,
}

impl Default for ManifoldConfig {
    fn default() -> Self {
        Self { epsilon: 1e-6, branch: Branch::Plus, stability: Stability::Unstable, periods: 4.0, fibers: 50, samples: 401 }
    }
}

impl ManifoldConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.periods > 0.0) || self.fibers == 0 || self.samples < 2 {
            return Err(Error::InvalidParameter("manifold epsilon, periods, fibers and samples must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fiber {
    /// Time along the orbit where the fiber is seeded.
    pub phase: f64,
    pub seed: PhaseState,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TubeManifold {
    pub stability: Stability,
    pub branch: Branch,
    pub energy: f64,
    /// Signed integration time of every fiber.
    pub span: f64,
    pub fibers: Vec<Fiber>,
}

/// Seeds fibers at `n` equally spaced phases along the orbit, displaced by
/// `±ε` along the transported eigenvector, and integrates them (unstable
/// forward, stable backward).
pub fn globalize_manifold(
    model: &SystemModel,
    po: &PeriodicOrbit,
    mcfg: &ManifoldConfig,
    cfg: &IntegratorConfig,
    exec: Execution,
) -> Result<TubeManifold> {
    require_two_dof(model)?;
    mcfg.validate()?;
    let spectrum = match &po.monodromy {
        Some(s) => s.clone(),
        None => monodromy(model, po, cfg)?,
    };
    let lambda = match mcfg.stability {
        Stability::Unstable => spectrum.lambda1(),
        Stability::Stable => spectrum.lambda2(),
    };
    let e0 = eigenvector(&spectrum.matrix.0, lambda)?;
    let span = match mcfg.stability {
        Stability::Unstable => mcfg.periods * po.period,
        Stability::Stable => -mcfg.periods * po.period,
    };
    let sign = mcfg.branch.sign();
    let fibers = try_map_indexed(mcfg.fibers, exec, |k| -> Result<Fiber> {
        let phase = po.period * k as f64 / mcfg.fibers as f64;
        let (tr, phi) = integrate_with_stm(model, &po.initial, phase, cfg)?;
        let v = (&phi.0 * &e0).normalize();
        let x = &tr.last().coords;
        let seed = PhaseState::new((0..4).map(|i| x[i] + sign * mcfg.epsilon * v[i]).collect(), 0.0);
        let trajectory = integrate_sampled(model, &seed, span, Sampling::Uniform(mcfg.samples), cfg)?;
        Ok(Fiber { phase, seed, trajectory })
    })?;
    Ok(TubeManifold { stability: mcfg.stability, branch: mcfg.branch, energy: po.energy, span, fibers })
}

fn section_event(slice: &SliceSpec) -> Result<EventSpec> {
    if slice.dof != 2 {
        return Err(Error::InvalidParameter("slice intersections are defined for 2-DoF slices".into()));
    }
    let (coordinate, value) = slice
        .section_coordinate()
        .ok_or_else(|| Error::InvalidParameter("slice has no fixed section coordinate".into()))?;
    Ok(EventSpec { coordinate, value, direction: Direction::Increasing })
}

/// Slice crossings of the orbit over one period, projected to the swept pair.
pub fn po_slice_intersection(model: &SystemModel, po: &PeriodicOrbit, slice: &SliceSpec, cfg: &IntegratorConfig) -> Result<Vec<[f64; 2]>> {
    require_two_dof(model)?;
    let ev = section_event(slice)?;
    let run = find_events(model, &po.initial, po.period, &ev, usize::MAX, cfg)?;
    if run.crossings.is_empty() {
        return Err(Error::NoCrossings);
    }
    Ok(run.crossings.iter().map(|c| slice.project(&c.coords)).collect())
}

/// First slice crossing of every fiber along its integration direction,
/// as `(fiber index, point)`.
pub fn tube_slice_intersection(
    model: &SystemModel,
    tube: &TubeManifold,
    slice: &SliceSpec,
    cfg: &IntegratorConfig,
    exec: Execution,
) -> Result<Vec<(usize, [f64; 2])>> {
    require_two_dof(model)?;
    let ev = section_event(slice)?;
    let firsts = try_map_indexed(tube.fibers.len(), exec, |k| -> Result<Option<[f64; 2]>> {
        let run = find_events(model, &tube.fibers[k].seed, tube.span, &ev, 1, cfg)?;
        Ok(run.crossings.first().map(|c| slice.project(&c.coords)))
    })?;
    let pts: Vec<(usize, [f64; 2])> = firsts.into_iter().enumerate().filter_map(|(k, p)| p.map(|p| (k, p))).collect();
    if pts.is_empty() {
        return Err(Error::NoCrossings);
    }
    Ok(pts)
}
