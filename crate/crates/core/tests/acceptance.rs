//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::TAU;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::Complex;
use phasescope::ld::{
    compute_grid, detect_manifold_curves, detect_nhim, ld_point, LdConfig, LdDirection, LdGrid, SaddleRegion,
};
use phasescope::par::Execution;
use phasescope::po::{
    differential_correct, family_at_energies, globalize_manifold, po_slice_intersection, seed_guess,
    tube_slice_intersection, Branch, ContinuationConfig, ManifoldConfig, Stability,
};
use phasescope::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// 1
const EQ_TOL_2DOF: f64 = 1e-9;
const EQ_TOL_3DOF: f64 = 5e-4;
const EC_TOL_3DOF: f64 = 5e-3;
const BUDGET_1: Duration = Duration::from_secs(1);
// 2
const LAMBDA_ORACLE: f64 = 1.0649006826163736;
const OMEGA_ORACLE: f64 = 1.4608262948882118;
const EIG_TOL: f64 = 1e-10;
// 3
const MAX_CORRECTIONS: usize = 10;
const PERIOD_REL_TOL: f64 = 1e-3;
const PERIODICITY_TOL: f64 = 1e-8;
const ENERGY_TOL: f64 = 1e-10;
const BUDGET_3: Duration = Duration::from_secs(60);
// 4
const MONODROMY_TOL: f64 = 1e-6;
// 5
const ESCAPE_TIME_TOL: f64 = 1e-9;
const TUBE_POINTS: usize = 20;
const TUBE_CELLS: f64 = 2.0;
const TUBE_FRACTION: f64 = 0.9;
const BUDGET_5: Duration = Duration::from_secs(15 * 60);
// 6
const NHIM_CELLS: f64 = 1.0;
const BUDGET_6: Duration = Duration::from_secs(20 * 60);
// 7
const ESCAPE_FRACTION: f64 = 0.99;
const DRIFT_TOL: f64 = 1e-8;
const BUDGET_7: Duration = Duration::from_secs(20 * 60);
// 8
const BUDGET_8: Duration = Duration::from_secs(5 * 60);

const TAU_LD: f64 = 50.0;
const E_LOW: f64 = 15.25;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn cfg() -> IntegratorConfig {
    IntegratorConfig::default()
}

fn timed(budget: Duration, f: impl FnOnce() -> Result<Verdict>) -> Verdict {
    let t = Instant::now();
    let v = match f() {
        Ok(v) => v,
        Err(e) => verdict(false, format!("error: {e}")),
    };
    let dt = t.elapsed();
    let pass = v.pass && dt <= budget;
    verdict(pass, format!("{}; {:.2?} (budget {:?})", v.detail, dt, budget))
}

fn criterion_1() -> Result<Verdict> {
    let m2 = SystemModel::two_dof();
    let m3 = SystemModel::three_dof();
    let mut err2: f64 = 0.0;
    for (choice, y) in [(SaddleChoice::Top, 7.0710678118654755), (SaddleChoice::Bottom, -7.0710678118654755)] {
        let s = m2.saddle(choice)?;
        let want = [5.5, y, 0.0, 0.0];
        err2 = err2.max(s.state.coords.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        err2 = err2.max((s.energy - 15.125).abs());
    }
    let mut err3: f64 = 0.0;
    for (choice, x) in [(SaddleChoice::PlusX, 10.290), (SaddleChoice::MinusX, -10.290)] {
        let s = m3.saddle(choice)?;
        let want = [x, 5.294, 2.647, 0.0, 0.0, 0.0];
        err3 = err3.max(s.state.coords.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    let ec3 = m3.critical_energy();
    let pass = err2 < EQ_TOL_2DOF && err3 < EQ_TOL_3DOF && (ec3 - 23.824).abs() < EC_TOL_3DOF;
    Ok(verdict(pass, format!("2-DoF error {err2:.1e}, 3-DoF saddle error {err3:.1e}, E_c(3-DoF) = {ec3:.6}")))
}

fn criterion_2() -> Result<Verdict> {
    let m = SystemModel::two_dof();
    let mut worst_eig: f64 = 0.0;
    let mut worst_res: f64 = 0.0;
    for choice in [SaddleChoice::Top, SaddleChoice::Bottom] {
        let eq = m.saddle(choice)?;
        let es = m.saddle_eigensystem(&eq)?;
        let j = m.jacobian(&eq.state)?;
        let mut num: Vec<Complex<f64>> = j.complex_eigenvalues().iter().copied().collect();
        num.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        let mut closed = vec![
            Complex::new(-es.lambda, 0.0),
            Complex::new(0.0, -es.omega),
            Complex::new(0.0, es.omega),
            Complex::new(es.lambda, 0.0),
        ];
        closed.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        for (a, b) in num.iter().zip(&closed) {
            worst_eig = worst_eig.max((a - b).norm());
        }
        let col = |v: &[f64]| nalgebra::DVector::from_column_slice(v);
        for r in [
            (&j * col(&es.u_plus) - col(&es.u_plus) * es.lambda).amax(),
            (&j * col(&es.u_minus) + col(&es.u_minus) * es.lambda).amax(),
            (&j * col(&es.w_real) + col(&es.w_imag) * es.omega).amax(),
            (&j * col(&es.w_imag) - col(&es.w_real) * es.omega).amax(),
        ] {
            worst_res = worst_res.max(r);
        }
        worst_eig = worst_eig.max((es.lambda - LAMBDA_ORACLE).abs()).max((es.omega - OMEGA_ORACLE).abs());
    }
    let pass = worst_eig < EIG_TOL && worst_res < EIG_TOL;
    Ok(verdict(pass, format!("eigenvalue mismatch {worst_eig:.1e}, eigenpair residual {worst_res:.1e}")))
}

fn family(m: &SystemModel) -> Result<Vec<po::PeriodicOrbit>> {
    let ec = m.critical_energy();
    let targets: Vec<f64> = (0..10).map(|k| ec + 0.125 + 0.25 * k as f64).collect();
    family_at_energies(m, &ContinuationConfig::default(), &cfg(), &targets)
}

fn criterion_3(orbits: &mut Vec<po::PeriodicOrbit>) -> Result<Verdict> {
    let m = SystemModel::two_dof();
    let cont = ContinuationConfig::default();
    let eq = m.saddle(cont.saddle)?;
    let small = differential_correct(&m, &seed_guess(&m, &eq, cont.amplitude)?, &cont, &cfg())?;
    let t_lin = TAU / m.saddle_eigensystem(&eq)?.omega;
    let rel = ((small.period - t_lin) / t_lin).abs();
    *orbits = family(&m)?;
    let ec = m.critical_energy();
    let mut resid: f64 = 0.0;
    let mut e_err: f64 = 0.0;
    for (k, po) in orbits.iter().enumerate() {
        resid = resid.max(po.periodicity_residual(&m, &cfg())?);
        e_err = e_err.max((po.energy - (ec + 0.125 + 0.25 * k as f64)).abs());
        e_err = e_err.max((m.energy(&po.initial.coords)? - po.energy).abs());
    }
    let periods: Vec<f64> = orbits.iter().map(|p| p.period).collect();
    let inc = periods.windows(2).all(|w| w[1] > w[0]);
    let dec = periods.windows(2).all(|w| w[1] < w[0]);
    let pass = small.iterations() <= MAX_CORRECTIONS
        && rel < PERIOD_REL_TOL
        && orbits.len() == 10
        && resid < PERIODICITY_TOL
        && e_err < ENERGY_TOL
        && (inc || dec);
    Ok(verdict(
        pass,
        format!(
            "{} corrections, period error {rel:.1e}, {} orbits, residual {resid:.1e}, energy error {e_err:.1e}, periods {} ({:.6}..{:.6})",
            small.iterations(),
            orbits.len(),
            if inc { "increasing" } else if dec { "decreasing" } else { "not monotone" },
            periods[0],
            periods[periods.len() - 1]
        ),
    ))
}

fn criterion_4(orbits: &[po::PeriodicOrbit]) -> Result<Verdict> {
    if orbits.is_empty() {
        return Ok(verdict(false, "no family".into()));
    }
    let mut prod: f64 = 0.0;
    let mut unit: f64 = 0.0;
    let mut raw_unit: f64 = 0.0;
    let mut lam = Vec::new();
    for po in orbits {
        let s = po.monodromy.as_ref().expect("finalized");
        prod = prod.max((s.lambda1() * s.lambda2() - 1.0).abs());
        unit = unit.max(s.unit_defect());
        let mut near: Vec<f64> = s.raw.iter().map(|z| (z - 1.0).norm()).collect();
        near.sort_by(f64::total_cmp);
        raw_unit = raw_unit.max(near[1]);
        lam.push(s.lambda1());
    }
    let pass = prod < MONODROMY_TOL && unit < MONODROMY_TOL && raw_unit < MONODROMY_TOL && lam.iter().all(|&l| l > 1.0);
    Ok(verdict(
        pass,
        format!(
            "|λ1λ2 − 1| ≤ {prod:.1e}, unit pair defect {unit:.1e} (dense solver {raw_unit:.1e}), λ1 in [{:.2}, {:.2}]",
            lam.iter().copied().fold(f64::INFINITY, f64::min),
            lam.iter().copied().fold(0.0, f64::max)
        ),
    ))
}

fn criterion_5() -> Result<Verdict> {
    let m = SystemModel::two_dof();
    let integ = cfg();
    let slice = SliceSpec::u_xpx_2dof(0.0, [-5.6, 5.6], [-5.6, 5.6]);
    let ld = LdConfig::fixed(TAU_LD);
    let g = compute_grid(&m, &slice, E_LOW, &ld, &integ, [300, 300], Execution::Parallel)?;
    let check = IntegratorConfig { escape_radius: ld.escape_radius, ..integ };
    let mut flagged = 0;
    let mut worst: f64 = 0.0;
    for j in 0..g.n2() {
        for i in 0..g.n1() {
            let Some(s) = g.get(i, j) else { continue };
            for (sign, dir, time) in [(1.0, LdDirection::Forward, s.tau_plus), (-1.0, LdDirection::Backward, s.tau_minus)] {
                if !s.escaped(dir) {
                    continue;
                }
                flagged += 1;
                let tr = integrate(&m, &g.state(i, j).expect("on-shell"), sign * TAU_LD, &check)?;
                let exit = if tr.termination == Termination::Escape { tr.elapsed().abs() } else { f64::INFINITY };
                worst = worst.max((exit - time).abs());
            }
        }
    }
    let part_a = flagged > 0 && worst <= ESCAPE_TIME_TOL;

    // Stable tube of the orbit whose manifolds reach y = 0 with p_y > 0.
    let cont = ContinuationConfig { saddle: SaddleChoice::Top, ..Default::default() };
    let po = family_at_energies(&m, &cont, &integ, &[E_LOW])?.remove(0);
    let mut pts = Vec::new();
    for branch in [Branch::Plus, Branch::Minus] {
        let mc = ManifoldConfig { stability: Stability::Stable, branch, fibers: TUBE_POINTS, ..Default::default() };
        let tube = globalize_manifold(&m, &po, &mc, &integ, Execution::Parallel)?;
        if let Ok(p) = tube_slice_intersection(&m, &tube, &slice, &integ, Execution::Parallel) {
            pts.extend(p.into_iter().map(|(_, p)| p));
        }
    }
    let stride = (pts.len() / TUBE_POINTS).max(1);
    let sample: Vec<[f64; 2]> = pts.iter().step_by(stride).take(TUBE_POINTS).copied().collect();
    let nodes = detect_manifold_curves(&g, LdDirection::Forward);
    let near = sample
        .iter()
        .filter(|p| nodes.iter().any(|&(i, j)| g.cell_distance(i, j, **p) <= TUBE_CELLS))
        .count();
    let frac = near as f64 / TUBE_POINTS as f64;
    let part_b = sample.len() == TUBE_POINTS && frac >= TUBE_FRACTION;
    Ok(verdict(
        part_a && part_b,
        format!(
            "(a) {flagged} escape flags, worst exit-time mismatch {worst:.1e}; (b) {near}/{} tube points within {TUBE_CELLS} cells of {} L^(f) nodes",
            sample.len(),
            nodes.len()
        ),
    ))
}

fn criterion_6() -> Result<Verdict> {
    let m = SystemModel::two_dof();
    let integ = cfg();
    let po = family_at_energies(&m, &ContinuationConfig::default(), &integ, &[E_LOW])?.remove(0);
    let region = SaddleRegion::around(&m, SaddleChoice::Bottom, 2.0)?;
    let ld = LdConfig::variable(TAU_LD, region);
    let mut pass = true;
    let mut parts = Vec::new();
    for k in [-7.0, -7.1, -7.2] {
        let slice = SliceSpec::u_xpx_2dof(k, [4.8, 6.3], [-0.6, 0.6]);
        let truth = po_slice_intersection(&m, &po, &slice, &integ)?;
        let g = compute_grid(&m, &slice, E_LOW, &ld, &integ, [300, 300], Execution::Parallel)?;
        let best = detect_nhim(&g)?[0];
        let d = truth.iter().map(|p| g.cell_distance(best.i, best.j, *p)).fold(f64::INFINITY, f64::min);
        pass &= d <= NHIM_CELLS;
        parts.push(format!("y = {k}: {d:.2} cells"));
    }
    Ok(verdict(pass, parts.join(", ")))
}

fn drift_sample(m: &SystemModel, g: &LdGrid, stride: usize) -> Result<f64> {
    let mut drift: f64 = 0.0;
    for k in (0..g.samples.len()).step_by(stride) {
        if let Some(st) = g.state(k % g.n1(), k / g.n1()) {
            for span in [TAU_LD, -TAU_LD] {
                drift = drift.max(integrate_sampled(m, &st, span, Sampling::Steps, &cfg())?.energy_drift(m));
            }
        }
    }
    Ok(drift)
}

fn criterion_7() -> Result<Verdict> {
    let m = SystemModel::three_dof();
    let region = SaddleRegion::new(&[[9.0, 12.0], [2.5, 7.5], [1.0, 4.0]]);
    let ld = LdConfig::variable(TAU_LD, region);
    let sad = SaddleChoice::PlusX;
    let slices = [
        ("U_xpx", SliceSpec::u_xpx_3dof(&m, sad, [9.0, 12.0], [-0.6, 0.6])?),
        ("U_ypy", SliceSpec::u_ypy_3dof(&m, sad, [4.7, 5.9], [-0.65, 0.65])?),
        ("U_zpz", SliceSpec::u_zpz_3dof(&m, sad, [1.6, 3.7], [-0.65, 0.65])?),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, slice) in slices {
        let g = compute_grid(&m, &slice, 24.0, &ld, &cfg(), [101, 101], Execution::Parallel)?;
        let best = detect_nhim(&g)?[0];
        let idx = best.j * g.n1() + best.i;
        let st = g.state(best.i, best.j).expect("on-shell");
        let fwd = ld_point(&m, &st, &ld, LdDirection::Forward, &cfg())?;
        let bwd = ld_point(&m, &st, &ld, LdDirection::Backward, &cfg())?;
        let stay = fwd.time.min(bwd.time);
        let rival = g
            .samples
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != idx)
            .filter_map(|(_, s)| s.as_ref())
            .map(|s| s.stay_time())
            .fold(0.0, f64::max);
        let full = fwd.time == TAU_LD && bwd.time == TAU_LD;
        let escaped = g.samples.iter().flatten().filter(|s| s.stay_time() < TAU_LD).count();
        let frac = escaped as f64 / g.on_shell_count() as f64;
        let drift = drift_sample(&m, &g, 97)?.max(
            [TAU_LD, -TAU_LD]
                .iter()
                .map(|&s| integrate_sampled(&m, &st, s, Sampling::Steps, &cfg()).map(|t| t.energy_drift(&m)))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max),
        );
        pass &= (full || stay > rival) && frac >= ESCAPE_FRACTION && drift < DRIFT_TOL;
        parts.push(format!("{name}: stay {stay:.3} vs {rival:.3}, escaped {:.2}%, drift {drift:.1e}", 100.0 * frac));
    }
    Ok(verdict(pass, parts.join("; ")))
}

fn criterion_8() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let m2 = SystemModel::two_dof();
    let m3 = SystemModel::three_dof();
    let integ = cfg();
    let mut fails = Vec::new();
    let rand2 = |rng: &mut ChaCha8Rng| {
        PhaseState::new(
            vec![rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
            0.0,
        )
    };
    let rand3 = |rng: &mut ChaCha8Rng| {
        PhaseState::new(
            vec![
                rng.gen_range(8.0..12.0),
                rng.gen_range(3.0..7.0),
                rng.gen_range(1.0..4.0),
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
            ],
            0.0,
        )
    };
    let gap = |a: &PhaseState, b: &PhaseState| a.coords.iter().zip(&b.coords).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
    for _ in 0..16 {
        let cases = [(m2, rand2(&mut rng), Symmetry::Sy, Symmetry::St), (m3, rand3(&mut rng), Symmetry::Sx, Symmetry::St3)];
        for (m, x, refl, rev) in cases {
            let t = rng.gen_range(1.0..10.0);
            let tr = integrate_sampled(&m, &x, t, Sampling::Steps, &integ)?;
            if tr.energy_drift(&m) > 1e-9 * m.energy(&x.coords)?.abs().max(1.0) {
                fails.push("energy");
            }
            let (_, phi) = integrate_with_stm(&m, &x, t.min(3.0), &integ)?;
            if phi.symplectic_residual() > 1e-10 * (1.0 + phi.0.abs().max().powi(2)) {
                fails.push("symplectic");
            }
            let end = |s: &PhaseState, span: f64| integrate(&m, s, span, &integ).map(|t| t.last().clone());
            if gap(&end(&refl.apply(&x)?, t)?, &refl.apply(&end(&x, t)?)?) > 1e-9 {
                fails.push("reflection");
            }
            if gap(&end(&rev.apply(&x)?, t)?, &rev.apply(&end(&x, -t)?)?) > 1e-9 {
                fails.push("time reversal");
            }
        }
        let x = rand2(&mut rng);
        let ld = LdConfig::fixed(rng.gen_range(1.0..20.0));
        let f = ld_point(&m2, &x, &ld, LdDirection::Forward, &integ)?;
        let b = ld_point(&m2, &Symmetry::St.apply(&x)?, &ld, LdDirection::Backward, &integ)?;
        if (f.value - b.value).abs() > 1e-8 * f.value.max(1.0) {
            fails.push("LD time reversal");
        }
        let w = ConfigWindow::xy([-10.0, 10.0], [-10.0, 10.0]);
        let e = rng.gen_range(0.0..30.0);
        let lo = m2.hill_mask(e, &w, [51, 51])?;
        let hi = m2.hill_mask(e + rng.gen_range(0.0..5.0), &w, [51, 51])?;
        if lo.cells.iter().zip(&hi.cells).any(|(a, b)| *a && !*b) {
            fails.push("hill mask");
        }
    }
    let slice = SliceSpec::u_xpx_2dof(0.0, [-5.6, 5.6], [-5.6, 5.6]);
    let ld = LdConfig::fixed(10.0);
    let seq = compute_grid(&m2, &slice, E_LOW, &ld, &integ, [60, 60], Execution::Sequential)?;
    let par = compute_grid(&m2, &slice, E_LOW, &ld, &integ, [60, 60], Execution::Parallel)?;
    if io::grid::encode(&seq) != io::grid::encode(&par) {
        fails.push("deterministic grids");
    }
    if seq.samples.iter().flatten().any(|s| s.total != s.forward + s.backward) {
        fails.push("LD additivity");
    }
    fails.dedup();
    let detail = if fails.is_empty() {
        "energy, symplecticity, s_y/s_t/s_x conjugacy, LD additivity and time reversal, hill mask, deterministic grids".into()
    } else {
        format!("violated: {}", fails.join(", "))
    };
    Ok(verdict(fails.is_empty(), detail))
}

fn main() -> ExitCode {
    let mut orbits = Vec::new();
    let results = [
        ("equilibria and critical energies", timed(BUDGET_1, criterion_1)),
        ("linear analysis", timed(BUDGET_1, criterion_2)),
        ("periodic-orbit pipeline", timed(BUDGET_3, || criterion_3(&mut orbits))),
        ("monodromy structure", timed(BUDGET_3, || criterion_4(&orbits))),
        ("manifold and LD correspondence", timed(BUDGET_5, criterion_5)),
        ("NHIM detection cross-validation", timed(BUDGET_6, criterion_6)),
        ("3-DoF detection", timed(BUDGET_7, criterion_7)),
        ("property suites", timed(BUDGET_8, criterion_8)),
    ];
    let mut all = true;
    for (k, (name, v)) in results.iter().enumerate() {
        println!("{} criterion {} ({name}): {}", if v.pass { "PASS" } else { "FAIL" }, k + 1, v.detail);
        all &= v.pass;
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
