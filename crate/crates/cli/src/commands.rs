//! Subcommand drivers. Each computes everything first and then writes its
//! files from a single thread.

use std::path::Path;

use anyhow::{bail, Context, Result};
use phasescope::io::{self, coordinate_name, grid, ppm, table};
use phasescope::ld::{compute_grid, detect_manifold_curves, detect_nhim, LdDirection, LdGrid, LdMode};
use phasescope::par::Execution;
use phasescope::po::{
    family_at_energies, globalize_manifold, po_slice_intersection, tube_slice_intersection, PeriodicOrbit, Stability,
};
use phasescope::section::{run_section, seed_lattice};
use phasescope::{SliceSpec, SystemModel};
use serde_json::{json, Value};

use crate::config::{Command, RunConfig};
use crate::manifest::GridStats;

/// Files to write, in order, plus what goes into the manifest.
#[derive(Default)]
pub struct Output {
    pub files: Vec<(String, Vec<u8>)>,
    pub grids: Vec<GridStats>,
    pub features: Value,
    /// Reported as a numerical failure after the files are written.
    pub failure: Option<String>,
}

impl Output {
    fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    fn add_grid(&mut self, name: &str, g: &LdGrid, image: Option<ppm::Channel>) -> Result<()> {
        self.add(format!("{name}.ldg"), grid::encode(g));
        self.add(format!("{name}.ldg.json"), grid::sidecar_json(g)?.into_bytes());
        if let Some(ch) = image {
            self.add(format!("{name}.ppm"), ppm::render(g, ch));
        }
        self.grids.push(GridStats::of(name, g));
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<String>> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, bytes) in &self.files {
            io::write_atomic(&dir.join(name), bytes).with_context(|| format!("writing {name}"))?;
        }
        Ok(self.files.iter().map(|(n, _)| n.clone()).collect())
    }
}

pub fn run(command: Command, cfg: &RunConfig, exec: Execution) -> Result<Output> {
    match command {
        Command::LdMap => ld_map(cfg, exec),
        Command::PoFamily => po_family(cfg),
        Command::Manifolds => manifolds(cfg, exec),
        Command::Psection => psection(cfg, exec),
        Command::ValidateNhim => validate_nhim(cfg, exec),
    }
}

fn feature_rows(slice: &SliceSpec, rows: &[(String, usize, usize, [f64; 2], f64)]) -> Result<Vec<u8>> {
    let mut w = csv_writer();
    w.write_record(["kind", "i", "j", coordinate_name(slice.dof, slice.axes[0]), coordinate_name(slice.dof, slice.axes[1]), "score"])?;
    for (kind, i, j, p, s) in rows {
        w.serialize((kind, i, j, p[0], p[1], s))?;
    }
    Ok(w.into_inner()?)
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

fn ld_map(cfg: &RunConfig, exec: Execution) -> Result<Output> {
    let e = cfg.energy()?.total;
    let ld = cfg.ld()?;
    let mut out = Output::default();
    let mut feats = serde_json::Map::new();
    let mut grids = Vec::new();
    for (name, slice) in cfg.slice_specs()? {
        let g = compute_grid(&cfg.model, &slice, e, &ld, &cfg.integrator, cfg.resolution, exec)
            .with_context(|| format!("slice {name}"))?;
        grids.push((name, slice, g));
    }
    for (name, slice, g) in &grids {
        out.add_grid(name, g, cfg.image)?;
        let nhim = detect_nhim(g)?;
        let mut rows: Vec<(String, usize, usize, [f64; 2], f64)> =
            nhim.iter().map(|f| ("nhim".to_string(), f.i, f.j, f.point, f.score)).collect();
        let mut entry = json!({ "nhim": nhim.iter().take(10).collect::<Vec<_>>() });
        if ld.mode == LdMode::FixedTime {
            for (kind, dir) in [("stable", LdDirection::Forward), ("unstable", LdDirection::Backward)] {
                let nodes = detect_manifold_curves(g, dir);
                entry[format!("{kind}_nodes")] = json!(nodes.len());
                rows.extend(nodes.into_iter().map(|(i, j)| {
                    let s = g.get(i, j).expect("detected nodes are on-shell");
                    (kind.to_string(), i, j, g.point(i, j), s.value(dir))
                }));
            }
        }
        out.add(format!("{name}.features.csv"), feature_rows(slice, &rows)?);
        feats.insert(name.clone(), entry);
    }
    out.features = Value::Object(feats);
    Ok(out)
}

fn orbit_tables(model: &SystemModel, orbits: &[PeriodicOrbit], out: &mut Output, stem: &str) -> Result<()> {
    let mut a = Vec::new();
    table::write_orbit_summary(model, orbits, &mut a)?;
    out.add(format!("{stem}.csv"), a);
    let mut b = Vec::new();
    table::write_orbit_samples(model, orbits, &mut b)?;
    out.add(format!("{stem}_samples.csv"), b);
    Ok(())
}

fn orbit_json(model: &SystemModel, po: &PeriodicOrbit) -> Value {
    let m = po.monodromy.as_ref();
    json!({
        "energy": po.energy,
        "excess_energy": po.energy - model.critical_energy(),
        "period": po.period,
        "initial": po.initial.coords,
        "iterations": po.iterations(),
        "lambda1": m.map(|s| s.lambda1()),
        "lambda2": m.map(|s| s.lambda2()),
        "unit_defect": m.map(|s| s.unit_defect()),
    })
}

fn continuation(cfg: &RunConfig) -> phasescope::po::ContinuationConfig {
    phasescope::po::ContinuationConfig { saddle: cfg.saddle(), ..cfg.continuation }
}

fn po_family(cfg: &RunConfig) -> Result<Output> {
    let energies = cfg.family_energies()?;
    let orbits = family_at_energies(&cfg.model, &continuation(cfg), &cfg.integrator, &energies)?;
    let mut out = Output::default();
    orbit_tables(&cfg.model, &orbits, &mut out, "orbits")?;
    let periods: Vec<f64> = orbits.iter().map(|p| p.period).collect();
    let trend = if periods.windows(2).all(|w| w[1] > w[0]) {
        "increasing"
    } else if periods.windows(2).all(|w| w[1] < w[0]) {
        "decreasing"
    } else {
        "not monotone"
    };
    out.features = json!({
        "orbits": orbits.iter().map(|p| orbit_json(&cfg.model, p)).collect::<Vec<_>>(),
        "period_trend": trend,
    });
    Ok(out)
}

fn manifolds(cfg: &RunConfig, exec: Execution) -> Result<Output> {
    let e = cfg.energy()?.total;
    let po = family_at_energies(&cfg.model, &continuation(cfg), &cfg.integrator, &[e])?.remove(0);
    let slices = cfg.slice_specs()?;
    let mut out = Output::default();
    orbit_tables(&cfg.model, std::slice::from_ref(&po), &mut out, "orbit")?;
    let mut tubes_json = Vec::new();
    for sel in &cfg.manifold.tubes {
        let tube = globalize_manifold(&cfg.model, &po, &cfg.manifold.config(*sel), &cfg.integrator, exec)?;
        let stem = format!(
            "tube_{}_{}",
            if sel.stability == Stability::Stable { "stable" } else { "unstable" },
            serde_json::to_value(sel.branch)?.as_str().unwrap_or("branch")
        );
        let mut buf = Vec::new();
        table::write_tube(&cfg.model, &tube, &mut buf)?;
        out.add(format!("{stem}.csv"), buf);
        let mut crossings = serde_json::Map::new();
        for (name, slice) in &slices {
            let pts = match tube_slice_intersection(&cfg.model, &tube, slice, &cfg.integrator, exec) {
                Ok(p) => p,
                Err(phasescope::Error::NoCrossings) => Vec::new(),
                Err(e) => return Err(e.into()),
            };
            let mut w = csv_writer();
            w.write_record(["fiber_id", coordinate_name(slice.dof, slice.axes[0]), coordinate_name(slice.dof, slice.axes[1])])?;
            for (k, p) in &pts {
                w.serialize((k, p[0], p[1]))?;
            }
            out.add(format!("{stem}_{name}.csv"), w.into_inner()?);
            crossings.insert(name.clone(), json!(pts.len()));
        }
        tubes_json.push(json!({ "file": format!("{stem}.csv"), "fibers": tube.fibers.len(), "span": tube.span, "first_crossings": crossings }));
    }
    out.features = json!({ "orbit": orbit_json(&cfg.model, &po), "tubes": tubes_json });
    Ok(out)
}

fn psection(cfg: &RunConfig, exec: Execution) -> Result<Output> {
    let e = cfg.energy()?.total;
    let (_, slice) = cfg.slice_specs()?.remove(0);
    let seeds = seed_lattice(&cfg.model, &slice, e, cfg.section.lattice)?;
    if seeds.is_empty() {
        return Err(phasescope::Error::EmptySlice(e).into());
    }
    let run = run_section(&cfg.model, &slice, e, &seeds, &cfg.section, &cfg.integrator, exec)?;
    let mut buf = Vec::new();
    table::write_crossings(&run, slice.axes, slice.dof, &mut buf)?;
    let mut out = Output::default();
    out.add("crossings.csv", buf);
    out.features = json!({
        "seeds": seeds.len(),
        "escaped": run.escaped.iter().filter(|&&x| x).count(),
        "crossings": run.total_crossings(),
    });
    Ok(out)
}

fn validate_nhim(cfg: &RunConfig, exec: Execution) -> Result<Output> {
    let e = cfg.energy()?.total;
    let ld = cfg.ld()?;
    let v = &cfg.validate;
    let po = family_at_energies(&cfg.model, &continuation(cfg), &cfg.integrator, &[e])?.remove(0);
    let mut out = Output::default();
    let mut report = Vec::new();
    let mut worst: f64 = 0.0;
    for &k in &v.k_values {
        let slice = SliceSpec::u_xpx_2dof(k, v.x_range, v.px_range);
        let truth = po_slice_intersection(&cfg.model, &po, &slice, &cfg.integrator)
            .with_context(|| format!("periodic orbit does not cross y = {k}"))?;
        let g = compute_grid(&cfg.model, &slice, e, &ld, &cfg.integrator, cfg.resolution, exec)
            .with_context(|| format!("slice y = {k}"))?;
        let best = detect_nhim(&g)?.into_iter().next().context("no NHIM candidate on the slice")?;
        let d = truth.iter().map(|p| g.cell_distance(best.i, best.j, *p)).fold(f64::INFINITY, f64::min);
        worst = worst.max(d);
        let s = g.get(best.i, best.j).expect("candidates are on-shell");
        report.push(json!({
            "k": k,
            "orbit_crossings": truth,
            "argmax": best.point,
            "argmax_node": [best.i, best.j],
            "tau_plus": s.tau_plus,
            "tau_minus": s.tau_minus,
            "distance_cells": d,
            "pass": d <= v.tolerance_cells,
        }));
        out.add_grid(&format!("nhim_y{k}"), &g, cfg.image)?;
    }
    let body = json!({
        "energy": e,
        "period": po.period,
        "tolerance_cells": v.tolerance_cells,
        "worst_distance_cells": worst,
        "slices": report,
    });
    out.add("report.json", (serde_json::to_string_pretty(&body)? + "\n").into_bytes());
    if worst > v.tolerance_cells {
        out.failure = Some(format!("argmax misses the orbit by {worst:.2} cells (tolerance {})", v.tolerance_cells));
    }
    out.features = body;
    Ok(out)
}

/// Command-specific one-line summary for the terminal.
pub fn summary(command: Command, out: &Output) -> Vec<String> {
    match command {
        Command::ValidateNhim => out.features["slices"]
            .as_array()
            .into_iter()
            .flatten()
            .map(|s| {
                format!(
                    "y = {}: argmax {} cells from the orbit ({})",
                    s["k"],
                    s["distance_cells"].as_f64().map(|d| format!("{d:.2}")).unwrap_or_default(),
                    if s["pass"].as_bool() == Some(true) { "PASS" } else { "FAIL" }
                )
            })
            .collect(),
        _ => out.grids.iter().map(|g| format!("{}: {} on-shell nodes, escape fraction {:.3}", g.name, g.on_shell, g.escape_fraction)).collect(),
    }
}

pub fn ensure_no_failure(out: &Output) -> Result<()> {
    if let Some(msg) = &out.failure {
        bail!(crate::NumericalFailure(msg.clone()));
    }
    Ok(())
}
