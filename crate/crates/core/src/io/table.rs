//! CSV tables for section crossings, orbits and manifold fibers.

use std::io::Write;

use crate::error::Result;
use crate::io::coordinate_name;
use crate::po::{PeriodicOrbit, TubeManifold};
use crate::section::SectionRun;
use crate::SystemModel;

fn state_header(dof: usize) -> Vec<&'static str> {
    (0..2 * dof).map(|k| coordinate_name(dof, k)).collect()
}

/// Columns `seed_id, n, t` and the slice's swept pair, one row per crossing.
pub fn write_crossings<W: Write>(run: &SectionRun, axes: [usize; 2], dof: usize, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["seed_id", "n", "t", coordinate_name(dof, axes[0]), coordinate_name(dof, axes[1])])?;
    for (seed, list) in run.crossings.iter().enumerate() {
        for c in list {
            out.serialize((seed, c.n, c.t, c.point[0], c.point[1]))?;
        }
    }
    out.flush()?;
    Ok(())
}

/// One row per orbit: initial condition, period, energy and spectrum.
pub fn write_orbit_summary<W: Write>(model: &SystemModel, orbits: &[PeriodicOrbit], w: W) -> Result<()> {
    let dof = model.dof();
    let mut out = csv::Writer::from_writer(w);
    let mut head = vec!["orbit_id", "energy", "excess_energy", "period"];
    head.extend(state_header(dof));
    head.extend(["iterations", "lambda1", "lambda2", "unit_defect"]);
    out.write_record(&head)?;
    let ec = model.critical_energy();
    for (k, po) in orbits.iter().enumerate() {
        let mut row = vec![k.to_string(), po.energy.to_string()];
        row.push((po.energy - ec).to_string());
        row.push(po.period.to_string());
        row.extend(po.initial.coords.iter().map(f64::to_string));
        row.push(po.iterations().to_string());
        match &po.monodromy {
            Some(m) => row.extend([m.lambda1(), m.lambda2(), m.unit_defect()].map(|v| v.to_string())),
            None => row.extend([String::new(), String::new(), String::new()]),
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Sampled points of every orbit, `orbit_id, t` and the state.
pub fn write_orbit_samples<W: Write>(model: &SystemModel, orbits: &[PeriodicOrbit], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut head = vec!["orbit_id", "t"];
    head.extend(state_header(model.dof()));
    out.write_record(&head)?;
    for (k, po) in orbits.iter().enumerate() {
        for s in &po.samples {
            let mut row = vec![k.to_string(), s.t.to_string()];
            row.extend(s.coords.iter().map(f64::to_string));
            out.write_record(&row)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Sampled points of every fiber, `fiber_id, phase, t` and the state.
pub fn write_tube<W: Write>(model: &SystemModel, tube: &TubeManifold, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut head = vec!["fiber_id", "phase", "t"];
    head.extend(state_header(model.dof()));
    out.write_record(&head)?;
    for (k, f) in tube.fibers.iter().enumerate() {
        for s in &f.trajectory.samples {
            let mut row = vec![k.to_string(), f.phase.to_string(), s.t.to_string()];
            row.extend(s.coords.iter().map(f64::to_string));
            out.write_record(&row)?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::par::Execution;
    use crate::section::{run_section, SectionParams};
    use crate::{IntegratorConfig, SliceSpec};

    #[test]
    fn crossing_table() {
        let m = SystemModel::two_dof();
        let s = SliceSpec::u_xpx_2dof(0.0, [-5.0, 5.0], [-5.0, 5.0]);
        let seeds = vec![crate::momentum_on_shell(&m, &s, [1.0, 0.5], 15.0).unwrap()];
        let p = SectionParams { max_crossings: 3, ..Default::default() };
        let run = run_section(&m, &s, 15.0, &seeds, &p, &IntegratorConfig::default(), Execution::Sequential).unwrap();
        let mut buf = Vec::new();
        write_crossings(&run, s.axes, 2, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "seed_id,n,t,x,p_x");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,1,"));
    }
}
