//! Isoenergetic two-dimensional surfaces in phase space.
//!
//! A slice fixes all but three phase-space coordinates, sweeps two of them
//! over a window and recovers the remaining momentum from `H = e` with a
//! strictly positive sign.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{node_coord, PhaseState, SaddleChoice, SystemModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceSpec {
    /// Degrees of freedom of the target model.
    pub dof: usize,
    /// Phase-space indices held fixed and their values.
    pub fixed: Vec<(usize, f64)>,
    /// Phase-space indices of the swept pair, first axis then second.
    pub axes: [usize; 2],
    pub ranges: [[f64; 2]; 2],
    /// Phase-space index of the momentum solved from the energy.
    pub recovered: usize,
}

impl SliceSpec {
    /// 2-DoF surface `y = k`, swept in `(x, p_x)`, with `p_y > 0`.
    pub fn u_xpx_2dof(k: f64, x: [f64; 2], px: [f64; 2]) -> Self {
        Self { dof: 2, fixed: vec![(1, k)], axes: [0, 2], ranges: [x, px], recovered: 3 }
    }

    /// 3-DoF surface through the saddle, swept in `(x, p_x)` with `p_y = 0`
    /// and `p_z > 0`.
    pub fn u_xpx_3dof(model: &SystemModel, saddle: SaddleChoice, x: [f64; 2], px: [f64; 2]) -> Result<Self> {
        let q = saddle_q(model, saddle)?;
        Ok(Self { dof: 3, fixed: vec![(1, q[1]), (2, q[2]), (4, 0.0)], axes: [0, 3], ranges: [x, px], recovered: 5 })
    }

    /// 3-DoF surface swept in `(y, p_y)` with `p_x = 0` and `p_z > 0`.
    pub fn u_ypy_3dof(model: &SystemModel, saddle: SaddleChoice, y: [f64; 2], py: [f64; 2]) -> Result<Self> {
        let q = saddle_q(model, saddle)?;
        Ok(Self { dof: 3, fixed: vec![(0, q[0]), (2, q[2]), (3, 0.0)], axes: [1, 4], ranges: [y, py], recovered: 5 })
    }

    /// 3-DoF surface swept in `(z, p_z)` with `p_x = 0` and `p_y > 0`.
    pub fn u_zpz_3dof(model: &SystemModel, saddle: SaddleChoice, z: [f64; 2], pz: [f64; 2]) -> Result<Self> {
        let q = saddle_q(model, saddle)?;
        Ok(Self { dof: 3, fixed: vec![(0, q[0]), (1, q[1]), (3, 0.0)], axes: [2, 5], ranges: [z, pz], recovered: 4 })
    }

    pub fn validate(&self, model: &SystemModel) -> Result<()> {
        let n = model.dof();
        if self.dof != n {
            return Err(Error::Dimension { expected: n, got: self.dof });
        }
        let mut seen = vec![0u8; 2 * n];
        for &(i, v) in &self.fixed {
            if i >= 2 * n || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("bad fixed coordinate {i}")));
            }
            seen[i] += 1;
        }
        for &a in &self.axes {
            if a >= 2 * n {
                return Err(Error::InvalidParameter(format!("bad swept coordinate {a}")));
            }
            seen[a] += 1;
        }
        if self.recovered < n || self.recovered >= 2 * n {
            return Err(Error::InvalidParameter("recovered coordinate must be a momentum".into()));
        }
        seen[self.recovered] += 1;
        if seen.iter().any(|&c| c != 1) {
            return Err(Error::InvalidParameter(
                "slice must assign every phase-space coordinate exactly once".into(),
            ));
        }
        if self.ranges.iter().any(|r| !(r[0].is_finite() && r[1].is_finite() && r[1] > r[0])) {
            return Err(Error::InvalidParameter("slice ranges must be finite and increasing".into()));
        }
        Ok(())
    }

    /// Fixed value of a phase-space coordinate, if it is held fixed.
    pub fn fixed_value(&self, index: usize) -> Option<f64> {
        self.fixed.iter().find(|(i, _)| *i == index).map(|(_, v)| *v)
    }

    /// Coordinates of grid node `(i, j)` on an `n1 × n2` lattice.
    pub fn node(&self, i: usize, j: usize, resolution: [usize; 2]) -> [f64; 2] {
        [node_coord(self.ranges[0], i, resolution[0]), node_coord(self.ranges[1], j, resolution[1])]
    }

    /// Phase-space vector with every coordinate except the recovered momentum.
    fn partial(&self, point: [f64; 2]) -> Vec<f64> {
        let mut c = vec![0.0; 2 * self.dof];
        for &(i, v) in &self.fixed {
            c[i] = v;
        }
        c[self.axes[0]] = point[0];
        c[self.axes[1]] = point[1];
        c
    }

    /// Projection of a phase-space vector onto the swept pair.
    pub fn project(&self, coords: &[f64]) -> [f64; 2] {
        [coords[self.axes[0]], coords[self.axes[1]]]
    }

    /// The coordinate whose zero crossing defines the section when the slice
    /// is used as a Poincaré surface: the fixed configuration coordinate that
    /// is conjugate to the recovered momentum.
    pub fn section_coordinate(&self) -> Option<(usize, f64)> {
        let q = self.recovered - self.dof;
        self.fixed_value(q).map(|v| (q, v))
    }
}

fn saddle_q(model: &SystemModel, saddle: SaddleChoice) -> Result<Vec<f64>> {
    if model.dof() != 3 {
        return Err(Error::Dimension { expected: 3, got: model.dof() });
    }
    Ok(model.saddle(saddle)?.state.q().to_vec())
}

/// Phase-space state on the slice at `point` with the recovered momentum
/// taken as the positive root of `H = e`; `None` when the point is off-shell.
pub fn momentum_on_shell(model: &SystemModel, slice: &SliceSpec, point: [f64; 2], e: f64) -> Option<PhaseState> {
    let n = model.dof();
    if slice.dof != n {
        return None;
    }
    let mut c = slice.partial(point);
    c[slice.recovered] = 0.0;
    let kinetic2: f64 = c[n..].iter().map(|p| p * p).sum();
    let radicand = 2.0 * (e - model.potential_raw(&c[..n])) - kinetic2;
    if !(radicand > 0.0) {
        return None;
    }
    c[slice.recovered] = radicand.sqrt();
    Some(PhaseState::new(c, 0.0))
}
