//! The two coupled-harmonic Hamiltonians, their equilibria, linearization at
//! the index-1 saddles, discrete symmetries and Hill's regions.
//!
//! Phase-space vectors are laid out as `(q, p)`: `(x, y, p_x, p_y)` for the
//! 2-DoF model and `(x, y, z, p_x, p_y, p_z)` for the 3-DoF model.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of `V = ω_x²x²/2 + ω_y²y²/2 + δxy²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params2D {
    pub omega_x: f64,
    pub omega_y: f64,
    pub delta: f64,
}

impl Default for Params2D {
    fn default() -> Self {
        Self { omega_x: 1.0, omega_y: 1.1, delta: -0.11 }
    }
}

impl Params2D {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_x > 0.0 && self.omega_y > 0.0) {
            return Err(Error::InvalidParameter("omega_x and omega_y must be positive".into()));
        }
        if self.delta == 0.0 || !self.delta.is_finite() {
            return Err(Error::InvalidParameter("delta must be finite and nonzero".into()));
        }
        Ok(())
    }
}

/// Parameters of `V = ω_x²x²/2 + ω_y²y²/2 + ω_z²z²/2 − εx²y − ηx²z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params3D {
    pub omega_x_sq: f64,
    pub omega_y_sq: f64,
    pub omega_z_sq: f64,
    pub epsilon: f64,
    pub eta: f64,
}

impl Default for Params3D {
    fn default() -> Self {
        Self { omega_x_sq: 0.9, omega_y_sq: 1.6, omega_z_sq: 0.4, epsilon: 0.08, eta: 0.01 }
    }
}

impl Params3D {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_x_sq > 0.0 && self.omega_y_sq > 0.0 && self.omega_z_sq > 0.0) {
            return Err(Error::InvalidParameter("squared frequencies must be positive".into()));
        }
        if self.epsilon == 0.0 && self.eta == 0.0 {
            return Err(Error::InvalidParameter("epsilon and eta cannot both vanish".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemModel {
    TwoDof(Params2D),
    ThreeDof(Params3D),
}

impl SystemModel {
    pub fn two_dof() -> Self {
        SystemModel::TwoDof(Params2D::default())
    }

    pub fn three_dof() -> Self {
        SystemModel::ThreeDof(Params3D::default())
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SystemModel::TwoDof(p) => p.validate(),
            SystemModel::ThreeDof(p) => p.validate(),
        }
    }

    /// Degrees of freedom (2 or 3).
    pub fn dof(&self) -> usize {
        match self {
            SystemModel::TwoDof(_) => 2,
            SystemModel::ThreeDof(_) => 3,
        }
    }

    pub fn phase_dim(&self) -> usize {
        2 * self.dof()
    }

    fn check(&self, len: usize, expected: usize) -> Result<()> {
        if len == expected {
            Ok(())
        } else {
            Err(Error::Dimension { expected, got: len })
        }
    }

    pub fn potential(&self, q: &[f64]) -> Result<f64> {
        self.check(q.len(), self.dof())?;
        Ok(self.potential_raw(q))
    }

    #[inline]
    pub(crate) fn potential_raw(&self, q: &[f64]) -> f64 {
        match self {
            SystemModel::TwoDof(p) => {
                let (x, y) = (q[0], q[1]);
                0.5 * p.omega_x * p.omega_x * x * x
                    + 0.5 * p.omega_y * p.omega_y * y * y
                    + p.delta * x * y * y
            }
            SystemModel::ThreeDof(p) => {
                let (x, y, z) = (q[0], q[1], q[2]);
                0.5 * p.omega_x_sq * x * x + 0.5 * p.omega_y_sq * y * y + 0.5 * p.omega_z_sq * z * z
                    - p.epsilon * x * x * y
                    - p.eta * x * x * z
            }
        }
    }

    pub fn gradient(&self, q: &[f64]) -> Result<Vec<f64>> {
        self.check(q.len(), self.dof())?;
        let mut g = vec![0.0; self.dof()];
        self.gradient_raw(q, &mut g);
        Ok(g)
    }

    #[inline]
    pub(crate) fn gradient_raw(&self, q: &[f64], g: &mut [f64]) {
        match self {
            SystemModel::TwoDof(p) => {
                let (x, y) = (q[0], q[1]);
                g[0] = p.omega_x * p.omega_x * x + p.delta * y * y;
                g[1] = p.omega_y * p.omega_y * y + 2.0 * p.delta * x * y;
            }
            SystemModel::ThreeDof(p) => {
                let (x, y, z) = (q[0], q[1], q[2]);
                g[0] = p.omega_x_sq * x - 2.0 * p.epsilon * x * y - 2.0 * p.eta * x * z;
                g[1] = p.omega_y_sq * y - p.epsilon * x * x;
                g[2] = p.omega_z_sq * z - p.eta * x * x;
            }
        }
    }

    /// Row-major Hessian of the potential, `dof × dof`.
    #[inline]
    pub(crate) fn hessian_raw(&self, q: &[f64], h: &mut [f64]) {
        match self {
            SystemModel::TwoDof(p) => {
                let (x, y) = (q[0], q[1]);
                h[0] = p.omega_x * p.omega_x;
                h[1] = 2.0 * p.delta * y;
                h[2] = h[1];
                h[3] = p.omega_y * p.omega_y + 2.0 * p.delta * x;
            }
            SystemModel::ThreeDof(p) => {
                let (x, y, z) = (q[0], q[1], q[2]);
                h[0] = p.omega_x_sq - 2.0 * p.epsilon * y - 2.0 * p.eta * z;
                h[1] = -2.0 * p.epsilon * x;
                h[2] = -2.0 * p.eta * x;
                h[3] = h[1];
                h[4] = p.omega_y_sq;
                h[5] = 0.0;
                h[6] = h[2];
                h[7] = 0.0;
                h[8] = p.omega_z_sq;
            }
        }
    }

    /// Total energy of a phase-space vector `(q, p)`.
    pub fn energy(&self, x: &[f64]) -> Result<f64> {
        self.check(x.len(), self.phase_dim())?;
        Ok(self.energy_raw(x))
    }

    #[inline]
    pub(crate) fn energy_raw(&self, x: &[f64]) -> f64 {
        let n = self.dof();
        let kinetic: f64 = x[n..2 * n].iter().map(|p| 0.5 * p * p).sum();
        kinetic + self.potential_raw(&x[..n])
    }

    /// Hamilton's equations: `(q̇, ṗ) = (p, −∇V)`.
    pub fn vector_field(&self, state: &PhaseState) -> Result<Vec<f64>> {
        self.check(state.coords.len(), self.phase_dim())?;
        let mut dx = vec![0.0; self.phase_dim()];
        self.vector_field_raw(&state.coords, &mut dx);
        Ok(dx)
    }

    #[inline]
    pub(crate) fn vector_field_raw(&self, x: &[f64], dx: &mut [f64]) {
        match self {
            SystemModel::TwoDof(p) => {
                let (qx, qy, px, py) = (x[0], x[1], x[2], x[3]);
                dx[0] = px;
                dx[1] = py;
                dx[2] = -(p.omega_x * p.omega_x * qx + p.delta * qy * qy);
                dx[3] = -(p.omega_y * p.omega_y * qy + 2.0 * p.delta * qx * qy);
            }
            SystemModel::ThreeDof(p) => {
                let (qx, qy, qz) = (x[0], x[1], x[2]);
                dx[0] = x[3];
                dx[1] = x[4];
                dx[2] = x[5];
                dx[3] = -(p.omega_x_sq * qx - 2.0 * p.epsilon * qx * qy - 2.0 * p.eta * qx * qz);
                dx[4] = -(p.omega_y_sq * qy - p.epsilon * qx * qx);
                dx[5] = -(p.omega_z_sq * qz - p.eta * qx * qx);
            }
        }
    }

    /// Analytic Jacobian of the vector field, `[[0, I], [−∇²V, 0]]`.
    pub fn jacobian(&self, state: &PhaseState) -> Result<DMatrix<f64>> {
        self.check(state.coords.len(), self.phase_dim())?;
        let n = self.dof();
        let mut hess = [0.0; 9];
        self.hessian_raw(state.q(), &mut hess);
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            j[(i, n + i)] = 1.0;
            for k in 0..n {
                j[(n + i, k)] = -hess[i * n + k];
            }
        }
        Ok(j)
    }

    /// Closed-form equilibria: the center at the origin followed by the two
    /// index-1 saddles.
    pub fn equilibria(&self) -> Vec<Equilibrium> {
        let mut out = vec![Equilibrium {
            state: PhaseState::zeros(self.dof()),
            energy: 0.0,
            kind: EquilibriumKind::Center,
        }];
        match self {
            SystemModel::TwoDof(p) => {
                let x = -p.omega_y * p.omega_y / (2.0 * p.delta);
                let y = p.omega_x * p.omega_y / (std::f64::consts::SQRT_2 * p.delta);
                let ec = p.omega_x * p.omega_x * p.omega_y.powi(4) / (8.0 * p.delta * p.delta);
                for sy in [1.0, -1.0] {
                    out.push(Equilibrium {
                        state: PhaseState::new(vec![x, sy * y.abs(), 0.0, 0.0], 0.0),
                        energy: ec,
                        kind: EquilibriumKind::Index1Saddle,
                    });
                }
            }
            SystemModel::ThreeDof(p) => {
                let d = p.epsilon * p.epsilon * p.omega_z_sq + p.eta * p.eta * p.omega_y_sq;
                let x = (p.omega_x_sq * p.omega_y_sq * p.omega_z_sq / (2.0 * d)).sqrt();
                let y = p.epsilon * p.omega_x_sq * p.omega_z_sq / (2.0 * d);
                let z = p.eta * p.omega_x_sq * p.omega_y_sq / (2.0 * d);
                let ec = 0.125 * p.omega_x_sq * p.omega_x_sq * p.omega_y_sq * p.omega_z_sq / d;
                for sx in [1.0, -1.0] {
                    out.push(Equilibrium {
                        state: PhaseState::new(vec![sx * x, y, z, 0.0, 0.0, 0.0], 0.0),
                        energy: ec,
                        kind: EquilibriumKind::Index1Saddle,
                    });
                }
            }
        }
        out
    }

    /// The index-1 saddle picked by `choice`.
    pub fn saddle(&self, choice: SaddleChoice) -> Result<Equilibrium> {
        let eqs = self.equilibria();
        let idx = match (self, choice) {
            (SystemModel::TwoDof(_), SaddleChoice::Top) => 1,
            (SystemModel::TwoDof(_), SaddleChoice::Bottom) => 2,
            (SystemModel::ThreeDof(_), SaddleChoice::PlusX) => 1,
            (SystemModel::ThreeDof(_), SaddleChoice::MinusX) => 2,
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "saddle {choice:?} does not exist in the {}-DoF model",
                    self.dof()
                )))
            }
        };
        Ok(eqs[idx].clone())
    }

    /// Critical energy `E_c` shared by both saddles.
    pub fn critical_energy(&self) -> f64 {
        self.equilibria()[1].energy
    }

    /// Eigen-structure of the linearization at a 2-DoF index-1 saddle, from
    /// the exact roots of `β⁴ + ω_x²β² − 2ω_x²ω_y²`.
    pub fn saddle_eigensystem(&self, eq: &Equilibrium) -> Result<SaddleEigensystem> {
        if eq.kind != EquilibriumKind::Index1Saddle {
            return Err(Error::NotASaddle);
        }
        let SystemModel::TwoDof(p) = self else {
            return Err(Error::InvalidParameter(
                "closed-form saddle eigensystem is only defined for the 2-DoF model".into(),
            ));
        };
        let wx2 = p.omega_x * p.omega_x;
        let wy2 = p.omega_y * p.omega_y;
        let root = (wx2 * wx2 + 8.0 * wx2 * wy2).sqrt();
        let alpha1 = 0.5 * (-wx2 + root);
        let alpha2 = 0.5 * (-wx2 - root);
        let lambda = alpha1.sqrt();
        let omega = (-alpha2).sqrt();

        // lower-left block [[a, b], [b, d]] of the Jacobian at the saddle
        let mut hess = [0.0; 4];
        self.hessian_raw(eq.state.q(), &mut hess);
        let a = -hess[0];
        let b = -hess[1];
        let k2_saddle = (lambda * lambda - a) / b;
        let k2_center = (-omega * omega - a) / b;

        Ok(SaddleEigensystem {
            lambda,
            omega,
            k2_saddle,
            k2_center,
            u_plus: vec![1.0, k2_saddle, lambda, lambda * k2_saddle],
            u_minus: vec![1.0, k2_saddle, -lambda, -lambda * k2_saddle],
            w_real: vec![1.0, k2_center, 0.0, 0.0],
            w_imag: vec![0.0, 0.0, omega, omega * k2_center],
        })
    }

    /// Boolean Hill's-region mask `V(q) ≤ e` over a 2-D configuration window.
    pub fn hill_mask(&self, e: f64, window: &ConfigWindow, resolution: [usize; 2]) -> Result<MaskGrid> {
        window.validate(self.dof())?;
        if resolution[0] < 2 || resolution[1] < 2 {
            return Err(Error::InvalidParameter("hill mask needs at least 2 nodes per axis".into()));
        }
        let [n1, n2] = resolution;
        let mut cells = Vec::with_capacity(n1 * n2);
        let mut q = window.base.clone();
        for j in 0..n2 {
            q[window.axes[1]] = node_coord(window.ranges[1], j, n2);
            for i in 0..n1 {
                q[window.axes[0]] = node_coord(window.ranges[0], i, n1);
                cells.push(self.potential_raw(&q) <= e);
            }
        }
        Ok(MaskGrid { n1, n2, cells })
    }
}

/// Coordinate of node `i` of `n` spanning `[lo, hi]`. Mirror nodes of a
/// symmetric range are exact negatives of each other.
pub fn node_coord(range: [f64; 2], i: usize, n: usize) -> f64 {
    let mid = 0.5 * (range[0] + range[1]);
    let half = 0.5 * (range[1] - range[0]);
    let m = (n - 1) as f64;
    mid + half * ((2 * i) as f64 - m) / m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SaddleChoice {
    /// 2-DoF saddle with y > 0.
    Top,
    /// 2-DoF saddle with y < 0.
    Bottom,
    /// 3-DoF saddle with x > 0.
    PlusX,
    /// 3-DoF saddle with x < 0.
    MinusX,
}

impl SaddleChoice {
    pub fn default_for(model: &SystemModel) -> Self {
        match model {
            SystemModel::TwoDof(_) => SaddleChoice::Bottom,
            SystemModel::ThreeDof(_) => SaddleChoice::PlusX,
        }
    }
}

/// A point `(q, p)` in phase space with its time stamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub coords: Vec<f64>,
    pub t: f64,
}

impl PhaseState {
    pub fn new(coords: Vec<f64>, t: f64) -> Self {
        debug_assert!(coords.len() == 4 || coords.len() == 6);
        Self { coords, t }
    }

    pub fn from_qp(q: &[f64], p: &[f64], t: f64) -> Result<Self> {
        if q.len() != p.len() || !(q.len() == 2 || q.len() == 3) {
            return Err(Error::Dimension { expected: q.len(), got: p.len() });
        }
        Ok(Self { coords: q.iter().chain(p).copied().collect(), t })
    }

    pub fn zeros(dof: usize) -> Self {
        Self { coords: vec![0.0; 2 * dof], t: 0.0 }
    }

    pub fn dof(&self) -> usize {
        self.coords.len() / 2
    }

    pub fn q(&self) -> &[f64] {
        &self.coords[..self.dof()]
    }

    pub fn p(&self) -> &[f64] {
        &self.coords[self.dof()..]
    }

    pub fn max_abs_diff(&self, other: &PhaseState) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    Index1Saddle,
    Center,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub state: PhaseState,
    pub energy: f64,
    pub kind: EquilibriumKind,
}

/// Eigenvalues `±λ, ±iω` and eigenvectors of the saddle linearization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleEigensystem {
    pub lambda: f64,
    pub omega: f64,
    pub k2_saddle: f64,
    pub k2_center: f64,
    pub u_plus: Vec<f64>,
    pub u_minus: Vec<f64>,
    pub w_real: Vec<f64>,
    pub w_imag: Vec<f64>,
}

impl SaddleEigensystem {
    /// Offset from the saddle of the general solution of the linear system,
    /// `A₁e^{λt}u₊ + A₂e^{−λt}u₋ + 2Re(βe^{iωt}w)`.
    pub fn linear_solution(&self, a1: f64, a2: f64, beta: Complex<f64>, t: f64) -> Vec<f64> {
        let ep = (self.lambda * t).exp();
        let em = (-self.lambda * t).exp();
        let rot = beta * Complex::new(0.0, self.omega * t).exp();
        (0..4)
            .map(|k| {
                let w = Complex::new(self.w_real[k], self.w_imag[k]);
                a1 * ep * self.u_plus[k] + a2 * em * self.u_minus[k] + 2.0 * (rot * w).re
            })
            .collect()
    }

    /// Period of the limiting small-amplitude orbit, `2π/ω`.
    pub fn center_period(&self) -> f64 {
        std::f64::consts::TAU / self.omega
    }
}

/// Total energy and its excess over the critical energy of a saddle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySpec {
    pub total: f64,
    pub excess: f64,
}

impl EnergySpec {
    pub fn from_total(model: &SystemModel, total: f64) -> Self {
        Self { total, excess: total - model.critical_energy() }
    }

    pub fn from_excess(model: &SystemModel, excess: f64) -> Self {
        Self { total: model.critical_energy() + excess, excess }
    }
}

/// Two swept configuration axes with the remaining coordinates held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigWindow {
    pub axes: [usize; 2],
    pub ranges: [[f64; 2]; 2],
    /// Full configuration vector supplying the fixed coordinates.
    pub base: Vec<f64>,
}

impl ConfigWindow {
    pub fn xy(x: [f64; 2], y: [f64; 2]) -> Self {
        Self { axes: [0, 1], ranges: [x, y], base: vec![0.0, 0.0] }
    }

    fn validate(&self, dof: usize) -> Result<()> {
        if self.base.len() != dof {
            return Err(Error::Dimension { expected: dof, got: self.base.len() });
        }
        if self.axes[0] == self.axes[1] || self.axes.iter().any(|&a| a >= dof) {
            return Err(Error::InvalidParameter("window axes must be distinct coordinates".into()));
        }
        if self.ranges.iter().any(|r| !(r[1] > r[0])) {
            return Err(Error::InvalidParameter("empty configuration window".into()));
        }
        Ok(())
    }
}

/// Row-major boolean grid; `cells[j * n1 + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskGrid {
    pub n1: usize,
    pub n2: usize,
    pub cells: Vec<bool>,
}

impl MaskGrid {
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[j * self.n1 + i]
    }
}

/// Discrete symmetries of the equations of motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    /// 2-DoF reflection `(x, −y, p_x, −p_y, t)`.
    Sy,
    /// 2-DoF time reversal `(x, y, −p_x, −p_y, −t)`.
    St,
    /// 3-DoF reflection `(−x, y, z, −p_x, p_y, p_z, t)`.
    Sx,
    /// 3-DoF time reversal `(q, −p, −t)`.
    St3,
}

impl Symmetry {
    fn name(self) -> &'static str {
        match self {
            Symmetry::Sy => "s_y",
            Symmetry::St => "s_t",
            Symmetry::Sx => "s_x",
            Symmetry::St3 => "s_t3",
        }
    }

    pub fn apply(self, state: &PhaseState) -> Result<PhaseState> {
        let dof = state.dof();
        let valid = matches!((self, dof), (Symmetry::Sy | Symmetry::St, 2) | (Symmetry::Sx | Symmetry::St3, 3));
        if !valid {
            return Err(Error::Symmetry { kind: self.name(), dof });
        }
        let mut c = state.coords.clone();
        let mut t = state.t;
        match self {
            Symmetry::Sy => {
                c[1] = -c[1];
                c[3] = -c[3];
            }
            Symmetry::Sx => {
                c[0] = -c[0];
                c[3] = -c[3];
            }
            Symmetry::St | Symmetry::St3 => {
                for v in &mut c[dof..] {
                    *v = -*v;
                }
                t = -t;
            }
        }
        Ok(PhaseState { coords: c, t })
    }
}
