//! Explicit Runge-Kutta 8(5,3) stepper with 7th-order dense output.

use super::tableau::{A, B, C, D, E3, E5, INTERP_POWER, STAGES, STAGES_EXT};
use crate::error::{Error, Result};

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const ERROR_EXPONENT: f64 = -1.0 / 8.0;

/// Autonomous or time-dependent first-order system `y' = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    /// Number of leading components that enter the step-size control.
    fn error_dim(&self) -> usize {
        self.dim()
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

pub(crate) struct Dop853<'a, S: OdeSystem> {
    sys: &'a S,
    n: usize,
    rtol: f64,
    atol: f64,
    max_step: f64,
    dir: f64,
    t_bound: f64,
    pub t: f64,
    pub y: Vec<f64>,
    pub f: Vec<f64>,
    pub t_old: f64,
    pub y_old: Vec<f64>,
    h_abs: f64,
    h_prev: f64,
    // stage derivatives, STAGES_EXT rows of n
    k: Vec<f64>,
    dense: Vec<f64>,
    dense_ready: bool,
    scratch: Vec<f64>,
    pub steps: usize,
}

impl<'a, S: OdeSystem> Dop853<'a, S> {
    pub fn new(sys: &'a S, t0: f64, y0: &[f64], t_bound: f64, rtol: f64, atol: f64, max_step: f64) -> Self {
        let n = sys.dim();
        debug_assert_eq!(y0.len(), n);
        let dir = if t_bound >= t0 { 1.0 } else { -1.0 };
        let mut f = vec![0.0; n];
        sys.rhs(t0, y0, &mut f);
        let mut s = Self {
            sys,
            n,
            rtol,
            atol,
            max_step,
            dir,
            t_bound,
            t: t0,
            y: y0.to_vec(),
            f,
            t_old: t0,
            y_old: y0.to_vec(),
            h_abs: 0.0,
            h_prev: 0.0,
            k: vec![0.0; STAGES_EXT * n],
            dense: vec![0.0; INTERP_POWER * n],
            dense_ready: false,
            scratch: vec![0.0; n],
            steps: 0,
        };
        s.h_abs = s.initial_step();
        s
    }

    pub fn direction(&self) -> f64 {
        self.dir
    }

    pub fn finished(&self) -> bool {
        self.dir * (self.t - self.t_bound) >= 0.0
    }

    fn rms_scaled(&self, v: &[f64], y: &[f64]) -> f64 {
        let m = self.sys.error_dim();
        let s: f64 = (0..m)
            .map(|i| {
                let r = v[i] / (self.atol + y[i].abs() * self.rtol);
                r * r
            })
            .sum();
        (s / m as f64).sqrt()
    }

    fn initial_step(&mut self) -> f64 {
        let interval = (self.t_bound - self.t).abs();
        if interval == 0.0 {
            return 0.0;
        }
        let d0 = self.rms_scaled(&self.y, &self.y);
        let d1 = self.rms_scaled(&self.f, &self.y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(interval);
        let y1: Vec<f64> = self.y.iter().zip(&self.f).map(|(y, f)| y + h0 * self.dir * f).collect();
        let mut f1 = vec![0.0; self.n];
        self.sys.rhs(self.t + h0 * self.dir, &y1, &mut f1);
        let diff: Vec<f64> = f1.iter().zip(&self.f).map(|(a, b)| a - b).collect();
        let d2 = self.rms_scaled(&diff, &self.y) / h0;
        let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(-ERROR_EXPONENT)
        };
        (100.0 * h0).min(h1).min(interval).min(self.max_step)
    }

    /// One explicit step of size `h` from `(t, y)` with `f = f(t, y)`;
    /// fills stages 0..=STAGES of `k` and writes the new state and slope.
    fn rk_step(&mut self, t: f64, y: &[f64], f: &[f64], h: f64, y_new: &mut [f64], f_new: &mut [f64]) {
        let n = self.n;
        self.k[..n].copy_from_slice(f);
        for s in 1..STAGES {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, a) in A[s][..s].iter().enumerate() {
                    acc += self.k[j * n + i] * a;
                }
                self.scratch[i] = y[i] + acc * h;
            }
            let (_, tail) = self.k.split_at_mut(s * n);
            self.sys.rhs(t + C[s] * h, &self.scratch, &mut tail[..n]);
        }
        for i in 0..n {
            let mut acc = 0.0;
            for (j, b) in B.iter().enumerate() {
                acc += self.k[j * n + i] * b;
            }
            y_new[i] = y[i] + h * acc;
        }
        self.sys.rhs(t + h, y_new, f_new);
        self.k[STAGES * n..(STAGES + 1) * n].copy_from_slice(f_new);
    }

    fn error_norm(&self, h: f64, y: &[f64], y_new: &[f64]) -> f64 {
        let n = self.n;
        let m = self.sys.error_dim();
        let (mut e5, mut e3) = (0.0, 0.0);
        for i in 0..m {
            let scale = self.atol + y[i].abs().max(y_new[i].abs()) * self.rtol;
            let (mut a5, mut a3) = (0.0, 0.0);
            for j in 0..=STAGES {
                let kv = self.k[j * n + i];
                a5 += kv * E5[j];
                a3 += kv * E3[j];
            }
            e5 += (a5 / scale) * (a5 / scale);
            e3 += (a3 / scale) * (a3 / scale);
        }
        if e5 == 0.0 && e3 == 0.0 {
            return 0.0;
        }
        let denom = e5 + 0.01 * e3;
        h.abs() * e5 / (denom * m as f64).sqrt()
    }

    /// Advances by one accepted step.
    pub fn step(&mut self) -> Result<()> {
        let n = self.n;
        let t = self.t;
        let min_step = 10.0 * (next_toward(t, self.dir) - t).abs();
        let mut h_abs = self.h_abs.min(self.max_step).max(min_step);
        let mut rejected = false;
        let y = std::mem::take(&mut self.y);
        let f = std::mem::take(&mut self.f);
        let mut y_new = vec![0.0; n];
        let mut f_new = vec![0.0; n];
        loop {
            if h_abs < min_step {
                self.y = y;
                self.f = f;
                return Err(Error::StepUnderflow { t, h: h_abs });
            }
            let mut h = h_abs * self.dir;
            let mut t_new = t + h;
            if self.dir * (t_new - self.t_bound) > 0.0 {
                t_new = self.t_bound;
            }
            h = t_new - t;
            h_abs = h.abs();
            self.rk_step(t, &y, &f, h, &mut y_new, &mut f_new);
            let err = self.error_norm(h, &y, &y_new);
            if err < 1.0 {
                let mut factor = if err == 0.0 { MAX_FACTOR } else { MAX_FACTOR.min(SAFETY * err.powf(ERROR_EXPONENT)) };
                if rejected {
                    factor = factor.min(1.0);
                }
                self.h_prev = h;
                self.h_abs = h_abs * factor;
                self.t_old = t;
                self.y_old = y;
                self.t = t_new;
                self.y = y_new;
                self.f = f_new;
                self.dense_ready = false;
                self.steps += 1;
                return Ok(());
            }
            h_abs *= MIN_FACTOR.max(SAFETY * err.powf(ERROR_EXPONENT));
            rejected = true;
        }
    }

    fn build_dense(&mut self) {
        if self.dense_ready {
            return;
        }
        let n = self.n;
        let h = self.h_prev;
        let mut ys = vec![0.0; n];
        for s in STAGES + 1..STAGES_EXT {
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += self.k[j * n + i] * A[s][j];
                }
                ys[i] = self.y_old[i] + acc * h;
            }
            let (_, tail) = self.k.split_at_mut(s * n);
            self.sys.rhs(self.t_old + C[s] * h, &ys, &mut tail[..n]);
        }
        for i in 0..n {
            let dy = self.y[i] - self.y_old[i];
            let f_old = self.k[i];
            self.dense[i] = dy;
            self.dense[n + i] = h * f_old - dy;
            self.dense[2 * n + i] = 2.0 * dy - h * (self.f[i] + f_old);
            for (r, drow) in D.iter().enumerate() {
                let mut acc = 0.0;
                for j in 0..STAGES_EXT {
                    acc += drow[j] * self.k[j * n + i];
                }
                self.dense[(3 + r) * n + i] = h * acc;
            }
        }
        self.dense_ready = true;
    }

    /// Dense-output value at `t` within the last accepted step.
    pub fn interpolate(&mut self, t: f64, out: &mut [f64]) {
        self.build_dense();
        let n = self.n;
        let x = (t - self.t_old) / self.h_prev;
        out.fill(0.0);
        for (r, row) in (0..INTERP_POWER).rev().enumerate() {
            let w = if r % 2 == 0 { x } else { 1.0 - x };
            for i in 0..n {
                out[i] = (out[i] + self.dense[row * n + i]) * w;
            }
        }
        for i in 0..n {
            out[i] += self.y_old[i];
        }
    }

    /// Explicit step of size `h` from the start of the last accepted step,
    /// leaving the accepted state untouched.
    pub fn restep(&mut self, h: f64, y_out: &mut [f64], f_out: &mut [f64]) {
        let saved = self.k.clone();
        let y_old = self.y_old.clone();
        let f_old = saved[..self.n].to_vec();
        self.rk_step(self.t_old, &y_old, &f_old, h, y_out, f_out);
        self.k = saved;
    }
}

fn next_toward(t: f64, dir: f64) -> f64 {
    if t == 0.0 {
        return dir * f64::from_bits(1);
    }
    let bits = t.to_bits();
    let up = (t > 0.0) == (dir > 0.0);
    f64::from_bits(if up { bits + 1 } else { bits - 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Decay;
    impl OdeSystem for Decay {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
            dy[0] = -y[0];
        }
    }

    struct Poly;
    impl OdeSystem for Poly {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, t: f64, _y: &[f64], dy: &mut [f64]) {
            dy[0] = 3.0 * t * t;
        }
    }

    #[test]
    fn exponential_decay() {
        let sys = Decay;
        let mut s = Dop853::new(&sys, 0.0, &[1.0], 5.0, 1e-12, 1e-12, 1.0);
        while !s.finished() {
            s.step().unwrap();
        }
        assert_eq!(s.t, 5.0);
        assert!((s.y[0] - (-5.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn backward_decay() {
        let sys = Decay;
        let mut s = Dop853::new(&sys, 0.0, &[1.0], -3.0, 1e-12, 1e-12, 1.0);
        while !s.finished() {
            s.step().unwrap();
        }
        assert!((s.y[0] - 3.0f64.exp()).abs() < 1e-10);
    }

    #[test]
    fn dense_output_reproduces_cubic() {
        let sys = Poly;
        let mut s = Dop853::new(&sys, 0.0, &[0.0], 2.0, 1e-10, 1e-10, 0.5);
        s.step().unwrap();
        let mut out = [0.0];
        for k in 0..=10 {
            let t = s.t_old + (s.t - s.t_old) * k as f64 / 10.0;
            s.interpolate(t, &mut out);
            assert!((out[0] - t * t * t).abs() < 1e-13, "{t}");
        }
    }

    #[test]
    fn dense_output_matches_decay() {
        let sys = Decay;
        let mut s = Dop853::new(&sys, 0.0, &[1.0], 10.0, 1e-12, 1e-12, 1.0);
        let mut out = [0.0];
        while !s.finished() {
            s.step().unwrap();
            let tm = 0.5 * (s.t + s.t_old);
            s.interpolate(tm, &mut out);
            assert!((out[0] - (-tm).exp()).abs() < 1e-11);
        }
    }

    #[test]
    fn next_toward_moves_one_ulp() {
        assert!(next_toward(1.0, 1.0) > 1.0);
        assert!(next_toward(1.0, -1.0) < 1.0);
        assert!(next_toward(-1.0, 1.0) > -1.0);
        assert!(next_toward(0.0, -1.0) < 0.0);
    }
}
