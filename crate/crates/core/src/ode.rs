//! Fixed-step explicit integrators over flat state vectors.

use serde::Deserialize;

/// Explicit one-step method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Rk4,
    Euler,
}

/// Reusable stage buffers for one state dimension.
pub struct Stepper {
    method: Method,
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Stepper {
    pub fn new(method: Method, dim: usize) -> Self {
        Self { method, k1: vec![0.0; dim], k2: vec![0.0; dim], k3: vec![0.0; dim], k4: vec![0.0; dim], tmp: vec![0.0; dim] }
    }

    /// Advance `y` from `t` to `t + h` in place. `f(t, y, dydt)`.
    pub fn step<F>(&mut self, f: &mut F, t: f64, y: &mut [f64], h: f64)
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        match self.method {
            Method::Euler => {
                f(t, y, &mut self.k1);
                for (yi, ki) in y.iter_mut().zip(&self.k1) {
                    *yi += h * ki;
                }
            }
            Method::Rk4 => {
                let half = 0.5 * h;
                f(t, y, &mut self.k1);
                for i in 0..y.len() {
                    self.tmp[i] = y[i] + half * self.k1[i];
                }
                f(t + half, &self.tmp, &mut self.k2);
                for i in 0..y.len() {
                    self.tmp[i] = y[i] + half * self.k2[i];
                }
                f(t + half, &self.tmp, &mut self.k3);
                for i in 0..y.len() {
                    self.tmp[i] = y[i] + h * self.k3[i];
                }
                f(t + h, &self.tmp, &mut self.k4);
                let sixth = h / 6.0;
                for i in 0..y.len() {
                    y[i] += sixth * (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]);
                }
            }
        }
    }
}

/// Number of uniform steps covering `[0, t_end]`.
pub(crate) fn step_count(dt: f64, t_end: f64) -> usize {
    (t_end / dt * (1.0 + 1e-12)).floor() as usize
}
