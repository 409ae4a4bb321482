use super::{Method, StepFailure, SystemDefinition};

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

/// Explicit Runge–Kutta integrator with reusable scratch buffers.
///
/// The adaptive method keeps its last accepted step size between calls so a
/// trajectory advanced in many short spans does not restart the controller.
#[derive(Debug, Clone)]
pub struct OdeSolver {
    method: Method,
    abstol: f64,
    reltol: f64,
    k: [Vec<f64>; 7],
    stage: Vec<f64>,
    y_new: Vec<f64>,
    h_hint: Option<f64>,
}

impl OdeSolver {
    pub fn new(method: Method, abstol: f64, reltol: f64, dimension: usize) -> Self {
        OdeSolver {
            method,
            abstol,
            reltol,
            k: std::array::from_fn(|_| vec![0.0; dimension]),
            stage: vec![0.0; dimension],
            y_new: vec![0.0; dimension],
            h_hint: None,
        }
    }

    /// Forget the step-size history.
    pub fn reset(&mut self) {
        self.h_hint = None;
    }

    /// Integrates `y` from `t` to exactly `t + span`. `max_h` bounds the
    /// fixed-step method's step; the adaptive method ignores it.
    pub fn advance(
        &mut self,
        sys: &SystemDefinition,
        y: &mut [f64],
        t: f64,
        span: f64,
        max_h: f64,
    ) -> Result<(), StepFailure> {
        if span <= 0.0 {
            return Ok(());
        }
        match self.method {
            Method::Rk4Fixed => {
                let n = ((span / max_h) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
                let h = span / n as f64;
                for i in 0..n {
                    self.rk4_step(sys, y, t + i as f64 * h, h);
                }
                check_finite(y)
            }
            Method::Dp5Adaptive => self.dp5_advance(sys, y, t, span),
        }
    }

    fn rk4_step(&mut self, sys: &SystemDefinition, y: &mut [f64], t: f64, h: f64) {
        let [k1, k2, k3, k4, ..] = &mut self.k;
        let s = &mut self.stage;
        sys.eval(y, t, k1);
        for i in 0..y.len() {
            s[i] = y[i] + 0.5 * h * k1[i];
        }
        sys.eval(s, t + 0.5 * h, k2);
        for i in 0..y.len() {
            s[i] = y[i] + 0.5 * h * k2[i];
        }
        sys.eval(s, t + 0.5 * h, k3);
        for i in 0..y.len() {
            s[i] = y[i] + h * k3[i];
        }
        sys.eval(s, t + h, k4);
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    fn initial_step(&mut self, sys: &SystemDefinition, y: &[f64], t: f64) -> f64 {
        let f0 = &mut self.k[0];
        sys.eval(y, t, f0);
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..y.len() {
            let sc = self.abstol + self.reltol * y[i].abs();
            d0 += (y[i] / sc).powi(2);
            d1 += (f0[i] / sc).powi(2);
        }
        let n = y.len() as f64;
        let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
        if d0 < 1e-5 || d1 < 1e-5 || !d1.is_finite() {
            1e-6
        } else {
            0.01 * d0 / d1
        }
    }

    fn dp5_advance(
        &mut self,
        sys: &SystemDefinition,
        y: &mut [f64],
        t0: f64,
        span: f64,
    ) -> Result<(), StepFailure> {
        let t_end = t0 + span;
        let mut t = t0;
        let mut h = match self.h_hint {
            Some(h) => h,
            None => self.initial_step(sys, y, t0),
        };
        loop {
            let remaining = t_end - t;
            if remaining <= span * 1e-14 {
                return Ok(());
            }
            let truncated = h >= remaining * (1.0 - 1e-12);
            let h_try = if truncated { remaining } else { h };
            if h_try < 1e-14 * t.abs().max(1.0) {
                return Err(StepFailure::StepSizeUnderflow);
            }
            let err = self.dp5_trial(sys, y, t, h_try);
            if !err.is_finite() {
                // treat as a hard rejection; only fail once the step is tiny
                h = h_try * MIN_FACTOR;
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(StepFailure::NonFinite);
                }
                continue;
            }
            if err <= 1.0 {
                y.copy_from_slice(&self.y_new);
                t = if truncated { t_end } else { t + h_try };
                let factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
                };
                let proposal = h_try * factor;
                // a step shortened to land on t_end says little about the
                // natural step size
                h = if truncated { proposal.max(h) } else { proposal };
                self.h_hint = Some(h);
            } else {
                let factor = (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
                h = h_try * factor;
            }
        }
    }

    /// One trial step from `(t, y)`; result in `self.y_new`, returns the
    /// scaled RMS error estimate.
    fn dp5_trial(&mut self, sys: &SystemDefinition, y: &[f64], t: f64, h: f64) -> f64 {
        let n = y.len();
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let s = &mut self.stage;
        sys.eval(y, t, k1);
        for i in 0..n {
            s[i] = y[i] + h * A21 * k1[i];
        }
        sys.eval(s, t + C2 * h, k2);
        for i in 0..n {
            s[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        sys.eval(s, t + C3 * h, k3);
        for i in 0..n {
            s[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        sys.eval(s, t + C4 * h, k4);
        for i in 0..n {
            s[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        sys.eval(s, t + C5 * h, k5);
        for i in 0..n {
            s[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        sys.eval(s, t + h, k6);
        let y_new = &mut self.y_new;
        for i in 0..n {
            y_new[i] =
                y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        sys.eval(y_new, t + h, k7);
        let mut acc = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = self.abstol + self.reltol * y[i].abs().max(y_new[i].abs());
            acc += (e / sc).powi(2);
        }
        (acc / n as f64).sqrt()
    }
}

#[inline]
pub(super) fn check_finite(y: &[f64]) -> Result<(), StepFailure> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(StepFailure::NonFinite)
    }
}
