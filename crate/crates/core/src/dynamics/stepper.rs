use super::solver::{check_finite, OdeSolver};
use super::{CrossingDirection, StepFailure, StepperConfig, SystemDefinition, SystemKind, Wrapper};

const MAX_BISECTIONS: usize = 200;

/// Owns a trajectory of one system and advances it one recurrence step at a
/// time: one map application, one `dt` of flow, one forcing period or one
/// return to the Poincaré section.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    system: &'a SystemDefinition,
    cfg: StepperConfig,
    solver: OdeSolver,
    state: Vec<f64>,
    t: f64,
    scratch: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(system: &'a SystemDefinition, cfg: StepperConfig) -> Self {
        let n = system.dimension();
        Stepper {
            system,
            cfg,
            solver: OdeSolver::new(cfg.method, cfg.abstol, cfg.reltol, n),
            state: vec![0.0; n],
            t: 0.0,
            scratch: vec![0.0; n],
            left: vec![0.0; n],
            right: vec![0.0; n],
        }
    }

    pub fn reinit(&mut self, state: &[f64], t: f64) {
        self.state.copy_from_slice(state);
        self.t = t;
        self.solver.reset();
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn system(&self) -> &SystemDefinition {
        self.system
    }

    pub fn step(&mut self) -> Result<(), StepFailure> {
        match self.system.kind() {
            SystemKind::DiscreteMap => {
                self.system.eval(&self.state, self.t, &mut self.scratch);
                std::mem::swap(&mut self.state, &mut self.scratch);
                self.t += 1.0;
                check_finite(&self.state)
            }
            SystemKind::Ode => match self.system.wrapper() {
                Wrapper::None => self.flow(self.cfg.dt),
                Wrapper::Stroboscopic { period } => self.flow(period),
                Wrapper::PoincarePlane {
                    axis,
                    offset,
                    direction,
                    max_time,
                } => self.next_crossing(axis, offset, direction, max_time),
            },
        }
    }

    fn flow(&mut self, span: f64) -> Result<(), StepFailure> {
        self.solver
            .advance(self.system, &mut self.state, self.t, span, self.cfg.dt)?;
        self.t += span;
        check_finite(&self.state)
    }

    fn next_crossing(
        &mut self,
        axis: usize,
        offset: f64,
        direction: CrossingDirection,
        max_time: f64,
    ) -> Result<(), StepFailure> {
        let h = self.cfg.dt;
        let t_start = self.t;
        loop {
            if self.t - t_start > max_time {
                return Err(StepFailure::NoSectionCrossing);
            }
            self.left.copy_from_slice(&self.state);
            let t_left = self.t;
            let g0 = self.state[axis] - offset;
            // relative to the size of the state near the section
            let scale = self.state.iter().fold(offset.abs(), |m, v| m.max(v.abs()));
            let tol = 1e-9 * scale.max(f64::MIN_POSITIVE);
            self.flow(h)?;
            let g1 = self.state[axis] - offset;
            let crossed = match direction {
                CrossingDirection::Positive => g0 < 0.0 && g1 >= 0.0,
                CrossingDirection::Negative => g0 > 0.0 && g1 <= 0.0,
                CrossingDirection::Both => g0 != 0.0 && (g1 == 0.0 || g0.signum() != g1.signum()),
            };
            if !crossed {
                continue;
            }
            if g1.abs() <= tol {
                return Ok(());
            }
            // The right end of the bracket always sits on the far side of the
            // section, so the next search starts with a strict sign.
            let far_side = |g: f64| g == 0.0 || g.signum() == g1.signum();
            let (mut lo, mut hi) = (0.0, h);
            self.right.copy_from_slice(&self.state);
            let mut g_right = g1;
            for _ in 0..MAX_BISECTIONS {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                self.scratch.copy_from_slice(&self.left);
                self.solver
                    .advance(self.system, &mut self.scratch, t_left, mid, h)?;
                let g = self.scratch[axis] - offset;
                if far_side(g) {
                    hi = mid;
                    g_right = g;
                    self.right.copy_from_slice(&self.scratch);
                } else {
                    lo = mid;
                }
                if g_right.abs() <= tol {
                    break;
                }
            }
            self.state.copy_from_slice(&self.right);
            self.t = t_left + hi;
            return check_finite(&self.state);
        }
    }
}
