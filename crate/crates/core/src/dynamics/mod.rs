//! Time stepping: discrete maps, fixed-step and adaptive Runge–Kutta
//! integration, stroboscopic and Poincaré-section wrappers, projections and
//! the automatic time-step estimate.

mod solver;
mod stepper;

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

pub use solver::OdeSolver;
pub use stepper::Stepper;

/// Evolution rule: `(state, params, t, out)`. For maps `out` receives the next
/// state, for flows the time derivative.
pub type RuleFn = dyn Fn(&[f64], &[f64], f64, &mut [f64]) + Send + Sync;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    DiscreteMap,
    Ode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingDirection {
    /// `x_j - c` goes from negative to non-negative.
    Positive,
    Negative,
    Both,
}

/// How one recurrence step is derived from the underlying flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Wrapper {
    None,
    /// Sample the flow once per forcing period.
    Stroboscopic { period: f64 },
    /// Next crossing of the plane `x[axis] = offset`.
    PoincarePlane {
        axis: usize,
        offset: f64,
        direction: CrossingDirection,
        /// Flow time after which a missing crossing is treated as a failure.
        max_time: f64,
    },
}

/// A dynamical system together with the way it is observed on a grid.
#[derive(Clone)]
pub struct SystemDefinition {
    name: String,
    kind: SystemKind,
    rule: Arc<RuleFn>,
    params: Vec<f64>,
    dimension: usize,
    wrapper: Wrapper,
    projection: Option<Vec<usize>>,
    fill: Vec<f64>,
}

impl fmt::Debug for SystemDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemDefinition")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("params", &self.params)
            .field("dimension", &self.dimension)
            .field("wrapper", &self.wrapper)
            .field("projection", &self.projection)
            .field("fill", &self.fill)
            .finish()
    }
}

impl SystemDefinition {
    pub fn new<F>(
        name: impl Into<String>,
        kind: SystemKind,
        dimension: usize,
        params: Vec<f64>,
        rule: F,
    ) -> Self
    where
        F: Fn(&[f64], &[f64], f64, &mut [f64]) + Send + Sync + 'static,
    {
        assert!(dimension > 0, "system dimension must be positive");
        SystemDefinition {
            name: name.into(),
            kind,
            rule: Arc::new(rule),
            params,
            dimension,
            wrapper: Wrapper::None,
            projection: None,
            fill: vec![0.0; dimension],
        }
    }

    pub fn discrete<F>(name: impl Into<String>, dimension: usize, params: Vec<f64>, rule: F) -> Self
    where
        F: Fn(&[f64], &[f64], f64, &mut [f64]) + Send + Sync + 'static,
    {
        Self::new(name, SystemKind::DiscreteMap, dimension, params, rule)
    }

    pub fn ode<F>(name: impl Into<String>, dimension: usize, params: Vec<f64>, rule: F) -> Self
    where
        F: Fn(&[f64], &[f64], f64, &mut [f64]) + Send + Sync + 'static,
    {
        Self::new(name, SystemKind::Ode, dimension, params, rule)
    }

    pub fn with_wrapper(mut self, wrapper: Wrapper) -> Result<Self> {
        match wrapper {
            Wrapper::None => {}
            Wrapper::Stroboscopic { period } => {
                self.require_ode("stroboscopic wrapper")?;
                if !(period.is_finite() && period > 0.0) {
                    return Err(Error::Config(format!(
                        "stroboscopic period must be positive, got {period}"
                    )));
                }
            }
            Wrapper::PoincarePlane {
                axis,
                offset,
                max_time,
                ..
            } => {
                self.require_ode("Poincaré wrapper")?;
                if axis >= self.dimension {
                    return Err(Error::Config(format!(
                        "section axis {axis} out of range for dimension {}",
                        self.dimension
                    )));
                }
                if !offset.is_finite() || !(max_time.is_finite() && max_time > 0.0) {
                    return Err(Error::Config(
                        "section offset must be finite and max_time positive".into(),
                    ));
                }
            }
        }
        self.wrapper = wrapper;
        Ok(self)
    }

    pub fn with_projection(mut self, indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Config("projection must keep at least one coordinate".into()));
        }
        for (n, &i) in indices.iter().enumerate() {
            if i >= self.dimension {
                return Err(Error::Config(format!(
                    "projection index {i} out of range for dimension {}",
                    self.dimension
                )));
            }
            if indices[..n].contains(&i) {
                return Err(Error::Config(format!("projection index {i} repeated")));
            }
        }
        self.projection = Some(indices);
        Ok(self)
    }

    /// Full-state template for initial conditions; projected coordinates are
    /// overwritten by the grid point.
    pub fn with_fill(mut self, fill: Vec<f64>) -> Result<Self> {
        if fill.len() != self.dimension {
            return Err(Error::Config(format!(
                "fill has {} values, system dimension is {}",
                fill.len(),
                self.dimension
            )));
        }
        if fill.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("fill values must be finite".into()));
        }
        self.fill = fill;
        Ok(self)
    }

    fn require_ode(&self, what: &str) -> Result<()> {
        if self.kind != SystemKind::Ode {
            return Err(Error::Config(format!("{what} requires a continuous system")));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn wrapper(&self) -> Wrapper {
        self.wrapper
    }

    pub fn projection(&self) -> Option<&[usize]> {
        self.projection.as_deref()
    }

    pub fn fill(&self) -> &[f64] {
        &self.fill
    }

    /// Dimension of the space the grid lives in.
    pub fn observed_dimension(&self) -> usize {
        self.projection.as_ref().map_or(self.dimension, Vec::len)
    }

    #[inline]
    pub fn eval(&self, state: &[f64], t: f64, out: &mut [f64]) {
        (self.rule)(state, &self.params, t, out)
    }

    /// Writes the grid-space view of `state` into `out`.
    #[inline]
    pub fn observe(&self, state: &[f64], out: &mut [f64]) {
        match &self.projection {
            Some(idx) => {
                for (o, &i) in out.iter_mut().zip(idx) {
                    *o = state[i];
                }
            }
            None => out.copy_from_slice(state),
        }
    }

    /// Full initial state for a grid point.
    pub fn initial_state(&self, grid_point: &[f64], out: &mut [f64]) {
        match &self.projection {
            Some(idx) => {
                out.copy_from_slice(&self.fill);
                for (&v, &i) in grid_point.iter().zip(idx) {
                    out[i] = v;
                }
            }
            None => out.copy_from_slice(grid_point),
        }
    }
}

/// Selected coordinates of `state`, in order.
pub fn project(state: &[f64], projection: &[usize]) -> Result<Vec<f64>> {
    projection
        .iter()
        .map(|&i| {
            state.get(i).copied().ok_or_else(|| {
                Error::Contract(format!(
                    "projection index {i} out of range for state of length {}",
                    state.len()
                ))
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Classical fourth-order Runge–Kutta with a fixed step.
    Rk4Fixed,
    /// Dormand–Prince 5(4) with embedded error control.
    Dp5Adaptive,
}

/// Integrator settings. `dt` is the recurrence step for plain flows and the
/// inner step for wrapped ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub method: Method,
    pub dt: f64,
    pub abstol: f64,
    pub reltol: f64,
}

impl StepperConfig {
    pub fn new(method: Method, dt: f64) -> Self {
        StepperConfig {
            method,
            dt,
            abstol: 1e-9,
            reltol: 1e-9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.abstol > 0.0 && self.reltol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Ways a single step can fail. The engine treats all of them as divergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum StepFailure {
    #[error("state became non-finite")]
    NonFinite,
    #[error("no section crossing within the allowed time")]
    NoSectionCrossing,
    #[error("adaptive step size underflow")]
    StepSizeUnderflow,
}

/// Advances `state` by one recurrence step starting at time `t`.
pub fn step(
    system: &SystemDefinition,
    state: &[f64],
    t: f64,
    cfg: &StepperConfig,
) -> std::result::Result<(Vec<f64>, f64), StepFailure> {
    let mut stepper = Stepper::new(system, *cfg);
    stepper.reinit(state, t);
    stepper.step()?;
    Ok((stepper.state().to_vec(), stepper.time()))
}

/// Default sample count of [`auto_dt`].
pub const AUTO_DT_SAMPLES: usize = 5000;

/// Ten times the average time a trajectory needs to cross one cell,
/// estimated from the vector field at pseudo-random cell centers.
pub fn auto_dt(system: &SystemDefinition, grid: &Grid, n_samples: usize, seed: u64) -> Result<f64> {
    if system.kind() != SystemKind::Ode {
        return Err(Error::Config("automatic dt requires a continuous system".into()));
    }
    if grid.dimension() != system.observed_dimension() {
        return Err(Error::Contract(format!(
            "grid dimension {} does not match observed dimension {}",
            grid.dimension(),
            system.observed_dimension()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut point = vec![0.0; grid.dimension()];
    let mut state = vec![0.0; system.dimension()];
    let mut deriv = vec![0.0; system.dimension()];
    let mut total = 0.0;
    let mut used = 0usize;
    for _ in 0..n_samples {
        let cell = rng.gen_range(0..grid.len());
        grid.center_of_linear(cell, &mut point);
        system.initial_state(&point, &mut state);
        system.eval(&state, 0.0, &mut deriv);
        let speed = deriv.iter().map(|v| v * v).sum::<f64>().sqrt();
        if speed.is_finite() && speed >= 1e-12 {
            total += speed;
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::AutoDtFailed(
            "vector field vanishes at every sampled cell; supply dt explicitly".into(),
        ));
    }
    Ok(10.0 * grid.mean_step() / (total / used as f64))
}
