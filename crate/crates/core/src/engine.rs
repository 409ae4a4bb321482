//! Sweeps a grid with the recurrence machine, and the second mode that
//! labels cells by proximity to already known attractors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attractors::AttractorStore;
use crate::dynamics::{auto_dt, Stepper, SystemDefinition, SystemKind, AUTO_DT_SAMPLES};
use crate::error::{Error, Result};
use crate::grid::{CellCode, CellStore, CodeMeaning, Grid};
use crate::machine::{Input, Machine, Transition};
use crate::params::{RecurrenceParams, TimeStep};

/// Label of cells whose trajectory diverged or stayed outside the grid.
pub const DIVERGED: i32 = -1;

/// Order in which initial conditions are visited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepOrder {
    #[default]
    RowMajor,
    Reverse,
}

/// Diagnostics gathered during a sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepWarnings {
    /// Initial conditions cut off by the step cap.
    pub horizon_exceeded: u64,
    /// Initial conditions whose integration failed.
    pub integration_failures: u64,
    /// Locating phases that touched another attractor's cell.
    pub attractor_collisions: u64,
}

#[derive(Debug, Clone)]
pub struct BasinsResult {
    /// Attractor ID per cell (row-major), or [`DIVERGED`].
    pub basins: Vec<i32>,
    pub attractors: AttractorStore,
    pub params: RecurrenceParams,
    /// Recurrence step actually used (1 for maps).
    pub dt: f64,
    /// Total number of recurrence steps over all initial conditions.
    pub iterations_used: u64,
    pub warnings: SweepWarnings,
    /// Final cell codes.
    pub store: CellStore,
}

impl BasinsResult {
    pub fn grid(&self) -> &Grid {
        self.store.grid()
    }

    pub fn attractor_count(&self) -> usize {
        self.attractors.len()
    }
}

/// Resolves the recurrence step: 1 for maps, the fixed value or the
/// automatic estimate for flows.
pub fn resolve_dt(system: &SystemDefinition, grid: &Grid, params: &RecurrenceParams) -> Result<f64> {
    match (system.kind(), params.dt) {
        (SystemKind::DiscreteMap, _) => Ok(1.0),
        (SystemKind::Ode, TimeStep::Fixed(dt)) => Ok(dt),
        (SystemKind::Ode, TimeStep::Auto) => auto_dt(system, grid, AUTO_DT_SAMPLES, params.seed),
    }
}

fn check_dimensions(system: &SystemDefinition, grid: &Grid) -> Result<()> {
    if grid.dimension() != system.observed_dimension() {
        return Err(Error::Config(format!(
            "grid has {} axes but the system is observed in {} dimensions",
            grid.dimension(),
            system.observed_dimension()
        )));
    }
    Ok(())
}

/// Finds the attractors inside `grid` and the basin of every cell.
pub fn basins_of_attraction(
    system: &SystemDefinition,
    grid: &Grid,
    params: &RecurrenceParams,
) -> Result<BasinsResult> {
    Sweep::new(system, grid, params)?.run()
}

/// A configured recurrence sweep.
#[derive(Debug)]
pub struct Sweep<'a> {
    system: &'a SystemDefinition,
    grid: Grid,
    params: RecurrenceParams,
    dt: f64,
    order: SweepOrder,
}

impl<'a> Sweep<'a> {
    pub fn new(system: &'a SystemDefinition, grid: &Grid, params: &RecurrenceParams) -> Result<Self> {
        params.validate()?;
        check_dimensions(system, grid)?;
        let dt = resolve_dt(system, grid, params)?;
        Ok(Sweep {
            system,
            grid: grid.clone(),
            params: *params,
            dt,
            order: SweepOrder::RowMajor,
        })
    }

    pub fn order(mut self, order: SweepOrder) -> Self {
        self.order = order;
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn run(&self) -> Result<BasinsResult> {
        let mut store = CellStore::new(self.grid.clone());
        let mut attractors = AttractorStore::new();
        let mut runner = Runner::new(self.system, &self.params, self.dt);
        let n = self.grid.len();
        let cells: Box<dyn Iterator<Item = usize>> = match self.order {
            SweepOrder::RowMajor => Box::new(0..n),
            SweepOrder::Reverse => Box::new((0..n).rev()),
        };
        for ic in cells {
            if store.get(ic) == CellCode::UNKNOWN {
                runner.run(&mut store, ic, &mut attractors)?;
            }
        }
        let mut warnings = runner.warnings;
        warnings.attractor_collisions = runner.machine.collisions();
        if warnings.horizon_exceeded > 0 {
            log::warn!("sweep finished with warnings: {warnings:?}");
        } else {
            log::info!("sweep finished: {warnings:?}");
        }
        let basins = decode_basins(&store)?;
        Ok(BasinsResult {
            basins,
            attractors,
            params: self.params,
            dt: self.dt,
            iterations_used: runner.iterations,
            warnings,
            store,
        })
    }
}

/// Reusable state for running initial conditions one after another.
struct Runner<'a> {
    system: &'a SystemDefinition,
    params: RecurrenceParams,
    stepper: Stepper<'a>,
    machine: Machine,
    point: Vec<f64>,
    state: Vec<f64>,
    observed: Vec<f64>,
    iterations: u64,
    warnings: SweepWarnings,
}

impl<'a> Runner<'a> {
    fn new(system: &'a SystemDefinition, params: &RecurrenceParams, dt: f64) -> Self {
        Runner {
            system,
            params: *params,
            stepper: Stepper::new(system, params.stepper_config(dt)),
            machine: Machine::new(0),
            point: vec![0.0; system.observed_dimension()],
            state: vec![0.0; system.dimension()],
            observed: vec![0.0; system.observed_dimension()],
            iterations: 0,
            warnings: SweepWarnings::default(),
        }
    }

    fn run(&mut self, store: &mut CellStore, ic: usize, attractors: &mut AttractorStore) -> Result<CellCode> {
        if store.get(ic) != CellCode::UNKNOWN {
            return Err(Error::Contract(format!(
                "initial condition {ic} already labelled {}",
                store.get(ic).0
            )));
        }
        store.grid().center_of_linear(ic, &mut self.point);
        self.system.initial_state(&self.point, &mut self.state);
        self.stepper.reinit(&self.state, 0.0);
        self.machine.reset(ic);
        let mut steps = 0u64;
        loop {
            if steps >= self.params.horizon {
                self.warnings.horizon_exceeded += 1;
                log::debug!("initial condition {ic} hit the horizon of {steps} steps");
                self.iterations += steps;
                return Ok(self.machine.finish(CellCode::DIVERGED, store));
            }
            steps += 1;
            if self.stepper.step().is_err() {
                self.warnings.integration_failures += 1;
                self.iterations += steps;
                return Ok(self.machine.finish(CellCode::DIVERGED, store));
            }
            self.system.observe(self.stepper.state(), &mut self.observed);
            let cell = store.grid().locate(&self.observed);
            let input = Input::observe(store, cell);
            let t = self.machine.step(
                input,
                cell,
                self.stepper.state(),
                store,
                attractors,
                &self.params,
            )?;
            if let Transition::Halt(code) = t {
                self.iterations += steps;
                return Ok(code);
            }
        }
    }
}

/// Runs the machine for one initial condition on an existing store and
/// returns the code left in its cell.
pub fn process_initial_condition(
    system: &SystemDefinition,
    store: &mut CellStore,
    ic: &[usize],
    params: &RecurrenceParams,
    attractors: &mut AttractorStore,
) -> Result<CellCode> {
    params.validate()?;
    check_dimensions(system, store.grid())?;
    let linear = store.grid().linear_index(ic)?;
    let dt = resolve_dt(system, store.grid(), params)?;
    Runner::new(system, params, dt).run(store, linear, attractors)
}

/// Converts a completed cell store into attractor IDs, `-1` for divergence.
pub fn decode_basins(store: &CellStore) -> Result<Vec<i32>> {
    store
        .codes()
        .iter()
        .enumerate()
        .map(|(i, code)| match code.meaning() {
            Ok(CodeMeaning::Attractor(k)) => Ok(k as i32),
            Ok(CodeMeaning::Diverged) => Ok(DIVERGED),
            Ok(CodeMeaning::Unknown) => Err(Error::Consistency(format!(
                "cell {i} was never processed"
            ))),
            Err(e) => Err(e),
        })
        .collect()
}

/// Options of [`refine_with_attractors_opts`].
#[derive(Debug, Clone, Default)]
pub struct RefineOptions {
    /// Region whose exit counts as escaping, e.g. the coarse grid the
    /// attractors were found on. Without it only non-finite states and the
    /// horizon end a trajectory unlabelled.
    pub escape_grid: Option<Grid>,
    /// Worker threads; 0 uses the global pool.
    pub threads: usize,
}

/// Labels every cell of `grid` with the first attractor its trajectory comes
/// within `epsilon` of (Euclidean distance in the full state space).
pub fn refine_with_attractors(
    system: &SystemDefinition,
    grid: &Grid,
    attractors: &AttractorStore,
    epsilon: f64,
    params: &RecurrenceParams,
) -> Result<Vec<i32>> {
    refine_with_attractors_opts(system, grid, attractors, epsilon, params, &RefineOptions::default())
}

pub fn refine_with_attractors_opts(
    system: &SystemDefinition,
    grid: &Grid,
    attractors: &AttractorStore,
    epsilon: f64,
    params: &RecurrenceParams,
    opts: &RefineOptions,
) -> Result<Vec<i32>> {
    if attractors.is_empty() {
        return Err(Error::Config("refinement needs at least one attractor".into()));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    if attractors
        .iter()
        .flat_map(|(_, pts)| pts)
        .any(|p| p.len() != system.dimension())
    {
        return Err(Error::Config(
            "attractor points do not match the system dimension".into(),
        ));
    }
    params.validate()?;
    check_dimensions(system, grid)?;
    if let Some(g) = &opts.escape_grid {
        check_dimensions(system, g)?;
    }
    let dt = resolve_dt(system, grid, params)?;
    let cfg = params.stepper_config(dt);

    let label_cell = |ic: usize| -> i32 {
        let mut stepper = Stepper::new(system, cfg);
        let mut point = vec![0.0; system.observed_dimension()];
        let mut state = vec![0.0; system.dimension()];
        grid.center_of_linear(ic, &mut point);
        system.initial_state(&point, &mut state);
        stepper.reinit(&state, 0.0);
        let mut observed = vec![0.0; system.observed_dimension()];
        let mut lost = 0u32;
        let mut steps = 0u64;
        loop {
            if let Some((id, d)) = attractors.nearest(stepper.state()) {
                if d < epsilon {
                    return id as i32;
                }
            }
            if steps >= params.horizon {
                log::debug!("refinement of cell {ic} hit the horizon");
                return DIVERGED;
            }
            steps += 1;
            if stepper.step().is_err() {
                return DIVERGED;
            }
            if let Some(g) = &opts.escape_grid {
                system.observe(stepper.state(), &mut observed);
                if g.locate(&observed).is_none() {
                    lost += 1;
                    if lost >= params.mx_chk_lost {
                        return DIVERGED;
                    }
                } else {
                    lost = 0;
                }
            }
        }
    };

    let run = || (0..grid.len()).into_par_iter().map(label_cell).collect();
    Ok(with_threads(opts.threads, run))
}

/// Runs `f` inside a dedicated pool of `threads` workers (0 = global pool).
pub(crate) fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    if threads == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
