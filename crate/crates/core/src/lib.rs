//! Recurrence-based estimation of attractors and their basins of attraction.
//!
//! A grid partitions (a projection of) the state space. Each grid point is
//! evolved under the system; a small state machine watches which cells the
//! trajectory visits, detects recurrences that reveal attractors, and labels
//! the initial condition with the attractor it settles on. Cells labelled
//! earlier are reused so later initial conditions finish quickly.
//!
//! ```
//! use basins_core::{basins_of_attraction, catalog, Grid, RecurrenceParams};
//!
//! let henon = catalog::make_system("henon", &[]).unwrap();
//! let grid = Grid::from_ranges(&[(-2.0, 2.0, 40), (-2.0, 2.0, 40)]).unwrap();
//! let result = basins_of_attraction(&henon, &grid, &RecurrenceParams::default()).unwrap();
//! assert_eq!(result.attractor_count(), 1);
//! ```

pub mod analysis;
pub mod attractors;
pub mod catalog;
pub mod dynamics;
pub mod engine;
pub mod error;
pub mod grid;
pub mod io;
pub mod machine;
pub mod params;

pub use attractors::AttractorStore;
pub use dynamics::{
    auto_dt, project, step, CrossingDirection, Method, StepFailure, Stepper, StepperConfig,
    SystemDefinition, SystemKind, Wrapper,
};
pub use engine::{
    basins_of_attraction, decode_basins, process_initial_condition, refine_with_attractors,
    refine_with_attractors_opts, BasinsResult, RefineOptions, Sweep, SweepOrder, SweepWarnings,
    DIVERGED,
};
pub use error::{Error, Result};
pub use grid::{
    code_of_attractor, code_of_basin, id_of_code, AttractorId, Axis, CellCode, CellStore,
    CodeMeaning, Grid,
};
pub use machine::{Input, Machine, MachineState, Transition};
pub use params::{RecurrenceParams, TimeStep};
