//! Workloads shared by the criterion benches.

use basins_core::catalog;
use basins_core::{Grid, RecurrenceParams, SystemDefinition};

/// A catalog system on its default scenario axes, resampled to `len`
/// points per axis.
pub struct Workload {
    pub system: SystemDefinition,
    pub grid: Grid,
    pub params: RecurrenceParams,
}

impl Workload {
    pub fn new(name: &str, len: usize) -> Workload {
        let scenario = catalog::default_scenario(name).expect("catalog name");
        let ranges: Vec<_> = scenario
            .grid
            .axes()
            .iter()
            .map(|a| (a.min, a.max, len))
            .collect();
        Workload {
            system: catalog::make_system(name, &[]).expect("default parameters"),
            grid: Grid::from_ranges(&ranges).expect("scenario axes"),
            params: scenario.params,
        }
    }
}

/// Pendulum rest points next to the magnets, in the full state space.
pub fn pendulum_rest_points() -> Vec<Vec<f64>> {
    catalog::magnet_positions(3)
        .into_iter()
        .map(|m| vec![m[0], m[1], 0.0, 0.0])
        .collect()
}
