use basins_core::analysis::basin_fractions;
use basins_core::catalog;
use basins_core::{
    basins_of_attraction, process_initial_condition, refine_with_attractors, AttractorStore, CellCode,
    CellStore, Error, Grid, RecurrenceParams, SystemDefinition,
};

fn scenario(name: &str, len: usize) -> (SystemDefinition, Grid, RecurrenceParams) {
    let s = catalog::default_scenario(name).unwrap();
    let ranges: Vec<_> = s.grid.axes().iter().map(|a| (a.min, a.max, len)).collect();
    (
        catalog::make_system(name, &[]).unwrap(),
        Grid::from_ranges(&ranges).unwrap(),
        s.params,
    )
}

#[test]
fn duffing_is_bistable() {
    let (sys, grid, params) = scenario("duffing", 40);
    let res = basins_of_attraction(&sys, &grid, &params).unwrap();
    assert_eq!(res.attractor_count(), 2);
    let rep = basin_fractions(&res.basins).unwrap();
    assert_eq!(rep.fraction(-1), 0.0);
    // the two wells are mirror images under (x, v) -> (-x, -v) shifted by half a period
    assert!((rep.fraction(1) - 0.5).abs() < 0.15, "{:?}", rep.fractions);
}

#[test]
fn thomas_section_has_three_periodic_orbits() {
    let (sys, grid, params) = scenario("thomas", 40);
    let res = basins_of_attraction(&sys, &grid, &params).unwrap();
    assert_eq!(res.attractor_count(), 3);
    assert!(res.basins.iter().all(|&b| b >= 1));
}

#[test]
fn henon_window_has_one_attractor_and_escapes() {
    let (sys, grid, params) = scenario("henon", 80);
    let res = basins_of_attraction(&sys, &grid, &params).unwrap();
    assert_eq!(res.attractor_count(), 1);
    let rep = basin_fractions(&res.basins).unwrap();
    assert!(rep.fraction(-1) > 0.3 && rep.fraction(1) > 0.2, "{:?}", rep.fractions);
    assert_eq!(res.warnings.horizon_exceeded, 0);
}

#[test]
fn single_initial_condition_on_a_shared_store() {
    let (sys, grid, params) = scenario("magnetic_pendulum", 30);
    let mut store = CellStore::new(grid.clone());
    let mut atts = AttractorStore::new();
    let code = process_initial_condition(&sys, &mut store, &[3, 20], &params, &mut atts).unwrap();
    assert!(code.is_basin() || code.is_attractor());
    assert_eq!(atts.len(), 1);
    assert_eq!(store.count_code(CellCode::MARKED), 0);

    // a cell that already holds a label is not an unknown initial condition
    let first = grid.linear_index(&[3, 20]).unwrap();
    assert_eq!(store.get(first), code);
    let again = process_initial_condition(&sys, &mut store, &[3, 20], &params, &mut atts);
    assert!(matches!(again, Err(Error::Contract(_))), "{again:?}");
}

#[test]
fn refined_zoom_without_attractors_is_fully_labelled() {
    let (sys, coarse, params) = scenario("magnetic_pendulum", 40);
    let res = basins_of_attraction(&sys, &coarse, &params).unwrap();
    assert_eq!(res.attractor_count(), 3);
    // a window between the magnets, far from every rest point
    let zoom = Grid::from_ranges(&[(1.5, 1.7, 12), (0.4, 0.6, 12)]).unwrap();
    let labels = refine_with_attractors(&sys, &zoom, &res.attractors, coarse.max_step(), &params).unwrap();
    assert!(labels.iter().all(|l| (1..=3).contains(l)), "{labels:?}");
}
