//! Basin fractions and the fixed-point baseline the recurrence method is
//! compared against.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Stepper, SystemDefinition};
use crate::engine::{basins_of_attraction, resolve_dt, with_threads, BasinsResult, DIVERGED};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::params::RecurrenceParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionReport {
    /// Share of cells per label (attractor ID or -1).
    pub fractions: BTreeMap<i32, f64>,
    pub counts: BTreeMap<i32, u64>,
    pub total: u64,
}

impl FractionReport {
    pub fn fraction(&self, label: i32) -> f64 {
        self.fractions.get(&label).copied().unwrap_or(0.0)
    }
}

pub fn basin_fractions(basins: &[i32]) -> Result<FractionReport> {
    if basins.is_empty() {
        return Err(Error::Contract("basin array is empty".into()));
    }
    let mut counts = BTreeMap::new();
    for &b in basins {
        *counts.entry(b).or_insert(0u64) += 1;
    }
    let total = basins.len() as u64;
    let fractions = counts
        .iter()
        .map(|(&k, &c)| (k, c as f64 / total as f64))
        .collect();
    Ok(FractionReport {
        fractions,
        counts,
        total,
    })
}

/// Convergence test of the baseline method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NaiveSettings {
    /// Norm of the vector field below which the state counts as at rest.
    pub speed_tol: f64,
    /// Distance to a fixed point (full state space) that counts as arrival.
    pub pos_tol: f64,
    /// Integration time after which a cell is labelled -1.
    pub max_time: f64,
    /// Worker threads; 0 uses the global pool.
    pub threads: usize,
}

impl Default for NaiveSettings {
    fn default() -> Self {
        NaiveSettings {
            speed_tol: 1e-3,
            pos_tol: 0.1,
            max_time: 1000.0,
            threads: 0,
        }
    }
}

impl NaiveSettings {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("speed_tol", self.speed_tol),
            ("pos_tol", self.pos_tol),
            ("max_time", self.max_time),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Integrates every cell centre until it comes to rest near one of
/// `fixed_points`, labelled by 1-based index into that list.
pub fn naive_basins_fixed_points(
    system: &SystemDefinition,
    grid: &Grid,
    fixed_points: &[Vec<f64>],
    params: &RecurrenceParams,
    settings: &NaiveSettings,
) -> Result<Vec<i32>> {
    if fixed_points.is_empty() {
        return Err(Error::Config("the baseline needs at least one fixed point".into()));
    }
    if fixed_points.iter().any(|p| p.len() != system.dimension()) {
        return Err(Error::Config(format!(
            "fixed points must have {} coordinates",
            system.dimension()
        )));
    }
    if grid.dimension() != system.observed_dimension() {
        return Err(Error::Config("grid and system dimensions differ".into()));
    }
    settings.validate()?;
    params.validate()?;
    let dt = resolve_dt(system, grid, params)?;
    let cfg = params.stepper_config(dt);
    let speed_tol2 = settings.speed_tol * settings.speed_tol;
    let pos_tol2 = settings.pos_tol * settings.pos_tol;

    let label_cell = |ic: usize| -> i32 {
        let mut point = vec![0.0; system.observed_dimension()];
        let mut state = vec![0.0; system.dimension()];
        let mut deriv = vec![0.0; system.dimension()];
        grid.center_of_linear(ic, &mut point);
        system.initial_state(&point, &mut state);
        let mut stepper = Stepper::new(system, cfg);
        stepper.reinit(&state, 0.0);
        while stepper.time() < settings.max_time {
            if stepper.step().is_err() {
                return DIVERGED;
            }
            let s = stepper.state();
            system.eval(s, stepper.time(), &mut deriv);
            if deriv.iter().map(|v| v * v).sum::<f64>() >= speed_tol2 {
                continue;
            }
            let hit = fixed_points.iter().position(|fp| {
                fp.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() < pos_tol2
            });
            if let Some(i) = hit {
                return i as i32 + 1;
            }
        }
        DIVERGED
    };

    let run = || (0..grid.len()).into_par_iter().map(label_cell).collect();
    Ok(with_threads(settings.threads, run))
}

/// Share of positions where both arrays hold the same label.
pub fn label_agreement(a: &[i32], b: &[i32]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Contract(format!(
            "cannot compare label arrays of lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let same = a.iter().zip(b).filter(|(x, y)| x == y).count();
    Ok(same as f64 / a.len() as f64)
}

/// Maps every attractor ID of a recurrence run to the 1-based index of the
/// fixed point closest to any of its points; -1 stays -1.
pub fn relabel_by_fixed_points(result: &BasinsResult, fixed_points: &[Vec<f64>]) -> Vec<i32> {
    let mut map = BTreeMap::new();
    for (id, pts) in result.attractors.iter() {
        let mut best = (f64::INFINITY, DIVERGED);
        for (i, fp) in fixed_points.iter().enumerate() {
            for p in pts {
                let d: f64 = fp.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum();
                if d < best.0 {
                    best = (d, i as i32 + 1);
                }
            }
        }
        map.insert(id as i32, best.1);
    }
    result
        .basins
        .iter()
        .map(|b| map.get(b).copied().unwrap_or(DIVERGED))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchMethod {
    Recurrence,
    Naive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub method: BenchMethod,
    pub wall_time_s: f64,
    pub grid_size: usize,
    /// Share of cells on which the two methods agree.
    pub agreement: f64,
}

/// Runs both methods on `grid`. The recurrence timing includes finding the
/// attractors; the baseline is handed the fixed points.
pub fn benchmark_compare(
    system: &SystemDefinition,
    grid: &Grid,
    params: &RecurrenceParams,
    fixed_points: &[Vec<f64>],
    settings: &NaiveSettings,
) -> Result<(BenchmarkReport, BenchmarkReport)> {
    let start = Instant::now();
    let rec = basins_of_attraction(system, grid, params)?;
    let rec_time = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let naive = naive_basins_fixed_points(system, grid, fixed_points, params, settings)?;
    let naive_time = start.elapsed().as_secs_f64();

    let agreement = label_agreement(&relabel_by_fixed_points(&rec, fixed_points), &naive)?;
    let report = |method, wall_time_s| BenchmarkReport {
        method,
        wall_time_s,
        grid_size: grid.len(),
        agreement,
    };
    Ok((
        report(BenchMethod::Recurrence, rec_time),
        report(BenchMethod::Naive, naive_time),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_from_counts() {
        let r = basin_fractions(&[1, 1, 2, -1]).unwrap();
        assert_eq!(r.total, 4);
        assert_eq!(r.fraction(1), 0.5);
        assert_eq!(r.fraction(-1), 0.25);
        assert_eq!(r.fraction(7), 0.0);
        assert_eq!(r.counts[&2], 1);
        assert!(basin_fractions(&[]).is_err());
    }

    #[test]
    fn agreement() {
        assert_eq!(label_agreement(&[1, 2, 3, -1], &[1, 2, 1, -1]).unwrap(), 0.75);
        assert!(label_agreement(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn naive_on_damped_oscillator() {
        // x'' = -x - x'; every start converges to the origin
        let sys = SystemDefinition::ode("damped", 2, vec![], |u, _, _, du| {
            du[0] = u[1];
            du[1] = -u[0] - u[1];
        });
        let grid = Grid::from_ranges(&[(-1.0, 1.0, 5), (-1.0, 1.0, 5)]).unwrap();
        let params = RecurrenceParams {
            dt: crate::params::TimeStep::Fixed(0.1),
            ..Default::default()
        };
        let labels =
            naive_basins_fixed_points(&sys, &grid, &[vec![0.0, 0.0]], &params, &NaiveSettings::default())
                .unwrap();
        assert!(labels.iter().all(|&l| l == 1));

        let far = vec![vec![5.0, 0.0]];
        let short = NaiveSettings {
            max_time: 20.0,
            ..Default::default()
        };
        let labels = naive_basins_fixed_points(&sys, &grid, &far, &params, &short).unwrap();
        assert!(labels.iter().all(|&l| l == DIVERGED));
        assert!(naive_basins_fixed_points(&sys, &grid, &[], &params, &short).is_err());
    }
}
