//! Built-in systems and the scenarios used to exercise them.
//!
//! Parameter defaults are the published reference values. Scenario grids that
//! come from the reference runs are marked [`GridSource::Reference`]; the
//! others were chosen for this crate and are marked as such in every output.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use crate::dynamics::{CrossingDirection, Method, SystemDefinition, Wrapper};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::params::{RecurrenceParams, TimeStep};

type Builder = fn(&[f64]) -> Result<SystemDefinition>;

/// A named system with its parameter table.
#[derive(Debug, Clone, Copy)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    /// Parameter names and default values, in rule order.
    pub params: &'static [(&'static str, f64)],
    build: Builder,
}

impl CatalogEntry {
    pub fn defaults(&self) -> Vec<f64> {
        self.params.iter().map(|&(_, v)| v).collect()
    }

    pub fn build(&self, overrides: &[(&str, f64)]) -> Result<SystemDefinition> {
        let mut values = self.defaults();
        for &(key, value) in overrides {
            let slot = self
                .params
                .iter()
                .position(|&(name, _)| name == key)
                .ok_or_else(|| {
                    Error::Config(format!(
                        "unknown parameter `{key}` for {}; valid parameters: {}",
                        self.name,
                        self.params.iter().map(|p| p.0).collect::<Vec<_>>().join(", ")
                    ))
                })?;
            if !value.is_finite() {
                return Err(Error::Config(format!("parameter `{key}` must be finite")));
            }
            values[slot] = value;
        }
        (self.build)(&values)
    }
}

static ENTRIES: &[CatalogEntry] = &[
    CatalogEntry {
        name: "henon",
        description: "Hénon map: chaotic attractor with orbits escaping to infinity",
        params: &[("a", 1.4), ("b", 0.3)],
        build: henon,
    },
    CatalogEntry {
        name: "duffing",
        description: "forced Duffing oscillator sampled once per forcing period",
        params: &[("omega", 1.0), ("f", 0.2), ("d", 0.15), ("beta", -1.0)],
        build: duffing,
    },
    CatalogEntry {
        name: "magnetic_pendulum",
        description: "damped pendulum over N magnets on the unit circle, observed in (x, y)",
        params: &[("alpha", 0.2), ("omega", 1.0), ("d", 0.3), ("n", 3.0)],
        build: magnetic_pendulum,
    },
    CatalogEntry {
        name: "thomas",
        description: "Thomas cyclically symmetric flow on the Poincaré section z = 0",
        params: &[("b", 0.1665)],
        build: thomas,
    },
    CatalogEntry {
        name: "lorenz84",
        description: "Lorenz-84 flow with a fixed point, a limit cycle and a chaotic attractor",
        params: &[("F", 6.886), ("G", 1.347), ("a", 0.255), ("b", 4.0)],
        build: lorenz84,
    },
    CatalogEntry {
        name: "coupled_logistic",
        description: "D nonlinearly coupled logistic maps with many coexisting attractors",
        params: &[("D", 4.0), ("lambda", 1.2), ("k", 0.08)],
        build: coupled_logistic,
    },
    CatalogEntry {
        name: "lorenz96ebm",
        description: "Lorenz-96 ring coupled to a zero-dimensional energy balance model",
        params: &[
            ("N", 5.0),
            ("F", 8.0),
            ("S", 8.0),
            ("a0", 0.5),
            ("a1", 0.4),
            ("Tbar", 270.0),
            ("DeltaT", 60.0),
            ("alpha", 2.0),
            ("beta", 1.0),
            ("sigma", 1.0 / 180.0),
        ],
        build: lorenz96ebm,
    },
];

pub fn entries() -> &'static [CatalogEntry] {
    ENTRIES
}

pub fn names() -> impl Iterator<Item = &'static str> {
    ENTRIES.iter().map(|e| e.name)
}

pub fn entry(name: &str) -> Result<&'static CatalogEntry> {
    ENTRIES.iter().find(|e| e.name == name).ok_or_else(|| {
        Error::Config(format!(
            "unknown system `{name}`; available: {}",
            names().collect::<Vec<_>>().join(", ")
        ))
    })
}

/// Builds a catalog system, overriding any subset of its parameters.
pub fn make_system(name: &str, overrides: &[(&str, f64)]) -> Result<SystemDefinition> {
    entry(name)?.build(overrides)
}

fn integer_param(name: &str, v: f64, min: usize) -> Result<usize> {
    if v.fract() != 0.0 || v < min as f64 || v > 1e6 {
        return Err(Error::Config(format!(
            "parameter `{name}` must be an integer >= {min}, got {v}"
        )));
    }
    Ok(v as usize)
}

fn henon(p: &[f64]) -> Result<SystemDefinition> {
    Ok(SystemDefinition::discrete("henon", 2, p.to_vec(), |u, p, _, out| {
        let (a, b) = (p[0], p[1]);
        out[0] = 1.0 - a * u[0] * u[0] + u[1];
        out[1] = b * u[0];
    }))
}

fn duffing(p: &[f64]) -> Result<SystemDefinition> {
    let omega = p[0];
    if omega <= 0.0 {
        return Err(Error::Config("duffing omega must be positive".into()));
    }
    // state (x, dx/dt); x'' + d x' + beta x + x^3 = f cos(omega t)
    SystemDefinition::ode("duffing", 2, p.to_vec(), |u, p, t, du| {
        let (omega, f, d, beta) = (p[0], p[1], p[2], p[3]);
        du[0] = u[1];
        du[1] = f * (omega * t).cos() - d * u[1] - beta * u[0] - u[0] * u[0] * u[0];
    })
    .with_wrapper(Wrapper::Stroboscopic {
        period: TAU / omega,
    })
}

/// Magnet positions: equispaced on the unit circle, the first on the +y axis.
pub fn magnet_positions(n: usize) -> Vec<[f64; 2]> {
    (0..n)
        .map(|i| {
            let theta = FRAC_PI_2 + TAU * i as f64 / n as f64;
            [theta.cos(), theta.sin()]
        })
        .collect()
}

fn magnetic_pendulum(p: &[f64]) -> Result<SystemDefinition> {
    let n = integer_param("n", p[3], 1)?;
    let magnets = magnet_positions(n);
    SystemDefinition::ode("magnetic_pendulum", 4, p.to_vec(), move |u, p, _, du| {
        let (alpha, omega, d) = (p[0], p[1], p[2]);
        let (x, y, vx, vy) = (u[0], u[1], u[2], u[3]);
        let w2 = omega * omega;
        let mut ax = -w2 * x - alpha * vx;
        let mut ay = -w2 * y - alpha * vy;
        for m in &magnets {
            let (dx, dy) = (x - m[0], y - m[1]);
            let dist = (dx * dx + dy * dy + d * d).sqrt();
            let inv3 = 1.0 / (dist * dist * dist);
            ax -= dx * inv3;
            ay -= dy * inv3;
        }
        du[0] = vx;
        du[1] = vy;
        du[2] = ax;
        du[3] = ay;
    })
    .with_projection(vec![0, 1])
}

fn thomas(p: &[f64]) -> Result<SystemDefinition> {
    SystemDefinition::ode("thomas", 3, p.to_vec(), |u, p, _, du| {
        let b = p[0];
        du[0] = u[1].sin() - b * u[0];
        du[1] = u[2].sin() - b * u[1];
        du[2] = u[0].sin() - b * u[2];
    })
    .with_wrapper(Wrapper::PoincarePlane {
        axis: 2,
        offset: 0.0,
        direction: CrossingDirection::Positive,
        max_time: 1000.0,
    })?
    .with_projection(vec![0, 1])
}

fn lorenz84(p: &[f64]) -> Result<SystemDefinition> {
    Ok(SystemDefinition::ode("lorenz84", 3, p.to_vec(), |u, p, _, du| {
        let (f, g, a, b) = (p[0], p[1], p[2], p[3]);
        let (x, y, z) = (u[0], u[1], u[2]);
        du[0] = -y * y - z * z - a * x + a * f;
        du[1] = x * y - y - b * x * z + g;
        du[2] = b * x * y + x * z - z;
    }))
}

fn coupled_logistic(p: &[f64]) -> Result<SystemDefinition> {
    let dim = integer_param("D", p[0], 1)?;
    Ok(SystemDefinition::discrete("coupled_logistic", dim, p.to_vec(), |u, p, _, out| {
        let (lambda, k) = (p[1], p[2]);
        let n = u.len() as f64;
        let sum_sq: f64 = u.iter().map(|v| v * v).sum();
        for (o, &ui) in out.iter_mut().zip(u) {
            let sq = ui * ui;
            // sum over j != i of (u_j^2 - u_i^2)
            let coupling = sum_sq - n * sq;
            *o = lambda - sq + k * coupling;
        }
    }))
}

/// Mean kinetic energy `(1/2N) Σ x_i²` of the Lorenz-96 ring.
pub fn lorenz96_energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / (2.0 * x.len() as f64)
}

fn lorenz96ebm(p: &[f64]) -> Result<SystemDefinition> {
    let n = integer_param("N", p[0], 4)?;
    Ok(SystemDefinition::ode("lorenz96ebm", n + 1, p.to_vec(), move |u, p, _, du| {
        let (f, s, a0, a1, tbar, delta_t, alpha, beta, sigma) =
            (p[1], p[2], p[3], p[4], p[5], p[6], p[7], p[8], p[9]);
        let x = &u[..n];
        let temp = u[n];
        let forcing = f * (1.0 + beta * (temp - tbar) / delta_t);
        for i in 0..n {
            let next = x[(i + 1) % n];
            let prev = x[(i + n - 1) % n];
            let prev2 = x[(i + n - 2) % n];
            du[i] = (next - prev2) * prev - x[i] + forcing;
        }
        let energy = lorenz96_energy(x);
        du[n] = s * (1.0 - a0 + 0.5 * a1 * (temp - tbar).tanh())
            - (sigma * temp).powi(4)
            - alpha * (energy / (0.6 * f.powf(1.33)) - 1.0);
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSource {
    /// Grid taken from the published reference run.
    Reference,
    /// Grid chosen for this crate; no published counterpart.
    ImplementationChosen,
}

/// A ready-to-run configuration for one catalog system.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub system: &'static str,
    pub grid: Grid,
    pub params: RecurrenceParams,
    pub grid_source: GridSource,
    pub notes: &'static str,
}

fn cube(lo: f64, hi: f64, len: usize, dims: usize) -> Vec<(f64, f64, usize)> {
    vec![(lo, hi, len); dims]
}

pub fn default_scenario(name: &str) -> Result<Scenario> {
    let base = RecurrenceParams::default();
    let (ranges, params, grid_source, notes) = match entry(name)?.name {
        "henon" => (
            cube(-2.0, 2.0, 200, 2),
            base,
            GridSource::ImplementationChosen,
            "square window around the chaotic attractor; escaping orbits are labelled -1",
        ),
        "duffing" => (
            cube(-2.2, 2.2, 100, 2),
            RecurrenceParams {
                dt: TimeStep::Fixed(0.05),
                ..base
            },
            GridSource::ImplementationChosen,
            "state (x, dx/dt) sampled at forcing phase 0; dt is the inner integration step",
        ),
        "magnetic_pendulum" => (
            cube(-3.0, 3.0, 150, 2),
            RecurrenceParams {
                dt: TimeStep::Fixed(0.5),
                ..base
            },
            GridSource::ImplementationChosen,
            "positions on the grid, velocities start at 0; the automatic dt (about 0.13) \
             mislabels part of the fractal boundary",
        ),
        "thomas" => (
            cube(-6.0, 6.0, 100, 2),
            RecurrenceParams {
                dt: TimeStep::Fixed(0.1),
                ..base
            },
            GridSource::ImplementationChosen,
            "section z = 0 crossed upwards; dt is the inner integration step",
        ),
        "lorenz84" => (
            vec![(-1.0, 3.0, 100), (-2.0, 3.0, 100), (-2.0, 2.5, 100)],
            RecurrenceParams {
                dt: TimeStep::Fixed(0.2),
                method: Method::Dp5Adaptive,
                abstol: 1e-9,
                reltol: 1e-9,
                ..base
            },
            GridSource::Reference,
            "reference 100^3 grid, adaptive solver at 1e-9 tolerances; with the automatic dt \
             (about 0.04) attractors are found more than once",
        ),
        "coupled_logistic" => {
            let half = (1.0f64 + 1.2).sqrt();
            (
                cube(-half, half, 16, 4),
                base,
                GridSource::ImplementationChosen,
                "box [-sqrt(2.2), sqrt(2.2)]^4; grid points with equal coordinates stay on \
                 symmetric orbits that are unstable off the diagonal, and some of those are \
                 reported as attractors",
            )
        }
        "lorenz96ebm" => {
            // staggered ring axes keep grid points off the invariant subspace
            // x_1 = ... = x_N, where an unstable symmetric equilibrium would
            // otherwise show up as an attractor
            let mut r: Vec<_> = (0..5)
                .map(|i| (-8.0 + 0.25 * i as f64, 15.0 + 0.25 * i as f64, 10))
                .collect();
            r.push((230.0, 300.0, 101));
            (
                r,
                base,
                GridSource::ImplementationChosen,
                "coarse staggered ring variables, dense temperature axis",
            )
        }
        other => unreachable!("catalog entry {other} has no scenario"),
    };
    Ok(Scenario {
        system: entry(name)?.name,
        grid: Grid::from_ranges(&ranges)?,
        params,
        grid_source,
        notes,
    })
}
