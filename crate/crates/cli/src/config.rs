use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use basins_core::analysis::NaiveSettings;
use basins_core::catalog::{self, GridSource};
use basins_core::{Axis, Error, Grid, RecurrenceParams, SystemDefinition, Wrapper};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// One reproducible run, read from a JSON file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: String,
    /// Overrides of the system parameters by name.
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// Grid axes; the system's default scenario grid when absent.
    #[serde(default)]
    pub grid: Option<Vec<Axis>>,
    /// Overrides of the scenario's recurrence and integrator settings.
    #[serde(default)]
    pub recurrence: Option<serde_json::Map<String, Value>>,
    #[serde(default)]
    pub wrapper: Option<Wrapper>,
    #[serde(default)]
    pub projection: Option<Vec<usize>>,
    /// Full initial state template; projected coordinates come from the grid.
    #[serde(default)]
    pub fill: Option<Vec<f64>>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mode {
    #[default]
    Recurrence,
    Refine {
        /// attractors.csv of an earlier run.
        attractors: PathBuf,
        /// Distance threshold; defaults to the largest step of the grid the
        /// attractors were found on.
        #[serde(default)]
        epsilon: Option<f64>,
    },
    Naive {
        /// Fixed points in the full state space; defaults exist for the
        /// magnetic pendulum.
        #[serde(default)]
        fixed_points: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        settings: NaiveSettings,
    },
}

/// A validated configuration with everything resolved.
pub struct Resolved {
    pub config: RunConfig,
    pub system: SystemDefinition,
    pub system_params: BTreeMap<String, f64>,
    pub grid: Grid,
    pub params: RecurrenceParams,
    pub grid_source: GridSource,
    /// Directory relative paths inside the config are resolved against.
    pub base_dir: PathBuf,
}

pub fn load(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let config: RunConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(config)
}

impl RunConfig {
    pub fn resolve(self, config_path: &Path, seed: Option<u64>) -> Result<Resolved> {
        let scenario = catalog::default_scenario(&self.system)?;
        let entry = catalog::entry(&self.system)?;
        let overrides: Vec<(&str, f64)> = self.params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        let mut system = entry.build(&overrides)?;
        let system_params = entry
            .params
            .iter()
            .zip(system.params())
            .map(|(&(name, _), &v)| (name.to_string(), v))
            .collect();

        if let Some(w) = self.wrapper {
            system = system.with_wrapper(w)?;
        }
        if let Some(p) = &self.projection {
            system = system.with_projection(p.clone())?;
        }
        if let Some(f) = &self.fill {
            system = system.with_fill(f.clone())?;
        }

        let (grid, grid_source) = match &self.grid {
            Some(axes) => (Grid::new(axes.clone())?, GridSource::ImplementationChosen),
            None => (scenario.grid.clone(), scenario.grid_source),
        };
        if grid.dimension() != system.observed_dimension() {
            bail!(Error::Config(format!(
                "grid: {} axes given but {} observes {} coordinates",
                grid.dimension(),
                system.name(),
                system.observed_dimension()
            )));
        }

        let mut params = scenario.params;
        if let Some(over) = &self.recurrence {
            let mut merged = serde_json::to_value(params)?;
            let obj = merged.as_object_mut().expect("params serialize to an object");
            for (k, v) in over {
                obj.insert(k.clone(), v.clone());
            }
            params = serde_json::from_value(merged)
                .map_err(|e| Error::Config(format!("recurrence: {e}")))?;
        }
        if let Some(s) = seed.or(self.seed) {
            params.seed = s;
        }
        params
            .validate()
            .map_err(|e| Error::Config(format!("recurrence: {e}")))?;

        if let Mode::Refine {
            epsilon: Some(eps), ..
        } = &self.mode
        {
            if !(eps.is_finite() && *eps > 0.0) {
                bail!(Error::Config(format!("mode.epsilon must be positive, got {eps}")));
            }
        }
        if let Mode::Naive { settings, .. } = &self.mode {
            settings
                .validate()
                .map_err(|e| Error::Config(format!("mode.settings: {e}")))?;
        }

        let base_dir = config_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        Ok(Resolved {
            config: self,
            system,
            system_params,
            grid,
            params,
            grid_source,
            base_dir,
        })
    }
}

impl Resolved {
    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Fixed points for the baseline: the configured ones, or the magnet
    /// positions at rest for the magnetic pendulum.
    pub fn fixed_points(&self) -> Result<Vec<Vec<f64>>> {
        if let Mode::Naive {
            fixed_points: Some(fp),
            ..
        } = &self.config.mode
        {
            return Ok(fp.clone());
        }
        if self.config.system == "magnetic_pendulum" {
            let n = self.system.params()[3] as usize;
            return Ok(catalog::magnet_positions(n)
                .into_iter()
                .map(|m| vec![m[0], m[1], 0.0, 0.0])
                .collect());
        }
        bail!(Error::Config(format!(
            "mode.fixed_points is required for {}",
            self.config.system
        )))
    }

    pub fn naive_settings(&self) -> NaiveSettings {
        match &self.config.mode {
            Mode::Naive { settings, .. } => *settings,
            _ => NaiveSettings::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Resolved> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.resolve(Path::new("dir/config.json"), None)
    }

    #[test]
    fn defaults_come_from_the_scenario() {
        let r = parse(r#"{"system": "lorenz84"}"#).unwrap();
        assert_eq!(r.grid.shape(), vec![100, 100, 100]);
        assert_eq!(r.grid_source, GridSource::Reference);
        assert_eq!(r.system_params["F"], 6.886);
        assert_eq!(r.resolve_path(Path::new("a.csv")), PathBuf::from("dir/a.csv"));
    }

    #[test]
    fn overrides_merge() {
        let r = parse(
            r#"{"system": "henon", "params": {"a": 1.2},
                "grid": [{"min": -1, "max": 1, "len": 5}, {"min": -1, "max": 1, "len": 7}],
                "recurrence": {"mx_chk_att": 4}, "seed": 9}"#,
        )
        .unwrap();
        assert_eq!(r.system.params(), &[1.2, 0.3]);
        assert_eq!(r.params.mx_chk_att, 4);
        assert_eq!(r.params.mx_chk_fnd_att, 100);
        assert_eq!(r.params.seed, 9);
        assert_eq!(r.grid.len(), 35);
    }

    #[test]
    fn invalid_configs() {
        for text in [
            r#"{"system": "henon", "bogus": 1}"#,
            r#"{"system": "nope"}"#,
            r#"{"system": "henon", "params": {"q": 1}}"#,
            r#"{"system": "henon", "grid": [{"min": -1, "max": 1, "len": 1}, {"min": -1, "max": 1, "len": 3}]}"#,
            r#"{"system": "henon", "grid": [{"min": -1, "max": 1, "len": 3}]}"#,
            r#"{"system": "henon", "recurrence": {"mx_chk_lost": 0}}"#,
            r#"{"system": "henon", "recurrence": {"typo": 0}}"#,
            r#"{"system": "henon", "mode": {"type": "refine", "attractors": "a.csv", "epsilon": -1}}"#,
        ] {
            let err = parse(text).err().unwrap_or_else(|| panic!("accepted {text}"));
            assert!(
                matches!(err.downcast_ref::<Error>(), Some(Error::Config(_))),
                "{text}: {err}"
            );
        }
    }

    #[test]
    fn pendulum_fixed_points_default() {
        let r = parse(r#"{"system": "magnetic_pendulum"}"#).unwrap();
        let fp = r.fixed_points().unwrap();
        assert_eq!(fp.len(), 3);
        let m = catalog::magnet_positions(3)[0];
        assert_eq!(fp[0], vec![m[0], m[1], 0.0, 0.0]);
        assert!(parse(r#"{"system": "henon"}"#).unwrap().fixed_points().is_err());
    }

    #[test]
    fn shipped_configs_resolve() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        let mut n = 0;
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            let cfg = load(&path).unwrap();
            cfg.resolve(&path, None)
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
        assert!(n >= 5);
    }
}
