use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dynamics::{Method, StepperConfig};
use crate::error::{Error, Result};

/// Recurrence time step for continuous systems.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum TimeStep {
    /// Estimated from the vector field, see [`crate::dynamics::auto_dt`].
    #[default]
    Auto,
    Fixed(f64),
}

impl Serialize for TimeStep {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TimeStep::Auto => s.serialize_str("auto"),
            TimeStep::Fixed(dt) => s.serialize_f64(*dt),
        }
    }
}

impl<'de> Deserialize<'de> for TimeStep {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = TimeStep;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive number or \"auto\"")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<TimeStep, E> {
                if v == "auto" {
                    Ok(TimeStep::Auto)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<TimeStep, E> {
                Ok(TimeStep::Fixed(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<TimeStep, E> {
                Ok(TimeStep::Fixed(v as f64))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<TimeStep, E> {
                Ok(TimeStep::Fixed(v as f64))
            }
        }
        d.deserialize_any(V)
    }
}

/// Thresholds of the recurrence state machine plus the integration settings
/// used while sweeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecurrenceParams {
    /// Consecutive hits of the same attractor needed to assign a basin.
    pub mx_chk_att: u32,
    /// Consecutive recurrences on marked cells that declare a new attractor.
    pub mx_chk_fnd_att: u32,
    /// Consecutive attractor cells that end the locating phase.
    pub mx_chk_loc_att: u32,
    /// Consecutive steps outside the grid before giving up.
    pub mx_chk_lost: u32,
    /// Consecutive steps in the same basin needed to adopt it.
    pub mx_chk_hit_bas: u32,
    /// Step cap per initial condition.
    pub horizon: u64,
    pub dt: TimeStep,
    pub method: Method,
    pub abstol: f64,
    pub reltol: f64,
    /// Seed of every pseudo-random choice (currently only the dt sampler).
    pub seed: u64,
}

impl Default for RecurrenceParams {
    fn default() -> Self {
        RecurrenceParams {
            mx_chk_att: 2,
            mx_chk_fnd_att: 100,
            mx_chk_loc_att: 100,
            mx_chk_lost: 20,
            mx_chk_hit_bas: 10,
            horizon: 1_000_000,
            dt: TimeStep::Auto,
            method: Method::Dp5Adaptive,
            abstol: 1e-9,
            reltol: 1e-9,
            seed: 0,
        }
    }
}

impl RecurrenceParams {
    pub fn validate(&self) -> Result<()> {
        let counters = [
            ("mx_chk_att", self.mx_chk_att),
            ("mx_chk_fnd_att", self.mx_chk_fnd_att),
            ("mx_chk_loc_att", self.mx_chk_loc_att),
            ("mx_chk_lost", self.mx_chk_lost),
            ("mx_chk_hit_bas", self.mx_chk_hit_bas),
        ];
        for (name, v) in counters {
            if v < 1 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if self.horizon <= self.mx_chk_fnd_att as u64 + self.mx_chk_loc_att as u64 {
            return Err(Error::Config(
                "horizon must exceed mx_chk_fnd_att + mx_chk_loc_att".into(),
            ));
        }
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::Config(format!("dt must be positive, got {dt}")));
            }
        }
        if !(self.abstol > 0.0 && self.reltol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn stepper_config(&self, dt: f64) -> StepperConfig {
        StepperConfig {
            method: self.method,
            dt,
            abstol: self.abstol,
            reltol: self.reltol,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_table() {
        let p = RecurrenceParams::default();
        assert_eq!(
            (p.mx_chk_att, p.mx_chk_fnd_att, p.mx_chk_loc_att, p.mx_chk_lost, p.mx_chk_hit_bas),
            (2, 100, 100, 20, 10)
        );
        p.validate().unwrap();
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = RecurrenceParams {
            mx_chk_lost: 0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        p.mx_chk_lost = 20;
        p.horizon = 200;
        assert!(p.validate().is_err());
        p.horizon = 201;
        p.validate().unwrap();
        p.dt = TimeStep::Fixed(-1.0);
        assert!(p.validate().is_err());
    }

    #[test]
    fn time_step_serde() {
        let p: RecurrenceParams = serde_json::from_str(r#"{"dt": "auto", "mx_chk_att": 3}"#).unwrap();
        assert_eq!(p.dt, TimeStep::Auto);
        assert_eq!(p.mx_chk_att, 3);
        let p: RecurrenceParams = serde_json::from_str(r#"{"dt": 0.25}"#).unwrap();
        assert_eq!(p.dt, TimeStep::Fixed(0.25));
        assert!(serde_json::from_str::<RecurrenceParams>(r#"{"dt": "soon"}"#).is_err());
        assert!(serde_json::from_str::<RecurrenceParams>(r#"{"bogus": 1}"#).is_err());
        let back: RecurrenceParams =
            serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
    }
}
