//! Scenario files.
//!
//! Scenarios are TOML documents with strict validation: unknown keys are
//! rejected at every level. A minimal ITM scenario:
//!
//! ```toml
//! t_end = 6.0
//! initial_output = -0.15
//!
//! [params]
//! kp = 1.0
//! ki = 20.0
//! w_min = -1.0
//! w_max = 1.0
//!
//! [signal]
//! kind = "triangular-ramp"
//! u0 = 0.0005
//! t_down = 2.0
//! t_up = 6.0
//! slope = 1.0
//!
//! [solver]
//! method = "itm"
//! epsilon = 1e-3
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PiParams;
use crate::signal::SignalSpec;
use crate::step::{ItmSettings, Method};

/// Integration method and its step-size settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum SolverConfig {
    Epm(FixedStep),
    Elm(FixedStep),
    Itm(ItmSettings),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedStep {
    pub h: f64,
}

impl SolverConfig {
    pub fn method(&self) -> Method {
        match self {
            SolverConfig::Epm(_) => Method::Epm,
            SolverConfig::Elm(_) => Method::Elm,
            SolverConfig::Itm(_) => Method::Itm,
        }
    }

    /// Fixed step for the explicit methods, initial step for ITM.
    pub fn nominal_step(&self) -> f64 {
        match self {
            SolverConfig::Epm(f) | SolverConfig::Elm(f) => f.h,
            SolverConfig::Itm(s) => s.h_init,
        }
    }
}

/// Knobs for the predictors and detectors run alongside a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Horizon, in steps, of the chattering-stop condition.
    pub k_max: usize,
    /// Input at which the deadlock bounds are evaluated. When absent the
    /// input at the first simulated deadlock onset is used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_ref: Option<f64>,
    pub chatter_window: usize,
    pub chatter_min_toggles: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { k_max: 10, u_ref: None, chatter_window: 10, chatter_min_toggles: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub t_start: f64,
    pub t_end: f64,
    /// Pre-limit output `y` at `t_start`; fixes the initial integrator value.
    pub initial_output: f64,
    pub params: PiParams,
    pub signal: SignalSpec,
    pub solver: SolverConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

impl ScenarioConfig {
    pub fn method(&self) -> Method {
        self.solver.method()
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.signal.validate()?;
        match &self.solver {
            SolverConfig::Epm(f) | SolverConfig::Elm(f) => {
                if !(f.h.is_finite() && f.h > 0.0) {
                    return Err(Error::InvalidSettings(format!("step size h must be > 0, got {}", f.h)));
                }
            }
            SolverConfig::Itm(s) => s.validate()?,
        }
        if !(self.t_start.is_finite() && self.t_start >= 0.0) {
            return Err(Error::InvalidScenario(format!("t_start must be >= 0, got {}", self.t_start)));
        }
        if !(self.t_end.is_finite() && self.t_end > self.t_start) {
            return Err(Error::InvalidScenario(format!(
                "t_end must exceed t_start, got t_start = {}, t_end = {}",
                self.t_start, self.t_end
            )));
        }
        if !self.initial_output.is_finite() {
            return Err(Error::InvalidScenario("initial_output must be finite".into()));
        }
        let a = &self.analysis;
        if a.k_max < 1 || a.chatter_window < 1 || a.chatter_min_toggles < 1 {
            return Err(Error::InvalidScenario("analysis k_max, chatter_window and chatter_min_toggles must be >= 1".into()));
        }
        Ok(())
    }

    /// Parses and validates a scenario from TOML text. `origin` only labels
    /// diagnostics.
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes to TOML")
    }

    pub fn display_name(&self) -> &str {
        self.name.as_deref().unwrap_or("scenario")
    }
}

/// Scenarios shipped with the crate.
pub const BUNDLED: &[(&str, &str)] = &[
    ("ramp_epm", include_str!("../scenarios/ramp_epm.toml")),
    ("ramp_elm", include_str!("../scenarios/ramp_elm.toml")),
    ("ramp_itm", include_str!("../scenarios/ramp_itm.toml")),
    ("ramp_itm_tolerance", include_str!("../scenarios/ramp_itm_tolerance.toml")),
    ("unsaturated_ramp", include_str!("../scenarios/unsaturated_ramp.toml")),
];

/// Loads a bundled scenario by name.
pub fn bundled(name: &str) -> Option<ScenarioConfig> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(n, text)| {
        ScenarioConfig::from_toml_str(text, Path::new(n)).expect("bundled scenarios are valid")
    })
}

/// Loads a scenario file.
///
/// A path that does not exist on disk but names a bundled scenario (with
/// or without the `.toml` extension) resolves to the bundled copy.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    match fs::read_to_string(path) {
        Ok(text) => ScenarioConfig::from_toml_str(&text, path),
        Err(source) => {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            let bare = path.parent().is_none_or(|p| p.as_os_str().is_empty());
            match bundled(stem) {
                Some(config) if bare => Ok(config),
                _ => Err(Error::Io { path: path.to_path_buf(), source }),
            }
        }
    }
}

pub fn save_scenario(config: &ScenarioConfig, path: impl AsRef<Path>) -> Result<()> {
    let path: PathBuf = path.as_ref().to_path_buf();
    fs::write(&path, config.to_toml_string()).map_err(|source| Error::Io { path, source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenarios_parse() {
        for (name, _) in BUNDLED {
            let cfg = bundled(name).unwrap();
            assert_eq!(cfg.name.as_deref(), Some(*name));
        }
    }

    #[test]
    fn ramp_itm_configuration() {
        let cfg = bundled("ramp_itm").unwrap();
        assert_eq!(cfg.params.kp, 1.0);
        assert_eq!(cfg.params.ki, 20.0);
        match cfg.solver {
            SolverConfig::Itm(s) => {
                assert_eq!(s.h_init, 1e-3);
                assert_eq!(s.epsilon, 1e-3);
                assert_eq!(s.h_cap, 1e-3);
                assert_eq!(s.h_delta, 1e-6);
            }
            other => panic!("unexpected solver {other:?}"),
        }
    }

    #[test]
    fn empty_text_is_a_parse_error() {
        let err = ScenarioConfig::from_toml_str("", Path::new("empty.toml")).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
    }

    #[test]
    fn inverted_limits_name_the_invariant() {
        let mut cfg = bundled("ramp_epm").unwrap();
        cfg.params.w_min = 2.0;
        let text = cfg.to_toml_string();
        let err = ScenarioConfig::from_toml_str(&text, Path::new("x.toml")).unwrap_err();
        assert!(matches!(err, Error::InvalidParams(_)));
        assert!(err.to_string().contains("w_min < w_max"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = bundled("ramp_epm").unwrap().to_toml_string();
        for (needle, extra) in [
            ("[params]\n", "[params]\ngain = 3.0\n"),
            ("[solver]\n", "[solver]\nepsilon = 1.0\n"),
            ("[signal]\n", "[signal]\nphase = 1.0\n"),
        ] {
            let bad = text.replacen(needle, extra, 1);
            assert!(ScenarioConfig::from_toml_str(&bad, Path::new("x.toml")).is_err(), "{extra}");
        }
        let bad = format!("colour = \"red\"\n{text}");
        assert!(ScenarioConfig::from_toml_str(&bad, Path::new("x.toml")).is_err());
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = ScenarioConfig::from_toml_str("t_end = 1.0\ninitial_output = [", Path::new("x.toml")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("x.toml") && msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = load_scenario("/nonexistent/dir/s.toml").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/s.toml"));
    }

    #[test]
    fn bare_bundled_name_resolves() {
        assert!(load_scenario("ramp_itm").is_ok());
        assert!(load_scenario("ramp_itm.toml").is_ok());
    }
}
