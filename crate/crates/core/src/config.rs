//! Experiment configuration files.
//!
//! TOML with `[params]`, `[grid]` and `[run]` tables; a `.json` file with the
//! same structure is accepted too.
//!
//! ```toml
//! [params]
//! F = 1.0
//! f = 0.05
//! omega = 6.283185307179586
//! l = -1.0
//! r = 1.0
//!
//! [grid]
//! x_range = [-1.0, 1.0]
//! v_range = [-8.0, 8.0]
//! nx = 400
//! nv = 400
//!
//! [run]
//! periods = 100
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{OscillatorParams, ValidatedParams};
use crate::portrait::GridSpec;

/// Monte-Carlo seed used when a config does not set one.
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: OscillatorParams,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub run: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub x0: Option<f64>,
    pub v0: Option<f64>,
    pub t0: Option<f64>,
    pub periods: Option<usize>,
    /// Period multiple for periodic-orbit searches.
    pub k: Option<usize>,
    pub f_range: Option<[f64; 2]>,
    pub island_seed: Option<[f64; 2]>,
    pub island_iterations: Option<usize>,
    pub samples: Option<usize>,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: DEFAULT_SEED,
            x0: None,
            v0: None,
            t0: None,
            periods: None,
            k: None,
            f_range: None,
            island_seed: None,
            island_iterations: None,
            samples: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigFormat {
    Toml,
    Json,
}

impl ExperimentConfig {
    pub fn parse(text: &str, format: ConfigFormat) -> Result<Self> {
        match format {
            ConfigFormat::Toml => toml::from_str(text).map_err(|e| Error::Config(e.to_string())),
            ConfigFormat::Json => serde_json::from_str(text).map_err(|e| Error::Config(e.to_string())),
        }
    }

    /// Reads a config; the format follows the extension (`.json` or TOML).
    pub fn load(path: &Path) -> Result<Self> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(Error::Config(format!("config not found: {}", path.display())));
            }
            Err(e) => return Err(e.into()),
        };
        let format = match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => ConfigFormat::Json,
            _ => ConfigFormat::Toml,
        };
        Self::parse(&text, format)
    }

    pub fn validated(&self) -> Result<ValidatedParams> {
        self.params.validate()
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIT_WALLS: &str = r#"
[params]
F = 1.0
f = 0.05
omega = 6.283185307179586
l = -1.0
r = 1.0

[grid]
x_range = [-1.0, 1.0]
v_range = [-8.0, 8.0]
nx = 400
nv = 400

[run]
periods = 100
"#;

    #[test]
    fn toml_round_trip() {
        let c = ExperimentConfig::parse(UNIT_WALLS, ConfigFormat::Toml).unwrap();
        assert_eq!(c.params.friction, 0.05);
        let g = c.grid.unwrap();
        assert_eq!((g.nx, g.nv, g.iterations, g.t0), (400, 400, 2000, 0.0));
        assert_eq!(c.run.seed, DEFAULT_SEED);
        assert_eq!(c.run.periods, Some(100));
        let again = ExperimentConfig::parse(&c.to_toml().unwrap(), ConfigFormat::Toml).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn json_is_accepted() {
        let c = ExperimentConfig::parse(UNIT_WALLS, ConfigFormat::Toml).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::parse(&json, ConfigFormat::Json).unwrap(), c);
    }

    #[test]
    fn unknown_keys_and_missing_files() {
        let bad = UNIT_WALLS.replace("periods", "perods");
        assert!(matches!(ExperimentConfig::parse(&bad, ConfigFormat::Toml), Err(Error::Config(_))));
        let err = ExperimentConfig::load(Path::new("/nonexistent/fig.toml")).unwrap_err();
        assert!(err.to_string().contains("config not found"));
    }

    #[test]
    fn wall_vanishing_law() {
        let text = "[params]\nF = 1.0\nf = 0.1\nomega = 6.283185307179586\nl = -1.0\nr = 1.0\nforce_law = \"wall_vanishing\"\n";
        let c = ExperimentConfig::parse(text, ConfigFormat::Toml).unwrap();
        assert_eq!(c.params.force_law, crate::model::ForceLaw::WallVanishing);
        assert!(c.validated().is_ok());
    }
}
