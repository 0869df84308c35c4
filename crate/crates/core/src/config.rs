//! TOML run configuration.
//!
//! ```toml
//! [grid]
//! dim = 3
//! n = 32
//! length = 6.283185307179586   # optional, defaults to 2π
//!
//! [solver]                     # every key optional
//! nu = 1.0
//! dt = 0.001
//! t_end = 1.0
//! scheme = "imex1"             # or "sbdf2"
//! dealias_on = true
//! renormalize_every = 1
//! diagnostics_every = 10
//! cfl_limit = 0.5
//!
//! [initial]
//! name = "random_smooth"
//! seed = 7
//! params = { u_amplitude = 0.5 }
//!
//! [output]                     # every key optional
//! diagnostics = "diagnostics.csv"
//! snapshot_every = 0           # steps between snapshots, 0 disables them
//! snapshot_prefix = "snapshot"
//! ```
//!
//! Relative paths are taken relative to the working directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::SolverConfig;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::initial::{Params, INITIAL_NAMES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
    #[serde(default = "two_pi")]
    pub length: f64,
}

fn two_pi() -> f64 {
    std::f64::consts::TAU
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.dim, self.n, self.length).map_err(|e| {
            let field = if !matches!(self.dim, 2 | 3) {
                "grid.dim"
            } else if !(self.length > 0.0 && self.length.is_finite()) {
                "grid.length"
            } else {
                "grid.n"
            };
            Error::config(field, e.to_string())
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: Params,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub diagnostics: PathBuf,
    pub snapshot_every: u64,
    pub snapshot_prefix: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            diagnostics: PathBuf::from("diagnostics.csv"),
            snapshot_every: 0,
            snapshot_prefix: PathBuf::from("snapshot"),
        }
    }
}

impl OutputConfig {
    /// `<prefix>_<step>.nlcf`, zero-padded to eight digits.
    pub fn snapshot_path(&self, step: u64) -> PathBuf {
        let mut name = self.snapshot_prefix.as_os_str().to_owned();
        name.push(format!("_{step:08}.nlcf"));
        PathBuf::from(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn check_writable(field: &str, path: &Path) -> Result<()> {
    if path.as_os_str().is_empty() {
        return Err(Error::config(field, "path is empty"));
    }
    if path.is_dir() {
        return Err(Error::config(
            field,
            format!("{} is a directory", path.display()),
        ));
    }
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    match std::fs::metadata(parent) {
        Ok(m) if m.is_dir() && !m.permissions().readonly() => Ok(()),
        Ok(_) => Err(Error::config(
            field,
            format!("{} is not a writable directory", parent.display()),
        )),
        Err(e) => Err(Error::config(field, format!("{}: {e}", parent.display()))),
    }
}

impl RunConfig {
    /// Checks every invariant, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid.build()?;
        self.solver.validate_for(&grid)?;
        if !INITIAL_NAMES.contains(&self.initial.name.as_str()) {
            return Err(Error::config(
                "initial.name",
                format!(
                    "unknown initial condition {:?}; expected one of {INITIAL_NAMES:?}",
                    self.initial.name
                ),
            ));
        }
        if self.initial.seed > i64::MAX as u64 {
            return Err(Error::config("initial.seed", "must not exceed 2^63 - 1"));
        }
        check_writable("output.diagnostics", &self.output.diagnostics)?;
        if self.output.snapshot_every > 0 {
            check_writable("output.snapshot_prefix", &self.output.snapshot_prefix)?;
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("run configuration is always representable")
    }
}

/// Reads, parses and validates a TOML configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path.as_ref())?;
    RunConfig::from_toml(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Scheme;

    const MINIMAL: &str = "[grid]\ndim = 2\nn = 16\n[initial]\nname = \"helical\"\n";

    #[test]
    fn minimal_document_gets_defaults() {
        let cfg = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.solver.scheme, Scheme::Imex1);
        assert!(cfg.solver.dealias);
        assert_eq!(cfg.solver.renormalize_every, 1);
        assert_eq!(cfg.grid.length, std::f64::consts::TAU);
        assert_eq!(cfg.initial.seed, 0);
        assert_eq!(cfg.output, OutputConfig::default());
    }

    #[test]
    fn validation_names_the_field() {
        let cases = [
            ("[solver]\ndt = 0.0\n", "solver.dt"),
            ("[solver]\ndt = -1.0\n", "solver.dt"),
            (
                "[solver]\nrenormalize_every = 0\n",
                "solver.renormalize_every",
            ),
            ("[solver]\nt_end = 0.0105\ndt = 0.001\n", "solver.t_end"),
            (
                "[output]\ndiagnostics = \"/nonexistent/dir/d.csv\"\n",
                "output.diagnostics",
            ),
        ];
        for (extra, field) in cases {
            let err = RunConfig::from_toml(&format!("{MINIMAL}{extra}")).unwrap_err();
            assert!(err.to_string().contains(field), "{extra}: {err}");
        }
        let bad_grid = MINIMAL.replace("n = 16", "n = 12");
        assert!(RunConfig::from_toml(&bad_grid)
            .unwrap_err()
            .to_string()
            .contains("grid.n"));
        let bad_name = MINIMAL.replace("helical", "vortex");
        assert!(RunConfig::from_toml(&bad_name)
            .unwrap_err()
            .to_string()
            .contains("initial.name"));
    }

    #[test]
    fn parse_errors_are_reported() {
        assert!(matches!(
            RunConfig::from_toml("[grid\n"),
            Err(Error::ConfigParse(_))
        ));
        assert!(matches!(
            RunConfig::from_toml(&format!("{MINIMAL}[solver]\nsheme = \"imex1\"\n")),
            Err(Error::ConfigParse(_))
        ));
        assert!(matches!(
            RunConfig::from_toml(&format!("{MINIMAL}[solver]\nscheme = \"rk4\"\n")),
            Err(Error::ConfigParse(_))
        ));
    }

    #[test]
    fn serialization_round_trips() {
        let mut cfg = RunConfig::from_toml(MINIMAL).unwrap();
        cfg.solver.scheme = Scheme::Sbdf2;
        cfg.solver.dt = 0.1 + 0.2;
        cfg.solver.t_end = 3.0 * cfg.solver.dt;
        cfg.initial.params.insert("mode".into(), 1.0);
        cfg.output.snapshot_every = 5;
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn snapshot_paths_are_numbered() {
        let out = OutputConfig {
            snapshot_prefix: PathBuf::from("runs/s"),
            ..Default::default()
        };
        assert_eq!(out.snapshot_path(42), PathBuf::from("runs/s_00000042.nlcf"));
    }
}
