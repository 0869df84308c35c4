//! Pseudo-spectral simulation of the simplified Ericksen–Leslie system for
//! nematic liquid crystal flow on the periodic box, with monitors for a
//! vorticity-BMO blow-up criterion and an empirical inequality lab.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod fft;
pub mod grid;
pub mod harness;
pub mod inequality;
pub mod initial;
pub mod io;
pub mod monitor;
pub mod norms;
pub mod ops;

pub use config::{load_config, RunConfig};
pub use dynamics::{run, step, RunOutcome, Scheme, SolverConfig, State, Stepper};
pub use error::{Error, Result};
pub use grid::{Field, Grid, SpectralField};
pub use monitor::{DiagnosticsRecord, GronwallReport, Monitor};
pub use norms::CubeFamily;
