//! Runs a configuration end to end: initial data, stepping, diagnostics table
//! and snapshots.

use crate::config::RunConfig;
use crate::dynamics::{run_observed, RunOutcome, State};
use crate::error::Result;
use crate::initial::make_initial;
use crate::io::{write_diagnostics, write_snapshot};

pub fn initial_state(cfg: &RunConfig) -> Result<State> {
    let grid = cfg.grid.build()?;
    make_initial(
        &cfg.initial.name,
        &cfg.initial.params,
        cfg.initial.seed,
        grid,
    )
}

/// Runs `cfg` in memory without touching the filesystem.
pub fn simulate(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    run_observed(
        initial_state(cfg)?,
        &cfg.solver,
        &mut |_| {},
        &mut |_, _| Ok(()),
    )
}

/// Runs `cfg`, writing snapshots on the configured cadence (including step 0)
/// and the diagnostics table at the end, also when the run stopped early.
pub fn execute(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let s0 = initial_state(cfg)?;
    let every = cfg.output.snapshot_every;
    if every > 0 {
        write_snapshot(&s0, cfg.output.snapshot_path(0))?;
    }
    let outcome = run_observed(s0, &cfg.solver, &mut |_| {}, &mut |k, s| {
        if every > 0 && k % every == 0 {
            write_snapshot(s, cfg.output.snapshot_path(k))?;
        }
        Ok(())
    })?;
    write_diagnostics(&outcome.records, &cfg.output.diagnostics)?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{read_diagnostics, read_snapshot};

    #[test]
    fn execute_writes_table_and_snapshots() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "[grid]\ndim = 2\nn = 16\n[solver]\ndt = 0.01\nt_end = 0.04\ndiagnostics_every = 2\n\
             [initial]\nname = \"helical\"\n[output]\ndiagnostics = {:?}\nsnapshot_every = 2\n\
             snapshot_prefix = {:?}\n",
            dir.path().join("diag.csv"),
            dir.path().join("snap"),
        );
        let cfg = RunConfig::from_toml(&text).unwrap();
        let out = execute(&cfg).unwrap();
        assert!(out.failure.is_none());
        let recs = read_diagnostics(dir.path().join("diag.csv")).unwrap();
        assert_eq!(recs, out.records);
        assert_eq!(recs.len(), 3);
        for k in [0, 2, 4] {
            read_snapshot(cfg.output.snapshot_path(k)).unwrap();
        }
        assert!(!cfg.output.snapshot_path(1).exists());
        assert_eq!(simulate(&cfg).unwrap().records, out.records);
    }
}
