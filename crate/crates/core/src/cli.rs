//! The pipeline behind the `ntnsim` binary: configuration plus command-line
//! overrides, truth selection, execution, output and replay.

use std::path::{Path, PathBuf};

use crate::config::{load_config_file, ConfigFile};
use crate::ephemeris::{load_ephemeris, Ephemeris};
use crate::error::{Error, Result};
use crate::output::{emit_results, write_geometry, write_windows, Command, RunManifest};
use crate::scenario::{
    geometry_table, monte_carlo, run_scenario_on, truth_from_ephemeris, truth_trajectory,
    truth_windows, ScenarioConfig, Trajectory,
};

/// Exit status for an error: 2 for configuration and input problems, 3 for
/// numerical failure of the filter, 1 for I/O.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Ephemeris { .. } | Error::Domain(_) => 2,
        Error::Numerical(_) | Error::Aborted { .. } => 3,
        Error::Io { .. } => 1,
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub theta_min_deg: Option<f64>,
    pub freq_ghz: Option<f64>,
}

/// Loads `path` (or the defaults) and applies the overrides.
pub fn effective_config(path: Option<&Path>, o: &Overrides) -> Result<ConfigFile> {
    let mut cfg = match path {
        Some(p) => load_config_file(p)?,
        None => ConfigFile::default(),
    };
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    if let Some(theta) = o.theta_min_deg {
        cfg.theta_min_deg = theta;
    }
    if let Some(f) = o.freq_ghz {
        cfg.f_t_hz = f * 1e9;
    }
    Ok(cfg)
}

fn truth_for(cfg: &ScenarioConfig, ephemeris: Option<&Path>) -> Result<Trajectory> {
    match ephemeris {
        Some(path) => {
            let eph = Ephemeris::new(load_ephemeris(path, &cfg.earth)?, &cfg.earth)?;
            truth_from_ephemeris(cfg, &eph)
        }
        None => truth_trajectory(cfg),
    }
}

/// Runs `command` and writes its outputs and `manifest.json` into `out`.
pub fn execute(
    command: Command,
    config: ConfigFile,
    ephemeris: Option<&Path>,
    runs: usize,
    out: &Path,
) -> Result<RunManifest> {
    if command == Command::Track && ephemeris.is_none() {
        return Err(Error::config("track needs --ephemeris"));
    }
    if runs == 0 {
        return Err(Error::config("--runs must be at least 1"));
    }
    let ephemeris = ephemeris
        .map(|p| std::path::absolute(p).map_err(|e| Error::io(p, e)))
        .transpose()?;
    let cfg = config.to_scenario()?;
    let manifest = RunManifest::new(command, config, runs, ephemeris.clone());
    let truth = truth_for(&cfg, ephemeris.as_deref())?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    match command {
        Command::Simulate | Command::Track => {
            let result = run_scenario_on(&cfg, &truth, 0)?;
            let mc = if runs > 1 {
                Some(monte_carlo(&cfg, &truth, runs)?)
            } else {
                None
            };
            emit_results(&result, mc.as_ref(), out, manifest)
        }
        Command::Geometry => {
            write_geometry(&out.join("geometry.csv"), &geometry_table(&cfg, &truth)?)?;
            finish(manifest, out, &["geometry.csv"])
        }
        Command::Windows => {
            write_windows(&out.join("windows.csv"), &truth_windows(&cfg, &truth)?)?;
            finish(manifest, out, &["windows.csv"])
        }
    }
}

fn finish(mut manifest: RunManifest, out: &Path, files: &[&str]) -> Result<RunManifest> {
    manifest.outputs = files.iter().map(|s| s.to_string()).collect();
    manifest.outputs.push("manifest.json".into());
    manifest.finish(out)
}

/// Repeats the run described by a manifest, writing into `out`.
pub fn replay(manifest: &Path, out: &Path) -> Result<RunManifest> {
    let m = RunManifest::load(manifest)?;
    if m.seed != m.config.seed {
        return Err(Error::config("manifest seed disagrees with its config"));
    }
    execute(m.command, m.config, m.ephemeris.as_deref(), m.runs, out)
}

/// Paths of the files a manifest lists, relative to its directory.
pub fn manifest_outputs(dir: &Path, m: &RunManifest) -> Vec<PathBuf> {
    m.outputs.iter().map(|f| dir.join(f)).collect()
}
