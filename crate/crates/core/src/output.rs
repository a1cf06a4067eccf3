//! Plot-ready result files and the run manifest.
//!
//! Numbers in CSV files are positional decimals with 12 significant digits
//! (see [`format_number`]). Column order:
//!
//! - `states.csv`: `t_s`, the true state (12 columns, `true_` prefix), the
//!   estimate (`est_` prefix), the covariance diagonal (`var_` prefix), then
//!   `nees_sat`. State order is sat position, sat velocity, UE position, UE
//!   velocity; km and km/s, variances in their squares.
//! - `link.csv`: `t_s, ta_s, doppler_hz, range_km, range_rate_km_s, tdoa_s,
//!   tdoa_measured_s` from the estimate, the same six quantities from the truth
//!   (`_true` suffix), then `gamma_rad, theta_rad, gamma_est_rad,
//!   theta_est_rad, visible, updated`. TDoA fields are empty on the first row.
//! - `windows.csv`: `t_start_s, t_end_s, theta_max_rad, t_theta_max_s`.
//! - `geometry.csv`: `t_s, gamma_rad, theta_rad, range_km, ta_s, doppler_hz, visible`.
//! - `summary.json`: MPE (%), RMSE per state, windows, NEES mean, clock fit,
//!   and a `monte_carlo` block when several runs were made.
//! - `manifest.json`: [`RunManifest`].

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::ConfigFile;
use crate::error::{Error, Result};
use crate::link::VisibilityWindow;
use crate::scenario::{GeometryRow, MonteCarloSummary, ScenarioResult, ScenarioSummary};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Positional decimal with 12 significant digits; `0` for zero, `nan`/`inf`
/// for non-finite values.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan"
        } else if x > 0.0 {
            "inf"
        } else {
            "-inf"
        }
        .into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if mantissa.starts_with('-') { "-" } else { "" };
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let body = if exp >= 11 {
        format!("{digits}{}", "0".repeat((exp - 11) as usize))
    } else if exp >= 0 {
        let split = exp as usize + 1;
        format!("{}.{}", &digits[..split], &digits[split..])
    } else {
        format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
    };
    format!("{sign}{body}")
}

fn opt(x: Option<f64>) -> String {
    x.map(format_number).unwrap_or_default()
}

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.into()
}

const STATE_NAMES: [&str; 12] = [
    "sat_px_km",
    "sat_py_km",
    "sat_pz_km",
    "sat_vx_km_s",
    "sat_vy_km_s",
    "sat_vz_km_s",
    "ue_px_km",
    "ue_py_km",
    "ue_pz_km",
    "ue_vx_km_s",
    "ue_vy_km_s",
    "ue_vz_km_s",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Simulate,
    Track,
    Geometry,
    Windows,
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    /// Effective configuration, command-line overrides applied.
    pub config: ConfigFile,
    pub seed: u64,
    pub runs: usize,
    pub ephemeris: Option<PathBuf>,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(
        command: Command,
        config: ConfigFile,
        runs: usize,
        ephemeris: Option<PathBuf>,
    ) -> Self {
        Self {
            tool: "ntnsim".into(),
            version: TOOL_VERSION.into(),
            command,
            seed: config.seed,
            config,
            runs,
            ephemeris,
            started_unix_s: unix_now(),
            finished_unix_s: f64::NAN,
            outputs: Vec::new(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    /// Stamps the finish time and writes `manifest.json` into `dir`.
    pub fn finish(mut self, dir: &Path) -> Result<Self> {
        self.finished_unix_s = unix_now();
        write_json(&dir.join("manifest.json"), &self)?;
        Ok(self)
    }
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    #[serde(flatten)]
    pub summary: ScenarioSummary,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub monte_carlo: Option<MonteCarloSummary>,
}

struct CsvOut {
    path: PathBuf,
    w: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            w: csv::Writer::from_writer(BufWriter::new(file)),
        })
    }

    fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w.write_record(fields).map_err(|e| self.err(e))
    }

    fn err(&self, e: csv::Error) -> Error {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(&self.path, io),
            other => Error::io(&self.path, std::io::Error::other(format!("{other:?}"))),
        }
    }

    fn finish(mut self) -> Result<()> {
        self.w.flush().map_err(|e| Error::io(&self.path, e))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serialisable");
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes())
        .and_then(|_| f.write_all(b"\n"))
        .map_err(|e| Error::io(path, e))
}

pub fn write_states(path: &Path, r: &ScenarioResult) -> Result<()> {
    let mut out = CsvOut::create(path)?;
    let mut header = vec!["t_s".to_string()];
    for prefix in ["true_", "est_", "var_"] {
        header.extend(STATE_NAMES.iter().map(|n| format!("{prefix}{n}")));
    }
    header.push("nees_sat".into());
    out.row(&header)?;
    for rec in &r.records {
        let mut row = vec![format_number(rec.time)];
        row.extend(rec.truth.to_vector().iter().map(|v| format_number(*v)));
        row.extend(rec.estimate.to_vector().iter().map(|v| format_number(*v)));
        row.extend(rec.cov_diag.iter().map(|v| format_number(*v)));
        row.push(opt(rec.nees));
        out.row(&row)?;
    }
    out.finish()
}

pub fn write_link(path: &Path, r: &ScenarioResult) -> Result<()> {
    let mut out = CsvOut::create(path)?;
    out.row([
        "t_s",
        "ta_s",
        "doppler_hz",
        "range_km",
        "range_rate_km_s",
        "tdoa_s",
        "tdoa_measured_s",
        "ta_true_s",
        "doppler_true_hz",
        "range_true_km",
        "range_rate_true_km_s",
        "tdoa_true_s",
        "tdoa_measured_true_s",
        "gamma_rad",
        "theta_rad",
        "gamma_est_rad",
        "theta_est_rad",
        "visible",
        "updated",
    ])?;
    for rec in &r.records {
        let mut row = vec![format_number(rec.time)];
        for l in [&rec.link, &rec.link_truth] {
            row.extend([
                format_number(l.ta),
                format_number(l.doppler),
                format_number(l.range),
                format_number(l.range_rate),
                opt(l.tdoa_prev),
                opt(l.tdoa_measured),
            ]);
        }
        row.extend([
            format_number(rec.gamma),
            format_number(rec.theta),
            format_number(rec.gamma_est),
            format_number(rec.theta_est),
            flag(rec.visible),
            flag(rec.innovation.is_some()),
        ]);
        out.row(&row)?;
    }
    out.finish()
}

pub fn write_windows(path: &Path, windows: &[VisibilityWindow]) -> Result<()> {
    let mut out = CsvOut::create(path)?;
    out.row(["t_start_s", "t_end_s", "theta_max_rad", "t_theta_max_s"])?;
    for w in windows {
        out.row([w.t_start, w.t_end, w.theta_max, w.t_theta_max].map(format_number))?;
    }
    out.finish()
}

pub fn write_geometry(path: &Path, rows: &[GeometryRow]) -> Result<()> {
    let mut out = CsvOut::create(path)?;
    out.row([
        "t_s",
        "gamma_rad",
        "theta_rad",
        "range_km",
        "ta_s",
        "doppler_hz",
        "visible",
    ])?;
    for g in rows {
        let mut row: Vec<String> = [g.time, g.gamma, g.theta, g.range, g.ta, g.doppler]
            .into_iter()
            .map(format_number)
            .collect();
        row.push(flag(g.visible));
        out.row(&row)?;
    }
    out.finish()
}

/// Writes `states.csv`, `link.csv`, `windows.csv` and `summary.json` into
/// `dir` (created if missing) and records them in the manifest, which is
/// then written as `manifest.json`.
pub fn emit_results(
    r: &ScenarioResult,
    monte_carlo: Option<&MonteCarloSummary>,
    dir: impl AsRef<Path>,
    mut manifest: RunManifest,
) -> Result<RunManifest> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_states(&dir.join("states.csv"), r)?;
    write_link(&dir.join("link.csv"), r)?;
    write_windows(&dir.join("windows.csv"), &r.summary.windows)?;
    write_json(
        &dir.join("summary.json"),
        &SummaryFile {
            summary: r.summary.clone(),
            monte_carlo: monte_carlo.cloned(),
        },
    )?;
    manifest.outputs = [
        "states.csv",
        "link.csv",
        "windows.csv",
        "summary.json",
        "manifest.json",
    ]
    .map(String::from)
    .to_vec();
    manifest.finish(dir)
}
