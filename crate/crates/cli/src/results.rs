//! Result rows, CSV output and the run manifest.
//!
//! CSV files hold only deterministic values so that reruns are
//! byte-identical; timings and warnings go to the manifest.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _};
use rfiot_core::{CoverageEstimate, Mode};
use serde::Serialize;

use crate::config::SweepParam;

/// Coverage events reported per row, in column order.
pub const EVENTS: [&str; 4] = ["energy", "dl", "ul", "joint"];

/// One event's values from both engines.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EventCells {
    /// Value and quadrature error estimate.
    pub analytic: Option<(f64, f64)>,
    /// Value and 95% interval.
    pub mc: Option<(f64, f64, f64)>,
    /// Largest `|analytic - mc|` that passes.
    pub budget: f64,
}

impl EventCells {
    pub fn set_analytic(&mut self, e: &CoverageEstimate) {
        self.analytic = Some((e.value, e.error));
    }

    pub fn set_mc(&mut self, e: &CoverageEstimate) {
        let (lo, hi) = e.interval.unwrap_or((e.value, e.value));
        self.mc = Some((e.value, lo, hi));
    }

    pub fn abs_diff(&self) -> Option<f64> {
        match (self.analytic, self.mc) {
            (Some((a, _)), Some((m, _, _))) => Some((a - m).abs()),
            _ => None,
        }
    }

    pub fn passed(&self) -> Option<bool> {
        self.abs_diff().map(|d| d <= self.budget)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep: Option<(SweepParam, f64)>,
    pub mode: Mode,
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    /// Master seed and trial count, when the simulator ran.
    pub seed: Option<u64>,
    pub n_trials: Option<u64>,
    /// Cells in [`EVENTS`] order.
    pub events: [EventCells; 4],
    /// SINR coverage of a regularly powered network.
    pub dl_regular_analytic: Option<f64>,
    pub ul_regular_analytic: Option<f64>,
    /// Simulated SINR coverage without the energy condition.
    pub dl_sinr_mc: Option<f64>,
    pub ul_sinr_mc: Option<f64>,
    /// Share of devices active in the uplink.
    pub activity_analytic: Option<f64>,
    pub activity_mc: Option<f64>,
    pub dl_throughput_analytic: Option<f64>,
    pub ul_throughput_analytic: Option<f64>,
    pub dl_throughput_mc: Option<f64>,
    pub ul_throughput_mc: Option<f64>,
    /// Seconds spent on this row; manifest only.
    pub wall_time: f64,
}

impl ResultRow {
    pub fn new(sweep: Option<(SweepParam, f64)>, mode: Mode, taus: (f64, f64, f64)) -> Self {
        Self {
            sweep,
            mode,
            tau1: taus.0,
            tau2: taus.1,
            tau3: taus.2,
            seed: None,
            n_trials: None,
            events: [EventCells::default(); 4],
            dl_regular_analytic: None,
            ul_regular_analytic: None,
            dl_sinr_mc: None,
            ul_sinr_mc: None,
            activity_analytic: None,
            activity_mc: None,
            dl_throughput_analytic: None,
            ul_throughput_analytic: None,
            dl_throughput_mc: None,
            ul_throughput_mc: None,
            wall_time: 0.0,
        }
    }

    /// Whether every compared event is within budget; `None` when nothing
    /// was compared.
    pub fn passed(&self) -> Option<bool> {
        let flags: Vec<bool> = self.events.iter().filter_map(EventCells::passed).collect();
        (!flags.is_empty()).then(|| flags.iter().all(|&f| f))
    }
}

pub fn header() -> Vec<String> {
    let mut h: Vec<String> = ["sweep_param", "sweep_value", "mode", "tau1", "tau2", "tau3", "seed", "n_trials"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for ev in EVENTS {
        for suffix in ["analytic", "analytic_err", "mc", "mc_lo", "mc_hi", "abs_diff", "pass"] {
            h.push(format!("{ev}_{suffix}"));
        }
    }
    for name in [
        "dl_regular_analytic",
        "ul_regular_analytic",
        "dl_sinr_mc",
        "ul_sinr_mc",
        "activity_analytic",
        "activity_mc",
        "dl_throughput_analytic",
        "ul_throughput_analytic",
        "dl_throughput_mc",
        "ul_throughput_mc",
    ] {
        h.push(name.to_string());
    }
    h
}

/// 17 significant digits.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

fn opt_bool(x: Option<bool>) -> String {
    x.map(|b| if b { "pass" } else { "fail" }.to_string())
        .unwrap_or_default()
}

pub fn record(row: &ResultRow) -> Vec<String> {
    let mut r = vec![
        row.sweep.map(|(p, _)| p.as_str().to_string()).unwrap_or_default(),
        opt_float(row.sweep.map(|(_, v)| v)),
        row.mode.to_string(),
        float(row.tau1),
        float(row.tau2),
        float(row.tau3),
        row.seed.map(|s| s.to_string()).unwrap_or_default(),
        row.n_trials.map(|s| s.to_string()).unwrap_or_default(),
    ];
    for e in &row.events {
        r.push(opt_float(e.analytic.map(|a| a.0)));
        r.push(opt_float(e.analytic.map(|a| a.1)));
        r.push(opt_float(e.mc.map(|m| m.0)));
        r.push(opt_float(e.mc.map(|m| m.1)));
        r.push(opt_float(e.mc.map(|m| m.2)));
        r.push(opt_float(e.abs_diff()));
        r.push(opt_bool(e.passed()));
    }
    for v in [
        row.dl_regular_analytic,
        row.ul_regular_analytic,
        row.dl_sinr_mc,
        row.ul_sinr_mc,
        row.activity_analytic,
        row.activity_mc,
        row.dl_throughput_analytic,
        row.ul_throughput_analytic,
        row.dl_throughput_mc,
        row.ul_throughput_mc,
    ] {
        r.push(opt_float(v));
    }
    r
}

/// Serialises a table to CSV bytes.
pub fn csv_bytes(header: &[String], records: &[Vec<String>]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in records {
        w.write_record(r)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

/// Fails if `path` exists and overwriting was not asked for.
pub fn check_writable(path: &Path, overwrite: bool) -> anyhow::Result<()> {
    if !overwrite && path.exists() {
        bail!("{} already exists (pass --overwrite to replace it)", path.display());
    }
    Ok(())
}

/// Writes `bytes` to a temporary sibling of `path` and renames it into place,
/// removing the temporary file on failure.
pub fn write_atomic(path: &Path, bytes: &[u8], overwrite: bool) -> anyhow::Result<()> {
    check_writable(path, overwrite)?;
    let name = path
        .file_name()
        .with_context(|| format!("{} is not a file path", path.display()))?;
    let tmp = path.with_file_name(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| -> anyhow::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.with_context(|| format!("writing {}", path.display()))
}

/// Sibling of `out` with `suffix` replacing its extension.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    out.with_extension(suffix)
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub n_trials: u64,
    pub outputs: Vec<String>,
    pub rows: usize,
    pub wall_time_s: f64,
    pub row_wall_time_s: Vec<f64>,
    pub warnings: Vec<String>,
    /// Outcome of the agreement check, for `compare`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare_passed: Option<bool>,
}

impl Manifest {
    pub fn to_json(&self) -> anyhow::Result<Vec<u8>> {
        let mut v = serde_json::to_vec_pretty(self)?;
        v.push(b'\n');
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_record_align() {
        let row = ResultRow::new(None, Mode::Downlink, (0.1, 0.9, 0.0));
        assert_eq!(header().len(), record(&row).len());
        assert_eq!(row.passed(), None);
    }

    #[test]
    fn missing_values_are_empty() {
        let mut row = ResultRow::new(Some((SweepParam::Tau1, 0.25)), Mode::Downlink, (0.25, 0.75, 0.0));
        row.events[0].analytic = Some((0.5, 1e-9));
        let r = record(&row);
        assert_eq!(r[0], "tau1");
        assert_eq!(r[1], "2.5000000000000000e-1");
        assert_eq!(r[8], "5.0000000000000000e-1");
        assert_eq!(r[10], "");
        assert_eq!(r[14], "");
    }

    #[test]
    fn pass_flags() {
        let mut e = EventCells {
            analytic: Some((0.50, 0.0)),
            mc: Some((0.51, 0.50, 0.52)),
            budget: 0.015,
        };
        assert_eq!(e.passed(), Some(true));
        e.mc = Some((0.53, 0.52, 0.54));
        assert_eq!(e.passed(), Some(false));
    }

    #[test]
    fn quoting_follows_rfc4180() {
        let bytes = csv_bytes(&["a".into(), "b".into()], &[vec!["x,y".into(), "z\"".into()]]).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "a,b\n\"x,y\",\"z\"\"\"\n");
    }

    #[test]
    fn atomic_write_refuses_collisions() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        write_atomic(&p, b"one", false).unwrap();
        assert!(write_atomic(&p, b"two", false).is_err());
        assert_eq!(fs::read(&p).unwrap(), b"one");
        write_atomic(&p, b"two", true).unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
