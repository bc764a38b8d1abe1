//! Subcommand implementations.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context as _};
use rayon::prelude::*;
use rfiot_core::analytic::{
    dl_coverage, dl_coverage_regular, energy_coverage, interferer_density, joint_coverage,
    throughput, ul_coverage, ul_coverage_regular,
};
use rfiot_core::montecarlo::Simulator;
use rfiot_core::optimizer::{optimize_1d, optimize_joint, Optimum};
use rfiot_core::{Mode, SystemParams};
use sha2::{Digest, Sha256};

use crate::config::{Engine, RunConfig};
use crate::results::{
    check_writable, csv_bytes, float, header, record, sibling, write_atomic, Manifest, ResultRow,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Analytic,
    Simulate,
    Compare,
    Sweep,
    Optimize,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Analytic => "analytic",
            Command::Simulate => "simulate",
            Command::Compare => "compare",
            Command::Sweep => "sweep",
            Command::Optimize => "optimize",
        }
    }
}

/// What a command produced.
#[derive(Debug, Clone)]
pub struct Report {
    pub outputs: Vec<PathBuf>,
    pub rows: usize,
    pub warnings: Vec<String>,
    /// For `compare`: whether every event was within budget.
    pub compare_passed: Option<bool>,
}

/// Runs `command` on an already merged configuration and writes its outputs.
pub fn run(command: Command, cfg: &RunConfig, overwrite: bool) -> anyhow::Result<Report> {
    let out = cfg
        .out
        .clone()
        .context("no output path: pass --out or set `out` in the config")?;
    let manifest_path = sibling(&out, "manifest.json");
    let started = Instant::now();
    let config_sha256 = hex::encode(Sha256::digest(cfg.render().as_bytes()));

    let mut outputs = vec![out.clone()];
    let mut warnings = Vec::new();
    let mut compare_passed = None;
    let mut row_times = Vec::new();
    let rows;

    match command {
        Command::Optimize => {
            if cfg.sweep.is_some() {
                bail!("optimize does not take a sweep");
            }
            check_writable(&out, overwrite)?;
            check_writable(&manifest_path, overwrite)?;
            let opt = optimize(cfg)?;
            warnings.extend(opt.warnings.iter().map(|w| w.to_string()));
            let (h, records) = optimum_table(cfg, &opt);
            rows = records.len();
            write_atomic(&out, &csv_bytes(&h, &records)?, overwrite)?;
        }
        _ => {
            let engine = match command {
                Command::Analytic => Engine::Analytic,
                Command::Simulate => Engine::MonteCarlo,
                Command::Compare => Engine::Both,
                _ => {
                    if cfg.sweep.is_none() {
                        bail!("sweep needs `sweep` and `sweep_values` in the config");
                    }
                    cfg.engine
                }
            };
            let bins_path = (cfg.r2_bins.is_some() && engine.mc() && cfg.mode != Mode::Uplink)
                .then(|| sibling(&out, "r2bins.csv"));
            if cfg.r2_bins.is_some() && bins_path.is_none() {
                warnings.push("r2 bins need the simulator and a downlink; skipped".into());
            }
            for p in [Some(&out), Some(&manifest_path), bins_path.as_ref()].into_iter().flatten() {
                check_writable(p, overwrite)?;
            }

            let result = evaluate_rows(cfg, engine)?;
            row_times = result.iter().map(|r| r.wall_time).collect();
            if command == Command::Compare {
                compare_passed = Some(result.iter().all(|r| r.passed() != Some(false)));
            }
            let records: Vec<Vec<String>> = result.iter().map(record).collect();
            rows = records.len();
            write_atomic(&out, &csv_bytes(&header(), &records)?, overwrite)?;

            if let Some(path) = bins_path {
                let (h, records) = r2_bin_table(cfg)?;
                write_atomic(&path, &csv_bytes(&h, &records)?, overwrite)?;
                outputs.push(path);
            }
        }
    }

    outputs.push(manifest_path.clone());
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: command.as_str().into(),
        config_sha256,
        seed: cfg.mc.seed,
        n_trials: cfg.mc.n_trials,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        rows,
        wall_time_s: started.elapsed().as_secs_f64(),
        row_wall_time_s: row_times,
        warnings: warnings.clone(),
        compare_passed,
    };
    write_atomic(&manifest_path, &manifest.to_json()?, overwrite)?;
    Ok(Report {
        outputs,
        rows,
        warnings,
        compare_passed,
    })
}

fn sweep_points(cfg: &RunConfig) -> Vec<Option<f64>> {
    match &cfg.sweep {
        Some(s) => s.values.iter().map(|&v| Some(v)).collect(),
        None => vec![None],
    }
}

/// One row per sweep point, in sweep order.
pub fn evaluate_rows(cfg: &RunConfig, engine: Engine) -> anyhow::Result<Vec<ResultRow>> {
    sweep_points(cfg)
        .into_par_iter()
        .map(|v| {
            evaluate_point(cfg, v, engine).with_context(|| match (&cfg.sweep, v) {
                (Some(s), Some(v)) => format!("at {} = {v}", s.param.as_str()),
                _ => "evaluating the configured point".into(),
            })
        })
        .collect()
}

fn evaluate_point(cfg: &RunConfig, value: Option<f64>, engine: Engine) -> anyhow::Result<ResultRow> {
    let started = Instant::now();
    let (p, tau1, tau3) = cfg.at_sweep_value(value);
    let slots = rfiot_core::SlotPartition::joint(tau1, tau3)?;
    let mut row = ResultRow::new(
        cfg.sweep.as_ref().zip(value).map(|(s, v)| (s.param, v)),
        cfg.mode,
        (slots.tau1(), slots.tau2(), slots.tau3()),
    );
    for (i, ev) in row.events.iter_mut().enumerate() {
        ev.budget = if i == 0 { cfg.energy_budget } else { cfg.sinr_budget };
    }

    if engine.analytic() {
        let req = cfg.mode_request(p, slots)?;
        row.events[0].set_analytic(&energy_coverage(&req)?);
        match cfg.mode {
            Mode::Downlink => {
                let dl = dl_coverage(&req)?;
                row.events[1].set_analytic(&dl);
                row.events[3].set_analytic(&dl);
                row.dl_regular_analytic = Some(dl_coverage_regular(&req)?.value);
            }
            Mode::Uplink => {
                let ul = ul_coverage(&req)?;
                row.events[2].set_analytic(&ul);
                row.events[3].set_analytic(&ul);
                row.ul_regular_analytic = Some(ul_coverage_regular(&req)?.value);
                row.activity_analytic = Some(interferer_density(&req)? / p.lambda_b);
            }
            Mode::Joint => {
                // one link's threshold at zero leaves energy and the other link
                let only_dl = cfg.mode_request(SystemParams { beta_ul: 0.0, ..p }, slots)?;
                let only_ul = cfg.mode_request(SystemParams { beta_dl: 0.0, ..p }, slots)?;
                row.events[1].set_analytic(&joint_coverage(&only_dl)?);
                row.events[2].set_analytic(&joint_coverage(&only_ul)?);
                row.events[3].set_analytic(&joint_coverage(&req)?);
                row.dl_regular_analytic = Some(dl_coverage_regular(&req)?.value);
                row.ul_regular_analytic = Some(ul_coverage_regular(&req)?.value);
                row.activity_analytic = Some(interferer_density(&req)? / p.lambda_b);
            }
        }
        let t = throughput(&req)?;
        if cfg.mode != Mode::Uplink {
            row.dl_throughput_analytic = Some(t.dl);
        }
        if cfg.mode != Mode::Downlink {
            row.ul_throughput_analytic = Some(t.ul);
        }
    }

    if engine.mc() {
        let sim = Simulator::new(cfg.sim_config(p, slots))?;
        let b = sim.estimate()?;
        row.seed = Some(cfg.mc.seed);
        row.n_trials = Some(b.n_trials);
        row.events[0].set_mc(&b.energy);
        if let Some(dl) = &b.dl {
            row.events[1].set_mc(dl);
        }
        if let Some(ul) = &b.ul {
            row.events[2].set_mc(ul);
        }
        row.events[3].set_mc(&b.joint);
        row.dl_sinr_mc = b.dl_sinr.map(|e| e.value);
        row.ul_sinr_mc = b.ul_sinr.map(|e| e.value);
        row.activity_mc = b.activity;
        if cfg.mode != Mode::Uplink {
            row.dl_throughput_mc = Some(b.dl_throughput);
        }
        if cfg.mode != Mode::Downlink {
            row.ul_throughput_mc = Some(b.ul_throughput);
        }
    }
    row.wall_time = started.elapsed().as_secs_f64();
    Ok(row)
}

fn r2_bin_table(cfg: &RunConfig) -> anyhow::Result<(Vec<String>, Vec<Vec<String>>)> {
    let bins = cfg.r2_bins.expect("checked by caller");
    let edges = bins.edges();
    let h: Vec<String> = [
        "sweep_value", "r2_lo", "r2_hi", "n", "rf_mc", "rf_lo", "rf_hi", "regular_mc",
        "regular_lo", "regular_hi",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut records = Vec::new();
    for v in sweep_points(cfg) {
        let (p, tau1, tau3) = cfg.at_sweep_value(v);
        let slots = rfiot_core::SlotPartition::joint(tau1, tau3)?;
        let sim = Simulator::new(cfg.sim_config(p, slots))?;
        for b in sim.conditional_dl_by_r2(&edges)? {
            let cells = |e: Option<rfiot_core::CoverageEstimate>| match e {
                Some(e) => {
                    let (lo, hi) = e.interval.unwrap_or((e.value, e.value));
                    [float(e.value), float(lo), float(hi)]
                }
                None => Default::default(),
            };
            let mut r = vec![
                v.map(float).unwrap_or_default(),
                float(b.lo),
                float(b.hi),
                b.n.to_string(),
            ];
            r.extend(cells(b.rf_powered));
            r.extend(cells(b.regular));
            records.push(r);
        }
    }
    Ok((h, records))
}

pub fn optimize(cfg: &RunConfig) -> anyhow::Result<Optimum> {
    let spec = cfg.optimize_spec(cfg.params);
    Ok(match cfg.mode {
        Mode::Joint => optimize_joint(&spec)?,
        _ => optimize_1d(&spec)?,
    })
}

fn optimum_table(cfg: &RunConfig, opt: &Optimum) -> (Vec<String>, Vec<Vec<String>>) {
    let h: Vec<String> = ["kind", "mode", "objective", "tau1", "tau2", "tau3", "value"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let objective = cfg.optimizer.objective.to_string();
    let line = |kind: &str, t1: f64, t3: f64, v: f64| {
        let t3 = if cfg.mode == Mode::Uplink { 1.0 - t1 } else { t3 };
        vec![
            kind.to_string(),
            cfg.mode.to_string(),
            objective.clone(),
            float(t1),
            float((1.0 - t1 - t3).max(0.0)),
            float(t3),
            float(v),
        ]
    };
    let mut records = vec![line("optimum", opt.tau1, opt.tau3, opt.value)];
    for (i, t) in opt.trace.iter().enumerate() {
        let kind = if i < opt.grid_len { "grid" } else { "refine" };
        records.push(line(kind, t.tau1, t.tau3, t.value));
    }
    (h, records)
}

/// Reads a config file, or the shipped default when `path` is `None`.
pub fn load_config(path: Option<&Path>) -> anyhow::Result<RunConfig> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => crate::config::DEFAULT_CONFIG.to_string(),
    };
    Ok(crate::config::parse_config(&text)?)
}
