//! Throughput-maximising slot partitions.
//!
//! The downlink and uplink modes have one free fraction, `tau1`: a coarse
//! grid scan locates the peak and golden-section search refines it. The
//! joint mode is scanned on a grid over the simplex `tau1 + tau3 <= 1` and
//! refined by a compass search. Traces whose discrete slope changes sign more
//! than once are reported instead of being refined.

use std::fmt;

use rayon::prelude::*;

use crate::analytic::{throughput, LogBase, ModeRequest};
use crate::model::{Mode, SlotPartition, SystemParams};
use crate::montecarlo::{estimate, SimConfig};
use crate::{Error, Result};

/// Distance of the `tau1` grid from 0 and 1; the charge constant diverges at
/// `tau1 = 0`.
pub const BOUNDARY_OFFSET: f64 = 1.0 / 128.0;
/// Differences below this fraction of the largest objective are treated as
/// ties.
const FLAT_REL: f64 = 1e-9;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    DlThroughput,
    UlThroughput,
    WeightedSum { w_dl: f64, w_ul: f64 },
}

impl Objective {
    fn weights(self) -> (f64, f64) {
        match self {
            Objective::DlThroughput => (1.0, 0.0),
            Objective::UlThroughput => (0.0, 1.0),
            Objective::WeightedSum { w_dl, w_ul } => (w_dl, w_ul),
        }
    }

    pub fn combine(self, dl: f64, ul: f64) -> f64 {
        let (a, b) = self.weights();
        // skip zero weights so an infinite or NaN unused rate cannot leak in
        let part = |w: f64, v: f64| if w == 0.0 { 0.0 } else { w * v };
        part(a, dl) + part(b, ul)
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::DlThroughput => f.write_str("dl_throughput"),
            Objective::UlThroughput => f.write_str("ul_throughput"),
            Objective::WeightedSum { w_dl, w_ul } => write!(f, "weighted_sum({w_dl}, {w_ul})"),
        }
    }
}

/// How the objective is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Engine {
    Analytic,
    /// Simulation with common random numbers across partitions.
    MonteCarlo { n_trials: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeSpec {
    pub params: SystemParams,
    pub mode: Mode,
    pub objective: Objective,
    /// Grid points per axis.
    pub grid_resolution: usize,
    /// Width of the final bracket on `tau1` (and `tau3`).
    pub refine_tol: f64,
    pub log_base: LogBase,
    pub engine: Engine,
}

impl OptimizeSpec {
    pub fn new(params: SystemParams, mode: Mode, objective: Objective) -> Self {
        Self {
            params,
            mode,
            objective,
            grid_resolution: 33,
            refine_tol: 1e-3,
            log_base: LogBase::E,
            engine: Engine::Analytic,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let mut problems = Vec::new();
        if self.grid_resolution < 8 {
            problems.push(format!(
                "grid_resolution must be at least 8 (got {})",
                self.grid_resolution
            ));
        }
        if !(self.refine_tol > 0.0 && self.refine_tol < 0.1) {
            problems.push(format!("refine_tol must lie in (0, 0.1) (got {})", self.refine_tol));
        }
        let (a, b) = self.objective.weights();
        if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) || a + b == 0.0 {
            problems.push(format!("weights must be non-negative and not both zero (got {a}, {b})"));
        }
        if let Engine::MonteCarlo { n_trials: 0, .. } = self.engine {
            problems.push("Monte Carlo objective needs at least one trial".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::OptimizeSpec(problems.join("; ")))
        }
    }

    fn partition(&self, tau1: f64, tau3: f64) -> Result<SlotPartition> {
        match self.mode {
            Mode::Downlink => SlotPartition::downlink(tau1),
            Mode::Uplink => SlotPartition::uplink(tau1),
            Mode::Joint => SlotPartition::new(tau1, (1.0 - tau1 - tau3).max(0.0), tau3),
        }
    }

    /// Objective at a partition. `tau3` is ignored outside the joint mode.
    pub fn evaluate(&self, tau1: f64, tau3: f64) -> Result<f64> {
        self.evaluate_in(self.mode, tau1, tau3)
    }

    fn evaluate_in(&self, mode: Mode, tau1: f64, tau3: f64) -> Result<f64> {
        let spec = Self { mode, ..*self };
        let slots = spec.partition(tau1, tau3)?;
        match self.engine {
            Engine::Analytic => {
                let req = ModeRequest::new(self.params, slots, mode)?.with_log_base(self.log_base);
                let t = throughput(&req)?;
                Ok(self.objective.combine(t.dl, t.ul))
            }
            Engine::MonteCarlo { n_trials, seed } => {
                let mut cfg = SimConfig::new(self.params, slots, mode, n_trials, seed);
                cfg.log_base = self.log_base;
                let b = estimate(&cfg)?;
                Ok(self.objective.combine(b.dl_throughput, b.ul_throughput))
            }
        }
    }
}

/// One objective evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub tau1: f64,
    pub tau3: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OptWarning {
    /// The grid trace has more than one peak; the grid maximum is returned.
    MultiModal { slope_sign_changes: usize },
    /// The objective is constant on the grid.
    Flat,
    /// The joint objective on `tau3 = 0` is not the downlink-mode objective.
    BoundaryMismatch { tau1: f64, joint: f64, downlink: f64 },
}

impl fmt::Display for OptWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptWarning::MultiModal { slope_sign_changes } => write!(
                f,
                "objective is not unimodal on the grid ({slope_sign_changes} slope sign changes); returning the grid maximum"
            ),
            OptWarning::Flat => f.write_str("objective is constant on the grid"),
            OptWarning::BoundaryMismatch { tau1, joint, downlink } => write!(
                f,
                "at tau1 = {tau1}, tau3 = 0 the joint objective is {joint} but the downlink mode gives {downlink}"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub tau1: f64,
    /// Zero outside the joint mode.
    pub tau3: f64,
    pub value: f64,
    /// Every evaluation, grid first. For the joint mode the grid part is the
    /// plotted surface.
    pub trace: Vec<TracePoint>,
    /// Number of leading trace entries that belong to the grid.
    pub grid_len: usize,
    pub warnings: Vec<OptWarning>,
}

impl Optimum {
    pub fn grid(&self) -> &[TracePoint] {
        &self.trace[..self.grid_len]
    }
}

/// Evenly spaced `tau1` values on `[BOUNDARY_OFFSET, 1 - BOUNDARY_OFFSET]`.
pub fn tau1_grid(n: usize) -> Vec<f64> {
    let span = 1.0 - 2.0 * BOUNDARY_OFFSET;
    (0..n)
        .map(|i| BOUNDARY_OFFSET + span * i as f64 / (n - 1) as f64)
        .collect()
}

fn evaluate_all(spec: &OptimizeSpec, points: &[(f64, f64)]) -> Result<Vec<TracePoint>> {
    points
        .par_iter()
        .map(|&(tau1, tau3)| {
            spec.evaluate(tau1, tau3)
                .map(|value| TracePoint { tau1, tau3, value })
        })
        .collect()
}

fn argmax(trace: &[TracePoint]) -> usize {
    let mut best = 0;
    for (i, t) in trace.iter().enumerate() {
        if t.value > trace[best].value {
            best = i;
        }
    }
    best
}

fn is_flat(values: &[f64]) -> bool {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    hi - lo <= FLAT_REL * hi.abs().max(lo.abs())
}

/// Slope sign changes of a sequence, ignoring ties. A trace that rises and
/// then falls has one; anything that does not fit that shape counts as at
/// least two.
pub fn slope_sign_changes(values: &[f64]) -> usize {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let signs: Vec<i8> = values
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| d.abs() > FLAT_REL * scale)
        .map(|d| if d > 0.0 { 1 } else { -1 })
        .collect();
    let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
    match signs.first() {
        // a single valley puts the peaks at both ends
        Some(-1) if changes == 1 => 2,
        _ => changes,
    }
}

/// Grid scan over `tau1` followed by golden-section refinement.
pub fn optimize_1d(spec: &OptimizeSpec) -> Result<Optimum> {
    spec.validate()?;
    if spec.mode == Mode::Joint {
        return Err(Error::OptimizeSpec(
            "optimize_1d needs the downlink or uplink mode".into(),
        ));
    }
    let grid = tau1_grid(spec.grid_resolution);
    let points: Vec<(f64, f64)> = grid.iter().map(|&t| (t, 0.0)).collect();
    let mut trace = evaluate_all(spec, &points)?;
    let grid_len = trace.len();
    let values: Vec<f64> = trace.iter().map(|t| t.value).collect();
    let mut warnings = Vec::new();
    let k = argmax(&trace);

    if is_flat(&values) {
        warnings.push(OptWarning::Flat);
    } else {
        let changes = slope_sign_changes(&values);
        if changes > 1 {
            warnings.push(OptWarning::MultiModal {
                slope_sign_changes: changes,
            });
        } else {
            let lo = grid[k.saturating_sub(1)];
            let hi = grid[(k + 1).min(grid.len() - 1)];
            golden_section(spec, lo, hi, &mut trace)?;
        }
    }
    let best = trace[argmax(&trace)];
    Ok(Optimum {
        tau1: best.tau1,
        tau3: 0.0,
        value: best.value,
        trace,
        grid_len,
        warnings,
    })
}

fn golden_section(
    spec: &OptimizeSpec,
    mut a: f64,
    mut b: f64,
    trace: &mut Vec<TracePoint>,
) -> Result<()> {
    let mut eval = |t: f64| -> Result<f64> {
        let value = spec.evaluate(t, 0.0)?;
        trace.push(TracePoint {
            tau1: t,
            tau3: 0.0,
            value,
        });
        Ok(value)
    };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    while b - a > spec.refine_tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d)?;
        }
    }
    eval(0.5 * (a + b))?;
    Ok(())
}

/// Simplex grid: `tau1` on [`tau1_grid`], `tau3` on the same spacing from 0,
/// keeping `tau1 + tau3 <= 1`.
pub fn simplex_grid(n: usize) -> Vec<(f64, f64)> {
    let tau1 = tau1_grid(n);
    let step = tau1[1] - tau1[0];
    let mut out = Vec::new();
    for &t1 in &tau1 {
        for j in 0.. {
            let t3 = step * j as f64;
            if t1 + t3 > 1.0 + 1e-12 {
                break;
            }
            out.push((t1, t3.min(1.0 - t1)));
        }
    }
    out
}

/// Grid over the `(tau1, tau3)` simplex followed by a compass search from
/// the best grid point.
pub fn optimize_joint(spec: &OptimizeSpec) -> Result<Optimum> {
    spec.validate()?;
    if spec.mode != Mode::Joint {
        return Err(Error::OptimizeSpec("optimize_joint needs the joint mode".into()));
    }
    let points = simplex_grid(spec.grid_resolution);
    let mut trace = evaluate_all(spec, &points)?;
    let grid_len = trace.len();
    let values: Vec<f64> = trace.iter().map(|t| t.value).collect();
    let mut warnings = Vec::new();

    if is_flat(&values) {
        warnings.push(OptWarning::Flat);
    } else {
        let changes = joint_slice_changes(&trace);
        if changes > 1 {
            warnings.push(OptWarning::MultiModal {
                slope_sign_changes: changes,
            });
        } else {
            let start = trace[argmax(&trace)];
            let step = points
                .iter()
                .map(|p| p.0)
                .find(|&t| t > points[0].0)
                .map_or(0.1, |t| t - points[0].0);
            compass_search(spec, start, 0.5 * step, &mut trace)?;
        }
    }

    let (w_dl, _) = spec.objective.weights();
    if w_dl > 0.0 {
        let edge: Vec<TracePoint> = trace[..grid_len]
            .iter()
            .filter(|t| t.tau3 == 0.0)
            .copied()
            .collect();
        let best = edge[argmax(&edge)];
        let downlink = spec.evaluate_in(Mode::Downlink, best.tau1, 0.0)?;
        if (best.value - downlink).abs() > spec.refine_tol * downlink.abs().max(best.value.abs()) {
            warnings.push(OptWarning::BoundaryMismatch {
                tau1: best.tau1,
                joint: best.value,
                downlink,
            });
        }
    }

    let best = trace[argmax(&trace)];
    Ok(Optimum {
        tau1: best.tau1,
        tau3: best.tau3,
        value: best.value,
        trace,
        grid_len,
        warnings,
    })
}

/// Largest slope-sign-change count over the fixed-`tau3` slices of the grid.
fn joint_slice_changes(grid: &[TracePoint]) -> usize {
    let mut tau3s: Vec<f64> = grid.iter().map(|t| t.tau3).collect();
    tau3s.sort_by(f64::total_cmp);
    tau3s.dedup();
    tau3s
        .iter()
        .map(|&t3| {
            let slice: Vec<f64> = grid.iter().filter(|t| t.tau3 == t3).map(|t| t.value).collect();
            if slice.len() < 3 || is_flat(&slice) {
                0
            } else {
                slope_sign_changes(&slice)
            }
        })
        .max()
        .unwrap_or(0)
}

fn compass_search(
    spec: &OptimizeSpec,
    start: TracePoint,
    mut step: f64,
    trace: &mut Vec<TracePoint>,
) -> Result<()> {
    let feasible = |t1: f64, t3: f64| {
        (BOUNDARY_OFFSET..=1.0 - BOUNDARY_OFFSET).contains(&t1) && t3 >= 0.0 && t1 + t3 <= 1.0
    };
    let mut best = start;
    while step >= 0.5 * spec.refine_tol {
        let mut moved = false;
        for (d1, d3) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let (t1, t3) = (best.tau1 + d1, best.tau3 + d3);
            if !feasible(t1, t3) {
                continue;
            }
            let value = spec.evaluate(t1, t3)?;
            let point = TracePoint {
                tau1: t1,
                tau3: t3,
                value,
            };
            trace.push(point);
            if value > best.value {
                best = point;
                moved = true;
                break;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    Ok(())
}
