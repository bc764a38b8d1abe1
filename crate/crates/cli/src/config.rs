//! Run configuration: a flat `key = value [unit]` document.
//!
//! Lines starting with `#` and blank lines are ignored, as is anything after
//! a `#` on a value line. Every key is optional; missing keys take the
//! reference values of [`SystemParams::paper_defaults`] and the defaults
//! below. Unknown or repeated keys are errors. All problems found in one
//! document are reported together.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use rfiot_core::analytic::Tolerances;
use rfiot_core::montecarlo::{ActivitySource, EnergyModel, InterferenceModel, Window};
use rfiot_core::optimizer::Engine as OptEngine;
use rfiot_core::quadrature::QuadTol;
use rfiot_core::units::db_to_linear;
use rfiot_core::{
    DensitySource, LogBase, Mode, ModeRequest, Objective, OptimizeSpec, SimConfig, SlotPartition,
    SystemParams, Unit,
};

/// The configuration used when no `--config` is given.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.conf");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Analytic,
    MonteCarlo,
    Both,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::MonteCarlo => "mc",
            Engine::Both => "both",
        }
    }

    pub fn analytic(self) -> bool {
        self != Engine::MonteCarlo
    }

    pub fn mc(self) -> bool {
        self != Engine::Analytic
    }
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "analytic" => Ok(Engine::Analytic),
            "mc" | "monte_carlo" => Ok(Engine::MonteCarlo),
            "both" => Ok(Engine::Both),
            other => Err(format!("unknown engine `{other}` (expected analytic, mc or both)")),
        }
    }
}

/// Parameters a sweep may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Tau1,
    Tau3,
    /// Scales the device density along so that `lambda_u / lambda_b` stays fixed.
    LambdaB,
    BetaDlDb,
    BetaUlDb,
    Eta,
    /// Values in watts.
    Pt,
    Epsilon,
}

impl SweepParam {
    pub const ALL: [SweepParam; 8] = [
        SweepParam::Tau1,
        SweepParam::Tau3,
        SweepParam::LambdaB,
        SweepParam::BetaDlDb,
        SweepParam::BetaUlDb,
        SweepParam::Eta,
        SweepParam::Pt,
        SweepParam::Epsilon,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Tau1 => "tau1",
            SweepParam::Tau3 => "tau3",
            SweepParam::LambdaB => "lambda_b",
            SweepParam::BetaDlDb => "beta_dl_db",
            SweepParam::BetaUlDb => "beta_ul_db",
            SweepParam::Eta => "eta",
            SweepParam::Pt => "p_t",
            SweepParam::Epsilon => "epsilon",
        }
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|p| p.as_str()).collect();
                format!("`{s}` cannot be swept (allowed: {})", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSettings {
    pub n_trials: u64,
    pub seed: u64,
    pub window: Window,
    pub energy_model: EnergyModel,
    pub interference: InterferenceModel,
    pub activity: ActivitySource,
    pub tail_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    pub objective: Objective,
    pub grid_resolution: usize,
    pub refine_tol: f64,
}

/// Bins of the second-nearest BS distance for conditional downlink coverage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct R2Bins {
    pub width: f64,
    pub max: f64,
}

impl R2Bins {
    pub fn edges(&self) -> Vec<f64> {
        let n = (self.max / self.width).round().max(1.0) as usize;
        (0..=n).map(|k| self.width * k as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: SystemParams,
    pub mode: Mode,
    pub tau1: f64,
    pub tau3: f64,
    pub engine: Engine,
    pub log_base: LogBase,
    pub interferer_density: DensitySource,
    pub inner_rel_tol: f64,
    pub outer_rel_tol: f64,
    pub mc: McSettings,
    pub energy_budget: f64,
    pub sinr_budget: f64,
    pub sweep: Option<Sweep>,
    pub r2_bins: Option<R2Bins>,
    pub optimizer: OptimizerSettings,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: SystemParams::paper_defaults(),
            mode: Mode::Downlink,
            tau1: 0.1,
            tau3: 0.0,
            engine: Engine::Analytic,
            log_base: LogBase::E,
            interferer_density: DensitySource::AnalyticPh,
            inner_rel_tol: 1e-7,
            outer_rel_tol: 1e-6,
            mc: McSettings {
                n_trials: 100_000,
                seed: 1,
                window: Window::Auto,
                energy_model: EnergyModel::FullSum,
                interference: InterferenceModel::PppApprox,
                activity: ActivitySource::Pilot(100_000),
                tail_tol: 1e-4,
            },
            energy_budget: 0.015,
            sinr_budget: 0.02,
            sweep: None,
            r2_bins: None,
            optimizer: OptimizerSettings {
                objective: Objective::DlThroughput,
                grid_resolution: 33,
                refine_tol: 1e-3,
            },
            out: None,
        }
    }
}

/// One problem in a configuration document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// 1-based line, when the problem belongs to one line.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid configuration:\n{}", render_diagnostics(.0))]
pub struct ConfigError(pub Vec<Diagnostic>);

fn render_diagnostics(d: &[Diagnostic]) -> String {
    let lines: Vec<String> = d.iter().map(|d| format!("  {d}")).collect();
    lines.join("\n")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    /// Plain number; no unit tag.
    Plain,
    /// Power: w, dbw or dbm.
    Power,
    /// Ratio: linear or db.
    Ratio,
    /// Free-form word or list.
    Word,
}

const KEYS: &[(&str, Kind)] = &[
    ("lambda_b", Kind::Plain),
    ("lambda_u", Kind::Plain),
    ("alpha", Kind::Plain),
    ("eta", Kind::Plain),
    ("p_t", Kind::Power),
    ("sigma2_dl", Kind::Power),
    ("sigma2_ul", Kind::Power),
    ("rho", Kind::Power),
    ("epsilon", Kind::Plain),
    ("slot_t", Kind::Plain),
    ("e_rec", Kind::Plain),
    ("beta_dl", Kind::Ratio),
    ("beta_ul", Kind::Ratio),
    ("w_d", Kind::Plain),
    ("w_u", Kind::Plain),
    ("mode", Kind::Word),
    ("tau1", Kind::Plain),
    ("tau3", Kind::Plain),
    ("engine", Kind::Word),
    ("log_base", Kind::Word),
    ("interferer_density", Kind::Word),
    ("inner_rel_tol", Kind::Plain),
    ("outer_rel_tol", Kind::Plain),
    ("n_trials", Kind::Word),
    ("seed", Kind::Word),
    ("window", Kind::Word),
    ("energy_model", Kind::Word),
    ("interference", Kind::Word),
    ("activity", Kind::Word),
    ("pilot_trials", Kind::Word),
    ("tail_tol", Kind::Plain),
    ("energy_budget", Kind::Plain),
    ("sinr_budget", Kind::Plain),
    ("sweep", Kind::Word),
    ("sweep_values", Kind::Word),
    ("r2_bin_width", Kind::Plain),
    ("r2_bin_max", Kind::Plain),
    ("objective", Kind::Word),
    ("w_dl", Kind::Plain),
    ("w_ul", Kind::Plain),
    ("grid_resolution", Kind::Word),
    ("refine_tol", Kind::Plain),
    ("out", Kind::Word),
];

struct Entry {
    line: usize,
    value: String,
    unit: Option<Unit>,
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut diags = Vec::new();
    let mut entries: Vec<(&'static str, Entry)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, rest)) = content.split_once('=') else {
            diags.push(diag(line, format!("expected `key = value`, got `{content}`")));
            continue;
        };
        let key = key.trim();
        let Some(&(name, kind)) = KEYS.iter().find(|(k, _)| *k == key) else {
            diags.push(diag(line, format!("unknown key `{key}`")));
            continue;
        };
        if let Some((_, prev)) = entries.iter().find(|(k, _)| *k == name) {
            diags.push(diag(line, format!("`{key}` already set on line {}", prev.line)));
            continue;
        }
        match split_unit(rest.trim(), kind) {
            Ok((value, unit)) => entries.push((
                name,
                Entry {
                    line,
                    value: value.to_string(),
                    unit,
                },
            )),
            Err(msg) => diags.push(diag(line, format!("`{key}`: {msg}"))),
        }
    }

    let mut cfg = RunConfig::default();
    let mut r = Reader {
        entries: &entries,
        diags: &mut diags,
    };
    let p = &mut cfg.params;
    r.number("lambda_b", &mut p.lambda_b);
    let lambda_u_set = r.number("lambda_u", &mut p.lambda_u);
    if !lambda_u_set {
        p.lambda_u = 30.0 * p.lambda_b;
    }
    r.number("alpha", &mut p.alpha);
    r.number("eta", &mut p.eta);
    let pt_default = p.p_t;
    r.number("p_t", &mut p.p_t);
    let snr_dl = pt_default / p.sigma2_dl;
    if !r.number("sigma2_dl", &mut p.sigma2_dl) {
        p.sigma2_dl = p.p_t / snr_dl;
    }
    let rho_default = p.rho;
    r.number("rho", &mut p.rho);
    let snr_ul = rho_default / p.sigma2_ul;
    if !r.number("sigma2_ul", &mut p.sigma2_ul) {
        p.sigma2_ul = p.rho / snr_ul;
    }
    r.number("epsilon", &mut p.epsilon);
    r.number("slot_t", &mut p.slot_t);
    r.number("e_rec", &mut p.e_rec);
    r.number("beta_dl", &mut p.beta_dl);
    r.number("beta_ul", &mut p.beta_ul);
    r.number("w_d", &mut p.w_d);
    r.number("w_u", &mut p.w_u);

    r.parsed("mode", &mut cfg.mode);
    r.number("tau1", &mut cfg.tau1);
    r.number("tau3", &mut cfg.tau3);
    r.parsed("engine", &mut cfg.engine);
    r.parsed("log_base", &mut cfg.log_base);
    r.with("interferer_density", &mut cfg.interferer_density, |v| {
        if v == "analytic" {
            Ok(DensitySource::AnalyticPh)
        } else {
            number(v).map(DensitySource::Fixed)
        }
    });
    r.number("inner_rel_tol", &mut cfg.inner_rel_tol);
    r.number("outer_rel_tol", &mut cfg.outer_rel_tol);

    let mc = &mut cfg.mc;
    r.with("n_trials", &mut mc.n_trials, integer);
    r.with("seed", &mut mc.seed, integer);
    r.with("window", &mut mc.window, |v| {
        if v == "auto" {
            Ok(Window::Auto)
        } else {
            number(v).map(Window::Fixed)
        }
    });
    r.with("energy_model", &mut mc.energy_model, |v| match v {
        "full_sum" => Ok(EnergyModel::FullSum),
        "dominant_two" => Ok(EnergyModel::DominantTwo),
        _ => Err(format!("unknown energy model `{v}` (expected full_sum or dominant_two)")),
    });
    r.with("interference", &mut mc.interference, |v| match v {
        "ppp_approx" => Ok(InterferenceModel::PppApprox),
        "voronoi_exact" => Ok(InterferenceModel::VoronoiExact),
        _ => Err(format!(
            "unknown interference model `{v}` (expected ppp_approx or voronoi_exact)"
        )),
    });
    let mut pilot_trials = mc.n_trials.clamp(1, 100_000);
    r.with("pilot_trials", &mut pilot_trials, integer);
    mc.activity = ActivitySource::Pilot(pilot_trials);
    r.with("activity", &mut mc.activity, |v| {
        if v == "pilot" {
            Ok(ActivitySource::Pilot(pilot_trials))
        } else {
            number(v).map(ActivitySource::Fixed)
        }
    });
    r.number("tail_tol", &mut mc.tail_tol);

    r.number("energy_budget", &mut cfg.energy_budget);
    r.number("sinr_budget", &mut cfg.sinr_budget);

    let mut sweep_param = None;
    r.with("sweep", &mut sweep_param, |v| v.parse().map(Some));
    let mut sweep_values: Option<Vec<f64>> = None;
    r.with("sweep_values", &mut sweep_values, |v| {
        v.split(',').map(|s| number(s.trim())).collect::<Result<_, _>>().map(Some)
    });
    match (sweep_param, sweep_values) {
        (Some(param), Some(values)) => cfg.sweep = Some(Sweep { param, values }),
        (None, None) => {}
        (Some(_), None) => r.global("`sweep` needs `sweep_values`"),
        (None, Some(_)) => r.global("`sweep_values` needs `sweep`"),
    }

    let mut width = None;
    r.with("r2_bin_width", &mut width, |v| number(v).map(Some));
    let mut max = 1.4;
    r.number("r2_bin_max", &mut max);
    cfg.r2_bins = width.map(|width| R2Bins { width, max });

    let mut objective = "dl_throughput".to_string();
    r.with("objective", &mut objective, |v| Ok(v.to_string()));
    let (mut w_dl, mut w_ul) = (1.0, 1.0);
    let weights_set = r.number("w_dl", &mut w_dl) | r.number("w_ul", &mut w_ul);
    cfg.optimizer.objective = match objective.as_str() {
        "dl_throughput" => Objective::DlThroughput,
        "ul_throughput" => Objective::UlThroughput,
        "weighted_sum" => Objective::WeightedSum { w_dl, w_ul },
        other => {
            r.global(&format!(
                "unknown objective `{other}` (expected dl_throughput, ul_throughput or weighted_sum)"
            ));
            Objective::DlThroughput
        }
    };
    if weights_set && !matches!(cfg.optimizer.objective, Objective::WeightedSum { .. }) {
        r.global("`w_dl` and `w_ul` only apply to the weighted_sum objective");
    }
    r.with("grid_resolution", &mut cfg.optimizer.grid_resolution, integer);
    r.number("refine_tol", &mut cfg.optimizer.refine_tol);
    r.with("out", &mut cfg.out, |v| Ok(Some(PathBuf::from(v))));

    if diags.is_empty() {
        diags.extend(cfg.problems().into_iter().map(|m| Diagnostic {
            line: None,
            message: m,
        }));
    }
    if diags.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError(diags))
    }
}

fn diag(line: usize, message: String) -> Diagnostic {
    Diagnostic {
        line: Some(line),
        message,
    }
}

fn split_unit(rest: &str, kind: Kind) -> Result<(&str, Option<Unit>), String> {
    if rest.is_empty() {
        return Err("missing value".into());
    }
    if kind == Kind::Word {
        return Ok((rest, None));
    }
    let mut parts = rest.split_whitespace();
    let value = parts.next().unwrap_or_default();
    let unit = match parts.next() {
        None => None,
        Some(tag) => Some(tag.parse::<Unit>()?),
    };
    if parts.next().is_some() {
        return Err(format!("expected `value [unit]`, got `{rest}`"));
    }
    match (kind, unit) {
        (_, None) => Ok((value, None)),
        (Kind::Power, Some(u)) if u.is_power() => Ok((value, Some(u))),
        (Kind::Ratio, Some(u @ (Unit::Db | Unit::Linear))) => Ok((value, Some(u))),
        (Kind::Power, Some(u)) => Err(format!("`{u}` is not a power unit (use w, dbw or dbm)")),
        (Kind::Ratio, Some(u)) => Err(format!("`{u}` is not a ratio unit (use linear or db)")),
        (_, Some(u)) => Err(format!("takes no unit (got `{u}`)")),
    }
}

fn number(v: &str) -> Result<f64, String> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| format!("`{v}` is not a finite number"))
}

fn integer<T: FromStr>(v: &str) -> Result<T, String> {
    v.replace('_', "")
        .parse()
        .map_err(|_| format!("`{v}` is not a non-negative integer"))
}

struct Reader<'a> {
    entries: &'a [(&'static str, Entry)],
    diags: &'a mut Vec<Diagnostic>,
}

impl Reader<'_> {
    fn entry(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|(k, _)| *k == key).map(|(_, e)| e)
    }

    /// Applies `f` to the value of `key` if present; returns whether the key
    /// was set successfully.
    fn with<T>(&mut self, key: &str, slot: &mut T, f: impl FnOnce(&str) -> Result<T, String>) -> bool {
        let Some(e) = self.entry(key) else {
            return false;
        };
        match f(&e.value) {
            Ok(v) => {
                *slot = v;
                true
            }
            Err(msg) => {
                let line = e.line;
                self.diags.push(diag(line, format!("`{key}`: {msg}")));
                false
            }
        }
    }

    fn number(&mut self, key: &str, slot: &mut f64) -> bool {
        let unit = self.entry(key).and_then(|e| e.unit);
        self.with(key, slot, |v| {
            let x = number(v)?;
            Ok(unit.map_or(x, |u| u.to_linear(x)))
        })
    }

    fn parsed<T: FromStr<Err = String>>(&mut self, key: &str, slot: &mut T) -> bool {
        self.with(key, slot, |v| v.parse())
    }

    fn global(&mut self, msg: &str) {
        self.diags.push(Diagnostic {
            line: None,
            message: msg.to_string(),
        });
    }
}

impl RunConfig {
    pub fn slots(&self) -> rfiot_core::Result<SlotPartition> {
        SlotPartition::joint(self.tau1, self.tau3)
    }

    /// Every invariant violation, in one list.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Err(e) = self.params.validate() {
            out.push(e.to_string());
        }
        match self.slots() {
            Ok(s) if !s.supports(self.mode) => out.push(format!(
                "mode {} needs tau{} = 0 (got tau1 = {}, tau3 = {})",
                self.mode,
                if self.mode == Mode::Downlink { 3 } else { 2 },
                self.tau1,
                self.tau3
            )),
            Ok(_) => {}
            Err(e) => out.push(e.to_string()),
        }
        if let DensitySource::Fixed(d) = self.interferer_density {
            if !(0.0..=self.params.lambda_b).contains(&d) {
                out.push(format!("interferer_density must lie in [0, lambda_b] (got {d})"));
            }
        }
        for (name, v) in [("inner_rel_tol", self.inner_rel_tol), ("outer_rel_tol", self.outer_rel_tol)] {
            if !(v > 0.0 && v < 1.0) {
                out.push(format!("{name} must lie in (0, 1) (got {v})"));
            }
        }
        for (name, v) in [("energy_budget", self.energy_budget), ("sinr_budget", self.sinr_budget)] {
            if !(v > 0.0 && v < 1.0) {
                out.push(format!("{name} must lie in (0, 1) (got {v})"));
            }
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                out.push("sweep_values must not be empty".into());
            }
            if s.values.windows(2).any(|w| !(w[0] < w[1])) {
                out.push("sweep_values must be strictly increasing".into());
            }
            if s.param == SweepParam::Tau3 && self.mode != Mode::Joint {
                out.push("sweeping tau3 needs the joint mode".into());
            }
        }
        if let Some(b) = &self.r2_bins {
            if !(b.width > 0.0 && b.max > b.width) {
                out.push(format!(
                    "r2 bins need 0 < r2_bin_width < r2_bin_max (got {} and {})",
                    b.width, b.max
                ));
            }
        }
        // the engine-level checks stop at the first parameter problem, which
        // is already listed above
        if out.is_empty() {
            let slots = self.slots().expect("checked above");
            for check in [
                self.sim_config(self.params, slots).validate(),
                self.optimize_spec(self.params).validate(),
            ] {
                if let Err(e) = check {
                    out.push(e.to_string());
                }
            }
        }
        out
    }

    /// Parameters and partition at one sweep point.
    pub fn at_sweep_value(&self, value: Option<f64>) -> (SystemParams, f64, f64) {
        let mut p = self.params;
        let (mut tau1, mut tau3) = (self.tau1, self.tau3);
        if let (Some(s), Some(v)) = (&self.sweep, value) {
            match s.param {
                SweepParam::Tau1 => {
                    tau1 = v;
                    if self.mode == Mode::Uplink {
                        tau3 = 1.0 - v;
                    }
                }
                SweepParam::Tau3 => tau3 = v,
                SweepParam::LambdaB => {
                    p.lambda_u *= v / p.lambda_b;
                    p.lambda_b = v;
                }
                SweepParam::BetaDlDb => p.beta_dl = db_to_linear(v),
                SweepParam::BetaUlDb => p.beta_ul = db_to_linear(v),
                SweepParam::Eta => p.eta = v,
                SweepParam::Pt => p.p_t = v,
                SweepParam::Epsilon => p.epsilon = v,
            }
        }
        (p, tau1, tau3)
    }

    pub fn mode_request(&self, p: SystemParams, slots: SlotPartition) -> rfiot_core::Result<ModeRequest> {
        let tol = Tolerances {
            inner: QuadTol::new(self.inner_rel_tol, 1e-10),
            outer: QuadTol::new(self.outer_rel_tol, 1e-10),
        };
        Ok(ModeRequest::new(p, slots, self.mode)?
            .with_density(self.interferer_density)
            .with_log_base(self.log_base)
            .with_tol(tol))
    }

    pub fn sim_config(&self, p: SystemParams, slots: SlotPartition) -> SimConfig {
        let mut c = SimConfig::new(p, slots, self.mode, self.mc.n_trials, self.mc.seed);
        c.window = self.mc.window;
        c.energy_model = self.mc.energy_model;
        c.interference = self.mc.interference;
        c.activity = self.mc.activity;
        c.log_base = self.log_base;
        c.tail_tol = self.mc.tail_tol;
        c
    }

    pub fn optimize_spec(&self, p: SystemParams) -> OptimizeSpec {
        OptimizeSpec {
            params: p,
            mode: self.mode,
            objective: self.optimizer.objective,
            grid_resolution: self.optimizer.grid_resolution,
            refine_tol: self.optimizer.refine_tol,
            log_base: self.log_base,
            engine: OptEngine::Analytic,
        }
    }

    /// Canonical text form; `parse_config(&c.render())` gives back `c`.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let p = &self.params;
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("lambda_b", p.lambda_b.to_string());
        kv("lambda_u", p.lambda_u.to_string());
        kv("alpha", p.alpha.to_string());
        kv("eta", p.eta.to_string());
        kv("p_t", format!("{} w", p.p_t));
        kv("sigma2_dl", format!("{} w", p.sigma2_dl));
        kv("sigma2_ul", format!("{} w", p.sigma2_ul));
        kv("rho", format!("{} w", p.rho));
        kv("epsilon", p.epsilon.to_string());
        kv("slot_t", p.slot_t.to_string());
        kv("e_rec", p.e_rec.to_string());
        kv("beta_dl", format!("{} linear", p.beta_dl));
        kv("beta_ul", format!("{} linear", p.beta_ul));
        kv("w_d", p.w_d.to_string());
        kv("w_u", p.w_u.to_string());
        kv("mode", self.mode.to_string());
        kv("tau1", self.tau1.to_string());
        kv("tau3", self.tau3.to_string());
        kv("engine", self.engine.as_str().into());
        kv("log_base", self.log_base.as_str().into());
        kv(
            "interferer_density",
            match self.interferer_density {
                DensitySource::AnalyticPh => "analytic".into(),
                DensitySource::Fixed(d) => d.to_string(),
            },
        );
        kv("inner_rel_tol", self.inner_rel_tol.to_string());
        kv("outer_rel_tol", self.outer_rel_tol.to_string());
        let mc = &self.mc;
        kv("n_trials", mc.n_trials.to_string());
        kv("seed", mc.seed.to_string());
        kv(
            "window",
            match mc.window {
                Window::Auto => "auto".into(),
                Window::Fixed(r) => r.to_string(),
            },
        );
        kv(
            "energy_model",
            match mc.energy_model {
                EnergyModel::FullSum => "full_sum",
                EnergyModel::DominantTwo => "dominant_two",
            }
            .into(),
        );
        kv(
            "interference",
            match mc.interference {
                InterferenceModel::PppApprox => "ppp_approx",
                InterferenceModel::VoronoiExact => "voronoi_exact",
            }
            .into(),
        );
        match mc.activity {
            ActivitySource::Pilot(n) => {
                kv("activity", "pilot".into());
                kv("pilot_trials", n.to_string());
            }
            ActivitySource::Fixed(a) => kv("activity", a.to_string()),
        }
        kv("tail_tol", mc.tail_tol.to_string());
        kv("energy_budget", self.energy_budget.to_string());
        kv("sinr_budget", self.sinr_budget.to_string());
        if let Some(sw) = &self.sweep {
            kv("sweep", sw.param.as_str().into());
            let vals: Vec<String> = sw.values.iter().map(f64::to_string).collect();
            kv("sweep_values", vals.join(", "));
        }
        if let Some(b) = &self.r2_bins {
            kv("r2_bin_width", b.width.to_string());
            kv("r2_bin_max", b.max.to_string());
        }
        match self.optimizer.objective {
            Objective::DlThroughput => kv("objective", "dl_throughput".into()),
            Objective::UlThroughput => kv("objective", "ul_throughput".into()),
            Objective::WeightedSum { w_dl, w_ul } => {
                kv("objective", "weighted_sum".into());
                kv("w_dl", w_dl.to_string());
                kv("w_ul", w_ul.to_string());
            }
        }
        kv("grid_resolution", self.optimizer.grid_resolution.to_string());
        kv("refine_tol", self.optimizer.refine_tol.to_string());
        if let Some(out) = &self.out {
            kv("out", out.display().to_string());
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_reference_set() {
        let c = parse_config(DEFAULT_CONFIG).unwrap();
        let p = SystemParams::paper_defaults();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs();
        for (a, b) in [
            (c.params.lambda_b, p.lambda_b),
            (c.params.lambda_u, p.lambda_u),
            (c.params.alpha, p.alpha),
            (c.params.eta, p.eta),
            (c.params.p_t, p.p_t),
            (c.params.sigma2_dl, p.sigma2_dl),
            (c.params.sigma2_ul, p.sigma2_ul),
            (c.params.rho, p.rho),
            (c.params.epsilon, p.epsilon),
            (c.params.slot_t, p.slot_t),
            (c.params.e_rec, p.e_rec),
            (c.params.beta_dl, p.beta_dl),
            (c.params.beta_ul, p.beta_ul),
            (c.params.w_d, p.w_d),
            (c.params.w_u, p.w_u),
        ] {
            assert!(close(a, b), "{a} vs {b}");
        }
        assert!((c.params.beta_dl - 1.2589).abs() < 1e-4);
    }

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(parse_config("").unwrap(), RunConfig::default());
    }

    #[test]
    fn units_convert() {
        let c = parse_config("p_t = 0 dbw\nrho = 30 dbm\nbeta_dl = 3 db\n").unwrap();
        assert_eq!(c.params.p_t, 1.0);
        assert!((c.params.rho - 1.0).abs() < 1e-12);
        assert!((c.params.beta_dl - 1.995_262_314_968_88).abs() < 1e-12);
        // noise follows the transmit power when not given
        let c = parse_config("p_t = 10 dbw\n").unwrap();
        assert!((c.params.p_t / c.params.sigma2_dl - 100.0).abs() < 1e-9);
    }

    #[test]
    fn diagnostics_carry_lines() {
        let err = parse_config("alpha = 3\nbogus = 1\np_t = 1 db\nalpha = 4\ntau1 = x\n").unwrap_err();
        let lines: Vec<_> = err.0.iter().map(|d| d.line).collect();
        assert_eq!(lines, vec![Some(2), Some(3), Some(4), Some(5)]);
    }

    #[test]
    fn invariants_reported_together() {
        let err = parse_config("alpha = 2\neta = 2\nmode = uplink\n").unwrap_err();
        let text = err.to_string();
        assert!(text.contains("alpha must exceed 2"));
        assert!(text.contains("eta must lie in (0, 1)"));
        assert!(text.contains("mode uplink needs tau2 = 0"));
    }

    #[test]
    fn sweep_rules() {
        assert!(parse_config("sweep = alpha\nsweep_values = 3, 4\n").is_err());
        assert!(parse_config("sweep = tau1\nsweep_values = 0.2, 0.1\n").is_err());
        assert!(parse_config("sweep = tau1\n").is_err());
        let c = parse_config("sweep = lambda_b\nsweep_values = 0.5, 2\n").unwrap();
        let (p, _, _) = c.at_sweep_value(Some(2.0));
        assert_eq!((p.lambda_b, p.lambda_u), (2.0, 60.0));
    }

    #[test]
    fn render_round_trips() {
        let text = "mode = joint\ntau1 = 0.4\ntau3 = 0.3\nbeta_ul = 2 db\nsweep = tau3\n\
                    sweep_values = 0, 0.1, 0.3\nwindow = 12.5\nactivity = 0.9\n\
                    objective = weighted_sum\nw_dl = 2\nw_ul = 0.5\nr2_bin_width = 0.07\nout = a/b.csv\n";
        let c = parse_config(text).unwrap();
        assert_eq!(parse_config(&c.render()).unwrap(), c);
        let d = parse_config(DEFAULT_CONFIG).unwrap();
        assert_eq!(parse_config(&d.render()).unwrap(), d);
    }
}
