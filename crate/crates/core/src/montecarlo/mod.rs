//! Monte Carlo simulation of the charging, downlink and uplink sub-slots.
//!
//! With [`Window::Auto`] BSs are generated around the typical device in
//! increasing distance on the whole plane, so nothing is truncated. A trial
//! stops drawing points once each event is settled: harvested energy and
//! interference only grow with more points, so an event is settled either
//! when the partial sum crosses its threshold, or when the one-sided
//! Chebyshev bound on the rest reaching the remaining gap is below
//! `tail_tol`.
//!
//! Trial `i` draws from the ChaCha8 stream `i` of `master_seed`, and results
//! are aggregated as integer counts, so an estimate does not depend on how
//! the trials were scheduled.

mod interference;
mod ppp;

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use interference::{build_ul_interferers, mc_interference_laplace, Interferer, InterfererSource};
pub use ppp::{harvest_energy, sample_ppp, Point, RadialStream};

use crate::analytic::LogBase;
use crate::model::{psi_unchecked, CoverageEstimate, Mode, SlotPartition, SystemParams};
use crate::{Error, Result};
use interference::{approx_tail, ApproxStream};
use ppp::exp1;

/// Simulation region for the BS process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Window {
    /// Whole plane, sampled outward until every event is settled.
    Auto,
    /// Disc of the given radius around the typical device.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyModel {
    /// Every BS in the window contributes.
    FullSum,
    /// Nearest two BSs plus the conditional mean of the rest.
    DominantTwo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterferenceModel {
    PppApprox,
    VoronoiExact,
}

/// Fraction of devices active in the uplink under [`InterferenceModel::PppApprox`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActivitySource {
    /// Estimated from this many energy-only trials on an independent stream.
    Pilot(u64),
    Fixed(f64),
}

/// BS count of the window used by the Voronoi model when no radius is given.
const VORONOI_WINDOW_MEAN: f64 = 400.0;
const PILOT_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
/// Largest tolerated share of redrawn trials.
const MAX_RETRY_RATE: f64 = 0.01;
const WILSON_Z: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub params: SystemParams,
    pub slots: SlotPartition,
    pub mode: Mode,
    pub n_trials: u64,
    pub master_seed: u64,
    pub window: Window,
    pub energy_model: EnergyModel,
    pub interference: InterferenceModel,
    pub activity: ActivitySource,
    pub log_base: LogBase,
    /// Settling tolerance for the sequential sampler.
    pub tail_tol: f64,
    /// Points drawn per process before a trial is cut short.
    pub max_points: u64,
}

impl SimConfig {
    pub fn new(
        params: SystemParams,
        slots: SlotPartition,
        mode: Mode,
        n_trials: u64,
        master_seed: u64,
    ) -> Self {
        Self {
            params,
            slots,
            mode,
            n_trials,
            master_seed,
            window: Window::Auto,
            energy_model: EnergyModel::FullSum,
            interference: InterferenceModel::PppApprox,
            activity: ActivitySource::Pilot(n_trials.clamp(1, 100_000)),
            log_base: LogBase::E,
            tail_tol: 1e-4,
            max_points: 2_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !self.slots.supports(self.mode) {
            return Err(Error::ModeMismatch {
                op: "simulation",
                needed: self.mode,
                tau2: self.slots.tau2(),
                tau3: self.slots.tau3(),
            });
        }
        let mut problems = Vec::new();
        if self.n_trials == 0 {
            problems.push("n_trials must be at least 1".to_string());
        }
        if let Window::Fixed(r) = self.window {
            if !(r > 0.0 && r.is_finite()) {
                problems.push(format!("window radius must be positive (got {r})"));
            }
        }
        match self.activity {
            ActivitySource::Fixed(a) if !(0.0..=1.0).contains(&a) => {
                problems.push(format!("activity must lie in [0, 1] (got {a})"));
            }
            ActivitySource::Pilot(0) => problems.push("pilot needs at least one trial".into()),
            _ => {}
        }
        if !(self.tail_tol > 0.0 && self.tail_tol < 1.0) {
            problems.push(format!("tail_tol must lie in (0, 1) (got {})", self.tail_tol));
        }
        if self.max_points < 2 {
            problems.push("max_points must be at least 2".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::SimConfig(problems.join("; ")))
        }
    }
}

/// Indicators and measured quantities of one slot.
///
/// With the sequential sampler, `e_h` and the SINRs are computed from the
/// points drawn when the events were settled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub e_h: f64,
    pub e_min: f64,
    /// `None` when the mode has no downlink.
    pub sinr_dl: Option<f64>,
    /// `None` when the mode has no uplink.
    pub sinr_ul: Option<f64>,
    pub covered_energy: bool,
    /// SINR event only; true when the mode has no downlink.
    pub covered_dl: bool,
    /// SINR event only; true when the mode has no uplink.
    pub covered_ul: bool,
    pub covered_joint: bool,
    pub r1: f64,
    pub r2: f64,
    /// Window redraws needed because fewer than two BSs fell inside.
    pub retries: u32,
    /// Whether the point budget ran out before an event was settled.
    pub capped: bool,
}

/// Monte Carlo estimates with 95% Wilson intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateBundle {
    pub mode: Mode,
    pub n_trials: u64,
    pub energy: CoverageEstimate,
    /// Downlink SINR and energy coverage; `None` without a downlink.
    pub dl: Option<CoverageEstimate>,
    /// Uplink SINR and energy coverage; `None` without an uplink.
    pub ul: Option<CoverageEstimate>,
    pub joint: CoverageEstimate,
    /// Downlink SINR coverage alone, as for a regularly powered device.
    pub dl_sinr: Option<CoverageEstimate>,
    /// Uplink SINR coverage alone, against the simulated interferers.
    pub ul_sinr: Option<CoverageEstimate>,
    /// Active fraction used for the approximate uplink interferers.
    pub activity: Option<f64>,
    pub dl_throughput: f64,
    pub ul_throughput: f64,
    pub retries: u64,
    pub capped: u64,
}

/// 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let phat = k as f64 / n_f;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n_f;
    let centre = (phat + z2 / (2.0 * n_f)) / denom;
    let half = WILSON_Z * (phat * (1.0 - phat) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

fn mc_estimate(k: u64, n: u64) -> CoverageEstimate {
    let (lo, hi) = wilson_interval(k, n);
    CoverageEstimate::monte_carlo(k as f64 / n as f64, lo, hi, n)
}

fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Counts {
    n: u64,
    energy: u64,
    dl_sinr: u64,
    ul_sinr: u64,
    dl: u64,
    ul: u64,
    joint: u64,
    retries: u64,
    capped: u64,
}

impl Counts {
    fn of(o: &TrialOutcome) -> Self {
        let b = |v: bool| u64::from(v);
        Self {
            n: 1,
            energy: b(o.covered_energy),
            dl_sinr: b(o.covered_dl),
            ul_sinr: b(o.covered_ul),
            dl: b(o.covered_dl && o.covered_energy),
            ul: b(o.covered_ul && o.covered_energy),
            joint: b(o.covered_joint),
            retries: u64::from(o.retries),
            capped: b(o.capped),
        }
    }

    fn add(self, o: Self) -> Self {
        Self {
            n: self.n + o.n,
            energy: self.energy + o.energy,
            dl_sinr: self.dl_sinr + o.dl_sinr,
            ul_sinr: self.ul_sinr + o.ul_sinr,
            dl: self.dl + o.dl,
            ul: self.ul + o.ul,
            joint: self.joint + o.joint,
            retries: self.retries + o.retries,
            capped: self.capped + o.capped,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Verdict {
    Open,
    Yes,
    No,
}

impl Verdict {
    fn is_open(self) -> bool {
        self == Verdict::Open
    }
}

/// A configured simulator; holds the uplink interferer density so that
/// trials can be run one at a time.
#[derive(Debug, Clone)]
pub struct Simulator {
    cfg: SimConfig,
    has_dl: bool,
    has_ul: bool,
    activity: Option<f64>,
    ul_density: f64,
    ul_tail: TailBound,
    bs_tail: TailBound,
}

impl Simulator {
    /// Validates `cfg` and, if needed, runs the activity pilot.
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let has_dl = cfg.mode != Mode::Uplink;
        let has_ul = cfg.mode != Mode::Downlink;
        let activity = match (has_ul, cfg.interference, cfg.activity) {
            (true, InterferenceModel::PppApprox, ActivitySource::Fixed(a)) => Some(a),
            (true, InterferenceModel::PppApprox, ActivitySource::Pilot(n)) => {
                let pilot = Self::energy_only(cfg);
                let hits = (0..n)
                    .into_par_iter()
                    .map(|i| {
                        let mut rng = trial_rng(cfg.master_seed ^ PILOT_SALT, i);
                        u64::from(pilot.trial(&mut rng).covered_energy)
                    })
                    .sum::<u64>();
                Some(hits as f64 / n as f64)
            }
            _ => None,
        };
        let ul_density = activity.unwrap_or(0.0) * cfg.params.lambda_b;
        Ok(Self {
            has_dl,
            has_ul,
            activity,
            ul_density,
            ul_tail: approx_tail(ul_density.max(f64::MIN_POSITIVE), &cfg.params),
            bs_tail: bs_tail(&cfg.params),
            cfg,
        })
    }

    fn energy_only(cfg: SimConfig) -> Self {
        Self {
            has_dl: false,
            has_ul: false,
            activity: None,
            ul_density: 0.0,
            ul_tail: bs_tail(&cfg.params),
            bs_tail: bs_tail(&cfg.params),
            cfg,
        }
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// Active fraction used for approximate-model interferers.
    pub fn activity(&self) -> Option<f64> {
        self.activity
    }

    /// Trial `index` of the configured seed.
    pub fn simulate_trial(&self, index: u64) -> TrialOutcome {
        self.trial(&mut trial_rng(self.cfg.master_seed, index))
    }

    /// One slot drawn from `rng`.
    pub fn trial(&self, rng: &mut ChaCha8Rng) -> TrialOutcome {
        match (self.cfg.window, self.cfg.interference) {
            (Window::Auto, InterferenceModel::PppApprox) => self.trial_sequential(rng),
            (Window::Fixed(r), _) => self.trial_windowed(r, rng),
            (Window::Auto, InterferenceModel::VoronoiExact) => {
                let r = (VORONOI_WINDOW_MEAN / (PI * self.cfg.params.lambda_b)).sqrt();
                self.trial_windowed(r, rng)
            }
        }
    }

    /// Energy demand of the typical device served from distance `r1` (J).
    fn e_min(&self, r1: f64) -> f64 {
        let p = &self.cfg.params;
        let uplink = self.cfg.slots.tau3() * p.slot_t * p.rho * r1.powf(p.epsilon * p.alpha);
        match self.cfg.mode {
            Mode::Joint => p.e_rec + uplink,
            Mode::Downlink => p.e_rec,
            Mode::Uplink => uplink,
        }
    }

    fn energy_scale(&self) -> f64 {
        let p = &self.cfg.params;
        self.cfg.slots.tau1() * p.slot_t * p.eta * p.p_t
    }

    fn trial_sequential(&self, rng: &mut ChaCha8Rng) -> TrialOutcome {
        let p = &self.cfg.params;
        let alpha = p.alpha;
        let tol = self.cfg.tail_tol;
        let mut stream = RadialStream::new(p.lambda_b);
        // Fixed draw order per BS: distance, charging gain, downlink gain.
        let mut draw = |rng: &mut ChaCha8Rng| {
            let r = stream.next_distance(rng);
            (r, exp1(rng), exp1(rng))
        };
        let (r1, g1, h1) = draw(rng);
        let (r2, g2, h2) = draw(rng);
        let path = |r: f64| r.powf(-alpha);

        let e_min = self.e_min(r1);
        let target = e_min / self.energy_scale();
        let mut harvest = g1 * path(r1) + g2 * path(r2);
        let mut energy = Verdict::Open;
        if self.cfg.energy_model == EnergyModel::DominantTwo {
            harvest += psi_unchecked(r2, p);
            energy = if harvest >= target { Verdict::Yes } else { Verdict::No };
        }

        let signal = h1 * path(r1);
        let noise = p.sigma2_dl / p.p_t;
        let i_max = if p.beta_dl > 0.0 {
            signal / p.beta_dl - noise
        } else {
            f64::INFINITY
        };
        let mut interference = h2 * path(r2);
        let mut dl = if self.has_dl { Verdict::Open } else { Verdict::Yes };

        let mut last = r2;
        let mut drawn = 2u64;
        let mut capped = false;
        loop {
            if energy.is_open() {
                if harvest >= target {
                    energy = Verdict::Yes;
                } else if self.bs_tail.settled(last, target - harvest, tol) {
                    energy = Verdict::No;
                }
            }
            if dl.is_open() {
                if interference > i_max {
                    dl = Verdict::No;
                } else if self.bs_tail.settled(last, i_max - interference, tol) {
                    dl = Verdict::Yes;
                }
            }
            if !energy.is_open() && !dl.is_open() {
                break;
            }
            if drawn >= self.cfg.max_points {
                capped = true;
                if energy.is_open() {
                    energy = if harvest >= target { Verdict::Yes } else { Verdict::No };
                }
                if dl.is_open() {
                    dl = if interference <= i_max { Verdict::Yes } else { Verdict::No };
                }
                break;
            }
            let (r, g, h) = draw(rng);
            drawn += 1;
            last = r;
            if energy.is_open() {
                harvest += g * path(r);
            }
            if dl.is_open() {
                interference += h * path(r);
            }
        }

        let (ul, sinr_ul, ul_capped) = if self.has_ul {
            self.uplink_sequential(r1, rng)
        } else {
            (true, None, false)
        };
        let covered_energy = energy == Verdict::Yes;
        let covered_dl = dl == Verdict::Yes;
        TrialOutcome {
            e_h: harvest * self.energy_scale(),
            e_min,
            sinr_dl: self.has_dl.then(|| signal / (interference + noise)),
            sinr_ul,
            covered_energy,
            covered_dl,
            covered_ul: ul,
            covered_joint: covered_energy && covered_dl && ul,
            r1,
            r2,
            retries: 0,
            capped: capped || ul_capped,
        }
    }

    /// Uplink SINR event against approximate-model interferers streamed
    /// outward from the tagged BS.
    fn uplink_sequential(&self, r1: f64, rng: &mut ChaCha8Rng) -> (bool, Option<f64>, bool) {
        let p = &self.cfg.params;
        let w0 = exp1(rng);
        let gain = w0 * r1.powf((p.epsilon - 1.0) * p.alpha);
        let noise = p.sigma2_ul / p.rho;
        if p.beta_ul == 0.0 {
            return (true, Some(gain / noise), false);
        }
        let j_max = gain / p.beta_ul - noise;
        let mut total = 0.0;
        let sinr = |total: f64| Some(gain / (total + noise));
        if j_max < 0.0 {
            return (false, sinr(total), false);
        }
        if self.ul_density == 0.0 {
            return (true, sinr(total), false);
        }
        let ea = p.epsilon * p.alpha;
        let tol = self.cfg.tail_tol;
        let mut stream = ApproxStream::new(self.ul_density);
        let mut drawn = 0u64;
        loop {
            let (d, serving) = stream.next(rng);
            let w = exp1(rng);
            drawn += 1;
            if let Some(r) = serving {
                total += w * r.powf(ea) * d.powf(-p.alpha);
            }
            if total > j_max {
                return (false, sinr(total), false);
            }
            if self.ul_tail.settled(d, j_max - total, tol) {
                return (true, sinr(total), false);
            }
            if drawn >= self.cfg.max_points {
                return (true, sinr(total), true);
            }
        }
    }

    fn trial_windowed(&self, radius: f64, rng: &mut ChaCha8Rng) -> TrialOutcome {
        let p = &self.cfg.params;
        let mut retries = 0u32;
        let bs = loop {
            let pts = sample_ppp(p.lambda_b, radius, rng);
            if pts.len() >= 2 {
                break pts;
            }
            retries += 1;
        };
        let distances: Vec<f64> = bs.iter().map(|q| q[0].hypot(q[1])).collect();
        let mut g = Vec::with_capacity(bs.len());
        let mut h = Vec::with_capacity(bs.len());
        for _ in 0..bs.len() {
            g.push(exp1(rng));
            h.push(exp1(rng));
        }
        let mut order: Vec<usize> = (0..bs.len()).collect();
        order.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]));
        let (tagged, second) = (order[0], order[1]);
        let (r1, r2) = (distances[tagged], distances[second]);

        let e_h = harvest_energy(&distances, &g, p, &self.cfg.slots, self.cfg.energy_model);
        let e_min = self.e_min(r1);
        let covered_energy = e_h >= e_min;

        let path = |r: f64| r.powf(-p.alpha);
        let sinr_dl = if self.has_dl {
            let interference: f64 = order[1..].iter().map(|&k| h[k] * path(distances[k])).sum();
            Some(h[tagged] * path(r1) / (interference + p.sigma2_dl / p.p_t))
        } else {
            None
        };
        let covered_dl = sinr_dl.is_none_or(|s| s >= p.beta_dl);

        let sinr_ul = if self.has_ul {
            let source = match self.cfg.interference {
                InterferenceModel::PppApprox => InterfererSource::PppApprox {
                    density: self.ul_density,
                    radius,
                },
                InterferenceModel::VoronoiExact => InterfererSource::VoronoiExact {
                    bs: &bs,
                    tagged,
                    radius,
                },
            };
            let field = build_ul_interferers(source, p, &self.cfg.slots, self.cfg.mode, rng);
            let w0 = exp1(rng);
            let interference: f64 = field
                .iter()
                .map(|i| exp1(rng) * i.power / p.rho * path(i.distance))
                .sum();
            let gain = w0 * r1.powf((p.epsilon - 1.0) * p.alpha);
            Some(gain / (interference + p.sigma2_ul / p.rho))
        } else {
            None
        };
        let covered_ul = sinr_ul.is_none_or(|s| s >= p.beta_ul);

        TrialOutcome {
            e_h,
            e_min,
            sinr_dl,
            sinr_ul,
            covered_energy,
            covered_dl,
            covered_ul,
            covered_joint: covered_energy && covered_dl && covered_ul,
            r1,
            r2,
            retries,
            capped: false,
        }
    }

    /// Runs all trials and aggregates them.
    pub fn estimate(&self) -> Result<EstimateBundle> {
        let counts = (0..self.cfg.n_trials)
            .into_par_iter()
            .map(|i| Counts::of(&self.simulate_trial(i)))
            .reduce(Counts::default, Counts::add);
        self.bundle(counts)
    }

    fn bundle(&self, c: Counts) -> Result<EstimateBundle> {
        if c.retries as f64 > MAX_RETRY_RATE * c.n as f64 {
            return Err(Error::RetryRate {
                retries: c.retries,
                trials: c.n,
            });
        }
        let p = &self.cfg.params;
        let s = &self.cfg.slots;
        let joint_rate = c.joint as f64 / c.n as f64;
        let log = self.cfg.log_base;
        Ok(EstimateBundle {
            mode: self.cfg.mode,
            n_trials: c.n,
            energy: mc_estimate(c.energy, c.n),
            dl: self.has_dl.then(|| mc_estimate(c.dl, c.n)),
            ul: self.has_ul.then(|| mc_estimate(c.ul, c.n)),
            joint: mc_estimate(c.joint, c.n),
            dl_sinr: self.has_dl.then(|| mc_estimate(c.dl_sinr, c.n)),
            ul_sinr: self.has_ul.then(|| mc_estimate(c.ul_sinr, c.n)),
            activity: self.activity,
            dl_throughput: s.tau2() * p.w_d * log.rate(p.beta_dl) * joint_rate,
            ul_throughput: s.tau3() * p.w_u * log.rate(p.beta_ul) * joint_rate,
            retries: c.retries,
            capped: c.capped,
        })
    }

    /// Downlink coverage with and without the energy condition, binned by
    /// the second-nearest BS distance. `edges` must be increasing; trials
    /// outside `[edges[0], edges[last])` are dropped.
    pub fn conditional_dl_by_r2(&self, edges: &[f64]) -> Result<Vec<R2Bin>> {
        if !self.has_dl {
            return Err(Error::ModeMismatch {
                op: "conditional_dl_by_r2",
                needed: Mode::Downlink,
                tau2: self.cfg.slots.tau2(),
                tau3: self.cfg.slots.tau3(),
            });
        }
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::SimConfig("bin edges must be increasing".into()));
        }
        let bins = edges.len() - 1;
        let zero = || vec![(0u64, 0u64, 0u64); bins];
        let counts = (0..self.cfg.n_trials)
            .into_par_iter()
            .fold(zero, |mut acc, i| {
                let o = self.simulate_trial(i);
                let k = edges.partition_point(|e| *e <= o.r2);
                if k >= 1 && k <= bins {
                    let slot = &mut acc[k - 1];
                    slot.0 += 1;
                    slot.1 += u64::from(o.covered_dl && o.covered_energy);
                    slot.2 += u64::from(o.covered_dl);
                }
                acc
            })
            .reduce(zero, |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    x.0 += y.0;
                    x.1 += y.1;
                    x.2 += y.2;
                }
                a
            });
        Ok(counts
            .into_iter()
            .enumerate()
            .map(|(k, (n, rf, reg))| R2Bin {
                lo: edges[k],
                hi: edges[k + 1],
                n,
                rf_powered: (n > 0).then(|| mc_estimate(rf, n)),
                regular: (n > 0).then(|| mc_estimate(reg, n)),
            })
            .collect())
    }
}

/// Conditional downlink coverage for trials with `lo <= r2 < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct R2Bin {
    pub lo: f64,
    pub hi: f64,
    pub n: u64,
    /// Energy and SINR coverage.
    pub rf_powered: Option<CoverageEstimate>,
    /// SINR coverage alone.
    pub regular: Option<CoverageEstimate>,
}

/// Mean and variance bounds for `sum_k w_k |x_k|^-alpha` over the points
/// of a PPP beyond a distance `d`, where the marks `w_k` have the given
/// first two moments.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TailBound {
    mean_coef: f64,
    var_coef: f64,
    alpha: f64,
}

impl TailBound {
    pub(crate) fn new(density: f64, m1: f64, m2: f64, alpha: f64) -> Self {
        Self {
            mean_coef: 2.0 * PI * density * m1 / (alpha - 2.0),
            var_coef: 2.0 * PI * density * m2 / (2.0 * alpha - 2.0),
            alpha,
        }
    }

    pub(crate) fn mean(&self, d: f64) -> f64 {
        self.mean_coef * d.powf(2.0 - self.alpha)
    }

    /// Whether the rest beyond `d` reaches `gap` with probability at most `tol`.
    fn settled(&self, d: f64, gap: f64, tol: f64) -> bool {
        let mean = self.mean(d);
        if gap <= mean {
            return false;
        }
        let var = self.var_coef * d.powf(2.0 - 2.0 * self.alpha);
        let t = gap - mean;
        var <= tol * (var + t * t)
    }
}

/// Rayleigh-faded path loss from BSs.
fn bs_tail(p: &SystemParams) -> TailBound {
    TailBound::new(p.lambda_b, 1.0, 2.0, p.alpha)
}

/// Runs `cfg` and aggregates the trials.
pub fn estimate(cfg: &SimConfig) -> Result<EstimateBundle> {
    Simulator::new(*cfg)?.estimate()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(mode: Mode, slots: SlotPartition, n: u64) -> SimConfig {
        SimConfig::new(SystemParams::paper_defaults(), slots, mode, n, 7)
    }

    #[test]
    fn wilson_properties() {
        let (lo, hi) = wilson_interval(0, 1);
        assert!(lo == 0.0 && hi > 0.7);
        let (lo, hi) = wilson_interval(1, 1);
        assert!(hi == 1.0 && lo < 0.3);
        let (lo, hi) = wilson_interval(500, 1000);
        assert!((0.5 - lo - (hi - 0.5)).abs() < 1e-12);
        assert!((hi - lo - 2.0 * 1.96 * (0.25f64 / 1000.0).sqrt()).abs() < 1e-3);
    }

    #[test]
    fn vacuous_conditions_always_cover() {
        let p = SystemParams {
            beta_dl: 0.0,
            beta_ul: 0.0,
            e_rec: 0.0,
            ..SystemParams::paper_defaults()
        };
        let c = SimConfig::new(p, SlotPartition::downlink(0.3).unwrap(), Mode::Joint, 500, 1);
        let b = estimate(&c).unwrap();
        assert_eq!(b.joint.value, 1.0);
    }

    #[test]
    fn huge_noise_never_covers() {
        let p = SystemParams {
            sigma2_dl: 1e12,
            sigma2_ul: 1e12,
            ..SystemParams::paper_defaults()
        };
        let c = SimConfig::new(p, SlotPartition::joint(0.4, 0.3).unwrap(), Mode::Joint, 300, 1);
        let b = estimate(&c).unwrap();
        assert_eq!(b.dl_sinr.unwrap().value, 0.0);
        assert_eq!(b.ul_sinr.unwrap().value, 0.0);
    }

    #[test]
    fn trial_conjunction_and_demand() {
        let c = cfg(Mode::Joint, SlotPartition::joint(0.4, 0.3).unwrap(), 200);
        let sim = Simulator::new(c).unwrap();
        let p = &c.params;
        for i in 0..200 {
            let o = sim.simulate_trial(i);
            assert_eq!(o.covered_joint, o.covered_energy && o.covered_dl && o.covered_ul);
            let want = p.e_rec + 0.3 * p.slot_t * p.rho * o.r1.powf(p.epsilon * p.alpha);
            assert!((o.e_min - want).abs() <= 1e-15 * want);
            assert!(o.r1 < o.r2);
        }
    }

    #[test]
    fn reproducible_and_order_free() {
        let c = cfg(Mode::Joint, SlotPartition::joint(0.4, 0.3).unwrap(), 2000);
        let a = estimate(&c).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| estimate(&c).unwrap());
        assert_eq!(a, b);
        // trials are addressable individually
        let sim = Simulator::new(c).unwrap();
        assert_eq!(sim.simulate_trial(17), sim.simulate_trial(17));
    }

    #[test]
    fn windowed_and_voronoi_run() {
        let mut c = cfg(Mode::Uplink, SlotPartition::uplink(0.5).unwrap(), 40);
        c.window = Window::Fixed(8.0);
        let b = estimate(&c).unwrap();
        assert!(b.ul.is_some() && b.dl.is_none());
        c.interference = InterferenceModel::VoronoiExact;
        c.window = Window::Auto;
        let b = estimate(&c).unwrap();
        assert!(b.activity.is_none());
        assert!(b.ul_sinr.unwrap().value > 0.0);
    }

    #[test]
    fn tight_window_fails_on_retries() {
        let mut c = cfg(Mode::Downlink, SlotPartition::downlink(0.3).unwrap(), 200);
        c.window = Window::Fixed(0.3);
        assert!(matches!(estimate(&c), Err(Error::RetryRate { .. })));
    }

    #[test]
    fn bad_configs_rejected() {
        let mut c = cfg(Mode::Downlink, SlotPartition::downlink(0.3).unwrap(), 0);
        assert!(c.validate().is_err());
        c.n_trials = 10;
        c.window = Window::Fixed(-1.0);
        assert!(c.validate().is_err());
        let c = cfg(Mode::Uplink, SlotPartition::downlink(0.3).unwrap(), 10);
        assert!(matches!(c.validate(), Err(Error::ModeMismatch { .. })));
    }

    #[test]
    fn bins_partition_trials() {
        let c = cfg(Mode::Downlink, SlotPartition::downlink(0.1).unwrap(), 3000);
        let sim = Simulator::new(c).unwrap();
        let edges: Vec<f64> = (0..=40).map(|k| 0.1 * k as f64).collect();
        let bins = sim.conditional_dl_by_r2(&edges).unwrap();
        let n: u64 = bins.iter().map(|b| b.n).sum();
        assert!(n > 2990);
        for b in bins.iter().filter(|b| b.n > 0) {
            assert!(b.rf_powered.unwrap().value <= b.regular.unwrap().value);
        }
    }
}
