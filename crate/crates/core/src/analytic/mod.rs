//! Coverage probabilities and throughput under the dominant-BS
//! approximation.
//!
//! Every probability is an integral over the nearest and second-nearest BS
//! distances `(r1, r2)` of a product of conditional factors: energy coverage
//! (a hypoexponential tail), downlink SINR coverage and uplink SINR
//! coverage. The region `0 < r1 < r2` is split where the energy shortfall
//! changes sign so that every quadrature panel sees a smooth integrand.

mod laplace;

use std::f64::consts::PI;

pub use laplace::{
    shape_direct, ul_interference_laplace, ul_interference_laplace_direct, InterferenceTransform,
};

use crate::model::{
    distance_density, f_dl, f_joint, f_ul, g_factor, h_boundary, hypoexp_unchecked,
    nearest_density, threshold_a, threshold_a_tilde, CoverageEstimate, DistancePair, Mode,
    SlotPartition, SystemParams,
};
use crate::quadrature::{
    integrate_semi_infinite_scaled, integrate_triangle, root_bisect, QuadTol, RegionSplit,
    BISECT_TOL, INNER_TOL, OUTER_TOL,
};
use crate::{Error, Result};

/// Where the density of active uplink interferers comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensitySource {
    /// `P_h lambda_b`, with `P_h` the energy coverage of the active mode.
    AnalyticPh,
    /// A fixed density, for sensitivity studies.
    Fixed(f64),
}

/// Logarithm base of the rate `log(1 + beta)` in throughput.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    E,
    Two,
}

impl LogBase {
    pub fn rate(self, beta: f64) -> f64 {
        match self {
            LogBase::E => beta.ln_1p(),
            LogBase::Two => beta.ln_1p() / std::f64::consts::LN_2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LogBase::E => "e",
            LogBase::Two => "2",
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "e" | "E" => Ok(LogBase::E),
            "2" => Ok(LogBase::Two),
            other => Err(format!("unknown log base `{other}` (expected e or 2)")),
        }
    }
}

/// Quadrature tolerances for the inner (`r1`) and outer (`r2`) integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub inner: QuadTol,
    pub outer: QuadTol,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            inner: INNER_TOL,
            outer: OUTER_TOL,
        }
    }
}

/// Everything an analytic evaluation needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeRequest {
    pub params: SystemParams,
    pub slots: SlotPartition,
    pub mode: Mode,
    pub interferer_density: DensitySource,
    pub log_base: LogBase,
    pub tol: Tolerances,
}

impl ModeRequest {
    pub fn new(params: SystemParams, slots: SlotPartition, mode: Mode) -> Result<Self> {
        let req = Self {
            params,
            slots,
            mode,
            interferer_density: DensitySource::AnalyticPh,
            log_base: LogBase::E,
            tol: Tolerances::default(),
        };
        req.validate()?;
        Ok(req)
    }

    pub fn with_density(mut self, source: DensitySource) -> Self {
        self.interferer_density = source;
        self
    }

    pub fn with_log_base(mut self, base: LogBase) -> Self {
        self.log_base = base;
        self
    }

    pub fn with_tol(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        require(&self.slots, self.mode, "request")?;
        if let DensitySource::Fixed(d) = self.interferer_density {
            if !(0.0..=self.params.lambda_b).contains(&d) {
                return Err(Error::Domain(format!(
                    "fixed interferer density {d} must lie in [0, lambda_b = {}]",
                    self.params.lambda_b
                )));
            }
        }
        Ok(())
    }
}

fn require(slots: &SlotPartition, mode: Mode, op: &'static str) -> Result<()> {
    if slots.supports(mode) {
        Ok(())
    } else {
        Err(Error::ModeMismatch {
            op,
            needed: mode,
            tau2: slots.tau2(),
            tau3: slots.tau3(),
        })
    }
}

/// Energy shortfall of `mode` at `(r1, r2)`; `r1 = 0` is allowed.
fn shortfall(mode: Mode, r1: f64, r2: f64, p: &SystemParams, s: &SlotPartition) -> f64 {
    let pair = DistancePair::new_unchecked(r1, r2);
    match mode {
        Mode::Joint => f_joint(&pair, p, s),
        Mode::Downlink => f_dl(&pair, p, s),
        Mode::Uplink => f_ul(&pair, p, s),
    }
}

fn energy_factor(mode: Mode, r1: f64, r2: f64, p: &SystemParams, s: &SlotPartition) -> f64 {
    let f = shortfall(mode, r1, r2, p, s);
    hypoexp_unchecked(r1.powf(p.alpha), r2.powf(p.alpha), f)
}

/// `P(E_H >= E_min | r1, r2)` for the request's mode.
pub fn cond_energy_coverage(pair: &DistancePair, req: &ModeRequest) -> f64 {
    energy_factor(req.mode, pair.r1(), pair.r2(), &req.params, &req.slots)
}

/// `P(SINR_DL >= beta_DL | r1, r2)` with the nearest interferer kept exact and
/// the rest replaced by its mean.
pub fn cond_dl_sinr_coverage(pair: &DistancePair, req: &ModeRequest) -> f64 {
    dl_factor(pair.r1(), pair.r2(), &req.params)
}

fn dl_factor(r1: f64, r2: f64, p: &SystemParams) -> f64 {
    if p.beta_dl == 0.0 {
        return 1.0;
    }
    let pair = DistancePair::new_unchecked(r1, r2);
    let ratio = (r1 / r2).powf(p.alpha);
    (-g_factor(&pair, p)).exp() / (1.0 + p.beta_dl * ratio)
}

/// Conditional uplink SINR coverage given `r1` at a fixed interferer density.
#[derive(Debug, Clone)]
pub struct UplinkKernel {
    beta: f64,
    noise: f64,
    exponent: f64,
    transform: InterferenceTransform,
}

impl UplinkKernel {
    pub fn new(p: &SystemParams, density: f64) -> Result<Self> {
        Ok(Self {
            beta: p.beta_ul,
            noise: p.beta_ul * p.sigma2_ul / p.rho,
            exponent: (1.0 - p.epsilon) * p.alpha,
            transform: InterferenceTransform::new(density, p)?,
        })
    }

    pub fn eval(&self, r1: f64) -> Result<f64> {
        if self.beta == 0.0 {
            return Ok(1.0);
        }
        let path = r1.powf(self.exponent);
        Ok((-self.noise * path).exp() * self.transform.eval(self.beta * path)?)
    }
}

/// Density of active uplink interferers used by computations in `mode`.
fn interferer_density_for(req: &ModeRequest, mode: Mode) -> Result<f64> {
    match req.interferer_density {
        DensitySource::Fixed(d) => Ok(d),
        DensitySource::AnalyticPh => {
            let ph = match mode {
                Mode::Downlink => return Ok(0.0),
                Mode::Joint | Mode::Uplink => energy_coverage_in(req, mode)?.value,
            };
            Ok(ph * req.params.lambda_b)
        }
    }
}

/// Density of active uplink interferers, `P_h lambda_b` or the fixed
/// override. Zero in downlink mode.
pub fn interferer_density(req: &ModeRequest) -> Result<f64> {
    interferer_density_for(req, req.mode)
}

/// `P(SINR_UL >= beta_UL | r1)` at the request's interferer density.
pub fn cond_ul_sinr_coverage(r1: f64, req: &ModeRequest) -> Result<f64> {
    if !(r1 > 0.0) {
        return Err(Error::Domain(format!("uplink coverage needs r1 > 0 (got {r1})")));
    }
    let mode = if req.mode == Mode::Downlink {
        Mode::Joint
    } else {
        req.mode
    };
    UplinkKernel::new(&req.params, interferer_density_for(req, mode)?)?.eval(r1)
}

/// Smallest `r` with `g(r) >= 0` for increasing `g` on `(0, inf)`; `0` when
/// `g > 0` throughout and `inf` when `g < 0` throughout.
fn increasing_root<G: Fn(f64) -> f64>(g: G, start: f64) -> Result<f64> {
    let mut hi = start;
    let mut steps = 0;
    while g(hi) < 0.0 {
        hi *= 2.0;
        steps += 1;
        if steps > 200 || !hi.is_finite() {
            return Ok(f64::INFINITY);
        }
    }
    let mut lo = start;
    steps = 0;
    while g(lo) > 0.0 {
        lo *= 0.5;
        steps += 1;
        if steps > 200 || lo == 0.0 {
            return Ok(0.0);
        }
    }
    if lo == hi {
        return Ok(lo);
    }
    Ok(root_bisect(g, lo, hi, BISECT_TOL)?)
}

/// Piecewise-smooth decomposition of the `(r1, r2)` region for `mode`.
struct EnergySplit {
    mode: Mode,
    breakpoints: Vec<f64>,
    params: SystemParams,
    slots: SlotPartition,
    threshold: f64,
}

impl EnergySplit {
    fn new(mode: Mode, p: &SystemParams, s: &SlotPartition) -> Result<Self> {
        let (breakpoints, threshold) = match mode {
            Mode::Downlink => {
                let a = threshold_a(p, s)?;
                (vec![a], a)
            }
            Mode::Uplink => {
                let a = threshold_a_tilde(p, s)?;
                (vec![a], a)
            }
            Mode::Joint => {
                let start = 1.0 / p.lambda_b.sqrt();
                // Below the diagonal root every r1 is covered; above the
                // r1 = 0 root none is.
                let diag = increasing_root(|r| shortfall(mode, r, r, p, s), start)?;
                let axis = increasing_root(|r| shortfall(mode, 0.0, r, p, s), start)?;
                (vec![diag, axis], f64::NAN)
            }
        };
        Ok(Self {
            mode,
            breakpoints,
            params: *p,
            slots: *s,
            threshold,
        })
    }

    /// `r1` below which energy coverage is certain at this `r2`.
    fn inner_boundary(&self, r2: f64) -> f64 {
        let (p, s) = (&self.params, &self.slots);
        match self.mode {
            Mode::Downlink => r2,
            Mode::Uplink => {
                if p.epsilon > 0.0 {
                    h_boundary(r2, p, s).map(|h| h.min(r2)).unwrap_or(r2)
                } else if r2 < self.threshold {
                    r2
                } else {
                    0.0
                }
            }
            Mode::Joint => {
                let f = |r1: f64| shortfall(self.mode, r1, r2, p, s);
                if f(0.0) >= 0.0 {
                    0.0
                } else if f(r2) <= 0.0 {
                    r2
                } else {
                    root_bisect(f, 0.0, r2, BISECT_TOL).unwrap_or(r2)
                }
            }
        }
    }
}

/// Integrates `density * energy * extra` over the split of `mode`.
fn integrate_energy_region<X: Fn(f64, f64) -> f64>(
    req: &ModeRequest,
    mode: Mode,
    extra: X,
) -> Result<CoverageEstimate> {
    let p = &req.params;
    let s = &req.slots;
    let split = EnergySplit::new(mode, p, s)?;
    let boundary = |r2: f64| split.inner_boundary(r2);
    let inner: Option<&dyn Fn(f64) -> f64> = match mode {
        Mode::Downlink => None,
        _ => Some(&boundary),
    };
    let region = RegionSplit::new(split.breakpoints.clone(), inner)
        .with_length_scale(1.0 / (PI * p.lambda_b).sqrt());
    let integrand = |r1: f64, r2: f64| {
        let w = distance_density(r1, r2, p.lambda_b);
        if w == 0.0 {
            return 0.0;
        }
        w * energy_factor(mode, r1, r2, p, s) * extra(r1, r2)
    };
    let r = integrate_triangle(integrand, &region, req.tol.inner, req.tol.outer)?;
    Ok(CoverageEstimate::quadrature(r.value, r.error, r.evals))
}

fn energy_coverage_in(req: &ModeRequest, mode: Mode) -> Result<CoverageEstimate> {
    integrate_energy_region(req, mode, |_, _| 1.0)
}

/// Probability that the harvested energy meets the demand of the request's
/// mode.
pub fn energy_coverage(req: &ModeRequest) -> Result<CoverageEstimate> {
    energy_coverage_in(req, req.mode)
}

/// Joint energy, downlink and uplink coverage. Uses the joint-mode energy
/// demand whatever `req.mode` says; with `tau3 = 0` and `beta_UL = 0` it is
/// the downlink coverage, with `tau2 = 0`, `E_rec = 0` and `beta_DL = 0` the
/// uplink coverage.
pub fn joint_coverage(req: &ModeRequest) -> Result<CoverageEstimate> {
    let p = &req.params;
    let ul = UplinkKernel::new(p, interferer_density_for(req, Mode::Joint)?)?;
    let failure = std::cell::Cell::new(None);
    let est = integrate_energy_region(req, Mode::Joint, |r1, r2| {
        dl_factor(r1, r2, p) * ul_or_record(&ul, r1, &failure)
    })?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(est),
    }
}

fn ul_or_record(ul: &UplinkKernel, r1: f64, failure: &std::cell::Cell<Option<Error>>) -> f64 {
    match ul.eval(r1) {
        Ok(v) => v,
        Err(e) => {
            failure.set(Some(e));
            0.0
        }
    }
}

/// Joint coverage summed the long way: the covered region `F <= 0` without
/// the energy factor plus the uncovered region with the two-exponential
/// difference written out. Slower and less accurate near `r1 = r2`; kept to
/// check [`joint_coverage`].
pub fn joint_coverage_expanded(req: &ModeRequest) -> Result<CoverageEstimate> {
    let p = &req.params;
    let s = &req.slots;
    let ul = UplinkKernel::new(p, interferer_density_for(req, Mode::Joint)?)?;
    let split = EnergySplit::new(Mode::Joint, p, s)?;
    let boundary = |r2: f64| split.inner_boundary(r2);
    let region = RegionSplit::new(split.breakpoints.clone(), Some(&boundary))
        .with_length_scale(1.0 / (PI * p.lambda_b).sqrt());
    let failure = std::cell::Cell::new(None);
    let integrand = |r1: f64, r2: f64| {
        let w = distance_density(r1, r2, p.lambda_b);
        if w == 0.0 {
            return 0.0;
        }
        let sinr = dl_factor(r1, r2, p) * ul_or_record(&ul, r1, &failure);
        let f = shortfall(Mode::Joint, r1, r2, p, s);
        if f <= 0.0 {
            return w * sinr;
        }
        let (a, b) = (r1.powf(p.alpha), r2.powf(p.alpha));
        w * sinr * (b * (-a * f).exp() - a * (-b * f).exp()) / (b - a)
    };
    let r = integrate_triangle(integrand, &region, req.tol.inner, req.tol.outer)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(CoverageEstimate::quadrature(r.value, r.error, r.evals))
}

/// Downlink coverage in downlink mode: SINR coverage and enough energy to
/// activate the receiver.
pub fn dl_coverage(req: &ModeRequest) -> Result<CoverageEstimate> {
    require(&req.slots, Mode::Downlink, "dl_coverage")?;
    let p = &req.params;
    integrate_energy_region(req, Mode::Downlink, |r1, r2| dl_factor(r1, r2, p))
}

/// Downlink SINR coverage of a network whose devices never run short of
/// energy.
pub fn dl_coverage_regular(req: &ModeRequest) -> Result<CoverageEstimate> {
    let p = &req.params;
    let region = RegionSplit::none().with_length_scale(1.0 / (PI * p.lambda_b).sqrt());
    let integrand = |r1: f64, r2: f64| {
        let w = distance_density(r1, r2, p.lambda_b);
        if w == 0.0 {
            return 0.0;
        }
        w * dl_factor(r1, r2, p)
    };
    let r = integrate_triangle(integrand, &region, req.tol.inner, req.tol.outer)?;
    Ok(CoverageEstimate::quadrature(r.value, r.error, r.evals))
}

/// Uplink coverage in uplink mode: SINR coverage and enough energy for
/// fractional-inversion transmission.
pub fn ul_coverage(req: &ModeRequest) -> Result<CoverageEstimate> {
    require(&req.slots, Mode::Uplink, "ul_coverage")?;
    let ul = UplinkKernel::new(&req.params, interferer_density_for(req, Mode::Uplink)?)?;
    let failure = std::cell::Cell::new(None);
    let est = integrate_energy_region(req, Mode::Uplink, |r1, _| {
        ul_or_record(&ul, r1, &failure)
    })?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(est),
    }
}

/// Uplink SINR coverage of a regularly powered network, where every device
/// transmits and interferers have density `lambda_b`.
pub fn ul_coverage_regular(req: &ModeRequest) -> Result<CoverageEstimate> {
    let p = &req.params;
    let ul = UplinkKernel::new(p, p.lambda_b)?;
    let failure = std::cell::Cell::new(None);
    let integrand = |r1: f64| {
        let w = nearest_density(r1, p.lambda_b);
        if w == 0.0 {
            return 0.0;
        }
        w * ul_or_record(&ul, r1, &failure)
    };
    let r = integrate_semi_infinite_scaled(
        integrand,
        0.0,
        1.0 / (PI * p.lambda_b).sqrt(),
        req.tol.outer,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(CoverageEstimate::quadrature(r.value, r.error, r.evals))
}

/// Average downlink and uplink rates (bits/s with base-2 logs, nats/s
/// otherwise) and the coverage they are built on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Throughput {
    pub dl: f64,
    pub ul: f64,
    pub coverage: CoverageEstimate,
}

/// Throughput of the request's mode: joint coverage scales both links,
/// downlink and uplink modes use their own coverage.
pub fn throughput(req: &ModeRequest) -> Result<Throughput> {
    let p = &req.params;
    let s = &req.slots;
    let dl_rate = s.tau2() * p.w_d * req.log_base.rate(p.beta_dl);
    let ul_rate = s.tau3() * p.w_u * req.log_base.rate(p.beta_ul);
    let (coverage, dl, ul) = match req.mode {
        Mode::Joint => {
            let c = joint_coverage(req)?;
            (c, dl_rate * c.value, ul_rate * c.value)
        }
        Mode::Downlink => {
            let c = dl_coverage(req)?;
            (c, dl_rate * c.value, 0.0)
        }
        Mode::Uplink => {
            let c = ul_coverage(req)?;
            (c, 0.0, ul_rate * c.value)
        }
    };
    Ok(Throughput { dl, ul, coverage })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::hypoexp_tail;

    fn defaults() -> SystemParams {
        SystemParams::paper_defaults()
    }

    fn dl_req(tau1: f64) -> ModeRequest {
        ModeRequest::new(defaults(), SlotPartition::downlink(tau1).unwrap(), Mode::Downlink)
            .unwrap()
    }

    #[test]
    fn cond_energy_examples() {
        let req = ModeRequest::new(defaults(), SlotPartition::joint(0.4, 0.3).unwrap(), Mode::Joint)
            .unwrap();
        // covered region: tiny r2 makes the far-field mean huge
        let pair = DistancePair::new(0.01, 0.02).unwrap();
        assert_eq!(cond_energy_coverage(&pair, &req), 1.0);
        // r1 -> 0 with a fixed positive shortfall
        let near = DistancePair::new(1e-6, 3.0).unwrap();
        assert!(cond_energy_coverage(&near, &req) > 1.0 - 1e-12);
        // rates 1 and 2 with shortfall 1 via a tuned E_rec
        let r2 = 2f64.powf(0.25);
        let p = defaults();
        let s = SlotPartition::downlink(0.5).unwrap();
        let psi = crate::model::psi_residual(r2, &p).unwrap();
        let e_rec = (1.0 + psi) * s.tau1() * p.slot_t * p.eta * p.p_t;
        let req = ModeRequest::new(SystemParams { e_rec, ..p }, s, Mode::Downlink).unwrap();
        let got = cond_energy_coverage(&DistancePair::new(1.0, r2).unwrap(), &req);
        assert!((got - hypoexp_tail(1.0, 2.0, 1.0).unwrap()).abs() < 1e-12);
        assert!((got - 0.600424).abs() < 1e-6);
    }

    #[test]
    fn cond_dl_examples() {
        let req = dl_req(0.3);
        let pair = DistancePair::new(0.5, 1.0).unwrap();
        let want = (-0.247_976_f64).exp() / (1.0 + 1.258_925_4 * 0.0625);
        assert!((cond_dl_sinr_coverage(&pair, &req) - want).abs() < 1e-5);
        let zero = ModeRequest {
            params: SystemParams { beta_dl: 0.0, ..defaults() },
            ..req
        };
        assert_eq!(cond_dl_sinr_coverage(&pair, &zero), 1.0);
        // pure dominant-interferer limit
        let bare = SystemParams {
            sigma2_dl: 0.0,
            lambda_b: 1e-12,
            ..defaults()
        };
        let v = dl_factor(1.0 - 1e-9, 1.0, &bare);
        assert!((v - 1.0 / (1.0 + bare.beta_dl)).abs() < 1e-8);
    }

    #[test]
    fn energy_coverage_trivial_and_threshold() {
        let free = ModeRequest::new(
            SystemParams { e_rec: 0.0, ..defaults() },
            SlotPartition::downlink(0.2).unwrap(),
            Mode::Downlink,
        )
        .unwrap();
        assert!((energy_coverage(&free).unwrap().value - 1.0).abs() < 1e-6);
        let free_joint = ModeRequest { mode: Mode::Joint, ..free };
        assert!((energy_coverage(&free_joint).unwrap().value - 1.0).abs() < 1e-6);

        // Energy coverage is at least P(R2 < A).
        let req = dl_req(0.1);
        let a = threshold_a(&req.params, &req.slots).unwrap();
        let e = energy_coverage(&req).unwrap().value;
        assert!(e > crate::model::second_nearest_cdf(a, 1.0));
    }

    #[test]
    fn energy_monotone_in_tau1() {
        let mut last = 0.0;
        for &t in &[0.02, 0.05, 0.1, 0.2, 0.3, 0.5] {
            let v = energy_coverage(&dl_req(t)).unwrap().value;
            assert!(v > last, "tau1={t}: {v} after {last}");
            last = v;
        }
    }

    #[test]
    fn joint_split_matches_downlink_closed_form() {
        let req = dl_req(0.1);
        let split = EnergySplit::new(Mode::Joint, &req.params, &req.slots).unwrap();
        let a = threshold_a(&req.params, &req.slots).unwrap();
        for b in &split.breakpoints {
            assert!((b - a).abs() < 1e-10 * a);
        }
    }

    #[test]
    fn joint_root_separates_signs() {
        let p = defaults();
        let s = SlotPartition::joint(0.3, 0.4).unwrap();
        let split = EnergySplit::new(Mode::Joint, &p, &s).unwrap();
        for &r2 in &[0.3, 0.7, 1.1, 1.9, 3.0] {
            let root = split.inner_boundary(r2);
            assert!((0.0..=r2).contains(&root));
            if root > 0.0 && root < r2 {
                assert!(shortfall(Mode::Joint, root * (1.0 - 1e-6), r2, &p, &s) < 0.0);
                assert!(shortfall(Mode::Joint, root * (1.0 + 1e-6), r2, &p, &s) > 0.0);
                // dense-grid oracle
                let n = 1_000_000;
                let grid = (1..n)
                    .map(|i| r2 * i as f64 / n as f64)
                    .find(|&r1| shortfall(Mode::Joint, r1, r2, &p, &s) > 0.0)
                    .unwrap();
                assert!((grid - root).abs() <= r2 / n as f64 + 1e-12);
            }
        }
    }

    #[test]
    fn joint_expanded_agrees() {
        let req = ModeRequest::new(defaults(), SlotPartition::joint(0.4, 0.3).unwrap(), Mode::Joint)
            .unwrap();
        let a = joint_coverage(&req).unwrap();
        let b = joint_coverage_expanded(&req).unwrap();
        assert!((a.value - b.value).abs() < 1e-6, "{} vs {}", a.value, b.value);
        assert!(a.value > 0.0 && a.value < 1.0);
    }

    #[test]
    fn regular_bounds() {
        let req = dl_req(0.2);
        let reg = dl_coverage_regular(&req).unwrap();
        let rf = dl_coverage(&req).unwrap();
        assert!(reg.value >= rf.value - 1e-7);
        let free = ModeRequest {
            params: SystemParams { e_rec: 0.0, ..defaults() },
            ..req
        };
        let a = dl_coverage(&free).unwrap().value;
        assert!((a - reg.value).abs() < 1e-7);
    }

    #[test]
    fn vanishing_thresholds_give_certain_coverage() {
        let p = SystemParams {
            beta_dl: 0.0,
            beta_ul: 0.0,
            ..defaults()
        };
        let req = ModeRequest::new(p, SlotPartition::uplink(0.4).unwrap(), Mode::Uplink).unwrap();
        assert!((ul_coverage_regular(&req).unwrap().value - 1.0).abs() < 1e-6);
        assert!((dl_coverage_regular(&req).unwrap().value - 1.0).abs() < 1e-6);
        assert_eq!(cond_ul_sinr_coverage(0.7, &req).unwrap(), 1.0);
    }

    #[test]
    fn full_inversion_regular_uplink_is_density_free() {
        let base = SystemParams {
            epsilon: 1.0,
            sigma2_ul: 1e-300,
            ..defaults()
        };
        let mut values = Vec::new();
        for &lb in &[0.5, 1.0, 2.0] {
            let p = SystemParams {
                lambda_b: lb,
                lambda_u: 30.0 * lb,
                ..base
            };
            let req =
                ModeRequest::new(p, SlotPartition::uplink(0.5).unwrap(), Mode::Uplink).unwrap();
            values.push(ul_coverage_regular(&req).unwrap().value);
        }
        assert!((values[0] - values[1]).abs() < 1e-6 && (values[1] - values[2]).abs() < 1e-6);
    }

    #[test]
    fn throughput_hand_value_and_zero_slots() {
        let rate = 0.5 * 1e6 * (1.0 + 1.258_925_4f64).ln();
        assert!((rate - 4.0744e5).abs() < 50.0);
        let req = ModeRequest::new(
            SystemParams {
                e_rec: 0.0,
                beta_ul: 0.0,
                ..defaults()
            },
            SlotPartition::joint(0.5, 0.5).unwrap(),
            Mode::Joint,
        )
        .unwrap();
        let t = throughput(&req).unwrap();
        assert_eq!(t.dl, 0.0);
        assert!(t.ul == 0.0);
    }

    #[test]
    fn mode_mismatch_is_reported() {
        let req = ModeRequest::new(defaults(), SlotPartition::joint(0.4, 0.3).unwrap(), Mode::Joint)
            .unwrap();
        assert!(matches!(dl_coverage(&req), Err(Error::ModeMismatch { .. })));
        assert!(matches!(ul_coverage(&req), Err(Error::ModeMismatch { .. })));
        assert!(ModeRequest::new(defaults(), SlotPartition::downlink(0.3).unwrap(), Mode::Uplink)
            .is_err());
    }
}
