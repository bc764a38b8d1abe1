//! Domain types and the closed-form scalar helpers shared by the analytic
//! engine and the simulator.
//!
//! All quantities are linear (watts, joules, seconds, hertz). Conversions from
//! dB-style units happen in [`crate::units`] before values reach this module.

use std::f64::consts::PI;
use std::fmt;

use crate::units::db_to_linear;
use crate::Error;

/// Physical and network constants of the RF-powered IoT network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// BS density per unit area.
    pub lambda_b: f64,
    /// Device density per unit area. Only the Voronoi simulator consumes it.
    pub lambda_u: f64,
    /// Path-loss exponent.
    pub alpha: f64,
    /// RF-to-DC conversion efficiency.
    pub eta: f64,
    /// BS transmit power (W).
    pub p_t: f64,
    /// Downlink noise power (W).
    pub sigma2_dl: f64,
    /// Uplink noise power (W).
    pub sigma2_ul: f64,
    /// BS receiver sensitivity (W).
    pub rho: f64,
    /// Fractional power-control exponent.
    pub epsilon: f64,
    /// Slot duration (s).
    pub slot_t: f64,
    /// Receiver-activation energy (J).
    pub e_rec: f64,
    /// Downlink SINR threshold (linear).
    pub beta_dl: f64,
    /// Uplink SINR threshold (linear).
    pub beta_ul: f64,
    /// Downlink bandwidth (Hz).
    pub w_d: f64,
    /// Uplink bandwidth (Hz).
    pub w_u: f64,
}

impl SystemParams {
    /// The reference parameter set used throughout the experiments:
    /// `E_rec = 1e-5 J`, `lambda_b = 1`, `alpha = 4`, `eta = 1e-3`,
    /// `W_D = W_U = 1 MHz`, `beta = 1 dB`, `P_t = 0 dBW`, `P_t / sigma2_dl = 20 dB`,
    /// `rho = 1 dBm`, `rho / sigma2_ul = 20 dB`, `lambda_u = 30 lambda_b`,
    /// `epsilon = 0.8`, `T = 10 ms`.
    pub fn paper_defaults() -> Self {
        let p_t = db_to_linear(0.0);
        let rho = db_to_linear(1.0) * 1e-3;
        Self {
            lambda_b: 1.0,
            lambda_u: 30.0,
            alpha: 4.0,
            eta: 1e-3,
            p_t,
            sigma2_dl: p_t / db_to_linear(20.0),
            sigma2_ul: rho / db_to_linear(20.0),
            rho,
            epsilon: 0.8,
            slot_t: 1e-2,
            e_rec: 1e-5,
            beta_dl: db_to_linear(1.0),
            beta_ul: db_to_linear(1.0),
            w_d: 1e6,
            w_u: 1e6,
        }
    }

    /// Checks every structural invariant and reports all violations at once.
    pub fn validate(&self) -> Result<(), Error> {
        let mut problems = Vec::new();
        let mut positive = |name: &str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                problems.push(format!("{name} must be positive and finite (got {v})"));
            }
        };
        positive("lambda_b", self.lambda_b);
        positive("lambda_u", self.lambda_u);
        positive("p_t", self.p_t);
        positive("sigma2_dl", self.sigma2_dl);
        positive("sigma2_ul", self.sigma2_ul);
        positive("rho", self.rho);
        positive("slot_t", self.slot_t);
        positive("w_d", self.w_d);
        positive("w_u", self.w_u);
        if !(self.alpha > 2.0 && self.alpha.is_finite()) {
            problems.push(format!("alpha must exceed 2 (got {})", self.alpha));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            problems.push(format!("eta must lie in (0, 1) (got {})", self.eta));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            problems.push(format!("epsilon must lie in [0, 1] (got {})", self.epsilon));
        }
        if !(self.e_rec >= 0.0 && self.e_rec.is_finite()) {
            problems.push(format!("e_rec must be non-negative (got {})", self.e_rec));
        }
        for (name, v) in [("beta_dl", self.beta_dl), ("beta_ul", self.beta_ul)] {
            if !(v >= 0.0 && v.is_finite()) {
                problems.push(format!("{name} must be non-negative (got {v})"));
            }
        }
        if self.lambda_u <= self.lambda_b {
            problems.push(format!(
                "lambda_u ({}) must exceed lambda_b ({})",
                self.lambda_u, self.lambda_b
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(problems))
        }
    }

    /// `2 pi lambda_b / (alpha - 2)`, the prefactor of the far-field mean.
    #[inline]
    pub(crate) fn campbell_prefactor(&self) -> f64 {
        2.0 * PI * self.lambda_b / (self.alpha - 2.0)
    }
}

/// Operating mode of a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Joint,
    Downlink,
    Uplink,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Joint => "joint",
            Mode::Downlink => "downlink",
            Mode::Uplink => "uplink",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "joint" => Ok(Mode::Joint),
            "downlink" | "dl" => Ok(Mode::Downlink),
            "uplink" | "ul" => Ok(Mode::Uplink),
            other => Err(format!("unknown mode `{other}` (expected joint, downlink or uplink)")),
        }
    }
}

/// Tolerance on `tau1 + tau2 + tau3 = 1`.
pub const SLOT_SUM_TOL: f64 = 1e-12;

/// Time-division of a slot into charging, downlink and uplink fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotPartition {
    tau1: f64,
    tau2: f64,
    tau3: f64,
}

impl SlotPartition {
    pub fn new(tau1: f64, tau2: f64, tau3: f64) -> Result<Self, Error> {
        let ok = tau1 > 0.0
            && tau2 >= 0.0
            && tau3 >= 0.0
            && (tau1 + tau2 + tau3 - 1.0).abs() <= SLOT_SUM_TOL;
        if ok {
            Ok(Self { tau1, tau2, tau3 })
        } else {
            Err(Error::InvalidSlots { tau1, tau2, tau3 })
        }
    }

    /// Charging then downlink only.
    pub fn downlink(tau1: f64) -> Result<Self, Error> {
        Self::new(tau1, 1.0 - tau1, 0.0)
    }

    /// Charging then uplink only.
    pub fn uplink(tau1: f64) -> Result<Self, Error> {
        Self::new(tau1, 0.0, 1.0 - tau1)
    }

    /// All three sub-slots, with `tau2 = 1 - tau1 - tau3`.
    pub fn joint(tau1: f64, tau3: f64) -> Result<Self, Error> {
        let tau2 = 1.0 - tau1 - tau3;
        // Clamp rounding residue so that e.g. (0.7, 0.3) is accepted.
        let tau2 = if tau2.abs() <= SLOT_SUM_TOL { 0.0 } else { tau2 };
        Self::new(tau1, tau2, tau3)
    }

    pub fn tau1(&self) -> f64 {
        self.tau1
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    pub fn tau3(&self) -> f64 {
        self.tau3
    }

    /// The mode implied by which sub-slots are empty.
    pub fn mode(&self) -> Mode {
        match (self.tau2 > 0.0, self.tau3 > 0.0) {
            (_, false) => Mode::Downlink,
            (false, true) => Mode::Uplink,
            (true, true) => Mode::Joint,
        }
    }

    /// Whether a computation in `mode` may run on this partition.
    ///
    /// The joint expressions specialise to the other two modes when a
    /// sub-slot vanishes, so joint mode accepts any partition.
    pub fn supports(&self, mode: Mode) -> bool {
        match mode {
            Mode::Joint => true,
            Mode::Downlink => self.tau3 == 0.0,
            Mode::Uplink => self.tau2 == 0.0,
        }
    }
}

/// Distances from the typical device to its nearest and second-nearest BS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistancePair {
    r1: f64,
    r2: f64,
}

impl DistancePair {
    pub fn new(r1: f64, r2: f64) -> Result<Self, Error> {
        if r1 > 0.0 && r1 < r2 && r2.is_finite() {
            Ok(Self { r1, r2 })
        } else {
            Err(Error::InvalidDistances { r1, r2 })
        }
    }

    /// Builds a pair without checking `0 < r1 < r2`; quadrature nodes
    /// satisfy it by construction.
    #[inline]
    pub(crate) fn new_unchecked(r1: f64, r2: f64) -> Self {
        Self { r1, r2 }
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }
}

/// Which engine produced a [`CoverageEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateKind {
    Quadrature,
    MonteCarlo,
}

/// A probability together with an error bound.
///
/// For quadrature the error is the integration error bound; for Monte Carlo
/// it is the larger side of the 95% Wilson interval, which is kept in
/// `interval`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageEstimate {
    pub value: f64,
    pub error: f64,
    pub kind: EstimateKind,
    /// Quadrature: integrand evaluations. Monte Carlo: trials.
    pub trials_or_evals: u64,
    pub interval: Option<(f64, f64)>,
}

impl CoverageEstimate {
    pub fn quadrature(value: f64, error: f64, evals: u64) -> Self {
        Self {
            value: value.clamp(0.0, 1.0),
            error: error.abs(),
            kind: EstimateKind::Quadrature,
            trials_or_evals: evals,
            interval: None,
        }
    }

    pub fn monte_carlo(value: f64, lo: f64, hi: f64, trials: u64) -> Self {
        Self {
            value,
            error: (value - lo).max(hi - value).max(0.0),
            kind: EstimateKind::MonteCarlo,
            trials_or_evals: trials,
            interval: Some((lo, hi)),
        }
    }

    /// Half-width of the Monte Carlo interval, or the quadrature bound.
    pub fn half_width(&self) -> f64 {
        match self.interval {
            Some((lo, hi)) => 0.5 * (hi - lo),
            None => self.error,
        }
    }
}

/// Mean far-field energy term beyond the second-nearest BS,
/// `2 pi lambda_b / (alpha - 2) * r2^(2 - alpha)`.
pub fn psi_residual(r2: f64, p: &SystemParams) -> Result<f64, Error> {
    if !(r2 > 0.0) {
        return Err(Error::Domain(format!("psi_residual needs r2 > 0 (got {r2})")));
    }
    Ok(psi_unchecked(r2, p))
}

#[inline]
pub(crate) fn psi_unchecked(r2: f64, p: &SystemParams) -> f64 {
    p.campbell_prefactor() * r2.powf(2.0 - p.alpha)
}

/// Relative rate gap below which [`hypoexp_tail`] uses the Erlang-2 limit.
pub const HYPOEXP_SWITCH: f64 = 1e-6;

/// `P(X/a + Y/b >= f)` for independent unit exponentials `X, Y`, i.e. the tail
/// of the sum of two exponentials with rates `a` and `b`. Non-positive `f`
/// maps to exactly 1.
pub fn hypoexp_tail(a: f64, b: f64, f: f64) -> Result<f64, Error> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!(
            "hypoexp_tail needs positive rates (got a = {a}, b = {b})"
        )));
    }
    Ok(hypoexp_unchecked(a, b, f))
}

#[inline]
pub(crate) fn hypoexp_unchecked(a: f64, b: f64, f: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let gap = hi - lo;
    if gap <= HYPOEXP_SWITCH * hi {
        // Erlang-2 at the mean rate; the tail is symmetric in the two rates,
        // so the residual is second order in the gap.
        let m = 0.5 * (lo + hi);
        return (1.0 + m * f) * (-m * f).exp();
    }
    // (hi e^{-lo f} - lo e^{-hi f}) / (hi - lo), rearranged so that the
    // difference of exponentials goes through expm1.
    let x = gap * f;
    let phi = -(-x).exp_m1() / x;
    (-lo * f).exp() * (1.0 + lo * f * phi)
}

/// Per-slot energy demand for receiver activation, normalised by the
/// charging energy scale: `E_rec / (tau1 T eta P_t)`.
pub fn charge_constant(p: &SystemParams, s: &SlotPartition) -> Result<f64, Error> {
    if !(s.tau1() > 0.0) {
        return Err(Error::Domain("charge_constant needs tau1 > 0".into()));
    }
    Ok(p.e_rec / (s.tau1() * p.slot_t * p.eta * p.p_t))
}

/// Uplink energy demand coefficient `tau3 rho / (tau1 eta P_t)`; multiply by
/// `r1^(eps alpha)` for the normalised uplink energy.
pub fn charge_constant_ul(p: &SystemParams, s: &SlotPartition) -> Result<f64, Error> {
    if !(s.tau1() > 0.0) {
        return Err(Error::Domain("charge_constant_ul needs tau1 > 0".into()));
    }
    Ok(s.tau3() * p.rho / (s.tau1() * p.eta * p.p_t))
}

/// Energy shortfall of the joint mode: receiver plus uplink demand minus the
/// far-field mean, in units of `tau1 T eta P_t`.
pub fn f_joint(pair: &DistancePair, p: &SystemParams, s: &SlotPartition) -> f64 {
    let c = p.e_rec / (s.tau1() * p.slot_t * p.eta * p.p_t);
    let ct = s.tau3() * p.rho / (s.tau1() * p.eta * p.p_t);
    c + ct * pair.r1().powf(p.epsilon * p.alpha) - psi_unchecked(pair.r2(), p)
}

/// Downlink-mode shortfall `C(tau1) - psi(r2)`.
pub fn f_dl(pair: &DistancePair, p: &SystemParams, s: &SlotPartition) -> f64 {
    let c = p.e_rec / (s.tau1() * p.slot_t * p.eta * p.p_t);
    c - psi_unchecked(pair.r2(), p)
}

/// Uplink-mode shortfall `C~(tau1) r1^(eps alpha) - psi(r2)`.
pub fn f_ul(pair: &DistancePair, p: &SystemParams, s: &SlotPartition) -> f64 {
    let ct = s.tau3() * p.rho / (s.tau1() * p.eta * p.p_t);
    ct * pair.r1().powf(p.epsilon * p.alpha) - psi_unchecked(pair.r2(), p)
}

/// Second-nearest distance below which downlink-mode energy coverage is
/// certain under the dominant-BS model. `+inf` when `C(tau1) = 0`.
pub fn threshold_a(p: &SystemParams, s: &SlotPartition) -> Result<f64, Error> {
    let c = charge_constant(p, s)?;
    if c == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((p.campbell_prefactor() / c).powf(1.0 / (p.alpha - 2.0)))
}

/// Uplink-mode counterpart of [`threshold_a`]. `+inf` when `C~(tau1) = 0`.
pub fn threshold_a_tilde(p: &SystemParams, s: &SlotPartition) -> Result<f64, Error> {
    let ct = charge_constant_ul(p, s)?;
    if ct == 0.0 {
        return Ok(f64::INFINITY);
    }
    let exponent = 1.0 / ((p.epsilon + 1.0) * p.alpha - 2.0);
    Ok((p.campbell_prefactor() / ct).powf(exponent))
}

/// Zero of `f_ul(., r2)` in `r1`: uplink-mode energy coverage is certain for
/// `r1` below it.
pub fn h_boundary(r2: f64, p: &SystemParams, s: &SlotPartition) -> Result<f64, Error> {
    if !(r2 > 0.0) {
        return Err(Error::Domain(format!("h_boundary needs r2 > 0 (got {r2})")));
    }
    let ct = charge_constant_ul(p, s)?;
    if ct == 0.0 || p.epsilon == 0.0 {
        return Err(Error::Domain(
            "h_boundary needs C~(tau1) > 0 and epsilon > 0".into(),
        ));
    }
    let ea = p.epsilon * p.alpha;
    Ok((p.campbell_prefactor() / ct).powf(1.0 / ea) * r2.powf((2.0 - p.alpha) / ea))
}

/// Downlink noise plus mean residual interference, scaled into the exponent
/// of the conditional SINR coverage.
pub fn g_factor(pair: &DistancePair, p: &SystemParams) -> f64 {
    let r1a = pair.r1().powf(p.alpha);
    let noise = p.beta_dl * p.sigma2_dl * r1a / p.p_t;
    if p.lambda_b == 0.0 {
        return noise;
    }
    noise
        + 2.0 * PI * p.lambda_b * p.beta_dl * r1a
            / ((p.alpha - 2.0) * pair.r2().powf(p.alpha - 2.0))
}

/// Joint density of the nearest and second-nearest BS distances. Zero
/// outside `0 < r1 < r2`.
pub fn distance_density(r1: f64, r2: f64, lambda_b: f64) -> f64 {
    if !(r1 > 0.0 && r1 < r2) {
        return 0.0;
    }
    let k = 2.0 * PI * lambda_b;
    k * k * r1 * r2 * (-PI * lambda_b * r2 * r2).exp()
}

/// Rayleigh density of the nearest BS distance. Zero for `r1 <= 0`.
pub fn nearest_density(r1: f64, lambda_b: f64) -> f64 {
    if !(r1 > 0.0) {
        return 0.0;
    }
    2.0 * PI * lambda_b * r1 * (-PI * lambda_b * r1 * r1).exp()
}

/// `P(R2 < a)` for the second-nearest BS distance.
pub fn second_nearest_cdf(a: f64, lambda_b: f64) -> f64 {
    if !(a > 0.0) {
        return 0.0;
    }
    if a.is_infinite() {
        return 1.0;
    }
    let m = PI * lambda_b * a * a;
    // 1 - e^{-m}(1 + m), written to keep precision for small m.
    -(-m).exp_m1() - m * (-m).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_params() -> SystemParams {
        SystemParams {
            lambda_b: 1.0,
            alpha: 4.0,
            ..SystemParams::paper_defaults()
        }
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn psi_hand_values() {
        let p = unit_params();
        assert!(close(psi_residual(1.0, &p).unwrap(), PI, 1e-12));
        assert!(close(psi_residual(2.0, &p).unwrap(), PI / 4.0, 1e-12));
        assert!(psi_residual(1e8, &p).unwrap() < 1e-15);
        assert!(psi_residual(0.0, &p).is_err());
        assert!(psi_residual(-1.0, &p).is_err());
    }

    #[test]
    fn hypoexp_hand_values() {
        assert_eq!(hypoexp_tail(1.0, 2.0, 0.0).unwrap(), 1.0);
        assert_eq!(hypoexp_tail(1.0, 2.0, -3.0).unwrap(), 1.0);
        let want = 2.0 * (-1.0f64).exp() - (-2.0f64).exp();
        assert!(close(hypoexp_tail(1.0, 2.0, 1.0).unwrap(), want, 1e-14));
        assert!(close(hypoexp_tail(2.0, 1.0, 1.0).unwrap(), want, 1e-14));
        assert!(close(hypoexp_tail(1.0, 1.0, 1.0).unwrap(), 2.0 * (-1.0f64).exp(), 1e-14));
        assert!(hypoexp_tail(0.0, 1.0, 1.0).is_err());
        assert!(hypoexp_tail(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn hypoexp_continuous_across_switch() {
        for &a in &[1e-3, 0.3, 1.0, 7.0, 250.0] {
            for &f in &[1e-3, 0.1, 1.0, 3.0, 10.0] {
                let f = f / a;
                let below = a * (1.0 + 0.5 * HYPOEXP_SWITCH);
                let above = a * (1.0 + 2.0 * HYPOEXP_SWITCH);
                // Convolution oracle: P(X/a >= f) + int_0^f a e^{-a x} e^{-b (f - x)} dx.
                let conv = (-a * f).exp()
                    + crate::quadrature::integrate_1d(
                        |x| a * (-a * x - above * (f - x)).exp(),
                        0.0,
                        f,
                        crate::quadrature::QuadTol::new(1e-13, 1e-16),
                    )
                    .unwrap()
                    .value;
                let hi = hypoexp_unchecked(a, above, f);
                assert!((hi - conv).abs() < 1e-11, "a={a} f={f}: {hi} vs {conv}");
                // The Erlang branch evaluated at the same rates.
                let m = 0.5 * (a + above);
                let erlang = (1.0 + m * f) * (-m * f).exp();
                assert!((hi - erlang).abs() < 1e-9, "a={a} f={f}: {hi} vs {erlang}");
                // Just inside the switch the Erlang branch is taken.
                let m = 0.5 * (a + below);
                assert_eq!(hypoexp_unchecked(a, below, f), (1.0 + m * f) * (-m * f).exp());
            }
        }
    }

    #[test]
    fn charge_constants_at_defaults() {
        let p = SystemParams::paper_defaults();
        let s = SlotPartition::downlink(0.1).unwrap();
        assert!(close(charge_constant(&p, &s).unwrap(), 10.0, 1e-9));
        assert_eq!(charge_constant_ul(&p, &s).unwrap(), 0.0);
        let zero = SystemParams { e_rec: 0.0, ..p };
        assert_eq!(charge_constant(&zero, &s).unwrap(), 0.0);
    }

    #[test]
    fn threshold_a_matches_reported_value() {
        let p = SystemParams::paper_defaults();
        let s = SlotPartition::downlink(0.1).unwrap();
        let a = threshold_a(&p, &s).unwrap();
        assert!(close(a, (2.0 * PI / 20.0).sqrt(), 1e-9));
        assert!(close(a, 0.5605, 0.005));
        // C -> infinity drives A -> 0.
        let s_small = SlotPartition::downlink(1e-12).unwrap();
        assert!(threshold_a(&p, &s_small).unwrap() < 1e-4);
        assert_eq!(threshold_a_tilde(&p, &s).unwrap(), f64::INFINITY);
    }

    #[test]
    fn f_variants_vanish_at_thresholds() {
        let p = SystemParams::paper_defaults();
        let s = SlotPartition::downlink(0.1).unwrap();
        let a = threshold_a(&p, &s).unwrap();
        let pair = DistancePair::new(0.2, a).unwrap();
        assert!(f_dl(&pair, &p, &s).abs() < 1e-12);
        // joint with tau3 = 0 is term-by-term the downlink form
        assert_eq!(f_joint(&pair, &p, &s), f_dl(&pair, &p, &s));

        let su = SlotPartition::uplink(0.3).unwrap();
        let r2 = 1.7;
        let h = h_boundary(r2, &p, &su).unwrap();
        let pair = DistancePair::new(h, r2).unwrap();
        assert!(f_ul(&pair, &p, &su).abs() < 1e-10);
    }

    #[test]
    fn h_boundary_hand_value_and_limits() {
        // lambda_b = 1, alpha = 4, eps = 0.8 and C~ = 1.
        let p = SystemParams {
            lambda_b: 1.0,
            alpha: 4.0,
            epsilon: 0.8,
            rho: 1.0,
            eta: 0.5,
            p_t: 1.0,
            ..SystemParams::paper_defaults()
        };
        let s = SlotPartition::uplink(1.0 / 3.0).unwrap();
        let ct = charge_constant_ul(&p, &s).unwrap();
        assert!(close(ct, 4.0, 1e-12));
        // rescale rho so that C~ = 1
        let p = SystemParams { rho: 0.25, ..p };
        assert!(close(charge_constant_ul(&p, &s).unwrap(), 1.0, 1e-12));
        let want = PI.powf(1.0 / 3.2) * 2f64.powf(-0.625);
        let got = h_boundary(2.0, &p, &s).unwrap();
        assert!(close(got, want, 1e-12));
        assert!(close(got, 0.9268, 1e-3));
        assert!(h_boundary(1e12, &p, &s).unwrap() < 1e-3);

        let at = threshold_a_tilde(&p, &s).unwrap();
        assert!(close(h_boundary(at, &p, &s).unwrap(), at, 1e-12 * at));

        let dl = SlotPartition::downlink(0.5).unwrap();
        assert!(h_boundary(1.0, &p, &dl).is_err());
    }

    #[test]
    fn g_factor_cases() {
        let p = SystemParams::paper_defaults();
        let pair = DistancePair::new(0.5, 1.0).unwrap();
        let want = p.beta_dl * (0.01 * 0.0625 + PI * 0.0625);
        assert!(close(g_factor(&pair, &p), want, 1e-12));
        assert!(close(g_factor(&pair, &p), 0.24798, 1e-4));
        let no_beta = SystemParams { beta_dl: 0.0, ..p };
        assert_eq!(g_factor(&pair, &no_beta), 0.0);
        let empty = SystemParams {
            sigma2_dl: 0.0,
            lambda_b: 0.0,
            ..p
        };
        assert_eq!(g_factor(&pair, &empty), 0.0);
    }

    #[test]
    fn densities_support() {
        assert_eq!(distance_density(2.0, 1.0, 1.0), 0.0);
        assert_eq!(distance_density(0.0, 1.0, 1.0), 0.0);
        assert_eq!(nearest_density(-1.0, 1.0), 0.0);
        assert!(distance_density(0.5, 1.0, 1.0) > 0.0);
        let a = 0.5605;
        let m = PI * a * a;
        assert!(close(second_nearest_cdf(a, 1.0), 1.0 - (-m).exp() * (1.0 + m), 1e-15));
        assert!(close(second_nearest_cdf(a, 1.0), 0.259445, 1e-6));
    }

    #[test]
    fn slot_partition_modes() {
        assert_eq!(SlotPartition::downlink(0.3).unwrap().mode(), Mode::Downlink);
        assert_eq!(SlotPartition::uplink(0.3).unwrap().mode(), Mode::Uplink);
        assert_eq!(SlotPartition::joint(0.4, 0.3).unwrap().mode(), Mode::Joint);
        assert!(SlotPartition::new(0.0, 0.5, 0.5).is_err());
        assert!(SlotPartition::new(0.5, 0.5, 0.1).is_err());
        assert!(SlotPartition::joint(0.7, 0.3).is_ok());
        let dl = SlotPartition::downlink(0.3).unwrap();
        assert!(dl.supports(Mode::Joint));
        assert!(dl.supports(Mode::Downlink));
        assert!(!dl.supports(Mode::Uplink));
    }

    #[test]
    fn defaults_are_valid() {
        let p = SystemParams::paper_defaults();
        p.validate().unwrap();
        assert!(close(p.beta_dl, 1.2589254, 1e-6));
        assert!(close(p.sigma2_dl, 0.01, 1e-15));
        assert!(close(p.rho, 1.2589254e-3, 1e-9));
        let bad = SystemParams {
            alpha: 2.0,
            eta: 1.5,
            ..p
        };
        match bad.validate() {
            Err(Error::InvalidParams(v)) => assert_eq!(v.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn distance_pair_checks() {
        assert!(DistancePair::new(0.5, 1.0).is_ok());
        assert!(DistancePair::new(1.0, 0.5).is_err());
        assert!(DistancePair::new(0.0, 0.5).is_err());
    }
}
