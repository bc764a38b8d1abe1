//! Adaptive Gauss–Kronrod integration on finite and semi-infinite intervals,
//! nested integration over the ordered-pair region `0 < r1 < r2 < inf`, and
//! bracketing root search.
//!
//! The 1D driver is a global-adaptive G10/K21 scheme: the panel with the
//! largest error estimate is bisected until the summed estimate meets
//! `max(abs, rel * |value|)` or the evaluation budget runs out.

use std::cell::{Cell, RefCell};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("tolerances must be positive (rel = {rel}, abs = {abs})")]
    InvalidTolerance { rel: f64, abs: f64 },
    #[error("integrand returned {value} at x = {x}")]
    NonFinite { x: f64, value: f64 },
    #[error(
        "evaluation budget exhausted after {evals} evaluations{}: best estimate {estimate} +/- {error}",
        panel.as_ref().map(|p| format!(" ({p})")).unwrap_or_default()
    )]
    BudgetExhausted {
        estimate: f64,
        error: f64,
        evals: u64,
        panel: Option<String>,
    },
    #[error("no sign change on [{lo}, {hi}]: g(lo) = {g_lo}, g(hi) = {g_hi}")]
    NoSignChange { lo: f64, hi: f64, g_lo: f64, g_hi: f64 },
}

impl QuadError {
    /// Attaches a panel description to a budget error.
    pub fn with_panel(self, label: impl Into<String>) -> Self {
        match self {
            QuadError::BudgetExhausted {
                estimate,
                error,
                evals,
                panel,
            } => {
                let label = label.into();
                let panel = Some(match panel {
                    Some(inner) => format!("{label}; {inner}"),
                    None => label,
                });
                QuadError::BudgetExhausted {
                    estimate,
                    error,
                    evals,
                    panel,
                }
            }
            other => other,
        }
    }
}

/// Accuracy target and evaluation budget for one integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadTol {
    pub rel: f64,
    pub abs: f64,
    pub max_evals: u64,
}

impl QuadTol {
    pub const fn new(rel: f64, abs: f64) -> Self {
        Self {
            rel,
            abs,
            max_evals: 200_000,
        }
    }

    pub const fn with_budget(self, max_evals: u64) -> Self {
        Self { max_evals, ..self }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }

    fn check(&self) -> Result<(), QuadError> {
        if self.rel > 0.0 && self.abs > 0.0 {
            Ok(())
        } else {
            Err(QuadError::InvalidTolerance {
                rel: self.rel,
                abs: self.abs,
            })
        }
    }
}

/// Default tolerance for inner integrals of nested quadrature.
pub const INNER_TOL: QuadTol = QuadTol::new(1e-7, 1e-10);
/// Default tolerance for outer integrals.
pub const OUTER_TOL: QuadTol = QuadTol::new(1e-6, 1e-10);
/// Relative bracket width at which [`root_bisect`] stops.
pub const BISECT_TOL: f64 = 1e-12;

/// Value of a definite integral with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evals: u64,
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
const EVALS_PER_PANEL: u64 = 21;

/// One panel of the adaptive scheme. Component 0 drives refinement;
/// component 1 is integrated alongside without error control.
#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    val: [f64; 2],
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn eval<F: FnMut(f64) -> [f64; 2]>(f: &mut F, x: f64) -> Result<[f64; 2], QuadError> {
    let v = f(x);
    if v[0].is_finite() && v[1].is_finite() {
        Ok(v)
    } else {
        let value = if v[0].is_finite() { v[1] } else { v[0] };
        Err(QuadError::NonFinite { x, value })
    }
}

fn gk21<F: FnMut(f64) -> [f64; 2]>(f: &mut F, a: f64, b: f64) -> Result<Panel, QuadError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = eval(f, center)?;
    let mut resk = [fc[0] * WGK[10], fc[1] * WGK[10]];
    let mut resg = 0.0;
    let mut resabs = (fc[0] * WGK[10]).abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval(f, center - dx)?;
        let f2 = eval(f, center + dx)?;
        fv1[j] = f1[0];
        fv2[j] = f2[0];
        resk[0] += WGK[j] * (f1[0] + f2[0]);
        resk[1] += WGK[j] * (f1[1] + f2[1]);
        resabs += WGK[j] * (f1[0].abs() + f2[0].abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1[0] + f2[0]);
        }
    }
    let mean = 0.5 * resk[0];
    let mut resasc = WGK[10] * (fc[0] - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let scale = half.abs();
    let resasc = resasc * scale;
    let resabs = resabs * scale;
    let mut err = ((resk[0] - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Ok(Panel {
        a,
        b,
        val: [resk[0] * half, resk[1] * half],
        err,
    })
}

/// Result of the vector-valued driver.
#[derive(Debug, Clone, Copy)]
struct PairIntegral {
    value: [f64; 2],
    error: f64,
    evals: u64,
}

fn adaptive<F: FnMut(f64) -> [f64; 2]>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: &QuadTol,
) -> Result<PairIntegral, QuadError> {
    tol.check()?;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(QuadError::InvalidInterval { lo, hi });
    }
    let first = gk21(&mut f, lo, hi)?;
    let mut evals = EVALS_PER_PANEL;
    let mut total = first.val;
    let mut total_err = first.err;
    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Panel> = Vec::new();
    heap.push(first);

    while total_err > tol.target(total[0]) {
        if evals + 2 * EVALS_PER_PANEL > tol.max_evals {
            return Err(QuadError::BudgetExhausted {
                estimate: total[0],
                error: total_err,
                evals,
                panel: None,
            });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b)
            || (worst.b - worst.a) <= 4.0 * f64::EPSILON * worst.a.abs().max(worst.b.abs())
        {
            // Cannot subdivide further at double precision.
            frozen.push(worst);
            continue;
        }
        let left = gk21(&mut f, worst.a, mid)?;
        let right = gk21(&mut f, mid, worst.b)?;
        evals += 2 * EVALS_PER_PANEL;
        for (k, t) in total.iter_mut().enumerate() {
            *t += left.val[k] + right.val[k] - worst.val[k];
        }
        total_err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
    }

    // Re-sum to shed the drift of the running totals.
    let mut value = [0.0; 2];
    let mut error = 0.0;
    for p in heap.iter().chain(frozen.iter()) {
        value[0] += p.val[0];
        value[1] += p.val[1];
        error += p.err;
    }
    if error > tol.target(value[0]) {
        return Err(QuadError::BudgetExhausted {
            estimate: value[0],
            error,
            evals,
            panel: Some("roundoff limit reached".into()),
        });
    }
    Ok(PairIntegral {
        value,
        error,
        evals,
    })
}

/// Integrates `f` over `[lo, hi]`.
pub fn integrate_1d<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    tol: QuadTol,
) -> Result<Integral, QuadError> {
    let r = adaptive(|x| [f(x), 0.0], lo, hi, &tol)?;
    Ok(Integral {
        value: r.value[0],
        error: r.error,
        evals: r.evals,
    })
}

/// Integrates `f` over `[lo, inf)` through `r = lo + t / (1 - t)`. The
/// endpoint `t = 1` is never evaluated.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    tol: QuadTol,
) -> Result<Integral, QuadError> {
    integrate_semi_infinite_scaled(f, lo, 1.0, tol)
}

/// As [`integrate_semi_infinite`] with `r = lo + scale * t / (1 - t)`, for
/// integrands whose decay length differs much from one.
pub fn integrate_semi_infinite_scaled<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    scale: f64,
    tol: QuadTol,
) -> Result<Integral, QuadError> {
    let r = adaptive(
        |t| {
            let u = 1.0 - t;
            [f(lo + scale * t / u) * scale / (u * u), 0.0]
        },
        0.0,
        1.0,
        &tol,
    )?;
    Ok(Integral {
        value: r.value[0],
        error: r.error,
        evals: r.evals,
    })
}

fn semi_infinite_pair<F: FnMut(f64) -> [f64; 2]>(
    mut f: F,
    lo: f64,
    scale: f64,
    tol: &QuadTol,
) -> Result<PairIntegral, QuadError> {
    adaptive(
        |t| {
            let u = 1.0 - t;
            let jac = scale / (u * u);
            let v = f(lo + scale * t / u);
            [v[0] * jac, v[1] * jac]
        },
        0.0,
        1.0,
        tol,
    )
}

/// Decomposition of `0 < r1 < r2 < inf` into panels on which the integrand
/// is smooth.
pub struct RegionSplit<'a> {
    /// Interior break points of the outer `r2` range.
    pub breakpoints: Vec<f64>,
    /// Optional `r2 -> r1` break inside the inner range; values are clamped
    /// into `[0, r2]`.
    pub inner: Option<&'a dyn Fn(f64) -> f64>,
    /// Decay length used for the semi-infinite tail of the outer range.
    pub length_scale: f64,
}

impl<'a> RegionSplit<'a> {
    pub fn none() -> Self {
        Self {
            breakpoints: Vec::new(),
            inner: None,
            length_scale: 1.0,
        }
    }

    pub fn new(breakpoints: Vec<f64>, inner: Option<&'a dyn Fn(f64) -> f64>) -> Self {
        Self {
            breakpoints,
            inner,
            length_scale: 1.0,
        }
    }

    pub fn with_length_scale(mut self, scale: f64) -> Self {
        self.length_scale = scale;
        self
    }

    /// Finite positive break points, sorted and deduplicated.
    fn outer_edges(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .breakpoints
            .iter()
            .copied()
            .filter(|b| b.is_finite() && *b > 0.0)
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs());
        pts
    }
}

/// Integrates `f(r1, r2)` over `0 < r1 < r2 < inf` as an outer integral in
/// `r2` of inner integrals in `r1`.
///
/// The returned error adds the outer error estimate to the integral of the
/// inner error bounds.
pub fn integrate_triangle<F: Fn(f64, f64) -> f64>(
    f: F,
    split: &RegionSplit<'_>,
    inner_tol: QuadTol,
    outer_tol: QuadTol,
) -> Result<Integral, QuadError> {
    inner_tol.check()?;
    outer_tol.check()?;
    let inner_evals = Cell::new(0u64);
    let inner_failure: RefCell<Option<QuadError>> = RefCell::new(None);

    let inner = |r2: f64| -> [f64; 2] {
        let h = split
            .inner
            .map(|g| g(r2).clamp(0.0, r2))
            .unwrap_or(r2);
        let mut value = 0.0;
        let mut error = 0.0;
        for (a, b) in [(0.0, h), (h, r2)] {
            if !(b > a) {
                continue;
            }
            match adaptive(|r1| [f(r1, r2), 0.0], a, b, &inner_tol) {
                Ok(r) => {
                    value += r.value[0];
                    error += r.error;
                    inner_evals.set(inner_evals.get() + r.evals);
                }
                Err(QuadError::BudgetExhausted {
                    estimate,
                    error: e,
                    evals,
                    ..
                }) => {
                    value += estimate;
                    error += e;
                    inner_evals.set(inner_evals.get() + evals);
                    inner_failure.borrow_mut().get_or_insert_with(|| {
                        QuadError::BudgetExhausted {
                            estimate,
                            error: e,
                            evals,
                            panel: Some(format!("inner r1 in [{a}, {b}] at r2 = {r2}")),
                        }
                    });
                }
                Err(other) => {
                    inner_failure.borrow_mut().get_or_insert(other);
                    return [f64::NAN, 0.0];
                }
            }
        }
        [value, error]
    };

    let edges = split.outer_edges();
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut outer_evals = 0u64;
    let n_panels = edges.len() + 1;
    let panel_tol = QuadTol {
        abs: outer_tol.abs / n_panels as f64,
        ..outer_tol
    };
    let mut lo = 0.0;
    for (idx, edge) in edges.iter().copied().chain(std::iter::once(f64::INFINITY)).enumerate() {
        let label = if edge.is_finite() {
            format!("outer r2 panel {idx} [{lo}, {edge}]")
        } else {
            format!("outer r2 panel {idx} [{lo}, inf)")
        };
        let res = if edge.is_finite() {
            adaptive(&inner, lo, edge, &panel_tol)
        } else {
            semi_infinite_pair(&inner, lo, split.length_scale, &panel_tol)
        };
        if let Some(err) = inner_failure.borrow_mut().take() {
            if !matches!(err, QuadError::BudgetExhausted { .. }) {
                return Err(err.with_panel(label));
            }
            // Inner budget failures surface only if the total misses tolerance.
            if let Ok(r) = &res {
                if r.error + r.value[1] > panel_tol.target(r.value[0]) {
                    return Err(err.with_panel(label));
                }
            }
        }
        let r = res.map_err(|e| e.with_panel(label))?;
        total += r.value[0];
        total_err += r.error + r.value[1];
        outer_evals += r.evals;
        lo = edge;
    }
    Ok(Integral {
        value: total,
        error: total_err,
        evals: outer_evals + inner_evals.get(),
    })
}

/// Bisection for a sign change of `g` on `[lo, hi]`; stops once the bracket
/// is narrower than `tol * (hi - lo)`.
pub fn root_bisect<G: Fn(f64) -> f64>(g: G, lo: f64, hi: f64, tol: f64) -> Result<f64, QuadError> {
    if !(lo < hi) {
        return Err(QuadError::InvalidInterval { lo, hi });
    }
    let (mut a, mut b) = (lo, hi);
    let (ga, gb) = (g(a), g(b));
    if ga == 0.0 {
        return Ok(a);
    }
    if gb == 0.0 {
        return Ok(b);
    }
    if ga.is_nan() || gb.is_nan() || ga.signum() == gb.signum() {
        return Err(QuadError::NoSignChange {
            lo,
            hi,
            g_lo: ga,
            g_hi: gb,
        });
    }
    let a_negative = ga < 0.0;
    let width = tol * (hi - lo);
    while b - a > width {
        let m = 0.5 * (a + b);
        if !(m > a && m < b) {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            return Ok(m);
        }
        if (gm < 0.0) == a_negative {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::distance_density;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate_1d(|x| x * x, 0.0, 1.0, QuadTol::new(1e-12, 1e-14)).unwrap();
        assert!((r.value - 1.0 / 3.0).abs() < 1e-10);
        assert!(r.error <= 1e-12);
    }

    #[test]
    fn semi_infinite_cases() {
        let tol = QuadTol::new(1e-10, 1e-12);
        let rayleigh = integrate_semi_infinite(|r| 2.0 * PI * r * (-PI * r * r).exp(), 0.0, tol).unwrap();
        assert!((rayleigh.value - 1.0).abs() < 1e-8);
        let exp = integrate_semi_infinite(|x| (-x).exp(), 0.0, tol).unwrap();
        assert!((exp.value - 1.0).abs() < 1e-8);
        let gamma2 = integrate_semi_infinite(|x| x * (-x).exp(), 0.0, tol).unwrap();
        assert!((gamma2.value - 1.0).abs() < 1e-8);
        // integrand is never evaluated at infinity
        let r = integrate_semi_infinite(
            |x| {
                assert!(x.is_finite());
                (-x).exp()
            },
            2.0,
            tol,
        )
        .unwrap();
        assert!((r.value - (-2.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn error_bound_meets_target_or_errors() {
        let tol = QuadTol::new(1e-9, 1e-12);
        let r = integrate_1d(|x| x.sqrt(), 0.0, 1.0, tol).unwrap();
        assert!(r.error <= tol.abs.max(tol.rel * r.value.abs()));
        assert!((r.value - 2.0 / 3.0).abs() < 1e-9);
        // 1/sqrt(x) with a tiny budget must fail and report the best estimate.
        let err = integrate_1d(|x| 1.0 / x.sqrt(), 0.0, 1.0, tol.with_budget(100)).unwrap_err();
        match err {
            QuadError::BudgetExhausted { estimate, evals, .. } => {
                assert!(estimate > 1.0 && evals <= 100);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(
            integrate_1d(|x| x, 1.0, 0.0, INNER_TOL),
            Err(QuadError::InvalidInterval { .. })
        ));
        assert!(matches!(
            integrate_1d(|x| x, 0.0, 1.0, QuadTol::new(0.0, 1e-9)),
            Err(QuadError::InvalidTolerance { .. })
        ));
        assert!(matches!(
            integrate_1d(|_| f64::NAN, 0.0, 1.0, INNER_TOL),
            Err(QuadError::NonFinite { .. })
        ));
    }

    #[test]
    fn split_point_changes_result_within_bounds() {
        let f = |x: f64| (3.0 * x).sin() * (-x).exp() + x.sqrt();
        let tol = QuadTol::new(1e-10, 1e-13);
        let whole = integrate_1d(f, 0.0, 4.0, tol).unwrap();
        for &c in &[0.1, 1.3, 2.9, 3.99] {
            let l = integrate_1d(f, 0.0, c, tol).unwrap();
            let r = integrate_1d(f, c, 4.0, tol).unwrap();
            let diff = (l.value + r.value - whole.value).abs();
            assert!(diff <= whole.error + l.error + r.error, "c={c}: {diff}");
        }
    }

    #[test]
    fn triangle_normalisation_and_splits() {
        let dens = |r1: f64, r2: f64| distance_density(r1, r2, 1.0);
        let none = integrate_triangle(dens, &RegionSplit::none(), INNER_TOL, OUTER_TOL).unwrap();
        assert!((none.value - 1.0).abs() < 1e-6);

        let a = 0.5605;
        let below = integrate_triangle(
            |r1, r2| if r2 < a { dens(r1, r2) } else { 0.0 },
            &RegionSplit::new(vec![a], None),
            INNER_TOL,
            OUTER_TOL,
        )
        .unwrap();
        let m = PI * a * a;
        let want = 1.0 - (-m).exp() - m * (-m).exp();
        assert!((below.value - want).abs() < 1e-8, "{} vs {want}", below.value);
        assert!((below.value - 0.259445).abs() < 1e-6);

        let half = |r2: f64| 0.5 * r2;
        let split = RegionSplit::new(vec![], Some(&half));
        let halves = integrate_triangle(dens, &split, INNER_TOL, OUTER_TOL).unwrap();
        assert!((halves.value - none.value).abs() < 1e-8);
    }

    #[test]
    fn triangle_dominated_by_upper_bound() {
        let dens = |r1: f64, r2: f64| distance_density(r1, r2, 1.0);
        let lower = integrate_triangle(
            |r1, r2| dens(r1, r2) * (-r1 * r2).exp(),
            &RegionSplit::none(),
            INNER_TOL,
            OUTER_TOL,
        )
        .unwrap();
        let upper = integrate_triangle(dens, &RegionSplit::none(), INNER_TOL, OUTER_TOL).unwrap();
        assert!(lower.value >= 0.0);
        assert!(lower.value <= upper.value + upper.error + lower.error);
    }

    #[test]
    fn bisection() {
        let x = root_bisect(|x| x - 1.0, 0.0, 2.0, BISECT_TOL).unwrap();
        assert!((x - 1.0).abs() < 1e-11);
        let x = root_bisect(|x| 1.0 - x, 0.0, 2.0, BISECT_TOL).unwrap();
        assert!((x - 1.0).abs() < 1e-11);
        assert!(matches!(
            root_bisect(|x| x + 1.0, 0.0, 2.0, BISECT_TOL),
            Err(QuadError::NoSignChange { .. })
        ));
    }
}
