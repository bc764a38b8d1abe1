//! Laplace transform of the aggregate uplink interference at the tagged BS.
//!
//! Interfering devices form a PPP of density `d` around the tagged BS. A
//! device at distance `x` is served by its own nearest BS at distance `R`
//! with `R^2 ~ Exp(pi d)`, interferes only when `R < x`, and transmits with
//! power `R^(eps alpha)` (normalised by the BS sensitivity).
//!
//! Substituting `v = pi d u` and `y = sqrt(pi d) x` reduces the transform to
//! `exp(-2 J(t))` with `t = s (pi d)^((1 - eps) alpha / 2)` and
//!
//! ```text
//! J(t) = int_0^inf y int_0^{y^2} e^{-v} / (1 + y^alpha v^(-alpha eps / 2) / t) dv dy
//! ```
//!
//! which depends on `(alpha, eps)` only. `ln J` is tabulated against `ln t`
//! once per `(alpha, eps)` and interpolated with a natural cubic spline.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use crate::model::SystemParams;
use crate::quadrature::{integrate_1d, integrate_semi_infinite_scaled, QuadTol};
use crate::{Error, Result};

const TABLE_NODES: usize = 256;
const LN_T_MIN: f64 = -18.420_680_743_952_367; // ln 1e-8
const LN_T_MAX: f64 = 18.420_680_743_952_367; // ln 1e8
/// `e^{-v}` is below 1e-26 past this point.
const V_CAP: f64 = 60.0;

const SHAPE_INNER: QuadTol = QuadTol::new(1e-11, 1e-16).with_budget(2_000_000);
const SHAPE_OUTER: QuadTol = QuadTol::new(1e-10, 1e-15).with_budget(2_000_000);

/// `E[exp(-s I)]` for the interference `I` of a device field of density
/// `density`, using the tabulated shape function.
pub fn ul_interference_laplace(s: f64, density: f64, p: &SystemParams) -> Result<f64> {
    check_args(s, density)?;
    if s == 0.0 || density == 0.0 {
        return Ok(1.0);
    }
    if s.is_infinite() {
        return Ok(0.0);
    }
    InterferenceTransform::new(density, p)?.eval(s)
}

/// The transform at a fixed density, for repeated evaluation in `s`.
#[derive(Debug, Clone)]
pub struct InterferenceTransform {
    table: Option<Arc<ShapeTable>>,
    scale: f64,
    alpha: f64,
    epsilon: f64,
}

impl InterferenceTransform {
    pub fn new(density: f64, p: &SystemParams) -> Result<Self> {
        check_args(0.0, density)?;
        let table = if density > 0.0 {
            Some(shape_table(p.alpha, p.epsilon)?)
        } else {
            None
        };
        Ok(Self {
            table,
            scale: reduced_argument(1.0, density, p),
            alpha: p.alpha,
            epsilon: p.epsilon,
        })
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        check_args(s, 0.0)?;
        let Some(table) = &self.table else {
            return Ok(1.0);
        };
        if s == 0.0 {
            return Ok(1.0);
        }
        if s.is_infinite() {
            return Ok(0.0);
        }
        let j = table.eval(s * self.scale, self.alpha, self.epsilon)?;
        Ok((-2.0 * j).exp())
    }
}

/// Same transform evaluated as a double integral in the original
/// variables, bypassing the table. Slow; used to check the table.
pub fn ul_interference_laplace_direct(s: f64, density: f64, p: &SystemParams) -> Result<f64> {
    check_args(s, density)?;
    if s == 0.0 || density == 0.0 {
        return Ok(1.0);
    }
    if s.is_infinite() {
        return Ok(0.0);
    }
    let k = 0.5 * p.alpha * p.epsilon;
    let pd = PI * density;
    let inner_tol = QuadTol::new(1e-10, 1e-300).with_budget(2_000_000);
    let inner = |x: f64| -> f64 {
        let hi = (x * x).min(V_CAP / pd);
        let xa = x.powf(p.alpha);
        let g = |u: f64| pd * (-pd * u).exp() / (1.0 + xa / (s * u.powf(k)));
        let split = if k > 0.0 {
            (xa / s).powf(1.0 / k)
        } else {
            f64::INFINITY
        };
        let mut total = 0.0;
        for (a, b) in pieces(0.0, hi, split) {
            total += integrate_1d(g, a, b, inner_tol).map(|r| r.value).unwrap_or(f64::NAN);
        }
        x * total
    };
    let scale = 1.0 / pd.sqrt();
    let outer = integrate_semi_infinite_scaled(
        inner,
        0.0,
        scale,
        QuadTol::new(1e-9, 1e-300).with_budget(2_000_000),
    )?;
    Ok((-2.0 * pd * outer.value).exp())
}

fn check_args(s: f64, density: f64) -> Result<()> {
    if !(s >= 0.0) || !(density >= 0.0 && density.is_finite()) {
        return Err(Error::Domain(format!(
            "interference transform needs s >= 0 and a finite density >= 0 (got s = {s}, density = {density})"
        )));
    }
    Ok(())
}

fn reduced_argument(s: f64, density: f64, p: &SystemParams) -> f64 {
    s * (PI * density).powf(0.5 * (1.0 - p.epsilon) * p.alpha)
}

/// `[a, b]` split at `c` when `c` lies strictly inside.
fn pieces(a: f64, b: f64, c: f64) -> impl Iterator<Item = (f64, f64)> {
    let parts = if c > a && c < b {
        [(a, c), (c, b)]
    } else {
        [(a, b), (b, b)]
    };
    parts.into_iter().filter(|(lo, hi)| hi > lo)
}

/// The shape function `J(t)` by nested quadrature.
pub fn shape_direct(t: f64, alpha: f64, epsilon: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("shape function needs t > 0 (got {t})")));
    }
    let k = 0.5 * alpha * epsilon;
    let inner = |y: f64| -> f64 {
        let hi = (y * y).min(V_CAP);
        let q = y.powf(alpha) / t;
        if k == 0.0 {
            return y * -(-hi).exp_m1() / (1.0 + q);
        }
        let g = |v: f64| (-v).exp() / (1.0 + q * v.powf(-k));
        let mut total = 0.0;
        for (a, b) in pieces(0.0, hi, q.powf(1.0 / k)) {
            total += integrate_1d(g, a, b, SHAPE_INNER).map(|r| r.value).unwrap_or(f64::NAN);
        }
        y * total
    };
    // Breaks where the inner upper limit saturates and where the inner
    // transition point crosses it.
    let mut breaks = vec![V_CAP.sqrt()];
    if epsilon < 1.0 {
        breaks.push(t.powf(1.0 / (alpha * (1.0 - epsilon))));
    }
    breaks.push(t.powf(1.0 / alpha));
    breaks.retain(|b| b.is_finite() && *b > 0.0);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());

    let mut total = 0.0;
    let mut lo = 0.0;
    for b in &breaks {
        total += integrate_1d(inner, lo, *b, SHAPE_OUTER)?.value;
        lo = *b;
    }
    let scale = t.powf(1.0 / alpha).max(1.0);
    total += integrate_semi_infinite_scaled(inner, lo, scale, SHAPE_OUTER)?.value;
    Ok(total)
}

/// Natural cubic spline of `ln J` on a uniform `ln t` grid.
#[derive(Debug)]
struct ShapeTable {
    h: f64,
    ln_j: Vec<f64>,
    second: Vec<f64>,
}

impl ShapeTable {
    fn build(alpha: f64, epsilon: f64) -> Result<Self> {
        let n = TABLE_NODES;
        let h = (LN_T_MAX - LN_T_MIN) / (n - 1) as f64;
        let ln_j = (0..n)
            .into_par_iter()
            .map(|i| shape_direct((LN_T_MIN + h * i as f64).exp(), alpha, epsilon).map(f64::ln))
            .collect::<Result<Vec<_>>>()?;
        // Tridiagonal system for the second derivatives, natural ends.
        let mut second = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            let rhs = 6.0 * (ln_j[i + 1] - 2.0 * ln_j[i] + ln_j[i - 1]) / (h * h);
            let denom = 4.0 - c[i - 1];
            c[i] = 1.0 / denom;
            d[i] = (rhs - d[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            second[i] = d[i] - c[i] * second[i + 1];
        }
        Ok(Self { h, ln_j, second })
    }

    fn ln_shape(&self, x: f64) -> f64 {
        let n = self.ln_j.len();
        let pos = (x - LN_T_MIN) / self.h;
        let i = (pos.floor() as usize).min(n - 2);
        let a = (i + 1) as f64 - pos;
        let b = 1.0 - a;
        let h2 = self.h * self.h / 6.0;
        a * self.ln_j[i]
            + b * self.ln_j[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h2
    }

    fn slope_at_start(&self) -> f64 {
        let h = self.h;
        (self.ln_j[1] - self.ln_j[0]) / h - h * (2.0 * self.second[0] + self.second[1]) / 6.0
    }

    fn eval(&self, t: f64, alpha: f64, epsilon: f64) -> Result<f64> {
        let x = t.ln();
        if x < LN_T_MIN {
            // Power-law continuation; J is already tiny here.
            return Ok((self.ln_j[0] + self.slope_at_start() * (x - LN_T_MIN)).exp());
        }
        if x > LN_T_MAX {
            return shape_direct(t, alpha, epsilon);
        }
        Ok(self.ln_shape(x).exp())
    }
}

type TableKey = (u64, u64);

fn shape_table(alpha: f64, epsilon: f64) -> Result<Arc<ShapeTable>> {
    static TABLES: OnceLock<Mutex<HashMap<TableKey, Arc<ShapeTable>>>> = OnceLock::new();
    let tables = TABLES.get_or_init(Default::default);
    let key = (alpha.to_bits(), epsilon.to_bits());
    if let Some(t) = tables.lock().expect("table cache poisoned").get(&key) {
        return Ok(Arc::clone(t));
    }
    let table = Arc::new(ShapeTable::build(alpha, epsilon)?);
    let mut guard = tables.lock().expect("table cache poisoned");
    Ok(Arc::clone(guard.entry(key).or_insert(table)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(alpha: f64, epsilon: f64) -> SystemParams {
        SystemParams {
            alpha,
            epsilon,
            ..SystemParams::paper_defaults()
        }
    }

    #[test]
    fn trivial_arguments() {
        let p = SystemParams::paper_defaults();
        assert_eq!(ul_interference_laplace(0.0, 1.0, &p).unwrap(), 1.0);
        assert_eq!(ul_interference_laplace(3.0, 0.0, &p).unwrap(), 1.0);
        assert_eq!(ul_interference_laplace(f64::INFINITY, 1.0, &p).unwrap(), 0.0);
        assert!(ul_interference_laplace(-1.0, 1.0, &p).is_err());
        assert!(ul_interference_laplace(1.0, -1.0, &p).is_err());
    }

    #[test]
    fn zero_epsilon_closed_inner_matches_quadrature() {
        // With eps = 0 the inner integral is elementary; compare with a
        // slightly positive eps where quadrature does the work.
        let a = shape_direct(2.0, 4.0, 0.0).unwrap();
        let b = shape_direct(2.0, 4.0, 1e-9).unwrap();
        assert!((a - b).abs() < 1e-7 * a, "{a} vs {b}");
    }

    #[test]
    fn zero_epsilon_has_elementary_form() {
        // eps = 0, alpha = 4: J(t) = int_0^inf y (1 - e^{-y^2}) t / (t + y^4) dy,
        // and with w = y^2 this is (1/2) int_0^inf (1 - e^{-w}) t / (t + w^2) dw.
        let t = 3.0f64;
        let w = |w: f64| 0.5 * -(-w).exp_m1() * t / (t + w * w);
        let want = crate::quadrature::integrate_semi_infinite(w, 0.0, QuadTol::new(1e-12, 1e-15))
            .unwrap()
            .value;
        let got = shape_direct(t, 4.0, 0.0).unwrap();
        assert!((got - want).abs() < 1e-9 * want, "{got} vs {want}");
    }

    #[test]
    fn table_matches_direct_between_nodes() {
        for &(alpha, eps) in &[(4.0, 0.8), (3.0, 0.5), (4.0, 1.0)] {
            let h = (LN_T_MAX - LN_T_MIN) / (TABLE_NODES - 1) as f64;
            let table = shape_table(alpha, eps).unwrap();
            for &x in &[-15.3, -4.1, -0.77, 0.0, 2.3, 9.9, 17.0] {
                let x = x + 0.37 * h;
                let t = f64::exp(x);
                let want = shape_direct(t, alpha, eps).unwrap();
                let got = table.eval(t, alpha, eps).unwrap();
                assert!(
                    (got - want).abs() <= 2e-6 * want,
                    "alpha={alpha} eps={eps} t={t}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn table_agrees_with_original_variables() {
        let p = params(4.0, 0.8);
        for &(s, d) in &[(0.1, 0.5), (1.0, 1.0), (10.0, 0.5), (2.5, 0.03)] {
            let fast = ul_interference_laplace(s, d, &p).unwrap();
            let slow = ul_interference_laplace_direct(s, d, &p).unwrap();
            assert!((fast - slow).abs() < 1e-6, "s={s} d={d}: {fast} vs {slow}");
        }
    }

    #[test]
    fn full_inversion_is_density_free() {
        // eps = 1 removes the density from the reduced argument.
        let p = params(4.0, 1.0);
        let a = ul_interference_laplace(1.3, 0.5, &p).unwrap();
        let b = ul_interference_laplace(1.3, 2.0, &p).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn monotone_in_s_and_density() {
        let p = SystemParams::paper_defaults();
        let mut last = 1.0;
        for i in 1..40 {
            let s = 0.05 * i as f64 * i as f64;
            let v = ul_interference_laplace(s, 1.0, &p).unwrap();
            assert!(v > 0.0 && v < 1.0 && v <= last + 1e-12);
            last = v;
        }
        let mut last = 1.0;
        for i in 1..40 {
            let d = 0.1 * i as f64;
            let v = ul_interference_laplace(1.0, d, &p).unwrap();
            assert!(v <= last + 1e-12);
            last = v;
        }
    }
}
