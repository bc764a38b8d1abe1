//! Uplink interferers seen by the tagged BS.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::gamma::gamma;

use super::ppp::{exp1, sample_ppp, Point, RadialStream};
use super::TailBound;
use crate::model::{Mode, SlotPartition, SystemParams};

/// One interfering device as seen from the tagged BS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interferer {
    /// Distance to the tagged BS.
    pub distance: f64,
    /// Distance to the device's own serving BS.
    pub serving_distance: f64,
    /// Transmit power `rho R^(eps alpha)` (W).
    pub power: f64,
}

/// How the interfering device field is generated.
#[derive(Debug, Clone, Copy)]
pub enum InterfererSource<'a> {
    /// Active devices form a PPP of `density` within `radius` of the tagged
    /// BS. Each draws a serving distance with `R^2 ~ Exp(pi density)` and
    /// transmits only when `R` is below its distance to the tagged BS.
    PppApprox { density: f64, radius: f64 },
    /// Devices of density `lambda_u` on the disc of `radius` around the
    /// origin attach to their nearest BS in `bs`; one device per cell is
    /// scheduled and transmits if its own harvest covers its demand. The
    /// tagged cell's slot belongs to the typical device.
    VoronoiExact {
        bs: &'a [Point],
        tagged: usize,
        radius: f64,
    },
}

pub fn build_ul_interferers<R: Rng + ?Sized>(
    source: InterfererSource<'_>,
    p: &SystemParams,
    slots: &SlotPartition,
    mode: Mode,
    rng: &mut R,
) -> Vec<Interferer> {
    match source {
        InterfererSource::PppApprox { density, radius } => {
            let mut out = Vec::new();
            if !(density > 0.0) {
                return out;
            }
            let mut stream = ApproxStream::new(density);
            loop {
                let (d, serving) = stream.next(rng);
                if d > radius {
                    break;
                }
                if let Some(r) = serving {
                    out.push(Interferer {
                        distance: d,
                        serving_distance: r,
                        power: p.rho * r.powf(p.epsilon * p.alpha),
                    });
                }
            }
            out
        }
        InterfererSource::VoronoiExact { bs, tagged, radius } => {
            voronoi_interferers(bs, tagged, radius, p, slots, mode, rng)
        }
    }
}

/// Interferers of the approximate model in increasing distance from the
/// tagged BS; absent devices are reported with `None`.
#[derive(Debug, Clone)]
pub(crate) struct ApproxStream {
    radial: RadialStream,
    serving_rate: f64,
}

impl ApproxStream {
    pub(crate) fn new(density: f64) -> Self {
        Self {
            radial: RadialStream::new(density),
            serving_rate: PI * density,
        }
    }

    pub(crate) fn next<R: Rng + ?Sized>(&mut self, rng: &mut R) -> (f64, Option<f64>) {
        let d = self.radial.next_distance(rng);
        let r = (exp1(rng) / self.serving_rate).sqrt();
        (d, (r < d).then_some(r))
    }
}

/// Bounds on the interference (normalised by `rho`) from approximate-model
/// devices beyond a given distance from the tagged BS.
pub(crate) fn approx_tail(density: f64, p: &SystemParams) -> TailBound {
    let k = 0.5 * p.epsilon * p.alpha;
    let pd = PI * density;
    // E[w R^(eps alpha)] and E[w^2 R^(2 eps alpha)] with w ~ Exp(1), R^2 ~ Exp(pi density)
    let m1 = gamma(1.0 + k) / pd.powf(k);
    let m2 = 2.0 * gamma(1.0 + 2.0 * k) / pd.powf(2.0 * k);
    TailBound::new(density, m1, m2, p.alpha)
}

/// Grid index for nearest-point queries among BSs.
struct NearestGrid<'a> {
    points: &'a [Point],
    cell: f64,
    origin: f64,
    side: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'a> NearestGrid<'a> {
    fn new(points: &'a [Point], radius: f64, cell: f64) -> Self {
        let side = ((2.0 * radius / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); side * side];
        let mut grid = Self {
            points,
            cell,
            origin: -radius,
            side,
            buckets: Vec::new(),
        };
        for (i, q) in points.iter().enumerate() {
            let (cx, cy) = grid.coords(q);
            buckets[cy * side + cx].push(i);
        }
        grid.buckets = buckets;
        grid
    }

    fn coords(&self, q: &Point) -> (usize, usize) {
        let f = |v: f64| (((v - self.origin) / self.cell).floor().max(0.0) as usize).min(self.side - 1);
        (f(q[0]), f(q[1]))
    }

    fn nearest(&self, q: &Point) -> usize {
        let (cx, cy) = self.coords(q);
        let mut best = (f64::INFINITY, usize::MAX);
        let mut ring = 0usize;
        loop {
            let lo_x = cx.saturating_sub(ring);
            let hi_x = (cx + ring).min(self.side - 1);
            let lo_y = cy.saturating_sub(ring);
            let hi_y = (cy + ring).min(self.side - 1);
            for y in lo_y..=hi_y {
                for x in lo_x..=hi_x {
                    let on_ring = x.abs_diff(cx) == ring || y.abs_diff(cy) == ring;
                    if !on_ring {
                        continue;
                    }
                    for &i in &self.buckets[y * self.side + x] {
                        let pt = self.points[i];
                        let d2 = (pt[0] - q[0]).powi(2) + (pt[1] - q[1]).powi(2);
                        if d2 < best.0 || (d2 == best.0 && i < best.1) {
                            best = (d2, i);
                        }
                    }
                }
            }
            // Every unvisited cell is at least `ring * cell` away.
            let reach = ring as f64 * self.cell;
            let exhausted = lo_x == 0 && lo_y == 0 && hi_x == self.side - 1 && hi_y == self.side - 1;
            if (best.1 != usize::MAX && best.0 <= reach * reach) || exhausted {
                return best.1;
            }
            ring += 1;
        }
    }
}

fn voronoi_interferers<R: Rng + ?Sized>(
    bs: &[Point],
    tagged: usize,
    radius: f64,
    p: &SystemParams,
    slots: &SlotPartition,
    mode: Mode,
    rng: &mut R,
) -> Vec<Interferer> {
    if bs.is_empty() {
        return Vec::new();
    }
    let devices = sample_ppp(p.lambda_u, radius, rng);
    let grid = NearestGrid::new(bs, radius, 1.0 / p.lambda_b.sqrt());
    // Uniform choice per cell by reservoir sampling in device order.
    let mut seen = vec![0u32; bs.len()];
    let mut chosen: Vec<Option<usize>> = vec![None; bs.len()];
    let mut serving = vec![0usize; devices.len()];
    for (j, u) in devices.iter().enumerate() {
        let cell = grid.nearest(u);
        serving[j] = cell;
        seen[cell] += 1;
        if rng.random::<f64>() * f64::from(seen[cell]) < 1.0 {
            chosen[cell] = Some(j);
        }
    }
    let scale = slots.tau1() * p.slot_t * p.eta * p.p_t;
    let ea = p.epsilon * p.alpha;
    let x1 = bs[tagged];
    let mut out = Vec::new();
    for (cell, pick) in chosen.iter().enumerate() {
        let Some(j) = *pick else { continue };
        if cell == tagged {
            continue;
        }
        let u = devices[j];
        let r = dist(&u, &bs[serving[j]]);
        let harvested = scale
            * bs
                .iter()
                .map(|b| exp1(rng) * dist(&u, b).powf(-p.alpha))
                .sum::<f64>();
        let uplink = slots.tau3() * p.slot_t * p.rho * r.powf(ea);
        let demand = match mode {
            Mode::Joint => p.e_rec + uplink,
            Mode::Uplink => uplink,
            Mode::Downlink => p.e_rec,
        };
        if harvested >= demand {
            out.push(Interferer {
                distance: dist(&u, &x1),
                serving_distance: r,
                power: p.rho * r.powf(ea),
            });
        }
    }
    out
}

fn dist(a: &Point, b: &Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Sample mean and standard error of `E[exp(-s I)]` for the approximate
/// interferer model, one entry per `s`.
///
/// Each field is generated out to a radius where the mean of the remaining
/// interference is at most `0.01 / max(s)`; the remainder enters through its
/// mean as the factor `exp(-s * tail)`, whose error is second order in the
/// (tiny) tail.
pub fn mc_interference_laplace(
    p: &SystemParams,
    density: f64,
    s: &[f64],
    n_fields: u64,
    seed: u64,
) -> Vec<(f64, f64)> {
    if density == 0.0 || n_fields == 0 {
        return s.iter().map(|_| (1.0, 0.0)).collect();
    }
    let bound = approx_tail(density, p);
    let coef = bound.mean(1.0);
    let s_max = s.iter().copied().fold(0.0, f64::max);
    let min_radius = (100.0 / (PI * density)).sqrt();
    let radius = if s_max > 0.0 {
        (s_max * coef / 0.01)
            .powf(1.0 / (p.alpha - 2.0))
            .max(min_radius)
    } else {
        min_radius
    };
    let tail = bound.mean(radius);
    // the approximate model ignores the partition and mode
    let slots = SlotPartition::uplink(0.5).expect("valid partition");
    let fields: Vec<f64> = (0..n_fields)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let source = InterfererSource::PppApprox { density, radius };
            build_ul_interferers(source, p, &slots, Mode::Uplink, &mut rng)
                .iter()
                .map(|x| exp1(&mut rng) * x.power / p.rho * x.distance.powf(-p.alpha))
                .sum::<f64>()
        })
        .collect();
    let n = fields.len() as f64;
    s.iter()
        .map(|&si| {
            let correction = (-si * tail).exp();
            let (mut sum, mut sq) = (0.0, 0.0);
            for &i in &fields {
                let v = (-si * i).exp() * correction;
                sum += v;
                sq += v * v;
            }
            let mean = sum / n;
            let var = (sq / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
            (mean, (var / n).sqrt())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn approx_interferers_respect_serving_constraint() {
        let p = SystemParams::paper_defaults();
        let s = SlotPartition::uplink(0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let src = InterfererSource::PppApprox {
            density: 0.7,
            radius: 20.0,
        };
        let v = build_ul_interferers(src, &p, &s, Mode::Uplink, &mut rng);
        assert!(!v.is_empty());
        assert!(v.iter().all(|i| i.serving_distance < i.distance && i.distance <= 20.0));
        let none = InterfererSource::PppApprox {
            density: 0.0,
            radius: 20.0,
        };
        assert!(build_ul_interferers(none, &p, &s, Mode::Uplink, &mut rng).is_empty());
    }

    #[test]
    fn nearest_grid_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let bs = sample_ppp(1.0, 8.0, &mut rng);
        let grid = NearestGrid::new(&bs, 8.0, 1.0);
        for q in sample_ppp(5.0, 8.0, &mut rng) {
            let brute = (0..bs.len())
                .min_by(|&a, &b| dist(&q, &bs[a]).total_cmp(&dist(&q, &bs[b])))
                .unwrap();
            assert_eq!(dist(&q, &bs[grid.nearest(&q)]), dist(&q, &bs[brute]));
        }
    }

    #[test]
    fn voronoi_excludes_tagged_cell_and_serves_nearest() {
        let p = SystemParams {
            e_rec: 0.0,
            ..SystemParams::paper_defaults()
        };
        let s = SlotPartition::uplink(0.9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let bs = sample_ppp(1.0, 6.0, &mut rng);
        let tagged = 0;
        let src = InterfererSource::VoronoiExact {
            bs: &bs,
            tagged,
            radius: 6.0,
        };
        let v = build_ul_interferers(src, &p, &s, Mode::Uplink, &mut rng);
        assert!(v.len() < bs.len());
        assert!(v.iter().all(|i| i.distance >= i.serving_distance - 1e-12));
    }
}
