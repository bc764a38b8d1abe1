//! Poisson point sampling and energy harvesting.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};

use super::EnergyModel;
use crate::model::{psi_unchecked, SlotPartition, SystemParams};

pub type Point = [f64; 2];

/// Homogeneous PPP of `density` on the disc of `radius` centred at the
/// origin.
pub fn sample_ppp<R: Rng + ?Sized>(density: f64, radius: f64, rng: &mut R) -> Vec<Point> {
    if !(density > 0.0 && radius > 0.0) {
        return Vec::new();
    }
    let mean = density * PI * radius * radius;
    let n = match Poisson::new(mean) {
        Ok(d) => d.sample(rng) as usize,
        Err(_) => 0,
    };
    (0..n)
        .map(|_| {
            let r = radius * rng.random::<f64>().sqrt();
            let theta = 2.0 * PI * rng.random::<f64>();
            [r * theta.cos(), r * theta.sin()]
        })
        .collect()
}

/// Distances of a planar PPP from a fixed centre, in increasing order:
/// `pi density r_k^2` are the arrival times of a unit-rate Poisson process.
#[derive(Debug, Clone)]
pub struct RadialStream {
    rate: f64,
    arrival: f64,
}

impl RadialStream {
    pub fn new(density: f64) -> Self {
        Self {
            rate: PI * density,
            arrival: 0.0,
        }
    }

    pub fn next_distance<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        self.arrival += exp1(rng);
        (self.arrival / self.rate).sqrt()
    }
}

#[inline]
pub(crate) fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

/// Energy harvested in the charging sub-slot (J) from BSs at `distances`
/// with charging fading gains `fading`.
///
/// `FullSum` adds every BS. `DominantTwo` keeps the two nearest and replaces
/// the rest by their conditional mean.
pub fn harvest_energy(
    distances: &[f64],
    fading: &[f64],
    p: &SystemParams,
    slots: &SlotPartition,
    model: EnergyModel,
) -> f64 {
    let scale = slots.tau1() * p.slot_t * p.eta * p.p_t;
    let received = match model {
        EnergyModel::FullSum => distances
            .iter()
            .zip(fading)
            .map(|(r, g)| g * r.powf(-p.alpha))
            .sum::<f64>(),
        EnergyModel::DominantTwo => {
            let mut idx: Vec<usize> = (0..distances.len()).collect();
            idx.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]));
            let near: f64 = idx
                .iter()
                .take(2)
                .map(|&i| fading[i] * distances[i].powf(-p.alpha))
                .sum();
            let far = match idx.get(1) {
                Some(&i) => psi_unchecked(distances[i], p),
                None => 0.0,
            };
            near + far
        }
    };
    scale * received
}
