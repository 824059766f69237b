//! Seeded random points in the standard test box
//! `y ∈ [0.5, 3]`, `x, z, u, v ∈ [-2, 2]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Point5;
use crate::prolongation::ProlongedPoint;

pub const Y_RANGE: (f64, f64) = (0.5, 3.0);
pub const OTHER_RANGE: (f64, f64) = (-2.0, 2.0);

#[derive(Debug, Clone)]
pub struct ChartSampler {
    rng: ChaCha8Rng,
}

impl ChartSampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    pub fn point(&mut self) -> Point5 {
        let (lo, hi) = OTHER_RANGE;
        let x = self.uniform(lo, hi);
        let y = self.uniform(Y_RANGE.0, Y_RANGE.1);
        let z = self.uniform(lo, hi);
        let u = self.uniform(lo, hi);
        let v = self.uniform(lo, hi);
        Point5::new(x, y, z, u, v).expect("sampling box lies inside the chart")
    }

    pub fn points(&mut self, n: usize) -> Vec<Point5> {
        (0..n).map(|_| self.point()).collect()
    }

    pub fn prolonged(&mut self, m: usize) -> ProlongedPoint {
        ProlongedPoint::new((0..m).map(|_| self.point()).collect()).expect("m >= 1 copies in chart")
    }

    /// A point of the box with `2x + y² < 0`.
    ///
    /// `p = 2x + y²` obeys `p' = 2a₁p² + 2a₃p − 2a₂` along the flow, so for
    /// `a₂ ≥ 0` the half-space `p < 0` is forward-invariant and the Riccati
    /// blow-up cannot occur; outside it solutions can escape in finite time.
    pub fn riccati_bounded_point(&mut self) -> Point5 {
        loop {
            let p = self.point();
            if 2.0 * p.x + p.y * p.y < 0.0 {
                return p;
            }
        }
    }

    pub fn riccati_bounded_pair(&mut self) -> ProlongedPoint {
        let (a, b) = (self.riccati_bounded_point(), self.riccati_bounded_point());
        ProlongedPoint::pair(a, b).expect("sampling box lies inside the chart")
    }
}
