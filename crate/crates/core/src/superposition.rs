//! Superposition rule for the projection onto `(x, y, z)`: the triple
//! `(C1_e1, C_plus, C1_e1e3)` of a solution pair, and Newton reconstruction
//! of one solution from the other plus the triple.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{condition_number, numerical_rank, Point5};
use crate::jet::{Jet, Scalar};
use crate::prolongation::{conserved_s, ConservedQuantityId};

/// Condition estimates above this make the Newton Jacobian singular.
pub const MAX_CONDITION: f64 = 1e12;
pub const MAX_HALVINGS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let p = Self { x, y, z };
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::Chart(format!("non-finite coordinates {:?}", p.coords())));
        }
        if y <= 0.0 {
            return Err(Error::Chart(format!("y = {y} is not positive")));
        }
        Ok(p)
    }

    pub fn coords(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn distance_inf(&self, other: &Point3) -> f64 {
        self.coords().iter().zip(other.coords()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

pub fn project(p: &Point5) -> Point3 {
    Point3 { x: p.x, y: p.y, z: p.z }
}

/// Values of `(C1_e1, C_plus, C1_e1e3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsTriple {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

impl ConstantsTriple {
    pub fn as_array(&self) -> [f64; 3] {
        [self.k1, self.k2, self.k3]
    }
}

const TRIPLE: [ConservedQuantityId; 3] =
    [ConservedQuantityId::C1E1, ConservedQuantityId::CPlus, ConservedQuantityId::C1E1E3];

fn triple_s<S: Scalar>(a: [S; 3], b: [S; 3]) -> Result<[S; 3]> {
    // None of the three depends on u or v.
    let z = S::zero();
    let c = [a[0], a[1], a[2], z, z, b[0], b[1], b[2], z, z];
    Ok([conserved_s(TRIPLE[0], &c)?, conserved_s(TRIPLE[1], &c)?, conserved_s(TRIPLE[2], &c)?])
}

pub fn constants_from_pair(a: &Point3, b: &Point3) -> Result<ConstantsTriple> {
    let [k1, k2, k3] = triple_s(a.coords(), b.coords())?;
    Ok(ConstantsTriple { k1, k2, k3 })
}

/// Value and `∂/∂(x1, y1, z1)` of the triple.
fn triple_with_jacobian(a: &Point3, b: &Point3) -> Result<(Vector3<f64>, Matrix3<f64>)> {
    let seeded = [
        Jet::<3>::variable(a.x, 0),
        Jet::variable(a.y, 1),
        Jet::variable(a.z, 2),
    ];
    let fixed = b.coords().map(Jet::constant);
    let q = triple_s(seeded, fixed)?;
    let mut jac = Matrix3::zeros();
    for r in 0..3 {
        if !q[r].grad_is_finite() {
            return Err(Error::Singular(format!("gradient of {}", TRIPLE[r])));
        }
        for c in 0..3 {
            jac[(r, c)] = q[r].grad[c];
        }
    }
    Ok((Vector3::new(q[0].value, q[1].value, q[2].value), jac))
}

pub fn triple_jacobian(a: &Point3, b: &Point3) -> Result<Matrix3<f64>> {
    Ok(triple_with_jacobian(a, b)?.1)
}

/// Rank of `∂(k1, k2, k3)/∂(x1, y1, z1)`.
pub fn independence_rank3(a: &Point3, b: &Point3) -> Result<usize> {
    let jac = triple_jacobian(a, b)?;
    Ok(numerical_rank(&nalgebra::DMatrix::from_iterator(3, 3, jac.iter().copied())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonSettings {
    /// Residual target: `‖F‖∞ < tol · max(1, ‖k‖∞)`.
    pub tol: f64,
    /// The Newton correction at the final iterate must also satisfy
    /// `‖J⁻¹F‖∞ ≤ step_tol · max(1, ‖ξ‖∞)`. The three constants can differ by
    /// many orders of magnitude, so a small `‖F‖` alone does not pin `ξ1`.
    pub step_tol: f64,
    pub max_iter: usize,
    pub chart_floor: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self { tol: 1e-12, step_tol: 1e-10, max_iter: 50, chart_floor: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reconstruction {
    pub point: Point3,
    /// Residual evaluations at accepted iterates; an exact initial guess counts 1.
    pub iterations: usize,
    pub residual: f64,
    /// Largest Jacobian condition estimate met along the way.
    pub condition: f64,
    /// `‖F‖∞` at each accepted iterate, plus the final correction if taken.
    pub history: Vec<f64>,
}

fn residual(a: &Point3, b: &Point3, k: &ConstantsTriple) -> Result<Vector3<f64>> {
    let v = triple_s(a.coords(), b.coords())?;
    Ok(Vector3::new(v[0] - k.k1, v[1] - k.k2, v[2] - k.k3))
}

fn shifted(x: &Point3, step: &Vector3<f64>, lambda: f64) -> Point3 {
    Point3 { x: x.x + lambda * step[0], y: x.y + lambda * step[1], z: x.z + lambda * step[2] }
}

/// Damped Newton solve of `constants_from_pair(ξ1, particular) = k` for `ξ1`.
pub fn reconstruct(particular: &Point3, k: &ConstantsTriple, guess: &Point3, settings: &NewtonSettings) -> Result<Reconstruction> {
    if !(settings.tol > 0.0 && settings.step_tol > 0.0) || settings.max_iter == 0 {
        return Err(Error::InvalidArgument("Newton needs positive tolerances and at least one iteration".into()));
    }
    let mut x = Point3::new(guess.x, guess.y, guess.z)?;
    let mut f = residual(&x, particular, k)?;
    let mut norm = f.amax();
    let mut history = vec![norm];
    let mut condition: f64 = 0.0;
    let mut iterations = 1;
    let target = settings.tol * k.as_array().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if norm == 0.0 {
        return Ok(Reconstruction { point: x, iterations, residual: norm, condition, history });
    }
    loop {
        let (_, jac) = triple_with_jacobian(&x, particular)?;
        let cond = condition_number(&nalgebra::DMatrix::from_iterator(3, 3, jac.iter().copied()));
        if !(cond <= MAX_CONDITION) {
            return Err(Error::SingularJacobian { condition: cond });
        }
        condition = condition.max(cond);
        let step = jac.lu().solve(&(-f)).ok_or(Error::SingularJacobian { condition: cond })?;

        let scale = x.coords().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if norm < target && step.amax() <= settings.step_tol * scale {
            // Converged; the remaining correction is kept when it does not
            // make the residual worse.
            let cand = shifted(&x, &step, 1.0);
            if cand.y > settings.chart_floor {
                if let Ok(fc) = residual(&cand, particular, k) {
                    if fc.amax() <= norm {
                        x = cand;
                        norm = fc.amax();
                        history.push(norm);
                    }
                }
            }
            return Ok(Reconstruction { point: x, iterations, residual: norm, condition, history });
        }
        if iterations > settings.max_iter {
            return Err(Error::NewtonNonConvergence { iterations: iterations - 1, residual: norm });
        }

        let mut lambda = 1.0;
        let mut accepted = None;
        let mut left_chart = false;
        for _ in 0..=MAX_HALVINGS {
            let cand = shifted(&x, &step, lambda);
            if !(cand.y > settings.chart_floor) {
                left_chart = true;
            } else if let Ok(fc) = residual(&cand, particular, k) {
                let nc = fc.amax();
                // At the roundoff floor a full step may leave ‖F‖ unchanged.
                if nc.is_finite() && (nc < norm || (nc == norm && lambda == 1.0)) {
                    accepted = Some((cand, fc, nc));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((cand, fc, nc)) => {
                x = cand;
                f = fc;
                norm = nc;
                history.push(norm);
                iterations += 1;
            }
            None if left_chart => {
                return Err(Error::Chart(format!("Newton iterate left y > {} from {:?}", settings.chart_floor, x.coords())));
            }
            None => return Err(Error::NewtonNonConvergence { iterations, residual: norm }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackedSample {
    pub t: f64,
    pub outcome: std::result::Result<Reconstruction, String>,
}

/// Lagrange extrapolation to `t` through the last (up to) three points.
fn extrapolate(history: &[(f64, Point3)], t: f64) -> Option<Point3> {
    let tail = &history[history.len().saturating_sub(3)..];
    if tail.len() < 2 {
        return None;
    }
    let mut c = [0.0; 3];
    for (i, (ti, pi)) in tail.iter().enumerate() {
        let w: f64 = tail
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, (tj, _))| (t - tj) / (ti - tj))
            .product();
        for (ck, v) in c.iter_mut().zip(pi.coords()) {
            *ck += w * v;
        }
    }
    Some(Point3 { x: c[0], y: c[1], z: c[2] })
}

/// Reconstructs `ξ1(t)` along a particular solution. Each sample is
/// warm-started from the polynomial extrapolation of up to three previous
/// reconstructions (the previous one alone after the first sample, `start`
/// before any success).
pub fn reconstruct_along(
    particular: &[(f64, Point3)],
    k: &ConstantsTriple,
    start: &Point3,
    settings: &NewtonSettings,
) -> Vec<TrackedSample> {
    let mut history: Vec<(f64, Point3)> = Vec::new();
    particular
        .iter()
        .map(|(t, p)| {
            let guess = extrapolate(&history, *t).filter(|g| g.y > settings.chart_floor);
            let guess = guess.or(history.last().map(|h| h.1)).unwrap_or(*start);
            let outcome = reconstruct(p, k, &guess, settings);
            if let Ok(r) = &outcome {
                history.push((*t, r.point));
            }
            TrackedSample { t: *t, outcome: outcome.map_err(|e| e.to_string()) }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::ChartSampler;

    fn p3(x: f64, y: f64, z: f64) -> Point3 {
        Point3::new(x, y, z).unwrap()
    }

    #[test]
    fn projection_drops_u_v() {
        let p = Point5::new(1.0, 2.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(project(&p), p3(1.0, 2.0, 0.0));
    }

    #[test]
    fn chart_is_enforced() {
        assert!(Point3::new(0.0, 0.0, 0.0).is_err());
        assert!(Point3::new(f64::NAN, 1.0, 0.0).is_err());
    }

    #[test]
    fn coincidence_values_and_swap() {
        let a = p3(0.4, 1.3, -0.2);
        let k = constants_from_pair(&a, &a).unwrap();
        assert!((k.k1 - 1.0).abs() < 1e-15);
        assert_eq!(k.k2, 0.0);
        let b = p3(-0.7, 0.8, 0.5);
        let (ab, ba) = (constants_from_pair(&a, &b).unwrap(), constants_from_pair(&b, &a).unwrap());
        assert!((ab.k1 - ba.k1).abs() <= 1e-14 * ab.k1.abs());
    }

    #[test]
    fn generic_rank_is_three() {
        let mut s = ChartSampler::new(11);
        for _ in 0..50 {
            let (a, b) = (project(&s.point()), project(&s.point()));
            assert_eq!(independence_rank3(&a, &b).unwrap(), 3);
        }
    }

    #[test]
    fn rank_is_invariant_under_row_scaling() {
        let (a, b) = (p3(0.3, 1.2, 0.1), p3(-0.4, 0.9, 0.0));
        let jac = triple_jacobian(&a, &b).unwrap();
        let scaled = Matrix3::from_diagonal(&Vector3::new(3.0, -0.5, 1e3)) * jac;
        let r = |m: Matrix3<f64>| numerical_rank(&nalgebra::DMatrix::from_iterator(3, 3, m.iter().copied()));
        assert_eq!(r(jac), r(scaled));
    }

    #[test]
    fn exact_guess_takes_one_iteration() {
        let (a, b) = (p3(0.3, 1.2, 0.1), p3(-0.4, 0.9, 0.0));
        let k = constants_from_pair(&a, &b).unwrap();
        let r = reconstruct(&b, &k, &a, &NewtonSettings::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.point, a);
    }

    #[test]
    fn perturbed_guess_recovers_root_quadratically() {
        let mut s = ChartSampler::new(5);
        let mut checked = 0;
        while checked < 20 {
            let (a, b) = (project(&s.point()), project(&s.point()));
            let Ok(k) = constants_from_pair(&a, &b) else { continue };
            let guess = Point3 { x: a.x * 1.1, y: a.y * 1.1, z: a.z * 1.1 };
            // Near-degenerate roots sit next to folds of the constants map,
            // where a 10% guess can land in a different valley.
            let jac = triple_jacobian(&a, &b).unwrap();
            if condition_number(&nalgebra::DMatrix::from_iterator(3, 3, jac.iter().copied())) > 1e4 {
                continue;
            }
            let r = reconstruct(&b, &k, &guess, &NewtonSettings::default()).unwrap();
            assert!(r.point.distance_inf(&a) < 1e-10, "{a:?} vs {r:?}");
            // Once in the basin, e_{n+1} = O(e_n²) until roundoff takes over.
            for w in r.history.windows(2) {
                if w[0] < 1e-3 {
                    assert!(w[1] <= (1e3 * w[0] * w[0]).max(1e-11), "{:?}", r.history);
                }
            }
            checked += 1;
        }
    }

    #[test]
    fn singular_jacobian_is_reported() {
        // At coincidence k1 and k2 are stationary in ξ1.
        let (a, b) = (p3(0.2, 1.0, 0.0), p3(-0.4, 0.9, 0.3));
        let k = constants_from_pair(&b, &a).unwrap();
        let err = reconstruct(&a, &k, &a, &NewtonSettings::default()).unwrap_err();
        assert!(matches!(err, Error::SingularJacobian { .. }), "{err:?}");
    }

    #[test]
    fn non_convergence_is_reported() {
        let (a, b) = (p3(0.3, 1.2, 0.1), p3(-0.4, 0.9, 0.0));
        let k = constants_from_pair(&a, &b).unwrap();
        let settings = NewtonSettings { max_iter: 1, ..NewtonSettings::default() };
        let err = reconstruct(&b, &k, &p3(1.0, 2.0, 0.5), &settings).unwrap_err();
        assert!(matches!(err, Error::NewtonNonConvergence { .. } | Error::SingularJacobian { .. }));
    }
}
