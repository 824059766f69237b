//! Adaptive Dormand-Prince 5(4) integration of the system and its diagonal
//! prolongations, with drift monitoring of the conserved quantities.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, IntegrationFailure, Result};
use crate::expr::CoeffSet;
use crate::liesystem::combine;
use crate::prolongation::{conserved, ConservedQuantityId, ProlongedPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub t0: f64,
    pub t1: f64,
    /// Integration stops with a chart-exit error when any `y` drops below this.
    pub chart_floor: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            h_init: 1e-3,
            h_min: 1e-14,
            h_max: 0.1,
            t0: 0.0,
            t1: 1.0,
            chart_floor: 1e-6,
        }
    }
}

impl IntegratorConfig {
    pub fn window(t0: f64, t1: f64) -> Self {
        Self { t0, t1, ..Self::default() }
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    /// Time runs from `t0` towards `t1`; `t1 < t0` integrates backwards.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        let all = [self.rel_tol, self.abs_tol, self.h_init, self.h_min, self.h_max, self.t0, self.t1, self.chart_floor];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("integrator settings must be finite".into());
        }
        if self.rel_tol <= 0.0 || self.abs_tol <= 0.0 {
            return bad(format!("tolerances must be positive (rel {}, abs {})", self.rel_tol, self.abs_tol));
        }
        if !(self.h_min > 0.0 && self.h_min <= self.h_init && self.h_init <= self.h_max) {
            return bad(format!(
                "need 0 < h_min <= h_init <= h_max, got {} / {} / {}",
                self.h_min, self.h_init, self.h_max
            ));
        }
        if self.t0 == self.t1 {
            return bad(format!("empty time window [{}, {}]", self.t0, self.t1));
        }
        if self.chart_floor <= 0.0 {
            return bad(format!("chart floor {} must be positive", self.chart_floor));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub point: ProlongedPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub stats: StepStats,
    pub drift: BTreeMap<ConservedQuantityId, DriftRecord>,
}

impl Trajectory {
    pub fn m(&self) -> usize {
        self.samples[0].point.m()
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("a trajectory has at least its initial sample")
    }

    pub fn attach_drift(&mut self, report: &DriftReport) {
        for r in &report.records {
            self.drift.insert(r.id, r.clone());
        }
    }

    /// Writes `t,x1,y1,z1,u1,v1[,x2,...]` rows with shortest round-trip floats.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut header = vec!["t".to_string()];
        for k in 1..=self.m() {
            for c in crate::geometry::COORD_NAMES {
                header.push(format!("{c}{k}"));
            }
        }
        writeln!(out, "{}", header.join(","))?;
        for s in &self.samples {
            let mut row = vec![format!("{:?}", s.t)];
            row.extend(s.point.flat().iter().map(|v| format!("{v:?}")));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    /// JSON records `{t, copies: [[x, y, z, u, v], ...]}`.
    pub fn to_json_records(&self) -> serde_json::Value {
        let records: Vec<_> = self
            .samples
            .iter()
            .map(|s| {
                let copies: Vec<[f64; 5]> = s.point.copies().iter().map(|p| p.coords()).collect();
                serde_json::json!({ "t": s.t, "copies": copies })
            })
            .collect();
        serde_json::Value::Array(records)
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus the embedded fourth-order ones.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

struct System<'a> {
    coeffs: &'a CoeffSet,
    evaluations: usize,
}

impl System<'_> {
    fn rhs(&mut self, t: f64, y: &[f64], out: &mut [f64]) -> std::result::Result<(), IntegrationFailure> {
        self.evaluations += 1;
        let a = self.coeffs.eval(t).map_err(IntegrationFailure::Coefficients)?;
        for (src, dst) in y.chunks_exact(5).zip(out.chunks_exact_mut(5)) {
            let block = [src[0], src[1], src[2], src[3], src[4]];
            dst.copy_from_slice(&combine(&a, &block));
        }
        Ok(())
    }
}

struct Stepper {
    k: [Vec<f64>; 7],
    stage: Vec<f64>,
    y_new: Vec<f64>,
    err: Vec<f64>,
}

impl Stepper {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            stage: vec![0.0; n],
            y_new: vec![0.0; n],
            err: vec![0.0; n],
        }
    }

    /// One Dormand-Prince step of size `h` from `(t, y)`; `k[0]` must hold
    /// `f(t, y)`. Leaves the fifth-order solution in `y_new`, the error
    /// estimate in `err`, and `f(t + h, y_new)` in `k[6]`.
    fn step(&mut self, sys: &mut System<'_>, t: f64, y: &[f64], h: f64) -> std::result::Result<(), IntegrationFailure> {
        let n = y.len();
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, a) in A[s].iter().enumerate().take(s) {
                    acc += a * self.k[j][i];
                }
                self.stage[i] = y[i] + h * acc;
            }
            let (done, rest) = self.k.split_at_mut(s);
            let _ = done;
            sys.rhs(t + C[s] * h, &self.stage, &mut rest[0])?;
        }
        // Stage 7 is evaluated at the fifth-order solution (FSAL).
        self.y_new.copy_from_slice(&self.stage);
        for i in 0..n {
            let mut e = 0.0;
            for (j, w) in E.iter().enumerate() {
                e += w * self.k[j][i];
            }
            self.err[i] = h * e;
        }
        Ok(())
    }
}

fn error_norm(err: &[f64], y: &[f64], y_new: &[f64], rel: f64, abs: f64) -> f64 {
    let n = err.len() as f64;
    let ss: f64 = err
        .iter()
        .zip(y.iter().zip(y_new))
        .map(|(e, (a, b))| {
            let w = abs + rel * a.abs().max(b.abs());
            (e / w).powi(2)
        })
        .sum();
    (ss / n).sqrt()
}

fn check_floor(y: &[f64], floor: f64) -> std::result::Result<(), IntegrationFailure> {
    for (k, block) in y.chunks_exact(5).enumerate() {
        if !(block[1] >= floor) {
            return Err(IntegrationFailure::ChartExit { copy: k + 1, y: block[1] });
        }
    }
    Ok(())
}

/// Integrates `X^[m]` from `cfg.t0` to `cfg.t1`, recording every accepted step.
pub fn integrate(init: &ProlongedPoint, coeffs: &CoeffSet, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let fail = |kind, t_reached| Error::Integration { kind, t_reached };
    let mut y = init.flat();
    let n = y.len();
    check_floor(&y, cfg.chart_floor).map_err(|k| fail(k, cfg.t0))?;

    let mut sys = System { coeffs, evaluations: 0 };
    let mut st = Stepper::new(n);
    let dir = (cfg.t1 - cfg.t0).signum();
    let span = (cfg.t1 - cfg.t0).abs();
    let mut t = cfg.t0;
    let mut h = cfg.h_init.min(span);
    let mut stats = StepStats::default();
    let mut samples = vec![Sample { t, point: init.clone() }];

    sys.rhs(t, &y, &mut st.k[0]).map_err(|k| fail(k, t))?;
    loop {
        let remaining = (cfg.t1 - t) * dir;
        if remaining <= 0.0 {
            break;
        }
        let last = h >= remaining;
        let h_step = if last { remaining } else { h };
        let t_new = if last { cfg.t1 } else { t + dir * h_step };

        st.step(&mut sys, t, &y, dir * h_step).map_err(|k| fail(k, t))?;
        let finite = st.y_new.iter().chain(&st.k[6]).all(|v| v.is_finite());
        let err = if finite { error_norm(&st.err, &y, &st.y_new, cfg.rel_tol, cfg.abs_tol) } else { f64::INFINITY };

        if err <= 1.0 {
            check_floor(&st.y_new, cfg.chart_floor).map_err(|k| fail(k, t_new))?;
            t = t_new;
            y.copy_from_slice(&st.y_new);
            let (first, rest) = st.k.split_at_mut(1);
            first[0].copy_from_slice(&rest[5]);
            stats.accepted += 1;
            let point = ProlongedPoint::from_flat(&y).map_err(|_| {
                fail(IntegrationFailure::ChartExit { copy: 0, y: f64::NAN }, t)
            })?;
            samples.push(Sample { t, point });
            let factor = if err == 0.0 { MAX_FACTOR } else { (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR) };
            h = (h_step * factor).min(cfg.h_max);
        } else {
            stats.rejected += 1;
            let factor = if finite { (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0) } else { MIN_FACTOR };
            h = h_step * factor;
        }
        if h < cfg.h_min && (cfg.t1 - t) * dir > cfg.h_min {
            return Err(fail(IntegrationFailure::StepUnderflow { h_min: cfg.h_min }, t));
        }
        h = h.max(cfg.h_min);
    }
    stats.rhs_evaluations = sys.evaluations;
    Ok(Trajectory { samples, stats, drift: BTreeMap::new() })
}

/// Fixed-step fifth-order propagation with `steps` equal steps (no error
/// control); used for convergence-order checks.
pub fn integrate_fixed(init: &ProlongedPoint, coeffs: &CoeffSet, t0: f64, t1: f64, steps: usize) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::InvalidArgument("at least one step is required".into()));
    }
    let fail = |kind, t_reached| Error::Integration { kind, t_reached };
    let mut y = init.flat();
    let mut sys = System { coeffs, evaluations: 0 };
    let mut st = Stepper::new(y.len());
    let h = (t1 - t0) / steps as f64;
    let mut samples = vec![Sample { t: t0, point: init.clone() }];
    let mut t = t0;
    sys.rhs(t, &y, &mut st.k[0]).map_err(|k| fail(k, t))?;
    for s in 1..=steps {
        st.step(&mut sys, t, &y, h).map_err(|k| fail(k, t))?;
        t = if s == steps { t1 } else { t0 + h * s as f64 };
        y.copy_from_slice(&st.y_new);
        let (first, rest) = st.k.split_at_mut(1);
        first[0].copy_from_slice(&rest[5]);
        let point = ProlongedPoint::from_flat(&y).map_err(|_| fail(IntegrationFailure::ChartExit { copy: 0, y: f64::NAN }, t))?;
        samples.push(Sample { t, point });
    }
    let stats = StepStats { accepted: steps, rejected: 0, rhs_evaluations: sys.evaluations };
    Ok(Trajectory { samples, stats, drift: BTreeMap::new() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftRecord {
    pub id: ConservedQuantityId,
    /// Reference value: the first non-singular sample.
    pub initial: Option<f64>,
    /// `max |Q(t) − Q(t_ref)| / max(1, |Q(t_ref)|)`.
    pub max_drift: Option<f64>,
    /// Samples where the quantity could not be evaluated.
    pub gaps: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftReport {
    pub records: Vec<DriftRecord>,
}

impl DriftReport {
    /// Largest drift over all records that had a reference value.
    pub fn max_drift(&self) -> f64 {
        self.records.iter().filter_map(|r| r.max_drift).fold(0.0, f64::max)
    }

    pub fn get(&self, id: ConservedQuantityId) -> Option<&DriftRecord> {
        self.records.iter().find(|r| r.id == id)
    }
}

/// Relative drift of each requested quantity along a two-copy trajectory.
pub fn monitor(traj: &Trajectory, ids: &[ConservedQuantityId]) -> Result<DriftReport> {
    if traj.m() != 2 {
        return Err(Error::InvalidArgument(format!(
            "conserved quantities need a two-copy trajectory, got m = {}",
            traj.m()
        )));
    }
    let mut records = Vec::with_capacity(ids.len());
    for &id in ids {
        let mut initial = None;
        let mut max_drift: Option<f64> = None;
        let mut gaps = 0;
        for s in &traj.samples {
            match conserved(id, &s.point) {
                Ok(q) => match initial {
                    None => {
                        initial = Some(q);
                        max_drift = Some(0.0);
                    }
                    Some(q0) => {
                        let d = (q - q0).abs() / f64::max(1.0, q0.abs());
                        max_drift = max_drift.map(|m| m.max(d));
                    }
                },
                Err(Error::Singular(_)) => gaps += 1,
                Err(e) => return Err(e),
            }
        }
        records.push(DriftRecord { id, initial, max_drift, gaps, samples: traj.samples.len() });
    }
    Ok(DriftReport { records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point5;
    use approx::assert_abs_diff_eq;

    fn single(c: [f64; 5]) -> ProlongedPoint {
        ProlongedPoint::new(vec![Point5::from_coords(c).unwrap()]).unwrap()
    }

    fn tight(t0: f64, t1: f64) -> IntegratorConfig {
        IntegratorConfig::window(t0, t1).with_tolerances(1e-12, 1e-14)
    }

    #[test]
    fn translation_flow_is_exact() {
        let traj = integrate(&single([0.0, 1.0, 0.0, 0.0, 0.0]), &CoeffSet::single(2), &tight(0.0, 1.0)).unwrap();
        let end = traj.last();
        assert_eq!(end.t, 1.0);
        let c = end.point.copies()[0].coords();
        assert_abs_diff_eq!(c[0], -1.0, epsilon = 1e-10);
        assert_eq!(&c[1..], &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn linear_scaling_flow() {
        let traj = integrate(&single([1.0, 1.0, 0.0, 1.0, 0.0]), &CoeffSet::single(3), &tight(0.0, 1.0)).unwrap();
        let c = traj.last().point.copies()[0].coords();
        let e = 1f64.exp();
        let expected = [e * e, e, 0.0, e, 0.0];
        for k in 0..5 {
            assert_abs_diff_eq!(c[k], expected[k], epsilon = 1e-8);
        }
        assert!(traj.samples.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn zero_coefficients_freeze_the_flow() {
        let p = ProlongedPoint::pair(
            Point5::new(0.3, 1.2, 0.1, 0.5, -0.2).unwrap(),
            Point5::new(-0.4, 0.9, 0.0, 0.1, 0.3).unwrap(),
        )
        .unwrap();
        let traj = integrate(&p, &CoeffSet::zero(), &IntegratorConfig::default()).unwrap();
        assert!(traj.samples.iter().all(|s| s.point == p));
        let report = monitor(&traj, &ConservedQuantityId::ALL).unwrap();
        assert_eq!(report.max_drift(), 0.0);
    }

    #[test]
    fn tighter_tolerance_reduces_error() {
        let init = single([1.0, 1.0, 0.0, 1.0, 0.0]);
        let err = |rel: f64| {
            let cfg = IntegratorConfig::window(0.0, 1.0).with_tolerances(rel, rel * 1e-2);
            let c = integrate(&init, &CoeffSet::single(3), &cfg).unwrap().last().point.copies()[0].coords();
            (c[0] - 2f64.exp()).abs()
        };
        assert!(err(1e-9) < err(1e-6));
    }

    #[test]
    fn fixed_step_order_is_five() {
        let init = single([1.0, 1.0, 0.0, 1.0, 0.0]);
        let err = |n| {
            let c = integrate_fixed(&init, &CoeffSet::single(3), 0.0, 1.0, n).unwrap().last().point.copies()[0].coords();
            (c[0] - 2f64.exp()).abs()
        };
        let ratio = err(10) / err(20);
        assert!((ratio - 32.0).abs() <= 0.3 * 32.0, "ratio {ratio}");
    }

    #[test]
    fn backward_integration_returns_home() {
        // 2x + y² < 0 keeps the Riccati part of the flow bounded.
        let init = single([-1.0, 1.1, 0.0, 0.4, 0.1]);
        let coeffs = CoeffSet::from_strs(["0.2", "sin(t)", "cos(t)", "1", "t"]);
        let cfg = IntegratorConfig::window(0.0, 1.0).with_tolerances(1e-10, 1e-12);
        let fwd = integrate(&init, &coeffs, &cfg).unwrap();
        let back_cfg = IntegratorConfig::window(1.0, 0.0).with_tolerances(1e-10, 1e-12);
        let back = integrate(&fwd.last().point, &coeffs, &back_cfg).unwrap();
        assert_eq!(back.last().t, 0.0);
        let (a, b) = (init.flat(), back.last().point.flat());
        for k in 0..5 {
            assert!((a[k] - b[k]).abs() <= 10.0 * (1e-10 * a[k].abs() + 1e-12) + 1e-9);
        }
    }

    #[test]
    fn blow_up_is_reported_with_time_reached() {
        // With a1 = 1 alone, p = 2x + y² obeys p' = 2p², so p0 = 1 blows up at t = 1/2.
        let err = integrate(&single([0.0, 1.0, 0.0, 0.0, 0.0]), &CoeffSet::single(1), &IntegratorConfig::default())
            .unwrap_err();
        match err {
            Error::Integration { kind: IntegrationFailure::StepUnderflow { .. }, t_reached } => {
                assert!((t_reached - 0.5).abs() < 1e-3, "{t_reached}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn chart_exit_is_reported() {
        // dy/dt = (a3 + 4 a1 x) y with a3 = -40 drives y below the floor.
        let cfg = IntegratorConfig { chart_floor: 1e-3, ..IntegratorConfig::default() };
        let err = integrate(&single([0.0, 1.0, 0.0, 0.0, 0.0]), &CoeffSet::from_strs(["0", "0", "-40", "0", "0"]), &cfg)
            .unwrap_err();
        assert!(matches!(err, Error::Integration { kind: IntegrationFailure::ChartExit { copy: 1, .. }, .. }));
    }

    #[test]
    fn coefficient_errors_surface() {
        let err = integrate(
            &single([0.0, 1.0, 0.0, 0.0, 0.0]),
            &CoeffSet::from_strs(["0", "log(0.5-t)", "0", "0", "0"]),
            &IntegratorConfig { h_init: 0.1, h_max: 0.1, ..IntegratorConfig::default() },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Integration { kind: IntegrationFailure::Coefficients(_), .. }));
    }

    #[test]
    fn config_validation() {
        let ok = IntegratorConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            IntegratorConfig { rel_tol: 0.0, ..ok },
            IntegratorConfig { abs_tol: -1.0, ..ok },
            IntegratorConfig { h_min: 1.0, ..ok },
            IntegratorConfig { h_init: 1.0, ..ok },
            IntegratorConfig { t1: 0.0, ..ok },
            IntegratorConfig { chart_floor: 0.0, ..ok },
            IntegratorConfig { t1: f64::NAN, ..ok },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn monitor_flags_corruption() {
        let p = ProlongedPoint::pair(
            Point5::new(-1.2, 1.0, 0.1, 0.5, -0.2).unwrap(),
            Point5::new(-1.5, 0.9, 0.0, 0.1, 0.3).unwrap(),
        )
        .unwrap();
        let mut traj = integrate(&p, &CoeffSet::standard(), &IntegratorConfig::default()).unwrap();
        let clean = monitor(&traj, &ConservedQuantityId::ALL).unwrap();
        assert!(clean.max_drift() < 1e-6, "{clean:?}");
        let mid = traj.samples.len() / 2;
        let mut c = traj.samples[mid].point.flat();
        c[0] += 1e-3;
        traj.samples[mid].point = ProlongedPoint::from_flat(&c).unwrap();
        let dirty = monitor(&traj, &ConservedQuantityId::ALL).unwrap();
        assert!(dirty.max_drift() >= 1e-4, "{dirty:?}");
        traj.attach_drift(&dirty);
        assert_eq!(traj.drift.len(), 5);
    }

    #[test]
    fn monitor_needs_two_copies() {
        let traj = integrate(&single([0.0, 1.0, 0.0, 0.0, 0.0]), &CoeffSet::single(2), &IntegratorConfig::default()).unwrap();
        assert!(monitor(&traj, &[ConservedQuantityId::C1E1]).is_err());
    }

    #[test]
    fn csv_layout_round_trips() {
        let p = ProlongedPoint::pair(
            Point5::new(0.1, 1.0, 0.0, 0.0, 0.0).unwrap(),
            Point5::new(0.3, 2.0, 0.0, 0.0, 0.0).unwrap(),
        )
        .unwrap();
        let traj = integrate(&p, &CoeffSet::from_strs(["0", "1", "0.3", "0", "0"]), &IntegratorConfig::window(0.0, 0.5)).unwrap();
        let csv = traj.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,x1,y1,z1,u1,v1,x2,y2,z2,u2,v2");
        for (line, s) in lines.zip(&traj.samples) {
            let vals: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
            assert_eq!(vals[0].to_bits(), s.t.to_bits());
            for (a, b) in vals[1..].iter().zip(s.point.flat()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
        let json = traj.to_json_records();
        assert_eq!(json.as_array().unwrap().len(), traj.samples.len());
    }
}
