//! `superpose`: recover copy 1 from copy 2 and the constants fixed at `t0`.

use kslie_core::superposition::{reconstruct_along, triple_jacobian};
use kslie_core::{constants_from_pair, integrate, project, CoeffSet, IntegratorConfig, NewtonSettings, Point3, ProlongedPoint};
use serde::Serialize;

/// Error bound on the reconstruction when the config sets none.
pub const RECONSTRUCTION_TOLERANCE: f64 = 1e-6;

/// Below this smallest singular value of the constants Jacobian at `t0` a
/// second root of the constants map may sit close to the true one.
pub const NEAR_CRITICAL: f64 = 1e-5;

#[derive(Debug, Clone, Serialize)]
pub struct SampleReport {
    pub t: f64,
    pub error: Option<f64>,
    pub iterations: Option<usize>,
    pub condition: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuperpositionReport {
    pub check: &'static str,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub constants: [f64; 3],
    pub min_singular_value_t0: f64,
    pub max_condition: f64,
    pub newton_failures: usize,
    pub warnings: Vec<String>,
    pub samples: Vec<SampleReport>,
}

pub fn run(
    init: &ProlongedPoint,
    coeffs: &CoeffSet,
    cfg: &IntegratorConfig,
    newton: &NewtonSettings,
    tolerance: f64,
) -> Result<SuperpositionReport, String> {
    let mut warnings = Vec::new();
    let [a, b] = [project(&init.copies()[0]), project(&init.copies()[1])];
    if a.distance_inf(&b) == 0.0 {
        warnings.push("degenerate configuration: the two initial conditions coincide in (x, y, z)".to_string());
    }
    let svmin = triple_jacobian(&a, &b).map_err(|e| e.to_string())?.singular_values().min();
    if svmin < NEAR_CRITICAL {
        warnings.push(format!(
            "degenerate configuration: constants Jacobian has smallest singular value {svmin:e} at t0"
        ));
    }
    let k = constants_from_pair(&a, &b).map_err(|e| e.to_string())?;
    let traj = integrate(init, coeffs, cfg).map_err(|e| e.to_string())?;
    let truth: Vec<Point3> = traj.samples.iter().map(|s| project(&s.point.copies()[0])).collect();
    let particular: Vec<(f64, Point3)> =
        traj.samples.iter().map(|s| (s.t, project(&s.point.copies()[1]))).collect();

    let mut samples = Vec::with_capacity(truth.len());
    let (mut worst, mut max_condition, mut failures) = (0.0f64, 0.0f64, 0);
    for (rec, want) in reconstruct_along(&particular, &k, &a, newton).into_iter().zip(&truth) {
        samples.push(match rec.outcome {
            Ok(r) => {
                let error = r.point.distance_inf(want);
                worst = worst.max(error);
                max_condition = max_condition.max(r.condition);
                SampleReport {
                    t: rec.t,
                    error: Some(error),
                    iterations: Some(r.iterations),
                    condition: Some(r.condition),
                    failure: None,
                }
            }
            Err(e) => {
                failures += 1;
                SampleReport { t: rec.t, error: None, iterations: None, condition: None, failure: Some(e) }
            }
        });
    }
    Ok(SuperpositionReport {
        check: "superposition",
        max_residual: worst,
        tolerance,
        pass: failures == 0 && worst <= tolerance,
        constants: k.as_array(),
        min_singular_value_t0: svmin,
        max_condition,
        newton_failures: failures,
        warnings,
        samples,
    })
}
