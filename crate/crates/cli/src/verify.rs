//! `verify`: the structural identity checks at seeded chart points.

use kslie_core::geometry::{stacked_kernel_rank, verify_closed};
use kslie_core::ksymplectic::{anti_homomorphism_defect, casimir_bracket, omega, verify_commutation_table, verify_hamiltonian_pair};
use kslie_core::liesystem::fit_structure_constants;
use kslie_core::{Casimir, ChartSampler, Covector4, FieldId, Point5, TwoFormId};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Central-difference step for the closedness check.
const CLOSEDNESS_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckId {
    Closedness,
    KernelRank,
    HamiltonianPairing,
    CommutationTable,
    CasimirBrackets,
    StructureFit,
    AntiHomomorphism,
}

impl CheckId {
    pub const ALL: [CheckId; 7] = [
        CheckId::Closedness,
        CheckId::KernelRank,
        CheckId::HamiltonianPairing,
        CheckId::CommutationTable,
        CheckId::CasimirBrackets,
        CheckId::StructureFit,
        CheckId::AntiHomomorphism,
    ];

    /// Default tolerance on the check's residual.
    pub fn tolerance(self) -> f64 {
        match self {
            // O(h²) truncation of the difference quotients.
            CheckId::Closedness => 1e-6,
            CheckId::KernelRank => 0.0,
            _ => 1e-9,
        }
    }

    /// Whether a config-wide tolerance applies. The rank deficit is an integer.
    fn overridable(self) -> bool {
        self != CheckId::KernelRank
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: CheckId,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub seed: u64,
}

pub fn run(checks: &[CheckId], seed: u64, samples: usize, tolerance: Option<f64>) -> Result<Vec<CheckReport>, String> {
    let points = ChartSampler::new(seed).points(samples);
    checks
        .par_iter()
        .map(|&check| {
            let max_residual = residual(check, &points).map_err(|e| format!("{check:?}: {e}"))?;
            let tolerance = match tolerance {
                Some(t) if check.overridable() => t,
                _ => check.tolerance(),
            };
            Ok(CheckReport { check, max_residual, tolerance, pass: max_residual <= tolerance, seed })
        })
        .collect()
}

fn residual(check: CheckId, points: &[Point5]) -> kslie_core::Result<f64> {
    let mut worst: f64 = 0.0;
    match check {
        CheckId::Closedness => {
            for p in points {
                for i in TwoFormId::ALL {
                    worst = worst.max(verify_closed(i, p, CLOSEDNESS_STEP)?.relative);
                }
            }
        }
        CheckId::KernelRank => {
            for p in points {
                let rank = stacked_kernel_rank(&TwoFormId::ALL.map(|i| omega(i, p)));
                worst = worst.max((5 - rank) as f64);
            }
        }
        CheckId::HamiltonianPairing => {
            for p in points {
                for a in FieldId::all() {
                    for i in TwoFormId::ALL {
                        worst = worst.max(verify_hamiltonian_pair(a, i, p)?.relative);
                    }
                }
            }
        }
        CheckId::CommutationTable => worst = verify_commutation_table(points)?.max_residual,
        CheckId::CasimirBrackets => {
            let e = Covector4::e;
            let cases = [
                (Casimir::C1, e(1)),
                (Casimir::C1, e(3)),
                (Casimir::C1, e(4)),
                (Casimir::C1, e(1) + e(3)),
                (Casimir::C2, e(2)),
                (Casimir::C2, e(1) + e(2)),
            ];
            for (kind, theta) in &cases {
                for p in points {
                    for a in FieldId::all() {
                        worst = worst.max(casimir_bracket(*kind, theta, a, p)?.relative());
                    }
                }
            }
        }
        CheckId::StructureFit => {
            let fit = fit_structure_constants(points)?;
            worst = fit.max_residual.max(fit.tensor.jacobi_defect());
        }
        CheckId::AntiHomomorphism => worst = anti_homomorphism_defect(&fit_structure_constants(points)?.tensor),
    }
    Ok(worst)
}
