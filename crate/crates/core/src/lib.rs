//! Verification and simulation of the 4-symplectic diffusion Lie system on the
//! `y > 0` chart of ℝ⁵.

pub mod error;
pub mod expr;
pub mod geometry;
pub mod integrator;
pub mod jet;
pub mod ksymplectic;
pub mod liesystem;
pub mod prolongation;
pub mod sampling;
pub mod superposition;

pub use error::{Error, IntegrationFailure, Result};
pub use expr::{CoeffSet, EvalError, Expr, ParseError};
pub use geometry::{FormMatrix, OneForm5, Point5, Tangent5};
pub use integrator::{integrate, monitor, DriftReport, IntegratorConfig, Trajectory};
pub use jet::{Jet, Scalar};
pub use ksymplectic::{Casimir, Covector4, HamTable, TwoFormId};
pub use liesystem::{FieldId, StructureTensor, STRUCTURE_CONSTANTS};
pub use prolongation::{conserved, ConservedQuantityId, ProlongedPoint};
pub use sampling::ChartSampler;
pub use superposition::{constants_from_pair, project, reconstruct, ConstantsTriple, NewtonSettings, Point3};
