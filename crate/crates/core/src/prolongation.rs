//! Diagonal prolongation to `m` copies of the chart, and the five explicit
//! t-independent constants of motion of the two-copy system `X^[2]`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{numerical_rank, Point5, Tangent5};
use crate::jet::{Jet, Scalar};
use crate::ksymplectic::{h_theta, omega, Covector4, DerivativeResidual, HamTable, TwoFormId};
use crate::liesystem::{field, FieldId};

/// `(ξ_(1), …, ξ_(m))` with every copy in the chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProlongedPoint {
    copies: Vec<Point5>,
}

impl ProlongedPoint {
    pub fn new(copies: Vec<Point5>) -> Result<Self> {
        if copies.is_empty() {
            return Err(Error::InvalidArgument("a prolonged point needs at least one copy".into()));
        }
        for (k, c) in copies.iter().enumerate() {
            c.check_chart().map_err(|e| Error::Chart(format!("copy {}: {e}", k + 1)))?;
        }
        Ok(Self { copies })
    }

    pub fn pair(a: Point5, b: Point5) -> Result<Self> {
        Self::new(vec![a, b])
    }

    /// Splits a flat `5m` state vector into copies.
    pub fn from_flat(state: &[f64]) -> Result<Self> {
        if state.is_empty() || state.len() % 5 != 0 {
            return Err(Error::InvalidArgument(format!("state length {} is not a multiple of 5", state.len())));
        }
        let copies = state
            .chunks_exact(5)
            .map(|c| Point5::from_coords([c[0], c[1], c[2], c[3], c[4]]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(copies)
    }

    pub fn m(&self) -> usize {
        self.copies.len()
    }

    pub fn copies(&self) -> &[Point5] {
        &self.copies
    }

    pub fn flat(&self) -> Vec<f64> {
        self.copies.iter().flat_map(|p| p.coords()).collect()
    }

    /// The two copies as a flat 10-vector; fails unless `m = 2`.
    pub fn pair_coords(&self) -> Result<[f64; 10]> {
        if self.m() != 2 {
            return Err(Error::InvalidArgument(format!("expected two copies, got {}", self.m())));
        }
        let mut out = [0.0; 10];
        out.copy_from_slice(&self.flat());
        Ok(out)
    }
}

/// `X_α` evaluated copy-wise.
pub fn prolong_field(alpha: FieldId, p: &ProlongedPoint) -> Vec<Tangent5> {
    p.copies.iter().map(|c| crate::liesystem::eval_field(alpha, c)).collect()
}

/// Copy-wise `X_α` on a flat `5m` coordinate slice.
pub fn prolonged_field_flat<S: Scalar, const N: usize>(alpha: FieldId, c: &[S; N]) -> [S; N] {
    let mut out = [S::zero(); N];
    for k in 0..N / 5 {
        let block = [c[5 * k], c[5 * k + 1], c[5 * k + 2], c[5 * k + 3], c[5 * k + 4]];
        out[5 * k..5 * k + 5].copy_from_slice(&field(alpha, &block));
    }
    out
}

/// Block-diagonal `5m × 5m` matrix of `ω_i^[m]`.
pub fn prolong_omega(i: TwoFormId, p: &ProlongedPoint) -> DMatrix<f64> {
    let n = 5 * p.m();
    let mut m = DMatrix::zeros(n, n);
    for (k, c) in p.copies.iter().enumerate() {
        let block = omega(i, c);
        for a in 0..5 {
            for b in 0..5 {
                m[(5 * k + a, 5 * k + b)] = block.get(a, b);
            }
        }
    }
    m
}

/// `Σ_a h^j_i(ξ_(a))`.
pub fn prolong_hamiltonian(j: FieldId, i: TwoFormId, p: &ProlongedPoint) -> f64 {
    p.copies.iter().map(|c| HamTable::component(j, i, &c.coords())).sum()
}

/// `max |ι_{X^[m]_α} ω^[m]_i − d h^{α,[m]}_i| / max(1, ‖·‖∞)`.
///
/// The differential of the prolonged Hamiltonian is assembled block-wise from
/// per-copy jets; the contraction uses the full block matrix.
pub fn prolonged_pairing_residual(alpha: FieldId, i: TwoFormId, p: &ProlongedPoint) -> Result<f64> {
    let w = prolong_omega(i, p);
    let x: Vec<f64> = prolong_field(alpha, p).iter().flat_map(|t| t.0).collect();
    let n = x.len();
    let mut dh = Vec::with_capacity(n);
    for c in &p.copies {
        let j = HamTable::component(alpha, i, &c.seeded());
        if !j.grad_is_finite() {
            return Err(Error::NonFinite(format!("d h^{alpha}_{i}")));
        }
        dh.extend_from_slice(&j.grad);
    }
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for b in 0..n {
        let lhs: f64 = (0..n).map(|a| x[a] * w[(a, b)]).sum();
        worst = worst.max((lhs - dh[b]).abs());
        scale = scale.max(lhs.abs()).max(dh[b].abs());
    }
    Ok(worst / scale)
}

/// Rank of the four prolonged forms stacked vertically.
pub fn prolonged_kernel_rank(p: &ProlongedPoint) -> usize {
    let n = 5 * p.m();
    let mut stacked = DMatrix::zeros(4 * n, n);
    for (k, i) in TwoFormId::ALL.iter().enumerate() {
        stacked.view_mut((k * n, 0), (n, n)).copy_from(&prolong_omega(*i, p));
    }
    numerical_rank(&stacked)
}

/// `C_1^θ` built from the prolonged components `Σ_a h^j_θ(ξ_(a))`.
pub fn prolonged_casimir_c1<S: Scalar, const N: usize>(theta: &Covector4, c: &[S; N]) -> Result<S> {
    if !theta.in_w() {
        return Err(Error::InvalidArgument(format!("C1 needs θ ∈ ⟨e1, e3, e4⟩; got {theta}")));
    }
    let h = |j| prolonged_h_theta(theta, FieldId::new(j).expect("row"), c);
    let h3 = h(3);
    Ok(h(1) * h(2) + h3 * h3)
}

/// `C_2^θ` built from the prolonged components.
pub fn prolonged_casimir_c2<S: Scalar, const N: usize>(theta: &Covector4, c: &[S; N]) -> S {
    let h = |j| prolonged_h_theta(theta, FieldId::new(j).expect("row"), c);
    let (h1, h2, h3, h4, h5) = (h(1), h(2), h(3), h(4), h(5));
    h4 * h4 * h1 + h5 * (h4 * h3 * 2.0 - h5 * h2)
}

fn prolonged_h_theta<S: Scalar, const N: usize>(theta: &Covector4, j: FieldId, c: &[S; N]) -> S {
    let mut s = S::zero();
    for k in 0..N / 5 {
        let block = [c[5 * k], c[5 * k + 1], c[5 * k + 2], c[5 * k + 3], c[5 * k + 4]];
        s += h_theta(theta, j, &block);
    }
    s
}

/// The explicit constants of motion of `X^[2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConservedQuantityId {
    #[serde(rename = "C1_e1")]
    C1E1,
    #[serde(rename = "C_plus")]
    CPlus,
    #[serde(rename = "C_minus")]
    CMinus,
    #[serde(rename = "C1_e1e3")]
    C1E1E3,
    #[serde(rename = "C2_e2")]
    C2E2,
}

impl ConservedQuantityId {
    pub const ALL: [ConservedQuantityId; 5] = [
        ConservedQuantityId::C1E1,
        ConservedQuantityId::CPlus,
        ConservedQuantityId::CMinus,
        ConservedQuantityId::C1E1E3,
        ConservedQuantityId::C2E2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConservedQuantityId::C1E1 => "C1_e1",
            ConservedQuantityId::CPlus => "C_plus",
            ConservedQuantityId::CMinus => "C_minus",
            ConservedQuantityId::C1E1E3 => "C1_e1e3",
            ConservedQuantityId::C2E2 => "C2_e2",
        }
    }
}

impl fmt::Display for ConservedQuantityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConservedQuantityId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|q| q.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown conserved quantity `{s}`")))
    }
}

fn guard<S: Scalar>(what: &str, factor: S) -> Result<S> {
    let inv = factor.recip();
    if factor.value() == 0.0 || !inv.value().is_finite() {
        return Err(Error::Singular(format!("{what} vanishes")));
    }
    Ok(inv)
}

/// Closed forms on `(x1, y1, z1, u1, v1, x2, y2, z2, u2, v2)`.
pub fn conserved_s<S: Scalar>(id: ConservedQuantityId, c: &[S; 10]) -> Result<S> {
    let [x1, y1, z1, u1, v1, x2, y2, z2, u2, v2] = *c;
    let (y1s, y2s) = (y1 * y1, y2 * y2);
    let dx = x1 - x2;
    let value = match id {
        ConservedQuantityId::C1E1 => {
            let s = y1s + y2s;
            (dx * dx * -4.0 + s * s) / (y1s * y2s * 4.0)
        }
        ConservedQuantityId::CPlus | ConservedQuantityId::CMinus => {
            let sign = if id == ConservedQuantityId::CPlus { 1.0 } else { -1.0 };
            let b = dx * 2.0 - (y1s - y2s) * sign;
            ((z1 + z2) * (4.0 * sign)).exp() * b * b / (y1s * y2s * -16.0)
        }
        ConservedQuantityId::C1E1E3 => {
            let (e1, e2) = ((z1 * 4.0).exp(), (z2 * 4.0).exp());
            let num = (e1 + 2.0) * (dx * 2.0 + y2s) + (-e1 + 2.0) * y1s;
            let inner = (e2 + 2.0) * (dx * 2.0 - y1s) + (e2 - 2.0) * y2s;
            let inv = guard("C1_e1e3 inner factor (e^{4z2}+2)(2(x1-x2)-y1^2)+(e^{4z2}-2)y2^2", inner)?;
            num / (y1s * y2s * -16.0 * inv)
        }
        ConservedQuantityId::C2E2 => {
            // The factor [2(x1-x2) - y1^2 + y2^2]^{-1} sits in the denominator,
            // so it is applied as a multiplication; the quantity is 0 where it
            // would be infinite (e.g. at coincidence).
            let d = dx * 2.0 - y1s + y2s;
            let denom = ((z1 + z2) * -2.0).exp() * y1s * y2s;
            let first = (z2 * 2.0).exp() * (-(y1 * (u1 - u2 + v2 * y2)) + v1 * (dx * 2.0 + y2s));
            let second = (z1 * 2.0).exp() * (v2 * (dx * 2.0 - y1s) + (-u1 + u2 + v1 * y1) * y2);
            first * d / denom + second * d / denom
        }
    };
    if !value.value().is_finite() {
        return Err(Error::Singular(format!("{id} is not finite at this configuration")));
    }
    Ok(value)
}

/// Value of a conserved quantity at a two-copy point.
pub fn conserved(id: ConservedQuantityId, p: &ProlongedPoint) -> Result<f64> {
    conserved_s(id, &p.pair_coords()?)
}

/// `X^[2]_α Q` at `p`, with the magnitude of its summands as scale.
pub fn prolonged_derivative(id: ConservedQuantityId, alpha: FieldId, p: &ProlongedPoint) -> Result<DerivativeResidual> {
    let c = p.pair_coords()?;
    let q = conserved_s(id, &Jet::<10>::seed(c))?;
    let x = prolonged_field_flat(alpha, &c);
    let mut value = 0.0;
    let mut scale = 0.0;
    for k in 0..10 {
        let term = x[k] * q.grad[k];
        value += term;
        scale += term.abs();
    }
    Ok(DerivativeResidual { value, scale: f64::max(scale, 1.0) })
}

/// The four constants used for the independence test, in order.
pub const INDEPENDENCE_SET: [ConservedQuantityId; 4] = [
    ConservedQuantityId::C1E1,
    ConservedQuantityId::CPlus,
    ConservedQuantityId::C1E1E3,
    ConservedQuantityId::C2E2,
];

/// `∂(C1_e1, C_plus, C1_e1e3, C2_e2) / ∂(x1, y1, z1, u1, v1)`.
pub fn independence_jacobian(p: &ProlongedPoint) -> Result<DMatrix<f64>> {
    let c = p.pair_coords()?;
    let mut seeded = [Jet::<5>::constant(0.0); 10];
    for (k, s) in seeded.iter_mut().enumerate() {
        *s = if k < 5 { Jet::variable(c[k], k) } else { Jet::constant(c[k]) };
    }
    let mut jac = DMatrix::zeros(4, 5);
    for (r, id) in INDEPENDENCE_SET.iter().enumerate() {
        let q = conserved_s(*id, &seeded)?;
        if !q.grad_is_finite() {
            return Err(Error::Singular(format!("gradient of {id}")));
        }
        for k in 0..5 {
            jac[(r, k)] = q.grad[k];
        }
    }
    Ok(jac)
}

pub fn independence_rank(p: &ProlongedPoint) -> Result<usize> {
    Ok(numerical_rank(&independence_jacobian(p)?))
}
