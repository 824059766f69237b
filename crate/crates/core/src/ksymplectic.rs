//! The 4-symplectic structure `(ω_1, ω_2, ω_+, ω_-)`, the Ω-Hamiltonian
//! functions `h^α = Σ_i h^α_i ⊗ e^i` of `X_α`, Poisson brackets and Casimirs.
//!
//! Conventions: `ι_{X_f} ω = df` and `{f, g} := ω(X_f, X_g)`. With these,
//! `ω_1(X_1, X_2) = 4x/y² = −4 h^3_1`, matching `{h^1, h^2}_Ω = −4 h^3`.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{CoeffSet, EvalError};
use crate::geometry::{contract, differential, FormMatrix, OneForm5, Point5};
use crate::jet::{Jet1, Scalar};
use crate::liesystem::{eval_field, field, minimal_algebra, FieldId, StructureTensor, STRUCTURE_CONSTANTS};

/// One of the four structure forms; `W3 = ω_+`, `W4 = ω_-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum TwoFormId {
    W1,
    W2,
    WPlus,
    WMinus,
}

impl TwoFormId {
    pub const ALL: [TwoFormId; 4] = [TwoFormId::W1, TwoFormId::W2, TwoFormId::WPlus, TwoFormId::WMinus];

    pub fn new(i: usize) -> Result<Self> {
        match i {
            1..=4 => Ok(Self::ALL[i - 1]),
            _ => Err(Error::InvalidArgument(format!("form index {i} not in 1..=4"))),
        }
    }

    /// 1-based index.
    pub fn get(self) -> usize {
        self.index() + 1
    }

    pub fn index(self) -> usize {
        match self {
            TwoFormId::W1 => 0,
            TwoFormId::W2 => 1,
            TwoFormId::WPlus => 2,
            TwoFormId::WMinus => 3,
        }
    }
}

impl fmt::Display for TwoFormId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TwoFormId::W1 => "ω1",
            TwoFormId::W2 => "ω2",
            TwoFormId::WPlus => "ω+",
            TwoFormId::WMinus => "ω-",
        })
    }
}

const X: usize = 0;
const Y: usize = 1;
const Z: usize = 2;
const U: usize = 3;
const V: usize = 4;

/// Coefficient matrix of `ω_i` at `p`.
pub fn omega(i: TwoFormId, p: &Point5) -> FormMatrix {
    let Point5 { y, z, v, .. } = *p;
    let mut m = FormMatrix::ZERO;
    match i {
        TwoFormId::W1 => m.add_wedge(X, Y, y.powi(-3)),
        TwoFormId::WPlus | TwoFormId::WMinus => {
            let sign = if i == TwoFormId::WPlus { 1.0 } else { -1.0 };
            let e = (sign * 4.0 * z).exp();
            m.add_wedge(X, Y, e / (2.0 * y.powi(3)));
            m.add_wedge(X, Z, -sign * e / (y * y));
            m.add_wedge(Y, Z, e / y);
        }
        TwoFormId::W2 => {
            let s = 2.0 * (2.0 * z).exp() / (y * y);
            // dz ∧ (vy dy − 2v dx + y du − y² dv)
            m.add_wedge(Z, Y, s * v * y);
            m.add_wedge(Z, X, -2.0 * s * v);
            m.add_wedge(Z, U, s * y);
            m.add_wedge(Z, V, -s * y * y);
            // ½ dv ∧ (y dy − 2 dx)
            m.add_wedge(V, Y, s * y / 2.0);
            m.add_wedge(V, X, -s);
            // (1/2y) dy ∧ (4v dx − y du)
            m.add_wedge(Y, X, 2.0 * s * v / y);
            m.add_wedge(Y, U, -s / 2.0);
        }
    }
    m
}

/// The 5 × 4 table of Ω-Hamiltonian components `h^j_i`.
#[derive(Debug, Clone, Copy, Default)]
pub struct HamTable;

impl HamTable {
    /// `h^j_i` at coordinates `c`.
    pub fn component<S: Scalar>(j: FieldId, i: TwoFormId, c: &[S; 5]) -> S {
        let [x, y, z, u, v] = *c;
        let zero = S::zero();
        let y2 = y * y;
        let e2 = (z * 2.0).exp();
        let ep = (z * 4.0).exp();
        let em = (z * -4.0).exp();
        use TwoFormId::*;
        match (j.get(), i) {
            (1, W1) => x * x * -2.0 / y2 + y2 * 0.5,
            (1, W2) => {
                e2 * 2.0 / y2
                    * (x * x * v * 4.0 + u * y2 * y - v * x * y2 * 2.0 - u * y * x * 2.0)
            }
            (1, WPlus) => ep * (x - x * x / y2 - y2 * 0.25),
            (1, WMinus) => em * (-x - x * x / y2 - y2 * 0.25),
            (2, W1) => (y2 * 2.0).recip(),
            (2, W2) => e2 * v * -2.0 / y2,
            (2, WPlus) => ep / (y2 * 4.0),
            (2, WMinus) => em / (y2 * 4.0),
            (3, W1) => -x / y2,
            (3, W2) => (v * x * 4.0 / y2 - u / y - v) * e2,
            (3, WPlus) => -(x * ep) / (y2 * 2.0) + ep * 0.25,
            (3, WMinus) => -(x * em) / (y2 * 2.0) - em * 0.25,
            (4, W2) => -e2 / y,
            (5, W2) => x * e2 * 2.0 / y - y * e2,
            (4 | 5, _) => zero,
            _ => unreachable!("FieldId is always in 1..=5"),
        }
    }

    /// Whether `h^j_i` vanishes identically (rows 4 and 5 off `ω_2`).
    pub fn is_structural_zero(j: FieldId, i: TwoFormId) -> bool {
        j.get() >= 4 && i != TwoFormId::W2
    }
}

pub fn hamiltonian(j: FieldId, i: TwoFormId, p: &Point5) -> f64 {
    HamTable::component(j, i, &p.coords())
}

/// Relative residual of a one-form identity `lhs = rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairingResidual {
    pub residual: OneForm5,
    /// `‖lhs − rhs‖∞ / max(1, ‖lhs‖∞, ‖rhs‖∞)`.
    pub relative: f64,
}

/// `ι_{X_α} ω_i − d h^α_i` at `p`.
pub fn verify_hamiltonian_pair(alpha: FieldId, i: TwoFormId, p: &Point5) -> Result<PairingResidual> {
    let lhs = contract(&omega(i, p), &eval_field(alpha, p));
    let rhs = differential(|c| HamTable::component(alpha, i, c), p)?;
    let residual = lhs - rhs;
    let scale = lhs.norm_inf().max(rhs.norm_inf()).max(1.0);
    Ok(PairingResidual { residual, relative: residual.norm_inf() / scale })
}

/// `θ = Σ θ_i e_i ∈ (R^4)*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct Covector4(pub [f64; 4]);

impl Covector4 {
    pub const ZERO: Covector4 = Covector4([0.0; 4]);

    /// Basis covector `e_i`, `i ∈ 1..=4`.
    pub fn e(i: usize) -> Self {
        let mut t = [0.0; 4];
        t[i - 1] = 1.0;
        Self(t)
    }

    /// `θ ∈ W = ⟨e_1, e_3, e_4⟩`.
    pub fn in_w(&self) -> bool {
        self.0[1] == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl std::ops::Add for Covector4 {
    type Output = Covector4;
    fn add(self, rhs: Covector4) -> Covector4 {
        Covector4(std::array::from_fn(|k| self.0[k] + rhs.0[k]))
    }
}

impl fmt::Display for Covector4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.0.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            if !first {
                f.write_str("+")?;
            }
            first = false;
            if *c != 1.0 {
                write!(f, "{c}")?;
            }
            write!(f, "e{}", k + 1)?;
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// `h^j_θ = Σ_i θ_i h^j_i`.
pub fn h_theta<S: Scalar>(theta: &Covector4, j: FieldId, c: &[S; 5]) -> S {
    let mut s = S::zero();
    for i in TwoFormId::ALL {
        let w = theta.0[i.index()];
        if w != 0.0 {
            s += HamTable::component(j, i, c) * w;
        }
    }
    s
}

pub fn pair_theta(theta: &Covector4, j: FieldId, p: &Point5) -> f64 {
    h_theta(theta, j, &p.coords())
}

/// `Ω_θ = Σ_i θ_i ω_i`.
pub fn omega_theta(theta: &Covector4, p: &Point5) -> FormMatrix {
    TwoFormId::ALL
        .iter()
        .fold(FormMatrix::ZERO, |acc, i| acc + omega(*i, p).scaled(theta.0[i.index()]))
}

/// `{h^α_i, h^β_i}_{ω_i} = ω_i(X_α, X_β)`.
pub fn poisson_bracket(alpha: FieldId, beta: FieldId, i: TwoFormId, p: &Point5) -> f64 {
    omega(i, p).eval(&eval_field(alpha, p), &eval_field(beta, p))
}

/// Components of `{h^α, h^β}_Ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaBracketValue(pub [f64; 4]);

pub fn omega_bracket(alpha: FieldId, beta: FieldId, p: &Point5) -> OmegaBracketValue {
    OmegaBracketValue(TwoFormId::ALL.map(|i| poisson_bracket(alpha, beta, i, p)))
}

/// `k^γ_{αβ}` with `{h^α, h^β}_Ω = Σ_γ k^γ_{αβ} h^γ`, as tabulated:
/// `{h1,h2} = −4h3`, `{h1,h3} = 2h1`, `{h1,h4} = −2h5`, `{h2,h3} = −2h2`,
/// `{h2,h5} = −2h4`, `{h3,h4} = h4`, `{h3,h5} = −h5`, all other pairs zero.
pub const HAMILTONIAN_BRACKETS: StructureTensor = {
    const NONZERO: [(usize, usize, usize, f64); 7] = [
        (1, 2, 3, -4.0),
        (1, 3, 1, 2.0),
        (1, 4, 5, -2.0),
        (2, 3, 2, -2.0),
        (2, 5, 4, -2.0),
        (3, 4, 4, 1.0),
        (3, 5, 5, -1.0),
    ];
    let mut c = [[[0.0; 5]; 5]; 5];
    let mut k = 0;
    while k < NONZERO.len() {
        let (a, b, g, v) = NONZERO[k];
        c[a - 1][b - 1][g - 1] = v;
        c[b - 1][a - 1][g - 1] = -v;
        k += 1;
    }
    StructureTensor { c }
};

/// `max |k^γ_{αβ} + c^γ_{αβ}|`: zero when `α ↦ h^α` is an anti-homomorphism.
pub fn anti_homomorphism_defect(fields: &StructureTensor) -> f64 {
    let mut m: f64 = 0.0;
    for a in 0..5 {
        for b in 0..5 {
            for g in 0..5 {
                m = m.max((HAMILTONIAN_BRACKETS.c[a][b][g] + fields.c[a][b][g]).abs());
            }
        }
    }
    m
}

#[derive(Debug, Clone, Serialize)]
pub struct PairResidual {
    pub alpha: usize,
    pub beta: usize,
    pub max_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CommutationReport {
    pub pairs: Vec<PairResidual>,
    pub max_residual: f64,
}

/// Checks `{h^α_i, h^β_i}_{ω_i} = Σ_γ k^γ_{αβ} h^γ_i` for all ten unordered
/// pairs and all four components, with residuals relative to
/// `max(1, |lhs|, |rhs|)`.
pub fn verify_commutation_table(points: &[Point5]) -> Result<CommutationReport> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("no sample points".into()));
    }
    let mut pairs = Vec::with_capacity(10);
    for a in FieldId::all() {
        for b in FieldId::all().filter(|b| *b > a) {
            let mut worst: f64 = 0.0;
            for p in points {
                let c = p.coords();
                for i in TwoFormId::ALL {
                    let lhs = poisson_bracket(a, b, i, p);
                    let rhs: f64 = FieldId::all()
                        .map(|g| HAMILTONIAN_BRACKETS.get(a, b, g) * HamTable::component(g, i, &c))
                        .sum();
                    let scale = lhs.abs().max(rhs.abs()).max(1.0);
                    worst = worst.max((lhs - rhs).abs() / scale);
                }
            }
            pairs.push(PairResidual { alpha: a.get(), beta: b.get(), max_residual: worst });
        }
    }
    let max_residual = pairs.iter().fold(0.0f64, |m, p| m.max(p.max_residual));
    Ok(CommutationReport { pairs, max_residual })
}

/// `C_1^θ = h^1_θ h^2_θ + (h^3_θ)²`, defined for `θ ∈ W`.
pub fn casimir_c1_s<S: Scalar>(theta: &Covector4, c: &[S; 5]) -> Result<S> {
    if !theta.in_w() {
        return Err(Error::InvalidArgument(format!(
            "C1 is a Casimir only for θ ∈ ⟨e1, e3, e4⟩; got θ = {theta}"
        )));
    }
    let h = |j| h_theta(theta, FieldId::new(j).expect("row index"), c);
    let h3 = h(3);
    Ok(h(1) * h(2) + h3 * h3)
}

pub fn casimir_c1(theta: &Covector4, p: &Point5) -> Result<f64> {
    casimir_c1_s(theta, &p.coords())
}

/// `C_2^θ = (h^4_θ)² h^1_θ + h^5_θ (2 h^4_θ h^3_θ − h^5_θ h^2_θ)`.
pub fn casimir_c2_s<S: Scalar>(theta: &Covector4, c: &[S; 5]) -> S {
    let h = |j| h_theta(theta, FieldId::new(j).expect("row index"), c);
    let (h1, h2, h3, h4, h5) = (h(1), h(2), h(3), h(4), h(5));
    h4 * h4 * h1 + h5 * (h4 * h3 * 2.0 - h5 * h2)
}

pub fn casimir_c2(theta: &Covector4, p: &Point5) -> f64 {
    casimir_c2_s(theta, &p.coords())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Casimir {
    C1,
    C2,
}

/// A directional derivative `X f` with the magnitude of its summands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeResidual {
    pub value: f64,
    /// `max(1, Σ_k |X^k ∂_k f|)`.
    pub scale: f64,
}

impl DerivativeResidual {
    pub fn relative(&self) -> f64 {
        self.value.abs() / self.scale
    }
}

/// `X f` at `p` for a field given by coordinate components.
pub fn lie_derivative<F>(f: F, x: &[f64; 5], p: &Point5) -> Result<DerivativeResidual>
where
    F: Fn(&[Jet1; 5]) -> Jet1,
{
    let df = differential(f, p)?;
    let mut value = 0.0;
    let mut scale = 0.0;
    for k in 0..5 {
        let term = x[k] * df.0[k];
        value += term;
        scale += term.abs();
    }
    Ok(DerivativeResidual { value, scale: scale.max(1.0) })
}

/// `{C^θ, h^α_θ}_θ`, evaluated as the derivative of the Casimir along the
/// Hamiltonian field `X_α` of `h^α_θ`.
///
/// The value is assembled by the chain rule through the `h^j_θ`, and the scale
/// is the sum of the absolute chain-rule monomials, so the relative residual
/// measures cancellation among the terms of the Casimir itself.
pub fn casimir_bracket(kind: Casimir, theta: &Covector4, alpha: FieldId, p: &Point5) -> Result<DerivativeResidual> {
    if kind == Casimir::C1 && !theta.in_w() {
        casimir_c1(theta, p)?;
    }
    let x = eval_field(alpha, p).0;
    let mut h = [0.0; 5];
    let mut xh = [0.0; 5];
    for j in FieldId::all() {
        let d = lie_derivative(|c| h_theta(theta, j, c), &x, p)?;
        h[j.index()] = pair_theta(theta, j, p);
        xh[j.index()] = d.value;
    }
    let [h1, h2, h3, h4, h5] = h;
    let [d1, d2, d3, d4, d5] = xh;
    // Each entry is one monomial of X(C) after the product rule.
    let terms: Vec<f64> = match kind {
        Casimir::C1 => vec![d1 * h2, h1 * d2, 2.0 * h3 * d3],
        Casimir::C2 => vec![
            2.0 * h4 * d4 * h1,
            h4 * h4 * d1,
            2.0 * d5 * h4 * h3,
            2.0 * h5 * d4 * h3,
            2.0 * h5 * h4 * d3,
            -2.0 * h5 * d5 * h2,
            -h5 * h5 * d2,
        ],
    };
    let value: f64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|t| t.abs()).sum();
    if !value.is_finite() {
        return Err(Error::NonFinite(format!("{{C, h^{alpha}}} at {p:?}")));
    }
    Ok(DerivativeResidual { value, scale: scale.max(1.0) })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantOfMotionReport {
    pub is_constant: bool,
    pub theta: Covector4,
    /// Dimension of the minimal Lie algebra generated by the coefficients.
    pub algebra_dim: usize,
    /// Largest `|X_b f| / scale` over basis elements `b` and sample points.
    pub max_residual: f64,
    pub tolerance: f64,
}

/// Tests `f` against every element of the minimal Lie algebra of `coeffs`.
///
/// For each basis element `b = Σ b_α X_α` of `Lie({X_t})`, the bracket
/// `{f, h^b_θ}_θ` is evaluated as `X_b f`; `f` is reported constant when all
/// of them vanish (relative `tol`) at every point.
#[allow(clippy::too_many_arguments)]
pub fn is_constant_of_motion<F>(
    f: F,
    coeffs: &CoeffSet,
    theta: &Covector4,
    t_samples: &[f64],
    points: &[Point5],
    tol: f64,
) -> Result<ConstantOfMotionReport, Error>
where
    F: Fn(&[Jet1; 5]) -> Jet1,
{
    let algebra = minimal_algebra(coeffs, t_samples, &STRUCTURE_CONSTANTS).map_err(|e: EvalError| Error::Eval(e))?;
    let mut max_residual: f64 = 0.0;
    for p in points {
        let c = p.coords();
        let fields: Vec<[f64; 5]> = FieldId::all().map(|a| field(a, &c)).collect();
        for b in &algebra.basis {
            let mut x = [0.0; 5];
            for (a, fa) in fields.iter().enumerate() {
                for k in 0..5 {
                    x[k] += b[a] * fa[k];
                }
            }
            max_residual = max_residual.max(lie_derivative(&f, &x, p)?.relative());
        }
    }
    Ok(ConstantOfMotionReport {
        is_constant: max_residual <= tol,
        theta: *theta,
        algebra_dim: algebra.dim(),
        max_residual,
        tolerance: tol,
    })
}
