//! The vector fields `X_1, ..., X_5`, the t-dependent system
//! `X(t, ξ) = Σ a_α(t) X_α(ξ)`, brackets, structure constants and
//! minimal Lie algebras.
//!
//! Bracket orientation: `[A, B] f = A(B f) − B(A f)`, which in coordinates is
//! `J_B · A − J_A · B`.

use std::fmt;

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{CoeffSet, EvalError};
use crate::geometry::{numerical_rank, Point5, Tangent5};
use crate::jet::{Jet, Jet1, Scalar};

/// Index `α ∈ {1, …, 5}` of a generator `X_α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct FieldId(u8);

impl FieldId {
    pub fn new(alpha: usize) -> Result<Self> {
        if (1..=5).contains(&alpha) {
            Ok(Self(alpha as u8))
        } else {
            Err(Error::InvalidArgument(format!("field index {alpha} not in 1..=5")))
        }
    }

    /// 1-based index.
    pub fn get(self) -> usize {
        usize::from(self.0)
    }

    pub fn index(self) -> usize {
        self.get() - 1
    }

    pub fn all() -> impl Iterator<Item = FieldId> {
        (1..=5u8).map(FieldId)
    }
}

impl fmt::Display for FieldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "X{}", self.0)
    }
}

/// Components of `X_α` at coordinates `c = (x, y, z, u, v)`.
pub fn field<S: Scalar>(alpha: FieldId, c: &[S; 5]) -> [S; 5] {
    let [x, y, _z, u, v] = *c;
    let zero = S::zero();
    match alpha.get() {
        1 => [
            x * x * 4.0 + y.powi(4),
            x * y * 4.0,
            y * y,
            x * u * 4.0 + y.powi(3) * v * 2.0,
            u * y * 2.0,
        ],
        2 => [S::cst(-1.0), zero, zero, zero, zero],
        3 => [x * 2.0, y, zero, u, zero],
        4 => [zero, zero, zero, S::one(), zero],
        5 => [zero, zero, zero, x * -2.0, -y],
        _ => unreachable!("FieldId is always in 1..=5"),
    }
}

pub fn eval_field(alpha: FieldId, p: &Point5) -> Tangent5 {
    Tangent5(field(alpha, &p.coords()))
}

/// `Σ_α a_α X_α` for already-evaluated coefficients.
pub fn combine<S: Scalar>(a: &[f64; 5], c: &[S; 5]) -> [S; 5] {
    let mut out = [S::zero(); 5];
    for alpha in FieldId::all() {
        let w = a[alpha.index()];
        if w == 0.0 {
            continue;
        }
        for (o, f) in out.iter_mut().zip(field(alpha, c)) {
            *o += f * w;
        }
    }
    out
}

/// `X(t, p) = Σ a_α(t) X_α(p)`.
pub fn eval_system(t: f64, p: &Point5, coeffs: &CoeffSet) -> Result<Tangent5, EvalError> {
    let a = coeffs.eval(t)?;
    Ok(Tangent5(combine(&a, &p.coords())))
}

/// Jacobian `∂X_α^i/∂ξ^k` at `p`, rows indexed by component `i`.
pub fn field_jacobian(alpha: FieldId, p: &Point5) -> [[f64; 5]; 5] {
    field::<Jet1>(alpha, &p.seeded()).map(|j| j.grad)
}

fn mat_vec(m: &[[f64; 5]; 5], v: &[f64; 5]) -> [f64; 5] {
    m.map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
}

/// `[X_A, X_B](p)` from exact Jacobians.
pub fn lie_bracket(a: FieldId, b: FieldId, p: &Point5) -> Tangent5 {
    let (xa, xb) = (eval_field(a, p), eval_field(b, p));
    let jb_xa = mat_vec(&field_jacobian(b, p), &xa.0);
    let ja_xb = mat_vec(&field_jacobian(a, p), &xb.0);
    Tangent5(std::array::from_fn(|i| jb_xa[i] - ja_xb[i]))
}

/// Bracket of two fields given as coordinate maps on `R^N`, via jets.
pub fn bracket_of<const N: usize, F, G>(f: F, g: G, c: &[f64; N]) -> [f64; N]
where
    F: Fn(&[Jet<N>; N]) -> [Jet<N>; N],
    G: Fn(&[Jet<N>; N]) -> [Jet<N>; N],
{
    let seeded = Jet::<N>::seed(*c);
    let fj = f(&seeded);
    let gj = g(&seeded);
    std::array::from_fn(|i| {
        let mut s = 0.0;
        for k in 0..N {
            s += gj[i].grad[k] * fj[k].value - fj[i].grad[k] * gj[k].value;
        }
        s
    })
}

/// `c[α][β][γ]` with `[X_α, X_β] = Σ_γ c[α][β][γ] X_γ` (0-based indices).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructureTensor {
    pub c: [[[f64; 5]; 5]; 5],
}

/// Verified structure constants of `X_1, …, X_5`, frozen from
/// [`fit_structure_constants`] (see the `structure_fit_matches_frozen_table`
/// test). The algebra is `sl(2, R) ⋉ R^2`.
pub const STRUCTURE_CONSTANTS: StructureTensor = {
    const NONZERO: [(usize, usize, usize, f64); 7] = [
        (1, 2, 3, 4.0),
        (1, 3, 1, -2.0),
        (1, 4, 5, 2.0),
        (2, 3, 2, 2.0),
        (2, 5, 4, 2.0),
        (3, 4, 4, -1.0),
        (3, 5, 5, 1.0),
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

impl StructureTensor {
    pub fn zero() -> Self {
        Self { c: [[[0.0; 5]; 5]; 5] }
    }

    /// `c^γ_{αβ}` with 1-based field ids.
    pub fn get(&self, a: FieldId, b: FieldId, g: FieldId) -> f64 {
        self.c[a.index()][b.index()][g.index()]
    }

    /// Bracket of coefficient vectors over the `X_α` basis.
    pub fn bracket(&self, v: &[f64; 5], w: &[f64; 5]) -> [f64; 5] {
        let mut out = [0.0; 5];
        for a in 0..5 {
            if v[a] == 0.0 {
                continue;
            }
            for b in 0..5 {
                if w[b] == 0.0 {
                    continue;
                }
                for (g, o) in out.iter_mut().enumerate() {
                    *o += v[a] * w[b] * self.c[a][b][g];
                }
            }
        }
        out
    }

    /// `max |c^γ_{αβ} + c^γ_{βα}|`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let mut m: f64 = 0.0;
        for a in 0..5 {
            for b in 0..5 {
                for g in 0..5 {
                    m = m.max((self.c[a][b][g] + self.c[b][a][g]).abs());
                }
            }
        }
        m
    }

    /// `max |Σ_δ (c^δ_{αβ} c^ε_{δγ} + c^δ_{βγ} c^ε_{δα} + c^δ_{γα} c^ε_{δβ})|`.
    pub fn jacobi_defect(&self) -> f64 {
        let c = &self.c;
        let mut m: f64 = 0.0;
        for a in 0..5 {
            for b in 0..5 {
                for g in 0..5 {
                    for e in 0..5 {
                        let mut s = 0.0;
                        for d in 0..5 {
                            s += c[a][b][d] * c[d][g][e] + c[b][g][d] * c[d][a][e] + c[g][a][d] * c[d][b][e];
                        }
                        m = m.max(s.abs());
                    }
                }
            }
        }
        m
    }

    /// `max |self − other|` entrywise.
    pub fn max_difference(&self, other: &StructureTensor) -> f64 {
        let mut m: f64 = 0.0;
        for a in 0..5 {
            for b in 0..5 {
                for g in 0..5 {
                    m = m.max((self.c[a][b][g] - other.c[a][b][g]).abs());
                }
            }
        }
        m
    }

    /// Killing form `K_ab = tr(ad_a ad_b)` restricted to the subalgebra
    /// spanned by `X_1, X_2, X_3`.
    pub fn sl2_killing_form(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|a, b| {
            let mut s = 0.0;
            for beta in 0..3 {
                for gamma in 0..3 {
                    s += self.c[a][beta][gamma] * self.c[b][gamma][beta];
                }
            }
            s
        })
    }

    /// Numbers of positive and negative eigenvalues of the `{1,2,3}` Killing
    /// form; zero eigenvalues (relative `1e-9`) are not counted.
    pub fn sl2_signature(&self) -> (usize, usize) {
        let k = self.sl2_killing_form();
        let eig = SymmetricEigen::new(k).eigenvalues;
        let scale = eig.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        let pos = eig.iter().filter(|e| **e > 1e-9 * scale).count();
        let neg = eig.iter().filter(|e| **e < -1e-9 * scale).count();
        (pos, neg)
    }

    /// Largest defect of `[X_a, X_b] ∈ span{X_1, X_2, X_3}` for `a, b ≤ 3`.
    pub fn sl2_block_leak(&self) -> f64 {
        let mut m: f64 = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                for g in 3..5 {
                    m = m.max(self.c[a][b][g].abs());
                }
            }
        }
        m
    }
}

/// Fitted structure tensor with its closure residual.
#[derive(Debug, Clone, Serialize)]
pub struct StructureFit {
    pub tensor: StructureTensor,
    /// Max over pairs, samples and components of
    /// `|[X_α,X_β] − Σ c X_γ| / max(1, ‖[X_α,X_β]‖∞)`.
    pub max_residual: f64,
}

pub const MIN_FIT_SAMPLES: usize = 10;

/// Least-squares structure constants from sampled fields and brackets.
///
/// `fields(s, γ)` is `X_γ` at sample `s`; `bracket(s, α, β)` is
/// `[X_α, X_β]` there. Both are flat coordinate vectors of equal length.
pub fn fit_from_samples<F, B>(n_samples: usize, fields: F, bracket: B) -> Result<StructureFit>
where
    F: Fn(usize, usize) -> Vec<f64>,
    B: Fn(usize, usize, usize) -> Vec<f64>,
{
    if n_samples < MIN_FIT_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "structure-constant fit needs at least {MIN_FIT_SAMPLES} samples, got {n_samples}"
        )));
    }
    let basis: Vec<Vec<Vec<f64>>> = (0..n_samples).map(|s| (0..5).map(|g| fields(s, g)).collect()).collect();
    let dim = basis[0][0].len();
    let rows = n_samples * dim;
    let design = DMatrix::from_fn(rows, 5, |r, g| basis[r / dim][g][r % dim]);
    if numerical_rank(&design) < 5 {
        return Err(Error::RankDeficient("the sampled X_γ do not span five independent columns".into()));
    }
    let svd = design.clone().svd(true, true);
    let mut tensor = StructureTensor::zero();
    let mut max_residual: f64 = 0.0;
    for a in 0..5 {
        for b in a + 1..5 {
            let targets: Vec<Vec<f64>> = (0..n_samples).map(|s| bracket(s, a, b)).collect();
            let rhs = DVector::from_fn(rows, |r, _| targets[r / dim][r % dim]);
            let sol = svd
                .solve(&rhs, 1e-14)
                .map_err(|e| Error::RankDeficient(e.to_string()))?;
            let fitted = &design * &sol;
            for s in 0..n_samples {
                let scale = targets[s].iter().fold(1.0f64, |m, v| m.max(v.abs()));
                for k in 0..dim {
                    let r = (fitted[s * dim + k] - targets[s][k]).abs() / scale;
                    max_residual = max_residual.max(r);
                }
            }
            for g in 0..5 {
                tensor.c[a][b][g] = sol[g];
                tensor.c[b][a][g] = -sol[g];
            }
        }
    }
    Ok(StructureFit { tensor, max_residual })
}

/// Fits `c^γ_{αβ}` from brackets of `X_1, …, X_5` at the sample points.
pub fn fit_structure_constants(points: &[Point5]) -> Result<StructureFit> {
    fit_from_samples(
        points.len(),
        |s, g| eval_field(FieldId(g as u8 + 1), &points[s]).0.to_vec(),
        |s, a, b| lie_bracket(FieldId(a as u8 + 1), FieldId(b as u8 + 1), &points[s]).0.to_vec(),
    )
}

/// A subalgebra of the span of `X_1, …, X_5`, as an orthonormal basis of
/// coefficient vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subalgebra {
    pub basis: Vec<[f64; 5]>,
}

const SPAN_TOL: f64 = 1e-10;

impl Subalgebra {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    fn residual(&self, v: &[f64; 5]) -> [f64; 5] {
        let mut r = *v;
        for _ in 0..2 {
            for b in &self.basis {
                let d: f64 = r.iter().zip(b).map(|(x, y)| x * y).sum();
                for (ri, bi) in r.iter_mut().zip(b) {
                    *ri -= d * bi;
                }
            }
        }
        r
    }

    /// Adds `v` if it leaves the current span; returns whether it did.
    fn try_extend(&mut self, v: &[f64; 5]) -> bool {
        let n = norm(v);
        if n == 0.0 || self.basis.len() == 5 {
            return false;
        }
        let r = self.residual(v);
        let rn = norm(&r);
        if rn <= SPAN_TOL * n.max(1.0) {
            return false;
        }
        self.basis.push(r.map(|c| c / rn));
        true
    }

    pub fn contains(&self, v: &[f64; 5]) -> bool {
        norm(&self.residual(v)) <= SPAN_TOL * norm(v).max(1.0)
    }

    /// Largest out-of-span component of a pairwise bracket of basis vectors.
    pub fn closure_defect(&self, tensor: &StructureTensor) -> f64 {
        let mut m: f64 = 0.0;
        for v in &self.basis {
            for w in &self.basis {
                m = m.max(norm(&self.residual(&tensor.bracket(v, w))));
            }
        }
        m
    }
}

fn norm(v: &[f64; 5]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// `Lie({X_t})` over the sampled times: the span of the coefficient vectors
/// `a(t_j)`, closed under brackets until the dimension stabilises.
pub fn minimal_algebra(
    coeffs: &CoeffSet,
    t_samples: &[f64],
    tensor: &StructureTensor,
) -> Result<Subalgebra, EvalError> {
    let mut sub = Subalgebra { basis: Vec::new() };
    for &t in t_samples {
        sub.try_extend(&coeffs.eval(t)?);
    }
    loop {
        let before = sub.dim();
        let snapshot = sub.basis.clone();
        for v in &snapshot {
            for w in &snapshot {
                sub.try_extend(&tensor.bracket(v, w));
            }
        }
        if sub.dim() == before {
            return Ok(sub);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::ChartSampler;
    use approx::assert_abs_diff_eq;

    fn f(a: usize) -> FieldId {
        FieldId::new(a).unwrap()
    }

    fn p0() -> Point5 {
        Point5::new(1.0, 2.0, 0.0, 1.0, 1.0).unwrap()
    }

    /// Central-difference bracket, independent of the jet path.
    fn fd_bracket(a: FieldId, b: FieldId, p: &Point5) -> [f64; 5] {
        let h = 1e-5;
        let c = p.coords();
        let jac = |id: FieldId| {
            let mut j = [[0.0; 5]; 5];
            for k in 0..5 {
                let (mut cp, mut cm) = (c, c);
                cp[k] += h;
                cm[k] -= h;
                let (fp, fm) = (field(id, &cp), field(id, &cm));
                for i in 0..5 {
                    j[i][k] = (fp[i] - fm[i]) / (2.0 * h);
                }
            }
            j
        };
        let (xa, xb) = (field(a, &c), field(b, &c));
        let (ja, jb) = (jac(a), jac(b));
        std::array::from_fn(|i| {
            (0..5).map(|k| jb[i][k] * xa[k] - ja[i][k] * xb[k]).sum::<f64>()
        })
    }

    #[test]
    fn field_examples() {
        let p = p0();
        assert_eq!(eval_field(f(2), &p), Tangent5([-1.0, 0.0, 0.0, 0.0, 0.0]));
        assert_eq!(eval_field(f(1), &p), Tangent5([20.0, 8.0, 4.0, 20.0, 4.0]));
        assert_eq!(eval_field(f(5), &p), Tangent5([0.0, 0.0, 0.0, -2.0, -2.0]));
    }

    #[test]
    fn system_examples() {
        let p = p0();
        let one = |k| CoeffSet::single(k);
        assert_eq!(eval_system(0.3, &p, &one(2)).unwrap(), Tangent5([-1.0, 0.0, 0.0, 0.0, 0.0]));
        assert_eq!(eval_system(0.3, &p, &one(3)).unwrap(), Tangent5([2.0, 2.0, 0.0, 1.0, 0.0]));
        assert_eq!(eval_system(0.3, &p, &CoeffSet::zero()).unwrap(), Tangent5::ZERO);
    }

    #[test]
    fn system_matches_closed_form_right_hand_sides() {
        let coeffs = CoeffSet::from_strs(["cos(t)", "t^2", "1-t", "exp(t)", "sin(t)"]);
        let mut s = ChartSampler::new(3);
        for k in 0..50 {
            let t = 0.1 * k as f64;
            let p = s.point();
            let [a1, a2, a3, a4, a5] = coeffs.eval(t).unwrap();
            let Point5 { x, y, u, v, .. } = p;
            let rhs = [
                -a2 + 2.0 * a3 * x + a1 * (4.0 * x * x + y.powi(4)),
                (a3 + 4.0 * a1 * x) * y,
                a1 * y * y,
                (a3 + 4.0 * a1 * x) * u + a4 - 2.0 * x * a5 + 2.0 * a1 * y.powi(3) * v,
                -(a5 - 2.0 * a1 * u) * y,
            ];
            let got = eval_system(t, &p, &coeffs).unwrap();
            for i in 0..5 {
                assert_abs_diff_eq!(got.0[i], rhs[i], epsilon = 1e-12 * rhs[i].abs().max(1.0));
            }
        }
    }

    #[test]
    fn bracket_examples() {
        let p = p0();
        assert_eq!(lie_bracket(f(2), f(3), &p), Tangent5([-2.0, 0.0, 0.0, 0.0, 0.0]));
        let mut s = ChartSampler::new(5);
        for q in s.points(20) {
            assert_eq!(lie_bracket(f(4), f(5), &q), Tangent5::ZERO);
            for a in FieldId::all() {
                assert_eq!(lie_bracket(a, a, &q), Tangent5::ZERO);
            }
        }
    }

    #[test]
    fn jet_bracket_matches_finite_differences() {
        let mut s = ChartSampler::new(17);
        for p in s.points(100) {
            for a in FieldId::all() {
                for b in FieldId::all() {
                    let exact = lie_bracket(a, b, &p);
                    let fd = fd_bracket(a, b, &p);
                    let scale = exact.norm_inf().max(1.0);
                    for i in 0..5 {
                        assert!(
                            (exact.0[i] - fd[i]).abs() <= 1e-6 * scale,
                            "[{a},{b}] at {p:?}: {exact:?} vs {fd:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn bracket_of_agrees_with_lie_bracket() {
        let p = Point5::new(0.3, 1.2, 0.1, 0.5, -0.2).unwrap();
        for a in FieldId::all() {
            for b in FieldId::all() {
                let via = bracket_of(|c| field(a, c), |c| field(b, c), &p.coords());
                let direct = lie_bracket(a, b, &p).0;
                for k in 0..5 {
                    assert!((via[k] - direct[k]).abs() <= 1e-13 * direct[k].abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn structure_fit_matches_frozen_table() {
        let pts = ChartSampler::new(2024).points(12);
        let fit = fit_structure_constants(&pts).unwrap();
        assert!(fit.max_residual < 1e-9, "{}", fit.max_residual);
        assert!(fit.tensor.max_difference(&STRUCTURE_CONSTANTS) < 1e-10);
        assert_abs_diff_eq!(fit.tensor.get(f(1), f(2), f(3)), 4.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.tensor.get(f(1), f(4), f(5)), 2.0, epsilon = 1e-10);
        for g in FieldId::all() {
            assert_abs_diff_eq!(fit.tensor.get(f(4), f(5), g), 0.0, epsilon = 1e-10);
        }
        assert_eq!(fit.tensor.antisymmetry_defect(), 0.0);
        assert!(fit.tensor.jacobi_defect() < 1e-12);
    }

    #[test]
    fn structure_fit_rejects_small_or_degenerate_samples() {
        let pts = ChartSampler::new(1).points(5);
        assert!(matches!(fit_structure_constants(&pts), Err(Error::InvalidArgument(_))));
        // Duplicating a field leaves only four independent columns.
        let pts = ChartSampler::new(2).points(10);
        let fields = |s: usize, g: usize| eval_field(FieldId::new(g.min(3) + 1).unwrap(), &pts[s]).0.to_vec();
        let bracket = |_: usize, _: usize, _: usize| vec![0.0; 5];
        assert!(matches!(fit_from_samples(10, fields, bracket), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn frozen_tensor_is_a_lie_algebra_with_sl2_block() {
        let c = STRUCTURE_CONSTANTS;
        assert_eq!(c.antisymmetry_defect(), 0.0);
        assert_eq!(c.jacobi_defect(), 0.0);
        assert_eq!(c.sl2_block_leak(), 0.0);
        assert_eq!(c.sl2_signature(), (2, 1));
        assert!(c.sl2_killing_form().determinant().abs() > 1.0);
    }

    #[test]
    fn minimal_algebra_examples() {
        let ts: Vec<f64> = (0..10).map(|k| 0.1 * f64::from(k)).collect();
        let c = &STRUCTURE_CONSTANTS;
        let dim = |s: [&str; 5]| minimal_algebra(&CoeffSet::from_strs(s), &ts, c).unwrap().dim();
        assert_eq!(dim(["0", "1", "0", "0", "0"]), 1);
        assert_eq!(dim(["0", "1", "t", "0", "0"]), 2);
        assert_eq!(dim(["1", "sin(t)", "0", "0", "0"]), 3);
        assert_eq!(dim(["0", "0", "0", "0", "0"]), 0);
        assert_eq!(dim(["1", "sin(t)", "cos(t)", "1", "t"]), 5);
        assert_eq!(dim(["0", "0", "0", "1", "t"]), 2);
    }

    #[test]
    fn minimal_algebra_is_closed() {
        let ts: Vec<f64> = (0..7).map(|k| 0.3 * f64::from(k)).collect();
        for s in [["1", "0", "0", "1", "0"], ["0", "1", "0", "0", "t"], ["t", "0", "1", "0", "0"]] {
            let sub = minimal_algebra(&CoeffSet::from_strs(s), &ts, &STRUCTURE_CONSTANTS).unwrap();
            assert!(sub.dim() <= 5);
            assert!(sub.closure_defect(&STRUCTURE_CONSTANTS) < 1e-9);
        }
    }

    #[test]
    fn field_id_range() {
        assert!(FieldId::new(0).is_err());
        assert!(FieldId::new(6).is_err());
        assert_eq!(FieldId::all().count(), 5);
    }
}
