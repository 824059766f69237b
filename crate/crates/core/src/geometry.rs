//! Points, tangent vectors and forms on the `y > 0` chart of R^5.
//!
//! Coordinates are always ordered `(x, y, z, u, v)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{Jet1, Scalar};
use crate::ksymplectic::{omega, TwoFormId};

/// Relative singular-value threshold used by every rank computation.
pub const RANK_REL_TOL: f64 = 1e-9;

pub const COORD_NAMES: [&str; 5] = ["x", "y", "z", "u", "v"];

/// A point `(x, y, z, u, v)` of the chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point5 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub u: f64,
    pub v: f64,
}

impl Point5 {
    /// Builds a point, rejecting `y <= 0` and non-finite coordinates.
    pub fn new(x: f64, y: f64, z: f64, u: f64, v: f64) -> Result<Self> {
        Self::from_coords([x, y, z, u, v])
    }

    pub fn from_coords(c: [f64; 5]) -> Result<Self> {
        let p = Self::from_coords_unchecked(c);
        p.check_chart()?;
        Ok(p)
    }

    pub(crate) const fn from_coords_unchecked(c: [f64; 5]) -> Self {
        Self { x: c[0], y: c[1], z: c[2], u: c[3], v: c[4] }
    }

    pub fn coords(&self) -> [f64; 5] {
        [self.x, self.y, self.z, self.u, self.v]
    }

    pub fn check_chart(&self) -> Result<()> {
        if self.coords().iter().any(|c| !c.is_finite()) {
            return Err(Error::Chart(format!("non-finite coordinate in {self:?}")));
        }
        if self.y <= 0.0 {
            return Err(Error::Chart(format!("y = {} must be positive", self.y)));
        }
        Ok(())
    }

    /// Coordinates lifted to jets seeded in the five coordinate directions.
    pub fn seeded(&self) -> [Jet1; 5] {
        Jet1::seed(self.coords())
    }

    /// Coordinates as constants of an arbitrary scalar type.
    pub fn lift<S: Scalar>(&self) -> [S; 5] {
        self.coords().map(S::cst)
    }
}

/// Components along `∂x, ∂y, ∂z, ∂u, ∂v`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Tangent5(pub [f64; 5]);

/// Coefficients of `dx, dy, dz, du, dv`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OneForm5(pub [f64; 5]);

macro_rules! vec5_common {
    ($t:ident) => {
        impl $t {
            pub const ZERO: $t = $t([0.0; 5]);

            pub fn norm_inf(&self) -> f64 {
                self.0.iter().fold(0.0, |m, c| m.max(c.abs()))
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|c| c.is_finite())
            }
        }

        impl std::ops::Sub for $t {
            type Output = $t;
            fn sub(self, rhs: $t) -> $t {
                let mut out = self.0;
                for (a, b) in out.iter_mut().zip(rhs.0) {
                    *a -= b;
                }
                $t(out)
            }
        }

        impl std::ops::Add for $t {
            type Output = $t;
            fn add(self, rhs: $t) -> $t {
                let mut out = self.0;
                for (a, b) in out.iter_mut().zip(rhs.0) {
                    *a += b;
                }
                $t(out)
            }
        }

        impl std::ops::Mul<f64> for $t {
            type Output = $t;
            fn mul(self, rhs: f64) -> $t {
                $t(self.0.map(|c| c * rhs))
            }
        }
    };
}

vec5_common!(Tangent5);
vec5_common!(OneForm5);

impl OneForm5 {
    /// Pairing `⟨self, X⟩`.
    pub fn apply(&self, x: &Tangent5) -> f64 {
        self.0.iter().zip(x.0).map(|(a, b)| a * b).sum()
    }
}

/// Coefficient matrix of a two-form, `ω = Σ_{a<b} M_ab dξ^a ∧ dξ^b`.
///
/// Only the strict upper triangle is stored; the lower triangle is its exact
/// negation, so `M + Mᵀ = 0` holds bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FormMatrix {
    upper: [[f64; 5]; 5],
}

impl FormMatrix {
    pub const ZERO: FormMatrix = FormMatrix { upper: [[0.0; 5]; 5] };

    /// Builds from the strict upper triangle of `m`; the rest is ignored.
    pub fn from_upper(m: [[f64; 5]; 5]) -> Self {
        let mut upper = [[0.0; 5]; 5];
        for a in 0..5 {
            for b in a + 1..5 {
                upper[a][b] = m[a][b];
            }
        }
        Self { upper }
    }

    /// Adds `coeff · dξ^a ∧ dξ^b` (any order of `a`, `b`).
    pub fn add_wedge(&mut self, a: usize, b: usize, coeff: f64) {
        use std::cmp::Ordering::*;
        match a.cmp(&b) {
            Less => self.upper[a][b] += coeff,
            Greater => self.upper[b][a] -= coeff,
            Equal => {}
        }
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        use std::cmp::Ordering::*;
        match a.cmp(&b) {
            Less => self.upper[a][b],
            Greater => -self.upper[b][a],
            Equal => 0.0,
        }
    }

    pub fn to_array(&self) -> [[f64; 5]; 5] {
        let mut m = [[0.0; 5]; 5];
        for (a, row) in m.iter_mut().enumerate() {
            for (b, slot) in row.iter_mut().enumerate() {
                *slot = self.get(a, b);
            }
        }
        m
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(5, 5, |a, b| self.get(a, b))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { upper: self.upper.map(|row| row.map(|c| c * s)) }
    }

    pub fn max_abs(&self) -> f64 {
        self.upper.iter().flatten().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// `ω(X, Y) = Xᵀ M Y`.
    /// `ω(X, Y) = Σ_{a<b} M_ab (X^a Y^b − X^b Y^a)`; exactly zero for `X = Y`.
    pub fn eval(&self, x: &Tangent5, y: &Tangent5) -> f64 {
        let mut s = 0.0;
        for a in 0..5 {
            for b in a + 1..5 {
                s += self.upper[a][b] * (x.0[a] * y.0[b] - x.0[b] * y.0[a]);
            }
        }
        s
    }
}

impl std::ops::Add for FormMatrix {
    type Output = FormMatrix;
    fn add(mut self, rhs: FormMatrix) -> FormMatrix {
        for (ra, rb) in self.upper.iter_mut().zip(rhs.upper) {
            for (a, b) in ra.iter_mut().zip(rb) {
                *a += b;
            }
        }
        self
    }
}

/// `df` at `p`, from forward-mode derivatives of `f`.
pub fn differential<F>(f: F, p: &Point5) -> Result<OneForm5>
where
    F: Fn(&[Jet1; 5]) -> Jet1,
{
    let j = f(&p.seeded());
    if !j.value.is_finite() || !j.grad_is_finite() {
        return Err(Error::NonFinite(format!("differential at {p:?}")));
    }
    Ok(OneForm5(j.grad))
}

/// Interior product `ι_X ω`, with `(ι_X ω)_b = Σ_a X^a M_ab`.
pub fn contract(m: &FormMatrix, x: &Tangent5) -> OneForm5 {
    let mut out = [0.0; 5];
    for (b, slot) in out.iter_mut().enumerate() {
        *slot = (0..5).map(|a| x.0[a] * m.get(a, b)).sum();
    }
    OneForm5(out)
}

/// Exterior-derivative residual of a two-form field at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosednessResidual {
    /// `max |(dω)_abc|` over `a < b < c`.
    pub absolute: f64,
    /// `absolute / max(1, max |M_ab|)`.
    pub relative: f64,
}

/// Estimates `dω` at `p` by central differences (step `h`) of the matrix
/// entries of `form`.
pub fn closedness_residual<F>(form: F, p: &Point5, h: f64) -> Result<ClosednessResidual>
where
    F: Fn(&Point5) -> FormMatrix,
{
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("finite-difference step {h} must be positive")));
    }
    p.check_chart()?;
    if p.y - h <= 0.0 {
        return Err(Error::Chart(format!("stencil y - h = {} leaves the chart", p.y - h)));
    }
    let c = p.coords();
    // partial[k] = ∂M/∂ξ^k
    let partial: Vec<[[f64; 5]; 5]> = (0..5)
        .map(|k| {
            let mut plus = c;
            let mut minus = c;
            plus[k] += h;
            minus[k] -= h;
            let mp = form(&Point5::from_coords_unchecked(plus)).to_array();
            let mm = form(&Point5::from_coords_unchecked(minus)).to_array();
            let mut d = [[0.0; 5]; 5];
            for a in 0..5 {
                for b in 0..5 {
                    d[a][b] = (mp[a][b] - mm[a][b]) / (2.0 * h);
                }
            }
            d
        })
        .collect();
    let mut absolute: f64 = 0.0;
    for a in 0..5 {
        for b in a + 1..5 {
            for cc in b + 1..5 {
                let r = partial[a][b][cc] + partial[b][cc][a] + partial[cc][a][b];
                absolute = absolute.max(r.abs());
            }
        }
    }
    let scale = form(p).max_abs().max(1.0);
    Ok(ClosednessResidual { absolute, relative: absolute / scale })
}

/// Closedness check for one of the four structure forms.
pub fn verify_closed(form: TwoFormId, p: &Point5, h: f64) -> Result<ClosednessResidual> {
    closedness_residual(|q| omega(form, q), p, h)
}

/// Numerical rank: singular values above `RANK_REL_TOL · σ_max`.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > RANK_REL_TOL * smax).count()
}

/// `σ_max / σ_min` of a square matrix; infinite when singular.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Rank of the `(5k) × 5` matrix obtained by stacking the forms; equals
/// `5 − dim ⋂ ker ω_i`.
pub fn stacked_kernel_rank(forms: &[FormMatrix]) -> usize {
    let mut m = DMatrix::zeros(5 * forms.len(), 5);
    for (k, f) in forms.iter().enumerate() {
        for a in 0..5 {
            for b in 0..5 {
                m[(5 * k + a, b)] = f.get(a, b);
            }
        }
    }
    numerical_rank(&m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ksymplectic::HamTable;
    use crate::liesystem::{eval_field, FieldId};
    use crate::sampling::ChartSampler;
    use approx::assert_abs_diff_eq;

    fn p0() -> Point5 {
        Point5::new(1.0, 2.0, 0.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn differential_examples() {
        let p = p0();
        assert_eq!(differential(|c| c[1], &p).unwrap(), OneForm5([0.0, 1.0, 0.0, 0.0, 0.0]));
        let d = differential(|c| (c[1] * c[1] * 2.0).recip(), &p).unwrap();
        assert_abs_diff_eq!(d.0[1], -0.125, epsilon = 1e-15);
        assert_eq!(d.0[0], 0.0);
        assert_eq!(differential(|c| c[0] * c[4], &p).unwrap(), OneForm5([1.0, 0.0, 0.0, 0.0, 1.0]));
        // the table entry h^2_1 goes through the same path
        let via_table = differential(|c| HamTable::component(FieldId::new(2).unwrap(), TwoFormId::W1, c), &p).unwrap();
        assert_eq!(via_table, d);
    }

    #[test]
    fn differential_rejects_non_finite() {
        assert!(differential(|c| c[0].recip(), &Point5::new(0.0, 1.0, 0.0, 0.0, 0.0).unwrap()).is_err());
    }

    #[test]
    fn contraction_examples() {
        let p = p0();
        let w1 = omega(TwoFormId::W1, &p);
        assert_eq!(contract(&w1, &Tangent5::ZERO), OneForm5::ZERO);
        let x2 = eval_field(FieldId::new(2).unwrap(), &p);
        assert_eq!(contract(&w1, &x2), OneForm5([0.0, -0.125, 0.0, 0.0, 0.0]));
        for id in TwoFormId::ALL {
            let m = omega(id, &p);
            for a in FieldId::all() {
                let x = eval_field(a, &p);
                assert_abs_diff_eq!(contract(&m, &x).apply(&x), 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn form_matrix_is_antisymmetric() {
        let mut m = FormMatrix::ZERO;
        m.add_wedge(3, 1, 2.5);
        m.add_wedge(0, 4, -1.0);
        let a = m.to_array();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(a[i][j], -a[j][i]);
            }
        }
        assert_eq!(m.get(1, 3), -2.5);
    }

    #[test]
    fn closedness_examples() {
        let p = p0();
        for id in TwoFormId::ALL {
            let r = verify_closed(id, &p, 1e-4).unwrap();
            assert!(r.absolute < 1e-6, "{id:?}: {r:?}");
        }
        let constant = FormMatrix::from_upper([[0.0, 1.0, 2.0, 3.0, 4.0]; 5]);
        let r = closedness_residual(|_| constant, &p, 1e-3).unwrap();
        assert_eq!(r.absolute, 0.0);
    }

    #[test]
    fn closedness_detects_non_closed_form() {
        // d(x dy ∧ dz) = dx ∧ dy ∧ dz
        let r = closedness_residual(
            |q| {
                let mut m = FormMatrix::ZERO;
                m.add_wedge(1, 2, q.x);
                m
            },
            &p0(),
            1e-4,
        )
        .unwrap();
        assert!((r.absolute - 1.0).abs() < 1e-8);
    }

    #[test]
    fn closedness_rejects_stencil_outside_chart() {
        let p = Point5::new(0.0, 1e-5, 0.0, 0.0, 0.0).unwrap();
        assert!(matches!(verify_closed(TwoFormId::W1, &p, 1e-4), Err(Error::Chart(_))));
    }

    #[test]
    fn kernel_rank_examples() {
        let p = p0();
        let all: Vec<_> = TwoFormId::ALL.iter().map(|i| omega(*i, &p)).collect();
        assert_eq!(stacked_kernel_rank(&all), 5);
        assert_eq!(stacked_kernel_rank(&all[..1]), 2);
        assert_eq!(stacked_kernel_rank(&[FormMatrix::ZERO]), 0);
    }

    #[test]
    fn kernel_rank_invariant_under_scaling() {
        let mut s = ChartSampler::new(11);
        for _ in 0..50 {
            let p = s.point();
            let mut forms: Vec<_> = TwoFormId::ALL.iter().map(|i| omega(*i, &p)).collect();
            let base = stacked_kernel_rank(&forms);
            forms[1] = forms[1].scaled(-1e3);
            forms[2] = forms[2].scaled(1e-3);
            assert_eq!(stacked_kernel_rank(&forms), base);
        }
    }

    #[test]
    fn rejects_points_outside_chart() {
        assert!(Point5::new(0.0, 0.0, 0.0, 0.0, 0.0).is_err());
        assert!(Point5::new(0.0, -1.0, 0.0, 0.0, 0.0).is_err());
        assert!(Point5::new(f64::NAN, 1.0, 0.0, 0.0, 0.0).is_err());
    }
}
