//! Modal DG fields: per-cell Legendre coefficients of one scalar unknown.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::basis::{self, dot, QuadratureRule};
use crate::error::{DgError, Result};
use crate::mesh::{Mesh1D, MeshDescriptor};

/// Which one-sided trace to take when a point sits on an interior interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `w⁻`, the value from the cell on the left.
    Left,
    /// `w⁺`, the value from the cell on the right.
    Right,
}

/// Piecewise polynomial of degree `k` on a mesh, stored row-major (`N × (k+1)`).
#[derive(Debug, Clone, PartialEq)]
pub struct DGField {
    mesh: Arc<Mesh1D>,
    degree: usize,
    coeffs: Vec<f64>,
}

impl DGField {
    pub fn zeros(mesh: Arc<Mesh1D>, degree: usize) -> Self {
        let len = mesh.cells() * (degree + 1);
        Self {
            mesh,
            degree,
            coeffs: vec![0.0; len],
        }
    }

    pub fn constant(mesh: Arc<Mesh1D>, degree: usize, value: f64) -> Self {
        let mut f = Self::zeros(mesh, degree);
        for j in 0..f.cells() {
            f.cell_mut(j)[0] = value;
        }
        f
    }

    pub fn from_coeffs(mesh: Arc<Mesh1D>, degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != mesh.cells() * (degree + 1) {
            return Err(DgError::Shape(format!(
                "expected {} coefficients, got {}",
                mesh.cells() * (degree + 1),
                coeffs.len()
            )));
        }
        Ok(Self { mesh, degree, coeffs })
    }

    pub fn mesh(&self) -> &Arc<Mesh1D> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn cells(&self) -> usize {
        self.mesh.cells()
    }

    pub fn stride(&self) -> usize {
        self.degree + 1
    }

    pub fn cell(&self, j: usize) -> &[f64] {
        let s = self.stride();
        &self.coeffs[j * s..(j + 1) * s]
    }

    pub fn cell_mut(&mut self, j: usize) -> &mut [f64] {
        let s = self.stride();
        &mut self.coeffs[j * s..(j + 1) * s]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn same_layout(&self, other: &DGField) -> bool {
        self.degree == other.degree && *self.mesh == *other.mesh
    }

    /// Column 0 of the coefficient matrix.
    pub fn cell_averages(&self) -> Vec<f64> {
        self.coeffs.chunks(self.stride()).map(|c| c[0]).collect()
    }

    /// Exact integral of the piecewise polynomial.
    pub fn total_mass(&self) -> f64 {
        self.coeffs
            .chunks(self.stride())
            .zip(self.mesh.widths())
            .map(|(c, w)| c[0] * w)
            .sum()
    }

    /// Value of the polynomial of cell `j` at reference coordinate `xi`.
    pub fn eval_in_cell(&self, j: usize, xi: f64) -> f64 {
        dot(&basis::eval_unchecked(self.degree, xi), self.cell(j))
    }

    /// Value at a physical point; `side` picks the trace at interior interfaces.
    pub fn eval(&self, x: f64, side: Side) -> Result<f64> {
        let mut j = self.mesh.locate(x)?;
        let edges = self.mesh.edges();
        if side == Side::Left && j > 0 && x == edges[j] {
            j -= 1;
        }
        let xi = (2.0 * (x - self.mesh.center(j)) / self.mesh.width(j)).clamp(-1.0, 1.0);
        Ok(self.eval_in_cell(j, xi))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &DGField) {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len());
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += alpha * b;
        }
    }

    /// `alpha * self + beta * other`, written into `self`.
    pub fn combine(&mut self, alpha: f64, beta: f64, other: &DGField) {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len());
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a = alpha * *a + beta * b;
        }
    }

    pub fn max_abs_diff(&self, other: &DGField) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_record(&self) -> FieldRecord {
        FieldRecord {
            mesh: self.mesh.descriptor(),
            degree: self.degree,
            coefficients: self.coeffs.clone(),
        }
    }
}

/// Raw-coefficient dump: mesh descriptor, degree and row-major coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldRecord {
    pub mesh: MeshDescriptor,
    pub degree: usize,
    pub coefficients: Vec<f64>,
}

impl FieldRecord {
    pub fn into_field(self) -> Result<DGField> {
        let mesh = Mesh1D::uniform(self.mesh.a, self.mesh.b, self.mesh.cells)?;
        DGField::from_coeffs(Arc::new(mesh), self.degree, self.coefficients)
    }
}

/// L2 projection onto the DG space by a quadrature rule:
/// `c^l = (2l+1)/2 Σ_n ω_n f(x_j + h s_n / 2) L_l(s_n)`.
pub fn project(f: impl Fn(f64) -> f64, mesh: &Arc<Mesh1D>, degree: usize, rule: &QuadratureRule) -> Result<DGField> {
    let mut field = DGField::zeros(mesh.clone(), degree);
    let table: Vec<Vec<f64>> = rule
        .nodes
        .iter()
        .map(|&s| basis::legendre_eval(degree, s))
        .collect::<Result<_>>()?;
    for j in 0..mesh.cells() {
        let row = field.cell_mut(j);
        for (n, (&s, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
            let x = mesh.map(j, s);
            let value = f(x);
            if !value.is_finite() {
                return Err(DgError::NonFinite { x, value });
            }
            for (l, r) in row.iter_mut().enumerate() {
                *r += w * value * table[n][l];
            }
        }
        for (l, r) in row.iter_mut().enumerate() {
            *r *= (2 * l + 1) as f64 / 2.0;
        }
    }
    Ok(field)
}

/// `Σ_j (h_j/2) Σ_n ω_n |u_h − u_ref|` at the rule's nodes.
pub fn l1_error(field: &DGField, reference: impl Fn(f64) -> f64, rule: &QuadratureRule) -> f64 {
    let mesh = field.mesh();
    let table: Vec<Vec<f64>> = rule
        .nodes
        .iter()
        .map(|&s| basis::eval_unchecked(field.degree(), s))
        .collect();
    let mut total = 0.0;
    for j in 0..mesh.cells() {
        let c = field.cell(j);
        let cell_sum: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .zip(&table)
            .map(|((&s, &w), vals)| w * (dot(vals, c) - reference(mesh.map(j, s))).abs())
            .sum();
        total += 0.5 * mesh.width(j) * cell_sum;
    }
    total
}

/// Default rule for l1 errors (4-point Gauss).
pub fn l1_rule() -> QuadratureRule {
    basis::gauss_rule(4).expect("4-point rule is always valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::gauss_rule;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn mesh(n: usize) -> Arc<Mesh1D> {
        Arc::new(Mesh1D::uniform(0.0, 1.0, n).unwrap())
    }

    #[test]
    fn project_constant() {
        let f = project(|_| 3.0, &mesh(5), 3, &gauss_rule(4).unwrap()).unwrap();
        for j in 0..5 {
            assert_abs_diff_eq!(f.cell(j)[0], 3.0, epsilon = 1e-14);
            for l in 1..4 {
                assert_abs_diff_eq!(f.cell(j)[l], 0.0, epsilon = 1e-14);
            }
        }
        assert_eq!(f.cell_averages().len(), 5);
        assert_abs_diff_eq!(f.total_mass(), 3.0, epsilon = 1e-14);
    }

    #[test]
    fn project_linear() {
        let m = mesh(2);
        let f = project(|x| 4.0 - 2.0 * x, &m, 2, &gauss_rule(3).unwrap()).unwrap();
        let h = 0.5;
        for j in 0..2 {
            let xj = m.center(j);
            assert_abs_diff_eq!(f.cell(j)[0], 4.0 - 2.0 * xj, epsilon = 1e-14);
            assert_abs_diff_eq!(f.cell(j)[1], -h, epsilon = 1e-14);
            assert_abs_diff_eq!(f.cell(j)[2], 0.0, epsilon = 1e-14);
        }
        let avg = f.cell_averages();
        assert_abs_diff_eq!(avg[0], 3.5, epsilon = 1e-14);
        assert_abs_diff_eq!(avg[1], 2.5, epsilon = 1e-14);
    }

    #[test]
    fn project_matches_high_order_reference() {
        // oracle: 64-point per-cell quadrature of f·L_l, computed independently
        let m = mesh(10);
        let f = |x: f64| 1.0 + PI * (PI * x).sin();
        let k = 2;
        let field = project(f, &m, k, &gauss_rule(12).unwrap()).unwrap();
        let fine = gauss_rule(64).unwrap();
        for j in 0..10 {
            for l in 0..=k {
                let reference = (2 * l + 1) as f64 / 2.0
                    * fine.integrate(|s| f(m.map(j, s)) * crate::basis::eval_unchecked(k, s)[l]);
                assert_abs_diff_eq!(field.cell(j)[l], reference, epsilon = 1e-10);
            }
        }
        assert_abs_diff_eq!(field.total_mass(), 3.0, epsilon = 1e-10);
    }

    #[test]
    fn project_rejects_non_finite() {
        let err = project(|x| 1.0 / (x - 0.5), &mesh(1), 1, &gauss_rule(1).unwrap());
        assert!(matches!(err, Err(DgError::NonFinite { .. })));
    }

    #[test]
    fn eval_traces() {
        let m = mesh(2);
        let mut f = DGField::zeros(m, 1);
        f.cell_mut(0).copy_from_slice(&[1.0, 2.0]);
        f.cell_mut(1).copy_from_slice(&[5.0, 0.0]);
        assert_abs_diff_eq!(f.eval(0.5, Side::Left).unwrap(), 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.eval(0.5, Side::Right).unwrap(), 5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.eval(0.0, Side::Left).unwrap(), -1.0, epsilon = 1e-15);
        assert!(f.eval(1.2, Side::Left).is_err());
        assert_eq!(f.cell_averages()[0], 1.0);
    }

    #[test]
    fn quadratic_is_exact_at_centers() {
        let m = mesh(4);
        let f = project(|x| x * x, &m, 2, &gauss_rule(3).unwrap()).unwrap();
        for j in 0..4 {
            let xj = m.center(j);
            assert_abs_diff_eq!(f.eval(xj, Side::Right).unwrap(), xj * xj, epsilon = 1e-14);
        }
        // continuous representable function: interface jumps vanish
        for &x in &m.edges()[1..4] {
            let jump = f.eval(x, Side::Right).unwrap() - f.eval(x, Side::Left).unwrap();
            assert!(jump.abs() <= 1e-12);
        }
    }

    #[test]
    fn l1_error_examples() {
        let m = mesh(5);
        let rule = l1_rule();
        let f = project(|x| x.sin(), &m, 2, &gauss_rule(3).unwrap()).unwrap();
        let self_ref = |x: f64| f.eval(x, Side::Right).unwrap();
        // nodes are interior so the trace choice is irrelevant
        assert!(l1_error(&f, self_ref, &rule) < 1e-15);
        let one = DGField::constant(m, 0, 1.0);
        assert_abs_diff_eq!(l1_error(&one, |_| 0.0, &rule), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn record_round_trip() {
        let m = mesh(3);
        let f = project(|x| x.exp(), &m, 2, &gauss_rule(3).unwrap()).unwrap();
        let text = serde_json::to_string(&f.to_record()).unwrap();
        let back: FieldRecord = serde_json::from_str(&text).unwrap();
        assert_eq!(back.into_field().unwrap(), f);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn projection_reproduces_dg_functions(coeffs in prop::collection::vec(-5.0f64..5.0, 12)) {
                let m = mesh(4);
                let g = DGField::from_coeffs(m.clone(), 2, coeffs).unwrap();
                let rule = gauss_rule(3).unwrap();
                // sample g exactly inside each cell via its own polynomial
                let mut back = DGField::zeros(m.clone(), 2);
                for j in 0..4 {
                    let single = project(|x| {
                        let xi = 2.0 * (x - m.center(j)) / m.width(j);
                        g.eval_in_cell(j, xi)
                    }, &m, 2, &rule).unwrap();
                    back.cell_mut(j).copy_from_slice(single.cell(j));
                }
                prop_assert!(back.max_abs_diff(&g) <= 1e-12);
            }
        }
    }
}
