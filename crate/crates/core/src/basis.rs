//! Legendre polynomials and Gauss–Legendre quadrature on the reference cell `[-1, 1]`.

use crate::error::{DgError, Result};

/// Largest polynomial degree accepted by the basis routines.
pub const MAX_DEGREE: usize = 32;
/// Largest Gauss rule accepted by [`gauss_rule`].
pub const MAX_QUADRATURE_POINTS: usize = 64;

const ENDPOINT_SLACK: f64 = 1e-14;

fn check_args(k: usize, xi: f64) -> Result<()> {
    if k > MAX_DEGREE {
        return Err(DgError::config(format!(
            "polynomial degree {k} exceeds the supported maximum {MAX_DEGREE}"
        )));
    }
    if !(xi.abs() <= 1.0 + ENDPOINT_SLACK) {
        return Err(DgError::config(format!("reference coordinate {xi} outside [-1, 1]")));
    }
    Ok(())
}

/// `(L_0(xi), ..., L_k(xi))` by the three-term recurrence.
pub fn legendre_eval(k: usize, xi: f64) -> Result<Vec<f64>> {
    check_args(k, xi)?;
    Ok(eval_unchecked(k, xi))
}

pub(crate) fn eval_unchecked(k: usize, xi: f64) -> Vec<f64> {
    let mut out = vec![0.0; k + 1];
    out[0] = 1.0;
    if k >= 1 {
        out[1] = xi;
    }
    for l in 1..k {
        let lf = l as f64;
        out[l + 1] = ((2.0 * lf + 1.0) * xi * out[l] - lf * out[l - 1]) / (lf + 1.0);
    }
    out
}

/// First (`order = 1`) or second (`order = 2`) derivatives of all basis polynomials.
///
/// Uses `L'_{l+1} = L'_{l-1} + (2l+1) L_l`, applied once per derivative order, which
/// stays exact at the endpoints.
pub fn legendre_deriv(k: usize, xi: f64, order: u32) -> Result<Vec<f64>> {
    check_args(k, xi)?;
    match order {
        1 | 2 => Ok(deriv_unchecked(k, xi, order)),
        _ => Err(DgError::config(format!(
            "unsupported derivative order {order} (expected 1 or 2)"
        ))),
    }
}

fn differentiate(lower: &[f64]) -> Vec<f64> {
    let k = lower.len() - 1;
    let mut out = vec![0.0; k + 1];
    for l in 0..k {
        let prev = if l >= 1 { out[l - 1] } else { 0.0 };
        out[l + 1] = prev + (2 * l + 1) as f64 * lower[l];
    }
    out
}

pub(crate) fn deriv_unchecked(k: usize, xi: f64, order: u32) -> Vec<f64> {
    let mut vals = eval_unchecked(k, xi);
    for _ in 0..order {
        vals = differentiate(&vals);
    }
    vals
}

/// Legendre basis of degree `k` with cached endpoint traces.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreBasis {
    order: usize,
    /// `L(-1)`, `L(1)`
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    /// `L_xi(-1)`, `L_xi(1)`
    pub d1_left: Vec<f64>,
    pub d1_right: Vec<f64>,
    /// `L_xixi(-1)`, `L_xixi(1)`
    pub d2_left: Vec<f64>,
    pub d2_right: Vec<f64>,
}

impl LegendreBasis {
    pub fn new(k: usize) -> Result<Self> {
        check_args(k, 0.0)?;
        Ok(Self {
            order: k,
            left: eval_unchecked(k, -1.0),
            right: eval_unchecked(k, 1.0),
            d1_left: deriv_unchecked(k, -1.0, 1),
            d1_right: deriv_unchecked(k, 1.0, 1),
            d2_left: deriv_unchecked(k, -1.0, 2),
            d2_right: deriv_unchecked(k, 1.0, 2),
        })
    }

    /// Polynomial degree `k`.
    pub fn degree(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.order + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `∫ L_l^2 dξ = 2 / (2l + 1)`.
    pub fn norm_sq(l: usize) -> f64 {
        2.0 / (2 * l + 1) as f64
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_{-1}^{1} f(ξ) dξ` by the rule.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&s, &w)| w * f(s)).sum()
    }
}

/// `Q`-point Gauss–Legendre rule, nodes in ascending order.
///
/// Newton iteration on `L_Q` from Chebyshev initial guesses.
pub fn gauss_rule(q: usize) -> Result<QuadratureRule> {
    if q == 0 || q > MAX_QUADRATURE_POINTS {
        return Err(DgError::config(format!(
            "quadrature point count {q} outside 1..={MAX_QUADRATURE_POINTS}"
        )));
    }
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let qf = q as f64;
    // L_Q and L'_Q at x
    let eval = |x: f64| {
        let (mut p0, mut p1) = (1.0, x);
        for l in 1..q {
            let lf = l as f64;
            let p2 = ((2.0 * lf + 1.0) * x * p1 - lf * p0) / (lf + 1.0);
            p0 = p1;
            p1 = p2;
        }
        let (pq, pqm1) = if q == 1 { (x, 1.0) } else { (p1, p0) };
        let dp = qf * (x * pq - pqm1) / (x * x - 1.0);
        (pq, dp)
    };
    for i in 0..q.div_ceil(2) {
        // roots of L_Q are symmetric; solve for the positive half
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (qf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = eval(x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-15 {
                break;
            }
        }
        let (_, dp) = eval(x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[q - 1 - i] = x;
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
    }
    Ok(QuadratureRule { nodes, weights })
}

/// Default volume rule size `Q2 = ceil((k + 4) / 2)`, raised to `k + 1` when that is larger.
pub fn default_volume_points(k: usize) -> usize {
    (k + 4).div_ceil(2).max(k + 1)
}

/// Basis values and derivatives tabulated at the nodes of a rule.
#[derive(Debug, Clone)]
pub struct BasisTable {
    pub rule: QuadratureRule,
    /// `values[n][l] = L_l(s_n)`
    pub values: Vec<Vec<f64>>,
    /// `d1[n][l] = L_l'(s_n)`
    pub d1: Vec<Vec<f64>>,
}

impl BasisTable {
    pub fn new(k: usize, rule: QuadratureRule) -> Result<Self> {
        check_args(k, 0.0)?;
        let values = rule.nodes.iter().map(|&s| eval_unchecked(k, s)).collect();
        let d1 = rule.nodes.iter().map(|&s| deriv_unchecked(k, s, 1)).collect();
        Ok(Self { rule, values, d1 })
    }

    /// Polynomial with coefficients `coeffs` evaluated at every node.
    pub fn eval_at_nodes(&self, coeffs: &[f64]) -> impl Iterator<Item = f64> + '_ {
        let coeffs = coeffs.to_vec();
        self.values.iter().map(move |row| dot(row, &coeffs))
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
