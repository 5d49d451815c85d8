//! Positivity-preserving scaling limiter.
//!
//! A cell polynomial `w` with average `w̄ > δ` and minimum `m < δ` is replaced by
//! `w̄ + θ (w − w̄)` with `θ = (w̄ − δ)/(w̄ − m)`, which lifts the minimum to `δ` and leaves the
//! average untouched. Only coefficients `1..=k` are scaled, so the average survives bitwise.

use crate::error::{DgError, Result};
use crate::field::DGField;

/// Reference points sampled per cell before Newton refinement (degree ≥ 3).
pub const DEFAULT_RESOLUTION: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimiterConfig {
    pub delta: f64,
    pub resolution: usize,
}

impl LimiterConfig {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(DgError::config(format!("positivity floor δ = {delta} must be ≥ 0")));
        }
        Ok(Self {
            delta,
            resolution: DEFAULT_RESOLUTION,
        })
    }

    /// `δ = min(1e-12, h^{k+2})`.
    pub fn default_for(h: f64, k: usize) -> Self {
        Self {
            delta: 1e-12_f64.min(h.powi(k as i32 + 2)),
            resolution: DEFAULT_RESOLUTION,
        }
    }
}

/// Location and value of the minimum of a Legendre expansion on `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMinimum {
    pub xi: f64,
    pub value: f64,
}

/// Value and first two derivatives of `Σ c_l L_l(ξ)` by the three-term recurrences.
fn value_and_derivs(coeffs: &[f64], xi: f64) -> (f64, f64, f64) {
    let (mut l_prev, mut l) = (1.0, xi);
    let (mut d_prev, mut d) = (0.0, 1.0);
    let (mut dd_prev, mut dd) = (0.0, 0.0);
    let mut v = coeffs[0];
    let (mut d1, mut d2) = (0.0, 0.0);
    for (n, c) in coeffs.iter().enumerate().skip(1) {
        v += c * l;
        d1 += c * d;
        d2 += c * dd;
        let nf = n as f64;
        let l_next = ((2.0 * nf + 1.0) * xi * l - nf * l_prev) / (nf + 1.0);
        let d_next = d_prev + (2.0 * nf + 1.0) * l;
        let dd_next = dd_prev + (2.0 * nf + 1.0) * d;
        (l_prev, l) = (l, l_next);
        (d_prev, d) = (d, d_next);
        (dd_prev, dd) = (dd, dd_next);
    }
    (v, d1, d2)
}

fn eval(coeffs: &[f64], xi: f64) -> f64 {
    let (mut l_prev, mut l) = (1.0, xi);
    let mut v = coeffs[0];
    for (n, c) in coeffs.iter().enumerate().skip(1) {
        v += c * l;
        let nf = n as f64;
        let l_next = ((2.0 * nf + 1.0) * xi * l - nf * l_prev) / (nf + 1.0);
        (l_prev, l) = (l, l_next);
    }
    v
}

/// Minimum of the cell polynomial, in closed form for `k ≤ 2` and by sampling plus Newton
/// refinement otherwise.
pub fn min_on_cell(coeffs: &[f64], resolution: usize) -> CellMinimum {
    let best = |a: CellMinimum, b: CellMinimum| if b.value < a.value { b } else { a };
    let at = |xi: f64| CellMinimum {
        xi,
        value: eval(coeffs, xi),
    };
    match coeffs.len() {
        0 => CellMinimum { xi: -1.0, value: 0.0 },
        1 => CellMinimum {
            xi: -1.0,
            value: coeffs[0],
        },
        2 => {
            let xi = if coeffs[1] >= 0.0 { -1.0 } else { 1.0 };
            CellMinimum {
                xi,
                value: coeffs[0] + xi * coeffs[1],
            }
        }
        3 => {
            let mut m = best(at(-1.0), at(1.0));
            let c2 = coeffs[2];
            if c2 > 0.0 {
                let xi = -coeffs[1] / (3.0 * c2);
                if xi.abs() < 1.0 {
                    m = best(m, at(xi));
                }
            }
            m
        }
        _ => {
            let res = resolution.max(4);
            let mut xs = Vec::with_capacity(res + 2);
            xs.push(-1.0);
            xs.extend(
                (0..res)
                    .rev()
                    .map(|i| (std::f64::consts::PI * (i as f64 + 0.5) / res as f64).cos()),
            );
            xs.push(1.0);
            let vals: Vec<f64> = xs.iter().map(|&x| eval(coeffs, x)).collect();
            let mut m = best(at(-1.0), at(1.0));
            for i in 1..xs.len() - 1 {
                if vals[i] <= vals[i - 1] && vals[i] <= vals[i + 1] {
                    m = best(m, refine(coeffs, xs[i - 1], xs[i], xs[i + 1]));
                }
            }
            m
        }
    }
}

fn refine(coeffs: &[f64], lo: f64, start: f64, hi: f64) -> CellMinimum {
    let mut xi = start;
    let mut best = CellMinimum {
        xi,
        value: eval(coeffs, xi),
    };
    for _ in 0..30 {
        let (_, d1, d2) = value_and_derivs(coeffs, xi);
        if d2 <= 0.0 {
            break;
        }
        let next = (xi - d1 / d2).clamp(lo, hi);
        let v = eval(coeffs, next);
        if v < best.value {
            best = CellMinimum { xi: next, value: v };
        }
        if (next - xi).abs() <= 1e-15 {
            break;
        }
        xi = next;
    }
    best
}

/// Outcome of limiting a single cell.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitedCell {
    pub coeffs: Vec<f64>,
    pub limited: bool,
}

/// Limit one cell; fails when the cell average itself is not above `δ`.
pub fn limit_cell(coeffs: &[f64], config: &LimiterConfig) -> Result<LimitedCell> {
    let mut out = coeffs.to_vec();
    let limited = limit_in_place(&mut out, config).map_err(|average| DgError::AveragePositivityLost {
        species: 0,
        cell: 0,
        step: 0,
        average,
        floor: config.delta,
    })?;
    Ok(LimitedCell { coeffs: out, limited })
}

fn limit_in_place(coeffs: &mut [f64], config: &LimiterConfig) -> std::result::Result<bool, f64> {
    let avg = coeffs[0];
    let delta = config.delta;
    if !(avg > delta) && !(avg == delta && coeffs[1..].iter().all(|&c| c == 0.0)) {
        return Err(avg);
    }
    // |L_l| ≤ 1 on the cell, so this bound settles most cells without a search
    let lower = avg - coeffs[1..].iter().map(|c| c.abs()).sum::<f64>();
    if lower >= delta {
        return Ok(false);
    }
    let m = min_on_cell(coeffs, config.resolution);
    // a cell already limited sits on δ up to rounding
    if m.value >= delta - 4.0 * f64::EPSILON * avg {
        return Ok(false);
    }
    let theta = ((avg - delta) / (avg - m.value)).clamp(0.0, 1.0);
    for c in coeffs.iter_mut().skip(1) {
        *c *= theta;
    }
    Ok(true)
}

/// Limit every cell of `field`; returns how many cells were modified.
pub fn limit_field(field: &mut DGField, config: &LimiterConfig, species: usize, step: usize) -> Result<usize> {
    let mut count = 0;
    for j in 0..field.cells() {
        match limit_in_place(field.cell_mut(j), config) {
            Ok(true) => count += 1,
            Ok(false) => {}
            Err(average) => {
                return Err(DgError::AveragePositivityLost {
                    species,
                    cell: j,
                    step,
                    average,
                    floor: config.delta,
                })
            }
        }
    }
    Ok(count)
}
