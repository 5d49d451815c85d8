//! Nernst–Planck half of the scheme.
//!
//! Each species evolves as `∂_t c = ∂_x(c ∂_x p)` with `p = q ψ + log c`. Per cell the
//! semi-discrete equations read
//!
//! `K ċ_j = (2/h) R1 + (1/(2h)) (R2 + R3) + (h/2) Σ_n ω_n f(t, x_n) L(s_n)`
//!
//! where `R1` is the volume term, `R2` carries `{c} Fl(p)` against `L(±1)` and `R3` the
//! symmetrizing `{c} (p − {p}) ∂_x v` term against `L_ξ(±1)`. Per interface
//! `x_{j+1/2}` with `S = c_j(1) + c_{j+1}(-1)`:
//!
//! * cell `j` gains `S (E·p_{j+1} − D·p_j) L(1) + S (p_j(1) − p_{j+1}(-1)) L_ξ(1)`,
//! * cell `j+1` gains `−S (E·p_{j+1} − D·p_j) L(-1) + S (p_j(1) − p_{j+1}(-1)) L_ξ(-1)`,
//!
//! with `D = β0 L(1) − L_ξ(1) + 4β1 L_ξξ(1)` and `E = β0 L(-1) + L_ξ(-1) + 4β1 L_ξξ(-1)`.
//! Zero-flux boundaries contribute nothing.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::basis::{self, dot, gauss_rule, BasisTable, LegendreBasis};
use crate::error::{DgError, Result};
use crate::field::DGField;
use crate::mesh::Mesh1D;
use crate::profile::Profile;

/// Penalty pair `(β0, β1)` of the interface flux.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxParams {
    pub beta0: f64,
    pub beta1: f64,
}

impl FluxParams {
    pub fn new(beta0: f64, beta1: f64) -> Result<Self> {
        if !(beta0 > 0.0 && beta0.is_finite() && beta1.is_finite()) {
            return Err(DgError::config(format!(
                "flux parameters (β0, β1) = ({beta0}, {beta1}) are invalid; β0 must be positive"
            )));
        }
        Ok(Self { beta0, beta1 })
    }

    /// Validated pairs for `k = 1, 2, 3`; `None` for other degrees.
    pub fn default_for_degree(k: usize) -> Option<Self> {
        match k {
            1 => Some(Self { beta0: 2.0, beta1: 0.0 }),
            2 => Some(Self {
                beta0: 4.0,
                beta1: 1.0 / 12.0,
            }),
            3 => Some(Self {
                beta0: 15.0,
                beta1: 0.25,
            }),
            _ => None,
        }
    }

    /// Whether `β0 > 2 Γ(β1, 1)`, the sufficient condition for dissipation.
    pub fn is_admissible_for(&self, k: usize) -> bool {
        match gamma_bound(k, self.beta1) {
            Ok(g) => self.beta0 > 2.0 * g,
            Err(_) => true,
        }
    }
}

/// One-sided values and physical derivatives of `w` at an interface.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InterfaceTrace {
    pub minus: f64,
    pub plus: f64,
    pub dx_minus: f64,
    pub dx_plus: f64,
    pub dxx_minus: f64,
    pub dxx_plus: f64,
}

impl InterfaceTrace {
    pub fn jump(&self) -> f64 {
        self.plus - self.minus
    }

    pub fn average(&self) -> f64 {
        0.5 * (self.plus + self.minus)
    }
}

/// `Fl(w) = β0 [w]/h + {∂_x w} + β1 h [∂_x² w]`.
pub fn flux_fl(trace: &InterfaceTrace, params: &FluxParams, h: f64) -> f64 {
    params.beta0 * trace.jump() / h
        + 0.5 * (trace.dx_minus + trace.dx_plus)
        + params.beta1 * h * (trace.dxx_plus - trace.dxx_minus)
}

/// `Γ(β1, 1) = k² (1 − β1 (k²−1) + β1² (k²−1)² / 3)`.
pub fn gamma_bound(k: usize, beta1: f64) -> Result<f64> {
    if k == 0 {
        return Err(DgError::config("Γ(β1, 1) is defined for k ≥ 1"));
    }
    let k2 = (k * k) as f64;
    let m = k2 - 1.0;
    Ok(k2 * (1.0 - beta1 * m + beta1 * beta1 * m * m / 3.0))
}

/// Minimizer of `β1 ↦ Γ(β1, 1)` over `[0, 1]` and the minimum value.
///
/// Golden-section search narrows the bracket, then one parabolic interpolation through the
/// last three points resolves the flat bottom that value comparisons alone cannot.
/// For `k = 1` the bound is constant and `β1 = 0` is returned.
pub fn minimize_gamma_bound(k: usize) -> Result<(f64, f64)> {
    let f = |b: f64| gamma_bound(k, b);
    if k == 1 {
        return Ok((0.0, f(0.0)?));
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while hi - lo > 1e-3 {
        if f1 <= f2 {
            hi = x2;
            (x2, f2) = (x1, f1);
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            (x1, f1) = (x2, f2);
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        }
    }
    let (a, b, c) = (lo, 0.5 * (lo + hi), hi);
    let (fa, fb, fc) = (f(a)?, f(b)?, f(c)?);
    let num = (b - a).powi(2) * (fb - fc) - (b - c).powi(2) * (fb - fa);
    let den = (b - a) * (fb - fc) - (b - c) * (fb - fa);
    let arg = if den != 0.0 {
        (b - 0.5 * num / den).clamp(lo, hi)
    } else {
        b
    };
    Ok((arg, f(arg)?))
}

/// Boundary treatment of one species.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SpeciesBoundary {
    ZeroFlux,
    Dirichlet { c_left: f64, c_right: f64 },
}

/// Which end of the domain a boundary flux lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundarySide {
    Left,
    Right,
}

/// Inner trace of the numerical solution at a domain boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryTrace {
    pub c: f64,
    pub p: f64,
    pub p_x: f64,
}

/// Boundary averages and flux under Dirichlet data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletFlux {
    /// `{c}`
    pub c_average: f64,
    /// `{p}`
    pub p_average: f64,
    /// `Fl(p)`
    pub flux: f64,
}

/// Boundary fluxes for prescribed `c_b` and boundary potential `ψ_b`:
/// at `a`, `Fl(p) = −β0 (q ψ_l + log c_il − p⁺)/h + p_x⁺`;
/// at `b`, `Fl(p) = β0 (q ψ_r + log c_ir − p⁻)/h + p_x⁻`.
///
/// The same formulas with `p` replaced by `ψ` (and `q ψ_b + log c_b` by `ψ_b`) give the
/// Dirichlet potential fluxes; see [`dirichlet_value_flux`].
pub fn apply_dirichlet_fluxes(
    side: BoundarySide,
    trace: &BoundaryTrace,
    c_boundary: f64,
    charge: f64,
    psi_boundary: f64,
    beta0: f64,
    h: f64,
) -> Result<DirichletFlux> {
    if !(c_boundary > 0.0) {
        return Err(DgError::config(format!(
            "Dirichlet concentration {c_boundary} must be positive"
        )));
    }
    let p_b = charge * psi_boundary + c_boundary.ln();
    Ok(DirichletFlux {
        c_average: 0.5 * (trace.c + c_boundary),
        p_average: 0.5 * (trace.p + p_b),
        flux: dirichlet_value_flux(side, trace.p, trace.p_x, p_b, beta0, h),
    })
}

/// `β0 (w⁺ − w_b)/h + w_x⁺` at the left end, `β0 (w_b − w⁻)/h + w_x⁻` at the right end.
pub fn dirichlet_value_flux(side: BoundarySide, inner: f64, inner_dx: f64, boundary: f64, beta0: f64, h: f64) -> f64 {
    match side {
        BoundarySide::Left => beta0 * (inner - boundary) / h + inner_dx,
        BoundarySide::Right => beta0 * (boundary - inner) / h + inner_dx,
    }
}

/// Chemical potential `p = q ψ + Π(log c)`, with `Π` the quadrature L2 projection.
pub fn compute_p(c: &DGField, psi: &DGField, charge: f64, table: &BasisTable) -> Result<DGField> {
    compute_p_species(c, psi, charge, table, 0)
}

pub(crate) fn compute_p_species(
    c: &DGField,
    psi: &DGField,
    charge: f64,
    table: &BasisTable,
    species: usize,
) -> Result<DGField> {
    if !c.same_layout(psi) {
        return Err(DgError::Shape("c and ψ live on different spaces".into()));
    }
    let k = c.degree();
    let mut p = DGField::zeros(c.mesh().clone(), k);
    let rule = &table.rule;
    let mut logs = vec![0.0; rule.len()];
    for j in 0..c.cells() {
        let cj = c.cell(j);
        for (n, vals) in table.values.iter().enumerate() {
            let value = dot(vals, cj);
            if !(value > 0.0) {
                return Err(DgError::NonPositive {
                    species,
                    cell: j,
                    value,
                });
            }
            logs[n] = value.ln();
        }
        // projecting deviations from one nodal value keeps constant data exact
        let base = logs[0];
        let row = p.cell_mut(j);
        for (n, vals) in table.values.iter().enumerate() {
            let w = rule.weights[n] * (logs[n] - base);
            for (r, v) in row.iter_mut().zip(vals) {
                *r += w * v;
            }
        }
        for ((l, r), s) in row.iter_mut().enumerate().zip(psi.cell(j)) {
            *r = *r * (2 * l + 1) as f64 / 2.0 + charge * s;
        }
        row[0] += base;
    }
    Ok(p)
}

/// Gauss points beyond `k` used to project source terms.
pub const SOURCE_EXTRA_POINTS: usize = 6;

/// Precomputed operator for the Nernst–Planck right-hand side on a uniform mesh.
#[derive(Debug, Clone)]
pub struct NernstPlanckOperator {
    mesh: Arc<Mesh1D>,
    degree: usize,
    h: f64,
    params: FluxParams,
    basis: LegendreBasis,
    table: BasisTable,
    source_table: BasisTable,
    d_vec: Vec<f64>,
    e_vec: Vec<f64>,
}

/// Boundary potential used by Dirichlet species fluxes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundaryPotential {
    pub left: f64,
    pub right: f64,
}

/// Per-species inputs to [`NernstPlanckOperator::rhs`].
#[derive(Debug, Clone, Copy)]
pub struct SpeciesInput<'a> {
    pub c: &'a DGField,
    pub p: &'a DGField,
    pub charge: f64,
    pub boundary: SpeciesBoundary,
    pub source: Option<&'a Profile>,
}

struct CellTraces {
    c_left: f64,
    c_right: f64,
    p_left: f64,
    p_right: f64,
    d_dot: f64,
    e_dot: f64,
}

impl NernstPlanckOperator {
    pub fn new(mesh: &Arc<Mesh1D>, degree: usize, params: FluxParams, table: BasisTable) -> Result<Self> {
        let h = mesh.uniform_width()?;
        let basis = LegendreBasis::new(degree)?;
        let d_vec = (0..=degree)
            .map(|l| params.beta0 * basis.right[l] - basis.d1_right[l] + 4.0 * params.beta1 * basis.d2_right[l])
            .collect();
        let e_vec = (0..=degree)
            .map(|l| params.beta0 * basis.left[l] + basis.d1_left[l] + 4.0 * params.beta1 * basis.d2_left[l])
            .collect();
        Ok(Self {
            mesh: mesh.clone(),
            degree,
            h,
            params,
            basis,
            table,
            source_table: BasisTable::new(degree, gauss_rule(degree + SOURCE_EXTRA_POINTS)?)?,
            d_vec,
            e_vec,
        })
    }

    pub fn params(&self) -> &FluxParams {
        &self.params
    }

    pub fn table(&self) -> &BasisTable {
        &self.table
    }

    pub fn basis(&self) -> &LegendreBasis {
        &self.basis
    }

    /// `D` and `E` interface vectors.
    pub fn interface_vectors(&self) -> (&[f64], &[f64]) {
        (&self.d_vec, &self.e_vec)
    }

    fn traces(&self, c: &DGField, p: &DGField, j: usize) -> CellTraces {
        let b = &self.basis;
        CellTraces {
            c_left: dot(&b.left, c.cell(j)),
            c_right: dot(&b.right, c.cell(j)),
            p_left: dot(&b.left, p.cell(j)),
            p_right: dot(&b.right, p.cell(j)),
            d_dot: dot(&self.d_vec, p.cell(j)),
            e_dot: dot(&self.e_vec, p.cell(j)),
        }
    }

    /// Time derivative of the coefficients of one species.
    pub fn rhs(&self, input: &SpeciesInput<'_>, potential: BoundaryPotential, t: f64) -> Result<DGField> {
        let c = input.c;
        let p = input.p;
        if !c.same_layout(p) || c.degree() != self.degree || c.cells() != self.mesh.cells() {
            return Err(DgError::Shape("species fields do not match the operator".into()));
        }
        let n = self.mesh.cells();
        let s = self.degree + 1;
        let h = self.h;
        let b = &self.basis;
        let rule = &self.table.rule;
        // accumulates K ċ
        let mut kc = vec![0.0; n * s];

        for j in 0..n {
            let cj = c.cell(j);
            let pj = p.cell(j);
            let row = &mut kc[j * s..(j + 1) * s];
            for (nq, (vals, d1)) in self.table.values.iter().zip(&self.table.d1).enumerate() {
                let w = rule.weights[nq] * dot(vals, cj) * dot(d1, pj);
                for (r, d) in row.iter_mut().zip(d1) {
                    *r -= 2.0 / h * w * d;
                }
            }
            if let Some(f) = input.source.filter(|f| !f.is_zero()) {
                let src = &self.source_table.rule;
                for (nq, vals) in self.source_table.values.iter().enumerate() {
                    let w = 0.5 * h * src.weights[nq] * f.eval(t, self.mesh.map(j, src.nodes[nq]));
                    for (r, v) in row.iter_mut().zip(vals) {
                        *r += w * v;
                    }
                }
            }
        }

        let scale = 1.0 / (2.0 * h);
        let mut prev = self.traces(c, p, 0);
        for j in 0..n.saturating_sub(1) {
            let next = self.traces(c, p, j + 1);
            let csum = prev.c_right + next.c_left;
            let flux = csum * (next.e_dot - prev.d_dot) * scale;
            let jump = csum * (prev.p_right - next.p_left) * scale;
            for l in 0..s {
                kc[j * s + l] += flux * b.right[l] + jump * b.d1_right[l];
                kc[(j + 1) * s + l] += -flux * b.left[l] + jump * b.d1_left[l];
            }
            prev = next;
        }

        if let SpeciesBoundary::Dirichlet { c_left, c_right } = input.boundary {
            let first = self.traces(c, p, 0);
            let p_x = 2.0 / h * dot(&b.d1_left, p.cell(0));
            let fl = apply_dirichlet_fluxes(
                BoundarySide::Left,
                &BoundaryTrace {
                    c: first.c_left,
                    p: first.p_left,
                    p_x,
                },
                c_left,
                input.charge,
                potential.left,
                self.params.beta0,
                h,
            )?;
            let half_jump = first.p_left - fl.p_average;
            for (r, (v, d)) in kc[..s].iter_mut().zip(b.left.iter().zip(&b.d1_left)) {
                *r -= fl.c_average * (fl.flux * v + half_jump * 2.0 / h * d);
            }
            let last = self.traces(c, p, n - 1);
            let p_x = 2.0 / h * dot(&b.d1_right, p.cell(n - 1));
            let fr = apply_dirichlet_fluxes(
                BoundarySide::Right,
                &BoundaryTrace {
                    c: last.c_right,
                    p: last.p_right,
                    p_x,
                },
                c_right,
                input.charge,
                potential.right,
                self.params.beta0,
                h,
            )?;
            let half_jump = last.p_right - fr.p_average;
            let off = (n - 1) * s;
            for l in 0..s {
                kc[off + l] += fr.c_average * (fr.flux * b.right[l] + half_jump * 2.0 / h * b.d1_right[l]);
            }
        }

        for j in 0..n {
            for l in 0..s {
                kc[j * s + l] *= (2 * l + 1) as f64 / h;
            }
        }
        DGField::from_coeffs(self.mesh.clone(), self.degree, kc)
    }

    /// Weighted form `A_M(u, v) = Σ_j ∫ M u_x v_x + Σ_interior {M} (Fl(u)[v] + {v_x}[u])`.
    pub fn bilinear_am(&self, weight: &DGField, u: &DGField, v: &DGField) -> f64 {
        let n = self.mesh.cells();
        let h = self.h;
        let b = &self.basis;
        let rule = &self.table.rule;
        let mut total = 0.0;
        for j in 0..n {
            let cell: f64 = self
                .table
                .values
                .iter()
                .zip(&self.table.d1)
                .zip(&rule.weights)
                .map(|((vals, d1), w)| w * dot(vals, weight.cell(j)) * dot(d1, u.cell(j)) * dot(d1, v.cell(j)))
                .sum();
            total += 2.0 / h * cell;
        }
        for j in 0..n.saturating_sub(1) {
            let (l, r) = (j, j + 1);
            let m_avg = 0.5 * (dot(&b.right, weight.cell(l)) + dot(&b.left, weight.cell(r)));
            let fl_u = (dot(&self.e_vec, u.cell(r)) - dot(&self.d_vec, u.cell(l))) / h;
            let jump_v = dot(&b.left, v.cell(r)) - dot(&b.right, v.cell(l));
            let jump_u = dot(&b.left, u.cell(r)) - dot(&b.right, u.cell(l));
            let avg_vx = (dot(&b.d1_left, v.cell(r)) + dot(&b.d1_right, v.cell(l))) / h;
            total += m_avg * (fl_u * jump_v + avg_vx * jump_u);
        }
        total
    }
}

/// Right-hand sides for all species; species couple only through `ψ`, already inside `p`.
pub fn np_rhs(
    op: &NernstPlanckOperator,
    species: &[SpeciesInput<'_>],
    potential: BoundaryPotential,
    t: f64,
) -> Result<Vec<DGField>> {
    species.iter().map(|s| op.rhs(s, potential, t)).collect()
}

/// Standalone form of [`NernstPlanckOperator::bilinear_am`].
pub fn bilinear_am(op: &NernstPlanckOperator, weight: &DGField, u: &DGField, v: &DGField) -> f64 {
    op.bilinear_am(weight, u, v)
}

/// Volume table used by the transport and energy routines for degree `k`.
pub fn volume_table(k: usize) -> Result<BasisTable> {
    BasisTable::new(k, basis::gauss_rule(basis::default_volume_points(k))?)
}
