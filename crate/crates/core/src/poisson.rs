//! DG Poisson solve for the potential, `-ψ'' = Σ q_i c_i + ρ0`.
//!
//! Rows are scaled by `h`: for every cell
//! `A ψ_{j-1} + B ψ_j + C ψ_{j+1} = h K Σ_i q_i c_ij + (h²/2) Σ_n ω_n ρ0(x_j + h s_n/2) L(s_n)`
//! with `K = diag(h / (2l+1))`. The diagonal block splits as
//! `B = 2 ∫ L_ξ L_ξᵀ dξ + B_left + B_right`, one part per cell interface.
//!
//! Boundary rows come from the same weak form with the boundary fluxes substituted.
//!
//! * Neumann with pinned `ψ(a)`: `Fl(a) = β0(ψ⁺ − ψ(a))/h + (σ_a + ψ_x⁺)/2`,
//!   `{ψ}(a) = (ψ⁺ + ψ(a))/2`, `Fl(b) = σ_b`, `{ψ}(b) = ψ⁻`. The left part of the
//!   diagonal block is unchanged and the data moves to the right-hand side as
//!   `(β0 ψ(a) − h σ_a/2) L(-1) + ψ(a) L_ξ(-1)`; at `b` the right part is dropped and
//!   `h σ_b L(1)` is added.
//! * Dirichlet: `Fl(a) = β0(ψ⁺ − ψ_l)/h + ψ_x⁺`, `{ψ}(a) = (ψ_l + ψ⁺)/2` gives
//!   `B_left = L(-1)(β0 L(-1) + 2 L_ξ(-1))ᵀ + L_ξ(-1) L(-1)ᵀ` with data
//!   `β0 ψ_l L(-1) + ψ_l L_ξ(-1)`; mirrored at `b`:
//!   `B_right = L(1)(β0 L(1) − 2 L_ξ(1))ᵀ − L_ξ(1) L(1)ᵀ`, data `β0 ψ_r L(1) − ψ_r L_ξ(1)`.
//!
//! Here `σ_a = ψ_x(a)` and `σ_b = ψ_x(b)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::basis::{self, gauss_rule, BasisTable, LegendreBasis};
use crate::error::{DgError, Result};
use crate::field::DGField;
use crate::mesh::Mesh1D;
use crate::profile::Profile;

/// Boundary treatment the operator is assembled for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoissonBoundaryKind {
    NeumannPinned,
    Dirichlet,
}

/// Boundary data supplied at solve time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PoissonBoundary {
    /// `ψ_x(a) = sigma_a`, `ψ_x(b) = sigma_b`, and `ψ(a) = psi_a`.
    NeumannPinned {
        sigma_a: f64,
        sigma_b: f64,
        psi_a: f64,
    },
    Dirichlet {
        psi_l: f64,
        psi_r: f64,
    },
}

impl PoissonBoundary {
    pub fn kind(&self) -> PoissonBoundaryKind {
        match self {
            PoissonBoundary::NeumannPinned { .. } => PoissonBoundaryKind::NeumannPinned,
            PoissonBoundary::Dirichlet { .. } => PoissonBoundaryKind::Dirichlet,
        }
    }
}

/// Total charge `Σ q_i c_i + ρ0`.
#[derive(Debug, Clone, Copy)]
pub struct ChargeDensity<'a> {
    pub fixed: Option<&'a Profile>,
    pub charges: &'a [f64],
    pub concentrations: &'a [DGField],
}

impl<'a> ChargeDensity<'a> {
    pub fn new(fixed: Option<&'a Profile>, charges: &'a [f64], concentrations: &'a [DGField]) -> Self {
        Self {
            fixed,
            charges,
            concentrations,
        }
    }

    fn check(&self) -> Result<()> {
        if self.charges.len() != self.concentrations.len() {
            return Err(DgError::Shape(format!(
                "{} charges for {} species",
                self.charges.len(),
                self.concentrations.len()
            )));
        }
        Ok(())
    }
}

type Block = DMatrix<f64>;

fn outer(u: &[f64], v: &[f64]) -> Block {
    DMatrix::from_fn(u.len(), v.len(), |r, c| u[r] * v[c])
}

fn lincomb(a: &[f64], alpha: f64, b: &[f64], beta: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| alpha * x + beta * y).collect()
}

/// The four interface blocks and the stiffness block for given `k`, `β0`.
#[derive(Debug, Clone)]
pub struct InteriorBlocks {
    pub lower: Block,
    pub diag: Block,
    pub upper: Block,
    /// `2 ∫ L_ξ L_ξᵀ dξ`
    pub stiffness: Block,
    pub diag_left: Block,
    pub diag_right: Block,
}

impl InteriorBlocks {
    pub fn new(k: usize, beta0: f64) -> Result<Self> {
        let lb = LegendreBasis::new(k)?;
        let n = k + 1;
        let rule = gauss_rule(k + 1)?;
        let mut stiffness = DMatrix::zeros(n, n);
        for (&s, &w) in rule.nodes.iter().zip(&rule.weights) {
            let d = basis::deriv_unchecked(k, s, 1);
            stiffness += outer(&d, &d) * (2.0 * w);
        }
        // β0 L(-1) + L_ξ(-1), β0 L(1) − L_ξ(1)
        let e_left = lincomb(&lb.left, beta0, &lb.d1_left, 1.0);
        let d_right = lincomb(&lb.right, beta0, &lb.d1_right, -1.0);
        let lower = -outer(&lb.left, &d_right) - outer(&lb.d1_left, &lb.right);
        let upper = -outer(&lb.right, &e_left) + outer(&lb.d1_right, &lb.left);
        let diag_left = outer(&lb.left, &e_left) + outer(&lb.d1_left, &lb.left);
        let diag_right = outer(&lb.right, &d_right) - outer(&lb.d1_right, &lb.right);
        let diag = &stiffness + &diag_left + &diag_right;
        Ok(Self {
            lower,
            diag,
            upper,
            stiffness,
            diag_left,
            diag_right,
        })
    }
}

/// Assembled and factorized block-tridiagonal Poisson operator.
#[derive(Debug, Clone)]
pub struct PoissonOperator {
    mesh: Arc<Mesh1D>,
    degree: usize,
    h: f64,
    beta0: f64,
    kind: PoissonBoundaryKind,
    basis: LegendreBasis,
    table: BasisTable,
    blocks: InteriorBlocks,
    first_diag: Block,
    last_diag: Block,
    /// LU of the eliminated diagonal blocks `D_j`
    pivots: Vec<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    /// `D_j^{-1} C`
    sweeps: Vec<Block>,
}

/// Assemble the Poisson operator on a uniform mesh.
///
/// Requires `β0 > k²` so the pinned problem is uniquely solvable.
pub fn assemble_poisson(
    mesh: &Arc<Mesh1D>,
    degree: usize,
    beta0: f64,
    kind: PoissonBoundaryKind,
) -> Result<PoissonOperator> {
    let h = mesh.uniform_width()?;
    let threshold = (degree * degree) as f64;
    if !(beta0 > threshold) {
        return Err(DgError::config(format!(
            "Poisson penalty β0 = {beta0} must exceed k² = {threshold}"
        )));
    }
    let basis = LegendreBasis::new(degree)?;
    let table = BasisTable::new(degree, gauss_rule(basis::default_volume_points(degree))?)?;
    let blocks = InteriorBlocks::new(degree, beta0)?;

    let left_part = match kind {
        PoissonBoundaryKind::NeumannPinned => blocks.diag_left.clone(),
        PoissonBoundaryKind::Dirichlet => {
            let e = lincomb(&basis.left, beta0, &basis.d1_left, 2.0);
            outer(&basis.left, &e) + outer(&basis.d1_left, &basis.left)
        }
    };
    let right_part = match kind {
        PoissonBoundaryKind::NeumannPinned => DMatrix::zeros(degree + 1, degree + 1),
        PoissonBoundaryKind::Dirichlet => {
            let d = lincomb(&basis.right, beta0, &basis.d1_right, -2.0);
            outer(&basis.right, &d) - outer(&basis.d1_right, &basis.right)
        }
    };
    let n = mesh.cells();
    let first_diag = if n == 1 {
        &blocks.stiffness + &left_part + &right_part
    } else {
        &blocks.stiffness + &left_part + &blocks.diag_right
    };
    let last_diag = if n == 1 {
        first_diag.clone()
    } else {
        &blocks.stiffness + &blocks.diag_left + &right_part
    };

    let mut op = PoissonOperator {
        mesh: mesh.clone(),
        degree,
        h,
        beta0,
        kind,
        basis,
        table,
        blocks,
        first_diag,
        last_diag,
        pivots: Vec::with_capacity(n),
        sweeps: Vec::with_capacity(n),
    };
    op.factorize()?;
    Ok(op)
}

impl PoissonOperator {
    pub fn mesh(&self) -> &Arc<Mesh1D> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    pub fn kind(&self) -> PoissonBoundaryKind {
        self.kind
    }

    pub fn interior_blocks(&self) -> &InteriorBlocks {
        &self.blocks
    }

    /// Diagonal block of row `j`.
    pub fn diag_block(&self, j: usize) -> &Block {
        let n = self.mesh.cells();
        if j == 0 {
            &self.first_diag
        } else if j == n - 1 {
            &self.last_diag
        } else {
            &self.blocks.diag
        }
    }

    fn factorize(&mut self) -> Result<()> {
        let n = self.mesh.cells();
        let mut prev_sweep: Option<Block> = None;
        for j in 0..n {
            let mut d = self.diag_block(j).clone();
            if let Some(g) = &prev_sweep {
                d -= &self.blocks.lower * g;
            }
            let lu = d.lu();
            if !lu.is_invertible() {
                return Err(DgError::SingularOperator { block: j });
            }
            let g = if j + 1 < n {
                lu.solve(&self.blocks.upper)
                    .ok_or(DgError::SingularOperator { block: j })?
            } else {
                DMatrix::zeros(0, 0)
            };
            self.pivots.push(lu);
            prev_sweep = Some(g.clone());
            self.sweeps.push(g);
        }
        Ok(())
    }

    /// Scaled right-hand side for the given charge and boundary data.
    pub fn rhs(&self, charge: &ChargeDensity<'_>, boundary: &PoissonBoundary) -> Result<Vec<f64>> {
        charge.check()?;
        if boundary.kind() != self.kind {
            return Err(DgError::config(
                "boundary data does not match the assembled boundary type",
            ));
        }
        let s = self.degree + 1;
        let n = self.mesh.cells();
        let h = self.h;
        let mut rhs = vec![0.0; n * s];
        for (q, c) in charge.charges.iter().zip(charge.concentrations) {
            if c.degree() != self.degree || c.cells() != n {
                return Err(DgError::Shape("concentration layout differs from the operator".into()));
            }
            for j in 0..n {
                for (l, v) in c.cell(j).iter().enumerate() {
                    rhs[j * s + l] += q * h * h / (2 * l + 1) as f64 * v;
                }
            }
        }
        if let Some(rho0) = charge.fixed.filter(|p| !p.is_zero()) {
            let rule = &self.table.rule;
            for j in 0..n {
                for (nq, (&sn, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
                    let r = rho0.eval(0.0, self.mesh.map(j, sn));
                    for l in 0..s {
                        rhs[j * s + l] += 0.5 * h * h * w * r * self.table.values[nq][l];
                    }
                }
            }
        }
        let last = (n - 1) * s;
        let b = &self.basis;
        match *boundary {
            PoissonBoundary::NeumannPinned {
                sigma_a,
                sigma_b,
                psi_a,
            } => {
                for l in 0..s {
                    rhs[l] += (self.beta0 * psi_a - 0.5 * h * sigma_a) * b.left[l] + psi_a * b.d1_left[l];
                    rhs[last + l] += h * sigma_b * b.right[l];
                }
            }
            PoissonBoundary::Dirichlet { psi_l, psi_r } => {
                for l in 0..s {
                    rhs[l] += self.beta0 * psi_l * b.left[l] + psi_l * b.d1_left[l];
                    rhs[last + l] += self.beta0 * psi_r * b.right[l] - psi_r * b.d1_right[l];
                }
            }
        }
        Ok(rhs)
    }

    /// Block-Thomas solve with the cached factorization.
    pub fn solve_raw(&self, rhs: &[f64]) -> Vec<f64> {
        let s = self.degree + 1;
        let n = self.mesh.cells();
        let mut y: Vec<DVector<f64>> = Vec::with_capacity(n);
        for j in 0..n {
            let mut r = DVector::from_column_slice(&rhs[j * s..(j + 1) * s]);
            if j > 0 {
                r -= &self.blocks.lower * &y[j - 1];
            }
            y.push(self.pivots[j].solve(&r).expect("factorization checked at assembly"));
        }
        for j in (0..n.saturating_sub(1)).rev() {
            let next = y[j + 1].clone();
            y[j] -= &self.sweeps[j] * next;
        }
        y.iter().flat_map(|v| v.iter().copied()).collect()
    }

    /// Operator applied to a coefficient vector.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let s = self.degree + 1;
        let n = self.mesh.cells();
        let mut out = vec![0.0; n * s];
        for j in 0..n {
            let mut acc = self.diag_block(j) * DVector::from_column_slice(&x[j * s..(j + 1) * s]);
            if j > 0 {
                acc += &self.blocks.lower * DVector::from_column_slice(&x[(j - 1) * s..j * s]);
            }
            if j + 1 < n {
                acc += &self.blocks.upper * DVector::from_column_slice(&x[(j + 1) * s..(j + 2) * s]);
            }
            out[j * s..(j + 1) * s].copy_from_slice(acc.as_slice());
        }
        out
    }

    /// Full dense matrix, for diagnostics on small meshes.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let s = self.degree + 1;
        let n = self.mesh.cells();
        let mut m = DMatrix::zeros(n * s, n * s);
        for j in 0..n {
            m.view_mut((j * s, j * s), (s, s)).copy_from(self.diag_block(j));
            if j > 0 {
                m.view_mut((j * s, (j - 1) * s), (s, s)).copy_from(&self.blocks.lower);
            }
            if j + 1 < n {
                m.view_mut((j * s, (j + 1) * s), (s, s)).copy_from(&self.blocks.upper);
            }
        }
        m
    }

    /// Solve for `ψ_h`.
    pub fn solve(&self, charge: &ChargeDensity<'_>, boundary: &PoissonBoundary) -> Result<DGField> {
        let rhs = self.rhs(charge, boundary)?;
        let x = self.solve_raw(&rhs);
        let field = DGField::from_coeffs(self.mesh.clone(), self.degree, x)?;
        if !field.is_finite() {
            return Err(DgError::SingularOperator { block: 0 });
        }
        Ok(field)
    }

    /// `‖M ψ − r‖ / max(‖r‖, 1)` in the max norm.
    pub fn relative_residual(&self, psi: &DGField, rhs: &[f64]) -> f64 {
        let applied = self.apply(psi.as_slice());
        let err = applied.iter().zip(rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = rhs.iter().map(|v| v.abs()).fold(1.0, f64::max);
        err / scale
    }
}

/// Convenience wrapper matching the module contract.
pub fn solve_poisson(op: &PoissonOperator, charge: &ChargeDensity<'_>, boundary: &PoissonBoundary) -> Result<DGField> {
    op.solve(charge, boundary)
}

/// `∫(Σ q_i c_i + ρ0) dx − σ_a + σ_b`, zero for a solvable Neumann problem.
pub fn compatibility_residual(
    charge: &ChargeDensity<'_>,
    mesh: &Mesh1D,
    sigma_a: f64,
    sigma_b: f64,
    rule: &basis::QuadratureRule,
) -> Result<f64> {
    charge.check()?;
    let mobile: f64 = charge
        .charges
        .iter()
        .zip(charge.concentrations)
        .map(|(q, c)| q * c.total_mass())
        .sum();
    let fixed = match charge.fixed {
        Some(rho0) => (0..mesh.cells())
            .map(|j| 0.5 * mesh.width(j) * rule.integrate(|s| rho0.eval(0.0, mesh.map(j, s))))
            .sum(),
        None => 0.0,
    };
    Ok(mobile + fixed - sigma_a + sigma_b)
}
