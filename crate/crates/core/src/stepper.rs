//! Explicit time integration of the coupled system.
//!
//! Every stage limits the concentrations, solves for `ψ`, forms the chemical potentials and
//! evaluates the transport right-hand side. The time step is `Δt = μ h²`; the final step is
//! shortened so the run lands exactly on `T`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{dot, BasisTable};
use crate::error::{DgError, Result};
use crate::field::DGField;
use crate::limiter::{limit_field, LimiterConfig};
use crate::mesh::Mesh1D;
use crate::poisson::{assemble_poisson, ChargeDensity, PoissonBoundary, PoissonOperator};
use crate::profile::Profile;
use crate::transport::{
    compute_p_species, dirichlet_value_flux, volume_table, BoundaryPotential, BoundarySide, FluxParams,
    NernstPlanckOperator, SpeciesBoundary, SpeciesInput,
};

const PARALLEL_WORK_THRESHOLD: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Euler,
    Rk2,
    SspRk3,
}

impl Scheme {
    pub fn stages(self) -> usize {
        match self {
            Scheme::Euler => 1,
            Scheme::Rk2 => 2,
            Scheme::SspRk3 => 3,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Euler => "euler",
            Scheme::Rk2 => "rk2",
            Scheme::SspRk3 => "ssp-rk3",
        })
    }
}

impl FromStr for Scheme {
    type Err = DgError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euler" => Ok(Scheme::Euler),
            "rk2" | "heun" => Ok(Scheme::Rk2),
            "ssp-rk3" | "ssprk3" | "rk3" => Ok(Scheme::SspRk3),
            other => Err(DgError::config(format!("unknown time scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub scheme: Scheme,
    pub mu: f64,
    pub final_time: f64,
    pub trace_every: usize,
}

impl StepperConfig {
    pub fn new(scheme: Scheme, mu: f64, final_time: f64) -> Result<Self> {
        let cfg = Self {
            scheme,
            mu,
            final_time,
            trace_every: 1,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(DgError::config(format!("mesh ratio μ = {} must be positive", self.mu)));
        }
        if !(self.final_time >= 0.0 && self.final_time.is_finite()) {
            return Err(DgError::config(format!("final time {} must be ≥ 0", self.final_time)));
        }
        if self.trace_every == 0 {
            return Err(DgError::config("trace stride must be at least 1"));
        }
        Ok(())
    }
}

/// `C(k, β0) = 4 (k+1)² (k (k+2) max{1, k²/β0} + 8 β0)`, reported as a diagnostic.
pub fn energy_step_constant(k: usize, beta0: f64) -> f64 {
    let kf = k as f64;
    4.0 * (kf + 1.0).powi(2) * (kf * (kf + 2.0) * (kf * kf / beta0).max(1.0) + 8.0 * beta0)
}

/// Mesh ratio `μ = Δt/h²` inside the linear stability region of the default flux pair.
///
/// The largest eigenvalue of the linearised operator scales like `k⁴/h²`, so the
/// ratio shrinks quickly with the degree.
pub fn default_mu(k: usize) -> f64 {
    match k {
        0 | 1 => 0.05,
        2 => 0.01,
        _ => 0.1 / (k as f64).powi(4),
    }
}

/// Boundary data for the potential, possibly time dependent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PotentialBoundary {
    NeumannPinned {
        sigma_a: Profile,
        sigma_b: Profile,
        psi_a: f64,
    },
    Dirichlet {
        psi_l: f64,
        psi_r: f64,
    },
}

impl PotentialBoundary {
    pub fn at(&self, t: f64, a: f64, b: f64) -> PoissonBoundary {
        match self {
            PotentialBoundary::NeumannPinned {
                sigma_a,
                sigma_b,
                psi_a,
            } => PoissonBoundary::NeumannPinned {
                sigma_a: sigma_a.eval(t, a),
                sigma_b: sigma_b.eval(t, b),
                psi_a: *psi_a,
            },
            PotentialBoundary::Dirichlet { psi_l, psi_r } => PoissonBoundary::Dirichlet {
                psi_l: *psi_l,
                psi_r: *psi_r,
            },
        }
    }

    pub fn is_time_independent(&self) -> bool {
        match self {
            PotentialBoundary::NeumannPinned { sigma_a, sigma_b, .. } => {
                sigma_a.is_time_independent() && sigma_b.is_time_independent()
            }
            PotentialBoundary::Dirichlet { .. } => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Species {
    pub name: String,
    pub charge: f64,
    pub boundary: SpeciesBoundary,
    pub source: Option<Profile>,
}

/// Discretization parameters shared by all species.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    pub degree: usize,
    pub flux: FluxParams,
    pub beta0_psi: f64,
    pub limiter: LimiterConfig,
}

#[derive(Debug, Clone)]
pub struct PnpState {
    pub time: f64,
    pub concentrations: Vec<DGField>,
}

/// Quantities computed while evaluating one stage.
#[derive(Debug, Clone)]
pub struct StageEval {
    pub psi: DGField,
    pub potentials: Vec<DGField>,
    pub rates: Vec<DGField>,
}

/// Outcome of one time step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: PnpState,
    pub limited: Vec<usize>,
}

/// The assembled semi-discrete system.
#[derive(Debug, Clone)]
pub struct PnpSystem {
    mesh: Arc<Mesh1D>,
    species: Vec<Species>,
    charges: Vec<f64>,
    rho0: Option<Profile>,
    potential: PotentialBoundary,
    disc: Discretization,
    poisson: PoissonOperator,
    transport: NernstPlanckOperator,
    h: f64,
}

impl PnpSystem {
    pub fn new(
        mesh: Arc<Mesh1D>,
        species: Vec<Species>,
        rho0: Option<Profile>,
        potential: PotentialBoundary,
        disc: Discretization,
    ) -> Result<Self> {
        if species.is_empty() {
            return Err(DgError::config("at least one species is required"));
        }
        let h = mesh.uniform_width()?;
        let kind = potential.at(0.0, mesh.a(), mesh.b()).kind();
        let poisson = assemble_poisson(&mesh, disc.degree, disc.beta0_psi, kind)?;
        let transport = NernstPlanckOperator::new(&mesh, disc.degree, disc.flux, volume_table(disc.degree)?)?;
        if disc.degree > 0 && !disc.flux.is_admissible_for(disc.degree) {
            log::warn!(
                "flux pair (β0, β1) = ({}, {}) does not satisfy β0 > 2Γ(β1, 1) for k = {}",
                disc.flux.beta0,
                disc.flux.beta1,
                disc.degree
            );
        }
        let charges = species.iter().map(|s| s.charge).collect();
        Ok(Self {
            mesh,
            species,
            charges,
            rho0: rho0.filter(|r| !r.is_zero()),
            potential,
            disc,
            poisson,
            transport,
            h,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh1D> {
        &self.mesh
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn charges(&self) -> &[f64] {
        &self.charges
    }

    pub fn rho0(&self) -> Option<&Profile> {
        self.rho0.as_ref()
    }

    pub fn potential_boundary(&self) -> &PotentialBoundary {
        &self.potential
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn poisson(&self) -> &PoissonOperator {
        &self.poisson
    }

    pub fn transport(&self) -> &NernstPlanckOperator {
        &self.transport
    }

    pub fn table(&self) -> &BasisTable {
        self.transport.table()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn time_step(&self, mu: f64) -> f64 {
        mu * self.h * self.h
    }

    /// True when sources vanish and the boundary data do not depend on time.
    pub fn is_autonomous_and_closed(&self) -> bool {
        self.species
            .iter()
            .all(|s| s.source.as_ref().is_none_or(Profile::is_zero) && s.boundary == SpeciesBoundary::ZeroFlux)
            && self.potential.is_time_independent()
    }

    /// True when every species has zero-flux boundaries and no source.
    pub fn conserves_mass(&self) -> bool {
        self.species
            .iter()
            .all(|s| s.source.as_ref().is_none_or(Profile::is_zero) && s.boundary == SpeciesBoundary::ZeroFlux)
    }

    fn check_state(&self, c: &[DGField]) -> Result<()> {
        if c.len() != self.species.len() {
            return Err(DgError::Shape(format!(
                "expected {} species, got {}",
                self.species.len(),
                c.len()
            )));
        }
        for f in c {
            if f.degree() != self.disc.degree || f.cells() != self.mesh.cells() {
                return Err(DgError::Shape("concentration layout differs from the system".into()));
            }
        }
        Ok(())
    }

    pub fn solve_potential(&self, c: &[DGField], t: f64) -> Result<DGField> {
        self.check_state(c)?;
        let charge = ChargeDensity::new(self.rho0.as_ref(), &self.charges, c);
        self.poisson.solve(&charge, &self.boundary_at(t))
    }

    pub fn boundary_at(&self, t: f64) -> PoissonBoundary {
        self.potential.at(t, self.mesh.a(), self.mesh.b())
    }

    fn boundary_potential(&self, psi: &DGField) -> BoundaryPotential {
        match self.potential {
            PotentialBoundary::Dirichlet { psi_l, psi_r } => BoundaryPotential {
                left: psi_l,
                right: psi_r,
            },
            PotentialBoundary::NeumannPinned { .. } => {
                let b = self.transport.basis();
                BoundaryPotential {
                    left: dot(&b.left, psi.cell(0)),
                    right: dot(&b.right, psi.cell(psi.cells() - 1)),
                }
            }
        }
    }

    /// Limit every species in place; returns per-species counts of modified cells.
    pub fn limit(&self, c: &mut [DGField], step: usize) -> Result<Vec<usize>> {
        c.iter_mut()
            .enumerate()
            .map(|(i, f)| limit_field(f, &self.disc.limiter, i, step))
            .collect()
    }

    pub fn chemical_potentials(&self, c: &[DGField], psi: &DGField) -> Result<Vec<DGField>> {
        c.iter()
            .zip(&self.charges)
            .enumerate()
            .map(|(i, (ci, q))| compute_p_species(ci, psi, *q, self.table(), i))
            .collect()
    }

    /// `L(a)`: potential, chemical potentials and coefficient rates at time `t`.
    pub fn evaluate(&self, c: &[DGField], t: f64) -> Result<StageEval> {
        let psi = self.solve_potential(c, t)?;
        let potentials = self.chemical_potentials(c, &psi)?;
        let bp = self.boundary_potential(&psi);
        let inputs: Vec<SpeciesInput<'_>> = self
            .species
            .iter()
            .zip(c)
            .zip(&potentials)
            .map(|((s, ci), pi)| SpeciesInput {
                c: ci,
                p: pi,
                charge: s.charge,
                boundary: s.boundary,
                source: s.source.as_ref(),
            })
            .collect();
        let work = c.len() * self.mesh.cells() * (self.disc.degree + 1);
        let rates = if c.len() > 1 && work >= PARALLEL_WORK_THRESHOLD {
            inputs
                .par_iter()
                .map(|inp| self.transport.rhs(inp, bp, t))
                .collect::<Result<Vec<_>>>()?
        } else {
            inputs
                .iter()
                .map(|inp| self.transport.rhs(inp, bp, t))
                .collect::<Result<Vec<_>>>()?
        };
        Ok(StageEval { psi, potentials, rates })
    }

    /// Discrete free energy of a state with its potential at time `t`.
    pub fn free_energy(&self, c: &[DGField], psi: &DGField, t: f64) -> Result<f64> {
        let (sigma_a, sigma_b) = match self.boundary_at(t) {
            PoissonBoundary::NeumannPinned { sigma_a, sigma_b, .. } => (sigma_a, sigma_b),
            PoissonBoundary::Dirichlet { psi_l, psi_r } => {
                let b = self.transport.basis();
                let h = self.h;
                let n = psi.cells();
                let beta0 = self.disc.beta0_psi;
                let left = dirichlet_value_flux(
                    BoundarySide::Left,
                    dot(&b.left, psi.cell(0)),
                    2.0 / h * dot(&b.d1_left, psi.cell(0)),
                    psi_l,
                    beta0,
                    h,
                );
                let right = dirichlet_value_flux(
                    BoundarySide::Right,
                    dot(&b.right, psi.cell(n - 1)),
                    2.0 / h * dot(&b.d1_right, psi.cell(n - 1)),
                    psi_r,
                    beta0,
                    h,
                );
                (left, right)
            }
        };
        free_energy(
            c,
            &self.charges,
            psi,
            self.rho0.as_ref(),
            sigma_a,
            sigma_b,
            self.table(),
        )
    }

    /// `Σ_i A_{c_i}(p_i, p_i)`.
    pub fn dissipation(&self, c: &[DGField], p: &[DGField]) -> f64 {
        c.iter()
            .zip(p)
            .map(|(ci, pi)| self.transport.bilinear_am(ci, pi, pi))
            .sum()
    }

    fn stage(&self, base: &[DGField], rates: &[DGField], dt: f64) -> Vec<DGField> {
        base.iter()
            .zip(rates)
            .map(|(b, r)| {
                let mut out = b.clone();
                out.axpy(dt, r);
                out
            })
            .collect()
    }

    fn add_counts(total: &mut [usize], more: &[usize]) {
        for (t, m) in total.iter_mut().zip(more) {
            *t += m;
        }
    }

    /// Advance a limited state whose first-stage evaluation is already known.
    fn advance(
        &self,
        a0: &[DGField],
        first: &StageEval,
        t: f64,
        dt: f64,
        scheme: Scheme,
        step: usize,
    ) -> Result<StepOutcome> {
        let mut limited = vec![0; a0.len()];
        let c_new = match scheme {
            Scheme::Euler => {
                let mut a1 = self.stage(a0, &first.rates, dt);
                Self::add_counts(&mut limited, &self.limit(&mut a1, step)?);
                a1
            }
            Scheme::Rk2 => {
                let mut a1 = self.stage(a0, &first.rates, dt);
                Self::add_counts(&mut limited, &self.limit(&mut a1, step)?);
                let l1 = self.evaluate(&a1, t + dt)?;
                let a_star = self.stage(&a1, &l1.rates, dt);
                let mut out = heun_average(a0, &a_star);
                Self::add_counts(&mut limited, &self.limit(&mut out, step)?);
                out
            }
            Scheme::SspRk3 => {
                let mut a1 = self.stage(a0, &first.rates, dt);
                Self::add_counts(&mut limited, &self.limit(&mut a1, step)?);
                let l1 = self.evaluate(&a1, t + dt)?;
                let mut a2 = self.stage(&a1, &l1.rates, dt);
                for (x, y) in a2.iter_mut().zip(a0) {
                    x.combine(0.25, 0.75, y);
                }
                Self::add_counts(&mut limited, &self.limit(&mut a2, step)?);
                let l2 = self.evaluate(&a2, t + 0.5 * dt)?;
                let mut out = self.stage(&a2, &l2.rates, dt);
                for (x, y) in out.iter_mut().zip(a0) {
                    x.combine(2.0 / 3.0, 1.0 / 3.0, y);
                }
                Self::add_counts(&mut limited, &self.limit(&mut out, step)?);
                out
            }
        };
        for (i, c) in c_new.iter().enumerate() {
            if !c.is_finite() {
                return Err(DgError::NonFinite {
                    x: t + dt,
                    value: i as f64,
                });
            }
        }
        Ok(StepOutcome {
            state: PnpState {
                time: t + dt,
                concentrations: c_new,
            },
            limited,
        })
    }

    /// One step of the given scheme from `state`, limiting it first.
    pub fn step(&self, state: &PnpState, dt: f64, scheme: Scheme, step: usize) -> Result<StepOutcome> {
        self.check_state(&state.concentrations)?;
        let mut a0 = state.concentrations.clone();
        let pre = self.limit(&mut a0, step)?;
        let first = self.evaluate(&a0, state.time)?;
        let mut out = self.advance(&a0, &first, state.time, dt, scheme, step)?;
        Self::add_counts(&mut out.limited, &pre);
        Ok(out)
    }

    pub fn step_euler(&self, state: &PnpState, dt: f64) -> Result<PnpState> {
        Ok(self.step(state, dt, Scheme::Euler, 0)?.state)
    }

    pub fn step_rk2(&self, state: &PnpState, dt: f64) -> Result<PnpState> {
        Ok(self.step(state, dt, Scheme::Rk2, 0)?.state)
    }

    pub fn step_ssprk3(&self, state: &PnpState, dt: f64) -> Result<PnpState> {
        Ok(self.step(state, dt, Scheme::SspRk3, 0)?.state)
    }

    fn record(&self, step: usize, state: &PnpState, eval: &StageEval, limited: &[usize]) -> Result<TraceRecord> {
        let c = &state.concentrations;
        let min_avg = c.iter().flat_map(|f| f.cell_averages()).fold(f64::INFINITY, f64::min);
        Ok(TraceRecord {
            step,
            time: state.time,
            masses: c.iter().map(DGField::total_mass).collect(),
            free_energy: self.free_energy(c, &eval.psi, state.time)?,
            dissipation: self.dissipation(c, &eval.potentials),
            min_cell_average: min_avg,
            limited_cells: limited.to_vec(),
        })
    }

    pub fn integrate(&self, state0: PnpState, cfg: &StepperConfig) -> Result<Integration> {
        self.integrate_with(state0, cfg, |_, _, _| Ok(()))
    }

    /// Run to `cfg.final_time`. `observer(step, state, eval)` sees every stored state
    /// together with its potential, including the initial and final ones.
    pub fn integrate_with<F>(&self, state0: PnpState, cfg: &StepperConfig, mut observer: F) -> Result<Integration>
    where
        F: FnMut(usize, &PnpState, &StageEval) -> Result<()>,
    {
        cfg.validate()?;
        self.check_state(&state0.concentrations)?;
        let t0 = state0.time;
        let t_end = t0 + cfg.final_time;
        let dt = self.time_step(cfg.mu);
        let wrap = |time: f64| {
            move |e: DgError| DgError::AtTime {
                time,
                source: Box::new(e),
            }
        };

        let mut state = state0;
        let mut limited = self.limit(&mut state.concentrations, 0).map_err(wrap(t0))?;
        let initial_mass: Vec<f64> = state.concentrations.iter().map(DGField::total_mass).collect();
        let mut diag = RunDiagnostics {
            steps: 0,
            time_step: dt,
            max_energy_increase: f64::NEG_INFINITY,
            max_relative_mass_drift: vec![0.0; initial_mass.len()],
            min_cell_average: f64::INFINITY,
            total_limited: limited.iter().sum(),
        };
        let mut trace = EnergyTrace::default();
        let mut previous_energy: Option<f64> = None;
        let mut step = 0usize;
        loop {
            let eval = self
                .evaluate(&state.concentrations, state.time)
                .map_err(wrap(state.time))?;
            let done = t_end - state.time <= 1e-12 * dt.max(t_end.abs() * f64::EPSILON);
            let rec = self.record(step, &state, &eval, &limited).map_err(wrap(state.time))?;
            if let Some(prev) = previous_energy {
                diag.max_energy_increase = diag.max_energy_increase.max(rec.free_energy - prev);
            }
            previous_energy = Some(rec.free_energy);
            for ((d, m), m0) in diag
                .max_relative_mass_drift
                .iter_mut()
                .zip(&rec.masses)
                .zip(&initial_mass)
            {
                let scale = if m0.abs() > 0.0 { m0.abs() } else { 1.0 };
                *d = d.max((m - m0).abs() / scale);
            }
            diag.min_cell_average = diag.min_cell_average.min(rec.min_cell_average);
            observer(step, &state, &eval).map_err(wrap(state.time))?;
            if done || step.is_multiple_of(cfg.trace_every) {
                trace.records.push(rec);
            }
            if done {
                diag.steps = step;
                return Ok(Integration {
                    state,
                    psi: eval.psi,
                    trace,
                    diagnostics: diag,
                });
            }
            let remaining = t_end - state.time;
            let (h_step, last) = if remaining <= dt * (1.0 + 1e-12) {
                (remaining, true)
            } else {
                (dt, false)
            };
            let out = self
                .advance(&state.concentrations, &eval, state.time, h_step, cfg.scheme, step + 1)
                .map_err(wrap(state.time))?;
            step += 1;
            limited = out.limited;
            diag.total_limited += limited.iter().sum::<usize>();
            state = out.state;
            state.time = if last { t_end } else { t0 + step as f64 * dt };
        }
    }
}

fn heun_average(a0: &[DGField], a_star: &[DGField]) -> Vec<DGField> {
    a0.iter()
        .zip(a_star)
        .map(|(x, y)| {
            let mut out = x.clone();
            out.combine(0.5, 0.5, y);
            out
        })
        .collect()
}

/// `Σ_j ∫ [Σ_i c_i log c_i + ½ (Σ_i q_i c_i + ρ0) ψ] dx + ½ (σ_b ψ⁻(b) − σ_a ψ⁺(a))`.
pub fn free_energy(
    concentrations: &[DGField],
    charges: &[f64],
    psi: &DGField,
    rho0: Option<&Profile>,
    sigma_a: f64,
    sigma_b: f64,
    table: &BasisTable,
) -> Result<f64> {
    let mesh = psi.mesh();
    let rule = &table.rule;
    let n = psi.cells();
    let mut total = 0.0;
    for j in 0..n {
        let h = mesh.width(j);
        let mut cell = 0.0;
        for (nq, vals) in table.values.iter().enumerate() {
            let psi_v = dot(vals, psi.cell(j));
            let mut rho = rho0.map_or(0.0, |r| r.eval(0.0, mesh.map(j, rule.nodes[nq])));
            let mut entropy = 0.0;
            for (i, (c, q)) in concentrations.iter().zip(charges).enumerate() {
                let v = dot(vals, c.cell(j));
                if !(v > 0.0) {
                    return Err(DgError::NonPositive {
                        species: i,
                        cell: j,
                        value: v,
                    });
                }
                entropy += v * v.ln();
                rho += q * v;
            }
            cell += rule.weights[nq] * (entropy + 0.5 * rho * psi_v);
        }
        total += 0.5 * h * cell;
    }
    let psi_a: f64 = psi
        .cell(0)
        .iter()
        .enumerate()
        .map(|(l, v)| if l % 2 == 0 { *v } else { -v })
        .sum();
    let psi_b: f64 = psi.cell(n - 1).iter().sum();
    Ok(total + 0.5 * (sigma_b * psi_b - sigma_a * psi_a))
}

/// One diagnostic record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub time: f64,
    pub masses: Vec<f64>,
    pub free_energy: f64,
    pub dissipation: f64,
    pub min_cell_average: f64,
    /// Cells modified by the limiter per species while producing this state.
    pub limited_cells: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub records: Vec<TraceRecord>,
}

impl EnergyTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Largest `F^{n+1} − F^n` over consecutive records.
    pub fn max_energy_increase(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| w[1].free_energy - w[0].free_energy)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let m = self.records.first().map_or(0, |r| r.masses.len());
        let mut header = vec!["t".to_string()];
        header.extend((1..=m).map(|i| format!("mass_{i}")));
        header.extend(
            ["free_energy", "dissipation", "min_cell_avg", "limited_cells"]
                .iter()
                .map(|s| s.to_string()),
        );
        writeln!(out, "{}", header.join(","))?;
        for r in &self.records {
            let mut row = vec![format!("{:.16e}", r.time)];
            row.extend(r.masses.iter().map(|v| format!("{v:.16e}")));
            row.push(format!("{:.16e}", r.free_energy));
            row.push(format!("{:.16e}", r.dissipation));
            row.push(format!("{:.16e}", r.min_cell_average));
            row.push(r.limited_cells.iter().sum::<usize>().to_string());
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Per-step quantities tracked over the whole run, independent of the trace stride.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    pub steps: usize,
    pub time_step: f64,
    /// Largest single-step increase of the free energy; `-inf` when no step was taken.
    pub max_energy_increase: f64,
    pub max_relative_mass_drift: Vec<f64>,
    pub min_cell_average: f64,
    pub total_limited: usize,
}

#[derive(Debug, Clone)]
pub struct Integration {
    pub state: PnpState,
    pub psi: DGField,
    pub trace: EnergyTrace,
    pub diagnostics: RunDiagnostics,
}
