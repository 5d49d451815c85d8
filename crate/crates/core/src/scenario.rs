//! Scenario configuration, the built-in experiments and the run driver.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::basis::{gauss_rule, QuadratureRule};
use crate::error::{DgError, Result};
use crate::field::{project, DGField};
use crate::limiter::{LimiterConfig, DEFAULT_RESOLUTION};
use crate::mesh::Mesh1D;
use crate::output::{write_json, write_snapshot};
use crate::poisson::{compatibility_residual, ChargeDensity, PoissonBoundary};
use crate::profile::{poly_mul, Profile};
use crate::stepper::{
    default_mu, energy_step_constant, Discretization, Integration, PnpState, PnpSystem, PotentialBoundary,
    RunDiagnostics, Scheme, Species, StepperConfig,
};
use crate::transport::{FluxParams, SpeciesBoundary};

pub const BUILTIN_SCENARIOS: [&str; 4] = ["example1", "example2", "example3", "example4"];

pub const COMPATIBILITY_TOLERANCE: f64 = 1e-8;
pub const MASS_DRIFT_TOLERANCE: f64 = 1e-10;
pub const ENERGY_SLACK: f64 = 1e-10;

fn default_trace_every() -> usize {
    1
}

fn default_samples() -> usize {
    5
}

fn zero_flux() -> SpeciesBoundary {
    SpeciesBoundary::ZeroFlux
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesConfig {
    pub name: String,
    pub charge: f64,
    pub initial: Profile,
    #[serde(default = "zero_flux")]
    pub boundary: SpeciesBoundary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Profile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<Profile>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub scheme: Scheme,
    pub mu: f64,
    pub final_time: f64,
    #[serde(default = "default_trace_every")]
    pub trace_every: usize,
}

impl TimeConfig {
    pub fn stepper(&self) -> Result<StepperConfig> {
        let cfg = StepperConfig {
            scheme: self.scheme,
            mu: self.mu,
            final_time: self.final_time,
            trace_every: self.trace_every,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Steps between intermediate snapshots; none when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
    #[serde(default = "default_samples")]
    pub samples_per_cell: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            out_dir: None,
            snapshot_every: None,
            samples_per_cell: default_samples(),
        }
    }
}

/// Complete description of one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub domain: [f64; 2],
    pub cells: usize,
    pub degree: usize,
    pub species: Vec<SpeciesConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0: Option<Profile>,
    pub potential: PotentialBoundary,
    /// Flux pair for the chemical potentials; the per-degree default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux: Option<FluxParams>,
    /// Penalty of the potential flux; `2k²` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta0_psi: Option<f64>,
    /// Positivity floor; `min(1e-12, h^{k+2})` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limiter_delta: Option<f64>,
    pub time: TimeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_psi: Option<Profile>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Command-line style overrides applied on top of a config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub cells: Option<usize>,
    pub degree: Option<usize>,
    pub mu: Option<f64>,
    pub final_time: Option<f64>,
    pub beta0: Option<f64>,
    pub beta1: Option<f64>,
    pub scheme: Option<Scheme>,
    pub limiter_delta: Option<f64>,
    pub snapshot_every: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| DgError::config(format!("invalid config: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| DgError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(n) = o.cells {
            self.cells = n;
        }
        if let Some(k) = o.degree {
            if k != self.degree {
                self.degree = k;
                if o.beta0.is_none() && o.beta1.is_none() {
                    self.flux = None;
                }
                self.limiter_delta = self.limiter_delta.filter(|d| *d == 0.0);
                if o.mu.is_none() {
                    self.time.mu = default_mu(k);
                }
            }
        }
        if o.beta0.is_some() || o.beta1.is_some() {
            let base = self.resolved_flux().unwrap_or(FluxParams {
                beta0: 2.0 * (self.degree * self.degree).max(1) as f64,
                beta1: 0.0,
            });
            self.flux = Some(FluxParams {
                beta0: o.beta0.unwrap_or(base.beta0),
                beta1: o.beta1.unwrap_or(base.beta1),
            });
        }
        if let Some(delta) = o.limiter_delta {
            self.limiter_delta = Some(delta);
        }
        if let Some(mu) = o.mu {
            self.time.mu = mu;
        }
        if let Some(t) = o.final_time {
            self.time.final_time = t;
        }
        if let Some(s) = o.scheme {
            self.time.scheme = s;
        }
        if let Some(every) = o.snapshot_every {
            self.output.snapshot_every = Some(every);
        }
        if let Some(dir) = &o.out_dir {
            self.output.out_dir = Some(dir.clone());
        }
    }

    pub fn mesh(&self) -> Result<Arc<Mesh1D>> {
        Ok(Arc::new(Mesh1D::uniform(self.domain[0], self.domain[1], self.cells)?))
    }

    pub fn h(&self) -> f64 {
        (self.domain[1] - self.domain[0]) / self.cells as f64
    }

    pub fn resolved_flux(&self) -> Result<FluxParams> {
        match self.flux {
            Some(f) => FluxParams::new(f.beta0, f.beta1),
            None => FluxParams::default_for_degree(self.degree).ok_or_else(|| {
                DgError::config(format!(
                    "no default flux pair for k = {}; set `flux` explicitly",
                    self.degree
                ))
            }),
        }
    }

    pub fn resolved_beta0_psi(&self) -> f64 {
        self.beta0_psi
            .unwrap_or_else(|| 2.0 * (self.degree * self.degree).max(1) as f64)
    }

    pub fn resolved_limiter(&self) -> Result<LimiterConfig> {
        match self.limiter_delta {
            Some(d) => LimiterConfig::new(d),
            None => Ok(LimiterConfig::default_for(self.h(), self.degree)),
        }
    }

    pub fn discretization(&self) -> Result<Discretization> {
        Ok(Discretization {
            degree: self.degree,
            flux: self.resolved_flux()?,
            beta0_psi: self.resolved_beta0_psi(),
            limiter: LimiterConfig {
                resolution: DEFAULT_RESOLUTION,
                ..self.resolved_limiter()?
            },
        })
    }

    /// Rule used to project initial data.
    pub fn projection_rule(&self) -> Result<QuadratureRule> {
        gauss_rule(self.degree + 3)
    }

    pub fn has_exact_solution(&self) -> bool {
        self.species.iter().all(|s| s.exact.is_some())
    }

    pub fn build_system(&self) -> Result<PnpSystem> {
        self.validate()?;
        let species = self
            .species
            .iter()
            .map(|s| Species {
                name: s.name.clone(),
                charge: s.charge,
                boundary: s.boundary,
                source: s.source.clone(),
            })
            .collect();
        PnpSystem::new(
            self.mesh()?,
            species,
            self.rho0.clone(),
            self.potential.clone(),
            self.discretization()?,
        )
    }

    pub fn initial_state(&self) -> Result<PnpState> {
        let mesh = self.mesh()?;
        let rule = self.projection_rule()?;
        let concentrations = self
            .species
            .iter()
            .map(|s| project(|x| s.initial.eval(0.0, x), &mesh, self.degree, &rule))
            .collect::<Result<Vec<_>>>()?;
        Ok(PnpState {
            time: 0.0,
            concentrations,
        })
    }

    /// Structural checks plus positivity of initial data and Neumann compatibility.
    pub fn validate(&self) -> Result<()> {
        if self.species.is_empty() {
            return Err(DgError::config("scenario has no species"));
        }
        if self.degree == 0 {
            return Err(DgError::config("degree k must be at least 1"));
        }
        self.resolved_flux()?;
        self.time.stepper()?;
        self.resolved_limiter()?;
        let mesh = self.mesh()?;
        let rule = self.projection_rule()?;
        for s in &self.species {
            for j in 0..mesh.cells() {
                for &node in &rule.nodes {
                    let x = mesh.map(j, node);
                    let v = s.initial.eval(0.0, x);
                    if !(v >= 0.0) {
                        return Err(DgError::config(format!(
                            "initial data of `{}` is negative ({v}) at x = {x}",
                            s.name
                        )));
                    }
                }
            }
            if let SpeciesBoundary::Dirichlet { c_left, c_right } = s.boundary {
                if !(c_left > 0.0 && c_right > 0.0) {
                    return Err(DgError::config(format!(
                        "Dirichlet data of `{}` must be positive",
                        s.name
                    )));
                }
            }
        }
        let residual = self.compatibility_residual()?;
        if let Some(r) = residual {
            if r.abs() > COMPATIBILITY_TOLERANCE {
                return Err(DgError::config(format!(
                    "Neumann data are incompatible: ∫ρ dx − σ_a + σ_b = {r:e}"
                )));
            }
        }
        Ok(())
    }

    /// Compatibility residual of the initial data, `None` for Dirichlet potentials.
    pub fn compatibility_residual(&self) -> Result<Option<f64>> {
        let mesh = self.mesh()?;
        match self.potential.at(0.0, mesh.a(), mesh.b()) {
            PoissonBoundary::Dirichlet { .. } => Ok(None),
            PoissonBoundary::NeumannPinned { sigma_a, sigma_b, .. } => {
                let state = self.initial_state()?;
                let charges: Vec<f64> = self.species.iter().map(|s| s.charge).collect();
                let charge = ChargeDensity::new(self.rho0.as_ref(), &charges, &state.concentrations);
                let rule = gauss_rule(self.degree + 6)?;
                Ok(Some(compatibility_residual(&charge, &mesh, sigma_a, sigma_b, &rule)?))
            }
        }
    }
}

fn sp(name: &str, charge: f64, initial: Profile) -> SpeciesConfig {
    SpeciesConfig {
        name: name.into(),
        charge,
        initial,
        boundary: SpeciesBoundary::ZeroFlux,
        source: None,
        exact: None,
    }
}

fn neumann(sigma_a: f64, sigma_b: f64) -> PotentialBoundary {
    PotentialBoundary::NeumannPinned {
        sigma_a: Profile::constant(sigma_a),
        sigma_b: Profile::constant(sigma_b),
        psi_a: 0.0,
    }
}

fn base(name: &str, species: Vec<SpeciesConfig>, potential: PotentialBoundary, final_time: f64) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        domain: [0.0, 1.0],
        cells: 100,
        degree: 2,
        species,
        rho0: None,
        potential,
        flux: None,
        beta0_psi: None,
        limiter_delta: None,
        time: TimeConfig {
            scheme: Scheme::Rk2,
            mu: default_mu(2),
            final_time,
            trace_every: 1,
        },
        exact_psi: None,
        output: OutputConfig::default(),
    }
}

fn scaled(coeffs: &[f64], factor: f64) -> Vec<f64> {
    coeffs.iter().map(|c| c * factor).collect()
}

/// Manufactured two-species problem with exact solution.
fn example1() -> ScenarioConfig {
    let c1 = [0.0, 0.0, 1.0, -2.0, 1.0];
    let c2 = [0.0, 0.0, 1.0, -3.0, 3.0, -1.0];
    let psi = scaled(&[0.0, 0.0, 0.0, 0.0, 0.0, 21.0, -28.0, 10.0], -1.0 / 420.0);
    let x_minus_one = [-1.0, 1.0];
    let f1 = Profile::Sum {
        terms: vec![
            Profile::exp_decay(
                2.0,
                Profile::poly(&scaled(
                    &[0.0, 0.0, 0.0, 0.0, 0.0, 45.0, -189.0, 292.0, -198.0, 50.0],
                    1.0 / 30.0,
                )),
            ),
            Profile::exp_decay(1.0, Profile::poly(&[-2.0, 12.0, -13.0, 2.0, -1.0])),
        ],
    };
    let f2 = Profile::Sum {
        terms: vec![
            Profile::exp_decay(
                2.0,
                Profile::poly(&poly_mul(
                    &x_minus_one,
                    &scaled(
                        &[0.0, 0.0, 0.0, 0.0, 0.0, 90.0, -393.0, 623.0, -430.0, 110.0],
                        1.0 / 60.0,
                    ),
                )),
            ),
            Profile::exp_decay(
                1.0,
                Profile::poly(&poly_mul(&x_minus_one, &[2.0, -16.0, 21.0, -2.0, 1.0])),
            ),
        ],
    };
    let mut s1 = sp("c1", 1.0, Profile::poly(&c1));
    s1.source = Some(f1);
    s1.exact = Some(Profile::exp_decay(1.0, Profile::poly(&c1)));
    let mut s2 = sp("c2", -1.0, Profile::poly(&c2));
    s2.source = Some(f2);
    s2.exact = Some(Profile::exp_decay(1.0, Profile::poly(&c2)));
    let mut cfg = base(
        "example1",
        vec![s1, s2],
        PotentialBoundary::NeumannPinned {
            sigma_a: Profile::zero(),
            sigma_b: Profile::exp_decay(1.0, Profile::constant(-1.0 / 60.0)),
            psi_a: 0.0,
        },
        1.0,
    );
    cfg.exact_psi = Some(Profile::exp_decay(1.0, Profile::poly(&psi)));
    cfg
}

fn example2() -> ScenarioConfig {
    use std::f64::consts::PI;
    base(
        "example2",
        vec![
            sp(
                "c1",
                1.0,
                Profile::Sine {
                    offset: 1.0,
                    amplitude: PI,
                    frequency: PI,
                },
            ),
            sp("c2", -1.0, Profile::poly(&[4.0, -2.0])),
        ],
        neumann(0.0, 0.0),
        1.0,
    )
}

fn example3() -> ScenarioConfig {
    let mut cfg = base(
        "example3",
        vec![
            sp("c1", 1.0, Profile::poly(&[5.0, -12.0, 12.0])),
            sp("c2", -2.0, Profile::poly(&[1.0, 2.0])),
        ],
        neumann(0.0, 0.0),
        1.0,
    );
    cfg.rho0 = Some(Profile::poly(&[3.0, -12.0, 12.0]));
    cfg
}

fn example4() -> ScenarioConfig {
    base(
        "example4",
        vec![sp("c", 1.0, Profile::poly(&[2.0, -1.0]))],
        neumann(0.0, -1.5),
        1.0,
    )
}

pub fn builtin_scenario(name: &str) -> Result<ScenarioConfig> {
    match name {
        "example1" => Ok(example1()),
        "example2" => Ok(example2()),
        "example3" => Ok(example3()),
        "example4" => Ok(example4()),
        other => Err(DgError::config(format!(
            "unknown scenario `{other}`; available: {}",
            BUILTIN_SCENARIOS.join(", ")
        ))),
    }
}

pub fn describe_scenario(name: &str) -> &'static str {
    match name {
        "example1" => "two species with sources and an exact solution (convergence tests)",
        "example2" => "two monovalent species relaxing to the constant steady state 3",
        "example3" => "non-monovalent pair (q = 1, -2) with fixed charge 12(x - 0.5)^2",
        "example4" => "single species attracted to x = 1 by the boundary field",
        _ => "",
    }
}

/// Run-time options that do not change the physics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub strict: bool,
    /// Skip writing files; useful for library callers and tests.
    pub dry_run: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub parameters: ScenarioConfig,
    pub flux: FluxParams,
    pub beta0_psi: f64,
    pub limiter_delta: f64,
    pub time_step: f64,
    pub energy_step_constant: f64,
    pub compatibility_residual: Option<f64>,
    pub wall_time_seconds: f64,
    pub diagnostics: RunDiagnostics,
    pub mass_checked: bool,
    pub energy_checked: bool,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub summary: RunSummary,
    pub integration: Integration,
    pub out_dir: Option<PathBuf>,
}

impl RunReport {
    pub fn has_violations(&self) -> bool {
        !self.summary.violations.is_empty()
    }
}

fn field_names(cfg: &ScenarioConfig) -> Vec<String> {
    cfg.species.iter().map(|s| s.name.clone()).collect()
}

fn snapshot_fields<'a>(names: &'a [String], c: &'a [DGField], psi: &'a DGField) -> Vec<(&'a str, &'a DGField)> {
    let mut out: Vec<(&str, &DGField)> = names.iter().map(String::as_str).zip(c.iter()).collect();
    out.push(("psi", psi));
    out
}

/// Integrate a scenario and write its artifacts.
pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunReport> {
    let started = Instant::now();
    let system = cfg.build_system()?;
    let stepper = cfg.time.stepper()?;
    let state0 = cfg.initial_state()?;
    let compat = cfg.compatibility_residual()?;
    let out_dir = if opts.dry_run {
        None
    } else {
        let dir = opts
            .out_dir
            .clone()
            .or_else(|| cfg.output.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("pnpdg-out").join(&cfg.name));
        fs::create_dir_all(&dir)?;
        Some(dir)
    };
    let names = field_names(cfg);
    let samples = cfg.output.samples_per_cell;
    let snapshot_every = cfg.output.snapshot_every.filter(|n| *n > 0);
    let integration = system.integrate_with(state0, &stepper, |step, state, eval| {
        if let Some(dir) = &out_dir {
            let fields = snapshot_fields(&names, &state.concentrations, &eval.psi);
            if step == 0 {
                write_snapshot(dir, "initial", state.time, step, &fields, samples)?;
            } else if snapshot_every.is_some_and(|n| step % n == 0) {
                write_snapshot(dir, &format!("step{step:08}"), state.time, step, &fields, samples)?;
            }
        }
        Ok(())
    })?;

    let diag = integration.diagnostics.clone();
    let mass_checked = system.conserves_mass();
    let energy_checked = system.is_autonomous_and_closed();
    let mut violations = Vec::new();
    if mass_checked {
        for (name, drift) in names.iter().zip(&diag.max_relative_mass_drift) {
            if *drift > MASS_DRIFT_TOLERANCE {
                violations.push(format!("relative mass drift of {name} reached {drift:e}"));
            }
        }
    }
    if energy_checked && diag.max_energy_increase > ENERGY_SLACK {
        violations.push(format!(
            "free energy increased by {:e} in a single step",
            diag.max_energy_increase
        ));
    }
    for v in &violations {
        log::warn!("{}: {v}", cfg.name);
    }

    let disc = system.discretization();
    let summary = RunSummary {
        scenario: cfg.name.clone(),
        parameters: cfg.clone(),
        flux: disc.flux,
        beta0_psi: disc.beta0_psi,
        limiter_delta: disc.limiter.delta,
        time_step: system.time_step(stepper.mu),
        energy_step_constant: energy_step_constant(cfg.degree, disc.flux.beta0),
        compatibility_residual: compat,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        diagnostics: diag,
        mass_checked,
        energy_checked,
        violations,
    };

    if let Some(dir) = &out_dir {
        let mut w = BufWriter::new(fs::File::create(dir.join("trace.csv"))?);
        integration.trace.write_csv(&mut w)?;
        w.flush()?;
        let fields = snapshot_fields(&names, &integration.state.concentrations, &integration.psi);
        write_snapshot(
            dir,
            "final",
            integration.state.time,
            integration.diagnostics.steps,
            &fields,
            samples,
        )?;
        write_json(&dir.join("summary.json"), &summary)?;
    }
    Ok(RunReport {
        summary,
        integration,
        out_dir,
    })
}
