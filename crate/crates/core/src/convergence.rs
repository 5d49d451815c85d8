//! Mesh-refinement studies against a manufactured solution.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DgError, Result};
use crate::field::{l1_error, l1_rule};
use crate::scenario::{run_scenario, RunOptions, ScenarioConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub cells: usize,
    pub h: f64,
    pub errors: Vec<f64>,
    /// `log2(err(2h)/err(h))`; `None` on the first row or when an error vanishes.
    pub orders: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub scenario: String,
    pub degree: usize,
    pub beta0: f64,
    pub beta1: f64,
    pub final_time: f64,
    pub quantities: Vec<String>,
    pub rows: Vec<ConvergenceRow>,
}

/// `log2(coarse/fine)`, undefined when either error is zero or not finite.
pub fn observed_order(coarse: f64, fine: f64) -> Option<f64> {
    (coarse > 0.0 && fine > 0.0 && coarse.is_finite() && fine.is_finite()).then(|| (coarse / fine).log2())
}

impl ConvergenceReport {
    /// Assemble rows from per-mesh errors; consecutive rows are assumed to halve `h`.
    pub fn from_errors(
        scenario: &str,
        degree: usize,
        beta: (f64, f64),
        final_time: f64,
        quantities: Vec<String>,
        meshes: &[(usize, f64)],
        errors: Vec<Vec<f64>>,
    ) -> Self {
        let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(meshes.len());
        for (i, (&(cells, h), errs)) in meshes.iter().zip(errors).enumerate() {
            let orders = if i == 0 {
                vec![None; errs.len()]
            } else {
                rows[i - 1]
                    .errors
                    .iter()
                    .zip(&errs)
                    .map(|(c, f)| observed_order(*c, *f))
                    .collect()
            };
            rows.push(ConvergenceRow {
                cells,
                h,
                errors: errs,
                orders,
            });
        }
        Self {
            scenario: scenario.into(),
            degree,
            beta0: beta.0,
            beta1: beta.1,
            final_time,
            quantities,
            rows,
        }
    }

    pub fn error(&self, row: usize, quantity: &str) -> Option<f64> {
        let q = self.quantities.iter().position(|n| n == quantity)?;
        self.rows.get(row).map(|r| r.errors[q])
    }

    pub fn order(&self, row: usize, quantity: &str) -> Option<f64> {
        let q = self.quantities.iter().position(|n| n == quantity)?;
        self.rows.get(row).and_then(|r| r.orders[q])
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = vec!["k".to_string(), "beta0".into(), "beta1".into(), "h".into()];
        for q in &self.quantities {
            header.push(format!("{q}_error"));
            header.push(format!("{q}_order"));
        }
        writeln!(out, "{}", header.join(","))?;
        for r in &self.rows {
            let mut row = vec![
                self.degree.to_string(),
                format!("{}", self.beta0),
                format!("{}", self.beta1),
                format!("{:.16e}", r.h),
            ];
            for (e, o) in r.errors.iter().zip(&r.orders) {
                row.push(format!("{e:.16e}"));
                row.push(o.map(|v| format!("{v:.16e}")).unwrap_or_default());
            }
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Aligned plain-text table, one block per run in the layout of a classic error table.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let label = format!("({}, {}, {})", self.degree, self.beta0, self.beta1);
        let _ = write!(s, "{:<16} {:>8}", "(k,b0,b1)", "h");
        for q in &self.quantities {
            let _ = write!(s, " {:>13} {:>7}", format!("{q} error"), "order");
        }
        s.push('\n');
        for (i, r) in self.rows.iter().enumerate() {
            let first = if i == 0 { label.as_str() } else { "" };
            let _ = write!(s, "{:<16} {:>8.4}", first, r.h);
            for (e, o) in r.errors.iter().zip(&r.orders) {
                let order = o.map(|v| format!("{v:.4}")).unwrap_or_else(|| "--".into());
                let _ = write!(s, " {:>13.5e} {:>7}", e, order);
            }
            s.push('\n');
        }
        s
    }
}

/// Run `base` on each mesh (in parallel) and measure l1 errors at the final time.
pub fn convergence_study(base: &ScenarioConfig, cells: &[usize]) -> Result<ConvergenceReport> {
    if !base.has_exact_solution() {
        return Err(DgError::config(format!(
            "scenario `{}` has no exact solution for every species",
            base.name
        )));
    }
    if cells.is_empty() {
        return Err(DgError::config("convergence study needs at least one mesh"));
    }
    let flux = base.resolved_flux()?;
    let mut quantities: Vec<String> = base.species.iter().map(|s| s.name.clone()).collect();
    if base.exact_psi.is_some() {
        quantities.push("psi".into());
    }
    let results = cells
        .par_iter()
        .map(|&n| {
            let mut cfg = base.clone();
            cfg.cells = n;
            cfg.output.snapshot_every = None;
            cfg.time.trace_every = usize::MAX;
            let report = run_scenario(
                &cfg,
                &RunOptions {
                    dry_run: true,
                    ..Default::default()
                },
            )?;
            let t = report.integration.state.time;
            let rule = l1_rule();
            let mut errs: Vec<f64> = cfg
                .species
                .iter()
                .zip(&report.integration.state.concentrations)
                .map(|(s, c)| {
                    let exact = s.exact.as_ref().expect("checked above");
                    l1_error(c, |x| exact.eval(t, x), &rule)
                })
                .collect();
            if let Some(psi) = &cfg.exact_psi {
                errs.push(l1_error(&report.integration.psi, |x| psi.eval(t, x), &rule));
            }
            Ok(((n, cfg.h()), errs))
        })
        .collect::<Result<Vec<_>>>()?;
    let (meshes, errors): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok(ConvergenceReport::from_errors(
        &base.name,
        base.degree,
        (flux.beta0, flux.beta1),
        base.time.final_time,
        quantities,
        &meshes,
        errors,
    ))
}
