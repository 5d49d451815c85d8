use serde::{Deserialize, Serialize};

use crate::error::{DgError, Result};

const UNIFORM_RATIO_SLACK: f64 = 1e-12;

/// Partition of `[a, b]` into `N` cells `I_j = (x_{j-1/2}, x_{j+1/2})`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    edges: Vec<f64>,
    widths: Vec<f64>,
    centers: Vec<f64>,
}

/// Compact description of a uniform mesh, used in snapshot files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshDescriptor {
    pub a: f64,
    pub b: f64,
    pub cells: usize,
}

impl Mesh1D {
    pub fn uniform(a: f64, b: f64, cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(DgError::config("mesh needs at least one cell"));
        }
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(DgError::config(format!("invalid domain [{a}, {b}]")));
        }
        let h = (b - a) / cells as f64;
        let mut edges: Vec<f64> = (0..=cells).map(|i| a + h * i as f64).collect();
        edges[cells] = b;
        Self::from_edges(edges)
    }

    pub fn from_edges(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(DgError::config("mesh needs at least two edges"));
        }
        if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DgError::config("mesh edges must be finite and strictly increasing"));
        }
        let widths = edges.windows(2).map(|w| w[1] - w[0]).collect();
        let centers = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Ok(Self { edges, widths, centers })
    }

    pub fn cells(&self) -> usize {
        self.widths.len()
    }

    pub fn a(&self) -> f64 {
        self.edges[0]
    }

    pub fn b(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn width(&self, j: usize) -> f64 {
        self.widths[j]
    }

    pub fn center(&self, j: usize) -> f64 {
        self.centers[j]
    }

    pub fn is_uniform(&self) -> bool {
        let (min, max) = self
            .widths
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &w| (lo.min(w), hi.max(w)));
        max / min <= 1.0 + UNIFORM_RATIO_SLACK
    }

    /// The single width `h` of a uniform mesh; errors otherwise.
    pub fn uniform_width(&self) -> Result<f64> {
        if !self.is_uniform() {
            return Err(DgError::config(
                "the DG assembly requires a uniform mesh (single cell width h)",
            ));
        }
        Ok((self.b() - self.a()) / self.cells() as f64)
    }

    /// Physical coordinate of reference point `xi` in cell `j`.
    pub fn map(&self, j: usize, xi: f64) -> f64 {
        self.centers[j] + 0.5 * self.widths[j] * xi
    }

    /// Cell containing `x`; points on an interior edge belong to the cell on their right.
    pub fn locate(&self, x: f64) -> Result<usize> {
        if x < self.a() || x > self.b() {
            return Err(DgError::OutOfDomain {
                x,
                a: self.a(),
                b: self.b(),
            });
        }
        let idx = self.edges.partition_point(|&e| e <= x);
        Ok(idx.saturating_sub(1).min(self.cells() - 1))
    }

    pub fn descriptor(&self) -> MeshDescriptor {
        MeshDescriptor {
            a: self.a(),
            b: self.b(),
            cells: self.cells(),
        }
    }
}
