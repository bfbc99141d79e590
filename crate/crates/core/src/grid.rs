//! Uniform staggered grid on the unit torus and its discrete calculus.
//!
//! Cell values `u_i` sit at `x_i = i·dx`; gradients and fluxes live on the
//! interfaces `x_{i+1/2}`. The forward difference and the backward divergence
//! are exact negative adjoints of each other under `⟨a, b⟩ = dx·Σ a_i b_i`,
//! which is what turns the discrete evolution into the exact gradient flow of
//! the discrete energy.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("periodic grid needs at least 3 cells, got {0}")]
    TooFewCells(usize),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("fields live on different grids ({0} vs {1} cells)")]
    GridMismatch(usize, usize),
    #[error("csv line {line}: {msg}")]
    Csv { line: usize, msg: String },
}

/// `n` cells of width `1/n` covering `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    n: usize,
}

impl PeriodicGrid {
    pub fn new(n: usize) -> Result<Self, GridError> {
        if n < 3 {
            return Err(GridError::TooFewCells(n));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Cell position `i·dx`.
    pub fn cell(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    /// Interface position `(i + 1/2)·dx`.
    pub fn interface(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx()
    }
}

fn check_values(n: usize, values: &[f64]) -> Result<(), GridError> {
    if values.len() != n {
        return Err(GridError::LengthMismatch {
            expected: n,
            got: values.len(),
        });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(GridError::NonFinite(i));
    }
    Ok(())
}

/// Cell-centred samples of a function on the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self, GridError> {
        check_values(grid.n(), &values)?;
        Ok(Self { grid, values })
    }

    /// Samples `f(i·dx)`. Panics if `f` produces a non-finite value.
    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = (0..grid.n()).map(|i| f(grid.cell(i))).collect();
        Self::new(grid, values).expect("sampled function must be finite")
    }

    pub fn constant(grid: PeriodicGrid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.n()],
        }
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn from_raw(grid: PeriodicGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        Self { grid, values }
    }

    /// `dx·Σ u_i`.
    pub fn mean(&self) -> f64 {
        self.grid.dx() * self.values.iter().sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.grid.dx() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// `‖u - ū‖_{L²}`.
    pub fn l2_distance_to_mean(&self) -> f64 {
        let m = self.mean();
        (self.grid.dx() * self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>()).sqrt()
    }

    pub fn l2_distance(&self, other: &Field) -> Result<f64, GridError> {
        self.same_grid(other)?;
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok((self.grid.dx() * s).sqrt())
    }

    /// `⟨u, v⟩ = dx·Σ u_i v_i`.
    pub fn inner(&self, other: &Field) -> Result<f64, GridError> {
        self.same_grid(other)?;
        Ok(self.grid.dx() * dot(&self.values, &other.values))
    }

    /// Discrete total variation `Σ |u_{i+1} - u_i|`.
    pub fn total_variation(&self) -> f64 {
        let n = self.values.len();
        (0..n)
            .map(|i| (self.values[(i + 1) % n] - self.values[i]).abs())
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Cyclic shift by `k` cells: `(shifted)_i = u_{i+k}`.
    pub fn rotate(&self, k: usize) -> Field {
        let mut values = self.values.clone();
        values.rotate_left(k % self.values.len());
        Field::from_raw(self.grid, values)
    }

    fn same_grid(&self, other: &Field) -> Result<(), GridError> {
        if self.grid != other.grid {
            return Err(GridError::GridMismatch(self.grid.n(), other.grid.n()));
        }
        Ok(())
    }

    /// CSV with header `x,u`; numbers at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(48 * self.len() + 4);
        out.push_str("x,u\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{}\n", fmt_num(self.grid.cell(i)), fmt_num(*v)));
        }
        out
    }

    /// Reads the `x,u` layout written by [`Field::to_csv`]. The grid size is
    /// the row count; `x` values are checked against `i·dx`.
    pub fn from_csv(text: &str) -> Result<Self, GridError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, header)) if header.trim().replace(' ', "") == "x,u" => {}
            Some((i, _)) => {
                return Err(GridError::Csv {
                    line: i + 1,
                    msg: "expected header `x,u`".into(),
                })
            }
            None => {
                return Err(GridError::Csv {
                    line: 1,
                    msg: "empty file".into(),
                })
            }
        }
        let mut xs = Vec::new();
        let mut us = Vec::new();
        for (i, line) in lines {
            let mut cols = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64, GridError> {
                s.map(str::trim)
                    .ok_or_else(|| GridError::Csv {
                        line: i + 1,
                        msg: "missing column".into(),
                    })?
                    .parse::<f64>()
                    .map_err(|e| GridError::Csv {
                        line: i + 1,
                        msg: e.to_string(),
                    })
            };
            xs.push(parse(cols.next())?);
            us.push(parse(cols.next())?);
        }
        let grid = PeriodicGrid::new(us.len())?;
        for (i, x) in xs.iter().enumerate() {
            if (x - grid.cell(i)).abs() > 1e-9 {
                return Err(GridError::Csv {
                    line: i + 2,
                    msg: format!("x = {x} does not match uniform grid point {}", grid.cell(i)),
                });
            }
        }
        Field::new(grid, us)
    }
}

/// Interface-located samples: gradients `p = u_x` and fluxes `ξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualField {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

impl DualField {
    pub fn new(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self, GridError> {
        check_values(grid.n(), &values)?;
        Ok(Self { grid, values })
    }

    pub(crate) fn from_raw(grid: PeriodicGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        Self { grid, values }
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `dx·Σ |g_i|`.
    pub fn l1_norm(&self) -> f64 {
        self.grid.dx() * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    pub fn inner(&self, other: &DualField) -> Result<f64, GridError> {
        if self.grid != other.grid {
            return Err(GridError::GridMismatch(self.grid.n(), other.grid.n()));
        }
        Ok(self.grid.dx() * dot(&self.values, &other.values))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Formats with 17 significant digits, which round-trips every `f64`.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// `p_i = (u_{i+1} - u_i)/dx` with periodic wrap.
pub fn forward_diff(u: &Field) -> DualField {
    let grid = u.grid();
    DualField::from_raw(grid, forward_diff_slice(u.values(), grid.dx()))
}

/// `d_i = (ξ_i - ξ_{i-1})/dx` with periodic wrap.
pub fn backward_div(xi: &DualField) -> Field {
    let grid = xi.grid();
    Field::from_raw(grid, backward_div_slice(xi.values(), grid.dx()))
}

pub(crate) fn forward_diff_slice(u: &[f64], dx: f64) -> Vec<f64> {
    let n = u.len();
    (0..n).map(|i| (u[(i + 1) % n] - u[i]) / dx).collect()
}

pub(crate) fn backward_div_slice(xi: &[f64], dx: f64) -> Vec<f64> {
    let n = xi.len();
    (0..n).map(|i| (xi[i] - xi[(i + n - 1) % n]) / dx).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldNorms {
    pub mean: f64,
    pub l2_norm: f64,
    /// Discrete total variation `dx·Σ|p_i|`.
    pub l1_norm_of_gradient: f64,
}

pub fn norms_and_mean(u: &Field) -> FieldNorms {
    FieldNorms {
        mean: u.mean(),
        l2_norm: u.l2_norm(),
        l1_norm_of_gradient: forward_diff(u).l1_norm(),
    }
}
