//! Cyclic tridiagonal solves via Thomas + Sherman–Morrison.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("cyclic system needs n >= 3, got {0}")]
    TooSmall(usize),
    #[error("zero pivot at row {0}")]
    ZeroPivot(usize),
    #[error("inconsistent band lengths")]
    Shape,
}

/// Symmetric cyclic tridiagonal matrix.
///
/// `diag[i] = A[i][i]`, `off[i] = A[i][i+1] = A[i+1][i]` for `i < n-1`, and
/// `off[n-1] = A[n-1][0] = A[0][n-1]` closes the cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl CyclicTridiagonal {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let prev = (i + n - 1) % n;
                let next = (i + 1) % n;
                self.diag[i] * x[i] + self.off[i] * x[next] + self.off[prev] * x[prev]
            })
            .collect()
    }

    /// Smallest Gershgorin lower bound `min_i (a_ii - Σ_{j≠i} |a_ij|)`.
    pub fn gershgorin_lower_bound(&self) -> f64 {
        let n = self.n();
        (0..n)
            .map(|i| self.diag[i] - self.off[i].abs() - self.off[(i + n - 1) % n].abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Solves `A x = rhs`.
    ///
    /// The corner entries are moved into a rank-one update `A = A' + w wᵀ/b₀`
    /// with `w = (b₀, 0, …, 0, c)`, where `c` is the corner. `A'` is then
    /// plain tridiagonal; for symmetric positive definite `A` it stays
    /// positive definite, so the unpivoted Thomas sweeps are stable.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.n();
        if n < 3 {
            return Err(LinalgError::TooSmall(n));
        }
        if self.off.len() != n || rhs.len() != n {
            return Err(LinalgError::Shape);
        }
        let corner = self.off[n - 1];
        let b0 = self.diag[0];
        if b0 == 0.0 {
            return Err(LinalgError::ZeroPivot(0));
        }
        let gamma = -b0;
        let mut diag = self.diag.clone();
        diag[0] -= gamma;
        diag[n - 1] -= corner * corner / gamma;
        let sub = &self.off[..n - 1];

        let x = thomas(sub, &diag, rhs)?;
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = corner;
        let z = thomas(sub, &diag, &u)?;

        // v = (1, 0, …, 0, corner/γ)
        let vx = x[0] + corner * x[n - 1] / gamma;
        let vz = z[0] + corner * z[n - 1] / gamma;
        let factor = vx / (1.0 + vz);
        Ok(x.iter().zip(&z).map(|(xi, zi)| xi - factor * zi).collect())
    }
}

/// Symmetric tridiagonal solve; `off` has length `n-1`.
fn thomas(off: &[f64], diag: &[f64], rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return Err(LinalgError::ZeroPivot(0));
    }
    d[0] = rhs[0] / beta;
    for i in 1..n {
        c[i - 1] = off[i - 1] / beta;
        beta = diag[i] - off[i - 1] * c[i - 1];
        if beta == 0.0 || !beta.is_finite() {
            return Err(LinalgError::ZeroPivot(i));
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / beta;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}
