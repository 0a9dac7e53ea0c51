//! Dense solvers for the continuous Lyapunov equation and for the
//! Sylvester-type feedback equation `2(R F - G) L + c (F - Z) = 0`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::plant::STABILITY_MARGIN;
use crate::schur::RealSchur;

/// Transformed pivots `2 λ_i μ_j + c` at or below this value are singular.
pub const FEEDBACK_PIVOT_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct LyapunovSolution {
    pub x: DMatrix<f64>,
    /// `‖M X + X Mᵀ + W‖_F`.
    pub residual_norm: f64,
}

/// Solves `M X + X Mᵀ = -W` for a Hurwitz `M` and symmetric `W`.
pub fn solve_lyapunov(m: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<LyapunovSolution> {
    let n = m.nrows();
    if !m.is_square() || w.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "Lyapunov coefficient {}x{} with right-hand side {}x{}",
            m.nrows(),
            m.ncols(),
            w.nrows(),
            w.ncols()
        )));
    }
    let schur = RealSchur::new(m.clone())?;
    if schur.spectral_abscissa() >= -STABILITY_MARGIN {
        return Err(Error::UnstableCoefficient(schur.spectral_abscissa()));
    }
    let x = schur.lyapunov(w)?;
    let residual_norm = (m * &x + &x * m.transpose() + w).norm();
    Ok(LyapunovSolution { x, residual_norm })
}

/// Feedback-equation solver with the eigendecomposition of `R` computed once.
#[derive(Debug, Clone)]
pub struct FeedbackSolver {
    r_vectors: DMatrix<f64>,
    r_values: Vec<f64>,
}

impl FeedbackSolver {
    pub fn new(r: &DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(r.clone());
        FeedbackSolver {
            r_vectors: eig.eigenvectors,
            r_values: eig.eigenvalues.iter().copied().collect(),
        }
    }

    /// Solves `2(R F - G) L + c (F - Z) = 0` for `F`.
    pub fn solve(
        &self,
        l: &DMatrix<f64>,
        g: &DMatrix<f64>,
        c: f64,
        z: &DMatrix<f64>,
    ) -> Result<DMatrix<f64>> {
        let m = self.r_values.len();
        let n = l.nrows();
        if !l.is_square() || g.shape() != (m, n) || z.shape() != (m, n) {
            return Err(Error::DimensionMismatch(format!(
                "feedback equation with R {m}x{m}, L {}x{}, G {}x{}, Z {}x{}",
                l.nrows(),
                l.ncols(),
                g.nrows(),
                g.ncols(),
                z.nrows(),
                z.ncols()
            )));
        }
        let eig = SymmetricEigen::new(l.clone());
        let v = &eig.eigenvectors;
        let u = &self.r_vectors;
        let rhs = g * l * 2.0 + z * c;
        let mut f = u.transpose() * rhs * v;
        for j in 0..n {
            let mu = eig.eigenvalues[j];
            for i in 0..m {
                let pivot = 2.0 * self.r_values[i] * mu + c;
                if pivot <= FEEDBACK_PIVOT_FLOOR {
                    return Err(Error::SingularFeedbackEquation(pivot));
                }
                f[(i, j)] /= pivot;
            }
        }
        Ok(u * f * v.transpose())
    }
}

/// Solves `2(R F - G) L + c (F - Z) = 0` for `F` by diagonalizing `R` and `L`.
pub fn solve_feedback_equation(
    r: &DMatrix<f64>,
    l: &DMatrix<f64>,
    g: &DMatrix<f64>,
    c: f64,
    z: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    if !r.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "R is {}x{}",
            r.nrows(),
            r.ncols()
        )));
    }
    FeedbackSolver::new(r).solve(l, g, c, z)
}

/// `‖2(R F - G) L + c (F - Z)‖_F`.
pub fn feedback_residual(
    r: &DMatrix<f64>,
    l: &DMatrix<f64>,
    g: &DMatrix<f64>,
    c: f64,
    z: &DMatrix<f64>,
    f: &DMatrix<f64>,
) -> f64 {
    ((r * f - g) * l * 2.0 + (f - z) * c).norm()
}
