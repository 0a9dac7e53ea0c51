//! Continuous algebraic Riccati equation
//! `Aᵀ X + X A - X B R⁻¹ Bᵀ X + Q = 0` for the LQR state-feedback gain used
//! to initialize the co-design iteration.
//!
//! The stabilizing solution comes from the matrix sign function of the
//! Hamiltonian (scaled Newton iteration), polished by Newton–Kleinman steps.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::h2::ClosedLoop;
use crate::plant::Plant;
use crate::schur::symmetrize;

#[derive(Debug, Clone)]
pub struct LqrSolution {
    /// `F = R⁻¹ B2ᵀ X`; `A - B2 F` is Hurwitz.
    pub gain: DMatrix<f64>,
    /// Stabilizing Riccati solution `X`.
    pub riccati: DMatrix<f64>,
}

const SIGN_MAX_ITER: usize = 100;
const SIGN_TOL: f64 = 1e-13;
const KLEINMAN_STEPS: usize = 6;

fn log_abs_det(lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    let u = lu.u();
    (0..u.nrows()).map(|i| u[(i, i)].abs().ln()).sum()
}

fn matrix_sign(h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let dim = h.nrows() as f64;
    let mut z = h.clone();
    let mut scale = true;
    for _ in 0..SIGN_MAX_ITER {
        let lu = z.clone().lu();
        let c = if scale {
            (-log_abs_det(&lu) / dim).exp()
        } else {
            1.0
        };
        let inv = lu.try_inverse().ok_or_else(|| {
            Error::NoStabilizingInitialization(
                "Hamiltonian has eigenvalues on the imaginary axis".into(),
            )
        })?;
        let next = (&z * c + inv / c) * 0.5;
        let change = (&next - &z).norm() / next.norm();
        z = next;
        if change < 1e-2 {
            scale = false;
        }
        if change < SIGN_TOL {
            return Ok(z);
        }
    }
    // accept a slowly stagnating iterate; Kleinman polishing follows
    if z.iter().all(|v| v.is_finite()) {
        Ok(z)
    } else {
        Err(Error::NoStabilizingInitialization("sign iteration diverged".into()))
    }
}

fn gain_from(plant: &Plant, r_inv: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    r_inv * plant.b2.transpose() * x
}

/// Stabilizing LQR gain for `(A, B2, Q, R)`.
pub fn lqr(plant: &Plant) -> Result<LqrSolution> {
    let n = plant.states();
    let r_inv = plant
        .r
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidPlant("R not positive definite".into()))?
        .inverse();
    let g = &plant.b2 * &r_inv * plant.b2.transpose();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&plant.a);
    h.view_mut((0, n), (n, n)).copy_from(&(-&g));
    h.view_mut((n, 0), (n, n)).copy_from(&(-&plant.q));
    h.view_mut((n, n), (n, n)).copy_from(&(-plant.a.transpose()));

    let w = matrix_sign(&h)?;
    let eye = DMatrix::<f64>::identity(n, n);
    let mut lhs = DMatrix::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&w.view((0, n), (n, n)));
    lhs.view_mut((n, 0), (n, n)).copy_from(&(w.view((n, n), (n, n)) + &eye));
    let mut rhs = DMatrix::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n)).copy_from(&(-(w.view((0, 0), (n, n)) + &eye)));
    rhs.view_mut((n, 0), (n, n)).copy_from(&(-w.view((n, 0), (n, n))));
    let x = lhs
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::NoStabilizingInitialization(e.into()))?;
    let mut x = symmetrize(x);

    for _ in 0..KLEINMAN_STEPS {
        let f = gain_from(plant, &r_inv, &x);
        let Some(cl) = ClosedLoop::new(plant, &f)? else {
            break;
        };
        let next = cl.observability(plant, &f)?;
        let change = (&next - &x).norm() / (1.0 + next.norm());
        x = next;
        if change < 1e-15 {
            break;
        }
    }
    let gain = gain_from(plant, &r_inv, &x);
    if ClosedLoop::new(plant, &gain)?.is_none() {
        return Err(Error::NoStabilizingInitialization(
            "LQR gain does not stabilize the plant (not stabilizable?)".into(),
        ));
    }
    Ok(LqrSolution { gain, riccati: x })
}

/// `‖Aᵀ X + X A - X B R⁻¹ Bᵀ X + Q‖_F`.
pub fn riccati_residual(plant: &Plant, x: &DMatrix<f64>) -> f64 {
    let Some(r_inv) = plant.r.clone().try_inverse() else {
        return f64::NAN;
    };
    let g = &plant.b2 * r_inv * plant.b2.transpose();
    (plant.a.transpose() * x + x * &plant.a - x * g * x + &plant.q).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_lqr() {
        // a = 1, b = 1, q = 1, r = 1: 2x - x^2 + 1 = 0 -> x = 1 + sqrt(2)
        let one = || DMatrix::from_element(1, 1, 1.0);
        let plant = Plant::new(one(), one(), one(), one(), one(), 1);
        let sol = lqr(&plant).unwrap();
        assert!((sol.riccati[(0, 0)] - (1.0 + 2f64.sqrt())).abs() < 1e-12);
        assert!((sol.gain[(0, 0)] - (1.0 + 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn unstabilizable_fails() {
        let plant = Plant::new(
            DMatrix::identity(2, 2),
            DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
            DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
            DMatrix::identity(2, 2),
            DMatrix::identity(1, 1),
            2,
        );
        assert!(matches!(lqr(&plant), Err(Error::NoStabilizingInitialization(_))));
    }
}
