//! Closed-loop H2 performance index `J(F) = trace(B1ᵀ P B1)` with its
//! Gramians and gradient. `J` is extended by +∞ off the stabilizing set.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::plant::{Plant, STABILITY_MARGIN};
use crate::schur::RealSchur;

/// Controllability Gramian `L` (driven by `B1`) and weighted observability
/// Gramian `P` (weight `Q + FᵀRF`) of the closed loop `A - B2 F`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramianPair {
    pub l: DMatrix<f64>,
    pub p: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveValue {
    Finite { value: f64, gramians: GramianPair },
    /// `F` is not stabilizing.
    Infinite,
}

impl ObjectiveValue {
    pub fn value(&self) -> Option<f64> {
        match self {
            ObjectiveValue::Finite { value, .. } => Some(*value),
            ObjectiveValue::Infinite => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ObjectiveValue::Finite { .. })
    }

    pub fn gramians(&self) -> Option<&GramianPair> {
        match self {
            ObjectiveValue::Finite { gramians, .. } => Some(gramians),
            ObjectiveValue::Infinite => None,
        }
    }
}

/// Schur form of a stabilizing closed loop, reused for both Gramians.
#[derive(Debug, Clone)]
pub(crate) struct ClosedLoop {
    schur: RealSchur,
}

impl ClosedLoop {
    /// `None` when `F` is not stabilizing.
    pub(crate) fn new(plant: &Plant, f: &DMatrix<f64>) -> Result<Option<Self>> {
        plant.check_gain_shape(f)?;
        let schur = RealSchur::new(plant.closed_loop(f))?;
        if schur.spectral_abscissa() < -STABILITY_MARGIN {
            Ok(Some(ClosedLoop { schur }))
        } else {
            Ok(None)
        }
    }

    pub(crate) fn controllability(&self, plant: &Plant) -> Result<DMatrix<f64>> {
        self.schur.lyapunov(&(&plant.b1 * plant.b1.transpose()))
    }

    pub(crate) fn observability(&self, plant: &Plant, f: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let weight = &plant.q + f.transpose() * &plant.r * f;
        self.schur.lyapunov_transposed(&weight)
    }
}

/// `trace(B1ᵀ P B1)`.
pub(crate) fn cost_from_observability(plant: &Plant, p: &DMatrix<f64>) -> f64 {
    (plant.b1.transpose() * p * &plant.b1).trace()
}

/// `2 (R F - B2ᵀ P) L`.
pub(crate) fn gradient_from_gramians(
    plant: &Plant,
    f: &DMatrix<f64>,
    gramians: &GramianPair,
) -> DMatrix<f64> {
    (&plant.r * f - plant.b2.transpose() * &gramians.p) * &gramians.l * 2.0
}

pub fn closed_loop_gramians(plant: &Plant, f: &DMatrix<f64>) -> Result<GramianPair> {
    let cl = ClosedLoop::new(plant, f)?.ok_or(Error::NotStabilizing)?;
    Ok(GramianPair {
        l: cl.controllability(plant)?,
        p: cl.observability(plant, f)?,
    })
}

pub fn h2_cost(plant: &Plant, f: &DMatrix<f64>) -> Result<ObjectiveValue> {
    match closed_loop_gramians(plant, f) {
        Ok(gramians) => Ok(ObjectiveValue::Finite {
            value: cost_from_observability(plant, &gramians.p),
            gramians,
        }),
        Err(Error::NotStabilizing) => Ok(ObjectiveValue::Infinite),
        Err(e) => Err(e),
    }
}

/// `∇J(F) = 2 (R F - B2ᵀ P) L`.
pub fn h2_gradient(plant: &Plant, f: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let gramians = closed_loop_gramians(plant, f)?;
    Ok(gradient_from_gramians(plant, f, &gramians))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_plant(a: f64) -> Plant {
        let one = || DMatrix::from_element(1, 1, 1.0);
        Plant::new(DMatrix::from_element(1, 1, a), one(), one(), one(), one(), 1)
    }

    fn s(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn scalar_gramians() {
        let plant = scalar_plant(-1.0);
        let g = closed_loop_gramians(&plant, &s(0.0)).unwrap();
        assert!((g.l[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((g.p[(0, 0)] - 0.5).abs() < 1e-15);
        let g = closed_loop_gramians(&plant, &s(1.0)).unwrap();
        assert!((g.l[(0, 0)] - 0.25).abs() < 1e-15);
        assert!((g.p[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn scalar_cost_and_gradient() {
        let plant = scalar_plant(-1.0);
        assert!((h2_cost(&plant, &s(0.0)).unwrap().value().unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(h2_cost(&scalar_plant(1.0), &s(0.0)).unwrap(), ObjectiveValue::Infinite);
        let grad = h2_gradient(&plant, &s(1.0)).unwrap();
        assert!((grad[(0, 0)] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn unstable_gramians_rejected() {
        let plant = scalar_plant(1.0);
        assert!(matches!(
            closed_loop_gramians(&plant, &s(0.0)),
            Err(Error::NotStabilizing)
        ));
        assert!(matches!(h2_gradient(&plant, &s(0.5)), Err(Error::NotStabilizing)));
    }
}
