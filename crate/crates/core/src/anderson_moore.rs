//! Anderson–Moore iteration for the proximal H2 step
//!
//! ```text
//! minimize  φ(F) = J(F) + (c/2) ‖F - Z‖_F²
//! ```
//!
//! Each iteration freezes the Gramians `(L, P)` at the current gain, solves
//! the feedback equation `2(R F̄ - B2ᵀP) L + c (F̄ - Z) = 0` for the target
//! `F̄`, and moves along `ΔF = F̄ - F` with Armijo backtracking. Trial gains
//! that do not stabilize the plant have `φ = +∞` and are always rejected.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::h2::{cost_from_observability, gradient_from_gramians, ClosedLoop, GramianPair};
use crate::matrix_equations::FeedbackSolver;
use crate::plant::Plant;

/// Directional decreases smaller than this many ulps of `φ` are treated as noise.
const ROUNDOFF_FACTOR: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AndersonMooreConfig {
    pub max_inner_iter: usize,
    /// Stationarity tolerance, relative to `1 + ‖Z‖_F`.
    pub grad_tol: f64,
    pub armijo_sigma: f64,
    pub armijo_beta: f64,
    pub max_backtracks: usize,
}

impl Default for AndersonMooreConfig {
    fn default() -> Self {
        AndersonMooreConfig {
            max_inner_iter: 50,
            grad_tol: 1e-8,
            armijo_sigma: 1e-4,
            armijo_beta: 0.5,
            max_backtracks: 50,
        }
    }
}

impl AndersonMooreConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.max_inner_iter == 0 {
            return bad("max_inner_iter must be positive");
        }
        if !(self.grad_tol > 0.0) {
            return bad("grad_tol must be positive");
        }
        if !(self.armijo_sigma > 0.0 && self.armijo_sigma < 1.0) {
            return bad("armijo_sigma must lie in (0, 1)");
        }
        if !(self.armijo_beta > 0.0 && self.armijo_beta < 1.0) {
            return bad("armijo_beta must lie in (0, 1)");
        }
        if self.max_backtracks == 0 {
            return bad("max_backtracks must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerStatus {
    /// Feedback-equation residual below tolerance.
    Converged,
    /// No representable decrease left along a descent direction.
    Stalled,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct InnerSolution {
    pub f: DMatrix<f64>,
    /// `J(F)` at the returned gain.
    pub j_value: f64,
    /// `φ(F)` at the returned gain.
    pub phi: f64,
    pub gramians: GramianPair,
    pub iterations: usize,
    /// `‖2(RF - B2ᵀP)L + c(F - Z)‖_F` at the returned gain.
    pub residual: f64,
    pub status: InnerStatus,
    /// `φ` at the initial gain followed by `φ` after every accepted step.
    pub phi_history: Vec<f64>,
    /// Iterations where the negative gradient replaced the Anderson–Moore direction.
    pub gradient_fallbacks: usize,
}

/// Gain with its Gramians and cost, enough to restart from without a new
/// decomposition.
#[derive(Debug, Clone)]
pub(crate) struct Evaluated {
    pub f: DMatrix<f64>,
    pub gramians: GramianPair,
    pub j_value: f64,
}

impl Evaluated {
    pub(crate) fn new(plant: &Plant, f: DMatrix<f64>) -> Result<Option<Self>> {
        let Some(cl) = ClosedLoop::new(plant, &f)? else {
            return Ok(None);
        };
        let p = cl.observability(plant, &f)?;
        let l = cl.controllability(plant)?;
        let j_value = cost_from_observability(plant, &p);
        Ok(Some(Evaluated { f, gramians: GramianPair { l, p }, j_value }))
    }
}

fn prox_phi(j: f64, c: f64, f: &DMatrix<f64>, z: &DMatrix<f64>) -> f64 {
    j + 0.5 * c * (f - z).norm_squared()
}

/// `J` at a trial gain, or `None` when the gain is rejected.
fn trial_cost(plant: &Plant, f: &DMatrix<f64>) -> Result<Option<(ClosedLoop, DMatrix<f64>, f64)>> {
    let cl = match ClosedLoop::new(plant, f) {
        Ok(Some(cl)) => cl,
        Ok(None) | Err(Error::EigenNoConvergence) => return Ok(None),
        Err(e) => return Err(e),
    };
    let p = match cl.observability(plant, f) {
        Ok(p) => p,
        Err(Error::SolverBreakdown(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let j = cost_from_observability(plant, &p);
    if !j.is_finite() || j < 0.0 {
        return Ok(None);
    }
    Ok(Some((cl, p, j)))
}

pub(crate) fn minimize(
    plant: &Plant,
    solver: &FeedbackSolver,
    z: &DMatrix<f64>,
    c: f64,
    start: Evaluated,
    config: &AndersonMooreConfig,
) -> Result<InnerSolution> {
    let tol = config.grad_tol * (1.0 + z.norm());
    let Evaluated { mut f, mut gramians, mut j_value } = start;
    let mut phi = prox_phi(j_value, c, &f, z);
    let mut phi_history = vec![phi];
    let mut gradient_fallbacks = 0;
    let mut iterations = 0;
    let mut pending_l: Option<ClosedLoop> = None;

    let status = loop {
        if let Some(cl) = pending_l.take() {
            gramians.l = cl.controllability(plant)?;
        }
        let grad = gradient_from_gramians(plant, &f, &gramians) + (&f - z) * c;
        let grad_norm = grad.norm();
        if grad_norm <= tol {
            break InnerStatus::Converged;
        }
        if iterations == config.max_inner_iter {
            break InnerStatus::MaxIterations;
        }

        let target = solver.solve(&gramians.l, &(plant.b2.transpose() * &gramians.p), c, z)?;
        let mut direction = target - &f;
        let mut slope = grad.dot(&direction);
        if !(slope < 0.0) {
            direction = -&grad;
            slope = -grad_norm * grad_norm;
            gradient_fallbacks += 1;
        }
        // predicted decrease below what φ can resolve in floating point
        if -slope <= ROUNDOFF_FACTOR * f64::EPSILON * (1.0 + phi.abs()) {
            break InnerStatus::Stalled;
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        let mut unstable_trials = 0;
        for _ in 0..config.max_backtracks {
            let trial = &f + &direction * alpha;
            let cost = trial_cost(plant, &trial)?;
            if cost.is_none() {
                unstable_trials += 1;
            }
            if let Some((cl, p, j)) = cost {
                let trial_phi = prox_phi(j, c, &trial, z);
                if trial_phi <= phi + config.armijo_sigma * alpha * slope {
                    accepted = Some((trial, cl, p, j, trial_phi));
                    break;
                }
            }
            alpha *= config.armijo_beta;
        }
        log::trace!(
            "inner {iterations}: |grad| = {grad_norm:.3e}, alpha = {alpha:.3e}, rejected unstable = {unstable_trials}, fallbacks = {gradient_fallbacks}"
        );
        let Some((trial, cl, p, j, trial_phi)) = accepted else {
            return Err(Error::LineSearchFailed(config.max_backtracks));
        };
        f = trial;
        gramians.p = p;
        pending_l = Some(cl);
        j_value = j;
        phi = trial_phi;
        phi_history.push(phi);
        iterations += 1;
    };

    let residual = (gradient_from_gramians(plant, &f, &gramians) + (&f - z) * c).norm();
    Ok(InnerSolution {
        f,
        j_value,
        phi,
        gramians,
        iterations,
        residual,
        status,
        phi_history,
        gradient_fallbacks,
    })
}

/// Minimizes `J(F) + (c/2)‖F - Z‖_F²` starting from a stabilizing `f_init`.
pub fn anderson_moore(
    plant: &Plant,
    z: &DMatrix<f64>,
    c: f64,
    f_init: &DMatrix<f64>,
    config: &AndersonMooreConfig,
) -> Result<InnerSolution> {
    config.validate()?;
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "proximal coefficient must be positive, got {c}"
        )));
    }
    plant.check_gain_shape(f_init)?;
    if z.shape() != f_init.shape() {
        return Err(Error::DimensionMismatch(format!(
            "proximal center is {}x{}, expected {}x{}",
            z.nrows(),
            z.ncols(),
            f_init.nrows(),
            f_init.ncols()
        )));
    }
    let start = Evaluated::new(plant, f_init.clone())?.ok_or(Error::InitialGainNotStabilizing)?;
    let solver = FeedbackSolver::new(&plant.r);
    minimize(plant, &solver, z, c, start, config)
}
