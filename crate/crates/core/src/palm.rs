//! Proximal alternating linearized minimization over `(K, C, F)` of
//!
//! ```text
//! Φ(K, C, F) = f(K) + g(C) + J(F) + (γ/2) ‖F - K C‖_F²
//! ```
//!
//! where `f` and `g` are the indicators of `card(K) ≤ s` and of the row (or
//! column) cardinality ball `card_row(C) ≤ r`. Blocks are updated in the
//! Gauss–Seidel order K → C → F. The K- and C-steps are projected gradient
//! steps on the coupling term with step `1/(γ_i L_i)`; the F-step is the exact
//! proximal map of `J`, computed by the Anderson–Moore iteration.

use std::time::Instant;

use log::debug;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::anderson_moore::{minimize, AndersonMooreConfig, Evaluated};
use crate::error::{Error, Result};
use crate::h2::h2_cost;
use crate::matrix_equations::FeedbackSolver;
use crate::plant::{spectral_abscissa, validate_plant, Plant};
use crate::prox::{card, truncate_entries, SparsityBudget, SparsityMode};
use crate::riccati::lqr;

/// Number of trailing iterations over which the relative decrease of Φ is measured.
pub const PHI_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    /// Output feedback gain, m×p.
    pub k: DMatrix<f64>,
    /// Output matrix, p×n.
    pub c: DMatrix<f64>,
    /// State feedback variable, m×n.
    pub f: DMatrix<f64>,
}

impl Iterate {
    /// `‖F - K C‖_F`.
    pub fn penalty_residual(&self) -> f64 {
        (&self.f - &self.k * &self.c).norm()
    }

    fn check_shapes(&self, plant: &Plant) -> Result<()> {
        let (n, m, p) = (plant.states(), plant.inputs(), plant.outputs);
        if self.k.shape() != (m, p) || self.c.shape() != (p, n) || self.f.shape() != (m, n) {
            return Err(Error::DimensionMismatch(format!(
                "iterate K {:?}, C {:?}, F {:?}; expected K ({m}, {p}), C ({p}, {n}), F ({m}, {n})",
                self.k.shape(),
                self.c.shape(),
                self.f.shape()
            )));
        }
        Ok(())
    }

    fn distance_squared(&self, other: &Iterate) -> (f64, f64, f64) {
        (
            (&self.k - &other.k).norm_squared(),
            (&self.c - &other.c).norm_squared(),
            (&self.f - &other.f).norm_squared(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub budget: SparsityBudget,
    /// Penalty weight γ on `‖F - K C‖_F²`.
    pub gamma: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    /// Lower floor for the block Lipschitz constants.
    pub lipschitz_floor: f64,
    pub max_iter: usize,
    /// Threshold on `max(e_K, e_C, e_F)`.
    pub tol_step: f64,
    /// Threshold on the relative decrease of Φ over the last [`PHI_WINDOW`] iterations.
    pub tol_phi: f64,
    pub inner: AndersonMooreConfig,
    /// Seed for randomized problem generators; the solver itself is deterministic.
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(s: usize, r: usize, mode: SparsityMode) -> Self {
        SolverConfig {
            budget: SparsityBudget { s, r, mode },
            gamma: 10.0,
            gamma1: 1.1,
            gamma2: 1.1,
            gamma3: 1.1,
            lipschitz_floor: 1e-8,
            max_iter: 2000,
            tol_step: 1e-6,
            tol_phi: 1e-10,
            inner: AndersonMooreConfig::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        for (name, g) in [("gamma1", self.gamma1), ("gamma2", self.gamma2), ("gamma3", self.gamma3)] {
            if !(g > 1.0) || !g.is_finite() {
                return bad(format!("{name} must exceed 1, got {g}"));
            }
        }
        if !(self.lipschitz_floor > 0.0) {
            return bad("lipschitz_floor must be positive".into());
        }
        if !(self.tol_step > 0.0) {
            return bad("tol_step must be positive".into());
        }
        if !(self.tol_phi > 0.0) {
            return bad("tol_phi must be positive".into());
        }
        self.inner.validate()
    }

    /// `δ` from running Lipschitz minima.
    pub fn decrease_modulus(&self, lipschitz_min: [f64; 3]) -> f64 {
        [self.gamma1, self.gamma2, self.gamma3]
            .iter()
            .zip(lipschitz_min)
            .map(|(g, l)| (g - 1.0) * l)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Per-iteration diagnostics. Row 0 describes the initialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub iter: usize,
    /// `J(F) + (γ/2)‖F - K C‖_F²`.
    pub phi: f64,
    pub j_value: f64,
    pub penalty_residual: f64,
    pub e_k: f64,
    pub e_c: f64,
    pub e_f: f64,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub card_k: usize,
    /// Row or column cardinality of C, following the budget mode.
    pub card_c: usize,
    /// `Φ_prev - Φ - (δ/2)‖G - G_prev‖²`; +∞ when the previous iterate was
    /// infeasible (its indicator terms are infinite).
    pub decrease_slack: f64,
    pub inner_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    InnerSolverFailure,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIterations => "max_iterations",
            SolveStatus::InnerSolverFailure => "inner_solver_failure",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub final_iterate: Iterate,
    pub history: Vec<ConvergenceRecord>,
    pub status: SolveStatus,
    /// `min_i (γ_i - 1) min_k L_i^k` over the whole run.
    pub delta: f64,
    pub lipschitz_min: [f64; 3],
    pub lipschitz_max: [f64; 3],
    /// Spectral abscissa of `A - B2 K C` at the final iterate.
    pub output_feedback_abscissa: f64,
    pub failure: Option<String>,
    pub elapsed_seconds: f64,
}

impl SolveResult {
    pub fn iterations(&self) -> usize {
        self.history.len().saturating_sub(1)
    }

    pub fn final_record(&self) -> &ConvergenceRecord {
        self.history.last().expect("history always holds the initialization record")
    }
}

/// Block Lipschitz constants `(γ‖CCᵀ‖_F, γ‖KᵀK‖_F, γ)`, the first two floored.
pub fn lipschitz_constants(
    k: &DMatrix<f64>,
    c: &DMatrix<f64>,
    gamma: f64,
    floor: f64,
) -> (f64, f64, f64) {
    let l1 = (gamma * (c * c.transpose()).norm()).max(floor);
    let l2 = (gamma * (k.transpose() * k).norm()).max(floor);
    (l1, l2, gamma)
}

/// `H = (γ/2) ‖F - K C‖_F²`.
pub fn coupling_value(k: &DMatrix<f64>, c: &DMatrix<f64>, f: &DMatrix<f64>, gamma: f64) -> f64 {
    0.5 * gamma * (f - k * c).norm_squared()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingGradients {
    pub k: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub f: DMatrix<f64>,
}

/// Partial gradients `γ(KC - F)Cᵀ`, `γKᵀ(KC - F)`, `γ(F - KC)`.
pub fn coupling_gradients(
    k: &DMatrix<f64>,
    c: &DMatrix<f64>,
    f: &DMatrix<f64>,
    gamma: f64,
) -> CouplingGradients {
    let mismatch = (k * c - f) * gamma;
    CouplingGradients {
        k: &mismatch * c.transpose(),
        c: k.transpose() * &mismatch,
        f: -mismatch,
    }
}

fn feasible(budget: &SparsityBudget, g: &Iterate) -> bool {
    card(&g.k) <= budget.s && budget.card_c(&g.c) <= budget.r
}

/// `Φ` at a feasible iterate.
pub fn objective_phi(plant: &Plant, config: &SolverConfig, g: &Iterate) -> Result<f64> {
    g.check_shapes(plant)?;
    let budget = &config.budget;
    if card(&g.k) > budget.s {
        return Err(Error::InfeasibleIterate(format!(
            "card(K) = {} exceeds s = {}",
            card(&g.k),
            budget.s
        )));
    }
    if budget.card_c(&g.c) > budget.r {
        return Err(Error::InfeasibleIterate(format!(
            "{}-cardinality of C = {} exceeds r = {}",
            budget.mode,
            budget.card_c(&g.c),
            budget.r
        )));
    }
    let j = h2_cost(plant, &g.f)?
        .value()
        .ok_or_else(|| Error::InfeasibleIterate("F is not stabilizing".into()))?;
    Ok(j + coupling_value(&g.k, &g.c, &g.f, config.gamma))
}

/// Default starting point: LQR gain for F, all-ones C, and K = F (p = n) or
/// the least-squares fit of `F ≈ K C` otherwise.
pub fn default_initialization(plant: &Plant) -> Result<Iterate> {
    let (n, p) = (plant.states(), plant.outputs);
    let f = lqr(plant)?.gain;
    let c = DMatrix::from_element(p, n, 1.0);
    let k = if p == n {
        f.clone()
    } else {
        let pinv = c
            .clone()
            .pseudo_inverse(1e-12)
            .map_err(|e| Error::SolverBreakdown(e.to_string()))?;
        &f * pinv
    };
    Ok(Iterate { k, c, f })
}

/// Mutable solver state carried between iterations.
struct Palm<'a> {
    plant: &'a Plant,
    config: &'a SolverConfig,
    feedback: FeedbackSolver,
    lipschitz_min: [f64; 3],
    lipschitz_max: [f64; 3],
}

/// Iterate with its F-evaluation and Φ.
struct State {
    g: Iterate,
    eval: Evaluated,
    phi: f64,
    feasible: bool,
}

impl<'a> Palm<'a> {
    fn new(plant: &'a Plant, config: &'a SolverConfig) -> Self {
        Palm {
            plant,
            config,
            feedback: FeedbackSolver::new(&plant.r),
            lipschitz_min: [f64::INFINITY; 3],
            lipschitz_max: [0.0; 3],
        }
    }

    fn evaluate(&self, g: Iterate) -> Result<State> {
        let eval = Evaluated::new(self.plant, g.f.clone())?.ok_or(Error::InitialGainNotStabilizing)?;
        let phi = eval.j_value + coupling_value(&g.k, &g.c, &g.f, self.config.gamma);
        let feasible = feasible(&self.config.budget, &g);
        Ok(State { g, eval, phi, feasible })
    }

    fn observe_lipschitz(&mut self, ls: [f64; 3]) -> Result<()> {
        for i in 0..3 {
            if !ls[i].is_finite() {
                return Err(Error::SolverBreakdown(format!(
                    "Lipschitz constant L{} is not finite",
                    i + 1
                )));
            }
            self.lipschitz_min[i] = self.lipschitz_min[i].min(ls[i]);
            self.lipschitz_max[i] = self.lipschitz_max[i].max(ls[i]);
        }
        Ok(())
    }

    fn initial_record(&mut self, state: &State) -> Result<ConvergenceRecord> {
        let g = &state.g;
        let (l1, l2, l3) =
            lipschitz_constants(&g.k, &g.c, self.config.gamma, self.config.lipschitz_floor);
        self.observe_lipschitz([l1, l2, l3])?;
        Ok(ConvergenceRecord {
            iter: 0,
            phi: state.phi,
            j_value: state.eval.j_value,
            penalty_residual: g.penalty_residual(),
            e_k: 0.0,
            e_c: 0.0,
            e_f: 0.0,
            l1,
            l2,
            l3,
            card_k: card(&g.k),
            card_c: self.config.budget.card_c(&g.c),
            decrease_slack: 0.0,
            inner_iterations: 0,
        })
    }

    fn step(&mut self, current: &State, iter: usize) -> Result<(State, ConvergenceRecord)> {
        let cfg = self.config;
        let gamma = cfg.gamma;
        let floor = cfg.lipschitz_floor;
        let Iterate { k, c, f } = &current.g;

        // K-step
        let l1 = (gamma * (c * c.transpose()).norm()).max(floor);
        let grad_k = coupling_gradients(k, c, f, gamma).k;
        let x = k - grad_k / (cfg.gamma1 * l1);
        let k_next = truncate_entries(&x, cfg.budget.s)?;

        // C-step, with the updated K
        let l2 = (gamma * (k_next.transpose() * &k_next).norm()).max(floor);
        let grad_c = (k_next.transpose() * (&k_next * c - f)) * gamma;
        let y = c - grad_c / (cfg.gamma2 * l2);
        let c_next = cfg.budget.project_c(&y)?;

        // F-step, with the updated K and C
        let l3 = gamma;
        let prox_c = cfg.gamma3 * l3;
        let product = &k_next * &c_next;
        let z = f - (f - &product) * (gamma / prox_c);
        let inner = minimize(
            self.plant,
            &self.feedback,
            &z,
            prox_c,
            current.eval.clone(),
            &cfg.inner,
        )
        .map_err(|e| Error::InnerSolverFailure(e.to_string()))?;

        self.observe_lipschitz([l1, l2, l3])?;
        let delta = cfg.decrease_modulus(self.lipschitz_min);

        let next = Iterate { k: k_next, c: c_next, f: inner.f.clone() };
        let phi = inner.j_value + coupling_value(&next.k, &next.c, &next.f, gamma);
        let (dk, dc, df) = next.distance_squared(&current.g);
        let decrease_slack = if current.feasible {
            current.phi - phi - 0.5 * delta * (dk + dc + df)
        } else {
            f64::INFINITY
        };
        let record = ConvergenceRecord {
            iter,
            phi,
            j_value: inner.j_value,
            penalty_residual: next.penalty_residual(),
            e_k: dk.sqrt(),
            e_c: dc.sqrt(),
            e_f: df.sqrt(),
            l1,
            l2,
            l3,
            card_k: card(&next.k),
            card_c: cfg.budget.card_c(&next.c),
            decrease_slack,
            inner_iterations: inner.iterations,
        };
        let eval = Evaluated { f: inner.f, gramians: inner.gramians, j_value: inner.j_value };
        let state = State { g: next, eval, phi, feasible: true };
        Ok((state, record))
    }
}

fn check_problem(plant: &Plant, config: &SolverConfig) -> Result<()> {
    validate_plant(plant).into_result()?;
    config.validate()?;
    config
        .budget
        .check(plant.inputs(), plant.outputs, plant.states())
}

/// One PALM sweep K → C → F from `current`. The record's decrease slack uses
/// the Lipschitz constants of this sweep alone.
pub fn palm_iteration(
    plant: &Plant,
    config: &SolverConfig,
    current: &Iterate,
) -> Result<(Iterate, ConvergenceRecord)> {
    check_problem(plant, config)?;
    current.check_shapes(plant)?;
    let mut palm = Palm::new(plant, config);
    let state = palm.evaluate(current.clone())?;
    let (next, record) = palm.step(&state, 1)?;
    Ok((next.g, record))
}

/// Relative decrease of Φ across the trailing window, if the window is full.
fn windowed_phi_decrease(history: &[ConvergenceRecord]) -> Option<f64> {
    let n = history.len();
    if n <= PHI_WINDOW {
        return None;
    }
    let old = history[n - 1 - PHI_WINDOW].phi;
    let new = history[n - 1].phi;
    Some((old - new) / old.abs().max(f64::MIN_POSITIVE))
}

/// Runs PALM until both stopping tolerances hold or `max_iter` sweeps are done.
pub fn solve(plant: &Plant, config: &SolverConfig, init: Option<Iterate>) -> Result<SolveResult> {
    let started = Instant::now();
    check_problem(plant, config)?;
    let init = match init {
        Some(g) => {
            g.check_shapes(plant)?;
            g
        }
        None => default_initialization(plant)?,
    };

    let mut palm = Palm::new(plant, config);
    let mut state = palm.evaluate(init)?;
    let mut history = vec![palm.initial_record(&state)?];
    let mut status = SolveStatus::MaxIterations;
    let mut failure = None;

    for iter in 1..=config.max_iter {
        let (next, record) = match palm.step(&state, iter) {
            Ok(out) => out,
            Err(e @ Error::InnerSolverFailure(_)) => {
                status = SolveStatus::InnerSolverFailure;
                failure = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        debug!(
            "iter {:5}  phi {:.10e}  J {:.6e}  eK {:.2e}  eC {:.2e}  eF {:.2e}  inner {}",
            record.iter, record.phi, record.j_value, record.e_k, record.e_c, record.e_f,
            record.inner_iterations
        );
        let step = record.e_k.max(record.e_c).max(record.e_f);
        history.push(record);
        state = next;
        let phi_settled = windowed_phi_decrease(&history).is_some_and(|d| d <= config.tol_phi);
        if step <= config.tol_step && phi_settled {
            status = SolveStatus::Converged;
            break;
        }
    }

    let g = state.g;
    let output_feedback_abscissa = spectral_abscissa(&plant.closed_loop(&(&g.k * &g.c)))?;
    Ok(SolveResult {
        final_iterate: g,
        history,
        status,
        delta: config.decrease_modulus(palm.lipschitz_min),
        lipschitz_min: palm.lipschitz_min,
        lipschitz_max: palm.lipschitz_max,
        output_feedback_abscissa,
        failure,
        elapsed_seconds: started.elapsed().as_secs_f64(),
    })
}
