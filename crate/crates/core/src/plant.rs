//! Problem instance: closed-loop dynamics `dx = A x + B1 d + B2 u` with
//! performance weights `Q` and `R`, and spectral queries on it.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::schur::RealSchur;

/// Closed loops whose spectral abscissa is within this distance of the
/// imaginary axis count as not stabilizing.
pub const STABILITY_MARGIN: f64 = 1e-10;

/// Fixed problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    pub a: DMatrix<f64>,
    pub b1: DMatrix<f64>,
    pub b2: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    /// Number of outputs, i.e. rows of the output matrix C.
    pub outputs: usize,
}

/// A single failed predicate on a plant field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub predicate: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.predicate)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            let msg = self
                .violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; ");
            Err(Error::InvalidPlant(msg))
        }
    }
}

impl Plant {
    pub fn new(
        a: DMatrix<f64>,
        b1: DMatrix<f64>,
        b2: DMatrix<f64>,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        outputs: usize,
    ) -> Self {
        Plant { a, b1, b2, q, r, outputs }
    }

    /// State dimension n.
    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    /// Control dimension m.
    pub fn inputs(&self) -> usize {
        self.b2.ncols()
    }

    /// Disturbance dimension q.
    pub fn disturbances(&self) -> usize {
        self.b1.ncols()
    }

    /// `A - B2 F`.
    pub fn closed_loop(&self, f: &DMatrix<f64>) -> DMatrix<f64> {
        &self.a - &self.b2 * f
    }

    pub(crate) fn check_gain_shape(&self, f: &DMatrix<f64>) -> Result<()> {
        if f.shape() != (self.inputs(), self.states()) {
            return Err(Error::DimensionMismatch(format!(
                "gain is {}x{}, expected {}x{}",
                f.nrows(),
                f.ncols(),
                self.inputs(),
                self.states()
            )));
        }
        Ok(())
    }
}

fn symmetric_within(m: &DMatrix<f64>, tol: f64) -> bool {
    let scale = 1.0 + m.amax();
    (m - m.transpose()).amax() <= tol * scale
}

/// Checks every plant invariant and reports each failure by field.
pub fn validate_plant(plant: &Plant) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut violate = |field: &'static str, predicate: String| {
        report.violations.push(Violation { field, predicate });
    };

    let (ar, ac) = plant.a.shape();
    if ar != ac {
        violate("A", format!("not square ({ar}x{ac})"));
    }
    let n = ar;
    if n == 0 {
        violate("A", "empty state dimension".into());
    }
    if plant.b1.nrows() != n {
        violate("B1", format!("dimension mismatch A/B1 ({} rows, expected {n})", plant.b1.nrows()));
    }
    if plant.b1.ncols() == 0 {
        violate("B1", "no disturbance channels".into());
    }
    if plant.b2.nrows() != n {
        violate("B2", format!("dimension mismatch A/B2 ({} rows, expected {n})", plant.b2.nrows()));
    }
    let m = plant.b2.ncols();
    if m == 0 {
        violate("B2", "no control inputs".into());
    }
    if plant.q.shape() != (n, n) {
        violate("Q", format!("dimension mismatch A/Q ({}x{}, expected {n}x{n})", plant.q.nrows(), plant.q.ncols()));
    }
    if plant.r.shape() != (m, m) {
        violate("R", format!("dimension mismatch B2/R ({}x{}, expected {m}x{m})", plant.r.nrows(), plant.r.ncols()));
    }
    if plant.outputs == 0 {
        violate("p", "number of outputs must be positive".into());
    }
    for (name, mat) in [
        ("A", &plant.a),
        ("B1", &plant.b1),
        ("B2", &plant.b2),
        ("Q", &plant.q),
        ("R", &plant.r),
    ] {
        if mat.iter().any(|v| !v.is_finite()) {
            violate(name, "non-finite entry".into());
        }
    }
    let finite = report.violations.is_empty();

    if finite && plant.q.shape() == (n, n) {
        if !symmetric_within(&plant.q, 1e-12) {
            report.violations.push(Violation { field: "Q", predicate: "not symmetric".into() });
        } else {
            let eig = plant.q.clone().symmetric_eigen();
            let min = eig.eigenvalues.min();
            let tol = 1e-12 * (1.0 + plant.q.amax());
            if min < -tol {
                report.violations.push(Violation {
                    field: "Q",
                    predicate: format!("not positive semidefinite (min eigenvalue {min:.3e})"),
                });
            } else if min <= tol {
                report
                    .warnings
                    .push("Q is only positive semidefinite (has a zero eigenvalue)".into());
            }
        }
    }
    if finite && plant.r.shape() == (m, m) && m > 0 {
        if !symmetric_within(&plant.r, 1e-12) {
            report.violations.push(Violation { field: "R", predicate: "not symmetric".into() });
        } else {
            let min = plant.r.clone().symmetric_eigen().eigenvalues.min();
            if min <= 1e-12 * (1.0 + plant.r.amax()) {
                report.violations.push(Violation {
                    field: "R",
                    predicate: "R not positive definite".into(),
                });
            }
        }
    }
    report
}

/// Largest real part over the spectrum of a square matrix.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "spectral abscissa of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenNoConvergence);
    }
    Ok(RealSchur::new(m.clone())?.spectral_abscissa())
}

/// True iff `A - B2 F` is Hurwitz with margin [`STABILITY_MARGIN`].
pub fn is_stabilizing(plant: &Plant, f: &DMatrix<f64>) -> Result<bool> {
    plant.check_gain_shape(f)?;
    Ok(spectral_abscissa(&plant.closed_loop(f))? < -STABILITY_MARGIN)
}
