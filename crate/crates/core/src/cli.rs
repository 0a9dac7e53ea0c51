//! Batch runs: a run specification (parsed from a sectioned key-value file)
//! names a problem source, solver settings, and an output directory; `run`
//! solves it and writes the artifacts.
//!
//! Config grammar (TOML):
//!
//! ```toml
//! [problem]
//! benchmark = "mass-spring"   # or "distributed"; or give matrix files a, b1, b2, q, r
//! n = 10                      # masses / subsystems
//! side = 10.0                 # distributed only
//! seed = 1                    # distributed only
//! outputs = 20                # matrix-file problems only, defaults to the state dimension
//!
//! [solver]
//! s = 40
//! r = 10
//! mode = "column"             # "row" (default) or "column"
//! gamma = 10.0
//! gamma1 = 1.1                # also gamma2, gamma3, lipschitz_floor, max_iter, tol_step,
//!                             # tol_phi, max_inner_iter, grad_tol, armijo_sigma,
//!                             # armijo_beta, max_backtracks
//!
//! [output]
//! dir = "out"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::benchmarks::{make_distributed, make_mass_spring, DistributedLayout};
use crate::error::{Error, Result};
use crate::io::{format_history, format_layout, format_matrix, format_pattern, read_matrix};
use crate::palm::{solve, SolveResult, SolveStatus, SolverConfig};
use crate::plant::{validate_plant, Plant};
use crate::prox::{card, SparsityMode};

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    MassSpring { masses: usize },
    Distributed { count: usize, side: f64, seed: u64 },
    Files {
        a: PathBuf,
        b1: PathBuf,
        b2: PathBuf,
        q: PathBuf,
        r: PathBuf,
        outputs: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub source: ProblemSource,
    pub config: SolverConfig,
    pub output_dir: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    problem: RawProblem,
    solver: RawSolver,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    benchmark: Option<String>,
    n: Option<usize>,
    side: Option<f64>,
    seed: Option<u64>,
    a: Option<PathBuf>,
    b1: Option<PathBuf>,
    b2: Option<PathBuf>,
    q: Option<PathBuf>,
    r: Option<PathBuf>,
    outputs: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    s: usize,
    r: usize,
    mode: Option<SparsityMode>,
    gamma: Option<f64>,
    gamma1: Option<f64>,
    gamma2: Option<f64>,
    gamma3: Option<f64>,
    lipschitz_floor: Option<f64>,
    max_iter: Option<usize>,
    tol_step: Option<f64>,
    tol_phi: Option<f64>,
    max_inner_iter: Option<usize>,
    grad_tol: Option<f64>,
    armijo_sigma: Option<f64>,
    armijo_beta: Option<f64>,
    max_backtracks: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(default = "default_output_dir")]
    dir: PathBuf,
}

impl Default for RawOutput {
    fn default() -> Self {
        RawOutput { dir: default_output_dir() }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

pub const DEFAULT_SIDE: f64 = 10.0;

fn resolve_source(p: RawProblem, seed: u64) -> Result<ProblemSource> {
    let files = [&p.a, &p.b1, &p.b2, &p.q, &p.r];
    let any_file = files.iter().any(|f| f.is_some());
    match (&p.benchmark, any_file) {
        (Some(_), true) => Err(Error::InvalidConfig(
            "[problem] names both a benchmark and matrix files".into(),
        )),
        (None, false) => Err(Error::InvalidConfig(
            "[problem] needs a benchmark or the matrix files a, b1, b2, q, r".into(),
        )),
        (Some(name), false) => {
            if p.outputs.is_some() {
                return Err(Error::InvalidConfig("outputs applies to matrix-file problems only".into()));
            }
            let count = p
                .n
                .ok_or_else(|| Error::InvalidConfig("[problem] n is required for benchmarks".into()))?;
            match name.as_str() {
                "mass-spring" | "mass_spring" => {
                    if p.side.is_some() {
                        return Err(Error::InvalidConfig("side applies to the distributed benchmark only".into()));
                    }
                    Ok(ProblemSource::MassSpring { masses: count })
                }
                "distributed" => Ok(ProblemSource::Distributed {
                    count,
                    side: p.side.unwrap_or(DEFAULT_SIDE),
                    seed,
                }),
                other => Err(Error::InvalidConfig(format!(
                    "unknown benchmark `{other}` (expected mass-spring or distributed)"
                ))),
            }
        }
        (None, true) => {
            if p.n.is_some() || p.side.is_some() {
                return Err(Error::InvalidConfig("n and side apply to benchmarks only".into()));
            }
            let need = |f: Option<PathBuf>, key: &str| {
                f.ok_or_else(|| Error::InvalidConfig(format!("[problem] missing matrix file `{key}`")))
            };
            Ok(ProblemSource::Files {
                a: need(p.a, "a")?,
                b1: need(p.b1, "b1")?,
                b2: need(p.b2, "b2")?,
                q: need(p.q, "q")?,
                r: need(p.r, "r")?,
                outputs: p.outputs,
            })
        }
    }
}

/// Parses a run specification, applying defaults for omitted solver keys.
pub fn parse_run_spec(text: &str) -> Result<RunSpec> {
    let raw: RawSpec = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let s = raw.solver;
    let seed = match (raw.problem.seed, s.seed) {
        (Some(a), Some(b)) if a != b => {
            return Err(Error::InvalidConfig(format!(
                "conflicting seeds: [problem] {a}, [solver] {b}"
            )))
        }
        (a, b) => a.or(b).unwrap_or(0),
    };
    let mut config = SolverConfig::new(s.s, s.r, s.mode.unwrap_or(SparsityMode::Row));
    config.seed = seed;
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = s.$field { config.$field = v; } )* };
    }
    macro_rules! set_inner {
        ($($field:ident),*) => { $( if let Some(v) = s.$field { config.inner.$field = v; } )* };
    }
    set!(gamma, gamma1, gamma2, gamma3, lipschitz_floor, max_iter, tol_step, tol_phi);
    set_inner!(max_inner_iter, grad_tol, armijo_sigma, armijo_beta, max_backtracks);
    config.validate()?;
    let source = resolve_source(raw.problem, seed)?;
    Ok(RunSpec { source, config, output_dir: raw.output.dir })
}

pub fn read_run_spec(path: &Path) -> Result<RunSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse_run_spec(&text)
}

/// Builds the plant named by a problem source.
pub fn load_problem(source: &ProblemSource) -> Result<(Plant, Option<DistributedLayout>)> {
    match source {
        ProblemSource::MassSpring { masses } => Ok((make_mass_spring(*masses)?, None)),
        ProblemSource::Distributed { count, side, seed } => {
            let (plant, layout) = make_distributed(*count, *side, *seed)?;
            Ok((plant, Some(layout)))
        }
        ProblemSource::Files { a, b1, b2, q, r, outputs } => {
            let a = read_matrix(a)?;
            let outputs = outputs.unwrap_or(a.nrows());
            let plant = Plant::new(a, read_matrix(b1)?, read_matrix(b2)?, read_matrix(q)?, read_matrix(r)?, outputs);
            Ok((plant, None))
        }
    }
}

/// Process exit code for a finished solve.
pub fn exit_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Converged => 0,
        SolveStatus::MaxIterations => 2,
        SolveStatus::InnerSolverFailure => 1,
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub result: SolveResult,
    pub exit_code: i32,
}

fn summary(spec: &RunSpec, result: &SolveResult) -> String {
    let last = result.final_record();
    let g = &result.final_iterate;
    let budget = &spec.config.budget;
    let mut lines = vec![
        format!("status: {}", result.status),
        format!("iterations: {}", result.iterations()),
        format!("phi: {:.16e}", last.phi),
        format!("J: {:.16e}", last.j_value),
        format!("delta: {:.16e}", result.delta),
        format!("penalty_residual: {:.16e}", last.penalty_residual),
        format!("eK: {:.16e}", last.e_k),
        format!("eC: {:.16e}", last.e_c),
        format!("eF: {:.16e}", last.e_f),
        format!("card_K: {} (s = {})", card(&g.k), budget.s),
        format!("card_C: {} {}s (r = {})", budget.card_c(&g.c), budget.mode, budget.r),
        format!("spectral_abscissa_A_minus_B2KC: {:.16e}", result.output_feedback_abscissa),
        format!("wall_time_seconds: {:.3}", result.elapsed_seconds),
    ];
    if let Some(f) = &result.failure {
        lines.push(format!("failure: {f}"));
    }
    lines.join("\n") + "\n"
}

/// Writes every artifact of a finished solve into `dir`.
pub fn write_artifacts(
    dir: &Path,
    spec: &RunSpec,
    result: &SolveResult,
    layout: Option<&DistributedLayout>,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let g = &result.final_iterate;
    std::fs::write(dir.join("history.csv"), format_history(&result.history))?;
    std::fs::write(dir.join("K.txt"), format_matrix(&g.k))?;
    std::fs::write(dir.join("C.txt"), format_matrix(&g.c))?;
    std::fs::write(dir.join("F.txt"), format_matrix(&g.f))?;
    std::fs::write(dir.join("pattern_K.txt"), format_pattern(&g.k))?;
    std::fs::write(dir.join("pattern_C.txt"), format_pattern(&g.c))?;
    std::fs::write(dir.join("summary.txt"), summary(spec, result))?;
    if let Some(layout) = layout {
        std::fs::write(dir.join("layout.txt"), format_layout(layout))?;
    }
    Ok(())
}

/// Resolves the problem, checks it, solves, and writes the artifacts.
pub fn run(spec: &RunSpec) -> Result<RunOutcome> {
    let (plant, layout) = load_problem(&spec.source)?;
    validate_plant(&plant).into_result()?;
    spec.config
        .budget
        .check(plant.inputs(), plant.outputs, plant.states())?;
    let result = solve(&plant, &spec.config, None)?;
    write_artifacts(&spec.output_dir, spec, &result, layout.as_ref())?;
    let exit_code = exit_code(result.status);
    Ok(RunOutcome { result, exit_code })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let spec = parse_run_spec(
            "[problem]\nbenchmark = \"mass-spring\"\nn = 10\n[solver]\nr = 10\ns = 40\n",
        )
        .unwrap();
        assert_eq!(spec.source, ProblemSource::MassSpring { masses: 10 });
        let expect = SolverConfig::new(40, 10, SparsityMode::Row);
        assert_eq!(spec.config, expect);
        assert_eq!(spec.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn overrides_apply() {
        let spec = parse_run_spec(
            "[problem]\nbenchmark = \"distributed\"\nn = 5\nseed = 3\n\
             [solver]\nr = 2\ns = 4\nmode = \"column\"\ngamma = 50\ngamma1 = 2.0\ngrad_tol = 1e-9\n\
             [output]\ndir = \"runs/x\"\n",
        )
        .unwrap();
        assert_eq!(spec.config.gamma, 50.0);
        assert_eq!(spec.config.gamma1, 2.0);
        assert_eq!(spec.config.inner.grad_tol, 1e-9);
        assert_eq!(spec.config.budget.mode, SparsityMode::Column);
        assert_eq!(spec.config.seed, 3);
        assert_eq!(spec.source, ProblemSource::Distributed { count: 5, side: 10.0, seed: 3 });
        assert_eq!(spec.output_dir, PathBuf::from("runs/x"));
    }

    #[test]
    fn unit_gamma1_rejected() {
        let err = parse_run_spec(
            "[problem]\nbenchmark = \"mass-spring\"\nn = 3\n[solver]\nr = 2\ns = 4\ngamma1 = 1.0\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("gamma1 must exceed 1"), "{err}");
    }

    #[test]
    fn unknown_key_rejected_with_line() {
        let err = parse_run_spec(
            "[problem]\nbenchmark = \"mass-spring\"\nn = 3\n[solver]\nr = 2\ns = 4\nstep = 3\n",
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("step"), "{err}");
        assert!(err.contains("line 7"), "{err}");
    }

    #[test]
    fn type_mismatch_rejected() {
        let err = parse_run_spec(
            "[problem]\nbenchmark = \"mass-spring\"\nn = 3\n[solver]\nr = \"two\"\ns = 4\n",
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("line 5"), "{err}");
    }

    #[test]
    fn source_must_be_unique() {
        assert!(parse_run_spec("[problem]\nbenchmark = \"mass-spring\"\nn = 3\na = \"A.txt\"\n[solver]\nr = 2\ns = 4\n").is_err());
        assert!(parse_run_spec("[problem]\n[solver]\nr = 2\ns = 4\n").is_err());
        let err = parse_run_spec("[problem]\na = \"A.txt\"\n[solver]\nr = 2\ns = 4\n").unwrap_err();
        assert!(err.to_string().contains("b1"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(SolveStatus::Converged), 0);
        assert_eq!(exit_code(SolveStatus::MaxIterations), 2);
        assert_eq!(exit_code(SolveStatus::InnerSolverFailure), 1);
    }
}
