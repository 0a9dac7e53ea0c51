//! Co-design of a sparse static output-feedback gain `K` and a row- or
//! column-sparse output matrix `C` for the closed-loop H2 objective.
//!
//! The solver alternates proximal-linearized steps on `K`, `C` and the state
//! feedback variable `F`, coupled through the penalty `(γ/2)‖F - K C‖_F²`.
//! The `F` step minimizes the H2 cost plus a proximal term with the
//! Anderson–Moore iteration.
//!
//! ```no_run
//! use sparse_codesign::{benchmarks, palm, prox::SparsityMode};
//!
//! let plant = benchmarks::make_mass_spring(10).unwrap();
//! let config = palm::SolverConfig::new(40, 10, SparsityMode::Column);
//! let result = palm::solve(&plant, &config, None).unwrap();
//! println!("{:?} after {} iterations", result.status, result.iterations());
//! ```

pub mod anderson_moore;
pub mod benchmarks;
pub mod cli;
pub mod error;
pub mod h2;
pub mod io;
pub mod matrix_equations;
pub mod palm;
pub mod plant;
pub mod prox;
pub mod riccati;
pub mod schur;

pub use error::{Error, Result};
pub use palm::{solve, Iterate, SolveResult, SolveStatus, SolverConfig};
pub use plant::Plant;
