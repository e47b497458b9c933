//! Finite-volume barotropic vorticity solver on a uniform rectangular mesh.
//!
//! Potential vorticity `q = Ro*omega + y` is transported by the velocity of
//! the streamfunction `psi`, optionally passed through a differential filter
//! of radius `alpha` (linear, or scaled by a gradient-based indicator), and
//! `psi` is recovered from the filtered field by a Poisson solve. Each time
//! step is one backward-Euler transport solve followed by the filter and
//! Poisson solves.
//!
//! ```no_run
//! use qgles::{BenchmarkCase, ModelKind, SimulationConfig};
//!
//! let mut config = SimulationConfig::double_gyre(BenchmarkCase::Case1, ModelKind::BvNlAlpha, 16, 32);
//! config.time.t_end = 1.0;
//! config.time.avg_start = 0.5;
//! let out = qgles::run(config).unwrap();
//! println!("mean energy {}", out.record.energy_mean());
//! ```

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod convergence;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod ops;
pub mod solver;

pub use assembly::{Assembler, DiscreteSystem, PoissonOperator, Unknown};
pub use diagnostics::{gyre_count, kinetic_energy, recover_vorticity, DiagnosticsRecord};
pub use error::{Error, Result};
pub use field::{BoundaryCondition, CellField};
pub use linalg::{PreconditionerKind, SolveError, SolverConfig, SparseMatrix};
pub use mesh::{build_mesh, Bounds, StructuredMesh};
pub use ops::{indicator_function, streamfunction_fluxes, FaceFluxes};
pub use solver::{
    munk_scale, run, BenchmarkCase, Forcing, ForcingKind, ModelKind, PhysicalParams, RunOutput,
    Simulation, SimulationConfig, SolverStats, State, TimeParams, DIVERGENCE_THRESHOLD,
};
