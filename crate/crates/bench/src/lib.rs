//! Fixtures shared by the criterion benchmarks.

use qgles::{
    Assembler, BenchmarkCase, BoundaryCondition, Bounds, CellField, ModelKind, Simulation,
    SimulationConfig, SparseMatrix, State, StructuredMesh,
};

/// Benchmark mesh for a given refinement: `n x 2n` on the double-gyre domain.
pub fn mesh(n: usize) -> StructuredMesh {
    StructuredMesh::new(n, 2 * n, Bounds::DOUBLE_GYRE).expect("valid mesh")
}

/// Case 1 Poisson matrix and a smooth right-hand side.
pub fn poisson_system(n: usize) -> (SparseMatrix, Vec<f64>) {
    let mesh = mesh(n);
    let qbar = CellField::from_fn(
        &mesh,
        |x, y| y + 0.05 * (std::f64::consts::PI * x).sin() * (2.0 * y).cos(),
        BoundaryCondition::planetary(&mesh),
    )
    .expect("finite field");
    let sys = Assembler::new(&mesh)
        .poisson(&mesh, 0.0036, &qbar, &BoundaryCondition::homogeneous(&mesh))
        .expect("valid Poisson system");
    (sys.matrix, sys.rhs)
}

/// A Case 1 simulation on `n x 2n` advanced `warmup` steps from rest, so the
/// timed steps see a non-trivial stream function.
pub fn spun_up(model: ModelKind, n: usize, warmup: usize) -> (Simulation, State) {
    let cfg = SimulationConfig::double_gyre(BenchmarkCase::Case1, model, n, 2 * n);
    let mut sim = Simulation::new(cfg).expect("valid config");
    let mut state = sim.initial_state().expect("initial state");
    for _ in 0..warmup {
        state = sim.step(&state).expect("stable warm-up");
    }
    (sim, state)
}
