//! Segregated BDF1 time loop for the unfiltered, linearly filtered and
//! nonlinearly filtered barotropic vorticity models.
//!
//! Given `q^n` and `psi^n`, one step
//! 1. builds face fluxes from `psi^n` and solves the transport equation for
//!    `q^{n+1}` with `b = F(t^{n+1}) + q^n / dt`,
//! 2. evaluates the indicator `a^{n+1}` and solves the Helmholtz filter for
//!    `qbar^{n+1}` (skipped for the unfiltered model),
//! 3. solves `-Ro lap psi^{n+1} = qbar^{n+1} - y`.
//!
//! The stream function in step 1 is simply lagged one level.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::assembly::{Assembler, PoissonOperator};
use crate::diagnostics::{kinetic_energy, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::field::{BoundaryCondition, CellField};
use crate::linalg::{bicgstab_solve, cg_solve, Solution, SolveError, SolverConfig};
use crate::mesh::{Bounds, StructuredMesh};
use crate::ops::{face_interpolate, indicator_function, streamfunction_fluxes};

/// Runs are declared diverged once `max |q|` exceeds this.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// No filter: `qbar = q`.
    Qge,
    /// Linear filter, `a = 1`.
    BvAlpha,
    /// Nonlinear filter with the gradient-based indicator.
    BvNlAlpha,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Qge, ModelKind::BvAlpha, ModelKind::BvNlAlpha];

    pub fn is_filtered(self) -> bool {
        !matches!(self, ModelKind::Qge)
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Qge => "qge",
            ModelKind::BvAlpha => "bv_alpha",
            ModelKind::BvNlAlpha => "bv_nl_alpha",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "qge" => Ok(ModelKind::Qge),
            "bv" | "bv_alpha" => Ok(ModelKind::BvAlpha),
            "bvnl" | "bv_nl" | "bv_nl_alpha" | "bv_alpha_nl" => Ok(ModelKind::BvNlAlpha),
            other => Err(Error::Config(format!(
                "unknown model '{other}' (expected qge, bv_alpha or bv_nl_alpha)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Rossby number `U / (beta L^2)`.
    pub ro: f64,
    pub re: f64,
    /// Characteristic length; only enters the Munk scale.
    pub l: f64,
}

impl PhysicalParams {
    pub fn new(ro: f64, re: f64) -> Self {
        PhysicalParams { ro, re, l: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("ro", self.ro), ("re", self.re), ("l", self.l)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }
}

/// Munk boundary-layer width `L (Ro / Re)^(1/3)`.
pub fn munk_scale(params: &PhysicalParams) -> f64 {
    params.l * (params.ro / params.re).cbrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeParams {
    pub dt: f64,
    pub t0: f64,
    pub t_end: f64,
    pub avg_start: f64,
}

impl TimeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t0 < self.t_end && self.t0 <= self.avg_start && self.avg_start <= self.t_end) {
            return Err(Error::Config(format!(
                "need t0 <= avg_start <= t_end with t0 < t_end, got {} / {} / {}",
                self.t0, self.avg_start, self.t_end
            )));
        }
        let n = self.n_steps();
        if (n as f64 * self.dt - (self.t_end - self.t0)).abs() > 1e-6 * self.dt {
            return Err(Error::Config("time interval is not a whole number of steps".into()));
        }
        Ok(())
    }

    /// `N_T`, the nearest whole number of steps covering `[t0, t_end]`.
    pub fn n_steps(&self) -> u64 {
        ((self.t_end - self.t0) / self.dt).round() as u64
    }

    pub fn time_at(&self, step: u64) -> f64 {
        self.t0 + step as f64 * self.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingKind {
    /// `F = sin(pi y)`.
    DoubleGyre,
    None,
}

/// Right-hand side `F(x, y, t)` of the transport equation.
#[derive(Clone)]
pub struct Forcing {
    f: Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>,
    steady: bool,
}

impl Forcing {
    pub fn new(f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Forcing {
            f: Arc::new(f),
            steady: false,
        }
    }

    pub fn steady(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Forcing {
            f: Arc::new(move |x, y, _| f(x, y)),
            steady: true,
        }
    }

    pub fn from_kind(kind: ForcingKind) -> Self {
        match kind {
            ForcingKind::DoubleGyre => Forcing::steady(|_, y| (std::f64::consts::PI * y).sin()),
            ForcingKind::None => Forcing::steady(|_, _| 0.0),
        }
    }

    pub fn eval(&self, x: f64, y: f64, t: f64) -> f64 {
        (self.f)(x, y, t)
    }
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Forcing").field("steady", &self.steady).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub model: ModelKind,
    pub physics: PhysicalParams,
    /// Filter radius; ignored by the unfiltered model.
    pub alpha: f64,
    pub nx: usize,
    pub ny: usize,
    pub bounds: Bounds,
    pub time: TimeParams,
    /// Record the kinetic energy every this many steps.
    pub energy_cadence: u64,
    pub solver: SolverConfig,
    pub forcing: ForcingKind,
    pub output_dir: Option<PathBuf>,
}

/// The two double-gyre parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchmarkCase {
    /// Ro = 0.0036, Re = 450.
    Case1,
    /// Ro = 0.008, Re = 1000.
    Case2,
}

impl BenchmarkCase {
    pub fn physics(self) -> PhysicalParams {
        match self {
            BenchmarkCase::Case1 => PhysicalParams::new(0.0036, 450.0),
            BenchmarkCase::Case2 => PhysicalParams::new(0.008, 1000.0),
        }
    }
}

impl SimulationConfig {
    /// Double-gyre setup: `[0,1]x[-1,1]`, `F = sin(pi y)`, `dt = 2.5e-5`,
    /// `t in [0, 100]`, averages over `[20, 100]`, `alpha = h`.
    pub fn double_gyre(case: BenchmarkCase, model: ModelKind, nx: usize, ny: usize) -> Self {
        let bounds = Bounds::DOUBLE_GYRE;
        SimulationConfig {
            model,
            physics: case.physics(),
            alpha: bounds.width() / nx as f64,
            nx,
            ny,
            bounds,
            time: TimeParams {
                dt: 2.5e-5,
                t0: 0.0,
                t_end: 100.0,
                avg_start: 20.0,
            },
            energy_cadence: 100,
            solver: SolverConfig::default(),
            forcing: ForcingKind::DoubleGyre,
            output_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.physics.validate()?;
        self.time.validate()?;
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::Config(format!("mesh must be at least 1x1, got {}x{}", self.nx, self.ny)));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::Config(format!("alpha must be non-negative, got {}", self.alpha)));
        }
        if self.energy_cadence == 0 {
            return Err(Error::Config("energy_cadence must be at least 1".into()));
        }
        self.solver.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn mesh(&self) -> Result<StructuredMesh> {
        StructuredMesh::new(self.nx, self.ny, self.bounds)
    }
}

/// Prognostic and diagnostic fields at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub q: CellField,
    pub q_bar: CellField,
    pub psi: CellField,
    /// Indicator: ones for the linear filter, zeros for the unfiltered model.
    pub a: CellField,
    pub step: u64,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub solves: u64,
    pub total_iterations: u64,
    pub max_iterations: usize,
}

impl IterationStats {
    fn record(&mut self, sol: &Solution) {
        self.solves += 1;
        self.total_iterations += sol.iterations as u64;
        self.max_iterations = self.max_iterations.max(sol.iterations);
    }

    pub fn mean(&self) -> f64 {
        if self.solves == 0 {
            0.0
        } else {
            self.total_iterations as f64 / self.solves as f64
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub transport: IterationStats,
    pub filter: IterationStats,
    pub poisson: IterationStats,
}

/// Everything a finished run produces in memory.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub mesh: StructuredMesh,
    pub record: DiagnosticsRecord,
    pub final_state: State,
    pub stats: SolverStats,
}

impl RunOutput {
    pub fn psi_mean(&self) -> CellField {
        CellField::new(&self.mesh, self.record.psi_mean(), BoundaryCondition::homogeneous(&self.mesh))
            .expect("means of finite fields are finite")
    }

    pub fn q_mean(&self) -> CellField {
        CellField::new(&self.mesh, self.record.q_mean(), BoundaryCondition::planetary(&self.mesh))
            .expect("means of finite fields are finite")
    }

    pub fn a_mean(&self) -> Option<CellField> {
        self.record.a_mean().map(|v| {
            CellField::new(&self.mesh, v, BoundaryCondition::homogeneous(&self.mesh))
                .expect("means of finite fields are finite")
        })
    }
}

/// Owns the mesh, cached operators and solver statistics of one run.
#[derive(Debug, Clone)]
pub struct Simulation {
    mesh: StructuredMesh,
    config: SimulationConfig,
    assembler: Assembler,
    poisson: PoissonOperator,
    forcing: Forcing,
    steady_forcing: Option<Vec<f64>>,
    bc_q: BoundaryCondition,
    bc_psi: BoundaryCondition,
    indicator_override: Option<f64>,
    stats: SolverStats,
}

impl Simulation {
    pub fn new(config: SimulationConfig) -> Result<Self> {
        config.validate()?;
        let mesh = config.mesh()?;
        let forcing = Forcing::from_kind(config.forcing);
        Self::with_mesh(config, mesh, forcing)
    }

    fn with_mesh(config: SimulationConfig, mesh: StructuredMesh, forcing: Forcing) -> Result<Self> {
        let assembler = Assembler::new(&mesh);
        let bc_q = BoundaryCondition::planetary(&mesh);
        let bc_psi = BoundaryCondition::homogeneous(&mesh);
        let poisson = assembler.poisson_operator(&mesh, config.physics.ro, &bc_psi)?;
        let mut sim = Simulation {
            mesh,
            config,
            assembler,
            poisson,
            forcing: forcing.clone(),
            steady_forcing: None,
            bc_q,
            bc_psi,
            indicator_override: None,
            stats: SolverStats::default(),
        };
        sim.set_forcing(forcing);
        Ok(sim)
    }

    pub fn set_forcing(&mut self, forcing: Forcing) {
        self.steady_forcing = forcing.steady.then(|| {
            self.mesh
                .centroids()
                .map(|[x, y]| forcing.eval(x, y, 0.0))
                .collect()
        });
        self.forcing = forcing;
    }

    /// Replaces the indicator by a constant for the filtered models.
    pub fn set_indicator_override(&mut self, value: Option<f64>) {
        self.indicator_override = value;
    }

    pub fn mesh(&self) -> &StructuredMesh {
        &self.mesh
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    /// `q = y`, `qbar = q`, and `psi` from one Poisson solve.
    pub fn initial_state(&mut self) -> Result<State> {
        let q = CellField::new(&self.mesh, self.mesh.centroid_y(), self.bc_q.clone())?;
        self.state_from_q(q, 0)
    }

    /// A consistent state at step `step` built from an arbitrary `q`: the
    /// filter and Poisson solves are run as in a regular step.
    pub fn state_from_q(&mut self, q: CellField, step: u64) -> Result<State> {
        let zeros = CellField::zeros(&self.mesh);
        let a = self.indicator(&q)?;
        let q_bar = self.filter(&q, &a, q.values(), step)?;
        let psi = self.solve_poisson(&q_bar, zeros.values(), step)?;
        Ok(State {
            q,
            q_bar,
            psi,
            a,
            step,
            time: self.config.time.time_at(step),
        })
    }

    fn indicator(&self, q: &CellField) -> Result<CellField> {
        let mesh = &self.mesh;
        match (self.config.model, self.indicator_override) {
            (ModelKind::Qge, _) => Ok(CellField::zeros(mesh)),
            (_, Some(v)) => CellField::constant(mesh, v, BoundaryCondition::dirichlet(mesh, |_, _| v)),
            (ModelKind::BvAlpha, None) => {
                CellField::constant(mesh, 1.0, BoundaryCondition::dirichlet(mesh, |_, _| 1.0))
            }
            (ModelKind::BvNlAlpha, None) => indicator_function(mesh, q),
        }
    }

    fn filter(&mut self, q: &CellField, a: &CellField, guess: &[f64], step: u64) -> Result<CellField> {
        let alpha = self.config.alpha;
        if !self.config.model.is_filtered() || alpha == 0.0 {
            // identity operator
            return CellField::new(&self.mesh, q.values().to_vec(), self.bc_q.clone());
        }
        let a_face = face_interpolate(&self.mesh, a);
        let sys = self
            .assembler
            .helmholtz_filter(&self.mesh, &a_face, alpha, q, &self.bc_q)?;
        let sol = cg_solve(&sys.matrix, &sys.rhs, guess, &self.config.solver)
            .map_err(|e| solve_error("filter", step, e))?;
        self.stats.filter.record(&sol);
        CellField::new(&self.mesh, sol.x, self.bc_q.clone()).map_err(|_| Error::NonFinite("filtered q"))
    }

    fn solve_poisson(&mut self, q_bar: &CellField, guess: &[f64], step: u64) -> Result<CellField> {
        let rhs = self.poisson.rhs(q_bar.values());
        let sol = cg_solve(&self.poisson.matrix, &rhs, guess, &self.config.solver)
            .map_err(|e| solve_error("poisson", step, e))?;
        self.stats.poisson.record(&sol);
        CellField::new(&self.mesh, sol.x, self.bc_psi.clone()).map_err(|_| Error::NonFinite("stream function"))
    }

    /// Advances one time level.
    pub fn step(&mut self, state: &State) -> Result<State> {
        let next = state.step + 1;
        let dt = self.config.time.dt;
        let t = self.config.time.time_at(next);

        // (i) transport with lagged fluxes
        let fluxes = streamfunction_fluxes(&self.mesh, &state.psi)?;
        let inv_dt = 1.0 / dt;
        let source: Vec<f64> = match &self.steady_forcing {
            Some(f) => f.iter().zip(state.q.values()).map(|(f, q)| f + q * inv_dt).collect(),
            None => self
                .mesh
                .centroids()
                .zip(state.q.values())
                .map(|([x, y], q)| self.forcing.eval(x, y, t) + q * inv_dt)
                .collect(),
        };
        let sys = self.assembler.transport(
            &self.mesh,
            &fluxes,
            self.config.physics.re,
            dt,
            &self.bc_q,
            &source,
        )?;
        let sol = bicgstab_solve(&sys.matrix, &sys.rhs, state.q.values(), &self.config.solver)
            .map_err(|e| solve_error("transport", next, e))?;
        self.stats.transport.record(&sol);
        let q = CellField::new(&self.mesh, sol.x, self.bc_q.clone()).map_err(|_| Error::NonFinite("q"))?;
        let max_abs_q = q.max_abs();
        if max_abs_q > DIVERGENCE_THRESHOLD {
            return Err(Error::Diverged { step: next, max_abs_q });
        }

        // (ii) indicator and filter
        let a = self.indicator(&q)?;
        let q_bar = self.filter(&q, &a, state.q_bar.values(), next)?;

        // (iii) stream function
        let psi = self.solve_poisson(&q_bar, state.psi.values(), next)?;

        Ok(State {
            q,
            q_bar,
            psi,
            a,
            step: next,
            time: t,
        })
    }

    /// Runs from the initial state to `t_end`, sampling the energy every
    /// `energy_cadence` steps and averaging over `[avg_start, t_end]`.
    pub fn run(&mut self) -> Result<RunOutput> {
        let state = self.initial_state()?;
        self.run_from(state)
    }

    pub fn run_from(&mut self, mut state: State) -> Result<RunOutput> {
        let time = self.config.time;
        let track_a = self.config.model == ModelKind::BvNlAlpha;
        let mut record = DiagnosticsRecord::new(self.mesh.n_cells(), time.avg_start, time.t_end, track_a);
        let cadence = self.config.energy_cadence;
        let n_steps = time.n_steps();

        self.observe(&state, &mut record, cadence);
        while state.step < n_steps {
            state = self.step(&state)?;
            self.observe(&state, &mut record, cadence);
        }
        Ok(RunOutput {
            mesh: self.mesh.clone(),
            record,
            final_state: state,
            stats: self.stats,
        })
    }

    fn observe(&self, state: &State, record: &mut DiagnosticsRecord, cadence: u64) {
        let sample = state.step.is_multiple_of(cadence);
        let in_window = record.in_window(state.time);
        if !sample && !in_window {
            return;
        }
        let energy = kinetic_energy(&self.mesh, &state.psi);
        if sample {
            record.record_energy(state.time, energy);
        }
        if in_window {
            let a = (self.config.model == ModelKind::BvNlAlpha).then_some(&state.a);
            record.accumulate(&state.psi, &state.q, a, energy);
        }
    }
}

fn solve_error(system: &'static str, step: u64, source: SolveError) -> Error {
    Error::Solve { system, step, source }
}

/// Validates the config and runs it to completion.
pub fn run(config: SimulationConfig) -> Result<RunOutput> {
    Simulation::new(config)?.run()
}
