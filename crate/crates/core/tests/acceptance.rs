//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. The slow four-gyre check runs only with `--include-ignored` (or
//! `--ignored`) or `QGLES_SLOW=1`.

mod common;

use std::process::ExitCode;
use std::thread;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qgles::convergence::{self, Operator, DEFAULT_MESHES};
use qgles::{
    gyre_count, indicator_function, kinetic_energy, munk_scale, streamfunction_fluxes,
    BenchmarkCase, BoundaryCondition, Bounds, CellField, ForcingKind, ModelKind, PhysicalParams,
    Simulation, SimulationConfig, SolverConfig, StructuredMesh,
};

use common::{dense_step, max_diff, Filter, Grid};

type Outcome = Result<String, String>;

/// Name, check, and whether it is a slow opt-in gate.
type Criterion = (&'static str, fn() -> Outcome, bool);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn munk() -> Outcome {
    let d1 = munk_scale(&PhysicalParams::new(0.0036, 450.0));
    let d2 = munk_scale(&PhysicalParams::new(0.008, 1000.0));
    check(
        (d1 - 0.02).abs() <= 1e-12 && (d2 - 0.02).abs() <= 1e-12,
        format!("case1 {d1:e}, case2 {d2:e}"),
    )
}

fn rest_state() -> Outcome {
    let mut worst_q = 0.0_f64;
    let mut worst_e = 0.0_f64;
    for model in ModelKind::ALL {
        let mut cfg = SimulationConfig::double_gyre(BenchmarkCase::Case1, model, 16, 32);
        cfg.alpha = 1.0 / 16.0;
        cfg.forcing = ForcingKind::None;
        let mut sim = Simulation::new(cfg).map_err(|e| e.to_string())?;
        let y = sim.mesh().centroid_y();
        let mut state = sim.initial_state().map_err(|e| e.to_string())?;
        for _ in 0..1000 {
            state = sim.step(&state).map_err(|e| format!("{model}: {e}"))?;
            worst_q = worst_q.max(max_diff(state.q.values(), &y));
            worst_e = worst_e.max(kinetic_energy(sim.mesh(), &state.psi));
        }
    }
    check(
        worst_q <= 1e-7 && worst_e <= 1e-14,
        format!("max|q - y| = {worst_q:e}, max E = {worst_e:e} over 3 models x 1000 steps"),
    )
}

fn manufactured() -> Outcome {
    let mut detail = Vec::new();
    let mut ok = true;
    for op in [Operator::Poisson, Operator::Filter] {
        let study = convergence::study(op, &DEFAULT_MESHES).map_err(|e| e.to_string())?;
        let rates = study.rates();
        ok &= rates.iter().all(|r| (1.8..=2.2).contains(r));
        detail.push(format!("{op:?} rates {rates:.3?}"));
    }
    check(ok, detail.join(", "))
}

fn incompressibility() -> Outcome {
    let mesh = StructuredMesh::new(16, 32, Bounds::DOUBLE_GYRE).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let scale = 10f64.powf(rng.gen_range(-3.0..1.0));
        let values = (0..mesh.n_cells()).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
        let psi = CellField::new(&mesh, values, BoundaryCondition::homogeneous(&mesh))
            .map_err(|e| e.to_string())?;
        let fluxes = streamfunction_fluxes(&mesh, &psi).map_err(|e| e.to_string())?;
        for c in 0..mesh.n_cells() {
            worst = worst.max(fluxes.net_outflow(&mesh, c).abs());
        }
    }
    check(worst <= 1e-13, format!("max per-cell flux sum {worst:e}"))
}

fn trajectory_gap(a: SimulationConfig, override_a: Option<f64>, b: SimulationConfig, steps: usize) -> Result<f64, String> {
    let mut sa = Simulation::new(a).map_err(|e| e.to_string())?;
    sa.set_indicator_override(override_a);
    let mut sb = Simulation::new(b).map_err(|e| e.to_string())?;
    let mut xa = sa.initial_state().map_err(|e| e.to_string())?;
    let mut xb = sb.initial_state().map_err(|e| e.to_string())?;
    let mut gap = 0.0_f64;
    for _ in 0..steps {
        xa = sa.step(&xa).map_err(|e| e.to_string())?;
        xb = sb.step(&xb).map_err(|e| e.to_string())?;
        gap = gap
            .max(max_diff(xa.q.values(), xb.q.values()))
            .max(max_diff(xa.q_bar.values(), xb.q_bar.values()))
            .max(max_diff(xa.psi.values(), xb.psi.values()));
    }
    Ok(gap)
}

fn reduction_chain() -> Outcome {
    let case = |model| SimulationConfig::double_gyre(BenchmarkCase::Case1, model, 16, 32);
    let nl_vs_linear = trajectory_gap(case(ModelKind::BvNlAlpha), Some(1.0), case(ModelKind::BvAlpha), 500)?;
    let mut zero_alpha = case(ModelKind::BvAlpha);
    zero_alpha.alpha = 0.0;
    let linear_vs_qge = trajectory_gap(zero_alpha, None, case(ModelKind::Qge), 500)?;
    check(
        nl_vs_linear <= 1e-10 && linear_vs_qge <= 1e-10,
        format!("nonlinear(a=1) vs linear {nl_vs_linear:e}, linear(alpha=0) vs unfiltered {linear_vs_qge:e}"),
    )
}

fn indicator_contract() -> Outcome {
    let mesh = StructuredMesh::new(16, 32, Bounds::DOUBLE_GYRE).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..1000 {
        let scale = 10f64.powf(rng.gen_range(-4.0..4.0));
        let values: Vec<f64> = mesh
            .centroids()
            .map(|[_, y]| if k % 2 == 0 { y } else { 0.0 } + scale * rng.gen_range(-1.0..1.0))
            .collect();
        let q = CellField::new(&mesh, values, BoundaryCondition::planetary(&mesh)).map_err(|e| e.to_string())?;
        let a = indicator_function(&mesh, &q).map_err(|e| e.to_string())?;
        lo = lo.min(a.min());
        hi = hi.max(a.max());
    }
    let c = 0.731;
    let constant = CellField::constant(&mesh, c, BoundaryCondition::dirichlet(&mesh, |_, _| c)).map_err(|e| e.to_string())?;
    let a_const = indicator_function(&mesh, &constant).map_err(|e| e.to_string())?.max_abs();
    let rest = CellField::from_fn(&mesh, |_, y| y, BoundaryCondition::planetary(&mesh)).map_err(|e| e.to_string())?;
    let a_rest = indicator_function(&mesh, &rest).map_err(|e| e.to_string())?;
    let rest_dev = a_rest.values().iter().map(|a| (a - 1.0).abs()).fold(0.0, f64::max);
    check(
        lo >= 0.0 && hi <= 1.0 && a_const == 0.0 && rest_dev <= 1e-12,
        format!("random range [{lo:e}, {hi}], constant max {a_const:e}, |a - 1| for q = y {rest_dev:e}"),
    )
}

fn one_step_oracle() -> Outcome {
    let grid = Grid { nx: 2, ny: 2, x0: 0.0, x1: 1.0, y0: -1.0, y1: 1.0 };
    let mut worst = 0.0_f64;
    for (model, filter) in [
        (ModelKind::Qge, Filter::None),
        (ModelKind::BvAlpha, Filter::Linear),
        (ModelKind::BvNlAlpha, Filter::Nonlinear),
    ] {
        let mut cfg = SimulationConfig::double_gyre(BenchmarkCase::Case2, model, 2, 2);
        cfg.time.dt = 0.01;
        cfg.alpha = 0.3;
        cfg.solver = SolverConfig { rel_tol: 1e-15, abs_tol: 1e-16, ..SolverConfig::default() };
        let (ro, re, dt, alpha) = (cfg.physics.ro, cfg.physics.re, cfg.time.dt, cfg.alpha);
        let mut sim = Simulation::new(cfg).map_err(|e| e.to_string())?;
        let mesh = sim.mesh().clone();
        let q0 = CellField::new(&mesh, vec![-0.9, -0.2, 0.4, 0.3], BoundaryCondition::planetary(&mesh))
            .map_err(|e| e.to_string())?;
        let start = sim.state_from_q(q0, 0).map_err(|e| e.to_string())?;
        let next = sim.step(&start).map_err(|e| e.to_string())?;
        let dense = dense_step(
            &grid,
            ro,
            re,
            dt,
            alpha,
            filter,
            |_, y| (std::f64::consts::PI * y).sin(),
            start.q.values(),
            start.psi.values(),
        );
        if start.psi.max_abs() < 1e-6 {
            return Err(format!("{model}: degenerate starting stream function"));
        }
        worst = worst
            .max(max_diff(next.q.values(), &dense.q))
            .max(max_diff(next.q_bar.values(), &dense.q_bar))
            .max(max_diff(next.psi.values(), &dense.psi));
    }
    check(worst <= 1e-12, format!("max deviation from dense solves {worst:e} over 3 models"))
}

fn case2_regularization() -> Outcome {
    let run = |model| {
        thread::spawn(move || {
            let mut cfg = SimulationConfig::double_gyre(BenchmarkCase::Case2, model, 16, 32);
            cfg.time.t_end = 20.0;
            cfg.time.avg_start = 10.0;
            qgles::run(cfg).map(|out| out.record.energy_mean())
        })
    };
    let qge = run(ModelKind::Qge);
    let nl = run(ModelKind::BvNlAlpha);
    let qge = qge.join().expect("QGE thread").map_err(|e| format!("unfiltered run: {e}"))?;
    let nl = nl.join().expect("BV-NL thread").map_err(|e| format!("nonlinear run: {e}"))?;
    let ratio = qge / nl;
    check(
        ratio >= 5.0,
        format!("mean E unfiltered {qge:.6e}, nonlinear {nl:.6e}, ratio {ratio:.3}"),
    )
}

fn four_gyre() -> Outcome {
    let run = |model| {
        thread::spawn(move || {
            let cfg = SimulationConfig::double_gyre(BenchmarkCase::Case1, model, 4, 8);
            qgles::run(cfg).map(|out| gyre_count(&out.mesh, &out.record.psi_mean()))
        })
    };
    let nl = run(ModelKind::BvNlAlpha);
    let qge = run(ModelKind::Qge);
    let nl = nl.join().expect("BV-NL thread").map_err(|e| e.to_string())?;
    let qge = qge.join().expect("QGE thread").map_err(|e| e.to_string())?;
    check(nl == 4 && qge != 4, format!("gyres nonlinear {nl}, unfiltered {qge}"))
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let slow = args.iter().any(|a| a == "--ignored" || a == "--include-ignored")
        || std::env::var("QGLES_SLOW").is_ok_and(|v| v == "1");
    let filter: Vec<&String> = args.iter().filter(|a| !a.starts_with('-')).collect();

    let criteria: [Criterion; 9] = [
        ("munk_scale", munk, false),
        ("rest_state_fixed_point", rest_state, false),
        ("manufactured_convergence", manufactured, false),
        ("discrete_incompressibility", incompressibility, false),
        ("reduction_chain", reduction_chain, false),
        ("indicator_contract", indicator_contract, false),
        ("one_step_oracle", one_step_oracle, false),
        ("case2_regularization", case2_regularization, false),
        ("four_gyre_recovery", four_gyre, true),
    ];

    let mut failed = 0;
    for (name, criterion, is_slow) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        if is_slow && !slow {
            println!("SKIP {name} (slow; pass --include-ignored or set QGLES_SLOW=1)");
            continue;
        }
        let started = Instant::now();
        let outcome = criterion();
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
