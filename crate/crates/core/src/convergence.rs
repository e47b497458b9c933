//! Manufactured-solution refinement studies for the two elliptic operators.

use std::f64::consts::PI;

use serde::Serialize;

use crate::assembly::Assembler;
use crate::error::{Error, Result};
use crate::field::{BoundaryCondition, CellField};
use crate::linalg::{cg_solve, SolverConfig};
use crate::mesh::{Bounds, StructuredMesh};

/// Meshes used by the default studies, each a halving of the previous one.
pub const DEFAULT_MESHES: [(usize, usize); 3] = [(16, 32), (32, 64), (64, 128)];

/// Filter radius for the filter study; fixed so only the mesh changes.
pub const FILTER_ALPHA: f64 = 0.1;

/// Rossby number for the Poisson study.
pub const POISSON_RO: f64 = 0.0036;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    Poisson,
    Filter,
}

impl std::str::FromStr for Operator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poisson" => Ok(Operator::Poisson),
            "filter" => Ok(Operator::Filter),
            other => Err(Error::InvalidArgument(format!(
                "unknown operator '{other}', expected 'poisson' or 'filter'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Level {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub l2_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub operator: Operator,
    pub levels: Vec<Level>,
}

impl ConvergenceStudy {
    /// Observed rates `log2(e_k / e_{k+1})` between successive levels.
    pub fn rates(&self) -> Vec<f64> {
        self.levels
            .windows(2)
            .map(|w| (w[0].l2_error / w[1].l2_error).ln() / (w[0].h / w[1].h).ln())
            .collect()
    }
}

fn bump(x: f64, y: f64) -> f64 {
    (PI * x).sin() * (PI * y).sin()
}

fn l2_error(mesh: &StructuredMesh, computed: &[f64]) -> f64 {
    let sum: f64 = computed
        .iter()
        .zip(mesh.centroids())
        .map(|(u, [x, y])| (u - bump(x, y)).powi(2))
        .sum();
    (sum * mesh.cell_volume()).sqrt()
}

fn tight_solver() -> SolverConfig {
    SolverConfig {
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        ..SolverConfig::default()
    }
}

/// Solves `-Ro lap psi + y = qbar` with `qbar = 2 pi^2 Ro psi* + y` and
/// returns the L2 error against `psi* = sin(pi x) sin(pi y)`.
pub fn poisson_error(nx: usize, ny: usize) -> Result<f64> {
    let mesh = StructuredMesh::new(nx, ny, Bounds::DOUBLE_GYRE)?;
    let ro = POISSON_RO;
    let qbar = CellField::from_fn(
        &mesh,
        |x, y| 2.0 * PI * PI * ro * bump(x, y) + y,
        BoundaryCondition::planetary(&mesh),
    )?;
    let bc = BoundaryCondition::homogeneous(&mesh);
    let sys = Assembler::new(&mesh).poisson(&mesh, ro, &qbar, &bc)?;
    let sol = cg_solve(&sys.matrix, &sys.rhs, &vec![0.0; mesh.n_cells()], &tight_solver())
        .map_err(|source| Error::Solve { system: "poisson", step: 0, source })?;
    Ok(l2_error(&mesh, &sol.x))
}

/// Solves the filter with `a = 1` for the source `(2 pi^2 alpha^2 + 1) qbar*`
/// and returns the L2 error against `qbar* = sin(pi x) sin(pi y)`.
pub fn filter_error(nx: usize, ny: usize, alpha: f64) -> Result<f64> {
    let mesh = StructuredMesh::new(nx, ny, Bounds::DOUBLE_GYRE)?;
    let scale = 2.0 * PI * PI * alpha * alpha + 1.0;
    let bc = BoundaryCondition::homogeneous(&mesh);
    let q = CellField::from_fn(&mesh, |x, y| scale * bump(x, y), bc.clone())?;
    let a_face = vec![1.0; mesh.faces().len()];
    let sys = Assembler::new(&mesh).helmholtz_filter(&mesh, &a_face, alpha, &q, &bc)?;
    let sol = cg_solve(&sys.matrix, &sys.rhs, &vec![0.0; mesh.n_cells()], &tight_solver())
        .map_err(|source| Error::Solve { system: "filter", step: 0, source })?;
    Ok(l2_error(&mesh, &sol.x))
}

pub fn study(operator: Operator, meshes: &[(usize, usize)]) -> Result<ConvergenceStudy> {
    let bounds = Bounds::DOUBLE_GYRE;
    let levels = meshes
        .iter()
        .map(|&(nx, ny)| {
            let l2_error = match operator {
                Operator::Poisson => poisson_error(nx, ny)?,
                Operator::Filter => filter_error(nx, ny, FILTER_ALPHA)?,
            };
            Ok(Level {
                nx,
                ny,
                h: bounds.width() / nx as f64,
                l2_error,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ConvergenceStudy { operator, levels })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_shrink_on_small_meshes() {
        let coarse = poisson_error(4, 8).unwrap();
        let fine = poisson_error(8, 16).unwrap();
        assert!(fine < coarse / 3.0, "{coarse} {fine}");
        let coarse = filter_error(4, 8, 0.2).unwrap();
        let fine = filter_error(8, 16, 0.2).unwrap();
        assert!(fine < coarse / 3.0, "{coarse} {fine}");
    }

    #[test]
    fn zero_alpha_filter_is_exact() {
        // the filter with alpha = 0 is the identity, so only round-off remains
        assert!(filter_error(6, 12, 0.0).unwrap() < 1e-13);
    }

    #[test]
    fn rates_from_levels() {
        let s = ConvergenceStudy {
            operator: Operator::Poisson,
            levels: vec![
                Level { nx: 1, ny: 2, h: 1.0, l2_error: 1.0 },
                Level { nx: 2, ny: 4, h: 0.5, l2_error: 0.25 },
                Level { nx: 4, ny: 8, h: 0.25, l2_error: 0.125 },
            ],
        };
        assert_eq!(s.rates(), vec![2.0, 1.0]);
        assert!("laplace".parse::<Operator>().is_err());
    }
}
