//! Finite-volume assembly of the three linear systems solved each step:
//! transport of q, the (nonlinear) Helmholtz filter, and the stream-function
//! Poisson problem.
//!
//! Every row is divided by the cell area, so the systems read
//!
//! ```text
//! transport:  q_i / dt + (1/|O_i|) sum_j phi_j q_j - (1/Re)(1/|O_i|) sum_j |A_j| (q_nb - q_i) / d_j = b_i
//! filter:     qbar_i - alpha^2 (1/|O_i|) sum_j a_j |A_j| (qbar_nb - qbar_i) / d_j = q_i
//! poisson:    -Ro (1/|O_i|) sum_j |A_j| (psi_nb - psi_i) / d_j = qbar_i - y_i
//! ```
//!
//! with central face values for the convective term and the two-point normal
//! gradient for diffusion. At a Dirichlet face `d_j` is the half-cell distance
//! and the neighbour value is the boundary datum.

use crate::error::{Error, Result};
use crate::field::{BoundaryCondition, CellField};
use crate::linalg::SparseMatrix;
use crate::mesh::{FaceNeighbor, StructuredMesh};
use crate::ops::FaceFluxes;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unknown {
    Q,
    QBar,
    Psi,
}

/// A matrix and right-hand side with boundary data already folded in.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub unknown: Unknown,
}

/// Fixed CSR structure of the five-point stencil plus, per interior face,
/// the value slots it touches.
#[derive(Debug, Clone)]
pub struct Assembler {
    n: usize,
    row_offsets: Vec<usize>,
    columns: Vec<usize>,
    diag: Vec<usize>,
    /// (owner row -> neighbour column, neighbour row -> owner column); unused at boundary faces.
    off_diag: Vec<(usize, usize)>,
}

impl Assembler {
    pub fn new(mesh: &StructuredMesh) -> Self {
        let n = mesh.n_cells();
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut columns = Vec::with_capacity(5 * n);
        let mut diag = Vec::with_capacity(n);
        row_offsets.push(0);
        for c in 0..n {
            let mut cols: Vec<usize> = mesh
                .cell_faces(c)
                .iter()
                .filter_map(|&(f, _)| {
                    let face = &mesh.faces()[f];
                    face.neighbor_cell()
                        .map(|nb| if nb == c { face.owner } else { nb })
                })
                .chain(std::iter::once(c))
                .collect();
            cols.sort_unstable();
            let start = columns.len();
            diag.push(start + cols.binary_search(&c).expect("diagonal present"));
            columns.extend(cols);
            row_offsets.push(columns.len());
        }
        let slot = |row: usize, col: usize| {
            let span = row_offsets[row]..row_offsets[row + 1];
            span.start + columns[span].binary_search(&col).expect("stencil entry")
        };
        let off_diag = mesh
            .faces()
            .iter()
            .map(|face| match face.neighbor {
                FaceNeighbor::Cell(nb) => (slot(face.owner, nb), slot(nb, face.owner)),
                FaceNeighbor::Boundary(_) => (usize::MAX, usize::MAX),
            })
            .collect();
        Assembler {
            n,
            row_offsets,
            columns,
            diag,
            off_diag,
        }
    }

    fn finish(&self, values: Vec<f64>) -> SparseMatrix {
        SparseMatrix::from_raw(
            self.n,
            self.row_offsets.clone(),
            self.columns.clone(),
            values,
        )
    }

    /// Adds a symmetric two-point coupling `k (u_i - u_nb)` to both rows of an
    /// interior face, or `k (u_i - g)` to the owner row of a boundary face.
    #[inline]
    fn couple(
        &self,
        mesh: &StructuredMesh,
        values: &mut [f64],
        rhs: &mut [f64],
        f: usize,
        k: f64,
        bc: &BoundaryCondition,
    ) {
        let face = &mesh.faces()[f];
        match face.neighbor {
            FaceNeighbor::Cell(nb) => {
                let (on, no) = self.off_diag[f];
                values[self.diag[face.owner]] += k;
                values[on] -= k;
                values[self.diag[nb]] += k;
                values[no] -= k;
            }
            FaceNeighbor::Boundary(b) => {
                values[self.diag[face.owner]] += k;
                rhs[face.owner] += k * bc.value(b);
            }
        }
    }

    /// Step (i): implicit transport with the lagged face fluxes.
    ///
    /// `source` is the full right-hand side `b = F + q_old / dt`. Passing
    /// `re = f64::INFINITY` switches diffusion off.
    pub fn transport(
        &self,
        mesh: &StructuredMesh,
        fluxes: &FaceFluxes,
        re: f64,
        dt: f64,
        bc_q: &BoundaryCondition,
        source: &[f64],
    ) -> Result<DiscreteSystem> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        if !(re > 0.0) {
            return Err(Error::InvalidArgument(format!("Reynolds number must be positive, got {re}")));
        }
        let n = mesh.n_cells();
        if source.len() != n || fluxes.values().len() != mesh.faces().len() {
            return Err(Error::InvalidArgument("transport inputs do not match the mesh".into()));
        }
        let inv_vol = 1.0 / mesh.cell_volume();
        let nu = 1.0 / re;
        let mut values = vec![0.0; self.columns.len()];
        let mut rhs = source.to_vec();
        for &d in &self.diag {
            values[d] += 1.0 / dt;
        }
        for (f, (face, &phi)) in mesh.faces().iter().zip(fluxes.values()).enumerate() {
            let conv = 0.5 * phi * inv_vol;
            let k = nu * face.magnitude() / face.delta * inv_vol;
            self.couple(mesh, &mut values, &mut rhs, f, k, bc_q);
            match face.neighbor {
                FaceNeighbor::Cell(nb) => {
                    let (on, no) = self.off_diag[f];
                    values[self.diag[face.owner]] += conv;
                    values[on] += conv;
                    values[self.diag[nb]] -= conv;
                    values[no] -= conv;
                }
                FaceNeighbor::Boundary(b) => {
                    rhs[face.owner] -= 2.0 * conv * bc_q.value(b);
                }
            }
        }
        Ok(DiscreteSystem {
            matrix: self.finish(values),
            rhs,
            unknown: Unknown::Q,
        })
    }

    /// Step (ii): `-alpha^2 div(a grad qbar) + qbar = q` with face indicator values.
    pub fn helmholtz_filter(
        &self,
        mesh: &StructuredMesh,
        a_face: &[f64],
        alpha: f64,
        q_source: &CellField,
        bc_qbar: &BoundaryCondition,
    ) -> Result<DiscreteSystem> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("filter radius must be non-negative, got {alpha}")));
        }
        if a_face.len() != mesh.faces().len() || q_source.len() != mesh.n_cells() {
            return Err(Error::InvalidArgument("filter inputs do not match the mesh".into()));
        }
        if let Some(bad) = a_face.iter().find(|a| !(**a >= 0.0) || !a.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "indicator face value {bad} outside [0, 1]"
            )));
        }
        let inv_vol = 1.0 / mesh.cell_volume();
        let alpha2 = alpha * alpha;
        let mut values = vec![0.0; self.columns.len()];
        let mut rhs = q_source.values().to_vec();
        for &d in &self.diag {
            values[d] += 1.0;
        }
        if alpha2 > 0.0 {
            for (f, (face, &a)) in mesh.faces().iter().zip(a_face).enumerate() {
                let k = alpha2 * a * face.magnitude() / face.delta * inv_vol;
                self.couple(mesh, &mut values, &mut rhs, f, k, bc_qbar);
            }
        }
        Ok(DiscreteSystem {
            matrix: self.finish(values),
            rhs,
            unknown: Unknown::QBar,
        })
    }

    /// Step (iii) operator without its source: `-Ro lap psi`.
    pub fn poisson_operator(&self, mesh: &StructuredMesh, ro: f64, bc_psi: &BoundaryCondition) -> Result<PoissonOperator> {
        if !(ro > 0.0) || !ro.is_finite() {
            return Err(Error::InvalidArgument(format!("Rossby number must be positive, got {ro}")));
        }
        let inv_vol = 1.0 / mesh.cell_volume();
        let mut values = vec![0.0; self.columns.len()];
        let mut boundary_rhs = vec![0.0; mesh.n_cells()];
        for (f, face) in mesh.faces().iter().enumerate() {
            let k = ro * face.magnitude() / face.delta * inv_vol;
            self.couple(mesh, &mut values, &mut boundary_rhs, f, k, bc_psi);
        }
        Ok(PoissonOperator {
            matrix: self.finish(values),
            boundary_rhs,
            planetary: mesh.centroid_y(),
        })
    }

    pub fn poisson(&self, mesh: &StructuredMesh, ro: f64, qbar: &CellField, bc_psi: &BoundaryCondition) -> Result<DiscreteSystem> {
        let op = self.poisson_operator(mesh, ro, bc_psi)?;
        let rhs = op.rhs(qbar.values());
        Ok(DiscreteSystem {
            matrix: op.matrix,
            rhs,
            unknown: Unknown::Psi,
        })
    }
}

/// The Poisson matrix is constant for a given mesh and Ro; only the source changes.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonOperator {
    pub matrix: SparseMatrix,
    boundary_rhs: Vec<f64>,
    planetary: Vec<f64>,
}

impl PoissonOperator {
    /// `qbar_i - y_i` plus boundary contributions.
    pub fn rhs(&self, qbar: &[f64]) -> Vec<f64> {
        qbar.iter()
            .zip(&self.planetary)
            .zip(&self.boundary_rhs)
            .map(|((q, y), g)| q - y + g)
            .collect()
    }
}

pub fn assemble_transport(
    mesh: &StructuredMesh,
    fluxes: &FaceFluxes,
    re: f64,
    dt: f64,
    bc_q: &BoundaryCondition,
    b_field: &CellField,
) -> Result<DiscreteSystem> {
    Assembler::new(mesh).transport(mesh, fluxes, re, dt, bc_q, b_field.values())
}

pub fn assemble_helmholtz_filter(
    mesh: &StructuredMesh,
    a_face: &[f64],
    alpha: f64,
    q_source: &CellField,
    bc_qbar: &BoundaryCondition,
) -> Result<DiscreteSystem> {
    Assembler::new(mesh).helmholtz_filter(mesh, a_face, alpha, q_source, bc_qbar)
}

pub fn assemble_poisson(
    mesh: &StructuredMesh,
    ro: f64,
    qbar_source: &CellField,
    bc_psi: &BoundaryCondition,
) -> Result<DiscreteSystem> {
    Assembler::new(mesh).poisson(mesh, ro, qbar_source, bc_psi)
}
