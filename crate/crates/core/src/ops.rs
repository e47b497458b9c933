//! Discrete operators on cell fields: Gauss gradient, face interpolation,
//! stream-function face fluxes and the nonlinear indicator function.

use crate::error::{Error, Result};
use crate::field::{BoundaryCondition, CellField};
use crate::mesh::{FaceNeighbor, StructuredMesh};

/// Signed volumetric flux through every face, positive owner to neighbour.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceFluxes {
    values: Vec<f64>,
}

impl FaceFluxes {
    pub fn zeros(mesh: &StructuredMesh) -> Self {
        FaceFluxes {
            values: vec![0.0; mesh.faces().len()],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Net outflow of a cell (sum of outward-signed face fluxes).
    pub fn net_outflow(&self, mesh: &StructuredMesh, cell: usize) -> f64 {
        mesh.cell_faces(cell)
            .iter()
            .map(|&(f, s)| s * self.values[f])
            .sum()
    }
}

/// Face values: two-point average inside, the Dirichlet value on the boundary.
/// The mesh is uniform, so the linear interpolation weight is always 1/2.
pub fn face_interpolate(mesh: &StructuredMesh, f: &CellField) -> Vec<f64> {
    let v = f.values();
    mesh.faces()
        .iter()
        .map(|face| match face.neighbor {
            FaceNeighbor::Cell(nb) => 0.5 * (v[face.owner] + v[nb]),
            FaceNeighbor::Boundary(b) => f.bc().value(b),
        })
        .collect()
}

/// Cell gradients `(1/|cell|) * sum_j f_j A_j` over outward area vectors.
pub fn gauss_gradient(mesh: &StructuredMesh, f: &CellField) -> Vec<[f64; 2]> {
    let face_values = face_interpolate(mesh, f);
    let mut grad = vec![[0.0; 2]; mesh.n_cells()];
    for (face, fv) in mesh.faces().iter().zip(&face_values) {
        let flux = [fv * face.area[0], fv * face.area[1]];
        let g = &mut grad[face.owner];
        g[0] += flux[0];
        g[1] += flux[1];
        if let FaceNeighbor::Cell(nb) = face.neighbor {
            let g = &mut grad[nb];
            g[0] -= flux[0];
            g[1] -= flux[1];
        }
    }
    let inv_vol = 1.0 / mesh.cell_volume();
    for g in &mut grad {
        g[0] *= inv_vol;
        g[1] *= inv_vol;
    }
    grad
}

pub fn gradient_magnitudes(mesh: &StructuredMesh, f: &CellField) -> Vec<f64> {
    gauss_gradient(mesh, f)
        .into_iter()
        .map(|[gx, gy]| gx.hypot(gy))
        .collect()
}

/// Stream-function values at mesh vertices: mean of the four surrounding
/// cells inside, zero on the boundary (corners included).
pub fn vertex_values(mesh: &StructuredMesh, psi: &CellField) -> Vec<f64> {
    let (nx, ny) = (mesh.nx(), mesh.ny());
    let v = psi.values();
    let mut out = vec![0.0; mesh.n_vertices()];
    for jv in 1..ny {
        for iv in 1..nx {
            let sw = (jv - 1) * nx + iv - 1;
            let nw = jv * nx + iv - 1;
            out[jv * (nx + 1) + iv] = 0.25 * (v[sw] + v[sw + 1] + v[nw] + v[nw + 1]);
        }
    }
    out
}

/// Face fluxes of the velocity `curl(0, 0, psi)` in circulation form: the
/// flux through a face is the vertex stream-function difference end - start.
/// Each cell's net outflow telescopes to zero.
pub fn streamfunction_fluxes(mesh: &StructuredMesh, psi: &CellField) -> Result<FaceFluxes> {
    if psi.bc().values().iter().any(|&g| g != 0.0) {
        return Err(Error::InvalidArgument(
            "stream function must carry a homogeneous Dirichlet condition".into(),
        ));
    }
    let vertex = vertex_values(mesh, psi);
    let values = mesh
        .faces()
        .iter()
        .map(|face| vertex[face.vertices[1]] - vertex[face.vertices[0]])
        .collect();
    Ok(FaceFluxes { values })
}

/// `a(q) = |grad q| / max(1, max_k |grad q|_k)`, in `[0, 1]` per cell.
///
/// The returned field's boundary data equal the owner-cell values, so
/// [`face_interpolate`] on it yields the face indicator used by the filter.
pub fn indicator_function(mesh: &StructuredMesh, q: &CellField) -> Result<CellField> {
    let magnitudes = gradient_magnitudes(mesh, q);
    // Sequential fold keeps the reduction order fixed.
    let max = magnitudes.iter().fold(0.0_f64, |m, &g| m.max(g));
    let scale = 1.0 / max.max(1.0);
    let values: Vec<f64> = magnitudes.iter().map(|g| (g * scale).min(1.0)).collect();
    let bc = owner_value_bc(mesh, &values)?;
    CellField::new(mesh, values, bc)
}

/// Boundary data copying the owner-cell value onto each boundary face.
pub fn owner_value_bc(mesh: &StructuredMesh, values: &[f64]) -> Result<BoundaryCondition> {
    let owners = mesh
        .boundary_faces()
        .iter()
        .map(|&f| values[mesh.faces()[f].owner])
        .collect();
    BoundaryCondition::from_values(mesh, owners)
}
