//! Cell-centred scalar fields and their Dirichlet boundary data.

use crate::error::{Error, Result};
use crate::mesh::StructuredMesh;

/// Dirichlet values sampled at boundary-face centroids, indexed by boundary ordinal.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCondition {
    values: Vec<f64>,
}

impl BoundaryCondition {
    /// Evaluates `g(x, y)` at every boundary-face centroid.
    pub fn dirichlet(mesh: &StructuredMesh, g: impl Fn(f64, f64) -> f64) -> Self {
        let values = mesh
            .boundary_faces()
            .iter()
            .map(|&f| {
                let [x, y] = mesh.faces()[f].centroid;
                g(x, y)
            })
            .collect();
        BoundaryCondition { values }
    }

    /// Boundary values given directly in boundary-ordinal order.
    pub fn from_values(mesh: &StructuredMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_boundary_faces() {
            return Err(Error::InvalidArgument(format!(
                "{} boundary values for {} boundary faces",
                values.len(),
                mesh.n_boundary_faces()
            )));
        }
        Ok(BoundaryCondition { values })
    }

    pub fn homogeneous(mesh: &StructuredMesh) -> Self {
        BoundaryCondition {
            values: vec![0.0; mesh.n_boundary_faces()],
        }
    }

    /// `q = y` on the boundary; used for q and the filtered q.
    pub fn planetary(mesh: &StructuredMesh) -> Self {
        Self::dirichlet(mesh, |_, y| y)
    }

    pub fn value(&self, boundary_ordinal: usize) -> f64 {
        self.values[boundary_ordinal]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, factor: f64) -> Self {
        BoundaryCondition {
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// One value per cell plus the boundary condition the field carries.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    values: Vec<f64>,
    bc: BoundaryCondition,
}

impl CellField {
    pub fn new(mesh: &StructuredMesh, values: Vec<f64>, bc: BoundaryCondition) -> Result<Self> {
        if values.len() != mesh.n_cells() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values for {} cells",
                values.len(),
                mesh.n_cells()
            )));
        }
        if bc.values.len() != mesh.n_boundary_faces() {
            return Err(Error::InvalidArgument(format!(
                "boundary condition has {} values for {} boundary faces",
                bc.values.len(),
                mesh.n_boundary_faces()
            )));
        }
        if !values.iter().chain(bc.values.iter()).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("cell field"));
        }
        Ok(CellField { values, bc })
    }

    pub fn from_fn(
        mesh: &StructuredMesh,
        f: impl Fn(f64, f64) -> f64,
        bc: BoundaryCondition,
    ) -> Result<Self> {
        let values = mesh.centroids().map(|[x, y]| f(x, y)).collect();
        Self::new(mesh, values, bc)
    }

    pub fn constant(mesh: &StructuredMesh, value: f64, bc: BoundaryCondition) -> Result<Self> {
        Self::new(mesh, vec![value; mesh.n_cells()], bc)
    }

    pub fn zeros(mesh: &StructuredMesh) -> Self {
        CellField {
            values: vec![0.0; mesh.n_cells()],
            bc: BoundaryCondition::homogeneous(mesh),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bc(&self) -> &BoundaryCondition {
        &self.bc
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Replaces the cell values, keeping the boundary condition.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values, replacement has {}",
                self.values.len(),
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("cell field"));
        }
        Ok(CellField {
            values,
            bc: self.bc.clone(),
        })
    }

    /// Multiplies values and boundary data alike.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let values: Vec<f64> = self.values.iter().map(|v| v * factor).collect();
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("cell field"));
        }
        Ok(CellField {
            values,
            bc: self.bc.scaled(factor),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}
