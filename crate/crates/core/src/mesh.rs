//! Uniform cell-centred rectangular mesh.
//!
//! Cells are indexed row-major: cell `(i, j)` has index `j * nx + i`, with `i`
//! running along x. Faces are stored x-normal first (`j` outer, `i` inner over
//! `0..=nx`), then y-normal (`j` outer over `0..=ny`, `i` inner). Vertices
//! are indexed `jv * (nx + 1) + iv`.
//!
//! Everything is per unit depth: cell "volumes" are areas and face "areas"
//! are edge lengths.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Bounds {
    /// The double-gyre basin `[0, 1] x [-1, 1]`.
    pub const DOUBLE_GYRE: Bounds = Bounds {
        x_min: 0.0,
        x_max: 1.0,
        y_min: -1.0,
        y_max: 1.0,
    };

    pub const UNIT_SQUARE: Bounds = Bounds {
        x_min: 0.0,
        x_max: 1.0,
        y_min: 0.0,
        y_max: 1.0,
    };

    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Bounds {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

/// What lies on the far side of a face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceNeighbor {
    Cell(usize),
    /// Boundary face; the payload is its ordinal among boundary faces.
    Boundary(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub owner: usize,
    pub neighbor: FaceNeighbor,
    /// Outward from the owner (towards the neighbour); length equals the face length.
    pub area: [f64; 2],
    pub centroid: Point,
    /// Start and end vertex. `end - start` is the area vector rotated by +90 degrees.
    pub vertices: [usize; 2],
    /// Owner-to-neighbour centroid distance, or owner-to-face at the boundary.
    pub delta: f64,
}

impl Face {
    pub fn magnitude(&self) -> f64 {
        self.area[0].hypot(self.area[1])
    }

    pub fn is_boundary(&self) -> bool {
        matches!(self.neighbor, FaceNeighbor::Boundary(_))
    }

    pub fn neighbor_cell(&self) -> Option<usize> {
        match self.neighbor {
            FaceNeighbor::Cell(c) => Some(c),
            FaceNeighbor::Boundary(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredMesh {
    nx: usize,
    ny: usize,
    bounds: Bounds,
    dx: f64,
    dy: f64,
    faces: Vec<Face>,
    boundary_faces: Vec<usize>,
    /// For each cell, its four faces and the sign turning the stored area
    /// vector into the cell's outward one.
    cell_faces: Vec<[(usize, f64); 4]>,
}

/// Builds the mesh; see [`StructuredMesh::new`].
pub fn build_mesh(nx: usize, ny: usize, bounds: Bounds) -> Result<StructuredMesh> {
    StructuredMesh::new(nx, ny, bounds)
}

impl StructuredMesh {
    pub fn new(nx: usize, ny: usize, bounds: Bounds) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument(format!(
                "mesh dimensions must be positive, got {nx}x{ny}"
            )));
        }
        let finite = [bounds.x_min, bounds.x_max, bounds.y_min, bounds.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || bounds.x_max <= bounds.x_min || bounds.y_max <= bounds.y_min {
            return Err(Error::InvalidArgument(format!(
                "degenerate domain bounds {bounds:?}"
            )));
        }
        let dx = bounds.width() / nx as f64;
        let dy = bounds.height() / ny as f64;

        let cell = |i: usize, j: usize| j * nx + i;
        let vertex = |iv: usize, jv: usize| jv * (nx + 1) + iv;
        let x_at = |iv: usize| bounds.x_min + iv as f64 * dx;
        let y_at = |jv: usize| bounds.y_min + jv as f64 * dy;

        let n_faces = (nx + 1) * ny + nx * (ny + 1);
        let mut faces = Vec::with_capacity(n_faces);
        let mut boundary_faces = Vec::with_capacity(2 * (nx + ny));
        let mut push = |faces: &mut Vec<Face>,
                        owner: usize,
                        neighbor: Option<usize>,
                        area: [f64; 2],
                        centroid: Point,
                        vertices: [usize; 2],
                        delta: f64| {
            let neighbor = match neighbor {
                Some(c) => FaceNeighbor::Cell(c),
                None => {
                    boundary_faces.push(faces.len());
                    FaceNeighbor::Boundary(boundary_faces.len() - 1)
                }
            };
            faces.push(Face {
                owner,
                neighbor,
                area,
                centroid,
                vertices,
                delta,
            });
        };

        // x-normal faces
        for j in 0..ny {
            let yc = y_at(j) + 0.5 * dy;
            for i in 0..=nx {
                let centroid = [x_at(i), yc];
                let up = [vertex(i, j), vertex(i, j + 1)];
                let down = [vertex(i, j + 1), vertex(i, j)];
                if i == 0 {
                    push(&mut faces, cell(0, j), None, [-dy, 0.0], centroid, down, 0.5 * dx);
                } else if i == nx {
                    push(&mut faces, cell(nx - 1, j), None, [dy, 0.0], centroid, up, 0.5 * dx);
                } else {
                    push(&mut faces, cell(i - 1, j), Some(cell(i, j)), [dy, 0.0], centroid, up, dx);
                }
            }
        }
        // y-normal faces
        for j in 0..=ny {
            let yf = y_at(j);
            for i in 0..nx {
                let centroid = [x_at(i) + 0.5 * dx, yf];
                let leftward = [vertex(i + 1, j), vertex(i, j)];
                let rightward = [vertex(i, j), vertex(i + 1, j)];
                if j == 0 {
                    push(&mut faces, cell(i, 0), None, [0.0, -dx], centroid, rightward, 0.5 * dy);
                } else if j == ny {
                    push(&mut faces, cell(i, ny - 1), None, [0.0, dx], centroid, leftward, 0.5 * dy);
                } else {
                    push(&mut faces, cell(i, j - 1), Some(cell(i, j)), [0.0, dx], centroid, leftward, dy);
                }
            }
        }

        let mut slots = vec![Vec::with_capacity(4); nx * ny];
        for (f, face) in faces.iter().enumerate() {
            slots[face.owner].push((f, 1.0));
            if let FaceNeighbor::Cell(nb) = face.neighbor {
                slots[nb].push((f, -1.0));
            }
        }
        let cell_faces = slots
            .into_iter()
            .map(|s| <[(usize, f64); 4]>::try_from(s).expect("every cell has four faces"))
            .collect();

        Ok(StructuredMesh {
            nx,
            ny,
            bounds,
            dx,
            dy,
            faces,
            boundary_faces,
            cell_faces,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn n_vertices(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    /// `(i, j)` of a cell index.
    pub fn cell_ij(&self, cell: usize) -> (usize, usize) {
        (cell % self.nx, cell / self.nx)
    }

    pub fn cell_centroid(&self, cell: usize) -> Result<Point> {
        if cell >= self.n_cells() {
            return Err(Error::IndexOutOfRange {
                what: "cells",
                index: cell,
                len: self.n_cells(),
            });
        }
        Ok(self.centroid_unchecked(cell))
    }

    #[inline]
    pub(crate) fn centroid_unchecked(&self, cell: usize) -> Point {
        let (i, j) = self.cell_ij(cell);
        [
            self.bounds.x_min + (i as f64 + 0.5) * self.dx,
            self.bounds.y_min + (j as f64 + 0.5) * self.dy,
        ]
    }

    pub fn centroids(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.n_cells()).map(|c| self.centroid_unchecked(c))
    }

    /// Centroid y-coordinate of every cell (the planetary term).
    pub fn centroid_y(&self) -> Vec<f64> {
        self.centroids().map(|p| p[1]).collect()
    }

    pub fn vertex_position(&self, vertex: usize) -> Point {
        let (iv, jv) = (vertex % (self.nx + 1), vertex / (self.nx + 1));
        [
            self.bounds.x_min + iv as f64 * self.dx,
            self.bounds.y_min + jv as f64 * self.dy,
        ]
    }

    pub fn is_boundary_vertex(&self, vertex: usize) -> bool {
        let (iv, jv) = (vertex % (self.nx + 1), vertex / (self.nx + 1));
        iv == 0 || jv == 0 || iv == self.nx || jv == self.ny
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// Face indices of the boundary faces, ordered by boundary ordinal.
    pub fn boundary_faces(&self) -> &[usize] {
        &self.boundary_faces
    }

    pub fn n_boundary_faces(&self) -> usize {
        self.boundary_faces.len()
    }

    pub fn n_interior_faces(&self) -> usize {
        self.faces.len() - self.boundary_faces.len()
    }

    /// Faces of a cell with the sign (+1 owner, -1 neighbour) that orients
    /// the stored area vector outward from that cell.
    pub fn cell_faces(&self, cell: usize) -> &[(usize, f64); 4] {
        &self.cell_faces[cell]
    }
}
