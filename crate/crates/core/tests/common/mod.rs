//! Dense reference implementation of one segregated step, written cell by
//! cell from neighbour lookups and solved by Gaussian elimination. It shares
//! no code with the crate apart from plain numbers.

#![allow(dead_code)]

#[derive(Debug, Clone, Copy)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Filter {
    None,
    Linear,
    Nonlinear,
}

#[derive(Debug, Clone)]
pub struct StepOutput {
    pub q: Vec<f64>,
    pub q_bar: Vec<f64>,
    pub psi: Vec<f64>,
    pub a: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
enum Side {
    East,
    West,
    North,
    South,
}

const SIDES: [Side; 4] = [Side::East, Side::West, Side::North, Side::South];

impl Grid {
    pub fn dx(&self) -> f64 {
        (self.x1 - self.x0) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y1 - self.y0) / self.ny as f64
    }

    pub fn n(&self) -> usize {
        self.nx * self.ny
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn centre(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.x0 + (i as f64 + 0.5) * self.dx(),
            self.y0 + (j as f64 + 0.5) * self.dy(),
        )
    }

    fn neighbour(&self, i: usize, j: usize, side: Side) -> Option<(usize, usize)> {
        match side {
            Side::East => (i + 1 < self.nx).then_some((i + 1, j)),
            Side::West => (i > 0).then(|| (i - 1, j)),
            Side::North => (j + 1 < self.ny).then_some((i, j + 1)),
            Side::South => (j > 0).then(|| (i, j - 1)),
        }
    }

    /// Midpoint of the face on `side` of cell (i, j).
    fn face_mid(&self, i: usize, j: usize, side: Side) -> (f64, f64) {
        let (x, y) = self.centre(i, j);
        match side {
            Side::East => (x + 0.5 * self.dx(), y),
            Side::West => (x - 0.5 * self.dx(), y),
            Side::North => (x, y + 0.5 * self.dy()),
            Side::South => (x, y - 0.5 * self.dy()),
        }
    }

    /// Face length and outward unit normal.
    fn face_geometry(&self, side: Side) -> (f64, [f64; 2]) {
        match side {
            Side::East => (self.dy(), [1.0, 0.0]),
            Side::West => (self.dy(), [-1.0, 0.0]),
            Side::North => (self.dx(), [0.0, 1.0]),
            Side::South => (self.dx(), [0.0, -1.0]),
        }
    }

    /// Distance used by the two-point gradient: centre to centre, or centre
    /// to the face on the boundary.
    fn spacing(&self, side: Side, boundary: bool) -> f64 {
        let d = match side {
            Side::East | Side::West => self.dx(),
            Side::North | Side::South => self.dy(),
        };
        if boundary {
            0.5 * d
        } else {
            d
        }
    }

    /// Stream function at vertex (iv, jv): zero on the boundary, the mean of
    /// the four adjacent cells inside.
    fn psi_vertex(&self, psi: &[f64], iv: usize, jv: usize) -> f64 {
        if iv == 0 || jv == 0 || iv == self.nx || jv == self.ny {
            return 0.0;
        }
        0.25 * (psi[self.idx(iv - 1, jv - 1)]
            + psi[self.idx(iv, jv - 1)]
            + psi[self.idx(iv - 1, jv)]
            + psi[self.idx(iv, jv)])
    }

    /// Outward volume flux of `u = (psi_y, -psi_x)` through a face, from the
    /// vertex values at its two ends.
    fn outflow(&self, psi: &[f64], i: usize, j: usize, side: Side) -> f64 {
        let v = |iv, jv| self.psi_vertex(psi, iv, jv);
        match side {
            // u dy = psi(top) - psi(bottom)
            Side::East => v(i + 1, j + 1) - v(i + 1, j),
            Side::West => -(v(i, j + 1) - v(i, j)),
            // v dx = -(psi(right) - psi(left))
            Side::North => -(v(i + 1, j + 1) - v(i, j + 1)),
            Side::South => v(i + 1, j) - v(i, j),
        }
    }
}

/// Solves a dense system by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        assert!(a[col][col].abs() > 1e-300, "singular matrix");
        for row in col + 1..n {
            let m = a[row][col] / a[col][col];
            if m == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= m * a[col][k];
            }
            b[row] -= m * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

fn zero_matrix(n: usize) -> Vec<Vec<f64>> {
    vec![vec![0.0; n]; n]
}

/// Gauss gradient magnitude scaled by `max(1, max |grad q|)`. Boundary face
/// values of q are `y`.
pub fn indicator(g: &Grid, q: &[f64]) -> Vec<f64> {
    let vol = g.dx() * g.dy();
    let mut mags = Vec::with_capacity(g.n());
    for j in 0..g.ny {
        for i in 0..g.nx {
            let mut grad = [0.0, 0.0];
            for side in SIDES {
                let (len, n) = g.face_geometry(side);
                let face_value = match g.neighbour(i, j, side) {
                    Some((a, b)) => 0.5 * (q[g.idx(i, j)] + q[g.idx(a, b)]),
                    None => g.face_mid(i, j, side).1,
                };
                grad[0] += face_value * len * n[0];
                grad[1] += face_value * len * n[1];
            }
            mags.push((grad[0] / vol).hypot(grad[1] / vol));
        }
    }
    let max = mags.iter().cloned().fold(0.0, f64::max).max(1.0);
    mags.iter().map(|m| m / max).collect()
}

/// One step from `(q_n, psi_n)`: transport, filter with `q_bar = y` on the
/// boundary, then Poisson with `psi = 0` on the boundary.
#[allow(clippy::too_many_arguments)]
pub fn dense_step(
    g: &Grid,
    ro: f64,
    re: f64,
    dt: f64,
    alpha: f64,
    filter: Filter,
    forcing: impl Fn(f64, f64) -> f64,
    q_n: &[f64],
    psi_n: &[f64],
) -> StepOutput {
    let n = g.n();
    let vol = g.dx() * g.dy();

    // transport
    let mut m = zero_matrix(n);
    let mut rhs = vec![0.0; n];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let p = g.idx(i, j);
            let (x, y) = g.centre(i, j);
            m[p][p] += 1.0 / dt;
            rhs[p] = forcing(x, y) + q_n[p] / dt;
            for side in SIDES {
                let (len, _) = g.face_geometry(side);
                let phi = g.outflow(psi_n, i, j, side);
                match g.neighbour(i, j, side) {
                    Some((a, b)) => {
                        let nb = g.idx(a, b);
                        let k = len / (re * g.spacing(side, false) * vol);
                        m[p][p] += k + 0.5 * phi / vol;
                        m[p][nb] += -k + 0.5 * phi / vol;
                    }
                    None => {
                        let wall = g.face_mid(i, j, side).1;
                        let k = len / (re * g.spacing(side, true) * vol);
                        m[p][p] += k;
                        rhs[p] += k * wall - phi * wall / vol;
                    }
                }
            }
        }
    }
    let q = gauss_solve(m, rhs);

    // filter
    let (q_bar, a) = if filter == Filter::None || alpha == 0.0 {
        (q.clone(), vec![0.0; n])
    } else {
        let a = match filter {
            Filter::Linear => vec![1.0; n],
            _ => indicator(g, &q),
        };
        let mut m = zero_matrix(n);
        let mut rhs = q.clone();
        for j in 0..g.ny {
            for i in 0..g.nx {
                let p = g.idx(i, j);
                m[p][p] += 1.0;
                for side in SIDES {
                    let (len, _) = g.face_geometry(side);
                    match g.neighbour(i, j, side) {
                        Some((c, d)) => {
                            let nb = g.idx(c, d);
                            let af = 0.5 * (a[p] + a[nb]);
                            let k = alpha * alpha * af * len / (g.spacing(side, false) * vol);
                            m[p][p] += k;
                            m[p][nb] -= k;
                        }
                        None => {
                            let k = alpha * alpha * a[p] * len / (g.spacing(side, true) * vol);
                            m[p][p] += k;
                            rhs[p] += k * g.face_mid(i, j, side).1;
                        }
                    }
                }
            }
        }
        (gauss_solve(m, rhs), a)
    };

    // stream function
    let mut m = zero_matrix(n);
    let mut rhs = vec![0.0; n];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let p = g.idx(i, j);
            rhs[p] = q_bar[p] - g.centre(i, j).1;
            for side in SIDES {
                let (len, _) = g.face_geometry(side);
                let nb = g.neighbour(i, j, side);
                let k = ro * len / (g.spacing(side, nb.is_none()) * vol);
                m[p][p] += k;
                if let Some((c, d)) = nb {
                    m[p][g.idx(c, d)] -= k;
                }
            }
        }
    }
    let psi = gauss_solve(m, rhs);
    StepOutput { q, q_bar, psi, a }
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
