//! Compressed-row sparse matrices and Jacobi-preconditioned Krylov solvers.
//!
//! All reductions run sequentially in index order so repeated solves are
//! bitwise reproducible.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("breakdown after {iterations} iterations: {reason} (residual {residual:e})")]
    Breakdown {
        iterations: usize,
        residual: f64,
        reason: &'static str,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("zero diagonal entry in row {0}")]
    ZeroDiagonal(usize),
    #[error("invalid solver settings: {0}")]
    Settings(String),
}

/// Square matrix in compressed sparse row form. Column indices are strictly
/// increasing within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_offsets: Vec<usize>,
    columns: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(
        n: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, SolveError> {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        if let Some(&(r, c, _)) = entries.iter().find(|&&(r, c, _)| r >= n || c >= n) {
            return Err(SolveError::Dimension(format!(
                "entry ({r}, {c}) outside {n}x{n}"
            )));
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_offsets = vec![0; n + 1];
        let mut columns = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().expect("previous entry") += v;
            } else {
                columns.push(c);
                values.push(v);
                row_offsets[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_offsets[r + 1] += row_offsets[r];
        }
        Ok(SparseMatrix {
            n,
            row_offsets,
            columns,
            values,
        })
    }

    /// Assembles directly from a prepared structure. The caller guarantees
    /// sorted, in-range columns.
    pub(crate) fn from_raw(
        n: usize,
        row_offsets: Vec<usize>,
        columns: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(row_offsets.len(), n + 1);
        debug_assert_eq!(columns.len(), values.len());
        SparseMatrix {
            n,
            row_offsets,
            columns,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            n,
            row_offsets: (0..=n).collect(),
            columns: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self, SolveError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(SolveError::Dimension("dense matrix is not square".into()));
        }
        let triplets = rows.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(move |(j, &v)| (i, j, v))
        });
        Self::from_triplets(n, triplets)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_offsets[i]..self.row_offsets[i + 1];
        self.columns[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_offsets[i]..self.row_offsets[i + 1];
        match self.columns[span.clone()].binary_search(&j) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n]; self.n];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        out
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                acc += self.values[k] * x[self.columns[k]];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `b - A x`.
    pub fn residual(&self, b: &[f64], x: &[f64]) -> Vec<f64> {
        let mut r = self.mul_vec(x);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        r
    }

    /// Entrywise symmetry check.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| (v - self.get(j, i)).abs() <= tol))
    }
}

/// Diagonal scaling `M^-1 = diag(A)^-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiPreconditioner {
    inv_diag: Vec<f64>,
}

pub fn jacobi_preconditioner(a: &SparseMatrix) -> Result<JacobiPreconditioner, SolveError> {
    let inv_diag = a
        .diagonal()
        .into_iter()
        .enumerate()
        .map(|(i, d)| {
            if d == 0.0 || !d.is_finite() {
                Err(SolveError::ZeroDiagonal(i))
            } else {
                Ok(1.0 / d)
            }
        })
        .collect::<Result<_, _>>()?;
    Ok(JacobiPreconditioner { inv_diag })
}

impl JacobiPreconditioner {
    pub fn apply_into(&self, r: &[f64], z: &mut [f64]) {
        for ((zi, ri), di) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * di;
        }
    }

    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; r.len()];
        self.apply_into(r, &mut z);
        z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreconditionerKind {
    None,
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// `None` means ten times the system size.
    pub max_iterations: Option<usize>,
    pub preconditioner: PreconditionerKind,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_iterations: None,
            preconditioner: PreconditionerKind::Jacobi,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(SolveError::Settings("tolerances must be positive".into()));
        }
        if self.max_iterations == Some(0) {
            return Err(SolveError::Settings("max_iterations must be at least 1".into()));
        }
        Ok(())
    }

    fn max_iterations_for(&self, n: usize) -> usize {
        self.max_iterations.unwrap_or(10 * n.max(1))
    }

    fn target(&self, b_norm: f64) -> f64 {
        (self.rel_tol * b_norm).max(self.abs_tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Two-norm of the true residual `b - A x`.
    pub residual: f64,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn check_dims(a: &SparseMatrix, b: &[f64], x0: &[f64]) -> Result<(), SolveError> {
    if b.len() != a.dim() || x0.len() != a.dim() {
        return Err(SolveError::Dimension(format!(
            "matrix {n}x{n}, rhs {}, initial guess {}",
            b.len(),
            x0.len(),
            n = a.dim()
        )));
    }
    Ok(())
}

enum Precond {
    Identity,
    Jacobi(JacobiPreconditioner),
}

impl Precond {
    fn new(a: &SparseMatrix, kind: PreconditionerKind) -> Result<Self, SolveError> {
        Ok(match kind {
            PreconditionerKind::None => Precond::Identity,
            PreconditionerKind::Jacobi => Precond::Jacobi(jacobi_preconditioner(a)?),
        })
    }

    fn apply_into(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Precond::Identity => z.copy_from_slice(r),
            Precond::Jacobi(j) => j.apply_into(r, z),
        }
    }
}

/// Preconditioned conjugate gradients for symmetric positive definite `a`.
///
/// Stops once `||b - A x|| <= max(rel_tol * ||b||, abs_tol)`; the recursive
/// residual is re-checked against the true one before returning.
pub fn cg_solve(
    a: &SparseMatrix,
    b: &[f64],
    x0: &[f64],
    cfg: &SolverConfig,
) -> Result<Solution, SolveError> {
    cfg.validate()?;
    check_dims(a, b, x0)?;
    debug_assert!(a.is_symmetric(1e-12 * a.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()))));
    let n = a.dim();
    let m = Precond::new(a, cfg.preconditioner)?;
    let target = cfg.target(norm2(b));
    let max_iter = cfg.max_iterations_for(n);

    let mut x = x0.to_vec();
    let mut r = a.residual(b, &x);
    let mut r_norm = norm2(&r);
    if r_norm <= target {
        return Ok(Solution {
            x,
            iterations: 0,
            residual: r_norm,
        });
    }
    let mut z = vec![0.0; n];
    let mut ap = vec![0.0; n];
    m.apply_into(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);

    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(SolveError::Breakdown {
                iterations: it,
                residual: r_norm,
                reason: "p^T A p is not positive",
            });
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        r_norm = norm2(&r);
        if r_norm <= target {
            let true_r = a.residual(b, &x);
            let true_norm = norm2(&true_r);
            if true_norm <= target {
                return Ok(Solution {
                    x,
                    iterations: it,
                    residual: true_norm,
                });
            }
            // Recursive residual drifted; restart from the true one.
            r = true_r;
            r_norm = true_norm;
            m.apply_into(&r, &mut z);
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        m.apply_into(&r, &mut z);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolveError::NotConverged {
        iterations: max_iter,
        residual: norm2(&a.residual(b, &x)),
    })
}

/// Right-preconditioned BiCGSTAB for general nonsingular `a`.
pub fn bicgstab_solve(
    a: &SparseMatrix,
    b: &[f64],
    x0: &[f64],
    cfg: &SolverConfig,
) -> Result<Solution, SolveError> {
    cfg.validate()?;
    check_dims(a, b, x0)?;
    let n = a.dim();
    let m = Precond::new(a, cfg.preconditioner)?;
    let target = cfg.target(norm2(b));
    let max_iter = cfg.max_iterations_for(n);

    let mut x = x0.to_vec();
    let mut r = a.residual(b, &x);
    let mut r_norm = norm2(&r);
    if r_norm <= target {
        return Ok(Solution {
            x,
            iterations: 0,
            residual: r_norm,
        });
    }
    let mut r_hat = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];

    let breakdown = |iterations, residual, reason| SolveError::Breakdown {
        iterations,
        residual,
        reason,
    };

    let mut it = 0;
    while it < max_iter {
        it += 1;
        let rho_next = dot(&r_hat, &r);
        if rho_next == 0.0 || !rho_next.is_finite() {
            return Err(breakdown(it, r_norm, "rho vanished"));
        }
        if it == 1 {
            p.copy_from_slice(&r);
        } else {
            let beta = (rho_next / rho) * (alpha / omega);
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
        }
        rho = rho_next;
        m.apply_into(&p, &mut p_hat);
        a.mul_vec_into(&p_hat, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == 0.0 || !rv.is_finite() {
            return Err(breakdown(it, r_norm, "r_hat . v vanished"));
        }
        alpha = rho / rv;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm2(&s) <= target {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            let true_r = a.residual(b, &x);
            let true_norm = norm2(&true_r);
            if true_norm <= target {
                return Ok(Solution {
                    x,
                    iterations: it,
                    residual: true_norm,
                });
            }
            r = true_r;
            r_norm = true_norm;
            r_hat.copy_from_slice(&r);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            v.iter_mut().for_each(|vi| *vi = 0.0);
            p.iter_mut().for_each(|pi| *pi = 0.0);
            continue;
        }
        m.apply_into(&s, &mut s_hat);
        a.mul_vec_into(&s_hat, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 || !tt.is_finite() {
            return Err(breakdown(it, r_norm, "t . t vanished"));
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        r_norm = norm2(&r);
        if r_norm <= target {
            let true_r = a.residual(b, &x);
            let true_norm = norm2(&true_r);
            if true_norm <= target {
                return Ok(Solution {
                    x,
                    iterations: it,
                    residual: true_norm,
                });
            }
            r = true_r;
            r_norm = true_norm;
            r_hat.copy_from_slice(&r);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            v.iter_mut().for_each(|vi| *vi = 0.0);
            p.iter_mut().for_each(|pi| *pi = 0.0);
            continue;
        }
        if omega == 0.0 {
            return Err(breakdown(it, r_norm, "omega vanished"));
        }
    }
    Err(SolveError::NotConverged {
        iterations: max_iter,
        residual: norm2(&a.residual(b, &x)),
    })
}
