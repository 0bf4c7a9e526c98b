//! Compressed-row sparse matrices and a Jacobi-preconditioned conjugate
//! gradient solver for the backward-Euler systems (all SPD by construction).

use crate::error::{CoreError, Result};

/// Square sparse matrix in CSR layout.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from per-row entry lists; each row must contain sorted,
    /// distinct column indices.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for (r, row) in rows.iter().enumerate() {
            let mut last: Option<usize> = None;
            for &(c, v) in row {
                if c >= n {
                    return Err(CoreError::invalid(format!("column {c} out of range in row {r}")));
                }
                if let Some(p) = last {
                    if c <= p {
                        return Err(CoreError::invalid(format!("row {r} columns not strictly increasing")));
                    }
                }
                last = Some(c);
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Pre-sized constructor used by the transport assembler: the sparsity
    /// pattern is fixed and values are rewritten in place each step.
    pub(crate) fn from_parts(n: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert_eq!(row_ptr.len(), n + 1);
        debug_assert_eq!(col_idx.len(), values.len());
        SparseMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for r in 0..self.n {
            let mut acc = 0.0;
            for e in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[e] * x[self.col_idx[e]];
            }
            y[r] = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for r in 0..self.n {
            for e in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.col_idx[e] == r {
                    d[r] = self.values[e];
                }
            }
        }
        d
    }
}

/// Outcome of one linear solve.
#[derive(Clone, Copy, Debug)]
pub struct SolveReport {
    pub iterations: usize,
    /// Relative 2-norm residual recomputed from one explicit A·x product.
    pub final_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Jacobi-preconditioned conjugate gradient.
///
/// Returns when ‖b − Ax‖₂ / ‖b‖₂ ≤ `tol`; the reported residual is
/// re-verified with an explicit matrix-vector product on exit.
pub fn solve(a: &SparseMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.dim();
    if b.len() != n {
        return Err(CoreError::invalid(format!(
            "rhs length {} does not match matrix dimension {n}",
            b.len()
        )));
    }
    if !(tol > 0.0) {
        return Err(CoreError::invalid("solver tolerance must be positive"));
    }

    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveReport {
                iterations: 0,
                final_residual: 0.0,
                converged: true,
            },
        ));
    }

    let diag = a.diagonal();
    let inv_diag: Vec<f64> = diag
        .iter()
        .map(|&d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        a.mul_vec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(CoreError::NumericalFailure(format!(
                "conjugate gradient breakdown: p'Ap = {pap}"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm2(&r) <= tol * b_norm {
            break;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    // verify the residual with one explicit product
    a.mul_vec(&x, &mut ap);
    let mut true_res = 0.0;
    for i in 0..n {
        let d = b[i] - ap[i];
        true_res += d * d;
    }
    let final_residual = true_res.sqrt() / b_norm;
    let converged = final_residual <= tol;
    let report = SolveReport {
        iterations,
        final_residual,
        converged,
    };
    Ok((x, report))
}
