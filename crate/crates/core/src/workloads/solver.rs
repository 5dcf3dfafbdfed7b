//! Jacobi-preconditioned conjugate gradients with manual FLOP counting.
//!
//! Vector kernels run over fixed-size row blocks. Reductions sum each block
//! sequentially and then combine block partials in block order, so results
//! are bitwise identical for any worker count.

use rayon::prelude::*;
use thiserror::Error;

use super::csr::CsrMatrix;

/// Rows per parallel block. Fixed so reduction order never depends on the
/// number of workers.
pub const BLOCK_ROWS: usize = 2048;

/// FLOPs by kernel, counted with the convention SpMV `2 nnz`, dot `2n`,
/// axpy `2n`, norm `2n`, Jacobi apply `n`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlopCounter {
    pub assembly: u64,
    pub spmv: u64,
    pub dot: u64,
    pub axpy: u64,
    pub norm: u64,
    pub jacobi: u64,
}

impl FlopCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn total(&self) -> u64 {
        self.assembly + self.spmv + self.dot + self.axpy + self.norm + self.jacobi
    }

    pub fn solver_total(&self) -> u64 {
        self.total() - self.assembly
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgSolution {
    pub u: Vec<f64>,
    pub iterations: u64,
    /// Final recursively updated residual norm.
    pub residual_norm: f64,
    pub rhs_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("zero diagonal entry in row {0}")]
    ZeroDiagonal(usize),
    #[error("dimension mismatch: matrix {rows}x{cols}, rhs {rhs}")]
    Dimension { rows: usize, cols: usize, rhs: usize },
    #[error("tolerance {0} outside (0, 1)")]
    Tolerance(f64),
    #[error("workers must be >= 1")]
    Workers,
    #[error("matrix is not positive definite (p.Ap = {0})")]
    Breakdown(f64),
    #[error(
        "no convergence after {} iterations (relative residual {:.3e})",
        .best.iterations,
        .best.residual_norm / .best.rhs_norm
    )]
    NotConverged { best: Box<CgSolution> },
    #[error("thread pool: {0}")]
    Pool(String),
}

struct Kernels<'a> {
    pool: rayon::ThreadPool,
    counter: &'a mut FlopCounter,
}

impl Kernels<'_> {
    fn spmv(&mut self, a: &CsrMatrix, x: &[f64], y: &mut [f64]) {
        self.pool.install(|| {
            y.par_chunks_mut(BLOCK_ROWS).enumerate().for_each(|(b, chunk)| a.spmv_rows(b * BLOCK_ROWS, x, chunk));
        });
        self.counter.spmv += 2 * a.nnz() as u64;
    }

    fn reduce(&self, u: &[f64], v: &[f64]) -> f64 {
        let partials: Vec<f64> = self.pool.install(|| {
            u.par_chunks(BLOCK_ROWS)
                .zip(v.par_chunks(BLOCK_ROWS))
                .map(|(a, b)| a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y))
                .collect()
        });
        partials.iter().sum()
    }

    fn dot(&mut self, u: &[f64], v: &[f64]) -> f64 {
        self.counter.dot += 2 * u.len() as u64;
        self.reduce(u, v)
    }

    fn norm(&mut self, u: &[f64]) -> f64 {
        self.counter.norm += 2 * u.len() as u64;
        self.reduce(u, u).sqrt()
    }

    /// `y = y + s x`
    fn axpy(&mut self, s: f64, x: &[f64], y: &mut [f64]) {
        self.pool.install(|| {
            y.par_chunks_mut(BLOCK_ROWS).zip(x.par_chunks(BLOCK_ROWS)).for_each(|(yc, xc)| {
                for (yi, xi) in yc.iter_mut().zip(xc) {
                    *yi += s * xi;
                }
            })
        });
        self.counter.axpy += 2 * x.len() as u64;
    }

    /// `y = x + s y`
    fn aypx(&mut self, s: f64, x: &[f64], y: &mut [f64]) {
        self.pool.install(|| {
            y.par_chunks_mut(BLOCK_ROWS).zip(x.par_chunks(BLOCK_ROWS)).for_each(|(yc, xc)| {
                for (yi, xi) in yc.iter_mut().zip(xc) {
                    *yi = xi + s * *yi;
                }
            })
        });
        self.counter.axpy += 2 * x.len() as u64;
    }

    /// `z = inv_diag ⊙ r`
    fn jacobi(&mut self, inv_diag: &[f64], r: &[f64], z: &mut [f64]) {
        self.pool.install(|| {
            z.par_chunks_mut(BLOCK_ROWS)
                .zip(r.par_chunks(BLOCK_ROWS).zip(inv_diag.par_chunks(BLOCK_ROWS)))
                .for_each(|(zc, (rc, dc))| {
                    for ((zi, ri), di) in zc.iter_mut().zip(rc).zip(dc) {
                        *zi = di * ri;
                    }
                })
        });
        self.counter.jacobi += r.len() as u64;
    }
}

/// Solves `A u = b` from a zero initial guess until
/// `‖r‖₂ <= tol ‖b‖₂`, where `r` is the recursively updated residual.
///
/// On non-convergence the last iterate is returned inside
/// [`SolveError::NotConverged`].
pub fn solve_cg_jacobi(
    a: &CsrMatrix,
    b: &[f64],
    tol: f64,
    max_iterations: u64,
    workers: usize,
    counter: &mut FlopCounter,
) -> Result<CgSolution, SolveError> {
    let n = b.len();
    if a.nrows() != n || a.ncols() != n {
        return Err(SolveError::Dimension { rows: a.nrows(), cols: a.ncols(), rhs: n });
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(SolveError::Tolerance(tol));
    }
    if workers == 0 {
        return Err(SolveError::Workers);
    }
    let diag = a.diagonal();
    if let Some(row) = diag.iter().position(|&d| d == 0.0) {
        return Err(SolveError::ZeroDiagonal(row));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SolveError::Pool(e.to_string()))?;
    let mut k = Kernels { pool, counter };

    let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
    k.counter.jacobi += n as u64;

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let rhs_norm = k.norm(b);
    if rhs_norm == 0.0 {
        return Ok(CgSolution { u: x, iterations: 0, residual_norm: 0.0, rhs_norm });
    }
    let target = tol * rhs_norm;

    let mut z = vec![0.0; n];
    k.jacobi(&inv_diag, &r, &mut z);
    let mut p = z.clone();
    let mut rz = k.dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut residual_norm = rhs_norm;

    for it in 1..=max_iterations {
        k.spmv(a, &p, &mut q);
        let pq = k.dot(&p, &q);
        if !(pq > 0.0) {
            return Err(SolveError::Breakdown(pq));
        }
        let step = rz / pq;
        k.axpy(step, &p, &mut x);
        k.axpy(-step, &q, &mut r);
        residual_norm = k.norm(&r);
        if residual_norm <= target {
            return Ok(CgSolution { u: x, iterations: it, residual_norm, rhs_norm });
        }
        k.jacobi(&inv_diag, &r, &mut z);
        let rz_next = k.dot(&r, &z);
        let beta = rz_next / rz;
        k.aypx(beta, &z, &mut p);
        rz = rz_next;
    }

    Err(SolveError::NotConverged {
        best: Box::new(CgSolution { u: x, iterations: max_iterations, residual_norm, rhs_norm }),
    })
}
