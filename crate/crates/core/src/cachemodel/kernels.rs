//! Canonical access sequences of the solver kernels.
//!
//! Values and vector entries are 8-byte doubles; row offsets and column
//! indices are modelled as 4-byte integers.

use super::trace::{Access, AccessSink, AccessTrace, AddressSpace, ArrayId};
use crate::workloads::CsrMatrix;

const F64: u32 = 8;
const IDX: u32 = 4;

/// Bytes moved by CSR SpMV `y = A x` when every array is loaded once and
/// `y` is loaded and stored once.
pub fn perfect_cache_spmv_bytes(m: u64, n: u64, nnz: u64) -> u64 {
    12 * nnz + 4 * (m + 1) + 8 * n + 16 * m
}

/// Address-space handles for the three CSR arrays.
#[derive(Debug, Clone, Copy)]
pub struct SpmvArrays {
    pub row_offsets: ArrayId,
    pub column_indices: ArrayId,
    pub values: ArrayId,
}

impl SpmvArrays {
    pub fn register(space: &mut AddressSpace, a: &CsrMatrix) -> Self {
        SpmvArrays {
            row_offsets: space.add_array("row_offsets", IDX as u64 * (a.nrows() as u64 + 1)),
            column_indices: space.add_array("column_indices", IDX as u64 * a.nnz() as u64),
            values: space.add_array("values", F64 as u64 * a.nnz() as u64),
        }
    }

    /// Emits `y = A x`: per row the two bounding offsets, per nonzero the
    /// column index, the value and `x[col]`, then one write of `y[i]`.
    pub fn emit(&self, sink: &mut impl AccessSink, a: &CsrMatrix, x: ArrayId, y: ArrayId) {
        let offsets = a.row_offsets();
        let cols = a.column_indices();
        for i in 0..a.nrows() {
            sink.record(Access::read(self.row_offsets, IDX as u64 * i as u64, IDX));
            sink.record(Access::read(self.row_offsets, IDX as u64 * (i as u64 + 1), IDX));
            for k in offsets[i]..offsets[i + 1] {
                sink.record(Access::read(self.column_indices, IDX as u64 * k as u64, IDX));
                sink.record(Access::read(self.values, F64 as u64 * k as u64, F64));
                sink.record(Access::read(x, F64 as u64 * cols[k] as u64, F64));
            }
            sink.record(Access::write(y, F64 as u64 * i as u64, F64));
        }
    }
}

/// Canonical SpMV trace for `y = A x` with `x` of length `x_len`.
pub fn trace_spmv(a: &CsrMatrix, x_len: usize) -> AccessTrace {
    let mut space = AddressSpace::new();
    let arrays = SpmvArrays::register(&mut space, a);
    let x = space.add_array("x", F64 as u64 * x_len as u64);
    let y = space.add_array("y", F64 as u64 * a.nrows() as u64);
    let mut trace = AccessTrace::new(space);
    arrays.emit(&mut trace, a, x, y);
    trace
}

/// Arrays touched by the Jacobi-preconditioned conjugate-gradient solver.
#[derive(Debug, Clone, Copy)]
pub struct CgArrays {
    pub matrix: SpmvArrays,
    pub b: ArrayId,
    pub x: ArrayId,
    pub r: ArrayId,
    pub z: ArrayId,
    pub p: ArrayId,
    pub q: ArrayId,
    pub inv_diag: ArrayId,
    n: usize,
}

impl CgArrays {
    pub fn register(space: &mut AddressSpace, a: &CsrMatrix) -> Self {
        let n = a.nrows();
        let matrix = SpmvArrays::register(space, a);
        let mut vec = |name: &str| space.add_array(name, F64 as u64 * n as u64);
        CgArrays {
            matrix,
            b: vec("b"),
            x: vec("x"),
            r: vec("r"),
            z: vec("z"),
            p: vec("p"),
            q: vec("q"),
            inv_diag: vec("inv_diag"),
            n,
        }
    }

    fn elementwise(&self, sink: &mut impl AccessSink, reads: &[ArrayId], write: Option<ArrayId>) {
        for i in 0..self.n as u64 {
            for &r in reads {
                sink.record(Access::read(r, F64 as u64 * i, F64));
            }
            if let Some(w) = write {
                sink.record(Access::write(w, F64 as u64 * i, F64));
            }
        }
    }

    /// Emits the traffic of a full solve that ran `iterations` iterations.
    /// When `converged` the last iteration stops after its residual check.
    pub fn emit_solve(&self, sink: &mut impl AccessSink, a: &CsrMatrix, iterations: u64, converged: bool) {
        // inverse diagonal
        let offsets = a.row_offsets();
        let cols = a.column_indices();
        for i in 0..self.n {
            let k = (offsets[i]..offsets[i + 1]).find(|&k| cols[k] == i).unwrap_or(offsets[i]);
            sink.record(Access::read(self.matrix.values, F64 as u64 * k as u64, F64));
            sink.record(Access::write(self.inv_diag, F64 as u64 * i as u64, F64));
        }
        self.elementwise(sink, &[], Some(self.x));
        self.elementwise(sink, &[self.b], Some(self.r));
        self.elementwise(sink, &[self.b], None); // ||b||
        if iterations == 0 {
            return;
        }
        self.elementwise(sink, &[self.inv_diag, self.r], Some(self.z));
        self.elementwise(sink, &[self.z], Some(self.p));
        self.elementwise(sink, &[self.r, self.z], None);

        for k in 1..=iterations {
            self.matrix.emit(sink, a, self.p, self.q);
            self.elementwise(sink, &[self.p, self.q], None);
            self.elementwise(sink, &[self.x, self.p], Some(self.x));
            self.elementwise(sink, &[self.r, self.q], Some(self.r));
            self.elementwise(sink, &[self.r], None);
            if converged && k == iterations {
                break;
            }
            self.elementwise(sink, &[self.inv_diag, self.r], Some(self.z));
            self.elementwise(sink, &[self.r, self.z], None);
            self.elementwise(sink, &[self.z, self.p], Some(self.p));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cachemodel::{simulate, AccessKind, CacheConfig};

    #[test]
    fn perfect_cache_examples() {
        assert_eq!(perfect_cache_spmv_bytes(3, 3, 3), 124);
        assert_eq!(perfect_cache_spmv_bytes(1, 1, 0), 32);
    }

    #[test]
    fn identity_trace_enumeration() {
        let a = CsrMatrix::identity(1);
        let t = trace_spmv(&a, 1);
        let kinds: Vec<(&str, AccessKind)> = t
            .accesses
            .iter()
            .map(|acc| (t.space.region(acc.array).unwrap().name.as_str(), acc.kind))
            .collect();
        assert_eq!(
            kinds,
            vec![
                ("row_offsets", AccessKind::Read),
                ("row_offsets", AccessKind::Read),
                ("column_indices", AccessKind::Read),
                ("values", AccessKind::Read),
                ("x", AccessKind::Read),
                ("y", AccessKind::Write),
            ]
        );
    }

    #[test]
    fn trace_length_and_determinism() {
        let a = CsrMatrix::from_triplets(3, 4, &[(0, 0, 1.0), (0, 3, 2.0), (2, 1, 3.0), (2, 2, 1.0), (1, 1, 5.0)])
            .unwrap();
        let t = trace_spmv(&a, 4);
        assert_eq!(t.len(), 2 * 3 + 3 * 5 + 3);
        let c = CacheConfig::e5_2680v2_core();
        assert_eq!(simulate(&t, &c).unwrap(), simulate(&trace_spmv(&a, 4), &c).unwrap());
    }
}
