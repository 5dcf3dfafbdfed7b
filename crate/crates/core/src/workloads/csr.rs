use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CsrError {
    #[error("row_offsets has length {got}, expected {expected}")]
    OffsetsLength { expected: usize, got: usize },
    #[error("row_offsets must start at 0, be nondecreasing and end at nnz")]
    Offsets,
    #[error("column_indices and values lengths differ ({0} vs {1})")]
    Lengths(usize, usize),
    #[error("row {row}: column indices must be strictly increasing and < {ncols}")]
    Columns { row: usize, ncols: usize },
    #[error("triplet ({row}, {col}) outside {nrows}x{ncols}")]
    TripletOutOfRange { row: usize, col: usize, nrows: usize, ncols: usize },
}

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    column_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(
        nrows: usize,
        ncols: usize,
        row_offsets: Vec<usize>,
        column_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, CsrError> {
        if row_offsets.len() != nrows + 1 {
            return Err(CsrError::OffsetsLength { expected: nrows + 1, got: row_offsets.len() });
        }
        if column_indices.len() != values.len() {
            return Err(CsrError::Lengths(column_indices.len(), values.len()));
        }
        if row_offsets[0] != 0
            || row_offsets[nrows] != column_indices.len()
            || row_offsets.windows(2).any(|w| w[0] > w[1])
        {
            return Err(CsrError::Offsets);
        }
        for row in 0..nrows {
            let cols = &column_indices[row_offsets[row]..row_offsets[row + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.last().is_some_and(|&c| c >= ncols) {
                return Err(CsrError::Columns { row, ncols });
            }
        }
        Ok(CsrMatrix { nrows, ncols, row_offsets, column_indices, values })
    }

    /// Builds a matrix from (row, col, value) entries, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self, CsrError> {
        let mut sorted = triplets.to_vec();
        for &(row, col, _) in &sorted {
            if row >= nrows || col >= ncols {
                return Err(CsrError::TripletOutOfRange { row, col, nrows, ncols });
            }
        }
        // stable sort keeps the summation order of duplicates deterministic
        sorted.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_offsets = vec![0usize; nrows + 1];
        let mut column_indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                column_indices.push(c);
                values.push(v);
                row_offsets[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Self::new(nrows, ncols, row_offsets, column_indices, values)
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_offsets: (0..=n).collect(),
            column_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn column_indices(&self) -> &[usize] {
        &self.column_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        self.column_indices[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        match self.column_indices[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// `y[i] = sum_k A[i, k] x[k]` for rows `first..first + y.len()`.
    pub fn spmv_rows(&self, first: usize, x: &[f64], y: &mut [f64]) {
        for (local, yi) in y.iter_mut().enumerate() {
            let i = first + local;
            let mut acc = 0.0;
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                acc += self.values[k] * x[self.column_indices[k]];
            }
            *yi = acc;
        }
    }

    pub fn spmv(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        self.spmv_rows(0, x, y);
    }

    /// Largest |A[i, j] - A[j, i]| over stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                let t = if j < self.nrows { self.get(j, i) } else { 0.0 };
                worst = worst.max((v - t).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }
}
