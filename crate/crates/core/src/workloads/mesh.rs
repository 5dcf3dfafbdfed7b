/// Axis orderings of the six Freudenthal tetrahedra of a cell, each paired
/// with the parity of the permutation.
const CELL_PATHS: [([usize; 3], bool); 6] = [
    ([0, 1, 2], true),
    ([0, 2, 1], false),
    ([1, 0, 2], false),
    ([1, 2, 0], true),
    ([2, 0, 1], true),
    ([2, 1, 0], false),
];

/// Structured tetrahedral mesh of the unit cube with `n` segments per side.
///
/// Vertices are implicit at `(i, j, k) / n`. Each of the `n³` cells is split
/// into six tetrahedra that share the cell diagonal from `(0,0,0)` to
/// `(1,1,1)`; every tetrahedron is positively oriented.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructuredTetMesh {
    n: usize,
}

pub fn build_mesh(n: usize) -> StructuredTetMesh {
    StructuredTetMesh::new(n)
}

impl StructuredTetMesh {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "mesh needs at least one segment per side");
        StructuredTetMesh { n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn vertex_count(&self) -> u64 {
        (self.n as u64 + 1).pow(3)
    }

    pub fn element_count(&self) -> u64 {
        6 * (self.n as u64).pow(3)
    }

    pub fn vertex_index(&self, i: usize, j: usize, k: usize) -> usize {
        let m = self.n + 1;
        i + m * (j + m * k)
    }

    pub fn vertex_ijk(&self, v: usize) -> [usize; 3] {
        let m = self.n + 1;
        [v % m, (v / m) % m, v / (m * m)]
    }

    pub fn vertex_coords(&self, v: usize) -> [f64; 3] {
        let n = self.n as f64;
        self.vertex_ijk(v).map(|c| c as f64 / n)
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.vertex_ijk(v).iter().any(|&c| c == 0 || c == self.n)
    }

    /// Number of vertices strictly inside the cube.
    pub fn interior_count(&self) -> usize {
        self.n.saturating_sub(1).pow(3)
    }

    /// Position of an interior vertex in the interior numbering, or `None`
    /// for boundary vertices.
    pub fn interior_index(&self, v: usize) -> Option<usize> {
        let [i, j, k] = self.vertex_ijk(v);
        let m = self.n - 1;
        let inside = |c: usize| c >= 1 && c < self.n;
        (inside(i) && inside(j) && inside(k)).then(|| (i - 1) + m * ((j - 1) + m * (k - 1)))
    }

    /// Global vertex of interior unknown `idx`.
    pub fn interior_vertex(&self, idx: usize) -> usize {
        let m = self.n - 1;
        self.vertex_index(idx % m + 1, (idx / m) % m + 1, idx / (m * m) + 1)
    }

    /// The four vertices of tetrahedron `t` (0..6) of cell `(ci, cj, ck)`.
    pub fn cell_tet(&self, ci: usize, cj: usize, ck: usize, t: usize) -> [usize; 4] {
        let (axes, even) = CELL_PATHS[t];
        let mut p = [ci, cj, ck];
        let v0 = self.vertex_index(p[0], p[1], p[2]);
        p[axes[0]] += 1;
        let v1 = self.vertex_index(p[0], p[1], p[2]);
        p[axes[1]] += 1;
        let v2 = self.vertex_index(p[0], p[1], p[2]);
        let v3 = self.vertex_index(ci + 1, cj + 1, ck + 1);
        if even {
            [v0, v1, v2, v3]
        } else {
            [v0, v1, v3, v2]
        }
    }

    /// All tetrahedra, cell by cell in `i`-fastest order.
    pub fn elements(&self) -> impl Iterator<Item = [usize; 4]> + '_ {
        let n = self.n;
        (0..n).flat_map(move |ck| {
            (0..n).flat_map(move |cj| (0..n).flat_map(move |ci| (0..6).map(move |t| self.cell_tet(ci, cj, ck, t))))
        })
    }

    pub fn element_coords(&self, tet: &[usize; 4]) -> [[f64; 3]; 4] {
        tet.map(|v| self.vertex_coords(v))
    }
}

/// Signed volume of a tetrahedron.
pub fn tet_volume(p: &[[f64; 3]; 4]) -> f64 {
    let d = |a: usize| [p[a][0] - p[0][0], p[a][1] - p[0][1], p[a][2] - p[0][2]];
    let (a, b, c) = (d(1), d(2), d(3));
    let det = a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0]);
    det / 6.0
}
