//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use perf_spectrum::cachemodel::{Access, AccessKind, AccessTrace, AddressSpace, ArrayId, CacheConfig, LevelGeometry};
use rand::Rng;

/// Brute-force LRU hierarchy: each set is an unordered list of
/// `(line, last_use)` pairs, and the victim is found by a linear scan.
pub struct ReferenceLru {
    sets: Vec<u64>,
    ways: Vec<usize>,
    contents: Vec<Vec<Vec<(u64, u64)>>>,
    line_size: u64,
    clock: u64,
    pub misses: Vec<u64>,
    pub hits: Vec<u64>,
}

impl ReferenceLru {
    pub fn new(geometry: &[(u64, usize)], line_size: u64) -> Self {
        ReferenceLru {
            sets: geometry.iter().map(|g| g.0).collect(),
            ways: geometry.iter().map(|g| g.1).collect(),
            contents: geometry.iter().map(|&(s, _)| vec![Vec::new(); s as usize]).collect(),
            line_size,
            clock: 0,
            misses: vec![0; geometry.len()],
            hits: vec![0; geometry.len()],
        }
    }

    fn touch(&mut self, line: u64) {
        self.clock += 1;
        for lvl in 0..self.sets.len() {
            let set = &mut self.contents[lvl][(line % self.sets[lvl]) as usize];
            if let Some(entry) = set.iter_mut().find(|e| e.0 == line) {
                entry.1 = self.clock;
                self.hits[lvl] += 1;
                return;
            }
            self.misses[lvl] += 1;
            if set.len() == self.ways[lvl] {
                let (victim, _) = set.iter().enumerate().min_by_key(|(_, e)| e.1).unwrap();
                set.remove(victim);
            }
            set.push((line, self.clock));
        }
    }

    /// Every byte of `[addr, addr + len)` touches its line once per access.
    pub fn access(&mut self, addr: u64, len: u64) {
        let mut line = addr / self.line_size;
        let last = (addr + len - 1) / self.line_size;
        while line <= last {
            self.touch(line);
            line += 1;
        }
    }
}

pub fn config(geometry: &[(u64, usize)], line_size: u32) -> CacheConfig {
    let levels = geometry
        .iter()
        .enumerate()
        .map(|(i, &(sets, ways))| LevelGeometry {
            name: format!("L{}", i + 1),
            size_bytes: sets * ways as u64 * line_size as u64,
            ways: ways as u32,
        })
        .collect();
    CacheConfig::new(levels, line_size).unwrap()
}

/// Random trace over a few small arrays, with explicit base addresses so the
/// oracle can resolve accesses without the library's address space.
pub fn random_trace(rng: &mut impl Rng, max_len: usize) -> (AccessTrace, Vec<(u64, u64)>) {
    let mut space = AddressSpace::new();
    let narrays = rng.gen_range(1..=3);
    let mut arrays: Vec<(ArrayId, u64, u64)> = Vec::new();
    let mut base = rng.gen_range(0..4) * 32;
    for i in 0..narrays {
        let size = rng.gen_range(8..2048u64);
        let id = space.place(format!("a{i}"), base, size);
        arrays.push((id, base, size));
        base += size + rng.gen_range(0..256);
    }
    let mut trace = AccessTrace::new(space);
    let mut resolved = Vec::new();
    for _ in 0..rng.gen_range(1..=max_len) {
        let (id, base, size) = arrays[rng.gen_range(0..arrays.len())];
        let len = rng.gen_range(1..=16u64.min(size));
        let offset = rng.gen_range(0..=size - len);
        let kind = if rng.gen_bool(0.3) { AccessKind::Write } else { AccessKind::Read };
        trace.accesses.push(Access { array: id, offset, len: len as u32, kind });
        resolved.push((base + offset, len));
    }
    (trace, resolved)
}

/// Solves a dense system by Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Inverse of a 4x4 matrix by Gauss-Jordan elimination.
pub fn invert4(m: [[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut a = m;
    let mut inv = [[0.0; 4]; 4];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for col in 0..4 {
        let p = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, p);
        inv.swap(col, p);
        let d = a[col][col];
        for k in 0..4 {
            a[col][k] /= d;
            inv[col][k] /= d;
        }
        for row in 0..4 {
            if row != col {
                let f = a[row][col];
                for k in 0..4 {
                    a[row][k] -= f * a[col][k];
                    inv[row][k] -= f * inv[col][k];
                }
            }
        }
    }
    inv
}

/// Freudenthal tetrahedra of the `n`-cell cube as sorted vertex-coordinate
/// sets: each follows a monotone lattice path from a cell's low corner to its
/// high corner, one axis per step.
pub fn freudenthal_tets(n: usize) -> Vec<[[usize; 3]; 4]> {
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for perm in perms {
                    let mut p = [i, j, k];
                    let mut verts = [p; 4];
                    for (s, &axis) in perm.iter().enumerate() {
                        p[axis] += 1;
                        verts[s + 1] = p;
                    }
                    verts.sort();
                    out.push(verts);
                }
            }
        }
    }
    out.sort();
    out
}
