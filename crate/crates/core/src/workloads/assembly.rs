//! CG1 assembly of the steady-diffusion operator on a structured tet mesh.

use thiserror::Error;

use super::csr::CsrMatrix;
use super::diffusion::{diffusivity_tensor, manufactured_solution};
use super::mesh::StructuredTetMesh;
use super::quadrature::{map_point, TetRule};

// Manual FLOP tallies per element, adds and multiplies counted as one and
// divisions as one.
// edge vectors 9, cofactors and determinant 32, inverse 9, fourth gradient 6, volume 1
const GEOMETRY_FLOPS: u64 = 57;
// centroid 12, tensor 50
const TENSOR_FLOPS: u64 = 62;
// D g_j for four gradients 60, ten dot products scaled by volume 60
const STIFFNESS_FLOPS: u64 = 120;
// point mapping 21, forcing evaluation 91, weighted scatter 10
const LOAD_POINT_FLOPS: u64 = 122;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssemblyError {
    #[error("mesh with n = {0} has no interior vertices (need n >= 2)")]
    EmptyInterior(usize),
}

/// Interior-restricted system `A u = b` plus the FLOPs spent building it.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub flops: u64,
}

/// Constant gradients of the four barycentric coordinates and the volume.
pub(crate) fn element_gradients(p: &[[f64; 3]; 4]) -> ([[f64; 3]; 4], f64) {
    let e = |a: usize| [p[a][0] - p[0][0], p[a][1] - p[0][1], p[a][2] - p[0][2]];
    let (a, b, c) = (e(1), e(2), e(3));
    // rows of J^{-1} for J = [a b c] are (b x c, c x a, a x b) / det
    let cross = |u: [f64; 3], v: [f64; 3]| [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
    let bc = cross(b, c);
    let ca = cross(c, a);
    let ab = cross(a, b);
    let det = a[0] * bc[0] + a[1] * bc[1] + a[2] * bc[2];
    let g1 = bc.map(|v| v / det);
    let g2 = ca.map(|v| v / det);
    let g3 = ab.map(|v| v / det);
    let g0 = [0, 1, 2].map(|d| -(g1[d] + g2[d] + g3[d]));
    ([g0, g1, g2, g3], det.abs() / 6.0)
}

/// Symmetric element stiffness `vol * g_i · D g_j` with `D` at the centroid.
/// Only the upper triangle is computed; the lower one is mirrored so the
/// result is exactly symmetric.
pub(crate) fn element_stiffness(p: &[[f64; 3]; 4], alpha: f64) -> [[f64; 4]; 4] {
    let (g, vol) = element_gradients(p);
    let centroid = [0, 1, 2].map(|d| (p[0][d] + p[1][d] + p[2][d] + p[3][d]) * 0.25);
    let dm = diffusivity_tensor(centroid, alpha);
    let dg = g.map(|gj| [0, 1, 2].map(|r| dm[r][0] * gj[0] + dm[r][1] * gj[1] + dm[r][2] * gj[2]));
    let mut k = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in i..4 {
            let v = vol * (g[i][0] * dg[j][0] + g[i][1] * dg[j][1] + g[i][2] * dg[j][2]);
            k[i][j] = v;
            k[j][i] = v;
        }
    }
    k
}

/// Assembles the stiffness over the dofs selected by `dof_of` (vertex to
/// dof index, `None` for eliminated vertices) and the load of `source`.
fn assemble(
    mesh: &StructuredTetMesh,
    alpha: f64,
    ndofs: usize,
    dof_of: impl Fn(usize) -> Option<usize>,
    source: Option<&dyn Fn([f64; 3]) -> f64>,
) -> AssembledSystem {
    let rule = TetRule::degree2();
    let mut triplets = Vec::with_capacity(mesh.element_count() as usize * 16);
    let mut rhs = vec![0.0; ndofs];
    let mut flops = 0u64;

    for tet in mesh.elements() {
        let p = mesh.element_coords(&tet);
        let k = element_stiffness(&p, alpha);
        flops += GEOMETRY_FLOPS + TENSOR_FLOPS + STIFFNESS_FLOPS;
        let dofs = tet.map(&dof_of);
        for i in 0..4 {
            let Some(r) = dofs[i] else { continue };
            for j in 0..4 {
                if let Some(c) = dofs[j] {
                    triplets.push((r, c, k[i][j]));
                }
            }
        }
        if let Some(f) = source {
            if dofs.iter().all(Option::is_none) {
                continue;
            }
            let vol = super::mesh::tet_volume(&p).abs();
            for (l, w) in rule.points.iter().zip(&rule.weights) {
                let fx = f(map_point(&p, l)) * vol * w;
                for i in 0..4 {
                    if let Some(r) = dofs[i] {
                        rhs[r] += fx * l[i];
                    }
                }
            }
            flops += LOAD_POINT_FLOPS * rule.len() as u64;
        }
    }

    let matrix = CsrMatrix::from_triplets(ndofs, ndofs, &triplets).expect("dof indices are in range");
    // one add per merged duplicate
    flops += (triplets.len() - matrix.nnz()) as u64;
    AssembledSystem { matrix, rhs, flops }
}

/// Interior system for the manufactured-solution forcing with homogeneous
/// Dirichlet conditions on every face.
pub fn assemble_system(mesh: &StructuredTetMesh, alpha: f64) -> Result<AssembledSystem, AssemblyError> {
    let forcing = move |x: [f64; 3]| manufactured_solution(x, alpha).1;
    assemble_system_with(mesh, alpha, &forcing)
}

/// Interior system for an arbitrary source term.
pub fn assemble_system_with(
    mesh: &StructuredTetMesh,
    alpha: f64,
    source: &dyn Fn([f64; 3]) -> f64,
) -> Result<AssembledSystem, AssemblyError> {
    if mesh.n() < 2 {
        return Err(AssemblyError::EmptyInterior(mesh.n()));
    }
    Ok(assemble(mesh, alpha, mesh.interior_count(), |v| mesh.interior_index(v), Some(source)))
}

/// Stiffness over all vertices, before boundary elimination.
pub fn assemble_full_stiffness(mesh: &StructuredTetMesh, alpha: f64) -> CsrMatrix {
    assemble(mesh, alpha, mesh.vertex_count() as usize, Some, None).matrix
}
