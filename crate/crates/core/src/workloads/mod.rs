//! Built-in finite-element benchmark: structured tet meshes of the unit
//! cube, CG1 assembly of steady (optionally anisotropic) diffusion with a
//! manufactured solution, a FLOP-counted Jacobi-CG solve, L2 error, DOF
//! counts for four discretizations and a STREAM triad.

mod assembly;
mod bench;
mod csr;
mod diffusion;
mod error_norm;
mod mesh;
mod quadrature;
mod solver;
mod triad;

pub use assembly::{assemble_full_stiffness, assemble_system, assemble_system_with, AssembledSystem, AssemblyError};
pub use bench::{count_dofs, run_benchmark, run_benchmark_detailed, BenchConfig, BenchError, BenchRun};
pub use csr::{CsrError, CsrMatrix};
pub use diffusion::{diffusivity_tensor, exact_solution, manufactured_solution, Mat3};
pub use error_norm::l2_error;
pub use mesh::{build_mesh, tet_volume, StructuredTetMesh};
pub use quadrature::{map_point, TetRule};
pub use solver::{solve_cg_jacobi, CgSolution, FlopCounter, SolveError, BLOCK_ROWS};
pub use triad::{stream_triad, TriadError, TriadResult, TRIAD_BYTES_PER_ITER, TRIAD_REPETITIONS};
