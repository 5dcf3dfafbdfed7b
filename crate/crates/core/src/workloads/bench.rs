use std::time::Instant;

use thiserror::Error;

use super::assembly::{assemble_system, AssemblyError};
use super::error_norm::l2_error;
use super::mesh::build_mesh;
use super::solver::{solve_cg_jacobi, CgSolution, FlopCounter, SolveError};
use crate::cachemodel::{AddressSpace, CacheConfig, CgArrays, MissCounts, TraceError, TracingSimulator};
use crate::metrics::{CacheLevel, CacheLevelCounters, Discretization, RunRecord};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark config: {0}")]
    Config(String),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Total DOFs of a discretization on the `n`-segment tet mesh of the cube.
///
/// Continuous elements share nodes between cells; discontinuous elements
/// carry 4 (DG1) or 10 (DG2) private nodes per tetrahedron.
pub fn count_dofs(n: u64, discretization: Discretization) -> u64 {
    assert!(n >= 1, "n must be >= 1");
    let tets = 6 * n.pow(3);
    match discretization {
        Discretization::CG1 => (n + 1).pow(3),
        Discretization::CG2 => (2 * n + 1).pow(3),
        Discretization::DG1 => 4 * tets,
        Discretization::DG2 => 10 * tets,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub label: String,
    /// Segments per side; h = 1/n.
    pub n: usize,
    pub alpha: f64,
    /// Relative residual tolerance.
    pub tol: f64,
    pub max_iterations: u64,
    pub workers: usize,
    pub cache_model: Option<CacheConfig>,
    pub discretization: Discretization,
}

impl BenchConfig {
    pub fn new(n: usize, alpha: f64) -> Self {
        BenchConfig {
            label: "cg1".into(),
            n,
            alpha,
            tol: 1e-7,
            max_iterations: 10_000,
            workers: 1,
            cache_model: None,
            discretization: Discretization::CG1,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.n < 2 {
            return bad(format!("n = {} leaves no interior unknowns (need n >= 2)", self.n));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be a finite value >= 0, got {}", self.alpha));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad(format!("tol must be in (0, 1), got {}", self.tol));
        }
        if self.workers == 0 {
            return bad("workers must be >= 1".into());
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be >= 1".into());
        }
        if self.discretization != Discretization::CG1 {
            return bad(format!("only CG1 is solvable, {} is count-only", self.discretization));
        }
        if let Some(c) = &self.cache_model {
            if c.levels().len() > CacheLevel::ALL.len() {
                return bad(format!("cache model has {} levels, at most 3 are recorded", c.levels().len()));
            }
        }
        Ok(())
    }
}

/// Everything one benchmark run produced.
#[derive(Debug, Clone)]
pub struct BenchRun {
    pub record: RunRecord,
    pub solution: CgSolution,
    /// Interior unknowns actually solved for; `record.dofs` counts all vertices.
    pub interior_unknowns: usize,
    pub flops: FlopCounter,
    pub cache: Option<MissCounts>,
}

/// Builds the mesh, assembles, solves and measures the error for one config.
///
/// `wall_time` covers mesh generation, assembly and solve. Error evaluation
/// and cache simulation happen after the clock stops.
pub fn run_benchmark_detailed(config: &BenchConfig) -> Result<BenchRun, BenchError> {
    config.validate()?;
    let mut flops = FlopCounter::new();

    let start = Instant::now();
    let mesh = build_mesh(config.n);
    let system = assemble_system(&mesh, config.alpha)?;
    flops.assembly = system.flops;
    let solution = solve_cg_jacobi(
        &system.matrix,
        &system.rhs,
        config.tol,
        config.max_iterations,
        config.workers,
        &mut flops,
    )?;
    let wall_time = start.elapsed().as_secs_f64();

    let error = l2_error(&solution.u, &mesh);

    let cache = match &config.cache_model {
        Some(cfg) => {
            let mut space = AddressSpace::new();
            let arrays = CgArrays::register(&mut space, &system.matrix);
            let mut sim = TracingSimulator::new(space, cfg)?;
            arrays.emit_solve(&mut sim, &system.matrix, solution.iterations, true);
            Some(sim.finish()?)
        }
        None => None,
    };

    let mut record = RunRecord::new(
        config.label.clone(),
        count_dofs(config.n as u64, Discretization::CG1),
        wall_time,
        flops.total(),
        config.workers as u32,
    );
    record.linear_iterations = Some(solution.iterations);
    record.h_size = Some(mesh.h());
    record.l2_error = Some(error);
    record.alpha = Some(config.alpha);
    record.discretization = Some(Discretization::CG1);
    if let Some(counts) = &cache {
        record.cache_counters = counts
            .levels
            .iter()
            .zip(CacheLevel::ALL)
            .map(|(l, level)| CacheLevelCounters { level, misses: l.misses, line_size: counts.line_size })
            .collect();
    }

    Ok(BenchRun { record, solution, interior_unknowns: mesh.interior_count(), flops, cache })
}

pub fn run_benchmark(config: &BenchConfig) -> Result<RunRecord, BenchError> {
    run_benchmark_detailed(config).map(|run| run.record)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dof_counts() {
        assert_eq!(count_dofs(20, Discretization::CG1), 9_261);
        assert_eq!(count_dofs(20, Discretization::CG2), 68_921);
        assert_eq!(count_dofs(20, Discretization::DG1), 192_000);
        assert_eq!(count_dofs(20, Discretization::DG2), 480_000);
        assert_eq!(count_dofs(40, Discretization::DG2), 3_840_000);
        assert_eq!(count_dofs(1, Discretization::CG1), 8);
        for n in 1..50 {
            assert_eq!(count_dofs(n, Discretization::CG2), count_dofs(2 * n, Discretization::CG1));
        }
    }

    #[test]
    fn config_validation() {
        assert!(BenchConfig::new(4, 0.0).validate().is_ok());
        assert!(BenchConfig::new(1, 0.0).validate().is_err());
        assert!(BenchConfig::new(4, -1.0).validate().is_err());
        let mut c = BenchConfig::new(4, 0.0);
        c.tol = 0.0;
        assert!(c.validate().is_err());
        c.tol = 1e-7;
        c.discretization = Discretization::DG1;
        assert!(c.validate().is_err());
        c.discretization = Discretization::CG1;
        c.workers = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn small_run() {
        let run = run_benchmark_detailed(&BenchConfig::new(4, 0.0)).unwrap();
        assert_eq!(run.record.dofs, 125);
        assert_eq!(run.interior_unknowns, 27);
        assert_eq!(run.record.workers, 1);
        assert!(run.record.l2_error.unwrap() > 0.0);
        assert!(run.record.wall_time > 0.0);
        assert_eq!(run.record.flops, run.flops.total());
        assert!(run.record.cache_counters.is_empty());
    }
}
