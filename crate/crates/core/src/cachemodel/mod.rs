//! Cache-miss counts without hardware counters.
//!
//! Kernels describe their memory traffic as an [`AccessTrace`] over a flat
//! synthetic address space; [`simulate`] replays it through a multi-level
//! set-associative LRU hierarchy. [`perfect_cache_spmv_bytes`] is the
//! analytic load-once/store-once byte model for CSR SpMV.

mod config;
mod kernels;
mod sim;
mod trace;

pub use config::{CacheConfig, ConfigError, LevelGeometry};
pub use kernels::{perfect_cache_spmv_bytes, trace_spmv, CgArrays, SpmvArrays};
pub use sim::{simulate, CacheSimulator, LevelCounts, MissCounts, TracingSimulator};
pub use trace::{Access, AccessKind, AccessSink, AccessTrace, AddressSpace, ArrayId, ArrayRegion, TraceError};
