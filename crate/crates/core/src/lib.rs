//! Performance-spectrum toolkit: arithmetic intensity and rate metrics over
//! solver run records, a finite-element benchmark that produces those
//! records, a set-associative cache simulator standing in for hardware
//! counters, and static-scaling reports.

pub mod cachemodel;
pub mod ingest;
pub mod metrics;
pub mod report;
pub mod workloads;

pub use metrics::{CacheLevel, CacheLevelCounters, Discretization, RunRecord, ScalingSeries, SpectrumPoint, StaticScaling};
