//! Intensity and rate metrics over solver run records.
//!
//! Every function here is a pure function of its arguments. Intensity is
//! floating-point work per byte (or per miss) moved through a cache level;
//! rate is degrees of freedom solved per second, optionally normalised by
//! solver iterations or by worker count.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Line sizes accepted for a cache level, in bytes.
pub const VALID_LINE_SIZES: [u32; 4] = [32, 64, 128, 256];

/// Default band (in log-log slope units) within which a static-scaling
/// segment counts as flat.
pub const DEFAULT_FLAT_BAND: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("total bytes transferred is zero (missing cache data)")]
    ZeroTraffic,
    #[error("cache misses must be > 0")]
    ZeroMisses,
    #[error("wall time must be > 0, got {0}")]
    NonPositiveTime(f64),
    #[error("iterations must be >= 1")]
    ZeroIterations,
    #[error("workers must be >= 1")]
    ZeroWorkers,
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("mesh sizes must be distinct")]
    DegenerateFit,
    #[error("series {label:?}: {reason}")]
    InvalidSeries { label: String, reason: String },
    #[error("invalid record {label:?}: {reason}")]
    InvalidRecord { label: String, reason: String },
}

pub type Result<T> = std::result::Result<T, MetricsError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CacheLevel {
    L1,
    L2,
    L3,
}

impl CacheLevel {
    pub const ALL: [CacheLevel; 3] = [CacheLevel::L1, CacheLevel::L2, CacheLevel::L3];

    pub fn name(self) -> &'static str {
        match self {
            CacheLevel::L1 => "L1",
            CacheLevel::L2 => "L2",
            CacheLevel::L3 => "L3",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "L1" | "l1" => Some(CacheLevel::L1),
            "L2" | "l2" => Some(CacheLevel::L2),
            "L3" | "l3" => Some(CacheLevel::L3),
            _ => None,
        }
    }
}

impl fmt::Display for CacheLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Discretization {
    CG1,
    CG2,
    DG1,
    DG2,
}

impl Discretization {
    pub fn as_str(self) -> &'static str {
        match self {
            Discretization::CG1 => "CG1",
            Discretization::CG2 => "CG2",
            Discretization::DG1 => "DG1",
            Discretization::DG2 => "DG2",
        }
    }
}

impl fmt::Display for Discretization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Discretization {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "CG1" => Ok(Discretization::CG1),
            "CG2" => Ok(Discretization::CG2),
            "DG1" => Ok(Discretization::DG1),
            "DG2" => Ok(Discretization::DG2),
            other => Err(format!("unknown discretization {other:?}")),
        }
    }
}

/// Miss count for one cache level together with that level's line size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CacheLevelCounters {
    pub level: CacheLevel,
    pub misses: u64,
    pub line_size: u32,
}

/// One benchmark or solve execution.
///
/// Fields are public and unchecked; use [`crate::ingest::validate_record`]
/// to list invariant violations.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub label: String,
    /// Total discretization DOFs, Dirichlet boundary nodes included.
    pub dofs: u64,
    /// Seconds.
    pub wall_time: f64,
    pub flops: u64,
    pub cache_counters: Vec<CacheLevelCounters>,
    pub linear_iterations: Option<u64>,
    pub nonlinear_iterations: Option<u64>,
    pub workers: u32,
    pub h_size: Option<f64>,
    pub l2_error: Option<f64>,
    pub alpha: Option<f64>,
    pub discretization: Option<Discretization>,
}

impl RunRecord {
    pub fn new(label: impl Into<String>, dofs: u64, wall_time: f64, flops: u64, workers: u32) -> Self {
        RunRecord {
            label: label.into(),
            dofs,
            wall_time,
            flops,
            cache_counters: Vec::new(),
            linear_iterations: None,
            nonlinear_iterations: None,
            workers,
            h_size: None,
            l2_error: None,
            alpha: None,
            discretization: None,
        }
    }

    pub fn counters(&self, level: CacheLevel) -> Option<&CacheLevelCounters> {
        self.cache_counters.iter().find(|c| c.level == level)
    }
}

/// Intensity figures for one cache level of one record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelIntensity {
    pub level: CacheLevel,
    pub misses: u64,
    pub tbt_bytes: u128,
    /// `None` when the level recorded no misses.
    pub ai_per_byte: Option<f64>,
    pub ai_per_miss: Option<f64>,
}

/// All derived metrics for one record.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumPoint {
    pub record: RunRecord,
    pub levels: Vec<LevelIntensity>,
    pub rate1: f64,
    pub rate2: Option<f64>,
    pub rate3: f64,
}

impl SpectrumPoint {
    pub fn from_record(record: &RunRecord) -> Result<Self> {
        let rate1 = rate1(record.dofs, record.wall_time)?;
        let rate2 = match record.linear_iterations {
            Some(k) => Some(rate2(record.dofs, record.wall_time, k)?),
            None => None,
        };
        let rate3 = rate3(record.dofs, record.wall_time, record.workers)?;

        let mut levels = Vec::with_capacity(record.cache_counters.len());
        for c in &record.cache_counters {
            if levels.iter().any(|l: &LevelIntensity| l.level == c.level) {
                return Err(MetricsError::InvalidRecord {
                    label: record.label.clone(),
                    reason: format!("duplicate counters for {}", c.level),
                });
            }
            let tbt = tbt_bytes(c.misses, c.line_size as u64);
            let (per_byte, per_miss) = if c.misses == 0 {
                (None, None)
            } else {
                (Some(ai_per_byte(record.flops, tbt)?), Some(ai_per_miss(record.flops, c.misses)?))
            };
            levels.push(LevelIntensity {
                level: c.level,
                misses: c.misses,
                tbt_bytes: tbt,
                ai_per_byte: per_byte,
                ai_per_miss: per_miss,
            });
        }
        levels.sort_by_key(|l| l.level);

        Ok(SpectrumPoint { record: record.clone(), levels, rate1, rate2, rate3 })
    }

    pub fn level(&self, level: CacheLevel) -> Option<&LevelIntensity> {
        self.levels.iter().find(|l| l.level == level)
    }

    pub fn dofs(&self) -> u64 {
        self.record.dofs
    }

    pub fn wall_time(&self) -> f64 {
        self.record.wall_time
    }
}

/// Points of one static-scaling study: fixed workers, increasing problem size.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingSeries {
    label: String,
    points: Vec<SpectrumPoint>,
}

impl ScalingSeries {
    /// Builds a series from points already sorted by DOFs.
    pub fn new(label: impl Into<String>, points: Vec<SpectrumPoint>) -> Result<Self> {
        let label = label.into();
        if let Some(first) = points.first() {
            let workers = first.record.workers;
            if points.iter().any(|p| p.record.workers != workers) {
                return Err(MetricsError::InvalidSeries {
                    label,
                    reason: "points do not share a worker count".into(),
                });
            }
        }
        if points.windows(2).any(|w| w[0].dofs() >= w[1].dofs()) {
            return Err(MetricsError::InvalidSeries {
                label,
                reason: "dofs must be strictly increasing".into(),
            });
        }
        Ok(ScalingSeries { label, points })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn points(&self) -> &[SpectrumPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Shape of a static-scaling curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StaticScaling {
    /// Rate holds steady across problem sizes.
    Flat,
    /// Rate falls off for the largest problems.
    TailOff,
    /// Rate is depressed for the smallest problems only.
    DipLeft,
    Mixed,
}

impl fmt::Display for StaticScaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StaticScaling::Flat => "flat",
            StaticScaling::TailOff => "tail-off",
            StaticScaling::DipLeft => "dip-left",
            StaticScaling::Mixed => "mixed",
        })
    }
}

/// Total bytes transferred through a level: misses times line size.
pub fn tbt_bytes(misses: u64, line_size: u64) -> u128 {
    misses as u128 * line_size as u128
}

pub fn ai_per_byte(flops: u64, tbt: u128) -> Result<f64> {
    if tbt == 0 {
        return Err(MetricsError::ZeroTraffic);
    }
    Ok(flops as f64 / tbt as f64)
}

/// Simplified intensity: FLOPs per cache miss.
pub fn ai_per_miss(flops: u64, misses: u64) -> Result<f64> {
    if misses == 0 {
        return Err(MetricsError::ZeroMisses);
    }
    Ok(flops as f64 / misses as f64)
}

fn check_time(wall_time: f64) -> Result<()> {
    if wall_time > 0.0 && wall_time.is_finite() {
        Ok(())
    } else {
        Err(MetricsError::NonPositiveTime(wall_time))
    }
}

/// DOFs solved per second.
pub fn rate1(dofs: u64, wall_time: f64) -> Result<f64> {
    check_time(wall_time)?;
    Ok(dofs as f64 / wall_time)
}

/// DOFs solved per second per solver iteration.
pub fn rate2(dofs: u64, wall_time: f64, iterations: u64) -> Result<f64> {
    if iterations == 0 {
        return Err(MetricsError::ZeroIterations);
    }
    // rate1 / k keeps rate2 * k within an ulp of rate1.
    Ok(rate1(dofs, wall_time)? / iterations as f64)
}

/// DOFs solved per second per worker.
pub fn rate3(dofs: u64, wall_time: f64, workers: u32) -> Result<f64> {
    if workers == 0 {
        return Err(MetricsError::ZeroWorkers);
    }
    Ok(rate1(dofs, wall_time)? / workers as f64)
}

/// Strong-scaling efficiency in percent relative to a baseline run.
///
/// `units` is whatever the concurrency is counted in (nodes, cores); only the
/// ratio matters. The raw value is returned; see [`display_percent`].
pub fn strong_scaling_efficiency(base_time: f64, base_units: u64, time: f64, units: u64) -> Result<f64> {
    check_time(base_time)?;
    check_time(time)?;
    if base_units == 0 || units == 0 {
        return Err(MetricsError::ZeroWorkers);
    }
    Ok(100.0 * (base_time * base_units as f64) / (time * units as f64))
}

/// Rounds a percentage to the nearest integer for display.
pub fn display_percent(raw: f64) -> i64 {
    raw.round() as i64
}

/// Rounds a slope to two decimals for display.
pub fn display_slope(raw: f64) -> String {
    format!("{raw:.2}")
}

/// Ordinary least-squares slope of `y` against `x`.
pub(crate) fn ols_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(MetricsError::DegenerateFit);
    }
    Ok(sxy / sxx)
}

/// Observed order of convergence: least-squares slope of ln(error) against ln(h).
pub fn convergence_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(MetricsError::TooFewPoints { needed: 2, got: points.len() });
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(h, e) in points {
        if !(h > 0.0 && h.is_finite()) {
            return Err(MetricsError::NonPositive { what: "mesh size", value: h });
        }
        if !(e > 0.0 && e.is_finite()) {
            return Err(MetricsError::NonPositive { what: "error", value: e });
        }
        xs.push(h.ln());
        ys.push(e.ln());
    }
    for (i, a) in xs.iter().enumerate() {
        if xs[i + 1..].contains(a) {
            return Err(MetricsError::DegenerateFit);
        }
    }
    ols_slope(&xs, &ys)
}

/// Slopes of ln(rate1) against ln(dofs) over the lower and upper halves of a
/// series. For an odd number of points the middle point belongs to both.
pub fn half_series_slopes(series: &ScalingSeries) -> Result<(f64, f64)> {
    let pts = series.points();
    if pts.len() < 3 {
        return Err(MetricsError::TooFewPoints { needed: 3, got: pts.len() });
    }
    let xs: Vec<f64> = pts.iter().map(|p| (p.dofs() as f64).ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.rate1.ln()).collect();
    let half = pts.len().div_ceil(2);
    let lower = ols_slope(&xs[..half], &ys[..half])?;
    let upper = ols_slope(&xs[pts.len() - half..], &ys[pts.len() - half..])?;
    Ok((lower, upper))
}

/// Classifies the shape of a static-scaling series.
pub fn classify_static_scaling(series: &ScalingSeries, flat_band: f64) -> Result<StaticScaling> {
    let (lower, upper) = half_series_slopes(series)?;
    let upper_flat = upper.abs() <= flat_band;
    Ok(if lower.abs() <= flat_band && upper_flat {
        StaticScaling::Flat
    } else if upper < -flat_band {
        StaticScaling::TailOff
    } else if lower > flat_band && upper_flat {
        StaticScaling::DipLeft
    } else {
        StaticScaling::Mixed
    })
}
