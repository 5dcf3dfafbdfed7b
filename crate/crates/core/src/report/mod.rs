//! Static-scaling and intensity reports over run records.
//!
//! A [`SpectrumReport`] groups records into scaling series and exposes four
//! fixed panels. [`render_svg`] draws one panel; [`render_table`] lists every
//! point.

mod svg;
mod table;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::metrics::{
    classify_static_scaling, CacheLevel, MetricsError, RunRecord, ScalingSeries, SpectrumPoint, StaticScaling,
    DEFAULT_FLAT_BAND,
};

pub use svg::{render_svg, SvgOptions};
pub use table::{render_table, TableFormat, TABLE_EXTRA_COLUMNS};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no records to report")]
    Empty,
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("panel {0} has no data to plot")]
    EmptyPanel(Panel),
    #[error("series {label:?} has more than one record with dofs = {dofs}")]
    DuplicateDofs { label: String, dofs: u64 },
    #[error(transparent)]
    Table(#[from] crate::ingest::IngestError),
}

/// Record field used to split records into series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupBy {
    #[default]
    Label,
    Discretization,
    Workers,
    Alpha,
}

impl GroupBy {
    fn key(self, r: &RunRecord) -> String {
        match self {
            GroupBy::Label => r.label.clone(),
            GroupBy::Discretization => r.discretization.map_or("unknown".into(), |d| d.to_string()),
            GroupBy::Workers => format!("workers={}", r.workers),
            GroupBy::Alpha => r.alpha.map_or("alpha=unknown".into(), |a| format!("alpha={a}")),
        }
    }
}

impl FromStr for GroupBy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "label" => Ok(GroupBy::Label),
            "discretization" => Ok(GroupBy::Discretization),
            "workers" => Ok(GroupBy::Workers),
            "alpha" => Ok(GroupBy::Alpha),
            other => Err(format!("unknown grouping {other:?} (expected label, discretization, workers or alpha)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Panel {
    /// Arithmetic intensity (FLOP per miss) against wall time.
    AiVsTime,
    /// Rate1 against wall time, log-log.
    StaticScaling,
    /// Linear solver iterations against DOFs.
    IterationsVsDofs,
    /// Rate2 against wall time.
    Rate2VsTime,
}

impl Panel {
    pub const ALL: [Panel; 4] = [Panel::AiVsTime, Panel::StaticScaling, Panel::IterationsVsDofs, Panel::Rate2VsTime];

    pub fn as_str(self) -> &'static str {
        match self {
            Panel::AiVsTime => "ai-vs-time",
            Panel::StaticScaling => "static-scaling",
            Panel::IterationsVsDofs => "iterations",
            Panel::Rate2VsTime => "rate2-vs-time",
        }
    }
}

impl fmt::Display for Panel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Panel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Panel::ALL.into_iter().find(|p| p.as_str() == s).ok_or_else(|| {
            let names: Vec<_> = Panel::ALL.iter().map(|p| p.as_str()).collect();
            format!("unknown panel {s:?} (expected one of {})", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesReport {
    pub series: ScalingSeries,
    /// Present for series of three or more points.
    pub classification: Option<StaticScaling>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub group_by: GroupBy,
    /// Sorted by series label.
    pub series: Vec<SeriesReport>,
}

/// One plotted curve: series label and (x, y) pairs in ascending DOF order.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Axis scales and content of one panel.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelData {
    pub panel: Panel,
    pub x_label: String,
    pub y_label: String,
    pub x_log: bool,
    pub y_log: bool,
    pub series: Vec<PanelSeries>,
}

pub fn build_spectrum_report(records: &[RunRecord], group_by: GroupBy) -> Result<SpectrumReport, ReportError> {
    build_spectrum_report_with(records, group_by, DEFAULT_FLAT_BAND)
}

/// Groups records, sorts each group by DOFs and classifies groups with at
/// least three points.
pub fn build_spectrum_report_with(
    records: &[RunRecord],
    group_by: GroupBy,
    flat_band: f64,
) -> Result<SpectrumReport, ReportError> {
    if records.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut groups: BTreeMap<String, Vec<SpectrumPoint>> = BTreeMap::new();
    for r in records {
        groups.entry(group_by.key(r)).or_default().push(SpectrumPoint::from_record(r)?);
    }
    let mut series = Vec::with_capacity(groups.len());
    for (label, mut points) in groups {
        points.sort_by_key(|p| p.dofs());
        if let Some(w) = points.windows(2).find(|w| w[0].dofs() == w[1].dofs()) {
            return Err(ReportError::DuplicateDofs { label, dofs: w[0].dofs() });
        }
        let s = ScalingSeries::new(label, points)?;
        let classification = if s.len() >= 3 { Some(classify_static_scaling(&s, flat_band)?) } else { None };
        series.push(SeriesReport { series: s, classification });
    }
    Ok(SpectrumReport { group_by, series })
}

impl SpectrumReport {
    /// All points in series order, ascending DOFs within a series.
    pub fn points(&self) -> impl Iterator<Item = &SpectrumPoint> {
        self.series.iter().flat_map(|s| s.series.points())
    }

    /// Lowest cache level with at least one nonzero miss count anywhere in
    /// the report.
    pub fn intensity_level(&self) -> Option<CacheLevel> {
        CacheLevel::ALL
            .into_iter()
            .find(|&l| self.points().any(|p| p.level(l).is_some_and(|li| li.ai_per_miss.is_some())))
    }

    /// Plot content for `panel`. Series lacking the panel's y quantity are
    /// left out; points that cannot sit on a log axis are dropped.
    pub fn panel(&self, panel: Panel, iterations_linear_y: bool) -> PanelData {
        let level = self.intensity_level();
        let (x_label, y_label, y_log) = match panel {
            Panel::AiVsTime => (
                "time (s)".to_string(),
                format!("AI ({} FLOP/miss)", level.map_or("no cache data".into(), |l| l.to_string())),
                false,
            ),
            Panel::StaticScaling => ("time (s)".into(), "DOF/s".into(), true),
            Panel::IterationsVsDofs => ("DOFs".into(), "solver iterations".into(), !iterations_linear_y),
            Panel::Rate2VsTime => ("time (s)".into(), "DOF/(s*iteration)".into(), true),
        };
        let value = |p: &SpectrumPoint| -> Option<(f64, f64)> {
            match panel {
                Panel::AiVsTime => Some((p.wall_time(), p.level(level?)?.ai_per_miss?)),
                Panel::StaticScaling => Some((p.wall_time(), p.rate1)),
                Panel::IterationsVsDofs => Some((p.dofs() as f64, p.record.linear_iterations? as f64)),
                Panel::Rate2VsTime => Some((p.wall_time(), p.rate2?)),
            }
        };
        let series = self
            .series
            .iter()
            .map(|s| PanelSeries {
                label: s.series.label().to_string(),
                points: s
                    .series
                    .points()
                    .iter()
                    .filter_map(value)
                    .filter(|&(x, y)| x > 0.0 && (!y_log || y > 0.0) && y.is_finite())
                    .collect(),
            })
            .filter(|s| !s.points.is_empty())
            .collect();
        let scale = |log| if log { "log10" } else { "linear" };
        PanelData {
            panel,
            x_label: format!("{x_label} [log10]"),
            y_label: format!("{y_label} [{}]", scale(y_log)),
            x_log: true,
            y_log,
            series,
        }
    }
}
