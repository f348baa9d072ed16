//! Planned-versus-flown error analysis in home-relative meters.
//!
//! Points are paired strictly by order: flown point `k` is compared against
//! planned waypoint `k`. Only the horizontal axes are analyzed.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::document::{decode_flown, FlownDocument, SchemaError};
use crate::geodesy::{GeoError, GeoPoint, GeodesyMode, HomePoint, Projection};
use crate::model::Path;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("pairing mismatch: {planned} planned waypoints vs {flown} flown points")]
    Pairing { planned: usize, flown: usize },
    #[error("report has no points")]
    Empty,
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error("unknown report format {0:?} (expected csv or table)")]
    UnknownFormat(String),
}

/// Flown positions, one per planned waypoint.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FlownRecord {
    pub points: Vec<GeoPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub altitudes: Option<Vec<f64>>,
}

impl FlownRecord {
    pub fn new(points: Vec<GeoPoint>) -> Self {
        FlownRecord {
            points,
            altitudes: None,
        }
    }
}

impl From<FlownDocument> for FlownRecord {
    fn from(doc: FlownDocument) -> Self {
        FlownRecord {
            points: doc.points,
            altitudes: doc.altitudes,
        }
    }
}

/// Reads flown positions from either a `{"points": [...]}` record or a
/// flown-trace document; the document's `HOME` is returned when present.
pub fn read_flown(value: &Value) -> Result<(FlownRecord, Option<HomePoint>), SchemaError> {
    if let Some(points) = value.get("points") {
        if value.get(crate::document::KEY_PATH).is_none() {
            let record = FlownRecord::deserialize(value).map_err(|e| {
                SchemaError::new(
                    "$/points",
                    format!("{e} ({} entries)", points.as_array().map_or(0, Vec::len)),
                )
            })?;
            return Ok((record, None));
        }
    }
    let doc = decode_flown(value)?;
    let home = doc.home;
    Ok((doc.into(), home))
}

/// Home for an analysis: an explicit value wins, then the one recorded with
/// the flight, then the ground position of the first planned waypoint.
pub fn resolve_home(
    explicit: Option<HomePoint>,
    recorded: Option<HomePoint>,
    planned: &Path,
) -> Option<HomePoint> {
    explicit.or(recorded).or_else(|| {
        planned
            .points
            .first()
            .map(|p| HomePoint::new(p.latitude_deg, p.longitude_deg))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointError {
    pub order: usize,
    pub x_planned: f64,
    pub z_planned: f64,
    pub x_flown: f64,
    pub z_flown: f64,
    pub error_x: f64,
    pub error_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub route_id: String,
    pub mode: GeodesyMode,
    pub home: HomePoint,
    pub rows: Vec<PointError>,
    pub mean_error_x: f64,
    pub mean_error_z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub max_error_x: f64,
    pub max_error_z: f64,
    pub mean_error_x: f64,
    pub mean_error_z: f64,
}

pub fn compare(
    planned: &Path,
    flown: &FlownRecord,
    home: HomePoint,
    mode: GeodesyMode,
) -> Result<ErrorReport, AnalysisError> {
    if planned.points.len() != flown.points.len() {
        return Err(AnalysisError::Pairing {
            planned: planned.points.len(),
            flown: flown.points.len(),
        });
    }
    let projection = Projection::new(home, mode)?;
    let mut rows = Vec::with_capacity(flown.points.len());
    for (order, (p, f)) in planned.points.iter().zip(&flown.points).enumerate() {
        let a = projection.to_local(p.into())?;
        let b = projection.to_local(*f)?;
        rows.push(PointError {
            order,
            x_planned: a.x_m,
            z_planned: a.z_m,
            x_flown: b.x_m,
            z_flown: b.z_m,
            error_x: (b.x_m - a.x_m).abs(),
            error_z: (b.z_m - a.z_m).abs(),
        });
    }
    let n = rows.len() as f64;
    let (mean_error_x, mean_error_z) = if rows.is_empty() {
        (0.0, 0.0)
    } else {
        (
            rows.iter().map(|r| r.error_x).sum::<f64>() / n,
            rows.iter().map(|r| r.error_z).sum::<f64>() / n,
        )
    };
    Ok(ErrorReport {
        route_id: planned.route_id.clone(),
        mode,
        home,
        rows,
        mean_error_x,
        mean_error_z,
    })
}

/// How summary figures are reduced to 0.1 m.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    #[default]
    Nearest,
    /// Next 0.1 m step upward; a conservative bound on the error.
    Up,
}

impl Rounding {
    pub fn apply(self, value: f64) -> f64 {
        match self {
            Rounding::Nearest => round_tenth(value),
            // Guard against 0.3 becoming 0.30000000000000004 * 10 -> 4.
            Rounding::Up => ((value * 10.0) - 1e-9).ceil().max(0.0) / 10.0,
        }
    }
}

/// Round to 0.1 m, the precision used when reporting field results.
pub fn round_tenth(value: f64) -> f64 {
    (value * 10.0).round() / 10.0
}

pub fn summarize(report: &ErrorReport) -> Result<ErrorSummary, AnalysisError> {
    summarize_with(report, Rounding::Nearest)
}

pub fn summarize_with(
    report: &ErrorReport,
    rounding: Rounding,
) -> Result<ErrorSummary, AnalysisError> {
    if report.rows.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let max = |f: fn(&PointError) -> f64| report.rows.iter().map(f).fold(0.0, f64::max);
    Ok(ErrorSummary {
        max_error_x: rounding.apply(max(|r| r.error_x)),
        max_error_z: rounding.apply(max(|r| r.error_z)),
        mean_error_x: rounding.apply(report.mean_error_x),
        mean_error_z: rounding.apply(report.mean_error_z),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Table,
}

impl std::str::FromStr for ReportFormat {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "table" | "table-text" => Ok(ReportFormat::Table),
            other => Err(AnalysisError::UnknownFormat(other.to_string())),
        }
    }
}

pub const CSV_HEADER: &str = "order,x_planned,z_planned,x_flown,z_flown,error_x,error_z";

pub fn render_report(report: &ErrorReport, format: ReportFormat) -> Result<String, AnalysisError> {
    if report.rows.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            for r in &report.rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    r.order, r.x_planned, r.z_planned, r.x_flown, r.z_flown, r.error_x, r.error_z
                );
            }
            let _ = writeln!(
                out,
                "mean,,,,,{},{}",
                report.mean_error_x, report.mean_error_z
            );
        }
        ReportFormat::Table => {
            let _ = writeln!(
                out,
                "{} ({} mode, home {}, {})",
                report.route_id, report.mode, report.home.latitude_deg, report.home.longitude_deg
            );
            let _ = writeln!(
                out,
                "{:>5}  {:>15}  {:>15}  {:>15}  {:>15}  {:>12}  {:>12}",
                "order", "x_planned", "z_planned", "x_flown", "z_flown", "error_x", "error_z"
            );
            for r in &report.rows {
                let _ = writeln!(
                    out,
                    "{:>5}  {:>15.9}  {:>15.9}  {:>15.9}  {:>15.9}  {:>12.9}  {:>12.9}",
                    r.order, r.x_planned, r.z_planned, r.x_flown, r.z_flown, r.error_x, r.error_z
                );
            }
            let _ = writeln!(
                out,
                "{:>5}  {:>15}  {:>15}  {:>15}  {:>15}  {:>12.9}  {:>12.9}",
                "mean", "", "", "", "", report.mean_error_x, report.mean_error_z
            );
        }
    }
    Ok(out)
}
