//! Routes, waypoints and camera tasks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default altitude ceiling in meters.
pub const DEFAULT_ALTITUDE_MAX_M: f64 = 120.0;
/// Default waypoint capacity of a route.
pub const DEFAULT_MAX_WAYPOINTS: usize = 99;
/// Interval between shots when an interval task carries no parameter.
pub const DEFAULT_INTERVAL_S: u32 = 2;
/// Panorama frame count when a panorama task carries no parameter.
pub const DEFAULT_PANORAMA_FRAMES: u32 = 8;

const ROUTE_PREFIX: &str = "PATH-";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown task code {0}")]
pub struct UnknownTaskCode(pub String);

/// Camera action attached to a waypoint. Serialized as its string code `"0"`..`"4"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum CameraTaskKind {
    #[default]
    Nothing,
    Picture,
    Video,
    Interval,
    Panorama,
}

impl CameraTaskKind {
    pub const ALL: [CameraTaskKind; 5] = [
        CameraTaskKind::Nothing,
        CameraTaskKind::Picture,
        CameraTaskKind::Video,
        CameraTaskKind::Interval,
        CameraTaskKind::Panorama,
    ];

    pub fn code(self) -> u8 {
        match self {
            CameraTaskKind::Nothing => 0,
            CameraTaskKind::Picture => 1,
            CameraTaskKind::Video => 2,
            CameraTaskKind::Interval => 3,
            CameraTaskKind::Panorama => 4,
        }
    }

    /// Code as stored in route documents.
    pub fn code_str(self) -> &'static str {
        match self {
            CameraTaskKind::Nothing => "0",
            CameraTaskKind::Picture => "1",
            CameraTaskKind::Video => "2",
            CameraTaskKind::Interval => "3",
            CameraTaskKind::Panorama => "4",
        }
    }

    pub fn from_code(code: u8) -> Result<Self, UnknownTaskCode> {
        match code {
            0 => Ok(CameraTaskKind::Nothing),
            1 => Ok(CameraTaskKind::Picture),
            2 => Ok(CameraTaskKind::Video),
            3 => Ok(CameraTaskKind::Interval),
            4 => Ok(CameraTaskKind::Panorama),
            other => Err(UnknownTaskCode(other.to_string())),
        }
    }

    /// Display label shown in task selectors.
    pub fn label(self) -> &'static str {
        match self {
            CameraTaskKind::Nothing => "do nothing",
            CameraTaskKind::Picture => "Take Picture",
            CameraTaskKind::Video => "Start video",
            CameraTaskKind::Interval => "Start interval",
            CameraTaskKind::Panorama => "Take Panorama Picture",
        }
    }
}

impl FromStr for CameraTaskKind {
    type Err = UnknownTaskCode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        trimmed
            .parse::<u8>()
            .map_err(|_| UnknownTaskCode(trimmed.to_string()))
            .and_then(CameraTaskKind::from_code)
    }
}

impl fmt::Display for CameraTaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code_str())
    }
}

impl Serialize for CameraTaskKind {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.code_str())
    }
}

impl<'de> Deserialize<'de> for CameraTaskKind {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

pub fn task_label(kind: CameraTaskKind) -> &'static str {
    kind.label()
}

/// Marker color schemes. The mobile scheme differs only for interval tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TaskPalette {
    #[default]
    Web,
    Mobile,
}

impl TaskPalette {
    pub fn color(self, kind: CameraTaskKind) -> &'static str {
        match (kind, self) {
            (CameraTaskKind::Nothing, _) => "#000000",
            (CameraTaskKind::Picture, _) => "blue",
            (CameraTaskKind::Video, _) => "red",
            (CameraTaskKind::Interval, TaskPalette::Web) => "green",
            (CameraTaskKind::Interval, TaskPalette::Mobile) => "orange",
            (CameraTaskKind::Panorama, _) => "yellow",
        }
    }
}

pub fn task_color(kind: CameraTaskKind, palette: TaskPalette) -> &'static str {
    palette.color(kind)
}

/// How a video task behaves, read from its instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VideoInstruction {
    Start,
    Stop,
    Toggle,
}

/// Parsed task parameter. `None` from [`parse_instruction`] means the text is
/// not acceptable for the kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskParameter {
    None,
    Video(VideoInstruction),
    IntervalSeconds(Option<u32>),
    PanoramaFrames(Option<u32>),
}

pub fn parse_instruction(kind: CameraTaskKind, instruction: &str) -> Option<TaskParameter> {
    let text = instruction.trim();
    let positive = |s: &str| -> Option<Option<u32>> {
        if s.is_empty() {
            return Some(None);
        }
        match s.parse::<u32>() {
            Ok(n) if n > 0 => Some(Some(n)),
            _ => None,
        }
    };
    match kind {
        CameraTaskKind::Nothing | CameraTaskKind::Picture => Some(TaskParameter::None),
        CameraTaskKind::Video => match text {
            "" => Some(TaskParameter::Video(VideoInstruction::Toggle)),
            "start" => Some(TaskParameter::Video(VideoInstruction::Start)),
            "stop" => Some(TaskParameter::Video(VideoInstruction::Stop)),
            _ => None,
        },
        CameraTaskKind::Interval => positive(text).map(TaskParameter::IntervalSeconds),
        CameraTaskKind::Panorama => positive(text).map(TaskParameter::PanoramaFrames),
    }
}

/// One waypoint. `id` is the storage order, 0 being the first waypoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub id: u32,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub altitude_m: f64,
    #[serde(default)]
    pub task: CameraTaskKind,
    #[serde(default)]
    pub instruction: String,
}

impl PathPoint {
    pub fn new(id: u32, latitude_deg: f64, longitude_deg: f64, altitude_m: f64) -> Self {
        PathPoint {
            id,
            latitude_deg,
            longitude_deg,
            altitude_m,
            task: CameraTaskKind::Nothing,
            instruction: String::new(),
        }
    }

    pub fn with_task(mut self, task: CameraTaskKind, instruction: impl Into<String>) -> Self {
        self.task = task;
        self.instruction = instruction.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub route_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub points: Vec<PathPoint>,
}

impl Path {
    pub fn new(route_id: impl Into<String>) -> Self {
        Path {
            route_id: route_id.into(),
            description: None,
            points: Vec::new(),
        }
    }

    /// Numeric part of the route id, if it is well formed.
    pub fn route_number(&self) -> Option<u64> {
        parse_route_number(&self.route_id)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Parses `"PATH-{n}"` with `n` a positive integer.
pub fn parse_route_number(route_id: &str) -> Option<u64> {
    let digits = route_id.strip_prefix(ROUTE_PREFIX)?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0') {
        return None;
    }
    digits.parse::<u64>().ok().filter(|n| *n > 0)
}

pub fn route_id_for(number: u64) -> String {
    format!("{ROUTE_PREFIX}{number}")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub altitude_max_m: f64,
    pub max_waypoints: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            altitude_max_m: DEFAULT_ALTITUDE_MAX_M,
            max_waypoints: DEFAULT_MAX_WAYPOINTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    MalformedRouteId {
        route_id: String,
    },
    NonConsecutiveIds {
        ids: Vec<u32>,
    },
    DuplicateId {
        id: u32,
    },
    UnknownTaskCode {
        id: u32,
        code: String,
    },
    AltitudeOutOfRange {
        id: u32,
        altitude_m: f64,
        max_m: f64,
    },
    LatitudeOutOfRange {
        id: u32,
        latitude_deg: f64,
    },
    LongitudeOutOfRange {
        id: u32,
        longitude_deg: f64,
    },
    InvalidInstruction {
        id: u32,
        task: String,
        instruction: String,
    },
    TooManyWaypoints {
        count: usize,
        max: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MalformedRouteId { route_id } => {
                write!(f, "malformed route id {route_id:?} (expected PATH-<n>)")
            }
            Violation::NonConsecutiveIds { ids } => write!(f, "non-consecutive ids {ids:?}"),
            Violation::DuplicateId { id } => write!(f, "duplicate id {id}"),
            Violation::UnknownTaskCode { id, code } => {
                write!(f, "unknown task code {code} at id {id}")
            }
            Violation::AltitudeOutOfRange {
                id,
                altitude_m,
                max_m,
            } => write!(
                f,
                "altitude out of range at id {id}: {altitude_m} m not in [0, {max_m}]"
            ),
            Violation::LatitudeOutOfRange { id, latitude_deg } => {
                write!(f, "latitude out of range at id {id}: {latitude_deg}")
            }
            Violation::LongitudeOutOfRange { id, longitude_deg } => {
                write!(f, "longitude out of range at id {id}: {longitude_deg}")
            }
            Violation::InvalidInstruction {
                id,
                task,
                instruction,
            } => write!(
                f,
                "invalid instruction {instruction:?} for task {task} at id {id}"
            ),
            Violation::TooManyWaypoints { count, max } => {
                write!(f, "too many waypoints: {count} > {max}")
            }
        }
    }
}

/// Every invariant violation found in a route. Empty means valid.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(ToString::to_string).collect()
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        let joined = self.messages().join("; ");
        f.write_str(&joined)
    }
}

pub(crate) fn coordinate_violations(
    id: u32,
    latitude_deg: f64,
    longitude_deg: f64,
) -> Vec<Violation> {
    let mut out = Vec::new();
    if !(latitude_deg.is_finite() && (-90.0..=90.0).contains(&latitude_deg)) {
        out.push(Violation::LatitudeOutOfRange { id, latitude_deg });
    }
    if !(longitude_deg.is_finite() && (-180.0..=180.0).contains(&longitude_deg)) {
        out.push(Violation::LongitudeOutOfRange { id, longitude_deg });
    }
    out
}

pub(crate) fn altitude_in_range(altitude_m: f64, limits: &Limits) -> bool {
    altitude_m.is_finite() && altitude_m >= 0.0 && altitude_m <= limits.altitude_max_m
}

pub fn validate_path(path: &Path, limits: &Limits) -> ValidationReport {
    let mut violations = Vec::new();

    if parse_route_number(&path.route_id).is_none() {
        violations.push(Violation::MalformedRouteId {
            route_id: path.route_id.clone(),
        });
    }

    let ids: Vec<u32> = path.points.iter().map(|p| p.id).collect();
    let mut seen = std::collections::BTreeSet::new();
    for id in &ids {
        if !seen.insert(*id) {
            violations.push(Violation::DuplicateId { id: *id });
        }
    }
    let dense = ids.iter().enumerate().all(|(i, id)| *id as usize == i);
    if !dense {
        violations.push(Violation::NonConsecutiveIds { ids: ids.clone() });
    }

    if path.points.len() > limits.max_waypoints {
        violations.push(Violation::TooManyWaypoints {
            count: path.points.len(),
            max: limits.max_waypoints,
        });
    }

    for point in &path.points {
        violations.extend(coordinate_violations(
            point.id,
            point.latitude_deg,
            point.longitude_deg,
        ));
        if !altitude_in_range(point.altitude_m, limits) {
            violations.push(Violation::AltitudeOutOfRange {
                id: point.id,
                altitude_m: point.altitude_m,
                max_m: limits.altitude_max_m,
            });
        }
        if parse_instruction(point.task, &point.instruction).is_none() {
            violations.push(Violation::InvalidInstruction {
                id: point.id,
                task: point.task.code_str().to_string(),
                instruction: point.instruction.clone(),
            });
        }
    }

    ValidationReport { violations }
}
