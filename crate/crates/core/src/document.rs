//! Route document tree codec.
//!
//! Routes are stored as a nested JSON tree:
//!
//! ```text
//! PATH-{id}
//! ├── description            (optional)
//! └── PATH
//!     └── PATHPOINT-{order}
//!         ├── ID             == order
//!         ├── XLongitude     degrees
//!         ├── ZLatitude      degrees
//!         ├── YAltitude      meters
//!         ├── task           "0".."4"
//!         └── instruction    task parameter
//! ```
//!
//! Records written before camera tasks existed carry only `ID`, `XLongitude`,
//! `ZLatitude` and `YAltitude`; they decode with task `"0"` and an empty
//! instruction. Numeric fields are accepted either as JSON numbers or as
//! decimal text.

use std::fmt;

use serde_json::{Map, Value};

use crate::geodesy::{GeoPoint, HomePoint};
use crate::model::{
    parse_route_number, validate_path, CameraTaskKind, Limits, Path, PathPoint, ValidationReport,
    Violation,
};

pub const KEY_PATH: &str = "PATH";
pub const KEY_DESCRIPTION: &str = "description";
pub const KEY_HOME: &str = "HOME";
pub const POINT_PREFIX: &str = "PATHPOINT-";
pub const FIELD_ID: &str = "ID";
pub const FIELD_LONGITUDE: &str = "XLongitude";
pub const FIELD_LATITUDE: &str = "ZLatitude";
pub const FIELD_ALTITUDE: &str = "YAltitude";
pub const FIELD_TASK: &str = "task";
pub const FIELD_INSTRUCTION: &str = "instruction";

/// A structural problem in a document, located by its key path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaError {
    pub key: String,
    pub message: String,
}

impl SchemaError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        SchemaError {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

impl std::error::Error for SchemaError {}

pub fn point_key(order: u32) -> String {
    format!("{POINT_PREFIX}{order}")
}

fn parse_point_key(key: &str) -> Option<u32> {
    let digits = key.strip_prefix(POINT_PREFIX)?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if digits.len() > 1 && digits.starts_with('0') {
        return None;
    }
    digits.parse().ok()
}

fn number_field(
    record: &Map<String, Value>,
    field: &str,
    at: &str,
) -> Result<Option<f64>, SchemaError> {
    let key = format!("{at}/{field}");
    match record.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Number(n)) => n
            .as_f64()
            .map(Some)
            .ok_or_else(|| SchemaError::new(key, "number out of range")),
        Some(Value::String(s)) => s
            .trim()
            .parse::<f64>()
            .map(Some)
            .map_err(|_| SchemaError::new(key, format!("expected a decimal number, got {s:?}"))),
        Some(other) => Err(SchemaError::new(
            key,
            format!("expected a number, got {other}"),
        )),
    }
}

fn required_number(record: &Map<String, Value>, field: &str, at: &str) -> Result<f64, SchemaError> {
    number_field(record, field, at)?
        .ok_or_else(|| SchemaError::new(format!("{at}/{field}"), "missing field"))
}

fn text_field(
    record: &Map<String, Value>,
    field: &str,
    at: &str,
) -> Result<Option<String>, SchemaError> {
    match record.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(Value::Number(n)) => Ok(Some(n.to_string())),
        Some(other) => Err(SchemaError::new(
            format!("{at}/{field}"),
            format!("expected text, got {other}"),
        )),
    }
}

fn as_object<'a>(value: &'a Value, at: &str) -> Result<&'a Map<String, Value>, SchemaError> {
    value
        .as_object()
        .ok_or_else(|| SchemaError::new(at, "expected an object"))
}

/// One decoded point record. The task code is kept as text so unknown codes
/// can be reported instead of silently dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct DraftPoint {
    pub id: u32,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub altitude_m: f64,
    pub task_code: String,
    pub instruction: String,
}

/// A route decoded from the document tree but not yet checked against the
/// domain invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteDraft {
    pub route_id: String,
    pub description: Option<String>,
    pub points: Vec<DraftPoint>,
    /// At least one point lacked `task` or `instruction`.
    pub legacy: bool,
}

impl RouteDraft {
    /// Collects every violation, unknown task codes included.
    pub fn validate(&self, limits: &Limits) -> ValidationReport {
        let mut unknown = Vec::new();
        let path = self.lossy_path(&mut unknown);
        let mut report = ValidationReport {
            violations: unknown,
        };
        report.merge(validate_path(&path, limits));
        report
    }

    /// Converts to a [`Path`]; fails only if a task code is unknown.
    pub fn to_path(&self) -> Result<Path, SchemaError> {
        let mut unknown = Vec::new();
        let path = self.lossy_path(&mut unknown);
        match unknown.first() {
            Some(Violation::UnknownTaskCode { id, code }) => Err(SchemaError::new(
                format!(
                    "{}/{KEY_PATH}/{}/{FIELD_TASK}",
                    self.route_id,
                    point_key(*id)
                ),
                format!("unknown task code {code}"),
            )),
            _ => Ok(path),
        }
    }

    /// Converts to a valid [`Path`] or returns every violation found.
    pub fn into_valid_path(self, limits: &Limits) -> Result<Path, ValidationReport> {
        let report = self.validate(limits);
        if !report.is_valid() {
            return Err(report);
        }
        Ok(self
            .to_path()
            .expect("validated drafts carry known task codes"))
    }

    fn lossy_path(&self, unknown: &mut Vec<Violation>) -> Path {
        let points = self
            .points
            .iter()
            .map(|p| {
                let task = p.task_code.parse::<CameraTaskKind>().unwrap_or_else(|_| {
                    unknown.push(Violation::UnknownTaskCode {
                        id: p.id,
                        code: p.task_code.clone(),
                    });
                    CameraTaskKind::Nothing
                });
                let instruction = if task == CameraTaskKind::Nothing && !p.task_code.trim().eq("0")
                {
                    String::new()
                } else {
                    p.instruction.clone()
                };
                PathPoint {
                    id: p.id,
                    latitude_deg: p.latitude_deg,
                    longitude_deg: p.longitude_deg,
                    altitude_m: p.altitude_m,
                    task,
                    instruction,
                }
            })
            .collect();
        Path {
            route_id: self.route_id.clone(),
            description: self.description.clone(),
            points,
        }
    }
}

/// Decodes the value stored under a `PATH-{id}` key.
pub fn decode_route(route_id: &str, value: &Value) -> Result<RouteDraft, SchemaError> {
    let record = as_object(value, route_id)?;
    let description = text_field(record, KEY_DESCRIPTION, route_id)?;

    let mut points = Vec::new();
    let mut legacy = false;
    match record.get(KEY_PATH) {
        None | Some(Value::Null) => {}
        Some(children) => {
            let at = format!("{route_id}/{KEY_PATH}");
            let children = as_object(children, &at)?;
            for (key, child) in children {
                let order = parse_point_key(key).ok_or_else(|| {
                    SchemaError::new(format!("{at}/{key}"), "expected PATHPOINT-<order>")
                })?;
                let point_at = format!("{at}/{key}");
                let fields = as_object(child, &point_at)?;
                let id = required_number(fields, FIELD_ID, &point_at)?;
                if id != f64::from(order) {
                    return Err(SchemaError::new(
                        format!("{point_at}/{FIELD_ID}"),
                        format!("ID {id} does not match key order {order}"),
                    ));
                }
                let task = text_field(fields, FIELD_TASK, &point_at)?;
                let instruction = text_field(fields, FIELD_INSTRUCTION, &point_at)?;
                legacy |= task.is_none() || instruction.is_none();
                points.push(DraftPoint {
                    id: order,
                    latitude_deg: required_number(fields, FIELD_LATITUDE, &point_at)?,
                    longitude_deg: required_number(fields, FIELD_LONGITUDE, &point_at)?,
                    altitude_m: number_field(fields, FIELD_ALTITUDE, &point_at)?.unwrap_or(0.0),
                    task_code: task.unwrap_or_else(|| "0".to_string()),
                    instruction: instruction.unwrap_or_default(),
                });
            }
            points.sort_by_key(|p| p.id);
            for (expected, point) in points.iter().enumerate() {
                if point.id as usize != expected {
                    return Err(SchemaError::new(
                        format!("{at}/{}", point_key(expected as u32)),
                        format!("missing order {expected}"),
                    ));
                }
            }
        }
    }

    Ok(RouteDraft {
        route_id: route_id.to_string(),
        description,
        points,
        legacy,
    })
}

/// Encodes a path as the value stored under its `PATH-{id}` key.
pub fn encode_route(path: &Path) -> Value {
    let mut children = Map::new();
    for point in &path.points {
        let mut fields = Map::new();
        fields.insert(FIELD_ID.into(), Value::from(point.id));
        fields.insert(FIELD_LONGITUDE.into(), Value::from(point.longitude_deg));
        fields.insert(FIELD_LATITUDE.into(), Value::from(point.latitude_deg));
        fields.insert(FIELD_ALTITUDE.into(), Value::from(point.altitude_m));
        fields.insert(FIELD_TASK.into(), Value::from(point.task.code_str()));
        fields.insert(
            FIELD_INSTRUCTION.into(),
            Value::from(point.instruction.as_str()),
        );
        children.insert(point_key(point.id), Value::Object(fields));
    }
    let mut record = Map::new();
    if let Some(description) = &path.description {
        record.insert(KEY_DESCRIPTION.into(), Value::from(description.as_str()));
    }
    record.insert(KEY_PATH.into(), Value::Object(children));
    Value::Object(record)
}

/// Checks that a top-level key names a route.
pub fn check_route_key(key: &str) -> Result<(), SchemaError> {
    if parse_route_number(key).is_none() {
        return Err(SchemaError::new(key, "expected a route key PATH-<n>"));
    }
    Ok(())
}

/// Decimal text that parses back to the same `f64`.
pub fn decimal_text(value: f64) -> Value {
    Value::String(format!("{value}"))
}

/// Positions read from a flown-trace document.
#[derive(Debug, Clone, PartialEq)]
pub struct FlownDocument {
    pub route_id: Option<String>,
    pub home: Option<HomePoint>,
    pub points: Vec<GeoPoint>,
    pub altitudes: Option<Vec<f64>>,
}

/// Decodes a flown-trace document.
///
/// Accepts either `{"PATH-{id}": {..}}` with a single route, or the route
/// value itself. An optional `HOME` record gives the takeoff position; keys
/// other than `HOME` and `PATH` are ignored.
pub fn decode_flown(value: &Value) -> Result<FlownDocument, SchemaError> {
    let top = as_object(value, "$")?;
    let (route_id, record) = if top.contains_key(KEY_PATH) {
        (None, top)
    } else {
        let mut entries = top.iter();
        match (entries.next(), entries.next()) {
            (Some((key, inner)), None) => (Some(key.clone()), as_object(inner, key)?),
            (None, _) => return Err(SchemaError::new("$", "empty document")),
            _ => {
                return Err(SchemaError::new(
                    "$",
                    "expected a single route entry or a PATH record",
                ))
            }
        }
    };
    let at = route_id.clone().unwrap_or_else(|| "$".into());

    let home = match record.get(KEY_HOME) {
        None | Some(Value::Null) => None,
        Some(h) => {
            let home_at = format!("{at}/{KEY_HOME}");
            let fields = as_object(h, &home_at)?;
            Some(HomePoint::new(
                required_number(fields, FIELD_LATITUDE, &home_at)?,
                required_number(fields, FIELD_LONGITUDE, &home_at)?,
            ))
        }
    };

    let path_at = format!("{at}/{KEY_PATH}");
    let children = match record.get(KEY_PATH) {
        None | Some(Value::Null) => Map::new(),
        Some(children) => as_object(children, &path_at)?.clone(),
    };
    let mut rows = Vec::with_capacity(children.len());
    for (key, child) in &children {
        let order = parse_point_key(key).ok_or_else(|| {
            SchemaError::new(format!("{path_at}/{key}"), "expected PATHPOINT-<order>")
        })?;
        let point_at = format!("{path_at}/{key}");
        let fields = as_object(child, &point_at)?;
        rows.push((
            order,
            GeoPoint::new(
                required_number(fields, FIELD_LATITUDE, &point_at)?,
                required_number(fields, FIELD_LONGITUDE, &point_at)?,
            ),
            number_field(fields, FIELD_ALTITUDE, &point_at)?,
        ));
    }
    rows.sort_by_key(|r| r.0);
    for (expected, row) in rows.iter().enumerate() {
        if row.0 as usize != expected {
            return Err(SchemaError::new(
                format!("{path_at}/{}", point_key(expected as u32)),
                format!("missing order {expected}"),
            ));
        }
    }
    let altitudes: Option<Vec<f64>> = rows.iter().map(|r| r.2).collect();
    Ok(FlownDocument {
        route_id,
        home,
        points: rows.iter().map(|r| r.1).collect(),
        altitudes: altitudes.filter(|a| !a.is_empty()),
    })
}

/// Encodes flown positions; coordinates are written as decimal text.
pub fn encode_flown(
    route_id: &str,
    home: Option<HomePoint>,
    points: &[GeoPoint],
    altitudes: Option<&[f64]>,
) -> Map<String, Value> {
    let mut record = Map::new();
    if let Some(home) = home {
        let mut h = Map::new();
        h.insert(FIELD_LATITUDE.into(), decimal_text(home.latitude_deg));
        h.insert(FIELD_LONGITUDE.into(), decimal_text(home.longitude_deg));
        record.insert(KEY_HOME.into(), Value::Object(h));
    }
    let mut children = Map::new();
    for (i, p) in points.iter().enumerate() {
        let mut fields = Map::new();
        fields.insert(FIELD_ID.into(), Value::from(i as u32));
        fields.insert(FIELD_LONGITUDE.into(), decimal_text(p.longitude_deg));
        fields.insert(FIELD_LATITUDE.into(), decimal_text(p.latitude_deg));
        if let Some(alt) = altitudes.and_then(|a| a.get(i)) {
            fields.insert(FIELD_ALTITUDE.into(), decimal_text(*alt));
        }
        children.insert(point_key(i as u32), Value::Object(fields));
    }
    record.insert(KEY_PATH.into(), Value::Object(children));
    let mut top = Map::new();
    top.insert(route_id.to_string(), Value::Object(record));
    top
}
