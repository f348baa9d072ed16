//! Kinematic mission execution.
//!
//! The drone starts on the ground below the first waypoint, climbs to its
//! altitude and then flies straight local-frame legs at constant speed.
//! Vertical motion uses the same speed as horizontal motion. Camera tasks
//! become timestamped events; panoramas hold the drone in place while it
//! rotates (rotation is time-only, no yaw is modeled).

mod schedule;
mod stream;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::document::encode_flown;
use crate::geodesy::{GeoError, GeoPoint, GeodesyMode, HomePoint, LocalCoord, Projection};
use crate::model::{
    validate_path, CameraTaskKind, Limits, Path, ValidationReport, DEFAULT_INTERVAL_S,
    DEFAULT_PANORAMA_FRAMES,
};

pub use schedule::{
    compile_schedule, ArrivalAction, Schedule, ScheduleError, ScheduleWarning, WaypointProgram,
};
pub use stream::{Frame, SimulationState};

/// Shots landing within this many seconds after a leg ends still count.
const TIME_EPSILON_S: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub speed_mps: f64,
    pub tick_s: f64,
    pub default_interval_s: f64,
    pub panorama_frames: u32,
    pub panorama_rotation_s: f64,
    /// Standard deviation of the horizontal arrival measurement noise, per axis.
    pub noise_sigma_m: f64,
    pub rng_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            speed_mps: 5.0,
            tick_s: 0.1,
            default_interval_s: f64::from(DEFAULT_INTERVAL_S),
            panorama_frames: DEFAULT_PANORAMA_FRAMES,
            panorama_rotation_s: 8.0,
            noise_sigma_m: 0.0,
            rng_seed: 0,
        }
    }
}

impl SimConfig {
    fn check(&self) -> Result<(), SimError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.speed_mps) {
            return Err(SimError::Config(format!(
                "speed_mps must be > 0, got {}",
                self.speed_mps
            )));
        }
        if !positive(self.tick_s) {
            return Err(SimError::Config(format!(
                "tick_s must be > 0, got {}",
                self.tick_s
            )));
        }
        if !positive(self.default_interval_s) {
            return Err(SimError::Config(format!(
                "default_interval_s must be > 0, got {}",
                self.default_interval_s
            )));
        }
        if self.panorama_frames == 0 {
            return Err(SimError::Config("panorama_frames must be > 0".into()));
        }
        if !(self.panorama_rotation_s.is_finite() && self.panorama_rotation_s >= 0.0) {
            return Err(SimError::Config(format!(
                "panorama_rotation_s must be >= 0, got {}",
                self.panorama_rotation_s
            )));
        }
        if !(self.noise_sigma_m.is_finite() && self.noise_sigma_m >= 0.0) {
            return Err(SimError::Config(format!(
                "noise_sigma_m must be >= 0, got {}",
                self.noise_sigma_m
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("route is invalid: {0}")]
    Invalid(ValidationReport),
    #[error("route has no waypoints")]
    EmptyPath,
    #[error("mission has zero duration")]
    ZeroLengthMission,
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error("invalid simulation config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CameraEventKind {
    Photo,
    VideoStart,
    VideoStop,
    IntervalShot,
    PanoramaFrame,
    PanoramaComplete,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraEvent {
    pub time_s: f64,
    pub kind: CameraEventKind,
    /// Waypoint whose task produced the event.
    pub waypoint_id: u32,
    /// 1-based shot number for interval shots, 0-based frame for panoramas.
    pub sequence: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arrival {
    pub waypoint_id: u32,
    pub time_s: f64,
    /// Measured position: true position plus horizontal noise.
    pub measured: GeoPoint,
    pub altitude_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub time_s: f64,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub altitude_m: f64,
    pub x_m: f64,
    pub z_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseKind {
    Climb,
    Leg,
    Hover,
}

/// A stretch of the timeline with constant motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub kind: PhaseKind,
    pub start_s: f64,
    pub end_s: f64,
    /// Waypoint the phase departs from (hover: the waypoint held).
    pub waypoint_id: u32,
    /// Shot interval for legs running an interval task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval_s: Option<f64>,
    #[serde(skip)]
    from: [f64; 3],
    #[serde(skip)]
    to: [f64; 3],
}

impl Phase {
    fn position_at(&self, t: f64) -> [f64; 3] {
        let span = self.end_s - self.start_s;
        if span <= 0.0 {
            return self.to;
        }
        let f = ((t - self.start_s) / span).clamp(0.0, 1.0);
        [
            self.from[0] + (self.to[0] - self.from[0]) * f,
            self.from[1] + (self.to[1] - self.from[1]) * f,
            self.from[2] + (self.to[2] - self.from[2]) * f,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimStatus {
    Completed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationResult {
    pub route_id: String,
    pub home: HomePoint,
    pub mode: GeodesyMode,
    pub config: SimConfig,
    pub duration_s: f64,
    pub trace: Vec<TraceSample>,
    pub arrivals: Vec<Arrival>,
    pub events: Vec<CameraEvent>,
    pub phases: Vec<Phase>,
    pub warnings: Vec<ScheduleWarning>,
    pub status: SimStatus,
}

impl SimulationResult {
    pub fn measured_points(&self) -> Vec<GeoPoint> {
        self.arrivals.iter().map(|a| a.measured).collect()
    }

    /// Flown-trace document: the arrivals in route-tree form plus the trace,
    /// events and status under extra keys.
    pub fn to_document(&self) -> Value {
        let altitudes: Vec<f64> = self.arrivals.iter().map(|a| a.altitude_m).collect();
        let mut top = encode_flown(
            &self.route_id,
            Some(self.home),
            &self.measured_points(),
            Some(&altitudes),
        );
        if let Some(Value::Object(record)) = top.get_mut(&self.route_id) {
            let mut extra = Map::new();
            extra.insert("MODE".into(), Value::from(self.mode.as_str()));
            extra.insert(
                "CONFIG".into(),
                serde_json::to_value(self.config).expect("config"),
            );
            extra.insert("DURATION".into(), Value::from(self.duration_s));
            extra.insert(
                "ARRIVALS".into(),
                serde_json::to_value(&self.arrivals).expect("arrivals"),
            );
            extra.insert(
                "EVENTS".into(),
                serde_json::to_value(&self.events).expect("events"),
            );
            extra.insert(
                "PHASES".into(),
                serde_json::to_value(&self.phases).expect("phases"),
            );
            extra.insert(
                "TRACE".into(),
                serde_json::to_value(&self.trace).expect("trace"),
            );
            extra.insert(
                "WARNINGS".into(),
                Value::from(
                    self.warnings
                        .iter()
                        .map(ToString::to_string)
                        .collect::<Vec<_>>(),
                ),
            );
            extra.insert(
                "STATUS".into(),
                serde_json::to_value(self.status).expect("status"),
            );
            record.extend(extra);
        }
        Value::Object(top)
    }

    pub(crate) fn position_at(&self, t: f64) -> [f64; 3] {
        let index = self
            .phases
            .partition_point(|p| p.end_s < t)
            .min(self.phases.len() - 1);
        self.phases[index].position_at(t)
    }

    /// Task shown to an observer at time `t`, given the previous sample time.
    pub(crate) fn active_task(&self, previous_t: Option<f64>, t: f64) -> CameraTaskKind {
        for phase in &self.phases {
            if phase.start_s <= t && t <= phase.end_s {
                match phase.kind {
                    PhaseKind::Hover if phase.end_s > phase.start_s => {
                        return CameraTaskKind::Panorama
                    }
                    PhaseKind::Leg
                        if phase.interval_s.is_some() && t > phase.start_s && t < phase.end_s =>
                    {
                        return CameraTaskKind::Interval
                    }
                    _ => {}
                }
            }
        }
        let photo_now = self.events.iter().any(|e| {
            e.kind == CameraEventKind::Photo
                && match previous_t {
                    Some(prev) => prev < e.time_s && e.time_s <= t,
                    None => e.time_s <= t,
                }
        });
        if photo_now {
            return CameraTaskKind::Picture;
        }
        let mut recording = false;
        for e in &self.events {
            if e.time_s > t {
                break;
            }
            match e.kind {
                CameraEventKind::VideoStart => recording = true,
                CameraEventKind::VideoStop => recording = false,
                _ => {}
            }
        }
        if recording {
            CameraTaskKind::Video
        } else {
            CameraTaskKind::Nothing
        }
    }
}

/// Home defaults to the ground position of the first waypoint.
pub fn default_home(path: &Path) -> Option<HomePoint> {
    path.points
        .first()
        .map(|p| HomePoint::new(p.latitude_deg, p.longitude_deg))
}

pub fn simulate(
    path: &Path,
    home: HomePoint,
    config: &SimConfig,
    mode: GeodesyMode,
) -> Result<SimulationResult, SimError> {
    config.check()?;
    let structural = Limits {
        altitude_max_m: f64::INFINITY,
        max_waypoints: usize::MAX,
    };
    let report = validate_path(path, &structural);
    if !report.is_valid() {
        return Err(SimError::Invalid(report));
    }
    if path.points.is_empty() {
        return Err(SimError::EmptyPath);
    }
    let schedule = compile_schedule(path, config)?;
    let projection = Projection::new(home, mode)?;

    let positions = path
        .points
        .iter()
        .map(|p| {
            projection
                .to_local(p.into())
                .map(|c| [c.x_m, p.altitude_m, c.z_m])
        })
        .collect::<Result<Vec<_>, _>>()?;

    let speed = config.speed_mps;
    let mut phases = Vec::new();
    let mut events = Vec::new();
    let mut arrival_times = Vec::with_capacity(positions.len());
    let mut t = 0.0;

    let ground = [positions[0][0], 0.0, positions[0][2]];
    let climb = positions[0][1] / speed;
    phases.push(Phase {
        kind: PhaseKind::Climb,
        start_s: 0.0,
        end_s: climb,
        waypoint_id: path.points[0].id,
        interval_s: None,
        from: ground,
        to: positions[0],
    });
    t += climb;

    let last = positions.len() - 1;
    for (index, program) in schedule.waypoints.iter().enumerate() {
        let id = program.waypoint_id;
        arrival_times.push(t);
        let here = positions[index];
        match program.on_arrival {
            ArrivalAction::None => {}
            ArrivalAction::Photo => events.push(event(t, CameraEventKind::Photo, id, 0)),
            ArrivalAction::VideoStart => events.push(event(t, CameraEventKind::VideoStart, id, 0)),
            ArrivalAction::VideoStop => events.push(event(t, CameraEventKind::VideoStop, id, 0)),
            ArrivalAction::Panorama { frames } => {
                let rotation = config.panorama_rotation_s;
                let step = rotation / f64::from(frames);
                for k in 0..frames {
                    events.push(event(
                        t + step * f64::from(k),
                        CameraEventKind::PanoramaFrame,
                        id,
                        k,
                    ));
                }
                events.push(event(
                    t + rotation,
                    CameraEventKind::PanoramaComplete,
                    id,
                    0,
                ));
            }
        }
        if index == last && schedule.stop_video_at_end {
            events.push(event(t, CameraEventKind::VideoStop, id, 0));
        }
        if let ArrivalAction::Panorama { .. } = program.on_arrival {
            phases.push(Phase {
                kind: PhaseKind::Hover,
                start_s: t,
                end_s: t + config.panorama_rotation_s,
                waypoint_id: id,
                interval_s: None,
                from: here,
                to: here,
            });
            t += config.panorama_rotation_s;
        }
        if index == last {
            break;
        }

        let next = positions[index + 1];
        let length = distance(here, next);
        let duration = length / speed;
        let start = t;
        let end = t + duration;
        if let Some(interval) = program.leg_interval_s {
            let mut k = 1u32;
            while f64::from(k) * interval <= duration + TIME_EPSILON_S {
                let shot = (start + f64::from(k) * interval).min(end);
                events.push(event(shot, CameraEventKind::IntervalShot, id, k));
                k += 1;
            }
        }
        phases.push(Phase {
            kind: PhaseKind::Leg,
            start_s: start,
            end_s: end,
            waypoint_id: id,
            interval_s: program.leg_interval_s,
            from: here,
            to: next,
        });
        t = end;
    }

    let duration_s = t;
    if duration_s <= 0.0 {
        return Err(SimError::ZeroLengthMission);
    }
    events.sort_by(|a, b| a.time_s.total_cmp(&b.time_s));

    let arrivals = measure_arrivals(path, &projection, &positions, &arrival_times, config)?;

    let mut result = SimulationResult {
        route_id: path.route_id.clone(),
        home,
        mode,
        config: *config,
        duration_s,
        trace: Vec::new(),
        arrivals,
        events,
        phases,
        warnings: schedule.warnings,
        status: SimStatus::Completed,
    };
    result.trace = sample_times(duration_s, config.tick_s)
        .into_iter()
        .map(|time_s| {
            let [x, y, z] = result.position_at(time_s);
            let geo = projection.from_local(LocalCoord::new(x, z))?;
            Ok(TraceSample {
                time_s,
                latitude_deg: geo.latitude_deg,
                longitude_deg: geo.longitude_deg,
                altitude_m: y,
                x_m: x,
                z_m: z,
            })
        })
        .collect::<Result<_, GeoError>>()?;
    Ok(result)
}

fn event(time_s: f64, kind: CameraEventKind, waypoint_id: u32, sequence: u32) -> CameraEvent {
    CameraEvent {
        time_s,
        kind,
        waypoint_id,
        sequence,
    }
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

fn measure_arrivals(
    path: &Path,
    projection: &Projection,
    positions: &[[f64; 3]],
    times: &[f64],
    config: &SimConfig,
) -> Result<Vec<Arrival>, SimError> {
    let mut noise = if config.noise_sigma_m > 0.0 {
        let normal =
            Normal::new(0.0, config.noise_sigma_m).map_err(|e| SimError::Config(e.to_string()))?;
        Some((ChaCha8Rng::seed_from_u64(config.rng_seed), normal))
    } else {
        None
    };
    path.points
        .iter()
        .zip(positions)
        .zip(times)
        .map(|((point, pos), &time_s)| {
            let measured = match noise.as_mut() {
                None => GeoPoint::from(point),
                Some((rng, normal)) => {
                    let dx = normal.sample(rng);
                    let dz = normal.sample(rng);
                    projection.from_local(LocalCoord::new(pos[0] + dx, pos[2] + dz))?
                }
            };
            Ok(Arrival {
                waypoint_id: point.id,
                time_s,
                measured,
                altitude_m: point.altitude_m,
            })
        })
        .collect()
}

/// Tick-aligned sample times ending exactly at `duration`. A final partial
/// tick shorter than 1% of a tick replaces the last tick sample so
/// consecutive samples are never closer than that.
fn sample_times(duration: f64, tick: f64) -> Vec<f64> {
    let whole = (duration / tick + 1e-9).floor() as u64;
    let mut times: Vec<f64> = (0..=whole)
        .map(|k| k as f64 * tick)
        .filter(|t| *t <= duration)
        .collect();
    match times.last().copied() {
        Some(last) if duration - last <= TIME_EPSILON_S => {
            *times.last_mut().unwrap() = duration;
        }
        Some(last) if duration - last < 0.01 * tick && times.len() > 1 => {
            *times.last_mut().unwrap() = duration;
        }
        _ => times.push(duration),
    }
    times
}
