use serde::Serialize;
use thiserror::Error;

use crate::model::{parse_instruction, CameraTaskKind, Path, TaskParameter, VideoInstruction};

use super::SimConfig;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("video stop at waypoint {id} without an open recording")]
    StopWithoutStart { id: u32 },
    #[error("video start at waypoint {id} while recording since waypoint {since}")]
    StartWhileRecording { id: u32, since: u32 },
    #[error("invalid instruction {instruction:?} for task {task} at waypoint {id}")]
    InvalidInstruction {
        id: u32,
        task: CameraTaskKind,
        instruction: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleWarning {
    /// An interval task on the last waypoint has no leg to run on.
    IntervalOnFinalWaypoint { id: u32 },
    /// Recording was still open at the end; it is stopped on final arrival.
    VideoLeftOpen { started_at: u32 },
}

impl std::fmt::Display for ScheduleWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScheduleWarning::IntervalOnFinalWaypoint { id } => {
                write!(f, "interval task on final waypoint {id} takes no shots")
            }
            ScheduleWarning::VideoLeftOpen { started_at } => write!(
                f,
                "video started at waypoint {started_at} never stopped; closed on final arrival"
            ),
        }
    }
}

/// What happens on arrival at a waypoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum ArrivalAction {
    None,
    Photo,
    VideoStart,
    VideoStop,
    /// Hover and rotate, taking `frames` evenly spaced shots.
    Panorama {
        frames: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaypointProgram {
    pub waypoint_id: u32,
    pub on_arrival: ArrivalAction,
    /// Shot interval for the leg leaving this waypoint.
    pub leg_interval_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    pub waypoints: Vec<WaypointProgram>,
    /// Close a recording left open on final arrival.
    pub stop_video_at_end: bool,
    pub warnings: Vec<ScheduleWarning>,
}

/// Turns per-waypoint camera tasks into arrival actions and leg programs.
pub fn compile_schedule(path: &Path, config: &SimConfig) -> Result<Schedule, ScheduleError> {
    let mut waypoints = Vec::with_capacity(path.points.len());
    let mut warnings = Vec::new();
    let mut recording_since: Option<u32> = None;
    let last = path.points.len().saturating_sub(1);

    for (index, point) in path.points.iter().enumerate() {
        let param = parse_instruction(point.task, &point.instruction).ok_or_else(|| {
            ScheduleError::InvalidInstruction {
                id: point.id,
                task: point.task,
                instruction: point.instruction.clone(),
            }
        })?;
        let mut on_arrival = ArrivalAction::None;
        let mut leg_interval_s = None;
        match param {
            TaskParameter::None => {
                if point.task == CameraTaskKind::Picture {
                    on_arrival = ArrivalAction::Photo;
                }
            }
            TaskParameter::Video(instruction) => {
                let start = match instruction {
                    VideoInstruction::Start => true,
                    VideoInstruction::Stop => false,
                    VideoInstruction::Toggle => recording_since.is_none(),
                };
                match (start, recording_since) {
                    (true, None) => {
                        recording_since = Some(point.id);
                        on_arrival = ArrivalAction::VideoStart;
                    }
                    (true, Some(since)) => {
                        return Err(ScheduleError::StartWhileRecording {
                            id: point.id,
                            since,
                        })
                    }
                    (false, Some(_)) => {
                        recording_since = None;
                        on_arrival = ArrivalAction::VideoStop;
                    }
                    (false, None) => return Err(ScheduleError::StopWithoutStart { id: point.id }),
                }
            }
            TaskParameter::IntervalSeconds(seconds) => {
                if index == last {
                    warnings.push(ScheduleWarning::IntervalOnFinalWaypoint { id: point.id });
                } else {
                    leg_interval_s = Some(seconds.map_or(config.default_interval_s, f64::from));
                }
            }
            TaskParameter::PanoramaFrames(frames) => {
                on_arrival = ArrivalAction::Panorama {
                    frames: frames.unwrap_or(config.panorama_frames),
                };
            }
        }
        waypoints.push(WaypointProgram {
            waypoint_id: point.id,
            on_arrival,
            leg_interval_s,
        });
    }

    let stop_video_at_end = if let Some(started_at) = recording_since {
        warnings.push(ScheduleWarning::VideoLeftOpen { started_at });
        true
    } else {
        false
    };

    Ok(Schedule {
        waypoints,
        stop_video_at_end,
        warnings,
    })
}
