use serde::Serialize;

use crate::model::{task_color, CameraTaskKind, TaskPalette};

use super::SimulationResult;

/// One animation step: where the drone is and which task is active.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frame {
    pub index: usize,
    pub time_s: f64,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub altitude_m: f64,
    pub task: CameraTaskKind,
    pub label: &'static str,
    pub color: &'static str,
    /// Fraction of mission time elapsed, in `[0, 1]`.
    pub progress: f64,
    pub completed: bool,
}

/// Cursor over the frames of a finished simulation.
#[derive(Debug, Clone)]
pub struct SimulationState<'a> {
    result: &'a SimulationResult,
    palette: TaskPalette,
    next: usize,
}

impl<'a> SimulationState<'a> {
    pub fn new(result: &'a SimulationResult) -> Self {
        SimulationState {
            result,
            palette: TaskPalette::Web,
            next: 0,
        }
    }

    pub fn with_palette(mut self, palette: TaskPalette) -> Self {
        self.palette = palette;
        self
    }

    pub fn len(&self) -> usize {
        self.result.trace.len()
    }

    pub fn is_empty(&self) -> bool {
        self.result.trace.is_empty()
    }

    pub fn is_finished(&self) -> bool {
        self.next >= self.len()
    }

    /// Frame at `index` without moving the cursor.
    pub fn frame(&self, index: usize) -> Option<Frame> {
        let sample = self.result.trace.get(index)?;
        let previous = index.checked_sub(1).map(|i| self.result.trace[i].time_s);
        let task = self.result.active_task(previous, sample.time_s);
        let duration = self.result.duration_s;
        Some(Frame {
            index,
            time_s: sample.time_s,
            latitude_deg: sample.latitude_deg,
            longitude_deg: sample.longitude_deg,
            altitude_m: sample.altitude_m,
            task,
            label: task.label(),
            color: task_color(task, self.palette),
            progress: if duration > 0.0 {
                (sample.time_s / duration).clamp(0.0, 1.0)
            } else {
                1.0
            },
            completed: index + 1 == self.len(),
        })
    }
}

impl Iterator for SimulationState<'_> {
    type Item = Frame;

    fn next(&mut self) -> Option<Frame> {
        let frame = self.frame(self.next)?;
        self.next += 1;
        Some(frame)
    }
}

impl SimulationResult {
    pub fn frames(&self) -> SimulationState<'_> {
        SimulationState::new(self)
    }
}
