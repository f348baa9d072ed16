//! Route editing sessions.

use std::collections::VecDeque;

use serde::Serialize;
use thiserror::Error;

use crate::model::{
    altitude_in_range, coordinate_violations, parse_instruction, validate_path, CameraTaskKind,
    Limits, Path, PathPoint, ValidationReport,
};
use crate::store::{RouteStore, StoreError};

/// Altitude given to newly placed waypoints.
pub const DEFAULT_WAYPOINT_ALTITUDE_M: f64 = 10.0;
const UNDO_DEPTH: usize = 64;

#[derive(Debug, Error)]
pub enum EditError {
    #[error("{0}")]
    Domain(String),
    #[error("route already has the maximum of {0} waypoints")]
    Capacity(usize),
    #[error("waypoint {0} not found")]
    NotFound(u32),
    #[error("route is invalid: {0}")]
    Validation(ValidationReport),
    #[error("nothing to undo")]
    NothingToUndo,
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// One row of the waypoint details table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaypointRow {
    pub display_order: u32,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub height: String,
    pub task: &'static str,
}

/// A single-owner working copy of a route with undo history.
#[derive(Debug, Clone)]
pub struct EditSession {
    working: Path,
    dirty: bool,
    undo: VecDeque<Path>,
    limits: Limits,
}

impl EditSession {
    /// A session over a fresh, empty route.
    pub fn new(route_id: impl Into<String>, limits: Limits) -> Self {
        EditSession {
            working: Path::new(route_id),
            dirty: false,
            undo: VecDeque::new(),
            limits,
        }
    }

    /// A session over a copy of an existing route.
    pub fn open(source: &Path, limits: Limits) -> Result<Self, EditError> {
        let report = validate_path(source, &limits);
        if !report.is_valid() {
            return Err(EditError::Validation(report));
        }
        Ok(EditSession {
            working: source.clone(),
            dirty: false,
            undo: VecDeque::new(),
            limits,
        })
    }

    pub fn path(&self) -> &Path {
        &self.working
    }

    pub fn is_dirty(&self) -> bool {
        self.dirty
    }

    pub fn undo_depth(&self) -> usize {
        self.undo.len()
    }

    fn checkpoint(&mut self) {
        if self.undo.len() == UNDO_DEPTH {
            self.undo.pop_front();
        }
        self.undo.push_back(self.working.clone());
        self.dirty = true;
    }

    fn index_of(&self, id: u32) -> Result<usize, EditError> {
        self.working
            .points
            .iter()
            .position(|p| p.id == id)
            .ok_or(EditError::NotFound(id))
    }

    pub fn add_waypoint(
        &mut self,
        latitude_deg: f64,
        longitude_deg: f64,
    ) -> Result<PathPoint, EditError> {
        if let Some(v) = coordinate_violations(
            self.working.points.len() as u32,
            latitude_deg,
            longitude_deg,
        )
        .first()
        {
            return Err(EditError::Domain(v.to_string()));
        }
        if self.working.points.len() >= self.limits.max_waypoints {
            return Err(EditError::Capacity(self.limits.max_waypoints));
        }
        self.checkpoint();
        let point = PathPoint::new(
            self.working.points.len() as u32,
            latitude_deg,
            longitude_deg,
            DEFAULT_WAYPOINT_ALTITUDE_M,
        );
        self.working.points.push(point.clone());
        Ok(point)
    }

    /// Removes a waypoint and renumbers the rest densely.
    pub fn remove_waypoint(&mut self, id: u32) -> Result<(), EditError> {
        let index = self.index_of(id)?;
        self.checkpoint();
        self.working.points.remove(index);
        for (i, p) in self.working.points.iter_mut().enumerate() {
            p.id = i as u32;
        }
        Ok(())
    }

    pub fn set_altitude(&mut self, id: u32, meters: f64) -> Result<PathPoint, EditError> {
        let index = self.index_of(id)?;
        if !altitude_in_range(meters, &self.limits) {
            return Err(EditError::Domain(format!(
                "altitude {meters} m outside [0, {}] m",
                self.limits.altitude_max_m
            )));
        }
        self.checkpoint();
        self.working.points[index].altitude_m = meters;
        Ok(self.working.points[index].clone())
    }

    pub fn set_task(
        &mut self,
        id: u32,
        kind: CameraTaskKind,
        instruction: &str,
    ) -> Result<PathPoint, EditError> {
        let index = self.index_of(id)?;
        if parse_instruction(kind, instruction).is_none() {
            return Err(EditError::Domain(format!(
                "instruction {instruction:?} is not valid for task {}",
                kind.label()
            )));
        }
        self.checkpoint();
        let point = &mut self.working.points[index];
        point.task = kind;
        point.instruction = instruction.trim().to_string();
        Ok(point.clone())
    }

    /// Sets the description; empty text clears it.
    pub fn set_description(&mut self, text: &str) -> &mut Self {
        self.checkpoint();
        self.working.description = if text.is_empty() {
            None
        } else {
            Some(text.to_string())
        };
        self
    }

    pub fn waypoint_details(&self) -> Vec<WaypointRow> {
        let round5 = |v: f64| (v * 1e5).round() / 1e5;
        self.working
            .points
            .iter()
            .map(|p| WaypointRow {
                display_order: p.id + 1,
                latitude_deg: round5(p.latitude_deg),
                longitude_deg: round5(p.longitude_deg),
                height: format!("{} m", p.altitude_m),
                task: p.task.label(),
            })
            .collect()
    }

    /// Saves the working copy. The session is untouched if the save fails.
    pub fn commit(&mut self, store: &RouteStore) -> Result<String, EditError> {
        let id = store.save_route(&self.working)?;
        self.dirty = false;
        Ok(id)
    }

    pub fn undo(&mut self) -> Result<&Path, EditError> {
        let previous = self.undo.pop_back().ok_or(EditError::NothingToUndo)?;
        self.working = previous;
        self.dirty = true;
        Ok(&self.working)
    }

    #[cfg(test)]
    pub(crate) fn working_mut(&mut self) -> &mut Path {
        &mut self.working
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn session() -> EditSession {
        EditSession::new("PATH-105", Limits::default())
    }

    #[test]
    fn fresh_session_is_empty() {
        let s = session();
        assert!(s.path().points.is_empty());
        assert_eq!(s.path().description, None);
        assert_eq!(s.path().route_id, "PATH-105");
        assert!(!s.is_dirty());
    }

    #[test]
    fn open_copies_the_source() {
        let mut source = Path::new("PATH-97");
        for i in 0..5 {
            source
                .points
                .push(PathPoint::new(i, 4.6012, -74.0658, 10.0));
        }
        let mut a = EditSession::open(&source, Limits::default()).unwrap();
        let b = EditSession::open(&source, Limits::default()).unwrap();
        assert_eq!(a.path().points.len(), 5);
        a.remove_waypoint(0).unwrap();
        assert_eq!(a.path().points.len(), 4);
        assert_eq!(b.path().points.len(), 5);
        assert_eq!(source.points.len(), 5);
    }

    #[test]
    fn open_rejects_invalid_source() {
        let mut source = Path::new("PATH-1");
        source.points.push(PathPoint::new(0, 4.6, -74.0, 500.0));
        assert!(matches!(
            EditSession::open(&source, Limits::default()),
            Err(EditError::Validation(_))
        ));
    }

    #[test]
    fn adding_waypoints() {
        let mut s = session();
        let first = s.add_waypoint(4.6, -74.06).unwrap();
        assert_eq!((first.id, first.altitude_m), (0, 10.0));
        assert_eq!(first.task, CameraTaskKind::Nothing);
        let second = s.add_waypoint(4.6001, -74.06).unwrap();
        assert_eq!(second.id, 1);
        assert!(s.is_dirty());
        assert!(matches!(
            s.add_waypoint(91.0, 0.0),
            Err(EditError::Domain(_))
        ));
    }

    #[test]
    fn capacity_limit() {
        let mut s = EditSession::new(
            "PATH-1",
            Limits {
                max_waypoints: 2,
                ..Limits::default()
            },
        );
        s.add_waypoint(0.0, 0.0).unwrap();
        s.add_waypoint(0.0, 0.0).unwrap();
        assert!(matches!(
            s.add_waypoint(0.0, 0.0),
            Err(EditError::Capacity(2))
        ));
    }

    #[test]
    fn removal_reindexes() {
        let mut s = session();
        for i in 0..3 {
            s.add_waypoint(4.6 + f64::from(i) * 1e-4, -74.06).unwrap();
        }
        s.remove_waypoint(1).unwrap();
        let ids: Vec<_> = s.path().points.iter().map(|p| p.id).collect();
        assert_eq!(ids, [0, 1]);
        assert_eq!(s.path().points[1].latitude_deg, 4.6002);
        assert!(matches!(s.remove_waypoint(9), Err(EditError::NotFound(9))));
        s.remove_waypoint(0).unwrap();
        s.remove_waypoint(0).unwrap();
        assert!(s.path().points.is_empty());
    }

    #[test]
    fn altitude_edits_and_undo() {
        let mut s = session();
        s.add_waypoint(4.6, -74.06).unwrap();
        assert_eq!(s.set_altitude(0, 25.0).unwrap().altitude_m, 25.0);
        assert!(matches!(s.set_altitude(0, -1.0), Err(EditError::Domain(_))));
        s.set_altitude(0, 40.0).unwrap();
        s.undo().unwrap();
        assert_eq!(s.path().points[0].altitude_m, 25.0);
    }

    #[test]
    fn task_edits() {
        let mut s = session();
        for _ in 0..3 {
            s.add_waypoint(4.6, -74.06).unwrap();
        }
        assert_eq!(
            s.set_task(0, CameraTaskKind::Picture, "")
                .unwrap()
                .task
                .code_str(),
            "1"
        );
        assert_eq!(
            s.set_task(2, CameraTaskKind::Interval, "5")
                .unwrap()
                .instruction,
            "5"
        );
        assert!(matches!(
            s.set_task(2, CameraTaskKind::Interval, "-2"),
            Err(EditError::Domain(_))
        ));
        assert!(matches!(
            s.set_task(1, CameraTaskKind::Video, "pause"),
            Err(EditError::Domain(_))
        ));
        assert_eq!(s.path().points[2].instruction, "5");
    }

    #[test]
    fn descriptions() {
        let mut s = session();
        s.set_description("bobo, panoramica y video");
        assert_eq!(
            s.path().description.as_deref(),
            Some("bobo, panoramica y video")
        );
        s.set_description("");
        assert_eq!(s.path().description, None);
    }

    #[test]
    fn unicode_description_survives_commit() {
        let store = RouteStore::in_memory();
        let mut s = session();
        s.add_waypoint(4.6, -74.06).unwrap();
        s.set_description("estatua «el bobo» ✈ 東");
        s.commit(&store).unwrap();
        let back = store.load_route("PATH-105").unwrap();
        assert_eq!(back.description.as_deref(), Some("estatua «el bobo» ✈ 東"));
    }

    #[test]
    fn details_rows() {
        let mut s = session();
        assert!(s.waypoint_details().is_empty());
        s.add_waypoint(4.601281234, -74.065821987).unwrap();
        s.set_altitude(0, 5.0).unwrap();
        s.add_waypoint(4.6013, -74.0658).unwrap();
        s.set_altitude(1, 15.0).unwrap();
        let rows = s.waypoint_details();
        assert_eq!(rows[0].display_order, 1);
        assert_eq!(rows[0].latitude_deg, 4.60128);
        assert_eq!(rows[0].longitude_deg, -74.06582);
        assert_eq!(rows[0].height, "5 m");
        assert_eq!(rows[0].task, "do nothing");
        assert_eq!(s.path().points[0].latitude_deg, 4.601281234);
        s.remove_waypoint(0).unwrap();
        assert_eq!(s.waypoint_details()[0].display_order, 1);
    }

    #[test]
    fn commit_flow() {
        let store = RouteStore::in_memory();
        let mut s = EditSession::new(store.next_route_id(), Limits::default());
        s.add_waypoint(4.6, -74.06).unwrap();
        assert_eq!(s.commit(&store).unwrap(), "PATH-1");
        assert!(!s.is_dirty());
        assert_eq!(store.list_routes()[0].route_id, "PATH-1");
        // No changes: still succeeds.
        assert_eq!(s.commit(&store).unwrap(), "PATH-1");

        s.working_mut().points[0].altitude_m = 1000.0;
        s.dirty = true;
        assert!(matches!(
            s.commit(&store),
            Err(EditError::Store(StoreError::Validation(_)))
        ));
        assert!(s.is_dirty());
        assert_eq!(
            store.load_route("PATH-1").unwrap().points[0].altitude_m,
            10.0
        );
    }

    #[test]
    fn fresh_id_after_existing_route() {
        let store = RouteStore::in_memory();
        let mut existing = Path::new("PATH-97");
        existing.points.push(PathPoint::new(0, 4.6, -74.0, 10.0));
        store.save_route(&existing).unwrap();
        let mut s = EditSession::new(store.next_route_id(), Limits::default());
        s.add_waypoint(4.6, -74.0).unwrap();
        assert_eq!(s.commit(&store).unwrap(), "PATH-98");
        assert_eq!(store.list_routes().len(), 2);
    }

    #[test]
    fn undo_contract() {
        let mut s = session();
        assert!(matches!(s.undo(), Err(EditError::NothingToUndo)));
        s.add_waypoint(4.6, -74.06).unwrap();
        s.undo().unwrap();
        assert!(s.path().points.is_empty());
        let original = s.path().clone();
        s.add_waypoint(4.6, -74.06).unwrap();
        s.set_altitude(0, 30.0).unwrap();
        s.undo().unwrap();
        s.undo().unwrap();
        assert_eq!(s.path(), &original);
    }

    #[test]
    fn undo_keeps_at_least_twenty_steps() {
        let mut s = session();
        s.add_waypoint(4.6, -74.06).unwrap();
        for i in 0..30 {
            s.set_altitude(0, f64::from(i)).unwrap();
        }
        for _ in 0..20 {
            s.undo().unwrap();
        }
        assert_eq!(s.path().points[0].altitude_m, 9.0);
    }

    #[derive(Debug, Clone)]
    enum Op {
        Add(f64, f64),
        Remove(u32),
        Altitude(u32, f64),
        Task(u32, u8, String),
        Undo,
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![
            (-89.0f64..89.0, -179.0f64..179.0).prop_map(|(a, b)| Op::Add(a, b)),
            (0u32..12).prop_map(Op::Remove),
            (0u32..12, -10.0f64..150.0).prop_map(|(i, a)| Op::Altitude(i, a)),
            (
                0u32..12,
                0u8..5,
                prop_oneof![
                    Just(String::new()),
                    Just("start".to_string()),
                    Just("3".to_string()),
                    Just("-1".to_string())
                ]
            )
                .prop_map(|(i, k, s)| Op::Task(i, k, s)),
            Just(Op::Undo),
        ]
    }

    proptest! {
        #[test]
        fn edits_keep_route_valid(ops in proptest::collection::vec(op(), 0..60)) {
            let mut s = session();
            for op in ops {
                let _ = match op {
                    Op::Add(a, b) => s.add_waypoint(a, b).map(|_| ()),
                    Op::Remove(i) => s.remove_waypoint(i),
                    Op::Altitude(i, a) => s.set_altitude(i, a).map(|_| ()),
                    Op::Task(i, k, text) => s
                        .set_task(i, CameraTaskKind::from_code(k).unwrap(), &text)
                        .map(|_| ()),
                    Op::Undo => s.undo().map(|_| ()),
                };
                let report = validate_path(s.path(), &Limits::default());
                prop_assert!(report.is_valid(), "{}", report);
                for (i, p) in s.path().points.iter().enumerate() {
                    prop_assert_eq!(p.id as usize, i);
                }
            }
        }
    }
}
