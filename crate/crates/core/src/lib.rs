//! Waypoint mission planning core: route model and validation, local-frame
//! geodesy, the route document store, an editing session, a kinematic
//! flight simulator and planned-versus-flown error analysis.

pub mod analysis;
pub mod document;
pub mod editor;
pub mod geodesy;
pub mod model;
pub mod sim;
pub mod store;

pub use analysis::{
    compare, render_report, summarize, summarize_with, ErrorReport, FlownRecord, ReportFormat,
    Rounding,
};
pub use geodesy::{GeoPoint, GeodesyMode, HomePoint, LocalCoord, Projection};
pub use model::{CameraTaskKind, Limits, Path, PathPoint, ValidationReport};
pub use sim::{simulate, SimConfig, SimulationResult};
pub use store::{RouteStore, StoreError};
