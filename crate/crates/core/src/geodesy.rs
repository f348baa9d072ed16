//! Home-relative planar coordinates.
//!
//! The local frame is an equirectangular approximation centred on the
//! takeoff point: `z` grows with latitude, `x` with longitude, both in meters.
//!
//! ```text
//! z = pi * R * (lat - lat_home) / 180
//! x = pi * R * c * (lon - lon_home) / 180
//! ```
//!
//! where `c` is the longitude scale factor. [`GeodesyMode::Legacy`] keeps the
//! formulation used by the original route tooling: `R = 6 378 000 m` and
//! `c = cos(lat_home * 180 / pi)`, i.e. the home latitude is multiplied by
//! the degree factor and the result is fed to `cos` as radians. Recorded
//! flight tables were produced with that exact expression, so it is kept
//! verbatim for reproducing them. [`GeodesyMode::Corrected`] uses the WGS-84
//! equatorial radius and `c = cos(lat_home in radians)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::PathPoint;

pub const LEGACY_EARTH_RADIUS_M: f64 = 6_378_000.0;
pub const WGS84_EQUATORIAL_RADIUS_M: f64 = 6_378_137.0;

/// Below this magnitude the longitude scale factor is treated as zero.
const DEGENERATE_SCALE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("longitude scale factor {0:e} at home latitude {1} is degenerate")]
    DegenerateScale(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
}

impl GeoPoint {
    pub fn new(latitude_deg: f64, longitude_deg: f64) -> Self {
        GeoPoint {
            latitude_deg,
            longitude_deg,
        }
    }

    fn check(&self) -> Result<(), GeoError> {
        if !self.latitude_deg.is_finite() || !self.longitude_deg.is_finite() {
            return Err(GeoError::NonFinite("coordinate"));
        }
        Ok(())
    }
}

impl From<&PathPoint> for GeoPoint {
    fn from(p: &PathPoint) -> Self {
        GeoPoint::new(p.latitude_deg, p.longitude_deg)
    }
}

/// Takeoff position; origin of the local frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomePoint {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
}

impl HomePoint {
    pub fn new(latitude_deg: f64, longitude_deg: f64) -> Self {
        HomePoint {
            latitude_deg,
            longitude_deg,
        }
    }

    pub fn as_geo(&self) -> GeoPoint {
        GeoPoint::new(self.latitude_deg, self.longitude_deg)
    }
}

impl From<GeoPoint> for HomePoint {
    fn from(g: GeoPoint) -> Self {
        HomePoint::new(g.latitude_deg, g.longitude_deg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LocalCoord {
    pub x_m: f64,
    pub z_m: f64,
}

impl LocalCoord {
    pub fn new(x_m: f64, z_m: f64) -> Self {
        LocalCoord { x_m, z_m }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GeodesyMode {
    /// Reproduces recorded tables: `R = 6 378 000 m`, cosine of `lat * 180 / pi`.
    Legacy,
    #[default]
    Corrected,
}

impl GeodesyMode {
    pub fn earth_radius_m(self) -> f64 {
        match self {
            GeodesyMode::Legacy => LEGACY_EARTH_RADIUS_M,
            GeodesyMode::Corrected => WGS84_EQUATORIAL_RADIUS_M,
        }
    }

    /// Longitude scale factor for a home latitude in degrees.
    pub fn longitude_scale(self, home_latitude_deg: f64) -> f64 {
        match self {
            GeodesyMode::Legacy => (home_latitude_deg * 180.0 / PI).cos(),
            GeodesyMode::Corrected => home_latitude_deg.to_radians().cos(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GeodesyMode::Legacy => "legacy",
            GeodesyMode::Corrected => "corrected",
        }
    }
}

impl std::str::FromStr for GeodesyMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "legacy" | "paper" => Ok(GeodesyMode::Legacy),
            "corrected" => Ok(GeodesyMode::Corrected),
            other => Err(format!("unknown geodesy mode {other:?} (legacy|corrected)")),
        }
    }
}

impl std::fmt::Display for GeodesyMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A home point bound to a conversion mode, with the scale factors resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    home: HomePoint,
    mode: GeodesyMode,
    radius_m: f64,
    scale: f64,
}

impl Projection {
    pub fn new(home: HomePoint, mode: GeodesyMode) -> Result<Self, GeoError> {
        home.as_geo().check()?;
        Ok(Projection {
            home,
            mode,
            radius_m: mode.earth_radius_m(),
            scale: mode.longitude_scale(home.latitude_deg),
        })
    }

    /// Replaces the sphere radius while keeping the mode's scale factor.
    pub fn with_radius(mut self, radius_m: f64) -> Self {
        self.radius_m = radius_m;
        self
    }

    pub fn home(&self) -> HomePoint {
        self.home
    }

    pub fn mode(&self) -> GeodesyMode {
        self.mode
    }

    pub fn radius_m(&self) -> f64 {
        self.radius_m
    }

    pub fn longitude_scale(&self) -> f64 {
        self.scale
    }

    pub fn meters_per_degree(&self) -> f64 {
        PI * self.radius_m / 180.0
    }

    pub fn to_local(&self, p: GeoPoint) -> Result<LocalCoord, GeoError> {
        p.check()?;
        let d_lat = p.latitude_deg - self.home.latitude_deg;
        let d_lon = p.longitude_deg - self.home.longitude_deg;
        Ok(LocalCoord {
            x_m: PI * self.radius_m * self.scale * d_lon / 180.0,
            z_m: PI * self.radius_m * d_lat / 180.0,
        })
    }

    pub fn from_local(&self, c: LocalCoord) -> Result<GeoPoint, GeoError> {
        if !c.x_m.is_finite() || !c.z_m.is_finite() {
            return Err(GeoError::NonFinite("local coordinate"));
        }
        if self.scale.abs() < DEGENERATE_SCALE {
            return Err(GeoError::DegenerateScale(
                self.scale,
                self.home.latitude_deg,
            ));
        }
        Ok(GeoPoint {
            latitude_deg: self.home.latitude_deg + c.z_m * 180.0 / (PI * self.radius_m),
            longitude_deg: self.home.longitude_deg
                + c.x_m * 180.0 / (PI * self.radius_m * self.scale),
        })
    }

    /// Straight-line distance between two waypoints, altitude included.
    pub fn leg_length_3d(&self, a: &PathPoint, b: &PathPoint) -> Result<f64, GeoError> {
        let la = self.to_local(a.into())?;
        let lb = self.to_local(b.into())?;
        let dx = lb.x_m - la.x_m;
        let dz = lb.z_m - la.z_m;
        let dy = b.altitude_m - a.altitude_m;
        if !dy.is_finite() {
            return Err(GeoError::NonFinite("altitude"));
        }
        Ok((dx * dx + dy * dy + dz * dz).sqrt())
    }
}

pub fn to_local(home: HomePoint, p: GeoPoint, mode: GeodesyMode) -> Result<LocalCoord, GeoError> {
    Projection::new(home, mode)?.to_local(p)
}

pub fn from_local(home: HomePoint, c: LocalCoord, mode: GeodesyMode) -> Result<GeoPoint, GeoError> {
    Projection::new(home, mode)?.from_local(c)
}

pub fn leg_length_3d(
    a: &PathPoint,
    b: &PathPoint,
    home: HomePoint,
    mode: GeodesyMode,
) -> Result<f64, GeoError> {
    Projection::new(home, mode)?.leg_length_3d(a, b)
}
