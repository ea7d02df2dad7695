//! Degree/meter conversions.
//!
//! Blocking works in a local equirectangular projection centred on the
//! collection centroid; great-circle distances back the brute-force oracles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::EntityCollection;

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Meters east (`x`) and north (`y`) of the projection reference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectedPoint {
    pub x: f64,
    pub y: f64,
}

impl ProjectedPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &ProjectedPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Projection descriptor; written next to run outputs so a run can be
/// reproduced.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub lat0: f64,
    pub lon0: f64,
    pub radius_m: f64,
}

impl Projection {
    pub fn new(lat0: f64, lon0: f64) -> Self {
        Self {
            lat0,
            lon0,
            radius_m: EARTH_RADIUS_M,
        }
    }

    pub fn project(&self, lat: f64, lon: f64) -> ProjectedPoint {
        let cos0 = self.lat0.to_radians().cos();
        ProjectedPoint {
            x: self.radius_m * (lon - self.lon0).to_radians() * cos0,
            y: self.radius_m * (lat - self.lat0).to_radians(),
        }
    }

    /// Inverse of [`Projection::project`]; returns `(lat, lon)`.
    pub fn unproject(&self, p: ProjectedPoint) -> (f64, f64) {
        let cos0 = self.lat0.to_radians().cos();
        let lat = self.lat0 + (p.y / self.radius_m).to_degrees();
        let lon = self.lon0 + (p.x / (self.radius_m * cos0)).to_degrees();
        (lat, lon)
    }
}

/// Projects every entity about the collection centroid.
///
/// Collections touching the poles or spanning more than 180 degrees of
/// longitude are rejected; the flat approximation is meaningless there.
pub fn project(collection: &EntityCollection) -> Result<(Projection, Vec<ProjectedPoint>)> {
    let bbox = collection.bounding_box().ok_or(Error::EmptyCollection)?;
    if bbox.max_lat.abs().max(bbox.min_lat.abs()) >= 89.0 {
        return Err(Error::param("collection", "points too close to a pole"));
    }
    if bbox.max_lon - bbox.min_lon > 180.0 {
        return Err(Error::param(
            "collection",
            "longitude span exceeds 180 degrees (antimeridian)",
        ));
    }
    let n = collection.len() as f64;
    let (sum_lat, sum_lon) = collection
        .entities()
        .iter()
        .fold((0.0, 0.0), |(a, b), e| (a + e.lat, b + e.lon));
    let proj = Projection::new(sum_lat / n, sum_lon / n);
    let points = collection
        .entities()
        .iter()
        .map(|e| proj.project(e.lat, e.lon))
        .collect();
    Ok((proj, points))
}

/// Great-circle distance in meters between `(lat, lon)` points in degrees.
pub fn haversine(p1: (f64, f64), p2: (f64, f64)) -> f64 {
    let (lat1, lon1) = (p1.0.to_radians(), p1.1.to_radians());
    let (lat2, lon2) = (p2.0.to_radians(), p2.1.to_radians());
    let dlat = (lat2 - lat1) / 2.0;
    let dlon = (lon2 - lon1) / 2.0;
    let a = dlat.sin().powi(2) + lat1.cos() * lat2.cos() * dlon.sin().powi(2);
    2.0 * EARTH_RADIUS_M * a.sqrt().min(1.0).asin()
}
