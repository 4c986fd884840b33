//! Distances between node positions.

use serde::{Deserialize, Serialize};

/// How `[a, b]` positions are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordSystem {
    /// `[x, y]` in kilometres.
    Planar,
    /// `[latitude, longitude]` in degrees.
    Geographic,
}

pub const EARTH_RADIUS_KM: f64 = 6371.0088;

pub fn euclidean(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Great-circle distance in km between two `[lat, lon]` points.
pub fn haversine(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (lat1, lon1) = (a[0].to_radians(), a[1].to_radians());
    let (lat2, lon2) = (b[0].to_radians(), b[1].to_radians());
    let h = ((lat2 - lat1) / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * ((lon2 - lon1) / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

pub fn distance(system: CoordSystem, a: [f64; 2], b: [f64; 2]) -> f64 {
    match system {
        CoordSystem::Planar => euclidean(a, b),
        CoordSystem::Geographic => haversine(a, b),
    }
}
