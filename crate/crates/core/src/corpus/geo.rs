//! Geographic primitives: points, collection boxes and map geofences.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius used for great-circle distances.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Upper bound on a geofence radius.
pub const MAX_CIRCLE_RADIUS_M: f64 = 1_000_000.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("latitude {0} outside [-90, 90]")]
    Latitude(f64),
    #[error("longitude {0} outside [-180, 180]")]
    Longitude(f64),
    #[error("bounding box corners inverted (south-west must not exceed north-east)")]
    InvertedBox,
    #[error("circle radius {0} m must be in (0, 1000000]")]
    Radius(f64),
}

/// A latitude/longitude pair in degrees, range-checked on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint", into = "RawPoint")]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPoint {
    lat: f64,
    lon: f64,
}

impl TryFrom<RawPoint> for GeoPoint {
    type Error = GeoError;
    fn try_from(raw: RawPoint) -> Result<Self, Self::Error> {
        GeoPoint::new(raw.lat, raw.lon)
    }
}

impl From<GeoPoint> for RawPoint {
    fn from(p: GeoPoint) -> Self {
        RawPoint { lat: p.lat, lon: p.lon }
    }
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::Latitude(lat));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(GeoError::Longitude(lon));
        }
        Ok(Self { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    /// Great-circle distance in meters (haversine).
    pub fn distance_m(&self, other: &GeoPoint) -> f64 {
        haversine_m(self.lat, self.lon, other.lat, other.lon)
    }
}

pub fn haversine_m(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let phi1 = lat1.to_radians();
    let phi2 = lat2.to_radians();
    let dphi = (lat2 - lat1).to_radians();
    let dlambda = (lon2 - lon1).to_radians();
    let a = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * a.sqrt().min(1.0).asin()
}

/// Axis-aligned collection region. Antimeridian-crossing boxes are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox", into = "RawBox")]
pub struct BoundingBox {
    south_west: GeoPoint,
    north_east: GeoPoint,
}

#[derive(Serialize, Deserialize)]
struct RawBox {
    south_west: GeoPoint,
    north_east: GeoPoint,
}

impl TryFrom<RawBox> for BoundingBox {
    type Error = GeoError;
    fn try_from(raw: RawBox) -> Result<Self, Self::Error> {
        BoundingBox::new(raw.south_west, raw.north_east)
    }
}

impl From<BoundingBox> for RawBox {
    fn from(b: BoundingBox) -> Self {
        RawBox { south_west: b.south_west, north_east: b.north_east }
    }
}

impl BoundingBox {
    pub fn new(south_west: GeoPoint, north_east: GeoPoint) -> Result<Self, GeoError> {
        if south_west.lat > north_east.lat || south_west.lon > north_east.lon {
            return Err(GeoError::InvertedBox);
        }
        Ok(Self { south_west, north_east })
    }

    pub fn south_west(&self) -> GeoPoint {
        self.south_west
    }

    pub fn north_east(&self) -> GeoPoint {
        self.north_east
    }

    /// Boundary-inclusive containment.
    pub fn contains(&self, p: &GeoPoint) -> bool {
        p.lat >= self.south_west.lat
            && p.lat <= self.north_east.lat
            && p.lon >= self.south_west.lon
            && p.lon <= self.north_east.lon
    }

    /// Point at fractional position `(u, v)` of the box, each in `[0, 1]`.
    pub fn interpolate(&self, u: f64, v: f64) -> GeoPoint {
        let lat = self.south_west.lat + v.clamp(0.0, 1.0) * (self.north_east.lat - self.south_west.lat);
        let lon = self.south_west.lon + u.clamp(0.0, 1.0) * (self.north_east.lon - self.south_west.lon);
        GeoPoint { lat, lon }
    }
}

/// Map geofence drawn by an operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoCircle {
    pub center: GeoPoint,
    pub radius_m: f64,
}

impl GeoCircle {
    pub fn new(center: GeoPoint, radius_m: f64) -> Result<Self, GeoError> {
        if !(radius_m > 0.0 && radius_m <= MAX_CIRCLE_RADIUS_M) {
            return Err(GeoError::Radius(radius_m));
        }
        Ok(Self { center, radius_m })
    }

    /// Boundary-inclusive.
    pub fn contains(&self, p: &GeoPoint) -> bool {
        self.center.distance_m(p) <= self.radius_m
    }
}
