//! WGS84 points, geofences and great-circle distance.

use crate::error::{Error, Result};

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        let p = GeoPoint { lat, lon };
        if p.is_valid() {
            Ok(p)
        } else {
            Err(Error::InvalidGeoPoint { lat, lon })
        }
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Geofence {
    pub center: GeoPoint,
    pub radius_m: f64,
}

impl Geofence {
    pub fn new(center: GeoPoint, radius_m: f64) -> Result<Self> {
        if !center.is_valid() {
            return Err(Error::InvalidGeoPoint {
                lat: center.lat,
                lon: center.lon,
            });
        }
        if !(radius_m.is_finite() && radius_m > 0.0) {
            return Err(Error::InvalidGeofence(radius_m));
        }
        Ok(Geofence { center, radius_m })
    }

    pub fn contains(&self, p: &GeoPoint) -> bool {
        haversine(&self.center, p) <= self.radius_m
    }
}

/// Great-circle distance in meters.
pub fn haversine(p: &GeoPoint, q: &GeoPoint) -> f64 {
    let (phi1, phi2) = (p.lat.to_radians(), q.lat.to_radians());
    let dphi = phi2 - phi1;
    let dlambda = (q.lon - p.lon).to_radians();
    let s1 = libm::sin(dphi / 2.0);
    let s2 = libm::sin(dlambda / 2.0);
    let a = s1 * s1 + libm::cos(phi1) * libm::cos(phi2) * s2 * s2;
    2.0 * EARTH_RADIUS_M * libm::asin(libm::sqrt(a.clamp(0.0, 1.0)))
}
