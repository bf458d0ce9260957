//! Geodesic primitives on a spherical Earth.
//!
//! Longitudes are stored west-positive on `[0, 360)` so that points on
//! either side of the antimeridian stay numerically close. All distances
//! are great-circle distances in nautical miles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius in nautical miles.
pub const EARTH_RADIUS_NMI: f64 = 3440.065;

/// A position with latitude in degrees and longitude in degrees west of
/// the prime meridian, normalized to `[0, 360)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint")]
pub struct GeoPoint {
    lat_deg: f64,
    lon_deg_w: f64,
}

#[derive(Deserialize)]
struct RawPoint {
    lat_deg: f64,
    lon_deg_w: f64,
}

impl TryFrom<RawPoint> for GeoPoint {
    type Error = Error;

    fn try_from(raw: RawPoint) -> Result<Self> {
        GeoPoint::new(raw.lat_deg, raw.lon_deg_w)
    }
}

impl GeoPoint {
    /// Builds a point from latitude and a west-positive longitude.
    ///
    /// A longitude of exactly 360 wraps to 0.
    pub fn new(lat_deg: f64, lon_deg_w: f64) -> Result<Self> {
        if !lat_deg.is_finite() || !(-90.0..=90.0).contains(&lat_deg) {
            return Err(Error::domain(format!("latitude {lat_deg} outside [-90, 90]")));
        }
        if !lon_deg_w.is_finite() || !(0.0..=360.0).contains(&lon_deg_w) {
            return Err(Error::domain(format!(
                "west longitude {lon_deg_w} outside [0, 360)"
            )));
        }
        let lon_deg_w = if lon_deg_w == 360.0 { 0.0 } else { lon_deg_w };
        Ok(GeoPoint { lat_deg, lon_deg_w })
    }

    /// Builds a point from the conventional east-positive longitude.
    pub fn from_east(lat_deg: f64, lon_deg_east: f64) -> Result<Self> {
        GeoPoint::new(lat_deg, normalize_longitude(lon_deg_east)?)
    }

    pub fn lat_deg(&self) -> f64 {
        self.lat_deg
    }

    pub fn lon_deg_w(&self) -> f64 {
        self.lon_deg_w
    }

    /// Longitude back in east-positive form on `[-180, 180)`.
    pub fn lon_deg_east(&self) -> f64 {
        denormalize_longitude(self.lon_deg_w)
    }
}

/// Converts an east-positive longitude in `[-180, 180]` to degrees west of
/// the prime meridian on `[0, 360)`.
pub fn normalize_longitude(raw_lon_deg: f64) -> Result<f64> {
    if !raw_lon_deg.is_finite() || !(-180.0..=180.0).contains(&raw_lon_deg) {
        return Err(Error::domain(format!(
            "longitude {raw_lon_deg} outside [-180, 180]"
        )));
    }
    if raw_lon_deg > 0.0 {
        Ok(360.0 - raw_lon_deg)
    } else {
        // `-0.0` would otherwise leak through for the prime meridian.
        Ok(-raw_lon_deg + 0.0)
    }
}

/// Inverse of [`normalize_longitude`] on `[-180, 180)`.
pub fn denormalize_longitude(lon_deg_w: f64) -> f64 {
    if lon_deg_w <= 180.0 {
        -lon_deg_w + 0.0
    } else {
        360.0 - lon_deg_w
    }
}

/// Great-circle distance between two points, in nautical miles.
pub fn haversine_nmi(a: GeoPoint, b: GeoPoint) -> f64 {
    let phi1 = a.lat_deg.to_radians();
    let phi2 = b.lat_deg.to_radians();
    let dphi = phi2 - phi1;
    // The sign convention of longitude cancels in the squared sine term.
    let dlambda = (b.lon_deg_w - a.lon_deg_w).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_NMI * h.sqrt().min(1.0).asin()
}

/// Hours needed to cover `dist_nmi` at `speed_kts`.
pub fn travel_time_hours(dist_nmi: f64, speed_kts: f64) -> Result<f64> {
    if !(speed_kts > 0.0) || !speed_kts.is_finite() {
        return Err(Error::domain(format!("speed {speed_kts} kts must be positive")));
    }
    if !(dist_nmi >= 0.0) || !dist_nmi.is_finite() {
        return Err(Error::domain(format!("distance {dist_nmi} nmi must be non-negative")));
    }
    Ok(dist_nmi / speed_kts)
}
