//! Spherical-earth helpers used by the lattice builder and leg geometry.

use serde::{Deserialize, Serialize};

/// Mean earth radius in metres.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }
}

fn normalize_lon(lon: f64) -> f64 {
    let mut l = (lon + 180.0).rem_euclid(360.0) - 180.0;
    if l == -180.0 {
        l = 180.0;
    }
    l
}

/// Central angle between two points, radians.
pub fn central_angle(a: LatLon, b: LatLon) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dphi = phi2 - phi1;
    let dlam = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlam / 2.0).sin().powi(2);
    2.0 * h.sqrt().min(1.0).asin()
}

/// Great-circle distance in metres.
pub fn distance_m(a: LatLon, b: LatLon) -> f64 {
    central_angle(a, b) * EARTH_RADIUS_M
}

/// Initial true course from `a` towards `b`, degrees clockwise from north in [0, 360).
pub fn initial_course_deg(a: LatLon, b: LatLon) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlam = (b.lon - a.lon).to_radians();
    let y = dlam.sin() * phi2.cos();
    let x = phi1.cos() * phi2.sin() - phi1.sin() * phi2.cos() * dlam.cos();
    y.atan2(x).to_degrees().rem_euclid(360.0)
}

/// Point at `fraction` of the way along the great circle from `a` to `b`.
pub fn intermediate(a: LatLon, b: LatLon, fraction: f64) -> LatLon {
    let delta = central_angle(a, b);
    if delta == 0.0 {
        return a;
    }
    let (phi1, lam1) = (a.lat.to_radians(), a.lon.to_radians());
    let (phi2, lam2) = (b.lat.to_radians(), b.lon.to_radians());
    let wa = ((1.0 - fraction) * delta).sin() / delta.sin();
    let wb = (fraction * delta).sin() / delta.sin();
    let x = wa * phi1.cos() * lam1.cos() + wb * phi2.cos() * lam2.cos();
    let y = wa * phi1.cos() * lam1.sin() + wb * phi2.cos() * lam2.sin();
    let z = wa * phi1.sin() + wb * phi2.sin();
    LatLon::new(
        z.atan2((x * x + y * y).sqrt()).to_degrees(),
        normalize_lon(y.atan2(x).to_degrees()),
    )
}

/// Point reached from `start` after travelling `angle_deg` of arc on `course_deg`.
pub fn destination(start: LatLon, course_deg: f64, angle_deg: f64) -> LatLon {
    let (phi1, lam1) = (start.lat.to_radians(), start.lon.to_radians());
    let theta = course_deg.to_radians();
    let d = angle_deg.to_radians();
    let phi2 = (phi1.sin() * d.cos() + phi1.cos() * d.sin() * theta.cos()).asin();
    let lam2 = lam1 + (theta.sin() * d.sin() * phi1.cos()).atan2(d.cos() - phi1.sin() * phi2.sin());
    LatLon::new(phi2.to_degrees(), normalize_lon(lam2.to_degrees()))
}

/// Projection of a horizontal wind (u east, v north) onto a course; positive is a tailwind.
pub fn along_track_wind(u: f64, v: f64, course_deg: f64) -> f64 {
    let c = course_deg.to_radians();
    u * c.sin() + v * c.cos()
}
