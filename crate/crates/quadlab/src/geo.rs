//! Waypoint geometry on a spherical earth: great-circle distance,
//! initial course, and heading error.

use std::fmt;

/// Sphere radius [m], the constant used by the hobby GPS libraries this
/// module mirrors.
pub const EARTH_RADIUS_M: f64 = 6_372_795.0;

#[derive(Debug, Clone, PartialEq)]
pub enum GeoError {
    /// Identical or antipodal points have no defined initial bearing.
    DegenerateBearing,
    /// Coordinate outside its valid range.
    OutOfRange { what: String },
}

impl fmt::Display for GeoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeoError::DegenerateBearing => {
                write!(f, "bearing undefined for identical or antipodal points")
            }
            GeoError::OutOfRange { what } => write!(f, "coordinate out of range: {what}"),
        }
    }
}

impl std::error::Error for GeoError {}

fn check_coords(lat: f64, lon: f64) -> Result<(), GeoError> {
    if !(-90.0..=90.0).contains(&lat) {
        return Err(GeoError::OutOfRange {
            what: format!("latitude {lat}"),
        });
    }
    if !(-180.0..=180.0).contains(&lon) {
        return Err(GeoError::OutOfRange {
            what: format!("longitude {lon}"),
        });
    }
    Ok(())
}

/// Great-circle distance [m] between two points [deg], haversine form for
/// small-angle stability.
pub fn distance_between(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> Result<f64, GeoError> {
    check_coords(lat1, lon1)?;
    check_coords(lat2, lon2)?;
    let phi1 = lat1.to_radians();
    let phi2 = lat2.to_radians();
    let dphi = (lat2 - lat1).to_radians();
    let dlambda = (lon2 - lon1).to_radians();
    let a = (dphi / 2.0).sin().powi(2)
        + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    let c = 2.0 * a.sqrt().atan2((1.0 - a).sqrt());
    Ok(EARTH_RADIUS_M * c)
}

/// Initial great-circle bearing [deg] from point 1 toward point 2, North = 0,
/// East = 90, in [0, 360).
pub fn course_to(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> Result<f64, GeoError> {
    check_coords(lat1, lon1)?;
    check_coords(lat2, lon2)?;
    let phi1 = lat1.to_radians();
    let phi2 = lat2.to_radians();
    let dlambda = (lon2 - lon1).to_radians();
    let y = dlambda.sin() * phi2.cos();
    let x = phi1.cos() * phi2.sin() - phi1.sin() * phi2.cos() * dlambda.cos();
    if y.abs() < 1e-15 && x.abs() < 1e-15 {
        return Err(GeoError::DegenerateBearing);
    }
    let mut bearing = y.atan2(x).to_degrees();
    if bearing < 0.0 {
        bearing += 360.0;
    }
    // Guard the wrap: 360.0 collapses to 0.
    if bearing >= 360.0 {
        bearing -= 360.0;
    }
    Ok(bearing)
}

/// Signed turn [deg] in (-180, 180] from the compass heading to the course;
/// positive means turn clockwise.
pub fn heading_error(course: f64, compass_heading: f64) -> f64 {
    let mut diff = course - compass_heading;
    while diff > 180.0 {
        diff -= 360.0;
    }
    while diff <= -180.0 {
        diff += 360.0;
    }
    diff
}
