//! Local azimuthal-equidistant projection on a spherical earth.
//!
//! Everything metric in the crate (merge radius, Voronoi, gyration radii,
//! home-work distance) runs on the planar coordinates produced here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LonLat {
    pub lon: f64,
    pub lat: f64,
}

impl LonLat {
    pub const fn new(lon: f64, lat: f64) -> Self {
        LonLat { lon, lat }
    }
}

/// Planar point in meters, origin at the projection center, y to the north.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        self.dist2(other).sqrt()
    }

    pub fn dist2(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_lon: f64,
    pub min_lat: f64,
    pub max_lon: f64,
    pub max_lat: f64,
}

impl BoundingBox {
    pub fn contains(&self, p: LonLat) -> bool {
        p.lon >= self.min_lon && p.lon <= self.max_lon && p.lat >= self.min_lat && p.lat <= self.max_lat
    }
}

/// Azimuthal-equidistant projection about a fixed center, restricted to a
/// bounding box. Distances from the center are exact on the sphere; distances
/// between other points are accurate to well under 0.5% at city scale.
#[derive(Clone, Debug)]
pub struct Projection {
    center: LonLat,
    bbox: BoundingBox,
    sin_lat0: f64,
    cos_lat0: f64,
}

impl Projection {
    pub fn new(center: LonLat, bbox: BoundingBox) -> Result<Self> {
        if !(bbox.min_lon < bbox.max_lon && bbox.min_lat < bbox.max_lat) {
            return Err(Error::Config(format!("degenerate bounding box {bbox:?}")));
        }
        if !bbox.contains(center) {
            return Err(Error::Config(format!(
                "projection center {center:?} is outside the bounding box"
            )));
        }
        let lat0 = center.lat.to_radians();
        Ok(Projection {
            center,
            bbox,
            sin_lat0: lat0.sin(),
            cos_lat0: lat0.cos(),
        })
    }

    /// Budapest-area defaults.
    pub fn budapest() -> Self {
        Projection::new(
            LonLat::new(19.0402, 47.4979),
            BoundingBox {
                min_lon: 18.4,
                min_lat: 47.0,
                max_lon: 19.7,
                max_lat: 48.0,
            },
        )
        .expect("built-in frame is valid")
    }

    pub fn center(&self) -> LonLat {
        self.center
    }

    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }

    pub fn project(&self, p: LonLat) -> Result<Point> {
        if !p.lon.is_finite() || !p.lat.is_finite() || !self.bbox.contains(p) {
            return Err(Error::OutOfBounds((p.lon, p.lat)));
        }
        Ok(self.project_unchecked(p))
    }

    pub fn project_unchecked(&self, p: LonLat) -> Point {
        let lat = p.lat.to_radians();
        let dlon = (p.lon - self.center.lon).to_radians();
        let (sin_lat, cos_lat) = lat.sin_cos();
        let cos_c = (self.sin_lat0 * sin_lat + self.cos_lat0 * cos_lat * dlon.cos()).clamp(-1.0, 1.0);
        let c = cos_c.acos();
        let k = if c < 1e-12 { 1.0 } else { c / c.sin() };
        Point {
            x: EARTH_RADIUS_M * k * cos_lat * dlon.sin(),
            y: EARTH_RADIUS_M * k * (self.cos_lat0 * sin_lat - self.sin_lat0 * cos_lat * dlon.cos()),
        }
    }

    pub fn unproject(&self, p: Point) -> LonLat {
        let rho = (p.x * p.x + p.y * p.y).sqrt();
        if rho < 1e-9 {
            return self.center;
        }
        let c = rho / EARTH_RADIUS_M;
        let (sin_c, cos_c) = c.sin_cos();
        let lat = (cos_c * self.sin_lat0 + p.y * sin_c * self.cos_lat0 / rho).asin();
        let dlon = (p.x * sin_c).atan2(rho * self.cos_lat0 * cos_c - p.y * self.sin_lat0 * sin_c);
        LonLat {
            lon: self.center.lon + dlon.to_degrees(),
            lat: lat.to_degrees(),
        }
    }

    /// Planar distance between two geographic points, in kilometers.
    pub fn distance_km(&self, a: LonLat, b: LonLat) -> Result<f64> {
        Ok(self.project(a)?.dist(self.project(b)?) / 1000.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Great-circle distance on the same sphere, used as an independent check.
    fn haversine_m(a: LonLat, b: LonLat) -> f64 {
        let (la, lb) = (a.lat.to_radians(), b.lat.to_radians());
        let dlat = lb - la;
        let dlon = (b.lon - a.lon).to_radians();
        let h = (dlat / 2.0).sin().powi(2) + la.cos() * lb.cos() * (dlon / 2.0).sin().powi(2);
        2.0 * EARTH_RADIUS_M * h.sqrt().asin()
    }

    #[test]
    fn center_maps_to_origin() {
        let proj = Projection::budapest();
        let p = proj.project(proj.center()).unwrap();
        assert_eq!(p, Point::new(0.0, 0.0));
    }

    #[test]
    fn one_degree_north() {
        let proj = Projection::budapest();
        let c = proj.center();
        let p = proj.project(LonLat::new(c.lon, c.lat + 0.5)).unwrap();
        // half a degree keeps us inside the box; scale the oracle accordingly
        let expected = EARTH_RADIUS_M * 0.5_f64.to_radians();
        assert!(p.x.abs() < 1e-6);
        assert!((p.y - expected).abs() / expected < 0.005);

        let wide = Projection::new(
            c,
            BoundingBox { min_lon: 17.0, min_lat: 46.0, max_lon: 21.0, max_lat: 49.0 },
        )
        .unwrap();
        let p = wide.project(LonLat::new(c.lon, c.lat + 1.0)).unwrap();
        assert!((p.y - 111_194.93).abs() / 111_194.93 < 0.005, "{}", p.y);
    }

    #[test]
    fn mirror_symmetry() {
        let proj = Projection::budapest();
        let c = proj.center();
        let a = proj.project(LonLat::new(c.lon + 0.2, c.lat + 0.1)).unwrap();
        let b = proj.project(LonLat::new(c.lon - 0.2, c.lat + 0.1)).unwrap();
        assert!((a.x.abs() - b.x.abs()).abs() < 1e-9);
        assert!((a.y - b.y).abs() < 1e-9);
    }

    #[test]
    fn out_of_bounds_rejected() {
        let proj = Projection::budapest();
        assert!(matches!(proj.project(LonLat::new(0.0, 0.0)), Err(Error::OutOfBounds(_))));
        assert!(proj.project(LonLat::new(f64::NAN, 47.5)).is_err());
    }

    #[test]
    fn distance_basics() {
        let proj = Projection::budapest();
        let a = LonLat::new(19.1, 47.45);
        let b = LonLat::new(19.1, 47.55);
        assert_eq!(proj.distance_km(a, a).unwrap(), 0.0);
        let ab = proj.distance_km(a, b).unwrap();
        assert_eq!(ab, proj.distance_km(b, a).unwrap());
        // 0.1 degree of latitude on the sphere
        assert!((ab - 11.119_49).abs() / 11.119_49 < 0.005, "{ab}");
    }

    #[test]
    fn accuracy_at_city_scale_against_great_circle() {
        let proj = Projection::budapest();
        let pts = [
            LonLat::new(18.6, 47.2),
            LonLat::new(19.6, 47.9),
            LonLat::new(18.5, 47.8),
            LonLat::new(19.5, 47.1),
            LonLat::new(19.04, 47.5),
        ];
        for &a in &pts {
            for &b in &pts {
                let truth = haversine_m(a, b);
                if truth < 1.0 {
                    continue;
                }
                let got = proj.distance_km(a, b).unwrap() * 1000.0;
                assert!((got - truth).abs() / truth < 0.005, "{a:?} {b:?} {got} {truth}");
            }
        }
    }

    #[test]
    fn unproject_round_trip() {
        let proj = Projection::budapest();
        for &(lon, lat) in &[(19.0, 47.3), (18.7, 47.9), (19.6, 47.1), (19.0402, 47.4979)] {
            let p = LonLat::new(lon, lat);
            let back = proj.unproject(proj.project(p).unwrap());
            assert!((back.lon - lon).abs() < 1e-9 && (back.lat - lat).abs() < 1e-9);
        }
    }
}
