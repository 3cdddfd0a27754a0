//! Administrative regions (Budapest districts, agglomeration sectors) read
//! from GeoJSON, plus the study-area boundary.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{LonLat, Point, Polygon, Projection};
use crate::error::{Error, Result};

pub const DISTRICTS: u8 = 23;
pub const SECTORS: u8 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AdminKind {
    District,
    AgglomerationSector,
    Outside,
}

impl AdminKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AdminKind::District => "district",
            AdminKind::AgglomerationSector => "agglomeration_sector",
            AdminKind::Outside => "outside",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "district" => Some(AdminKind::District),
            "agglomeration_sector" => Some(AdminKind::AgglomerationSector),
            "outside" => Some(AdminKind::Outside),
            _ => None,
        }
    }
}

/// Where a merged cell lies administratively.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AdminLabel {
    District(u8),
    Sector(u8),
    #[default]
    Outside,
}

impl AdminLabel {
    pub fn kind(self) -> AdminKind {
        match self {
            AdminLabel::District(_) => AdminKind::District,
            AdminLabel::Sector(_) => AdminKind::AgglomerationSector,
            AdminLabel::Outside => AdminKind::Outside,
        }
    }

    pub fn unit(self) -> u8 {
        match self {
            AdminLabel::District(d) | AdminLabel::Sector(d) => d,
            AdminLabel::Outside => 0,
        }
    }

    pub fn from_parts(kind: AdminKind, unit: u32) -> Option<Self> {
        match kind {
            AdminKind::District if (1..=DISTRICTS as u32).contains(&unit) => Some(AdminLabel::District(unit as u8)),
            AdminKind::AgglomerationSector if (1..=SECTORS as u32).contains(&unit) => {
                Some(AdminLabel::Sector(unit as u8))
            }
            AdminKind::Outside => Some(AdminLabel::Outside),
            _ => None,
        }
    }
}

impl fmt::Display for AdminLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind().as_str(), self.unit())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdminRegion {
    pub unit_id: u32,
    pub kind: AdminKind,
    pub name: String,
    /// Geographic rings as read, kept for re-serialization.
    pub rings: Vec<Vec<Vec<LonLat>>>,
    /// Same polygons in projected meters.
    pub polygons: Vec<Polygon>,
}

impl AdminRegion {
    pub fn label(&self) -> AdminLabel {
        AdminLabel::from_parts(self.kind, self.unit_id).unwrap_or(AdminLabel::Outside)
    }

    pub fn contains(&self, p: Point) -> bool {
        self.polygons.iter().any(|poly| poly.contains(p))
    }

    pub fn from_rings(
        unit_id: u32,
        kind: AdminKind,
        name: impl Into<String>,
        rings: Vec<Vec<Vec<LonLat>>>,
        frame: &Projection,
    ) -> Result<Self> {
        if AdminLabel::from_parts(kind, unit_id).is_none() {
            return Err(Error::Geometry(format!("invalid {} id {unit_id}", kind.as_str())));
        }
        let polygons = rings
            .iter()
            .map(|poly| project_polygon(poly, frame))
            .collect::<Result<Vec<_>>>()?;
        if let Some(bad) = polygons.iter().find(|p| !p.is_simple()) {
            return Err(Error::Geometry(format!(
                "region {} {unit_id} has a self-intersecting ring ({} vertices)",
                kind.as_str(),
                bad.exterior.len()
            )));
        }
        Ok(AdminRegion {
            unit_id,
            kind,
            name: name.into(),
            rings,
            polygons,
        })
    }
}

fn project_polygon(rings: &[Vec<LonLat>], frame: &Projection) -> Result<Polygon> {
    let mut projected = rings.iter().map(|ring| {
        let mut r: Vec<Point> = ring.iter().map(|&p| frame.project(p)).collect::<Result<_>>()?;
        if r.len() > 1 && r.first() == r.last() {
            r.pop();
        }
        Ok(r)
    });
    let exterior = projected
        .next()
        .ok_or_else(|| Error::Geometry("polygon without rings".into()))??;
    let holes = projected.collect::<Result<Vec<_>>>()?;
    Ok(Polygon { exterior, holes })
}

/// First region (in input order) containing the point, else outside.
pub fn label_point(regions: &[AdminRegion], p: Point) -> AdminLabel {
    regions
        .iter()
        .find(|r| r.contains(p))
        .map_or(AdminLabel::Outside, AdminRegion::label)
}

fn geojson_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::GeoJson {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Open {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| geojson_err(path, e.to_string()))
}

fn parse_ring(v: &Value) -> Option<Vec<LonLat>> {
    v.as_array()?
        .iter()
        .map(|c| {
            let c = c.as_array()?;
            Some(LonLat::new(c.first()?.as_f64()?, c.get(1)?.as_f64()?))
        })
        .collect()
}

fn parse_polygon(v: &Value) -> Option<Vec<Vec<LonLat>>> {
    v.as_array()?.iter().map(parse_ring).collect()
}

/// Polygon or MultiPolygon geometry → list of polygons (each a ring list).
fn parse_geometry(g: &Value) -> Option<Vec<Vec<Vec<LonLat>>>> {
    let coords = g.get("coordinates")?;
    match g.get("type")?.as_str()? {
        "Polygon" => Some(vec![parse_polygon(coords)?]),
        "MultiPolygon" => coords.as_array()?.iter().map(parse_polygon).collect(),
        _ => None,
    }
}

/// Reads a FeatureCollection whose features carry `unit_id`, `kind` and
/// `name` properties.
pub fn read_admin_regions(path: &Path, frame: &Projection) -> Result<Vec<AdminRegion>> {
    let root = read_json(path)?;
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| geojson_err(path, "expected a FeatureCollection"))?;
    let mut out = Vec::with_capacity(features.len());
    for (i, f) in features.iter().enumerate() {
        let props = f
            .get("properties")
            .ok_or_else(|| geojson_err(path, format!("feature {i} has no properties")))?;
        let unit_id = match props.get("unit_id") {
            Some(Value::Number(n)) => n.as_u64().map(|v| v as u32),
            Some(Value::String(s)) => s.parse().ok(),
            _ => None,
        }
        .ok_or_else(|| geojson_err(path, format!("feature {i}: missing or invalid unit_id")))?;
        let kind = props
            .get("kind")
            .and_then(Value::as_str)
            .and_then(AdminKind::parse)
            .ok_or_else(|| geojson_err(path, format!("feature {i}: missing or invalid kind")))?;
        let name = props.get("name").and_then(Value::as_str).unwrap_or_default();
        let rings = f
            .get("geometry")
            .and_then(parse_geometry)
            .ok_or_else(|| geojson_err(path, format!("feature {i}: unsupported geometry")))?;
        out.push(AdminRegion::from_rings(unit_id, kind, name, rings, frame)?);
    }
    Ok(out)
}

fn rings_json(rings: &[Vec<LonLat>]) -> Value {
    Value::Array(
        rings
            .iter()
            .map(|ring| {
                let mut pts: Vec<Value> = ring.iter().map(|p| json!([p.lon, p.lat])).collect();
                if ring.first() != ring.last() {
                    if let Some(first) = ring.first() {
                        pts.push(json!([first.lon, first.lat]));
                    }
                }
                Value::Array(pts)
            })
            .collect(),
    )
}

pub fn write_admin_regions(path: &Path, regions: &[AdminRegion]) -> Result<()> {
    let features: Vec<Value> = regions
        .iter()
        .map(|r| {
            let geometry = if r.rings.len() == 1 {
                json!({"type": "Polygon", "coordinates": rings_json(&r.rings[0])})
            } else {
                json!({"type": "MultiPolygon", "coordinates": r.rings.iter().map(|p| rings_json(p)).collect::<Vec<_>>()})
            };
            json!({
                "type": "Feature",
                "properties": {"unit_id": r.unit_id, "kind": r.kind.as_str(), "name": r.name},
                "geometry": geometry,
            })
        })
        .collect();
    let doc = json!({"type": "FeatureCollection", "features": features});
    write_json(path, &doc)
}

fn write_json(path: &Path, doc: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(doc).map_err(|e| Error::Internal(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Reads the study-area boundary: a Polygon geometry, a Feature, or the first
/// feature of a FeatureCollection.
pub fn read_boundary(path: &Path, frame: &Projection) -> Result<Polygon> {
    let root = read_json(path)?;
    let geometry = if let Some(features) = root.get("features").and_then(Value::as_array) {
        features.first().and_then(|f| f.get("geometry"))
    } else if root.get("geometry").is_some() {
        root.get("geometry")
    } else {
        Some(&root)
    };
    let polys = geometry
        .and_then(parse_geometry)
        .ok_or_else(|| geojson_err(path, "expected a Polygon boundary"))?;
    if polys.len() != 1 {
        return Err(geojson_err(path, "boundary must be a single polygon"));
    }
    project_polygon(&polys[0], frame)
}

pub fn write_boundary(path: &Path, ring: &[LonLat]) -> Result<()> {
    let doc = json!({
        "type": "Feature",
        "properties": {"name": "boundary"},
        "geometry": {"type": "Polygon", "coordinates": rings_json(&[ring.to_vec()])},
    });
    write_json(path, &doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(lon: f64, lat: f64, d: f64) -> Vec<Vec<LonLat>> {
        vec![vec![
            LonLat::new(lon, lat),
            LonLat::new(lon + d, lat),
            LonLat::new(lon + d, lat + d),
            LonLat::new(lon, lat + d),
            LonLat::new(lon, lat),
        ]]
    }

    #[test]
    fn geojson_round_trip_and_labels() {
        let frame = Projection::budapest();
        let regions = vec![
            AdminRegion::from_rings(5, AdminKind::District, "V", vec![square(19.0, 47.4, 0.1)], &frame).unwrap(),
            AdminRegion::from_rings(3, AdminKind::AgglomerationSector, "s3", vec![square(19.2, 47.4, 0.1)], &frame)
                .unwrap(),
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("admin.geojson");
        write_admin_regions(&path, &regions).unwrap();
        let back = read_admin_regions(&path, &frame).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].name, "V");

        let inside5 = frame.project(LonLat::new(19.05, 47.45)).unwrap();
        let inside_s3 = frame.project(LonLat::new(19.25, 47.45)).unwrap();
        let nowhere = frame.project(LonLat::new(19.5, 47.9)).unwrap();
        assert_eq!(label_point(&back, inside5), AdminLabel::District(5));
        assert_eq!(label_point(&back, inside_s3), AdminLabel::Sector(3));
        assert_eq!(label_point(&back, nowhere), AdminLabel::Outside);
    }

    #[test]
    fn invalid_ids_and_bowties_rejected() {
        let frame = Projection::budapest();
        assert!(AdminRegion::from_rings(24, AdminKind::District, "", vec![square(19.0, 47.4, 0.1)], &frame).is_err());
        let bowtie = vec![vec![
            LonLat::new(19.0, 47.4),
            LonLat::new(19.1, 47.5),
            LonLat::new(19.1, 47.4),
            LonLat::new(19.0, 47.5),
        ]];
        assert!(AdminRegion::from_rings(1, AdminKind::District, "", vec![bowtie], &frame).is_err());
    }

    #[test]
    fn boundary_round_trip() {
        let frame = Projection::budapest();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.geojson");
        write_boundary(&path, &square(19.0, 47.4, 0.1)[0]).unwrap();
        let poly = read_boundary(&path, &frame).unwrap();
        assert_eq!(poly.exterior.len(), 4);
        assert!(poly.area() > 0.0);
    }
}
