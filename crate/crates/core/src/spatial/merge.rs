use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::admin::{label_point, AdminKind, AdminLabel, AdminRegion};
use super::{dbscan, voronoi_cells, LonLat, Point, Polygon, Projection};
use crate::error::{Error, Result};
use crate::ingest::{CellKey, CellTable, EstateListing};

/// Index of a merged cell. Ids are assigned in the sort order of each
/// cluster's smallest member cell id, and the rendered form (`m000042`)
/// sorts the same way as the index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MergedId(pub u32);

impl fmt::Display for MergedId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{:06}", self.0)
    }
}

impl std::str::FromStr for MergedId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.strip_prefix('m')
            .and_then(|d| d.parse().ok())
            .map(MergedId)
            .ok_or_else(|| Error::InvalidArgument(format!("bad merged cell id {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MergedCell {
    pub id: MergedId,
    /// Member cell ids, sorted.
    pub members: Vec<String>,
    pub centroid: LonLat,
    /// Projected centroid in meters.
    pub position: Point,
    pub polygon: Option<Polygon>,
    pub listing_count: u32,
    pub mean_price_per_m2: Option<f64>,
    pub admin: AdminLabel,
}

/// The merged cells plus the mapping from raw cells onto them.
#[derive(Clone, Debug, Default)]
pub struct MergedCells {
    pub cells: Vec<MergedCell>,
    raw_to_merged: Vec<MergedId>,
}

impl MergedCells {
    pub fn of_raw(&self, cell: CellKey) -> MergedId {
        self.raw_to_merged[cell.0 as usize]
    }

    pub fn get(&self, id: MergedId) -> &MergedCell {
        &self.cells[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn raw_mapping(&self) -> &[MergedId] {
        &self.raw_to_merged
    }

    /// Builds the structure from pre-merged cells, e.g. when reading back a
    /// previous run's output.
    pub fn from_parts(cells: Vec<MergedCell>, raw_to_merged: Vec<MergedId>) -> Result<Self> {
        if let Some(bad) = raw_to_merged.iter().find(|m| m.0 as usize >= cells.len()) {
            return Err(Error::InvalidArgument(format!("cell map references unknown {bad}")));
        }
        if cells.iter().enumerate().any(|(i, c)| c.id.0 as usize != i) {
            return Err(Error::InvalidArgument("merged cells must be dense and in id order".into()));
        }
        Ok(MergedCells { cells, raw_to_merged })
    }

    pub fn write_csv(&self, cells_path: &Path, map_path: &Path, table: &CellTable) -> Result<()> {
        let mut w = csv::Writer::from_path(cells_path).map_err(|e| Error::csv(cells_path, e))?;
        let err = |e| Error::csv(cells_path, e);
        w.write_record([
            "merged_id",
            "lon",
            "lat",
            "listing_count",
            "mean_price_per_m2",
            "admin_kind",
            "admin_id",
            "polygon_wkt",
        ])
        .map_err(err)?;
        for c in &self.cells {
            w.write_record([
                c.id.to_string(),
                c.centroid.lon.to_string(),
                c.centroid.lat.to_string(),
                c.listing_count.to_string(),
                c.mean_price_per_m2.map(|v| v.to_string()).unwrap_or_default(),
                c.admin.kind().as_str().to_string(),
                c.admin.unit().to_string(),
                c.polygon.as_ref().map(Polygon::to_wkt).unwrap_or_default(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::io(cells_path, e))?;

        let mut w = csv::Writer::from_path(map_path).map_err(|e| Error::csv(map_path, e))?;
        w.write_record(["cell_id", "merged_id"]).map_err(|e| Error::csv(map_path, e))?;
        for (raw, m) in table.cells().iter().zip(&self.raw_to_merged) {
            w.write_record([raw.cell_id.clone(), m.to_string()])
                .map_err(|e| Error::csv(map_path, e))?;
        }
        w.flush().map_err(|e| Error::io(map_path, e))
    }

    /// Reads back [`MergedCells::write_csv`] output. Polygons are not
    /// restored; nothing downstream of the price join needs them.
    pub fn read_csv(cells_path: &Path, map_path: &Path, table: &CellTable, frame: &Projection) -> Result<Self> {
        let mut rdr = crate::ingest::open_csv(cells_path)?;
        let mut cells = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(|e| Error::csv(cells_path, e))?;
            let bad = || Error::InvalidArgument(format!("{}: malformed row {:?}", cells_path.display(), row));
            if row.len() < 7 {
                return Err(bad());
            }
            let id: MergedId = row[0].parse()?;
            let lon: f64 = row[1].parse().map_err(|_| bad())?;
            let lat: f64 = row[2].parse().map_err(|_| bad())?;
            let centroid = LonLat::new(lon, lat);
            let kind = AdminKind::parse(&row[5]).ok_or_else(bad)?;
            let unit: u32 = row[6].parse().map_err(|_| bad())?;
            cells.push(MergedCell {
                id,
                members: Vec::new(),
                centroid,
                position: frame.project(centroid)?,
                polygon: None,
                listing_count: row[3].parse().map_err(|_| bad())?,
                mean_price_per_m2: if row[4].is_empty() { None } else { Some(row[4].parse().map_err(|_| bad())?) },
                admin: AdminLabel::from_parts(kind, unit).ok_or_else(bad)?,
            });
        }
        let mut raw_to_merged = vec![MergedId(u32::MAX); table.len()];
        let mut rdr = crate::ingest::open_csv(map_path)?;
        for row in rdr.records() {
            let row = row.map_err(|e| Error::csv(map_path, e))?;
            if let (Some(cell), Some(m)) = (row.get(0).and_then(|c| table.key(c)), row.get(1)) {
                let m: MergedId = m.parse()?;
                raw_to_merged[cell.0 as usize] = m;
                cells
                    .get_mut(m.0 as usize)
                    .ok_or_else(|| Error::InvalidArgument(format!("cell map references unknown {m}")))?
                    .members
                    .push(row[0].to_string());
            }
        }
        if raw_to_merged.iter().any(|m| m.0 == u32::MAX) {
            return Err(Error::InvalidArgument(format!(
                "{} does not cover every cell of the cell table",
                map_path.display()
            )));
        }
        for c in &mut cells {
            c.members.sort();
        }
        MergedCells::from_parts(cells, raw_to_merged)
    }
}

/// Merges cells whose projected centroids lie within `eps` meters of each
/// other (transitively; DBSCAN with a minimum cluster size of one). Each
/// merged centroid is the activity-weighted mean of its members, or the plain
/// mean when every member weight is zero.
///
/// `weights` is indexed by [`CellKey`]; missing entries count as zero.
pub fn merge_cells(table: &CellTable, weights: &[u64], eps: f64, frame: &Projection) -> Result<MergedCells> {
    if eps <= 0.0 || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!("merge radius must be positive, got {eps}")));
    }
    let points: Vec<Point> = table
        .cells()
        .iter()
        .map(|c| frame.project(c.centroid))
        .collect::<Result<_>>()?;
    let labels = dbscan(&points, eps, 1);

    let n_clusters = labels.iter().flatten().max().map_or(0, |m| m + 1);
    let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); n_clusters];
    for (i, l) in labels.iter().enumerate() {
        clusters[l.expect("min_points = 1 leaves no noise")].push(i);
    }
    let cells = table.cells();
    for members in &mut clusters {
        members.sort_by(|&a, &b| cells[a].cell_id.cmp(&cells[b].cell_id));
    }
    clusters.sort_by(|a, b| cells[a[0]].cell_id.cmp(&cells[b[0]].cell_id));

    let mut raw_to_merged = vec![MergedId(0); table.len()];
    let merged = clusters
        .iter()
        .enumerate()
        .map(|(k, members)| {
            let id = MergedId(k as u32);
            let total: u64 = members.iter().map(|&i| weights.get(i).copied().unwrap_or(0)).sum();
            let (mut sx, mut sy) = (0.0, 0.0);
            for &i in members {
                raw_to_merged[i] = id;
                let w = if total == 0 { 1.0 } else { weights.get(i).copied().unwrap_or(0) as f64 };
                sx += w * points[i].x;
                sy += w * points[i].y;
            }
            let norm = if total == 0 { members.len() as f64 } else { total as f64 };
            let centroid = frame.unproject(Point::new(sx / norm, sy / norm));
            // derive the planar position from the stored lon/lat so that a
            // run resumed from CSV sees identical coordinates
            let position = frame.project_unchecked(centroid);
            MergedCell {
                id,
                members: members.iter().map(|&i| cells[i].cell_id.clone()).collect(),
                centroid,
                position,
                polygon: None,
                listing_count: 0,
                mean_price_per_m2: None,
                admin: AdminLabel::Outside,
            }
        })
        .collect();
    Ok(MergedCells {
        cells: merged,
        raw_to_merged,
    })
}

/// Assigns each merged cell its Voronoi polygon clipped to `boundary`.
pub fn build_voronoi(merged: &mut MergedCells, boundary: &Polygon) -> Result<()> {
    let sites: Vec<Point> = merged.cells.iter().map(|c| c.position).collect();
    let polys = voronoi_cells(&sites, boundary)?;
    for (c, p) in merged.cells.iter_mut().zip(polys) {
        c.polygon = Some(p);
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriceReport {
    pub listings: u64,
    pub assigned: u64,
    pub unassigned: u64,
    pub priced_cells: u64,
    pub unpriced_cells: u64,
}

/// Joins listings to the polygon containing them and sets each cell's mean
/// price per m². A listing on a shared edge goes to the lowest merged id.
/// Cells with fewer than `min_listings` listings get no price.
pub fn attach_prices(
    merged: &mut MergedCells,
    listings: &[EstateListing],
    min_listings: u32,
    frame: &Projection,
) -> Result<PriceReport> {
    let polys: Vec<(&Polygon, super::Rect)> = merged
        .cells
        .iter()
        .map(|c| {
            let p = c
                .polygon
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("build the Voronoi polygons before attaching prices".into()))?;
            Ok((p, p.bounds()))
        })
        .collect::<Result<_>>()?;

    let owners: Vec<Option<usize>> = listings
        .par_iter()
        .map(|l| {
            let p = frame.project(l.location).ok()?;
            polys.iter().position(|(poly, bb)| bb.contains(p) && poly.contains(p))
        })
        .collect();

    let mut sums = vec![0.0f64; merged.len()];
    let mut counts = vec![0u32; merged.len()];
    let mut report = PriceReport {
        listings: listings.len() as u64,
        ..Default::default()
    };
    for (l, owner) in listings.iter().zip(&owners) {
        match owner {
            Some(k) => {
                sums[*k] += l.price_per_m2;
                counts[*k] += 1;
                report.assigned += 1;
            }
            None => report.unassigned += 1,
        }
    }
    for (k, c) in merged.cells.iter_mut().enumerate() {
        c.listing_count = counts[k];
        c.mean_price_per_m2 =
            (counts[k] > 0 && counts[k] >= min_listings).then(|| sums[k] / f64::from(counts[k]));
        if c.mean_price_per_m2.is_some() {
            report.priced_cells += 1;
        } else {
            report.unpriced_cells += 1;
        }
    }
    Ok(report)
}

/// Labels each merged cell with the first region containing its centroid.
pub fn assign_admin(merged: &mut MergedCells, regions: &[AdminRegion]) {
    for c in &mut merged.cells {
        c.admin = label_point(regions, c.position);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::RawCell;

    fn frame() -> Projection {
        Projection::budapest()
    }

    fn cell_at(id: &str, x: f64, y: f64) -> RawCell {
        let ll = frame().unproject(Point::new(x, y));
        RawCell {
            cell_id: id.into(),
            centroid: ll,
            base_station: ll,
            area_m2: 1.0,
        }
    }

    #[test]
    fn fifty_meters_merge_one_fifty_do_not() {
        let t: CellTable = vec![cell_at("a", 0.0, 0.0), cell_at("b", 50.0, 0.0)].into_iter().collect();
        assert_eq!(merge_cells(&t, &[1, 1], 100.0, &frame()).unwrap().len(), 1);
        let t: CellTable = vec![cell_at("a", 0.0, 0.0), cell_at("b", 150.0, 0.0)].into_iter().collect();
        assert_eq!(merge_cells(&t, &[1, 1], 100.0, &frame()).unwrap().len(), 2);
    }

    #[test]
    fn weighted_centroid() {
        let t: CellTable = vec![cell_at("a", 0.0, 0.0), cell_at("b", 90.0, 0.0)].into_iter().collect();
        let m = merge_cells(&t, &[3, 1], 100.0, &frame()).unwrap();
        assert!((m.cells[0].position.x - 22.5).abs() < 1e-6, "{:?}", m.cells[0].position);
        assert!(m.cells[0].position.y.abs() < 1e-6);
        let m = merge_cells(&t, &[0, 0], 100.0, &frame()).unwrap();
        assert!((m.cells[0].position.x - 45.0).abs() < 1e-6);
    }

    #[test]
    fn chained_merging() {
        let t: CellTable = vec![cell_at("a", 0.0, 0.0), cell_at("b", 90.0, 0.0), cell_at("c", 180.0, 0.0)]
            .into_iter()
            .collect();
        let m = merge_cells(&t, &[1, 1, 1], 100.0, &frame()).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.cells[0].members, ["a", "b", "c"]);
    }

    #[test]
    fn empty_table() {
        assert!(merge_cells(&CellTable::default(), &[], 100.0, &frame()).unwrap().is_empty());
    }

    fn two_cell_setup() -> MergedCells {
        let t: CellTable = vec![cell_at("a", -500.0, 0.0), cell_at("b", 500.0, 0.0)].into_iter().collect();
        let mut m = merge_cells(&t, &[1, 1], 100.0, &frame()).unwrap();
        build_voronoi(&mut m, &Polygon::rect(Point::new(-2000.0, -2000.0), Point::new(2000.0, 2000.0))).unwrap();
        m
    }

    fn listing_at(x: f64, y: f64, ppm2: f64) -> EstateListing {
        EstateListing::new("l", frame().unproject(Point::new(x, y)), ppm2 * 50.0, 50.0)
    }

    #[test]
    fn prices_average_within_polygon() {
        let mut m = two_cell_setup();
        let ls = vec![listing_at(-600.0, 10.0, 800_000.0), listing_at(-400.0, -10.0, 1_000_000.0)];
        let r = attach_prices(&mut m, &ls, 1, &frame()).unwrap();
        assert!((m.cells[0].mean_price_per_m2.unwrap() - 900_000.0).abs() < 1e-6);
        assert_eq!(m.cells[1].mean_price_per_m2, None);
        assert_eq!(m.cells[1].listing_count, 0);
        assert_eq!(r.assigned + r.unassigned, r.listings);
    }

    #[test]
    fn edge_listing_goes_to_lowest_id() {
        let mut m = two_cell_setup();
        let ls = vec![listing_at(0.0, 100.0, 500_000.0), listing_at(5000.0, 0.0, 1.0)];
        let r = attach_prices(&mut m, &ls, 1, &frame()).unwrap();
        assert_eq!(m.cells[0].listing_count, 1);
        assert_eq!(m.cells[1].listing_count, 0);
        assert_eq!(r.unassigned, 1);
    }

    #[test]
    fn min_listings_threshold() {
        let mut m = two_cell_setup();
        let ls = vec![listing_at(-600.0, 0.0, 1.0)];
        attach_prices(&mut m, &ls, 2, &frame()).unwrap();
        assert_eq!(m.cells[0].listing_count, 1);
        assert_eq!(m.cells[0].mean_price_per_m2, None);
    }

    #[test]
    fn merged_id_format_sorts_like_index() {
        assert_eq!(MergedId(7).to_string(), "m000007");
        assert!(MergedId(7).to_string() < MergedId(12).to_string());
        assert_eq!("m000012".parse::<MergedId>().unwrap(), MergedId(12));
    }
}
