use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_header, open_csv};
use crate::error::{Error, Result};
use crate::spatial::{LonLat, Projection};

const COLUMNS: [&str; 6] = ["cell_id", "centroid_lon", "centroid_lat", "base_lon", "base_lat", "area_m2"];

/// Dense index into a [`CellTable`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey(pub u32);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawCell {
    pub cell_id: String,
    pub centroid: LonLat,
    pub base_station: LonLat,
    pub area_m2: f64,
}

#[derive(Clone, Debug, Default)]
pub struct CellTable {
    cells: Vec<RawCell>,
    index: HashMap<String, CellKey>,
}

impl CellTable {
    pub fn insert(&mut self, cell: RawCell) -> Result<CellKey> {
        if self.index.contains_key(&cell.cell_id) {
            return Err(Error::DuplicateCell(cell.cell_id));
        }
        let key = CellKey(self.cells.len() as u32);
        self.index.insert(cell.cell_id.clone(), key);
        self.cells.push(cell);
        Ok(key)
    }

    pub fn key(&self, cell_id: &str) -> Option<CellKey> {
        self.index.get(cell_id).copied()
    }

    pub fn get(&self, key: CellKey) -> &RawCell {
        &self.cells[key.0 as usize]
    }

    pub fn cells(&self) -> &[RawCell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

impl FromIterator<RawCell> for CellTable {
    /// Panics on duplicate ids; use [`CellTable::insert`] for fallible loading.
    fn from_iter<T: IntoIterator<Item = RawCell>>(iter: T) -> Self {
        let mut t = CellTable::default();
        for c in iter {
            t.insert(c).expect("duplicate cell id");
        }
        t
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellReport {
    pub rows: u64,
    pub cells: u64,
    pub malformed: u64,
    pub dropped_out_of_bounds: u64,
}

pub fn parse_cells(path: &Path, frame: &Projection) -> Result<(CellTable, CellReport)> {
    let mut rdr = open_csv(path)?;
    let header = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    check_header(path, &header, &COLUMNS)?;

    let mut table = CellTable::default();
    let mut report = CellReport::default();
    for row in rdr.records() {
        report.rows += 1;
        let row = match row {
            Ok(r) => r,
            Err(e) if e.is_io_error() => return Err(Error::csv(path, e)),
            Err(_) => {
                report.malformed += 1;
                continue;
            }
        };
        let nums: Option<Vec<f64>> = (1..6)
            .map(|i| row.get(i).and_then(|s| s.parse::<f64>().ok()).filter(|v| v.is_finite()))
            .collect();
        let (Some(nums), true) = (nums, row.len() == 6 && !row[0].is_empty()) else {
            report.malformed += 1;
            continue;
        };
        let cell = RawCell {
            cell_id: row[0].to_string(),
            centroid: LonLat::new(nums[0], nums[1]),
            base_station: LonLat::new(nums[2], nums[3]),
            area_m2: nums[4],
        };
        if !frame.bbox().contains(cell.centroid) || !frame.bbox().contains(cell.base_station) {
            report.dropped_out_of_bounds += 1;
            continue;
        }
        table.insert(cell)?;
        report.cells += 1;
    }
    Ok((table, report))
}
