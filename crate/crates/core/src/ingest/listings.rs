use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_header, open_csv};
use crate::error::{Error, Result};
use crate::spatial::{LonLat, Projection};

const COLUMNS: [&str; 5] = ["listing_id", "lon", "lat", "price_huf", "floor_m2"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstateListing {
    pub listing_id: String,
    pub location: LonLat,
    pub total_price: f64,
    pub floor_space: f64,
    pub price_per_m2: f64,
}

impl EstateListing {
    pub fn new(listing_id: impl Into<String>, location: LonLat, total_price: f64, floor_space: f64) -> Self {
        EstateListing {
            listing_id: listing_id.into(),
            location,
            total_price,
            floor_space,
            price_per_m2: total_price / floor_space,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListingReport {
    pub rows: u64,
    pub listings: u64,
    pub malformed: u64,
    pub dropped_nonpositive_floor: u64,
    pub dropped_out_of_bounds: u64,
}

pub fn parse_listings(path: &Path, frame: &Projection) -> Result<(Vec<EstateListing>, ListingReport)> {
    let mut rdr = open_csv(path)?;
    let header = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    check_header(path, &header, &COLUMNS)?;

    let mut out = Vec::new();
    let mut report = ListingReport::default();
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
        let nums: Option<Vec<f64>> = (1..5)
            .map(|i| row.get(i).and_then(|s| s.parse::<f64>().ok()).filter(|v| v.is_finite()))
            .collect();
        let (Some(nums), true) = (nums, row.len() == 5) else {
            report.malformed += 1;
            continue;
        };
        if nums[3] <= 0.0 {
            report.dropped_nonpositive_floor += 1;
            continue;
        }
        let location = LonLat::new(nums[0], nums[1]);
        if !frame.bbox().contains(location) {
            report.dropped_out_of_bounds += 1;
            continue;
        }
        out.push(EstateListing::new(&row[0], location, nums[2], nums[3]));
        report.listings += 1;
    }
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;

    fn write(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn price_per_square_meter() {
        let l = EstateListing::new("x", LonLat::new(19.0, 47.5), 45_000_000.0, 50.0);
        assert_eq!(l.price_per_m2, 900_000.0);
    }

    #[test]
    fn parse_fixture() {
        let f = write(
            "listing_id,lon,lat,price_huf,floor_m2\n\
             l1,19.0,47.5,45000000,50\n\
             l2,19.1,47.5,30000000,60\n\
             l3,19.0,47.4,20000000,40\n\
             l4,19.0,47.4,20000000,0\n\
             l5,19.0,47.4,20000000,-3\n",
        );
        let (ls, r) = parse_listings(f.path(), &Projection::budapest()).unwrap();
        assert_eq!(ls.len(), 3);
        assert_eq!(r.dropped_nonpositive_floor, 2);
        assert_eq!(ls[1].price_per_m2, 500_000.0);
        assert_eq!(ls[2].price_per_m2, 500_000.0);
    }

    #[test]
    fn unreadable_file_is_fatal() {
        assert!(matches!(
            parse_listings(Path::new("/no/such/listings.csv"), &Projection::budapest()),
            Err(Error::Open { .. })
        ));
    }
}
