use std::path::Path;

use serde::{Deserialize, Serialize};

use super::attributes::{parse_observation, AttributeReducer};
use super::{check_header, open_csv, CellKey, CellTable, Interner};
use crate::error::{Error, Result};

const BASE_COLUMNS: [&str; 3] = ["sim_id", "timestamp", "cell_id"];
const WIDE_COLUMNS: [&str; 8] = [
    "sim_id",
    "timestamp",
    "cell_id",
    "customer_type",
    "subscription_type",
    "age",
    "gender",
    "tac",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SimKey(pub u32);

/// One network event. Timestamps are seconds since the Unix epoch, always a
/// multiple of ten.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CdrRecord {
    pub sim: SimKey,
    pub timestamp: i64,
    pub cell: CellKey,
}

impl CdrRecord {
    pub fn new(sim: SimKey, timestamp: i64, cell: CellKey) -> Self {
        CdrRecord {
            sim,
            timestamp: truncate_timestamp(timestamp),
            cell,
        }
    }
}

pub(crate) fn truncate_timestamp(t: i64) -> i64 {
    t - t.rem_euclid(10)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseReport {
    pub rows: u64,
    pub records: u64,
    pub malformed: u64,
    pub dropped_unknown_cell: u64,
    pub truncated_timestamps: u64,
}

impl std::ops::AddAssign for ParseReport {
    fn add_assign(&mut self, o: Self) {
        self.rows += o.rows;
        self.records += o.records;
        self.malformed += o.malformed;
        self.dropped_unknown_cell += o.dropped_unknown_cell;
        self.truncated_timestamps += o.truncated_timestamps;
    }
}

#[derive(Debug, Default)]
pub struct CdrData {
    pub records: Vec<CdrRecord>,
    pub sims: Interner,
    pub attributes: AttributeReducer,
    pub report: ParseReport,
}

impl CdrData {
    pub fn sim_name(&self, key: SimKey) -> &str {
        self.sims.name(key.0)
    }

    /// Sorts records by (SIM, time, cell) so per-SIM slices are contiguous.
    pub fn sort(&mut self) {
        self.records.sort_unstable();
    }

    /// Contiguous per-SIM slices; requires [`CdrData::sort`] first.
    pub fn per_sim(&self) -> impl Iterator<Item = (SimKey, &[CdrRecord])> {
        self.records
            .chunk_by(|a, b| a.sim == b.sim)
            .map(|chunk| (chunk[0].sim, chunk))
    }
}

/// Reads a CDR file. Rows whose cell is not in `cells` are dropped and
/// counted; rows that fail to parse are skipped and counted.
pub fn parse_cdr(path: &Path, cells: &CellTable) -> Result<CdrData> {
    let mut rdr = open_csv(path)?;
    let header = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let wide = header.len() == WIDE_COLUMNS.len();
    if wide {
        check_header(path, &header, &WIDE_COLUMNS)?;
    } else {
        check_header(path, &header, &BASE_COLUMNS)?;
    }
    let width = header.len();

    let mut data = CdrData::default();
    let mut row = csv::ByteRecord::new();
    loop {
        match rdr.read_byte_record(&mut row) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) if e.is_io_error() => return Err(Error::csv(path, e)),
            Err(_) => {
                data.report.rows += 1;
                data.report.malformed += 1;
                continue;
            }
        }
        data.report.rows += 1;
        match parse_row(&row, width) {
            None => data.report.malformed += 1,
            Some((sim, ts, cell, observation)) => {
                let Some(cell) = cells.key(cell) else {
                    data.report.dropped_unknown_cell += 1;
                    continue;
                };
                let sim = SimKey(data.sims.intern(sim));
                let record = CdrRecord::new(sim, ts, cell);
                if record.timestamp != ts {
                    data.report.truncated_timestamps += 1;
                }
                data.records.push(record);
                data.report.records += 1;
                match observation {
                    Some(obs) => data.attributes.observe(sim.0, &obs),
                    None => data.attributes.touch(sim.0),
                }
            }
        }
    }
    Ok(data)
}

type ParsedRow<'a> = (&'a str, i64, &'a str, Option<super::SimAttributes>);

fn parse_row(row: &csv::ByteRecord, width: usize) -> Option<ParsedRow<'_>> {
    if row.len() != width {
        return None;
    }
    let field = |i: usize| std::str::from_utf8(&row[i]).ok();
    let sim = field(0).filter(|s| !s.is_empty())?;
    let ts: i64 = field(1)?.parse().ok()?;
    let cell = field(2).filter(|s| !s.is_empty())?;
    let observation = if width == WIDE_COLUMNS.len() {
        Some(parse_observation(field(3)?, field(4)?, field(5)?, field(6)?, field(7)?)?)
    } else {
        None
    };
    Some((sim, ts, cell, observation))
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;
    use crate::ingest::{CustomerType, Gender};
    use crate::spatial::LonLat;

    fn cells(ids: &[&str]) -> CellTable {
        let mut t = CellTable::default();
        for id in ids {
            t.insert(crate::ingest::RawCell {
                cell_id: (*id).to_string(),
                centroid: LonLat::new(19.0, 47.5),
                base_station: LonLat::new(19.0, 47.5),
                area_m2: 1.0,
            })
            .unwrap();
        }
        t
    }

    fn write(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn empty_file_yields_nothing() {
        let f = write("sim_id,timestamp,cell_id\n");
        let d = parse_cdr(f.path(), &cells(&["a"])).unwrap();
        assert!(d.records.is_empty());
        assert_eq!(d.report.malformed, 0);
        assert_eq!(d.report.rows, 0);
    }

    #[test]
    fn timestamps_truncate_down_to_ten_seconds() {
        let f = write("sim_id,timestamp,cell_id\ns1,1491901234,a\ns1,1491901240,a\n");
        let d = parse_cdr(f.path(), &cells(&["a"])).unwrap();
        assert_eq!(d.records[0].timestamp, 1491901230);
        assert_eq!(d.records[1].timestamp, 1491901240);
        assert_eq!(d.report.truncated_timestamps, 1);
        assert_eq!(truncate_timestamp(-5), -10);
    }

    #[test]
    fn unknown_cells_are_dropped_and_counted() {
        let f = write("sim_id,timestamp,cell_id\ns1,10,a\ns2,20,zzz\ns1,30,b\n");
        let d = parse_cdr(f.path(), &cells(&["a", "b"])).unwrap();
        assert_eq!(d.records.len(), 2);
        assert_eq!(d.report.dropped_unknown_cell, 1);
        assert_eq!(d.report.rows, 3);
    }

    #[test]
    fn malformed_rows_are_skipped() {
        let f = write(
            "sim_id,timestamp,cell_id\ns1,abc,a\ns1,10\n,10,a\ns1,10,a,extra\ns1,20,a\n",
        );
        let d = parse_cdr(f.path(), &cells(&["a"])).unwrap();
        assert_eq!(d.records.len(), 1);
        assert_eq!(d.report.malformed, 4);
        let r = d.report;
        assert_eq!(r.records + r.malformed + r.dropped_unknown_cell, r.rows);
    }

    #[test]
    fn wide_rows_feed_attribute_observations() {
        let f = write(
            "sim_id,timestamp,cell_id,customer_type,subscription_type,age,gender,tac\n\
             s1,10,a,consumer,prepaid,35,male,35332509\n\
             s1,20,a,consumer,postpaid,35,male,35332509\n\
             s1,30,a,consumer,prepaid,35,male,35332509\n",
        );
        let d = parse_cdr(f.path(), &cells(&["a"])).unwrap();
        let attrs = d.attributes.finish(&d.sims);
        let a = &attrs["s1"];
        assert_eq!(a.customer_type, CustomerType::Consumer);
        assert_eq!(a.gender, Gender::Male);
        assert_eq!(a.age, Some(35));
        assert_eq!(a.subscription_type, crate::ingest::SubscriptionType::Unknown);
    }

    #[test]
    fn bad_header_is_fatal() {
        let f = write("sim,ts,cell\n");
        assert!(matches!(parse_cdr(f.path(), &cells(&[])), Err(Error::Header { .. })));
    }

    #[test]
    fn missing_file_is_fatal() {
        let err = parse_cdr(Path::new("/nonexistent/cdr.csv"), &cells(&[])).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/cdr.csv"));
    }
}
