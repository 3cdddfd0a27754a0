//! Parsing and normalization of the three input tables: call detail records,
//! the cell table and estate listings.

mod attributes;
mod cdr;
mod cells;
mod listings;

use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::Serialize;

pub use attributes::{
    normalize_attributes, read_attributes, write_attributes, AttributeReducer, CustomerType, Gender, SimAttributes,
    SubscriptionType,
};
pub use cdr::{parse_cdr, CdrData, CdrRecord, ParseReport, SimKey};
pub use cells::{parse_cells, CellKey, CellReport, CellTable, RawCell};
pub use listings::{parse_listings, EstateListing, ListingReport};

use crate::error::{Error, Result};

/// Bidirectional string ↔ dense index map.
#[derive(Clone, Debug, Default)]
pub struct Interner {
    index: HashMap<Box<str>, u32>,
    names: Vec<Box<str>>,
}

impl Interner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, s: &str) -> u32 {
        if let Some(&i) = self.index.get(s) {
            return i;
        }
        let i = self.names.len() as u32;
        self.names.push(s.into());
        self.index.insert(s.into(), i);
        i
    }

    pub fn get(&self, s: &str) -> Option<u32> {
        self.index.get(s).copied()
    }

    pub fn name(&self, i: u32) -> &str {
        &self.names[i as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

pub(crate) fn open_csv(path: &Path) -> Result<csv::Reader<BufReader<File>>> {
    let file = File::open(path).map_err(|source| Error::Open {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::with_capacity(1 << 20, file)))
}

pub(crate) fn check_header(
    path: &Path,
    header: &csv::StringRecord,
    expected: &[&str],
) -> Result<()> {
    let ok = header.len() == expected.len() && header.iter().zip(expected).all(|(h, e)| h == *e);
    if ok {
        Ok(())
    } else {
        Err(Error::Header {
            path: path.to_path_buf(),
            expected: expected.join(","),
        })
    }
}

/// Renders any flat report as `key=value` lines.
pub fn report_key_values<T: Serialize>(prefix: &str, report: &T) -> String {
    let value = serde_json::to_value(report).unwrap_or_default();
    let mut out = String::new();
    if let serde_json::Value::Object(map) = value {
        for (k, v) in map {
            out.push_str(&format!("{prefix}.{k}={v}\n"));
        }
    }
    out
}
