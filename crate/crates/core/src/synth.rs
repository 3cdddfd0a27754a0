//! Deterministic synthetic city and subscriber population with known home
//! and work anchors. Output files share the input schemas, so a generated
//! directory can be fed straight to the pipeline.
//!
//! Randomness comes from ChaCha8 keyed by the seed: stream 0 builds the city,
//! stream `i + 1` drives SIM `i`, so every SIM can be regenerated on its own
//! and in any order.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calendar::{DayType, HolidayCalendar};
use crate::error::{Error, Result};
use crate::ingest::{
    AttributeReducer, CdrData, CdrRecord, CellKey, CellTable, CustomerType, EstateListing, Gender, Interner, RawCell,
    SimAttributes, SimKey, SubscriptionType,
};
use crate::spatial::{write_admin_regions, write_boundary, AdminKind, AdminRegion, LonLat, Point, Projection};

pub const RNG_ALGORITHM: &str = "chacha8";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    /// Generator identifier; only `chacha8` is implemented.
    pub rng: String,
    pub sims: usize,
    pub cells: usize,
    pub start: NaiveDate,
    pub days: u32,
    pub city_radius_km: f64,
    pub boundary_radius_km: f64,
    /// Share of cells placed within 60 m of an earlier cell.
    pub near_duplicate_share: f64,
    pub listings: usize,
    pub price_floor: f64,
    pub price_center_premium: f64,
    pub price_decay_km: f64,
    /// Relative standard deviation of listing prices around the gradient.
    pub price_noise: f64,
    pub commuter_share: f64,
    pub night_owl_share: f64,
    pub stationary_share: f64,
    pub light_share: f64,
    /// Median records per active workday.
    pub activity_median: f64,
    pub activity_sigma: f64,
    pub holiday_activity_factor: f64,
    pub inactive_day_prob: f64,
    /// Probability scale of a record being emitted away from home and work.
    pub excursion: f64,
    pub attribute_change_share: f64,
    pub business_share: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 20170401,
            rng: RNG_ALGORITHM.into(),
            sims: 10_000,
            cells: 300,
            start: NaiveDate::from_ymd_opt(2017, 4, 1).expect("valid date"),
            days: 30,
            city_radius_km: 25.0,
            boundary_radius_km: 27.0,
            near_duplicate_share: 0.1,
            listings: 6000,
            price_floor: 200_000.0,
            price_center_premium: 900_000.0,
            price_decay_km: 8.0,
            price_noise: 0.05,
            commuter_share: 0.62,
            night_owl_share: 0.02,
            stationary_share: 0.02,
            light_share: 0.06,
            activity_median: 60.0,
            activity_sigma: 0.2,
            holiday_activity_factor: 0.55,
            inactive_day_prob: 0.03,
            excursion: 0.15,
            attribute_change_share: 0.02,
            business_share: 0.1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.rng != RNG_ALGORITHM {
            return bad(format!("unsupported rng '{}', expected {RNG_ALGORITHM}", self.rng));
        }
        if self.sims == 0 || self.cells == 0 || self.days == 0 || self.listings == 0 {
            return bad("sims, cells, days and listings must all be positive".into());
        }
        let shares = [
            self.commuter_share,
            self.night_owl_share,
            self.stationary_share,
            self.light_share,
        ];
        if shares.iter().any(|s| !(0.0..=1.0).contains(s)) || shares.iter().sum::<f64>() > 1.0 + 1e-12 {
            return bad("population shares must be in [0, 1] and sum to at most 1".into());
        }
        for (name, p) in [
            ("near_duplicate_share", self.near_duplicate_share),
            ("inactive_day_prob", self.inactive_day_prob),
            ("excursion", self.excursion),
            ("attribute_change_share", self.attribute_change_share),
            ("business_share", self.business_share),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must be in [0, 1]"));
            }
        }
        if !(self.city_radius_km > 0.0 && self.boundary_radius_km > self.city_radius_km + 0.1) {
            return bad("boundary radius must exceed the city radius".into());
        }
        if !(self.activity_median > 0.0 && self.activity_sigma >= 0.0 && self.price_noise >= 0.0) {
            return bad("activity and price parameters must be non-negative".into());
        }
        if self.price_decay_km <= 0.0 || self.price_floor <= 0.0 {
            return bad("price gradient parameters must be positive".into());
        }
        Ok(())
    }

    /// Noise-free price per m² at a distance from the center.
    pub fn price_at(&self, r_km: f64) -> f64 {
        self.price_floor + self.price_center_premium * (-r_km / self.price_decay_km).exp()
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    Commuter,
    Local,
    NightOwl,
    Stationary,
    Light,
}

impl Pattern {
    pub fn as_str(self) -> &'static str {
        match self {
            Pattern::Commuter => "commuter",
            Pattern::Local => "local",
            Pattern::NightOwl => "night_owl",
            Pattern::Stationary => "stationary",
            Pattern::Light => "light",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Pattern::Commuter,
            Pattern::Local,
            Pattern::NightOwl,
            Pattern::Stationary,
            Pattern::Light,
        ]
        .into_iter()
        .find(|p| p.as_str() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthCell {
    pub id: String,
    pub position: Point,
    pub centroid: LonLat,
    pub base_station: LonLat,
    pub area_m2: f64,
}

#[derive(Clone, Debug)]
pub struct SynthCity {
    pub frame: Projection,
    pub cells: Vec<SynthCell>,
    pub listings: Vec<EstateListing>,
    pub regions: Vec<AdminRegion>,
    pub boundary: Vec<LonLat>,
    /// For every cell, the other cells ordered by distance.
    neighbors: Vec<Vec<u32>>,
    commute_weights: Vec<f64>,
}

impl SynthCity {
    pub fn cell_table(&self) -> CellTable {
        self.cells
            .iter()
            .map(|c| RawCell {
                cell_id: c.id.clone(),
                centroid: c.centroid,
                base_station: c.base_station,
                area_m2: c.area_m2,
            })
            .collect()
    }
}

const RING_VERTICES: usize = 360;

fn arc(frame: &Projection, r_m: f64, from_deg: usize, to_deg: usize) -> Vec<LonLat> {
    (from_deg..=to_deg)
        .map(|d| {
            let t = (d as f64).to_radians();
            frame.unproject(Point::new(r_m * t.cos(), r_m * t.sin()))
        })
        .collect()
}

fn wedge(frame: &Projection, inner_m: f64, outer_m: f64, from_deg: usize, to_deg: usize) -> Vec<LonLat> {
    let mut ring = arc(frame, outer_m, from_deg, to_deg);
    if inner_m > 0.0 {
        let mut inner = arc(frame, inner_m, from_deg, to_deg);
        inner.reverse();
        ring.extend(inner);
    } else {
        ring.push(frame.unproject(Point::new(0.0, 0.0)));
    }
    ring.push(ring[0]);
    ring
}

fn closed_circle(frame: &Projection, r_m: f64) -> Vec<LonLat> {
    let mut ring = arc(frame, r_m, 0, RING_VERTICES - 1);
    ring.push(ring[0]);
    ring
}

/// Districts fill the inner 12 km in three rings of 5, 8 and 10 wedges,
/// six agglomeration sectors cover 12–20 km, and the rest of the disc is
/// outside.
fn admin_regions(frame: &Projection, boundary_m: f64) -> Result<Vec<AdminRegion>> {
    let mut regions = Vec::new();
    let mut unit = 1u32;
    for (inner, outer, wedges) in [(0.0, 3_000.0, 5usize), (3_000.0, 7_000.0, 8), (7_000.0, 12_000.0, 10)] {
        let step = RING_VERTICES / wedges;
        for w in 0..wedges {
            let ring = wedge(frame, inner, outer, w * step, (w + 1) * step);
            regions.push(AdminRegion::from_rings(
                unit,
                AdminKind::District,
                format!("District {unit}"),
                vec![vec![ring]],
                frame,
            )?);
            unit += 1;
        }
    }
    let step = RING_VERTICES / 6;
    for s in 0..6 {
        let ring = wedge(frame, 12_000.0, 20_000.0, s * step, (s + 1) * step);
        regions.push(AdminRegion::from_rings(
            s as u32 + 1,
            AdminKind::AgglomerationSector,
            format!("Sector {}", s + 1),
            vec![vec![ring]],
            frame,
        )?);
    }
    let mut hole = closed_circle(frame, 20_000.0);
    hole.reverse();
    regions.push(AdminRegion::from_rings(
        0,
        AdminKind::Outside,
        "Outside",
        vec![vec![closed_circle(frame, boundary_m + 1_000.0), hole]],
        frame,
    )?);
    Ok(regions)
}

pub fn generate_city(cfg: &SynthConfig) -> Result<SynthCity> {
    cfg.validate()?;
    let frame = Projection::budapest();
    let mut rng = cfg.rng(0);
    let radius = cfg.city_radius_km * 1000.0;

    let mut positions: Vec<Point> = Vec::with_capacity(cfg.cells);
    for i in 0..cfg.cells {
        let p = if i > 0 && rng.random::<f64>() < cfg.near_duplicate_share {
            let anchor = positions[rng.random_range(0..i)];
            let d = rng.random_range(10.0..60.0);
            let t = rng.random_range(0.0..std::f64::consts::TAU);
            Point::new(anchor.x + d * t.cos(), anchor.y + d * t.sin())
        } else {
            // uniform radius: density falls off like 1/r
            let r = radius * rng.random::<f64>();
            let t = rng.random_range(0.0..std::f64::consts::TAU);
            Point::new(r * t.cos(), r * t.sin())
        };
        positions.push(p);
    }
    let cells: Vec<SynthCell> = positions
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let r_km = p.dist(Point::new(0.0, 0.0)) / 1000.0;
            let t = rng.random_range(0.0..std::f64::consts::TAU);
            let off = rng.random_range(20.0..150.0);
            let base = Point::new(p.x + off * t.cos(), p.y + off * t.sin());
            SynthCell {
                id: format!("c{i:04}"),
                position: p,
                centroid: frame.unproject(p),
                base_station: frame.unproject(base),
                area_m2: (0.3 + 0.4 * r_km) * 1e6,
            }
        })
        .collect();

    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut listings = Vec::with_capacity(cfg.listings);
    while listings.len() < cfg.listings {
        let p = if rng.random::<bool>() {
            let c = &positions[rng.random_range(0..positions.len())];
            Point::new(c.x + 250.0 * normal.sample(&mut rng), c.y + 250.0 * normal.sample(&mut rng))
        } else {
            let r = radius * rng.random::<f64>();
            let t = rng.random_range(0.0..std::f64::consts::TAU);
            Point::new(r * t.cos(), r * t.sin())
        };
        let r_km = p.dist(Point::new(0.0, 0.0)) / 1000.0;
        if r_km >= cfg.boundary_radius_km - 0.5 {
            continue;
        }
        let noise = (1.0 + cfg.price_noise * normal.sample(&mut rng)).max(0.2);
        let per_m2 = cfg.price_at(r_km) * noise;
        let floor = (rng.random_range(25.0f64..140.0) * 10.0).round() / 10.0;
        listings.push(EstateListing::new(
            format!("l{:05}", listings.len()),
            frame.unproject(p),
            per_m2 * floor,
            floor,
        ));
    }

    let neighbors = positions
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let mut others: Vec<u32> = (0..positions.len() as u32).filter(|&j| j as usize != i).collect();
            others.sort_by(|&a, &b| {
                p.dist2(positions[a as usize])
                    .total_cmp(&p.dist2(positions[b as usize]))
                    .then(a.cmp(&b))
            });
            others
        })
        .collect();
    let commute_weights = positions
        .iter()
        .map(|p| (-p.dist(Point::new(0.0, 0.0)) / 3_000.0).exp())
        .collect();

    let boundary = closed_circle(&frame, cfg.boundary_radius_km * 1000.0);
    let regions = admin_regions(&frame, cfg.boundary_radius_km * 1000.0)?;
    Ok(SynthCity {
        frame,
        cells,
        listings,
        regions,
        boundary,
        neighbors,
        commute_weights,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimTruth {
    pub sim_id: String,
    pub home: usize,
    pub work: usize,
    pub pattern: Pattern,
}

/// One generated subscriber: ground truth, attribute history and the
/// time-ordered `(timestamp, cell index)` events.
#[derive(Clone, Debug)]
pub struct SimTrace {
    pub truth: SimTruth,
    pub attributes: SimAttributes,
    /// Attributes reported from this timestamp on, if they change.
    pub change: Option<(i64, SimAttributes)>,
    pub events: Vec<(i64, u32)>,
}

impl SimTrace {
    pub fn attributes_at(&self, ts: i64) -> &SimAttributes {
        match &self.change {
            Some((from, later)) if ts >= *from => later,
            _ => &self.attributes,
        }
    }
}

const WORKDAY_HOURS: [f64; 24] = [
    0.3, 0.2, 0.1, 0.1, 0.1, 0.3, 1.0, 2.5, 4.0, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 4.5, 4.0, 3.5, 3.0, 2.5, 2.0, 1.2,
    0.6,
];
const HOLIDAY_HOURS: [f64; 24] = [
    0.4, 0.3, 0.2, 0.1, 0.1, 0.1, 0.2, 0.6, 1.5, 3.0, 4.0, 4.5, 4.5, 4.5, 4.5, 4.5, 4.5, 4.5, 4.0, 3.5, 3.0, 2.5, 1.5,
    0.8,
];
const NIGHT_OWL_HOURS: [f64; 24] = [
    4.0, 3.5, 3.0, 2.0, 1.0, 0.5, 0.3, 0.5, 1.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0,
    5.0,
];
const FAVORITE_WEIGHTS: [f64; 4] = [0.4, 0.3, 0.2, 0.1];

const TACS: [&str; 8] = [
    "35332008", "35391907", "35875206", "86769303", "35161509", "35698207", "01234500", "35405206",
];

fn pick_pattern(cfg: &SynthConfig, u: f64) -> Pattern {
    let mut acc = cfg.commuter_share;
    if u < acc {
        return Pattern::Commuter;
    }
    acc += cfg.night_owl_share;
    if u < acc {
        return Pattern::NightOwl;
    }
    acc += cfg.stationary_share;
    if u < acc {
        return Pattern::Stationary;
    }
    acc += cfg.light_share;
    if u < acc {
        return Pattern::Light;
    }
    Pattern::Local
}

fn random_attributes(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> SimAttributes {
    SimAttributes {
        customer_type: if rng.random::<f64>() < cfg.business_share {
            CustomerType::Business
        } else {
            CustomerType::Consumer
        },
        subscription_type: if rng.random::<f64>() < 0.3 {
            SubscriptionType::Prepaid
        } else {
            SubscriptionType::Postpaid
        },
        age: (rng.random::<f64>() >= 0.05).then(|| rng.random_range(18..=75)),
        gender: match rng.random_range(0..50) {
            0 => Gender::Unknown,
            x if x % 2 == 0 => Gender::Male,
            _ => Gender::Female,
        },
        tac: Some(TACS[rng.random_range(0..TACS.len())].to_string()),
    }
}

pub fn sim_id(index: usize) -> String {
    format!("s{index:05}")
}

/// Generates SIM `index` from its own random stream.
pub fn generate_sim(cfg: &SynthConfig, city: &SynthCity, cal: &HolidayCalendar, index: usize) -> SimTrace {
    let mut rng = cfg.rng(index as u64 + 1);
    let n_cells = city.cells.len();
    let pattern = pick_pattern(cfg, rng.random());
    let home = rng.random_range(0..n_cells);
    let work = match pattern {
        Pattern::Stationary => home,
        _ if n_cells == 1 => home,
        Pattern::Local => {
            let near: Vec<u32> = city.neighbors[home]
                .iter()
                .copied()
                .filter(|&j| city.cells[j as usize].position.dist(city.cells[home].position) <= 4_000.0)
                .collect();
            if near.is_empty() {
                city.neighbors[home][0] as usize
            } else {
                near[rng.random_range(0..near.len())] as usize
            }
        }
        _ => {
            let weights: Vec<f64> = city
                .commute_weights
                .iter()
                .enumerate()
                .map(|(j, &w)| if j == home { 0.0 } else { w })
                .collect();
            WeightedIndex::new(&weights).expect("positive commute weights").sample(&mut rng)
        }
    };
    let pool: Vec<u32> = city.neighbors[home]
        .iter()
        .copied()
        .filter(|&j| j as usize != work)
        .take(12)
        .collect();
    let mut favorites: Vec<u32> = Vec::with_capacity(4);
    while favorites.len() < 4 && !pool.is_empty() {
        favorites.push(pool[rng.random_range(0..pool.len())]);
    }
    if favorites.is_empty() {
        favorites.push(home as u32);
    }
    let fav_weights = &FAVORITE_WEIGHTS[..favorites.len()];
    let fav_pick = WeightedIndex::new(fav_weights).expect("favorite weights");

    let attributes = random_attributes(cfg, &mut rng);
    let first = cal.midnight(cfg.start);
    let change = (rng.random::<f64>() < cfg.attribute_change_share).then(|| {
        let mut later = attributes.clone();
        match rng.random_range(0..3) {
            0 => {
                later.subscription_type = match later.subscription_type {
                    SubscriptionType::Prepaid => SubscriptionType::Postpaid,
                    _ => SubscriptionType::Prepaid,
                }
            }
            1 => later.tac = Some(TACS[(TACS.iter().position(|t| Some(*t) == later.tac.as_deref()).unwrap_or(0) + 1) % TACS.len()].to_string()),
            _ => later.age = None,
        }
        let day = rng.random_range(1..cfg.days.max(2)) as i64;
        (first + day * 86_400, later)
    });

    let (median, sigma, inactive) = match pattern {
        Pattern::Light => (3.0, 0.8, 0.5),
        _ => (cfg.activity_median, cfg.activity_sigma, cfg.inactive_day_prob),
    };
    let level = LogNormal::new(median.ln(), sigma).expect("lognormal").sample(&mut rng);
    let hours_workday = WeightedIndex::new(if pattern == Pattern::NightOwl {
        &NIGHT_OWL_HOURS
    } else {
        &WORKDAY_HOURS
    })
    .expect("hour weights");
    let hours_holiday = WeightedIndex::new(&HOLIDAY_HOURS).expect("hour weights");
    let e = cfg.excursion;

    let mut events = Vec::new();
    for d in 0..cfg.days {
        let date = cfg.start + chrono::Days::new(u64::from(d));
        let midnight = cal.midnight(date);
        let day_type = cal.day_type(cal.day_index(midnight));
        if rng.random::<f64>() < inactive {
            continue;
        }
        let lambda = match day_type {
            DayType::Workday => level,
            DayType::Holiday => level * cfg.holiday_activity_factor,
        };
        let n = Poisson::new(lambda.max(1e-9)).map(|p| p.sample(&mut rng) as usize).unwrap_or(0);
        let mut day_events: Vec<(i64, u32)> = Vec::with_capacity(n);
        for _ in 0..n {
            let hour = match day_type {
                DayType::Workday => hours_workday.sample(&mut rng),
                DayType::Holiday => hours_holiday.sample(&mut rng),
            };
            let ts = midnight + hour as i64 * 3600 + rng.random_range(0..3600);
            let u: f64 = rng.random();
            let night = !(6..22).contains(&hour);
            let away = match (day_type, hour) {
                _ if pattern == Pattern::Stationary => false,
                (_, _) if night => u < e / 3.0,
                (DayType::Workday, 9..=15) => u < e,
                (DayType::Workday, _) => u < (1.5 * e).min(0.9),
                (DayType::Holiday, _) => hour >= 8 && u < (2.0 * e).min(0.9),
            };
            let cell = if away {
                favorites[fav_pick.sample(&mut rng)]
            } else {
                match (day_type, hour) {
                    _ if night => home as u32,
                    (DayType::Workday, 9..=15) => work as u32,
                    (DayType::Workday, _) if rng.random::<f64>() >= 0.6 => work as u32,
                    _ => home as u32,
                }
            };
            day_events.push((ts, cell));
        }
        day_events.sort_unstable();
        events.extend(day_events);
    }

    SimTrace {
        truth: SimTruth {
            sim_id: sim_id(index),
            home,
            work,
            pattern,
        },
        attributes,
        change,
        events,
    }
}

/// Generates the whole population in memory as parsed CDR data, skipping
/// the CSV round trip.
pub fn generate_cdr_data(cfg: &SynthConfig, city: &SynthCity, cal: &HolidayCalendar) -> (CdrData, Vec<SimTruth>) {
    let traces: Vec<SimTrace> = (0..cfg.sims)
        .into_par_iter()
        .map(|i| generate_sim(cfg, city, cal, i))
        .collect();
    let mut sims = Interner::new();
    let mut attributes = AttributeReducer::default();
    let total: usize = traces.iter().map(|t| t.events.len()).sum();
    let mut records = Vec::with_capacity(total);
    let mut truths = Vec::with_capacity(traces.len());
    for t in traces {
        if t.events.is_empty() {
            truths.push(t.truth);
            continue;
        }
        let key = sims.intern(&t.truth.sim_id);
        attributes.touch(key);
        let first = t.events[0].0;
        let last = t.events[t.events.len() - 1].0;
        attributes.observe(key, t.attributes_at(first));
        attributes.observe(key, t.attributes_at(last));
        records.extend(
            t.events
                .iter()
                .map(|&(ts, c)| CdrRecord::new(SimKey(key), ts, CellKey(c))),
        );
        truths.push(t.truth);
    }
    let report = crate::ingest::ParseReport {
        rows: records.len() as u64,
        records: records.len() as u64,
        truncated_timestamps: records.len() as u64,
        ..Default::default()
    };
    (
        CdrData {
            records,
            sims,
            attributes,
            report,
        },
        truths,
    )
}

fn fmt_attr_row(out: &mut String, a: &SimAttributes) {
    let age = a.age.map(|x| x.to_string()).unwrap_or_default();
    let _ = write!(
        out,
        "{},{},{},{},{}",
        a.customer_type,
        a.subscription_type,
        age,
        a.gender,
        a.tac.as_deref().unwrap_or("")
    );
}

/// Writes the CDR in the wide format (with subscriber attributes on every
/// row) and returns the ground truth.
pub fn write_cdr(path: &Path, cfg: &SynthConfig, city: &SynthCity, cal: &HolidayCalendar) -> Result<Vec<SimTruth>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::with_capacity(1 << 20, file);
    w.write_all(b"sim_id,timestamp,cell_id,customer_type,subscription_type,age,gender,tac\n")
        .map_err(|e| Error::io(path, e))?;
    let mut truths = Vec::with_capacity(cfg.sims);
    const CHUNK: usize = 256;
    for start in (0..cfg.sims).step_by(CHUNK) {
        let end = (start + CHUNK).min(cfg.sims);
        let chunks: Vec<(String, SimTruth)> = (start..end)
            .into_par_iter()
            .map(|i| {
                let t = generate_sim(cfg, city, cal, i);
                let mut s = String::with_capacity(t.events.len() * 64);
                let mut attrs = String::new();
                let mut current: Option<&SimAttributes> = None;
                for &(ts, c) in &t.events {
                    let a = t.attributes_at(ts);
                    if current != Some(a) {
                        attrs.clear();
                        fmt_attr_row(&mut attrs, a);
                        current = Some(a);
                    }
                    let _ = writeln!(s, "{},{ts},{},{attrs}", t.truth.sim_id, city.cells[c as usize].id);
                }
                (s, t.truth)
            })
            .collect();
        for (s, truth) in chunks {
            w.write_all(s.as_bytes()).map_err(|e| Error::io(path, e))?;
            truths.push(truth);
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(truths)
}

pub fn write_cells(path: &Path, city: &SynthCity) -> Result<()> {
    let mut s = String::from("cell_id,centroid_lon,centroid_lat,base_lon,base_lat,area_m2\n");
    for c in &city.cells {
        let _ = writeln!(
            s,
            "{},{:.8},{:.8},{:.8},{:.8},{:.1}",
            c.id, c.centroid.lon, c.centroid.lat, c.base_station.lon, c.base_station.lat, c.area_m2
        );
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn write_listings(path: &Path, city: &SynthCity) -> Result<()> {
    let mut s = String::from("listing_id,lon,lat,price_huf,floor_m2\n");
    for l in &city.listings {
        let _ = writeln!(
            s,
            "{},{:.8},{:.8},{},{}",
            l.listing_id, l.location.lon, l.location.lat, l.total_price, l.floor_space
        );
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn write_truth(path: &Path, city: &SynthCity, truths: &[SimTruth]) -> Result<()> {
    let mut s = String::from("sim_id,home_cell,work_cell,pattern\n");
    for t in truths {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            t.sim_id,
            city.cells[t.home].id,
            city.cells[t.work].id,
            t.pattern.as_str()
        );
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Ground truth as written by [`write_truth`]: `(sim_id, home cell id,
/// work cell id, pattern)`.
pub fn read_truth(path: &Path) -> Result<Vec<(String, String, String, Pattern)>> {
    let mut rdr = crate::ingest::open_csv(path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let pattern = rec
            .get(3)
            .and_then(Pattern::parse)
            .ok_or_else(|| Error::InvalidArgument(format!("{}: bad pattern in {rec:?}", path.display())))?;
        out.push((rec[0].to_string(), rec[1].to_string(), rec[2].to_string(), pattern));
    }
    Ok(out)
}

pub const CITY_FILES: [&str; 6] = [
    "cells.csv",
    "listings.csv",
    "admin.geojson",
    "boundary.geojson",
    "cdr.csv",
    "truth.csv",
];

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SynthSummary {
    pub cells: usize,
    pub listings: usize,
    pub sims: usize,
    pub regions: usize,
}

/// Writes a complete input directory: cells, listings, admin regions,
/// boundary, CDR and ground truth.
pub fn generate_to_dir(cfg: &SynthConfig, cal: &HolidayCalendar, dir: &Path) -> Result<SynthSummary> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let city = generate_city(cfg)?;
    write_cells(&dir.join("cells.csv"), &city)?;
    write_listings(&dir.join("listings.csv"), &city)?;
    write_admin_regions(&dir.join("admin.geojson"), &city.regions)?;
    write_boundary(&dir.join("boundary.geojson"), &city.boundary)?;
    let truths = write_cdr(&dir.join("cdr.csv"), cfg, &city, cal)?;
    write_truth(&dir.join("truth.csv"), &city, &truths)?;
    Ok(SynthSummary {
        cells: city.cells.len(),
        listings: city.listings.len(),
        sims: truths.len(),
        regions: city.regions.len(),
    })
}
