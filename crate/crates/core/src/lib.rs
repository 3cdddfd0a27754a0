//! Mobility indicators and socioeconomic status from call detail records.
//!
//! The crate turns raw network events, a cell table and housing-price
//! listings into per-subscriber home/work anchors, mobility indicators
//! (radius of gyration, entropy, travel diversity), price-based status
//! groups, a principal component analysis of binned indicators, and
//! commuting tables. [`pipeline`] runs the stages over a shared output
//! directory; [`synth`] generates a city with known ground truth.

pub mod activity;
pub mod anchors;
pub mod calendar;
pub mod config;
pub mod error;
pub mod indicators;
pub mod ingest;
pub mod pca;
pub mod pipeline;
pub mod ses;
pub mod spatial;
pub mod synth;

pub use activity::{FilterCriteria, SimActivityStats};
pub use anchors::AnchorEstimate;
pub use calendar::{DayType, HolidayCalendar};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use indicators::{IndicatorParams, MobilityClass, MobilityIndicators, VisitHistogram};
pub use ingest::{CdrRecord, EstateListing, RawCell, SimAttributes, SimKey};
pub use pca::{FeatureMatrix, PcaResult};
pub use pipeline::{run_pipeline, run_stage, Stage};
pub use ses::{QuartileGroup, SesAssignment, SubscriberProfile};
pub use spatial::{LonLat, MergedCells, MergedId, Point, Polygon, Projection};
pub use synth::{SynthConfig, SynthCity};
