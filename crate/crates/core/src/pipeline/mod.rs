//! Stage orchestration over a shared output directory. Every stage reads
//! its inputs from the configured input files or from earlier stages'
//! artifacts, so stages can be run one at a time or all in sequence with
//! identical results.

mod io;
mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

pub use report::render_report;

use crate::activity::{active_days_histogram, activity_categories, day_hour_matrix, SimActivityStats};
use crate::anchors::{estimate_anchors, AnchorEstimate};
use crate::calendar::{weekday_name, DayType, HolidayCalendar};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::indicators::{compute_indicators, daily_series, MobilityIndicators};
use crate::ingest::{
    parse_cdr, parse_cells, parse_listings, read_attributes, write_attributes, CdrData, CdrRecord, CellReport,
    CellTable, ListingReport, ParseReport, SimKey,
};
use crate::pca::{build_matrix, run_pca, write_feature_matrix, write_loadings, write_ratios, write_scores};
use crate::ses::{
    aggregate_by_category, assign_ses, commuting_tables, compare_to_census, stationary_filter, Commuter,
    PercentTable, SesReport, SubscriberProfile, AGE_COLUMNS, ORIGIN_COLUMNS,
};
use crate::spatial::{
    assign_admin, attach_prices, build_voronoi, merge_cells, read_admin_regions, read_boundary, MergedCells, MergedId,
    PriceReport, Projection,
};
use io::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    Cells,
    Stats,
    Filter,
    Anchors,
    Indicators,
    Ses,
    Pca,
    Commute,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::Ingest,
        Stage::Cells,
        Stage::Stats,
        Stage::Filter,
        Stage::Anchors,
        Stage::Indicators,
        Stage::Ses,
        Stage::Pca,
        Stage::Commute,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Cells => "cells",
            Stage::Stats => "stats",
            Stage::Filter => "filter",
            Stage::Anchors => "anchors",
            Stage::Indicators => "indicators",
            Stage::Ses => "ses",
            Stage::Pca => "pca",
            Stage::Commute => "commute",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Stage::ALL.into_iter().find(|st| st.as_str() == s)
    }

    /// Files written by the stage, relative to the output directory.
    pub fn artifacts(self) -> &'static [&'static str] {
        match self {
            Stage::Ingest => &["attributes.csv", "ingest_report.json"],
            Stage::Cells => &["merged_cells.csv", "cell_map.csv", "cells_report.json"],
            Stage::Stats => &[
                "sim_stats.csv",
                "activity_categories.csv",
                "active_days_histogram.csv",
                "day_hour_matrix.csv",
            ],
            Stage::Filter => &["active_sims.csv"],
            Stage::Anchors => &["anchors.csv"],
            Stage::Indicators => &["indicators.csv", "daily_indicators.csv"],
            Stage::Ses => &[
                "ses.csv",
                "stationary_removed.csv",
                "category_summary.csv",
                "strata_summary.csv",
                "ses_report.json",
            ],
            Stage::Pca => &[
                "feature_matrix.csv",
                "pca_loadings.csv",
                "pca_ratios.csv",
                "pca_scores.csv",
            ],
            Stage::Commute => &["commute_district.csv", "commute_age.csv"],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Internal(format!("cannot start thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Inputs shared between stages of one invocation; the raw tables are
/// parsed at most once.
pub struct Context<'a> {
    cfg: &'a RunConfig,
    frame: Projection,
    cal: HolidayCalendar,
    cells: Option<(CellTable, CellReport)>,
    cdr: Option<CdrData>,
}

impl<'a> Context<'a> {
    pub fn new(cfg: &'a RunConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Context {
            cfg,
            frame: Projection::budapest(),
            cal: cfg.calendar(),
            cells: None,
            cdr: None,
        })
    }

    fn out(&self, name: &str) -> PathBuf {
        self.cfg.outdir.join(name)
    }

    fn cells(&mut self) -> Result<&(CellTable, CellReport)> {
        if self.cells.is_none() {
            self.cells = Some(parse_cells(&self.cfg.cells, &self.frame)?);
        }
        Ok(self.cells.as_ref().expect("just loaded"))
    }

    fn cdr(&mut self) -> Result<&CdrData> {
        if self.cdr.is_none() {
            self.cells()?;
            let table = &self.cells.as_ref().expect("loaded").0;
            let mut cdr = parse_cdr(&self.cfg.cdr, table)?;
            cdr.sort();
            self.cdr = Some(cdr);
        }
        Ok(self.cdr.as_ref().expect("just loaded"))
    }

    fn merged(&mut self) -> Result<MergedCells> {
        let (cells_path, map_path) = (self.out("merged_cells.csv"), self.out("cell_map.csv"));
        for p in [&cells_path, &map_path] {
            if !p.exists() {
                return Err(Error::MissingArtifact { path: p.clone() });
            }
        }
        let frame = self.frame.clone();
        let table = &self.cells()?.0;
        MergedCells::read_csv(&cells_path, &map_path, table, &frame)
    }

    pub fn run(&mut self, stage: Stage) -> Result<String> {
        std::fs::create_dir_all(&self.cfg.outdir).map_err(|e| Error::io(&self.cfg.outdir, e))?;
        let threads = self.cfg.threads;
        let result = match stage {
            Stage::Ingest => with_threads(threads, || self.ingest()),
            Stage::Cells => with_threads(threads, || self.cells_stage()),
            Stage::Stats => with_threads(threads, || self.stats()),
            Stage::Filter => with_threads(threads, || self.filter()),
            Stage::Anchors => with_threads(threads, || self.anchors()),
            Stage::Indicators => with_threads(threads, || self.indicators()),
            Stage::Ses => with_threads(threads, || self.ses()),
            Stage::Pca => with_threads(threads, || self.pca()),
            Stage::Commute => with_threads(threads, || self.commute()),
        };
        result.and_then(|r| r).map_err(|e| e.in_stage(stage.as_str()))
    }

    /// Per-SIM record slices ordered by SIM name.
    fn sims_by_name(cdr: &CdrData) -> Vec<(&str, SimKey, &[CdrRecord])> {
        let mut v: Vec<(&str, SimKey, &[CdrRecord])> =
            cdr.per_sim().map(|(k, recs)| (cdr.sim_name(k), k, recs)).collect();
        v.sort_unstable_by(|a, b| a.0.cmp(b.0));
        v
    }

    fn ingest(&mut self) -> Result<String> {
        let cell_report = self.cells()?.1;
        let cdr = self.cdr()?;
        let attributes = cdr.attributes.finish(&cdr.sims);
        let report = IngestReport {
            cells: cell_report,
            cdr: cdr.report,
            sims: cdr.sims.len() as u64,
            attribute_conflicts: cdr.attributes.conflicted() as u64,
        };
        write_attributes(&self.out("attributes.csv"), &attributes)?;
        write_json(&self.out("ingest_report.json"), &report)?;
        Ok(crate::ingest::report_key_values("cells", &report.cells)
            + &crate::ingest::report_key_values("cdr", &report.cdr)
            + &format!(
                "sims={}\nattribute_conflicts={}\n",
                report.sims, report.attribute_conflicts
            ))
    }

    fn cells_stage(&mut self) -> Result<String> {
        let mut weights = vec![0u64; self.cells()?.0.len()];
        for r in &self.cdr()?.records {
            weights[r.cell.0 as usize] += 1;
        }
        let frame = self.frame.clone();
        let cfg = self.cfg;
        let (cells_out, map_out) = (self.out("merged_cells.csv"), self.out("cell_map.csv"));
        let report_out = self.out("cells_report.json");
        let table = &self.cells()?.0;
        let mut merged = merge_cells(table, &weights, cfg.merge_eps_m, &frame)?;
        let boundary = read_boundary(&cfg.boundary, &frame)?;
        build_voronoi(&mut merged, &boundary)?;
        let (listings, listing_report) = parse_listings(&cfg.listings, &frame)?;
        let prices = attach_prices(&mut merged, &listings, cfg.min_listings, &frame)?;
        let regions = read_admin_regions(&cfg.admin, &frame)?;
        assign_admin(&mut merged, &regions);
        merged.write_csv(&cells_out, &map_out, table)?;
        let report = CellsReport {
            raw_cells: table.len() as u64,
            merged_cells: merged.len() as u64,
            listings: listing_report,
            prices,
        };
        write_json(&report_out, &report)?;
        Ok(format!(
            "raw_cells={}\nmerged_cells={}\npriced_cells={}\n",
            report.raw_cells, report.merged_cells, prices.priced_cells
        ))
    }

    fn stats(&mut self) -> Result<String> {
        let cal = self.cal.clone();
        let outdir = self.cfg.outdir.clone();
        let cdr = self.cdr()?;
        let sims = Self::sims_by_name(cdr);
        let stats: Vec<(&str, SimActivityStats)> = sims
            .par_iter()
            .map(|&(name, key, recs)| (name, SimActivityStats::for_sim(key, recs, &cal)))
            .collect();
        write_sim_stats(&outdir.join("sim_stats.csv"), &stats)?;

        let mut out = CsvOut::create(
            &outdir.join("activity_categories.csv"),
            &["bucket", "sims", "records", "sim_share_pct", "activity_share_pct"],
        )?;
        for c in activity_categories(stats.iter().map(|(_, s)| s)) {
            out.row([
                c.bucket.label().to_string(),
                c.sims.to_string(),
                c.records.to_string(),
                c.sim_share.to_string(),
                c.activity_share.to_string(),
            ])?;
        }
        out.finish()?;

        let mut out = CsvOut::create(&outdir.join("active_days_histogram.csv"), &["active_days", "sims"])?;
        for (days, n) in active_days_histogram(stats.iter().map(|(_, s)| s)) {
            out.row([days.to_string(), n.to_string()])?;
        }
        out.finish()?;

        let m = day_hour_matrix(&cdr.records, &cal);
        let mut header = vec!["weekday".to_string()];
        header.extend((0..24).map(|h| format!("h{h:02}")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut out = CsvOut::create(&outdir.join("day_hour_matrix.csv"), &header)?;
        for (d, row) in m.counts.iter().enumerate() {
            let mut rec = vec![weekday_name(d as u32).to_string()];
            rec.extend(row.iter().map(u64::to_string));
            out.row(rec)?;
        }
        out.finish()?;
        Ok(format!("sims={}\nrecords={}\n", stats.len(), cdr.records.len()))
    }

    fn filter(&mut self) -> Result<String> {
        let stats = read_sim_stats(&self.out("sim_stats.csv"))?;
        let active: Vec<&str> = stats
            .iter()
            .filter(|(_, s)| self.cfg.filter.accepts(s))
            .map(|(n, _)| n.as_str())
            .collect();
        write_sim_list(&self.out("active_sims.csv"), &active)?;
        Ok(format!("sims={}\nactive={}\n", stats.len(), active.len()))
    }

    fn active_set(&self) -> Result<BTreeSet<String>> {
        Ok(read_sim_list(&self.out("active_sims.csv"))?.into_iter().collect())
    }

    fn anchors(&mut self) -> Result<String> {
        let active = self.active_set()?;
        let merged = self.merged()?;
        let cal = self.cal.clone();
        let out = self.out("anchors.csv");
        let cdr = self.cdr()?;
        let sims: Vec<_> = Self::sims_by_name(cdr)
            .into_iter()
            .filter(|(n, _, _)| active.contains(*n))
            .collect();
        let rows: Vec<(&str, AnchorEstimate)> = sims
            .par_iter()
            .map(|&(name, key, recs)| {
                let visits = recs.iter().map(|r| (r.timestamp, merged.of_raw(r.cell)));
                (name, estimate_anchors(key, visits, &cal, &merged))
            })
            .collect();
        write_anchors(&out, &rows)?;
        let with_both = rows.iter().filter(|(_, a)| a.home_work_km.is_some()).count();
        Ok(format!("sims={}\nwith_home_and_work={with_both}\n", rows.len()))
    }

    fn indicators(&mut self) -> Result<String> {
        let active = self.active_set()?;
        let merged = self.merged()?;
        let cal = self.cal.clone();
        let params = self.cfg.indicators;
        let (out_ind, out_daily) = (self.out("indicators.csv"), self.out("daily_indicators.csv"));
        let cdr = self.cdr()?;
        let sims: Vec<_> = Self::sims_by_name(cdr)
            .into_iter()
            .filter(|(n, _, _)| active.contains(*n))
            .collect();
        let per_sim: Vec<(&str, Vec<MobilityIndicators>, Vec<crate::indicators::DailyIndicators>)> = sims
            .par_iter()
            .map(|&(name, key, recs)| {
                let visits: Vec<(i64, MergedId)> =
                    recs.iter().map(|r| (r.timestamp, merged.of_raw(r.cell))).collect();
                let position = |id: MergedId| merged.get(id).position;
                (
                    name,
                    compute_indicators(key, &visits, &cal, position, &params),
                    daily_series(key, &visits, &cal, position),
                )
            })
            .collect();
        let rows: Vec<(&str, MobilityIndicators)> = per_sim
            .iter()
            .flat_map(|(n, ind, _)| ind.iter().map(move |i| (*n, *i)))
            .collect();
        write_indicators(&out_ind, &rows)?;
        let mut out = CsvOut::create(
            &out_daily,
            &["sim_id", "date", "day_type", "rg_km", "entropy", "location_count"],
        )?;
        for (name, _, daily) in &per_sim {
            for d in daily {
                out.row([
                    name.to_string(),
                    d.date.to_string(),
                    d.day_type.to_string(),
                    d.rg_km.to_string(),
                    d.entropy.to_string(),
                    d.location_count.to_string(),
                ])?;
            }
        }
        out.finish()?;
        Ok(format!("sims={}\nrows={}\n", per_sim.len(), rows.len()))
    }

    /// Profiles rebuilt from the anchors and indicators artifacts, keyed in
    /// SIM name order.
    fn profiles(&self) -> Result<(SimNames, Vec<SubscriberProfile>)> {
        let anchors = read_anchors(&self.out("anchors.csv"))?;
        let indicators = read_indicators(&self.out("indicators.csv"))?;
        let names = SimNames::new(anchors.iter().map(|(n, _)| n.clone()));
        let mut profiles: Vec<SubscriberProfile> = anchors
            .into_iter()
            .map(|(n, mut a)| {
                let sim = names.key(&n).expect("name from the same list");
                a.sim = sim;
                SubscriberProfile {
                    sim,
                    anchors: a,
                    workday: None,
                    holiday: None,
                }
            })
            .collect();
        profiles.sort_by_key(|p| p.sim);
        for (n, mut ind) in indicators {
            let Some(sim) = names.key(&n) else { continue };
            ind.sim = sim;
            let p = &mut profiles[sim.0 as usize];
            match ind.day_type {
                DayType::Workday => p.workday = Some(ind),
                DayType::Holiday => p.holiday = Some(ind),
            }
        }
        Ok((names, profiles))
    }

    fn ses(&mut self) -> Result<String> {
        let merged = self.merged()?;
        let (names, profiles) = self.profiles()?;
        let (kept, removed) = stationary_filter(profiles);

        let mut out = CsvOut::create(&self.out("stationary_removed.csv"), &REMOVED_HEADER)?;
        for p in &removed {
            out.row([names.name(p.sim).to_string(), opt(p.rg_km()), opt(p.anchors.home_work_km)])?;
        }
        out.finish()?;

        let (assignments, report) = assign_ses(&kept, &merged, self.cfg.strata)?;
        let anchors: BTreeMap<SimKey, &AnchorEstimate> = kept.iter().map(|p| (p.sim, &p.anchors)).collect();
        let rows: Vec<_> = assignments
            .iter()
            .map(|a| (names.name(a.sim), anchors[&a.sim].home, anchors[&a.sim].work, *a))
            .collect();
        write_ses(&self.out("ses.csv"), &rows)?;

        let mut out = CsvOut::create(&self.out("category_summary.csv"), &CATEGORY_SUMMARY_HEADER)?;
        for c in aggregate_by_category(&kept, &assignments) {
            let s = c.summary;
            out.row([
                c.category.to_string(),
                c.day_type.map_or("all".to_string(), |d| d.to_string()),
                c.indicator.as_str().to_string(),
                s.n.to_string(),
                s.mean.to_string(),
                s.q1.to_string(),
                s.median.to_string(),
                s.q3.to_string(),
                s.min.to_string(),
                s.max.to_string(),
            ])?;
        }
        out.finish()?;

        let mut strata: BTreeMap<u32, (u64, f64)> = BTreeMap::new();
        for a in &assignments {
            let e = strata.entry(a.stratum).or_default();
            e.0 += 1;
            e.1 += a.v_ses;
        }
        let mut out = CsvOut::create(&self.out("strata_summary.csv"), &["stratum", "sims", "sum_v_ses", "mean_v_ses"])?;
        for (s, (n, sum)) in &strata {
            out.row([s.to_string(), n.to_string(), sum.to_string(), (sum / *n as f64).to_string()])?;
        }
        out.finish()?;

        let full = FullSesReport {
            active: (kept.len() + removed.len()) as u64,
            stationary_removed: removed.len() as u64,
            ses: report,
        };
        write_json(&self.out("ses_report.json"), &full)?;
        Ok(crate::ingest::report_key_values("ses", &full.ses)
            + &format!("stationary_removed={}\n", full.stationary_removed))
    }

    fn pca(&mut self) -> Result<String> {
        let (names, profiles) = self.profiles()?;
        let ses = read_ses(&self.out("ses.csv"))?;
        let assignments: Vec<_> = ses
            .into_iter()
            .filter_map(|(n, mut a)| {
                a.sim = names.key(&n)?;
                Some(a)
            })
            .collect();
        let matrix = build_matrix(&profiles, &assignments, self.cfg.bins)?;
        let result = run_pca(&matrix.data())?;
        let keys: Vec<_> = matrix.rows.iter().map(|r| r.key).collect();
        write_feature_matrix(&self.out("feature_matrix.csv"), &matrix)?;
        write_loadings(&self.out("pca_loadings.csv"), &matrix.bins, &result)?;
        write_ratios(&self.out("pca_ratios.csv"), &result)?;
        write_scores(&self.out("pca_scores.csv"), &keys, &result)?;
        let r = &result.explained_variance_ratio;
        Ok(format!(
            "rows={}\ndropped_rg={}\ndropped_entropy={}\npc1_ratio={:.4}\npc2_ratio={:.4}\n",
            matrix.rows.len(),
            matrix.dropped_rg,
            matrix.dropped_entropy,
            r.first().copied().unwrap_or(0.0),
            r.get(1).copied().unwrap_or(0.0)
        ))
    }

    fn commute(&mut self) -> Result<String> {
        let merged = self.merged()?;
        let anchors = read_anchors(&self.out("anchors.csv"))?;
        let removed: BTreeSet<String> = read_table(&self.out("stationary_removed.csv"), &REMOVED_HEADER)?
            .rows
            .iter()
            .map(|r| r[0].to_string())
            .collect();
        let attrs_path = self.out("attributes.csv");
        if !attrs_path.exists() {
            return Err(Error::MissingArtifact { path: attrs_path });
        }
        let attributes = read_attributes(&attrs_path)?;
        let commuters = anchors.iter().filter(|(n, _)| !removed.contains(n)).filter_map(|(n, a)| {
            Some(Commuter {
                home: merged.get(a.home?).admin,
                work: merged.get(a.work?).admin,
                age: attributes.get(n).and_then(|x| x.age),
            })
        });
        let tables = commuting_tables(commuters);
        tables.by_district.write_csv(&self.out("commute_district.csv"))?;
        tables.by_sector_age.write_csv(&self.out("commute_age.csv"))?;
        let mut msg = format!(
            "district_rows={}\nsector_rows={}\n",
            tables.by_district.rows.len(),
            tables.by_sector_age.rows.len()
        );
        if let Some(path) = &self.cfg.census_district {
            let census = PercentTable::read_csv(path, "district", ORIGIN_COLUMNS)?;
            let diff = compare_to_census(&tables.by_district, &census)?;
            diff.write_csv(&self.out("census_district_diff.csv"), "district")?;
            msg += &format!("census_district_mean_abs_diff={:.4}\n", diff.mean_abs_diff);
        }
        if let Some(path) = &self.cfg.census_age {
            let census = PercentTable::read_csv(path, "sector", AGE_COLUMNS)?;
            let diff = compare_to_census(&tables.by_sector_age, &census)?;
            diff.write_csv(&self.out("census_age_diff.csv"), "sector")?;
            msg += &format!("census_age_mean_abs_diff={:.4}\n", diff.mean_abs_diff);
        }
        Ok(msg)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
struct IngestReport {
    cells: CellReport,
    cdr: ParseReport,
    sims: u64,
    attribute_conflicts: u64,
}

#[derive(Clone, Copy, Debug, Serialize)]
struct CellsReport {
    raw_cells: u64,
    merged_cells: u64,
    listings: ListingReport,
    prices: PriceReport,
}

#[derive(Clone, Copy, Debug, Serialize)]
struct FullSesReport {
    active: u64,
    stationary_removed: u64,
    ses: SesReport,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Runs a single stage.
pub fn run_stage(cfg: &RunConfig, stage: Stage) -> Result<String> {
    Context::new(cfg)?.run(stage)
}

/// Runs every stage in order, parsing the raw inputs once, and returns the
/// summary report.
pub fn run_pipeline(cfg: &RunConfig) -> Result<String> {
    let mut ctx = Context::new(cfg)?;
    for stage in Stage::ALL {
        ctx.run(stage)?;
    }
    render_report(&cfg.outdir)
}
