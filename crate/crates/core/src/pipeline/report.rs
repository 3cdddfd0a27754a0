use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde_json::Value;

use super::io::{read_sim_list, read_table, CATEGORY_SUMMARY_HEADER};
use crate::error::{Error, Result};

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|_| Error::MissingArtifact {
        path: path.to_path_buf(),
    })?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}

fn num(v: &Value, path: &[&str]) -> u64 {
    path.iter().try_fold(v, |v, k| v.get(k)).and_then(Value::as_u64).unwrap_or(0)
}

/// Plain-text summary of a finished run. Only reads artifacts.
pub fn render_report(outdir: &Path) -> Result<String> {
    let ingest = read_json(&outdir.join("ingest_report.json"))?;
    let cells = read_json(&outdir.join("cells_report.json"))?;
    let ses = read_json(&outdir.join("ses_report.json"))?;
    let active = read_sim_list(&outdir.join("active_sims.csv"))?;
    let summary = read_table(&outdir.join("category_summary.csv"), &CATEGORY_SUMMARY_HEADER)?;
    let ratios = read_table(&outdir.join("pca_ratios.csv"), &["component", "eigenvalue", "ratio", "cumulative"])?;

    let mut s = String::new();
    let _ = writeln!(s, "records            {}", num(&ingest, &["cdr", "records"]));
    let _ = writeln!(s, "malformed rows     {}", num(&ingest, &["cdr", "malformed"]));
    let _ = writeln!(s, "sims ingested      {}", num(&ingest, &["sims"]));
    let _ = writeln!(s, "sims active        {}", active.len());
    let _ = writeln!(s, "stationary removed {}", num(&ses, &["stationary_removed"]));
    let _ = writeln!(s, "sims with ses      {}", num(&ses, &["ses", "assigned"]));
    let _ = writeln!(
        s,
        "merged cells       {} of {} ({} priced)",
        num(&cells, &["merged_cells"]),
        num(&cells, &["raw_cells"]),
        num(&cells, &["prices", "priced_cells"])
    );

    // category → (n, home–work mean, workday rg mean, holiday rg mean)
    let mut rows: BTreeMap<u8, [Option<(u64, f64)>; 3]> = BTreeMap::new();
    for r in &summary.rows {
        let slot = match (&r[1], &r[2]) {
            ("all", "home_work_km") => 0,
            ("workday", "rg_km") => 1,
            ("holiday", "rg_km") => 2,
            _ => continue,
        };
        let cat: u8 = summary.get(r, 0)?;
        rows.entry(cat).or_default()[slot] = Some((summary.get(r, 3)?, summary.get(r, 4)?));
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "category  sims  home_work_km  rg_workday_km  rg_holiday_km");
    let cell = |v: Option<(u64, f64)>| v.map_or("-".to_string(), |(_, m)| format!("{m:.3}"));
    for (cat, [hw, wd, hd]) in &rows {
        let n = hw.or(*wd).map_or(0, |(n, _)| n);
        let _ = writeln!(
            s,
            "{cat:>8}  {n:>4}  {:>12}  {:>13}  {:>13}",
            cell(*hw),
            cell(*wd),
            cell(*hd)
        );
    }
    let _ = writeln!(s);
    for r in ratios.rows.iter().take(2) {
        let ratio: f64 = ratios.get(r, 2)?;
        let _ = writeln!(s, "pc{} explained variance {:.4}", &r[0], ratio);
    }
    Ok(s)
}
