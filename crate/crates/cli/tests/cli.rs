use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_mobses");

fn mobses(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// A small generated city; the same arguments always give the same files.
fn small_city(dir: &Path) -> PathBuf {
    let city = dir.join("city");
    ok(&mobses(&[
        "synth", "--seed", "7", "--sims", "120", "--cells", "60", "--days", "30", "--out", s(&city),
    ]));
    city
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .expect("readable dir")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn missing_cells_file_is_an_input_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let city = small_city(dir.path());
    std::fs::remove_file(city.join("cells.csv")).unwrap();
    let out = mobses(&["pipeline", "--input", s(&city), "--outdir", s(&dir.path().join("out"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(s(&city.join("cells.csv"))), "{err}");
    assert!(err.contains("ingest"), "stage not named: {err}");
}

#[test]
fn pipeline_writes_every_artifact_with_its_header() {
    let dir = tempfile::tempdir().unwrap();
    let city = small_city(dir.path());
    let outdir = dir.path().join("out");
    let report = ok(&mobses(&["pipeline", "--input", s(&city), "--outdir", s(&outdir)]));
    assert!(report.contains("sims ingested"));
    let written = files(&outdir);
    for stage in mobses_core::Stage::ALL {
        for name in stage.artifacts() {
            let bytes = written
                .get(*name)
                .unwrap_or_else(|| panic!("{stage} did not write {name}"));
            if name.ends_with(".csv") {
                // The reader rejects rows whose width differs from the header.
                let mut rdr = csv::Reader::from_reader(bytes.as_slice());
                assert!(!rdr.headers().unwrap().is_empty(), "{name} has no header");
                for rec in rdr.records() {
                    rec.unwrap_or_else(|e| panic!("{name}: {e}"));
                }
            }
        }
    }
    let anchors = String::from_utf8_lossy(&written["anchors.csv"]).into_owned();
    assert_eq!(
        anchors.lines().next(),
        Some("sim_id,home_merged_id,work_merged_id,home_count,work_count,home_work_km")
    );
}

#[test]
fn stages_resume_from_earlier_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let city = small_city(dir.path());
    let (all, staged) = (dir.path().join("all"), dir.path().join("staged"));
    ok(&mobses(&["pipeline", "--input", s(&city), "--outdir", s(&all)]));
    for stage in mobses_core::Stage::ALL {
        ok(&mobses(&[stage.as_str(), "--input", s(&city), "--outdir", s(&staged)]));
    }
    assert_eq!(files(&all), files(&staged));
}

#[test]
fn a_stage_without_its_inputs_names_the_missing_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let city = small_city(dir.path());
    let out = mobses(&["anchors", "--input", s(&city), "--outdir", s(&dir.path().join("out"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("anchors") && err.contains("active_sims.csv"), "{err}");
}

#[test]
fn outputs_do_not_depend_on_thread_count_or_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let city = small_city(dir.path());
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        ok(&mobses(&["pipeline", "--input", s(&city), "--outdir", s(&out), "--threads", threads]));
        files(&out)
    };
    let one = run("t1", "1");
    assert_eq!(one, run("t3", "3"));
    assert_eq!(one, run("t1", "1"));
}

#[test]
fn report_on_an_empty_directory_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = mobses(&["report", "--outdir", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing artifact"));
}

#[test]
fn report_matches_snapshot_and_leaves_files_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let city = small_city(dir.path());
    let outdir = dir.path().join("out");
    ok(&mobses(&["pipeline", "--input", s(&city), "--outdir", s(&outdir)]));
    let before = files(&outdir);
    let report = ok(&mobses(&["report", "--outdir", s(&outdir)]));
    assert_eq!(files(&outdir), before);
    assert_eq!(report, include_str!("snapshots/report_small.txt"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    small_city(dir.path());
    let cfg = dir.path().join("run.conf");
    std::fs::write(
        &cfg,
        "# relative to this file\ninput_dir = city\noutdir = from_config\nmin_days = 31\n",
    )
    .unwrap();
    let cfg = s(&cfg);
    ok(&mobses(&["ingest", "--config", cfg]));
    assert!(dir.path().join("from_config/attributes.csv").exists());

    // 31 active days cannot be met in a 30-day window.
    let strict = dir.path().join("strict");
    for stage in ["ingest", "stats", "filter"] {
        ok(&mobses(&[stage, "--config", cfg, "--outdir", s(&strict)]));
    }
    let active = std::fs::read_to_string(strict.join("active_sims.csv")).unwrap();
    assert_eq!(active.lines().count(), 1);

    let relaxed = dir.path().join("relaxed");
    for stage in ["ingest", "stats", "filter"] {
        ok(&mobses(&[stage, "--config", cfg, "--outdir", s(&relaxed), "--set", "min_days=20"]));
    }
    let active = std::fs::read_to_string(relaxed.join("active_sims.csv")).unwrap();
    assert!(active.lines().count() > 1);
}

#[test]
fn bad_settings_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = mobses(&["ingest", "--outdir", s(dir.path()), "--set", "no_such_key=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_key"));
    let out = mobses(&["ingest", "--set", "strata"]);
    assert_eq!(out.status.code(), Some(2));
    let out = mobses(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn synth_is_reproducible_from_its_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = small_city(&dir.path().join("a"));
    let b = small_city(&dir.path().join("b"));
    assert_eq!(files(&a), files(&b));
    let truth = std::fs::read_to_string(a.join("truth.csv")).unwrap();
    assert_eq!(truth.lines().next(), Some("sim_id,home_cell,work_cell,pattern"));
    assert_eq!(truth.lines().count(), 121);
}
