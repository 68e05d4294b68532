//! Behavior tests for the `oatlas` binary: config validation, the full
//! pipeline on a hand-computed fixture, determinism, stage chaining, and
//! failure handling.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn oatlas() -> Command {
    Command::new(env!("CARGO_BIN_EXE_oatlas"))
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .unwrap()
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// Ten single-SC records in 2001: FR has 4 open of 6, DE has 1 open of 4.
fn fixture_corpus() -> String {
    let mut lines = Vec::new();
    for i in 0..6 {
        let oa = if i < 4 { r#"["doaj_gold"]"# } else { "[]" };
        lines.push(format!(
            r#"{{"pub_id":"F{i}","year":2001,"doc_type":"article","oa_types":{oa},"subject_categories":["S1"],"affiliations":[{{"country":"FR"}}]}}"#
        ));
    }
    for i in 0..4 {
        let oa = if i < 1 { r#"["green_accepted"]"# } else { "[]" };
        lines.push(format!(
            r#"{{"pub_id":"D{i}","year":2001,"doc_type":"article","oa_types":{oa},"subject_categories":["S1"],"affiliations":[{{"country":"DE"}}]}}"#
        ));
    }
    lines.join("\n") + "\n"
}

struct Fixture {
    #[allow(dead_code)]
    dir: tempfile::TempDir,
    config_path: PathBuf,
    out_dir: PathBuf,
}

fn write_fixture(extra_config: &[(&str, serde_json::Value)]) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    fs::write(root.join("corpus.jsonl"), fixture_corpus()).unwrap();
    fs::write(root.join("scheme.csv"), "sc_code,discipline\nS1,Science\n").unwrap();
    fs::write(
        root.join("registry.csv"),
        "code,name,parent\nDE,Germany,\nFR,France,\n",
    )
    .unwrap();
    let out_dir = root.join("out");
    let mut config = serde_json::json!({
        "corpus": [root.join("corpus.jsonl")],
        "subject_scheme": root.join("scheme.csv"),
        "zone_registry": root.join("registry.csv"),
        "output_dir": out_dir,
        "levels": ["country"],
    });
    for (key, value) in extra_config {
        config[key] = value.clone();
    }
    let config_path = root.join("config.json");
    fs::write(&config_path, serde_json::to_vec_pretty(&config).unwrap()).unwrap();
    Fixture {
        dir,
        config_path,
        out_dir,
    }
}

#[test]
fn validate_accepts_the_demo_config() {
    let output = oatlas()
        .args(["validate", "--config", "data/demo/config.json"])
        .current_dir(workspace_root())
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr_of(&output));
    assert_eq!(stdout_of(&output).trim(), "ok");
}

#[test]
fn validate_lists_every_violation() {
    let fixture = write_fixture(&[
        ("subject_scheme", serde_json::json!("/nonexistent/scheme.csv")),
        ("oa_share_classes", serde_json::json!(0)),
    ]);
    let output = oatlas()
        .args(["validate", "--config"])
        .arg(&fixture.config_path)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stdout = stdout_of(&output);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 2, "{stdout}");
    assert!(lines[0].contains("subject_scheme"));
    assert!(lines[1].contains("oa_share_classes"));
}

#[test]
fn overlapping_periods_are_rejected_before_any_work() {
    let fixture = write_fixture(&[(
        "periods",
        serde_json::json!([
            {"name": "2000-2005", "year_min": 2000, "year_max": 2005},
            {"name": "2005-2010", "year_min": 2005, "year_max": 2010}
        ]),
    )]);
    let output = oatlas()
        .args(["run", "--config"])
        .arg(&fixture.config_path)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("overlap"));
    assert!(!fixture.out_dir.exists(), "no outputs before validation");
}

#[test]
fn env_var_supplies_the_config_path() {
    let fixture = write_fixture(&[]);
    let output = oatlas()
        .arg("validate")
        .env("OATLAS_CONFIG", &fixture.config_path)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr_of(&output));
}

fn read_report(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn fixture_run_produces_expected_files_and_totals() {
    let fixture = write_fixture(&[]);
    let output = oatlas()
        .args(["run", "--config"])
        .arg(&fixture.config_path)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr_of(&output));

    let report = read_report(&fixture.out_dir.join("run_report.json"));
    assert_eq!(report["ingest"]["total_lines"], 10);
    assert_eq!(report["ingest"]["accepted"], 10);
    assert_eq!(report["ingest"]["rejected"], 0);
    assert_eq!(report["errors"].as_array().unwrap().len(), 0);

    let expected_files = [
        "aggregates_country_2000-2003.csv",
        "aggregates_country_2008-2011.csv",
        "aggregates_country_2015-2018.csv",
        "choropleth_noai_country.csv",
        "choropleth_oa_share_country.csv",
        "choropleth_specialization_country.csv",
        "classes_noai_country.json",
        "classes_oa_share_country.json",
        "classes_specialization_country.json",
        "indicators.csv",
        "run_report.json",
    ];
    let listed: Vec<String> = report["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    assert_eq!(listed, expected_files);
    for name in expected_files {
        assert!(fixture.out_dir.join(name).is_file(), "missing {name}");
    }

    let indicators =
        fs::read_to_string(fixture.out_dir.join("indicators.csv")).unwrap();
    let mut values: BTreeMap<(String, String), f64> = BTreeMap::new();
    for line in indicators.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields[1] == "2000-2003" {
            values.insert(
                (fields[2].to_string(), fields[3].to_string()),
                fields[4].parse().unwrap(),
            );
        }
    }
    let get = |zone: &str, indicator: &str| values[&(zone.to_string(), indicator.to_string())];
    assert_eq!(get("WORLD", "oa_share"), 0.5);
    assert_eq!(get("FR", "oa_share"), 4.0 / 6.0);
    assert_eq!(get("DE", "oa_share"), 0.25);
    assert_eq!(get("WORLD", "noai"), 1.0);
    assert_eq!(get("FR", "noai"), (4.0 / 6.0) / 0.5);
    assert_eq!(get("DE", "noai"), 0.5);
    assert_eq!(get("FR", "specialization:Science"), 1.0);

    // DE's NOAI of 0.5 sits on a class boundary and goes to the upper class.
    let choropleth =
        fs::read_to_string(fixture.out_dir.join("choropleth_noai_country.csv")).unwrap();
    let de_row: Vec<&str> = choropleth
        .lines()
        .find(|l| l.starts_with("DE,"))
        .unwrap()
        .split(',')
        .collect();
    assert_eq!(de_row[4], "0.5");
    assert_eq!(de_row[5], "1");
}

fn normalized_report(path: &Path) -> serde_json::Value {
    let mut report = read_report(path);
    for stage in report["stages"].as_array_mut().unwrap() {
        stage["wall_ms"] = serde_json::json!(0);
    }
    report["config"]["output_dir"] = serde_json::json!("");
    report
}

#[test]
fn identical_configs_produce_byte_identical_outputs() {
    let a = write_fixture(&[]);
    let b = write_fixture(&[]);
    // Same inputs in different temp dirs; rewrite b's corpus to match a's
    // exactly (they already are, both from fixture_corpus).
    for fixture in [&a, &b] {
        let output = oatlas()
            .args(["run", "--config"])
            .arg(&fixture.config_path)
            .output()
            .unwrap();
        assert!(output.status.success(), "{}", stderr_of(&output));
    }
    let mut names: Vec<String> = fs::read_dir(&a.out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    for name in &names {
        let left = fs::read(a.out_dir.join(name)).unwrap();
        let right = fs::read(b.out_dir.join(name)).unwrap();
        if name == "run_report.json" {
            continue;
        }
        assert_eq!(left, right, "{name} differs");
    }
    // Reports match after dropping wall times and machine-specific paths.
    let mut left = normalized_report(&a.out_dir.join("run_report.json"));
    let mut right = normalized_report(&b.out_dir.join("run_report.json"));
    for report in [&mut left, &mut right] {
        let obj = report.as_object_mut().unwrap();
        obj.remove("config");
        for input in obj["inputs"].as_array_mut().unwrap() {
            input["path"] = serde_json::json!("");
        }
    }
    assert_eq!(left, right);
}

#[test]
fn stage_subcommands_reproduce_the_full_run_byte_for_byte() {
    let full = write_fixture(&[]);
    let staged = write_fixture(&[]);
    let output = oatlas()
        .args(["run", "--config"])
        .arg(&full.config_path)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr_of(&output));
    for stage in ["aggregate", "indicators", "classify", "export"] {
        let output = oatlas()
            .args([stage, "--config"])
            .arg(&staged.config_path)
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "{stage}: {}",
            stderr_of(&output)
        );
    }
    for entry in fs::read_dir(&full.out_dir).unwrap() {
        let name = entry.unwrap().file_name().to_string_lossy().into_owned();
        if name == "run_report.json" {
            continue;
        }
        let left = fs::read(full.out_dir.join(&name)).unwrap();
        let right = fs::read(staged.out_dir.join(&name)).unwrap();
        assert_eq!(left, right, "{name} differs between run and stages");
    }
    assert!(staged.out_dir.join("ingest_report.json").is_file());
}

#[test]
fn output_dir_override_redirects_all_outputs() {
    let fixture = write_fixture(&[]);
    let other = fixture.out_dir.with_file_name("elsewhere");
    let output = oatlas()
        .args(["run", "--config"])
        .arg(&fixture.config_path)
        .arg("--output-dir")
        .arg(&other)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr_of(&output));
    assert!(other.join("run_report.json").is_file());
    assert!(!fixture.out_dir.exists());
}

#[test]
fn indicator_override_limits_computed_indicators() {
    let fixture = write_fixture(&[]);
    let output = oatlas()
        .args(["run", "--config"])
        .arg(&fixture.config_path)
        .args(["--indicators", "oa_share"])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr_of(&output));
    let indicators = fs::read_to_string(fixture.out_dir.join("indicators.csv")).unwrap();
    for line in indicators.lines().skip(1) {
        assert!(line.contains(",oa_share,"), "{line}");
    }
    assert!(!fixture.out_dir.join("choropleth_noai_country.csv").exists());
}

#[test]
fn missing_upstream_outputs_fail_with_the_stage_name() {
    let fixture = write_fixture(&[]);
    let output = oatlas()
        .args(["indicators", "--config"])
        .arg(&fixture.config_path)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = stderr_of(&output);
    assert!(stderr.contains("stage indicators failed"), "{stderr}");
    assert!(stderr.contains("aggregate stage"), "{stderr}");
    assert!(!fixture.out_dir.join("indicators.csv").exists());
}

#[test]
fn unreadable_scheme_aborts_without_leaving_outputs() {
    let fixture = write_fixture(&[]);
    let root = fixture.config_path.parent().unwrap();
    fs::write(root.join("scheme.csv"), "wrong,header\nS1,Science\n").unwrap();
    let output = oatlas()
        .args(["run", "--config"])
        .arg(&fixture.config_path)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("stage inputs failed"));
    let leftover: Vec<_> = fs::read_dir(&fixture.out_dir)
        .map(|entries| entries.filter_map(|e| e.ok()).collect())
        .unwrap_or_default();
    assert!(leftover.is_empty(), "partial outputs left: {leftover:?}");
}

#[test]
fn rejected_lines_are_audited_not_fatal() {
    let fixture = write_fixture(&[]);
    let root = fixture.config_path.parent().unwrap();
    let mut corpus = fixture_corpus();
    corpus.push_str("{\"broken\n");
    corpus.push_str(&format!(
        "{}\n",
        r#"{"pub_id":"X1","year":2001,"doc_type":"patent","oa_types":[],"subject_categories":["S1"],"affiliations":[{"country":"FR"}]}"#
    ));
    fs::write(root.join("corpus.jsonl"), corpus).unwrap();
    let output = oatlas()
        .args(["run", "--config"])
        .arg(&fixture.config_path)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr_of(&output));
    let report = read_report(&fixture.out_dir.join("run_report.json"));
    assert_eq!(report["ingest"]["total_lines"], 12);
    assert_eq!(report["ingest"]["accepted"], 10);
    assert_eq!(report["ingest"]["rejected"], 2);
    assert_eq!(report["ingest"]["rejected_by_reason"]["malformed"], 1);
    assert_eq!(report["ingest"]["rejected_by_reason"]["unknown_doc_type"], 1);
    let samples = report["ingest"]["sample_rejections"].as_array().unwrap();
    assert_eq!(samples.len(), 2);
}

#[test]
fn demo_config_runs_end_to_end() {
    let out = tempfile::tempdir().unwrap();
    let output = oatlas()
        .args(["run", "--config", "data/demo/config.json", "--output-dir"])
        .arg(out.path())
        .current_dir(workspace_root())
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr_of(&output));
    let report = read_report(&out.path().join("run_report.json"));
    assert_eq!(report["ingest"]["accepted"], 40);
    assert!(report["joins"].as_array().unwrap().len() > 0);
    assert!(out.path().join("choropleth_noai_nuts1_2015-2018.geojson").is_file());
}
