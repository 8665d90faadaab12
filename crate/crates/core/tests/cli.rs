use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chanflow::presets;
use chanflow::scenario::ScenarioFile;

fn chanflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chanflow"))
        .args(args)
        .env_remove("CHANFLOW_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn small_file(end_time: f64) -> String {
    format!(
        r#"{{
          "cross_sections": {{"r": [[0,1],[1,1]]}},
          "boundary_conditions": {{"wall": {{"kind": "wall"}}}},
          "nodes": [
            {{"kind": "boundary", "id": "a", "condition": "wall"}},
            {{"kind": "boundary", "id": "b", "condition": "wall"}}
          ],
          "links": [{{"id": "L", "from": "a", "to": "b",
            "uniform": {{"cells": 20, "length": 10, "bed_upstream": 0, "bed_downstream": 0, "cross_section": "r"}}}}],
          "scenario": {{"name": "small", "end_time": {end_time},
            "initial": {{"kind": "dam_break", "x_dam": 5, "level_upstream": 1, "level_downstream": 0.2}},
            "gauges": [{{"name": "g", "link": "L", "x": 2.5}}]}}
        }}"#
    )
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn zero_duration_writes_the_initial_profile_only() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = tmp.path().join("s.json");
    std::fs::write(&scenario, small_file(0.0)).unwrap();
    let out = tmp.path().join("out");
    let r = chanflow(&["run", scenario.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(files(&out), ["audit.csv", "gauges.csv", "profile_0.csv", "report.txt"]);
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("steps: 0"));
    let profile = std::fs::read_to_string(out.join("profile_0.csv")).unwrap();
    assert_eq!(profile.lines().count(), 21);
}

#[test]
fn runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = tmp.path().join("s.json");
    std::fs::write(&scenario, small_file(2.0)).unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = tmp.path().join(format!("out{k}"));
        let r = chanflow(&["run", scenario.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
        outputs.push(out);
    }
    let names = files(&outputs[0]);
    assert!(names.contains(&"profile_2.csv".to_string()));
    assert_eq!(names, files(&outputs[1]));
    for n in names {
        let a = std::fs::read(outputs[0].join(&n)).unwrap();
        let b = std::fs::read(outputs[1].join(&n)).unwrap();
        assert!(a == b, "{n} differs");
    }
}

#[test]
fn output_directory_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = tmp.path().join("s.json");
    std::fs::write(&scenario, small_file(0.0)).unwrap();
    let out = tmp.path().join("env_out");
    let r = Command::new(env!("CARGO_BIN_EXE_chanflow"))
        .args(["run", scenario.to_str().unwrap()])
        .env("CHANFLOW_OUTPUT_DIR", &out)
        .output()
        .unwrap();
    assert!(r.status.success());
    assert!(out.join("report.txt").exists());
}

#[test]
fn malformed_scenario_exits_2_with_field_path() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = tmp.path().join("bad.json");
    std::fs::write(&scenario, small_file(1.0).replace("\"level_upstream\"", "\"level_up\"")).unwrap();
    let r = chanflow(&["run", scenario.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("scenario.initial"), "{err}");
}

#[test]
fn unknown_names_exit_2() {
    assert_eq!(chanflow(&["check", "no-such-suite"]).status.code(), Some(2));
    assert_eq!(chanflow(&["run", "no_such_scenario"]).status.code(), Some(2));
}

#[test]
fn convergence_rejects_a_coarse_reference() {
    let r = chanflow(&["convergence", "perturbation", "--grids", "80,160", "--ref", "80"]);
    assert_eq!(r.status.code(), Some(2), "{}", String::from_utf8_lossy(&r.stderr));
}

#[test]
fn check_suite_reports_csv() {
    let r = chanflow(&["check", "geometry-oracle", "--seed", "7"]);
    assert!(r.status.success());
    let text = String::from_utf8_lossy(&r.stdout);
    assert!(text.starts_with("suite,check,measured,threshold,result"));
    assert!(text.contains("PASS"));
}

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

#[test]
fn checked_in_scenarios_match_the_presets() {
    let dir = scenario_dir();
    for (name, file) in presets::all() {
        let path = dir.join(format!("{name}.json"));
        let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let loaded = ScenarioFile::from_json(&text).unwrap();
        assert_eq!(loaded, file, "{name}.json is out of date; regenerate with `chanflow export`");
    }
    assert_eq!(files(&dir).len(), presets::all().len());
}

#[test]
fn export_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let r = chanflow(&["export", tmp.path().to_str().unwrap()]);
    assert!(r.status.success());
    for name in presets::NAMES {
        let a = std::fs::read_to_string(tmp.path().join(format!("{name}.json"))).unwrap();
        let b = std::fs::read_to_string(scenario_dir().join(format!("{name}.json"))).unwrap();
        assert_eq!(a, b, "{name}");
    }
}
