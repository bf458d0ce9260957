use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic")
}

/// The bundled manifest with absolute input paths and a smaller workload.
fn manifest(dir: &Path, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let text = fs::read_to_string(data_dir().join("manifest.json")).unwrap();
    let mut m: Value = serde_json::from_str(&text).unwrap();
    for (_, p) in m["paths"].as_object_mut().unwrap() {
        *p = json!(data_dir().join(p.as_str().unwrap()));
    }
    m["output_dir"] = json!(dir.join("out"));
    m["zoning"]["restarts"] = json!(3);
    m["zoning"]["elbow_k_max"] = json!(2);
    m["simulation"]["months"] = json!(2000);
    edit(&mut m);
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&m).unwrap()).unwrap();
    path
}

fn sar(args: &[&str], manifest: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sar-locate"))
        .args(args)
        .arg("--manifest")
        .arg(manifest)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn prepare(m: &Path) {
    for stage in ["ingest", "zone", "fit", "simulate"] {
        let o = sar(&[stage], m);
        assert!(o.status.success(), "{stage}: {}", stderr(&o));
    }
}

#[test]
fn ingest_reports_cleaning_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("id,timestamp,lat,lon,subtype,organization,maritime_sorties,aero_sorties,activity_count\n");
    for i in 0..4315 {
        let (lat, lon, subtype) = match i {
            0..90 => ("21.300000", "-157.900000", "MEDICO"),
            90..128 => ("", "", "OVERDUE"),
            128..366 => ("50.000000", "-157.900000", "OVERDUE"),
            _ => ("21.300000", "-157.900000", "OVERDUE"),
        };
        let day = 1 + i % 28;
        writeln!(csv, "E{i},2012-03-{day:02}T12:00:00Z,{lat},{lon},{subtype},SectorHonolulu,1,0,1").unwrap();
    }
    let events = dir.path().join("events.csv");
    fs::write(&events, csv).unwrap();
    let m = manifest(dir.path(), |m| m["paths"]["events"] = json!(events));
    let o = sar(&["ingest"], &m);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    for (label, n) in [
        ("Initial Data Set", "4315"),
        ("Removed MEDICO", "90"),
        ("Removed missing GPS", "38"),
        ("Removed outside region", "238"),
        ("Final Data Set", "3949"),
        ("Retained", "91.52%"),
    ] {
        let line = out.lines().find(|l| l.starts_with(label)).unwrap();
        assert_eq!(line.split_whitespace().last(), Some(n), "{line}");
    }
}

#[test]
fn missing_events_file_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere.csv");
    let m = manifest(dir.path(), |m| m["paths"]["events"] = json!(missing));
    let o = sar(&["ingest"], &m);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nowhere.csv"), "{}", stderr(&o));
}

#[test]
fn single_weight_preset_gives_one_point_front() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(dir.path(), |m| m["solve"]["preset"] = json!("scenario2"));
    prepare(&m);
    let o = sar(&["pareto"], &m);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("1 non-dominated points"), "{}", stdout(&o));
}

#[test]
fn uncoverable_demand_exits_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let fleet: Vec<Value> = serde_json::from_str(&fs::read_to_string(data_dir().join("fleet.json")).unwrap()).unwrap();
    let fleet: Vec<Value> = fleet.into_iter().filter(|a| a["category"] != "Airplane").collect();
    let fleet_path = dir.path().join("fleet.json");
    fs::write(&fleet_path, serde_json::to_string(&fleet).unwrap()).unwrap();
    let m = manifest(dir.path(), |m| m["paths"]["fleet"] = json!(fleet_path));
    prepare(&m);
    let o = sar(&["solve"], &m);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn bad_seed_argument_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(dir.path(), |_| {});
    let o = Command::new(env!("CARGO_BIN_EXE_sar-locate"))
        .args(["ingest", "--seed", "minus-one", "--manifest"])
        .arg(&m)
        .output()
        .unwrap();
    assert!(!o.status.success());
}
