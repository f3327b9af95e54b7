use std::path::Path;
use std::process::{Command, Output};

fn surfab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_surfab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn cost_of_given_length() {
    let o = surfab(&["cost", "--length", "19.52"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("cost: 4.28 EUR"), "{}", stdout(&o));

    let o = surfab(&["--json", "cost", "--length", "13.23"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["object_cost"], 2.9);
    assert_eq!(v["provenance"], "measured-length");
}

#[test]
fn fixture_table_matches_recorded_costs() {
    for name in ["fixture", "paper"] {
        let o = surfab(&["--json", "cost", "--table", name]);
        assert_eq!(o.status.code(), Some(0));
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        let lines = v["lines"].as_array().unwrap();
        assert_eq!(lines.len(), 18);
        assert_eq!(lines[1]["cost_eur"], 4.28);
    }
    let csv = stdout(&surfab(&["cost", "--table", "fixture", "--csv"]));
    assert_eq!(csv.lines().count(), 19);
    assert!(csv.starts_with("name,author,size_mm,length_m,cost_eur"));
}

#[test]
fn reel_flags_change_the_rate() {
    let v: serde_json::Value =
        serde_json::from_slice(&surfab(&["--json", "cost", "--reel-cost", "50"]).stdout).unwrap();
    assert!((v["cost_per_meter"].as_f64().unwrap() - 2.0 * 0.2191260876).abs() < 1e-9);
}

#[test]
fn missing_input_is_a_processing_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = surfab(&["validate", "-i", path(&dir.path().join("missing.stl"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("No such file"));
    assert!(o.stdout.is_empty());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(surfab(&["cost", "--length", "1e3"]).status.code(), Some(1));
    assert_eq!(surfab(&["cost", "--bogus"]).status.code(), Some(1));
    assert_eq!(surfab(&["mesh", "--bounds", "-1,1", "--res", "8", "-o", "x.stl"]).status.code(), Some(1));
    assert_eq!(surfab(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(surfab(&["--version"]).status.code(), Some(0));
    assert_eq!(surfab(&["split", "--help"]).status.code(), Some(0));
}

#[test]
fn mesh_split_scale_base_chain() {
    let dir = tempfile::tempdir().unwrap();
    let ball = dir.path().join("ball.stl");
    let o = surfab(&[
        "--json", "mesh", "--expr", "x^2 + y^2 + z^2 - 1", "--bounds", "-1.2,1.2", "--res", "24", "-o", path(&ball),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["watertight"], true);
    assert_eq!(v["euler_characteristic"], 2);

    let prefix = dir.path().join("half");
    let o = surfab(&["--json", "split", "-i", path(&ball), "--plane", "0,0,1,-0.25", "-o", path(&prefix)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let parts: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(parts.as_array().unwrap().len(), 2);
    assert!(dir.path().join("half_part2.stl").exists());

    let big = dir.path().join("big.stl");
    assert_eq!(surfab(&["scale", "-i", path(&ball), "--fit", "150", "-o", path(&big)]).status.code(), Some(0));
    let based = dir.path().join("based.stl");
    let o = surfab(&[
        "base", "-i", path(&big), "--shape", "box", "--dims", "160,160", "--height", "3", "--embed", "1", "-o", path(&based),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&surfab(&["--json", "validate", "-i", path(&based)]).stdout).unwrap();
    assert_eq!(v["watertight"], true);
    assert_eq!(v["connected_component_count"], 2);
    let extent = v["bounding_box"]["max"]["z"].as_f64().unwrap() - v["bounding_box"]["min"]["z"].as_f64().unwrap();
    assert!((extent - 152.0).abs() < 1e-3, "{extent}");
}

#[test]
fn open_mesh_cannot_be_split() {
    let dir = tempfile::tempdir().unwrap();
    let x3d = dir.path().join("tri.x3d");
    std::fs::write(
        &x3d,
        r#"<X3D><Scene><Shape><IndexedFaceSet coordIndex="0 1 2 -1"><Coordinate point="0 0 0, 1 0 0, 0 1 0"/></IndexedFaceSet></Shape></Scene></X3D>"#,
    )
    .unwrap();
    let stl = dir.path().join("tri.stl");
    let o = surfab(&["convert", "-i", path(&x3d), "-o", path(&stl)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not watertight"));
    let o = surfab(&["split", "-i", path(&stl), "--plane", "1,0,0,0.5", "-o", path(&dir.path().join("p"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_plan_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("plan.toml"),
        r#"
        expr = "max(abs(x), max(abs(y), abs(z))) - 1"
        bounds = [-1.5, 1.5]
        resolution = 12
        target_size_mm = 100
        split_planes = [[0, 0, 1, 0]]
        outputs = "cube"
        "#,
    )
    .unwrap();
    let o = surfab(&["--json", "run", "-p", path(&dir.path().join("plan.toml"))]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["parts"].as_array().unwrap().len(), 2);
    assert!(dir.path().join("cube_part1.stl").exists());
    assert!(v["total_cost_eur"].as_f64().unwrap() > 0.0);
}
