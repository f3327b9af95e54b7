use std::path::Path;

use surfab::cost::ReelSpec;
use surfab::io::{read_stl, write_stl_binary};
use surfab::mesh::{validate, FitTarget, TriMesh};
use surfab::mesher::GridSpec;
use surfab::pipeline::{run_plan, JobReport, Outputs, PlanBase, PrintPlan, Stage};
use surfab::vec3::Vec3;

fn write_cube(dir: &Path, name: &str, size: f64) -> String {
    let path = dir.join(name);
    let cube = TriMesh::cuboid(Vec3::zero(), Vec3::splat(size));
    std::fs::write(&path, write_stl_binary(&cube, "cube").unwrap()).unwrap();
    path.display().to_string()
}

fn prefix(dir: &Path, name: &str) -> Option<Outputs> {
    Some(Outputs::Prefix(dir.join(name).display().to_string()))
}

#[test]
fn direct_plan_writes_one_part() {
    let dir = tempfile::tempdir().unwrap();
    let plan = PrintPlan {
        source: Some("helix".into()),
        input: Some(write_cube(dir.path(), "helix.stl", 60.0)),
        outputs: prefix(dir.path(), "helix"),
        ..PrintPlan::default()
    };
    let job = run_plan(&plan, None, &ReelSpec::default()).unwrap();
    assert_eq!(job.parts.len(), 1);
    let part = &job.parts[0];
    assert!(part.path.ends_with("helix.stl"));
    assert!((part.extent_mm[0] - 120.0).abs() < 1e-3);
    assert!(part.watertight && part.within_build_volume);
    assert!(job.total_cost_eur > 0.0);
}

#[test]
fn halves_conserve_volume_and_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let plan = PrintPlan {
        expr: Some("x^2 + y^2 + z^2 - 1".into()),
        bounds: Some([-1.3, 1.3]),
        resolution: Some(32),
        target_size_mm: Some(FitTarget::Longest(150.0)),
        recenter: Some(true),
        split_planes: Some(vec![[0.0, 0.0, 1.0, 0.0]]),
        outputs: prefix(dir.path(), "ball"),
        ..PrintPlan::default()
    };
    let job = run_plan(&plan, None, &ReelSpec::default()).unwrap();
    assert_eq!(job.parts.len(), 2);
    let sum: f64 = job.parts.iter().map(|p| p.volume_mm3).sum();
    assert!((sum / job.pre_split_volume_mm3 - 1.0).abs() < 1e-6);
    assert!(job.parts.iter().all(|p| p.watertight && p.connected_components == 1));
    assert!(job.parts[0].bbox_max_mm[2] <= 1e-9 && job.parts[1].bbox_min_mm[2] >= -1e-9);

    let first: Vec<Vec<u8>> = job.parts.iter().map(|p| std::fs::read(&p.path).unwrap()).collect();
    let again = run_plan(&plan, None, &ReelSpec::default()).unwrap();
    let second: Vec<Vec<u8>> = again.parts.iter().map(|p| std::fs::read(&p.path).unwrap()).collect();
    assert_eq!(first, second);
    assert_eq!(job, with_timing_of(again, &job));
}

/// Reports carry the meshing time, which differs between runs.
fn with_timing_of(mut job: JobReport, like: &JobReport) -> JobReport {
    if let (Some(a), Some(b)) = (job.mesh_job.as_mut(), like.mesh_job.as_ref()) {
        a.elapsed = b.elapsed;
    }
    job
}

#[test]
fn five_part_plan_fits_build_volume() {
    let dir = tempfile::tempdir().unwrap();
    let plan = PrintPlan {
        source: Some("spacecurveincube".into()),
        input: Some(write_cube(dir.path(), "scic.stl", 206.0)),
        outputs: prefix(dir.path(), "scic"),
        ..PrintPlan::default()
    };
    let job = run_plan(&plan, None, &ReelSpec::default()).unwrap();
    assert_eq!(job.parts.len(), 5);
    for (k, part) in job.parts.iter().enumerate() {
        assert!(part.path.ends_with(&format!("scic_part{}.stl", k + 1)));
        assert!(part.within_build_volume && part.watertight);
        assert!((part.extent_mm[2] - 36.0).abs() < 1e-3);
    }
    // The whole object was larger than the printer before it was cut.
    assert!(job.warnings.is_empty(), "{:?}", job.warnings);
}

#[test]
fn strict_plan_rejects_oversized_object() {
    let dir = tempfile::tempdir().unwrap();
    let plan = PrintPlan {
        input: Some(write_cube(dir.path(), "source.stl", 206.0)),
        strict: Some(true),
        outputs: prefix(dir.path(), "big"),
        ..PrintPlan::default()
    };
    let err = run_plan(&plan, None, &ReelSpec::default()).unwrap_err();
    assert_eq!(err.stage, Stage::BuildVolume);
    assert!(!dir.path().join("big.stl").exists());

    let lenient = PrintPlan { strict: None, ..plan };
    let job = run_plan(&lenient, None, &ReelSpec::default()).unwrap();
    assert!(job.parts[0].build_volume_override);
    assert!(!job.warnings.is_empty());
}

#[test]
fn failed_write_removes_earlier_parts() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, b"not a directory").unwrap();
    let first = dir.path().join("lower.stl");
    let plan = PrintPlan {
        input: Some(write_cube(dir.path(), "cube.stl", 10.0)),
        split_planes: Some(vec![[0.0, 0.0, 1.0, 5.0]]),
        outputs: Some(Outputs::Paths(vec![
            first.display().to_string(),
            blocker.join("upper.stl").display().to_string(),
        ])),
        ..PrintPlan::default()
    };
    let err = run_plan(&plan, None, &ReelSpec::default()).unwrap_err();
    assert_eq!(err.stage, Stage::Write);
    assert!(!first.exists());
}

#[test]
fn support_base_joins_object() {
    let dir = tempfile::tempdir().unwrap();
    let plan = PrintPlan {
        source: Some("lawson".into()),
        input: Some(write_cube(dir.path(), "lawson.stl", 10.0)),
        outputs: prefix(dir.path(), "lawson"),
        ..PrintPlan::default()
    };
    let job = run_plan(&plan, None, &ReelSpec::default()).unwrap();
    assert_eq!(job.parts.len(), 1);
    let part = &job.parts[0];
    // Base and object overlap by the embed depth, as two shells.
    assert_eq!(part.connected_components, 2);
    assert!((part.bbox_min_mm[2]).abs() < 1e-9);
    assert!((part.extent_mm[2] - (192.0 + 3.0)).abs() < 1e-3);
    let written: TriMesh<f64> = read_stl(&std::fs::read(&part.path).unwrap()).unwrap();
    assert!(validate(&written).watertight);
}

#[test]
fn base_from_toml_plan() {
    let dir = tempfile::tempdir().unwrap();
    write_cube(dir.path(), "cube.stl", 10.0);
    let text = r#"
        input = "cube.stl"
        base = { shape = "box", dims = [30, 20], height = 2, embed = 0.5 }
        outputs = "out/cube_on_base"
    "#;
    let plan_path = dir.path().join("plan.toml");
    std::fs::write(&plan_path, text).unwrap();
    let plan = PrintPlan::from_file(&plan_path).unwrap();
    assert_eq!(
        plan.base,
        Some(PlanBase {
            shape: "box".into(),
            dims: vec![30.0, 20.0],
            height: 2.0,
            embed: 0.5
        })
    );
    let job = run_plan(&plan, None, &ReelSpec::default()).unwrap();
    assert!(Path::new(&job.parts[0].path).starts_with(dir.path().join("out")));
    assert!((job.parts[0].volume_mm3 - (1000.0 + 30.0 * 20.0 * 2.0)).abs() < 1e-6);
}

#[test]
fn barth_plan_runs_on_coarse_grid() {
    let dir = tempfile::tempdir().unwrap();
    let plan = PrintPlan {
        source: Some("barth".into()),
        outputs: prefix(dir.path(), "barth"),
        ..PrintPlan::default()
    };
    let grid = GridSpec::cube(-2.2, 2.2, 64).unwrap();
    let job = run_plan(&plan, Some(&grid), &ReelSpec::default()).unwrap();
    assert_eq!(job.parts.len(), 2);
    let wall = job.wall_thickness_mm.unwrap();
    assert!((wall / 2.1 - 1.0).abs() < 2e-3, "{wall}");
    for part in &job.parts {
        assert!(part.watertight && part.within_build_volume, "{part:?}");
    }
    let longest = (0..3)
        .map(|a| job.parts[0].bbox_max_mm[a].max(job.parts[1].bbox_max_mm[a]) - job.parts[0].bbox_min_mm[a].min(job.parts[1].bbox_min_mm[a]))
        .fold(0.0, f64::max);
    assert!((longest - 200.0).abs() < 1e-3);
}

#[test]
fn shipped_plans_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../plans");
    let mut count = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let plan = PrintPlan::from_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!(plan.outputs.is_some(), "{}", path.display());
            count += 1;
        }
    }
    assert!(count >= 5);
}
