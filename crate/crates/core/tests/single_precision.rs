use surfab::cost::{object_cost, reel_length, ReelSpec};
use surfab::field::ScalarField;
use surfab::mesh::{validate, TriMesh};
use surfab::mesher::{mesh_isosurface, GridSpec};
use surfab::ops::{split, SplitPlane};
use surfab::vec3::Vec3;

#[test]
fn sphere_pipeline_in_f32() {
    let field = ScalarField::<f32>::sphere(Vec3::zero(), 0.8).unwrap();
    let grid = GridSpec::<f32>::cube(-1.0, 1.0, 32).unwrap();
    let (mesh, _) = mesh_isosurface(&field, &grid, None).unwrap();
    let r = validate(&mesh);
    assert!(r.watertight);
    assert_eq!(r.euler_characteristic, 2);
    let exact = 4.0 / 3.0 * std::f32::consts::PI * 0.512;
    assert!((mesh.signed_volume() / exact - 1.0).abs() < 0.01);

    let (lo, hi) = split(&mesh, &SplitPlane::z(0.1)).unwrap();
    assert!(validate(&lo).watertight && validate(&hi).watertight);
    let sum = lo.signed_volume() + hi.signed_volume();
    assert!((sum / mesh.signed_volume() - 1.0).abs() < 1e-5);
}

#[test]
fn f32_and_f64_agree() {
    let p = Vec3::new(0.3f32, -0.7, 1.1);
    let f32_value = ScalarField::<f32>::barth().eval(p);
    let f64_value = ScalarField::<f64>::barth().eval(p.cast());
    assert!((f32_value as f64 - f64_value).abs() < 1e-5);

    let reel32 = ReelSpec::<f32>::default();
    assert!((reel_length(&reel32) as f64 - 114.0895649437).abs() < 1e-4);
    assert_eq!(object_cost(19.52f32, &reel32).unwrap(), 4.28);

    let cube: TriMesh<f32> = TriMesh::<f64>::cuboid(Vec3::zero(), Vec3::splat(2.0)).cast();
    assert_eq!(cube.signed_volume(), 8.0);
}
