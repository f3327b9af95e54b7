use surfab::field::ScalarField;
use surfab::mesh::validate;
use surfab::mesher::{mesh_isosurface, vertex_residuals, GridSpec, MesherError};
use surfab::vec3::Vec3;

fn sphere_residual(n: usize) -> f64 {
    let field = ScalarField::sphere(Vec3::zero(), 0.8).unwrap();
    let grid = GridSpec::cube(-1.0, 1.0, n).unwrap();
    let (mesh, _) = mesh_isosurface(&field, &grid, None).unwrap();
    vertex_residuals(&field, &mesh).max
}

#[test]
fn sphere_residual_is_small_and_converges() {
    let r32 = sphere_residual(32);
    let r64 = sphere_residual(64);
    let r128 = sphere_residual(128);
    assert!(r64 <= 1e-2, "{r64}");
    assert!(r32 / r64 >= 3.0, "{r32} / {r64}");
    assert!(r64 / r128 >= 3.0, "{r64} / {r128}");
}

#[test]
fn planar_field_has_no_residual() {
    let field: ScalarField<f64> = ScalarField::parse("0.3*x - 0.7*y + 0.2*z - 0.053").unwrap();
    let clip = ScalarField::sphere(Vec3::zero(), 0.9).unwrap();
    let grid = GridSpec::cube(-1.0, 1.0, 20).unwrap();
    let (mesh, _) = mesh_isosurface(&field, &grid, Some(&clip)).unwrap();
    // Away from the clip sphere every edge sees the plane alone.
    let on_plane: Vec<_> = mesh.vertices().iter().filter(|v| v.norm() < 0.7).collect();
    assert!(!on_plane.is_empty());
    for v in on_plane {
        assert!(field.eval(*v).abs() < 1e-15, "{v:?} {}", field.eval(*v));
    }
}

#[test]
fn barth_clipped_mesh_is_closed() {
    let grid = GridSpec::cube(-2.2, 2.2, 48).unwrap();
    let clip = ScalarField::sphere(Vec3::zero(), 2.0).unwrap();
    let (mesh, report) = mesh_isosurface(&ScalarField::barth(), &grid, Some(&clip)).unwrap();
    let r = validate(&mesh);
    assert!(r.watertight && r.non_manifold_edge_count == 0);
    assert_eq!(report.triangle_count, mesh.triangle_count());
    assert_eq!(report.cell_count, 48 * 48 * 48);
    assert!(mesh.signed_volume() > 0.0);
}

#[test]
fn unclipped_barth_touches_the_grid() {
    let grid = GridSpec::cube(-2.2, 2.2, 16).unwrap();
    let err = mesh_isosurface(&ScalarField::<f64>::barth(), &grid, None).unwrap_err();
    assert!(matches!(err, MesherError::BoundaryContact { .. }), "{err}");
}

#[test]
fn wall_thickness_is_close_to_requested() {
    // A shell around the unit sphere of thickness 0.2 spans radii 0.9..1.1.
    let field = ScalarField::sphere(Vec3::zero(), 1.0).unwrap().shell(0.2).unwrap();
    let grid = GridSpec::cube(-1.3, 1.3, 64).unwrap();
    let (mesh, _) = mesh_isosurface(&field, &grid, None).unwrap();
    let r = validate(&mesh);
    assert!(r.watertight);
    assert_eq!(r.connected_component_count, 2);
    let expected = 4.0 / 3.0 * std::f64::consts::PI * (1.1f64.powi(3) - 0.9f64.powi(3));
    assert!((mesh.signed_volume() / expected - 1.0).abs() < 0.01);
}
