use std::collections::HashMap;

use serde::Serialize;

use super::{Aabb, TriMesh};
use crate::scalar::Real;

/// Combinatorial and geometric health of a mesh.
///
/// Problems are report contents, never errors: the pipeline regenerates from
/// fields instead of repairing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityReport<T> {
    /// Nonempty, every edge used by exactly two triangles in opposite
    /// directions, all vertices finite.
    pub watertight: bool,
    /// No directed edge is used by more than one triangle.
    pub consistent_orientation: bool,
    pub degenerate_triangle_count: usize,
    pub connected_component_count: usize,
    /// More than one connected shell (e.g. an object concatenated with its
    /// support base).
    pub multi_shell: bool,
    pub boundary_edge_count: usize,
    pub non_manifold_edge_count: usize,
    /// NaN or infinite coordinates, typically from a field evaluated outside
    /// its domain.
    pub non_finite_vertex_count: usize,
    /// V − E + F over referenced vertices.
    pub euler_characteristic: i64,
    pub triangle_count: usize,
    pub bounding_box: Option<Aabb<T>>,
}

#[derive(Default, Clone, Copy)]
struct EdgeUse {
    forward: u32,
    backward: u32,
}

pub fn validate<T: Real>(mesh: &TriMesh<T>) -> ValidityReport<T> {
    let tris = mesh.triangles();
    let mut edges: HashMap<(u32, u32), EdgeUse> = HashMap::with_capacity(tris.len() * 3 / 2 + 1);
    for tri in tris {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let e = edges.entry((a.min(b), a.max(b))).or_default();
            if a < b {
                e.forward += 1;
            } else {
                e.backward += 1;
            }
        }
    }

    let mut boundary = 0;
    let mut non_manifold = 0;
    let mut consistent = true;
    let mut paired = true;
    for e in edges.values() {
        match e.forward + e.backward {
            1 => boundary += 1,
            2 => {}
            _ => non_manifold += 1,
        }
        if e.forward > 1 || e.backward > 1 {
            consistent = false;
        }
        if e.forward != 1 || e.backward != 1 {
            paired = false;
        }
    }

    let degenerate = (0..tris.len())
        .filter(|&t| {
            let [a, b, c] = mesh.corners(t);
            (b - a).cross(c - a).norm_squared() == T::zero()
        })
        .count();

    let non_finite = mesh.vertices().iter().filter(|v| !v.is_finite()).count();

    // Union-find over vertices connected by triangles.
    let n = mesh.vertices().len();
    let mut parent: Vec<u32> = (0..n as u32).collect();
    fn find(parent: &mut [u32], mut i: u32) -> u32 {
        while parent[i as usize] != i {
            parent[i as usize] = parent[parent[i as usize] as usize];
            i = parent[i as usize];
        }
        i
    }
    let mut used = vec![false; n];
    for tri in tris {
        for &i in tri {
            used[i as usize] = true;
        }
        for k in 1..3 {
            let (ra, rb) = (find(&mut parent, tri[0]), find(&mut parent, tri[k]));
            if ra != rb {
                parent[ra.max(rb) as usize] = ra.min(rb);
            }
        }
    }
    let mut components = 0;
    let mut referenced = 0i64;
    for (i, &u) in used.iter().enumerate().take(n) {
        if u {
            referenced += 1;
            if find(&mut parent, i as u32) == i as u32 {
                components += 1;
            }
        }
    }

    ValidityReport {
        watertight: !tris.is_empty() && paired && non_finite == 0,
        consistent_orientation: consistent,
        degenerate_triangle_count: degenerate,
        connected_component_count: components,
        multi_shell: components > 1,
        boundary_edge_count: boundary,
        non_manifold_edge_count: non_manifold,
        non_finite_vertex_count: non_finite,
        euler_characteristic: referenced - edges.len() as i64 + tris.len() as i64,
        triangle_count: tris.len(),
        bounding_box: mesh.bbox(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec3::Vec3;

    fn cube(at: f64) -> TriMesh<f64> {
        TriMesh::cuboid(Vec3::splat(at), Vec3::splat(at + 1.0))
    }

    #[test]
    fn closed_cube_is_valid() {
        let r = validate(&cube(0.0));
        assert!(r.watertight);
        assert!(r.consistent_orientation);
        assert_eq!(r.connected_component_count, 1);
        assert_eq!(r.euler_characteristic, 2);
        assert!(!r.multi_shell);
    }

    #[test]
    fn deleted_triangle_breaks_watertightness() {
        let (v, mut t) = cube(0.0).into_parts();
        t.pop();
        let r = validate(&TriMesh::new(v, t).unwrap());
        assert!(!r.watertight);
        assert_eq!(r.boundary_edge_count, 3);
    }

    #[test]
    fn two_disjoint_cubes_are_two_components() {
        let r = validate(&cube(0.0).concat(&cube(5.0)));
        assert_eq!(r.connected_component_count, 2);
        assert!(r.multi_shell);
        assert!(r.watertight);
    }

    #[test]
    fn flipped_triangle_is_inconsistent() {
        let (v, mut t) = cube(0.0).into_parts();
        t[0] = [t[0][0], t[0][2], t[0][1]];
        let r = validate(&TriMesh::new(v, t).unwrap());
        assert!(!r.consistent_orientation);
        assert!(!r.watertight);
    }

    #[test]
    fn empty_mesh_is_not_watertight() {
        let r = validate(&TriMesh::<f64>::empty());
        assert!(!r.watertight);
        assert_eq!(r.connected_component_count, 0);
    }

    #[test]
    fn nan_vertex_is_flagged() {
        let m = cube(0.0).map_vertices(|v| if v == Vec3::splat(1.0) { Vec3::splat(f64::NAN) } else { v });
        let r = validate(&m);
        assert_eq!(r.non_finite_vertex_count, 1);
        assert!(!r.watertight);
    }
}
