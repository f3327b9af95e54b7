use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::cap::{triangulate_loops, LoopPoint};
use crate::mesh::{validate, TriMesh, ValidityReport};
use crate::scalar::Real;
use crate::vec3::Vec3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplitError<T> {
    #[error("split plane normal must be nonzero and finite")]
    InvalidPlane,
    #[error(
        "input mesh is not watertight ({} boundary edges, {} non-manifold edges, consistent orientation: {})",
        report.boundary_edge_count,
        report.non_manifold_edge_count,
        report.consistent_orientation
    )]
    NotWatertight { report: Box<ValidityReport<T>> },
    #[error("could not triangulate a cross-section loop of {} vertices", loop_vertices.len())]
    CapTriangulation { loop_vertices: Vec<Vec3<T>> },
}

/// The plane `normal · p = offset` with unit normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitPlane<T> {
    normal: Vec3<T>,
    offset: T,
}

impl<T: Real> SplitPlane<T> {
    /// Normalizes `normal`; `offset` is in the units of the normalized plane.
    pub fn new(normal: Vec3<T>, offset: T) -> Result<Self, SplitError<T>> {
        let unit = normal
            .normalized()
            .filter(|n| n.is_finite() && offset.is_finite())
            .ok_or(SplitError::InvalidPlane)?;
        Ok(Self { normal: unit, offset })
    }

    /// Horizontal plane `z = height`.
    pub fn z(height: T) -> Self {
        Self {
            normal: Vec3::new(T::zero(), T::zero(), T::one()),
            offset: height,
        }
    }

    pub fn normal(&self) -> Vec3<T> {
        self.normal
    }

    pub fn offset(&self) -> T {
        self.offset
    }

    pub fn distance(&self, p: Vec3<T>) -> T {
        self.normal.dot(p) - self.offset
    }
}

/// Cuts a closed mesh into the parts below (`n·p ≤ offset`) and above the
/// plane, each closed by a planar cap. A side with no triangles is empty.
pub fn split<T: Real>(mesh: &TriMesh<T>, plane: &SplitPlane<T>) -> Result<(TriMesh<T>, TriMesh<T>), SplitError<T>> {
    let report = validate(mesh);
    if !(report.watertight && report.consistent_orientation) {
        return Err(SplitError::NotWatertight { report: Box::new(report) });
    }

    let verts = mesh.vertices();
    let dist: Vec<T> = verts.iter().map(|&v| plane.distance(v)).collect();
    let below = |i: u32| dist[i as usize] <= T::zero();

    let mut positions: Vec<Vec3<T>> = verts.to_vec();
    let mut cuts: HashMap<(u32, u32), u32> = HashMap::new();
    let mut cut = |a: u32, b: u32, positions: &mut Vec<Vec3<T>>| -> u32 {
        // `a` below, `b` above; a vertex on the plane is its own cut point.
        if dist[a as usize] == T::zero() {
            return a;
        }
        *cuts.entry((a, b)).or_insert_with(|| {
            let (da, db) = (dist[a as usize], dist[b as usize]);
            let (pa, pb) = (verts[a as usize], verts[b as usize]);
            positions.push(pa + (pb - pa) * (da / (da - db)));
            (positions.len() - 1) as u32
        })
    };

    let mut lower: Vec<[u32; 3]> = Vec::new();
    let mut upper: Vec<[u32; 3]> = Vec::new();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let classes = tri.map(below);
        if classes.iter().all(|&c| c) {
            let on_plane = tri.iter().all(|&i| dist[i as usize] == T::zero());
            if on_plane && mesh.face_normal(t).dot(plane.normal) < T::zero() {
                // A face lying in the plane bounds the solid above it.
                upper.push(*tri);
            } else {
                lower.push(*tri);
            }
            continue;
        }
        if classes.iter().all(|&c| !c) {
            upper.push(*tri);
            continue;
        }
        let mut lo = Vec::with_capacity(4);
        let mut hi = Vec::with_capacity(4);
        for k in 0..3 {
            let (p, q) = (tri[k], tri[(k + 1) % 3]);
            if classes[k] {
                lo.push(p);
            } else {
                hi.push(p);
            }
            if classes[k] != classes[(k + 1) % 3] {
                let c = if classes[k] { cut(p, q, &mut positions) } else { cut(q, p, &mut positions) };
                lo.push(c);
                hi.push(c);
            }
        }
        fan(&lo, &mut lower);
        fan(&hi, &mut upper);
    }

    if upper.is_empty() {
        return Ok((mesh.clone(), TriMesh::empty()));
    }
    if lower.is_empty() {
        return Ok((TriMesh::empty(), mesh.clone()));
    }

    let cap = cap_triangles(&positions, &lower, plane)?;
    lower.extend_from_slice(&cap);
    upper.extend(cap.iter().map(|t| [t[0], t[2], t[1]]));
    Ok((compact(&positions, &lower), compact(&positions, &upper)))
}

/// Fan-triangulates a convex clip polygon after dropping repeated indices.
fn fan(poly: &[u32], out: &mut Vec<[u32; 3]>) {
    let mut p: Vec<u32> = Vec::with_capacity(poly.len());
    for &i in poly {
        if p.last() != Some(&i) {
            p.push(i);
        }
    }
    while p.len() > 1 && p.first() == p.last() {
        p.pop();
    }
    for k in 1..p.len().saturating_sub(1) {
        out.push([p[0], p[k], p[k + 1]]);
    }
}

/// Cap for the lower part: fills its boundary loops with normal `+n`.
fn cap_triangles<T: Real>(
    positions: &[Vec3<T>],
    lower: &[[u32; 3]],
    plane: &SplitPlane<T>,
) -> Result<Vec<[u32; 3]>, SplitError<T>> {
    // Directed boundary edges: used once, reverse unused.
    let mut count: HashMap<(u32, u32), i32> = HashMap::new();
    for t in lower {
        for k in 0..3 {
            *count.entry((t[k], t[(k + 1) % 3])).or_insert(0) += 1;
        }
    }
    let mut boundary: Vec<(u32, u32)> = count
        .iter()
        .filter(|(&(a, b), &c)| c > count.get(&(b, a)).copied().unwrap_or(0))
        .map(|(&e, _)| e)
        .collect();
    boundary.sort_unstable();
    if boundary.is_empty() {
        return Ok(Vec::new());
    }

    let n = plane.normal.cast::<f64>();
    let u = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
        Vec3::new(1.0, 0.0, 0.0)
    } else if n.y.abs() <= n.z.abs() {
        Vec3::new(0.0, 1.0, 0.0)
    } else {
        Vec3::new(0.0, 0.0, 1.0)
    };
    let u = (u - n * n.dot(u)).normalized().expect("u is not parallel to n");
    let v = n.cross(u);
    let project = |i: u32| {
        let p = positions[i as usize].cast::<f64>();
        [p.dot(u), p.dot(v)]
    };

    let mut outgoing: HashMap<u32, Vec<u32>> = HashMap::new();
    for &(a, b) in &boundary {
        outgoing.entry(a).or_default().push(b);
    }
    let mut loops = Vec::new();
    for &(start, first) in &boundary {
        if !outgoing.get(&start).is_some_and(|o| o.contains(&first)) {
            continue;
        }
        let mut chain = vec![start];
        let (mut prev, mut at) = (start, first);
        take(&mut outgoing, start, first);
        while at != start {
            chain.push(at);
            let options = outgoing.get(&at).cloned().unwrap_or_default();
            let nxt = match options.len() {
                0 => break,
                1 => options[0],
                // Pinch vertex: keep the loop locally simple by taking the
                // sharpest turn.
                _ => *options
                    .iter()
                    .min_by(|&&x, &&y| {
                        turn_angle(project(prev), project(at), project(x))
                            .total_cmp(&turn_angle(project(prev), project(at), project(y)))
                    })
                    .expect("options nonempty"),
            };
            take(&mut outgoing, at, nxt);
            prev = at;
            at = nxt;
        }
        // The cap traverses the part's boundary in reverse.
        chain.reverse();
        loops.push(chain.into_iter().map(|i| LoopPoint { index: i, uv: project(i) }).collect::<Vec<_>>());
    }

    triangulate_loops(loops).map_err(|failed| SplitError::CapTriangulation {
        loop_vertices: failed.iter().map(|p| positions[p.index as usize]).collect(),
    })
}

fn take(outgoing: &mut HashMap<u32, Vec<u32>>, a: u32, b: u32) {
    if let Some(o) = outgoing.get_mut(&a) {
        if let Some(k) = o.iter().position(|&x| x == b) {
            o.remove(k);
        }
    }
}

/// Signed turn from direction (a→b) to (b→c), in (−π, π].
fn turn_angle(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let d1 = [b[0] - a[0], b[1] - a[1]];
    let d2 = [c[0] - b[0], c[1] - b[1]];
    (d1[0] * d2[1] - d1[1] * d2[0]).atan2(d1[0] * d2[0] + d1[1] * d2[1])
}

/// Keeps only referenced vertices, numbered by first use.
fn compact<T: Real>(positions: &[Vec3<T>], tris: &[[u32; 3]]) -> TriMesh<T> {
    let mut remap: HashMap<u32, u32> = HashMap::new();
    let mut verts = Vec::new();
    let out = tris
        .iter()
        .map(|t| {
            t.map(|i| {
                *remap.entry(i).or_insert_with(|| {
                    verts.push(positions[i as usize]);
                    (verts.len() - 1) as u32
                })
            })
        })
        .collect();
    TriMesh::from_raw(verts, out)
}

/// Applies the planes in order to every part; below parts come first at each
/// level and empty parts are dropped.
pub fn split_multi<T: Real>(mesh: &TriMesh<T>, planes: &[SplitPlane<T>]) -> Result<Vec<TriMesh<T>>, SplitError<T>> {
    let mut parts = vec![mesh.clone()];
    for plane in planes {
        let mut next = Vec::with_capacity(parts.len() + 1);
        for part in &parts {
            let (lo, hi) = split(part, plane)?;
            next.extend([lo, hi].into_iter().filter(|m| !m.is_empty()));
        }
        parts = next;
    }
    Ok(parts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_cube() -> TriMesh<f64> {
        TriMesh::cuboid(Vec3::zero(), Vec3::splat(1.0))
    }

    fn assert_closed(m: &TriMesh<f64>) {
        let r = validate(m);
        assert!(r.watertight && r.consistent_orientation, "{r:?}");
    }

    #[test]
    fn cube_halves() {
        let (lo, hi) = split(&unit_cube(), &SplitPlane::z(0.5)).unwrap();
        for part in [&lo, &hi] {
            assert_closed(part);
            assert!((part.signed_volume() - 0.5).abs() < 1e-15);
        }
        assert!(lo.bbox().unwrap().max.z <= 0.5);
        assert!(hi.bbox().unwrap().min.z >= 0.5);
    }

    #[test]
    fn cap_normals_face_the_cut() {
        let (lo, hi) = split(&unit_cube(), &SplitPlane::z(0.5)).unwrap();
        let cap_normals = |m: &TriMesh<f64>| {
            (0..m.triangle_count())
                .filter(|&t| m.corners(t).iter().all(|p| p.z == 0.5))
                .map(|t| m.face_normal(t).z)
                .collect::<Vec<_>>()
        };
        assert!(cap_normals(&lo).iter().all(|&z| z > 0.99));
        assert!(cap_normals(&hi).iter().all(|&z| z < -0.99));
        assert!(!cap_normals(&lo).is_empty());
    }

    #[test]
    fn one_sided_splits() {
        let cube = unit_cube();
        let (lo, hi) = split(&cube, &SplitPlane::z(2.0)).unwrap();
        assert_eq!(lo, cube);
        assert!(hi.is_empty());
        let (lo, hi) = split(&cube, &SplitPlane::z(-1.0)).unwrap();
        assert!(lo.is_empty());
        assert_eq!(hi, cube);
    }

    #[test]
    fn faces_on_the_plane_go_to_their_solid() {
        let cube = unit_cube();
        let (lo, hi) = split(&cube, &SplitPlane::z(1.0)).unwrap();
        assert_eq!(lo, cube);
        assert!(hi.is_empty());
        let (lo, hi) = split(&cube, &SplitPlane::z(0.0)).unwrap();
        assert!(lo.is_empty());
        assert_eq!(hi, cube);
    }

    #[test]
    fn oblique_plane_conserves_volume() {
        let plane = SplitPlane::new(Vec3::new(1.0, 2.0, 3.0), 0.9).unwrap();
        let (lo, hi) = split(&unit_cube(), &plane).unwrap();
        assert_closed(&lo);
        assert_closed(&hi);
        assert!((lo.signed_volume() + hi.signed_volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cube_slabs() {
        let planes: Vec<_> = [0.25, 0.5, 0.75].map(SplitPlane::z).to_vec();
        let parts = split_multi(&unit_cube(), &planes).unwrap();
        assert_eq!(parts.len(), 4);
        for (k, p) in parts.iter().enumerate() {
            assert_closed(p);
            assert!((p.signed_volume() - 0.25).abs() < 1e-14);
            assert!((p.bbox().unwrap().min.z - 0.25 * k as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_planes_is_identity() {
        let parts = split_multi(&unit_cube(), &[]).unwrap();
        assert_eq!(parts, vec![unit_cube()]);
    }

    #[test]
    fn open_mesh_rejected() {
        let (v, mut t) = unit_cube().into_parts();
        t.pop();
        let m = TriMesh::new(v, t).unwrap();
        assert!(matches!(split(&m, &SplitPlane::z(0.5)), Err(SplitError::NotWatertight { .. })));
    }

    #[test]
    fn zero_normal_rejected() {
        assert!(matches!(SplitPlane::new(Vec3::<f64>::zero(), 0.0), Err(SplitError::InvalidPlane)));
    }

    #[test]
    fn torus_section_has_a_hole() {
        // Square torus: box with a square hole in z, cut horizontally.
        let ring = frame();
        let (lo, hi) = split(&ring, &SplitPlane::z(0.5)).unwrap();
        assert_closed(&lo);
        assert_closed(&hi);
        assert!((lo.signed_volume() - 4.0).abs() < 1e-12);
        assert!((hi.signed_volume() - 4.0).abs() < 1e-12);
    }

    /// 3×3×1 slab with the middle unit column removed, built from faces.
    fn frame() -> TriMesh<f64> {
        let mut verts = Vec::new();
        for z in [0.0, 1.0] {
            for (x, y) in [(0.0, 0.0), (3.0, 0.0), (3.0, 3.0), (0.0, 3.0), (1.0, 1.0), (2.0, 1.0), (2.0, 2.0), (1.0, 2.0)] {
                verts.push(Vec3::new(x, y, z));
            }
        }
        let mut tris: Vec<[u32; 3]> = Vec::new();
        let quad = |t: &mut Vec<[u32; 3]>, a, b, c, d| {
            t.push([a, b, c]);
            t.push([a, c, d]);
        };
        for k in 0..4u32 {
            let (o0, o1, i0, i1) = (k, (k + 1) % 4, 4 + k, 4 + (k + 1) % 4);
            // bottom ring (normal −z), top ring (+z)
            quad(&mut tris, o0, i0, i1, o1);
            quad(&mut tris, 8 + o0, 8 + o1, 8 + i1, 8 + i0);
            // outer walls, inner walls
            quad(&mut tris, o0, o1, 8 + o1, 8 + o0);
            quad(&mut tris, i0, 8 + i0, 8 + i1, i1);
        }
        let m: TriMesh<f64> = TriMesh::new(verts, tris).unwrap();
        assert!((m.signed_volume() - 8.0).abs() < 1e-12);
        m
    }
}
