//! The 256-case marching cubes triangle table.
//!
//! Cases are derived from the cube faces instead of being typed in. Each face
//! is walked counter-clockwise around its outward normal; every sign change
//! on a face edge is an entry (outside → inside) or an exit crossing, and
//! each entry is joined to the next exit. On an ambiguous face (two diagonal
//! inside corners) this separates the inside corners. The rule depends only
//! on a face's four corner signs, so two cells sharing a face always agree on
//! its segments and the extracted surface is closed. Chaining the face
//! segments yields one oriented polygon per surface component in the cell.
//! Polygons are triangulated without diagonals between two crossings on the
//! same cube face: the neighbouring cell could produce the same edge, which
//! would then be shared by four triangles.

use std::sync::OnceLock;

/// Corner offsets in the conventional order.
pub const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

/// Edge endpoints (corner indices); the first corner is the lower one along
/// the edge's axis.
pub const EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [3, 2],
    [0, 3],
    [1, 2],
    [4, 5],
    [7, 6],
    [4, 7],
    [5, 6],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// Faces as corner cycles, counter-clockwise seen from outside the cube.
const FACES: [[usize; 4]; 6] = [
    [0, 3, 2, 1], // z = 0
    [4, 5, 6, 7], // z = 1
    [0, 1, 5, 4], // y = 0
    [3, 7, 6, 2], // y = 1
    [0, 4, 7, 3], // x = 0
    [1, 2, 6, 5], // x = 1
];

/// Triangles for one case, as edge-index triples with outward winding
/// (normals point toward the positive side of the field).
pub type CaseTriangles = Vec<[u8; 3]>;

fn edge_between(a: usize, b: usize) -> usize {
    EDGES
        .iter()
        .position(|e| (e[0] == a && e[1] == b) || (e[0] == b && e[1] == a))
        .expect("adjacent corners share an edge")
}

fn build_case(case: u8) -> CaseTriangles {
    let inside = |c: usize| case & (1 << c) != 0;
    let mut next: [Option<usize>; 12] = [None; 12];
    for face in FACES {
        // (edge, is_entry) in walk order
        let mut crossings = Vec::with_capacity(4);
        for k in 0..4 {
            let (a, b) = (face[k], face[(k + 1) % 4]);
            if inside(a) != inside(b) {
                crossings.push((edge_between(a, b), inside(b)));
            }
        }
        let n = crossings.len();
        for (k, &(edge, entry)) in crossings.iter().enumerate() {
            if entry {
                let (exit, is_entry) = crossings[(k + 1) % n];
                debug_assert!(!is_entry);
                next[edge] = Some(exit);
            }
        }
    }

    let mut tris = Vec::new();
    let mut visited = [false; 12];
    for start in 0..12 {
        if next[start].is_none() || visited[start] {
            continue;
        }
        let mut polygon = Vec::new();
        let mut e = start;
        while !visited[e] {
            visited[e] = true;
            polygon.push(e as u8);
            e = next[e].expect("face segments form closed cycles");
        }
        let before = tris.len();
        assert!(
            triangulate(&polygon, &mut tris),
            "case {case}: no triangulation avoids face chords"
        );
        debug_assert_eq!(tris.len() - before, polygon.len() - 2);
    }
    tris
}

fn on_common_face(a: u8, b: u8) -> bool {
    let corners = |e: u8| EDGES[e as usize];
    FACES.iter().any(|f| {
        let has = |e: u8| corners(e).iter().all(|c| f.contains(c));
        has(a) && has(b)
    })
}

/// Triangulates a convex-order polygon, rejecting diagonals whose endpoints
/// share a cube face. Returns false if no such triangulation exists.
fn triangulate(polygon: &[u8], out: &mut CaseTriangles) -> bool {
    let n = polygon.len();
    if n < 3 {
        return true;
    }
    if n == 3 {
        out.push([polygon[0], polygon[1], polygon[2]]);
        return true;
    }
    let diagonal_ok = |i: usize, j: usize| (j + n - i) % n == 1 || (i + n - j) % n == 1 || !on_common_face(polygon[i], polygon[j]);
    // Triangle on side (0, 1) with apex k splits the rest into two polygons.
    for k in 2..n {
        if !diagonal_ok(1, k) || !diagonal_ok(k, 0) {
            continue;
        }
        let mark = out.len();
        out.push([polygon[0], polygon[1], polygon[k]]);
        let right: Vec<u8> = polygon[1..=k].to_vec();
        let left: Vec<u8> = polygon[k..].iter().chain(std::iter::once(&polygon[0])).copied().collect();
        if triangulate(&right, out) && triangulate(&left, out) {
            return true;
        }
        out.truncate(mark);
    }
    false
}

pub fn case_table() -> &'static [CaseTriangles; 256] {
    static TABLE: OnceLock<[CaseTriangles; 256]> = OnceLock::new();
    TABLE.get_or_init(|| std::array::from_fn(|c| build_case(c as u8)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_cases_are_empty() {
        assert!(case_table()[0].is_empty());
        assert!(case_table()[255].is_empty());
    }

    #[test]
    fn single_corner_gives_one_outward_triangle() {
        // Corner 0 inside: normal must point away from the origin.
        let t = &case_table()[1];
        assert_eq!(t.len(), 1);
        let mid = |e: u8| {
            let [a, b] = EDGES[e as usize];
            let p = |c: usize| CORNERS[c].map(|v| v as f64);
            let (pa, pb) = (p(a), p(b));
            [(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0, (pa[2] + pb[2]) / 2.0]
        };
        let [a, b, c] = t[0].map(mid);
        let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
        let n = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
        assert!(n.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn no_diagonal_joins_crossings_on_one_face() {
        for (case, tris) in case_table().iter().enumerate() {
            let mut uses = std::collections::HashMap::new();
            for t in tris {
                for k in 0..3 {
                    let (a, b) = (t[k], t[(k + 1) % 3]);
                    *uses.entry((a.min(b), a.max(b))).or_insert(0) += 1;
                }
            }
            for (&(a, b), &n) in &uses {
                // Face segments are used once inside the cell, diagonals twice.
                if on_common_face(a, b) {
                    assert_eq!(n, 1, "case {case}: edge {a}-{b}");
                }
            }
        }
    }

    #[test]
    fn every_cut_edge_used() {
        for case in 0..=255u8 {
            let inside = |c: usize| case & (1 << c) != 0;
            let cut: Vec<usize> = (0..12).filter(|&e| inside(EDGES[e][0]) != inside(EDGES[e][1])).collect();
            let mut used: Vec<usize> = case_table()[case as usize].iter().flatten().map(|&e| e as usize).collect();
            used.sort();
            used.dedup();
            assert_eq!(cut, used, "case {case}");
        }
    }
}
