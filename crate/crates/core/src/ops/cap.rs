//! Planar polygon triangulation for split caps.
//!
//! Ear clipping that keeps every input vertex (collinear points included) so
//! the cap shares each boundary edge with the cut surface. Holes are bridged
//! into their enclosing loop before clipping.

/// A loop vertex: mesh index plus its projection onto the cap plane.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LoopPoint {
    pub index: u32,
    pub uv: [f64; 2],
}

pub(crate) fn signed_area(points: &[LoopPoint]) -> f64 {
    let n = points.len();
    let mut acc = 0.0;
    for i in 0..n {
        let [x0, y0] = points[i].uv;
        let [x1, y1] = points[(i + 1) % n].uv;
        acc += x0 * y1 - x1 * y0;
    }
    acc / 2.0
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn point_in_polygon(p: [f64; 2], poly: &[LoopPoint]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i].uv, poly[j].uv);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Triangulates counter-clockwise outer loops with clockwise holes. Returns
/// index triples or the loop that could not be triangulated.
pub(crate) fn triangulate_loops(loops: Vec<Vec<LoopPoint>>) -> Result<Vec<[u32; 3]>, Vec<LoopPoint>> {
    let mut outers: Vec<(Vec<LoopPoint>, f64, Vec<Vec<LoopPoint>>)> = Vec::new();
    let mut holes = Vec::new();
    for l in loops {
        if l.len() < 3 {
            continue;
        }
        let a = signed_area(&l);
        if a >= 0.0 {
            outers.push((l, a, Vec::new()));
        } else {
            holes.push(l);
        }
    }
    for hole in holes {
        // Smallest enclosing outer loop; a vertex average is robust against
        // holes that touch their outer loop at a single point.
        let probe = hole_probe(&hole);
        let hole_area = -signed_area(&hole);
        let host = outers
            .iter()
            .enumerate()
            .filter(|(_, (o, a, _))| *a >= hole_area && point_in_polygon(probe, o))
            .min_by(|x, y| x.1 .1.total_cmp(&y.1 .1))
            .map(|(i, _)| i);
        match host {
            Some(i) => outers[i].2.push(hole),
            None => return Err(hole),
        }
    }

    let mut tris = Vec::new();
    for (outer, _, mut holes) in outers {
        holes.sort_by(|a, b| max_x(b).total_cmp(&max_x(a)));
        let mut poly = outer;
        for hole in holes {
            poly = bridge(poly, hole)?;
        }
        ear_clip(&poly, &mut tris)?;
    }
    Ok(tris)
}

fn hole_probe(hole: &[LoopPoint]) -> [f64; 2] {
    // Slightly inside the first edge, on the hole's material side.
    let (a, b) = (hole[0].uv, hole[1].uv);
    let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len = (dx * dx + dy * dy).sqrt().max(f64::MIN_POSITIVE);
    // Holes run clockwise, so the enclosing material is on the left.
    let step = len * 1e-3;
    [mid[0] - dy / len * step, mid[1] + dx / len * step]
}

fn max_x(l: &[LoopPoint]) -> f64 {
    l.iter().map(|p| p.uv[0]).fold(f64::NEG_INFINITY, f64::max)
}

/// Joins `hole` into `outer` through a mutually visible vertex pair.
fn bridge(outer: Vec<LoopPoint>, hole: Vec<LoopPoint>) -> Result<Vec<LoopPoint>, Vec<LoopPoint>> {
    let (hi, m) = hole
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.uv[0].total_cmp(&b.1.uv[0]).then(b.0.cmp(&a.0)))
        .map(|(i, p)| (i, p.uv))
        .expect("hole is nonempty");

    // Nearest edge hit by the ray from m toward +x.
    let n = outer.len();
    let mut best: Option<(f64, usize)> = None;
    for i in 0..n {
        let (a, b) = (outer[i].uv, outer[(i + 1) % n].uv);
        if (a[1] <= m[1] && m[1] <= b[1]) || (b[1] <= m[1] && m[1] <= a[1]) {
            let x = if a[1] == b[1] {
                a[0].min(b[0])
            } else {
                a[0] + (m[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0])
            };
            if x >= m[0] && best.is_none_or(|(bx, _)| x < bx) {
                best = Some((x, i));
            }
        }
    }
    let Some((ix, edge)) = best else {
        return Err(hole);
    };
    let (ea, eb) = (edge, (edge + 1) % n);
    let mut pi = if outer[ea].uv[0] >= outer[eb].uv[0] { ea } else { eb };
    let i_pt = [ix, m[1]];
    if outer[ea].uv == i_pt {
        pi = ea;
    } else if outer[eb].uv == i_pt {
        pi = eb;
    } else {
        // A reflex vertex inside (m, I, P) would block the bridge; take the
        // one closest in angle to the ray.
        let p = outer[pi].uv;
        let (t0, t1, t2) = if cross(m, i_pt, p) >= 0.0 { (m, i_pt, p) } else { (m, p, i_pt) };
        let mut best_key = (f64::INFINITY, f64::INFINITY);
        for k in 0..n {
            if k == pi {
                continue;
            }
            let q = outer[k].uv;
            let prev = outer[(k + n - 1) % n].uv;
            let next = outer[(k + 1) % n].uv;
            let reflex = cross(prev, q, next) <= 0.0;
            if reflex && in_triangle(q, t0, t1, t2) {
                let (dx, dy) = (q[0] - m[0], q[1] - m[1]);
                let key = (dy.abs().atan2(dx), dx * dx + dy * dy);
                if key < best_key {
                    best_key = key;
                    pi = k;
                }
            }
        }
    }

    let mut merged = Vec::with_capacity(outer.len() + hole.len() + 2);
    merged.extend_from_slice(&outer[..=pi]);
    for k in 0..=hole.len() {
        merged.push(hole[(hi + k) % hole.len()]);
    }
    merged.push(outer[pi]);
    merged.extend_from_slice(&outer[pi + 1..]);
    Ok(merged)
}

/// Closed-triangle containment for a counter-clockwise triangle.
fn in_triangle(p: [f64; 2], a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> bool {
    cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0
}

fn ear_clip(poly: &[LoopPoint], out: &mut Vec<[u32; 3]>) -> Result<(), Vec<LoopPoint>> {
    let n = poly.len();
    if n < 3 {
        return Ok(());
    }
    let mut prev: Vec<usize> = (0..n).map(|i| (i + n - 1) % n).collect();
    let mut next: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
    let mut remaining = n;
    let mut cur = 0;
    // Strictness levels: 0 proper ears, 1 zero-area ears.
    let mut level = 0;
    let mut misses = 0;
    while remaining > 3 {
        let (p, nx) = (prev[cur], next[cur]);
        let (a, b, c) = (poly[p].uv, poly[cur].uv, poly[nx].uv);
        let turn = cross(a, b, c);
        let is_ear = match level {
            0 => turn > 0.0 && !blocks(poly, &next, nx, p, a, b, c),
            _ => turn >= 0.0 && (turn == 0.0 || !blocks(poly, &next, nx, p, a, b, c)),
        };
        if is_ear {
            out.push([poly[p].index, poly[cur].index, poly[nx].index]);
            next[p] = nx;
            prev[nx] = p;
            remaining -= 1;
            cur = nx;
            misses = 0;
            level = 0;
        } else {
            cur = nx;
            misses += 1;
            if misses > remaining {
                if level == 1 {
                    let mut rest = Vec::with_capacity(remaining);
                    let mut k = cur;
                    for _ in 0..remaining {
                        rest.push(poly[k]);
                        k = next[k];
                    }
                    return Err(rest);
                }
                level = 1;
                misses = 0;
            }
        }
    }
    let (p, nx) = (prev[cur], next[cur]);
    out.push([poly[p].index, poly[cur].index, poly[nx].index]);
    Ok(())
}

/// True if another remaining vertex lies in the candidate ear. Vertices at
/// the same position as an ear corner (bridge duplicates) are ignored.
fn blocks(poly: &[LoopPoint], next: &[usize], start: usize, stop: usize, a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> bool {
    let mut k = next[start];
    while k != stop {
        let q = poly[k].uv;
        if q != a && q != b && q != c && in_triangle(q, a, b, c) {
            return true;
        }
        k = next[k];
    }
    false
}
