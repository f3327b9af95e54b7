use std::collections::HashMap;
use std::fmt::Write as _;

use super::FormatError;
use crate::mesh::TriMesh;
use crate::scalar::Real;
use crate::vec3::Vec3;

pub const HEADER_LEN: usize = 80;
pub const RECORD_LEN: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StlFormat {
    Binary,
    Ascii,
}

/// What the reader saw besides the mesh itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StlStats {
    pub format: StlFormat,
    pub facets: usize,
    /// Facets dropped because welding collapsed two of their corners.
    pub collapsed_facets: usize,
}

fn quantize<T: Real>(v: Vec3<T>) -> [f32; 3] {
    v.cast::<f32>().to_array()
}

fn facet_normal(c: &[[f32; 3]; 3]) -> [f32; 3] {
    let p = c.map(|v| Vec3::new(v[0] as f64, v[1] as f64, v[2] as f64));
    match (p[1] - p[0]).cross(p[2] - p[0]).normalized() {
        Some(n) if n.is_finite() => [n.x as f32, n.y as f32, n.z as f32],
        _ => [0.0; 3],
    }
}

fn header_bytes(comment: &str) -> [u8; HEADER_LEN] {
    let mut text = comment.as_bytes().to_vec();
    if text.len() >= 5 && text[..5].eq_ignore_ascii_case(b"solid") {
        // A leading "solid" makes readers guess ASCII.
        text.splice(0..0, *b"binary ");
    }
    let mut header = [0u8; HEADER_LEN];
    let n = text.len().min(HEADER_LEN);
    header[..n].copy_from_slice(&text[..n]);
    header
}

/// Binary STL bytes: header, little-endian count, one record per triangle.
pub fn write_stl_binary<T: Real>(mesh: &TriMesh<T>, comment: &str) -> Result<Vec<u8>, FormatError> {
    let count = u32::try_from(mesh.triangle_count()).map_err(|_| FormatError::TooManyTriangles)?;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 + RECORD_LEN * mesh.triangle_count());
    out.extend_from_slice(&header_bytes(comment));
    out.extend_from_slice(&count.to_le_bytes());
    for t in 0..mesh.triangle_count() {
        let corners = mesh.corners(t).map(quantize);
        for x in facet_normal(&corners).iter().chain(corners.iter().flatten()) {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    Ok(out)
}

/// ASCII STL with shortest round-tripping float literals.
pub fn write_stl_ascii<T: Real>(mesh: &TriMesh<T>, name: &str) -> String {
    let name: String = name.chars().filter(|c| !c.is_control()).collect();
    let mut s = String::new();
    let _ = writeln!(s, "solid {name}");
    for t in 0..mesh.triangle_count() {
        let corners = mesh.corners(t).map(quantize);
        let [nx, ny, nz] = facet_normal(&corners);
        let _ = writeln!(s, "  facet normal {nx:e} {ny:e} {nz:e}");
        s.push_str("    outer loop\n");
        for [x, y, z] in corners {
            let _ = writeln!(s, "      vertex {x:e} {y:e} {z:e}");
        }
        s.push_str("    endloop\n  endfacet\n");
    }
    let _ = writeln!(s, "endsolid {name}");
    s
}

pub fn read_stl<T: Real>(bytes: &[u8]) -> Result<TriMesh<T>, FormatError> {
    read_stl_with_stats(bytes).map(|(m, _)| m)
}

/// Reads binary (size-consistent) or ASCII STL and welds bit-identical
/// vertices.
pub fn read_stl_with_stats<T: Real>(bytes: &[u8]) -> Result<(TriMesh<T>, StlStats), FormatError> {
    let declared = (bytes.len() >= HEADER_LEN + 4)
        .then(|| u32::from_le_bytes(bytes[HEADER_LEN..HEADER_LEN + 4].try_into().expect("4 bytes")) as usize);
    let binary_len = declared.and_then(|n| n.checked_mul(RECORD_LEN)).map(|b| b + HEADER_LEN + 4);
    if binary_len == Some(bytes.len()) {
        return Ok(read_binary(bytes, declared.unwrap_or(0)));
    }
    if starts_with_solid(bytes) {
        return read_ascii(bytes);
    }
    match (declared, binary_len) {
        (None, _) => Err(FormatError::Truncated {
            len: bytes.len(),
            expected: HEADER_LEN + 4,
        }),
        (Some(_), Some(expected)) if expected > bytes.len() => Err(FormatError::Truncated {
            len: bytes.len(),
            expected,
        }),
        (Some(declared), _) => Err(FormatError::CountMismatch {
            declared,
            actual: (bytes.len() - HEADER_LEN - 4) / RECORD_LEN,
        }),
    }
}

fn starts_with_solid(bytes: &[u8]) -> bool {
    let trimmed = bytes.iter().position(|b| !b.is_ascii_whitespace()).map_or(&[][..], |i| &bytes[i..]);
    trimmed.len() >= 5 && trimmed[..5].eq_ignore_ascii_case(b"solid")
}

#[derive(Default)]
struct Welder {
    index: HashMap<[u32; 3], u32>,
    vertices: Vec<[f32; 3]>,
    triangles: Vec<[u32; 3]>,
    collapsed: usize,
}

impl Welder {
    fn vertex(&mut self, p: [f32; 3]) -> u32 {
        let key = p.map(f32::to_bits);
        *self.index.entry(key).or_insert_with(|| {
            self.vertices.push(p);
            (self.vertices.len() - 1) as u32
        })
    }

    fn facet(&mut self, c: [[f32; 3]; 3]) {
        let t = c.map(|p| self.vertex(p));
        if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
            self.collapsed += 1;
        } else {
            self.triangles.push(t);
        }
    }

    fn finish<T: Real>(self, format: StlFormat, facets: usize) -> (TriMesh<T>, StlStats) {
        let vertices = self
            .vertices
            .iter()
            .map(|p| Vec3::new(T::lit(p[0] as f64), T::lit(p[1] as f64), T::lit(p[2] as f64)))
            .collect();
        let stats = StlStats {
            format,
            facets,
            collapsed_facets: self.collapsed,
        };
        (TriMesh::from_raw(vertices, self.triangles), stats)
    }
}

fn read_binary<T: Real>(bytes: &[u8], count: usize) -> (TriMesh<T>, StlStats) {
    let mut w = Welder::default();
    for record in bytes[HEADER_LEN + 4..].chunks_exact(RECORD_LEN) {
        let f = |k: usize| f32::from_le_bytes(record[4 * k..4 * k + 4].try_into().expect("4 bytes"));
        w.facet([[f(3), f(4), f(5)], [f(6), f(7), f(8)], [f(9), f(10), f(11)]]);
    }
    w.finish(StlFormat::Binary, count)
}

struct Tokens<'a> {
    inner: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self) -> Option<(usize, &'a str)> {
        let t = self.inner.get(self.pos).copied();
        self.pos += 1;
        t
    }

    fn expect(&mut self, word: &'static str) -> Result<(), FormatError> {
        match self.next() {
            Some((_, t)) if t.eq_ignore_ascii_case(word) => Ok(()),
            other => Err(syntax(other, word)),
        }
    }

    fn number(&mut self) -> Result<f32, FormatError> {
        match self.next() {
            Some((line, t)) => t.parse::<f32>().map_err(|_| FormatError::AsciiSyntax {
                line,
                expected: "number",
                found: t.to_string(),
            }),
            None => Err(syntax(None, "number")),
        }
    }
}

fn syntax(found: Option<(usize, &str)>, expected: &'static str) -> FormatError {
    match found {
        Some((line, t)) => FormatError::AsciiSyntax {
            line,
            expected,
            found: t.to_string(),
        },
        None => FormatError::AsciiSyntax {
            line: 0,
            expected,
            found: "end of file".into(),
        },
    }
}

fn read_ascii<T: Real>(bytes: &[u8]) -> Result<(TriMesh<T>, StlStats), FormatError> {
    let text = String::from_utf8_lossy(bytes);
    let mut lines = text.lines().enumerate().skip_while(|(_, l)| l.trim().is_empty());
    // The first line is "solid" plus a free-form name.
    lines.next();
    let inner = lines
        .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)))
        .collect();
    let mut tokens = Tokens { inner, pos: 0 };
    let mut w = Welder::default();
    let mut facets = 0;
    loop {
        match tokens.next() {
            Some((_, t)) if t.eq_ignore_ascii_case("facet") => {}
            Some((_, t)) if t.eq_ignore_ascii_case("endsolid") => break,
            other => return Err(syntax(other, "facet or endsolid")),
        }
        tokens.expect("normal")?;
        for _ in 0..3 {
            tokens.number()?;
        }
        tokens.expect("outer")?;
        tokens.expect("loop")?;
        let mut c = [[0f32; 3]; 3];
        for p in &mut c {
            tokens.expect("vertex")?;
            for x in p.iter_mut() {
                *x = tokens.number()?;
            }
        }
        tokens.expect("endloop")?;
        tokens.expect("endfacet")?;
        w.facet(c);
        facets += 1;
    }
    Ok(w.finish(StlFormat::Ascii, facets))
}
