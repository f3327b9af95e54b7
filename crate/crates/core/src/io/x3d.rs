//! The IndexedFaceSet subset of X3D: Coordinate points, coordIndex faces,
//! `ccw`, and Transform scale/translation. Everything else is ignored.

use roxmltree::{Document, Node};

use super::FormatError;
use crate::mesh::TriMesh;
use crate::scalar::Real;
use crate::vec3::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct X3dImport<T> {
    pub mesh: TriMesh<T>,
    pub warnings: Vec<String>,
}

/// Per-axis scale followed by translation.
#[derive(Clone, Copy)]
struct Affine {
    scale: Vec3<f64>,
    translation: Vec3<f64>,
}

impl Affine {
    const IDENTITY: Affine = Affine {
        scale: Vec3 { x: 1.0, y: 1.0, z: 1.0 },
        translation: Vec3 { x: 0.0, y: 0.0, z: 0.0 },
    };

    /// `self ∘ child`
    fn then_child(&self, child: &Affine) -> Affine {
        Affine {
            scale: self.scale.component_mul(child.scale),
            translation: self.scale.component_mul(child.translation) + self.translation,
        }
    }

    fn apply(&self, p: Vec3<f64>) -> Vec3<f64> {
        self.scale.component_mul(p) + self.translation
    }
}

fn numbers(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty())
}

fn vec3_attr(node: Node, name: &str, default: Vec3<f64>) -> Result<Vec3<f64>, FormatError> {
    let Some(text) = node.attribute(name) else {
        return Ok(default);
    };
    let v: Vec<f64> = numbers(text)
        .map(|s| s.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| FormatError::X3dNumber {
            attribute: name.to_string(),
        })?;
    match v[..] {
        [x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err(FormatError::X3dNumber {
            attribute: name.to_string(),
        }),
    }
}

pub fn read_x3d<T: Real>(text: &str) -> Result<X3dImport<T>, FormatError> {
    let doc = Document::parse(text).map_err(|e| FormatError::Xml(e.to_string()))?;
    let mut out = X3dImport {
        mesh: TriMesh::empty(),
        warnings: Vec::new(),
    };
    let mut sets = 0;
    walk(doc.root_element(), Affine::IDENTITY, &mut sets, &mut out)?;
    if sets == 0 {
        return Err(FormatError::NoIndexedFaceSet);
    }
    Ok(out)
}

fn walk<T: Real>(node: Node, transform: Affine, sets: &mut usize, out: &mut X3dImport<T>) -> Result<(), FormatError> {
    let mut transform = transform;
    match node.tag_name().name() {
        "Transform" => {
            let local = Affine {
                scale: vec3_attr(node, "scale", Vec3::splat(1.0))?,
                translation: vec3_attr(node, "translation", Vec3::zero())?,
            };
            if let Some(r) = node.attribute("rotation") {
                let angle = numbers(r).nth(3).and_then(|s| s.parse::<f64>().ok()).unwrap_or(0.0);
                if angle != 0.0 {
                    out.warnings.push("Transform rotation ignored".into());
                }
            }
            transform = transform.then_child(&local);
        }
        "IndexedFaceSet" => {
            let set = *sets;
            *sets += 1;
            let part = face_set(node, set, &transform, &mut out.warnings)?;
            out.mesh = out.mesh.concat(&part);
            return Ok(());
        }
        _ => {}
    }
    for child in node.children().filter(Node::is_element) {
        walk(child, transform, sets, out)?;
    }
    Ok(())
}

fn face_set<T: Real>(node: Node, set: usize, transform: &Affine, warnings: &mut Vec<String>) -> Result<TriMesh<T>, FormatError> {
    let coord_index = node.attribute("coordIndex").ok_or(FormatError::X3dMissing {
        set,
        what: "coordIndex",
    })?;
    let point_text = node
        .children()
        .find(|c| c.tag_name().name() == "Coordinate")
        .and_then(|c| c.attribute("point"))
        .ok_or(FormatError::X3dMissing { set, what: "Coordinate point" })?;

    let coords: Vec<f64> = numbers(point_text)
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| FormatError::X3dNumber {
            attribute: "point".into(),
        })?;
    if !coords.len().is_multiple_of(3) {
        return Err(FormatError::X3dNumber {
            attribute: "point".into(),
        });
    }
    let points: Vec<Vec3<T>> = coords
        .chunks_exact(3)
        .map(|c| transform.apply(Vec3::new(c[0], c[1], c[2])).cast())
        .collect();

    let indices: Vec<i64> = numbers(coord_index)
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| FormatError::X3dNumber {
            attribute: "coordIndex".into(),
        })?;
    let flip = node.attribute("ccw").is_some_and(|v| v.trim().eq_ignore_ascii_case("false"));

    let mut triangles = Vec::new();
    let faces = indices.split(|&i| i == -1).filter(|f| !f.is_empty());
    for (face, idx) in faces.enumerate() {
        if idx.len() < 3 {
            return Err(FormatError::X3dShortFace { set, face });
        }
        let mut checked = Vec::with_capacity(idx.len());
        for &i in idx {
            if i < 0 || i as usize >= points.len() {
                return Err(FormatError::X3dIndex {
                    set,
                    face,
                    index: i,
                    point_count: points.len(),
                });
            }
            checked.push(i as u32);
        }
        if checked.iter().enumerate().any(|(k, a)| checked[k + 1..].contains(a)) {
            return Err(FormatError::X3dRepeatedIndex { set, face });
        }
        for k in 1..checked.len() - 1 {
            let t = [checked[0], checked[k], checked[k + 1]];
            triangles.push(if flip { [t[0], t[2], t[1]] } else { t });
        }
    }
    if triangles.is_empty() {
        warnings.push(format!("IndexedFaceSet {set} has no faces"));
    }
    Ok(TriMesh::from_raw(points, triangles))
}
