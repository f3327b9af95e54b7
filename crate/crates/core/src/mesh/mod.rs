//! Indexed triangle meshes and their measures.

mod transform;
mod validate;

use serde::Serialize;
use thiserror::Error;

use crate::scalar::Real;
use crate::vec3::Vec3;

pub use transform::{check_build_volume, fit_factor, scale_to_fit, FitTarget, DEFAULT_BUILD_VOLUME_MM};
pub use validate::{validate, ValidityReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("triangle {triangle} references vertex {index}, but the mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        triangle: usize,
        index: u32,
        vertex_count: usize,
    },
    #[error("triangle {triangle} repeats a vertex index")]
    RepeatedIndex { triangle: usize },
    #[error("cannot scale: zero extent on the constrained axis {axis}")]
    DegenerateExtent { axis: char },
    #[error("cannot scale an empty mesh")]
    Empty,
    #[error("scale target must be positive and finite")]
    InvalidTarget,
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aabb<T> {
    pub min: Vec3<T>,
    pub max: Vec3<T>,
}

impl<T: Real> Aabb<T> {
    pub fn extent(&self) -> Vec3<T> {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3<T> {
        (self.min + self.max) * T::half()
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3<T>>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        Some(it.fold(Aabb { min: first, max: first }, |b, p| Aabb {
            min: b.min.min(*p),
            max: b.max.max(*p),
        }))
    }
}

/// Area, signed volume and bounds of a mesh. `bbox` is `None` for a mesh
/// without vertices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Measures<T> {
    pub area: T,
    pub signed_volume: T,
    pub bbox: Option<Aabb<T>>,
}

/// Triangle mesh: vertex positions and counter-clockwise (outward) index
/// triples.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriMesh<T> {
    vertices: Vec<Vec3<T>>,
    triangles: Vec<[u32; 3]>,
}

impl<T: Real> TriMesh<T> {
    /// Builds a mesh, checking that every index is in range and no triangle
    /// repeats a vertex.
    pub fn new(vertices: Vec<Vec3<T>>, triangles: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        for (t, tri) in triangles.iter().enumerate() {
            for &i in tri {
                if i as usize >= vertices.len() {
                    return Err(MeshError::IndexOutOfRange {
                        triangle: t,
                        index: i,
                        vertex_count: vertices.len(),
                    });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::RepeatedIndex { triangle: t });
            }
        }
        Ok(Self { vertices, triangles })
    }

    /// Internal constructor for callers that build valid index data.
    pub(crate) fn from_raw(vertices: Vec<Vec3<T>>, triangles: Vec<[u32; 3]>) -> Self {
        debug_assert!(Self::new(vertices.clone(), triangles.clone()).is_ok());
        Self { vertices, triangles }
    }

    pub fn empty() -> Self {
        Self {
            vertices: Vec::new(),
            triangles: Vec::new(),
        }
    }

    pub fn vertices(&self) -> &[Vec3<T>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn into_parts(self) -> (Vec<Vec3<T>>, Vec<[u32; 3]>) {
        (self.vertices, self.triangles)
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [Vec3<T>; 3] {
        let [a, b, c] = self.triangles[t];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn bbox(&self) -> Option<Aabb<T>> {
        Aabb::from_points(&self.vertices)
    }

    pub fn area(&self) -> T {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.corners(t);
                (b - a).cross(c - a).norm() * T::half()
            })
            .sum()
    }

    /// Σ v0·(v1×v2)/6; positive for a closed outward-oriented mesh.
    pub fn signed_volume(&self) -> T {
        let six = T::lit(6.0);
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.corners(t);
                a.dot(b.cross(c))
            })
            .sum::<T>()
            / six
    }

    pub fn measure(&self) -> Measures<T> {
        Measures {
            area: self.area(),
            signed_volume: self.signed_volume(),
            bbox: self.bbox(),
        }
    }

    /// Appends `other`'s vertices and triangles (no welding).
    pub fn concat(&self, other: &Self) -> Self {
        let offset = self.vertices.len() as u32;
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices);
        let mut triangles = self.triangles.clone();
        triangles.extend(other.triangles.iter().map(|t| [t[0] + offset, t[1] + offset, t[2] + offset]));
        Self { vertices, triangles }
    }

    pub fn translated(&self, by: Vec3<T>) -> Self {
        self.map_vertices(|v| v + by)
    }

    pub fn map_vertices(&self, f: impl Fn(Vec3<T>) -> Vec3<T>) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&v| f(v)).collect(),
            triangles: self.triangles.clone(),
        }
    }

    /// Same triangles with reversed winding.
    pub fn flipped(&self) -> Self {
        Self {
            vertices: self.vertices.clone(),
            triangles: self.triangles.iter().map(|t| [t[0], t[2], t[1]]).collect(),
        }
    }

    /// Unit normal of triangle `t` by the right-hand rule, or zero when the
    /// triangle is degenerate.
    pub fn face_normal(&self, t: usize) -> Vec3<T> {
        let [a, b, c] = self.corners(t);
        (b - a).cross(c - a).normalized().unwrap_or_else(Vec3::zero)
    }

    pub fn cast<U: Real>(&self) -> TriMesh<U> {
        TriMesh {
            vertices: self.vertices.iter().map(|v| v.cast()).collect(),
            triangles: self.triangles.clone(),
        }
    }

    /// Axis-aligned box with outward winding, 8 vertices and 12 triangles.
    pub fn cuboid(min: Vec3<T>, max: Vec3<T>) -> Self {
        let vertices = (0..8)
            .map(|i| {
                Vec3::new(
                    if i & 1 == 0 { min.x } else { max.x },
                    if i & 2 == 0 { min.y } else { max.y },
                    if i & 4 == 0 { min.z } else { max.z },
                )
            })
            .collect();
        let triangles = vec![
            [0, 2, 1], [1, 2, 3], // z-
            [4, 5, 6], [5, 7, 6], // z+
            [0, 1, 4], [1, 5, 4], // y-
            [2, 6, 3], [3, 6, 7], // y+
            [0, 4, 2], [2, 4, 6], // x-
            [1, 3, 5], [3, 7, 5], // x+
        ];
        Self { vertices, triangles }
    }

    /// Closed cylinder along z from `z0` to `z1`, `segments` sides.
    pub fn cylinder(center_xy: (T, T), radius: T, z0: T, z1: T, segments: u32) -> Self {
        let n = segments.max(3);
        let mut vertices = Vec::with_capacity(2 * n as usize + 2);
        for z in [z0, z1] {
            for k in 0..n {
                let a = T::lit(2.0 * std::f64::consts::PI * k as f64 / n as f64);
                vertices.push(Vec3::new(center_xy.0 + radius * a.cos(), center_xy.1 + radius * a.sin(), z));
            }
        }
        let bottom = 2 * n;
        let top = 2 * n + 1;
        vertices.push(Vec3::new(center_xy.0, center_xy.1, z0));
        vertices.push(Vec3::new(center_xy.0, center_xy.1, z1));
        let mut triangles = Vec::with_capacity(4 * n as usize);
        for k in 0..n {
            let k1 = (k + 1) % n;
            triangles.push([bottom, k1, k]);
            triangles.push([top, n + k, n + k1]);
            triangles.push([k, k1, n + k1]);
            triangles.push([k, n + k1, n + k]);
        }
        Self { vertices, triangles }
    }
}
