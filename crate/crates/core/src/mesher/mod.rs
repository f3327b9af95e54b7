//! Marching-cubes extraction of a field's zero set.
//!
//! Vertices are identified by the grid edge they lie on, so neighbouring
//! cells share vertices exactly and the output is closed whenever the zero
//! set stays inside the grid. Clipping is an implicit intersection with a
//! clip field, which keeps clipped results closed as well.

mod table;

use std::collections::HashMap;
use std::fmt;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::field::{EvalDiagnostics, ScalarField};
use crate::mesh::TriMesh;
use crate::scalar::Real;
use crate::vec3::Vec3;
use table::{case_table, CORNERS, EDGES};

/// Exact-zero samples are moved to this value before case lookup.
pub const EPS_CORNER: f64 = 1e-12;

/// Crossings are kept at least this fraction of an edge away from its
/// endpoints. Without it, vertices on the edges around a node the surface
/// nearly passes through coincide to well below single precision, and
/// writing STL collapses their triangles.
pub const EDGE_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GridFace {
    XMin,
    XMax,
    YMin,
    YMax,
    ZMin,
    ZMax,
}

impl fmt::Display for GridFace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GridFace::XMin => "x-min",
            GridFace::XMax => "x-max",
            GridFace::YMin => "y-min",
            GridFace::YMax => "y-max",
            GridFace::ZMin => "z-min",
            GridFace::ZMax => "z-max",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MesherError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("surface touches the {face} face of the grid; enlarge the bounds or clip the field")]
    BoundaryContact { face: GridFace },
    #[error("field has no sign change inside the grid")]
    EmptySurface,
    #[error("could not start worker pool: {0}")]
    Workers(String),
}

/// Sampling lattice: `resolution` cells per axis between the corners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec<T> {
    min: Vec3<T>,
    max: Vec3<T>,
    resolution: [usize; 3],
}

impl<T: Real> GridSpec<T> {
    pub fn new(min: Vec3<T>, max: Vec3<T>, resolution: [usize; 3]) -> Result<Self, MesherError> {
        if !(min.is_finite() && max.is_finite()) {
            return Err(MesherError::InvalidGrid("corners must be finite".into()));
        }
        if !(max.x > min.x && max.y > min.y && max.z > min.z) {
            return Err(MesherError::InvalidGrid(
                "max corner must exceed min corner on every axis".into(),
            ));
        }
        if resolution.iter().any(|&n| n < 2) {
            return Err(MesherError::InvalidGrid("resolution must be at least 2 per axis".into()));
        }
        if resolution.iter().any(|&n| n > 4096) {
            return Err(MesherError::InvalidGrid("resolution above 4096 per axis".into()));
        }
        Ok(Self { min, max, resolution })
    }

    /// Cube `[lo, hi]³` with `n` cells per axis.
    pub fn cube(lo: T, hi: T, n: usize) -> Result<Self, MesherError> {
        Self::new(Vec3::splat(lo), Vec3::splat(hi), [n; 3])
    }

    pub fn min(&self) -> Vec3<T> {
        self.min
    }

    pub fn max(&self) -> Vec3<T> {
        self.max
    }

    pub fn resolution(&self) -> [usize; 3] {
        self.resolution
    }

    pub fn cell_count(&self) -> usize {
        self.resolution.iter().product()
    }

    /// Coordinate of lattice plane `i` along `axis`.
    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> T {
        let n = self.resolution[axis];
        self.min[axis] + (self.max[axis] - self.min[axis]) * T::lit(i as f64) / T::lit(n as f64)
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize, k: usize) -> Vec3<T> {
        Vec3::new(self.coord(0, i), self.coord(1, j), self.coord(2, k))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MeshOptions {
    /// Worker threads; `None` uses the global pool. Output does not depend
    /// on this.
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshJobReport {
    pub cell_count: usize,
    pub triangle_count: usize,
    pub vertex_count: usize,
    pub degenerate_triangle_count: usize,
    #[serde(serialize_with = "serialize_secs")]
    pub elapsed: Duration,
    /// Samples where a shell field fell back to unnormalized distance.
    pub shell_degenerate_samples: usize,
    pub nan_samples: usize,
}

fn serialize_secs<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

pub fn mesh_isosurface<T: Real>(
    field: &ScalarField<T>,
    grid: &GridSpec<T>,
    clip: Option<&ScalarField<T>>,
) -> Result<(TriMesh<T>, MeshJobReport), MesherError> {
    mesh_isosurface_with(field, grid, clip, &MeshOptions::default())
}

pub fn mesh_isosurface_with<T: Real>(
    field: &ScalarField<T>,
    grid: &GridSpec<T>,
    clip: Option<&ScalarField<T>>,
    options: &MeshOptions,
) -> Result<(TriMesh<T>, MeshJobReport), MesherError> {
    let effective = match clip {
        Some(c) => field.clone().intersect(c.clone()),
        None => field.clone(),
    };
    match options.workers {
        None => extract(&effective, grid),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| MesherError::Workers(e.to_string()))?
            .install(|| extract(&effective, grid)),
    }
}

struct Samples<T> {
    values: Vec<T>,
    stride: [usize; 3],
}

impl<T: Copy> Samples<T> {
    #[inline]
    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.stride[1] * j + self.stride[2] * k
    }

    #[inline]
    fn at(&self, i: usize, j: usize, k: usize) -> T {
        self.values[self.index(i, j, k)]
    }
}

fn sample<T: Real>(field: &ScalarField<T>, grid: &GridSpec<T>) -> (Samples<T>, EvalDiagnostics, usize) {
    let [nx, ny, _] = grid.resolution;
    let layer = (nx + 1) * (ny + 1);
    let mut values = vec![T::zero(); layer * (grid.resolution[2] + 1)];
    let eps = T::lit(EPS_CORNER);
    let (diag, nans) = values
        .par_chunks_mut(layer)
        .enumerate()
        .map(|(k, slice)| {
            let mut diag = EvalDiagnostics::default();
            let mut nans = 0;
            for j in 0..=ny {
                for i in 0..=nx {
                    let mut v = field.eval_with_diagnostics(grid.node(i, j, k), &mut diag);
                    if v == T::zero() {
                        v = eps;
                    }
                    if v.is_nan() {
                        nans += 1;
                    }
                    slice[i + (nx + 1) * j] = v;
                }
            }
            (diag, nans)
        })
        .reduce(
            || (EvalDiagnostics::default(), 0),
            |(mut da, na), (db, nb)| {
                da.merge(db);
                (da, na + nb)
            },
        );
    (
        Samples {
            values,
            stride: [1, nx + 1, layer],
        },
        diag,
        nans,
    )
}

fn check_boundary<T: Real>(s: &Samples<T>, res: [usize; 3]) -> Result<(), MesherError> {
    let [nx, ny, nz] = res;
    let positive = |v: T| v > T::zero();
    let faces = [
        (GridFace::XMin, 0usize, 0usize),
        (GridFace::XMax, 0, nx),
        (GridFace::YMin, 1, 0),
        (GridFace::YMax, 1, ny),
        (GridFace::ZMin, 2, 0),
        (GridFace::ZMax, 2, nz),
    ];
    for (face, axis, fixed) in faces {
        let ok = match axis {
            0 => (0..=nz).all(|k| (0..=ny).all(|j| positive(s.at(fixed, j, k)))),
            1 => (0..=nz).all(|k| (0..=nx).all(|i| positive(s.at(i, fixed, k)))),
            _ => (0..=ny).all(|j| (0..=nx).all(|i| positive(s.at(i, j, fixed)))),
        };
        if !ok {
            return Err(MesherError::BoundaryContact { face });
        }
    }
    Ok(())
}

/// Lower lattice offset and axis of each cube edge.
fn edge_geometry() -> [([usize; 3], usize); 12] {
    std::array::from_fn(|e| {
        let [a, b] = EDGES[e];
        let axis = (0..3).find(|&d| CORNERS[a][d] != CORNERS[b][d]).expect("edge spans one axis");
        (CORNERS[a], axis)
    })
}

fn extract<T: Real>(field: &ScalarField<T>, grid: &GridSpec<T>) -> Result<(TriMesh<T>, MeshJobReport), MesherError> {
    let start = Instant::now();
    let res = grid.resolution;
    let [nx, ny, nz] = res;
    let (samples, diag, nan_samples) = sample(field, grid);
    check_boundary(&samples, res)?;
    if !samples.values.iter().any(|&v| v < T::zero()) {
        return Err(MesherError::EmptySurface);
    }

    let table = case_table();
    let geometry = edge_geometry();
    let node_id = |i: usize, j: usize, k: usize| samples.index(i, j, k) as u64;

    // Per-slab triangles keyed by grid edge; slabs are concatenated in z
    // order so the output is independent of scheduling.
    let slabs: Vec<Vec<[u64; 3]>> = (0..nz)
        .into_par_iter()
        .map(|k| {
            let mut out = Vec::new();
            for j in 0..ny {
                for i in 0..nx {
                    let mut case = 0u8;
                    for (c, off) in CORNERS.iter().enumerate() {
                        if samples.at(i + off[0], j + off[1], k + off[2]) < T::zero() {
                            case |= 1 << c;
                        }
                    }
                    for tri in &table[case as usize] {
                        out.push(tri.map(|e| {
                            let (off, axis) = geometry[e as usize];
                            node_id(i + off[0], j + off[1], k + off[2]) * 3 + axis as u64
                        }));
                    }
                }
            }
            out
        })
        .collect();

    let triangle_total: usize = slabs.iter().map(Vec::len).sum();
    let mut vertex_of: HashMap<u64, u32> = HashMap::with_capacity(triangle_total / 2 + 16);
    let mut edge_ids: Vec<u64> = Vec::with_capacity(triangle_total / 2 + 16);
    let mut triangles = Vec::with_capacity(triangle_total);
    for slab in &slabs {
        for tri in slab {
            triangles.push(tri.map(|id| {
                *vertex_of.entry(id).or_insert_with(|| {
                    edge_ids.push(id);
                    (edge_ids.len() - 1) as u32
                })
            }));
        }
    }
    drop(slabs);

    let row = nx + 1;
    let layer = row * (ny + 1);
    let vertices: Vec<Vec3<T>> = edge_ids
        .par_iter()
        .map(|&id| {
            let node = (id / 3) as usize;
            let axis = (id % 3) as usize;
            let (i, j, k) = (node % row, (node / row) % (ny + 1), node / layer);
            let (i2, j2, k2) = match axis {
                0 => (i + 1, j, k),
                1 => (i, j + 1, k),
                _ => (i, j, k + 1),
            };
            let (va, vb) = (samples.at(i, j, k), samples.at(i2, j2, k2));
            let margin = T::lit(EDGE_MARGIN);
            let t = (va / (va - vb)).max(margin).min(T::one() - margin);
            let (pa, pb) = (grid.node(i, j, k), grid.node(i2, j2, k2));
            pa + (pb - pa) * t
        })
        .collect();

    let mesh = TriMesh::from_raw(vertices, triangles);
    let degenerate = (0..mesh.triangle_count())
        .filter(|&t| {
            let [a, b, c] = mesh.corners(t);
            (b - a).cross(c - a).norm_squared() == T::zero()
        })
        .count();
    let report = MeshJobReport {
        cell_count: grid.cell_count(),
        triangle_count: mesh.triangle_count(),
        vertex_count: mesh.vertices().len(),
        degenerate_triangle_count: degenerate,
        elapsed: start.elapsed(),
        shell_degenerate_samples: diag.shell_degenerate,
        nan_samples,
    };
    Ok((mesh, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualStats<T> {
    pub max: T,
    pub mean: T,
}

/// Max and mean of `|field(v)|` over the mesh vertices.
pub fn vertex_residuals<T: Real>(field: &ScalarField<T>, mesh: &TriMesh<T>) -> ResidualStats<T> {
    let vs = mesh.vertices();
    if vs.is_empty() {
        return ResidualStats {
            max: T::zero(),
            mean: T::zero(),
        };
    }
    let residuals: Vec<T> = vs.par_iter().map(|&v| field.eval(v).abs()).collect();
    let max = residuals.iter().fold(T::zero(), |m, &r| m.max(r));
    let mean = residuals.iter().copied().sum::<T>() / T::lit(residuals.len() as f64);
    ResidualStats { max, mean }
}
