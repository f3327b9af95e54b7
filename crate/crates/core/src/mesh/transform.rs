use serde::{Deserialize, Serialize};

use super::{Aabb, MeshError, TriMesh};
use crate::scalar::Real;
use crate::vec3::Vec3;

/// Default printable extent in millimetres (a 20 × 20 × 20 cm build volume).
pub const DEFAULT_BUILD_VOLUME_MM: [f64; 3] = [200.0, 200.0, 200.0];

/// Size target for [`scale_to_fit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FitTarget<T> {
    /// The longest bbox axis becomes this length.
    Longest(T),
    /// Largest uniform scale that fits inside this box; the constraining
    /// axis meets its target exactly.
    PerAxis([T; 3]),
}

/// Uniform scale factor that satisfies `target` for a box of this extent.
pub fn fit_factor<T: Real>(bbox: &Aabb<T>, target: &FitTarget<T>) -> Result<T, MeshError> {
    let extent = bbox.extent();
    let positive = |v: T| v > T::zero() && v.is_finite();
    match *target {
        FitTarget::Longest(mm) => {
            if !positive(mm) {
                return Err(MeshError::InvalidTarget);
            }
            let longest = extent.max_component();
            if !positive(longest) {
                return Err(MeshError::DegenerateExtent { axis: 'x' });
            }
            Ok(mm / longest)
        }
        FitTarget::PerAxis(mm) => {
            if !mm.iter().all(|&v| positive(v)) {
                return Err(MeshError::InvalidTarget);
            }
            let mut best: Option<T> = None;
            for i in 0..3 {
                if extent[i] > T::zero() {
                    let s = mm[i] / extent[i];
                    best = Some(best.map_or(s, |b: T| b.min(s)));
                }
            }
            best.ok_or(MeshError::DegenerateExtent { axis: 'x' })
        }
    }
}

/// Uniform scale about the bbox center so the constraining axis meets the
/// target.
pub fn scale_to_fit<T: Real>(mesh: &TriMesh<T>, target: &FitTarget<T>) -> Result<TriMesh<T>, MeshError> {
    let bbox = mesh.bbox().ok_or(MeshError::Empty)?;
    let s = fit_factor(&bbox, target)?;
    let c = bbox.center();
    Ok(mesh.map_vertices(|v| c + (v - c) * s))
}

/// True iff every bbox extent is within `limit` (inclusive). Empty meshes fit.
pub fn check_build_volume<T: Real>(mesh: &TriMesh<T>, limit: Vec3<T>) -> bool {
    match mesh.bbox() {
        None => true,
        Some(b) => {
            let e = b.extent();
            e.x <= limit.x && e.y <= limit.y && e.z <= limit.z
        }
    }
}
