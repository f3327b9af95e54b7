use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::TriMesh;
use crate::scalar::Real;
use crate::vec3::Vec3;

/// Side count of the cylinder approximation.
pub const CYLINDER_SEGMENTS: u32 = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaseError {
    #[error("base height must be positive")]
    InvalidHeight,
    #[error("embed depth must be non-negative")]
    InvalidEmbed,
    #[error("base footprint dimensions must be positive")]
    InvalidFootprint,
    #[error("cannot add a base to an empty mesh")]
    EmptyMesh,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum BaseShape<T> {
    Box { x: T, y: T },
    Cylinder { diameter: T },
}

/// Support solid placed under an object. `embed` is how far the object sinks
/// into the top of the base.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseSpec<T> {
    #[serde(flatten)]
    pub shape: BaseShape<T>,
    pub height: T,
    #[serde(default)]
    pub embed: T,
}

impl<T: Real> BaseSpec<T> {
    pub fn check(&self) -> Result<(), BaseError> {
        if !(self.height > T::zero() && self.height.is_finite()) {
            return Err(BaseError::InvalidHeight);
        }
        if !(self.embed >= T::zero() && self.embed.is_finite()) {
            return Err(BaseError::InvalidEmbed);
        }
        let ok = |v: T| v > T::zero() && v.is_finite();
        let footprint_ok = match self.shape {
            BaseShape::Box { x, y } => ok(x) && ok(y),
            BaseShape::Cylinder { diameter } => ok(diameter),
        };
        if !footprint_ok {
            return Err(BaseError::InvalidFootprint);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BaseWarning {
    /// Part of the object's contact region overhangs the base footprint.
    FootprintTooSmall,
}

impl std::fmt::Display for BaseWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BaseWarning::FootprintTooSmall => f.write_str("base footprint is smaller than the object's lowest cross-section"),
        }
    }
}

/// Lifts the object so its lowest point is `height − embed` and appends a
/// closed base solid centered under it. The two shells are concatenated, not
/// merged, so the overlap is counted twice in the volume.
pub fn add_base<T: Real>(mesh: &TriMesh<T>, base: &BaseSpec<T>) -> Result<(TriMesh<T>, Vec<BaseWarning>), BaseError> {
    base.check()?;
    let bbox = mesh.bbox().filter(|_| !mesh.is_empty()).ok_or(BaseError::EmptyMesh)?;
    let lift = base.height - base.embed - bbox.min.z;
    let object = mesh.translated(Vec3::new(T::zero(), T::zero(), lift));
    let c = bbox.center();

    // Contact region: whatever sits inside the base, or the lowest layer
    // when nothing is embedded.
    let band = base.embed.max(bbox.extent().z * T::lit(1e-6));
    let contact = object.vertices().iter().filter(|v| v.z - (base.height - base.embed) <= band);
    let overhangs = |v: &Vec3<T>| match base.shape {
        BaseShape::Box { x, y } => (v.x - c.x).abs() > x * T::half() || (v.y - c.y).abs() > y * T::half(),
        BaseShape::Cylinder { diameter } => {
            let (dx, dy) = (v.x - c.x, v.y - c.y);
            (dx * dx + dy * dy).sqrt() > diameter * T::half()
        }
    };
    let mut warnings = Vec::new();
    if contact.into_iter().any(overhangs) {
        warnings.push(BaseWarning::FootprintTooSmall);
    }

    let solid = match base.shape {
        BaseShape::Box { x, y } => TriMesh::cuboid(
            Vec3::new(c.x - x * T::half(), c.y - y * T::half(), T::zero()),
            Vec3::new(c.x + x * T::half(), c.y + y * T::half(), base.height),
        ),
        BaseShape::Cylinder { diameter } => {
            TriMesh::cylinder((c.x, c.y), diameter * T::half(), T::zero(), base.height, CYLINDER_SEGMENTS)
        }
    };
    Ok((object.concat(&solid), warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::validate;

    fn cube10() -> TriMesh<f64> {
        TriMesh::cuboid(Vec3::splat(5.0), Vec3::splat(15.0))
    }

    fn box_base(x: f64, y: f64, height: f64, embed: f64) -> BaseSpec<f64> {
        BaseSpec {
            shape: BaseShape::Box { x, y },
            height,
            embed,
        }
    }

    #[test]
    fn cube_on_box_base() {
        let (m, warnings) = add_base(&cube10(), &box_base(20.0, 20.0, 3.0, 1.0)).unwrap();
        assert!(warnings.is_empty());
        let r = validate(&m);
        assert_eq!(r.connected_component_count, 2);
        assert!(r.multi_shell && r.watertight);
        assert!((m.signed_volume() - 2200.0).abs() < 1e-9);
        let b = m.bbox().unwrap();
        assert_eq!(b.min.z, 0.0);
        assert_eq!(b.max.z, 12.0);
        assert_eq!((b.min.x, b.max.x), (0.0, 20.0));
    }

    #[test]
    fn small_footprint_warns() {
        let (_, warnings) = add_base(&cube10(), &box_base(8.0, 20.0, 3.0, 1.0)).unwrap();
        assert_eq!(warnings, vec![BaseWarning::FootprintTooSmall]);
        let cyl = BaseSpec {
            shape: BaseShape::Cylinder { diameter: 12.0 },
            height: 2.0,
            embed: 0.0,
        };
        let (_, warnings) = add_base(&cube10(), &cyl).unwrap();
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn preconditions() {
        assert_eq!(add_base(&cube10(), &box_base(20.0, 20.0, 0.0, 0.0)).unwrap_err(), BaseError::InvalidHeight);
        assert_eq!(add_base(&cube10(), &box_base(20.0, 20.0, 3.0, -1.0)).unwrap_err(), BaseError::InvalidEmbed);
        assert_eq!(add_base(&cube10(), &box_base(0.0, 20.0, 3.0, 0.0)).unwrap_err(), BaseError::InvalidFootprint);
        assert_eq!(
            add_base(&TriMesh::empty(), &box_base(20.0, 20.0, 3.0, 0.0)).unwrap_err(),
            BaseError::EmptyMesh
        );
    }

    #[test]
    fn spec_parses_from_toml() {
        let spec: BaseSpec<f64> = toml::from_str("shape = \"cylinder\"\ndiameter = 60.0\nheight = 4.0\nembed = 1.0").unwrap();
        assert_eq!(spec.shape, BaseShape::Cylinder { diameter: 60.0 });
        assert_eq!(spec.embed, 1.0);
    }
}
