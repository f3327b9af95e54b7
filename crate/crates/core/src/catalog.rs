//! Named exhibition objects with default print plans.
//!
//! Only Barth's sextic has a published equation; every other entry is a
//! placeholder whose mesh the user supplies as an STL or X3D file.

use serde::Serialize;
use thiserror::Error;

use crate::field::ScalarField;
use crate::mesh::FitTarget;
use crate::pipeline::{PlanBase, PrintPlan};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown catalog entry {name:?}; available: {}", available.join(", "))]
pub struct UnknownEntry {
    pub name: String,
    pub available: Vec<&'static str>,
}

/// How an object was prepared for printing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Procedure {
    /// Scaled and printed as one piece.
    Direct,
    /// Scaled and set on a support base.
    SupportBase,
    /// Cut into two halves, printed separately and glued.
    Halves,
    /// Cut into five parts.
    FiveParts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntrySource {
    /// Barth's sextic, meshed from its field.
    Barth,
    /// Mesh supplied by the user.
    ExternalMesh,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    /// Lookup key.
    pub name: &'static str,
    /// File name in the exhibition data.
    pub object_name: &'static str,
    pub attribution: &'static str,
    /// Printed bounding box.
    pub print_size_mm: [f64; 3],
    pub procedure: Procedure,
    pub source: EntrySource,
}

const OL: &str = "Oliver Labs";
const OL_HH: &str = "Oliver Labs, Herwig Hauser";
const HH_OL: &str = "Herwig Hauser, Oliver Labs";
const F_HH_OL: &str = "FORWISS, Herwig Hauser, Oliver Labs";

macro_rules! entry {
    ($name:literal, $object:literal, $by:expr, [$x:literal, $y:literal, $z:literal], $proc:ident) => {
        entry!($name, $object, $by, [$x, $y, $z], $proc, ExternalMesh)
    };
    ($name:literal, $object:literal, $by:expr, [$x:literal, $y:literal, $z:literal], $proc:ident, $src:ident) => {
        CatalogEntry {
            name: $name,
            object_name: $object,
            attribution: $by,
            print_size_mm: [$x, $y, $z],
            procedure: Procedure::$proc,
            source: EntrySource::$src,
        }
    };
}

static ENTRIES: [CatalogEntry; 17] = [
    entry!("barth", "Barth_65_50fin_206mm_th2p1mm", OL, [200.0, 200.0, 200.0], Halves, Barth),
    entry!("calypso", "Calypso_with_support_200mm_th2mm", F_HH_OL, [86.0, 120.0, 84.0], Halves),
    entry!("croissant", "Croissant_empty_200mm_th3p0mm", F_HH_OL, [95.0, 100.0, 35.0], Halves),
    entry!("dinisurface", "DiniSurface_299mm_th2p1mm", OL, [180.0, 50.0, 50.0], Halves),
    entry!("distel", "Distel_200mm_full", F_HH_OL, [98.0, 98.0, 98.0], Halves),
    entry!("dullo", "Dullo_200mm_th3p1", F_HH_OL, [90.0, 90.0, 45.0], Halves),
    entry!("gyroid", "Gyroid_199mm_th3p0mm", OL, [100.0, 100.0, 100.0], Halves),
    entry!("helix", "Helix_200mm_th3p0mm", OL_HH, [48.0, 120.0, 120.0], Direct),
    entry!("kreisel", "Kreisel_hollow_200mm_th3p1mm", OL_HH, [100.0, 100.0, 100.0], Halves),
    entry!("lawson", "Lawson_201mm_th2p1mm", "Geometriewerstatt (Univ. of Tübingen)", [114.0, 112.0, 192.0], SupportBase),
    entry!("lemon", "Lemon_offset_215mm", HH_OL, [95.0, 95.0, 160.0], Halves),
    entry!("nepali", "Nepali_empty_200mm_th3p0mm", F_HH_OL, [96.0, 96.0, 62.0], Halves),
    entry!("schneeflocke", "Schneeflocke_200mm_th3p5mm", OL_HH, [70.0, 100.0, 100.0], Halves),
    entry!("spacecurveincube", "SpaceCurveInCube_206mm_th5p0mm", OL, [180.0, 180.0, 180.0], FiveParts),
    entry!("spitz", "Spitz_223mm_th2p5mm", "FORWISS, Herwig Hauser", [100.0, 76.0, 100.0], Halves),
    entry!("tuelle", "Tuelle_200mm_th3p0mm", OL_HH, [100.0, 100.0, 100.0], Halves),
    entry!("visavis", "Visavis_211mm_th4p0mm", F_HH_OL, [105.0, 95.0, 100.0], Halves),
];

/// Clip sphere radius for Barth's sextic in field units.
pub const BARTH_CLIP_RADIUS: f64 = 2.0;

pub fn catalog() -> &'static [CatalogEntry] {
    &ENTRIES
}

pub fn catalog_names() -> Vec<&'static str> {
    ENTRIES.iter().map(|e| e.name).collect()
}

/// Exact-match lookup.
pub fn catalog_lookup(name: &str) -> Result<&'static CatalogEntry, UnknownEntry> {
    ENTRIES.iter().find(|e| e.name == name).ok_or_else(|| UnknownEntry {
        name: name.to_string(),
        available: catalog_names(),
    })
}

impl CatalogEntry {
    pub fn field(&self) -> Option<ScalarField<f64>> {
        match self.source {
            EntrySource::Barth => Some(ScalarField::barth()),
            EntrySource::ExternalMesh => None,
        }
    }

    pub fn nominal(&self) -> ObjectName {
        parse_object_name(self.object_name)
    }

    /// Longest printed axis.
    pub fn print_size_longest_mm(&self) -> f64 {
        self.print_size_mm.iter().copied().fold(0.0, f64::max)
    }

    pub fn default_plan(&self) -> PrintPlan {
        let longest = self.print_size_longest_mm();
        let mut plan = PrintPlan {
            source: Some(self.name.to_string()),
            target_size_mm: Some(FitTarget::Longest(longest)),
            ..PrintPlan::default()
        };
        if self.source == EntrySource::Barth {
            plan.clip_radius = Some(BARTH_CLIP_RADIUS);
            plan.bounds = Some([-2.2, 2.2]);
            plan.resolution = Some(192);
            plan.shell_thickness_mm = self.nominal().thickness_mm;
        }
        match self.procedure {
            Procedure::Direct => {}
            Procedure::SupportBase => {
                plan.base = Some(PlanBase {
                    shape: "cylinder".into(),
                    dims: vec![60.0],
                    height: 4.0,
                    embed: 1.0,
                });
            }
            Procedure::Halves => {
                plan.recenter = Some(true);
                plan.split_planes = Some(vec![[0.0, 0.0, 1.0, 0.0]]);
            }
            Procedure::FiveParts => {
                // Five equal slabs of the printed height.
                let slab = longest / 5.0;
                plan.recenter = Some(true);
                plan.split_planes = Some(
                    [-1.5, -0.5, 0.5, 1.5]
                        .iter()
                        .map(|k| [0.0, 0.0, 1.0, k * slab])
                        .collect(),
                );
            }
        }
        plan
    }
}

/// Pieces of an exhibition file name such as `Helix_200mm_th3p0mm`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectName {
    pub base: String,
    pub size_mm: Option<f64>,
    pub thickness_mm: Option<f64>,
}

fn parse_size(token: &str) -> Option<f64> {
    let digits = token.strip_suffix("mm")?;
    (!digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit() || c == '.'))
        .then(|| digits.parse().ok())
        .flatten()
}

/// `th2p1mm` → 2.1; the `mm` suffix and the fractional part are optional.
fn parse_thickness(token: &str) -> Option<f64> {
    let rest = token.strip_prefix("th")?;
    let rest = rest.strip_suffix("mm").unwrap_or(rest);
    let (whole, frac) = rest.split_once('p').unwrap_or((rest, ""));
    let digits = |s: &str| s.chars().all(|c| c.is_ascii_digit());
    if whole.is_empty() || !digits(whole) || !digits(frac) {
        return None;
    }
    if frac.is_empty() {
        whole.parse().ok()
    } else {
        format!("{whole}.{frac}").parse().ok()
    }
}

/// Best-effort split of an exhibition file name into base name, nominal size
/// and wall thickness.
pub fn parse_object_name(filename: &str) -> ObjectName {
    let stem = filename
        .rsplit_once('.')
        .filter(|(_, ext)| matches!(ext.to_ascii_lowercase().as_str(), "stl" | "x3d"))
        .map_or(filename, |(s, _)| s);
    let mut size = None;
    let mut thickness = None;
    let mut base_end = None;
    let mut offset = 0;
    for token in stem.split(['_', ' ']) {
        let start = offset;
        offset += token.len() + 1;
        let found_size = parse_size(token);
        let found_thickness = parse_thickness(token);
        if found_size.is_some() {
            size = found_size;
        }
        if found_thickness.is_some() {
            thickness = found_thickness;
        }
        if (found_size.is_some() || found_thickness.is_some()) && base_end.is_none() {
            base_end = Some(start);
        }
    }
    let base = stem[..base_end.unwrap_or(stem.len())].trim_end_matches(['_', ' ']);
    ObjectName {
        base: base.to_string(),
        size_mm: size,
        thickness_mm: thickness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_parse() {
        let p = parse_object_name("Helix_200mm_th3p0mm");
        assert_eq!((p.base.as_str(), p.size_mm, p.thickness_mm), ("Helix", Some(200.0), Some(3.0)));
        let p = parse_object_name("Distel_200mm_full");
        assert_eq!((p.base.as_str(), p.size_mm, p.thickness_mm), ("Distel", Some(200.0), None));
        let p = parse_object_name("Plain");
        assert_eq!((p.base.as_str(), p.size_mm, p.thickness_mm), ("Plain", None, None));
        let p = parse_object_name("Barth_65_50fin_206mm_th2p1mm");
        assert_eq!((p.base.as_str(), p.size_mm, p.thickness_mm), ("Barth_65_50fin", Some(206.0), Some(2.1)));
        let p = parse_object_name("Spitz_223mm_th2p5mm.stl");
        assert_eq!((p.base.as_str(), p.thickness_mm), ("Spitz", Some(2.5)));
        assert_eq!(parse_object_name("Dullo_200mm_th3p1").thickness_mm, Some(3.1));
        assert_eq!(parse_object_name("Calypso_with_support_200mm_th2mm").thickness_mm, Some(2.0));
        assert_eq!(parse_object_name("Helix 200mm th3p0mm").base, "Helix");
    }

    #[test]
    fn lookup() {
        let barth = catalog_lookup("barth").unwrap();
        assert!(barth.field().is_some());
        let plan = barth.default_plan();
        assert_eq!(plan.clip_radius, Some(2.0));
        assert_eq!(plan.target_size_mm, Some(FitTarget::Longest(200.0)));
        assert_eq!(plan.shell_thickness_mm, Some(2.1));

        let lawson = catalog_lookup("lawson").unwrap();
        assert!(lawson.field().is_none());
        assert!(lawson.default_plan().base.is_some());

        let err = catalog_lookup("nosuch").unwrap_err();
        assert!(err.to_string().contains("barth"));
    }

    #[test]
    fn entries_are_consistent() {
        let mut names = catalog_names();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), catalog().len());
        for e in catalog() {
            assert!(!e.attribution.is_empty());
            let parsed = e.nominal();
            assert!(parsed.size_mm.is_some(), "{}", e.object_name);
            assert_eq!(parsed.base.to_ascii_lowercase().split('_').next().unwrap(), e.name);
        }
    }

    #[test]
    fn five_part_plan_has_four_planes() {
        let plan = catalog_lookup("spacecurveincube").unwrap().default_plan();
        assert_eq!(plan.split_planes.as_ref().unwrap().len(), 4);
    }
}
