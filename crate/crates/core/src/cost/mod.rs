//! Filament economics: reel length, price per metre and per-object cost.

mod fixture;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{validate, TriMesh};
use crate::scalar::Real;

pub use fixture::{exhibition_cost_rows, ExhibitionCostRow};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("reel {0} must be positive and finite")]
    InvalidReel(&'static str),
    #[error("filament length must be non-negative, got {0}")]
    NegativeLength(f64),
    #[error("flow factor must be positive, got {0}")]
    InvalidFlow(f64),
    #[error("mesh is not watertight, so its volume is meaningless; run validate for details")]
    NotWatertight,
}

/// A filament coil. Diameter is in millimetres, density in kg/m³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReelSpec<T> {
    pub mass_kg: T,
    pub cost_eur: T,
    pub diameter_mm: T,
    pub density_kg_m3: T,
}

impl<T: Real> Default for ReelSpec<T> {
    /// 1 kg of 3 mm PLA for 25 €.
    fn default() -> Self {
        Self {
            mass_kg: T::lit(1.0),
            cost_eur: T::lit(25.0),
            diameter_mm: T::lit(3.0),
            density_kg_m3: T::lit(1240.0),
        }
    }
}

impl<T: Real> ReelSpec<T> {
    /// Mass, diameter and density must be positive; cost may be zero.
    pub fn check(&self) -> Result<(), CostError> {
        let positive = |v: T| v > T::zero() && v.is_finite();
        if !positive(self.mass_kg) {
            return Err(CostError::InvalidReel("mass"));
        }
        if !(self.cost_eur >= T::zero() && self.cost_eur.is_finite()) {
            return Err(CostError::InvalidReel("cost"));
        }
        if !positive(self.diameter_mm) {
            return Err(CostError::InvalidReel("diameter"));
        }
        if !positive(self.density_kg_m3) {
            return Err(CostError::InvalidReel("density"));
        }
        Ok(())
    }

    /// Filament cross-section in mm².
    pub fn cross_section_mm2(&self) -> T {
        let r = self.diameter_mm * T::half();
        T::PI() * r * r
    }
}

/// L = m / (ρ π (d/2)²), in metres.
pub fn reel_length<T: Real>(reel: &ReelSpec<T>) -> T {
    let r = reel.diameter_mm / T::lit(1000.0) * T::half();
    reel.mass_kg / (reel.density_kg_m3 * T::PI() * r * r)
}

/// Euro per metre of filament.
pub fn cost_per_meter<T: Real>(reel: &ReelSpec<T>) -> T {
    reel.cost_eur / reel_length(reel)
}

/// Rounds to cents, halves away from zero.
pub fn round_cents<T: Real>(eur: T) -> T {
    (eur * T::lit(100.0)).round() / T::lit(100.0)
}

pub fn object_cost<T: Real>(length_m: T, reel: &ReelSpec<T>) -> Result<T, CostError> {
    // Also rejects NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(length_m >= T::zero()) {
        return Err(CostError::NegativeLength(length_m.to_f64_lossy()));
    }
    Ok(round_cents(length_m * cost_per_meter(reel)))
}

/// Filament needed to extrude the mesh's volume (mm³) times `flow`, in
/// metres.
pub fn estimate_filament_length<T: Real>(mesh: &TriMesh<T>, reel: &ReelSpec<T>, flow: T) -> Result<T, CostError> {
    if !(flow > T::zero() && flow.is_finite()) {
        return Err(CostError::InvalidFlow(flow.to_f64_lossy()));
    }
    if !validate(mesh).watertight {
        return Err(CostError::NotWatertight);
    }
    let volume = mesh.signed_volume().abs() * flow;
    Ok(volume / reel.cross_section_mm2() / T::lit(1000.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LengthProvenance {
    /// Length supplied by the user (e.g. from a slicer).
    MeasuredLength,
    /// Length derived from mesh volume.
    VolumeEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport<T> {
    pub filament_length_m: T,
    pub cost_per_meter: T,
    pub object_cost: T,
    pub provenance: LengthProvenance,
}

impl<T: Real> CostReport<T> {
    pub fn new(length_m: T, reel: &ReelSpec<T>, provenance: LengthProvenance) -> Result<Self, CostError> {
        reel.check()?;
        Ok(Self {
            filament_length_m: length_m,
            cost_per_meter: cost_per_meter(reel),
            object_cost: object_cost(length_m, reel)?,
            provenance,
        })
    }
}

/// One object in a cost table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub name: String,
    pub author: String,
    pub size_mm: String,
    pub length_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostLine {
    #[serde(flatten)]
    pub row: CostRow,
    pub cost_eur: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostTable {
    pub reel_length_m: f64,
    pub cost_per_meter: f64,
    pub lines: Vec<CostLine>,
}

pub fn cost_table(rows: &[CostRow], reel: &ReelSpec<f64>) -> Result<CostTable, CostError> {
    reel.check()?;
    let lines = rows
        .iter()
        .map(|r| {
            Ok(CostLine {
                row: r.clone(),
                cost_eur: object_cost(r.length_m, reel)?,
            })
        })
        .collect::<Result<_, CostError>>()?;
    Ok(CostTable {
        reel_length_m: reel_length(reel),
        cost_per_meter: cost_per_meter(reel),
        lines,
    })
}

impl CostTable {
    /// Aligned plain text, one line per object after a header.
    pub fn to_text(&self) -> String {
        let header = ["Object", "Author", "Size (mm)", "Length (m)", "Cost (EUR)"];
        let cells: Vec<[String; 5]> = self
            .lines
            .iter()
            .map(|l| {
                [
                    l.row.name.clone(),
                    l.row.author.clone(),
                    l.row.size_mm.clone(),
                    format!("{:.2}", l.row.length_m),
                    format!("{:.2}", l.cost_eur),
                ]
            })
            .collect();
        let mut width = header.map(str::len);
        for c in &cells {
            for (w, s) in width.iter_mut().zip(c) {
                *w = (*w).max(s.chars().count());
            }
        }
        let line = |c: [&str; 5]| {
            format!(
                "{:<w0$}  {:<w1$}  {:<w2$}  {:>w3$}  {:>w4$}",
                c[0],
                c[1],
                c[2],
                c[3],
                c[4],
                w0 = width[0],
                w1 = width[1],
                w2 = width[2],
                w3 = width[3],
                w4 = width[4]
            )
            .trim_end()
            .to_string()
        };
        let mut out = line(header);
        out.push('\n');
        for c in &cells {
            out.push_str(&line([&c[0], &c[1], &c[2], &c[3], &c[4]]));
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["name", "author", "size_mm", "length_m", "cost_eur"]).expect("in-memory write");
        for l in &self.lines {
            w.write_record([
                l.row.name.as_str(),
                l.row.author.as_str(),
                l.row.size_mm.as_str(),
                &format!("{:.2}", l.row.length_m),
                &format!("{:.2}", l.cost_eur),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }
}
