//! End-to-end execution of a print plan.
//!
//! Stages run in a fixed order: acquire (mesh a field, optionally as a
//! shell, or load a file), scale, build-volume check, split, base, validate,
//! write, cost. Any failing stage aborts the job and removes files it had
//! already written.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::catalog_lookup;
use crate::cost::{cost_per_meter, estimate_filament_length, object_cost, LengthProvenance, ReelSpec};
use crate::field::ScalarField;
use crate::io::{read_mesh_file, read_stl, write_stl_ascii, write_stl_binary, MeshFormat};
use crate::mesh::{check_build_volume, fit_factor, validate, FitTarget, TriMesh, DEFAULT_BUILD_VOLUME_MM};
use crate::mesher::{mesh_isosurface, GridSpec, MeshJobReport};
use crate::ops::{add_base, split_multi, BaseShape, BaseSpec, SplitPlane};
use crate::vec3::Vec3;

pub const DEFAULT_RESOLUTION: usize = 128;

/// Re-meshing rounds when converting a wall thickness to field units.
const SHELL_ITERATIONS: usize = 4;
/// Relative change in field thickness that ends the iteration.
const SHELL_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Plan,
    Acquire,
    Scale,
    BuildVolume,
    Split,
    Base,
    Write,
    Cost,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Plan => "plan",
            Stage::Acquire => "acquire",
            Stage::Scale => "scale",
            Stage::BuildVolume => "build-volume",
            Stage::Split => "split",
            Stage::Base => "base",
            Stage::Write => "write",
            Stage::Cost => "cost",
        })
    }
}

#[derive(Debug, Error)]
#[error("{stage} stage failed: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
}

fn fail(stage: Stage) -> impl Fn(&dyn fmt::Display) -> PipelineError {
    move |e| PipelineError {
        stage,
        message: e.to_string(),
    }
}

/// Support base as written in a plan: `dims` is `[x, y]` for a box or
/// `[diameter]` for a cylinder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanBase {
    pub shape: String,
    pub dims: Vec<f64>,
    pub height: f64,
    #[serde(default)]
    pub embed: f64,
}

impl PlanBase {
    pub fn to_spec(&self) -> Result<BaseSpec<f64>, String> {
        let shape = match (self.shape.as_str(), self.dims.as_slice()) {
            ("box", &[x, y]) => BaseShape::Box { x, y },
            ("cylinder" | "cyl", &[diameter]) => BaseShape::Cylinder { diameter },
            ("box", _) => return Err("box base needs dims = [x, y]".into()),
            ("cylinder" | "cyl", _) => return Err("cylinder base needs dims = [diameter]".into()),
            (other, _) => return Err(format!("unknown base shape {other:?}; expected box or cylinder")),
        };
        let spec = BaseSpec {
            shape,
            height: self.height,
            embed: self.embed,
        };
        spec.check().map_err(|e| e.to_string())?;
        Ok(spec)
    }
}

/// Output files: a path prefix, or one path per part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Outputs {
    Prefix(String),
    Paths(Vec<String>),
}

/// One object's preparation recipe, read from TOML. Unset keys fall back to
/// the catalog defaults when `source` names a catalog entry.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrintPlan {
    /// Catalog name, or a path to an `.stl`/`.x3d` file.
    pub source: Option<String>,
    /// Field expression, used instead of `source`.
    pub expr: Option<String>,
    /// Mesh file for catalog entries without a field.
    pub input: Option<String>,
    /// Clip sphere radius around the origin, in field units.
    pub clip_radius: Option<f64>,
    /// Symmetric grid bounds `[lo, hi]` in field units.
    pub bounds: Option<[f64; 2]>,
    /// Cells per grid axis.
    pub resolution: Option<usize>,
    /// Printed wall thickness; turns a field's zero set into a solid shell.
    pub shell_thickness_mm: Option<f64>,
    pub target_size_mm: Option<FitTarget<f64>>,
    /// Move the scaled bounding-box center to the origin before splitting.
    pub recenter: Option<bool>,
    /// Split in source units before scaling.
    pub split_first: Option<bool>,
    /// `[nx, ny, nz, offset]`, plane `n·p = offset` in mm after scaling.
    pub split_planes: Option<Vec<[f64; 4]>>,
    pub base: Option<PlanBase>,
    pub outputs: Option<Outputs>,
    /// Treat build-volume violations as errors.
    pub strict: Option<bool>,
    pub build_volume_mm: Option<[f64; 3]>,
    /// Extrusion volume multiplier for the filament estimate.
    pub flow: Option<f64>,
    pub ascii: Option<bool>,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

macro_rules! merge_fields {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl PrintPlan {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| fail(Stage::Plan)(&e))
    }

    /// Reads a plan; relative paths in it resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError {
            stage: Stage::Plan,
            message: format!("{}: {e}", path.display()),
        })?;
        let mut plan = Self::from_toml(&text)?;
        plan.base_dir = path.parent().map(Path::to_path_buf);
        Ok(plan)
    }

    /// Fills unset keys from the catalog entry named by `source`, if any.
    pub fn with_catalog_defaults(&self) -> Self {
        let mut plan = self.clone();
        let Some(entry) = self.source.as_deref().and_then(|s| catalog_lookup(s).ok()) else {
            return plan;
        };
        let defaults = entry.default_plan();
        merge_fields!(plan, defaults; expr, input, clip_radius, bounds, resolution, shell_thickness_mm,
            target_size_mm, recenter, split_first, split_planes, base, outputs, strict, build_volume_mm, flow, ascii);
        plan
    }

    fn resolve(&self, p: &str) -> PathBuf {
        let path = PathBuf::from(p);
        match &self.base_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path,
        }
    }

    /// Sampling grid for field sources: `bounds` or 1.1 × clip radius.
    pub fn grid(&self) -> Result<GridSpec<f64>, PipelineError> {
        let [lo, hi] = match (self.bounds, self.clip_radius) {
            (Some(b), _) => b,
            (None, Some(r)) => [-1.1 * r, 1.1 * r],
            (None, None) => {
                return Err(PipelineError {
                    stage: Stage::Plan,
                    message: "field sources need bounds or clip_radius".into(),
                })
            }
        };
        GridSpec::cube(lo, hi, self.resolution.unwrap_or(DEFAULT_RESOLUTION)).map_err(|e| fail(Stage::Plan)(&e))
    }

    fn planes(&self) -> Result<Vec<SplitPlane<f64>>, PipelineError> {
        self.split_planes
            .iter()
            .flatten()
            .map(|&[x, y, z, d]| SplitPlane::new(Vec3::new(x, y, z), d).map_err(|e| fail(Stage::Plan)(&e)))
            .collect()
    }
}

enum Source {
    Field { label: String, field: ScalarField<f64> },
    File(PathBuf),
}

fn resolve_source(plan: &PrintPlan) -> Result<Source, PipelineError> {
    let plan_err = |message: String| PipelineError {
        stage: Stage::Plan,
        message,
    };
    match (plan.source.as_deref(), plan.expr.as_deref()) {
        (Some(_), Some(_)) => Err(plan_err("set either source or expr, not both".into())),
        (None, Some(e)) => ScalarField::parse(e)
            .map(|field| Source::Field {
                label: e.to_string(),
                field,
            })
            .map_err(|e| fail(Stage::Plan)(&e)),
        (Some(s), None) => match catalog_lookup(s) {
            Ok(entry) => match (entry.field(), &plan.input) {
                (Some(field), _) => Ok(Source::Field {
                    label: entry.name.to_string(),
                    field,
                }),
                (None, Some(input)) => Ok(Source::File(plan.resolve(input))),
                (None, None) => Err(plan_err(format!(
                    "catalog entry {:?} has no published equation; set input to its mesh file",
                    entry.name
                ))),
            },
            Err(_) if MeshFormat::from_path(Path::new(s)).is_ok() => Ok(Source::File(plan.resolve(s))),
            Err(unknown) => Err(fail(Stage::Plan)(&unknown)),
        },
        (None, None) => match &plan.input {
            Some(input) => Ok(Source::File(plan.resolve(input))),
            None => Err(plan_err("plan has no source, expr or input".into())),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartReport {
    pub path: String,
    pub triangle_count: usize,
    pub vertex_count: usize,
    pub bbox_min_mm: [f64; 3],
    pub bbox_max_mm: [f64; 3],
    pub extent_mm: [f64; 3],
    pub watertight: bool,
    pub connected_components: usize,
    /// Volume of the object piece before any base was added.
    pub object_volume_mm3: f64,
    /// Volume of the written part, base included.
    pub volume_mm3: f64,
    pub within_build_volume: bool,
    /// Written despite exceeding the build volume.
    pub build_volume_override: bool,
    pub filament_length_m: Option<f64>,
    pub cost_eur: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JobReport {
    pub source: String,
    pub mesh_job: Option<MeshJobReport>,
    pub scale_factor: f64,
    /// Wall thickness after scaling, for shell plans.
    pub wall_thickness_mm: Option<f64>,
    /// Volume of the scaled object before splitting.
    pub pre_split_volume_mm3: f64,
    pub parts: Vec<PartReport>,
    pub total_filament_length_m: f64,
    pub total_cost_eur: f64,
    pub cost_per_meter: f64,
    pub length_provenance: LengthProvenance,
    pub warnings: Vec<String>,
}

/// Runs `plan` with catalog defaults applied. `grid` overrides the plan's
/// own sampling grid for field sources.
pub fn run_plan(plan: &PrintPlan, grid: Option<&GridSpec<f64>>, reel: &ReelSpec<f64>) -> Result<JobReport, PipelineError> {
    let plan = plan.with_catalog_defaults();
    reel.check().map_err(|e| fail(Stage::Plan)(&e))?;
    let planes = plan.planes()?;
    let base = plan.base.as_ref().map(PlanBase::to_spec).transpose().map_err(|m| PipelineError {
        stage: Stage::Plan,
        message: m,
    })?;
    let outputs = plan.outputs.clone().ok_or_else(|| PipelineError {
        stage: Stage::Plan,
        message: "plan has no outputs".into(),
    })?;
    let flow = plan.flow.unwrap_or(1.0);
    let strict = plan.strict.unwrap_or(false);
    let limit = Vec3::from_array(plan.build_volume_mm.unwrap_or(DEFAULT_BUILD_VOLUME_MM));
    let mut warnings = Vec::new();

    // Acquire
    let source = resolve_source(&plan)?;
    let (label, mesh, mesh_job, field_thickness) = match source {
        Source::File(path) => {
            let (mesh, w) = read_mesh_file(&path).map_err(|e| fail(Stage::Acquire)(&e))?;
            warnings.extend(w);
            if plan.shell_thickness_mm.is_some() {
                warnings.push("shell_thickness_mm ignored for mesh files".into());
            }
            (path.display().to_string(), mesh, None, None)
        }
        Source::Field { label, field } => {
            let grid = match grid {
                Some(g) => *g,
                None => plan.grid()?,
            };
            let clip = plan
                .clip_radius
                .map(|r| ScalarField::sphere(Vec3::zero(), r))
                .transpose()
                .map_err(|e| fail(Stage::Plan)(&e))?;
            let (mesh, job, thickness) = mesh_field(&field, &grid, clip.as_ref(), &plan)?;
            (label, mesh, Some(job), thickness)
        }
    };
    if let Some(job) = &mesh_job {
        if job.shell_degenerate_samples > 0 {
            warnings.push(format!(
                "{} shell samples had a vanishing gradient",
                job.shell_degenerate_samples
            ));
        }
        if job.nan_samples > 0 {
            warnings.push(format!("{} field samples were NaN", job.nan_samples));
        }
    }

    // Scale
    let whole_bbox = mesh.bbox().ok_or_else(|| PipelineError {
        stage: Stage::Scale,
        message: "source mesh is empty".into(),
    })?;
    let s = match &plan.target_size_mm {
        Some(t) => fit_factor(&whole_bbox, t).map_err(|e| fail(Stage::Scale)(&e))?,
        None => 1.0,
    };
    let c = whole_bbox.center();
    let recenter = plan.recenter.unwrap_or(false);
    let similarity = |v: Vec3<f64>| if recenter { (v - c) * s } else { c + (v - c) * s };

    let split_first = plan.split_first.unwrap_or(false);
    let pieces = if split_first {
        split_multi(&mesh, &planes).map_err(|e| fail(Stage::Split)(&e))?
    } else {
        vec![mesh]
    };
    let pieces: Vec<TriMesh<f64>> = pieces.iter().map(|m| m.map_vertices(similarity)).collect();
    let pre_split_volume: f64 = pieces.iter().map(TriMesh::signed_volume).sum();

    // Build volume, whole object. Fail early when nothing will be cut off;
    // otherwise the parts are checked after splitting.
    if strict && planes.is_empty() && !check_build_volume(&pieces[0], limit) {
        let e = pieces[0].bbox().map(|b| b.extent()).unwrap_or_else(Vec3::zero);
        return Err(PipelineError {
            stage: Stage::BuildVolume,
            message: format!(
                "scaled object {:.1} x {:.1} x {:.1} mm exceeds the {:.0} x {:.0} x {:.0} mm build volume",
                e.x, e.y, e.z, limit.x, limit.y, limit.z
            ),
        });
    }

    // Split
    let parts = if split_first {
        pieces
    } else {
        split_multi(&pieces[0], &planes).map_err(|e| fail(Stage::Split)(&e))?
    };

    // Base
    let mut finished = Vec::with_capacity(parts.len());
    for part in &parts {
        let object_volume = part.signed_volume();
        let with_base = match &base {
            Some(spec) => {
                let (m, w) = add_base(part, spec).map_err(|e| fail(Stage::Base)(&e))?;
                warnings.extend(w.iter().map(ToString::to_string));
                m
            }
            None => part.clone(),
        };
        finished.push((with_base, object_volume));
    }

    // Validate the written (single-precision) geometry and check the build
    // volume per part.
    let paths = output_paths(&plan, &outputs, finished.len())?;
    let ascii = plan.ascii.unwrap_or(false);
    let mut encoded = Vec::with_capacity(finished.len());
    let mut reports = Vec::with_capacity(finished.len());
    for ((mesh, object_volume), path) in finished.iter().zip(&paths) {
        let comment = format!("{label} part");
        let bytes = write_stl_binary(mesh, &comment).map_err(|e| fail(Stage::Write)(&e))?;
        let printed: TriMesh<f64> = read_stl(&bytes).map_err(|e| fail(Stage::Write)(&e))?;
        let report = validate(&printed);
        if !report.watertight {
            warnings.push(format!("{} is not watertight", path.display()));
        }
        let fits = check_build_volume(&printed, limit);
        if !fits {
            let msg = format!("{} exceeds the build volume", path.display());
            if strict {
                return Err(PipelineError {
                    stage: Stage::BuildVolume,
                    message: msg,
                });
            }
            warnings.push(msg);
        }
        let file_bytes = if ascii {
            write_stl_ascii(&printed, &comment).into_bytes()
        } else {
            write_stl_binary(&printed, &comment).map_err(|e| fail(Stage::Write)(&e))?
        };
        let bbox = report.bounding_box.expect("written parts are nonempty");
        reports.push(PartReport {
            path: path.display().to_string(),
            triangle_count: printed.triangle_count(),
            vertex_count: printed.vertices().len(),
            bbox_min_mm: bbox.min.to_array(),
            bbox_max_mm: bbox.max.to_array(),
            extent_mm: bbox.extent().to_array(),
            watertight: report.watertight,
            connected_components: report.connected_component_count,
            object_volume_mm3: *object_volume,
            volume_mm3: printed.signed_volume(),
            within_build_volume: fits,
            build_volume_override: !fits,
            filament_length_m: None,
            cost_eur: None,
        });
        encoded.push((printed, file_bytes));
    }

    // Write
    let mut written: Vec<&Path> = Vec::new();
    for ((_, bytes), path) in encoded.iter().zip(&paths) {
        let result = path
            .parent()
            .filter(|d| !d.as_os_str().is_empty())
            .map_or(Ok(()), std::fs::create_dir_all)
            .and_then(|_| std::fs::write(path, bytes));
        if let Err(e) = result {
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            return Err(PipelineError {
                stage: Stage::Write,
                message: format!("{}: {e}", path.display()),
            });
        }
        written.push(path);
    }

    // Cost
    let mut total_length = 0.0;
    for (report, (printed, _)) in reports.iter_mut().zip(&encoded) {
        match estimate_filament_length(printed, reel, flow) {
            Ok(len) => {
                report.filament_length_m = Some(len);
                report.cost_eur = Some(object_cost(len, reel).map_err(|e| fail(Stage::Cost)(&e))?);
                total_length += len;
            }
            Err(e) => warnings.push(format!("{}: no cost estimate: {e}", report.path)),
        }
    }

    Ok(JobReport {
        source: label,
        mesh_job,
        scale_factor: s,
        wall_thickness_mm: field_thickness.map(|t| t * s),
        pre_split_volume_mm3: pre_split_volume,
        parts: reports,
        total_filament_length_m: total_length,
        total_cost_eur: object_cost(total_length, reel).map_err(|e| fail(Stage::Cost)(&e))?,
        cost_per_meter: cost_per_meter(reel),
        length_provenance: LengthProvenance::VolumeEstimate,
        warnings,
    })
}

/// Meshes a field, as a shell when the plan asks for a wall thickness.
/// Returns the mesh, its job report and the shell thickness in field units.
fn mesh_field(
    field: &ScalarField<f64>,
    grid: &GridSpec<f64>,
    clip: Option<&ScalarField<f64>>,
    plan: &PrintPlan,
) -> Result<(TriMesh<f64>, MeshJobReport, Option<f64>), PipelineError> {
    let mesh_err = fail(Stage::Acquire);
    let Some(t_mm) = plan.shell_thickness_mm else {
        let (m, job) = mesh_isosurface(field, grid, clip).map_err(|e| mesh_err(&e))?;
        return Ok((m, job, None));
    };
    let shell_mesh = |t: f64| {
        let shell = field.clone().shell(t).map_err(|e| mesh_err(&e))?;
        mesh_isosurface(&shell, grid, clip).map_err(|e| mesh_err(&e))
    };
    let Some(target) = &plan.target_size_mm else {
        let (m, job) = shell_mesh(t_mm)?;
        return Ok((m, job, Some(t_mm)));
    };
    // The thickness is given in print millimetres, but the scale that maps
    // field units to millimetres depends on the shell's own extent. Start
    // from the surface extent and iterate to a fixed point.
    let scale_of = |m: &TriMesh<f64>| {
        let bbox = m.bbox().expect("meshing succeeded");
        fit_factor(&bbox, target).map_err(|e| fail(Stage::Scale)(&e))
    };
    let (surface, _) = mesh_isosurface(field, grid, clip).map_err(|e| mesh_err(&e))?;
    let mut t_field = t_mm / scale_of(&surface)?;
    let mut attempt = shell_mesh(t_field)?;
    for _ in 0..SHELL_ITERATIONS {
        let next = t_mm / scale_of(&attempt.0)?;
        if (next - t_field).abs() <= SHELL_TOLERANCE * t_field {
            break;
        }
        t_field = next;
        attempt = shell_mesh(t_field)?;
    }
    Ok((attempt.0, attempt.1, Some(t_field)))
}

fn output_paths(plan: &PrintPlan, outputs: &Outputs, count: usize) -> Result<Vec<PathBuf>, PipelineError> {
    let paths: Vec<PathBuf> = match outputs {
        Outputs::Paths(list) => {
            if list.len() != count {
                return Err(PipelineError {
                    stage: Stage::Plan,
                    message: format!("plan lists {} outputs but the job produced {count} parts", list.len()),
                });
            }
            list.iter().map(|p| plan.resolve(p)).collect()
        }
        Outputs::Prefix(prefix) => {
            let prefix = prefix.strip_suffix(".stl").unwrap_or(prefix);
            if count == 1 {
                vec![plan.resolve(&format!("{prefix}.stl"))]
            } else {
                (1..=count).map(|k| plan.resolve(&format!("{prefix}_part{k}.stl"))).collect()
            }
        }
    };
    for p in &paths {
        if MeshFormat::from_path(p).ok() != Some(MeshFormat::Stl) {
            return Err(PipelineError {
                stage: Stage::Plan,
                message: format!("output {} must end in .stl", p.display()),
            });
        }
    }
    Ok(paths)
}
