use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use surfab::cost::{
    cost_per_meter, cost_table, estimate_filament_length, exhibition_cost_rows, reel_length, CostReport,
    LengthProvenance, ReelSpec,
};
use surfab::field::ScalarField;
use surfab::io::{read_mesh_file, write_stl_file};
use surfab::mesh::{scale_to_fit, validate, FitTarget, TriMesh, ValidityReport};
use surfab::mesher::{mesh_isosurface_with, vertex_residuals, GridSpec, MeshJobReport, MeshOptions};
use surfab::ops::{add_base, split_multi, SplitPlane};
use surfab::pipeline::{run_plan, PlanBase, PrintPlan};
use surfab::vec3::Vec3;

/// Prepare implicit surfaces and triangle meshes for desktop 3D printing.
#[derive(Debug, Parser)]
#[command(name = "surfab", version, propagate_version = true)]
struct Cli {
    /// Print a JSON report on stdout instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mesh the zero set of a field with marching cubes.
    Mesh(MeshArgs),
    /// Mesh a solid wall of the given thickness around a field's zero set.
    Shell(ShellArgs),
    /// Cut a closed mesh by planes into capped parts.
    Split(SplitArgs),
    /// Scale a mesh uniformly to a target size.
    Scale(ScaleArgs),
    /// Add a support base under a mesh.
    Base(BaseArgs),
    /// Check a mesh for watertightness and report its measures.
    Validate(InputArgs),
    /// Convert X3D or STL to STL.
    Convert(ConvertArgs),
    /// Filament length and cost.
    Cost(CostArgs),
    /// Run a print plan file.
    Run(RunArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "source")]
struct FieldSource {
    /// Built-in surface.
    #[arg(long, value_enum)]
    surface: Option<Surface>,
    /// Field expression in x, y, z; negative inside.
    #[arg(long, allow_hyphen_values = true)]
    expr: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Surface {
    Barth,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Cube bounds `lo,hi` applied to every axis.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    bounds: [f64; 2],
    /// Cells per axis: `n` or `nx,ny,nz`.
    #[arg(long, value_parser = parse_resolution)]
    res: [usize; 3],
    /// Intersect with a sphere of this radius around the origin.
    #[arg(long, value_parser = parse_decimal)]
    clip_sphere: Option<f64>,
    /// Meshing threads; defaults to all cores.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(short, long)]
    output: PathBuf,
    /// Write ASCII instead of binary STL.
    #[arg(long)]
    ascii: bool,
}

#[derive(Debug, Args)]
struct MeshArgs {
    #[command(flatten)]
    source: FieldSource,
    #[command(flatten)]
    grid: GridArgs,
    /// Mesh a wall of this thickness in field units instead of the surface.
    #[arg(long, value_parser = parse_decimal)]
    shell: Option<f64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct ShellArgs {
    #[command(flatten)]
    source: FieldSource,
    #[command(flatten)]
    grid: GridArgs,
    /// Wall thickness in field units.
    #[arg(long, value_parser = parse_decimal)]
    thickness: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// `.stl` or `.x3d` file.
    #[arg(short, long)]
    input: PathBuf,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Plane `nx,ny,nz,offset` with n·p = offset; repeat for more planes.
    #[arg(long = "plane", required = true, value_parser = parse_plane, allow_hyphen_values = true)]
    planes: Vec<[f64; 4]>,
    /// Parts are written as `<prefix>_part<k>.stl`.
    #[arg(short, long)]
    output: String,
    #[arg(long)]
    ascii: bool,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "target")]
struct FitArgs {
    /// Longest axis length in mm.
    #[arg(long, value_parser = parse_decimal)]
    fit: Option<f64>,
    /// Largest size fitting inside this box, `x,y,z` in mm.
    #[arg(long, value_parser = parse_triple)]
    fit_xyz: Option<[f64; 3]>,
}

#[derive(Debug, Args)]
struct ScaleArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    fit: FitArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Shape {
    Box,
    Cyl,
}

#[derive(Debug, Args)]
struct BaseArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum)]
    shape: Shape,
    /// `x,y` for a box, the diameter for a cylinder.
    #[arg(long, required = true, value_delimiter = ',', value_parser = parse_decimal)]
    dims: Vec<f64>,
    #[arg(long, value_parser = parse_decimal)]
    height: f64,
    /// Depth the object sinks into the base.
    #[arg(long, default_value = "0", value_parser = parse_decimal)]
    embed: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Table {
    /// The exhibition's 18 printed objects.
    #[value(alias = "paper")]
    Fixture,
}

#[derive(Debug, Args)]
struct CostArgs {
    /// Filament length in metres, e.g. from a slicer.
    #[arg(long, value_parser = parse_decimal, conflicts_with_all = ["input", "table"])]
    length: Option<f64>,
    /// Estimate the length from this mesh's volume.
    #[arg(short, long, conflicts_with = "table")]
    input: Option<PathBuf>,
    /// Extrusion volume multiplier for the estimate.
    #[arg(long, default_value = "1", value_parser = parse_decimal, requires = "input")]
    flow: f64,
    /// Reel mass in kg.
    #[arg(long, default_value = "1", value_parser = parse_decimal)]
    reel_mass: f64,
    /// Reel price in EUR.
    #[arg(long, default_value = "25", value_parser = parse_decimal)]
    reel_cost: f64,
    /// Filament diameter in mm.
    #[arg(long, default_value = "3", value_parser = parse_decimal)]
    diameter: f64,
    /// Filament density in kg/m³.
    #[arg(long, default_value = "1240", value_parser = parse_decimal)]
    density: f64,
    /// Print a cost table.
    #[arg(long, value_enum)]
    table: Option<Table>,
    /// Print the table as CSV.
    #[arg(long, requires = "table")]
    csv: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML print plan.
    #[arg(short, long)]
    plan: PathBuf,
    /// Override the plan's grid resolution.
    #[arg(long)]
    res: Option<usize>,
    /// Reel mass in kg.
    #[arg(long, default_value = "1", value_parser = parse_decimal)]
    reel_mass: f64,
    /// Reel price in EUR.
    #[arg(long, default_value = "25", value_parser = parse_decimal)]
    reel_cost: f64,
    #[arg(long, default_value = "3", value_parser = parse_decimal)]
    diameter: f64,
    #[arg(long, default_value = "1240", value_parser = parse_decimal)]
    density: f64,
}

/// Plain decimal such as `-2.25`; no exponents, infinities or NaN.
fn parse_decimal(s: &str) -> Result<f64, String> {
    let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    let ok = !(whole.is_empty() && frac.is_empty())
        && whole.chars().all(|c| c.is_ascii_digit())
        && frac.chars().all(|c| c.is_ascii_digit());
    if !ok {
        return Err(format!("{s:?} is not a decimal number"));
    }
    s.parse().map_err(|e| format!("{s:?}: {e}"))
}

fn parse_list<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let values = s.split(',').map(|v| parse_decimal(v.trim())).collect::<Result<Vec<_>, _>>()?;
    values
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected {N} comma-separated numbers, got {}", v.len()))
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    parse_list(s)
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    parse_list(s)
}

fn parse_plane(s: &str) -> Result<[f64; 4], String> {
    parse_list(s)
}

fn parse_resolution(s: &str) -> Result<[usize; 3], String> {
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    let values = s.split(',').map(parse).collect::<Result<Vec<_>, _>>()?;
    match *values.as_slice() {
        [n] => Ok([n; 3]),
        [x, y, z] => Ok([x, y, z]),
        _ => Err("expected n or nx,ny,nz".into()),
    }
}

/// A processing failure; exits with status 2.
#[derive(Debug)]
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn emit<T: Serialize>(json: bool, report: &T, text: impl FnOnce() -> String) -> Outcome {
    if json {
        println!("{}", serde_json::to_string_pretty(report)?);
    } else {
        print!("{}", text());
    }
    Ok(())
}

fn field_of(source: &FieldSource) -> Result<(String, ScalarField<f64>), Failure> {
    match (&source.surface, &source.expr) {
        (Some(Surface::Barth), _) => Ok(("barth".into(), ScalarField::barth())),
        (None, Some(e)) => Ok((e.clone(), ScalarField::parse(e)?)),
        (None, None) => unreachable!("clap requires one source"),
    }
}

#[derive(Serialize)]
struct MeshOutput {
    output: String,
    job: MeshJobReport,
    watertight: bool,
    euler_characteristic: i64,
    area: f64,
    volume: f64,
    max_residual: f64,
    mean_residual: f64,
}

fn mesh_to_file(json: bool, field: &ScalarField<f64>, grid: &GridArgs, out: &OutputArgs, name: &str) -> Outcome {
    let [lo, hi] = grid.bounds;
    let spec = GridSpec::new(Vec3::splat(lo), Vec3::splat(hi), grid.res)?;
    let clip = grid.clip_sphere.map(|r| ScalarField::sphere(Vec3::zero(), r)).transpose()?;
    let options = MeshOptions { workers: grid.workers };
    let (mesh, job) = mesh_isosurface_with(field, &spec, clip.as_ref(), &options)?;
    write_stl_file(&out.output, &mesh, name, out.ascii)?;
    let effective = match clip {
        Some(c) => field.clone().intersect(c),
        None => field.clone(),
    };
    let residual = vertex_residuals(&effective, &mesh);
    let report = validate(&mesh);
    let m = MeshOutput {
        output: out.output.display().to_string(),
        watertight: report.watertight,
        euler_characteristic: report.euler_characteristic,
        area: mesh.area(),
        volume: mesh.signed_volume(),
        max_residual: residual.max,
        mean_residual: residual.mean,
        job,
    };
    emit(json, &m, || {
        format!(
            "wrote {}: {} triangles, {} vertices, {} cells in {:.2} s\nwatertight: {}, euler characteristic: {}\narea: {:.6}, volume: {:.6}\nresidual max: {:.3e}, mean: {:.3e}\n",
            m.output,
            m.job.triangle_count,
            m.job.vertex_count,
            m.job.cell_count,
            m.job.elapsed.as_secs_f64(),
            m.watertight,
            m.euler_characteristic,
            m.area,
            m.volume,
            m.max_residual,
            m.mean_residual
        )
    })
}

fn read_input(path: &Path) -> Result<TriMesh<f64>, Failure> {
    let (mesh, warnings) = read_mesh_file(path)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(mesh)
}

fn stem(path: &Path) -> &str {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("mesh")
}

#[derive(Serialize)]
struct PartOutput {
    path: String,
    triangle_count: usize,
    volume: f64,
    watertight: bool,
}

fn part_line(p: &PartOutput) -> String {
    format!(
        "{}: {} triangles, volume {:.6}, watertight: {}\n",
        p.path, p.triangle_count, p.volume, p.watertight
    )
}

fn write_part(path: &Path, mesh: &TriMesh<f64>, name: &str, ascii: bool) -> Result<PartOutput, Failure> {
    write_stl_file(path, mesh, name, ascii)?;
    Ok(PartOutput {
        path: path.display().to_string(),
        triangle_count: mesh.triangle_count(),
        volume: mesh.signed_volume(),
        watertight: validate(mesh).watertight,
    })
}

fn split_cmd(json: bool, args: &SplitArgs) -> Outcome {
    let mesh = read_input(&args.input.input)?;
    let planes = args
        .planes
        .iter()
        .map(|&[x, y, z, d]| SplitPlane::new(Vec3::new(x, y, z), d))
        .collect::<Result<Vec<_>, _>>()?;
    let parts = split_multi(&mesh, &planes)?;
    let prefix = args.output.strip_suffix(".stl").unwrap_or(&args.output);
    let mut written = Vec::with_capacity(parts.len());
    for (k, part) in parts.iter().enumerate() {
        let path = PathBuf::from(format!("{prefix}_part{}.stl", k + 1));
        written.push(write_part(&path, part, &format!("part {}", k + 1), args.ascii)?);
    }
    emit(json, &written, || written.iter().map(part_line).collect())
}

fn scale_cmd(json: bool, args: &ScaleArgs) -> Outcome {
    let mesh = read_input(&args.input.input)?;
    let target = match (args.fit.fit, args.fit.fit_xyz) {
        (Some(l), _) => FitTarget::Longest(l),
        (None, Some(b)) => FitTarget::PerAxis(b),
        (None, None) => unreachable!("clap requires a target"),
    };
    let scaled = scale_to_fit(&mesh, &target)?;
    let part = write_part(&args.out.output, &scaled, stem(&args.input.input), args.out.ascii)?;
    emit(json, &part, || part_line(&part))
}

fn base_cmd(json: bool, args: &BaseArgs) -> Outcome {
    let mesh = read_input(&args.input.input)?;
    let plan_base = PlanBase {
        shape: match args.shape {
            Shape::Box => "box",
            Shape::Cyl => "cylinder",
        }
        .into(),
        dims: args.dims.clone(),
        height: args.height,
        embed: args.embed,
    };
    let spec = plan_base.to_spec().map_err(Failure)?;
    let (joined, warnings) = add_base(&mesh, &spec)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let part = write_part(&args.out.output, &joined, stem(&args.input.input), args.out.ascii)?;
    emit(json, &part, || part_line(&part))
}

fn report_text(path: &Path, r: &ValidityReport<f64>, area: f64, volume: f64) -> String {
    let mut s = format!("{}\n", path.display());
    let mut line = |k: &str, v: String| s.push_str(&format!("  {k:<26}{v}\n"));
    line("triangles", r.triangle_count.to_string());
    line("watertight", r.watertight.to_string());
    line("consistent orientation", r.consistent_orientation.to_string());
    line("boundary edges", r.boundary_edge_count.to_string());
    line("non-manifold edges", r.non_manifold_edge_count.to_string());
    line("degenerate triangles", r.degenerate_triangle_count.to_string());
    line("non-finite vertices", r.non_finite_vertex_count.to_string());
    line("connected components", r.connected_component_count.to_string());
    line("euler characteristic", r.euler_characteristic.to_string());
    if let Some(b) = &r.bounding_box {
        let e = b.extent();
        line("extent", format!("{:.4} x {:.4} x {:.4}", e.x, e.y, e.z));
    }
    line("area", format!("{area:.6}"));
    line("volume", format!("{volume:.6}"));
    s
}

#[derive(Serialize)]
struct ValidateOutput<'a> {
    path: String,
    #[serde(flatten)]
    report: &'a ValidityReport<f64>,
    area: f64,
    volume: f64,
}

fn validate_cmd(json: bool, args: &InputArgs) -> Outcome {
    let mesh = read_input(&args.input)?;
    let report = validate(&mesh);
    let (area, volume) = (mesh.area(), mesh.signed_volume());
    let out = ValidateOutput {
        path: args.input.display().to_string(),
        report: &report,
        area,
        volume,
    };
    emit(json, &out, || report_text(&args.input, &report, area, volume))
}

fn convert_cmd(json: bool, args: &ConvertArgs) -> Outcome {
    let mesh = read_input(&args.input.input)?;
    write_stl_file(&args.out.output, &mesh, stem(&args.input.input), args.out.ascii)?;
    let report = validate(&mesh);
    if !report.watertight {
        eprintln!("warning: {} is not watertight", args.out.output.display());
    }
    let out = ValidateOutput {
        path: args.out.output.display().to_string(),
        report: &report,
        area: mesh.area(),
        volume: mesh.signed_volume(),
    };
    emit(json, &out, || {
        format!(
            "wrote {}: {} triangles, watertight: {}\n",
            out.path, report.triangle_count, report.watertight
        )
    })
}

#[derive(Serialize)]
struct ReelOutput {
    reel_length_m: f64,
    cost_per_meter: f64,
}

fn cost_cmd(json: bool, args: &CostArgs) -> Outcome {
    let reel = ReelSpec {
        mass_kg: args.reel_mass,
        cost_eur: args.reel_cost,
        diameter_mm: args.diameter,
        density_kg_m3: args.density,
    };
    reel.check()?;
    if args.table.is_some() {
        let rows: Vec<_> = exhibition_cost_rows().iter().map(|r| r.to_cost_row()).collect();
        let table = cost_table(&rows, &reel)?;
        return if json {
            emit(true, &table, String::new)
        } else if args.csv {
            print!("{}", table.to_csv());
            Ok(())
        } else {
            print!(
                "reel length {:.10} m, {:.10} EUR/m\n{}",
                table.reel_length_m,
                table.cost_per_meter,
                table.to_text()
            );
            Ok(())
        };
    }
    let (length, provenance) = match (&args.length, &args.input) {
        (Some(l), _) => (*l, LengthProvenance::MeasuredLength),
        (None, Some(path)) => {
            let mesh = read_input(path)?;
            (estimate_filament_length(&mesh, &reel, args.flow)?, LengthProvenance::VolumeEstimate)
        }
        (None, None) => {
            let out = ReelOutput {
                reel_length_m: reel_length(&reel),
                cost_per_meter: cost_per_meter(&reel),
            };
            return emit(json, &out, || {
                format!(
                    "reel length: {:.10} m\ncost per metre: {:.10} EUR/m\n",
                    out.reel_length_m, out.cost_per_meter
                )
            });
        }
    };
    let report = CostReport::new(length, &reel, provenance)?;
    emit(json, &report, || {
        let how = match provenance {
            LengthProvenance::MeasuredLength => "given",
            LengthProvenance::VolumeEstimate => "estimated from volume",
        };
        format!(
            "filament: {:.4} m ({how})\ncost per metre: {:.10} EUR/m\ncost: {:.2} EUR\n",
            report.filament_length_m, report.cost_per_meter, report.object_cost
        )
    })
}

fn run_cmd(json: bool, args: &RunArgs) -> Outcome {
    let mut plan = PrintPlan::from_file(&args.plan)?;
    if args.res.is_some() {
        plan.resolution = args.res;
    }
    let reel = ReelSpec {
        mass_kg: args.reel_mass,
        cost_eur: args.reel_cost,
        diameter_mm: args.diameter,
        density_kg_m3: args.density,
    };
    let job = run_plan(&plan, None, &reel)?;
    for w in &job.warnings {
        eprintln!("warning: {w}");
    }
    emit(json, &job, || {
        let mut s = format!("{}: scale factor {:.6}\n", job.source, job.scale_factor);
        if let Some(m) = &job.mesh_job {
            s.push_str(&format!(
                "meshed {} cells into {} triangles in {:.2} s\n",
                m.cell_count,
                m.triangle_count,
                m.elapsed.as_secs_f64()
            ));
        }
        if let Some(t) = job.wall_thickness_mm {
            s.push_str(&format!("wall thickness {t:.3} mm\n"));
        }
        for p in &job.parts {
            let e = p.extent_mm;
            s.push_str(&format!(
                "{}: {} triangles, {:.1} x {:.1} x {:.1} mm, {:.1} mm3, watertight: {}, fits: {}",
                p.path, p.triangle_count, e[0], e[1], e[2], p.volume_mm3, p.watertight, p.within_build_volume
            ));
            if let (Some(l), Some(c)) = (p.filament_length_m, p.cost_eur) {
                s.push_str(&format!(", {l:.2} m, {c:.2} EUR"));
            }
            s.push('\n');
        }
        s.push_str(&format!(
            "total: {:.2} m of filament (volume estimate), {:.2} EUR\n",
            job.total_filament_length_m, job.total_cost_eur
        ));
        s
    })
}

fn dispatch(cli: &Cli) -> Outcome {
    let json = cli.json;
    match &cli.command {
        Command::Mesh(a) => {
            let (name, field) = field_of(&a.source)?;
            let field = match a.shell {
                Some(t) => field.shell(t)?,
                None => field,
            };
            mesh_to_file(json, &field, &a.grid, &a.out, &name)
        }
        Command::Shell(a) => {
            let (name, field) = field_of(&a.source)?;
            mesh_to_file(json, &field.shell(a.thickness)?, &a.grid, &a.out, &name)
        }
        Command::Split(a) => split_cmd(json, a),
        Command::Scale(a) => scale_cmd(json, a),
        Command::Base(a) => base_cmd(json, a),
        Command::Validate(a) => validate_cmd(json, a),
        Command::Convert(a) => convert_cmd(json, a),
        Command::Cost(a) => cost_cmd(json, a),
        Command::Run(a) => run_cmd(json, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
