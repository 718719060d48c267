use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thermoblock::freq::{log_grid, sigma_surface, FrequencyGrid};
use thermoblock::io::{self, fmt_f64, manifest::manifest_dir};
use thermoblock::model::{AffineLtiModel, ParameterPoint, ParameterVariant, RawParameter};
use thermoblock::pipeline::{build, TOOL_VERSION};
use thermoblock::simulate::{implicit_euler, InputSignal, TimeGrid};
use thermoblock::validate::validate_manifest;
use thermoblock::{default_spec, emit_geo_text, grid_spec, Error, GeometrySpec, Mesh};

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "thermoblock", version, about = "Thermal-block benchmark generator and solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mesh, assemble and export matrices plus a manifest.
    Generate(GenerateArgs),
    /// Check an exported benchmark; prints a JSON report.
    Validate(ValidateArgs),
    /// Implicit-Euler time simulation.
    Simulate(SimulateArgs),
    /// Sigma-magnitude surface of the single-parameter model.
    Sigma(SigmaArgs),
    /// Stationary solution for a constant input.
    Steady(SteadyArgs),
    /// Print the geometry as a gmsh script.
    EmitGeo(EmitGeoArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Paper,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum VariantArg {
    Four,
    Single,
    Fixed,
}

#[derive(Args, Clone)]
struct GeometryArgs {
    /// Built-in layout.
    #[arg(long, value_enum, conflicts_with_all = ["grid", "config"])]
    preset: Option<Preset>,
    /// k×k grid of disks.
    #[arg(long, value_name = "K", conflicts_with = "config")]
    grid: Option<usize>,
    /// Geometry TOML file.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long)]
    mesh_scale: Option<f64>,
    #[arg(long)]
    circle_segments: Option<usize>,
}

impl GeometryArgs {
    fn spec(&self) -> Result<GeometrySpec, Error> {
        let mut spec = match (&self.grid, &self.config) {
            (Some(k), _) => grid_spec(*k)?,
            (None, Some(path)) => GeometrySpec::load(path)?,
            (None, None) => default_spec(),
        };
        if let Some(h) = self.mesh_scale {
            spec = spec.with_mesh_scale(h);
        }
        if let Some(s) = self.circle_segments {
            spec = spec.with_circle_segments(s);
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Load an exported benchmark instead of generating one.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["preset", "grid", "config", "mesh_scale", "circle_segments", "refine"])]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    geometry: GeometryArgs,
    /// Uniform mesh refinements after meshing.
    #[arg(long, default_value_t = 0)]
    refine: usize,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    /// Accept parameters outside [1e-6, 1e2].
    #[arg(long)]
    no_box_check: bool,
}

struct Loaded {
    model: AffineLtiModel,
    mesh: Option<Mesh>,
    spec_hash: String,
}

impl ModelArgs {
    fn load(&self, default_variant: VariantArg) -> Result<Loaded, Error> {
        let (assembly, mesh, spec_hash, stored) = match &self.manifest {
            Some(path) => {
                let (manifest, model) = io::load_benchmark(path)?;
                let mesh = match &manifest.files.mesh {
                    Some(name) => Some(io::read_mesh(&manifest_dir(path).join(name))?),
                    None => None,
                };
                let hash = manifest
                    .provenance
                    .as_ref()
                    .map_or_else(|| "unknown".to_string(), |p| p.spec_hash.clone());
                (model.assembly, mesh, hash, Some(manifest.variant))
            }
            None => {
                let spec = self.geometry.spec()?;
                let bench = build(&spec, self.refine)?;
                (bench.assembly, Some(bench.mesh), spec.hash(), None)
            }
        };
        let p = assembly.n_params();
        let variant = match (self.variant, stored) {
            (Some(v), _) => make_variant(v, p),
            (None, Some(v)) => v,
            (None, None) => make_variant(default_variant, p),
        };
        let mut model = AffineLtiModel::new(assembly, variant)?;
        if self.no_box_check {
            model = model.without_box_check();
        }
        Ok(Loaded { model, mesh, spec_hash })
    }
}

fn make_variant(v: VariantArg, p: usize) -> ParameterVariant {
    match v {
        VariantArg::Four => ParameterVariant::Four,
        VariantArg::Single => ParameterVariant::single(p),
        VariantArg::Fixed => ParameterVariant::fixed(p),
    }
}

#[derive(Args)]
struct ParamArgs {
    /// Comma-separated conductivities (four-parameter variant).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    mu: Option<Vec<f64>>,
    /// Scalar parameter (single and fixed variants).
    #[arg(long)]
    mu_tilde: Option<f64>,
}

impl ParamArgs {
    fn resolve(&self, model: &AffineLtiModel) -> Result<ParameterPoint, Error> {
        let raw = match (&self.mu, self.mu_tilde) {
            (Some(_), Some(_)) => return Err(Error::InvalidArgument("give either --mu or --mu-tilde".into())),
            (Some(v), None) => RawParameter::Vector(v.clone()),
            (None, Some(t)) => RawParameter::Scalar(t),
            (None, None) => match model.variant {
                ParameterVariant::Four if model.p() == 4 => RawParameter::Vector(vec![1e2, 1e-2, 1e-3, 1e-4]),
                ParameterVariant::Fixed { .. } => RawParameter::Default,
                _ => return Err(Error::InvalidArgument("parameter required: pass --mu or --mu-tilde".into())),
            },
        };
        model.resolve(&raw)
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    geometry: GeometryArgs,
    #[arg(long, default_value_t = 0)]
    refine: usize,
    #[arg(long, value_enum, default_value = "four")]
    variant: VariantArg,
    /// Output directory.
    #[arg(long, default_value = "benchmark")]
    out: PathBuf,
    /// Also write the mesh with subdomain tags as legacy VTK.
    #[arg(long)]
    vtk: bool,
}

#[derive(Args)]
struct ValidateArgs {
    manifest: PathBuf,
    /// Write the JSON report here as well as to stdout.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long, default_value_t = 1.0)]
    t_end: f64,
    /// step | const:<c> | file:<path>
    #[arg(long, default_value = "step")]
    input: String,
    /// Trajectory CSV (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Final temperature field as legacy VTK.
    #[arg(long)]
    vtk: Option<PathBuf>,
}

#[derive(Args)]
struct SigmaArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 1e-2)]
    omega_min: f64,
    #[arg(long, default_value_t = 1e4)]
    omega_max: f64,
    #[arg(long, default_value_t = 100)]
    omega_count: usize,
    #[arg(long, default_value_t = 1e-6)]
    mu_min: f64,
    #[arg(long, default_value_t = 1e2)]
    mu_max: f64,
    #[arg(long, default_value_t = 30)]
    mu_count: usize,
    /// Surface CSV (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SteadyArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    u_inf: f64,
    #[arg(long)]
    vtk: Option<PathBuf>,
}

#[derive(Args)]
struct EmitGeoArgs {
    #[command(flatten)]
    geometry: GeometryArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn provenance(spec_hash: &str) {
    eprintln!("thermoblock {TOOL_VERSION} spec-hash {spec_hash}");
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => io::write_atomic(p, text.as_bytes()),
        None => stdout(text),
    }
}

/// Writes to stdout; a closed pipe is not an error.
fn stdout(text: &str) -> Result<(), Error> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Io {
            path: PathBuf::from("<stdout>"),
            source: e,
        }),
        _ => Ok(()),
    }
}

fn parse_input(s: &str, grid: &TimeGrid) -> Result<InputSignal, Error> {
    if s == "step" {
        return Ok(InputSignal::UnitStep);
    }
    if let Some(c) = s.strip_prefix("const:") {
        let v: f64 = c
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad constant input '{c}'")))?;
        return Ok(InputSignal::Constant(v));
    }
    if let Some(path) = s.strip_prefix("file:") {
        let samples = io::read_samples(Path::new(path))?;
        if samples.len() != grid.n_steps + 1 {
            return Err(Error::Dimension(format!(
                "{path}: {} samples, need {}",
                samples.len(),
                grid.n_steps + 1
            )));
        }
        return Ok(InputSignal::Samples(samples));
    }
    Err(Error::InvalidArgument(format!(
        "unknown input '{s}' (expected step, const:<c> or file:<path>)"
    )))
}

fn write_field(path: &Path, mesh: Option<&Mesh>, field: &[f64]) -> Result<(), Error> {
    let mesh = mesh.ok_or_else(|| Error::InvalidArgument("no mesh available for VTK output".into()))?;
    io::write_vtk(path, mesh, &[("temperature", field)])
}

fn generate(args: &GenerateArgs) -> Result<u8, Error> {
    let spec = args.geometry.spec()?;
    provenance(&spec.hash());
    let bench = build(&spec, args.refine)?;
    let model = bench.model(make_variant(args.variant, bench.assembly.n_params()))?;
    io::export_benchmark(&args.out, &model, Some(&bench.mesh), Some(bench.provenance()))?;
    if args.vtk {
        io::write_vtk(&args.out.join("mesh.vtk"), &bench.mesh, &[])?;
    }
    let asm = &bench.assembly;
    let mut text = format!("n = {}\nk = {}\np = {}\n", asm.n, asm.k(), asm.n_params());
    for (i, a) in bench.mesh.subdomain_areas().iter().enumerate() {
        text.push_str(&format!("area[{i}] = {}\n", fmt_f64(*a)));
    }
    text.push_str(&format!("manifest = {}\n", args.out.join(io::manifest::MANIFEST_NAME).display()));
    stdout(&text)?;
    Ok(0)
}

fn validate(args: &ValidateArgs) -> Result<u8, Error> {
    let manifest = io::manifest::load_manifest(&args.manifest)?;
    provenance(manifest.provenance.as_ref().map_or("unknown", |p| p.spec_hash.as_str()));
    let report = validate_manifest(&args.manifest)?;
    let json = report.to_json();
    stdout(&format!("{json}\n"))?;
    if let Some(p) = &args.report {
        io::write_atomic(p, json.as_bytes())?;
    }
    for c in report.failed() {
        eprintln!("FAILED {}: {}", c.name, c.detail);
    }
    Ok(if report.passed { 0 } else { EXIT_FAILURE })
}

fn simulate(args: &SimulateArgs) -> Result<u8, Error> {
    let loaded = args.model.load(VariantArg::Four)?;
    provenance(&loaded.spec_hash);
    let mu = args.params.resolve(&loaded.model)?;
    let grid = TimeGrid::new(args.t_end, args.steps)?;
    let input = parse_input(&args.input, &grid)?;
    let traj = implicit_euler(&loaded.model, &mu, &grid, &input)?;
    emit(args.out.as_deref(), &io::trajectory_csv(&traj))?;
    if let Some(p) = &args.vtk {
        write_field(p, loaded.mesh.as_ref(), traj.final_state()?)?;
    }
    Ok(0)
}

fn sigma(args: &SigmaArgs) -> Result<u8, Error> {
    let loaded = args.model.load(VariantArg::Single)?;
    provenance(&loaded.spec_hash);
    let mus = log_grid(args.mu_min, args.mu_max, args.mu_count)?;
    let omegas = FrequencyGrid::log_spaced(args.omega_min, args.omega_max, args.omega_count)?;
    let surface = sigma_surface(&loaded.model, &mus, &omegas)?;
    emit(args.out.as_deref(), &surface.to_csv())?;
    Ok(0)
}

fn steady(args: &SteadyArgs) -> Result<u8, Error> {
    let loaded = args.model.load(VariantArg::Four)?;
    provenance(&loaded.spec_hash);
    let mu = args.params.resolve(&loaded.model)?;
    let x = loaded.model.steady_state(&mu, args.u_inf)?;
    let mut text = String::new();
    for (i, y) in loaded.model.outputs(&x).iter().enumerate() {
        text.push_str(&format!("y{} = {}\n", i + 1, fmt_f64(*y)));
    }
    stdout(&text)?;
    if let Some(p) = &args.vtk {
        write_field(p, loaded.mesh.as_ref(), &x)?;
    }
    Ok(0)
}

fn emit_geo(args: &EmitGeoArgs) -> Result<u8, Error> {
    let spec = args.geometry.spec()?;
    provenance(&spec.hash());
    emit(args.out.as_deref(), &emit_geo_text(&spec))?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Validate(a) => validate(a),
        Command::Simulate(a) => simulate(a),
        Command::Sigma(a) => sigma(a),
        Command::Steady(a) => steady(a),
        Command::EmitGeo(a) => emit_geo(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() {
                EXIT_USAGE
            } else if e.is_io() {
                EXIT_IO
            } else {
                EXIT_FAILURE
            })
        }
    }
}
