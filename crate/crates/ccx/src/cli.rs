//! The `ccx` command line interface.
//!
//! Every subcommand reads and validates all of its inputs before computing and writes its
//! artifacts only at the end, so a rejected invocation leaves no files behind. Exit codes: 0 on
//! success, 1 on I/O failure or a failed check, 2 when an envelope solve did not converge (the
//! best iterate and a report with `"converged": false` are still written), 3 on invalid
//! arguments, configuration or input data.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::{ImageSource, Levels, RunConfig, Source, Task, SCHEMA_VERSION};
use crate::delaunay::{structural_check, PointCloud};
use crate::envelope::{convex_envelope, EnvelopeReport, SolverConfig, StencilConfig};
use crate::error::{CcxError, Result};
use crate::field::{extend, GridSpec, SampleMask, SampledFunction, ScalarField, Sign};
use crate::io;
use crate::metrics::{error_report, psnr, relative_l2};
use crate::prototypes::{analytic_average, analytic_lower, analytic_upper, PrototypeId};
use crate::tasks::image::corrupt_salt_pepper;
use crate::tasks::{
    build_levelset_sample, build_scatter_sample, default_margin, denoise_salt_pepper, equispaced_levels, inpaint,
    max_principle_check, reconstruct_levelset, reconstruct_scatter, unit_grid, TestFunctionId,
};
use crate::transforms::{
    average_approximation, lower_transform, resolve_module, upper_transform, Engine, TransformParams,
};

/// Package version followed by the configuration schema version.
pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (config schema 1)");

#[derive(Debug, Parser)]
#[command(name = "ccx", version = VERSION, about = "Compensated convex transforms and reconstruction from sparse samples")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convex envelope of a grid function.
    Envelope(EnvelopeArgs),
    /// Lower or upper transform, or the average approximation of a sample.
    Transform(TransformArgs),
    /// Closed-form oracle of a prototype example on a grid.
    Prototype(PrototypeArgs),
    /// Reconstruction from level lines.
    Levelset(TaskArgs),
    /// Reconstruction from scattered nodes.
    Scatter(TaskArgs),
    /// Inpainting of a damaged image region.
    Inpaint(TaskArgs),
    /// Salt and pepper restoration.
    Denoise(TaskArgs),
    /// Grid average approximation of a point cloud against its exact Delaunay interpolants.
    DelaunayCheck(DelaunayArgs),
    /// Relative L2 error, max deviation and PSNR between two fields.
    Metrics(MetricsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Exact,
    Stencil,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Exact => Engine::Exact,
            EngineArg::Stencil => Engine::Stencil,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..=3))]
    pub stencil_radius: u64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_sweeps: usize,
}

impl SolverArgs {
    fn configs(&self) -> Result<(StencilConfig, SolverConfig)> {
        let stencil = StencilConfig::with_radius(self.stencil_radius as usize)?;
        let solver = SolverConfig { tol: self.tol, max_sweeps: self.max_sweeps, ..SolverConfig::default() };
        solver.validate()?;
        Ok((stencil, solver))
    }
}

#[derive(Debug, Args)]
pub struct EnvelopeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Report path; `report.json` next to the output by default.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = EngineArg::Stencil)]
    pub engine: EngineArg,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformOp {
    Lower,
    Upper,
    Average,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(value_enum)]
    pub op: TransformOp,
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Sample set K; without it every node is sampled.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Field holding the sample values; the input field by default.
    #[arg(long, requires = "mask")]
    pub values: Option<PathBuf>,
    #[arg(long)]
    pub lambda: f64,
    /// A positive number or `auto`.
    #[arg(long, default_value = "auto")]
    pub module: crate::config::ModuleArg,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = EngineArg::Exact)]
    pub engine: EngineArg,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleKind {
    Average,
    Lower,
    Upper,
}

#[derive(Debug, Args)]
pub struct PrototypeArgs {
    #[arg(long)]
    pub id: String,
    #[arg(long)]
    pub lambda: f64,
    /// Node counts as `NXxNY`; the grid spans the example's domain horizontally.
    #[arg(long, value_parser = parse_grid_size)]
    pub grid: (usize, usize),
    #[arg(long, value_enum, default_value_t = OracleKind::Average)]
    pub kind: OracleKind,
    #[arg(long)]
    pub out: PathBuf,
    /// Mask of the nodes inside the closed form's domain; the field holds 0 elsewhere.
    #[arg(long)]
    pub domain_mask: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TaskArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct DelaunayArgs {
    /// `x,y,value` rows.
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value = "auto")]
    pub module: crate::config::ModuleArg,
    #[arg(long, default_value_t = 0.005)]
    pub h: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Reference field.
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long)]
    pub psnr: bool,
}

fn parse_grid_size(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NXxNY, got {s:?}"))?;
    let n = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad node count {t:?}"));
    Ok((n(a)?, n(b)?))
}

/// How a run ended once its inputs were accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Done,
    NotConverged,
    CheckFailed,
}

/// Files to write and the final status of a run.
#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<(PathBuf, Vec<u8>)>,
    pub status: Status,
}

/// Input files read so far with their SHA-256 digests.
#[derive(Debug, Default)]
struct Inputs(Vec<Value>);

impl Inputs {
    fn read(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes =
            std::fs::read(path).map_err(|e| CcxError::Config(format!("cannot read {}: {e}", path.display())))?;
        self.0.push(json!({ "path": path.display().to_string(), "sha256": hex(&Sha256::digest(&bytes)) }));
        Ok(bytes)
    }

    fn text(&mut self, path: &Path) -> Result<String> {
        String::from_utf8(self.read(path)?)
            .map_err(|_| CcxError::Format(format!("{} is not UTF-8 text", path.display())))
    }

    fn field(&mut self, path: &Path) -> Result<ScalarField> {
        io::field_from_csv(&self.text(path)?).map_err(|e| in_file(path, e))
    }

    fn flags(&mut self, path: &Path) -> Result<(GridSpec, Vec<bool>)> {
        io::flags_from_csv(&self.text(path)?).map_err(|e| in_file(path, e))
    }
}

fn in_file(path: &Path, e: CcxError) -> CcxError {
    CcxError::Format(format!("{}: {e}", path.display()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// JSON number, or the string `"inf"`/`"-inf"`/`"nan"` for non-finite values.
fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn report(command: &str, inputs: Inputs, converged: bool, started: Instant, body: Value) -> Vec<u8> {
    let mut map = Map::new();
    map.insert("schema".into(), json!(SCHEMA_VERSION));
    map.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    map.insert("command".into(), json!(command));
    map.insert("inputs".into(), Value::Array(inputs.0));
    map.insert("converged".into(), json!(converged));
    if let Value::Object(body) = body {
        map.extend(body);
    }
    map.insert("wall_time_s".into(), json!(started.elapsed().as_secs_f64()));
    let mut text = serde_json::to_string_pretty(&Value::Object(map)).expect("report serialises");
    text.push('\n');
    text.into_bytes()
}

fn solver_json(p: &TransformParams, lower: Option<&EnvelopeReport>, upper: Option<&EnvelopeReport>) -> Value {
    let mut v = json!({
        "engine": p.engine,
        "stencil_radius": p.stencil.radius,
        "tol": p.solver.tol,
        "max_sweeps": p.solver.max_sweeps,
    });
    if let Some(r) = lower {
        merge(&mut v, json!({ "lower": r }));
    }
    if let Some(r) = upper {
        merge(&mut v, json!({ "upper": r }));
    }
    v
}

fn warn_conditioning(m: f64, lambda: f64) {
    if m > 1e15 / lambda {
        eprintln!("warning: M = {m:e} exceeds 1e15/lambda = {:e}; the lifted sums may lose precision", 1e15 / lambda);
    }
}

fn default_report(out: &Path) -> PathBuf {
    out.with_file_name("report.json")
}

/// Splits a solver result into the field, the report of the failing solve and a convergence flag.
fn settle<T>(r: Result<T>) -> Result<std::result::Result<T, (ScalarField, EnvelopeReport)>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(CcxError::NotConverged(env)) => Ok(Err((env.field, env.report))),
        Err(e) => Err(e),
    }
}

fn status(converged: bool) -> Status {
    if converged {
        Status::Done
    } else {
        Status::NotConverged
    }
}

fn run_envelope(a: &EnvelopeArgs) -> Result<Outcome> {
    let started = Instant::now();
    let mut inputs = Inputs::default();
    let f = inputs.field(&a.input)?;
    let (stencil, solver) = a.solver.configs()?;
    let p = TransformParams::new(1.0).with_engine(a.engine.into()).with_stencil(stencil.clone()).with_solver(solver);
    let env = match p.engine {
        Engine::Stencil => settle(convex_envelope(&f, &stencil, &solver))?,
        Engine::Exact => settle(crate::transforms::envelope_with(&f, &p))?,
    };
    let (field, rep) = match env {
        Ok(e) => (e.field, e.report),
        Err(pair) => pair,
    };
    let body = json!({ "solver": solver_json(&p, None, None), "sweeps_used": rep.sweeps_used, "final_residual": rep.final_residual });
    let report_path = a.report.clone().unwrap_or_else(|| default_report(&a.out));
    Ok(Outcome {
        files: vec![
            (a.out.clone(), io::field_to_csv(&field).into_bytes()),
            (report_path, report("envelope", inputs, rep.converged, started, body)),
        ],
        status: status(rep.converged),
    })
}

fn run_transform(a: &TransformArgs) -> Result<Outcome> {
    let started = Instant::now();
    let mut inputs = Inputs::default();
    let f = inputs.field(&a.input)?;
    let (stencil, solver) = a.solver.configs()?;
    let module = a.module.resolve()?;
    let p = TransformParams::new(a.lambda)
        .with_module(module)
        .with_engine(a.engine.into())
        .with_stencil(stencil)
        .with_solver(solver);
    p.validate()?;
    let sample = match &a.mask {
        Some(path) => {
            let (spec, flags) = inputs.flags(path)?;
            let values = match &a.values {
                Some(v) => inputs.field(v)?,
                None => f.clone(),
            };
            if spec != f.spec || values.spec != f.spec {
                return Err(CcxError::GridMismatch("mask, values and input must share one grid".into()));
            }
            let opts: Vec<Option<f64>> = flags.iter().zip(&values.values).map(|(&m, &v)| m.then_some(v)).collect();
            Some(SampledFunction::from_options(f.spec, &opts, module)?)
        }
        None => None,
    };
    let samples = sample.as_ref().map_or(f.spec.len(), |s| s.mask.count());
    let (field, m_used, lower, upper) = match (a.op, &sample) {
        (TransformOp::Average, _) => {
            let sf = match sample.clone() {
                Some(sf) => sf,
                None => SampledFunction::from_field(&f, crate::transforms::full_mask(f.spec), module)?,
            };
            let m = resolve_module(&sf, &p)?;
            match settle(average_approximation(&sf, &p))? {
                Ok(avg) => (avg.field, Some(avg.m_used), Some(avg.lower), Some(avg.upper)),
                Err((field, rep)) => (field, Some(m), Some(rep), Some(rep)),
            }
        }
        (op, sf) => {
            let (input, m) = match sf {
                Some(sf) => {
                    let m = resolve_module(sf, &p)?;
                    let sign = if op == TransformOp::Lower { Sign::Plus } else { Sign::Minus };
                    (extend(sf, sign, Some(m))?, Some(m))
                }
                None => (f.clone(), None),
            };
            let r = if op == TransformOp::Lower { lower_transform(&input, &p) } else { upper_transform(&input, &p) };
            let (field, rep) = match settle(r)? {
                Ok(t) => (t.field, t.report),
                Err(pair) => pair,
            };
            if op == TransformOp::Lower {
                (field, m, Some(rep), None)
            } else {
                (field, m, None, Some(rep))
            }
        }
    };
    if let Some(m) = m_used {
        warn_conditioning(m, p.lambda);
    }
    let converged = lower.is_none_or(|r| r.converged) && upper.is_none_or(|r| r.converged);
    let op = match a.op {
        TransformOp::Lower => "lower",
        TransformOp::Upper => "upper",
        TransformOp::Average => "average",
    };
    let body = json!({
        "op": op,
        "lambda": p.lambda,
        "m_used": m_used,
        "samples": samples,
        "solver": solver_json(&p, lower.as_ref(), upper.as_ref()),
    });
    let report_path = a.report.clone().unwrap_or_else(|| default_report(&a.out));
    Ok(Outcome {
        files: vec![
            (a.out.clone(), io::field_to_csv(&field).into_bytes()),
            (report_path, report("transform", inputs, converged, started, body)),
        ],
        status: status(converged),
    })
}

/// Horizontal extent and vertical centre of the region shown for a prototype.
fn prototype_box(id: &PrototypeId) -> Result<(f64, f64, f64)> {
    Ok(match *id {
        PrototypeId::SignJump1D { .. }
        | PrototypeId::FourPoint { .. }
        | PrototypeId::EightPoint { .. }
        | PrototypeId::CrossParabolas { .. }
        | PrototypeId::CrossAbs { .. } => (-1.0, 1.0, 0.0),
        PrototypeId::TwoGables { r, .. } | PrototypeId::RoofBox { r, .. } | PrototypeId::JumpStrip { r, .. } => {
            (-r, r, 0.0)
        }
        PrototypeId::AnnulusLevels { big_r, .. } => (-big_r, big_r, 0.0),
        PrototypeId::WedgeLevels { .. } => (0.0, 1.5, 0.0),
        PrototypeId::FanJump { .. } => {
            return Err(CcxError::NotAvailable("the fan jump average is parametric and has no grid oracle".into()))
        }
    })
}

fn run_prototype(a: &PrototypeArgs) -> Result<Outcome> {
    let id = PrototypeId::from_name(&a.id, a.lambda)?;
    id.validate()?;
    let (nx, ny) = a.grid;
    if nx < 2 {
        return Err(CcxError::InvalidGrid(format!("need at least 2 nodes across, got {nx}")));
    }
    let (x0, x1, yc) = prototype_box(&id)?;
    let h = (x1 - x0) / (nx - 1) as f64;
    let spec = GridSpec::new(nx, ny, x0, yc - 0.5 * (ny - 1) as f64 * h, h)?;
    let eval = match a.kind {
        OracleKind::Average => analytic_average,
        OracleKind::Lower => analytic_lower,
        OracleKind::Upper => analytic_upper,
    };
    let mut values = vec![0.0; spec.len()];
    let mut inside = vec![false; spec.len()];
    for k in 0..spec.len() {
        let (x, y) = spec.node(k);
        match eval(&id, x, y) {
            Ok(v) => {
                values[k] = v;
                inside[k] = true;
            }
            Err(CcxError::OutOfDomain(..)) => {}
            Err(e) => return Err(e),
        }
    }
    let field = ScalarField::new(spec, values)?;
    let mut files = vec![(a.out.clone(), io::field_to_csv(&field).into_bytes())];
    if let Some(path) = &a.domain_mask {
        files.push((path.clone(), io::mask_to_csv(&inside, &spec).into_bytes()));
    }
    Ok(Outcome { files, status: Status::Done })
}

fn transform_section(c: &RunConfig) -> Result<TransformParams> {
    c.transform.params().map_err(|e| CcxError::Config(e.to_string()))
}

/// Crops a padded best iterate back to `spec`.
fn crop_to(field: ScalarField, spec: &GridSpec) -> Result<ScalarField> {
    if field.spec.nx == spec.nx && field.spec.ny == spec.ny {
        return Ok(field);
    }
    field.crop((field.spec.nx - spec.nx) / 2)
}

fn load_source(c: &RunConfig, inputs: &mut Inputs) -> Result<(ScalarField, Option<Vec<u8>>)> {
    match c.source.as_ref().ok_or_else(|| CcxError::Config("missing source".into()))? {
        Source::Function { id, grid } => {
            let spec = unit_grid(*grid)?;
            let pieces = (*id == TestFunctionId::Dpa).then(|| id.pieces(&spec));
            Ok((id.field(spec), pieces))
        }
        Source::Field(path) => Ok((inputs.field(path)?, None)),
    }
}

fn load_image(c: &RunConfig, inputs: &mut Inputs) -> Result<ScalarField> {
    match c.image.as_ref().ok_or_else(|| CcxError::Config("missing image".into()))? {
        ImageSource::Camera => Ok(io::camera()),
        ImageSource::Pgm(path) => io::pgm_decode(&inputs.read(path)?).map_err(|e| in_file(path, e)),
    }
}

fn run_task(expected: Task, a: &TaskArgs) -> Result<Outcome> {
    let started = Instant::now();
    let mut inputs = Inputs::default();
    inputs.read(&a.config)?;
    let c = RunConfig::load(&a.config)?;
    if c.task != expected {
        return Err(CcxError::Config(format!("configuration is for task {}, not {}", c.task.name(), expected.name())));
    }
    let p = transform_section(&c)?;
    let csv_out = a.out_dir.join("out.csv");
    let pgm_out = a.out_dir.join("out.pgm");
    let report_out = a.out_dir.join("report.json");
    let solver = |lower: Option<&EnvelopeReport>, upper: Option<&EnvelopeReport>| solver_json(&p, lower, upper);
    match c.task {
        Task::Levelset => {
            let (truth, pieces) = load_source(&c, &mut inputs)?;
            let levels = match c.levels.as_ref().ok_or_else(|| CcxError::Config("missing levels".into()))? {
                Levels::Count(n) => equispaced_levels(truth.min(), truth.max(), *n)[1..].to_vec(),
                Levels::Values(v) => v.clone(),
            };
            let ls = build_levelset_sample(&truth, &levels, pieces.as_deref())?;
            let margin = c.margin.unwrap_or_else(|| default_margin(&truth.spec));
            let m_used = resolve_module(&ls.sample.padded(margin)?, &p)?;
            warn_conditioning(m_used, p.lambda);
            let (field, lower, upper, converged, extra) = match settle(reconstruct_levelset(&ls, &p, margin))? {
                Ok(rec) => {
                    if rec.lambda_below_threshold {
                        eprintln!(
                            "warning: lambda = {} is below the level separation threshold {}",
                            p.lambda, rec.lambda_required
                        );
                    }
                    (rec.field, None, None, true, json!({ "lambda_below_threshold": rec.lambda_below_threshold }))
                }
                Err((field, rep)) => (crop_to(field, &truth.spec)?, Some(rep), Some(rep), false, json!({})),
            };
            let metrics = error_report(&truth, &field, &ls.sample)?;
            let mp = max_principle_check(&truth, &field, &levels)?;
            let mut body = json!({
                "task": "levelset",
                "lambda": p.lambda,
                "m_used": m_used,
                "margin": margin,
                "levels": levels,
                "samples": ls.sample.mask.count(),
                "jump_nodes": ls.jump_nodes,
                "thresholds": {
                    "delta0": num(ls.delta0),
                    "lambda_required": ls.lambda_required(),
                    "under_resolved": ls.under_resolved,
                },
                "metrics": metrics_json(&metrics),
                "max_principle": mp,
                "solver": solver(lower.as_ref(), upper.as_ref()),
            });
            merge(&mut body, extra);
            Ok(Outcome {
                files: vec![
                    (csv_out, io::field_to_csv(&field).into_bytes()),
                    (report_out, report("levelset", inputs, converged, started, body)),
                ],
                status: status(converged),
            })
        }
        Task::Scatter => {
            let (truth, _) = load_source(&c, &mut inputs)?;
            let density = c.density.ok_or_else(|| CcxError::Config("missing density".into()))?;
            let seed = c.seed.unwrap_or(0);
            let sample = build_scatter_sample(&truth, density, seed)?;
            let margin = c.margin.unwrap_or_else(|| default_margin(&truth.spec));
            let m_used = resolve_module(&sample.padded(margin)?, &p)?;
            warn_conditioning(m_used, p.lambda);
            let (field, rep) = match settle(reconstruct_scatter(&sample, &p, margin))? {
                Ok((field, _)) => (field, None),
                Err((field, rep)) => (crop_to(field, &truth.spec)?, Some(rep)),
            };
            let converged = rep.is_none();
            let metrics = error_report(&truth, &field, &sample)?;
            let body = json!({
                "task": "scatter",
                "lambda": p.lambda,
                "m_used": m_used,
                "margin": margin,
                "density": density,
                "seed": seed,
                "samples": sample.mask.count(),
                "metrics": metrics_json(&metrics),
                "solver": solver(rep.as_ref(), rep.as_ref()),
            });
            Ok(Outcome {
                files: vec![
                    (csv_out, io::field_to_csv(&field).into_bytes()),
                    (report_out, report("scatter", inputs, converged, started, body)),
                ],
                status: status(converged),
            })
        }
        Task::Inpaint => {
            let image = load_image(&c, &mut inputs)?;
            let damage_path = c.damage.as_ref().ok_or_else(|| CcxError::Config("missing damage".into()))?;
            let (spec, damage) = inputs.flags(damage_path)?;
            if spec.nx != image.spec.nx || spec.ny != image.spec.ny {
                return Err(CcxError::GridMismatch(format!(
                    "damage mask is {}x{}, image is {}x{}",
                    spec.nx, spec.ny, image.spec.nx, image.spec.ny
                )));
            }
            let (out, rep) = match settle(inpaint(&image, &damage, &p))? {
                Ok(out) => (out, None),
                Err((field, rep)) => {
                    let mut out = image.clone();
                    for (k, &d) in damage.iter().enumerate() {
                        if d {
                            out.values[k] = field.values[k];
                        }
                    }
                    (out, Some(rep))
                }
            };
            let converged = rep.is_none();
            let keep: Vec<bool> = damage.iter().map(|&d| !d).collect();
            let m_used = match SampleMask::new(image.spec, keep) {
                Ok(mask) if damage.iter().any(|&d| d) => {
                    Some(resolve_module(&SampledFunction::from_field(&image, mask, p.module)?, &p)?)
                }
                _ => None,
            };
            if let Some(m) = m_used {
                warn_conditioning(m, p.lambda);
            }
            let body = json!({
                "task": "inpaint",
                "lambda": p.lambda,
                "m_used": m_used,
                "damaged": damage.iter().filter(|&&d| d).count(),
                "metrics": { "psnr_vs_input_db": num(psnr(&image, &out)?) },
                "solver": solver(rep.as_ref(), rep.as_ref()),
            });
            Ok(Outcome {
                files: vec![
                    (pgm_out, io::pgm_encode(&out)),
                    (report_out, report("inpaint", inputs, converged, started, body)),
                ],
                status: status(converged),
            })
        }
        Task::Denoise => {
            let image = load_image(&c, &mut inputs)?;
            let noise = c.noise.ok_or_else(|| CcxError::Config("missing noise".into()))?;
            let pad = c.padding_or_default();
            let (corrupted, noise_mask) = corrupt_salt_pepper(&image, &noise)?;
            let (restored, m_used, rep) = match settle(denoise_salt_pepper(&image, &noise, &pad, &p))? {
                Ok(d) => (d.restored, Some(d.m_used), None),
                Err((field, rep)) => {
                    let inner = crop_to(field, &image.spec)?;
                    let mut out = corrupted.clone();
                    for (k, &hit) in noise_mask.member.iter().enumerate() {
                        if hit {
                            out.values[k] = inner.values[k].clamp(0.0, 255.0);
                        }
                    }
                    (out, None, Some(rep))
                }
            };
            if let Some(m) = m_used {
                warn_conditioning(m, p.lambda);
            }
            let converged = rep.is_none();
            let body = json!({
                "task": "denoise",
                "lambda": p.lambda,
                "m_used": m_used,
                "noise": noise,
                "padding": pad,
                "corrupted_pixels": noise_mask.count(),
                "metrics": {
                    "psnr_db": num(psnr(&image, &restored)?),
                    "corrupted_psnr_db": num(psnr(&image, &corrupted)?),
                },
                "solver": solver(rep.as_ref(), rep.as_ref()),
            });
            Ok(Outcome {
                files: vec![
                    (pgm_out, io::pgm_encode(&restored)),
                    (a.out_dir.join("corrupted.pgm"), io::pgm_encode(&corrupted)),
                    (report_out, report("denoise", inputs, converged, started, body)),
                ],
                status: status(converged),
            })
        }
    }
}

fn metrics_json(m: &crate::metrics::ErrorReport) -> Value {
    json!({ "eps": m.eps, "eps_k": m.eps_k, "linf": m.linf })
}

fn merge(into: &mut Value, extra: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, extra) {
        a.extend(b);
    }
}

fn run_delaunay(a: &DelaunayArgs) -> Result<Outcome> {
    let started = Instant::now();
    let mut inputs = Inputs::default();
    let path = &a.points;
    let rows = io::points_from_csv(&inputs.text(path)?).map_err(|e| in_file(path, e))?;
    let pc = PointCloud::new(rows.iter().map(|&(x, y, _)| (x, y)).collect(), rows.iter().map(|r| r.2).collect())?;
    if !(a.h > 0.0 && a.h.is_finite()) {
        return Err(CcxError::InvalidGrid(format!("spacing must be positive, got {}", a.h)));
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pc.points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let nodes = |lo: f64, hi: f64| ((hi - lo) / a.h).ceil() as usize + 1;
    let grid = GridSpec::new(nodes(x0, x1), nodes(y0, y1), x0, y0, a.h)?;
    let p = TransformParams::new(a.lambda).with_module(a.module.resolve()?);
    let rep = structural_check(&pc, &p, grid)?;
    warn_conditioning(rep.m_used, p.lambda);
    let body = serde_json::to_value(&rep).expect("report serialises");
    let passed = rep.passed;
    Ok(Outcome {
        files: vec![(a.out.clone(), report("delaunay-check", inputs, true, started, body))],
        status: if passed { Status::Done } else { Status::CheckFailed },
    })
}

fn run_metrics(a: &MetricsArgs) -> Result<Value> {
    let mut inputs = Inputs::default();
    let fa = inputs.field(&a.a)?;
    let fb = inputs.field(&a.b)?;
    let mut out = json!({ "eps": relative_l2(&fa, &fb, None)?, "linf": fa.max_abs_diff(&fb) });
    if let Some(path) = &a.mask {
        let (spec, flags) = inputs.flags(path)?;
        let mask = SampleMask::new(spec, flags)?;
        merge(&mut out, json!({ "eps_k": relative_l2(&fa, &fb, Some(&mask))? }));
    }
    if a.psnr {
        merge(&mut out, json!({ "psnr_db": num(psnr(&fa, &fb)?) }));
    }
    Ok(out)
}

/// Runs a parsed command, returning the files to write.
pub fn execute(command: &Command) -> Result<Outcome> {
    match command {
        Command::Envelope(a) => run_envelope(a),
        Command::Transform(a) => run_transform(a),
        Command::Prototype(a) => run_prototype(a),
        Command::Levelset(a) => run_task(Task::Levelset, a),
        Command::Scatter(a) => run_task(Task::Scatter, a),
        Command::Inpaint(a) => run_task(Task::Inpaint, a),
        Command::Denoise(a) => run_task(Task::Denoise, a),
        Command::DelaunayCheck(a) => run_delaunay(a),
        Command::Metrics(a) => {
            let v = run_metrics(a)?;
            let text = serde_json::to_string_pretty(&v).expect("metrics serialise") + "\n";
            Ok(Outcome { files: vec![(PathBuf::from("-"), text.into_bytes())], status: Status::Done })
        }
    }
}

fn write_all(files: &[(PathBuf, Vec<u8>)]) -> std::io::Result<()> {
    use std::io::Write;
    for (path, bytes) in files {
        if path.as_os_str() == "-" {
            std::io::stdout().write_all(bytes)?;
            continue;
        }
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, bytes)?;
    }
    Ok(())
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("CCX_THREADS") else { return Ok(()) };
    let n = v
        .trim()
        .parse::<usize>()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CcxError::Config(format!("CCX_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CcxError::Config(format!("cannot set up {n} worker threads: {e}")))
}

/// Exit code for an error raised before any artifact was written.
pub fn exit_code(e: &CcxError) -> u8 {
    match e {
        CcxError::Io(_) => 1,
        CcxError::NotConverged(_) => 2,
        _ => 3,
    }
}

/// Parses the process arguments, runs the command and writes its artifacts.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    let result = init_threads().and_then(|()| execute(&cli.command));
    match result {
        Ok(outcome) => {
            if let Err(e) = write_all(&outcome.files) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            match outcome.status {
                Status::Done => ExitCode::SUCCESS,
                Status::CheckFailed => {
                    eprintln!("error: check failed");
                    ExitCode::from(1)
                }
                Status::NotConverged => {
                    eprintln!("error: envelope solver did not converge; wrote the last iterate");
                    ExitCode::from(2)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
