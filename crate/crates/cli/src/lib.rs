//! `patchsmith` command line: smooth, analyze, kernels, validate, corpus.
//!
//! Exit codes: 0 success, 1 any pipeline or I/O error, 2 non-manifold input,
//! 3 non-orientable input, 4 input with open boundary, 64 bad usage.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use patchsmith::analysis::{compare_modes, rows_to_csv, rows_to_json, Metric, Mode, ALL_METRICS};
use patchsmith::corpus;
use patchsmith::frames::FrameSet;
use patchsmith::kernels::{derive_modified_kernels, standard_kernels};
use patchsmith::mesh::{load_obj, save_obj, HalfEdgeMesh, Owner};
use patchsmith::patch::build_patches;
use patchsmith::pipeline::{apply_overrides, build_frames, prepare_mesh, run_with_frames, FrameOverride, PipelineConfig, PipelineError};
use patchsmith::tessellate::export_obj;

pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "patchsmith", version, about = "Smooth bicubic Bezier surfaces over polygon meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full pipeline and write the tessellated surface.
    Smooth(SmoothArgs),
    /// Compare standard and modified subdivision at extraordinary vertices.
    Analyze(AnalyzeArgs),
    /// Dump the standard and the derived modified kernel tables.
    Kernels(KernelsArgs),
    /// Check that an OBJ file is a closed orientable 2-manifold.
    Validate(ValidateArgs),
    /// Write the built-in test meshes as OBJ files.
    Corpus(CorpusArgs),
}

#[derive(Debug, Args)]
struct PipelineArgs {
    /// Input OBJ file.
    #[arg(short, long)]
    input: PathBuf,
    /// Doo-Sabin passes used to produce the frames.
    #[arg(long, default_value_t = 1)]
    ds_iterations: usize,
    /// Even number of dual-map regularization steps for non-quad frames.
    #[arg(long, default_value_t = 0)]
    dual_iterations: usize,
    /// Maximum subdivision depth of extraordinary patches.
    #[arg(long = "depth", default_value_t = 4)]
    max_depth: u32,
    /// Samples per leaf side (2^k + 1).
    #[arg(long = "resolution", default_value_t = 5)]
    leaf_resolution: usize,
    #[arg(long, default_value = "modified")]
    mode: Mode,
    /// JSON list of `{owner, scale, rotation, offset}` frame overrides.
    #[arg(long)]
    overrides: Option<PathBuf>,
    /// Scale every face frame by this factor (on top of `--overrides`).
    #[arg(long)]
    face_scale: Option<f64>,
    /// Load frames from this JSON file instead of assigning them.
    #[arg(long)]
    frames: Option<PathBuf>,
    /// Save the frames actually used to this JSON file.
    #[arg(long)]
    save_frames: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SmoothArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Output OBJ file.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Write stats JSON here instead of standard output.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Write the assembled patch nets as JSON.
    #[arg(long)]
    dump_patches: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Metrics to report (c1, g1, c2, ring); all by default.
    #[arg(long, value_delimiter = ',')]
    metric: Vec<Metric>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file; standard output by default.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct KernelsArgs {
    /// Output file; standard output by default.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(short, long)]
    input: PathBuf,
}

#[derive(Debug, Args)]
struct CorpusArgs {
    /// Directory to write into.
    #[arg(long, default_value = "models")]
    out: PathBuf,
}

/// Failure reported on stderr, with the process exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure { code: e.exit_code(), message: e.to_string() }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure { code: 1, message: format!("IoError: {}: {e}", path.display()) }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| io_failure(path, e))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| io_failure(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    serde_json::from_slice(&read(path)?).map_err(|e| io_failure(path, e))
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_mesh(path: &Path) -> Result<HalfEdgeMesh, Failure> {
    Ok(load_obj(&read(path)?).map_err(PipelineError::from)?)
}

impl PipelineArgs {
    fn config(&self, mesh: &HalfEdgeMesh) -> Result<PipelineConfig, Failure> {
        let mut config = PipelineConfig {
            ds_iterations: self.ds_iterations,
            dual_iterations: self.dual_iterations,
            max_depth: self.max_depth,
            leaf_resolution: self.leaf_resolution,
            mode: self.mode,
            overrides: Vec::new(),
        };
        if let Some(path) = &self.overrides {
            let list: Vec<FrameOverride> = read_json(path)?;
            for o in list {
                config.add_override(o);
            }
        }
        if let Some(scale) = self.face_scale {
            // Face ids of the mesh the frames are built on.
            let faces = if self.ds_iterations > 1 { prepare_mesh(mesh, &config)?.num_faces() } else { mesh.num_faces() };
            for f in 0..faces {
                config.add_override(FrameOverride { scale, ..FrameOverride::identity(Owner::Face(f)) });
            }
        }
        config.validate()?;
        Ok(config)
    }

    /// Prepared mesh and its frames, loaded or assigned, with overrides applied.
    fn stages(&self) -> Result<(PipelineConfig, HalfEdgeMesh, FrameSet), Failure> {
        let input = load_mesh(&self.input)?;
        let config = self.config(&input)?;
        let mesh = prepare_mesh(&input, &config)?;
        let frames = match &self.frames {
            Some(path) => {
                let value: serde_json::Value = read_json(path)?;
                let mut frames = FrameSet::from_json(&mesh, &value).map_err(PipelineError::from)?;
                apply_overrides(&mut frames, &config.overrides)?;
                frames
            }
            None => build_frames(&mesh, &config)?,
        };
        if let Some(path) = &self.save_frames {
            write(path, serde_json::to_string_pretty(&frames.to_json()).expect("frames serialize"))?;
        }
        Ok((config, mesh, frames))
    }
}

fn smooth(args: &SmoothArgs) -> Result<(), Failure> {
    let (config, mesh, frames) = args.pipeline.stages()?;
    let out = run_with_frames(mesh, frames, &config)?;
    if let Some(path) = &args.output {
        write(path, export_obj(&out.tessellation.welded.mesh))?;
    }
    if let Some(path) = &args.dump_patches {
        write(path, serde_json::to_string(&out.patches.to_json()).expect("patches serialize"))?;
    }
    let stats = serde_json::to_string_pretty(&out.stats_json()).expect("stats serialize") + "\n";
    emit(args.stats.as_deref(), &stats)
}

fn analyze(args: &AnalyzeArgs) -> Result<(), Failure> {
    let (config, mesh, frames) = args.pipeline.stages()?;
    let set = build_patches(&mesh, &frames).map_err(PipelineError::from)?;
    let depths: Vec<u32> = (1..=config.max_depth.max(1)).collect();
    let rows = compare_modes(&set, &depths);
    let metrics = if args.metric.is_empty() { ALL_METRICS.to_vec() } else { args.metric.clone() };
    let text = match args.format {
        Format::Csv => rows_to_csv(&rows, &metrics),
        Format::Json => serde_json::to_string_pretty(&rows_to_json(&rows, &metrics)).expect("rows serialize") + "\n",
    };
    emit(args.output.as_deref(), &text)
}

fn kernels(args: &KernelsArgs) -> Result<(), Failure> {
    let derived = derive_modified_kernels().map_err(PipelineError::from)?;
    let doc = serde_json::json!({ "standard": standard_kernels().to_json(), "modified": derived.to_json() });
    emit(args.dump.as_deref(), &(serde_json::to_string_pretty(&doc).expect("tables serialize") + "\n"))
}

fn validate(args: &ValidateArgs) -> Result<(), Failure> {
    let mesh = load_mesh(&args.input)?;
    mesh.validate().map_err(PipelineError::from)?;
    let summary = serde_json::json!({
        "vertices": mesh.num_vertices(),
        "edges": mesh.num_edges(),
        "faces": mesh.num_faces(),
        "euler_characteristic": mesh.euler_characteristic(),
        "genus": mesh.genus(),
    });
    println!("{summary}");
    Ok(())
}

fn write_corpus(args: &CorpusArgs) -> Result<(), Failure> {
    fs::create_dir_all(&args.out).map_err(|e| io_failure(&args.out, e))?;
    for (name, mesh) in corpus::corpus() {
        write(&args.out.join(format!("{name}.obj")), save_obj(&mesh))?;
    }
    Ok(())
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("PATCHSMITH_THREADS") else {
        return Ok(());
    };
    let n: usize = value.parse().map_err(|_| Failure { code: EXIT_USAGE, message: format!("PATCHSMITH_THREADS must be a positive integer, got {value:?}") })?;
    // A pool that already exists (repeated calls in one process) is fine.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    Ok(())
}

/// Parse `args` (including the program name), run the command and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Smooth(a) => smooth(a),
        Command::Analyze(a) => analyze(a),
        Command::Kernels(a) => kernels(a),
        Command::Validate(a) => validate(a),
        Command::Corpus(a) => write_corpus(a),
    });
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("{}", f.message);
            f.code
        }
    }
}
