//! `grayindex` command-line tool.
//!
//! Exit codes: 0 success, 2 bad arguments, 3 input I/O, 4 degenerate
//! estimation, 5 assertion threshold violated.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use grayindex::benchmark::{
    box_shrink_eval, load_for_camera, measure_runtime, run_benchmark, standard_mask,
    write_synthetic_dataset, DatasetManifest, IllumTag, Method, SynthOptions, BOX_LABELS,
};
use grayindex::config::RunConfig;
use grayindex::estimation::{estimate_spatial_detailed, DistanceKernel};
use grayindex::io;
use grayindex::preprocess::LevelsTable;
use grayindex::synthetic::{preset_scene, render, Preset};
use grayindex::{
    compute_gi, correct_image, estimate_global, rank_gray, ChromaVector, Error, IlluminantField,
    Illumination, LinearImage,
};

const EXIT_ARGS: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_DEGENERATE: u8 = 4;
const EXIT_ASSERT: u8 = 5;

#[derive(Parser)]
#[command(name = "grayindex", version, about = "Grayness Index color constancy")]
struct Cli {
    /// TOML run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Camera black/saturation table (`<camera_id> <black> <saturation>`
    /// lines). Falls back to $GI_CAMERA_LEVELS, then the built-in table.
    #[arg(long, global = true)]
    camera_levels: Option<PathBuf>,

    /// Only print warnings and errors on standard error.
    #[arg(short, long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the GI map of an image: float raster plus pseudocolor PNG.
    Gi(GiCmd),
    /// Estimate the illuminant: one global chroma, or a per-pixel field
    /// with --multi.
    Estimate(EstimateCmd),
    /// Apply a von Kries correction for a given illuminant or field.
    Correct(CorrectCmd),
    /// Run one method over a dataset manifest.
    Benchmark(BenchmarkCmd),
    /// Shrinking-box evaluation (boxes A..E centred on the checker).
    Boxeval(BoxevalCmd),
    /// Write seeded synthetic scenes with a manifest and ground truth.
    Synth(SynthCmd),
    /// Median single-threaded wall time of one method.
    Runtime(RuntimeCmd),
}

#[derive(Args, Default)]
struct GiArgs {
    /// Contrast threshold on |LoG(I_c)| [default: 1e-4]
    #[arg(long)]
    epsilon: Option<f64>,
    /// LoG kernel size in pixels [default: 5]
    #[arg(long)]
    kernel_size: Option<usize>,
    /// LoG standard deviation [default: 0.5]
    #[arg(long)]
    log_sigma: Option<f64>,
    /// Averaging window size in pixels [default: 7]
    #[arg(long)]
    window: Option<usize>,
    /// Keep the image border, where the filters read padded values.
    #[arg(long)]
    keep_border: bool,
}

#[derive(Args)]
struct InputArgs {
    /// Input image (PNG, TIFF or PFM).
    image: PathBuf,
    /// Treat samples as raw counts of this camera and apply its levels;
    /// without it samples are divided by their type maximum.
    #[arg(long)]
    camera: Option<String>,
}

#[derive(Args)]
struct GiCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    gi: GiArgs,
    /// Percentage of candidates reported as gray pixels, N [default: 0.1]
    #[arg(long)]
    top_percent: Option<f64>,
    /// Output directory [default: the configured one, else .]
    #[arg(long, short)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    gi: GiArgs,
    /// Percentage of gray pixels averaged by the global estimate, N [default: 0.1]
    #[arg(long)]
    top_percent: Option<f64>,
    /// Number of illuminants; writes a per-pixel field.
    #[arg(long, value_parser = parse_clusters)]
    multi: Option<usize>,
    /// Percentage of gray pixels clustered with --multi, N [default: 10]
    #[arg(long)]
    multi_top_percent: Option<f64>,
    /// Blending bandwidth as a fraction of the image diagonal [default: 0.05]
    #[arg(long)]
    sigma_fraction: Option<f64>,
    /// Blending bandwidth in pixels, overriding --sigma-fraction.
    #[arg(long)]
    sigma_pixels: Option<f64>,
    /// Distance kernel of the blending weights [default: gaussian]
    #[arg(long, value_parser = parse_kernel)]
    kernel: Option<DistanceKernel>,
    /// Clustering seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the corrected image here (pfm, png or tif).
    #[arg(long)]
    correct: Option<PathBuf>,
    /// Output directory for field files [default: the configured one, else .]
    #[arg(long, short)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct CorrectCmd {
    #[command(flatten)]
    input: InputArgs,
    /// Global illuminant as `r,g,b`.
    #[arg(long, value_parser = parse_chroma, conflicts_with = "field", required_unless_present = "field")]
    illuminant: Option<ChromaVector>,
    /// Illuminant field raster written by `estimate --multi`.
    #[arg(long)]
    field: Option<PathBuf>,
    /// Output image (pfm, png or tif).
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct MethodArgs {
    /// Estimation method [default: gi]
    #[arg(long, value_parser = parse_method, default_value = "gi", hide_default_value = true)]
    method: Method,
    #[command(flatten)]
    gi: GiArgs,
    /// Percentage of gray pixels averaged by the GI estimate, N [default: 0.1]
    #[arg(long)]
    top_percent: Option<f64>,
    /// Shades-of-Gray Minkowski norm [default: 4]
    #[arg(long)]
    sog_p: Option<f64>,
    /// Gray-Edge Minkowski norm [default: 6]
    #[arg(long)]
    edge_p: Option<f64>,
    /// Gray-Edge smoothing sigma [default: 2]
    #[arg(long)]
    edge_sigma: Option<f64>,
}

#[derive(Args)]
struct BenchmarkCmd {
    /// Dataset manifest CSV.
    manifest: PathBuf,
    #[command(flatten)]
    method: MethodArgs,
    /// Worker threads across images; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Exit with code 5 unless the overall mean error is below this (degrees).
    #[arg(long)]
    assert_mean_below: Option<f64>,
    /// Directory for the per-image CSV and the summary [default: the configured one, else .]
    #[arg(long, short)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct BoxevalCmd {
    /// Dataset manifest CSV; every record needs a checker rectangle.
    manifest: PathBuf,
    #[command(flatten)]
    method: MethodArgs,
    /// Worker threads across images; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Directory for the summary [default: the configured one, else .]
    #[arg(long, short)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SynthCmd {
    #[arg(long, value_enum, default_value_t = Preset::Single)]
    preset: Preset,
    /// Base seed [default: the configured one, else 0]
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 256)]
    width: usize,
    #[arg(long, default_value_t = 256)]
    height: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RuntimeCmd {
    /// Image to time; a synthetic scene of --width x --height when absent.
    image: Option<PathBuf>,
    #[arg(long)]
    camera: Option<String>,
    #[command(flatten)]
    method: MethodArgs,
    /// Timed runs after one warm-up (at least 5).
    #[arg(long, default_value_t = 5)]
    runs: usize,
    #[arg(long, default_value_t = 1920)]
    width: usize,
    #[arg(long, default_value_t = 1080)]
    height: usize,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_clusters(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("the number of illuminants must be at least 1".into()),
        Ok(m) => Ok(m),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_kernel(s: &str) -> Result<DistanceKernel, String> {
    match s {
        "gaussian" => Ok(DistanceKernel::Gaussian),
        "linear" => Ok(DistanceKernel::Linear),
        _ => Err(format!("unknown kernel `{s}` (gaussian, linear)")),
    }
}

fn parse_chroma(s: &str) -> Result<ChromaVector, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [r, g, b] => ChromaVector::from_rgb(*r, *g, *b).map_err(|e| e.to_string()),
        _ => Err(format!("expected `r,g,b`, got `{s}`")),
    }
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            e if e.is_degenerate() => EXIT_DEGENERATE,
            Error::Io { .. } | Error::Format { .. } | Error::Manifest(_) | Error::EmptyManifest => EXIT_IO,
            _ => EXIT_ARGS,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<(), Failure>;

impl GiArgs {
    fn apply(&self, p: &mut grayindex::GiParams) {
        if let Some(v) = self.epsilon {
            p.epsilon = v;
        }
        if let Some(v) = self.kernel_size {
            p.log_kernel_size = v;
        }
        if let Some(v) = self.log_sigma {
            p.log_sigma = v;
        }
        if let Some(v) = self.window {
            p.smooth_window = v;
        }
        if self.keep_border {
            p.exclude_border = false;
        }
    }
}

impl MethodArgs {
    fn apply(&self, config: &mut RunConfig) {
        let m = &mut config.method;
        self.gi.apply(&mut m.gi);
        if let Some(v) = self.top_percent {
            m.top_percent = v;
        }
        if let Some(v) = self.sog_p {
            m.baselines.sog_p = v;
        }
        if let Some(v) = self.edge_p {
            m.baselines.edge_p = v;
        }
        if let Some(v) = self.edge_sigma {
            m.baselines.edge_sigma = v;
        }
    }
}

struct Context {
    config: RunConfig,
}

impl Context {
    fn levels(&self) -> Result<LevelsTable, Failure> {
        Ok(self.config.levels()?)
    }

    fn load(&self, input: &InputArgs) -> Result<LinearImage, Failure> {
        load_input(&input.image, input.camera.as_deref(), &self.levels()?)
    }

    fn out_dir(&self, flag: &Option<PathBuf>) -> Result<PathBuf, Failure> {
        let dir = flag.clone().unwrap_or_else(|| self.config.output_dir.clone());
        fs::create_dir_all(&dir).map_err(|e| Error::Io {
            path: dir.clone(),
            source: e,
        })?;
        Ok(dir)
    }
}

fn load_input(path: &Path, camera: Option<&str>, levels: &LevelsTable) -> Result<LinearImage, Failure> {
    match camera {
        Some(id) => {
            if levels.get(id).is_none() {
                return Err(Error::UnknownCamera(id.to_string()).into());
            }
            Ok(load_for_camera(path, id, levels)?)
        }
        None => Ok(io::load_linear(path)?),
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into())
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).map_err(|e| {
        Error::Io {
            path: path.to_path_buf(),
            source: e,
        }
        .into()
    })
}

fn cmd_gi(ctx: &mut Context, cmd: &GiCmd) -> CmdResult {
    cmd.gi.apply(&mut ctx.config.method.gi);
    if let Some(v) = cmd.top_percent {
        ctx.config.method.top_percent = v;
    }
    ctx.config.validate()?;
    let img = ctx.load(&cmd.input)?;
    let params = &ctx.config.method;
    let mask = standard_mask(&img, None, params.dark_reference);
    let gimap = compute_gi(&img, &mask, &params.gi)?;
    let gray = rank_gray(&gimap, params.top_percent)?;

    let dir = ctx.out_dir(&cmd.out_dir)?;
    let name = stem(&cmd.input.image);
    let raster = dir.join(format!("{name}.gi.bin"));
    let png = dir.join(format!("{name}.gi.png"));
    io::write_gi_raster(&raster, &gimap)?;
    io::write_gi_png(&png, &gimap)?;
    println!("candidates = {}", gimap.count_candidates());
    println!("gray_pixels = {}", gray.len());
    println!("raster = {}", raster.display());
    println!("heatmap = {}", png.display());
    Ok(())
}

fn cmd_estimate(ctx: &mut Context, cmd: &EstimateCmd) -> CmdResult {
    cmd.gi.apply(&mut ctx.config.method.gi);
    if let Some(v) = cmd.top_percent {
        ctx.config.method.top_percent = v;
    }
    let multi = &mut ctx.config.multi;
    if let Some(m) = cmd.multi {
        multi.clusters = m;
    }
    if let Some(v) = cmd.multi_top_percent {
        multi.top_percent = v;
    }
    if let Some(v) = cmd.sigma_fraction {
        multi.sigma_fraction = v;
    }
    if cmd.sigma_pixels.is_some() {
        multi.sigma_pixels = cmd.sigma_pixels;
    }
    if let Some(k) = cmd.kernel {
        multi.kernel = k;
    }
    multi.seed = cmd.seed.unwrap_or(ctx.config.seed);
    ctx.config.validate()?;

    let img = ctx.load(&cmd.input)?;
    let params = &ctx.config.method;
    let mask = standard_mask(&img, None, params.dark_reference);
    let gimap = compute_gi(&img, &mask, &params.gi)?;
    let name = cmd.input.image.display().to_string();

    if cmd.multi.is_none() {
        let coords = rank_gray(&gimap, params.top_percent)?;
        let est = estimate_global(&img, &coords)?;
        println!("image,r,g,b");
        println!("{name},{},{},{}", est.r(), est.g(), est.b());
        if let Some(out) = &cmd.correct {
            io::save_linear(out, &correct_image(&img, Illumination::Global(est))?)?;
        }
        return Ok(());
    }

    let spatial = estimate_spatial_detailed(&img, &gimap, &ctx.config.multi)?;
    let dir = ctx.out_dir(&cmd.out_dir)?;
    let field_path = dir.join(format!("{}.field.bin", stem(&cmd.input.image)));
    let (w, h) = spatial.field.dims();
    io::write_raster(&field_path, w, h, &spatial.field.planes())?;
    println!("image,cluster,centroid_x,centroid_y,members,r,g,b");
    for (i, c) in spatial.clusters.iter().enumerate() {
        let l = c.illuminant;
        println!(
            "{name},{i},{},{},{},{},{},{}",
            c.centroid[0],
            c.centroid[1],
            c.members,
            l.r(),
            l.g(),
            l.b()
        );
    }
    info!("field written to {}", field_path.display());
    if let Some(out) = &cmd.correct {
        io::save_linear(out, &correct_image(&img, Illumination::Field(&spatial.field))?)?;
    }
    Ok(())
}

fn cmd_correct(ctx: &mut Context, cmd: &CorrectCmd) -> CmdResult {
    let img = ctx.load(&cmd.input)?;
    let corrected = match (&cmd.illuminant, &cmd.field) {
        (Some(l), _) => correct_image(&img, Illumination::Global(*l))?,
        (None, Some(path)) => {
            let (w, h, planes) = io::read_raster(path)?;
            let planes: [Vec<f64>; 3] = planes.try_into().map_err(|p: Vec<Vec<f64>>| Failure {
                code: EXIT_IO,
                message: format!("{}: expected 3 planes, found {}", path.display(), p.len()),
            })?;
            let field = IlluminantField::from_planes(w, h, planes)?;
            correct_image(&img, Illumination::Field(&field))?
        }
        (None, None) => unreachable!("clap requires one of them"),
    };
    io::save_linear(&cmd.output, &corrected)?;
    Ok(())
}

fn cmd_benchmark(ctx: &mut Context, cmd: &BenchmarkCmd) -> CmdResult {
    cmd.method.apply(&mut ctx.config);
    ctx.config.validate()?;
    let manifest = DatasetManifest::load(&cmd.manifest)?;
    let levels = ctx.levels()?;
    let method = cmd.method.method;
    let report = run_benchmark(&manifest, method, &ctx.config.method, &levels, cmd.jobs)?;

    let dir = ctx.out_dir(&cmd.out_dir)?;
    let summary = report.summary_text();
    write_text(&dir.join(format!("benchmark_{}.csv", method.name())), &report.to_csv())?;
    write_text(&dir.join(format!("benchmark_{}.txt", method.name())), &summary)?;
    print!("{summary}");

    if let Some(limit) = cmd.assert_mean_below {
        match &report.overall {
            Some(s) if s.mean < limit => {}
            Some(s) => {
                return Err(Failure {
                    code: EXIT_ASSERT,
                    message: format!("mean error {} deg is not below {limit} deg", s.mean),
                })
            }
            None => {
                return Err(Failure {
                    code: EXIT_ASSERT,
                    message: "no image was evaluated successfully".into(),
                })
            }
        }
    }
    Ok(())
}

fn cmd_boxeval(ctx: &mut Context, cmd: &BoxevalCmd) -> CmdResult {
    cmd.method.apply(&mut ctx.config);
    ctx.config.validate()?;
    let manifest = DatasetManifest::load(&cmd.manifest)?;
    let levels = ctx.levels()?;
    let method = cmd.method.method;
    let report = box_shrink_eval(&manifest, method, &ctx.config.method, &levels, cmd.jobs)?;

    let dir = ctx.out_dir(&cmd.out_dir)?;
    let summary = report.summary_text();
    write_text(&dir.join(format!("boxeval_{}.txt", method.name())), &summary)?;
    for tag in [IllumTag::Single, IllumTag::Double] {
        let table = report.table(tag);
        if table.iter().all(Option::is_none) {
            continue;
        }
        eprintln!("{} illuminant", tag.as_str());
        eprintln!("  box     mean   median  trimean   best25  worst25");
        for (label, stats) in BOX_LABELS.iter().zip(table) {
            if let Some(s) = stats {
                eprintln!(
                    "  {label}   {:8.3} {:8.3} {:8.3} {:8.3} {:8.3}",
                    s.mean, s.median, s.trimean, s.best25, s.worst25
                );
            }
        }
    }
    print!("{summary}");
    Ok(())
}

fn cmd_synth(ctx: &mut Context, cmd: &SynthCmd) -> CmdResult {
    let opts = SynthOptions {
        preset: cmd.preset,
        count: cmd.count,
        width: cmd.width,
        height: cmd.height,
        seed: cmd.seed.unwrap_or(ctx.config.seed),
    };
    let manifest = write_synthetic_dataset(&cmd.out, &opts, &ctx.levels()?)?;
    println!("manifest = {}", manifest.display());
    Ok(())
}

fn cmd_runtime(ctx: &mut Context, cmd: &RuntimeCmd) -> CmdResult {
    cmd.method.apply(&mut ctx.config);
    ctx.config.validate()?;
    let img = match &cmd.image {
        Some(path) => load_input(path, cmd.camera.as_deref(), &ctx.levels()?)?,
        None => {
            let desc = preset_scene(Preset::Single, cmd.width, cmd.height, ctx.config.seed);
            render(&desc.build()?)?
        }
    };
    let method = cmd.method.method;
    let report = measure_runtime(&img, method, &ctx.config.method, cmd.runs)?;
    println!("method = {}", method.name());
    println!("width = {}", img.width());
    println!("height = {}", img.height());
    println!("runs = {}", report.runs.len());
    println!("median_seconds = {}", report.median);
    println!("min_seconds = {}", report.min);
    println!("max_seconds = {}", report.max);
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if cli.camera_levels.is_some() {
        config.camera_levels = cli.camera_levels.clone();
    }
    let mut ctx = Context { config };
    match &cli.command {
        Command::Gi(c) => cmd_gi(&mut ctx, c),
        Command::Estimate(c) => cmd_estimate(&mut ctx, c),
        Command::Correct(c) => cmd_correct(&mut ctx, c),
        Command::Benchmark(c) => cmd_benchmark(&mut ctx, c),
        Command::Boxeval(c) => cmd_boxeval(&mut ctx, c),
        Command::Synth(c) => cmd_synth(&mut ctx, c),
        Command::Runtime(c) => cmd_runtime(&mut ctx, c),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
