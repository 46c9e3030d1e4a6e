use std::io::{IsTerminal, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use tissuelens::cell_features::TypeOrder;
use tissuelens::histosearch::{search_whole_image, SearchRequest, DEFAULT_BINS, DEFAULT_THRESHOLD};
use tissuelens::image_store::{
    export_flat, generate_synthetic, ingest, open_dataset, IngestRequest, SyntheticConfig,
    DEFAULT_TILE_SIZE,
};
use tissuelens::render::ChannelRenderSetting;
use tissuelens::{Dataset, ErrorKind};
use tissuelens_service::{
    canonical_json, check_channels, lens_geometry, parse_channel_list, ApiError, ApiErrorCode,
    AppState, Shape, StatsParams, DEFAULT_PORT,
};
use tracing::info;

const EXIT_USAGE: u8 = 2;
const EXIT_INTEGRITY: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "tissuelens",
    version,
    about = "Gigapixel multi-channel tissue image exploration engine"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a seeded synthetic dataset with planted patterns.
    GenSynthetic(GenArgs),
    /// Build a dataset from flat 16-bit TIFF planes and a cell table.
    Ingest(IngestArgs),
    /// Write a dataset back out as flat TIFF planes plus cells.csv.
    Export(ExportArgs),
    /// Serve the HTTP API for one dataset.
    Serve(ServeArgs),
    /// Whole-image similarity search; writes GeoJSON.
    Search(SearchArgs),
    /// Statistics for cells inside a lens region; writes JSON.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    width: u64,
    #[arg(long)]
    height: u64,
    #[arg(long)]
    channels: usize,
    #[arg(long)]
    cells: usize,
    #[arg(long, default_value_t = 0)]
    patterns: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_TILE_SIZE)]
    tile_size: u32,
    #[arg(long)]
    pattern_size: Option<u64>,
    #[arg(long)]
    pixel_size_um: Option<f64>,
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Channel plane TIFFs; glob patterns are expanded in sorted order.
    #[arg(long, num_args = 1.., required = true)]
    planes: Vec<String>,
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TILE_SIZE)]
    tile_size: u32,
    #[arg(long)]
    pixel_size_um: f64,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Tile edge for whole-image search jobs.
    #[arg(long)]
    search_tile: Option<usize>,
}

#[derive(Debug, Args)]
struct LensArgs {
    #[arg(long, value_enum, default_value = "circle")]
    shape: ShapeArg,
    #[arg(long, allow_negative_numbers = true)]
    cx: f64,
    #[arg(long, allow_negative_numbers = true)]
    cy: f64,
    #[arg(long, allow_negative_numbers = true)]
    r: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    hw: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    hh: Option<f64>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum ShapeArg {
    Circle,
    Rect,
}

impl From<ShapeArg> for Shape {
    fn from(s: ShapeArg) -> Self {
        match s {
            ShapeArg::Circle => Shape::Circle,
            ShapeArg::Rect => Shape::Rect,
        }
    }
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated channel names.
    #[arg(long)]
    channels: String,
    #[command(flatten)]
    lens: LensArgs,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD, allow_negative_numbers = true)]
    threshold: f64,
    /// Intensity range LO:HI used to quantise every channel.
    #[arg(long, default_value = "0:65535")]
    range: String,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    #[arg(long)]
    tile: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    lens: LensArgs,
    /// Comma-separated channel names; all channels when omitted.
    #[arg(long)]
    channels: Option<String>,
    #[arg(long, value_enum, default_value = "locked")]
    mode: ModeArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    Locked,
    ByCount,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

fn code_for(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Integrity => EXIT_INTEGRITY,
        ErrorKind::Internal => EXIT_INTERNAL,
        ErrorKind::BadRequest
        | ErrorKind::NotFound
        | ErrorKind::Capability
        | ErrorKind::Conflict => EXIT_USAGE,
    }
}

impl From<tissuelens::Error> for Failure {
    fn from(e: tissuelens::Error) -> Self {
        Self {
            code: code_for(e.kind()),
            message: e.to_string(),
        }
    }
}

impl From<ApiError> for Failure {
    fn from(e: ApiError) -> Self {
        let code = match e.code {
            ApiErrorCode::Integrity => EXIT_INTEGRITY,
            ApiErrorCode::Internal => EXIT_INTERNAL,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.message,
        }
    }
}

type CliResult<T> = Result<T, Failure>;

/// Errors while opening an existing dataset directory are problems with the
/// data on disk, not with the command line.
fn opened<T>(r: tissuelens::Result<T>) -> CliResult<T> {
    r.map_err(|e| {
        let code = match e.kind() {
            ErrorKind::BadRequest | ErrorKind::NotFound => EXIT_INTEGRITY,
            kind => code_for(kind),
        };
        Failure {
            code,
            message: e.to_string(),
        }
    })
}

fn require_dir(path: &Path) -> CliResult<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(Failure::usage(format!(
            "dataset directory {} does not exist",
            path.display()
        )))
    }
}

fn write_json(value: &Value, out: Option<&Path>) -> CliResult<()> {
    let mut text = canonical_json(value).map_err(|e| Failure {
        code: EXIT_INTERNAL,
        message: e.to_string(),
    })?;
    text.push('\n');
    let io_fail = |e: std::io::Error| Failure {
        code: EXIT_INTERNAL,
        message: e.to_string(),
    };
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(io_fail)?;
            info!("wrote {}", path.display());
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(io_fail)?,
    }
    Ok(())
}

fn parse_range(s: &str) -> CliResult<(u16, u16)> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| Failure::usage(format!("range `{s}` must look like LO:HI")))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<u16>()
            .map_err(|_| Failure::usage(format!("range bound `{v}` is not a 16-bit integer")))
    };
    Ok((parse(lo)?, parse(hi)?))
}

fn gen_synthetic(a: GenArgs) -> CliResult<()> {
    let mut cfg = SyntheticConfig::new(a.seed, a.width, a.height, a.channels, a.cells, a.patterns);
    cfg.tile_size = a.tile_size;
    if let Some(p) = a.pattern_size {
        cfg.pattern_size = p;
    }
    if let Some(p) = a.pixel_size_um {
        cfg.pixel_size_um = p;
    }
    let ds = generate_synthetic(&cfg, &a.out)?;
    info!("generated {}", ds.dir.display());
    println!("{}", ds.manifest_path.display());
    Ok(())
}

fn expand_planes(patterns: &[String]) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    for pattern in patterns {
        let mut hits: Vec<PathBuf> = glob::glob(pattern)
            .map_err(|e| Failure::usage(format!("bad glob `{pattern}`: {e}")))?
            .filter_map(|r| r.ok())
            .collect();
        if hits.is_empty() {
            return Err(Failure::usage(format!("`{pattern}` matches no files")));
        }
        hits.sort();
        out.extend(hits);
    }
    Ok(out)
}

fn run_ingest(a: IngestArgs) -> CliResult<()> {
    let req = IngestRequest {
        planes: expand_planes(&a.planes)?,
        mask: a.mask,
        csv: a.csv,
        out_dir: a.out,
        tile_size: a.tile_size,
        pixel_size_um: a.pixel_size_um,
    };
    let dir = ingest(&req)?;
    println!("{}", dir.display());
    Ok(())
}

fn run_export(a: ExportArgs) -> CliResult<()> {
    require_dir(&a.data)?;
    let handle = opened(open_dataset(&a.data))?;
    for p in export_flat(&handle, &a.out)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn run_serve(a: ServeArgs) -> CliResult<()> {
    require_dir(&a.data)?;
    let state = opened(AppState::open(&a.data))?.with_search_tile(a.search_tile);
    let addr: SocketAddr = format!("{}:{}", a.host, a.port)
        .parse()
        .map_err(|e| Failure::usage(format!("bad listen address: {e}")))?;
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure {
            code: EXIT_INTERNAL,
            message: e.to_string(),
        })?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| {
            if e.kind() == std::io::ErrorKind::AddrInUse {
                Failure::usage(format!("port {} is already in use", a.port))
            } else {
                Failure::usage(format!("cannot listen on {addr}: {e}"))
            }
        })?;
        let local = listener
            .local_addr()
            .map_err(|e| Failure::usage(e.to_string()))?;
        info!("serving {} on http://{local}", a.data.display());
        eprintln!("listening on http://{local}");
        tissuelens_service::serve(state, listener)
            .await
            .map_err(|e| Failure {
                code: EXIT_INTERNAL,
                message: e.to_string(),
            })
    })
}

fn run_search(a: SearchArgs) -> CliResult<()> {
    require_dir(&a.data)?;
    let (lo, hi) = parse_range(&a.range)?;
    let names = parse_channel_list(&a.channels)?;
    let geometry = lens_geometry(
        a.lens.shape.into(),
        a.lens.cx,
        a.lens.cy,
        a.lens.r,
        a.lens.hw,
        a.lens.hh,
    )?;
    let settings = names
        .iter()
        .map(|n| ChannelRenderSetting::new(n.clone(), [255, 255, 255], lo, hi))
        .collect();
    let mut req = SearchRequest::new(settings, geometry, a.threshold);
    req.bins = a.bins;
    req.validate()?;
    let handle = opened(open_dataset(&a.data))?;
    check_channels(handle.meta(), names.iter().map(String::as_str))?;
    let contours = search_whole_image(&handle, &req, a.tile)?;
    info!("{} contours at t={}", contours.contours.len(), a.threshold);
    write_json(&contours.to_geojson(), a.out.as_deref())
}

fn run_stats(a: StatsArgs) -> CliResult<()> {
    require_dir(&a.data)?;
    let params = StatsParams {
        shape: a.lens.shape.into(),
        cx: a.lens.cx,
        cy: a.lens.cy,
        r: a.lens.r,
        hw: a.lens.hw,
        hh: a.lens.hh,
        channels: a.channels,
        mode: match a.mode {
            ModeArg::Locked => TypeOrder::Locked,
            ModeArg::ByCount => TypeOrder::ByCount,
        },
    };
    let geometry = params.geometry()?;
    let dataset = opened(Dataset::open(&a.data))?;
    let channels = params.channel_list(dataset.meta())?;
    check_channels(dataset.meta(), channels.iter().map(String::as_str))?;
    let stats = dataset.region_stats(&geometry, &channels, params.mode)?;
    let value = serde_json::to_value(&stats).map_err(|e| Failure {
        code: EXIT_INTERNAL,
        message: e.to_string(),
    })?;
    write_json(&value, a.out.as_deref())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_target(false)
        .with_ansi(std::io::stderr().is_terminal())
        .init();
    let result = match cli.command {
        Command::GenSynthetic(a) => gen_synthetic(a),
        Command::Ingest(a) => run_ingest(a),
        Command::Export(a) => run_export(a),
        Command::Serve(a) => run_serve(a),
        Command::Search(a) => run_search(a),
        Command::Stats(a) => run_stats(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
