use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

use commands::CliError;

/// Settle multi-object scenes so that objects touch without interpenetrating,
/// and align point sets.
#[derive(Debug, Parser)]
#[command(name = "scene-settle", version)]
struct Cli {
    /// More log output (-v info, -vv debug). `RUST_LOG` takes precedence.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimize the poses of all movable objects in a scene.
    Settle(SettleArgs),
    /// Estimate transforms between point sets.
    #[command(subcommand)]
    Align(AlignCommand),
    /// Relation graph tools.
    #[command(subcommand)]
    Graph(GraphCommand),
    /// Report penetration and support metrics; exit 1 if a threshold is exceeded.
    Validate(ValidateArgs),
    /// Signed-distance queries.
    #[command(subcommand)]
    Sdf(SdfCommand),
}

#[derive(Debug, Args)]
struct SettleArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Maximum optimizer iterations.
    #[arg(long)]
    iters: Option<usize>,
    /// Surface samples per object.
    #[arg(long)]
    samples: Option<usize>,
    /// Band width for FlatSupport edges without an explicit sigma.
    #[arg(long)]
    sigma: Option<f64>,
    /// Write the per-iteration trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the validation report of the settled scene.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum AlignCommand {
    /// Closed-form similarity transform between corresponded point sets.
    Umeyama {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Fit a rigid transform (scale fixed to 1).
        #[arg(long)]
        no_scale: bool,
    },
    /// Iterative closest point registration.
    Icp {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value_t = 100)]
        max_iters: usize,
        #[arg(long)]
        no_bbox_normalize: bool,
    },
    /// Pick the candidate correspondence with the lowest residual. The
    /// directory holds pairs named `<name>_src.<ext>` / `<name>_dst.<ext>`.
    Select {
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        no_scale: bool,
    },
}

#[derive(Debug, Subcommand)]
enum GraphCommand {
    /// Reduce a fine relation graph to constraint edges.
    Map {
        #[arg(long)]
        fine: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Labels of static nodes treated as flat surfaces (repeatable).
        #[arg(long = "flat-label")]
        flat_labels: Vec<String>,
    },
    /// Majority-merge several fine relation graphs.
    Merge {
        #[arg(long, num_args = 1.., required = true)]
        trials: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Penetration threshold in scene units (default 1e-3 × scene diagonal).
    #[arg(long)]
    pen_thresh: Option<f64>,
    /// Gap threshold in scene units (default 1e-2 × scene diagonal).
    #[arg(long)]
    gap_thresh: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Grid,
}

#[derive(Debug, Subcommand)]
enum SdfCommand {
    /// Print `distance,gx,gy,gz` for every point.
    Query {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        points: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
        #[arg(long)]
        resolution: Option<usize>,
    },
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Settle(a) => commands::settle(&a.scene, &a.out, a.iters, a.samples, a.sigma, a.trace.as_deref(), a.report.as_deref()),
        Command::Align(AlignCommand::Umeyama { source, target, no_scale }) => commands::align_umeyama(&source, &target, !no_scale),
        Command::Align(AlignCommand::Icp {
            source,
            target,
            max_iters,
            no_bbox_normalize,
        }) => commands::align_icp(&source, &target, max_iters, !no_bbox_normalize),
        Command::Align(AlignCommand::Select { candidates, no_scale }) => commands::align_select(&candidates, !no_scale),
        Command::Graph(GraphCommand::Map { fine, out, flat_labels }) => commands::graph_map(&fine, &out, flat_labels),
        Command::Graph(GraphCommand::Merge { trials, threshold, out }) => commands::graph_merge(&trials, threshold, &out),
        Command::Validate(a) => commands::validate(&a.scene, a.pen_thresh, a.gap_thresh),
        Command::Sdf(SdfCommand::Query {
            mesh,
            points,
            mode,
            resolution,
        }) => commands::sdf_query(&mesh, &points, matches!(mode, Mode::Grid), resolution),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}
