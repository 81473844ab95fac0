//! `boardsim`: batch driver for trace generation, gesture recognition, the
//! shoe telemetry link, episode simulation and survey statistics.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "boardsim",
    version,
    about = "Skateboard controller pipeline, batch mode"
)]
pub struct Cli {
    /// Seed for every random draw (noise, channel loss and reordering).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Directory that receives output files. Created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,

    /// TOML file with [thresholds], [sim], [channel] and [run] sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate or check sensor traces.
    #[command(subcommand)]
    Trace(TraceCmd),
    /// Run the gesture engine over a trace.
    #[command(subcommand)]
    Gestures(GesturesCmd),
    /// Send the shoe channels of a trace through the lossy link.
    #[command(subcommand)]
    Channel(ChannelCmd),
    /// Play action event logs through a course.
    #[command(subcommand)]
    Sim(SimCmd),
    /// Trace to link to gestures to episode, in one go.
    #[command(subcommand)]
    Pipeline(PipelineCmd),
    /// Survey tables and the K-S comparison.
    #[command(subcommand)]
    Stats(StatsCmd),
}

#[derive(Debug, Subcommand)]
pub enum TraceCmd {
    Gen(TraceGenArgs),
    Validate {
        #[arg(long)]
        trace: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TraceKind {
    Lean,
    Jump,
    Push,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    Left,
    Right,
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Foot {
    Left,
    Right,
}

#[derive(Debug, Args)]
pub struct TraceGenArgs {
    #[arg(long, value_enum)]
    pub kind: TraceKind,
    #[arg(long, value_enum, required_if_eq("kind", "lean"))]
    pub direction: Option<Direction>,
    #[arg(long, required_if_eq("kind", "push"))]
    pub cycles: Option<u32>,
    #[arg(long, default_value_t = 2000)]
    pub duration_ms: u64,
    /// Resting distance in mm (lean, jump) or resting angle in degrees (push).
    #[arg(long)]
    pub rest: Option<f64>,
    /// Excursion from rest: mm for lean and jump, degrees of dip for push.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub cadence_hz: f64,
    #[arg(long, value_enum, default_value = "right")]
    pub foot: Foot,
    #[arg(long, default_value_t = 50.0)]
    pub rate_hz: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise_sigma: f64,
    /// Output file name, relative to --out-dir.
    #[arg(long, default_value = "trace.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum GesturesCmd {
    /// Writes events.csv and hid.csv.
    Run {
        #[arg(long)]
        trace: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct LinkArgs {
    /// Overrides [channel] loss_rate.
    #[arg(long)]
    pub loss_rate: Option<f64>,
    /// Overrides [channel] reorder_window.
    #[arg(long)]
    pub reorder_window: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum ChannelCmd {
    /// Writes capture.bin, received.csv and link_stats.csv.
    Simulate {
        #[arg(long)]
        trace: PathBuf,
        #[command(flatten)]
        link: LinkArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum SimCmd {
    /// One episode per events file. Writes report.csv, or reports.csv for
    /// several files.
    Run {
        #[arg(long, required = true, num_args = 1..)]
        events: Vec<PathBuf>,
        #[arg(long)]
        course: PathBuf,
        /// Threads used for independent episodes.
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum PipelineCmd {
    /// Writes events.csv, hid.csv, report.csv and, unless --no-channel,
    /// capture.bin and link_stats.csv.
    Run {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        course: PathBuf,
        /// Feed the trace to the gesture engine directly.
        #[arg(long, conflicts_with_all = ["loss_rate", "reorder_window"])]
        no_channel: bool,
        #[command(flatten)]
        link: LinkArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum StatsCmd {
    /// Mean and SD per question and controller. Writes items.csv.
    Items {
        #[arg(long)]
        survey: PathBuf,
    },
    /// Mean differences between two controllers. Writes diff.csv.
    Diff {
        /// One file holding both controllers, or one file per controller.
        #[arg(long, num_args = 1..=2, required_unless_present = "summary", conflicts_with = "summary")]
        survey: Vec<PathBuf>,
        /// Pre-computed `question,mean_a,sd_a,mean_b,sd_b` table.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Controllers to compare when a survey holds more than two.
        #[arg(long, num_args = 2)]
        controllers: Vec<String>,
        #[arg(long, default_value = "A")]
        label_a: String,
        #[arg(long, default_value = "B")]
        label_b: String,
    },
    /// K-S comparison of two response distributions. Writes ks.csv.
    Ks {
        /// `category,count_a,count_b` table.
        #[arg(long, required_unless_present = "survey", conflicts_with = "survey")]
        counts: Option<PathBuf>,
        #[arg(long, requires = "question")]
        survey: Option<PathBuf>,
        /// Question label, or its 1-based column number.
        #[arg(long)]
        question: Option<String>,
        #[arg(long, num_args = 2)]
        controllers: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
