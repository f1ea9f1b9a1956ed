//! Command-line front end: reproducible pipelines over a single JSON
//! configuration.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for data errors.

pub mod config;
pub mod error;
pub mod stages;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use roadfuse_core::evaluation::Method;

use crate::config::{load, Overrides, RunConfig};
use crate::error::{CliError, CliResult};
use crate::stages::{FuseFiles, Layout};

#[derive(Debug, Parser)]
#[command(name = "roadfuse", version, about = "Roadside camera/LiDAR localization and fusion")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Top-level seed; overrides the configuration.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory; overrides `output_dir`.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Override a config value by dotted path, e.g. `scenario.duration=60`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Start from a named preset (same as `--set preset=NAME`).
    #[arg(long, global = true, value_name = "NAME")]
    pub preset: Option<String>,
    /// More log output; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Generate ground truth, pixel detections and LiDAR data.
    Simulate,
    /// Detect objects in every point cloud of a manifest.
    LidarDetect {
        /// Cloud manifest [default: OUT/lidar/manifest.json].
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Detection CSV to write [default: OUT/lidar_detections.csv].
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Localize pixel detections into camera trajectories.
    Localize {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Kalman-smooth a trajectory CSV.
    Smooth {
        /// Trajectory CSV [default: OUT/camera_tracks.csv].
        #[arg(long)]
        input: Option<PathBuf>,
        /// [default: INPUT with a `_smoothed` suffix].
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Track LiDAR detections and pair them with camera tracks.
    Match {
        /// Camera trajectories or pixel detections.
        #[arg(long)]
        camera: Option<PathBuf>,
        /// LiDAR detections or trajectories.
        #[arg(long)]
        lidar: Option<PathBuf>,
    },
    /// Fuse paired camera and LiDAR tracks.
    Fuse {
        /// Camera trajectories or pixel detections [default: OUT/camera_tracks.csv].
        #[arg(long)]
        camera: Option<PathBuf>,
        /// LiDAR trajectories or detections [default: OUT/lidar_tracks.csv].
        #[arg(long)]
        lidar: Option<PathBuf>,
        /// Pair list; computed from the tracks when absent.
        #[arg(long)]
        pairs: Option<PathBuf>,
    },
    /// Compare estimates with ground truth.
    Evaluate {
        /// [default: OUT/truth.csv]
        #[arg(long)]
        truth: Option<PathBuf>,
        /// `METHOD=PATH` with METHOD one of camera, lidar, kf_fused,
        /// average; repeatable. Defaults to the run's own outputs.
        #[arg(long = "estimate", value_name = "METHOD=PATH")]
        estimates: Vec<String>,
    },
    /// simulate → lidar-detect → localize → match → smooth → fuse → evaluate.
    Pipeline,
    /// Print the resolved configuration.
    PrintConfig,
}

impl GlobalArgs {
    pub fn overrides(&self) -> Overrides {
        let mut set = Vec::new();
        if let Some(p) = &self.preset {
            set.push(format!("preset={p}"));
        }
        set.extend(self.set.iter().cloned());
        Overrides {
            config: self.config.clone(),
            set,
            seed: self.seed,
            out: self.out.clone(),
        }
    }
}

fn parse_estimate(spec: &str) -> CliResult<(Method, PathBuf)> {
    let (m, p) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--estimate expects METHOD=PATH, got '{spec}'")))?;
    let method: Method = m
        .parse()
        .map_err(|e: roadfuse_core::Error| CliError::Config(e.to_string()))?;
    Ok((method, PathBuf::from(p)))
}

fn smoothed_name(input: &std::path::Path) -> PathBuf {
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let stem = stem.strip_suffix("_tracks").unwrap_or(&stem);
    input.with_file_name(format!("{stem}_smoothed.csv"))
}

/// Runs one command against a resolved configuration.
pub fn execute(command: &Command, cfg: &RunConfig) -> CliResult<()> {
    let out = Layout::new(&cfg.output_dir);
    match command {
        Command::Simulate => stages::simulate(cfg, &out),
        Command::LidarDetect { manifest, output } => {
            let manifest = manifest.clone().unwrap_or_else(|| out.manifest());
            let output = output.clone().unwrap_or_else(|| out.lidar_detections());
            stages::lidar_detect(cfg, &manifest, &output).map(drop)
        }
        Command::Localize { input, output } => {
            stages::ensure_dir(&out.root)?;
            let input = input.clone().unwrap_or_else(|| out.camera_detections());
            let output = output.clone().unwrap_or_else(|| out.camera_tracks());
            stages::localize(cfg, &input, &output).map(drop)
        }
        Command::Smooth { input, output } => {
            let input = input.clone().unwrap_or_else(|| out.camera_tracks());
            let output = output.clone().unwrap_or_else(|| smoothed_name(&input));
            stages::smooth(cfg, &input, &output).map(drop)
        }
        Command::Match { camera, lidar } => {
            stages::ensure_dir(&out.root)?;
            let camera = camera.clone().unwrap_or_else(|| out.camera_tracks());
            let lidar = lidar.clone().unwrap_or_else(|| out.lidar_detections());
            stages::match_tracks(cfg, &camera, &lidar, &out.lidar_tracks(), &out.pairs()).map(drop)
        }
        Command::Fuse { camera, lidar, pairs } => {
            let camera = camera.clone().unwrap_or_else(|| out.camera_tracks());
            let lidar = lidar.clone().unwrap_or_else(|| out.lidar_tracks());
            let files = FuseFiles {
                camera: &camera,
                lidar: &lidar,
                pairs: pairs.as_deref(),
            };
            stages::fuse_files(cfg, files, &out).map(drop)
        }
        Command::Evaluate { truth, estimates } => {
            let truth = truth.clone().unwrap_or_else(|| out.truth());
            let estimates = if estimates.is_empty() {
                let present: Vec<_> = stages::default_estimates(&out)
                    .into_iter()
                    .filter(|(_, p)| p.exists())
                    .collect();
                if present.is_empty() {
                    return Err(CliError::Data(format!(
                        "no estimate files found in {}",
                        out.root.display()
                    )));
                }
                present
            } else {
                estimates.iter().map(|s| parse_estimate(s)).collect::<CliResult<_>>()?
            };
            stages::evaluate(cfg, &truth, &estimates, &out).map(drop)
        }
        Command::Pipeline => stages::pipeline(cfg, &out).map(drop),
        Command::PrintConfig => {
            print!("{}", cfg.to_json());
            Ok(())
        }
    }
}

/// Parses arguments, loads the configuration and runs the command.
/// Returns the process exit code; errors are reported on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    let result = load(&cli.global.overrides()).and_then(|cfg| execute(&cli.command, &cfg));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("roadfuse: {e}");
            e.exit_code()
        }
    }
}
