//! `sdlane`: command-line front end for the sdlane toolkit.
//!
//! Exit codes: 0 on success, 1 when an operation fails on well-formed input
//! (unreadable scene, invariant violation, failed gradient check), 2 on
//! usage errors (bad flags, malformed or invalid configuration).

mod config;
mod error;
mod image;
mod render;
mod topo_demo;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use sdlane::dataio::{
    degrade, load_scene_file, save_scene, synth_scene, write_tensor, DegradeConfig, SynthConfig,
    Tensor,
};
use sdlane::metrics::{evaluate_scenes, EvalConfig};
use sdlane::noise::{noise_level, parse_noise_spec, perturb, sample_transform};
use sdlane::sd_encode::{rasterize, tokenize, CanvasConfig, Channel, TokenConfig};
use serde_json::json;

use crate::config::merged;
use crate::error::{usage, CliError, CliResult};
use crate::render::RenderConfig;

#[derive(Debug, Parser)]
#[command(name = "sdlane", version, about = "Lane-segment and SD-map toolkit")]
struct Cli {
    /// Random seed (overrides any seed in --config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON object merged over the subcommand's defaults: inline text
    /// starting with `{`, or a file path.
    #[arg(long, global = true, value_name = "JSON|FILE")]
    config: Option<String>,
    /// Output file (or directory for `encode`); stdout when omitted and the
    /// subcommand allows it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ImageFormat {
    Png,
    Pgm,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rasterize a scene's SD map into the 6-channel canvas.
    Encode {
        #[arg(long)]
        scene: PathBuf,
        /// Canvas configuration; same form as --config, which it replaces.
        #[arg(long, value_name = "JSON|FILE")]
        canvas_config: Option<String>,
        #[arg(long, value_enum, default_value = "png")]
        image_format: ImageFormat,
    },
    /// Emit one token vector per SD polyline as JSON.
    Tokenize {
        #[arg(long)]
        scene: PathBuf,
    },
    /// Apply rigid localization noise to a scene's SD map.
    #[command(group(ArgGroup::new("noise_spec").required(true).args(["noise", "level"])))]
    Perturb {
        #[arg(long)]
        scene: PathBuf,
        /// `rot<deg>_std<m>_prob<p>` or `no_noise`.
        #[arg(long)]
        noise: Option<String>,
        /// Test-time noise level.
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=8))]
        level: Option<u8>,
    },
    /// Score predictions against ground truth; prints the report as JSON.
    Eval {
        /// Prediction scene; repeat together with --gt to pool scenes.
        #[arg(long, required = true)]
        pred: Vec<PathBuf>,
        #[arg(long, required = true)]
        gt: Vec<PathBuf>,
    },
    /// Gradient-check the topology block on a random instance.
    TopoDemo {
        /// Number of queries.
        #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u16).range(1..=4096))]
        n: u16,
        /// Feature width.
        #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u16).range(1..=4096))]
        d: u16,
        /// Connection-embedding width; defaults to max(d/2, 1).
        #[arg(long, value_parser = clap::value_parser!(u16).range(1..=4096))]
        d_e: Option<u16>,
        /// Central-difference step.
        #[arg(long, default_value_t = 1e-5)]
        eps: f64,
        /// Check at most this many random entries per tensor.
        #[arg(long)]
        max_coords: Option<usize>,
        /// N×D feature tensor (LGT1) replacing the random features.
        #[arg(long)]
        features: Option<PathBuf>,
        /// N×N topology tensor (LGT1) replacing the random matrix.
        #[arg(long)]
        topology: Option<PathBuf>,
    },
    /// Generate a synthetic ground-truth scene, optionally with a degraded
    /// prediction.
    Synth {
        /// Also write a degraded prediction here.
        #[arg(long)]
        pred: Option<PathBuf>,
        /// Degradation settings, same form as --config.
        #[arg(long, value_name = "JSON|FILE")]
        degrade: Option<String>,
    },
    /// Draw a scene (and optionally a prediction over it) as a PNG.
    Render {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        pred: Option<PathBuf>,
    },
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| CliError::Domain(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .lock()
            .write_all(bytes)
            .map_err(|e| CliError::Domain(format!("stdout: {e}"))),
    }
}

fn emit_json(out: Option<&Path>, value: &serde_json::Value) -> CliResult<()> {
    let mut bytes =
        serde_json::to_vec_pretty(value).map_err(|e| CliError::Domain(e.to_string()))?;
    bytes.push(b'\n');
    emit(out, &bytes)
}

fn require_out(out: Option<&Path>, what: &str) -> CliResult<PathBuf> {
    out.map(Path::to_path_buf)
        .ok_or_else(|| usage(format!("{what} requires --out")))
}

fn encode(
    cli: &Cli,
    scene: &Path,
    canvas_config: Option<&str>,
    format: ImageFormat,
) -> CliResult<()> {
    if canvas_config.is_some() && cli.config.is_some() {
        return Err(usage("give either --canvas-config or --config, not both"));
    }
    let cfg: CanvasConfig = merged(canvas_config.or(cli.config.as_deref()))?;
    cfg.validate().map_err(usage)?;
    let dir = require_out(cli.out.as_deref(), "encode")?;
    let scene = load_scene_file(scene)?;
    let canvas = rasterize(&scene.sd_map, &cfg)?;
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Domain(format!("cannot create {}: {e}", dir.display())))?;

    let (h, w) = (canvas.height(), canvas.width());
    let tensor_path = dir.join("canvas.lgt");
    let tensor = Tensor::new(canvas.dims().to_vec(), canvas.as_slice().to_vec())?;
    emit(Some(&tensor_path), &write_tensor(&tensor))?;
    let mut images = Vec::new();
    for ch in Channel::ALL {
        let (lo, hi) = match ch {
            Channel::DirCos | Channel::DirSin => (-1.0, 1.0),
            _ => (0.0, 1.0),
        };
        let pixels = image::quantize(canvas.channel(ch), lo, hi);
        let (bytes, ext) = match format {
            ImageFormat::Png => (image::gray_png(w, h, &pixels)?, "png"),
            ImageFormat::Pgm => (image::gray_pgm(w, h, &pixels), "pgm"),
        };
        let path = dir.join(format!("{}_{}.{ext}", ch as usize, ch.name()));
        emit(Some(&path), &bytes)?;
        images.push(path.display().to_string());
    }
    emit_json(
        None,
        &json!({"tensor": tensor_path.display().to_string(), "dims": canvas.dims(), "images": images}),
    )
}

fn tokenize_cmd(cli: &Cli, scene: &Path) -> CliResult<()> {
    let cfg: TokenConfig = merged(cli.config.as_deref())?;
    cfg.validate().map_err(usage)?;
    let scene = load_scene_file(scene)?;
    let tokens = tokenize(&scene.sd_map, &cfg)?;
    let categories: Vec<_> = scene.sd_map.elements.iter().map(|e| e.category).collect();
    emit_json(
        cli.out.as_deref(),
        &json!({
            "token_dim": cfg.token_dim(),
            "categories": categories,
            "tokens": tokens.iter().map(|t| t.as_slice()).collect::<Vec<_>>(),
        }),
    )
}

fn perturb_cmd(cli: &Cli, scene: &Path, noise: Option<&str>, level: Option<u8>) -> CliResult<()> {
    let cfg = match (noise, level) {
        (Some(spec), _) => parse_noise_spec(spec).map_err(usage)?,
        (None, Some(level)) => noise_level(level.into()).map_err(usage)?,
        (None, None) => unreachable!("clap requires one of --noise/--level"),
    };
    let seed = cli.seed.unwrap_or(0);
    let mut scene = load_scene_file(scene)?;
    match sample_transform(&cfg, seed) {
        Some(t) => eprintln!(
            "{cfg}: rotated {:.4}°, shifted ({:.4}, {:.4}) m",
            t.angle_rad.to_degrees(),
            t.translation.x,
            t.translation.y
        ),
        None => eprintln!("{cfg}: not applied"),
    }
    scene.sd_map = perturb(&scene.sd_map, &cfg, seed);
    emit(cli.out.as_deref(), &save_scene(&scene))
}

fn eval_cmd(cli: &Cli, pred: &[PathBuf], gt: &[PathBuf]) -> CliResult<()> {
    if pred.len() != gt.len() {
        return Err(usage(format!(
            "{} --pred files but {} --gt files",
            pred.len(),
            gt.len()
        )));
    }
    let cfg: EvalConfig = merged(cli.config.as_deref())?;
    cfg.validate().map_err(usage)?;
    let load = |paths: &[PathBuf]| -> CliResult<Vec<_>> {
        paths
            .iter()
            .map(|p| Ok(load_scene_file(p)?.graph))
            .collect()
    };
    let (preds, gts) = (load(pred)?, load(gt)?);
    let pairs: Vec<_> = preds.iter().zip(&gts).collect();
    let report = evaluate_scenes(&pairs, &cfg)?;
    emit_json(
        cli.out.as_deref(),
        &serde_json::to_value(&report).map_err(|e| CliError::Domain(e.to_string()))?,
    )
}

fn synth_cmd(cli: &Cli, pred: Option<&Path>, degrade_cfg: Option<&str>) -> CliResult<()> {
    let mut cfg: SynthConfig = merged(cli.config.as_deref())?;
    let mut dcfg: DegradeConfig = merged(degrade_cfg)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        dcfg.seed = seed;
    }
    cfg.validate().map_err(usage)?;
    dcfg.validate().map_err(usage)?;
    // Infeasible layouts are configuration mistakes too.
    let gt = synth_scene(&cfg).map_err(|e| match e {
        sdlane::Error::Config(_) => usage(e),
        e => e.into(),
    })?;
    if let Some(path) = pred {
        emit(Some(path), &save_scene(&degrade(&gt, &dcfg)?))?;
    }
    emit(cli.out.as_deref(), &save_scene(&gt))
}

fn render_cmd(cli: &Cli, scene: &Path, pred: Option<&Path>) -> CliResult<()> {
    let cfg: RenderConfig = merged(cli.config.as_deref())?;
    let out = require_out(cli.out.as_deref(), "render")?;
    let gt = load_scene_file(scene)?;
    let pred = pred.map(load_scene_file).transpose()?;
    let img = render::render(&gt, pred.as_ref(), &cfg)?;
    emit(
        Some(&out),
        &image::rgb_png(img.width, img.height, &img.pixels)?,
    )
}

fn run(cli: &Cli) -> CliResult<()> {
    if cli.config.is_some()
        && matches!(
            cli.command,
            Command::Perturb { .. } | Command::TopoDemo { .. }
        )
    {
        return Err(usage("this subcommand takes no --config; use its flags"));
    }
    match &cli.command {
        Command::Encode {
            scene,
            canvas_config,
            image_format,
        } => encode(cli, scene, canvas_config.as_deref(), *image_format),
        Command::Tokenize { scene } => tokenize_cmd(cli, scene),
        Command::Perturb {
            scene,
            noise,
            level,
        } => perturb_cmd(cli, scene, noise.as_deref(), *level),
        Command::Eval { pred, gt } => eval_cmd(cli, pred, gt),
        Command::TopoDemo {
            n,
            d,
            d_e,
            eps,
            max_coords,
            features,
            topology,
        } => {
            if !(*eps > 0.0 && eps.is_finite()) {
                return Err(usage(format!("--eps {eps} must be positive")));
            }
            let args = topo_demo::DemoArgs {
                n: (*n).into(),
                d: (*d).into(),
                d_e: d_e.map(usize::from),
                seed: cli.seed.unwrap_or(0),
                eps: *eps,
                max_coords: *max_coords,
                features: features.clone(),
                topology: topology.clone(),
            };
            let (report, passed) = topo_demo::run(&args)?;
            emit_json(cli.out.as_deref(), &report)?;
            if passed {
                Ok(())
            } else {
                Err(CliError::Domain(format!(
                    "gradient check exceeded tolerance {}",
                    topo_demo::TOLERANCE
                )))
            }
        }
        Command::Synth { pred, degrade } => synth_cmd(cli, pred.as_deref(), degrade.as_deref()),
        Command::Render { scene, pred } => render_cmd(cli, scene, pred.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
