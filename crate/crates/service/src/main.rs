use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use blockvision_core::assessment::{build_report, ErrorMode};
use blockvision_core::detect::{detect_frame, run_pipeline, FrameDetection, PipelineConfig};
use blockvision_core::io::{draw_detection_overlay, read_image, write_image};
use blockvision_core::scene::{bench_scene, match_detections, random_scene, render_scene, MatchStats, PerturbLevel, SceneSpec};
use blockvision_core::session::{InstructionKind, Phase, Session, SessionConfig, SessionLog};
use blockvision_core::ColorCounts;
use blockvision_service::{app_state, router, DATA_ENV};
use clap::{Args, Parser, Subcommand, ValueEnum};

type Result<T> = std::result::Result<T, Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(name = "blockvision", version, about = "Colored Box and Blocks detection and assessment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct DetectOpts {
    /// Keep detecting on the unrectified frame when the perimeter is incomplete.
    #[arg(long)]
    legacy_proceed: bool,
    /// Classify color from the center pixel only.
    #[arg(long)]
    single_pixel: bool,
    /// Seed for the Hough transform.
    #[arg(long, default_value_t = 0)]
    hough_seed: u64,
}

impl DetectOpts {
    fn pipeline(&self) -> PipelineConfig {
        let mut cfg = PipelineConfig::default();
        cfg.legacy_proceed = self.legacy_proceed;
        cfg.color.single_pixel = self.single_pixel;
        cfg.seed = self.hough_seed;
        cfg
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Unique,
    Cumulative,
}

impl From<Mode> for ErrorMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Unique => ErrorMode::UniquePerBlock,
            Mode::Cumulative => ErrorMode::CumulativeLegacy,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Detect blocks in a PPM or PNG image.
    Detect {
        image: PathBuf,
        /// Write the debug overlay here.
        #[arg(long)]
        overlay: Option<PathBuf>,
        /// Print the detection record as JSON.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        opts: DetectOpts,
    },
    /// Render a scene spec to an image.
    RenderScene {
        spec: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write the ground-truth blocks as JSON.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Write a random scene spec.
    RandomScene {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        perturb: u8,
        /// Blocks per color as r,g,b.
        #[arg(long, default_value = "2,2,1")]
        counts: String,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run the instruction protocol.
    Session {
        #[command(subcommand)]
        action: SessionAction,
    },
    /// Build the assessment report from a session log.
    Analyze {
        events: PathBuf,
        /// Directory of per-move frames: NNN.json detections or NNN.ppm/.png images.
        #[arg(long)]
        frames: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        actual_errors: u32,
        #[arg(long, value_enum, default_value = "unique")]
        mode: Mode,
        #[command(flatten)]
        opts: DetectOpts,
    },
    /// Detection precision, recall and timing over generated scenes.
    Bench {
        #[arg(long, default_value_t = 100)]
        scenes: u64,
        #[arg(long, default_value_t = 0)]
        perturb: u8,
        #[command(flatten)]
        opts: DetectOpts,
    },
    /// Serve the HTTP API. Sessions persist under $BLOCKVISION_DATA.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        #[command(flatten)]
        opts: DetectOpts,
    },
}

#[derive(Subcommand)]
enum SessionAction {
    Run {
        /// Print each instruction and wait for Enter as the tap.
        #[arg(long)]
        interactive: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the JSON Lines log here.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Milliseconds between taps when not interactive.
        #[arg(long, default_value_t = 1000)]
        tap_every: u64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Detect {
            image,
            overlay,
            json,
            opts,
        } => detect(&image, overlay.as_deref(), json, &opts),
        Command::RenderScene { spec, output, truth } => {
            let spec: SceneSpec = serde_json::from_str(&fs::read_to_string(&spec)?)?;
            write_image(&output, &render_scene(&spec)?)?;
            if let Some(path) = truth {
                fs::write(path, serde_json::to_string_pretty(&spec.ground_truth())?)?;
            }
            Ok(())
        }
        Command::RandomScene {
            seed,
            perturb,
            counts,
            output,
        } => {
            let c: Vec<u32> = counts.split(',').map(|s| s.trim().parse()).collect::<std::result::Result<_, _>>()?;
            let [r, g, b] = c[..] else { return Err("--counts takes r,g,b".into()) };
            let level = PerturbLevel::from_level(perturb).ok_or("--perturb is 0 or 1")?;
            fs::write(output, random_scene(seed, ColorCounts::new(r, g, b), level)?.to_json())?;
            Ok(())
        }
        Command::Session {
            action:
                SessionAction::Run {
                    interactive,
                    seed,
                    log,
                    tap_every,
                },
        } => run_session(interactive, seed, log.as_deref(), tap_every),
        Command::Analyze {
            events,
            frames,
            actual_errors,
            mode,
            opts,
        } => {
            let log = SessionLog::from_jsonl(&fs::read_to_string(&events)?)?;
            let frames = match frames {
                Some(dir) => load_frames(&dir, &opts.pipeline())?,
                None => Vec::new(),
            };
            let report = build_report(&log, &frames, actual_errors, mode.into())?;
            println!("{}", report.to_json());
            Ok(())
        }
        Command::Bench { scenes, perturb, opts } => bench(scenes, perturb, &opts),
        Command::Serve { addr, opts } => serve(&addr, &opts),
    }
}

fn detect(image: &Path, overlay: Option<&Path>, json: bool, opts: &DetectOpts) -> Result<()> {
    let img = read_image(image)?;
    let cfg = opts.pipeline();
    let trace = run_pipeline(&img, &cfg);
    if let Some(path) = overlay {
        write_image(path, &draw_detection_overlay(&img, &trace))?;
    }
    let record = FrameDetection::from_result(0, trace.result().map(|b| b.to_vec()));
    if json {
        println!("{}", record.to_json());
    } else if let Some(reason) = &record.abort_reason {
        println!("aborted: {reason}");
    } else {
        for b in &record.blocks {
            let c = b.center();
            println!("{:?} at ({:.1}, {:.1}) side {:.1}", b.color, c.x, c.y, b.side_length);
        }
        println!("{} blocks", record.blocks.len());
    }
    Ok(())
}

fn load_frames(dir: &Path, cfg: &PipelineConfig) -> Result<Vec<FrameDetection>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
    paths.sort();
    let mut out = Vec::new();
    for path in paths {
        let Some(id) = path.file_stem().and_then(|s| s.to_str()).and_then(|s| s.parse::<u64>().ok()) else {
            continue;
        };
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => out.push(serde_json::from_str(&fs::read_to_string(&path)?)?),
            Some("ppm" | "pgm" | "pbm" | "png") => out.push(detect_frame(&read_image(&path)?, cfg, id)),
            _ => {}
        }
    }
    Ok(out)
}

fn run_session(interactive: bool, seed: u64, log_path: Option<&Path>, tap_every: u64) -> Result<()> {
    let mut session = Session::new(SessionConfig::with_seed(seed))?;
    let start = Instant::now();
    let mut t = 0;
    let stdin = io::stdin();
    let mut lines = stdin.lock().lines();
    let describe = |i: &blockvision_core::session::Instruction| match (i.kind, i.color) {
        (InstructionKind::MoveBlock, Some(c)) => format!("move a {c:?} block"),
        (InstructionKind::AwaitReady, _) => "tap when ready".to_string(),
        (InstructionKind::SwitchHands, _) => "switch hands, then tap when ready".to_string(),
        (InstructionKind::Complete, _) => "done".to_string(),
        (InstructionKind::Feedback, _) => format!("errors: {}", i.error_count.unwrap_or(0)),
        (kind, _) => format!("{kind:?}"),
    };
    let mut instruction = session.current_instruction();
    while session.phase() != Phase::Feedback {
        if interactive {
            print!("{} [Enter] ", describe(&instruction));
            io::stdout().flush()?;
            if lines.next().transpose()?.is_none() {
                return Err("input closed before the session finished".into());
            }
            t = (start.elapsed().as_millis() as u64).max(t + 1);
        } else {
            t += tap_every;
        }
        instruction = session.record_tap(t)?.0;
        if !interactive {
            println!("{t:>7} ms  {}", describe(&instruction));
        }
    }
    let (feedback, _) = session.finalize(0, t + 1)?;
    println!("{}", describe(&feedback));
    if let Some(path) = log_path {
        fs::write(path, session.log().to_jsonl())?;
    }
    Ok(())
}

fn bench(scenes: u64, perturb: u8, opts: &DetectOpts) -> Result<()> {
    let level = PerturbLevel::from_level(perturb).ok_or("--perturb is 0 or 1")?;
    let cfg = opts.pipeline();
    let mut total = MatchStats::default();
    let (mut worst, mut sum) = (0.0f64, 0.0f64);
    for seed in 0..scenes {
        let spec = bench_scene(seed, level)?;
        let img = render_scene(&spec)?;
        let t = Instant::now();
        let trace = run_pipeline(&img, &cfg);
        let dt = t.elapsed().as_secs_f64();
        worst = worst.max(dt);
        sum += dt;
        let detected = trace.result().map(|b| b.to_vec()).unwrap_or_default();
        total.add(&match_detections(&spec.ground_truth(), &detected));
    }
    println!(
        "scenes {scenes} level {perturb}: precision {:.3} recall {:.3} color {:.3} ({} truth, {} detected), mean {:.3} s, worst {:.3} s",
        total.precision(),
        total.recall(),
        total.color_accuracy(),
        total.truth,
        total.detected,
        sum / scenes.max(1) as f64,
        worst
    );
    Ok(())
}

fn serve(addr: &str, opts: &DetectOpts) -> Result<()> {
    let data = std::env::var_os(DATA_ENV).map(PathBuf::from);
    if data.is_none() {
        log::warn!("{DATA_ENV} is not set; sessions are kept in memory only");
    }
    let state = app_state(data.as_deref(), opts.pipeline())?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        log::info!("listening on {}", listener.local_addr()?);
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
