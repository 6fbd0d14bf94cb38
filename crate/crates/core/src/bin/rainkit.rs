use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rainkit::enhance::{auto_tune, compute_histogram, enhance, EnhanceParams, Histogram, HistogramMetric, SharpenMode, TuneGrid};
use rainkit::pipeline::{collapse, compare_methods, run_stage1, Method, PipelineConfig};
use rainkit::sequence::{load_image, load_manifest, save_image};
use rainkit::{quality_report, RpcaConfig};

type CliResult<T = ()> = Result<T, Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(name = "rainkit", version, about = "Multi-frame rain removal and pseudo ground-truth generation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Batch stage-I runs.
    #[command(subcommand)]
    Pipeline(PipelineCommand),
    /// Collapse one manifest into a rain-free image (no enhancement).
    Derain {
        manifest: PathBuf,
        #[command(flatten)]
        common: CommonFlags,
        /// Also write background/rain frames to <out>/debug.
        #[arg(long)]
        dump: bool,
    },
    /// Gamma + unsharp enhancement of one image, fixed or auto-tuned.
    Enhance {
        image: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 0.0)]
        weight: f64,
        #[arg(long, default_value_t = 1)]
        kernel_size: usize,
        #[arg(long, default_value = "standard")]
        mode: SharpenMode,
        /// Reference histogram file; switches to grid search.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long, default_value = "wasserstein1")]
        metric: HistogramMetric,
    },
    /// PSNR/SSIM report as JSON.
    Metrics {
        pred: PathBuf,
        gt: PathBuf,
        /// Also report this histogram distance.
        #[arg(long)]
        hist_metric: Option<HistogramMetric>,
    },
    /// 256-bin histogram, one line per channel.
    Hist {
        image: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum PipelineCommand {
    /// Generate pseudo-GT images, pair manifest and run report.
    Run(CommonFlags),
    /// Score Average / Median / Low-rank / Pseudo GT against ground truth.
    Compare(CommonFlags),
}

#[derive(Args, Clone)]
struct CommonFlags {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    method: Option<Method>,
}

impl CommonFlags {
    fn load(&self) -> CliResult<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::from_file(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        if let Some(m) = self.method {
            cfg.method = m;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    match cli.command {
        Command::Pipeline(PipelineCommand::Run(flags)) => {
            let cfg = flags.load()?;
            let outcome = run_stage1(&cfg)?;
            let r = &outcome.report;
            println!(
                "{} sequence(s) ok, {} failed; {} pairs; report in {}",
                r.succeeded,
                r.failed,
                outcome.pairs.rows.len(),
                cfg.out_dir.join(rainkit::pipeline::RUN_REPORT_FILE).display()
            );
            for s in r.sequences.iter().filter(|s| s.error.is_some()) {
                eprintln!("{}: {}", s.scene_id, s.error.as_deref().unwrap_or_default());
            }
            return Ok(if r.all_succeeded() { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
        Command::Pipeline(PipelineCommand::Compare(flags)) => {
            let cfg = flags.load()?;
            let table = compare_methods(&cfg)?;
            print!("{}", table.to_text());
        }
        Command::Derain { manifest, common, dump } => {
            let cfg = common.load()?;
            let seq = load_manifest(&manifest)?;
            let rpca = RpcaConfig {
                seed: cfg.seed,
                ..cfg.rpca.clone()
            };
            let collapsed = collapse(&seq, cfg.method, &rpca)?;
            std::fs::create_dir_all(&cfg.out_dir)?;
            let path = cfg.out_dir.join(format!("{}.png", seq.scene_id()));
            save_image(&collapsed.image, &path)?;
            if let Some(d) = &collapsed.derain {
                for s in &d.solves {
                    println!(
                        "channel {}: {} iterations, residual {:e}, rank {}, converged {}",
                        s.label, s.output.iterations, s.output.final_residual, s.output.rank_estimate, s.output.converged
                    );
                }
                if dump {
                    d.dump_debug(cfg.out_dir.join("debug"))?;
                }
            }
            println!("wrote {}", path.display());
        }
        Command::Enhance {
            image,
            out,
            gamma,
            weight,
            kernel_size,
            mode,
            reference,
            metric,
        } => {
            let img = load_image(&image)?;
            let params = match reference {
                Some(r) => {
                    let reference = Histogram::load(&r)?;
                    let grid = TuneGrid {
                        sharpen_mode: mode,
                        ..TuneGrid::default()
                    };
                    let best = auto_tune(&img, &reference, &grid, metric)?;
                    println!("distance {}", best.distance);
                    best.params
                }
                None => EnhanceParams {
                    gamma,
                    weight,
                    kernel_size,
                    sharpen_mode: mode,
                },
            };
            println!("{}", serde_json::to_string(&params)?);
            save_image(&enhance(&img, &params)?, &out)?;
        }
        Command::Metrics { pred, gt, hist_metric } => {
            let (p, g) = (load_image(&pred)?, load_image(&gt)?);
            let mut report = quality_report(&p, &g)?;
            if let Some(m) = hist_metric {
                report = report.with_histogram_distance(&p, &g, m)?;
            }
            println!("{}", report.to_json());
        }
        Command::Hist { image, out } => {
            let h = compute_histogram(&load_image(&image)?);
            match out {
                Some(path) => h.save(path)?,
                None => print!("{}", h.to_text()),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
