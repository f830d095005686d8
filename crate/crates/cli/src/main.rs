//! `darklight` command-line tool.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use darklight_core::classifier::{topk_accuracy, ClassifierModel};
use darklight_core::experiment::{
    append_report, evaluate, histogram_report, run_grid, train_models, Manifest, ReportRow,
};
use darklight_core::features::FusionMode;
use darklight_core::flow::{clip_flow, FlowParams};
use darklight_core::gamma::{
    darken, enhance_clip, fit_gamma_regressor, EnhanceMode, GammaRegressor, GammaValue,
};
use darklight_core::geometry::{center_crop, maxcenter_crop, scale_bilinear};
use darklight_core::media::{histogram, load_clip, load_ppm, save_clip, save_flow, Frame};
use darklight_core::pipeline::{EnhanceKind, PipelineConfig, PipelineModels};
use darklight_core::sampling::{delta_sample, SamplePlan, SamplingParams};
use darklight_core::synth::{gen_synthetic, MotionClass, SyntheticSpec};
use darklight_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "darklight",
    about = "Low-light action video preprocessing and recognition pipeline",
    version
)]
struct Cli {
    /// Master seed; overrides the config file seed when given.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (0 = all cores). Results never depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Pipeline config file for commands that take one.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dark-action dataset with a manifest.
    GenDataset(GenDatasetArgs),
    /// Brighten a clip with per-frame adaptive gamma.
    Enhance(EnhanceArgs),
    /// Delta-sample a clip, padding with blank frames.
    Sample(SampleArgs),
    /// Crop or rescale every frame of a clip.
    Crop(CropArgs),
    /// Compute dense optical flow fields for a clip.
    Flow(FlowArgs),
    /// Fit a gamma regressor by darkening frames with known gammas.
    FitGamma(FitGammaArgs),
    /// Train the pipeline classifier on a manifest's train split.
    Train(TrainArgs),
    /// Evaluate a trained model on a manifest's test split.
    Eval(EvalArgs),
    /// Run the 3x3 train/test crop-mode ablation grid.
    Grid(GridArgs),
    /// Dump frame histograms, optionally paired before/after.
    Histogram(HistogramArgs),
    /// Write a default pipeline config to edit.
    InitConfig(InitConfigArgs),
}

#[derive(Args)]
struct GenDatasetArgs {
    /// Output directory for clips and manifest.csv.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated motion classes (default: all five).
    #[arg(long)]
    classes: Option<String>,
    #[arg(long, default_value_t = 100)]
    train: usize,
    #[arg(long, default_value_t = 40)]
    test: usize,
    #[arg(long, default_value_t = 64)]
    frames: usize,
    #[arg(long, default_value_t = 170)]
    width: usize,
    #[arg(long, default_value_t = 128)]
    height: usize,
    /// Texture contrast in gray levels.
    #[arg(long, default_value_t = 20.0)]
    noise: f64,
    #[arg(long, default_value_t = 2.0)]
    gamma_lo: f64,
    #[arg(long, default_value_t = 5.0)]
    gamma_hi: f64,
    /// Per-frame gamma jitter amplitude (0 = one gamma per clip).
    #[arg(long, default_value_t = 0.0)]
    per_frame_jitter: f64,
}

#[derive(Args)]
struct EnhanceArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// target | regressor | fixed
    #[arg(long, default_value = "target")]
    mode: String,
    /// Gamma for fixed mode.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 102.0)]
    target_mean: f64,
    /// Estimate one gamma for the whole clip.
    #[arg(long)]
    per_video: bool,
    /// Fitted regressor CSV (regressor mode).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Write the per-frame gamma trace as CSV.
    #[arg(long)]
    dump_gamma_trace: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value_t = 4)]
    omega: usize,
    #[arg(long, default_value_t = 0)]
    alpha: usize,
    #[arg(long, default_value_t = 2)]
    beta: usize,
    #[arg(long, default_value_t = 8)]
    sigma: usize,
    /// Dump the sample plan as CSV.
    #[arg(long)]
    plan: Option<PathBuf>,
}

#[derive(Args)]
struct CropArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// center | maxcenter | scale
    #[arg(long)]
    mode: String,
    /// Output side; defaults: center 112, maxcenter min(W,H), scale 128.
    #[arg(long)]
    size: Option<usize>,
}

#[derive(Args)]
struct FlowArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// lk | hs
    #[arg(long, default_value = "lk")]
    method: String,
    #[arg(long, default_value_t = 15)]
    window: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 200)]
    iters: usize,
    /// Directory for flow_NNNN.flo outputs.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct FitGammaArgs {
    /// Manifest of normal-light clips to darken for training pairs.
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated darkening gammas used as labels.
    #[arg(long, default_value = "1.5,2,3,5")]
    gammas: String,
    /// Frames sampled per clip.
    #[arg(long, default_value_t = 3)]
    frames_per_clip: usize,
    /// Cap on clips read from the manifest.
    #[arg(long, default_value_t = 40)]
    max_clips: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// Classifier model CSV output.
    #[arg(long)]
    out: PathBuf,
    /// Where to save a freshly trained gamma regressor (regressor mode
    /// with no enhance.model_path).
    #[arg(long)]
    gamma_out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Gamma regressor CSV; overrides enhance.model_path.
    #[arg(long)]
    gamma_model: Option<PathBuf>,
    /// Comma-separated k values to report.
    #[arg(long, default_value = "1,5")]
    topk: String,
    /// Append a report row to this CSV.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    train_data: PathBuf,
    #[arg(long)]
    test_data: PathBuf,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct HistogramArgs {
    /// Input frame (PPM).
    #[arg(long)]
    before: PathBuf,
    /// Optional second frame for a paired before/after report.
    #[arg(long)]
    after: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InitConfigArgs {
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version exit through this path too; those are success
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::benchmark_default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::GenDataset(args) => cmd_gen_dataset(cli, args),
        Command::Enhance(args) => cmd_enhance(args),
        Command::Sample(args) => cmd_sample(cli, args),
        Command::Crop(args) => cmd_crop(args),
        Command::Flow(args) => cmd_flow(args),
        Command::FitGamma(args) => cmd_fit_gamma(args),
        Command::Train(args) => cmd_train(cli, args),
        Command::Eval(args) => cmd_eval(cli, args),
        Command::Grid(args) => cmd_grid(cli, args),
        Command::Histogram(args) => cmd_histogram(args),
        Command::InitConfig(args) => {
            PipelineConfig::benchmark_default().save(&args.out)?;
            println!("wrote {}", args.out.display());
            Ok(())
        }
    }
}

fn cmd_gen_dataset(cli: &Cli, args: &GenDatasetArgs) -> Result<()> {
    let classes = match &args.classes {
        None => MotionClass::ALL.to_vec(),
        Some(list) => list
            .split(',')
            .map(|n| MotionClass::from_name(n.trim()))
            .collect::<Result<Vec<_>>>()?,
    };
    let spec = SyntheticSpec {
        classes,
        train_per_class: args.train,
        test_per_class: args.test,
        frames_per_clip: args.frames,
        width: args.width,
        height: args.height,
        noise_amplitude: args.noise,
        gamma_lo: args.gamma_lo,
        gamma_hi: args.gamma_hi,
        per_frame_jitter: args.per_frame_jitter,
        seed: cli.seed.unwrap_or(42),
    };
    let start = Instant::now();
    let manifest = gen_synthetic(&spec, &args.out)?;
    eprintln!(
        "generated {} clips in {} ms",
        manifest.entries().len(),
        start.elapsed().as_millis()
    );
    println!("{}", args.out.join("manifest.csv").display());
    Ok(())
}

fn cmd_enhance(args: &EnhanceArgs) -> Result<()> {
    let clip = load_clip(&args.input)?;
    let mode = match args.mode.as_str() {
        "fixed" => EnhanceMode::Fixed(GammaValue::new(args.gamma)?),
        "target" => EnhanceMode::Target { target_mean: args.target_mean },
        "regressor" => {
            let path = args
                .model
                .as_ref()
                .ok_or_else(|| Error::invalid("regressor mode needs --model"))?;
            EnhanceMode::Regressor(GammaRegressor::load(path)?)
        }
        other => return Err(Error::invalid(format!("unknown enhance mode `{other}`"))),
    };
    let (enhanced, trace) = enhance_clip(&clip, &mode, args.per_video)?;
    save_clip(&enhanced, &args.output)?;
    if let Some(path) = &args.dump_gamma_trace {
        let mut csv = String::from("frame,gamma\n");
        for (i, g) in trace.iter().enumerate() {
            csv.push_str(&format!("{},{}\n", i, g.value()));
        }
        std::fs::write(path, csv)?;
    }
    let mean: f64 = trace.iter().map(|g| g.value()).sum::<f64>() / trace.len() as f64;
    eprintln!("enhanced {} frames, mean gamma {mean:.3}", trace.len());
    Ok(())
}

fn cmd_sample(cli: &Cli, args: &SampleArgs) -> Result<()> {
    let clip = load_clip(&args.input)?;
    let params = SamplingParams::new(args.omega, args.alpha, args.beta, args.sigma)?;
    let seed = cli.seed.unwrap_or(42);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (sampled, plan) = delta_sample(&clip, &params, &mut rng)?;
    save_clip(&sampled, &args.output)?;
    if let Some(path) = &args.plan {
        let clip_id = args.input.file_stem().unwrap_or_default().to_string_lossy();
        let csv = format!("{}\n{}\n", SamplePlan::csv_header(), plan.to_csv_row(&clip_id, seed));
        std::fs::write(path, csv)?;
    }
    eprintln!(
        "sampled {} -> {} frames (stride {}, p1 {}, p2 {})",
        clip.len(),
        sampled.len(),
        plan.stride,
        plan.p1,
        plan.p2
    );
    Ok(())
}

fn cmd_crop(args: &CropArgs) -> Result<()> {
    let clip = load_clip(&args.input)?;
    let out = clip.map_frames(|frame| match args.mode.as_str() {
        "center" => center_crop(frame, args.size.unwrap_or(112)),
        "maxcenter" => maxcenter_crop(frame, args.size),
        "scale" => {
            let side = args.size.unwrap_or(128);
            scale_bilinear(frame, side, side)
        }
        other => Err(Error::invalid(format!("unknown crop mode `{other}`"))),
    })?;
    save_clip(&out, &args.output)?;
    eprintln!("{}x{} -> {}x{}", clip.width(), clip.height(), out.width(), out.height());
    Ok(())
}

fn cmd_flow(args: &FlowArgs) -> Result<()> {
    let clip = load_clip(&args.input)?;
    let params = match args.method.as_str() {
        "lk" => FlowParams::lucas_kanade(args.window)?,
        "hs" => FlowParams::horn_schunck(args.alpha, args.iters)?,
        other => return Err(Error::invalid(format!("unknown flow method `{other}`"))),
    };
    std::fs::create_dir_all(&args.out_dir)?;
    let out = clip_flow(&clip, &params)?;
    for (i, field) in out.fields.iter().enumerate() {
        save_flow(field, args.out_dir.join(format!("flow_{i:04}.flo")))?;
    }
    eprintln!("wrote {} flow fields", out.fields.len());
    Ok(())
}

fn cmd_fit_gamma(args: &FitGammaArgs) -> Result<()> {
    let manifest = Manifest::load(&args.data)?;
    let gammas: Vec<GammaValue> = args
        .gammas
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("bad gamma `{s}`")))
                .and_then(GammaValue::new)
        })
        .collect::<Result<_>>()?;
    if gammas.is_empty() {
        return Err(Error::invalid("need at least one gamma"));
    }
    let mut pairs: Vec<(Frame, GammaValue)> = Vec::new();
    for entry in manifest.entries().iter().take(args.max_clips) {
        let clip = load_clip(manifest.resolve(entry))?;
        let step = (clip.len() / args.frames_per_clip.max(1)).max(1);
        for frame in clip.frames().iter().step_by(step).take(args.frames_per_clip) {
            for &g in &gammas {
                pairs.push((darken(frame, g), g));
            }
        }
    }
    let model = fit_gamma_regressor(&pairs)?;
    model.save(&args.out)?;
    eprintln!("fitted gamma regressor on {} pairs", model.trained_on);
    Ok(())
}

fn cmd_train(cli: &Cli, args: &TrainArgs) -> Result<()> {
    let config = load_config(cli)?;
    let manifest = Manifest::load(&args.data)?;
    let start = Instant::now();
    let models = train_models(&config, &manifest)?;
    models.classifier.save(&args.out)?;
    if let Some(gamma) = &models.gamma {
        if config.enhance.model_path.is_empty() {
            let path = args
                .gamma_out
                .clone()
                .unwrap_or_else(|| args.out.with_extension("gamma.csv"));
            gamma.save(&path)?;
            eprintln!("saved gamma regressor to {}", path.display());
        }
    }
    eprintln!(
        "trained {} classes in {} ms",
        models.classifier.num_classes(),
        start.elapsed().as_millis()
    );
    println!("{}", args.out.display());
    Ok(())
}

fn cmd_eval(cli: &Cli, args: &EvalArgs) -> Result<()> {
    let mut config = load_config(cli)?;
    if let Some(path) = &args.gamma_model {
        config.enhance.model_path = path.display().to_string();
    }
    let manifest = Manifest::load(&args.data)?;
    let classifier = ClassifierModel::load(&args.model)?;
    let gamma = match config.enhance.kind {
        EnhanceKind::Regressor => {
            if config.enhance.model_path.is_empty() {
                return Err(Error::invalid(
                    "regressor enhancement at eval time needs --gamma-model or enhance.model_path",
                ));
            }
            Some(GammaRegressor::load(&config.enhance.model_path)?)
        }
        _ => None,
    };
    let models = PipelineModels { classifier, gamma };
    let start = Instant::now();
    let eval = evaluate(&config, &models, &manifest)?;
    eprintln!("evaluated in {} ms", start.elapsed().as_millis());
    for k_str in args.topk.split(',') {
        let k: usize = k_str
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad topk value `{k_str}`")))?;
        let acc = topk_accuracy(&eval.predictions, &eval.labels, k)?;
        println!("top{k}={acc}");
    }
    if let Some(report) = &args.report {
        let row = ReportRow {
            config_hash: config.hash(),
            crop_train: config.crop_train.label(),
            crop_test: config.crop_test.label(),
            fusion: match config.fusion {
                FusionMode::Concat => "concat".into(),
                FusionMode::ElementwiseMin => "min".into(),
            },
            enhancement: config.enhance.kind.as_str().to_string(),
            top1: eval.top1,
            top5: eval.top5,
        };
        append_report(report, &[row])?;
    }
    Ok(())
}

fn cmd_grid(cli: &Cli, args: &GridArgs) -> Result<()> {
    let config = load_config(cli)?;
    let train = Manifest::load(&args.train_data)?;
    let test = Manifest::load(&args.test_data)?;
    let outcomes = run_grid(&config, &train, &test)?;
    for outcome in &outcomes {
        eprintln!(
            "{} / {}: top1 {:.4} ({} ms)",
            outcome.row.crop_train, outcome.row.crop_test, outcome.row.top1, outcome.wall_ms
        );
    }
    let rows: Vec<ReportRow> = outcomes.iter().map(|o| o.row.clone()).collect();
    append_report(&args.report, &rows)?;
    println!("{}", args.report.display());
    Ok(())
}

fn cmd_histogram(args: &HistogramArgs) -> Result<()> {
    let before = load_ppm(&args.before)?;
    match &args.after {
        Some(after_path) => {
            let after = load_ppm(after_path)?;
            histogram_report(&before, &after, &args.out)?;
        }
        None => {
            std::fs::write(&args.out, histogram(&before).to_csv())?;
        }
    }
    Ok(())
}
