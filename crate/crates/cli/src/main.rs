//! `repairnet`: simulate training data, train, enhance, evaluate and audit.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use repairnet_core::audio::wav::{read_wav, write_wav, WavEncoding};
use repairnet_core::degrade::{export_corpus, SimConfig, Stage};
use repairnet_core::eval::{audit_corpus, evaluate_dirs, write_report};
use repairnet_core::models::{enhance, measure_rtf, Arch, Cascade, Model, ModelConfig, Pipeline};
use repairnet_core::train::{train_from_config, TrainConfig};
use repairnet_core::DType;

#[derive(Parser)]
#[command(
    name = "repairnet",
    version,
    about = "Two-stage speech repair and denoising"
)]
struct Cli {
    /// Worker threads for tensor kernels. Defaults to one, which keeps every
    /// command reproducible.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write degraded/clean training pairs with their recipes.
    Simulate(SimulateArgs),
    /// Train one stage from a JSON config.
    Train(TrainArgs),
    /// Enhance one WAV file.
    Enhance(EnhanceArgs),
    /// Enhance a test set and write report.json and report.csv.
    Evaluate(EvaluateArgs),
    /// Print parameter counts.
    CountParams(ModelArgs),
    /// Time single-utterance enhancement.
    MeasureRtf(RtfArgs),
    /// Summarise a simulated corpus and replay its recipes.
    AuditCorpus(AuditArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    stage: u8,
    /// JSON-lines source manifest.
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Length of each generated clip.
    #[arg(long, default_value_t = 4.0)]
    segment_seconds: f64,
    /// Simulator settings as JSON; defaults apply to omitted fields.
    #[arg(long)]
    sim_config: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    stage: u8,
    #[arg(long)]
    config: PathBuf,
    /// Warm-start the network of this stage from a checkpoint.
    #[arg(long)]
    init_ckpt: Option<PathBuf>,
}

#[derive(Args)]
struct EnhanceArgs {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    ckpt: PathBuf,
    /// Corpus written by `simulate`; its input/ and target/ folders are used.
    #[arg(long, conflicts_with_all = ["degraded", "clean"])]
    corpus: Option<PathBuf>,
    /// Folder of degraded WAVs, paired by file name with `--clean`.
    #[arg(long, requires = "clean")]
    degraded: Option<PathBuf>,
    #[arg(long, requires = "degraded")]
    clean: Option<PathBuf>,
    /// Report folder.
    #[arg(long)]
    out: PathBuf,
    /// Also keep the enhanced audio here.
    #[arg(long)]
    enhanced_dir: Option<PathBuf>,
    /// Seconds of audio for an RTF measurement recorded in the report; 0 skips it.
    #[arg(long, default_value_t = 0.0)]
    rtf_seconds: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArchArg {
    Dccrn,
    GateDccrn,
    SDccrn,
    SDccsn,
    /// GateDCCRN followed by S-DCCRN.
    CascadeSdccrn,
    /// GateDCCRN followed by S-DCCSN.
    CascadeSdccsn,
}

#[derive(Args)]
struct ModelArgs {
    /// Read the networks from a checkpoint.
    #[arg(long, conflicts_with = "arch")]
    ckpt: Option<PathBuf>,
    /// Build a freshly initialised network of this architecture.
    #[arg(long, value_enum)]
    arch: Option<ArchArg>,
}

#[derive(Args)]
struct RtfArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 10.0)]
    seconds: f64,
    #[arg(long, default_value_t = 5)]
    runs: usize,
    /// Write the JSON report here as well as to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    dir: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    // Must be set before the first tensor operation reads it.
    match cli.threads {
        Some(n) => std::env::set_var("RAYON_NUM_THREADS", n.max(1).to_string()),
        None if std::env::var_os("RAYON_NUM_THREADS").is_none() => {
            std::env::set_var("RAYON_NUM_THREADS", "1")
        }
        None => {}
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e
                .chain()
                .find_map(|c| c.downcast_ref::<repairnet_core::Error>())
                .map_or(2, |c| c.exit_code());
            ExitCode::from(code as u8)
        }
    }
}

fn run(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Simulate(a) => simulate(a),
        Command::Train(a) => train(a),
        Command::Enhance(a) => {
            let p =
                Pipeline::load(&a.ckpt).with_context(|| format!("loading {}", a.ckpt.display()))?;
            let x = read_wav(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
            let y = enhance(&p, &x)?;
            write_wav(&a.out, &y, WavEncoding::Float32)?;
            log::info!(
                "{} -> {} with {}",
                a.input.display(),
                a.out.display(),
                p.describe()
            );
            Ok(())
        }
        Command::Evaluate(a) => evaluate(a),
        Command::CountParams(a) => {
            let p = pipeline(&a)?;
            let mut parts = serde_json::Map::new();
            match &p {
                Pipeline::Single(m) => {
                    parts.insert(m.config().arch.name().into(), m.num_params().into());
                }
                Pipeline::Cascade(c) => {
                    parts.insert(
                        format!("stage1 {}", c.stage1.config().arch.name()),
                        c.stage1.num_params().into(),
                    );
                    parts.insert(
                        format!("stage2 {}", c.stage2.config().arch.name()),
                        c.stage2.num_params().into(),
                    );
                }
            }
            let out = serde_json::json!({
                "model": p.describe(),
                "params": p.num_params(),
                "millions": p.num_params() as f64 / 1e6,
                "parts": parts,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(())
        }
        Command::MeasureRtf(a) => {
            let p = pipeline(&a.model)?;
            let r = measure_rtf(&p, a.seconds, a.runs)?;
            let json = serde_json::to_string_pretty(&r)?;
            if let Some(path) = &a.out {
                std::fs::write(path, &json)?;
            }
            println!("{json}");
            Ok(())
        }
        Command::AuditCorpus(a) => {
            let r = audit_corpus(&a.dir)?;
            let json = serde_json::to_string_pretty(&r)?;
            if let Some(path) = &a.out {
                std::fs::write(path, &json)?;
            }
            println!("{json}");
            if !r.replay.failures.is_empty() {
                return Err(repairnet_core::Error::Invalid(format!(
                    "{} items do not replay from their recipes",
                    r.replay.failures.len()
                ))
                .into());
            }
            Ok(())
        }
    }
}

fn simulate(a: SimulateArgs) -> anyhow::Result<()> {
    let sim = match &a.sim_config {
        Some(p) => serde_json::from_str::<SimConfig>(&std::fs::read_to_string(p)?)
            .map_err(repairnet_core::Error::from)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => SimConfig::default(),
    };
    let stage = Stage::from_number(a.stage)?;
    let index = export_corpus(
        &a.manifest,
        stage,
        a.count,
        sim,
        a.seed,
        a.segment_seconds,
        &a.out,
    )?;
    log::info!(
        "wrote {} stage-{} pairs to {}",
        index.items.len(),
        a.stage,
        a.out.display()
    );
    Ok(())
}

fn train(a: TrainArgs) -> anyhow::Result<()> {
    let mut cfg =
        TrainConfig::load(&a.config).with_context(|| format!("loading {}", a.config.display()))?;
    if cfg.stage != a.stage {
        log::info!(
            "stage {} from the command line overrides stage {} in the config",
            a.stage,
            cfg.stage
        );
        cfg.stage = a.stage;
        cfg.validate()?;
    }
    let o = train_from_config(&cfg, a.init_ckpt.as_deref())?;
    let summary = serde_json::json!({
        "steps": o.steps,
        "epochs": o.records.len(),
        "best_val_loss": o.best_val,
        "best_checkpoint": o.best_checkpoint,
        "last_checkpoint": o.last_checkpoint,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> anyhow::Result<()> {
    let (degraded, clean) = match (&a.corpus, &a.degraded, &a.clean) {
        (Some(c), _, _) => (c.join("input"), c.join("target")),
        (None, Some(d), Some(c)) => (d.clone(), c.clone()),
        _ => bail!(repairnet_core::Error::Invalid(
            "give --corpus or both --degraded and --clean".into()
        )),
    };
    let p = Pipeline::load(&a.ckpt).with_context(|| format!("loading {}", a.ckpt.display()))?;
    let rtf = (a.rtf_seconds > 0.0)
        .then(|| measure_rtf(&p, a.rtf_seconds, 3))
        .transpose()?;
    let report = evaluate_dirs(&p, &degraded, &clean, a.enhanced_dir.as_deref(), rtf)?;
    write_report(&report, &a.out)?;
    println!("{}", serde_json::to_string_pretty(&report.aggregate)?);
    Ok(())
}

fn pipeline(a: &ModelArgs) -> anyhow::Result<Pipeline> {
    let fresh = |arch: Arch| Model::new(ModelConfig::for_arch(arch), DType::F32, 0);
    let cascade = |second: Arch| -> anyhow::Result<Pipeline> {
        Ok(Pipeline::Cascade(Cascade::new(
            fresh(Arch::GateDccrn)?,
            fresh(second)?,
            true,
        )?))
    };
    match (&a.ckpt, a.arch) {
        (Some(p), _) => Ok(Pipeline::load(p).with_context(|| format!("loading {}", p.display()))?),
        (None, Some(ArchArg::Dccrn)) => Ok(Pipeline::Single(fresh(Arch::Dccrn)?)),
        (None, Some(ArchArg::GateDccrn)) => Ok(Pipeline::Single(fresh(Arch::GateDccrn)?)),
        (None, Some(ArchArg::SDccrn)) => Ok(Pipeline::Single(fresh(Arch::SDccrn)?)),
        (None, Some(ArchArg::SDccsn)) => Ok(Pipeline::Single(fresh(Arch::SDccsn)?)),
        (None, Some(ArchArg::CascadeSdccrn)) => cascade(Arch::SDccrn),
        (None, Some(ArchArg::CascadeSdccsn)) => cascade(Arch::SDccsn),
        (None, None) => Err(repairnet_core::Error::Invalid("give --ckpt or --arch".into()).into()),
    }
}
