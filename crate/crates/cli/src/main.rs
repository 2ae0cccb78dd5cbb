//! `emforge`: build corpora, render views, score predictions and check
//! token budgets.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors, 1 for
//! runtime failures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use emforge::budget::{check_budget, pack_views, StageConfig, RESERVED_PROMPT_TOKENS};
use emforge::config::RunConfig;
use emforge::corpus::{
    build_corpus, preview_sample, read_jsonl, read_manifest, BuildOptions, TaskFamily,
    DEFAULT_SPLIT_SALT, IMAGE_DIR,
};
use emforge::metrics::{score, Prediction, ScoreReport};
use emforge::views::{encode_png, render_all, ViewKind};

#[derive(Debug, Parser)]
#[command(name = "emforge", version, about = "Electromagnetic signal corpus forge and benchmark harness")]
struct Cli {
    /// TOML run configuration; defaults apply to anything it leaves out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the configured one.
    #[arg(long, global = true, env = "EMFORGE_OUT")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build train and bench manifests plus view images.
    Build(BuildArgs),
    /// Render the four views of one sample for inspection.
    Render(RenderArgs),
    /// Score a predictions file against a manifest.
    Score(ScoreArgs),
    /// Print a saved score report.
    Report(ReportArgs),
    /// Print the vision-token schedule and fit verdicts.
    Budget(BudgetArgs),
}

#[derive(Debug, Args)]
struct BuildArgs {
    /// Scale the benchmark composition to this many records.
    #[arg(long)]
    total: Option<usize>,
    /// Worker threads; output does not depend on this.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[arg(long)]
    task: String,
    /// Record index within the task (OpenQA first, then MCQA).
    #[arg(long, default_value_t = 0)]
    index: usize,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    predictions: PathBuf,
    /// Where to write the JSON report; the SNR CSV goes next to it.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    report: PathBuf,
    /// Print the SNR-binned CSV instead of the headline table.
    #[arg(long)]
    csv: bool,
}

#[derive(Debug, Args)]
struct BudgetArgs {
    /// One stage (1–4); all four when omitted.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    stage: Option<u8>,
    #[arg(long, default_value_t = 400)]
    prompt: usize,
    #[arg(long, default_value_t = 400)]
    response: usize,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.global_seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    Ok(config)
}

fn cmd_build(cli: &Cli, args: &BuildArgs) -> Result<()> {
    let mut config = load_config(cli)?;
    if let Some(total) = args.total {
        config.corpus = config.corpus.with_total(total)?;
    }
    config.validate()?;
    if config.corpus.split_salt != DEFAULT_SPLIT_SALT {
        eprintln!(
            "warning: split salt `{}` differs from the default; train/bench membership is not comparable with default builds",
            config.corpus.split_salt
        );
    }
    let out = config.output_dir.clone();
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let opts = BuildOptions {
        global_seed: config.global_seed,
        render: config.render,
        out_dir: Some(&out),
        workers: args.workers,
    };
    let output = build_corpus(&config.corpus, &opts)?;
    fs::write(out.join("config.toml"), config.to_toml()?)?;

    println!("{:<6} {:>7} {:>7} {:>7} {:>7}", "task", "OpenQA", "MCQA", "train", "bench");
    let summary = output.summary();
    for (task, s) in &summary {
        println!("{:<6} {:>7} {:>7} {:>7} {:>7}", task.as_str(), s.openqa, s.mcqa, s.train, s.bench);
    }
    for (task, s) in &summary {
        if !s.snr_histogram.is_empty() {
            let mut bins: Vec<(f64, usize)> = s
                .snr_histogram
                .iter()
                .map(|(k, v)| (k.parse().unwrap_or(f64::NAN), *v))
                .collect();
            bins.sort_by(|a, b| a.0.total_cmp(&b.0));
            let cells: Vec<String> = bins.iter().map(|(k, v)| format!("{k}:{v}")).collect();
            println!("{} SNR dB:count  {}", task.as_str(), cells.join(" "));
        }
    }
    println!(
        "{} records, {} images, {} promoted to bench -> {}",
        output.records.len(),
        4 * output.records.len(),
        output.promoted,
        out.display()
    );
    Ok(())
}

fn cmd_render(cli: &Cli, args: &RenderArgs) -> Result<()> {
    let config = load_config(cli)?;
    let task: TaskFamily = args.task.parse()?;
    let preview = preview_sample(&config.corpus, task, args.index, config.global_seed, &config.render)?;
    let dir = config.output_dir.join(IMAGE_DIR);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let images = render_all(&preview.signal, &preview.render)?;
    for (kind, img) in ViewKind::ALL.iter().zip(&images) {
        let path = dir.join(kind.file_name(&preview.sample_id));
        fs::write(&path, encode_png(img)?)?;
        println!("{}", path.display());
    }
    println!(
        "{}: {}{}",
        preview.sample_id,
        preview.ground_truth.canonical(),
        preview.snr_db.map(|s| format!(" at {s} dB")).unwrap_or_default()
    );
    Ok(())
}

fn csv_path(report: &Path) -> PathBuf {
    report.with_extension("csv")
}

fn cmd_score(cli: &Cli, args: &ScoreArgs) -> Result<()> {
    let config = load_config(cli)?;
    let manifest = read_manifest(&args.manifest)?;
    let preds: Vec<Prediction> = read_jsonl(&args.predictions)?;
    let report = score(&manifest, &preds, &config.scoring)?;
    if report.missing > 0 {
        eprintln!("warning: {} records have no prediction", report.missing);
    }
    if let Some(path) = &args.report {
        fs::write(path, report.to_json()?)?;
        fs::write(csv_path(path), report.snr_csv())?;
    }
    print!("{}", report.headline());
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    let text = fs::read_to_string(&args.report)
        .with_context(|| format!("reading {}", args.report.display()))?;
    let report: ScoreReport = serde_json::from_str(&text).map_err(emforge::Error::from)?;
    if args.csv {
        print!("{}", report.snr_csv());
    } else {
        print!("{}", report.headline());
    }
    Ok(())
}

fn cmd_budget(args: &BudgetArgs) -> Result<()> {
    let stages: Vec<StageConfig> = match args.stage {
        Some(s) => vec![StageConfig::new(s)?],
        None => StageConfig::all().to_vec(),
    };
    println!(
        "{:<6} {:>6} {:>5} {:>10} {:>8} {:>8} {:>8} {:>6} {:>6}",
        "stage", "views", "grid", "tok/view", "layout", "total", "max_seq", "fits", "slack"
    );
    for stage in stages {
        let layout = pack_views(&vec![stage.tokens_per_view; stage.max_views])?;
        // Single-view and early multi-view stages keep a prompt reserve.
        let (prompt, response) = if stage.stage <= 2 && args.stage.is_none() {
            (RESERVED_PROMPT_TOKENS, 0)
        } else {
            (args.prompt, args.response)
        };
        let verdict = check_budget(&layout, prompt, response, &stage)?;
        println!(
            "{:<6} {:>6} {:>5} {:>10} {:>8} {:>8} {:>8} {:>6} {:>6}",
            stage.stage,
            stage.max_views,
            format!("{0}x{0}", stage.grid),
            stage.tokens_per_view,
            layout.total_len(),
            verdict.total,
            stage.max_seq_len,
            if verdict.fits { "yes" } else { "no" },
            verdict.slack
        );
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Build(args) => cmd_build(cli, args),
        Command::Render(args) => cmd_render(cli, args),
        Command::Score(args) => cmd_score(cli, args),
        Command::Report(args) => cmd_report(args),
        Command::Budget(args) => cmd_budget(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let usage = err
                .downcast_ref::<emforge::Error>()
                .is_some_and(emforge::Error::is_usage);
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
