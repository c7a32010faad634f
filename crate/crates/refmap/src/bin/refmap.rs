//! Batch front-end over the library pipeline. Every subcommand runs one
//! stage on the plain-file products of the previous ones; `run` chains
//! them all and writes a manifest.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use refmap::error::Error;
use refmap::pipeline::{run_pipeline, RunConfig, StageReport, STAGES};

#[derive(Parser)]
#[command(name = "refmap", version, about = "Citation-network analysis pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct CommonOpts {
    /// Input export files (field-tagged plain text).
    #[arg(long = "input", value_name = "FILE")]
    inputs: Vec<PathBuf>,
    /// Output directory shared by all stages.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Config file in key = value form; flags override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Moving-window span in years.
    #[arg(long)]
    span: Option<usize>,
    /// Keep venues cited strictly more than this many times.
    #[arg(long = "min-count")]
    min_count: Option<u64>,
    /// Cosine threshold for network edges.
    #[arg(long)]
    tau: Option<f64>,
    /// Number of factors to extract.
    #[arg(long)]
    k: Option<usize>,
    /// Temporal smoothing strength for the dynamic layout.
    #[arg(long)]
    alpha: Option<f64>,
    /// Frames feeding each trailing-mean anchor.
    #[arg(long = "smooth-span")]
    smooth_span: Option<usize>,
    /// Minimum overlap for a significant flow edge.
    #[arg(long = "min-overlap")]
    min_overlap: Option<f64>,
    /// Master seed; per-stage seeds derive from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Use cosine weights in community detection (default).
    #[arg(long, overrides_with = "unweighted")]
    weighted: bool,
    /// Ignore weights in community detection.
    #[arg(long, overrides_with = "weighted")]
    unweighted: bool,
    /// Emit leading windows before a full span is available.
    #[arg(long = "ragged-windows")]
    ragged_windows: bool,
    /// Skip Kaiser row normalization in the Varimax rotation.
    #[arg(long = "no-kaiser")]
    no_kaiser: bool,
    /// Venue to flag in the loadings reports.
    #[arg(long = "highlight-venue", value_name = "VENUE")]
    highlight_venue: Option<String>,
    /// Normalization rules TSV (action, pattern, replacement).
    #[arg(long = "rules", value_name = "FILE")]
    rules: Option<PathBuf>,
    /// Worker threads for window-parallel stages (0 = automatic).
    #[arg(long)]
    workers: Option<usize>,
}

impl CommonOpts {
    fn into_config(self) -> Result<RunConfig, Error> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        if !self.inputs.is_empty() {
            cfg.inputs = self.inputs;
        }
        if let Some(out) = self.out {
            cfg.out_dir = out;
        }
        if let Some(v) = self.span {
            cfg.span = v;
        }
        if let Some(v) = self.min_count {
            cfg.min_count = v;
        }
        if let Some(v) = self.tau {
            cfg.tau = v;
        }
        if let Some(v) = self.k {
            cfg.k_factors = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.smooth_span {
            cfg.smooth_span = v;
        }
        if let Some(v) = self.min_overlap {
            cfg.min_overlap = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if self.weighted {
            cfg.weighted = true;
        }
        if self.unweighted {
            cfg.weighted = false;
        }
        if self.ragged_windows {
            cfg.ragged_windows = true;
        }
        if self.no_kaiser {
            cfg.kaiser = false;
        }
        if self.highlight_venue.is_some() {
            cfg.highlight_venue = self.highlight_venue;
        }
        if self.rules.is_some() {
            cfg.rules_file = self.rules;
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the whole pipeline and write a manifest.
    Run(CommonOpts),
    /// Parse export files into document and reference tables.
    Parse(CommonOpts),
    /// Normalize venues and drop rejected references.
    Clean(CommonOpts),
    /// Venue frequency table and its log-log fit.
    Freq(CommonOpts),
    /// Slice documents into moving windows.
    Windows(CommonOpts),
    /// Occurrence matrices, cosine similarities, Pajek networks.
    Net(CommonOpts),
    /// Louvain partitions per window.
    Communities(CommonOpts),
    /// Per-window descriptive statistics table.
    Metrics(CommonOpts),
    /// Factor extraction with Varimax rotation per window.
    Factors(CommonOpts),
    /// Align communities across windows and classify events.
    Flow(CommonOpts),
    /// Static-plus-dynamic stress layouts per window.
    Layout(CommonOpts),
    /// Render the alluvial SVG from the flow geometry.
    Export(CommonOpts),
    /// Line charts of the metric series.
    Plot(CommonOpts),
}

fn print_report(report: &StageReport) {
    let counts: Vec<String> = report
        .counts
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    println!("{}: {}", report.name, counts.join(" "));
    for note in &report.notes {
        eprintln!("  note: {note}");
    }
}

fn run_stage(name: &str, cfg: &RunConfig) -> Result<(), Error> {
    let stage = STAGES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, f)| f)
        .expect("stage names are closed");
    let report = stage(cfg).map_err(|e| e.in_stage(name))?;
    print_report(&report);
    Ok(())
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::Run(opts) => {
            let cfg = opts.into_config()?;
            let manifest = run_pipeline(&cfg)?;
            for report in &manifest.stages {
                print_report(report);
            }
            println!(
                "manifest: {}",
                cfg.out_dir.join("manifest.json").display()
            );
            Ok(())
        }
        Command::Parse(opts) => run_stage("parse", &opts.into_config()?),
        Command::Clean(opts) => run_stage("clean", &opts.into_config()?),
        Command::Freq(opts) => run_stage("freq", &opts.into_config()?),
        Command::Windows(opts) => run_stage("windows", &opts.into_config()?),
        Command::Net(opts) => run_stage("net", &opts.into_config()?),
        Command::Communities(opts) => run_stage("communities", &opts.into_config()?),
        Command::Metrics(opts) => run_stage("metrics", &opts.into_config()?),
        Command::Factors(opts) => run_stage("factors", &opts.into_config()?),
        Command::Flow(opts) => run_stage("flow", &opts.into_config()?),
        Command::Layout(opts) => run_stage("layout", &opts.into_config()?),
        Command::Export(opts) => run_stage("export", &opts.into_config()?),
        Command::Plot(opts) => run_stage("plot", &opts.into_config()?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
