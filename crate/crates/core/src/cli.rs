//! The `scr` command-line interface.
//!
//! Exit codes: 0 success, 2 configuration or input-schema error, 3 numeric
//! failure, 4 I/O error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::likelihood::{simulate_captures, CaptureHistory, PeriodMap};
use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::norm_const::{build_table, NormConstTable};
use crate::rng::derive_stream;
use crate::sampler::{read_records_csv, run_chain, summarize_records, summary_markdown, Model, ParamSummary};
use crate::simstudy::{generate_dataset, report_markdown, run_study, write_replicates_csv, write_report_csv};
use crate::strauss::{PointPattern, StraussParams};
use crate::thinning::{simulate_thinned_process, Raster, RasterField, ThinningParams};

/// Environment variable that supplies `--out` when the flag is absent.
pub const OUTPUT_DIR_ENV: &str = "SCR_OUTPUT_DIR";

const THINNING_TAG: u64 = 0x7417;

#[derive(Debug, Parser)]
#[command(name = "scr", version, about = "Spatial capture-recapture with Strauss-process home-range centers")]
pub struct Cli {
    /// Log progress (-v) or details (-vv) to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Worker threads for table cells and replicates.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build or inspect a normalizing-constant table.
    #[command(subcommand)]
    Table(TableCommand),
    /// Simulate a capture-recapture dataset.
    Simulate(SimulateArgs),
    /// Fit the Strauss or independence model to capture data.
    Fit(FitArgs),
    /// Run the simulation study.
    #[command(subcommand)]
    Simstudy(SimstudyCommand),
    /// Summarize a chain CSV.
    Report(ReportArgs),
}

#[derive(Debug, Subcommand)]
pub enum TableCommand {
    Build(TableBuildArgs),
    Inspect(TableInspectArgs),
}

#[derive(Debug, Args)]
pub struct TableBuildArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Table file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Reduced grid and sample sizes.
    #[arg(long)]
    pub desk: bool,
    /// Also export the coefficients and estimated means as CSV here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TableInspectArgs {
    pub table: PathBuf,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, env = OUTPUT_DIR_ENV)]
    pub out: PathBuf,
    /// Interaction strength; defaults to the first `a_values` entry.
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub replicate: usize,
    /// Covariate rasters (`x,y,value` CSV), one per covariate.
    #[arg(long, num_args = 1..)]
    pub covariates: Vec<PathBuf>,
    /// Thinning coefficients, comma separated; one more than the number of
    /// rasters includes a leading intercept.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub beta: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Capture CSV (`individual_id,occasion,trap_id`).
    #[arg(long)]
    pub captures: PathBuf,
    #[arg(long, env = OUTPUT_DIR_ENV)]
    pub out: PathBuf,
    #[arg(long, default_value = "strauss")]
    pub model: Model,
    /// Occasion-to-period map (`occasion,period`).
    #[arg(long)]
    pub periods: Option<PathBuf>,
    /// Overrides `[table] file`.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Overrides `[traps]`.
    #[arg(long)]
    pub traps: Option<PathBuf>,
    /// Overrides `[chain] seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of occasions when trailing occasions have no rows.
    #[arg(long)]
    pub occasions: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum SimstudyCommand {
    Run(SimstudyArgs),
}

#[derive(Debug, Args)]
pub struct SimstudyArgs {
    /// Run config with a `[design]` section.
    #[arg(long)]
    pub design: PathBuf,
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long, env = OUTPUT_DIR_ENV)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Chain CSV written by `scr fit`.
    pub chain: PathBuf,
    #[arg(long, default_value = "strauss")]
    pub model: Model,
    /// Write the Markdown summary here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl clap::ValueEnum for Model {
    fn value_variants<'a>() -> &'a [Self] {
        &[Model::Strauss, Model::Independence]
    }
    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(match self {
            Model::Strauss => "strauss",
            Model::Independence => "independence",
        }))
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
    let command: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match run(cli, command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli, command: Vec<String>) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot configure {n} threads: {e}")))?;
    }
    match cli.command {
        Command::Table(TableCommand::Build(a)) => cmd_table_build(&a, command),
        Command::Table(TableCommand::Inspect(a)) => cmd_table_inspect(&a),
        Command::Simulate(a) => cmd_simulate(&a, command),
        Command::Fit(a) => cmd_fit(&a, command),
        Command::Simstudy(SimstudyCommand::Run(a)) => cmd_simstudy(&a, command),
        Command::Report(a) => cmd_report(&a),
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => {
            if !p.exists() {
                return Err(Error::Config(format!("config file {} does not exist", p.display())));
            }
            RunConfig::load(p)
        }
        None => Ok(RunConfig::default()),
    }
}

fn manifest_for(config: &RunConfig, command: Vec<String>) -> RunManifest {
    RunManifest::new(command).with_config(&config.to_canonical_toml())
}

fn out_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path)?;
    Ok(())
}

fn load_table(path: &Path) -> Result<NormConstTable> {
    if !path.exists() {
        return Err(Error::Config(format!(
            "normalizing-constant table {} not found; build one with `scr table build`",
            path.display()
        )));
    }
    NormConstTable::load(path)
}

pub fn cmd_table_build(args: &TableBuildArgs, command: Vec<String>) -> Result<()> {
    let config = load_config(args.config.as_deref())?;
    let traps = config.trap_array()?;
    let domain = config.domain(&traps)?;
    let grid = config.table.grid(args.desk);
    let opts = config.table.build_options(args.desk);
    let table = build_table(&grid, &domain, &opts)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        out_dir(parent)?;
    }
    table.save(&args.out)?;
    let mut manifest = manifest_for(&config, command).seed("table", opts.seed);
    for p in config.referenced_files() {
        manifest.input(&p)?;
    }
    manifest.output(&args.out)?;
    if let Some(dir) = &args.csv {
        out_dir(dir)?;
        for (name, write) in [
            ("coefficients.csv", NormConstTable::write_coeffs_csv as fn(&NormConstTable, &Path) -> Result<()>),
            ("means.csv", NormConstTable::write_means_csv),
        ] {
            let p = dir.join(name);
            write(&table, &p)?;
            manifest.output(&p)?;
        }
    }
    let mut name = args.out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    manifest.write(&args.out.with_file_name(name))
}

/// Human-readable description of a table.
pub fn describe_table(table: &NormConstTable) -> String {
    let g = table.grid();
    let p = table.provenance();
    let mut s = String::new();
    let range = |v: &[f64]| format!("{} values, {} to {}", v.len(), v[0], v[v.len() - 1]);
    writeln!(s, "domain area: {}", table.domain_area()).unwrap();
    writeln!(s, "a grid: {}", range(&g.a_grid)).unwrap();
    writeln!(s, "b grid: {:?}", g.b_grid).unwrap();
    writeln!(
        s,
        "n grid: {} values, {} to {}",
        g.n_grid.len(),
        g.n_grid[0],
        g.n_grid[g.n_grid.len() - 1]
    )
    .unwrap();
    writeln!(s, "polynomial degree: {} (requested {})", table.degree(), p.requested_degree).unwrap();
    writeln!(s, "samples per a: {}, sweeps between samples: {}", p.n_samples, p.burn_in).unwrap();
    writeln!(s, "seed: {}", p.seed).unwrap();
    writeln!(s, "built by version: {}", p.crate_version).unwrap();
    s
}

pub fn cmd_table_inspect(args: &TableInspectArgs) -> Result<()> {
    let table = NormConstTable::load(&args.table)?;
    print!("{}", describe_table(&table));
    if let Some(dir) = &args.csv {
        out_dir(dir)?;
        table.write_coeffs_csv(&dir.join("coefficients.csv"))?;
        table.write_means_csv(&dir.join("means.csv"))?;
    }
    Ok(())
}

pub fn cmd_simulate(args: &SimulateArgs, command: Vec<String>) -> Result<()> {
    let config = load_config(args.config.as_deref())?;
    let mut design = config
        .sim_designs()?
        .into_iter()
        .next()
        .ok_or_else(|| Error::Config("no design".into()))?;
    if let Some(a) = args.a {
        design.a_true = a;
    }
    design.validate()?;
    out_dir(&args.out)?;
    let traps = design.traps()?;
    let mut manifest = manifest_for(&config, command).seed("design", design.seed);
    manifest.seeds.insert("replicate".into(), args.replicate as u64);

    let mut outputs = Vec::new();
    let history = if args.covariates.is_empty() {
        if !args.beta.is_empty() {
            return Err(Error::Config("--beta needs --covariates".into()));
        }
        let (history, truth) = generate_dataset(&design, args.replicate)?;
        let members = PointPattern::new(truth.locations[..truth.n_true].to_vec());
        let p = args.out.join("truth.csv");
        members.write_csv(&p)?;
        outputs.push(p);
        let p = args.out.join("truth.json");
        let json = serde_json::to_string_pretty(&truth).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        std::fs::write(&p, json + "\n")?;
        outputs.push(p);
        history
    } else {
        if design.periods.is_some() {
            return Err(Error::Config("covariate thinning does not support primary periods".into()));
        }
        let layers = args
            .covariates
            .iter()
            .map(|p| {
                manifest.input(p)?;
                Raster::read_csv(p)
            })
            .collect::<Result<Vec<_>>>()?;
        let intercept = match args.beta.len() {
            n if n == layers.len() => false,
            n if n == layers.len() + 1 => true,
            n => {
                return Err(Error::Config(format!(
                    "--beta has {n} values for {} covariates (expected {} or {})",
                    layers.len(),
                    layers.len(),
                    layers.len() + 1
                )))
            }
        };
        let field = RasterField::new(layers, intercept);
        let beta = ThinningParams::new(args.beta.clone())?;
        let domain = design.domain()?;
        let mut rng = derive_stream(design.seed, &[args.replicate as u64, THINNING_TAG]);
        let strauss = StraussParams::new(design.a_true, design.b_true)?;
        let (retained, removed) = simulate_thinned_process(design.n_true, strauss, &field, &beta, &domain, &mut rng)?;
        let mut locations = retained.points.clone();
        while locations.len() < design.n_max {
            locations.push(domain.uniform_sample(&mut rng));
        }
        let deltas: Vec<bool> = (0..design.n_max).map(|i| i < retained.len()).collect();
        let sim = simulate_captures(
            &PointPattern::new(locations),
            &deltas,
            design.detection()?,
            &traps,
            design.occasions,
            &mut rng,
        )?;
        for (name, pattern) in [("retained.csv", &retained), ("removed.csv", &removed)] {
            let p = args.out.join(name);
            pattern.write_csv(&p)?;
            outputs.push(p);
        }
        sim.history
    };

    let p = args.out.join("traps.csv");
    traps.write_csv(&p)?;
    outputs.push(p);
    let p = args.out.join("captures.csv");
    history.write_csv(&p)?;
    outputs.push(p);
    if let Some(map) = history.periods() {
        let p = args.out.join("periods.csv");
        map.write_csv(&p)?;
        outputs.push(p);
    }
    for p in &outputs {
        manifest.output(p)?;
    }
    manifest.write(&args.out.join(MANIFEST_FILE))
}

fn pad_occasions(history: CaptureHistory, k: usize) -> Result<CaptureHistory> {
    if k < history.n_occasions() {
        return Err(Error::Config(format!(
            "--occasions {k} is smaller than the {} occasions in the data",
            history.n_occasions()
        )));
    }
    let miss = history.n_traps() as u32 + 1;
    let records = history
        .records()
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.resize(k, miss);
            r
        })
        .collect();
    CaptureHistory::new(history.n_traps(), k, records)
}

fn write_summary_csv(summary: &[ParamSummary], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["parameter", "mean", "sd", "median", "q05", "q95"])?;
    for p in summary {
        w.write_record([
            p.name.clone(),
            p.mean.to_string(),
            p.sd.to_string(),
            p.median.to_string(),
            p.q05.to_string(),
            p.q95.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_fit(args: &FitArgs, command: Vec<String>) -> Result<()> {
    let config = load_config(args.config.as_deref())?;
    let traps = match &args.traps {
        Some(p) => crate::geometry::TrapArray::read_csv(p)?,
        None => config.trap_array()?,
    };
    let domain = config.domain(&traps)?;
    let mut data = CaptureHistory::read_csv(&args.captures, traps.len())?;
    if let Some(k) = args.occasions {
        data = pad_occasions(data, k)?;
    }
    if let Some(p) = &args.periods {
        let map = PeriodMap::read_csv(p)?;
        data = data.with_periods(map)?;
    }
    let table_path = args.table.clone().or_else(|| config.table_path());
    let table = match (args.model, &table_path) {
        (Model::Strauss, None) => {
            return Err(Error::Config(
                "the Strauss model needs a normalizing-constant table: build one with `scr table build` and pass it with --table".into(),
            ))
        }
        (Model::Strauss, Some(p)) => Some(load_table(p)?),
        (Model::Independence, _) => None,
    };
    let mut chain_cfg = config.chain.clone();
    chain_cfg.model = args.model;
    if let Some(s) = args.seed {
        chain_cfg.seed = s;
    }
    let output = run_chain(&data, &traps, &domain, &config.priors, table.as_ref(), &chain_cfg)?;

    out_dir(&args.out)?;
    let mut manifest = manifest_for(&config, command).seed("chain", chain_cfg.seed);
    manifest.input(&args.captures)?;
    for p in config.referenced_files().iter().chain(&args.traps).chain(&args.periods) {
        manifest.input(p)?;
    }
    if let (Some(p), Some(_)) = (&table_path, &table) {
        if !config.referenced_files().contains(p) {
            manifest.input(p)?;
        }
    }
    let chain_path = args.out.join("chain.csv");
    output.write_csv(&chain_path)?;
    let summary = output.summary();
    let md_path = args.out.join("summary.md");
    std::fs::write(&md_path, summary_markdown(&summary))?;
    let csv_path = args.out.join("summary.csv");
    write_summary_csv(&summary, &csv_path)?;
    let diag_path = args.out.join("diagnostics.json");
    let diag = serde_json::json!({
        "acceptance": output.acceptance,
        "final_steps": output.final_steps,
        "n_observed": output.n_observed,
        "retained_draws": output.records.len(),
    });
    std::fs::write(&diag_path, serde_json::to_string_pretty(&diag).expect("json") + "\n")?;
    for p in [&chain_path, &md_path, &csv_path, &diag_path] {
        manifest.output(p)?;
    }
    manifest.write(&args.out.join(MANIFEST_FILE))
}

pub fn cmd_simstudy(args: &SimstudyArgs, command: Vec<String>) -> Result<()> {
    let config = load_config(Some(&args.design))?;
    let designs = config.sim_designs()?;
    let fit = config.study_fit()?;
    let table_path = args.table.clone().or_else(|| config.table_path()).ok_or_else(|| {
        Error::Config("simstudy needs a normalizing-constant table: build one with `scr table build`".into())
    })?;
    let table = load_table(&table_path)?;
    let mut results = Vec::new();
    for design in &designs {
        log::info!("running design a = {}", design.a_true);
        results.push(run_study(design, &fit, &table)?);
    }
    out_dir(&args.out)?;
    let mut manifest = manifest_for(&config, command).seed("design", designs[0].seed);
    manifest.input(&args.design)?;
    manifest.input(&table_path)?;
    let reps = args.out.join("replicates.csv");
    write_replicates_csv(&results, &reps)?;
    let agg = args.out.join("report.csv");
    write_report_csv(&results, &agg)?;
    let md = args.out.join("report.md");
    std::fs::write(&md, report_markdown(&results))?;
    for p in [&reps, &agg, &md] {
        manifest.output(p)?;
    }
    let failures: Vec<String> = results
        .iter()
        .flat_map(|r| r.failures.iter().map(move |(i, m)| format!("a = {}, replicate {i}: {m}", r.design.a_true)))
        .collect();
    if !failures.is_empty() {
        eprintln!("{} replicate(s) failed and were excluded:", failures.len());
        for f in &failures {
            eprintln!("  {f}");
        }
    }
    manifest.write(&args.out.join(MANIFEST_FILE))
}

pub fn cmd_report(args: &ReportArgs) -> Result<()> {
    let (records, has_periods) = read_records_csv(&args.chain)?;
    if records.is_empty() {
        return Err(Error::Config(format!("{} holds no draws", args.chain.display())));
    }
    let text = summary_markdown(&summarize_records(&records, args.model, has_periods));
    match &args.out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
