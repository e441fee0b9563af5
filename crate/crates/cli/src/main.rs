use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use excellence_core::corpus::{parse_institutions, parse_papers, Corpus, PaperFormat, Thresholds};
use excellence_core::export::export_results;
use excellence_core::numeric::logit;
use excellence_core::percentile::write_assignments_csv;
use excellence_core::pipeline::{parse_flags, run_pipeline, ClassSource, PipelineConfig, SubjectSelection};
use excellence_core::simulate::{simulate_corpus, write_simulation, SimulationConfig};

mod serve;

#[derive(Parser)]
#[command(name = "excellence-mapper", version, about = "Institution-level excellence indicators from citation data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one model per subject area and export results.json
    Fit(FitArgs),
    /// Generate a synthetic corpus from the random-intercept model
    Simulate(SimulateArgs),
    /// Serve results.json and the map application over HTTP
    Serve(ServeArgs),
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    papers: PathBuf,
    /// jsonl or csv; inferred from the file extension when omitted
    #[arg(long)]
    papers_format: Option<PaperFormat>,
    #[arg(long)]
    institutions: PathBuf,
    /// Comma-separated subject codes, or `all`
    #[arg(long, default_value = "all")]
    subjects: String,
    #[arg(long, default_value_t = 2005)]
    year_min: i32,
    #[arg(long, default_value_t = 2009)]
    year_max: i32,
    #[arg(long, default_value_t = 500)]
    min_papers: usize,
    #[arg(long, default_value_t = 50)]
    min_institutions: usize,
    #[arg(long, default_value_t = 20)]
    quad_nodes: usize,
    #[arg(long, default_value = "results.json")]
    out: PathBuf,
    /// Write percentile assignments as CSV
    #[arg(long)]
    dump_percentiles: Option<PathBuf>,
    /// Use precomputed class-10% flags (`paper_id,subject,is_class10`) instead of percentiles
    #[arg(long)]
    class10_flags: Option<PathBuf>,
    /// Timestamp recorded in the output: an ISO-8601 string or `now`.
    /// Defaults to SOURCE_DATE_EPOCH, else the Unix epoch, so reruns are byte-identical.
    #[arg(long)]
    generated_at: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    institutions: usize,
    /// Papers per institution and subject
    #[arg(long, default_value_t = 500)]
    papers: usize,
    /// Defaults to logit(0.15)
    #[arg(long, allow_hyphen_values = true)]
    beta0: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    collaboration_rate: f64,
    /// Comma-separated subject codes
    #[arg(long, default_value = "3100")]
    subjects: String,
    #[arg(long, default_value_t = 2005)]
    year_min: i32,
    #[arg(long, default_value_t = 2009)]
    year_max: i32,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "results.json")]
    results: PathBuf,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Directory holding the built map application
    #[arg(long)]
    ui_dir: Option<PathBuf>,
}

const EXIT_INPUT: u8 = 1;
const EXIT_ALL_FAILED: u8 = 2;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Fit(args) => fit(args),
        Command::Simulate(args) => simulate(args).map(|_| ExitCode::SUCCESS),
        Command::Serve(args) => serve::run(&args.results, &args.host, args.port, args.ui_dir.as_deref())
            .map(|_| ExitCode::SUCCESS),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("cannot open {}", path.display()))
}

fn csv_list(s: &str) -> Vec<String> {
    s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()
}

fn resolve_timestamp(arg: Option<&str>) -> Result<String> {
    let fmt = |t: chrono::DateTime<chrono::Utc>| t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    match arg {
        Some("now") => Ok(fmt(chrono::Utc::now())),
        Some(s) => Ok(s.to_string()),
        None => {
            let secs = match std::env::var("SOURCE_DATE_EPOCH") {
                Ok(v) => v.trim().parse::<i64>().context("SOURCE_DATE_EPOCH is not an integer")?,
                Err(_) => 0,
            };
            let t = chrono::DateTime::from_timestamp(secs, 0).context("SOURCE_DATE_EPOCH out of range")?;
            Ok(fmt(t))
        }
    }
}

fn fit(args: FitArgs) -> Result<ExitCode> {
    let format = match args.papers_format {
        Some(f) => f,
        None => match args.papers.extension().and_then(|e| e.to_str()) {
            Some("csv") => PaperFormat::Csv,
            _ => PaperFormat::Jsonl,
        },
    };
    let papers = parse_papers(open(&args.papers)?, format)
        .with_context(|| format!("reading {}", args.papers.display()))?;
    let institutions = parse_institutions(open(&args.institutions)?)
        .with_context(|| format!("reading {}", args.institutions.display()))?;
    let census_year = papers.iter().map(|p| p.year).max().unwrap_or(args.year_max);
    let corpus = Corpus::new(papers, institutions, census_year)?;

    let class_source = match &args.class10_flags {
        Some(path) => ClassSource::Precomputed(
            parse_flags(open(path)?).with_context(|| format!("reading {}", path.display()))?,
        ),
        None => ClassSource::Percentiles,
    };
    let subjects = if args.subjects.trim() == "all" {
        SubjectSelection::All
    } else {
        SubjectSelection::Only(csv_list(&args.subjects))
    };
    let config = PipelineConfig {
        subjects,
        year_min: args.year_min,
        year_max: args.year_max,
        thresholds: Thresholds {
            min_papers: args.min_papers,
            min_institutions: args.min_institutions,
        },
        quad_nodes: args.quad_nodes,
        generated_at: resolve_timestamp(args.generated_at.as_deref())?,
        class_source,
    };
    let output = run_pipeline(&corpus, &config)?;

    export_results(&output.document, &args.out)?;
    if let Some(path) = &args.dump_percentiles {
        let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        write_assignments_csv(std::io::BufWriter::new(file), &output.assignments)?;
    }
    for d in &output.diagnostics {
        eprintln!("subject {}: {}", d.subject, d.reason);
    }
    for s in &output.document.subjects {
        log::info!(
            "subject {} ({}): {} institutions, beta0={:.4}, sigma2={:.4}, wald p={:.3e}{}",
            s.subject,
            s.subject_name,
            s.n_institutions,
            s.model.beta0,
            s.model.sigma2,
            s.model.wald_p,
            if s.model.ranking_reasonable { "" } else { " (no systematic variation)" }
        );
    }
    if output.document.subjects.is_empty() {
        eprintln!("no subject produced results");
        return Ok(ExitCode::from(EXIT_ALL_FAILED));
    }
    Ok(ExitCode::SUCCESS)
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let subjects = csv_list(&args.subjects);
    if subjects.is_empty() {
        bail!("--subjects must name at least one subject");
    }
    let config = SimulationConfig {
        seed: args.seed,
        n_institutions: args.institutions,
        papers_per_institution: args.papers,
        beta0: args.beta0.unwrap_or_else(|| logit(0.15)),
        sigma: args.sigma,
        collaboration_rate: args.collaboration_rate,
        subjects,
        year_min: args.year_min,
        year_max: args.year_max,
    };
    let sim = simulate_corpus(&config)?;
    write_simulation(&sim, &args.out_dir)?;
    log::info!(
        "wrote {} papers and {} institutions to {}",
        sim.papers.len(),
        sim.institutions.len(),
        args.out_dir.display()
    );
    Ok(())
}
