use anyhow::{Context, Result};
use argquant::summary::SummaryFormat;
use argquant_cli::config::{BackendKind, ConfigFile, ConfigOverrides, PipelineConfig};
use argquant_cli::evalrun::{render_report, run_eval, EvalOptions, RougeVariant};
use argquant_cli::ingest::{ingest_dataset, write_threads};
use argquant_cli::pipeline::{run_pipeline, write_output};
use argquant_cli::{artifacts, exit_code_for};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "argquant",
    about = "Claim-reason structured, quantified summarization of discussion threads",
    version
)]
struct Cli {
    #[command(flatten)]
    common: CommonFlags,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonFlags {
    /// Config file (TOML); CLI flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Text backend: scripted or http.
    #[arg(long, global = true)]
    backend: Option<BackendKind>,

    /// Model name sent to the backend (and part of cache keys).
    #[arg(long, global = true)]
    model: Option<String>,

    /// Transcript file for the scripted backend.
    #[arg(long, global = true)]
    transcript: Option<PathBuf>,

    /// Response cache directory.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,

    /// Prompt template directory.
    #[arg(long, global = true)]
    prompts_dir: Option<PathBuf>,

    /// Clustering edge threshold on [0, 1].
    #[arg(long)]
    tau: Option<f64>,

    /// ARDE support threshold on [0, 1].
    #[arg(long)]
    t_support: Option<f64>,

    /// Samples per entailment score.
    #[arg(long)]
    samples: Option<u32>,

    /// Score one source against many targets per prompt.
    #[arg(long)]
    batch_scoring: bool,

    /// Scripted-backend sample-set selection.
    #[arg(long)]
    seed: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a thread file and write it back normalized.
    Ingest {
        /// Input thread file (one JSON record per line).
        input: PathBuf,
        /// Normalized output file.
        #[arg(long, short)]
        output: PathBuf,
        /// Dataset domain tag used for generated thread ids.
        #[arg(long, default_value = "thread")]
        domain: String,
    },
    /// Run only the proposition-extraction stage.
    Extract {
        input: PathBuf,
        #[arg(long, default_value = "artifacts")]
        artifacts_dir: PathBuf,
    },
    /// Run only the clustering stage, from the extraction artifact.
    Cluster {
        #[arg(long, default_value = "artifacts")]
        artifacts_dir: PathBuf,
    },
    /// Run only the summary-generation stage, from the clustering artifact.
    Summarize {
        #[arg(long, default_value = "artifacts")]
        artifacts_dir: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long, default_value = "machine")]
        format: String,
    },
    /// Run the whole pipeline: extract, cluster, summarize.
    Pipeline {
        input: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long, default_value = "artifacts")]
        artifacts_dir: PathBuf,
        /// Resume from the newest stage artifact with a matching config.
        #[arg(long)]
        resume: bool,
        #[arg(long, default_value = "machine")]
        format: String,
    },
    /// Compute the metric report for a generated/reference summary pair.
    Eval {
        /// Generated summary file (machine format).
        generated: PathBuf,
        /// Reference file: records with either "arguments" or "entries".
        reference: PathBuf,
        /// ROUGE variant used as the soft-metric similarity: 1, 2, or l.
        #[arg(long, default_value = "1")]
        rouge: RougeVariant,
        /// Enable the LLM judges (match and support annotation).
        #[arg(long)]
        judge: bool,
        /// Ground-truth match judgments (JSON lines) for match metrics.
        #[arg(long)]
        truth_matches: Option<PathBuf>,
        /// Externally computed similarity scores (JSON lines of
        /// {generated, reference, score}); replaces ROUGE.
        #[arg(long)]
        similarity_file: Option<PathBuf>,
        /// Pairwise comparison file (winner,loser,count lines) to rank
        /// with the Bradley-Terry model.
        #[arg(long)]
        comparisons: Option<PathBuf>,
        /// Write the machine-readable report here.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

fn parse_format(s: &str) -> Result<SummaryFormat> {
    match s {
        "tree" => Ok(SummaryFormat::Tree),
        "machine" => Ok(SummaryFormat::Machine),
        other => anyhow::bail!("unknown format '{other}' (expected tree or machine)"),
    }
}

fn resolve_config(flags: &CommonFlags) -> Result<PipelineConfig> {
    let file = flags.config.as_deref().map(ConfigFile::load).transpose()?;
    PipelineConfig::resolve(
        file,
        ConfigOverrides {
            backend: flags.backend,
            model: flags.model.clone(),
            transcript: flags.transcript.clone(),
            cache_dir: flags.cache_dir.clone(),
            prompts_dir: flags.prompts_dir.clone(),
            tau: flags.tau,
            t_support: flags.t_support,
            samples: flags.samples,
            batch_scoring: flags.batch_scoring.then_some(true),
            seed: flags.seed,
        },
    )
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { input, output, domain } => {
            let threads = ingest_dataset(&input, &domain)?;
            write_threads(&threads, &output)?;
            println!("ingested {} threads into {}", threads.len(), output.display());
        }
        Command::Extract { input, artifacts_dir } => {
            let cfg = resolve_config(&cli.common)?;
            let prompts = cfg.load_prompts()?;
            let hash = cfg.config_hash(&prompts);
            let threads = ingest_dataset(&input, "thread")?;
            let gateway = cfg.build_gateway()?;
            let artifact = argquant_cli::pipeline::run_extract_stage(
                &cfg, &prompts, &gateway, &hash, &threads,
            )?;
            let path = artifacts::write_artifact(&artifacts_dir, &artifact)?;
            println!("wrote {}", path.display());
        }
        Command::Cluster { artifacts_dir } => {
            let cfg = resolve_config(&cli.common)?;
            let prompts = cfg.load_prompts()?;
            let hash = cfg.config_hash(&prompts);
            let props: artifacts::PropositionsArtifact =
                artifacts::load_artifact(&artifacts_dir, &hash)?
                    .context("no extraction artifact; run `argquant extract` first")?;
            let gateway = cfg.build_gateway()?;
            let artifact =
                argquant_cli::pipeline::run_cluster_stage(&cfg, &prompts, &gateway, &props)?;
            let path = artifacts::write_artifact(&artifacts_dir, &artifact)?;
            println!("wrote {}", path.display());
        }
        Command::Summarize { artifacts_dir, output, format } => {
            let format = parse_format(&format)?;
            let cfg = resolve_config(&cli.common)?;
            let prompts = cfg.load_prompts()?;
            let hash = cfg.config_hash(&prompts);
            let clusters: artifacts::ClustersArtifact =
                artifacts::load_artifact(&artifacts_dir, &hash)?
                    .context("no clustering artifact; run `argquant cluster` first")?;
            let gateway = cfg.build_gateway()?;
            let artifact =
                argquant_cli::pipeline::run_summary_stage(&prompts, &gateway, &clusters)?;
            artifacts::write_artifact(&artifacts_dir, &artifact)?;
            write_output(&artifact, &output, format)?;
            println!("wrote {}", output.display());
        }
        Command::Pipeline { input, output, artifacts_dir, resume, format } => {
            let format = parse_format(&format)?;
            let cfg = resolve_config(&cli.common)?;
            let outcome = run_pipeline(&cfg, &input, &artifacts_dir, resume)?;
            write_output(&outcome.summary, &output, format)?;
            let stages = if outcome.stages_run.is_empty() {
                "none (resumed from final artifact)".to_string()
            } else {
                outcome.stages_run.join(", ")
            };
            println!(
                "wrote {} (stages run: {stages}; backend calls: {})",
                output.display(),
                outcome.backend_calls
            );
        }
        Command::Eval {
            generated,
            reference,
            rouge,
            judge,
            truth_matches,
            similarity_file,
            comparisons,
            output,
        } => {
            let cfg = if judge {
                resolve_config(&cli.common)?
            } else {
                // Without the judge no backend is reached; skip backend
                // validation so plain metric runs need no transcript.
                let mut cfg = PipelineConfig::default();
                if let Some(dir) = &cli.common.prompts_dir {
                    cfg.prompts_dir = dir.clone();
                }
                cfg
            };
            let report = run_eval(
                &cfg,
                &EvalOptions {
                    generated,
                    reference,
                    rouge,
                    judge,
                    truth_matches,
                    similarity_file,
                    comparisons,
                },
            )?;
            print!("{}", render_report(&report));
            if let Some(path) = output {
                let mut json = serde_json::to_string_pretty(&report)?;
                json.push('\n');
                std::fs::write(&path, json)
                    .with_context(|| format!("cannot write report {path:?}"))?;
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(exit_code_for(&err));
    }
}
