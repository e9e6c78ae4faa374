//! `efo1`: enumerate query types, rewrite them into normal forms, sample
//! grounded datasets from a triple store and score predictions.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use efo1::grounder::{NegationPolicy, SizeFilter};
use efo1::metrics::{Aggregation, RaPool, TiePolicy};
use efo1::rewrite::FormKind;
use serde::de::{DeserializeOwned, IntoDeserializer};

use crate::config::PipelineConfig;

#[derive(Parser, Debug)]
#[command(name = "efo1", version, about = "Query types, normal forms and datasets for complex query answering")]
struct Cli {
    /// TOML configuration; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// off, error, warn, info, debug or trace.
    #[arg(long, global = true, value_name = "LEVEL")]
    log_level: Option<String>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate canonical query types and print their census.
    Enumerate(EnumerateArgs),
    /// Rewrite formulas into the selected normal forms.
    Normalize(NormalizeArgs),
    /// Sample a grounded dataset from a triple store.
    Sample(SampleArgs),
    /// Recompute the answers of a dataset with the executor.
    Answers(AnswersArgs),
    /// Score predictions against a dataset.
    Evaluate(EvaluateArgs),
}

#[derive(Args, Debug, Default)]
struct GenerationArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    max_anchors: Option<u64>,
    /// Bound on projections along a path.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    max_chain: Option<u64>,
    /// Bound on projections plus negations along a path.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    max_pn_chain: Option<u64>,
    /// Allow negation anywhere, not only under intersections.
    #[arg(long)]
    unbounded_negation: bool,
}

#[derive(Args, Debug)]
struct EnumerateArgs {
    #[command(flatten)]
    generation: GenerationArgs,
    /// File receiving one formula per line.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct NormalizeArgs {
    /// One Original-form formula per line.
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Comma-separated form names, or `all`.
    #[arg(long, value_delimiter = ',', value_parser = parse_kind_or_all)]
    kinds: Vec<KindArg>,
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    node_cap: Option<usize>,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long, value_name = "DIR")]
    kg_dir: Option<PathBuf>,
    /// Types to ground, one per line (default: enumerate them).
    #[arg(long, value_name = "FILE")]
    types: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    per_type: Option<u64>,
    #[arg(long)]
    min_hard: Option<usize>,
    #[arg(long)]
    max_hard: Option<usize>,
    #[arg(long, value_parser = parse_enum::<SizeFilter>)]
    size_filter: Option<SizeFilter>,
    #[arg(long, value_parser = parse_enum::<NegationPolicy>)]
    negation: Option<NegationPolicy>,
    #[arg(long)]
    max_retries: Option<usize>,
    #[arg(long)]
    node_cap: Option<usize>,
    #[command(flatten)]
    generation: GenerationArgs,
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AnswersArgs {
    #[arg(long, value_name = "DIR")]
    dataset: PathBuf,
    #[arg(long, value_name = "DIR")]
    kg_dir: Option<PathBuf>,
    /// Per-query answer table (tab-separated).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long, value_name = "DIR")]
    dataset: PathBuf,
    /// Line-oriented prediction records.
    #[arg(long, value_name = "FILE", conflicts_with = "oracle", required_unless_present = "oracle")]
    predictions: Option<PathBuf>,
    /// Score a predictor that ranks the hard answers first.
    #[arg(long)]
    oracle: bool,
    /// Recompute answers with the executor over this graph.
    #[arg(long, value_name = "DIR")]
    kg_dir: Option<PathBuf>,
    #[arg(long, value_parser = parse_enum::<TiePolicy>)]
    ties: Option<TiePolicy>,
    #[arg(long, value_parser = parse_enum::<RaPool>)]
    ra_pool: Option<RaPool>,
    #[arg(long, value_parser = parse_enum::<Aggregation>)]
    aggregation: Option<Aggregation>,
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Clone, Debug)]
enum KindArg {
    All,
    One(FormKind),
}

fn parse_kind_or_all(s: &str) -> Result<KindArg, String> {
    if s.eq_ignore_ascii_case("all") {
        Ok(KindArg::All)
    } else {
        s.parse().map(KindArg::One)
    }
}

/// Parses a snake_case option name through the type's serde names.
fn parse_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    T::deserialize(s.into_deserializer()).map_err(|e: serde::de::value::Error| e.to_string())
}

impl GenerationArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        let g = &mut cfg.generation;
        if let Some(v) = self.max_anchors {
            g.max_anchors = v as usize;
        }
        if let Some(v) = self.max_chain {
            g.max_chain = v as usize;
        }
        if let Some(v) = self.max_pn_chain {
            g.max_pn_chain = v as usize;
        }
        if self.unbounded_negation {
            g.bounded_negation = false;
        }
    }
}

fn resolve(cli: &Cli) -> anyhow::Result<PipelineConfig> {
    let mut cfg = PipelineConfig::load(cli.config.as_deref())?;
    if let Some(l) = &cli.log_level {
        cfg.log_level = Some(l.clone());
    }
    match &cli.command {
        Command::Enumerate(a) => a.generation.apply(&mut cfg),
        Command::Normalize(a) => {
            if !a.kinds.is_empty() {
                cfg.forms.kinds = if a.kinds.iter().any(|k| matches!(k, KindArg::All)) {
                    FormKind::ALL.to_vec()
                } else {
                    a.kinds
                        .iter()
                        .filter_map(|k| match k {
                            KindArg::One(k) => Some(*k),
                            KindArg::All => None,
                        })
                        .collect()
                };
            }
            if let Some(c) = a.node_cap {
                cfg.sampling.node_cap = c;
            }
            if a.out_dir.is_some() {
                cfg.out_dir = a.out_dir.clone();
            }
        }
        Command::Sample(a) => {
            a.generation.apply(&mut cfg);
            let s = &mut cfg.sampling;
            if let Some(v) = a.seed {
                s.rng_seed = v;
            }
            if let Some(v) = a.per_type {
                s.queries_per_type = v as usize;
            }
            if let Some(v) = a.min_hard {
                s.min_answers = v;
            }
            if let Some(v) = a.max_hard {
                s.max_answers = v;
            }
            if let Some(v) = a.size_filter {
                s.size_filter = v;
            }
            if let Some(v) = a.negation {
                s.negation = v;
            }
            if let Some(v) = a.max_retries {
                s.max_retries_per_query = v;
            }
            if let Some(v) = a.node_cap {
                s.node_cap = v;
            }
            if a.kg_dir.is_some() {
                cfg.kg_dir = a.kg_dir.clone();
            }
            if a.out_dir.is_some() {
                cfg.out_dir = a.out_dir.clone();
            }
        }
        Command::Answers(a) => {
            if a.kg_dir.is_some() {
                cfg.kg_dir = a.kg_dir.clone();
            }
        }
        Command::Evaluate(a) => {
            let m = &mut cfg.metrics;
            if let Some(v) = a.ties {
                m.ties = v;
            }
            if let Some(v) = a.ra_pool {
                m.ra_pool = v;
            }
            if let Some(v) = a.aggregation {
                m.aggregation = v;
            }
            if a.kg_dir.is_some() {
                cfg.kg_dir = a.kg_dir.clone();
            }
            if a.out_dir.is_some() {
                cfg.out_dir = a.out_dir.clone();
            }
        }
    }
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let cfg = resolve(&cli)?;
    env_logger::Builder::new()
        .filter_level(cfg.log_filter()?)
        .target(env_logger::Target::Stderr)
        .format_timestamp(None)
        .init();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0) as usize)
        .build()?;
    let force = cli.force;
    pool.install(|| match &cli.command {
        Command::Enumerate(a) => commands::enumerate(&cfg, &a.out, force),
        Command::Normalize(a) => commands::normalize(&cfg, &a.input, force),
        Command::Sample(a) => commands::sample(&cfg, a.types.as_deref(), force),
        Command::Answers(a) => commands::answers(&cfg, &a.dataset, a.out.as_deref(), force),
        Command::Evaluate(a) => commands::evaluate(&cfg, &a.dataset, a.predictions.as_deref(), a.oracle, force),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
