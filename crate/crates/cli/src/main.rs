use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use textschema::attribute::validate_grammar;
use textschema::bracket::parse_bracketed;
use textschema::corpus::load_corpus;
use textschema::export::{export_graph_schema, export_grammar_text, export_relational_ddl, ExportError, LabelMap};
use textschema::grammar::{extract_grammar, Grammar};
use textschema::metrics::{evaluate, naive_baseline};
use textschema::pipeline::{
    enrich_corpus, run_pipeline, RunConfig, DEFAULT_MAX_ITERATIONS, DEFAULT_MIN_SUPPORT, DEFAULT_TAU, EXIT_FAILURE,
    EXIT_ITERATION_LIMIT,
};
use textschema::rewrite::merge_forest;
use textschema::similarity::SimilarityKind;

#[derive(Parser)]
#[command(name = "textschema", version, about = "Turn entity-annotated syntax trees into a database schema")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline on a JSONL corpus and write all artifacts.
    Structure {
        corpus: PathBuf,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        params: Params,
        /// Skip entity spans that cross constituents instead of failing.
        #[arg(long)]
        lenient: bool,
    },
    /// Check a grammar file against the schema meta-grammar.
    Validate { grammar: PathBuf },
    /// Score a structured instance against the enriched corpus.
    Metrics {
        corpus: PathBuf,
        /// Bracketed structured instance, as written by `structure`.
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        params: Params,
        #[arg(long)]
        lenient: bool,
        /// Print JSON instead of CSV.
        #[arg(long)]
        json: bool,
    },
    /// Build the one-group-per-sentence baseline and score it.
    Baseline {
        corpus: PathBuf,
        #[command(flatten)]
        params: Params,
        #[arg(long)]
        lenient: bool,
        /// Write grammar, instance and metrics here instead of printing.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Export a valid grammar as text, SQL DDL or a graph schema.
    Export {
        grammar: PathBuf,
        #[arg(short, long, value_enum, default_value_t = Format::Sql)]
        format: Format,
        /// JSON object mapping symbols such as `Grp_1` to readable names.
        #[arg(long)]
        label_map: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Sql,
    Graph,
}

#[derive(Args, Clone)]
struct Params {
    /// Similarity threshold in [0, 1].
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    /// Minimum class frequency for creating a structure.
    #[arg(long, default_value_t = DEFAULT_MIN_SUPPORT)]
    min_support: usize,
    /// Iteration limit K.
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iterations: usize,
    /// jaccard or levenshtein.
    #[arg(long, default_value = "jaccard")]
    similarity: SimilarityKind,
    /// Redundancy level; repeat for several (default 1.0 and 0.5).
    #[arg(long)]
    alpha: Vec<f64>,
}

impl Params {
    fn run_config(&self, lenient: bool) -> RunConfig {
        let mut cfg = RunConfig {
            tau: self.tau,
            min_support: self.min_support,
            max_iterations: self.max_iterations,
            similarity: self.similarity,
            lenient,
            ..RunConfig::default()
        };
        if !self.alpha.is_empty() {
            cfg.alphas = self.alpha.clone();
        }
        cfg
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_grammar(path: &Path) -> Result<Grammar> {
    Grammar::parse_text(&read(path)?).with_context(|| format!("cannot parse grammar {}", path.display()))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Structure { corpus, out, params, lenient } => {
            let r = run_pipeline(&params.run_config(lenient), &corpus, &out)?;
            let status = if r.converged { "converged" } else { "iteration limit reached" };
            eprintln!("{status} after {} iterations; artifacts in {}", r.iterations, out.display());
            Ok(ExitCode::from(r.exit_code() as u8))
        }
        Command::Validate { grammar } => {
            let report = validate_grammar(&read_grammar(&grammar)?);
            println!("{}", report.to_json());
            Ok(if report.valid { ExitCode::SUCCESS } else { ExitCode::from(EXIT_ITERATION_LIMIT as u8) })
        }
        Command::Metrics { corpus, instance, params, lenient, json } => {
            let cfg = params.run_config(lenient);
            let rw = cfg.rewrite_config()?;
            let enriched = enrich_corpus(&load_corpus(&corpus)?, lenient)?;
            let initial = merge_forest(&enriched);
            let fin = parse_bracketed(read(&instance)?.trim())
                .with_context(|| format!("cannot parse instance {}", instance.display()))?;
            let g = extract_grammar(&fin);
            let report = evaluate(&initial, &fin, &g, &rw.similarity, &cfg.alphas)?;
            if json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.to_csv(cfg.tau, cfg.min_support));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Baseline { corpus, params, lenient, out } => {
            let cfg = params.run_config(lenient);
            let rw = cfg.rewrite_config()?;
            let enriched = enrich_corpus(&load_corpus(&corpus)?, lenient)?;
            let (g, inst) = naive_baseline(&enriched);
            let report = evaluate(&merge_forest(&enriched), &inst, &g, &rw.similarity, &cfg.alphas)?;
            let csv = report.to_csv(cfg.tau, cfg.min_support);
            match out {
                Some(dir) => {
                    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
                    fs::write(dir.join("baseline_grammar.txt"), g.to_text())?;
                    fs::write(
                        dir.join("baseline_instance.bracket"),
                        textschema::bracket::serialize_bracketed(&inst) + "\n",
                    )?;
                    fs::write(dir.join("metrics_baseline.csv"), csv)?;
                }
                None => {
                    print!("{}", g.to_text());
                    println!();
                    print!("{csv}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Export { grammar, format, label_map } => {
            let g = read_grammar(&grammar)?;
            let map = match label_map {
                Some(p) => LabelMap::from_json(&read(&p)?)?,
                None => LabelMap::default(),
            };
            let text = match format {
                Format::Text => Ok(export_grammar_text(&g)),
                Format::Sql => export_relational_ddl(&g, &map),
                Format::Graph => export_graph_schema(&g, &map),
            };
            match text {
                Ok(t) => print!("{t}"),
                Err(ExportError::Invalid(report)) => {
                    eprintln!("{}", report.to_json());
                    bail!("refusing to export an invalid grammar");
                }
                Err(e) => return Err(e.into()),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // Usage errors must not look like the iteration-limit status.
            return if e.use_stderr() { ExitCode::from(EXIT_FAILURE as u8) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAILURE as u8)
        }
    }
}
