//! End-to-end run: load, enrich, simplify, reduce, merge, structure,
//! measure, and write every artifact to an output directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::attribute::ValidationReport;
use crate::bracket::serialize_bracketed;
use crate::corpus::{load_corpus, CorpusError};
use crate::enrich::{enrich_with, reduce, simplify, AnnotatedSentence, EnrichError, EnrichOptions};
use crate::export::{export_graph_schema, export_relational_ddl, LabelMap};
use crate::grammar::{extract_grammar, Grammar};
use crate::metrics::{evaluate, naive_baseline, MetricError, MetricsReport};
use crate::rewrite::{merge_forest, structure_corpus, ConfigError, IterationRecord, RewriteConfig, StructuringResult};
use crate::similarity::{SimilarityConfig, SimilarityError, SimilarityKind};
use crate::tree::Tree;

pub const DEFAULT_TAU: f64 = 0.7;
pub const DEFAULT_MIN_SUPPORT: usize = 2;
pub const DEFAULT_MAX_ITERATIONS: usize = 10;
pub const DEFAULT_ALPHAS: [f64; 2] = [1.0, 0.5];

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_ITERATION_LIMIT: i32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub tau: f64,
    pub min_support: usize,
    pub max_iterations: usize,
    pub similarity: SimilarityKind,
    pub alphas: Vec<f64>,
    pub lenient: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            tau: DEFAULT_TAU,
            min_support: DEFAULT_MIN_SUPPORT,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            similarity: SimilarityKind::Jaccard,
            alphas: DEFAULT_ALPHAS.to_vec(),
            lenient: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("alpha {0} is outside [0, 1]")]
    Alpha(f64),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Enrich(#[from] EnrichError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl RunConfig {
    pub fn rewrite_config(&self) -> Result<RewriteConfig, PipelineError> {
        if let Some(a) = self.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(PipelineError::Alpha(*a));
        }
        let sim = SimilarityConfig::new(self.similarity, self.tau)?;
        Ok(RewriteConfig::new(sim, self.min_support, self.max_iterations)?)
    }
}

/// Everything a run computes, before it is written out.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    /// Merged enriched forest, the reference for data and semantic loss.
    pub initial: Tree,
    /// Grammar of the merged enriched forest.
    pub initial_grammar: Grammar,
    pub structuring: StructuringResult,
    pub metrics: MetricsReport,
    pub baseline_grammar: Grammar,
    pub baseline_metrics: MetricsReport,
}

pub fn enrich_corpus(corpus: &[AnnotatedSentence], lenient: bool) -> Result<Vec<Tree>, EnrichError> {
    corpus
        .iter()
        .map(|s| enrich_with(s, EnrichOptions { lenient }))
        .collect()
}

/// Run the whole computation in memory.
pub fn compute(corpus: &[AnnotatedSentence], cfg: &RunConfig) -> Result<RunArtifacts, PipelineError> {
    let rw = cfg.rewrite_config()?;
    let enriched = enrich_corpus(corpus, cfg.lenient)?;
    let initial = merge_forest(&enriched);
    let initial_grammar = extract_grammar(&initial);
    let reduced: Vec<Tree> = enriched.iter().map(|t| reduce(&simplify(t))).collect();
    let structuring = structure_corpus(&merge_forest(&reduced), &rw);
    let metrics = evaluate(&initial, &structuring.instance, &structuring.grammar, &rw.similarity, &cfg.alphas)?;
    let (baseline_grammar, baseline_tree) = naive_baseline(&enriched);
    let baseline_metrics = evaluate(&initial, &baseline_tree, &baseline_grammar, &rw.similarity, &cfg.alphas)?;
    Ok(RunArtifacts {
        initial,
        initial_grammar,
        structuring,
        metrics,
        baseline_grammar,
        baseline_metrics,
    })
}

pub fn iterations_csv(log: &[IterationRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in log {
        w.serialize(r).expect("in-memory write");
    }
    if log.is_empty() {
        w.write_record(["step", "productions", "equivalence_classes", "collections", "relations", "groups"])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub status: String,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
    pub config: RunConfig,
    pub sentences: usize,
    pub converged: Option<bool>,
    pub iterations: Option<usize>,
    pub initial_productions: Option<usize>,
    pub final_productions: Option<usize>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub converged: bool,
    pub iterations: usize,
    pub report: ValidationReport,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.converged {
            EXIT_CONVERGED
        } else {
            EXIT_ITERATION_LIMIT
        }
    }
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Writer<'_> {
    fn put(&mut self, name: &str, content: &str) -> Result<(), PipelineError> {
        let path = self.dir.join(name);
        fs::write(&path, content).map_err(|source| PipelineError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.files.push(name.to_string());
        Ok(())
    }
}

fn manifest_for(cfg: &RunConfig, sentences: usize) -> Manifest {
    Manifest {
        status: "failed".into(),
        failed_stage: None,
        error: None,
        config: cfg.clone(),
        sentences,
        converged: None,
        iterations: None,
        initial_productions: None,
        final_productions: None,
        files: vec![],
    }
}

fn write_manifest(w: &mut Writer, m: &mut Manifest) -> Result<(), PipelineError> {
    m.files = w.files.clone();
    m.files.push("manifest.json".into());
    let text = serde_json::to_string_pretty(m).expect("manifest serializes") + "\n";
    w.put("manifest.json", &text)
}

/// Load a corpus file, run, and write all artifacts. On failure a manifest
/// naming the failed stage is still written when the directory is usable.
pub fn run_pipeline(cfg: &RunConfig, corpus_path: &Path, out_dir: &Path) -> Result<RunOutcome, PipelineError> {
    let rw = cfg.rewrite_config()?;
    fs::create_dir_all(out_dir).map_err(|source| PipelineError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let mut w = Writer { dir: out_dir, files: vec![] };
    let mut manifest = manifest_for(cfg, 0);
    let fail = |w: &mut Writer, m: &mut Manifest, stage: &str, e: PipelineError| {
        m.failed_stage = Some(stage.into());
        m.error = Some(e.to_string());
        let _ = write_manifest(w, m);
        e
    };

    let corpus = match load_corpus(corpus_path) {
        Ok(c) => c,
        Err(e) => return Err(fail(&mut w, &mut manifest, "load", e.into())),
    };
    manifest.sentences = corpus.len();
    let art = match compute(&corpus, cfg) {
        Ok(a) => a,
        Err(e) => {
            let stage = match e {
                PipelineError::Enrich(_) => "enrich",
                PipelineError::Metric(_) => "metrics",
                _ => "structure",
            };
            return Err(fail(&mut w, &mut manifest, stage, e));
        }
    };
    let s = &art.structuring;
    let result = (|| {
        w.put("grammar.txt", &s.grammar.to_text())?;
        w.put("instance.bracket", &(serialize_bracketed(&s.instance) + "\n"))?;
        w.put("validation.json", &(s.report.to_json() + "\n"))?;
        w.put("iterations.csv", &iterations_csv(&s.log))?;
        w.put("metrics.csv", &art.metrics.to_csv(rw.similarity.tau, rw.min_support))?;
        w.put("metrics_baseline.csv", &art.baseline_metrics.to_csv(rw.similarity.tau, rw.min_support))?;
        if s.converged {
            let map = LabelMap::default();
            let ddl = export_relational_ddl(&s.grammar, &map).expect("converged grammar is valid");
            w.put("schema.sql", &ddl)?;
            let graph = export_graph_schema(&s.grammar, &map).expect("converged grammar is valid");
            w.put("schema_graph.json", &graph)?;
        }
        Ok::<(), PipelineError>(())
    })();
    if let Err(e) = result {
        return Err(fail(&mut w, &mut manifest, "write", e));
    }
    manifest.status = if s.converged { "converged" } else { "iteration-limit" }.into();
    manifest.converged = Some(s.converged);
    manifest.iterations = Some(s.log.len());
    manifest.initial_productions = Some(art.initial_grammar.len());
    manifest.final_productions = Some(s.grammar.len());
    write_manifest(&mut w, &mut manifest)?;
    Ok(RunOutcome {
        converged: s.converged,
        iterations: s.log.len(),
        report: s.report.clone(),
        files: w.files.iter().map(|f| out_dir.join(f)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_checks() {
        let mut c = RunConfig::default();
        assert!(c.rewrite_config().is_ok());
        c.max_iterations = 0;
        assert!(matches!(c.rewrite_config(), Err(PipelineError::Config(ConfigError::MaxIterations))));
        let c = RunConfig { tau: 1.5, ..RunConfig::default() };
        assert!(matches!(c.rewrite_config(), Err(PipelineError::Similarity(_))));
        let c = RunConfig { alphas: vec![2.0], ..RunConfig::default() };
        assert!(matches!(c.rewrite_config(), Err(PipelineError::Alpha(_))));
    }

    #[test]
    fn iterations_header() {
        let empty = iterations_csv(&[]);
        assert_eq!(empty, "step,productions,equivalence_classes,collections,relations,groups\n");
    }
}
