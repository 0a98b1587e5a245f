//! Stage orchestration: configuration, artifact layout and the manifest.
//!
//! Every stage reads its inputs from the output directory (or from the
//! configured external files), writes its artifacts atomically and records
//! their SHA-256 in `manifest.json`. Re-running a stage with unchanged
//! inputs rewrites identical bytes.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::annotators::{
    annotate_batch, import_human, read_records, write_records, Annotator, BaselineAnnotator, RemoteAnnotator,
    RemoteConfig, BASELINE_ID,
};
use crate::codebook::{AnnotationRecord, Codebook, Dimension, DEFAULT_CODEBOOK_JSON};
use crate::cohort::{
    default_dictionaries, groups_csv, load_dictionaries, mentions_table, study_docs, summary_table, word_count_table,
    Group, GroupRules, Law, MentionMatcher, StudyDoc,
};
use crate::corpus::{ingest_reader, Language, PolicyDocument, TrigramIdentifier, WindowLabel};
use crate::corpus::{DEFAULT_MIN_CHARS, DEFAULT_MIN_CONFIDENCE};
use crate::evalmetrics::{krippendorff_alpha, MetricReport, ReliabilityMatrix};
use crate::generators::{
    by_language_and_rank, compliance_by_generator, generator_use_table, prevalence, tag_documents, GeneratorDictionary,
};
use crate::report::{assemble, SECTIONS};
use crate::simproj::{
    cluster_cohesion, project_tsne, read_embeddings, write_embeddings, EmbeddingClient, EmbeddingConfig, TsneParams,
};
use crate::stats::table::{compliance_table, stratified_table};
use crate::stats::{DEFAULT_ALPHA, DEFAULT_POWER};
use crate::synth::{generate, SynthConfig};

pub const MANIFEST: &str = "manifest.json";
pub const DOCUMENTS: &str = "corpus/documents.jsonl";
pub const STUDY: &str = "cohort/study.jsonl";
pub const MATCHES: &str = "generators/matches.jsonl";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{what} not found: {}", path.display())]
    MissingPath { what: String, path: PathBuf },
    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("data error: {0}")]
    Data(String),
    #[error("backend failure: {0}")]
    Backend(String),
}

impl PipelineError {
    /// 1 usage/config, 2 data, 3 backend.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::MissingPath { .. } => 1,
            PipelineError::Io { .. } | PipelineError::Data(_) => 2,
            PipelineError::Backend(_) => 3,
        }
    }
}

fn data<E: std::fmt::Display>(e: E) -> PipelineError {
    PipelineError::Data(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Baseline,
    Remote,
}

impl FromStr for BackendKind {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(BackendKind::Baseline),
            "remote" => Ok(BackendKind::Remote),
            other => Err(PipelineError::Config(format!("unknown backend `{other}` (expected baseline or remote)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Annotate,
    Validate,
    Agreement,
    Cohort,
    Stats,
    Generators,
    Cluster,
    Report,
}

impl Stage {
    pub const ORDER: [Stage; 9] = [
        Stage::Ingest,
        Stage::Annotate,
        Stage::Validate,
        Stage::Agreement,
        Stage::Cohort,
        Stage::Stats,
        Stage::Generators,
        Stage::Cluster,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Annotate => "annotate",
            Stage::Validate => "validate",
            Stage::Agreement => "agreement",
            Stage::Cohort => "cohort",
            Stage::Stats => "stats",
            Stage::Generators => "generators",
            Stage::Cluster => "cluster",
            Stage::Report => "report",
        }
    }
}

/// Which stages `run` executes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageToggles {
    pub ingest: bool,
    pub annotate: bool,
    pub validate: bool,
    pub agreement: bool,
    pub cohort: bool,
    pub stats: bool,
    pub generators: bool,
    pub cluster: bool,
    pub report: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        Self {
            ingest: true,
            annotate: true,
            validate: false,
            agreement: false,
            cohort: true,
            stats: true,
            generators: true,
            cluster: false,
            report: true,
        }
    }
}

impl StageToggles {
    pub fn enabled(&self, stage: Stage) -> bool {
        match stage {
            Stage::Ingest => self.ingest,
            Stage::Annotate => self.annotate,
            Stage::Validate => self.validate,
            Stage::Agreement => self.agreement,
            Stage::Cohort => self.cohort,
            Stage::Stats => self.stats,
            Stage::Generators => self.generators,
            Stage::Cluster => self.cluster,
            Stage::Report => self.report,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Corpus files, one per crawl wave.
    pub corpus: Vec<PathBuf>,
    pub out_dir: PathBuf,
    pub codebook: Option<PathBuf>,
    pub terms: Option<PathBuf>,
    pub generators: Option<PathBuf>,
    /// Ground-truth annotations for `validate`.
    pub truth: Option<PathBuf>,
    /// Multi-coder annotations for `agreement`.
    pub human: Option<PathBuf>,
    /// Precomputed embeddings for `cluster`; fetched from `embedding` otherwise.
    pub embeddings: Option<PathBuf>,
    pub backend: BackendKind,
    /// Annotation set used by the analysis stages; defaults to the
    /// configured backend's id.
    pub analysis_backend: Option<String>,
    pub alpha: f64,
    pub power: f64,
    pub seed: u64,
    pub workers: usize,
    pub min_confidence: f64,
    pub min_chars: usize,
    pub remote: RemoteConfig,
    pub embedding: EmbeddingConfig,
    pub tsne: TsneParams,
    pub stages: StageToggles,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpus: Vec::new(),
            out_dir: PathBuf::from("out"),
            codebook: None,
            terms: None,
            generators: None,
            truth: None,
            human: None,
            embeddings: None,
            backend: BackendKind::Baseline,
            analysis_backend: None,
            alpha: DEFAULT_ALPHA,
            power: DEFAULT_POWER,
            seed: 42,
            workers: 8,
            min_confidence: DEFAULT_MIN_CONFIDENCE,
            min_chars: DEFAULT_MIN_CHARS,
            remote: RemoteConfig::default(),
            embedding: EmbeddingConfig::default(),
            tsne: TsneParams::default(),
            stages: StageToggles::default(),
        }
    }
}

/// Replaces `${NAME}` with the value of environment variable `NAME`.
pub fn interpolate_env(text: &str, lookup: impl Fn(&str) -> Option<String>) -> Result<String, PipelineError> {
    static VAR: OnceLock<Regex> = OnceLock::new();
    let re = VAR.get_or_init(|| Regex::new(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}").expect("pattern"));
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for caps in re.captures_iter(text) {
        let m = caps.get(0).expect("match");
        let name = &caps[1];
        let value =
            lookup(name).ok_or_else(|| PipelineError::Config(format!("environment variable `{name}` is not set")))?;
        out.push_str(&text[last..m.start()]);
        out.push_str(&value);
        last = m.end();
    }
    out.push_str(&text[last..]);
    Ok(out)
}

impl RunConfig {
    /// Parses TOML after environment interpolation. Relative paths are
    /// resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let text = interpolate_env(text, |k| std::env::var(k).ok())?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| PipelineError::Config(e.to_string()))?;
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.corpus.iter_mut().for_each(fix);
        fix(&mut cfg.out_dir);
        for p in [
            &mut cfg.codebook,
            &mut cfg.terms,
            &mut cfg.generators,
            &mut cfg.truth,
            &mut cfg.human,
            &mut cfg.embeddings,
            &mut cfg.remote.cache_dir,
            &mut cfg.remote.audit_log,
            &mut cfg.embedding.cache_dir,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        if !path.exists() {
            return Err(PipelineError::MissingPath { what: "config file".into(), path: path.to_path_buf() });
        }
        let text = fs::read_to_string(path).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(PipelineError::Config(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        unit("alpha", self.alpha)?;
        unit("power", self.power)?;
        if self.workers == 0 {
            return Err(PipelineError::Config("workers must be at least 1".into()));
        }
        for (what, p) in [
            ("codebook", &self.codebook),
            ("terms dictionary", &self.terms),
            ("generator dictionary", &self.generators),
        ] {
            if let Some(p) = p {
                require(what, p)?;
            }
        }
        Ok(())
    }

    pub fn analysis_id(&self) -> String {
        match (&self.analysis_backend, self.backend) {
            (Some(id), _) => id.clone(),
            (None, BackendKind::Baseline) => BASELINE_ID.to_string(),
            (None, BackendKind::Remote) => self.remote.backend_id().to_string(),
        }
    }

    fn tsne_params(&self) -> TsneParams {
        TsneParams { seed: self.seed, ..self.tsne }
    }
}

fn require(what: &str, path: &Path) -> Result<(), PipelineError> {
    if path.exists() {
        Ok(())
    } else {
        Err(PipelineError::MissingPath { what: what.to_string(), path: path.to_path_buf() })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageEntry {
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub stages: BTreeMap<String, StageEntry>,
}

impl Manifest {
    pub fn load(out_dir: &Path) -> Result<Self, PipelineError> {
        let path = out_dir.join(MANIFEST);
        match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).map_err(data),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(source) => Err(PipelineError::Io { path, source }),
        }
    }
}

/// Tracks what one stage read and wrote.
pub struct StageRun<'a> {
    out_dir: &'a Path,
    stage: Stage,
    entry: StageEntry,
}

impl<'a> StageRun<'a> {
    fn new(out_dir: &'a Path, stage: Stage) -> Self {
        Self { out_dir, stage, entry: StageEntry::default() }
    }

    fn key(&self, path: &Path) -> String {
        path.strip_prefix(self.out_dir).unwrap_or(path).to_string_lossy().replace('\\', "/")
    }

    fn read(&mut self, what: &str, path: &Path) -> Result<Vec<u8>, PipelineError> {
        require(what, path)?;
        let bytes = fs::read(path).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })?;
        self.entry.inputs.insert(self.key(path), sha256_hex(&bytes));
        Ok(bytes)
    }

    fn read_artifact(&mut self, what: &str, rel: &str) -> Result<String, PipelineError> {
        let path = self.out_dir.join(rel);
        if !path.exists() {
            return Err(PipelineError::MissingPath { what: format!("{what} (run an earlier stage first)"), path });
        }
        let bytes = self.read(what, &path)?;
        String::from_utf8(bytes).map_err(|_| PipelineError::Data(format!("{rel} is not UTF-8")))
    }

    fn read_optional(&mut self, rel: &str) -> Result<Option<String>, PipelineError> {
        if self.out_dir.join(rel).exists() {
            self.read_artifact(rel, rel).map(Some)
        } else {
            Ok(None)
        }
    }

    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        let path = self.out_dir.join(rel);
        write_atomic(&path, bytes)?;
        self.entry.outputs.insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    fn finish(self) -> Result<StageEntry, PipelineError> {
        let mut manifest = Manifest::load(self.out_dir)?;
        manifest.stages.insert(self.stage.name().to_string(), self.entry.clone());
        let mut text = serde_json::to_string_pretty(&manifest).map_err(data)?;
        text.push('\n');
        write_atomic(&self.out_dir.join(MANIFEST), text.as_bytes())?;
        Ok(self.entry)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let io = |source| PipelineError::Io { path: path.to_path_buf(), source };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io)?;
    }
    let tmp = path.with_extension("tmp~");
    fs::write(&tmp, bytes).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

fn safe_name(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') { c } else { '_' }).collect()
}

pub fn annotations_path(backend_id: &str) -> String {
    format!("annotations/{}.jsonl", safe_name(backend_id))
}

fn jsonl<T: Serialize>(items: &[T]) -> Result<Vec<u8>, PipelineError> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).map_err(data)?;
        out.push(b'\n');
    }
    Ok(out)
}

fn parse_jsonl<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<Vec<T>, PipelineError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| PipelineError::Data(format!("{what} line {}: {e}", i + 1))))
        .collect()
}

/// One line of the cohort stage output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyRow {
    pub doc_id: String,
    pub group: Group,
    pub window: WindowLabel,
    pub ispol: bool,
    pub october_update: Option<bool>,
    pub mentions: Vec<Law>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRow {
    pub doc_id: String,
    pub generators: Vec<String>,
}

/// Documents, analysis records and cohort rows loaded from stage outputs.
pub struct StudyData {
    pub docs: Vec<PolicyDocument>,
    pub records: Vec<AnnotationRecord>,
    pub rows: Vec<StudyRow>,
}

impl StudyData {
    fn load(run: &mut StageRun<'_>, cfg: &RunConfig) -> Result<Self, PipelineError> {
        let docs = parse_jsonl(&run.read_artifact("ingested corpus", DOCUMENTS)?, DOCUMENTS)?;
        let rel = annotations_path(&cfg.analysis_id());
        let records = read_records(&run.read_artifact("annotations", &rel)?).map_err(data)?;
        let rows = parse_jsonl(&run.read_artifact("cohort assignment", STUDY)?, STUDY)?;
        Ok(Self { docs, records, rows })
    }

    /// Joined study documents in cohort-row order.
    pub fn study_docs(&self) -> Result<Vec<StudyDoc<'_>>, PipelineError> {
        let docs: HashMap<&str, &PolicyDocument> = self.docs.iter().map(|d| (d.doc_id.as_str(), d)).collect();
        let records: HashMap<&str, &AnnotationRecord> = self.records.iter().map(|r| (r.doc_id.as_str(), r)).collect();
        self.rows
            .iter()
            .map(|row| {
                let id = row.doc_id.as_str();
                match (docs.get(id), records.get(id)) {
                    (Some(doc), Some(record)) => {
                        Ok(StudyDoc { doc, record, group: row.group, october_update: row.october_update })
                    }
                    _ => Err(PipelineError::Data(format!("cohort row `{id}` has no matching document or record"))),
                }
            })
            .collect()
    }
}

fn codebook(run: &mut StageRun<'_>, cfg: &RunConfig) -> Result<Codebook, PipelineError> {
    let json = match &cfg.codebook {
        Some(p) => String::from_utf8_lossy(&run.read("codebook", p)?).into_owned(),
        None => DEFAULT_CODEBOOK_JSON.to_string(),
    };
    Codebook::from_json(&json).map_err(|e| PipelineError::Config(e.to_string()))
}

fn generator_dictionary(run: &mut StageRun<'_>, cfg: &RunConfig) -> Result<GeneratorDictionary, PipelineError> {
    match &cfg.generators {
        Some(p) => {
            let json = String::from_utf8_lossy(&run.read("generator dictionary", p)?).into_owned();
            GeneratorDictionary::from_json(&json).map_err(|e| PipelineError::Config(e.to_string()))
        }
        None => Ok(GeneratorDictionary::default()),
    }
}

/// Runs one stage and records it in the manifest.
pub fn run_stage(stage: Stage, cfg: &RunConfig) -> Result<StageEntry, PipelineError> {
    cfg.validate()?;
    let mut run = StageRun::new(&cfg.out_dir, stage);
    log::info!("stage {}", stage.name());
    match stage {
        Stage::Ingest => ingest(&mut run, cfg)?,
        Stage::Annotate => annotate(&mut run, cfg)?,
        Stage::Validate => validate(&mut run, cfg)?,
        Stage::Agreement => agreement(&mut run, cfg)?,
        Stage::Cohort => cohort(&mut run, cfg)?,
        Stage::Stats => stats(&mut run, cfg)?,
        Stage::Generators => generators(&mut run, cfg)?,
        Stage::Cluster => cluster(&mut run, cfg)?,
        Stage::Report => report(&mut run)?,
    }
    run.finish()
}

/// Runs every enabled stage in pipeline order.
pub fn run_all(cfg: &RunConfig) -> Result<(), PipelineError> {
    for stage in Stage::ORDER {
        if cfg.stages.enabled(stage) {
            run_stage(stage, cfg)?;
        }
    }
    Ok(())
}

fn ingest(run: &mut StageRun<'_>, cfg: &RunConfig) -> Result<(), PipelineError> {
    if cfg.corpus.is_empty() {
        return Err(PipelineError::Config("no corpus path given".into()));
    }
    let mut input = Vec::new();
    for path in &cfg.corpus {
        input.extend(run.read("corpus", path)?);
        input.push(b'\n');
    }
    let identifier = TrigramIdentifier::new(cfg.min_confidence, cfg.min_chars);
    let (corpus, report) = ingest_reader(BufReader::new(input.as_slice()), &identifier).map_err(data)?;
    for e in &report.errors {
        log::warn!("corpus line {}: {}", e.line, e.message);
    }
    run.write(DOCUMENTS, &jsonl(corpus.documents())?)?;
    let mut text = serde_json::to_string_pretty(&report).map_err(data)?;
    text.push('\n');
    run.write("corpus/ingest_report.json", text.as_bytes())
}

#[derive(Serialize)]
struct FailureLine<'a> {
    doc_id: &'a str,
    error: String,
}

fn annotate(run: &mut StageRun<'_>, cfg: &RunConfig) -> Result<(), PipelineError> {
    let docs: Vec<PolicyDocument> = parse_jsonl(&run.read_artifact("ingested corpus", DOCUMENTS)?, DOCUMENTS)?;
    let (results, id) = match cfg.backend {
        BackendKind::Baseline => (annotate_batch(&BaselineAnnotator, &docs, cfg.workers), BASELINE_ID.to_string()),
        BackendKind::Remote => {
            let mut remote = cfg.remote.clone();
            if remote.cache_dir.is_none() {
                remote.cache_dir = Some(cfg.out_dir.join("cache/annotations"));
            }
            let book = codebook(run, cfg)?;
            let annotator = RemoteAnnotator::new(remote, book).map_err(|e| PipelineError::Backend(e.to_string()))?;
            let id = annotator.config().backend_id().to_string();
            (annotate_batch(&annotator as &dyn Annotator, &docs, cfg.workers), id)
        }
    };
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut backend_failures = 0;
    for (doc_id, r) in &results {
        match r {
            Ok(rec) => records.push(rec.clone()),
            Err(e) => {
                backend_failures += usize::from(e.is_backend_failure());
                log::warn!("{doc_id}: {e}");
                failures.push(FailureLine { doc_id, error: e.to_string() });
            }
        }
    }
    let rel = annotations_path(&id);
    let mut buf = Vec::new();
    write_records(&records, &mut buf).map_err(data)?;
    run.write(&rel, &buf)?;
    run.write(&rel.replace(".jsonl", ".failures.jsonl"), &jsonl(&failures)?)?;
    if backend_failures > 0 {
        return Err(PipelineError::Backend(format!(
            "{backend_failures} of {} documents failed; rerun to retry (successful calls are cached)",
            docs.len()
        )));
    }
    Ok(())
}

fn validate(run: &mut StageRun<'_>, cfg: &RunConfig) -> Result<(), PipelineError> {
    let truth_path = cfg.truth.as_ref().ok_or_else(|| PipelineError::Config("validate needs a truth file".into()))?;
    run.read("ground truth", truth_path)?;
    let truth = import_human(truth_path).map_err(data)?;
    for e in &truth.rejected {
        log::warn!("truth line {}: {}", e.line, e.message);
    }
    let docs: Vec<PolicyDocument> = parse_jsonl(&run.read_artifact("ingested corpus", DOCUMENTS)?, DOCUMENTS)?;
    let languages: BTreeMap<String, Language> = docs.iter().map(|d| (d.doc_id.clone(), d.language)).collect();
    let pred = read_records(&run.read_artifact("annotations", &annotations_path(&cfg.analysis_id()))?).map_err(data)?;
    let report = MetricReport::build(&pred, &truth.records, &languages).map_err(data)?;
    run.write("validation/metrics.csv", report.to_csv().as_bytes())?;
    run.write("validation/metrics.md", report.to_markdown().as_bytes())?;
    let warnings = report.low_support_warnings();
    for w in &warnings {
        log::warn!("low support for {}/{}: {} positive cases", w.dimension, w.language.code(), w.support_pos);
    }
    let mut text = serde_json::to_string_pretty(&warnings).map_err(data)?;
    text.push('\n');
    run.write("validation/low_support.json", text.as_bytes())
}

fn agreement(run: &mut StageRun<'_>, cfg: &RunConfig) -> Result<(), PipelineError> {
    let path = cfg.human.as_ref().ok_or_else(|| PipelineError::Config("agreement needs a coder file".into()))?;
    run.read("coder annotations", path)?;
    let human = import_human(path).map_err(data)?;
    let mut csv = String::from("dimension,alpha,units,coders\n");
    let mut md = String::from("| Dimension | α | Units | Coders |\n|---|---:|---:|---:|\n");
    for dim in Dimension::ALL {
        let m = ReliabilityMatrix::from_records(&human.records, dim).map_err(data)?;
        let alpha = match krippendorff_alpha(&m) {
            Ok(a) => format!("{a:.4}"),
            Err(e) => {
                log::warn!("alpha for {dim}: {e}");
                "NA".to_string()
            }
        };
        let _ = writeln!(csv, "{dim},{alpha},{},{}", m.units().len(), m.coders().len());
        let _ = writeln!(md, "| {dim} | {alpha} | {} | {} |", m.units().len(), m.coders().len());
    }
    run.write("agreement/alpha.csv", csv.as_bytes())?;
    run.write("agreement/alpha.md", md.as_bytes())
}

fn cohort(run: &mut StageRun<'_>, cfg: &RunConfig) -> Result<(), PipelineError> {
    let docs: Vec<PolicyDocument> = parse_jsonl(&run.read_artifact("ingested corpus", DOCUMENTS)?, DOCUMENTS)?;
    let records =
        read_records(&run.read_artifact("annotations", &annotations_path(&cfg.analysis_id()))?).map_err(data)?;
    let dictionaries = match &cfg.terms {
        Some(p) => {
            let json = String::from_utf8_lossy(&run.read("terms dictionary", p)?).into_owned();
            load_dictionaries(&json).map_err(|e| PipelineError::Config(e.to_string()))?
        }
        None => default_dictionaries(),
    };
    let matcher = MentionMatcher::new(&dictionaries).map_err(|e| PipelineError::Config(e.to_string()))?;
    let rules = GroupRules::default();
    let (study, missing) = study_docs(&docs, &records, &rules);
    if !missing.is_empty() {
        log::warn!("{} documents have no annotation and are left out", missing.len());
    }
    let rows: Vec<StudyRow> = study
        .iter()
        .map(|s| StudyRow {
            doc_id: s.doc.doc_id.clone(),
            group: s.group,
            window: s.window(),
            ispol: s.is_policy(),
            october_update: s.october_update,
            mentions: matcher.detect(&s.doc.doc_id, &s.doc.text).mentions.into_iter().collect(),
        })
        .collect();
    let websites: Vec<_> = docs.iter().map(|d| &d.website).collect();
    run.write("cohort/groups.csv", groups_csv(&websites, &rules).as_bytes())?;
    run.write(STUDY, &jsonl(&rows)?)?;
    run.write("cohort/summary.md", summary_table(&study).as_bytes())?;
    run.write("cohort/word_counts.md", word_count_table(&study).as_bytes())?;
    run.write("cohort/mentions.md", mentions_table(&study, &matcher).as_bytes())
}

fn stats(run: &mut StageRun<'_>, cfg: &RunConfig) -> Result<(), PipelineError> {
    let data_ = StudyData::load(run, cfg)?;
    let study = data_.study_docs()?;
    let table = compliance_table(&study, cfg.alpha, cfg.power).map_err(data)?;
    for c in &table.contrasts {
        if let Some(flag) = &c.flag {
            log::warn!("{}: {flag}", c.label);
        }
    }
    run.write("stats/obligations.csv", table.to_csv().as_bytes())?;
    run.write("stats/obligations.md", table.to_markdown().as_bytes())?;
    let strat = stratified_table(&study, cfg.alpha, cfg.power).map_err(data)?;
    run.write("stats/stratified.csv", strat.to_csv().as_bytes())?;
    run.write("stats/stratified.md", strat.to_markdown().as_bytes())
}

fn generators(run: &mut StageRun<'_>, cfg: &RunConfig) -> Result<(), PipelineError> {
    let dict = generator_dictionary(run, cfg)?;
    let data_ = StudyData::load(run, cfg)?;
    let study = data_.study_docs()?;
    let tagged = tag_documents(&study, &dict);
    let matches: Vec<MatchRow> = tagged
        .iter()
        .filter(|d| !d.generators.is_empty())
        .map(|d| MatchRow { doc_id: d.study.doc.doc_id.clone(), generators: d.generators.iter().cloned().collect() })
        .collect();
    run.write(MATCHES, &jsonl(&matches)?)?;
    let prev = prevalence(&tagged, &dict);
    run.write("generators/prevalence.csv", prev.to_csv().as_bytes())?;
    run.write("generators/prevalence.md", prev.to_markdown().as_bytes())?;
    run.write("generators/language_rank.md", by_language_and_rank(&tagged).as_bytes())?;
    run.write("generators/use.md", generator_use_table(&tagged).as_bytes())?;
    let all = compliance_by_generator(&tagged, &dict, false);
    run.write("generators/compliance.csv", all.to_csv().as_bytes())?;
    run.write("generators/compliance.md", all.to_markdown().as_bytes())?;
    let single = compliance_by_generator(&tagged, &dict, true);
    run.write("generators/compliance_single.csv", single.to_csv().as_bytes())?;
    run.write("generators/compliance_single.md", single.to_markdown().as_bytes())
}

fn cluster(run: &mut StageRun<'_>, cfg: &RunConfig) -> Result<(), PipelineError> {
    let matches: Vec<MatchRow> = parse_jsonl(&run.read_artifact("generator matches", MATCHES)?, MATCHES)?;
    let labels: BTreeMap<String, String> = matches.into_iter().map(|m| (m.doc_id, m.generators.join("+"))).collect();
    let vectors = match &cfg.embeddings {
        Some(path) => {
            let bytes = run.read("embeddings", path)?;
            read_embeddings(bytes.as_slice()).map_err(data)?
        }
        None => {
            let data_ = StudyData::load(run, cfg)?;
            let study = data_.study_docs()?;
            let targets: Vec<&PolicyDocument> = study
                .iter()
                .filter(|s| s.is_policy() && s.window() == WindowLabel::Oct2023 && s.group != Group::Excluded)
                .map(|s| s.doc)
                .collect();
            let mut ecfg = cfg.embedding.clone();
            if ecfg.cache_dir.is_none() {
                ecfg.cache_dir = Some(cfg.out_dir.join("cache/embeddings"));
            }
            let client = EmbeddingClient::new(ecfg).map_err(|e| PipelineError::Backend(e.to_string()))?;
            let batch = client.embed_batch(&targets, cfg.workers);
            let mut buf = Vec::new();
            write_embeddings(&batch.vectors, &mut buf).map_err(data)?;
            run.write("cluster/embeddings.jsonl", &buf)?;
            if !batch.failures.is_empty() {
                for (id, e) in &batch.failures {
                    log::warn!("{id}: {e}");
                }
                return Err(PipelineError::Backend(format!("{} embedding requests failed", batch.failures.len())));
            }
            batch.vectors
        }
    };
    let projection = project_tsne(&vectors, &cfg.tsne_params()).map_err(data)?;
    run.write("cluster/projection.csv", projection.to_csv(&labels).as_bytes())?;
    run.write("cluster/projection.svg", projection.to_svg(&labels, 10).as_bytes())?;
    let cohesion = cluster_cohesion(&vectors, &labels).map_err(data)?;
    let mut csv = String::from("generator,docs,intra,cross,ratio\n");
    let mut md = String::from("| Generator | Docs | Intra | Cross | Ratio |\n|---|---:|---:|---:|---:|\n");
    for c in &cohesion {
        let _ = writeln!(csv, "{},{},{:.4},{:.4},{:.4}", c.generator, c.docs, c.intra, c.cross, c.ratio);
        let _ = writeln!(md, "| {} | {} | {:.4} | {:.4} | {:.4} |", c.generator, c.docs, c.intra, c.cross, c.ratio);
    }
    run.write("cluster/cohesion.csv", csv.as_bytes())?;
    run.write("cluster/cohesion.md", md.as_bytes())
}

fn report(run: &mut StageRun<'_>) -> Result<(), PipelineError> {
    let mut bodies = Vec::new();
    for spec in SECTIONS {
        bodies.push((spec, run.read_optional(spec.source)?));
    }
    if bodies.iter().all(|(s, b)| !s.required || b.is_none()) {
        return Err(PipelineError::MissingPath {
            what: "stage outputs for the report (run cohort and stats first)".into(),
            path: run.out_dir.join("stats/obligations.md"),
        });
    }
    run.write("report.md", assemble("Privacy policy compliance report", &bodies).as_bytes())
}

/// Writes a synthetic corpus and its ground truth.
pub fn write_synthetic(config: &SynthConfig, corpus: &Path, truth: Option<&Path>) -> Result<usize, PipelineError> {
    let synth = generate(config);
    let mut buf = Vec::new();
    synth.write_jsonl(&mut buf).map_err(data)?;
    write_atomic(corpus, &buf)?;
    if let Some(t) = truth {
        write_atomic(t, synth.truth_csv().as_bytes())?;
    }
    Ok(synth.records.len())
}

/// Reads a whole file, naming the path on failure.
pub fn read_text(path: &Path) -> Result<String, PipelineError> {
    require("input", path)?;
    let mut s = String::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut s))
        .map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })?;
    Ok(s)
}
