//! On-disk data model for dumped LM artifacts.
//!
//! Three file families are supported:
//!
//! * `generations.jsonl` — one sampled continuation per line, grouped into
//!   [`GenerationSet`]s by `prompt_id`;
//! * `trace.jsonl` — a header line with `vocab_size`/`source` followed by one
//!   [`TraceStep`] per line;
//! * `hidden.meta.json` + `hidden.f32` — a JSON sidecar describing a raw
//!   row-major little-endian f32 matrix of hidden states.
//!
//! Loading validates every invariant; violating inputs are rejected, never
//! silently repaired. All loaded records are immutable after construction.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Tolerance for the per-step probability normalization check.
pub const PROB_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug)]
pub enum CorpusError {
    Io { path: String, source: std::io::Error },
    /// A line failed to parse as JSON (1-based line number).
    Malformed { path: String, line: usize, detail: String },
    NoGenerationSets { path: String },
    DuplicateSampleIndex { prompt_id: String, index: usize },
    /// Explicit sample indices must form 0..N-1.
    NonContiguousIndices { prompt_id: String },
    /// Some records of a prompt carry sample_index and some do not.
    MixedIndexPresence { prompt_id: String },
    /// Per-prompt metadata (prompt_text, model, sampling) must match across records.
    InconsistentMetadata { prompt_id: String, field: &'static str },
    EmptyPromptId { line: usize },
    InvalidNucleusP { prompt_id: String, value: f64 },
    MissingNucleusP { prompt_id: String },
    EmptyTokenIds { prompt_id: String, index: usize },
    MissingTraceHeader { path: String },
    EmptyTrace { path: String },
    ProbSumOutOfTolerance { step: usize, sum: f64 },
    NonIncreasingProbs { step: usize },
    RealizedAboveTop { step: usize },
    NonnegligibleOutOfRange { step: usize, count: u64 },
    TokenOutOfRange { step: usize, token: i64 },
    NonFiniteLogprob { step: usize },
    StepIndexMismatch { expected: usize, found: usize },
    /// Matrix byte size does not equal T*d*4.
    SizeMismatch { expected: u64, actual: u64 },
    TokenIdCount { expected: usize, actual: usize },
    NonFiniteRow { row: usize },
    BadDimension { what: &'static str },
}

impl fmt::Display for CorpusError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusError::Io { path, source } => write!(f, "{path}: {source}"),
            CorpusError::Malformed { path, line, detail } => {
                write!(f, "{path}:{line}: malformed record: {detail}")
            }
            CorpusError::NoGenerationSets { path } => {
                write!(f, "no generation sets found in {path}")
            }
            CorpusError::DuplicateSampleIndex { prompt_id, index } => {
                write!(f, "prompt {prompt_id}: duplicate sample_index {index}")
            }
            CorpusError::NonContiguousIndices { prompt_id } => {
                write!(f, "prompt {prompt_id}: sample indices do not form 0..N-1")
            }
            CorpusError::MixedIndexPresence { prompt_id } => {
                write!(f, "prompt {prompt_id}: sample_index present on some records but not all")
            }
            CorpusError::InconsistentMetadata { prompt_id, field } => {
                write!(f, "prompt {prompt_id}: field {field} differs across records")
            }
            CorpusError::EmptyPromptId { line } => write!(f, "line {line}: empty prompt_id"),
            CorpusError::InvalidNucleusP { prompt_id, value } => {
                write!(f, "prompt {prompt_id}: nucleus_p {value} outside (0, 1]")
            }
            CorpusError::MissingNucleusP { prompt_id } => {
                write!(f, "prompt {prompt_id}: nucleus sampling requires nucleus_p")
            }
            CorpusError::EmptyTokenIds { prompt_id, index } => {
                write!(f, "prompt {prompt_id} sample {index}: token_ids empty for non-empty text")
            }
            CorpusError::MissingTraceHeader { path } => {
                write!(f, "{path}: missing trace header line")
            }
            CorpusError::EmptyTrace { path } => write!(f, "{path}: trace has no steps"),
            CorpusError::ProbSumOutOfTolerance { step, sum } => {
                write!(f, "step {step}: probability sum out of tolerance (sum+tail = {sum})")
            }
            CorpusError::NonIncreasingProbs { step } => {
                write!(f, "step {step}: sorted_probs not non-increasing")
            }
            CorpusError::RealizedAboveTop { step } => {
                write!(f, "step {step}: realized probability exceeds top sorted probability")
            }
            CorpusError::NonnegligibleOutOfRange { step, count } => {
                write!(f, "step {step}: nonnegligible_count out of range ({count})")
            }
            CorpusError::TokenOutOfRange { step, token } => {
                write!(f, "step {step}: token id {token} outside [0, vocab_size)")
            }
            CorpusError::NonFiniteLogprob { step } => {
                write!(f, "step {step}: non-finite realized_logprob")
            }
            CorpusError::StepIndexMismatch { expected, found } => {
                write!(f, "trace step index mismatch: expected {expected}, found {found}")
            }
            CorpusError::SizeMismatch { expected, actual } => {
                write!(f, "matrix size mismatch: expected {expected} bytes, found {actual}")
            }
            CorpusError::TokenIdCount { expected, actual } => {
                write!(f, "token_ids length {actual} does not match row count {expected}")
            }
            CorpusError::NonFiniteRow { row } => {
                write!(f, "non-finite value in checked row {row}")
            }
            CorpusError::BadDimension { what } => write!(f, "invalid dimension: {what}"),
        }
    }
}

impl std::error::Error for CorpusError {}

fn io_err(path: &Path, source: std::io::Error) -> CorpusError {
    CorpusError::Io { path: path.display().to_string(), source }
}

// ── Generations ─────────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMethod {
    Nucleus,
    Greedy,
    Other,
}

/// One sampled continuation.
#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub sample_index: usize,
    pub text: String,
    /// Optional token ids; n-gram statistics fall back to whitespace
    /// tokenization when absent.
    pub token_ids: Option<Vec<i64>>,
}

/// One prompt plus its N sampled continuations.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationSet {
    pub prompt_id: String,
    pub prompt_text: String,
    pub model_label: String,
    pub sampling_method: SamplingMethod,
    pub nucleus_p: Option<f64>,
    /// Sorted by sample_index; indices form 0..N-1.
    pub generations: Vec<Generation>,
}

impl GenerationSet {
    pub fn len(&self) -> usize {
        self.generations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generations.is_empty()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.generations.iter().map(|g| g.text.as_str()).collect()
    }

    fn validate(&self) -> Result<(), CorpusError> {
        if self.prompt_id.is_empty() {
            return Err(CorpusError::EmptyPromptId { line: 0 });
        }
        if self.generations.is_empty() {
            return Err(CorpusError::NoGenerationSets { path: self.prompt_id.clone() });
        }
        for (k, g) in self.generations.iter().enumerate() {
            if g.sample_index != k {
                return Err(CorpusError::NonContiguousIndices {
                    prompt_id: self.prompt_id.clone(),
                });
            }
            if let Some(ids) = &g.token_ids {
                if ids.is_empty() && !g.text.is_empty() {
                    return Err(CorpusError::EmptyTokenIds {
                        prompt_id: self.prompt_id.clone(),
                        index: k,
                    });
                }
            }
        }
        match (self.sampling_method, self.nucleus_p) {
            (SamplingMethod::Nucleus, None) => {
                return Err(CorpusError::MissingNucleusP { prompt_id: self.prompt_id.clone() })
            }
            (_, Some(p)) if !(p > 0.0 && p <= 1.0) => {
                return Err(CorpusError::InvalidNucleusP {
                    prompt_id: self.prompt_id.clone(),
                    value: p,
                })
            }
            _ => {}
        }
        Ok(())
    }
}

/// One line of `generations.jsonl`.
#[derive(Debug, Serialize, Deserialize)]
struct GenerationRecord {
    prompt_id: String,
    prompt_text: String,
    model_label: String,
    sampling_method: SamplingMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nucleus_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sample_index: Option<usize>,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    token_ids: Option<Vec<i64>>,
}

/// Loads every generation set in a jsonl file, grouped by prompt_id in
/// first-appearance order. Sample indices are renumbered to arrival order
/// when absent; explicit indices must form 0..N-1 per prompt.
pub fn load_generation_sets(path: &Path) -> Result<Vec<GenerationSet>, CorpusError> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let path_s = path.display().to_string();

    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<GenerationRecord>> = HashMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: GenerationRecord = serde_json::from_str(&line).map_err(|e| {
            CorpusError::Malformed { path: path_s.clone(), line: lineno + 1, detail: e.to_string() }
        })?;
        if rec.prompt_id.is_empty() {
            return Err(CorpusError::EmptyPromptId { line: lineno + 1 });
        }
        if !groups.contains_key(&rec.prompt_id) {
            order.push(rec.prompt_id.clone());
        }
        groups.entry(rec.prompt_id.clone()).or_default().push(rec);
    }
    if order.is_empty() {
        return Err(CorpusError::NoGenerationSets { path: path_s });
    }

    let mut sets = Vec::with_capacity(order.len());
    for prompt_id in order {
        let records = groups.remove(&prompt_id).unwrap();
        sets.push(assemble_set(prompt_id, records)?);
    }
    Ok(sets)
}

/// Loads a file expected to contain exactly one generation set.
pub fn load_generation_set(path: &Path) -> Result<GenerationSet, CorpusError> {
    let mut sets = load_generation_sets(path)?;
    if sets.len() != 1 {
        return Err(CorpusError::InconsistentMetadata {
            prompt_id: format!("{} prompts in {}", sets.len(), path.display()),
            field: "prompt_id",
        });
    }
    Ok(sets.pop().unwrap())
}

fn assemble_set(
    prompt_id: String,
    records: Vec<GenerationRecord>,
) -> Result<GenerationSet, CorpusError> {
    let first = &records[0];
    let prompt_text = first.prompt_text.clone();
    let model_label = first.model_label.clone();
    let sampling_method = first.sampling_method;
    let nucleus_p = first.nucleus_p;
    for rec in &records {
        if rec.prompt_text != prompt_text {
            return Err(CorpusError::InconsistentMetadata { prompt_id, field: "prompt_text" });
        }
        if rec.model_label != model_label {
            return Err(CorpusError::InconsistentMetadata { prompt_id, field: "model_label" });
        }
        if rec.sampling_method != sampling_method {
            return Err(CorpusError::InconsistentMetadata { prompt_id, field: "sampling_method" });
        }
        if rec.nucleus_p != nucleus_p {
            return Err(CorpusError::InconsistentMetadata { prompt_id, field: "nucleus_p" });
        }
    }

    let explicit = records.iter().filter(|r| r.sample_index.is_some()).count();
    let generations: Vec<Generation> = if explicit == 0 {
        records
            .into_iter()
            .enumerate()
            .map(|(k, r)| Generation { sample_index: k, text: r.text, token_ids: r.token_ids })
            .collect()
    } else if explicit == records.len() {
        let n = records.len();
        let mut slots: Vec<Option<Generation>> = (0..n).map(|_| None).collect();
        for r in records {
            let idx = r.sample_index.unwrap();
            if idx >= n {
                return Err(CorpusError::NonContiguousIndices { prompt_id });
            }
            if slots[idx].is_some() {
                return Err(CorpusError::DuplicateSampleIndex { prompt_id, index: idx });
            }
            slots[idx] =
                Some(Generation { sample_index: idx, text: r.text, token_ids: r.token_ids });
        }
        slots.into_iter().map(|s| s.unwrap()).collect()
    } else {
        return Err(CorpusError::MixedIndexPresence { prompt_id });
    };

    let set = GenerationSet {
        prompt_id,
        prompt_text,
        model_label,
        sampling_method,
        nucleus_p,
        generations,
    };
    set.validate()?;
    Ok(set)
}

/// Writes generation sets back to jsonl; `load_generation_sets` on the result
/// reproduces the input field-for-field.
pub fn write_generation_sets(path: &Path, sets: &[GenerationSet]) -> Result<(), CorpusError> {
    let mut out = Vec::new();
    for set in sets {
        for g in &set.generations {
            let rec = GenerationRecord {
                prompt_id: set.prompt_id.clone(),
                prompt_text: set.prompt_text.clone(),
                model_label: set.model_label.clone(),
                sampling_method: set.sampling_method,
                nucleus_p: set.nucleus_p,
                sample_index: Some(g.sample_index),
                text: g.text.clone(),
                token_ids: g.token_ids.clone(),
            };
            serde_json::to_writer(&mut out, &rec).expect("jsonl record serializes");
            out.push(b'\n');
        }
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

// ── Probability traces ──────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceSource {
    /// Conditioning on human-authored text.
    Gold,
    /// Conditioning on the model's own sampled generation.
    SelfGenerated,
}

impl fmt::Display for TraceSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceSource::Gold => write!(f, "gold"),
            TraceSource::SelfGenerated => write!(f, "self_generated"),
        }
    }
}

/// Per-timestep next-token probability information. `sorted_probs` is
/// truncated at a dump-time floor; `tail_mass` carries the omitted mass and
/// `nonnegligible_count` is computed at dump time over the full distribution,
/// so it remains exact below the truncation floor.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub realized_token: i64,
    /// Natural log of the realized token's probability.
    pub realized_logprob: f64,
    pub sorted_probs: Vec<f64>,
    pub tail_mass: f64,
    pub nonnegligible_count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionTrace {
    pub vocab_size: u64,
    pub source: TraceSource,
    pub steps: Vec<TraceStep>,
}

impl DistributionTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.steps.is_empty() {
            return Err(CorpusError::EmptyTrace { path: String::from("<memory>") });
        }
        for (i, step) in self.steps.iter().enumerate() {
            validate_step(step, i, self.vocab_size)?;
        }
        Ok(())
    }
}

fn validate_step(step: &TraceStep, index: usize, vocab: u64) -> Result<(), CorpusError> {
    if step.sorted_probs.is_empty() {
        return Err(CorpusError::NonIncreasingProbs { step: index });
    }
    for w in step.sorted_probs.windows(2) {
        if w[1] > w[0] {
            return Err(CorpusError::NonIncreasingProbs { step: index });
        }
    }
    if step.sorted_probs.iter().any(|&p| p < 0.0) || step.tail_mass < 0.0 {
        return Err(CorpusError::NonIncreasingProbs { step: index });
    }
    let sum: f64 = step.sorted_probs.iter().sum::<f64>() + step.tail_mass;
    if !(sum - 1.0).abs().le(&PROB_SUM_TOLERANCE) {
        return Err(CorpusError::ProbSumOutOfTolerance { step: index, sum });
    }
    if !step.realized_logprob.is_finite() {
        return Err(CorpusError::NonFiniteLogprob { step: index });
    }
    if step.realized_logprob.exp() > step.sorted_probs[0] + 1e-9 {
        return Err(CorpusError::RealizedAboveTop { step: index });
    }
    if step.nonnegligible_count < 1 || step.nonnegligible_count > vocab {
        return Err(CorpusError::NonnegligibleOutOfRange {
            step: index,
            count: step.nonnegligible_count,
        });
    }
    if step.realized_token < 0 || step.realized_token as u64 >= vocab {
        return Err(CorpusError::TokenOutOfRange { step: index, token: step.realized_token });
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceHeader {
    vocab_size: u64,
    source: TraceSource,
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceRecord {
    step: usize,
    realized_token: i64,
    realized_logprob: f64,
    sorted_probs: Vec<f64>,
    tail_mass: f64,
    nonnegligible_count: u64,
}

/// Loads and validates a trace file (header line, then one step per line).
pub fn load_trace(path: &Path) -> Result<DistributionTrace, CorpusError> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let path_s = path.display().to_string();

    let mut lines = reader.lines().enumerate();
    let header: TraceHeader = loop {
        match lines.next() {
            Some((lineno, line)) => {
                let line = line.map_err(|e| io_err(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                break serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                    path: path_s.clone(),
                    line: lineno + 1,
                    detail: e.to_string(),
                })?;
            }
            None => return Err(CorpusError::MissingTraceHeader { path: path_s }),
        }
    };

    let mut steps = Vec::new();
    for (lineno, line) in lines {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TraceRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            path: path_s.clone(),
            line: lineno + 1,
            detail: e.to_string(),
        })?;
        if rec.step != steps.len() {
            return Err(CorpusError::StepIndexMismatch { expected: steps.len(), found: rec.step });
        }
        let step = TraceStep {
            realized_token: rec.realized_token,
            realized_logprob: rec.realized_logprob,
            sorted_probs: rec.sorted_probs,
            tail_mass: rec.tail_mass,
            nonnegligible_count: rec.nonnegligible_count,
        };
        validate_step(&step, steps.len(), header.vocab_size)?;
        steps.push(step);
    }
    if steps.is_empty() {
        return Err(CorpusError::EmptyTrace { path: path_s });
    }
    Ok(DistributionTrace { vocab_size: header.vocab_size, source: header.source, steps })
}

pub fn write_trace(path: &Path, trace: &DistributionTrace) -> Result<(), CorpusError> {
    let mut out = Vec::new();
    let header = TraceHeader { vocab_size: trace.vocab_size, source: trace.source };
    serde_json::to_writer(&mut out, &header).expect("trace header serializes");
    out.push(b'\n');
    for (i, step) in trace.steps.iter().enumerate() {
        let rec = TraceRecord {
            step: i,
            realized_token: step.realized_token,
            realized_logprob: step.realized_logprob,
            sorted_probs: step.sorted_probs.clone(),
            tail_mass: step.tail_mass,
            nonnegligible_count: step.nonnegligible_count,
        };
        serde_json::to_writer(&mut out, &rec).expect("trace record serializes");
        out.push(b'\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

// ── Hidden states ───────────────────────────────────────────────────────────

/// A T x d matrix of hidden activations with the token generated at each
/// position. Rows are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenStateDataset {
    pub hidden_dim: usize,
    pub layer_index: i64,
    pub vocab_size: usize,
    pub token_ids: Vec<i64>,
    rows: Vec<f32>,
}

impl HiddenStateDataset {
    pub fn new(
        hidden_dim: usize,
        layer_index: i64,
        vocab_size: usize,
        token_ids: Vec<i64>,
        rows: Vec<f32>,
    ) -> Result<Self, CorpusError> {
        if hidden_dim == 0 {
            return Err(CorpusError::BadDimension { what: "hidden_dim must be positive" });
        }
        if rows.len() % hidden_dim != 0 {
            return Err(CorpusError::SizeMismatch {
                expected: (token_ids.len() * hidden_dim * 4) as u64,
                actual: (rows.len() * 4) as u64,
            });
        }
        let t = rows.len() / hidden_dim;
        if token_ids.len() != t {
            return Err(CorpusError::TokenIdCount { expected: t, actual: token_ids.len() });
        }
        for (i, &id) in token_ids.iter().enumerate() {
            if id < 0 || id as usize >= vocab_size {
                return Err(CorpusError::TokenOutOfRange { step: i, token: id });
            }
        }
        Ok(HiddenStateDataset { hidden_dim, layer_index, vocab_size, token_ids, rows })
    }

    pub fn num_rows(&self) -> usize {
        self.token_ids.len()
    }

    pub fn row(&self, t: usize) -> &[f32] {
        &self.rows[t * self.hidden_dim..(t + 1) * self.hidden_dim]
    }

    pub fn raw(&self) -> &[f32] {
        &self.rows
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct HiddenMeta {
    t: usize,
    d: usize,
    v: usize,
    layer_index: i64,
    token_ids: Vec<i64>,
}

/// Loads a hidden-state dump: JSON sidecar plus raw little-endian f32 matrix.
/// Values are not copy-validated beyond a finiteness check of the first and
/// last rows.
pub fn load_hidden_states(
    meta_path: &Path,
    matrix_path: &Path,
) -> Result<HiddenStateDataset, CorpusError> {
    let meta_text = fs::read_to_string(meta_path).map_err(|e| io_err(meta_path, e))?;
    let meta: HiddenMeta = serde_json::from_str(&meta_text).map_err(|e| CorpusError::Malformed {
        path: meta_path.display().to_string(),
        line: 1,
        detail: e.to_string(),
    })?;
    if meta.d == 0 || meta.t == 0 {
        return Err(CorpusError::BadDimension { what: "t and d must be positive" });
    }

    let expected = (meta.t as u64) * (meta.d as u64) * 4;
    let actual = fs::metadata(matrix_path).map_err(|e| io_err(matrix_path, e))?.len();
    if expected != actual {
        return Err(CorpusError::SizeMismatch { expected, actual });
    }

    let mut file = fs::File::open(matrix_path).map_err(|e| io_err(matrix_path, e))?;
    let mut bytes = Vec::with_capacity(actual as usize);
    file.read_to_end(&mut bytes).map_err(|e| io_err(matrix_path, e))?;
    let mut rows = Vec::with_capacity(meta.t * meta.d);
    for chunk in bytes.chunks_exact(4) {
        rows.push(f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]));
    }

    let ds = HiddenStateDataset::new(meta.d, meta.layer_index, meta.v, meta.token_ids, rows)?;
    for &t in &[0, ds.num_rows() - 1] {
        if ds.row(t).iter().any(|x| !x.is_finite()) {
            return Err(CorpusError::NonFiniteRow { row: t });
        }
    }
    Ok(ds)
}

pub fn write_hidden_states(
    meta_path: &Path,
    matrix_path: &Path,
    ds: &HiddenStateDataset,
) -> Result<(), CorpusError> {
    let meta = HiddenMeta {
        t: ds.num_rows(),
        d: ds.hidden_dim,
        v: ds.vocab_size,
        layer_index: ds.layer_index,
        token_ids: ds.token_ids.clone(),
    };
    let mut meta_out = serde_json::to_vec(&meta).expect("hidden meta serializes");
    meta_out.push(b'\n');
    fs::write(meta_path, meta_out).map_err(|e| io_err(meta_path, e))?;

    let file = fs::File::create(matrix_path).map_err(|e| io_err(matrix_path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for &x in ds.raw() {
        w.write_all(&x.to_le_bytes()).map_err(|e| io_err(matrix_path, e))?;
    }
    w.flush().map_err(|e| io_err(matrix_path, e))
}
