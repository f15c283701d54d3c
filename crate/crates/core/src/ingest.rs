//! Dataset ingestion: parses the on-disk JSONL/CSV formats, resolves guess
//! correctness via normalized alias matching with a manual-override table,
//! and extracts confidence values from raw model output.

use crate::metrics::ShConversionMode;
use crate::model::{
    validate_dataset, validate_surveys, BuzzRecord, Channel, Correctness, GuessTrace, Question,
    SurveyResponse, ValidationReport,
};
use regex::Regex;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::OnceLock;
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    MalformedLine { path: String, line: usize, message: String },
    #[error("duplicate qid {qid}")]
    DuplicateQid { qid: String },
    #[error("{qid}: clue {index} is empty")]
    EmptyClue { qid: String, index: usize },
    #[error("empty token list")]
    EmptyTokenList,
}

/// How guesses matching a prompt alias are scored. The live competition's
/// moderator would ask for a more specific answer; offline that is not
/// possible, so the policy is explicit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptPolicy {
    #[default]
    Incorrect,
    Correct,
}

/// Manual correctness overrides keyed by (qid, normalized guess). Entries
/// take precedence over every matching rule.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OverrideTable {
    entries: BTreeMap<(String, String), bool>,
}

impl OverrideTable {
    pub fn insert(&mut self, qid: &str, guess: &str, correct: bool) {
        self.entries.insert((qid.to_string(), normalize_answer(guess)), correct);
    }

    pub fn lookup(&self, qid: &str, guess: &str) -> Option<bool> {
        self.entries.get(&(qid.to_string(), normalize_answer(guess))).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Run-wide knobs shared by the metric, buzzer and report paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Restrict metric runs to one channel; `None` means every channel for
    /// which data exists.
    pub channel: Option<Channel>,
    pub prompt_policy: PromptPolicy,
    /// Buzz thresholds per model id (or family substring), log-probability
    /// domain unless overridden.
    pub thresholds: BTreeMap<String, f64>,
    pub ece_bins: usize,
    pub sh_conversion: ShConversionMode,
    pub payoff_penalty: f64,
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            channel: None,
            prompt_policy: PromptPolicy::default(),
            thresholds: BTreeMap::new(),
            ece_bins: 10,
            sh_conversion: ShConversionMode::default(),
            payoff_penalty: 0.5,
            seed: 0,
        }
    }
}

/// Everything one evaluation run consumes.
#[derive(Debug, Clone, Default)]
pub struct DatasetBundle {
    pub questions: Vec<Question>,
    pub traces: Vec<GuessTrace>,
    pub buzzes: Vec<BuzzRecord>,
    pub surveys: Vec<SurveyResponse>,
    pub overrides: OverrideTable,
    pub config: EngineConfig,
}

impl DatasetBundle {
    /// Structural validation of every record against the question set.
    pub fn validate(&self) -> ValidationReport {
        let mut report = validate_dataset(&self.questions, &self.traces, &self.buzzes);
        report.violations.extend(validate_surveys(&self.questions, &self.surveys));
        report
    }

    /// Resolves the correctness of every trace step: a manual override wins,
    /// an already-judged flag is kept, otherwise the guess is matched against
    /// the answer line.
    pub fn resolve_correctness(&mut self) {
        let specs: BTreeMap<String, _> =
            self.questions.iter().map(|q| (q.qid.clone(), q.answer.clone())).collect();
        for trace in &mut self.traces {
            let Some(spec) = specs.get(&trace.qid) else { continue };
            for step in &mut trace.steps {
                if let Some(correct) = self.overrides.lookup(&trace.qid, &step.guess) {
                    step.correct = Correctness::from_bool(correct);
                } else if step.correct.is_unresolved() {
                    step.correct = match_answer(&step.guess, spec, self.config.prompt_policy);
                }
            }
        }
    }

    /// Distinct model ids appearing in the traces, sorted.
    pub fn model_ids(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.traces.iter().map(|t| t.model_id.as_str()).collect();
        set.into_iter().map(String::from).collect()
    }

    /// Channels for which at least one step carries a value.
    pub fn available_channels(&self) -> Vec<Channel> {
        let mut channels = Vec::new();
        for channel in [Channel::Logit, Channel::Verbalized] {
            if self
                .traces
                .iter()
                .any(|t| t.steps.iter().any(|s| s.channel_value(channel).is_some()))
            {
                channels.push(channel);
            }
        }
        channels
    }
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>, IngestError> {
    let file = File::open(path)
        .map_err(|source| IngestError::Io { path: path.display().to_string(), source })?;
    let mut lines = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line
            .map_err(|source| IngestError::Io { path: path.display().to_string(), source })?;
        if !line.trim().is_empty() {
            lines.push((idx + 1, line));
        }
    }
    Ok(lines)
}

fn parse_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IngestError> {
    read_lines(path)?
        .into_iter()
        .map(|(line, text)| {
            serde_json::from_str(&text).map_err(|e| IngestError::MalformedLine {
                path: path.display().to_string(),
                line,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Parses questions.jsonl, preserving clue order and rejecting duplicate
/// qids and empty clues at the door.
pub fn parse_questions(path: &Path) -> Result<Vec<Question>, IngestError> {
    let questions: Vec<Question> = parse_jsonl(path)?;
    let mut seen = BTreeSet::new();
    for q in &questions {
        if !seen.insert(q.qid.clone()) {
            return Err(IngestError::DuplicateQid { qid: q.qid.clone() });
        }
        for (index, clue) in q.clues.iter().enumerate() {
            if clue.trim().is_empty() {
                return Err(IngestError::EmptyClue { qid: q.qid.clone(), index });
            }
        }
    }
    Ok(questions)
}

pub fn parse_traces(path: &Path) -> Result<Vec<GuessTrace>, IngestError> {
    parse_jsonl(path)
}

pub fn parse_buzzes(path: &Path) -> Result<Vec<BuzzRecord>, IngestError> {
    parse_jsonl(path)
}

pub fn parse_surveys(path: &Path) -> Result<Vec<SurveyResponse>, IngestError> {
    parse_jsonl(path)
}

/// Parses overrides.csv (`qid,guess,correct` with a header row).
pub fn parse_overrides(path: &Path) -> Result<OverrideTable, IngestError> {
    #[derive(Deserialize)]
    struct Row {
        qid: String,
        guess: String,
        correct: bool,
    }
    let mut reader = csv::Reader::from_path(path).map_err(|e| IngestError::MalformedLine {
        path: path.display().to_string(),
        line: 0,
        message: e.to_string(),
    })?;
    let mut table = OverrideTable::default();
    for (idx, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| IngestError::MalformedLine {
            path: path.display().to_string(),
            line: idx + 2,
            message: e.to_string(),
        })?;
        table.insert(&row.qid, &row.guess, row.correct);
    }
    Ok(table)
}

/// Normalizes an answer string for comparison: lowercase, NFKD with
/// diacritics stripped, punctuation dropped, leading articles removed,
/// whitespace collapsed.
pub fn normalize_answer(s: &str) -> String {
    let stripped: String = s
        .to_lowercase()
        .nfkd()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .collect();
    let mut words: Vec<&str> = stripped.split_whitespace().collect();
    while let Some(first) = words.first() {
        if matches!(*first, "the" | "a" | "an") {
            words.remove(0);
        } else {
            break;
        }
    }
    words.join(" ")
}

/// Matches a guess against an answer line. Returns `Unresolved` when the
/// guess is empty after normalization (nothing to judge).
pub fn match_answer(guess: &str, spec: &crate::model::AnswerSpec, policy: PromptPolicy) -> Correctness {
    let norm = normalize_answer(guess);
    if norm.is_empty() {
        return Correctness::Unresolved;
    }
    if norm == normalize_answer(&spec.canonical)
        || spec.accept_aliases.iter().any(|a| normalize_answer(a) == norm)
    {
        return Correctness::Correct;
    }
    if spec.prompt_aliases.iter().any(|a| normalize_answer(a) == norm) {
        return match policy {
            PromptPolicy::Correct => Correctness::Correct,
            PromptPolicy::Incorrect => Correctness::Incorrect,
        };
    }
    Correctness::Incorrect
}

fn probability_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)probability[^0-9+-]{0,12}(-?\d+(?:\.\d+)?)").unwrap())
}

fn decimal_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"-?\d+\.\d+").unwrap())
}

/// Pulls a verbalized confidence out of raw model output.
///
/// Ladder: the last "Probability: x" style match wins, with percent-style
/// values in (1,100] divided by 100; failing that, the last standalone
/// decimal already in [0,1]; failing that, absent. Never returns a value
/// outside [0,1].
pub fn extract_verbalized_confidence(raw_output: &str) -> Option<f64> {
    if let Some(caps) = probability_pattern().captures_iter(raw_output).last() {
        if let Ok(v) = caps[1].parse::<f64>() {
            if (0.0..=1.0).contains(&v) {
                return Some(v);
            }
            if v > 1.0 && v <= 100.0 {
                return Some(v / 100.0);
            }
            // Out-of-scale label; fall through to the standalone-decimal scan.
        }
    }
    let bytes = raw_output.as_bytes();
    let mut best = None;
    for m in decimal_pattern().find_iter(raw_output) {
        let before_ok = m.start() == 0
            || !bytes[..m.start()]
                .last()
                .map(|&b| (b as char).is_alphanumeric() || b == b'.')
                .unwrap_or(false);
        let after_ok =
            !bytes.get(m.end()).map(|&b| (b as char).is_ascii_digit()).unwrap_or(false);
        if !(before_ok && after_ok) {
            continue;
        }
        if let Ok(v) = m.as_str().parse::<f64>() {
            if (0.0..=1.0).contains(&v) {
                best = Some(v);
            }
        }
    }
    best
}

/// Collapses per-token log-probabilities into the two stored confidence
/// forms: `logit_conf` (mean of exponentials, in (0,1] for non-positive
/// inputs) and `logprob_sum` (plain sum, used for buzz thresholding).
pub fn aggregate_logit_confidence(token_logprobs: &[f64]) -> Result<(f64, f64), IngestError> {
    if token_logprobs.is_empty() {
        return Err(IngestError::EmptyTokenList);
    }
    let mean_exp =
        token_logprobs.iter().map(|lp| lp.exp()).sum::<f64>() / token_logprobs.len() as f64;
    let sum: f64 = token_logprobs.iter().sum();
    Ok((mean_exp, sum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AnswerSpec;

    fn brooklyn_spec() -> AnswerSpec {
        AnswerSpec {
            canonical: "Brooklyn".to_string(),
            accept_aliases: ["Kings County".to_string()].into(),
            prompt_aliases: ["New York City".to_string()].into(),
        }
    }

    #[test]
    fn match_accept_alias() {
        let spec = brooklyn_spec();
        assert_eq!(
            match_answer("Kings County", &spec, PromptPolicy::Incorrect),
            Correctness::Correct
        );
    }

    #[test]
    fn match_canonical_case_insensitive() {
        let spec = brooklyn_spec();
        assert_eq!(match_answer("brooklyn", &spec, PromptPolicy::Incorrect), Correctness::Correct);
    }

    #[test]
    fn prompt_alias_follows_policy() {
        let spec = brooklyn_spec();
        assert_eq!(
            match_answer("New York City", &spec, PromptPolicy::Incorrect),
            Correctness::Incorrect
        );
        assert_eq!(
            match_answer("New York City", &spec, PromptPolicy::Correct),
            Correctness::Correct
        );
    }

    #[test]
    fn normalization_strips_articles_diacritics_punctuation() {
        assert_eq!(normalize_answer("The  Célestine's prophecy!"), "celestines prophecy");
        assert_eq!(normalize_answer("  an Apple  "), "apple");
        assert_eq!(normalize_answer("cogito, ergo sum"), "cogito ergo sum");
    }

    #[test]
    fn empty_guess_is_unresolved() {
        let spec = brooklyn_spec();
        assert_eq!(match_answer("  ?!  ", &spec, PromptPolicy::Incorrect), Correctness::Unresolved);
    }

    #[test]
    fn override_beats_matching() {
        let mut overrides = OverrideTable::default();
        overrides.insert("q1", "Kings County", false);
        assert_eq!(overrides.lookup("q1", "kings county"), Some(false));
        assert_eq!(overrides.lookup("q2", "kings county"), None);
    }

    #[test]
    fn verbalized_direct_pattern() {
        assert_eq!(
            extract_verbalized_confidence("The answer is: Brooklyn\nProbability: 0.85"),
            Some(0.85)
        );
    }

    #[test]
    fn verbalized_percent_style() {
        assert_eq!(extract_verbalized_confidence("Probability: 85"), Some(0.85));
    }

    #[test]
    fn verbalized_no_match() {
        assert_eq!(extract_verbalized_confidence("I do not know"), None);
    }

    #[test]
    fn verbalized_standalone_decimal_fallback() {
        assert_eq!(extract_verbalized_confidence("confidence is about 0.7 I think"), Some(0.7));
        assert_eq!(extract_verbalized_confidence("version 1.2.3 of the spec"), None);
    }

    #[test]
    fn logit_aggregation() {
        assert_eq!(aggregate_logit_confidence(&[0.0]).unwrap(), (1.0, 0.0));
        let (conf, sum) = aggregate_logit_confidence(&[-1.0, -1.0]).unwrap();
        assert!((conf - (-1.0f64).exp()).abs() < 1e-12);
        assert_eq!(sum, -2.0);
        assert!(matches!(aggregate_logit_confidence(&[]), Err(IngestError::EmptyTokenList)));
    }
}
