//! Shared domain types for incremental question answering with buzz data.
//!
//! A question is an ordered sequence of clues leading to one answer. Teams
//! (human or model) may interrupt the reading at any clue to answer; the
//! interruption is a buzz. Model behaviour is captured per clue as a
//! [`GuessStep`] inside a [`GuessTrace`]; human behaviour is captured as
//! [`BuzzRecord`]s from live matches and [`SurveyResponse`]s from offline
//! surveys.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

/// Top-level question categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Literature,
    History,
    Science,
    Arts,
    SocialScience,
    GeoCe,
    Other,
}

impl Category {
    pub fn as_str(&self) -> &'static str {
        match self {
            Category::Literature => "literature",
            Category::History => "history",
            Category::Science => "science",
            Category::Arts => "arts",
            Category::SocialScience => "social_science",
            Category::GeoCe => "geo_ce",
            Category::Other => "other",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Canonical answer plus accepted and prompt-only aliases.
///
/// Prompt aliases are answers a moderator would prompt on ("be more
/// specific"); whether they count as correct is a scoring policy decision,
/// not a property of the answer line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerSpec {
    pub canonical: String,
    #[serde(rename = "accept", default, skip_serializing_if = "BTreeSet::is_empty")]
    pub accept_aliases: BTreeSet<String>,
    #[serde(rename = "prompt", default, skip_serializing_if = "BTreeSet::is_empty")]
    pub prompt_aliases: BTreeSet<String>,
}

/// One question: an ordered clue sequence and its answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub qid: String,
    pub category: Category,
    pub clues: Vec<String>,
    pub answer: AnswerSpec,
}

impl Question {
    pub fn n_clues(&self) -> usize {
        self.clues.len()
    }

    /// Word-span fractions per clue: clue `i` covers `(start_i, end_i]` of the
    /// question's total word count. A buzz at clue `i` must carry a
    /// `position_frac` inside that span.
    pub fn clue_word_spans(&self) -> Vec<(f64, f64)> {
        let counts: Vec<usize> = self.clues.iter().map(|c| c.split_whitespace().count()).collect();
        let total: usize = counts.iter().sum();
        if total == 0 {
            return vec![(0.0, 0.0); self.clues.len()];
        }
        let mut spans = Vec::with_capacity(counts.len());
        let mut cum = 0usize;
        for count in counts {
            let start = cum as f64 / total as f64;
            cum += count;
            spans.push((start, cum as f64 / total as f64));
        }
        spans
    }

    /// Fraction of the question's words revealed once clue `t` has been read
    /// in full.
    pub fn clue_end_frac(&self, t: usize) -> f64 {
        self.clue_word_spans().get(t).map(|&(_, end)| end).unwrap_or(1.0)
    }
}

/// Ternary guess correctness.
///
/// `Unresolved` is legal at ingest (correctness not yet judged) but must be
/// resolved by alias matching or a manual override before any metric runs.
/// The signed (+1/-1) and binary (1/0) views used by different metric
/// families come from the same discriminant, so they cannot disagree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Correctness {
    Correct,
    Incorrect,
    #[default]
    Unresolved,
}

impl Correctness {
    pub fn from_bool(correct: bool) -> Self {
        if correct {
            Correctness::Correct
        } else {
            Correctness::Incorrect
        }
    }

    pub fn is_unresolved(&self) -> bool {
        matches!(self, Correctness::Unresolved)
    }

    /// +1.0 / -1.0 view used by the CalScore metric family.
    pub fn signed(&self) -> Option<f64> {
        match self {
            Correctness::Correct => Some(1.0),
            Correctness::Incorrect => Some(-1.0),
            Correctness::Unresolved => None,
        }
    }

    /// 1.0 / 0.0 view used by ECE and Brier.
    pub fn binary(&self) -> Option<f64> {
        match self {
            Correctness::Correct => Some(1.0),
            Correctness::Incorrect => Some(0.0),
            Correctness::Unresolved => None,
        }
    }
}

/// On disk, correctness is an optional bool: absent or null means unresolved.
mod correctness_serde {
    use super::Correctness;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(c: &Correctness, s: S) -> Result<S::Ok, S::Error> {
        match c {
            Correctness::Correct => s.serialize_bool(true),
            Correctness::Incorrect => s.serialize_bool(false),
            Correctness::Unresolved => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Correctness, D::Error> {
        Ok(match Option::<bool>::deserialize(d)? {
            Some(true) => Correctness::Correct,
            Some(false) => Correctness::Incorrect,
            None => Correctness::Unresolved,
        })
    }
}

/// A model's guess and confidence after seeing the first `t + 1` clues.
///
/// Two continuous confidence channels may be present: `logit_conf` (mean of
/// exponentiated token log-probabilities, in [0,1]) and `verbalized_conf`
/// (a probability the model states in its own output). `logprob_sum` is the
/// summed token log-probabilities, kept separately for buzz thresholding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuessStep {
    pub t: usize,
    pub guess: String,
    #[serde(default, with = "correctness_serde", skip_serializing_if = "Correctness::is_unresolved")]
    pub correct: Correctness,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logit_conf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verbalized_conf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logprob_sum: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_output: Option<String>,
}

impl GuessStep {
    pub fn has_any_channel(&self) -> bool {
        self.logit_conf.is_some() || self.verbalized_conf.is_some() || self.logprob_sum.is_some()
    }

    /// Value of a continuous confidence channel on this step, if present.
    pub fn channel_value(&self, channel: Channel) -> Option<f64> {
        match channel {
            Channel::Logit => self.logit_conf,
            Channel::Verbalized => self.verbalized_conf,
        }
    }
}

/// Per-clue guesses of one model on one question, exactly one step per clue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuessTrace {
    pub qid: String,
    pub model_id: String,
    pub steps: Vec<GuessStep>,
}

/// A team's interruption on one question in one match.
///
/// `t` is the clue during which the buzz happened; `position_frac` is the
/// fraction of the question's words revealed at the buzz, which must fall
/// inside clue `t`'s word span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuzzRecord {
    pub qid: String,
    pub team_id: String,
    pub match_id: String,
    pub t: usize,
    pub position_frac: f64,
    pub correct: bool,
}

/// One survey answer: a player's guess after clue `t` plus whether they
/// would have buzzed there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyResponse {
    pub player_id: String,
    pub qid: String,
    pub t: usize,
    pub guess: String,
    pub correct: bool,
    pub would_buzz: bool,
}

/// Cumulative human correct-buzz probability per clue of one question.
///
/// `h[t]` = correct buzzes up to clue `t` over total buzzes up to clue `t`,
/// and 0 where no buzzes exist yet (`support[t] == 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanCurve {
    pub qid: String,
    pub h: Vec<f64>,
    pub support: Vec<u32>,
}

/// Which continuous confidence channel a metric run reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Logit,
    Verbalized,
}

impl Channel {
    pub fn as_str(&self) -> &'static str {
        match self {
            Channel::Logit => "logit",
            Channel::Verbalized => "verbalized",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-question metric values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerQuestionMetrics {
    pub calscore: f64,
    pub mce: f64,
    pub sh_q: f64,
    pub n_clues: usize,
}

/// Aggregate metric values over a set of questions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub calscore_d: f64,
    pub mce_d: f64,
    pub ece: f64,
    pub brier: f64,
    pub sh_q_mean: f64,
}

/// A step excluded from a metric run and why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedStep {
    pub qid: String,
    pub t: usize,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    MissingChannel,
    UnresolvedCorrectness,
}

/// Full metric output for one (model, channel) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub model_id: String,
    pub confidence_channel: Channel,
    pub per_question: BTreeMap<String, PerQuestionMetrics>,
    pub aggregate: AggregateMetrics,
    pub per_category: BTreeMap<Category, AggregateMetrics>,
    /// Steps excluded from the run (missing channel or unresolved
    /// correctness). Never imputed.
    pub skipped: Vec<SkippedStep>,
}

/// One problem found while validating a dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DuplicateQid { qid: String },
    EmptyClueList { qid: String },
    EmptyClue { qid: String, index: usize },
    EmptyCanonical { qid: String },
    CanonicalIsPromptAlias { qid: String },
    UnknownQid { qid: String, source: String },
    DuplicateTrace { qid: String, model_id: String },
    MissingStep { qid: String, model_id: String, t: usize },
    DuplicateStep { qid: String, model_id: String, t: usize },
    StepOutOfRange { qid: String, model_id: String, t: usize, n_clues: usize },
    ConfidenceOutOfRange { qid: String, model_id: String, t: usize, field: String, value: f64 },
    NoConfidenceChannel { qid: String, model_id: String, t: usize },
    BuzzClueOutOfRange { qid: String, team_id: String, t: usize, n_clues: usize },
    PositionFracOutOfRange { qid: String, team_id: String, position_frac: f64 },
    InconsistentPositionFrac { qid: String, team_id: String, t: usize, position_frac: f64 },
    SurveyClueOutOfRange { qid: String, player_id: String, t: usize, n_clues: usize },
    DuplicateSurveyResponse { qid: String, player_id: String, t: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateQid { qid } => write!(f, "duplicate qid {qid}"),
            Violation::EmptyClueList { qid } => write!(f, "{qid}: clue list is empty"),
            Violation::EmptyClue { qid, index } => write!(f, "{qid}: clue {index} is empty"),
            Violation::EmptyCanonical { qid } => write!(f, "{qid}: canonical answer is empty"),
            Violation::CanonicalIsPromptAlias { qid } => {
                write!(f, "{qid}: canonical answer listed as a prompt alias")
            }
            Violation::UnknownQid { qid, source } => write!(f, "{source}: unknown qid {qid}"),
            Violation::DuplicateTrace { qid, model_id } => {
                write!(f, "duplicate trace for ({qid}, {model_id})")
            }
            Violation::MissingStep { qid, model_id, t } => {
                write!(f, "trace ({qid}, {model_id}): missing step t={t}")
            }
            Violation::DuplicateStep { qid, model_id, t } => {
                write!(f, "trace ({qid}, {model_id}): duplicate step t={t}")
            }
            Violation::StepOutOfRange { qid, model_id, t, n_clues } => {
                write!(f, "trace ({qid}, {model_id}): step t={t} outside [0,{n_clues})")
            }
            Violation::ConfidenceOutOfRange { qid, model_id, t, field, value } => {
                write!(f, "trace ({qid}, {model_id}) t={t}: {field}={value} out of range")
            }
            Violation::NoConfidenceChannel { qid, model_id, t } => {
                write!(f, "trace ({qid}, {model_id}) t={t}: no confidence channel present")
            }
            Violation::BuzzClueOutOfRange { qid, team_id, t, n_clues } => {
                write!(f, "buzz ({qid}, {team_id}): t={t} outside [0,{n_clues})")
            }
            Violation::PositionFracOutOfRange { qid, team_id, position_frac } => {
                write!(f, "buzz ({qid}, {team_id}): position_frac={position_frac} outside (0,1]")
            }
            Violation::InconsistentPositionFrac { qid, team_id, t, position_frac } => {
                write!(
                    f,
                    "buzz ({qid}, {team_id}): position_frac={position_frac} outside clue {t}'s word span"
                )
            }
            Violation::SurveyClueOutOfRange { qid, player_id, t, n_clues } => {
                write!(f, "survey ({qid}, {player_id}): t={t} outside [0,{n_clues})")
            }
            Violation::DuplicateSurveyResponse { qid, player_id, t } => {
                write!(f, "survey: duplicate response ({player_id}, {qid}, t={t})")
            }
        }
    }
}

/// Outcome of dataset validation. Problems are reported, never thrown.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

const SPAN_TOLERANCE: f64 = 1e-9;

/// Checks the structural invariants of a dataset and returns every violation
/// found. An empty report means the dataset is safe to run metrics on.
pub fn validate_dataset(
    questions: &[Question],
    traces: &[GuessTrace],
    buzzes: &[BuzzRecord],
) -> ValidationReport {
    let mut violations = Vec::new();
    let mut by_qid: HashMap<&str, &Question> = HashMap::new();

    for q in questions {
        if by_qid.insert(q.qid.as_str(), q).is_some() {
            violations.push(Violation::DuplicateQid { qid: q.qid.clone() });
        }
        if q.clues.is_empty() {
            violations.push(Violation::EmptyClueList { qid: q.qid.clone() });
        }
        for (index, clue) in q.clues.iter().enumerate() {
            if clue.trim().is_empty() {
                violations.push(Violation::EmptyClue { qid: q.qid.clone(), index });
            }
        }
        if q.answer.canonical.trim().is_empty() {
            violations.push(Violation::EmptyCanonical { qid: q.qid.clone() });
        }
        if q.answer.prompt_aliases.contains(&q.answer.canonical) {
            violations.push(Violation::CanonicalIsPromptAlias { qid: q.qid.clone() });
        }
    }

    let mut seen_traces: HashSet<(&str, &str)> = HashSet::new();
    for trace in traces {
        let Some(q) = by_qid.get(trace.qid.as_str()) else {
            violations.push(Violation::UnknownQid {
                qid: trace.qid.clone(),
                source: format!("trace for model {}", trace.model_id),
            });
            continue;
        };
        if !seen_traces.insert((trace.qid.as_str(), trace.model_id.as_str())) {
            violations.push(Violation::DuplicateTrace {
                qid: trace.qid.clone(),
                model_id: trace.model_id.clone(),
            });
        }
        let n = q.n_clues();
        let mut seen_t = vec![false; n];
        for step in &trace.steps {
            if step.t >= n {
                violations.push(Violation::StepOutOfRange {
                    qid: trace.qid.clone(),
                    model_id: trace.model_id.clone(),
                    t: step.t,
                    n_clues: n,
                });
            } else if seen_t[step.t] {
                violations.push(Violation::DuplicateStep {
                    qid: trace.qid.clone(),
                    model_id: trace.model_id.clone(),
                    t: step.t,
                });
            } else {
                seen_t[step.t] = true;
            }
            for (field, value) in
                [("logit_conf", step.logit_conf), ("verbalized_conf", step.verbalized_conf)]
            {
                if let Some(v) = value {
                    if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                        violations.push(Violation::ConfidenceOutOfRange {
                            qid: trace.qid.clone(),
                            model_id: trace.model_id.clone(),
                            t: step.t,
                            field: field.to_string(),
                            value: v,
                        });
                    }
                }
            }
            if let Some(v) = step.logprob_sum {
                if v > 0.0 || !v.is_finite() {
                    violations.push(Violation::ConfidenceOutOfRange {
                        qid: trace.qid.clone(),
                        model_id: trace.model_id.clone(),
                        t: step.t,
                        field: "logprob_sum".to_string(),
                        value: v,
                    });
                }
            }
            if !step.has_any_channel() {
                violations.push(Violation::NoConfidenceChannel {
                    qid: trace.qid.clone(),
                    model_id: trace.model_id.clone(),
                    t: step.t,
                });
            }
        }
        for (t, seen) in seen_t.iter().enumerate() {
            if !seen {
                violations.push(Violation::MissingStep {
                    qid: trace.qid.clone(),
                    model_id: trace.model_id.clone(),
                    t,
                });
            }
        }
    }

    for buzz in buzzes {
        let Some(q) = by_qid.get(buzz.qid.as_str()) else {
            violations.push(Violation::UnknownQid {
                qid: buzz.qid.clone(),
                source: format!("buzz by team {}", buzz.team_id),
            });
            continue;
        };
        let n = q.n_clues();
        if buzz.t >= n {
            violations.push(Violation::BuzzClueOutOfRange {
                qid: buzz.qid.clone(),
                team_id: buzz.team_id.clone(),
                t: buzz.t,
                n_clues: n,
            });
            continue;
        }
        if !(buzz.position_frac > 0.0 && buzz.position_frac <= 1.0) {
            violations.push(Violation::PositionFracOutOfRange {
                qid: buzz.qid.clone(),
                team_id: buzz.team_id.clone(),
                position_frac: buzz.position_frac,
            });
            continue;
        }
        let (start, end) = q.clue_word_spans()[buzz.t];
        if buzz.position_frac <= start - SPAN_TOLERANCE || buzz.position_frac > end + SPAN_TOLERANCE
        {
            violations.push(Violation::InconsistentPositionFrac {
                qid: buzz.qid.clone(),
                team_id: buzz.team_id.clone(),
                t: buzz.t,
                position_frac: buzz.position_frac,
            });
        }
    }

    ValidationReport { violations }
}

/// Survey-specific checks, run on top of [`validate_dataset`] when a bundle
/// carries survey responses.
pub fn validate_surveys(questions: &[Question], surveys: &[SurveyResponse]) -> Vec<Violation> {
    let mut violations = Vec::new();
    let by_qid: HashMap<&str, &Question> = questions.iter().map(|q| (q.qid.as_str(), q)).collect();
    let mut seen: HashSet<(&str, &str, usize)> = HashSet::new();

    for resp in surveys {
        let Some(q) = by_qid.get(resp.qid.as_str()) else {
            violations.push(Violation::UnknownQid {
                qid: resp.qid.clone(),
                source: format!("survey by player {}", resp.player_id),
            });
            continue;
        };
        if resp.t >= q.n_clues() {
            violations.push(Violation::SurveyClueOutOfRange {
                qid: resp.qid.clone(),
                player_id: resp.player_id.clone(),
                t: resp.t,
                n_clues: q.n_clues(),
            });
        }
        if !seen.insert((resp.player_id.as_str(), resp.qid.as_str(), resp.t)) {
            violations.push(Violation::DuplicateSurveyResponse {
                qid: resp.qid.clone(),
                player_id: resp.player_id.clone(),
                t: resp.t,
            });
        }
    }
    violations
}

/// Index for qid lookup shared by the stat and simulation modules.
#[derive(Debug, Clone)]
pub struct QuestionIndex<'a> {
    map: BTreeMap<&'a str, &'a Question>,
}

impl<'a> QuestionIndex<'a> {
    pub fn new(questions: &'a [Question]) -> Self {
        Self { map: questions.iter().map(|q| (q.qid.as_str(), q)).collect() }
    }

    pub fn get(&self, qid: &str) -> Option<&'a Question> {
        self.map.get(qid).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn question(qid: &str, clues: &[&str]) -> Question {
        Question {
            qid: qid.to_string(),
            category: Category::Science,
            clues: clues.iter().map(|s| s.to_string()).collect(),
            answer: AnswerSpec {
                canonical: "ice".to_string(),
                accept_aliases: ["frozen water".to_string()].into(),
                prompt_aliases: ["snow".to_string()].into(),
            },
        }
    }

    fn step(t: usize, logit: f64) -> GuessStep {
        GuessStep {
            t,
            guess: "ice".to_string(),
            correct: Correctness::Correct,
            logit_conf: Some(logit),
            verbalized_conf: None,
            logprob_sum: None,
            raw_output: None,
        }
    }

    #[test]
    fn well_formed_dataset_has_no_violations() {
        let questions =
            vec![question("q1", &["one two three", "four five"]), question("q2", &["a b c d"])];
        let traces = vec![GuessTrace {
            qid: "q1".to_string(),
            model_id: "m".to_string(),
            steps: vec![step(0, 0.2), step(1, 0.9)],
        }];
        let buzzes = vec![BuzzRecord {
            qid: "q1".to_string(),
            team_id: "team_a".to_string(),
            match_id: "m1".to_string(),
            t: 1,
            position_frac: 0.8,
            correct: true,
        }];
        let report = validate_dataset(&questions, &traces, &buzzes);
        assert!(report.is_valid(), "unexpected violations: {:?}", report.violations);
    }

    #[test]
    fn missing_step_is_reported() {
        let questions = vec![question("q1", &["a", "b", "c"])];
        let traces = vec![GuessTrace {
            qid: "q1".to_string(),
            model_id: "m".to_string(),
            steps: vec![step(0, 0.2), step(2, 0.9)],
        }];
        let report = validate_dataset(&questions, &traces, &[]);
        assert_eq!(
            report.violations,
            vec![Violation::MissingStep { qid: "q1".into(), model_id: "m".into(), t: 1 }]
        );
    }

    #[test]
    fn out_of_range_confidence_is_reported() {
        let questions = vec![question("q1", &["a"])];
        let traces = vec![GuessTrace {
            qid: "q1".to_string(),
            model_id: "m".to_string(),
            steps: vec![step(0, 1.3)],
        }];
        let report = validate_dataset(&questions, &traces, &[]);
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(
            &report.violations[0],
            Violation::ConfidenceOutOfRange { field, value, .. } if field == "logit_conf" && *value == 1.3
        ));
    }

    #[test]
    fn position_frac_must_fall_in_clue_span() {
        // Clue spans: (0, 0.6], (0.6, 1.0].
        let questions = vec![question("q1", &["one two three", "four five"])];
        let buzz = |t: usize, pos: f64| BuzzRecord {
            qid: "q1".to_string(),
            team_id: "team_a".to_string(),
            match_id: "m1".to_string(),
            t,
            position_frac: pos,
            correct: true,
        };
        assert!(validate_dataset(&questions, &[], &[buzz(0, 0.4)]).is_valid());
        assert!(validate_dataset(&questions, &[], &[buzz(1, 0.6000000001)]).is_valid());
        assert!(!validate_dataset(&questions, &[], &[buzz(0, 0.7)]).is_valid());
        assert!(!validate_dataset(&questions, &[], &[buzz(1, 0.5)]).is_valid());
    }

    #[test]
    fn validation_is_order_independent() {
        let questions = vec![question("q1", &["a b", "c d"]), question("q2", &["e f"])];
        let buzzes = vec![
            BuzzRecord {
                qid: "q1".into(),
                team_id: "x".into(),
                match_id: "m".into(),
                t: 0,
                position_frac: 0.25,
                correct: true,
            },
            BuzzRecord {
                qid: "zzz".into(),
                team_id: "x".into(),
                match_id: "m".into(),
                t: 0,
                position_frac: 0.5,
                correct: false,
            },
        ];
        let forward = validate_dataset(&questions, &[], &buzzes);
        let reversed: Vec<_> = buzzes.iter().rev().cloned().collect();
        let backward = validate_dataset(&questions, &[], &reversed);
        assert_eq!(forward.violations.len(), backward.violations.len());
    }

    #[test]
    fn signed_and_binary_views_are_consistent() {
        assert_eq!(Correctness::Correct.signed(), Some(1.0));
        assert_eq!(Correctness::Correct.binary(), Some(1.0));
        assert_eq!(Correctness::Incorrect.signed(), Some(-1.0));
        assert_eq!(Correctness::Incorrect.binary(), Some(0.0));
        assert_eq!(Correctness::Unresolved.signed(), None);
        assert_eq!(Correctness::Unresolved.binary(), None);
    }

    #[test]
    fn guess_step_round_trips_through_json() {
        let s = GuessStep {
            t: 3,
            guess: "brooklyn".to_string(),
            correct: Correctness::Unresolved,
            logit_conf: Some(0.42),
            verbalized_conf: None,
            logprob_sum: Some(-1.5),
            raw_output: Some("The answer is: Brooklyn".to_string()),
        };
        let json = serde_json::to_string(&s).unwrap();
        assert!(!json.contains("correct"), "unresolved correctness should be omitted: {json}");
        let back: GuessStep = serde_json::from_str(&json).unwrap();
        assert_eq!(s, back);
    }
}
