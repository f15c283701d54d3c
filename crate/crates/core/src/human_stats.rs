//! Human-derived statistics: per-question cumulative correct-buzz curves,
//! cumulative buzz rates over question position, accuracy as clues are
//! revealed, conditional buzz likelihoods and survey-based player rankings.

use crate::model::{BuzzRecord, Correctness, GuessTrace, HumanCurve, Question, QuestionIndex, SurveyResponse};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("buzz for qid {found} passed to curve for qid {expected}")]
    ForeignBuzz { expected: String, found: String },
    #[error("matches_played must be at least 1")]
    ZeroMatches,
    #[error("empty input")]
    EmptyInput,
    #[error("invalid grid or bins: {0}")]
    InvalidGrid(String),
}

const FRAC_EPS: f64 = 1e-9;

/// Cumulative buzz rates for one team or group over a position grid.
/// Both series are non-decreasing step functions, normalized by the number
/// of matches played.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CumulativeBuzzCurve {
    pub id: String,
    pub grid: Vec<f64>,
    pub correct_rate: Vec<f64>,
    pub incorrect_rate: Vec<f64>,
}

/// P(buzz | correct) and P(buzz | incorrect) per clue count for one group
/// of surveyed players. Cells with no supporting data are absent, not zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalBuzzStats {
    pub group_id: String,
    pub cells: BTreeMap<usize, ConditionalCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalCell {
    pub p_buzz_given_correct: Option<f64>,
    pub p_buzz_given_incorrect: Option<f64>,
    /// Players contributing to each estimate.
    pub support_correct: usize,
    pub support_incorrect: usize,
}

/// One row of the survey player ranking.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlayerRank {
    pub player_id: String,
    pub score: f64,
    /// Mean proportion of clues seen at the player's first buzzes; absent if
    /// the player never buzzed.
    pub mean_buzz_frac: Option<f64>,
    pub rank: usize,
    pub half: String,
    pub quartile: String,
}

/// A named set of players, used to group survey statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerGroup {
    pub id: String,
    pub players: BTreeSet<String>,
}

/// How ranked players are partitioned into groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupingMode {
    /// Halves below 12 players, quartiles otherwise.
    #[default]
    Auto,
    Halves,
    Quartiles,
}

/// Cumulative correct-buzz probability per clue: h[t] is correct buzzes up
/// to clue t over total buzzes up to clue t, 0 where no buzzes exist yet.
pub fn human_curve(question: &Question, buzzes: &[BuzzRecord]) -> Result<HumanCurve, StatsError> {
    let n = question.n_clues();
    let mut correct_at = vec![0u32; n];
    let mut total_at = vec![0u32; n];
    for buzz in buzzes {
        if buzz.qid != question.qid {
            return Err(StatsError::ForeignBuzz {
                expected: question.qid.clone(),
                found: buzz.qid.clone(),
            });
        }
        let t = buzz.t.min(n.saturating_sub(1));
        total_at[t] += 1;
        if buzz.correct {
            correct_at[t] += 1;
        }
    }
    let mut h = Vec::with_capacity(n);
    let mut support = Vec::with_capacity(n);
    let (mut correct_cum, mut total_cum) = (0u32, 0u32);
    for t in 0..n {
        correct_cum += correct_at[t];
        total_cum += total_at[t];
        h.push(if total_cum == 0 { 0.0 } else { f64::from(correct_cum) / f64::from(total_cum) });
        support.push(total_cum);
    }
    Ok(HumanCurve { qid: question.qid.clone(), h, support })
}

/// Cumulative buzz counts per match over a regular position grid ending at
/// exactly 1.0.
pub fn cumulative_buzz_curve(
    id: &str,
    buzzes: &[BuzzRecord],
    matches_played: usize,
    grid_step: f64,
) -> Result<CumulativeBuzzCurve, StatsError> {
    if matches_played == 0 {
        return Err(StatsError::ZeroMatches);
    }
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(StatsError::InvalidGrid(format!("grid_step {grid_step} outside (0,1]")));
    }
    let mut grid = Vec::new();
    let mut i = 1usize;
    loop {
        let p = i as f64 * grid_step;
        if p >= 1.0 - FRAC_EPS {
            grid.push(1.0);
            break;
        }
        grid.push(p);
        i += 1;
    }
    let denom = matches_played as f64;
    let mut correct_rate = Vec::with_capacity(grid.len());
    let mut incorrect_rate = Vec::with_capacity(grid.len());
    for &p in &grid {
        let correct =
            buzzes.iter().filter(|b| b.correct && b.position_frac <= p + FRAC_EPS).count();
        let incorrect =
            buzzes.iter().filter(|b| !b.correct && b.position_frac <= p + FRAC_EPS).count();
        correct_rate.push(correct as f64 / denom);
        incorrect_rate.push(incorrect as f64 / denom);
    }
    Ok(CumulativeBuzzCurve { id: id.to_string(), grid, correct_rate, incorrect_rate })
}

/// Number of clues revealed once fraction `f` of an `n`-clue question has
/// been read: ceil(f * n), at least 1.
pub fn clues_for_fraction(f: f64, n: usize) -> usize {
    (((f * n as f64) - FRAC_EPS).ceil() as usize).clamp(1, n.max(1))
}

/// Source records for the accuracy-by-clues curve.
pub enum AccuracySource<'a> {
    Traces(&'a [GuessTrace]),
    Surveys(&'a [SurveyResponse]),
}

/// Accuracy after the first ceil(f * N) clues, per bin fraction.
///
/// For traces: the fraction of questions whose guess at that step is
/// correct. For surveys: each player's accuracy first, averaged over
/// players (players and questions without a response at the step do not
/// contribute).
pub fn accuracy_by_clues_revealed(
    source: AccuracySource<'_>,
    questions: &QuestionIndex<'_>,
    bins: &[f64],
) -> Result<Vec<f64>, StatsError> {
    if bins.is_empty() {
        return Err(StatsError::InvalidGrid("no bins".to_string()));
    }
    for pair in bins.windows(2) {
        if pair[1] <= pair[0] {
            return Err(StatsError::InvalidGrid("bins must be strictly increasing".to_string()));
        }
    }
    if bins.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
        return Err(StatsError::InvalidGrid("bins must lie in (0,1]".to_string()));
    }

    match source {
        AccuracySource::Traces(traces) => {
            if traces.is_empty() {
                return Err(StatsError::EmptyInput);
            }
            let mut out = Vec::with_capacity(bins.len());
            for &f in bins {
                let (mut num, mut den) = (0usize, 0usize);
                for trace in traces {
                    let Some(q) = questions.get(&trace.qid) else { continue };
                    let t = clues_for_fraction(f, q.n_clues()) - 1;
                    let Some(step) = trace.steps.iter().find(|s| s.t == t) else { continue };
                    match step.correct {
                        Correctness::Correct => {
                            num += 1;
                            den += 1;
                        }
                        Correctness::Incorrect => den += 1,
                        Correctness::Unresolved => {}
                    }
                }
                out.push(if den == 0 { 0.0 } else { num as f64 / den as f64 });
            }
            Ok(out)
        }
        AccuracySource::Surveys(surveys) => {
            if surveys.is_empty() {
                return Err(StatsError::EmptyInput);
            }
            let mut by_player: BTreeMap<&str, Vec<&SurveyResponse>> = BTreeMap::new();
            for resp in surveys {
                by_player.entry(resp.player_id.as_str()).or_default().push(resp);
            }
            let mut out = Vec::with_capacity(bins.len());
            for &f in bins {
                let mut player_accs = Vec::new();
                for responses in by_player.values() {
                    let (mut num, mut den) = (0usize, 0usize);
                    for resp in responses {
                        let Some(q) = questions.get(&resp.qid) else { continue };
                        if resp.t == clues_for_fraction(f, q.n_clues()) - 1 {
                            den += 1;
                            if resp.correct {
                                num += 1;
                            }
                        }
                    }
                    if den > 0 {
                        player_accs.push(num as f64 / den as f64);
                    }
                }
                out.push(if player_accs.is_empty() {
                    0.0
                } else {
                    player_accs.iter().sum::<f64>() / player_accs.len() as f64
                });
            }
            Ok(out)
        }
    }
}

/// Per (player, qid), responses after the player's first would-buzz step do
/// not count; real competitions end a player's involvement at the buzz.
fn truncate_at_first_buzz(surveys: &[SurveyResponse]) -> Vec<&SurveyResponse> {
    let mut by_key: BTreeMap<(&str, &str), Vec<&SurveyResponse>> = BTreeMap::new();
    for resp in surveys {
        by_key.entry((resp.player_id.as_str(), resp.qid.as_str())).or_default().push(resp);
    }
    let mut kept = Vec::new();
    for responses in by_key.values_mut() {
        responses.sort_by_key(|r| r.t);
        let cutoff = responses.iter().find(|r| r.would_buzz).map(|r| r.t);
        for resp in responses.iter() {
            if cutoff.map_or(true, |c| resp.t <= c) {
                kept.push(*resp);
            }
        }
    }
    kept
}

/// P(buzz | correct) and P(buzz | incorrect) per clue count for one player
/// group: per-player ratios first, then the mean across players with data.
pub fn conditional_buzz_probs(
    surveys: &[SurveyResponse],
    group: &PlayerGroup,
) -> ConditionalBuzzStats {
    let truncated = truncate_at_first_buzz(surveys);
    // player -> clue count -> (buzzed-and-correct, correct, buzzed-and-incorrect, incorrect)
    let mut tallies: BTreeMap<&str, BTreeMap<usize, (u32, u32, u32, u32)>> = BTreeMap::new();
    for resp in truncated {
        if !group.players.contains(&resp.player_id) {
            continue;
        }
        let cell = tallies.entry(resp.player_id.as_str()).or_default().entry(resp.t + 1).or_default();
        if resp.correct {
            cell.1 += 1;
            if resp.would_buzz {
                cell.0 += 1;
            }
        } else {
            cell.3 += 1;
            if resp.would_buzz {
                cell.2 += 1;
            }
        }
    }
    let mut cells: BTreeMap<usize, ConditionalCell> = BTreeMap::new();
    let all_counts: BTreeSet<usize> =
        tallies.values().flat_map(|per_n| per_n.keys().copied()).collect();
    for n in all_counts {
        let mut correct_ratios = Vec::new();
        let mut incorrect_ratios = Vec::new();
        for per_n in tallies.values() {
            if let Some(&(bc, c, bi, i)) = per_n.get(&n) {
                if c > 0 {
                    correct_ratios.push(f64::from(bc) / f64::from(c));
                }
                if i > 0 {
                    incorrect_ratios.push(f64::from(bi) / f64::from(i));
                }
            }
        }
        let mean = |v: &[f64]| {
            if v.is_empty() {
                None
            } else {
                Some(v.iter().sum::<f64>() / v.len() as f64)
            }
        };
        cells.insert(
            n,
            ConditionalCell {
                p_buzz_given_correct: mean(&correct_ratios),
                p_buzz_given_incorrect: mean(&incorrect_ratios),
                support_correct: correct_ratios.len(),
                support_incorrect: incorrect_ratios.len(),
            },
        );
    }
    ConditionalBuzzStats { group_id: group.id.clone(), cells }
}

/// Ranks surveyed players: a correct first buzz earns 20 - 20c points
/// (c = proportion of clues seen), an incorrect first buzz costs 5.
/// Ties break by earlier mean buzz position, then player id.
pub fn rank_survey_players(
    surveys: &[SurveyResponse],
    question_lengths: &BTreeMap<String, usize>,
) -> Vec<PlayerRank> {
    let mut by_key: BTreeMap<(&str, &str), Vec<&SurveyResponse>> = BTreeMap::new();
    let mut players: BTreeSet<&str> = BTreeSet::new();
    for resp in surveys {
        players.insert(resp.player_id.as_str());
        by_key.entry((resp.player_id.as_str(), resp.qid.as_str())).or_default().push(resp);
    }

    let mut rows: Vec<PlayerRank> = players
        .into_iter()
        .map(|player| {
            let mut score = 0.0;
            let mut buzz_fracs = Vec::new();
            for ((p, qid), responses) in &by_key {
                if *p != player {
                    continue;
                }
                let Some(&n) = question_lengths.get(*qid) else { continue };
                let mut sorted: Vec<&&SurveyResponse> = responses.iter().collect();
                sorted.sort_by_key(|r| r.t);
                if let Some(first_buzz) = sorted.iter().find(|r| r.would_buzz) {
                    let c = (first_buzz.t + 1) as f64 / n as f64;
                    buzz_fracs.push(c);
                    if first_buzz.correct {
                        score += 20.0 - 20.0 * c;
                    } else {
                        score += -5.0;
                    }
                }
            }
            let mean_buzz_frac = if buzz_fracs.is_empty() {
                None
            } else {
                Some(buzz_fracs.iter().sum::<f64>() / buzz_fracs.len() as f64)
            };
            PlayerRank {
                player_id: player.to_string(),
                score,
                mean_buzz_frac,
                rank: 0,
                half: String::new(),
                quartile: String::new(),
            }
        })
        .collect();

    rows.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| {
                let fa = a.mean_buzz_frac.unwrap_or(f64::INFINITY);
                let fb = b.mean_buzz_frac.unwrap_or(f64::INFINITY);
                fa.partial_cmp(&fb).unwrap_or(std::cmp::Ordering::Equal)
            })
            .then_with(|| a.player_id.cmp(&b.player_id))
    });
    let n = rows.len();
    for (idx, row) in rows.iter_mut().enumerate() {
        row.rank = idx + 1;
        row.half = if idx * 2 < n { "top".to_string() } else { "bottom".to_string() };
        // Quartile labels count up from the bottom: q4 is the top quarter.
        row.quartile = format!("q{}", 4 - (idx * 4) / n.max(1));
    }
    rows
}

/// Splits ranked players into labelled groups.
pub fn group_players(ranking: &[PlayerRank], mode: GroupingMode) -> Vec<PlayerGroup> {
    let n = ranking.len();
    let use_halves = match mode {
        GroupingMode::Halves => true,
        GroupingMode::Quartiles => false,
        GroupingMode::Auto => n < 12,
    };
    let key = |row: &PlayerRank| if use_halves { row.half.clone() } else { row.quartile.clone() };
    let mut groups: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for row in ranking {
        groups.entry(key(row)).or_default().insert(row.player_id.clone());
    }
    groups.into_iter().map(|(id, players)| PlayerGroup { id, players }).collect()
}
