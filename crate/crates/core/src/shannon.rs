//! Ranking-game evaluation: how many candidate tokens does a model score
//! above the gold token, independent of probability calibration.
//!
//! The guess count is a rank statistic, so any strictly monotone transform
//! of the scores leaves it unchanged.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub enum ShannonError {
    Io { path: String, source: std::io::Error },
    Malformed { path: String, line: usize, detail: String },
    DuplicateToken { token: i64 },
    EmptyGold,
    GoldAbsent { token: i64 },
    NoInstances,
}

impl fmt::Display for ShannonError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShannonError::Io { path, source } => write!(f, "{path}: {source}"),
            ShannonError::Malformed { path, line, detail } => {
                write!(f, "{path}:{line}: malformed instance: {detail}")
            }
            ShannonError::DuplicateToken { token } => {
                write!(f, "duplicate token id {token} in ranked scores")
            }
            ShannonError::EmptyGold => write!(f, "gold_tokens must be non-empty"),
            ShannonError::GoldAbsent { token } => {
                write!(f, "gold token {token} absent from ranked scores")
            }
            ShannonError::NoInstances => write!(f, "no instances given"),
        }
    }
}

impl std::error::Error for ShannonError {}

/// How score ties with the gold token are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieRule {
    /// Only strictly higher scores count as incorrect guesses (default).
    StrictGreater,
    /// Equal scores count as incorrect guesses too.
    CountTies,
}

/// Granularity of the report's F1 column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum F1Granularity {
    /// Token-multiset F1 between predicted and gold token sequences (default).
    TokenMultiset,
    /// Whole-word reading: F1 is 1 exactly when the sequences match.
    WholeWord,
}

/// One prediction point: scored candidates for the next token plus the gold
/// and greedy-predicted token sequences of the final word.
#[derive(Debug, Clone, PartialEq)]
pub struct ShannonInstance {
    /// Sorted by score descending, ties resolved by token id ascending.
    pub ranked_scores: Vec<(i64, f64)>,
    pub gold_tokens: Vec<i64>,
    pub predicted_tokens: Vec<i64>,
}

impl ShannonInstance {
    /// Normalizes and validates: sorts candidates, rejects duplicate token
    /// ids and empty gold sequences.
    pub fn new(
        mut ranked_scores: Vec<(i64, f64)>,
        gold_tokens: Vec<i64>,
        predicted_tokens: Vec<i64>,
    ) -> Result<Self, ShannonError> {
        if gold_tokens.is_empty() {
            return Err(ShannonError::EmptyGold);
        }
        ranked_scores.sort_by(|a, b| {
            b.1.partial_cmp(&a.1).expect("finite scores").then(a.0.cmp(&b.0))
        });
        let mut seen = std::collections::HashSet::new();
        for &(t, _) in &ranked_scores {
            if !seen.insert(t) {
                return Err(ShannonError::DuplicateToken { token: t });
            }
        }
        Ok(ShannonInstance { ranked_scores, gold_tokens, predicted_tokens })
    }
}

/// Number of candidate tokens scored above the gold token's first token.
pub fn incorrect_guesses(inst: &ShannonInstance, rule: TieRule) -> Result<usize, ShannonError> {
    let gold = inst.gold_tokens[0];
    let gold_score = inst
        .ranked_scores
        .iter()
        .find(|&&(t, _)| t == gold)
        .map(|&(_, s)| s)
        .ok_or(ShannonError::GoldAbsent { token: gold })?;
    let count = inst
        .ranked_scores
        .iter()
        .filter(|&&(t, s)| {
            t != gold
                && match rule {
                    TieRule::StrictGreater => s > gold_score,
                    TieRule::CountTies => s >= gold_score,
                }
        })
        .count();
    Ok(count)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShannonReport {
    /// Fraction of instances predicted exactly.
    pub em: f64,
    /// Mean per-instance F1 (see [`F1Granularity`]).
    pub f1: f64,
    pub avg_guesses: f64,
}

/// Token-multiset F1 between two token sequences.
fn multiset_f1(predicted: &[i64], gold: &[i64]) -> f64 {
    if predicted.is_empty() || gold.is_empty() {
        return 0.0;
    }
    let mut gold_counts: HashMap<i64, usize> = HashMap::new();
    for &t in gold {
        *gold_counts.entry(t).or_insert(0) += 1;
    }
    let mut common = 0usize;
    for &t in predicted {
        if let Some(c) = gold_counts.get_mut(&t) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / predicted.len() as f64;
    let recall = common as f64 / gold.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

pub fn shannon_report(
    instances: &[ShannonInstance],
    rule: TieRule,
    granularity: F1Granularity,
) -> Result<ShannonReport, ShannonError> {
    if instances.is_empty() {
        return Err(ShannonError::NoInstances);
    }
    let mut em_sum = 0.0;
    let mut f1_sum = 0.0;
    let mut guess_sum = 0.0;
    for inst in instances {
        let exact = inst.predicted_tokens == inst.gold_tokens;
        em_sum += exact as u8 as f64;
        f1_sum += match granularity {
            F1Granularity::TokenMultiset => multiset_f1(&inst.predicted_tokens, &inst.gold_tokens),
            F1Granularity::WholeWord => exact as u8 as f64,
        };
        guess_sum += incorrect_guesses(inst, rule)? as f64;
    }
    let n = instances.len() as f64;
    Ok(ShannonReport { em: em_sum / n, f1: f1_sum / n, avg_guesses: guess_sum / n })
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceRecord {
    ranked_scores: Vec<(i64, f64)>,
    gold_tokens: Vec<i64>,
    predicted_tokens: Vec<i64>,
}

/// Loads instances from jsonl: one record per line with `ranked_scores`
/// (array of [token_id, score] pairs), `gold_tokens`, `predicted_tokens`.
pub fn load_instances(path: &Path) -> Result<Vec<ShannonInstance>, ShannonError> {
    let file = fs::File::open(path)
        .map_err(|e| ShannonError::Io { path: path.display().to_string(), source: e })?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line =
            line.map_err(|e| ShannonError::Io { path: path.display().to_string(), source: e })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: InstanceRecord =
            serde_json::from_str(&line).map_err(|e| ShannonError::Malformed {
                path: path.display().to_string(),
                line: lineno + 1,
                detail: e.to_string(),
            })?;
        out.push(ShannonInstance::new(rec.ranked_scores, rec.gold_tokens, rec.predicted_tokens)?);
    }
    if out.is_empty() {
        return Err(ShannonError::NoInstances);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(scores: Vec<(i64, f64)>, gold: Vec<i64>, pred: Vec<i64>) -> ShannonInstance {
        ShannonInstance::new(scores, gold, pred).unwrap()
    }

    #[test]
    fn gold_on_top_zero_guesses() {
        let i = inst(vec![(7, 3.0), (1, 2.0), (2, 1.0)], vec![7], vec![7]);
        assert_eq!(incorrect_guesses(&i, TieRule::StrictGreater).unwrap(), 0);
    }

    #[test]
    fn two_strictly_higher() {
        let i = inst(vec![(10, 3.0), (11, 2.0), (7, 1.0)], vec![7], vec![10]);
        assert_eq!(incorrect_guesses(&i, TieRule::StrictGreater).unwrap(), 2);
    }

    #[test]
    fn tie_rules_differ() {
        // Under the strict rule an equal-scored token is not an incorrect
        // guess; under CountTies it is.
        let i = inst(vec![(1, 2.0), (7, 2.0), (2, 1.0)], vec![7], vec![1]);
        assert_eq!(incorrect_guesses(&i, TieRule::StrictGreater).unwrap(), 0);
        assert_eq!(incorrect_guesses(&i, TieRule::CountTies).unwrap(), 1);
    }

    #[test]
    fn gold_absent_is_error() {
        let i = inst(vec![(1, 2.0)], vec![9], vec![1]);
        assert!(matches!(
            incorrect_guesses(&i, TieRule::StrictGreater),
            Err(ShannonError::GoldAbsent { token: 9 })
        ));
    }

    #[test]
    fn strict_rule_matches_brute_force_on_all_score_maps() {
        // All score assignments from 4 tokens into {1,2,3,4}, ties included.
        let tokens = [0i64, 1, 2, 3];
        for code in 0..256usize {
            let scores: Vec<(i64, f64)> = tokens
                .iter()
                .enumerate()
                .map(|(k, &t)| (t, ((code >> (2 * k)) & 3) as f64 + 1.0))
                .collect();
            let gold = 2i64;
            let gold_score = scores.iter().find(|&&(t, _)| t == gold).unwrap().1;
            let brute_strict =
                scores.iter().filter(|&&(t, s)| t != gold && s > gold_score).count();
            let brute_ties =
                scores.iter().filter(|&&(t, s)| t != gold && s >= gold_score).count();
            let i = inst(scores, vec![gold], vec![0]);
            assert_eq!(incorrect_guesses(&i, TieRule::StrictGreater).unwrap(), brute_strict);
            assert_eq!(incorrect_guesses(&i, TieRule::CountTies).unwrap(), brute_ties);
        }
    }

    #[test]
    fn report_all_exact() {
        let instances = vec![
            inst(vec![(7, 2.0), (1, 1.0)], vec![7], vec![7]),
            inst(vec![(3, 2.0), (1, 1.0)], vec![3], vec![3]),
        ];
        let r =
            shannon_report(&instances, TieRule::StrictGreater, F1Granularity::TokenMultiset)
                .unwrap();
        assert_eq!(r.em, 1.0);
        assert_eq!(r.f1, 1.0);
        assert_eq!(r.avg_guesses, 0.0);
    }

    #[test]
    fn report_partial_f1() {
        // predicted [7,8] vs gold [7,9]: precision 1/2, recall 1/2, F1 1/2.
        let i = inst(vec![(7, 2.0), (8, 1.5), (9, 1.0)], vec![7, 9], vec![7, 8]);
        let r = shannon_report(&[i], TieRule::StrictGreater, F1Granularity::TokenMultiset).unwrap();
        assert_eq!(r.em, 0.0);
        assert!((r.f1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn em_implies_f1_one() {
        let cases = vec![
            inst(vec![(7, 2.0), (1, 1.0)], vec![7, 7, 8], vec![7, 7, 8]),
            inst(vec![(2, 5.0), (1, 1.0)], vec![2], vec![2]),
        ];
        for c in cases {
            let r = shannon_report(&[c], TieRule::StrictGreater, F1Granularity::TokenMultiset)
                .unwrap();
            assert_eq!(r.em, 1.0);
            assert!(r.em <= r.f1 + 1e-9);
        }
    }

    #[test]
    fn whole_word_granularity() {
        let i = inst(vec![(7, 2.0), (8, 1.5), (9, 1.0)], vec![7, 9], vec![7, 8]);
        let r = shannon_report(&[i], TieRule::StrictGreater, F1Granularity::WholeWord).unwrap();
        assert_eq!(r.f1, 0.0);
    }

    #[test]
    fn duplicate_token_rejected() {
        assert!(matches!(
            ShannonInstance::new(vec![(1, 2.0), (1, 1.0)], vec![1], vec![1]),
            Err(ShannonError::DuplicateToken { token: 1 })
        ));
    }

    #[test]
    fn jsonl_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("inst.jsonl");
        std::fs::write(
            &path,
            concat!(
                r#"{"ranked_scores":[[5,0.9],[2,0.3]],"gold_tokens":[5],"predicted_tokens":[5]}"#,
                "\n",
                r#"{"ranked_scores":[[1,0.2],[9,0.8]],"gold_tokens":[1],"predicted_tokens":[9]}"#,
                "\n"
            ),
        )
        .unwrap();
        let instances = load_instances(&path).unwrap();
        assert_eq!(instances.len(), 2);
        // Second instance re-sorted descending by score.
        assert_eq!(instances[1].ranked_scores[0].0, 9);
        assert_eq!(incorrect_guesses(&instances[1], TieRule::StrictGreater).unwrap(), 1);
    }
}
