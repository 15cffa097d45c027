//! N-gram sharing and diversity statistics over the generations of a prompt.
//!
//! Counting uses 64-bit rolling-hash n-gram keys with full-sequence
//! verification inside each hash bucket, so collisions cannot distort any
//! statistic. Containment is per-generation set semantics: a generation
//! holding an n-gram five times still counts once.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::corpus::{Generation, GenerationSet};

#[derive(Debug)]
pub enum NgramError {
    /// Every generation is shorter than n tokens.
    NTooLarge { n: usize },
    EmptyTable,
    NoPrompts,
}

impl fmt::Display for NgramError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NgramError::NTooLarge { n } => write!(f, "n too large: no generation has {n} tokens"),
            NgramError::EmptyTable => write!(f, "empty diversity table"),
            NgramError::NoPrompts => write!(f, "no generation sets given"),
        }
    }
}

impl std::error::Error for NgramError {}

/// A token as seen by the n-gram statistics: dumped ids when present,
/// whitespace-split words otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Token {
    Id(i64),
    Word(String),
}

/// Token stream of one generation: `token_ids` when present, else the
/// whitespace-split text.
pub fn tokenize(g: &Generation) -> Vec<Token> {
    match &g.token_ids {
        Some(ids) => ids.iter().map(|&i| Token::Id(i)).collect(),
        None => g.text.split_whitespace().map(|w| Token::Word(w.to_string())).collect(),
    }
}

/// Per-set token streams mapped to dense u64 keys (first-appearance order),
/// so n-gram windows compare as integer slices.
fn keyed_streams(gs: &GenerationSet) -> Vec<Vec<u64>> {
    let mut intern: HashMap<Token, u64> = HashMap::new();
    gs.generations
        .iter()
        .map(|g| {
            tokenize(g)
                .into_iter()
                .map(|t| {
                    let next = intern.len() as u64;
                    *intern.entry(t).or_insert(next)
                })
                .collect()
        })
        .collect()
}

const HASH_BASE: u64 = 1099511628211;

/// Distinct n-grams across the streams, each with the set of generations
/// containing it, keyed by rolling hash and verified by slice equality.
struct GramIndex {
    /// (representative (stream, pos), distinct generation flags)
    groups: Vec<((usize, usize), Vec<bool>)>,
}

impl GramIndex {
    fn build(streams: &[Vec<u64>], n: usize) -> Self {
        let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
        let mut groups: Vec<((usize, usize), Vec<bool>)> = Vec::new();

        let top = HASH_BASE.wrapping_pow(n as u32 - 1);
        for (gi, stream) in streams.iter().enumerate() {
            if stream.len() < n {
                continue;
            }
            let mut h: u64 = 0;
            for &k in &stream[..n] {
                h = h.wrapping_mul(HASH_BASE).wrapping_add(k);
            }
            for pos in 0..=(stream.len() - n) {
                if pos > 0 {
                    h = h
                        .wrapping_sub(stream[pos - 1].wrapping_mul(top))
                        .wrapping_mul(HASH_BASE)
                        .wrapping_add(stream[pos + n - 1]);
                }
                let window = &stream[pos..pos + n];
                let bucket = buckets.entry(h).or_default();
                let mut found = false;
                for &group_idx in bucket.iter() {
                    let (rep_stream, rep_pos) = groups[group_idx].0;
                    if &streams[rep_stream][rep_pos..rep_pos + n] == window {
                        groups[group_idx].1[gi] = true;
                        found = true;
                        break;
                    }
                }
                if !found {
                    bucket.push(groups.len());
                    let mut flags = vec![false; streams.len()];
                    flags[gi] = true;
                    groups.push(((gi, pos), flags));
                }
            }
        }
        GramIndex { groups }
    }

    fn distinct(&self) -> usize {
        self.groups.len()
    }

    fn support_counts(&self) -> impl Iterator<Item = usize> + '_ {
        self.groups.iter().map(|(_, flags)| flags.iter().filter(|&&b| b).count())
    }
}

fn check_n(streams: &[Vec<u64>], n: usize) -> Result<(), NgramError> {
    if n == 0 || streams.iter().all(|s| s.len() < n) {
        return Err(NgramError::NTooLarge { n });
    }
    Ok(())
}

/// Count of generations containing the most common n-gram.
pub fn max_ngram_support(gs: &GenerationSet, n: usize) -> Result<usize, NgramError> {
    let streams = keyed_streams(gs);
    check_n(&streams, n)?;
    let index = GramIndex::build(&streams, n);
    Ok(index.support_counts().max().unwrap_or(0))
}

/// Distinct n-grams divided by total n-gram occurrences over all generations.
pub fn unique_ngram_fraction(gs: &GenerationSet, n: usize) -> Result<f64, NgramError> {
    let streams = keyed_streams(gs);
    check_n(&streams, n)?;
    let total: usize = streams.iter().map(|s| s.len().saturating_sub(n - 1)).sum();
    let index = GramIndex::build(&streams, n);
    Ok(index.distinct() as f64 / total as f64)
}

/// Bin b holds the number of distinct n-grams contained in exactly b
/// generations; all bins 1..=N are present.
pub fn sharing_histogram(gs: &GenerationSet, n: usize) -> Result<BTreeMap<usize, u64>, NgramError> {
    let streams = keyed_streams(gs);
    check_n(&streams, n)?;
    let index = GramIndex::build(&streams, n);
    let mut bins: BTreeMap<usize, u64> = (1..=gs.len()).map(|b| (b, 0)).collect();
    for count in index.support_counts() {
        *bins.get_mut(&count).expect("support within 1..=N") += 1;
    }
    Ok(bins)
}

/// Picks the nucleus-p whose diversity is closest to `target`; ties take the
/// smaller p. The table maps p to a unique-n-gram fraction.
pub fn match_diversity(table: &[(f64, f64)], target: f64) -> Result<f64, NgramError> {
    let mut sorted: Vec<(f64, f64)> = table.to_vec();
    if sorted.is_empty() {
        return Err(NgramError::EmptyTable);
    }
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite p"));
    let mut best = sorted[0];
    for &(p, frac) in &sorted[1..] {
        if (frac - target).abs() < (best.1 - target).abs() {
            best = (p, frac);
        }
    }
    Ok(best.0)
}

/// Aggregate report over multiple prompts: per-n means of max support and
/// unique fraction, plus the sharing histogram summed over prompts (the
/// per-prompt mean is the sum divided by `n_prompts`).
#[derive(Debug, Clone, PartialEq)]
pub struct NgramReport {
    pub max_support: Vec<(usize, f64)>,
    pub unique_fraction: Vec<(usize, f64)>,
    pub histogram_n: usize,
    pub sharing_histogram: BTreeMap<usize, u64>,
    pub n_prompts: usize,
}

pub const DEFAULT_SUPPORT_NS: [usize; 4] = [5, 10, 25, 50];
pub const DEFAULT_UNIQUE_NS: [usize; 4] = [1, 2, 3, 4];
pub const DEFAULT_HISTOGRAM_N: usize = 10;

pub fn ngram_report(
    sets: &[GenerationSet],
    support_ns: &[usize],
    unique_ns: &[usize],
    histogram_n: usize,
) -> Result<NgramReport, NgramError> {
    if sets.is_empty() {
        return Err(NgramError::NoPrompts);
    }
    let mut max_support = Vec::with_capacity(support_ns.len());
    for &n in support_ns {
        let mut sum = 0.0;
        for gs in sets {
            sum += max_ngram_support(gs, n)? as f64;
        }
        max_support.push((n, sum / sets.len() as f64));
    }
    let mut unique_fraction = Vec::with_capacity(unique_ns.len());
    for &n in unique_ns {
        let mut sum = 0.0;
        for gs in sets {
            sum += unique_ngram_fraction(gs, n)?;
        }
        unique_fraction.push((n, sum / sets.len() as f64));
    }
    let mut sharing: BTreeMap<usize, u64> = BTreeMap::new();
    for gs in sets {
        for (bin, count) in sharing_histogram(gs, histogram_n)? {
            *sharing.entry(bin).or_insert(0) += count;
        }
    }
    Ok(NgramReport {
        max_support,
        unique_fraction,
        histogram_n,
        sharing_histogram: sharing,
        n_prompts: sets.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SamplingMethod;

    fn set_from_texts(texts: &[&str]) -> GenerationSet {
        GenerationSet {
            prompt_id: "p".into(),
            prompt_text: "q".into(),
            model_label: "m".into(),
            sampling_method: SamplingMethod::Greedy,
            nucleus_p: None,
            generations: texts
                .iter()
                .enumerate()
                .map(|(k, t)| Generation {
                    sample_index: k,
                    text: t.to_string(),
                    token_ids: None,
                })
                .collect(),
        }
    }

    fn set_from_ids(ids: &[Vec<i64>]) -> GenerationSet {
        GenerationSet {
            prompt_id: "p".into(),
            prompt_text: "q".into(),
            model_label: "m".into(),
            sampling_method: SamplingMethod::Greedy,
            nucleus_p: None,
            generations: ids
                .iter()
                .enumerate()
                .map(|(k, v)| Generation {
                    sample_index: k,
                    text: format!("gen {k}"),
                    token_ids: Some(v.clone()),
                })
                .collect(),
        }
    }

    #[test]
    fn tokenize_prefers_ids() {
        let g = Generation { sample_index: 0, text: "a b".into(), token_ids: Some(vec![5, 9, 9]) };
        assert_eq!(tokenize(&g), vec![Token::Id(5), Token::Id(9), Token::Id(9)]);
    }

    #[test]
    fn tokenize_whitespace_fallback() {
        let g = Generation { sample_index: 0, text: "a b  c".into(), token_ids: None };
        assert_eq!(
            tokenize(&g),
            vec![Token::Word("a".into()), Token::Word("b".into()), Token::Word("c".into())]
        );
    }

    #[test]
    fn tokenize_empty() {
        let g = Generation { sample_index: 0, text: String::new(), token_ids: None };
        assert!(tokenize(&g).is_empty());
    }

    #[test]
    fn identical_generations_full_support() {
        let texts: Vec<&str> = std::iter::repeat("one two three four five six").take(100).collect();
        let gs = set_from_texts(&texts);
        assert_eq!(max_ngram_support(&gs, 3).unwrap(), 100);
        // All-distinct internal n-grams duplicated 100x: fraction = 1/100.
        let frac = unique_ngram_fraction(&gs, 2).unwrap();
        assert!((frac - 0.01).abs() < 1e-15);
        let hist = sharing_histogram(&gs, 3).unwrap();
        assert_eq!(hist[&100], 4);
        assert!(hist.iter().filter(|&(&b, _)| b != 100).all(|(_, &c)| c == 0));
    }

    #[test]
    fn disjoint_alphabets_support_one() {
        let gs = set_from_ids(&[vec![1, 2, 3, 4], vec![5, 6, 7, 8], vec![9, 10, 11, 12]]);
        assert_eq!(max_ngram_support(&gs, 2).unwrap(), 1);
        let hist = sharing_histogram(&gs, 2).unwrap();
        assert_eq!(hist[&1], 9);
        assert_eq!(hist[&2], 0);
        assert_eq!(hist[&3], 0);
    }

    #[test]
    fn single_generation_unique_fraction_one() {
        let gs = set_from_texts(&["all words here are distinct tokens"]);
        assert_eq!(unique_ngram_fraction(&gs, 2).unwrap(), 1.0);
    }

    #[test]
    fn n_too_large_is_error() {
        let gs = set_from_texts(&["a b", "c d"]);
        assert!(matches!(max_ngram_support(&gs, 3), Err(NgramError::NTooLarge { n: 3 })));
        assert!(matches!(unique_ngram_fraction(&gs, 3), Err(NgramError::NTooLarge { .. })));
        assert!(matches!(sharing_histogram(&gs, 3), Err(NgramError::NTooLarge { .. })));
    }

    #[test]
    fn mixed_lengths_short_generations_skipped() {
        let gs = set_from_texts(&["a b c d", "a b"]);
        // Only the first generation holds 3-grams.
        assert_eq!(max_ngram_support(&gs, 3).unwrap(), 1);
    }

    #[test]
    fn support_non_increasing_in_n() {
        let gs = set_from_texts(&[
            "the cat sat on the mat and near the mat",
            "the cat sat on the mat and left the mat",
            "a cat sat on the mat and left a mat",
        ]);
        let mut prev = usize::MAX;
        for n in [1, 2, 3, 4] {
            let s = max_ngram_support(&gs, n).unwrap();
            assert!(s <= prev, "support must be non-increasing in n");
            prev = s;
        }
    }

    #[test]
    fn histogram_mass_balance() {
        let gs = set_from_texts(&[
            "x y z w v u t s",
            "x y z q r s t u",
            "p q r s t u v w",
        ]);
        let n = 2;
        let hist = sharing_histogram(&gs, n).unwrap();
        let weighted: u64 = hist.iter().map(|(&b, &c)| b as u64 * c).sum();
        // Sum over generations of the number of distinct n-grams they contain.
        let mut per_gen_distinct = 0u64;
        for g in &gs.generations {
            let toks = tokenize(g);
            let mut seen: Vec<&[Token]> = Vec::new();
            for w in toks.windows(n) {
                if !seen.contains(&w) {
                    seen.push(w);
                }
            }
            per_gen_distinct += seen.len() as u64;
        }
        assert_eq!(weighted, per_gen_distinct);
    }

    #[test]
    fn match_diversity_reference_values() {
        // Diversity table lookup: target is the adapted model's fraction at
        // its own operating point; the closest base entry wins.
        let table = [(0.7, 0.0512), (0.9, 0.0920)];
        assert_eq!(match_diversity(&table, 0.0433).unwrap(), 0.7);
    }

    #[test]
    fn match_diversity_singleton_and_ties() {
        assert_eq!(match_diversity(&[(0.5, 0.33)], 0.9).unwrap(), 0.5);
        assert_eq!(match_diversity(&[(0.6, 0.10), (0.8, 0.20)], 0.15).unwrap(), 0.6);
        assert!(matches!(match_diversity(&[], 0.5), Err(NgramError::EmptyTable)));
    }

    #[test]
    fn rolling_hash_verification_exact() {
        // Force bucket traffic with a repetitive stream and confirm the
        // grouped windows really are the distinct 2-grams.
        let gs = set_from_ids(&[vec![1, 2, 1, 2, 1, 2, 3, 1, 2]]);
        let streams = keyed_streams(&gs);
        let index = GramIndex::build(&streams, 2);
        let mut grams: Vec<Vec<u64>> = index
            .groups
            .iter()
            .map(|&((s, p), _)| streams[s][p..p + 2].to_vec())
            .collect();
        grams.sort();
        assert_eq!(grams, vec![vec![0, 1], vec![1, 0], vec![1, 2], vec![2, 0]]);
    }

    #[test]
    fn report_aggregates_over_prompts() {
        let a = set_from_texts(&["w1 w2 w3 w4 w5 w6", "w1 w2 w3 w4 w5 w6"]);
        let b = set_from_texts(&["u1 u2 u3 u4 u5 u6", "z1 z2 z3 z4 z5 z6"]);
        let report = ngram_report(&[a, b], &[5], &[1, 2], 5).unwrap();
        // max 5-gram support: 2 for prompt a, 1 for prompt b -> mean 1.5.
        assert_eq!(report.max_support, vec![(5, 1.5)]);
        assert_eq!(report.n_prompts, 2);
        let total: u64 = report.sharing_histogram.values().sum();
        // Prompt a: 2 distinct 5-grams shared by both (bin 2 -> 2 entries);
        // prompt b: 4 distinct 5-grams in one generation each.
        assert_eq!(report.sharing_histogram[&2], 2);
        assert_eq!(report.sharing_histogram[&1], 4);
        assert_eq!(total, 6);
    }
}
