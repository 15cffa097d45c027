//! Independent oracles for the integration and acceptance suites. Everything
//! here recomputes results from first principles, structured differently
//! from the library paths it checks.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::collections::HashMap;

use genscope::align::ScoringScheme;
use genscope::corpus::GenerationSet;
use genscope::planner::Mdp;

// ── Alignment oracles ──────────────────────────────────────────────────────

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Last {
    Start,
    Diag,
    GapInB,
    GapInA,
}

/// Optimal affine-gap global alignment score by memoized suffix recursion
/// conditioned on the previous column's operation.
pub fn oracle_align_score(a: &str, b: &str, s: &ScoringScheme) -> f64 {
    let av: Vec<char> = a.chars().collect();
    let bv: Vec<char> = b.chars().collect();
    let mut memo: HashMap<(usize, usize, Last), f64> = HashMap::new();
    suffix_best(&av, &bv, 0, 0, Last::Start, s, &mut memo)
}

fn suffix_best(
    a: &[char],
    b: &[char],
    i: usize,
    j: usize,
    last: Last,
    s: &ScoringScheme,
    memo: &mut HashMap<(usize, usize, Last), f64>,
) -> f64 {
    if i == a.len() && j == b.len() {
        return 0.0;
    }
    if let Some(&v) = memo.get(&(i, j, last)) {
        return v;
    }
    let mut best = f64::NEG_INFINITY;
    if i < a.len() && j < b.len() {
        let sub = if a[i] == b[j] { s.match_score } else { s.mismatch };
        best = best.max(sub + suffix_best(a, b, i + 1, j + 1, Last::Diag, s, memo));
    }
    if i < a.len() {
        let cost = if last == Last::GapInB { s.gap_extend } else { s.gap_open };
        best = best.max(cost + suffix_best(a, b, i + 1, j, Last::GapInB, s, memo));
    }
    if j < b.len() {
        let cost = if last == Last::GapInA { s.gap_extend } else { s.gap_open };
        best = best.max(cost + suffix_best(a, b, i, j + 1, Last::GapInA, s, memo));
    }
    memo.insert((i, j, last), best);
    best
}

/// Plain depth-first enumeration of every global alignment, no memoization;
/// only viable for tiny strings. Cross-checks the memoized oracle.
pub fn enumerated_align_score(a: &str, b: &str, s: &ScoringScheme) -> f64 {
    let av: Vec<char> = a.chars().collect();
    let bv: Vec<char> = b.chars().collect();
    let mut best = f64::NEG_INFINITY;
    dfs(&av, &bv, 0, 0, Last::Start, 0.0, s, &mut best);
    best
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    a: &[char],
    b: &[char],
    i: usize,
    j: usize,
    last: Last,
    score: f64,
    s: &ScoringScheme,
    best: &mut f64,
) {
    if i == a.len() && j == b.len() {
        if score > *best {
            *best = score;
        }
        return;
    }
    if i < a.len() && j < b.len() {
        let sub = if a[i] == b[j] { s.match_score } else { s.mismatch };
        dfs(a, b, i + 1, j + 1, Last::Diag, score + sub, s, best);
    }
    if i < a.len() {
        let cost = if last == Last::GapInB { s.gap_extend } else { s.gap_open };
        dfs(a, b, i + 1, j, Last::GapInB, score + cost, s, best);
    }
    if j < b.len() {
        let cost = if last == Last::GapInA { s.gap_extend } else { s.gap_open };
        dfs(a, b, i, j + 1, Last::GapInA, score + cost, s, best);
    }
}

// ── UPGMA oracle ───────────────────────────────────────────────────────────

/// Textbook O(N^3) average-linkage agglomeration: cluster distances are
/// recomputed from the original matrix at every step. Returns the merge
/// sequence as leaf-set pairs ordered by smallest member.
pub fn oracle_upgma_merges(
    dist: &[Vec<f64>],
) -> Vec<(BTreeSet<usize>, BTreeSet<usize>)> {
    let n = dist.len();
    let mut clusters: Vec<Option<Vec<usize>>> = (0..n).map(|i| Some(vec![i])).collect();
    let mut merges = Vec::new();

    for _ in 0..(n - 1) {
        let mut best = f64::INFINITY;
        let (mut bi, mut bj) = (0, 0);
        for i in 0..clusters.len() {
            let Some(ci) = &clusters[i] else { continue };
            for j in (i + 1)..clusters.len() {
                let Some(cj) = &clusters[j] else { continue };
                let mut sum = 0.0;
                for &x in ci {
                    for &y in cj {
                        sum += dist[x][y];
                    }
                }
                let d = sum / (ci.len() * cj.len()) as f64;
                if d < best {
                    best = d;
                    bi = i;
                    bj = j;
                }
            }
        }
        let a: BTreeSet<usize> = clusters[bi].as_ref().unwrap().iter().copied().collect();
        let b: BTreeSet<usize> = clusters[bj].as_ref().unwrap().iter().copied().collect();
        merges.push(if a.iter().next() <= b.iter().next() { (a, b) } else { (b, a) });

        let merged: Vec<usize> = clusters[bi]
            .take()
            .unwrap()
            .into_iter()
            .chain(clusters[bj].take().unwrap())
            .collect();
        clusters[bi] = Some(merged);
    }
    merges
}

// ── N-gram oracle ──────────────────────────────────────────────────────────

/// Naive n-gram statistics: no hashing anywhere, tokens compared as strings,
/// distinct grams found by sort+dedup, containment by nested window scans.
pub struct NaiveNgramStats {
    pub max_support: usize,
    pub distinct: usize,
    pub total_occurrences: usize,
    pub histogram: BTreeMap<usize, u64>,
}

pub fn naive_ngram_stats(gs: &GenerationSet, n: usize) -> Option<NaiveNgramStats> {
    let streams: Vec<Vec<String>> = gs
        .generations
        .iter()
        .map(|g| match &g.token_ids {
            Some(ids) => ids.iter().map(|i| format!("#{i}")).collect(),
            None => g.text.split_whitespace().map(str::to_string).collect(),
        })
        .collect();
    if streams.iter().all(|t| t.len() < n) {
        return None;
    }

    let mut all_grams: Vec<Vec<String>> = Vec::new();
    let mut total_occurrences = 0usize;
    for stream in &streams {
        if stream.len() < n {
            continue;
        }
        for w in stream.windows(n) {
            all_grams.push(w.to_vec());
            total_occurrences += 1;
        }
    }
    all_grams.sort();
    all_grams.dedup();

    let mut histogram: BTreeMap<usize, u64> = (1..=streams.len()).map(|b| (b, 0)).collect();
    let mut max_support = 0usize;
    for gram in &all_grams {
        let mut support = 0usize;
        for stream in &streams {
            if stream.len() < n {
                continue;
            }
            if stream.windows(n).any(|w| w == gram.as_slice()) {
                support += 1;
            }
        }
        max_support = max_support.max(support);
        *histogram.get_mut(&support).unwrap() += 1;
    }
    Some(NaiveNgramStats {
        max_support,
        distinct: all_grams.len(),
        total_occurrences,
        histogram,
    })
}

// ── Value-iteration oracle ─────────────────────────────────────────────────

/// Independent high-precision sweep: plain loop to sup-norm 1e-12 with a
/// generous iteration budget.
pub fn oracle_values(m: &Mdp) -> Vec<f64> {
    let s_count = m.n_states();
    let mut v = vec![0.0f64; s_count];
    for _ in 0..2_000_000usize {
        let mut next = vec![f64::NEG_INFINITY; s_count];
        for s in 0..s_count {
            for a in 0..m.n_actions() {
                let mut q = m.reward(s, a);
                for (sp, &p) in m.transition(s, a).iter().enumerate() {
                    q += m.gamma() * p * v[sp];
                }
                if q > next[s] {
                    next[s] = q;
                }
            }
        }
        let delta = v
            .iter()
            .zip(next.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        v = next;
        if delta <= 1e-12 {
            break;
        }
    }
    v
}

/// Deterministic pseudo-random string over the given alphabet.
pub fn random_string(rng: &mut impl rand::Rng, alphabet: &[char], len: usize) -> String {
    (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect()
}
