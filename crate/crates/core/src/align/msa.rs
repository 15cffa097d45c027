//! Progressive profile-profile alignment along the guide tree.

use crate::corpus::GenerationSet;

use super::guide::{build_guide_tree, GuideNode};
use super::{affine_dp, AlignError, Op, ScoringScheme, DEFAULT_MAX_LEN, GAP};

/// A column-indexed multiple alignment. Every row has exactly `columns`
/// characters over the input alphabet plus [`GAP`]; removing gaps from row k
/// reproduces the k-th input exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Msa {
    pub columns: usize,
    pub rows: Vec<Vec<char>>,
    /// Sample index of each row; ascending.
    pub row_ids: Vec<usize>,
}

impl Msa {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn degapped_row(&self, row: usize) -> String {
        self.rows[row].iter().filter(|&&c| c != GAP).collect()
    }

    /// Plain-text export: one aligned row per line, '-' as the gap symbol.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.n_rows() * (self.columns + 1));
        for row in &self.rows {
            out.extend(row.iter());
            out.push('\n');
        }
        out
    }

    /// Character counts of one column over non-gap rows.
    pub fn column_counts(&self, col: usize) -> Vec<(char, usize)> {
        let mut counts: Vec<(char, usize)> = Vec::new();
        for row in &self.rows {
            let c = row[col];
            if c == GAP {
                continue;
            }
            match counts.binary_search_by_key(&c, |e| e.0) {
                Ok(pos) => counts[pos].1 += 1,
                Err(pos) => counts.insert(pos, (c, 1)),
            }
        }
        counts
    }
}

/// One partially built alignment: a set of rows plus per-column symbol
/// counts used by the profile scoring.
struct Profile {
    row_ids: Vec<usize>,
    rows: Vec<Vec<char>>,
    cols: Vec<ColCounts>,
}

struct ColCounts {
    /// Sorted (symbol, count) pairs over non-gap rows.
    counts: Vec<(char, u32)>,
    nongap: u32,
}

impl Profile {
    fn leaf(sample: usize, seq: &[char]) -> Self {
        let cols = seq
            .iter()
            .map(|&c| ColCounts { counts: vec![(c, 1)], nongap: 1 })
            .collect();
        Profile { row_ids: vec![sample], rows: vec![seq.to_vec()], cols }
    }

    fn from_rows(row_ids: Vec<usize>, rows: Vec<Vec<char>>) -> Self {
        let width = rows[0].len();
        let mut cols = Vec::with_capacity(width);
        for j in 0..width {
            let mut counts: Vec<(char, u32)> = Vec::new();
            let mut nongap = 0u32;
            for row in &rows {
                let c = row[j];
                if c == GAP {
                    continue;
                }
                nongap += 1;
                match counts.binary_search_by_key(&c, |e| e.0) {
                    Ok(pos) => counts[pos].1 += 1,
                    Err(pos) => counts.insert(pos, (c, 1)),
                }
            }
            cols.push(ColCounts { counts, nongap });
        }
        Profile { row_ids, rows, cols }
    }

    fn width(&self) -> usize {
        self.cols.len()
    }
}

/// Expected pair score between two profile columns: symbol frequencies are
/// normalized by total row count, so gap mass contributes nothing.
fn column_score(a: &ColCounts, b: &ColCounts, na: f64, nb: f64, s: &ScoringScheme) -> f64 {
    let mut dot = 0.0f64;
    let (mut i, mut j) = (0, 0);
    while i < a.counts.len() && j < b.counts.len() {
        match a.counts[i].0.cmp(&b.counts[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dot += a.counts[i].1 as f64 * b.counts[j].1 as f64;
                i += 1;
                j += 1;
            }
        }
    }
    let cross = a.nongap as f64 * b.nongap as f64;
    (s.mismatch * cross + (s.match_score - s.mismatch) * dot) / (na * nb)
}

/// Merges two profiles with the affine three-state DP over columns; the
/// resulting gap columns apply to every row of the inserted side at once,
/// so gaps introduced earlier are never removed.
fn merge_profiles(a: Profile, b: Profile, s: &ScoringScheme) -> Profile {
    let na = a.rows.len() as f64;
    let nb = b.rows.len() as f64;
    let (_, ops) = affine_dp(
        a.width(),
        b.width(),
        |i, j| column_score(&a.cols[i], &b.cols[j], na, nb, s),
        s,
    );

    let width = ops.len();
    let mut rows: Vec<Vec<char>> =
        Vec::with_capacity(a.rows.len() + b.rows.len());
    for row in &a.rows {
        let mut merged = Vec::with_capacity(width);
        let mut i = 0;
        for op in &ops {
            match op {
                Op::Diag | Op::Up => {
                    merged.push(row[i]);
                    i += 1;
                }
                Op::Left => merged.push(GAP),
            }
        }
        rows.push(merged);
    }
    for row in &b.rows {
        let mut merged = Vec::with_capacity(width);
        let mut j = 0;
        for op in &ops {
            match op {
                Op::Diag | Op::Left => {
                    merged.push(row[j]);
                    j += 1;
                }
                Op::Up => merged.push(GAP),
            }
        }
        rows.push(merged);
    }

    let mut row_ids = a.row_ids;
    row_ids.extend(b.row_ids);
    Profile::from_rows(row_ids, rows)
}

/// Progressive multiple sequence alignment of a generation set's texts.
pub fn progressive_msa(
    gs: &GenerationSet,
    s: &ScoringScheme,
    k: usize,
) -> Result<Msa, AlignError> {
    let texts: Vec<&str> = gs.texts();
    progressive_msa_strs(&texts, s, k)
}

pub fn progressive_msa_strs(
    seqs: &[&str],
    s: &ScoringScheme,
    k: usize,
) -> Result<Msa, AlignError> {
    progressive_msa_capped(seqs, s, k, DEFAULT_MAX_LEN)
}

pub fn progressive_msa_capped(
    seqs: &[&str],
    s: &ScoringScheme,
    k: usize,
    cap: usize,
) -> Result<Msa, AlignError> {
    s.validate()?;
    if seqs.len() < 2 {
        return Err(AlignError::TooFewSequences { n: seqs.len() });
    }
    let chars: Vec<Vec<char>> = seqs.iter().map(|t| t.chars().collect()).collect();
    for (index, seq) in chars.iter().enumerate() {
        if seq.is_empty() {
            return Err(AlignError::EmptyGeneration { index });
        }
        if seq.contains(&GAP) {
            return Err(AlignError::ContainsGap { index });
        }
        if seq.len() > cap {
            return Err(AlignError::LengthCap { index, len: seq.len(), cap });
        }
    }

    let tree = build_guide_tree(seqs, k)?;
    let mut profiles: Vec<Option<Profile>> = Vec::with_capacity(tree.nodes.len());
    for node in &tree.nodes {
        let profile = match node {
            GuideNode::Leaf { sample } => Profile::leaf(*sample, &chars[*sample]),
            GuideNode::Internal { left, right } => {
                let a = profiles[*left].take().expect("child profile consumed once");
                let b = profiles[*right].take().expect("child profile consumed once");
                merge_profiles(a, b, s)
            }
        };
        profiles.push(Some(profile));
    }
    let final_profile = profiles[tree.root].take().unwrap();

    // Order rows by sample index.
    let mut order: Vec<usize> = (0..final_profile.rows.len()).collect();
    order.sort_by_key(|&r| final_profile.row_ids[r]);
    let columns = final_profile.width();
    let mut rows = Vec::with_capacity(order.len());
    let mut row_ids = Vec::with_capacity(order.len());
    for r in order {
        rows.push(final_profile.rows[r].clone());
        row_ids.push(final_profile.row_ids[r]);
    }

    let msa = Msa { columns, rows, row_ids };
    debug_assert!(msa
        .rows
        .iter()
        .enumerate()
        .all(|(r, _)| msa.degapped_row(r) == seqs[msa.row_ids[r]]));
    Ok(msa)
}
