//! Character-level multiple sequence alignment of sampled continuations.
//!
//! The pipeline mirrors classic progressive alignment: pairwise affine-gap
//! dynamic programming (three-state recurrence) as the primitive, a UPGMA
//! guide tree over k-mer Jaccard distances, then profile-profile alignment
//! along the tree ("once a gap, always a gap"). On top of the finished
//! alignment sit the per-position overlap curves.

mod guide;
mod msa;
mod overlap;

pub use guide::{build_guide_tree, kmer_distance, GuideNode, GuideTree};
pub use msa::{progressive_msa, progressive_msa_capped, progressive_msa_strs, Msa};
pub use overlap::{mean_curve_values, overlap_curve, OverlapCurve, OverlapMetric, CURVE_LEN};

use std::fmt;

/// The gap symbol used in alignments; input sequences must not contain it.
pub const GAP: char = '-';

/// Per-generation length cap bounding the O(L^2) dynamic programs.
pub const DEFAULT_MAX_LEN: usize = 8000;

#[derive(Debug)]
pub enum AlignError {
    ContainsGap { index: usize },
    LengthCap { index: usize, len: usize, cap: usize },
    TooFewSequences { n: usize },
    EmptyGeneration { index: usize },
    NoSurvivingColumns,
    BadScheme(&'static str),
}

impl fmt::Display for AlignError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlignError::ContainsGap { index } => {
                write!(f, "sequence {index} contains the gap symbol '{GAP}'")
            }
            AlignError::LengthCap { index, len, cap } => {
                write!(f, "sequence {index} has length {len}, above the cap {cap}")
            }
            AlignError::TooFewSequences { n } => {
                write!(f, "need at least 2 sequences, got {n}")
            }
            AlignError::EmptyGeneration { index } => write!(f, "generation {index} is empty"),
            AlignError::NoSurvivingColumns => {
                write!(f, "no alignment column meets the minimum support")
            }
            AlignError::BadScheme(msg) => write!(f, "invalid scoring scheme: {msg}"),
        }
    }
}

impl std::error::Error for AlignError {}

/// Affine-gap scoring: a gap run of length g costs `gap_open + (g-1) * gap_extend`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScoringScheme {
    pub match_score: f64,
    pub mismatch: f64,
    pub gap_open: f64,
    pub gap_extend: f64,
}

impl Default for ScoringScheme {
    fn default() -> Self {
        // Chosen so a ~3-char shared phrase beats a gap.
        ScoringScheme { match_score: 2.0, mismatch: -1.0, gap_open: -3.0, gap_extend: -1.0 }
    }
}

impl ScoringScheme {
    pub fn validate(&self) -> Result<(), AlignError> {
        if !(self.match_score > self.mismatch) {
            return Err(AlignError::BadScheme("match must exceed mismatch"));
        }
        if !(self.gap_open < 0.0) {
            return Err(AlignError::BadScheme("gap_open must be negative"));
        }
        if !(self.gap_extend < 0.0) {
            return Err(AlignError::BadScheme("gap_extend must be negative"));
        }
        if !(self.gap_open <= self.gap_extend) {
            return Err(AlignError::BadScheme("gap_open must be <= gap_extend"));
        }
        Ok(())
    }

    pub fn score_pair(&self, a: char, b: char) -> f64 {
        if a == b {
            self.match_score
        } else {
            self.mismatch
        }
    }
}

/// One column of an alignment path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Op {
    /// Consume one item from both sides.
    Diag,
    /// Consume from the first side, gap in the second.
    Up,
    /// Gap in the first side, consume from the second.
    Left,
}

const NEG: f64 = f64::NEG_INFINITY;

// Traceback plane packing: bits 0-1 = M predecessor, 2-3 = X predecessor,
// 4-5 = Y predecessor, each encoding 0=M, 1=X, 2=Y.
const ST_M: u8 = 0;
const ST_X: u8 = 1;
const ST_Y: u8 = 2;

/// Three-state (Gotoh) global alignment over two item sequences of lengths
/// `m` and `n`, with `sub(i, j)` scoring item i of the first against item j
/// of the second. Returns the optimal score and the operation path.
///
/// State X ends in a gap in the second sequence (consuming the first),
/// state Y the reverse. Ties prefer M, then X, then Y.
pub(crate) fn affine_dp(
    m: usize,
    n: usize,
    mut sub: impl FnMut(usize, usize) -> f64,
    s: &ScoringScheme,
) -> (f64, Vec<Op>) {
    let w = n + 1;
    let mut tb = vec![0u8; (m + 1) * w];

    // Rolling rows of (M, X, Y) scores.
    let mut prev_m = vec![NEG; w];
    let mut prev_x = vec![NEG; w];
    let mut prev_y = vec![NEG; w];
    let mut cur_m = vec![NEG; w];
    let mut cur_x = vec![NEG; w];
    let mut cur_y = vec![NEG; w];

    prev_m[0] = 0.0;
    for j in 1..=n {
        prev_y[j] = s.gap_open + (j as f64 - 1.0) * s.gap_extend;
        tb[j] = if j == 1 { ST_M << 4 } else { ST_Y << 4 };
    }

    for i in 1..=m {
        cur_m[0] = NEG;
        cur_y[0] = NEG;
        cur_x[0] = s.gap_open + (i as f64 - 1.0) * s.gap_extend;
        tb[i * w] = if i == 1 { ST_M << 2 } else { ST_X << 2 };

        for j in 1..=n {
            let sc = sub(i - 1, j - 1);
            // M: diagonal step from any state.
            let (mp, mv) = best3(prev_m[j - 1], prev_x[j - 1], prev_y[j - 1]);
            let m_val = mv + sc;
            // X: gap in the second sequence.
            let (xp, xv) = best3(
                prev_m[j] + s.gap_open,
                prev_x[j] + s.gap_extend,
                prev_y[j] + s.gap_open,
            );
            // Y: gap in the first sequence.
            let (yp, yv) = best3(
                cur_m[j - 1] + s.gap_open,
                cur_x[j - 1] + s.gap_open,
                cur_y[j - 1] + s.gap_extend,
            );
            cur_m[j] = m_val;
            cur_x[j] = xv;
            cur_y[j] = yv;
            tb[i * w + j] = mp | (xp << 2) | (yp << 4);
        }
        std::mem::swap(&mut prev_m, &mut cur_m);
        std::mem::swap(&mut prev_x, &mut cur_x);
        std::mem::swap(&mut prev_y, &mut cur_y);
    }

    let (mut state, score) = {
        let (p, v) = best3(prev_m[n], prev_x[n], prev_y[n]);
        (p, v)
    };

    // Walk the traceback plane.
    let mut ops = Vec::with_capacity(m + n);
    let (mut i, mut j) = (m, n);
    while i > 0 || j > 0 {
        let cell = tb[i * w + j];
        match state {
            ST_M => {
                ops.push(Op::Diag);
                state = cell & 0b11;
                i -= 1;
                j -= 1;
            }
            ST_X => {
                ops.push(Op::Up);
                state = (cell >> 2) & 0b11;
                i -= 1;
            }
            _ => {
                ops.push(Op::Left);
                state = (cell >> 4) & 0b11;
                j -= 1;
            }
        }
    }
    ops.reverse();
    (score, ops)
}

/// Index of the best of three scores with tie preference M > X > Y.
fn best3(m: f64, x: f64, y: f64) -> (u8, f64) {
    if m >= x && m >= y {
        (ST_M, m)
    } else if x >= y {
        (ST_X, x)
    } else {
        (ST_Y, y)
    }
}

/// The result of a pairwise global alignment.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseAlignment {
    pub score: f64,
    pub aligned_a: String,
    pub aligned_b: String,
}

/// Optimal global alignment of two strings under affine gap scoring.
pub fn pairwise_align(
    a: &str,
    b: &str,
    s: &ScoringScheme,
) -> Result<PairwiseAlignment, AlignError> {
    pairwise_align_capped(a, b, s, DEFAULT_MAX_LEN)
}

pub fn pairwise_align_capped(
    a: &str,
    b: &str,
    s: &ScoringScheme,
    cap: usize,
) -> Result<PairwiseAlignment, AlignError> {
    s.validate()?;
    let ac: Vec<char> = a.chars().collect();
    let bc: Vec<char> = b.chars().collect();
    for (idx, seq) in [&ac, &bc].iter().enumerate() {
        if seq.contains(&GAP) {
            return Err(AlignError::ContainsGap { index: idx });
        }
        if seq.len() > cap {
            return Err(AlignError::LengthCap { index: idx, len: seq.len(), cap });
        }
    }

    let (score, ops) = affine_dp(ac.len(), bc.len(), |i, j| s.score_pair(ac[i], bc[j]), s);

    let mut aligned_a = String::with_capacity(ops.len());
    let mut aligned_b = String::with_capacity(ops.len());
    let (mut i, mut j) = (0, 0);
    for op in &ops {
        match op {
            Op::Diag => {
                aligned_a.push(ac[i]);
                aligned_b.push(bc[j]);
                i += 1;
                j += 1;
            }
            Op::Up => {
                aligned_a.push(ac[i]);
                aligned_b.push(GAP);
                i += 1;
            }
            Op::Left => {
                aligned_a.push(GAP);
                aligned_b.push(bc[j]);
                j += 1;
            }
        }
    }
    Ok(PairwiseAlignment { score, aligned_a, aligned_b })
}

/// Scores an already-aligned pair of rows under the affine scheme. Columns
/// where both rows carry a gap contribute nothing.
pub fn score_aligned_pair(a: &[char], b: &[char], s: &ScoringScheme) -> f64 {
    assert_eq!(a.len(), b.len(), "aligned rows must share a length");
    let mut score = 0.0;
    let mut in_gap_a = false;
    let mut in_gap_b = false;
    for (&ca, &cb) in a.iter().zip(b.iter()) {
        match (ca == GAP, cb == GAP) {
            (false, false) => {
                score += s.score_pair(ca, cb);
                in_gap_a = false;
                in_gap_b = false;
            }
            (true, false) => {
                score += if in_gap_a { s.gap_extend } else { s.gap_open };
                in_gap_a = true;
                in_gap_b = false;
            }
            (false, true) => {
                score += if in_gap_b { s.gap_extend } else { s.gap_open };
                in_gap_b = true;
                in_gap_a = false;
            }
            (true, true) => {}
        }
    }
    score
}
