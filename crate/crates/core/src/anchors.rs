//! Anchor-span extraction from a multiple alignment and the Sankey flow
//! graph of anchors across generations.
//!
//! An anchor span is a gap-free substring of minimum length that a threshold
//! fraction of rows carry verbatim at the same alignment columns. The same
//! text at two different column intervals counts as two spans. Selection is
//! greedy by support then length, discounting supporters already counted by
//! an overlapping picked span so generations cannot double count.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::align::{Msa, GAP};

/// Defaults: spans of at least 30 characters supported by at least 20% of
/// generations, up to 6 picked per prompt.
pub const DEFAULT_MIN_LENGTH: usize = 30;
pub const DEFAULT_THRESHOLD: f64 = 0.20;
pub const DEFAULT_MAX_SPANS: usize = 6;

#[derive(Debug)]
pub enum AnchorError {
    /// A generation's own path visits two spans that overlap in columns.
    OverlappingVisit { sample: usize },
}

impl fmt::Display for AnchorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnchorError::OverlappingVisit { sample } => {
                write!(f, "generation {sample} visits column-overlapping spans")
            }
        }
    }
}

impl std::error::Error for AnchorError {}

/// A supported verbatim span at an alignment column interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchorSpan {
    /// Column interval [col_start, col_end).
    pub col_start: usize,
    pub col_end: usize,
    /// The shared gap-free content over the interval.
    pub text: String,
    /// Sample indices exhibiting the span.
    pub support: BTreeSet<usize>,
    pub length_chars: usize,
}

/// Minimum support count for `n` rows at a fractional threshold, guarded
/// against binary-representation noise (0.2 * 100 must be 20, not 21).
pub fn support_floor(n: usize, threshold: f64) -> usize {
    (((threshold * n as f64) - 1e-9).ceil().max(1.0)) as usize
}

/// Enumerates all maximal spans: row classes with identical gap-free content
/// over a column interval, support at least `ceil(threshold * N)`, length at
/// least `min_length`, and an interval not extendable in either direction
/// without changing the class.
pub fn enumerate_candidate_spans(
    msa: &Msa,
    min_length: usize,
    threshold: f64,
) -> Vec<AnchorSpan> {
    let n = msa.n_rows();
    let floor = support_floor(n, threshold);
    let mut out = Vec::new();

    for start in 0..msa.columns {
        // Partition rows by character at the start column (non-gap only).
        let mut classes = partition(msa, (0..n).collect(), start);
        classes.retain(|c| c.len() >= floor);
        for class in classes {
            if start > 0 && agrees_at(msa, &class, start - 1) {
                // Covered by a span starting one column earlier.
                continue;
            }
            extend_class(msa, class, start, start + 1, floor, min_length, &mut out);
        }
    }

    out.sort_by(|a, b| {
        (a.col_start, a.col_end, a.support.iter().next())
            .cmp(&(b.col_start, b.col_end, b.support.iter().next()))
    });
    out
}

/// Extends a class rightward, branching into subclasses when rows diverge.
/// Emits the maximal interval for every surviving branch.
fn extend_class(
    msa: &Msa,
    class: Vec<usize>,
    start: usize,
    from: usize,
    floor: usize,
    min_length: usize,
    out: &mut Vec<AnchorSpan>,
) {
    let members = class;
    let mut end = from;
    loop {
        if end == msa.columns {
            emit(msa, &members, start, end, min_length, out);
            return;
        }
        let groups = partition(msa, members.clone(), end);
        if groups.len() == 1 && groups[0].len() == members.len() {
            end += 1;
            continue;
        }
        // The class breaks here: its own interval ends at `end`.
        emit(msa, &members, start, end, min_length, out);
        for group in groups {
            if group.len() < floor {
                continue;
            }
            // A subgroup agreeing at start-1 is a sub-span of a span the
            // start-1 enumeration already yields.
            if start > 0 && agrees_at(msa, &group, start - 1) {
                continue;
            }
            extend_class(msa, group, start, end + 1, floor, min_length, out);
        }
        return;
    }
}

/// Splits `rows` by their (non-gap) character at `col`; gap rows drop out.
/// Groups are ordered by character for determinism.
fn partition(msa: &Msa, rows: Vec<usize>, col: usize) -> Vec<Vec<usize>> {
    let mut groups: Vec<(char, Vec<usize>)> = Vec::new();
    for row in rows {
        let c = msa.rows[row][col];
        if c == GAP {
            continue;
        }
        match groups.binary_search_by_key(&c, |g| g.0) {
            Ok(pos) => groups[pos].1.push(row),
            Err(pos) => groups.insert(pos, (c, Vec::from([row]))),
        }
    }
    groups.into_iter().map(|(_, rows)| rows).collect()
}

/// True when every listed row has the same non-gap character at `col`.
fn agrees_at(msa: &Msa, rows: &[usize], col: usize) -> bool {
    let first = msa.rows[rows[0]][col];
    first != GAP && rows.iter().all(|&r| msa.rows[r][col] == first)
}

fn emit(
    msa: &Msa,
    members: &[usize],
    start: usize,
    end: usize,
    min_length: usize,
    out: &mut Vec<AnchorSpan>,
) {
    if end - start < min_length {
        return;
    }
    let text: String = msa.rows[members[0]][start..end].iter().collect();
    let support: BTreeSet<usize> = members.iter().map(|&r| msa.row_ids[r]).collect();
    out.push(AnchorSpan {
        col_start: start,
        col_end: end,
        length_chars: text.chars().count(),
        text,
        support,
    });
}

/// Greedy selection: repeatedly pick the remaining candidate with the
/// largest support (ties: longer, then leftmost), then remove the picked
/// span's supporters from every column-overlapping unpicked candidate and
/// drop candidates that fall below the support floor.
pub fn select_anchor_spans(
    candidates: &[AnchorSpan],
    n_rows: usize,
    threshold: f64,
    max_spans: usize,
) -> Vec<AnchorSpan> {
    let floor = support_floor(n_rows, threshold);
    let mut pool: Vec<AnchorSpan> = candidates.to_vec();
    let mut picked = Vec::new();

    while picked.len() < max_spans {
        pool.retain(|c| c.support.len() >= floor);
        if pool.is_empty() {
            break;
        }
        pool.sort_by(|a, b| {
            b.support
                .len()
                .cmp(&a.support.len())
                .then(b.length_chars.cmp(&a.length_chars))
                .then(a.col_start.cmp(&b.col_start))
                .then(a.col_end.cmp(&b.col_end))
                .then(a.text.cmp(&b.text))
        });
        let chosen = pool.remove(0);
        for other in &mut pool {
            if overlaps(&chosen, other) {
                other.support = other.support.difference(&chosen.support).copied().collect();
            }
        }
        picked.push(chosen);
    }
    picked
}

fn overlaps(a: &AnchorSpan, b: &AnchorSpan) -> bool {
    a.col_start < b.col_end && b.col_start < a.col_end
}

/// Index of the SOURCE node in [`SankeyGraph::nodes`]; SINK is the last node.
pub const SOURCE: usize = 0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SankeyNode {
    pub id: String,
    /// Span text truncated to 60 characters for display; "SOURCE"/"SINK" for
    /// the endpoints.
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub col_start: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub col_end: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SankeyLink {
    /// Indices into the node list.
    pub source: usize,
    pub target: usize,
    pub value: u64,
}

/// Flow graph of anchors: each generation contributes one unit of flow along
/// SOURCE -> (its spans in column order) -> SINK.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SankeyGraph {
    pub nodes: Vec<SankeyNode>,
    pub links: Vec<SankeyLink>,
}

impl SankeyGraph {
    pub fn sink(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn outflow(&self, node: usize) -> u64 {
        self.links.iter().filter(|l| l.source == node).map(|l| l.value).sum()
    }

    pub fn inflow(&self, node: usize) -> u64 {
        self.links.iter().filter(|l| l.target == node).map(|l| l.value).sum()
    }
}

/// Builds the Sankey graph for selected spans. Spans are ordered by start
/// column (ties: longer first); a generation whose own path would traverse
/// two column-overlapping spans is an error.
pub fn build_sankey(msa: &Msa, spans: &[AnchorSpan]) -> Result<SankeyGraph, AnchorError> {
    let mut ordered: Vec<&AnchorSpan> = spans.iter().collect();
    ordered.sort_by(|a, b| {
        a.col_start
            .cmp(&b.col_start)
            .then(b.length_chars.cmp(&a.length_chars))
            .then(a.col_end.cmp(&b.col_end))
            .then(a.text.cmp(&b.text))
    });

    let mut nodes = Vec::with_capacity(ordered.len() + 2);
    nodes.push(SankeyNode {
        id: "source".into(),
        label: "SOURCE".into(),
        col_start: None,
        col_end: None,
        support: None,
    });
    for (k, span) in ordered.iter().enumerate() {
        nodes.push(SankeyNode {
            id: format!("a{k}"),
            label: span.text.chars().take(60).collect(),
            col_start: Some(span.col_start),
            col_end: Some(span.col_end),
            support: Some(span.support.len()),
        });
    }
    nodes.push(SankeyNode {
        id: "sink".into(),
        label: "SINK".into(),
        col_start: None,
        col_end: None,
        support: None,
    });
    let sink = nodes.len() - 1;

    let mut counts: std::collections::BTreeMap<(usize, usize), u64> = Default::default();
    for &sample in &msa.row_ids {
        let mut prev = SOURCE;
        let mut prev_span: Option<&AnchorSpan> = None;
        for (k, span) in ordered.iter().enumerate() {
            if !span.support.contains(&sample) {
                continue;
            }
            if let Some(p) = prev_span {
                if overlaps(p, span) {
                    return Err(AnchorError::OverlappingVisit { sample });
                }
            }
            *counts.entry((prev, k + 1)).or_insert(0) += 1;
            prev = k + 1;
            prev_span = Some(span);
        }
        *counts.entry((prev, sink)).or_insert(0) += 1;
    }

    let links = counts
        .into_iter()
        .map(|((source, target), value)| SankeyLink { source, target, value })
        .collect();
    Ok(SankeyGraph { nodes, links })
}

/// Static SVG rendering: nodes as vertical bars laid out left to right,
/// links as bands with width proportional to flow.
pub fn sankey_to_svg(graph: &SankeyGraph, width: f64, height: f64) -> String {
    let n = graph.nodes.len();
    let total: f64 = graph.outflow(SOURCE) as f64;
    let margin = 30.0;
    let bar_w = 12.0;
    let step = if n > 1 { (width - 2.0 * margin - bar_w) / (n - 1) as f64 } else { 0.0 };
    let scale = if total > 0.0 { (height - 2.0 * margin) / total } else { 0.0 };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {width} {height}\">\n"
    ));

    // Per-node geometry: x position and bar height from throughput.
    let mut x = Vec::with_capacity(n);
    let mut bar_h = Vec::with_capacity(n);
    let mut y_top = Vec::with_capacity(n);
    for k in 0..n {
        let through = graph.outflow(k).max(graph.inflow(k)) as f64;
        let h = through * scale;
        x.push(margin + k as f64 * step);
        bar_h.push(h);
        y_top.push((height - h) / 2.0);
    }

    // Links first so bars draw over them. Band offsets stack per endpoint.
    let mut out_used = vec![0.0f64; n];
    let mut in_used = vec![0.0f64; n];
    for link in &graph.links {
        let w = link.value as f64 * scale;
        let x0 = x[link.source] + bar_w;
        let y0 = y_top[link.source] + out_used[link.source] + w / 2.0;
        let x1 = x[link.target];
        let y1 = y_top[link.target] + in_used[link.target] + w / 2.0;
        out_used[link.source] += w;
        in_used[link.target] += w;
        let cx = (x0 + x1) / 2.0;
        svg.push_str(&format!(
            "  <path d=\"M {x0:.1} {y0:.1} C {cx:.1} {y0:.1}, {cx:.1} {y1:.1}, {x1:.1} {y1:.1}\" \
             stroke=\"#7aa6c2\" stroke-opacity=\"0.55\" stroke-width=\"{w:.1}\" fill=\"none\"/>\n"
        ));
    }

    for (k, node) in graph.nodes.iter().enumerate() {
        let xs = x[k];
        let ys = y_top[k];
        let h = bar_h[k].max(1.0);
        svg.push_str(&format!(
            "  <rect x=\"{xs:.1}\" y=\"{ys:.1}\" width=\"{bar_w}\" height=\"{h:.1}\" fill=\"#2c5d7c\"/>\n"
        ));
        let label: String = node.label.chars().take(24).collect();
        let ty = ys - 4.0;
        svg.push_str(&format!(
            "  <text x=\"{xs:.1}\" y=\"{ty:.1}\" font-size=\"9\" font-family=\"sans-serif\">{}</text>\n",
            xml_escape(&label)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
