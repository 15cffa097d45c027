//! Guide-tree construction: k-mer Jaccard distances plus UPGMA agglomeration.

use std::collections::BTreeSet;
use std::collections::HashSet;

use super::AlignError;

/// 1 - Jaccard similarity of the two strings' k-mer sets. Strings shorter
/// than k have empty k-mer sets; two empty sets are at distance 0.
pub fn kmer_distance(a: &str, b: &str, k: usize) -> f64 {
    assert!(k >= 1, "k must be at least 1");
    let sa = kmer_set(a, k);
    let sb = kmer_set(b, k);
    set_distance(&sa, &sb)
}

fn kmer_set(s: &str, k: usize) -> HashSet<Vec<char>> {
    let chars: Vec<char> = s.chars().collect();
    if chars.len() < k {
        return HashSet::new();
    }
    chars.windows(k).map(|w| w.to_vec()).collect()
}

fn set_distance(a: &HashSet<Vec<char>>, b: &HashSet<Vec<char>>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    1.0 - inter as f64 / union as f64
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GuideNode {
    Leaf { sample: usize },
    Internal { left: usize, right: usize },
}

/// Binary merge order for progressive alignment: exactly N leaves and N-1
/// internal nodes, children always preceding parents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuideTree {
    pub nodes: Vec<GuideNode>,
    pub root: usize,
}

impl GuideTree {
    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, GuideNode::Leaf { .. })).count()
    }

    /// Leaf sets under a node, for canonical comparison against reference
    /// implementations.
    pub fn leaves_under(&self, node: usize) -> BTreeSet<usize> {
        match &self.nodes[node] {
            GuideNode::Leaf { sample } => BTreeSet::from([*sample]),
            GuideNode::Internal { left, right } => {
                let mut set = self.leaves_under(*left);
                set.extend(self.leaves_under(*right));
                set
            }
        }
    }

    /// The merge sequence as pairs of leaf sets, each pair ordered by its
    /// smallest leaf.
    pub fn merges(&self) -> Vec<(BTreeSet<usize>, BTreeSet<usize>)> {
        let mut out = Vec::new();
        for node in &self.nodes {
            if let GuideNode::Internal { left, right } = node {
                let a = self.leaves_under(*left);
                let b = self.leaves_under(*right);
                if a.iter().next() <= b.iter().next() {
                    out.push((a, b));
                } else {
                    out.push((b, a));
                }
            }
        }
        out
    }
}

/// UPGMA agglomeration over pairwise k-mer distances. Ties are broken by the
/// smallest (i, j) cluster-slot pair, so the tree is deterministic.
pub fn build_guide_tree(seqs: &[&str], k: usize) -> Result<GuideTree, AlignError> {
    let n = seqs.len();
    if n < 2 {
        return Err(AlignError::TooFewSequences { n });
    }
    let sets: Vec<HashSet<Vec<char>>> = seqs.iter().map(|s| kmer_set(s, k)).collect();
    let mut dist = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = set_distance(&sets[i], &sets[j]);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    Ok(upgma(dist))
}

pub(crate) fn upgma(mut dist: Vec<Vec<f64>>) -> GuideTree {
    let n = dist.len();
    let mut nodes: Vec<GuideNode> = (0..n).map(|sample| GuideNode::Leaf { sample }).collect();
    let mut node_of: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];

    for _ in 0..(n - 1) {
        let mut best = f64::INFINITY;
        let (mut bi, mut bj) = (0, 0);
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if active[j] && dist[i][j] < best {
                    best = dist[i][j];
                    bi = i;
                    bj = j;
                }
            }
        }

        let parent = nodes.len();
        nodes.push(GuideNode::Internal { left: node_of[bi], right: node_of[bj] });

        let (si, sj) = (size[bi] as f64, size[bj] as f64);
        for m in 0..n {
            if active[m] && m != bi && m != bj {
                let d = (dist[bi][m] * si + dist[bj][m] * sj) / (si + sj);
                dist[bi][m] = d;
                dist[m][bi] = d;
            }
        }
        node_of[bi] = parent;
        size[bi] += size[bj];
        active[bj] = false;
    }

    let root = nodes.len() - 1;
    GuideTree { nodes, root }
}
