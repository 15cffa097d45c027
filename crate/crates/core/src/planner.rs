//! Finite-MDP value iteration and the stochasticity-penalty verifier.
//!
//! `value_iteration` solves V(s) = max_a [ R(s,a) + gamma * sum_s' P(s'|s,a)
//! V(s') ] from V = 0, stopping when the sup-norm update falls below
//! tol * (1-gamma)/gamma so the true-value error is at most tol.
//!
//! The verifier compares the optimal values of an MDP against its
//! deterministic counterpart: same states, one action per reachable
//! successor with probability 1, reward the maximum over original actions
//! supporting that successor. Full control over equal connectivity can only
//! help, so V_det >= V_stoch pointwise.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub enum PlannerError {
    BadGamma { gamma: f64 },
    BadTransition { state: usize, action: usize, sum: f64 },
    NonFiniteReward { state: usize, action: usize },
    BadShape { what: &'static str },
    BadTolerance { tol: f64 },
    Io { path: String, source: std::io::Error },
    Malformed { path: String, detail: String },
}

impl fmt::Display for PlannerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlannerError::BadGamma { gamma } => {
                write!(f, "gamma must lie strictly inside (0,1), got {gamma}")
            }
            PlannerError::BadTransition { state, action, sum } => {
                write!(f, "P({state},{action}) sums to {sum}, not 1")
            }
            PlannerError::NonFiniteReward { state, action } => {
                write!(f, "R({state},{action}) is not finite")
            }
            PlannerError::BadShape { what } => write!(f, "bad shape: {what}"),
            PlannerError::BadTolerance { tol } => write!(f, "tolerance must be positive, got {tol}"),
            PlannerError::Io { path, source } => write!(f, "{path}: {source}"),
            PlannerError::Malformed { path, detail } => write!(f, "{path}: {detail}"),
        }
    }
}

impl std::error::Error for PlannerError {}

/// Finite MDP with dense rewards and transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    /// R(s,a), indexed s * A + a.
    rewards: Vec<f64>,
    /// P(s'|s,a), indexed (s * A + a) * S + s'.
    transitions: Vec<f64>,
}

impl Mdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        gamma: f64,
        rewards: Vec<f64>,
        transitions: Vec<f64>,
    ) -> Result<Self, PlannerError> {
        if n_states == 0 || n_actions == 0 {
            return Err(PlannerError::BadShape { what: "S and A must be positive" });
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(PlannerError::BadGamma { gamma });
        }
        if rewards.len() != n_states * n_actions {
            return Err(PlannerError::BadShape { what: "rewards must be S*A" });
        }
        if transitions.len() != n_states * n_actions * n_states {
            return Err(PlannerError::BadShape { what: "transitions must be S*A*S" });
        }
        let mdp = Mdp { n_states, n_actions, gamma, rewards, transitions };
        for s in 0..n_states {
            for a in 0..n_actions {
                if !mdp.reward(s, a).is_finite() {
                    return Err(PlannerError::NonFiniteReward { state: s, action: a });
                }
                let row = mdp.transition(s, a);
                if row.iter().any(|&p| p < 0.0) {
                    return Err(PlannerError::BadTransition { state: s, action: a, sum: -1.0 });
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(PlannerError::BadTransition { state: s, action: a, sum });
                }
            }
        }
        Ok(mdp)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s * self.n_actions + a]
    }

    pub fn transition(&self, s: usize, a: usize) -> &[f64] {
        let base = (s * self.n_actions + a) * self.n_states;
        &self.transitions[base..base + self.n_states]
    }
}

/// Optimal state values with the iteration count and final Bellman residual.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    pub values: Vec<f64>,
    pub iterations: usize,
    /// Final sup-norm change between successive iterates.
    pub residual: f64,
}

const MAX_ITERATIONS: usize = 10_000_000;

/// Value iteration from V = 0 until the sup-norm step falls below
/// tol * (1-gamma)/gamma.
pub fn value_iteration(m: &Mdp, tol: f64) -> Result<ValueFunction, PlannerError> {
    if !(tol > 0.0) {
        return Err(PlannerError::BadTolerance { tol });
    }
    let stop = tol * (1.0 - m.gamma) / m.gamma;
    let mut values = vec![0.0f64; m.n_states];
    let mut next = vec![0.0f64; m.n_states];
    let mut prev_delta = f64::INFINITY;
    let mut iterations = 0;
    let mut residual = f64::INFINITY;

    while iterations < MAX_ITERATIONS {
        let mut delta = 0.0f64;
        for s in 0..m.n_states {
            let mut best = f64::NEG_INFINITY;
            for a in 0..m.n_actions {
                let mut q = m.reward(s, a);
                let row = m.transition(s, a);
                let mut exp = 0.0;
                for (p, v) in row.iter().zip(values.iter()) {
                    exp += p * v;
                }
                q += m.gamma * exp;
                if q > best {
                    best = q;
                }
            }
            next[s] = best;
            delta = delta.max((best - values[s]).abs());
        }
        std::mem::swap(&mut values, &mut next);
        iterations += 1;
        residual = delta;
        // Contraction: sup-norm deltas never grow after the first sweep.
        debug_assert!(delta <= prev_delta + 1e-12, "value iteration delta grew");
        prev_delta = delta;
        if delta <= stop {
            break;
        }
    }
    Ok(ValueFunction { values, iterations, residual })
}

/// States with non-zero probability under any action from `s`.
pub fn reachable_set(m: &Mdp, s: usize) -> BTreeSet<usize> {
    let mut set = BTreeSet::new();
    for a in 0..m.n_actions {
        for (sp, &p) in m.transition(s, a).iter().enumerate() {
            if p > 0.0 {
                set.insert(sp);
            }
        }
    }
    set
}

/// Same states and connectivity, full control: from each state there is one
/// action per reachable successor that reaches it with probability 1. That
/// action's reward is the maximum over original actions whose support
/// contains the successor. Action lists are padded to a rectangular shape by
/// repeating the first action.
pub fn deterministic_counterpart(m: &Mdp) -> Mdp {
    let s_count = m.n_states();
    let reach: Vec<Vec<usize>> =
        (0..s_count).map(|s| reachable_set(m, s).into_iter().collect()).collect();
    let a_count = reach.iter().map(|r| r.len()).max().expect("at least one state");

    let mut rewards = vec![0.0f64; s_count * a_count];
    let mut transitions = vec![0.0f64; s_count * a_count * s_count];
    for s in 0..s_count {
        for a in 0..a_count {
            let target = reach[s][a.min(reach[s].len() - 1)];
            let mut best = f64::NEG_INFINITY;
            for orig_a in 0..m.n_actions() {
                if m.transition(s, orig_a)[target] > 0.0 {
                    best = best.max(m.reward(s, orig_a));
                }
            }
            rewards[s * a_count + a] = best;
            transitions[(s * a_count + a) * s_count + target] = 1.0;
        }
    }
    Mdp::new(s_count, a_count, m.gamma(), rewards, transitions)
        .expect("counterpart construction preserves validity")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PenaltyReport {
    pub holds: bool,
    pub worst_gap: f64,
    /// Total value-iteration sweeps across both solves.
    pub iterations: usize,
}

/// Solves the MDP and its deterministic counterpart, then checks
/// V_det >= V_stoch pointwise within 10 * tol.
pub fn verify_stochasticity_penalty(m: &Mdp, tol: f64) -> Result<PenaltyReport, PlannerError> {
    let stoch = value_iteration(m, tol)?;
    let det_mdp = deterministic_counterpart(m);
    let det = value_iteration(&det_mdp, tol)?;
    let worst_gap = det
        .values
        .iter()
        .zip(stoch.values.iter())
        .map(|(d, s)| d - s)
        .fold(f64::INFINITY, f64::min);
    Ok(PenaltyReport {
        holds: worst_gap >= -10.0 * tol,
        worst_gap,
        iterations: stoch.iterations + det.iterations,
    })
}

/// Iterative evaluation of a stationary policy with the same stopping rule
/// as value iteration.
pub fn evaluate_policy(m: &Mdp, policy: &[usize], tol: f64) -> Result<Vec<f64>, PlannerError> {
    if policy.len() != m.n_states() {
        return Err(PlannerError::BadShape { what: "policy must assign one action per state" });
    }
    if !(tol > 0.0) {
        return Err(PlannerError::BadTolerance { tol });
    }
    let stop = tol * (1.0 - m.gamma) / m.gamma;
    let mut values = vec![0.0f64; m.n_states()];
    let mut next = vec![0.0f64; m.n_states()];
    for _ in 0..MAX_ITERATIONS {
        let mut delta = 0.0f64;
        for s in 0..m.n_states() {
            let a = policy[s];
            let mut q = m.reward(s, a);
            let mut exp = 0.0;
            for (p, v) in m.transition(s, a).iter().zip(values.iter()) {
                exp += p * v;
            }
            q += m.gamma() * exp;
            next[s] = q;
            delta = delta.max((q - values[s]).abs());
        }
        std::mem::swap(&mut values, &mut next);
        if delta <= stop {
            break;
        }
    }
    Ok(values)
}

// ── File formats ────────────────────────────────────────────────────────────

#[derive(Debug, Serialize, Deserialize)]
struct MdpFile {
    #[serde(rename = "S")]
    s: usize,
    #[serde(rename = "A")]
    a: usize,
    gamma: f64,
    /// A x S reward matrix.
    #[serde(rename = "R")]
    r: Vec<Vec<f64>>,
    /// A x S x S transition tensor.
    #[serde(rename = "P")]
    p: Vec<Vec<Vec<f64>>>,
}

/// Loads an MDP from JSON with keys S, A, gamma, R (A x S), P (A x S x S).
pub fn load_mdp(path: &Path) -> Result<Mdp, PlannerError> {
    let text = fs::read_to_string(path)
        .map_err(|e| PlannerError::Io { path: path.display().to_string(), source: e })?;
    let file: MdpFile = serde_json::from_str(&text)
        .map_err(|e| PlannerError::Malformed { path: path.display().to_string(), detail: e.to_string() })?;
    if file.r.len() != file.a || file.r.iter().any(|row| row.len() != file.s) {
        return Err(PlannerError::BadShape { what: "R must be A x S" });
    }
    if file.p.len() != file.a
        || file.p.iter().any(|m| m.len() != file.s || m.iter().any(|row| row.len() != file.s))
    {
        return Err(PlannerError::BadShape { what: "P must be A x S x S" });
    }
    let mut rewards = vec![0.0f64; file.s * file.a];
    let mut transitions = vec![0.0f64; file.s * file.a * file.s];
    for a in 0..file.a {
        for s in 0..file.s {
            rewards[s * file.a + a] = file.r[a][s];
            for sp in 0..file.s {
                transitions[(s * file.a + a) * file.s + sp] = file.p[a][s][sp];
            }
        }
    }
    Mdp::new(file.s, file.a, file.gamma, rewards, transitions)
}

pub fn write_mdp(path: &Path, m: &Mdp) -> Result<(), PlannerError> {
    let mut r = vec![vec![0.0f64; m.n_states()]; m.n_actions()];
    let mut p = vec![vec![vec![0.0f64; m.n_states()]; m.n_states()]; m.n_actions()];
    for s in 0..m.n_states() {
        for a in 0..m.n_actions() {
            r[a][s] = m.reward(s, a);
            p[a][s] = m.transition(s, a).to_vec();
        }
    }
    let file = MdpFile { s: m.n_states(), a: m.n_actions(), gamma: m.gamma(), r, p };
    let mut out = serde_json::to_vec_pretty(&file)
        .map_err(|e| PlannerError::Malformed { path: path.display().to_string(), detail: e.to_string() })?;
    out.push(b'\n');
    fs::write(path, out).map_err(|e| PlannerError::Io { path: path.display().to_string(), source: e })
}
