//! Seeded synthetic fixtures for tests, the acceptance suite, and the
//! `fixtures` CLI subcommand.
//!
//! The templated ("rlhf-like") corpus plants three constant sentences per
//! prompt at 60-100% support, joined by fixed-length uppercase filler.
//! Sentences use lowercase letters and spaces while filler uses uppercase
//! only, so filler can never extend or invade a planted block under the
//! default scoring scheme and anchor recovery is exact by construction. The
//! independent ("base-like") corpus is random words with no shared
//! structure.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{
    DistributionTrace, Generation, GenerationSet, HiddenStateDataset, SamplingMethod, TraceSource,
    TraceStep,
};
use crate::planner::Mdp;
use crate::shannon::ShannonInstance;

const SENTENCE_WORDS: &[&str] = &[
    "people", "systems", "answers", "models", "steps", "points", "careful", "clear", "useful",
    "several", "common", "simple", "detail", "balance", "process", "result", "choice", "reason",
    "context", "example", "practice", "method", "structure", "pattern", "order", "review", "focus",
    "effort", "impact", "value", "skill", "habit", "plan", "goal", "idea", "task", "tool", "note",
    "topic", "theme", "basis", "range", "scale", "sense", "shape", "trend", "frame", "layer",
];

const PROMPT_BANK: &[&str] = &[
    "Explain the topic in a few sentences.",
    "What are the main differences between the two approaches?",
    "How can someone improve at this skill?",
    "Describe the process step by step.",
    "What should a beginner know first?",
    "Summarize the key trade-offs involved.",
    "What are the most effective ways to handle this?",
    "Walk through a concrete example.",
];

fn upper_blob(rng: &mut ChaCha8Rng, len: usize) -> String {
    (0..len).map(|_| (b'A' + rng.gen_range(0..26u8)) as char).collect()
}

fn lower_word(rng: &mut ChaCha8Rng, min: usize, max: usize) -> String {
    let len = rng.gen_range(min..=max);
    (0..len).map(|_| (b'a' + rng.gen_range(0..26u8)) as char).collect()
}

fn sentence(rng: &mut ChaCha8Rng, words: usize) -> String {
    let mut parts = Vec::with_capacity(words);
    for _ in 0..words {
        parts.push((*SENTENCE_WORDS.choose(rng).unwrap()).to_string());
    }
    parts.join(" ")
}

fn support_set(rng: &mut ChaCha8Rng, n: usize, count: usize) -> BTreeSet<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx.into_iter().take(count).collect()
}

/// A constant sentence planted into a templated fixture, with the exact set
/// of generations carrying it.
#[derive(Debug, Clone)]
pub struct PlantedSentence {
    /// Exactly as it appears in supporting generations, including the
    /// delimiting spaces that are themselves part of the shared block.
    pub text: String,
    pub support: BTreeSet<usize>,
}

#[derive(Debug, Clone)]
pub struct TemplatedFixture {
    pub set: GenerationSet,
    /// Planted sentences in position order.
    pub planted: Vec<PlantedSentence>,
}

const FILLER_LEN: usize = 12;

/// Templated corpus: per prompt, three constant sentences at high / medium /
/// high support joined by per-generation random uppercase filler of fixed
/// length.
pub fn rlhf_like(seed: u64, n_prompts: usize, n_gens: usize) -> Vec<TemplatedFixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_prompts);
    for p in 0..n_prompts {
        let intro = format!("{} ", sentence(&mut rng, 11));
        let middle = format!(" {} ", sentence(&mut rng, 11));
        let outro = format!(" {}", sentence(&mut rng, 11));

        let hi_lo = (n_gens as f64 * 0.92).ceil() as usize;
        let mid_lo = (n_gens as f64 * 0.62).ceil() as usize;
        let mid_hi = (n_gens as f64 * 0.80).floor() as usize;
        let s1_count = rng.gen_range(hi_lo..=n_gens);
        let s2_count = rng.gen_range(mid_lo..=mid_hi);
        let s3_count = rng.gen_range(hi_lo..=n_gens);
        let s1 = support_set(&mut rng, n_gens, s1_count);
        let s2 = support_set(&mut rng, n_gens, s2_count);
        let s3 = support_set(&mut rng, n_gens, s3_count);

        let mut generations = Vec::with_capacity(n_gens);
        for g in 0..n_gens {
            let mut text = String::new();
            if s1.contains(&g) {
                text.push_str(&intro);
            }
            text.push_str(&upper_blob(&mut rng, FILLER_LEN));
            if s2.contains(&g) {
                text.push_str(&middle);
            }
            text.push_str(&upper_blob(&mut rng, FILLER_LEN));
            if s3.contains(&g) {
                text.push_str(&outro);
            }
            generations.push(Generation { sample_index: g, text, token_ids: None });
        }

        let set = GenerationSet {
            prompt_id: format!("p{p:03}"),
            prompt_text: PROMPT_BANK[p % PROMPT_BANK.len()].to_string(),
            model_label: "rlhf_like".to_string(),
            sampling_method: SamplingMethod::Nucleus,
            nucleus_p: Some(0.9),
            generations,
        };
        out.push(TemplatedFixture {
            set,
            planted: vec![
                PlantedSentence { text: intro, support: s1 },
                PlantedSentence { text: middle, support: s2 },
                PlantedSentence { text: outro, support: s3 },
            ],
        });
    }
    out
}

/// Independent corpus: random lowercase words, no shared structure.
pub fn base_like(seed: u64, n_prompts: usize, n_gens: usize) -> Vec<GenerationSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_prompts);
    for p in 0..n_prompts {
        let mut generations = Vec::with_capacity(n_gens);
        for g in 0..n_gens {
            let n_words = rng.gen_range(26..=34);
            let words: Vec<String> =
                (0..n_words).map(|_| lower_word(&mut rng, 3, 8)).collect();
            generations.push(Generation {
                sample_index: g,
                text: words.join(" "),
                token_ids: None,
            });
        }
        out.push(GenerationSet {
            prompt_id: format!("p{p:03}"),
            prompt_text: PROMPT_BANK[p % PROMPT_BANK.len()].to_string(),
            model_label: "base_like".to_string(),
            sampling_method: SamplingMethod::Nucleus,
            nucleus_p: Some(0.7),
            generations,
        });
    }
    out
}

/// Ten equal-length rows sharing a constant 35-character core between random
/// 40-character flanks. Each row's flanks draw from a private two-letter
/// alphabet and the core uses six letters no flank touches, so flank
/// characters can never match across rows or against the core: the core is
/// the unique shared block and straight-through alignment is the unique
/// optimum.
pub fn planted_core(seed: u64) -> (Vec<String>, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut letters: Vec<char> = ('a'..='z').collect();
    letters.shuffle(&mut rng);
    let core: String = (0..35).map(|_| letters[20 + rng.gen_range(0..6usize)]).collect();

    let rows = (0..10)
        .map(|r| {
            let own = [letters[2 * r], letters[2 * r + 1]];
            let mut row = String::with_capacity(115);
            for _ in 0..40 {
                row.push(own[rng.gen_range(0..2usize)]);
            }
            row.push_str(&core);
            for _ in 0..40 {
                row.push(own[rng.gen_range(0..2usize)]);
            }
            row
        })
        .collect();
    (rows, core)
}

/// Small generation sets for oracle comparisons: half whitespace-tokenized
/// over a tiny word vocabulary, half with explicit token ids; both styles
/// repeat n-grams heavily.
pub fn small_sets(seed: u64, n_prompts: usize, max_gens: usize) -> Vec<GenerationSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab: Vec<String> = (0..12).map(|i| format!("w{i}")).collect();
    let mut out = Vec::with_capacity(n_prompts);
    for p in 0..n_prompts {
        let n_gens = rng.gen_range(3..=max_gens.max(3));
        let with_ids = p % 2 == 1;
        let mut generations = Vec::with_capacity(n_gens);
        for g in 0..n_gens {
            let len = rng.gen_range(30..=60);
            if with_ids {
                let ids: Vec<i64> = (0..len).map(|_| rng.gen_range(0..15i64)).collect();
                generations.push(Generation {
                    sample_index: g,
                    text: format!("ids {g}"),
                    token_ids: Some(ids),
                });
            } else {
                let words: Vec<&str> =
                    (0..len).map(|_| vocab.choose(&mut rng).unwrap().as_str()).collect();
                generations.push(Generation {
                    sample_index: g,
                    text: words.join(" "),
                    token_ids: None,
                });
            }
        }
        out.push(GenerationSet {
            prompt_id: format!("s{p:02}"),
            prompt_text: "small".to_string(),
            model_label: "small".to_string(),
            sampling_method: SamplingMethod::Greedy,
            nucleus_p: None,
            generations,
        });
    }
    out
}

// ── Trace fixtures ──────────────────────────────────────────────────────────

/// Every step puts exactly `top1` mass on the first token.
pub fn trace_constant_top1(steps: usize, top1: f64, source: TraceSource) -> DistributionTrace {
    let rest = 1.0 - top1;
    let step = TraceStep {
        realized_token: 0,
        realized_logprob: top1.ln(),
        sorted_probs: vec![top1, rest * 0.6, rest * 0.4],
        tail_mass: 0.0,
        nonnegligible_count: 3,
    };
    DistributionTrace { vocab_size: 64, source, steps: vec![step; steps] }
}

/// Step t carries nonnegligible_count t+1; the mean over T steps is
/// (T+1)/2 exactly.
pub fn trace_arithmetic_counts(steps: usize, vocab: u64) -> DistributionTrace {
    assert!(vocab >= steps as u64, "vocab must cover the largest count");
    let steps = (0..steps)
        .map(|t| TraceStep {
            realized_token: 0,
            realized_logprob: 0.0,
            sorted_probs: vec![1.0],
            tail_mass: 0.0,
            nonnegligible_count: t as u64 + 1,
        })
        .collect();
    DistributionTrace { vocab_size: vocab, source: TraceSource::Gold, steps }
}

/// A uniform model over `vocab` tokens: perplexity is exactly the vocabulary
/// size.
pub fn trace_uniform(vocab: u64, steps: usize, source: TraceSource) -> DistributionTrace {
    let p = 1.0 / vocab as f64;
    let step = TraceStep {
        realized_token: 0,
        realized_logprob: p.ln(),
        sorted_probs: vec![p],
        tail_mass: 1.0 - p,
        nonnegligible_count: vocab,
    };
    DistributionTrace { vocab_size: vocab, source, steps: vec![step; steps] }
}

/// Two steps with realized probabilities 1/2 and 1/4: perplexity sqrt(8).
pub fn trace_two_step() -> DistributionTrace {
    DistributionTrace {
        vocab_size: 4,
        source: TraceSource::Gold,
        steps: vec![
            TraceStep {
                realized_token: 0,
                realized_logprob: (0.5f64).ln(),
                sorted_probs: vec![0.5, 0.5],
                tail_mass: 0.0,
                nonnegligible_count: 2,
            },
            TraceStep {
                realized_token: 1,
                realized_logprob: (0.25f64).ln(),
                sorted_probs: vec![0.25, 0.25, 0.25, 0.25],
                tail_mass: 0.0,
                nonnegligible_count: 4,
            },
        ],
    }
}

/// Every realized probability equals `p`; perplexity is exactly 1/p.
pub fn trace_flat(p: f64, steps: usize, vocab: u64, source: TraceSource) -> DistributionTrace {
    let step = TraceStep {
        realized_token: 0,
        realized_logprob: p.ln(),
        sorted_probs: vec![p],
        tail_mass: 1.0 - p,
        nonnegligible_count: vocab,
    };
    DistributionTrace { vocab_size: vocab, source, steps: vec![step; steps] }
}

// ── Hidden-state fixtures ───────────────────────────────────────────────────

/// Random activations and tokens, for exercising the dump loader.
pub fn hidden_random_dump(seed: u64, t: usize, d: usize, v: usize) -> HiddenStateDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<f32> = (0..t * d).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
    let token_ids: Vec<i64> = (0..t).map(|_| rng.gen_range(0..v as i64)).collect();
    HiddenStateDataset::new(d, 28, v, token_ids, rows).unwrap()
}

fn encode_rows(
    rng: &mut ChaCha8Rng,
    tokens: &[i64],
    d: usize,
    v: usize,
    encode: impl Fn(usize) -> Option<i64>,
) -> Vec<f32> {
    let mut rows = vec![0.0f32; tokens.len() * d];
    for (t, row) in rows.chunks_mut(d).enumerate() {
        for x in row.iter_mut() {
            *x = rng.gen_range(-1.0f32..1.0);
        }
        if let Some(tok) = encode(t) {
            debug_assert!((tok as usize) < v.min(d));
            row[tok as usize] += 4.0;
        }
    }
    rows
}

/// Low-entropy stream: tokens cycle deterministically, and each hidden row
/// linearly encodes its own position in the cycle, so every future offset is
/// linearly recoverable.
pub fn hidden_cyclic(seed: u64, t: usize, d: usize, v: usize) -> HiddenStateDataset {
    assert!(d >= v, "need d >= v for the embedding");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tokens: Vec<i64> = (0..t).map(|i| (i % v) as i64).collect();
    let rows = encode_rows(&mut rng, &tokens, d, v, |i| Some(tokens[i]));
    HiddenStateDataset::new(d, 28, v, tokens, rows).unwrap()
}

/// High-entropy stream: tokens are i.i.d. uniform, so hidden rows carry no
/// information about future tokens.
pub fn hidden_iid(seed: u64, t: usize, d: usize, v: usize) -> HiddenStateDataset {
    assert!(d >= v, "need d >= v for the embedding");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tokens: Vec<i64> = (0..t).map(|_| rng.gen_range(0..v as i64)).collect();
    let rows = encode_rows(&mut rng, &tokens, d, v, |i| Some(tokens[i]));
    HiddenStateDataset::new(d, 28, v, tokens, rows).unwrap()
}

/// Hard-margin clusters: each row sits around a mean determined by the token
/// `offset_n` steps past the next one, with bounded noise, so a linear probe
/// at that offset can classify perfectly.
pub fn hidden_separable(seed: u64, t: usize, d: usize, v: usize, offset_n: usize) -> HiddenStateDataset {
    assert!(d >= v, "need d >= v for the cluster means");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tokens: Vec<i64> = (0..t).map(|_| rng.gen_range(0..v as i64)).collect();
    let horizon = offset_n + 1;
    let rows = encode_rows(&mut rng, &tokens, d, v, |i| {
        if i + horizon < t {
            Some(tokens[i + horizon])
        } else {
            None
        }
    });
    HiddenStateDataset::new(d, 28, v, tokens, rows).unwrap()
}

// ── Shannon fixtures ────────────────────────────────────────────────────────

/// Seeded ranking instances over `v` candidate tokens with distinct scores.
pub fn shannon_instances(seed: u64, count: usize, v: usize) -> Vec<ShannonInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut scores: Vec<(i64, f64)> =
                (0..v as i64).map(|t| (t, rng.gen_range(-4.0..4.0))).collect();
            // Distinct scores: spread ties apart deterministically.
            scores.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            for i in 1..scores.len() {
                if scores[i].1 <= scores[i - 1].1 {
                    scores[i].1 = scores[i - 1].1 + 1e-6;
                }
            }
            let gold = rng.gen_range(0..v as i64);
            let gold_tokens = vec![gold];
            let predicted = if rng.gen_bool(0.6) {
                vec![gold]
            } else {
                vec![rng.gen_range(0..v as i64)]
            };
            ShannonInstance::new(scores, gold_tokens, predicted).unwrap()
        })
        .collect()
}

// ── MDP fixtures ────────────────────────────────────────────────────────────

/// Random sparse MDP: 2..=max_states states, 1..=max_actions actions,
/// supports of up to 3 successors, rewards in [-1, 1].
pub fn random_mdp(seed: u64, max_states: usize, max_actions: usize) -> Mdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = rng.gen_range(2..=max_states.max(2));
    let a = rng.gen_range(1..=max_actions.max(1));
    let gamma = rng.gen_range(0.5..0.95);
    let mut rewards = vec![0.0f64; s * a];
    for r in rewards.iter_mut() {
        *r = rng.gen_range(-1.0..1.0);
    }
    let mut transitions = vec![0.0f64; s * a * s];
    for state in 0..s {
        for act in 0..a {
            let k = rng.gen_range(1..=3.min(s));
            let mut targets: Vec<usize> = (0..s).collect();
            targets.shuffle(&mut rng);
            targets.truncate(k);
            let weights: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = weights.iter().sum();
            for (t_idx, w) in targets.iter().zip(weights.iter()) {
                transitions[(state * a + act) * s + t_idx] = w / total;
            }
        }
    }
    Mdp::new(s, a, gamma, rewards, transitions).unwrap()
}
