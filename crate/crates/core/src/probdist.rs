//! Probability-concentration and perplexity metrics over distribution traces.
//!
//! All averages pool timesteps across the given traces (micro-average).
//! Ranks beyond a step's dump truncation contribute zero mass; the omitted
//! tail is reported separately, never imputed per rank.

use std::fmt;

use crate::corpus::{DistributionTrace, TraceSource};

#[derive(Debug)]
pub enum ProbDistError {
    EmptyTraces,
    BadRank { k: usize },
    MixedSources,
    NonFiniteLogprob { step: usize },
    NonPositiveBase { ppl: f64 },
}

impl fmt::Display for ProbDistError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbDistError::EmptyTraces => write!(f, "no trace steps given"),
            ProbDistError::BadRank { k } => write!(f, "rank K must be at least 1, got {k}"),
            ProbDistError::MixedSources => {
                write!(f, "traces mix gold and self-generated sources")
            }
            ProbDistError::NonFiniteLogprob { step } => {
                write!(f, "non-finite realized_logprob at pooled step {step}")
            }
            ProbDistError::NonPositiveBase { ppl } => {
                write!(f, "base perplexity must be positive, got {ppl}")
            }
        }
    }
}

impl std::error::Error for ProbDistError {}

/// Mean cumulative probability of the top-k tokens, k = 1..=k_max.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationCurve {
    /// `cumulative[k-1]` is the mean over steps of the top-k mass.
    pub cumulative: Vec<f64>,
    pub k_max: usize,
    /// Mean dump-truncation tail mass over the same steps.
    pub mean_tail_mass: f64,
}

pub fn concentration_curve(
    traces: &[DistributionTrace],
    k_max: usize,
) -> Result<ConcentrationCurve, ProbDistError> {
    if k_max < 1 {
        return Err(ProbDistError::BadRank { k: k_max });
    }
    let mut sums = vec![0.0f64; k_max];
    let mut tail_sum = 0.0f64;
    let mut steps = 0usize;
    for trace in traces {
        for step in &trace.steps {
            let mut cum = 0.0;
            for k in 0..k_max {
                if k < step.sorted_probs.len() {
                    cum += step.sorted_probs[k];
                }
                sums[k] += cum;
            }
            tail_sum += step.tail_mass;
            steps += 1;
        }
    }
    if steps == 0 {
        return Err(ProbDistError::EmptyTraces);
    }
    let cumulative: Vec<f64> = sums.into_iter().map(|s| s / steps as f64).collect();
    Ok(ConcentrationCurve { cumulative, k_max, mean_tail_mass: tail_sum / steps as f64 })
}

/// Mean dump-time count of vocabulary entries above the non-negligible
/// probability floor.
pub fn mean_nonnegligible(traces: &[DistributionTrace]) -> Result<f64, ProbDistError> {
    let mut sum = 0.0f64;
    let mut steps = 0usize;
    for trace in traces {
        for step in &trace.steps {
            sum += step.nonnegligible_count as f64;
            steps += 1;
        }
    }
    if steps == 0 {
        return Err(ProbDistError::EmptyTraces);
    }
    Ok(sum / steps as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerplexityReport {
    pub ppl: f64,
    pub token_count: usize,
    pub source: TraceSource,
}

/// exp of the negative mean realized log-probability (natural log), pooled
/// over all steps of all traces. The traces must share a source label.
pub fn perplexity(traces: &[DistributionTrace]) -> Result<PerplexityReport, ProbDistError> {
    let mut source: Option<TraceSource> = None;
    let mut sum = 0.0f64;
    let mut steps = 0usize;
    for trace in traces {
        match source {
            None => source = Some(trace.source),
            Some(s) if s != trace.source => return Err(ProbDistError::MixedSources),
            _ => {}
        }
        for step in &trace.steps {
            if !step.realized_logprob.is_finite() {
                return Err(ProbDistError::NonFiniteLogprob { step: steps });
            }
            sum += step.realized_logprob;
            steps += 1;
        }
    }
    if steps == 0 {
        return Err(ProbDistError::EmptyTraces);
    }
    Ok(PerplexityReport {
        ppl: (-sum / steps as f64).exp(),
        token_count: steps,
        source: source.unwrap(),
    })
}

/// Absolute and relative perplexity change from `base` to `adapted`.
pub fn perplexity_delta(
    base: &PerplexityReport,
    adapted: &PerplexityReport,
) -> Result<(f64, f64), ProbDistError> {
    if base.ppl <= 0.0 {
        return Err(ProbDistError::NonPositiveBase { ppl: base.ppl });
    }
    let abs = adapted.ppl - base.ppl;
    Ok((abs, abs / base.ppl))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TraceStep;

    fn step(sorted: Vec<f64>, tail: f64, count: u64) -> TraceStep {
        TraceStep {
            realized_token: 0,
            realized_logprob: sorted[0].ln(),
            sorted_probs: sorted,
            tail_mass: tail,
            nonnegligible_count: count,
        }
    }

    fn trace(steps: Vec<TraceStep>, source: TraceSource) -> DistributionTrace {
        DistributionTrace { vocab_size: 1 << 20, source, steps }
    }

    #[test]
    fn point_mass_curve_all_ones() {
        let t = trace(vec![step(vec![1.0], 0.0, 1); 5], TraceSource::Gold);
        let c = concentration_curve(&[t], 4).unwrap();
        assert!(c.cumulative.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn single_step_cumulative_sums() {
        let t = trace(vec![step(vec![0.9, 0.05, 0.05], 0.0, 3)], TraceSource::Gold);
        let c = concentration_curve(&[t], 3).unwrap();
        assert!((c.cumulative[0] - 0.9).abs() < 1e-15);
        assert!((c.cumulative[1] - 0.95).abs() < 1e-15);
        assert!((c.cumulative[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_step_average() {
        let t = trace(
            vec![step(vec![0.5, 0.5], 0.0, 2), step(vec![1.0], 0.0, 1)],
            TraceSource::Gold,
        );
        let c = concentration_curve(&[t], 2).unwrap();
        assert!((c.cumulative[0] - 0.75).abs() < 1e-15);
        assert!((c.cumulative[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn curve_monotone_and_bounded() {
        let t = trace(
            vec![
                step(vec![0.4, 0.3, 0.2, 0.1], 0.0, 4),
                step(vec![0.7, 0.2], 0.1, 17),
                step(vec![0.25, 0.25, 0.25, 0.25], 0.0, 4),
            ],
            TraceSource::SelfGenerated,
        );
        let c = concentration_curve(&[t], 6).unwrap();
        for w in c.cumulative.windows(2) {
            assert!(w[1] >= w[0] - 1e-15);
        }
        assert!(*c.cumulative.last().unwrap() <= 1.0 + 1e-6);
        // With K past every truncation, cumulative[K] + mean tail covers the mass.
        assert!((c.cumulative[5] + c.mean_tail_mass - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bad_rank_rejected() {
        let t = trace(vec![step(vec![1.0], 0.0, 1)], TraceSource::Gold);
        assert!(matches!(concentration_curve(&[t], 0), Err(ProbDistError::BadRank { k: 0 })));
    }

    #[test]
    fn nonnegligible_point_mass() {
        let t = trace(vec![step(vec![1.0], 0.0, 1); 3], TraceSource::Gold);
        assert_eq!(mean_nonnegligible(&[t]).unwrap(), 1.0);
    }

    #[test]
    fn nonnegligible_mean() {
        let t = trace(
            vec![step(vec![1.0], 0.0, 1000), step(vec![1.0], 0.0, 3000)],
            TraceSource::Gold,
        );
        assert_eq!(mean_nonnegligible(&[t]).unwrap(), 2000.0);
        assert!(matches!(mean_nonnegligible(&[]), Err(ProbDistError::EmptyTraces)));
    }

    #[test]
    fn perplexity_certainty_is_one() {
        let t = trace(vec![step(vec![1.0], 0.0, 1); 4], TraceSource::Gold);
        let r = perplexity(&[t]).unwrap();
        assert!((r.ppl - 1.0).abs() < 1e-12);
        assert_eq!(r.token_count, 4);
    }

    #[test]
    fn perplexity_hand_computed() {
        let steps = vec![
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
        ];
        let r = perplexity(&[trace(steps, TraceSource::SelfGenerated)]).unwrap();
        assert!((r.ppl - 8.0f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn mixed_sources_rejected() {
        let a = trace(vec![step(vec![1.0], 0.0, 1)], TraceSource::Gold);
        let b = trace(vec![step(vec![1.0], 0.0, 1)], TraceSource::SelfGenerated);
        assert!(matches!(perplexity(&[a, b]), Err(ProbDistError::MixedSources)));
    }

    #[test]
    fn delta_arithmetic() {
        let base = PerplexityReport { ppl: 10.0, token_count: 100, source: TraceSource::Gold };
        let same = perplexity_delta(&base, &base).unwrap();
        assert_eq!(same, (0.0, 0.0));
        let adapted = PerplexityReport { ppl: 12.5, token_count: 100, source: TraceSource::Gold };
        let (abs, rel) = perplexity_delta(&base, &adapted).unwrap();
        assert!((abs - 2.5).abs() < 1e-15);
        assert!((rel - 0.25).abs() < 1e-15);
    }
}
