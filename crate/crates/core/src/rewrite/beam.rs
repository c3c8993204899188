//! Beam decoding that returns every tracked hypothesis.
//!
//! At each step all one-token expansions of the live beams compete for `k`
//! slots on cumulative log-probability. Expansions by [`EOS`] that win a slot
//! finish their parent; the remaining winners stay live. Sequences reaching
//! `max_length` finish without an end marker. Finished hypotheses are ranked
//! by their rewrite score, the geometric mean of the generated tokens'
//! probabilities (the end marker is not a generated token).
//!
//! Ties, both in pruning and in the final ranking, go to the lexicographically
//! smaller token sequence.
//!
//! [`EOS`]: super::model::EOS

use std::cmp::Ordering;

use super::model::{validate_distribution, TokenId, TokenProbModel};
use crate::error::{Error, Result};

/// A finished decoding path.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    /// Generated tokens, end marker excluded.
    pub tokens: Vec<TokenId>,
    /// Sum of log-probabilities of `tokens`.
    pub log_prob_sum: f64,
    /// `exp(log_prob_sum / tokens.len())`, in (0, 1].
    pub rs_score: f64,
}

impl Hypothesis {
    fn new(tokens: Vec<TokenId>, log_prob_sum: f64) -> Self {
        let rs_score = (log_prob_sum / tokens.len() as f64).exp();
        Self {
            tokens,
            log_prob_sum,
            rs_score,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Length-normalized sequence probability: `exp(mean(ln p))`.
pub fn compute_rs(token_probs: &[f64]) -> Result<f64> {
    if token_probs.is_empty() {
        return Err(Error::InvalidProbabilities("empty".into()));
    }
    let mut log_sum = 0.0;
    for &p in token_probs {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidProbabilities(format!(
                "probability {p} outside (0, 1]"
            )));
        }
        log_sum += p.ln();
    }
    Ok((log_sum / token_probs.len() as f64).exp())
}

/// Orders by score descending, then token sequence ascending.
fn rank(score_a: f64, seq_a: &[TokenId], score_b: f64, seq_b: &[TokenId]) -> Ordering {
    score_b.total_cmp(&score_a).then_with(|| seq_a.cmp(seq_b))
}

struct Live {
    tokens: Vec<TokenId>,
    log_prob_sum: f64,
}

struct Candidate {
    parent: usize,
    token: TokenId,
    /// Cumulative log-probability including this step.
    cumulative: f64,
    log_p: f64,
    finishes: bool,
}

fn distribution<M: TokenProbModel + ?Sized>(
    model: &M,
    context: &[String],
    prefix: &[TokenId],
) -> Result<Vec<f64>> {
    let dist = model.next_token_distribution(context, prefix);
    validate_distribution(&dist, model.vocabulary().len())?;
    Ok(dist)
}

pub fn beam_search<M: TokenProbModel + ?Sized>(
    model: &M,
    context: &[String],
    beam_width: usize,
    max_length: usize,
) -> Result<Vec<Hypothesis>> {
    if beam_width == 0 {
        return Err(Error::InvalidArgument("beam width must be >= 1".into()));
    }
    if max_length == 0 {
        return Err(Error::InvalidArgument("max length must be >= 1".into()));
    }
    let vocab = model.vocabulary();
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let eos = vocab.eos();

    let mut live = vec![Live {
        tokens: Vec::new(),
        log_prob_sum: 0.0,
    }];
    let mut finished = Vec::new();

    for step in 1..=max_length {
        let mut candidates = Vec::new();
        for (parent, beam) in live.iter().enumerate() {
            let dist = distribution(model, context, &beam.tokens)?;
            for (id, &p) in vocab.ids().zip(&dist) {
                if p <= 0.0 || (id == eos && beam.tokens.is_empty()) {
                    continue;
                }
                let log_p = p.ln();
                candidates.push(Candidate {
                    parent,
                    token: id,
                    cumulative: beam.log_prob_sum + log_p,
                    log_p,
                    finishes: id == eos,
                });
            }
        }
        // Every candidate has `step` tokens, so cumulative scores compare
        // like for like.
        candidates.sort_by(|a, b| {
            b.cumulative.total_cmp(&a.cumulative).then_with(|| {
                live[a.parent]
                    .tokens
                    .iter()
                    .chain(std::iter::once(&a.token))
                    .cmp(
                        live[b.parent]
                            .tokens
                            .iter()
                            .chain(std::iter::once(&b.token)),
                    )
            })
        });
        candidates.truncate(beam_width);

        let mut next_live = Vec::with_capacity(candidates.len());
        for cand in candidates {
            let parent = &live[cand.parent];
            if cand.finishes {
                finished.push(Hypothesis::new(parent.tokens.clone(), parent.log_prob_sum));
                continue;
            }
            let mut tokens = parent.tokens.clone();
            tokens.push(cand.token);
            let log_prob_sum = parent.log_prob_sum + cand.log_p;
            if step == max_length {
                finished.push(Hypothesis::new(tokens, log_prob_sum));
            } else {
                next_live.push(Live {
                    tokens,
                    log_prob_sum,
                });
            }
        }
        live = next_live;
        if live.is_empty() {
            break;
        }
    }

    finished.sort_by(|a, b| rank(a.rs_score, &a.tokens, b.rs_score, &b.tokens));
    finished.dedup_by(|later, earlier| later.tokens == earlier.tokens);
    finished.truncate(beam_width);
    Ok(finished)
}

/// Picks the most probable token at every step (lowest id on ties), never
/// ending before the first token. Ends on [`EOS`](super::model::EOS) or at
/// `max_length`.
pub fn greedy_decode<M: TokenProbModel + ?Sized>(
    model: &M,
    context: &[String],
    max_length: usize,
) -> Result<Hypothesis> {
    if max_length == 0 {
        return Err(Error::InvalidArgument("max length must be >= 1".into()));
    }
    let vocab = model.vocabulary();
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let eos = vocab.eos();
    let mut tokens = Vec::new();
    let mut log_prob_sum = 0.0;
    while tokens.len() < max_length {
        let dist = distribution(model, context, &tokens)?;
        let mut best: Option<(TokenId, f64)> = None;
        for (id, &p) in vocab.ids().zip(&dist) {
            if p <= 0.0 || (id == eos && tokens.is_empty()) {
                continue;
            }
            if best.is_none_or(|(_, bp)| p > bp) {
                best = Some((id, p));
            }
        }
        let Some((id, p)) = best else {
            return Err(Error::InvalidDistribution(
                "no token with positive probability".into(),
            ));
        };
        if id == eos {
            break;
        }
        tokens.push(id);
        log_prob_sum += p.ln();
    }
    Ok(Hypothesis::new(tokens, log_prob_sum))
}
