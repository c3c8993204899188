//! Laplace-smoothed n-gram model, the desk-scale stand-in for a neural
//! rewriter.

use std::collections::HashMap;

use super::conversation::Conversation;
use super::model::{TokenId, TokenProbModel, Vocabulary, EOS, SEP};
use crate::error::{Error, Result};
use crate::tokenize::tokenize;

#[derive(Debug, Clone, Default)]
struct HistoryCounts {
    total: u64,
    next: HashMap<u32, u64>,
}

/// Order-`n` word model with add-alpha smoothing over its vocabulary.
///
/// Histories are drawn from the stream `context ++ [SEP] ++ prefix`, left
/// padded with [`SEP`]; words outside the vocabulary collapse to a single
/// unknown symbol. Every vocabulary token, [`EOS`] included, gets strictly
/// positive probability.
#[derive(Debug, Clone)]
pub struct NGramLM {
    order: usize,
    alpha: f64,
    vocab: Vocabulary,
    counts: HashMap<Vec<u32>, HistoryCounts>,
}

impl NGramLM {
    pub const DEFAULT_ORDER: usize = 3;
    pub const DEFAULT_ALPHA: f64 = 0.1;

    /// Trains on token segments. Each segment is scored as
    /// `[SEP; order-1] ++ segment ++ [EOS]`; `SEP` may appear inside a
    /// segment as a history symbol but is never a prediction target.
    pub fn train<I>(order: usize, alpha: f64, segments: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        if order == 0 {
            return Err(Error::InvalidArgument("n-gram order must be >= 1".into()));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "smoothing alpha must be positive, got {alpha}"
            )));
        }
        let segments: Vec<Vec<String>> = segments.into_iter().collect();
        let vocab = Vocabulary::new(
            segments
                .iter()
                .flatten()
                .filter(|w| w.as_str() != SEP && w.as_str() != EOS)
                .cloned(),
        );
        let mut model = Self {
            order,
            alpha,
            vocab,
            counts: HashMap::new(),
        };
        let sep = model.sep_symbol();
        let eos = model.vocab.eos().0;
        for segment in &segments {
            let mut stream = vec![sep; order - 1];
            stream.extend(segment.iter().map(|w| model.symbol(w)));
            stream.push(eos);
            for pos in (order - 1)..stream.len() {
                let target = stream[pos];
                if target == sep {
                    continue;
                }
                let history = stream[pos + 1 - order..pos].to_vec();
                let entry = model.counts.entry(history).or_default();
                entry.total += 1;
                *entry.next.entry(target).or_default() += 1;
            }
        }
        Ok(model)
    }

    /// Trains on the raw text of `conversations`. Every query contributes an
    /// echo segment `query [SEP] query` and every response its own words.
    pub fn from_conversations(
        conversations: &[Conversation],
        order: usize,
        alpha: f64,
    ) -> Result<Self> {
        let mut segments = Vec::new();
        for conv in conversations {
            for turn in conv.turns() {
                let q = tokenize(&turn.raw_query);
                if !q.is_empty() {
                    let mut seg = q.clone();
                    seg.push(SEP.to_owned());
                    seg.extend(q);
                    segments.push(seg);
                }
                if let Some(r) = &turn.system_response {
                    let r = tokenize(r);
                    if !r.is_empty() {
                        segments.push(r);
                    }
                }
            }
        }
        Self::train(order, alpha, segments)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn sep_symbol(&self) -> u32 {
        self.vocab.len() as u32
    }

    fn unk_symbol(&self) -> u32 {
        self.vocab.len() as u32 + 1
    }

    fn symbol(&self, word: &str) -> u32 {
        if word == SEP {
            return self.sep_symbol();
        }
        self.vocab.id(word).map_or(self.unk_symbol(), |id| id.0)
    }

    fn history(&self, context: &[String], prefix: &[TokenId]) -> Vec<u32> {
        let want = self.order - 1;
        let mut rev: Vec<u32> = Vec::with_capacity(want);
        rev.extend(prefix.iter().rev().take(want).map(|id| id.0));
        if rev.len() < want {
            rev.push(self.sep_symbol());
        }
        if rev.len() < want {
            let missing = want - rev.len();
            rev.extend(context.iter().rev().take(missing).map(|w| self.symbol(w)));
        }
        while rev.len() < want {
            rev.push(self.sep_symbol());
        }
        rev.reverse();
        rev
    }
}

impl TokenProbModel for NGramLM {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_token_distribution(&self, context: &[String], prefix: &[TokenId]) -> Vec<f64> {
        let v = self.vocab.len();
        let history = self.history(context, prefix);
        let counts = self.counts.get(&history);
        let total = counts.map_or(0, |c| c.total) as f64;
        let denom = total + self.alpha * v as f64;
        (0..v as u32)
            .map(|id| {
                let c = counts.and_then(|c| c.next.get(&id)).copied().unwrap_or(0) as f64;
                (c + self.alpha) / denom
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewrite::model::validate_distribution;

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn counts_follow_laplace_formula() {
        let lm = NGramLM::train(2, 0.5, [words("a b"), words("a c")]).unwrap();
        let v = lm.vocabulary();
        // vocabulary: [EOS], a, b, c
        assert_eq!(v.len(), 4);
        let a = v.id("a").unwrap();
        let dist = lm.next_token_distribution(&[], &[a]);
        // after "a": b once, c once, total 2, denominator 2 + 0.5 * 4
        assert!((dist[v.id("b").unwrap().index()] - 1.5 / 4.0).abs() < 1e-15);
        assert!((dist[v.eos().index()] - 0.5 / 4.0).abs() < 1e-15);
        // start of a segment: "a" twice
        let start = lm.next_token_distribution(&[], &[]);
        assert!((start[a.index()] - 2.5 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn distributions_are_valid_and_positive() {
        let lm = NGramLM::train(3, 0.1, [words("x y z"), words("y [SEP] x z")]).unwrap();
        let v = lm.vocabulary().clone();
        let ctx = words("q unknownword [SEP] y");
        for prefix in [
            vec![],
            vec![v.id("x").unwrap()],
            vec![v.id("y").unwrap(); 5],
        ] {
            let d = lm.next_token_distribution(&ctx, &prefix);
            validate_distribution(&d, v.len()).unwrap();
            assert!(d.iter().all(|&p| p > 0.0));
        }
    }

    #[test]
    fn context_tail_conditions_first_token() {
        let lm = NGramLM::train(3, 0.1, [words("x [SEP] y"), words("z [SEP] x")]).unwrap();
        let v = lm.vocabulary();
        let after_x = lm.next_token_distribution(&words("x"), &[]);
        let after_z = lm.next_token_distribution(&words("z"), &[]);
        let y = v.id("y").unwrap().index();
        let x = v.id("x").unwrap().index();
        assert!(after_x[y] > after_x[x]);
        assert!(after_z[x] > after_z[y]);
    }

    #[test]
    fn unigram_order() {
        let lm = NGramLM::train(1, 1.0, [words("a a b")]).unwrap();
        let d = lm.next_token_distribution(&words("anything"), &[]);
        validate_distribution(&d, 3).unwrap();
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(NGramLM::train(0, 0.1, [words("a")]).is_err());
        assert!(NGramLM::train(3, 0.0, [words("a")]).is_err());
        assert!(NGramLM::train(3, f64::NAN, [words("a")]).is_err());
    }
}
