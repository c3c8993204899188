use std::collections::HashMap;

use crate::error::{Error, Result};

/// End-of-sequence marker. Brackets never survive [`crate::tokenize`], so
/// it cannot collide with a word.
pub const EOS: &str = "[EOS]";
/// Separator between context items.
pub const SEP: &str = "[SEP]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenId(pub u32);

impl TokenId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Output token set of a model. Ids are assigned in sorted string order, so
/// comparing id sequences is the same as comparing token sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    lookup: HashMap<String, TokenId>,
    eos: TokenId,
}

impl Vocabulary {
    /// Builds a vocabulary from `words` plus [`EOS`]. Duplicates and the
    /// [`SEP`] marker are dropped.
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut tokens: Vec<String> = words
            .into_iter()
            .map(Into::into)
            .filter(|w| w != SEP && !w.is_empty())
            .collect();
        tokens.push(EOS.to_owned());
        tokens.sort();
        tokens.dedup();
        let lookup: HashMap<String, TokenId> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), TokenId(i as u32)))
            .collect();
        let eos = lookup[EOS];
        Self {
            tokens,
            lookup,
            eos,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// True when the vocabulary holds nothing but [`EOS`].
    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 1
    }

    pub fn eos(&self) -> TokenId {
        self.eos
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.lookup.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id.index()]
    }

    pub fn ids(&self) -> impl Iterator<Item = TokenId> {
        (0..self.tokens.len() as u32).map(TokenId)
    }

    /// Space-joined text of a generated sequence.
    pub fn detokenize(&self, ids: &[TokenId]) -> String {
        let words: Vec<&str> = ids.iter().map(|&id| self.token(id)).collect();
        words.join(" ")
    }
}

/// A conditional next-token distribution over a fixed vocabulary.
///
/// `context` is the assembled rewriting context (word tokens joined by
/// [`SEP`]); `prefix` is what has been generated so far. The returned vector
/// is indexed by [`TokenId`] and must sum to one.
///
/// Models are queried concurrently once built, hence the `Sync` bound.
pub trait TokenProbModel: Sync {
    fn vocabulary(&self) -> &Vocabulary;

    fn next_token_distribution(&self, context: &[String], prefix: &[TokenId]) -> Vec<f64>;
}

const SUM_TOLERANCE: f64 = 1e-9;

pub fn validate_distribution(dist: &[f64], vocab_len: usize) -> Result<()> {
    if dist.len() != vocab_len {
        return Err(Error::InvalidDistribution(format!(
            "{} entries for a vocabulary of {vocab_len}",
            dist.len()
        )));
    }
    if let Some(p) = dist.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidDistribution(format!("bad probability {p}")));
    }
    let sum: f64 = dist.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::InvalidDistribution(format!("sums to {sum}")));
    }
    Ok(())
}
