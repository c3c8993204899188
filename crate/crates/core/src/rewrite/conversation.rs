use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::beam::beam_search;
use super::model::{TokenProbModel, SEP};
use super::rewrite_set::{Rewrite, RewriteSet};
use crate::error::{Error, Result};
use crate::tokenize::tokenize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub turn_index: usize,
    #[serde(rename = "query")]
    pub raw_query: String,
    #[serde(rename = "response", default, skip_serializing_if = "Option::is_none")]
    pub system_response: Option<String>,
}

impl Turn {
    pub fn new(turn_index: usize, raw_query: impl Into<String>, response: Option<&str>) -> Self {
        Self {
            turn_index,
            raw_query: raw_query.into(),
            system_response: response.map(str::to_owned),
        }
    }
}

/// Turns of one conversation plus the rewrites accumulated so far.
///
/// A turn can only receive rewrites once every earlier turn has them.
#[derive(Debug, Clone, PartialEq)]
pub struct Conversation {
    id: String,
    turns: Vec<Turn>,
    rewrites: Vec<Option<RewriteSet>>,
}

impl Conversation {
    pub fn new(id: impl Into<String>, turns: Vec<Turn>) -> Result<Self> {
        let id = id.into();
        for (i, turn) in turns.iter().enumerate() {
            if turn.turn_index != i + 1 {
                return Err(Error::InvalidConversation {
                    id,
                    reason: format!(
                        "turn indices must run 1, 2, ...; position {} has {}",
                        i + 1,
                        turn.turn_index
                    ),
                });
            }
        }
        let rewrites = vec![None; turns.len()];
        Ok(Self {
            id,
            turns,
            rewrites,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn turns(&self) -> &[Turn] {
        &self.turns
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    /// 1-based.
    pub fn turn(&self, turn_index: usize) -> Result<&Turn> {
        turn_index
            .checked_sub(1)
            .and_then(|i| self.turns.get(i))
            .ok_or(Error::TurnOutOfRange {
                index: turn_index,
                len: self.turns.len(),
            })
    }

    pub fn rewrites(&self, turn_index: usize) -> Option<&RewriteSet> {
        turn_index
            .checked_sub(1)
            .and_then(|i| self.rewrites.get(i))
            .and_then(Option::as_ref)
    }

    /// Top-1 rewrite of a turn, the one later turns see as context.
    pub fn chosen_rewrite(&self, turn_index: usize) -> Option<&Rewrite> {
        self.rewrites(turn_index).map(RewriteSet::best)
    }

    pub fn set_rewrites(&mut self, set: RewriteSet) -> Result<()> {
        if set.conversation_id() != self.id {
            return Err(Error::InvalidArgument(format!(
                "rewrites for {:?} given to conversation {:?}",
                set.conversation_id(),
                self.id
            )));
        }
        let turn_index = set.turn_index();
        self.turn(turn_index)?;
        if let Some(missing) = (1..turn_index).find(|&j| self.rewrites(j).is_none()) {
            return Err(Error::MissingRewrite {
                turn: turn_index,
                missing,
            });
        }
        self.rewrites[turn_index - 1] = Some(set);
        Ok(())
    }
}

/// Builds `⟨q̂_1, …, q̂_{i-1}, r_{i-1}, q_i⟩` joined by [`SEP`].
///
/// Only the last response is kept. When the result would exceed
/// `max_tokens` (separators count), whole items are dropped from the front.
/// The current query is never dropped; if it alone is too long, its last
/// `max_tokens` tokens are kept.
pub fn assemble_context(
    conversation: &Conversation,
    turn_index: usize,
    max_tokens: usize,
) -> Result<Vec<String>> {
    if max_tokens == 0 {
        return Err(Error::InvalidArgument("max_tokens must be >= 1".into()));
    }
    let current = conversation.turn(turn_index)?;
    let mut items: Vec<Vec<String>> = Vec::with_capacity(turn_index + 1);
    for j in 1..turn_index {
        let chosen = conversation
            .chosen_rewrite(j)
            .ok_or(Error::MissingRewrite {
                turn: turn_index,
                missing: j,
            })?;
        items.push(tokenize(&chosen.text));
    }
    if turn_index > 1 {
        if let Some(response) = &conversation.turn(turn_index - 1)?.system_response {
            items.push(tokenize(response));
        }
    }
    let mut query = tokenize(&current.raw_query);
    if query.len() > max_tokens {
        query.drain(..query.len() - max_tokens);
    }
    items.retain(|item| !item.is_empty());

    let cost = |item: &Vec<String>| item.len() + 1;
    let mut total = query.len() + items.iter().map(cost).sum::<usize>();
    let mut first = 0;
    while total > max_tokens {
        total -= cost(&items[first]);
        first += 1;
    }

    let mut context = Vec::with_capacity(total);
    for item in &items[first..] {
        context.extend(item.iter().cloned());
        context.push(SEP.to_owned());
    }
    context.extend(query);
    Ok(context)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewriteParams {
    pub beam_width: usize,
    pub num_rewrites: usize,
    /// Longest rewrite, in generated tokens.
    pub max_length: usize,
    pub max_context_tokens: usize,
}

impl Default for RewriteParams {
    fn default() -> Self {
        Self {
            beam_width: 10,
            num_rewrites: 10,
            max_length: 32,
            max_context_tokens: 512,
        }
    }
}

impl RewriteParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_rewrites == 0 || self.num_rewrites > self.beam_width {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= num_rewrites ({}) <= beam_width ({})",
                self.num_rewrites, self.beam_width
            )));
        }
        if self.max_length == 0 || self.max_context_tokens == 0 {
            return Err(Error::InvalidArgument(
                "max_length and max_context_tokens must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Rewrites one turn. The first turn is passed through unchanged with score
/// 1; later turns keep the `num_rewrites` best beam hypotheses.
pub fn rewrite_turn<M: TokenProbModel + ?Sized>(
    conversation: &Conversation,
    turn_index: usize,
    model: &M,
    params: &RewriteParams,
) -> Result<RewriteSet> {
    params.validate()?;
    let turn = conversation.turn(turn_index)?;
    if turn_index == 1 {
        return Ok(RewriteSet::passthrough(
            conversation.id(),
            1,
            &turn.raw_query,
        ));
    }
    let context = assemble_context(conversation, turn_index, params.max_context_tokens)?;
    let hypotheses = beam_search(model, &context, params.beam_width, params.max_length)?;
    let vocab = model.vocabulary();
    let rewrites = hypotheses
        .iter()
        .take(params.num_rewrites)
        .map(|h| Rewrite::new(vocab.detokenize(&h.tokens), h.rs_score))
        .collect();
    RewriteSet::new(conversation.id(), turn_index, rewrites)
}

/// Rewrites every turn in order, each turn seeing the chosen rewrites of the
/// ones before it.
pub fn rewrite_conversation<M: TokenProbModel + ?Sized>(
    conversation: &mut Conversation,
    model: &M,
    params: &RewriteParams,
) -> Result<Vec<RewriteSet>> {
    let mut out = Vec::with_capacity(conversation.len());
    for turn_index in 1..=conversation.len() {
        let set = rewrite_turn(conversation, turn_index, model, params)?;
        conversation.set_rewrites(set.clone())?;
        out.push(set);
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct ConversationRecord {
    id: String,
    turns: Vec<TurnRecord>,
}

#[derive(Serialize, Deserialize)]
struct TurnRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    turn_index: Option<usize>,
    query: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    response: Option<String>,
}

/// Reads the conversation JSON-lines file:
/// `{"id": str, "turns": [{"turn_index": int?, "query": str, "response": str?}]}`.
/// A missing `turn_index` is its 1-based position.
pub fn read_conversations(path: &Path) -> Result<Vec<Conversation>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ConversationRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        if !ids.insert(rec.id.clone()) {
            return Err(Error::parse(
                path,
                lineno,
                format!("duplicate conversation id {:?}", rec.id),
            ));
        }
        let turns = rec
            .turns
            .into_iter()
            .enumerate()
            .map(|(pos, t)| Turn {
                turn_index: t.turn_index.unwrap_or(pos + 1),
                raw_query: t.query,
                system_response: t.response,
            })
            .collect();
        let conv = Conversation::new(rec.id, turns)
            .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        out.push(conv);
    }
    Ok(out)
}

pub fn write_conversations(path: &Path, conversations: &[Conversation]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e: std::io::Error| Error::io(path, e);
    for conv in conversations {
        let rec = ConversationRecord {
            id: conv.id.clone(),
            turns: conv
                .turns
                .iter()
                .map(|t| TurnRecord {
                    turn_index: Some(t.turn_index),
                    query: t.raw_query.clone(),
                    response: t.system_response.clone(),
                })
                .collect(),
        };
        serde_json::to_writer(&mut w, &rec).map_err(|e| io(e.into()))?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}
