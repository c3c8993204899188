//! Rewrite sets and the JSON-lines rewrite file.
//!
//! One record per turn:
//! `{"conversation_id": str, "turn_index": int, "rewrites": [{"text": str, "score": float}, ...]}`
//! with scores in (0, 1] sorted descending.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rewrite {
    pub text: String,
    pub score: f64,
}

impl Rewrite {
    pub fn new(text: impl Into<String>, score: f64) -> Self {
        Self {
            text: text.into(),
            score,
        }
    }
}

/// The scored rewrites of one turn: scores in (0, 1], sorted descending with
/// ties broken by text, no duplicate texts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RewriteSet {
    conversation_id: String,
    turn_index: usize,
    rewrites: Vec<Rewrite>,
}

#[derive(Deserialize)]
struct RawRewriteSet {
    conversation_id: String,
    turn_index: usize,
    rewrites: Vec<Rewrite>,
}

/// Rewrites in set order (score descending, then text), so sums over them do
/// not depend on how the caller ordered the slice.
pub(crate) fn canonical_order(rewrites: &[Rewrite]) -> Vec<&Rewrite> {
    let mut refs: Vec<&Rewrite> = rewrites.iter().collect();
    refs.sort_by(|a, b| ranks_before(a, b));
    refs
}

fn ranks_before(a: &Rewrite, b: &Rewrite) -> std::cmp::Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.text.cmp(&b.text))
}

impl RewriteSet {
    /// Sorts and deduplicates `rewrites`, keeping the higher-scored copy of a
    /// repeated text.
    pub fn new(
        conversation_id: impl Into<String>,
        turn_index: usize,
        mut rewrites: Vec<Rewrite>,
    ) -> Result<Self> {
        let conversation_id = conversation_id.into();
        check_fields(&conversation_id, turn_index, &rewrites)?;
        rewrites.sort_by(ranks_before);
        let mut seen = HashSet::new();
        rewrites.retain(|r| seen.insert(r.text.clone()));
        Ok(Self {
            conversation_id,
            turn_index,
            rewrites,
        })
    }

    /// Strict variant for externally produced rewrites: the list must already
    /// be sorted. Duplicate texts are dropped with a warning.
    pub fn validate(
        conversation_id: impl Into<String>,
        turn_index: usize,
        rewrites: Vec<Rewrite>,
    ) -> Result<Validated<Self>> {
        let conversation_id = conversation_id.into();
        check_fields(&conversation_id, turn_index, &rewrites)?;
        if let Some(w) = rewrites.windows(2).position(|w| w[0].score < w[1].score) {
            return Err(Error::InvalidRewriteSet {
                conversation_id,
                turn_index,
                reason: format!(
                    "scores not sorted descending at position {} ({} < {})",
                    w + 1,
                    rewrites[w].score,
                    rewrites[w + 1].score
                ),
            });
        }
        let mut warnings = Vec::new();
        let mut seen = HashSet::new();
        let mut kept = Vec::with_capacity(rewrites.len());
        for r in rewrites {
            if seen.insert(r.text.clone()) {
                kept.push(r);
            } else {
                warnings.push(format!(
                    "{conversation_id}_{turn_index}: dropped duplicate rewrite {:?}",
                    r.text
                ));
            }
        }
        // Equal scores may arrive in any text order.
        kept.sort_by(ranks_before);
        Ok(Validated {
            value: Self {
                conversation_id,
                turn_index,
                rewrites: kept,
            },
            warnings,
        })
    }

    /// The first-turn set: the raw query itself with score 1.
    pub fn passthrough(
        conversation_id: impl Into<String>,
        turn_index: usize,
        raw_query: &str,
    ) -> Self {
        Self {
            conversation_id: conversation_id.into(),
            turn_index,
            rewrites: vec![Rewrite::new(raw_query, 1.0)],
        }
    }

    pub fn conversation_id(&self) -> &str {
        &self.conversation_id
    }

    pub fn turn_index(&self) -> usize {
        self.turn_index
    }

    /// TREC query id, `<conversation_id>_<turn_index>`.
    pub fn query_id(&self) -> String {
        format!("{}_{}", self.conversation_id, self.turn_index)
    }

    pub fn rewrites(&self) -> &[Rewrite] {
        &self.rewrites
    }

    pub fn len(&self) -> usize {
        self.rewrites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewrites.is_empty()
    }

    /// The highest-scored rewrite.
    pub fn best(&self) -> &Rewrite {
        &self.rewrites[0]
    }

    /// Keeps the `n` best rewrites.
    pub fn top(&self, n: usize) -> &[Rewrite] {
        &self.rewrites[..n.min(self.rewrites.len())]
    }
}

fn check_fields(conversation_id: &str, turn_index: usize, rewrites: &[Rewrite]) -> Result<()> {
    let fail = |reason: String| Error::InvalidRewriteSet {
        conversation_id: conversation_id.to_owned(),
        turn_index,
        reason,
    };
    if turn_index == 0 {
        return Err(fail("turn_index must be >= 1".into()));
    }
    if rewrites.is_empty() {
        return Err(fail("no rewrites".into()));
    }
    for r in rewrites {
        if !(r.score.is_finite() && r.score > 0.0 && r.score <= 1.0) {
            return Err(fail(format!(
                "score {} of {:?} outside (0, 1]",
                r.score, r.text
            )));
        }
    }
    Ok(())
}

/// A loaded value plus non-fatal findings.
#[derive(Debug, Clone, PartialEq)]
pub struct Validated<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

/// Reads and validates a rewrite file. Malformed records and duplicate
/// `(conversation_id, turn_index)` keys are errors.
pub fn read_rewrites<R: BufRead>(reader: R, path: &Path) -> Result<Validated<Vec<RewriteSet>>> {
    let mut sets = Vec::new();
    let mut warnings = Vec::new();
    let mut keys = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRewriteSet =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        if !keys.insert((raw.conversation_id.clone(), raw.turn_index)) {
            return Err(Error::parse(
                path,
                lineno,
                format!(
                    "duplicate record for {}_{}",
                    raw.conversation_id, raw.turn_index
                ),
            ));
        }
        let checked = RewriteSet::validate(raw.conversation_id, raw.turn_index, raw.rewrites)
            .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        warnings.extend(checked.warnings);
        sets.push(checked.value);
    }
    Ok(Validated {
        value: sets,
        warnings,
    })
}

pub fn read_rewrite_file(path: &Path) -> Result<Validated<Vec<RewriteSet>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_rewrites(BufReader::new(file), path)
}

pub fn write_rewrites<W: Write>(mut writer: W, sets: &[RewriteSet]) -> std::io::Result<()> {
    for set in sets {
        serde_json::to_writer(&mut writer, set)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn write_rewrite_file(path: &Path, sets: &[RewriteSet]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_rewrites(BufWriter::new(file), sets).map_err(|e| Error::io(path, e))
}
