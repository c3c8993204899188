use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::binio::{at_eof, read_str, read_u32, read_u64, write_str, write_u32, write_u64};
use crate::collection::Passage;
use crate::error::{Error, Result};
use crate::tokenize::tokenize;

/// File name of the persisted index inside an index directory.
pub const INDEX_FILE: &str = "index.bin";
const MAGIC: &[u8; 4] = b"CMQI";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

/// Term postings plus the per-document statistics BM25 needs.
///
/// Postings are sorted by document ordinal; ordinals follow input order.
/// Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    postings: HashMap<String, Vec<Posting>>,
    doc_lengths: Vec<u32>,
    ids: Vec<String>,
    ordinals: HashMap<String, u32>,
    avg_doc_length: f64,
}

impl InvertedIndex {
    pub fn build<I>(passages: I) -> Result<Self>
    where
        I: IntoIterator<Item = Passage>,
    {
        let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
        let mut doc_lengths = Vec::new();
        let mut ids = Vec::new();
        let mut ordinals = HashMap::new();
        for passage in passages {
            let doc = u32::try_from(ids.len())
                .map_err(|_| Error::InvalidArgument("more than u32::MAX passages".into()))?;
            if ordinals.insert(passage.passage_id.clone(), doc).is_some() {
                return Err(Error::DuplicateId(passage.passage_id));
            }
            let tokens = tokenize(&passage.text);
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for tok in &tokens {
                *tf.entry(tok.clone()).or_default() += 1;
            }
            for (term, count) in tf {
                postings
                    .entry(term)
                    .or_default()
                    .push(Posting { doc, tf: count });
            }
            doc_lengths.push(tokens.len() as u32);
            ids.push(passage.passage_id);
        }
        Ok(Self::from_parts(postings, doc_lengths, ids, ordinals))
    }

    fn from_parts(
        postings: HashMap<String, Vec<Posting>>,
        doc_lengths: Vec<u32>,
        ids: Vec<String>,
        ordinals: HashMap<String, u32>,
    ) -> Self {
        let avg_doc_length = if doc_lengths.is_empty() {
            0.0
        } else {
            doc_lengths.iter().map(|&l| l as f64).sum::<f64>() / doc_lengths.len() as f64
        };
        Self {
            postings,
            doc_lengths,
            ids,
            ordinals,
            avg_doc_length,
        }
    }

    pub fn doc_count(&self) -> usize {
        self.ids.len()
    }

    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_length(&self, doc: u32) -> u32 {
        self.doc_lengths[doc as usize]
    }

    pub fn passage_id(&self, doc: u32) -> &str {
        &self.ids[doc as usize]
    }

    pub fn ordinal(&self, passage_id: &str) -> Option<u32> {
        self.ordinals.get(passage_id).copied()
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings(term).len()
    }

    pub fn term_freq(&self, term: &str, doc: u32) -> u32 {
        let list = self.postings(term);
        list.binary_search_by_key(&doc, |p| p.doc)
            .map_or(0, |i| list[i].tf)
    }

    /// Terms in sorted order.
    pub fn terms(&self) -> Vec<&str> {
        let mut terms: Vec<&str> = self.postings.keys().map(String::as_str).collect();
        terms.sort_unstable();
        terms
    }

    pub fn write<W: Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(MAGIC)?;
        write_u32(w, VERSION)?;
        write_u64(w, self.ids.len() as u64)?;
        for (id, &len) in self.ids.iter().zip(&self.doc_lengths) {
            write_str(w, id)?;
            write_u32(w, len)?;
        }
        let terms = self.terms();
        write_u64(w, terms.len() as u64)?;
        for term in terms {
            let list = &self.postings[term];
            write_str(w, term)?;
            write_u32(w, list.len() as u32)?;
            for p in list {
                write_u32(w, p.doc)?;
                write_u32(w, p.tf)?;
            }
        }
        Ok(())
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Self> {
        let bad = |reason: String| Error::Format {
            what: "index",
            reason,
        };
        let io = |e: io::Error| bad(e.to_string());
        let mut magic = [0; 4];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != MAGIC {
            return Err(bad("bad magic".into()));
        }
        let version = read_u32(r).map_err(io)?;
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let n = read_u64(r).map_err(io)?;
        let n = u32::try_from(n).map_err(|_| bad(format!("document count {n} too large")))?;
        let mut ids = Vec::new();
        let mut doc_lengths = Vec::new();
        let mut ordinals = HashMap::new();
        for doc in 0..n {
            let id = read_str(r).map_err(io)?;
            if ordinals.insert(id.clone(), doc).is_some() {
                return Err(bad(format!("duplicate passage id {id:?}")));
            }
            ids.push(id);
            doc_lengths.push(read_u32(r).map_err(io)?);
        }
        let term_count = read_u64(r).map_err(io)?;
        let mut postings = HashMap::new();
        for _ in 0..term_count {
            let term = read_str(r).map_err(io)?;
            let len = read_u32(r).map_err(io)?;
            let mut list = Vec::new();
            for _ in 0..len {
                let doc = read_u32(r).map_err(io)?;
                let tf = read_u32(r).map_err(io)?;
                if doc >= n || list.last().is_some_and(|p: &Posting| p.doc >= doc) {
                    return Err(bad(format!("corrupt postings for {term:?}")));
                }
                list.push(Posting { doc, tf });
            }
            postings.insert(term, list);
        }
        if !at_eof(r).map_err(io)? {
            return Err(bad("trailing bytes".into()));
        }
        Ok(Self::from_parts(postings, doc_lengths, ids, ordinals))
    }

    /// Writes `index.bin` into `dir`, creating the directory if needed. The
    /// format is versioned but not promised stable across releases.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(INDEX_FILE);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        self.write(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(INDEX_FILE);
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        Self::read(&mut BufReader::new(file))
    }
}
