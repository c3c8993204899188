use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::ScoredPassage;

/// Relevance judgments, `query_id 0 passage_id grade` per line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        query_id: impl Into<String>,
        passage_id: impl Into<String>,
        grade: u32,
    ) {
        self.judgments
            .entry(query_id.into())
            .or_default()
            .insert(passage_id.into(), grade);
    }

    pub fn parse<R: BufRead>(reader: R, path: &Path) -> Result<Self> {
        let mut qrels = Self::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                [] => continue,
                [q, _, p, grade] => {
                    let grade: u32 = grade.parse().map_err(|_| {
                        Error::parse(
                            path,
                            i + 1,
                            format!("grade {grade:?} is not an integer >= 0"),
                        )
                    })?;
                    qrels.insert(*q, *p, grade);
                }
                _ => {
                    return Err(Error::parse(
                        path,
                        i + 1,
                        "expected `query_id 0 passage_id grade`",
                    ))
                }
            }
        }
        Ok(qrels)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(BufReader::new(file), path)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn contains(&self, query_id: &str) -> bool {
        self.judgments.contains_key(query_id)
    }

    /// Passages with grade >= 1.
    pub fn relevant(&self, query_id: &str) -> HashSet<&str> {
        self.judgments
            .get(query_id)
            .into_iter()
            .flatten()
            .filter(|(_, &g)| g >= 1)
            .map(|(p, _)| p.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub passage_id: String,
    pub rank: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryRun {
    pub query_id: String,
    /// Ranks 1, 2, … with non-increasing scores.
    pub entries: Vec<RunEntry>,
}

impl QueryRun {
    pub fn passage_ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.passage_id.as_str()).collect()
    }
}

/// A TREC run, `query_id Q0 passage_id rank score tag` per line. Queries keep
/// their first-appearance order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFile {
    tag: String,
    queries: Vec<QueryRun>,
    positions: HashMap<String, usize>,
}

impl RunFile {
    pub fn new(tag: impl Into<String>) -> Self {
        Self {
            tag: tag.into(),
            queries: Vec::new(),
            positions: HashMap::new(),
        }
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn queries(&self) -> &[QueryRun] {
        &self.queries
    }

    pub fn get(&self, query_id: &str) -> Option<&QueryRun> {
        self.positions.get(query_id).map(|&i| &self.queries[i])
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// Appends a ranked list, assigning ranks from 1.
    pub fn push(&mut self, query_id: impl Into<String>, ranking: Vec<ScoredPassage>) -> Result<()> {
        let query_id = query_id.into();
        let entries: Vec<RunEntry> = ranking
            .into_iter()
            .enumerate()
            .map(|(i, sp)| RunEntry {
                passage_id: sp.passage_id,
                rank: i + 1,
                score: sp.score,
            })
            .collect();
        self.insert(QueryRun { query_id, entries })
    }

    fn insert(&mut self, run: QueryRun) -> Result<()> {
        let fail = |reason: String| {
            Err(Error::InvalidArgument(format!(
                "run for {}: {reason}",
                run.query_id
            )))
        };
        if self.positions.contains_key(&run.query_id) {
            return fail("query appears twice".into());
        }
        let mut seen = HashSet::new();
        for (i, e) in run.entries.iter().enumerate() {
            if e.rank != i + 1 {
                return fail(format!(
                    "ranks not contiguous from 1 (found {} at position {})",
                    e.rank,
                    i + 1
                ));
            }
            if !e.score.is_finite() {
                return fail(format!("score {} at rank {}", e.score, e.rank));
            }
            if i > 0 && e.score > run.entries[i - 1].score {
                return fail(format!("score increases at rank {}", e.rank));
            }
            if !seen.insert(e.passage_id.as_str()) {
                return fail(format!("passage {} ranked twice", e.passage_id));
            }
        }
        self.positions
            .insert(run.query_id.clone(), self.queries.len());
        self.queries.push(run);
        Ok(())
    }

    pub fn parse<R: BufRead>(reader: R, path: &Path) -> Result<Self> {
        let mut tag: Option<String> = None;
        let mut order: Vec<String> = Vec::new();
        let mut grouped: HashMap<String, Vec<(usize, RunEntry)>> = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            let (q, p, rank, score, t) = match fields.as_slice() {
                [] => continue,
                [q, _, p, rank, score, t] => (*q, *p, *rank, *score, *t),
                _ => {
                    return Err(Error::parse(
                        path,
                        lineno,
                        "expected `query_id Q0 passage_id rank score tag`",
                    ))
                }
            };
            let rank: usize = rank
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("bad rank {rank:?}")))?;
            let score: f64 = score
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("bad score {score:?}")))?;
            tag.get_or_insert_with(|| t.to_owned());
            if !grouped.contains_key(q) {
                order.push(q.to_owned());
            }
            grouped.entry(q.to_owned()).or_default().push((
                lineno,
                RunEntry {
                    passage_id: p.to_owned(),
                    rank,
                    score,
                },
            ));
        }
        let mut run = Self::new(tag.unwrap_or_default());
        for q in order {
            let mut entries = grouped.remove(&q).unwrap_or_default();
            entries.sort_by_key(|(_, e)| e.rank);
            let first_line = entries.first().map_or(0, |(l, _)| *l);
            let entries = entries.into_iter().map(|(_, e)| e).collect();
            run.insert(QueryRun {
                query_id: q,
                entries,
            })
            .map_err(|e| Error::parse(path, first_line, e.to_string()))?;
        }
        Ok(run)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(BufReader::new(file), path)
    }

    pub fn write<W: Write + ?Sized>(&self, w: &mut W) -> std::io::Result<()> {
        for q in &self.queries {
            for e in &q.entries {
                writeln!(
                    w,
                    "{} Q0 {} {} {} {}",
                    q.query_id, e.passage_id, e.rank, e.score, self.tag
                )?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn to_trec_string(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("run files are UTF-8")
    }
}

/// Reads `query_id subset` lines.
pub fn read_subset_map(path: &Path) -> Result<HashMap<String, String>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut map = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        match line.split_whitespace().collect::<Vec<_>>().as_slice() {
            [] => continue,
            [q, s] => {
                map.insert((*q).to_owned(), (*s).to_owned());
            }
            _ => return Err(Error::parse(path, i + 1, "expected `query_id subset`")),
        }
    }
    Ok(map)
}
