//! Passage collections: JSON-lines `{"id": str, "contents": str}` or TSV
//! `id<TAB>text`.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Passage {
    pub passage_id: String,
    pub text: String,
}

impl Passage {
    pub fn new(passage_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            passage_id: passage_id.into(),
            text: text.into(),
        }
    }
}

#[derive(Deserialize)]
struct JsonPassage {
    id: String,
    contents: String,
}

/// Parses one collection line. Lines starting with `{` are JSON, anything
/// else is TSV.
fn parse_line(line: &str) -> std::result::Result<Passage, String> {
    let passage = if line.trim_start().starts_with('{') {
        let rec: JsonPassage = serde_json::from_str(line).map_err(|e| e.to_string())?;
        Passage::new(rec.id, rec.contents)
    } else {
        let (id, text) = line
            .split_once('\t')
            .ok_or_else(|| "expected `id<TAB>text` or a JSON object".to_owned())?;
        Passage::new(id, text)
    };
    if passage.passage_id.is_empty() {
        return Err("empty passage id".into());
    }
    if passage.text.trim().is_empty() {
        return Err(format!("passage {:?} has empty text", passage.passage_id));
    }
    Ok(passage)
}

pub fn read_passages<R: BufRead>(reader: R, path: &Path) -> Result<Vec<Passage>> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let p = parse_line(&line).map_err(|reason| Error::parse(path, lineno, reason))?;
        if !ids.insert(p.passage_id.clone()) {
            return Err(Error::parse(
                path,
                lineno,
                format!("duplicate passage id {:?}", p.passage_id),
            ));
        }
        out.push(p);
    }
    Ok(out)
}

pub fn read_collection(path: &Path) -> Result<Vec<Passage>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_passages(BufReader::new(file), path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Vec<Passage>> {
        read_passages(s.as_bytes(), Path::new("c"))
    }

    #[test]
    fn json_and_tsv() {
        let ps =
            parse("{\"id\": \"d1\", \"contents\": \"hello world\"}\nd2\tsecond doc\n\n").unwrap();
        assert_eq!(
            ps,
            vec![
                Passage::new("d1", "hello world"),
                Passage::new("d2", "second doc")
            ]
        );
    }

    #[test]
    fn malformed_line_is_cited() {
        let err = parse("d1\tok\n{\"id\": 1}\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse("d1\tok\nno tab here\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn duplicate_and_empty() {
        assert!(parse("d1\ta\nd1\tb\n").is_err());
        assert!(parse("d1\t  \n").is_err());
        assert!(parse("\tx\n").is_err());
    }
}
