//! In-memory embedding matrix and the CMQE embedding file.
//!
//! CMQE layout, little-endian: magic `CMQE`, u32 version (1), u32 dimension,
//! u64 count, then `count` records of u32 id byte length, UTF-8 id bytes and
//! `dimension` f32 values.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::binio::{
    at_eof, read_f32, read_str, read_u32, read_u64, write_str, write_u32, write_u64,
};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"CMQE";
const VERSION: u32 = 1;
const MAX_DIMENSION: usize = 1 << 20;

/// Row-major `count × dimension` matrix with one passage id per row.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorStore {
    dimension: usize,
    data: Vec<f32>,
    ids: Vec<String>,
    rows: HashMap<String, usize>,
}

impl VectorStore {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            data: Vec::new(),
            ids: Vec::new(),
            rows: HashMap::new(),
        }
    }

    /// Builds a store from rows in order. The dimension is taken from the first
    /// row; an empty input yields an empty store of dimension 0.
    pub fn build<I>(embeddings: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<f32>)>,
    {
        let mut iter = embeddings.into_iter().peekable();
        let dimension = iter.peek().map_or(0, |(_, v)| v.len());
        let mut store = Self::new(dimension);
        for (id, v) in iter {
            store.push(id, &v)?;
        }
        Ok(store)
    }

    pub fn push(&mut self, id: String, vector: &[f32]) -> Result<()> {
        if vector.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                actual: vector.len(),
            });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(id));
        }
        if self.rows.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        self.rows.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn row(&self, row: usize) -> &[f32] {
        &self.data[row * self.dimension..(row + 1) * self.dimension]
    }

    pub fn id(&self, row: usize) -> &str {
        &self.ids[row]
    }

    pub fn row_of(&self, id: &str) -> Option<usize> {
        self.rows.get(id).copied()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        write_embeddings(&mut w, self)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        read_embeddings(&mut BufReader::new(file))
    }
}

pub fn write_embeddings<W: Write>(w: &mut W, store: &VectorStore) -> io::Result<()> {
    let dim = u32::try_from(store.dimension)
        .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "dimension exceeds u32"))?;
    w.write_all(MAGIC)?;
    write_u32(w, VERSION)?;
    write_u32(w, dim)?;
    write_u64(w, store.len() as u64)?;
    for row in 0..store.len() {
        write_str(w, store.id(row))?;
        for x in store.row(row) {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads a CMQE stream, rejecting bad headers, duplicate ids, non-finite
/// values and trailing bytes.
pub fn read_embeddings<R: Read>(r: &mut R) -> Result<VectorStore> {
    let bad = |reason: String| Error::Format {
        what: "embedding",
        reason,
    };
    let io = |e: io::Error| bad(e.to_string());
    let mut magic = [0; 4];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(bad("bad magic, expected CMQE".into()));
    }
    let version = read_u32(r).map_err(io)?;
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let dimension = read_u32(r).map_err(io)? as usize;
    if dimension > MAX_DIMENSION {
        return Err(bad(format!(
            "dimension {dimension} exceeds {MAX_DIMENSION}"
        )));
    }
    let count = read_u64(r).map_err(io)?;
    let mut store = VectorStore::new(dimension);
    let mut v = vec![0f32; dimension];
    for _ in 0..count {
        let id = read_str(r).map_err(io)?;
        for x in v.iter_mut() {
            *x = read_f32(r).map_err(io)?;
        }
        store.push(id, &v)?;
    }
    if !at_eof(r).map_err(io)? {
        return Err(bad("trailing bytes after last record".into()));
    }
    Ok(store)
}
