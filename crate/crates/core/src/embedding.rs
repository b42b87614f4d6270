//! Dense id-indexed vectors and the embedding interchange file format.
//!
//! ```text
//! <count> <dim>
//! <id>\t<v1> <v2> ... <vdim>
//! ```
//!
//! exactly `count` rows, UTF-8, decimal floats. Values are written with the
//! shortest representation that parses back to the same `f64`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    ids: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            ids: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, rows: usize) -> Self {
        EmbeddingTable {
            dim,
            ids: Vec::with_capacity(rows),
            index: HashMap::with_capacity(rows),
            data: Vec::with_capacity(rows * dim),
        }
    }

    /// Appends a row. Rejects duplicate ids, wrong lengths, and non-finite
    /// components.
    pub fn push(&mut self, id: impl Into<String>, vector: &[f64]) -> Result<()> {
        let id = id.into();
        if vector.len() != self.dim {
            return Err(Error::dim(self.dim, vector.len(), format!("row `{id}`")));
        }
        if let Some(pos) = vector.iter().position(|v| !v.is_finite()) {
            return Err(Error::config(format!(
                "row `{id}` has a non-finite value at component {pos}"
            )));
        }
        if id.is_empty() || id.contains(['\t', '\n', '\r']) {
            return Err(Error::config(format!("invalid embedding id {id:?}")));
        }
        if self.index.contains_key(&id) {
            return Err(Error::config(format!("duplicate id `{id}`")));
        }
        self.index.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.position(id).map(|i| self.row(i))
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.ids
            .iter()
            .enumerate()
            .map(move |(i, id)| (id.as_str(), self.row(i)))
    }

    /// Row-major storage, `len() * dim()` values.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// A new table holding `ids` in the given order.
    pub fn select<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Result<EmbeddingTable> {
        let ids = ids.into_iter();
        let mut out = EmbeddingTable::with_capacity(self.dim, ids.size_hint().0);
        for id in ids {
            let row = self
                .get(id)
                .ok_or_else(|| Error::UnknownId(id.to_string()))?;
            out.push(id, row)?;
        }
        Ok(out)
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        let mut line = String::new();
        for (id, row) in self.iter() {
            line.clear();
            line.push_str(id);
            line.push('\t');
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    line.push(' ');
                }
                // `Display` for f64 is the shortest round-tripping decimal.
                use std::fmt::Write as _;
                write!(line, "{v}").expect("writing to a String");
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
        let path = path.as_ref();
        let file = File::open(path)?;
        read_embeddings(BufReader::new(file), &path.display().to_string())
    }
}

/// Reads the interchange format. Any defect fails the whole load with the
/// offending line number.
pub fn read_embeddings<R: BufRead>(reader: R, source: &str) -> Result<EmbeddingTable> {
    let fail = |line: usize, message: String| Error::Format {
        path: source.to_string(),
        line,
        message,
    };
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(line) => line?,
        None => return Err(fail(1, "missing `<count> <dim>` header".into())),
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (count, dim) = match fields.as_slice() {
        [c, d] => match (c.parse::<usize>(), d.parse::<usize>()) {
            (Ok(c), Ok(d)) if d > 0 => (c, d),
            _ => return Err(fail(1, format!("bad header {header:?}"))),
        },
        _ => return Err(fail(1, format!("bad header {header:?}"))),
    };

    let mut table = EmbeddingTable::with_capacity(dim, count);
    let mut values = Vec::with_capacity(dim);
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        let line = line?;
        if line.is_empty() && table.len() == count {
            continue;
        }
        if table.len() == count {
            return Err(fail(lineno, format!("more than the declared {count} rows")));
        }
        let Some((id, rest)) = line.split_once('\t') else {
            return Err(fail(lineno, "expected `<id>\\t<values>`".into()));
        };
        values.clear();
        for tok in rest.split(' ').filter(|t| !t.is_empty()) {
            let v: f64 = tok
                .parse()
                .map_err(|_| fail(lineno, format!("`{tok}` is not a number")))?;
            values.push(v);
        }
        if values.len() != dim {
            return Err(fail(
                lineno,
                format!("row `{id}` has {} values, expected {dim}", values.len()),
            ));
        }
        table
            .push(id, &values)
            .map_err(|e| fail(lineno, e.to_string()))?;
    }
    if table.len() != count {
        return Err(fail(
            table.len() + 2,
            format!("declared {count} rows but found {}", table.len()),
        ));
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn read(s: &str) -> Result<EmbeddingTable> {
        read_embeddings(s.as_bytes(), "test")
    }

    #[test]
    fn reads_small_file() {
        let t = read("2 3\na\t1 0 0\nb\t0 1 0").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.dim(), 3);
        assert_eq!(t.get("b").unwrap(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn short_row_fails_at_that_line() {
        let err = read("2 3\na\t1 0 0\nb\t0 1").unwrap_err();
        match err {
            Error::Format { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn non_finite_and_duplicates_rejected() {
        assert!(read("1 2\na\tNaN 0").is_err());
        assert!(read("1 2\na\tinf 0").is_err());
        assert!(read("2 1\na\t1\na\t2").is_err());
    }

    #[test]
    fn row_count_must_match_header() {
        assert!(read("3 1\na\t1\nb\t2").is_err());
        assert!(read("1 1\na\t1\nb\t2").is_err());
        assert!(read("").is_err());
    }

    #[test]
    fn writes_exact_format() {
        let mut t = EmbeddingTable::new(3);
        t.push("a", &[1.0, 0.0, -0.5]).unwrap();
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1 3\na\t1 0 -0.5\n");
    }

    proptest! {
        #[test]
        fn write_read_is_bit_exact(rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 4), 1..20)) {
            let mut t = EmbeddingTable::new(4);
            for (i, r) in rows.iter().enumerate() {
                t.push(format!("id{i}"), r).unwrap();
            }
            let mut buf = Vec::new();
            t.write(&mut buf).unwrap();
            let back = read_embeddings(&buf[..], "mem").unwrap();
            prop_assert_eq!(back, t);
        }
    }
}
