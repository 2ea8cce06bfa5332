use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableKind {
    /// `W`: input vectors of the skip-gram model.
    NodeInput,
    /// `W′`: output vectors of the skip-gram model.
    NodeOutput,
    /// `D`: one vector per ego.
    Ego,
    /// Output weights of the PV-DM model, width `(2c+1)·d`.
    PvdmOutput,
}

pub fn ego_token(ego: NodeId) -> String {
    format!("ego:{ego}")
}

/// Dense row-major token → vector table.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable<T> {
    kind: TableKind,
    dim: usize,
    tokens: Vec<String>,
    data: Vec<T>,
    index: HashMap<String, usize>,
}

impl<T: Scalar> EmbeddingTable<T> {
    pub fn new(kind: TableKind, dim: usize, tokens: Vec<String>, data: Vec<T>) -> Result<Self> {
        if data.len() != tokens.len() * dim {
            return Err(Error::DimensionMismatch {
                what: "embedding table data",
                expected: tokens.len() * dim,
                got: data.len(),
            });
        }
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(EmbeddingTable { kind, dim, tokens, data, index })
    }

    pub fn kind(&self) -> TableKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, token: &str) -> Option<&[T]> {
        self.index.get(token).map(|&i| self.row(i))
    }

    /// Vector of a graph node (`glo(v)`).
    pub fn node(&self, v: NodeId) -> Option<&[T]> {
        self.get(&v.to_string())
    }

    /// Vector of an ego (`loc(u)`).
    pub fn ego(&self, u: NodeId) -> Option<&[T]> {
        self.get(&ego_token(u))
    }

    /// Writes `<rows> <dim>` then `<token> <x1> ... <xd>` per row, each value
    /// with 17 significant digits.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::with_capacity(self.data.len() * 24 + 32);
        let _ = writeln!(out, "{} {}", self.len(), self.dim);
        for (i, tok) in self.tokens.iter().enumerate() {
            out.push_str(tok);
            for x in self.row(i) {
                let _ = write!(out, " {x:.16e}");
            }
            out.push('\n');
        }
        fs::write(path, out).map_err(Error::io(path))
    }

    /// Reads a table written by [`save`](Self::save). Tables whose tokens
    /// all carry the `ego:` prefix load as [`TableKind::Ego`].
    pub fn load(path: &Path) -> Result<Self> {
        let corrupt = |msg: String| Error::CorruptFile { path: path.to_owned(), msg };
        let text = fs::read_to_string(path).map_err(Error::io(path))?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| corrupt("missing header".into()))?;
        let mut h = header.split_whitespace().map(str::parse::<usize>);
        let (rows, dim) = match (h.next(), h.next(), h.next()) {
            (Some(Ok(r)), Some(Ok(d)), None) => (r, d),
            _ => return Err(corrupt(format!("bad header `{header}`"))),
        };
        let mut tokens = Vec::with_capacity(rows);
        let mut data = Vec::with_capacity(rows * dim);
        for (i, line) in lines.enumerate() {
            if i >= rows {
                return Err(corrupt(format!("header declares {rows} rows, found more")));
            }
            let mut it = line.split_whitespace();
            tokens.push(it.next().unwrap().to_owned());
            let before = data.len();
            for t in it {
                let x: T = t.parse().map_err(|_| corrupt(format!("row {}: bad value `{t}`", i + 1)))?;
                data.push(x);
            }
            if data.len() - before != dim {
                return Err(corrupt(format!(
                    "row {}: expected {dim} values, found {}",
                    i + 1,
                    data.len() - before
                )));
            }
        }
        if tokens.len() != rows {
            return Err(corrupt(format!("header declares {rows} rows, found {}", tokens.len())));
        }
        let kind = if rows > 0 && tokens.iter().all(|t| t.starts_with("ego:")) {
            TableKind::Ego
        } else {
            TableKind::NodeInput
        };
        EmbeddingTable::new(kind, dim, tokens, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn save_format_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.emb");
        let t = EmbeddingTable::new(
            TableKind::NodeInput,
            2,
            vec!["1".into(), "2".into(), "3".into()],
            vec![0.1f64, -2.5, 1.0 / 3.0, 1e-300, f64::MAX, 0.0],
        )
        .unwrap();
        t.save(&p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("3 2\n"));
        assert_eq!(text.lines().count(), 4);
        let back = EmbeddingTable::<f64>::load(&p).unwrap();
        assert_eq!(back, t);

        let t32 = EmbeddingTable::new(TableKind::Ego, 1, vec!["ego:0".into()], vec![0.1f32]).unwrap();
        t32.save(&p).unwrap();
        assert_eq!(EmbeddingTable::<f32>::load(&p).unwrap(), t32);
    }

    #[test]
    fn row_count_mismatch_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.emb");
        fs::write(&p, "5 1\na 1\nb 2\nc 3\nd 4\n").unwrap();
        assert!(matches!(EmbeddingTable::<f64>::load(&p), Err(Error::CorruptFile { .. })));
        fs::write(&p, "1 2\na 1\n").unwrap();
        assert!(matches!(EmbeddingTable::<f64>::load(&p), Err(Error::CorruptFile { .. })));
    }
}
