use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math::Tensor;

/// Embedding width used by the published model.
pub const DEFAULT_DIM: usize = 300;

/// Half-width of the uniform range used for unseen-token vectors.
pub const OOV_INIT_RANGE: f64 = 0.05;

/// Word vectors: frozen pretrained rows plus trainable rows for tokens the
/// pretrained file does not cover.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    seed: u64,
    pretrained: BTreeMap<String, Tensor>,
    oov: BTreeMap<String, Tensor>,
    skipped_lines: Vec<usize>,
}

/// 64-bit FNV-1a, used to derive a per-token stream from the table seed.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Initial vector for an unseen token: uniform in `[-0.05, 0.05]`, a pure
/// function of `(seed, token, dim)`.
pub fn oov_init(seed: u64, token: &str, dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(token.as_bytes()));
    (0..dim)
        .map(|_| rng.gen_range(-OOV_INIT_RANGE..=OOV_INIT_RANGE))
        .collect()
}

impl EmbeddingTable {
    pub fn new(dim: usize, seed: u64) -> Self {
        EmbeddingTable {
            dim,
            seed,
            pretrained: BTreeMap::new(),
            oov: BTreeMap::new(),
            skipped_lines: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }

    /// Insert a pretrained (frozen) row.
    pub fn insert_pretrained(&mut self, token: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.dim {
            return Err(Error::Shape(format!(
                "row for {token:?} has {} values, table dimension is {}",
                values.len(),
                self.dim
            )));
        }
        self.pretrained
            .insert(token.to_string(), Tensor::vector(values));
        Ok(())
    }

    /// Insert a trainable unseen-token row with explicit values.
    pub fn insert_oov(&mut self, token: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.dim {
            return Err(Error::Shape(format!(
                "row for {token:?} has {} values, table dimension is {}",
                values.len(),
                self.dim
            )));
        }
        self.oov
            .insert(token.to_string(), Tensor::vector(values).trainable());
        Ok(())
    }

    pub fn is_pretrained(&self, token: &str) -> bool {
        self.pretrained.contains_key(token)
    }

    /// Row for `token`, creating a trainable unseen-token row on first access.
    pub fn embed_token(&mut self, token: &str) -> &Tensor {
        if self.pretrained.contains_key(token) {
            return &self.pretrained[token];
        }
        let (seed, dim) = (self.seed, self.dim);
        self.oov
            .entry(token.to_string())
            .or_insert_with(|| Tensor::vector(oov_init(seed, token, dim)).trainable())
    }

    /// Read-only lookup. Tokens without a row get the vector `embed_token`
    /// would create for them.
    pub fn lookup(&self, token: &str) -> Cow<'_, [f64]> {
        match self.row(token) {
            Some(t) => Cow::Borrowed(t.values()),
            None => Cow::Owned(oov_init(self.seed, token, self.dim)),
        }
    }

    pub fn row(&self, token: &str) -> Option<&Tensor> {
        self.pretrained.get(token).or_else(|| self.oov.get(token))
    }

    pub fn row_mut(&mut self, token: &str) -> Option<&mut Tensor> {
        match self.pretrained.get_mut(token) {
            Some(t) => Some(t),
            None => self.oov.get_mut(token),
        }
    }

    /// Let pretrained rows receive gradient updates (or freeze them again).
    pub fn set_pretrained_trainable(&mut self, trainable: bool) {
        for t in self.pretrained.values_mut() {
            t.requires_grad = trainable;
        }
    }

    /// Drop pretrained rows for which `keep` is false.
    pub fn retain_pretrained<F: FnMut(&str) -> bool>(&mut self, mut keep: F) {
        self.pretrained.retain(|k, _| keep(k));
    }

    /// Copy pretrained rows from `other` for tokens this table has no row for.
    pub fn extend_pretrained(&mut self, other: &EmbeddingTable) -> Result<usize> {
        if other.dim != self.dim {
            return Err(Error::Shape(format!(
                "embedding dimension {} does not match model dimension {}",
                other.dim, self.dim
            )));
        }
        let trainable = self.pretrained.values().next().is_some_and(|t| t.requires_grad);
        let mut added = 0;
        for (token, row) in &other.pretrained {
            if self.row(token).is_none() {
                let mut row = row.clone();
                row.requires_grad = trainable;
                self.pretrained.insert(token.clone(), row);
                added += 1;
            }
        }
        Ok(added)
    }

    pub fn pretrained_rows(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.pretrained.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn oov_rows(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.oov.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn pretrained_len(&self) -> usize {
        self.pretrained.len()
    }

    pub fn oov_len(&self) -> usize {
        self.oov.len()
    }

    /// 1-based line numbers that were skipped while loading (blank lines, a
    /// leading `count dim` header, duplicate tokens).
    pub fn skipped_lines(&self) -> &[usize] {
        &self.skipped_lines
    }

    /// Write the pretrained rows in the text format read by
    /// [`parse_embeddings`], sorted by token.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (token, row) in &self.pretrained {
            write!(out, "{token}")?;
            for v in row.values() {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        out.flush()
    }
}

/// Parse the word-vector text format: `TOKEN v1 ... vD` per line.
///
/// Tokens may themselves contain spaces; the last `dim` fields are always the
/// vector. Only tokens accepted by `keep` are stored.
pub fn parse_embeddings<R: BufRead>(
    reader: R,
    dim: usize,
    seed: u64,
    keep: Option<&dyn Fn(&str) -> bool>,
) -> Result<EmbeddingTable> {
    let mut table = EmbeddingTable::new(dim, seed);
    let mut buf = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let fields: Vec<&str> = line.split(' ').filter(|f| !f.is_empty()).collect();
        if fields.is_empty() {
            table.skipped_lines.push(line_no);
            continue;
        }
        if line_no == 1 && fields.len() == 2 && fields.iter().all(|f| f.parse::<u64>().is_ok()) {
            table.skipped_lines.push(line_no);
            continue;
        }
        if fields.len() < dim + 1 {
            return Err(Error::Dimension {
                line: line_no,
                expected: dim,
                found: fields.len().saturating_sub(1),
            });
        }
        let split = fields.len() - dim;
        let token = fields[..split].join(" ");
        if keep.is_some_and(|k| !k(&token)) {
            continue;
        }
        if table.pretrained.contains_key(&token) {
            table.skipped_lines.push(line_no);
            continue;
        }
        buf.clear();
        for f in &fields[split..] {
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid vector component {f:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("non-finite vector component {f:?}"),
                });
            }
            buf.push(v);
        }
        table.insert_pretrained(&token, buf.clone())?;
    }
    Ok(table)
}

/// Load a word-vector file; every row is frozen.
pub fn load_embeddings(path: impl AsRef<Path>, dim: usize) -> Result<EmbeddingTable> {
    load_embeddings_filtered(path, dim, 0, None)
}

/// Load only the rows accepted by `keep`; useful for multi-gigabyte files.
pub fn load_embeddings_filtered(
    path: impl AsRef<Path>,
    dim: usize,
    seed: u64,
    keep: Option<&dyn Fn(&str) -> bool>,
) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(BufReader::new(file), dim, seed, keep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row_text(token: &str, dim: usize, base: f64) -> String {
        let mut s = token.to_string();
        for i in 0..dim {
            s.push_str(&format!(" {}", base + i as f64 * 0.001));
        }
        s
    }

    #[test]
    fn loads_three_frozen_rows() {
        let text = [row_text("salt", 300, 0.1), row_text("pepper", 300, 0.2), row_text("oil", 300, -0.3)]
            .join("\n");
        let table = parse_embeddings(text.as_bytes(), 300, 0, None).unwrap();
        assert_eq!(table.pretrained_len(), 3);
        assert!(table.pretrained_rows().all(|(_, t)| !t.requires_grad));
    }

    #[test]
    fn short_line_names_line() {
        let text = format!("{}\n{}", row_text("salt", 300, 0.1), row_text("bad", 299, 0.1));
        match parse_embeddings(text.as_bytes(), 300, 0, None).unwrap_err() {
            Error::Dimension { line, expected, found } => {
                assert_eq!((line, expected, found), (2, 300, 299));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn header_and_blank_lines_are_reported() {
        let text = format!("2 3\n{}\n\n{}\n", row_text("a", 3, 0.0), row_text("b c", 3, 1.0));
        let table = parse_embeddings(text.as_bytes(), 3, 0, None).unwrap();
        assert_eq!(table.pretrained_len(), 2);
        assert!(table.is_pretrained("b c"));
        assert_eq!(table.skipped_lines(), &[1, 3]);
    }

    #[test]
    fn oov_rows_are_stable_and_trainable() {
        let mut table = EmbeddingTable::new(16, 42);
        let first = table.embed_token("zaatar").clone();
        let second = table.embed_token("zaatar").clone();
        assert!(first.requires_grad);
        assert_eq!(first.values(), second.values());
        assert_eq!(table.lookup("zaatar").as_ref(), first.values());
        assert_eq!(table.lookup("sumac").as_ref(), oov_init(42, "sumac", 16).as_slice());
        assert_eq!(table.oov_len(), 1);
    }

    #[test]
    fn oov_values_in_range() {
        for i in 0..1000 {
            let v = oov_init(i, "token", 8);
            assert!(v.iter().all(|x| (-OOV_INIT_RANGE..=OOV_INIT_RANGE).contains(x)));
        }
    }

    #[test]
    fn text_round_trip_is_exact() {
        let mut table = EmbeddingTable::new(3, 0);
        table.insert_pretrained("salt", vec![0.1, -1e-300, 1.0 / 3.0]).unwrap();
        table.insert_pretrained("olive oil", vec![2.5, 0.0, -7.25]).unwrap();
        let mut buf = Vec::new();
        table.write_text(&mut buf).unwrap();
        let back = parse_embeddings(buf.as_slice(), 3, 0, None).unwrap();
        assert_eq!(back.row("salt").unwrap().values(), table.row("salt").unwrap().values());
        assert_eq!(back.row("olive oil").unwrap().values(), &[2.5, 0.0, -7.25]);
    }
}
