//! Plain-text word vectors: `word v1 ... vd` per line, with an optional
//! `count dim` header line.

use std::path::Path;

use seqtl_core::data::Pretrained;

use crate::error::{Error, Result};

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("line {line}: expected {expected} components, found {found}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },
    #[error("line {line}: unreadable vector")]
    UnreadableLine { line: usize },
    #[error("no vectors")]
    Empty,
}

pub fn parse_embeddings(text: &str) -> Result<Pretrained, EmbeddingError> {
    let mut table: Option<Pretrained> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut fields = raw.split_whitespace();
        let Some(word) = fields.next() else { continue };
        let rest: Vec<&str> = fields.collect();
        if i == 0 && rest.len() == 1 && word.parse::<usize>().is_ok() && rest[0].parse::<usize>().is_ok() {
            continue;
        }
        let vector: Vec<f64> = rest
            .iter()
            .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<_>>()
            .ok_or(EmbeddingError::UnreadableLine { line })?;
        if vector.is_empty() {
            return Err(EmbeddingError::UnreadableLine { line });
        }
        let t = table.get_or_insert_with(|| Pretrained::new(vector.len()));
        let expected = t.dim();
        let found = vector.len();
        t.insert(word, vector)
            .map_err(|_| EmbeddingError::DimensionMismatch { line, expected, found })?;
    }
    table.ok_or(EmbeddingError::Empty)
}

pub fn read_embeddings(path: &Path) -> Result<Pretrained> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(&text).map_err(|source| Error::Embeddings {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_vectors_and_skips_header() {
        let p = parse_embeddings("2 3\nthe 0.1 0.2 0.3\nParis 1 2 3\n").unwrap();
        assert_eq!(p.dim(), 3);
        assert_eq!(p.lookup("the"), Some(&[0.1, 0.2, 0.3][..]));
        assert_eq!(p.lookup("PARIS"), None);
        assert_eq!(p.lookup("paris"), None);
    }

    #[test]
    fn rejects_ragged_and_garbled_lines() {
        assert!(matches!(
            parse_embeddings("a 1 2\nb 1\n"),
            Err(EmbeddingError::DimensionMismatch { line: 2, expected: 2, found: 1 })
        ));
        assert!(matches!(
            parse_embeddings("a 1 x\n"),
            Err(EmbeddingError::UnreadableLine { line: 1 })
        ));
        assert!(matches!(parse_embeddings(""), Err(EmbeddingError::Empty)));
    }
}
