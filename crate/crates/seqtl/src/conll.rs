//! Column-format corpora: one token per line, blank lines between
//! sentences, `-DOCSTART-` lines ignored.

use std::fmt::Write as _;
use std::path::Path;

use seqtl_core::data::{Corpus, Sentence, Token};

use crate::error::{Error, Result};

#[derive(Debug, thiserror::Error)]
pub enum ConllError {
    #[error("line {line}: need column {needed}, found {found} columns")]
    MalformedLine { line: usize, needed: usize, found: usize },
    #[error("line {line}: {source}")]
    InvalidLabel { line: usize, source: seqtl_core::Error },
    #[error("no sentences")]
    EmptyCorpus,
}

/// Which whitespace-separated columns hold the token and its label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Columns {
    pub token: usize,
    /// `None` means the last column.
    pub label: Option<usize>,
}

impl Default for Columns {
    fn default() -> Self {
        Columns { token: 0, label: None }
    }
}

pub fn parse_conll(text: &str, columns: Columns) -> Result<Corpus, ConllError> {
    let mut sentences = Vec::new();
    let mut tokens = Vec::new();
    let flush = |tokens: &mut Vec<Token>, sentences: &mut Vec<Sentence>| {
        if !tokens.is_empty() {
            sentences.push(Sentence::new(std::mem::take(tokens)).expect("non-empty"));
        }
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.is_empty() {
            flush(&mut tokens, &mut sentences);
            continue;
        }
        if fields[0] == "-DOCSTART-" {
            flush(&mut tokens, &mut sentences);
            continue;
        }
        let label_col = columns.label.unwrap_or(fields.len() - 1);
        let needed = columns.token.max(label_col);
        if fields.len() <= needed || (columns.label.is_none() && fields.len() < 2) {
            return Err(ConllError::MalformedLine {
                line,
                needed: needed + 1,
                found: fields.len(),
            });
        }
        let label = fields[label_col]
            .parse()
            .map_err(|source| ConllError::InvalidLabel { line, source })?;
        tokens.push(Token::new(fields[columns.token], label));
    }
    flush(&mut tokens, &mut sentences);
    if sentences.is_empty() {
        return Err(ConllError::EmptyCorpus);
    }
    Ok(Corpus::new(sentences))
}

/// Two columns, surface form and label.
pub fn write_conll(corpus: &Corpus) -> String {
    let mut out = String::new();
    for s in &corpus.sentences {
        for t in &s.tokens {
            let _ = writeln!(out, "{} {}", t.surface, t.label);
        }
        out.push('\n');
    }
    out
}

pub fn read_conll(path: &Path, columns: Columns) -> Result<Corpus> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_conll(&text, columns).map_err(|source| Error::Conll {
        path: path.to_path_buf(),
        source,
    })
}

pub fn save_conll(path: &Path, corpus: &Corpus) -> Result<()> {
    crate::records::write_atomic(path, write_conll(corpus).as_bytes())
}
