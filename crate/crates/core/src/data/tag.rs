//! BIO tags and the orphan-`I` repair used throughout the crate.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single BIO tag.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Tag {
    Outside,
    Begin(String),
    Inside(String),
}

impl Tag {
    pub fn category(&self) -> Option<&str> {
        match self {
            Tag::Outside => None,
            Tag::Begin(c) | Tag::Inside(c) => Some(c),
        }
    }

    pub fn is_outside(&self) -> bool {
        matches!(self, Tag::Outside)
    }
}

impl FromStr for Tag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "O" {
            return Ok(Tag::Outside);
        }
        let invalid = || Error::InvalidLabel(s.to_string());
        let (prefix, cat) = s.split_once('-').ok_or_else(invalid)?;
        if cat.is_empty() || cat.chars().any(char::is_whitespace) {
            return Err(invalid());
        }
        match prefix {
            "B" => Ok(Tag::Begin(cat.to_string())),
            "I" => Ok(Tag::Inside(cat.to_string())),
            _ => Err(invalid()),
        }
    }
}

impl TryFrom<String> for Tag {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Tag> for String {
    fn from(t: Tag) -> String {
        t.to_string()
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Outside => f.write_str("O"),
            Tag::Begin(c) => write!(f, "B-{c}"),
            Tag::Inside(c) => write!(f, "I-{c}"),
        }
    }
}

/// Rewrites every `I-X` that does not continue an `X` entity into `B-X`,
/// the same repair conlleval applies implicitly.
pub fn repair_bio(tags: &[Tag]) -> Vec<Tag> {
    let mut out: Vec<Tag> = Vec::with_capacity(tags.len());
    for tag in tags {
        let fixed = match tag {
            Tag::Inside(cat) => {
                let continues = out.last().and_then(Tag::category) == Some(cat.as_str());
                if continues {
                    tag.clone()
                } else {
                    Tag::Begin(cat.clone())
                }
            }
            other => other.clone(),
        };
        out.push(fixed);
    }
    out
}

/// Parses and repairs a sequence of raw tag strings.
pub fn repair_bio_str<S: AsRef<str>>(labels: &[S]) -> Result<Vec<Tag>> {
    let tags = labels
        .iter()
        .map(|s| s.as_ref().parse())
        .collect::<Result<Vec<Tag>>>()?;
    Ok(repair_bio(&tags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn tags(s: &[&str]) -> Vec<Tag> {
        s.iter().map(|t| t.parse().unwrap()).collect()
    }

    #[test]
    fn parses_grammar() {
        assert_eq!("O".parse::<Tag>().unwrap(), Tag::Outside);
        assert_eq!("B-PER".parse::<Tag>().unwrap(), Tag::Begin("PER".into()));
        assert_eq!("I-ORG".parse::<Tag>().unwrap(), Tag::Inside("ORG".into()));
        for bad in ["", "B-", "X-PER", "o", "BPER", "B-A B", "S-PER"] {
            assert!(matches!(bad.parse::<Tag>(), Err(Error::InvalidLabel(_))), "{bad}");
        }
    }

    #[test]
    fn repairs_orphans() {
        assert_eq!(repair_bio(&tags(&["O", "I-PER", "I-PER"])), tags(&["O", "B-PER", "I-PER"]));
        assert_eq!(repair_bio(&tags(&["B-LOC", "I-LOC"])), tags(&["B-LOC", "I-LOC"]));
        assert_eq!(repair_bio(&tags(&["I-ORG", "I-PER"])), tags(&["B-ORG", "B-PER"]));
    }

    #[test]
    fn repair_rejects_bad_strings() {
        assert!(repair_bio_str(&["O", "Q-PER"]).is_err());
        assert_eq!(repair_bio_str(&["I-X"]).unwrap(), vec![Tag::Begin("X".into())]);
    }
}
