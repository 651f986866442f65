use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::Tag;
use crate::error::{Error, Result};

/// Ordered label inventory: `O`, then `B-c`, `I-c` for each category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Tag>", into = "Vec<Tag>")]
pub struct LabelSet {
    tags: Vec<Tag>,
    categories: Vec<String>,
}

impl LabelSet {
    pub fn from_categories<S: AsRef<str>>(categories: &[S]) -> Self {
        let mut tags = alloc::vec![Tag::Outside];
        for c in categories {
            tags.push(Tag::Begin(c.as_ref().to_string()));
            tags.push(Tag::Inside(c.as_ref().to_string()));
        }
        LabelSet {
            tags,
            categories: categories.iter().map(|c| c.as_ref().to_string()).collect(),
        }
    }

    /// Appends `B-c`, `I-c` for each new category, keeping existing indices.
    pub fn extended<S: AsRef<str>>(&self, new_categories: &[S]) -> Result<Self> {
        let mut cats = self.categories.clone();
        for c in new_categories {
            let c = c.as_ref();
            if cats.iter().any(|k| k == c) {
                return Err(Error::CategoryCollision(c.to_string()));
            }
            cats.push(c.to_string());
        }
        Ok(LabelSet::from_categories(&cats))
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn tag(&self, index: usize) -> &Tag {
        &self.tags[index]
    }

    pub fn index_of(&self, tag: &Tag) -> Result<usize> {
        self.tags
            .iter()
            .position(|t| t == tag)
            .ok_or_else(|| Error::LabelInventoryMismatch(tag.to_string()))
    }
}

impl TryFrom<Vec<Tag>> for LabelSet {
    type Error = Error;

    fn try_from(tags: Vec<Tag>) -> Result<Self> {
        let mut cats: Vec<String> = Vec::new();
        for t in &tags {
            if let Some(c) = t.category() {
                if !cats.iter().any(|k| k == c) {
                    cats.push(c.to_string());
                }
            }
        }
        let rebuilt = LabelSet::from_categories(&cats);
        if rebuilt.tags != tags {
            return Err(Error::InvalidConfig(alloc::format!(
                "label inventory is not in O, B-c, I-c order: {tags:?}"
            )));
        }
        Ok(rebuilt)
    }
}

impl From<LabelSet> for Vec<Tag> {
    fn from(l: LabelSet) -> Self {
        l.tags
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_order() {
        let l = LabelSet::from_categories(&["PER", "ORG", "MISC"]);
        assert_eq!(l.len(), 7);
        let t = l.extended(&["LOC"]).unwrap();
        assert_eq!(t.len(), 9);
        assert_eq!(&t.tags()[..7], l.tags());
        assert_eq!(t.index_of(&Tag::Inside("LOC".into())).unwrap(), 8);
        assert!(matches!(l.extended(&["PER"]), Err(Error::CategoryCollision(_))));
    }

    #[test]
    fn rejects_misordered_inventory() {
        let tags = alloc::vec![Tag::Begin("A".into()), Tag::Outside, Tag::Inside("A".into())];
        assert!(LabelSet::try_from(tags).is_err());
    }
}
