//! Entity-level precision, recall and F1 in the conlleval style.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::Tag;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntitySpan {
    pub category: String,
    /// Inclusive token indices.
    pub start: usize,
    pub end: usize,
}

/// Maximal runs that start at a `B-X` (or an orphan `I-X`) and continue
/// through `I-X` tags of the same category.
pub fn extract_entities(tags: &[Tag]) -> Vec<EntitySpan> {
    let mut spans = Vec::new();
    let mut open: Option<EntitySpan> = None;
    for (i, tag) in tags.iter().enumerate() {
        match tag {
            Tag::Inside(cat) if open.as_ref().is_some_and(|s| &s.category == cat) => {
                if let Some(s) = open.as_mut() {
                    s.end = i;
                }
            }
            Tag::Begin(cat) | Tag::Inside(cat) => {
                spans.extend(open.take());
                open = Some(EntitySpan {
                    category: cat.clone(),
                    start: i,
                    end: i,
                });
            }
            Tag::Outside => spans.extend(open.take()),
        }
    }
    spans.extend(open);
    spans
}

/// Parses raw tag strings and extracts spans.
pub fn extract_entities_str<S: AsRef<str>>(tags: &[S]) -> Result<Vec<EntitySpan>> {
    let tags = tags.iter().map(|t| t.as_ref().parse()).collect::<Result<Vec<Tag>>>()?;
    Ok(extract_entities(&tags))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub true_positives: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl Counts {
    pub fn precision(&self) -> f64 {
        ratio(self.true_positives, self.predicted)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.true_positives, self.gold)
    }

    /// `2PR / (P + R)`, zero when both are zero.
    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    fn add(&mut self, other: &Counts) {
        self.true_positives += other.true_positives;
        self.predicted += other.predicted;
        self.gold += other.gold;
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Pooled and per-category counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub per_category: BTreeMap<String, Counts>,
    pub overall: Counts,
}

/// One structured line of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub category: String,
    pub tp: usize,
    pub pred: usize,
    pub gold: usize,
    pub p: f64,
    pub r: f64,
    pub f1: f64,
}

impl ScoreReport {
    pub fn category(&self, name: &str) -> Counts {
        self.per_category.get(name).copied().unwrap_or_default()
    }

    /// Counts pooled over a subset of categories (e.g. the original or the
    /// new ones).
    pub fn pooled<S: AsRef<str>>(&self, categories: &[S]) -> Counts {
        let mut c = Counts::default();
        for name in categories {
            c.add(&self.category(name.as_ref()));
        }
        c
    }

    /// Per-category records followed by an `overall` record.
    pub fn records(&self) -> Vec<ScoreRecord> {
        let mut out: Vec<ScoreRecord> = self
            .per_category
            .iter()
            .map(|(name, c)| record(name, c))
            .collect();
        out.push(record("overall", &self.overall));
        out
    }

    /// conlleval-like table.
    pub fn to_table(&self) -> String {
        let mut s = format!("{:<12} {:>6} {:>6} {:>6} {:>8} {:>8} {:>8}\n", "category", "tp", "pred", "gold", "prec", "rec", "f1");
        for r in self.records() {
            s.push_str(&format!(
                "{:<12} {:>6} {:>6} {:>6} {:>8.2} {:>8.2} {:>8.2}\n",
                r.category,
                r.tp,
                r.pred,
                r.gold,
                100.0 * r.p,
                100.0 * r.r,
                100.0 * r.f1
            ));
        }
        s
    }
}

fn record(name: &str, c: &Counts) -> ScoreRecord {
    ScoreRecord {
        category: name.to_string(),
        tp: c.true_positives,
        pred: c.predicted,
        gold: c.gold,
        p: c.precision(),
        r: c.recall(),
        f1: c.f1(),
    }
}

/// Exact-match span scoring over aligned sentences.
pub fn score<P: AsRef<[Tag]>, G: AsRef<[Tag]>>(pred: &[P], gold: &[G]) -> Result<ScoreReport> {
    if pred.len() != gold.len() {
        return Err(Error::AlignmentMismatch(format!(
            "{} predicted vs {} gold sentences",
            pred.len(),
            gold.len()
        )));
    }
    let mut report = ScoreReport::default();
    for (k, (p, g)) in pred.iter().zip(gold).enumerate() {
        let (p, g) = (p.as_ref(), g.as_ref());
        if p.len() != g.len() {
            return Err(Error::AlignmentMismatch(format!(
                "sentence {k}: {} predicted vs {} gold tags",
                p.len(),
                g.len()
            )));
        }
        let p_spans = extract_entities(p);
        let g_spans = extract_entities(g);
        for s in &p_spans {
            let c = report.per_category.entry(s.category.clone()).or_default();
            c.predicted += 1;
            if g_spans.contains(s) {
                c.true_positives += 1;
            }
        }
        for s in &g_spans {
            report.per_category.entry(s.category.clone()).or_default().gold += 1;
        }
    }
    let mut overall = Counts::default();
    for c in report.per_category.values() {
        overall.add(c);
    }
    report.overall = overall;
    Ok(report)
}
