use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on clauses per document; also the length of the label-history vector.
pub const DEFAULT_MAX_CLAUSES: usize = 40;

/// Default clip bound for relative positions.
pub const DEFAULT_CLIP: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Clause {
    tokens: Vec<String>,
}

impl Clause {
    pub fn new<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Result<Self> {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if tokens.is_empty() {
            return Err(Error::Argument("clause has no tokens".into()));
        }
        if tokens.iter().any(String::is_empty) {
            return Err(Error::Argument("clause contains an empty token".into()));
        }
        Ok(Self { tokens })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// A document: ordered clauses, the emotion clause index, and gold cause flags.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    doc_id: String,
    clauses: Vec<Clause>,
    emotion_index: usize,
    gold_causes: Vec<bool>,
}

impl Document {
    pub fn new(
        doc_id: impl Into<String>,
        clauses: Vec<Clause>,
        emotion_index: usize,
        gold_causes: Vec<bool>,
        max_clauses: usize,
    ) -> Result<Self> {
        let n = clauses.len();
        if n == 0 {
            return Err(Error::Argument("document has no clauses".into()));
        }
        if n > max_clauses {
            return Err(Error::Capacity(format!(
                "document has {n} clauses, maximum is {max_clauses}"
            )));
        }
        if emotion_index >= n {
            return Err(Error::Index {
                what: "emotion_index",
                index: emotion_index as i64,
                size: n,
            });
        }
        if gold_causes.len() != n {
            return Err(Error::Argument(format!(
                "gold_causes has {} labels for {n} clauses",
                gold_causes.len()
            )));
        }
        if !gold_causes.iter().any(|&c| c) {
            return Err(Error::Argument("document has no gold cause".into()));
        }
        Ok(Self {
            doc_id: doc_id.into(),
            clauses,
            emotion_index,
            gold_causes,
        })
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn emotion_index(&self) -> usize {
        self.emotion_index
    }

    pub fn gold_causes(&self) -> &[bool] {
        &self.gold_causes
    }

    pub fn cause_count(&self) -> usize {
        self.gold_causes.iter().filter(|&&c| c).count()
    }
}

/// Signed clause distance to the emotion clause, clipped to `[-L, L]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelativePosition(i32);

impl RelativePosition {
    pub fn new(value: i32, clip: usize) -> Self {
        let l = clip as i32;
        Self(value.clamp(-l, l))
    }

    pub fn value(self) -> i32 {
        self.0
    }

    /// Order-preserving class index `value + L` in `0..=2L`.
    pub fn class_index(self, clip: usize) -> Result<usize> {
        let l = clip as i32;
        if self.0.abs() > l {
            return Err(Error::Index {
                what: "position class",
                index: self.0 as i64,
                size: 2 * clip + 1,
            });
        }
        Ok((self.0 + l) as usize)
    }

    pub fn from_class_index(index: usize, clip: usize) -> Result<Self> {
        if index > 2 * clip {
            return Err(Error::Index {
                what: "position class",
                index: index as i64,
                size: 2 * clip + 1,
            });
        }
        Ok(Self(index as i32 - clip as i32))
    }
}

impl fmt::Display for RelativePosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 > 0 {
            write!(f, "+{}", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Number of position classes for clip bound `L`.
pub fn position_classes(clip: usize) -> usize {
    2 * clip + 1
}

pub fn relative_positions(doc: &Document, clip: usize) -> Vec<RelativePosition> {
    let e = doc.emotion_index() as i64;
    (0..doc.len() as i64)
        .map(|i| RelativePosition::new((i - e).clamp(i32::MIN as i64, i32::MAX as i64) as i32, clip))
        .collect()
}
