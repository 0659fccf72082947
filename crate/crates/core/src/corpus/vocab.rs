use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::Document;
use crate::error::{Error, Result};

pub const UNK: &str = "<unk>";

/// Token to dense id mapping; id 0 is reserved for unknown tokens.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds from an id-ordered token list whose first entry is [`UNK`].
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.first().map(String::as_str) != Some(UNK) {
            return Err(Error::Argument(format!("vocabulary must start with {UNK}")));
        }
        let index: HashMap<String, usize> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        if index.len() != tokens.len() {
            return Err(Error::Argument("vocabulary has duplicate tokens".into()));
        }
        Ok(Self { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(0)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = Error;

    fn try_from(tokens: Vec<String>) -> Result<Self> {
        Self::from_tokens(tokens)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

/// Share of corpus tokens missing from `vocab`; 0 for a corpus without tokens.
pub fn oov_rate(docs: &[Document], vocab: &Vocabulary) -> f64 {
    let (mut total, mut missing) = (0usize, 0usize);
    for tok in docs.iter().flat_map(|d| d.clauses()).flat_map(|c| c.tokens()) {
        total += 1;
        missing += usize::from(!vocab.contains(tok));
    }
    if total == 0 {
        0.0
    } else {
        missing as f64 / total as f64
    }
}

/// Tokens seen at least `min_count` times, ordered by descending frequency
/// then lexicographically.
pub fn build_vocab(docs: &[Document], min_count: usize) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::Argument("cannot build a vocabulary from an empty corpus".into()));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for doc in docs {
        for clause in doc.clauses() {
            for tok in clause.tokens() {
                *counts.entry(tok.as_str()).or_default() += 1;
            }
        }
    }
    let mut kept: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|&(t, c)| c >= min_count && t != UNK)
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let tokens = std::iter::once(UNK.to_string())
        .chain(kept.into_iter().map(|(t, _)| t.to_string()))
        .collect();
    Vocabulary::from_tokens(tokens)
}
