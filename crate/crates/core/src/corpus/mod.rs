//! Documents, corpus files, vocabularies and synthetic data.

mod document;
mod generator;
mod io;
mod vocab;

pub use document::{
    position_classes, relative_positions, Clause, Document, RelativePosition, DEFAULT_CLIP,
    DEFAULT_MAX_CLAUSES,
};
pub use generator::{
    generate_synthetic, reference_position_table, GeneratorConfig, PositionWeight,
    REFERENCE_CAUSE_COUNTS,
};
pub use io::{load_corpus, write_corpus, write_corpus_to};
pub use vocab::{build_vocab, oov_rate, Vocabulary, UNK};
