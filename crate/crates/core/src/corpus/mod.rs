//! Topic-classification corpora: schema, file formats, tokenizer, and the
//! synthetic multilingual generator.

mod io;
mod schema;
pub mod synthetic;
mod tokenizer;

pub use io::{load_jsonl, load_tsv, parse_jsonl, parse_tsv, save_jsonl, save_tsv, to_jsonl, to_tsv};
pub use schema::{label_index, Corpus, Example, LanguageSplits, Split, EXPECTED_SPLIT_SIZES, LABELS};
pub use synthetic::{generate_synthetic, type_overlap, SyntheticSpec};
pub use tokenizer::{Tokenizer, PAD_ID, PAD_TOKEN, UNK_ID, UNK_TOKEN};

/// Loads a corpus file, choosing the format from the extension (`.tsv` or JSONL).
pub fn load_corpus(path: impl AsRef<std::path::Path>) -> crate::error::Result<Corpus> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("tsv") => load_tsv(path),
        _ => load_jsonl(path),
    }
}
