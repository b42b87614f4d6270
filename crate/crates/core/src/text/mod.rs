//! Text-view representations: preprocessing and a native TF-IDF model.
//! Dense transformer embeddings are produced elsewhere and loaded through
//! [`crate::embedding`].

mod stopwords;
mod tfidf;

pub use stopwords::{is_stopword, STOPWORDS_V1};
pub use tfidf::{fit_tfidf, SparseVector, TfidfModel, Vocabulary};

/// Replaces every non-alphabetic character with a space, lowercases,
/// splits on whitespace and drops stopwords.
pub fn preprocess(text: &str) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .map(|c| if c.is_alphabetic() { c } else { ' ' })
        .collect();
    cleaned
        .split_whitespace()
        .map(str::to_lowercase)
        .filter(|t| !is_stopword(t))
        .collect()
}
