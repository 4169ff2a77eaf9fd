//! Text features: tokenizer, TF-IDF vectors for the classifier and BM25
//! ranking for the keyword bootstrap.

mod bm25;
mod tfidf;
mod tokenize;

pub use bm25::{bm25_rank, Bm25Index, Bm25Params};
pub use tfidf::{
    build_vocabulary, corpus_tokens, vectorize, FeatureMatrix, FeatureSpace, SparseVec, Vocabulary, DEFAULT_MAX_TERMS,
};
pub use tokenize::{is_stopword, tokenize, STOPWORDS};
