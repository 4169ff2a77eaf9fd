use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::tokenize::tokenize;
use crate::corpus::Corpus;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_TERMS: usize = 4000;

/// Sparse row with strictly increasing term ids.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVec {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVec {
    /// Builds a row from `(term_id, weight)` pairs; duplicate ids are summed.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
        for (i, v) in pairs {
            *acc.entry(i).or_insert(0.0) += v;
        }
        let (indices, values) = acc.into_iter().filter(|&(_, v)| v != 0.0).unzip();
        SparseVec { indices, values }
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    /// Largest term id + 1, or 0 for the empty row.
    pub fn min_dim(&self) -> usize {
        self.indices.last().map_or(0, |&i| i as usize + 1)
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * dense[i as usize]).sum()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> SparseVec {
        SparseVec {
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn get(&self, term_id: u32) -> f64 {
        self.indices.binary_search(&term_id).map_or(0.0, |p| self.values[p])
    }
}

/// Term dictionary frozen at session start.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    ids: HashMap<String, u32>,
    doc_freq: Vec<u32>,
    n_docs: usize,
}

impl Vocabulary {
    /// Keeps the `max_terms` terms with the largest TF-IDF mass
    /// (sum over documents of `(1 + ln tf) * ln(N / df)`), ties broken
    /// lexicographically. Retained terms get ids in lexicographic order.
    pub fn from_tokens(docs: &[Vec<String>], max_terms: usize) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::Config("cannot build a vocabulary from an empty corpus".into()));
        }
        let n_docs = docs.len();
        let mut df: HashMap<&str, u32> = HashMap::new();
        let mut log_tf_sum: HashMap<&str, f64> = HashMap::new();
        for tokens in docs {
            for (term, tf) in term_counts(tokens) {
                *df.entry(term).or_insert(0) += 1;
                *log_tf_sum.entry(term).or_insert(0.0) += 1.0 + (tf as f64).ln();
            }
        }
        let mut scored: Vec<(&str, f64)> = df.iter().map(|(&t, &d)| (t, log_tf_sum[t] * idf(n_docs, d))).collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        scored.truncate(max_terms);

        let mut kept: Vec<&str> = scored.into_iter().map(|(t, _)| t).collect();
        kept.sort_unstable();
        let terms: Vec<String> = kept.iter().map(|t| t.to_string()).collect();
        let doc_freq = kept.iter().map(|t| df[t]).collect();
        let ids = terms.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Ok(Vocabulary {
            terms,
            ids,
            doc_freq,
            n_docs,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn term_id(&self, term: &str) -> Option<u32> {
        self.ids.get(term).copied()
    }

    pub fn term(&self, id: u32) -> Option<&str> {
        self.terms.get(id as usize).map(String::as_str)
    }

    pub fn doc_freq(&self, term: &str) -> Option<u32> {
        self.term_id(term).map(|i| self.doc_freq[i as usize])
    }

    pub fn idf(&self, id: u32) -> f64 {
        idf(self.n_docs, self.doc_freq[id as usize])
    }

    /// Sublinear TF-IDF row, L2-normalised. Out-of-vocabulary tokens are dropped.
    pub fn vectorize_tokens(&self, tokens: &[String]) -> SparseVec {
        let raw = SparseVec::from_pairs(
            term_counts(tokens)
                .into_iter()
                .filter_map(|(t, tf)| self.term_id(t).map(|id| (id, (1.0 + (tf as f64).ln()) * self.idf(id)))),
        );
        let norm = raw.norm();
        if norm > 0.0 {
            raw.scaled(1.0 / norm)
        } else {
            SparseVec::default()
        }
    }
}

/// One feature row per document, indexed by `DocId`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: Vec<SparseVec>,
    dim: usize,
}

impl FeatureMatrix {
    pub fn new(rows: Vec<SparseVec>, dim: usize) -> Self {
        debug_assert!(rows.iter().all(|r| r.min_dim() <= dim));
        FeatureMatrix { rows, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, index: usize) -> &SparseVec {
        &self.rows[index]
    }

    pub fn rows(&self) -> &[SparseVec] {
        &self.rows
    }
}

/// Vocabulary and feature matrix built from one tokenisation pass.
#[derive(Debug, Clone)]
pub struct FeatureSpace {
    pub vocabulary: Vocabulary,
    pub matrix: FeatureMatrix,
}

impl FeatureSpace {
    pub fn build(corpus: &Corpus, max_terms: usize) -> Result<Self> {
        let tokens = corpus_tokens(corpus);
        let vocabulary = Vocabulary::from_tokens(&tokens, max_terms)?;
        let matrix = vectorize_tokens(&tokens, &vocabulary);
        Ok(FeatureSpace { vocabulary, matrix })
    }
}

pub fn corpus_tokens(corpus: &Corpus) -> Vec<Vec<String>> {
    corpus.documents().iter().map(|d| tokenize(&d.text())).collect()
}

pub fn build_vocabulary(corpus: &Corpus) -> Result<Vocabulary> {
    Vocabulary::from_tokens(&corpus_tokens(corpus), DEFAULT_MAX_TERMS)
}

pub fn vectorize(corpus: &Corpus, vocab: &Vocabulary) -> FeatureMatrix {
    vectorize_tokens(&corpus_tokens(corpus), vocab)
}

fn vectorize_tokens(docs: &[Vec<String>], vocab: &Vocabulary) -> FeatureMatrix {
    FeatureMatrix::new(docs.iter().map(|t| vocab.vectorize_tokens(t)).collect(), vocab.len())
}

fn idf(n_docs: usize, df: u32) -> f64 {
    (n_docs as f64 / df as f64).ln()
}

fn term_counts(tokens: &[String]) -> BTreeMap<&str, u32> {
    let mut counts = BTreeMap::new();
    for t in tokens {
        *counts.entry(t.as_str()).or_insert(0) += 1;
    }
    counts
}
