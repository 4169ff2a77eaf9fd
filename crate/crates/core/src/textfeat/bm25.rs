//! Okapi BM25 over title + abstract.
//!
//! The idf term is `ln(1 + (N - n + 0.5) / (n + 0.5))`, which stays positive
//! for terms present in more than half the documents.

use std::collections::{BTreeSet, HashMap};

use super::tokenize::tokenize;
use crate::corpus::{Corpus, DocId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.5, b: 0.75 }
    }
}

/// Inverted index over the whole corpus vocabulary (not the TF-IDF cap).
#[derive(Debug, Clone)]
pub struct Bm25Index {
    params: Bm25Params,
    postings: HashMap<String, Vec<(u32, u32)>>,
    doc_len: Vec<u32>,
    avg_len: f64,
}

impl Bm25Index {
    pub fn build(corpus: &Corpus, params: Bm25Params) -> Self {
        let docs: Vec<Vec<String>> = corpus.documents().iter().map(|d| tokenize(&d.text())).collect();
        Self::from_tokens(&docs, params)
    }

    pub fn from_tokens(docs: &[Vec<String>], params: Bm25Params) -> Self {
        let mut postings: HashMap<String, Vec<(u32, u32)>> = HashMap::new();
        let mut doc_len = Vec::with_capacity(docs.len());
        for (d, tokens) in docs.iter().enumerate() {
            doc_len.push(tokens.len() as u32);
            let mut tf: HashMap<&str, u32> = HashMap::new();
            for t in tokens {
                *tf.entry(t).or_insert(0) += 1;
            }
            for (t, n) in tf {
                postings.entry(t.to_owned()).or_default().push((d as u32, n));
            }
        }
        let total: u64 = doc_len.iter().map(|&l| l as u64).sum();
        let avg_len = if docs.is_empty() {
            0.0
        } else {
            total as f64 / docs.len() as f64
        };
        Bm25Index {
            params,
            postings,
            doc_len,
            avg_len,
        }
    }

    pub fn n_docs(&self) -> usize {
        self.doc_len.len()
    }

    /// Distinct query terms; an error when nothing survives tokenisation.
    pub fn query_terms(query: &str) -> Result<BTreeSet<String>> {
        let terms: BTreeSet<String> = tokenize(query).into_iter().collect();
        if terms.is_empty() {
            return Err(Error::Input(format!("query {query:?} contains no searchable terms")));
        }
        Ok(terms)
    }

    /// Score of every document for `query`, indexed by doc id.
    pub fn scores(&self, query: &str) -> Result<Vec<f64>> {
        let terms = Self::query_terms(query)?;
        let n = self.n_docs() as f64;
        let Bm25Params { k1, b } = self.params;
        let mut scores = vec![0.0; self.n_docs()];
        for term in &terms {
            let Some(list) = self.postings.get(term) else {
                continue;
            };
            let df = list.len() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            for &(d, tf) in list {
                let tf = tf as f64;
                let len_norm = 1.0 - b + b * self.doc_len[d as usize] as f64 / self.avg_len;
                scores[d as usize] += idf * tf * (k1 + 1.0) / (tf + k1 * len_norm);
            }
        }
        Ok(scores)
    }

    /// Top `k` eligible documents by descending score, ties by ascending id.
    pub fn rank(&self, query: &str, k: usize, eligible: impl Fn(DocId) -> bool) -> Result<Vec<(DocId, f64)>> {
        if k == 0 {
            return Err(Error::Input("k must be at least 1".into()));
        }
        let scores = self.scores(query)?;
        let mut ranked: Vec<(DocId, f64)> = scores
            .into_iter()
            .enumerate()
            .map(|(i, s)| (DocId::from(i), s))
            .filter(|&(id, _)| eligible(id))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(k);
        Ok(ranked)
    }
}

/// Ranks every document of `corpus` against `query`.
pub fn bm25_rank(corpus: &Corpus, query: &str, k: usize) -> Result<Vec<(DocId, f64)>> {
    Bm25Index::build(corpus, Bm25Params::default()).rank(query, k, |_| true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn absent_term_scores_zero_and_keeps_id_order() {
        let c = Corpus::from_texts([("alpha", ""), ("beta", ""), ("gamma", "")]);
        let top = bm25_rank(&c, "zeta", 2).unwrap();
        assert_eq!(top, vec![(DocId(0), 0.0), (DocId(1), 0.0)]);
    }

    #[test]
    fn containing_doc_ranks_first() {
        let c = Corpus::from_texts([("unrelated words", ""), ("prioritization study", "")]);
        let top = bm25_rank(&c, "prioritization", 2).unwrap();
        assert_eq!(top[0].0, DocId(1));
        assert!(top[0].1 > 0.0);
    }

    #[test]
    fn empty_query_is_rejected() {
        let c = Corpus::from_texts([("alpha", "")]);
        assert!(matches!(bm25_rank(&c, "the of a", 1), Err(Error::Input(_))));
    }

    #[test]
    fn zero_k_is_rejected() {
        let c = Corpus::from_texts([("alpha", "")]);
        assert!(bm25_rank(&c, "alpha", 0).is_err());
    }

    #[test]
    fn eligibility_filter() {
        let c = Corpus::from_texts([("alpha", ""), ("alpha alpha", ""), ("beta", "")]);
        let idx = Bm25Index::build(&c, Bm25Params::default());
        let top = idx.rank("alpha", 3, |id| id != DocId(1)).unwrap();
        let ids: Vec<_> = top.iter().map(|p| p.0).collect();
        assert_eq!(ids, [DocId(0), DocId(2)]);
    }
}
