//! Replay simulation with an oracle reviewer, and synthetic benchmark corpora.

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeTuple;
use serde::{Deserialize, Serialize, Serializer};

use crate::corpus::{Corpus, Decision, DocId, Document, LabelSource};
use crate::engine::{Phase, Session, SessionConfig, StopReason};
use crate::error::{Error, Result};
use crate::metrics::{recall_cost_curve, CurvePoint, GroundTruth};
use crate::textfeat::is_stopword;

/// Outcome of one simulated screening run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub stop_screened: usize,
    pub true_recall: f64,
    pub estimated_recall: Option<f64>,
    pub cost: f64,
    #[serde(serialize_with = "curve_as_pairs")]
    pub curve: Vec<CurvePoint>,
    pub stop_reason: Option<StopReason>,
    pub n_documents: usize,
    pub n_relevant: usize,
}

fn curve_as_pairs<S: Serializer>(curve: &[CurvePoint], s: S) -> Result<S::Ok, S::Error> {
    struct Pair<'a>(&'a CurvePoint);
    impl Serialize for Pair<'_> {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            let mut t = s.serialize_tuple(2)?;
            t.serialize_element(&self.0.screened)?;
            t.serialize_element(&self.0.recall)?;
            t.end()
        }
    }
    s.collect_seq(curve.iter().map(Pair))
}

/// Ground truth taken from the corpus' replay labels; every document must have one.
pub fn ground_truth(corpus: &Corpus) -> Result<GroundTruth> {
    let labels: Vec<Option<bool>> = corpus
        .documents()
        .iter()
        .map(|d| corpus.decision(d.doc_id).map(Decision::is_included))
        .collect();
    GroundTruth::from_labels(&labels)
}

/// Screens `corpus` with the engine, answering every query from the
/// corpus' labels (flipped with probability `error_rate`), until the engine
/// stops.
pub fn simulate(corpus: &Corpus, config: &SessionConfig, error_rate: f64) -> Result<SimulationReport> {
    if !(0.0..1.0).contains(&error_rate) {
        return Err(Error::Config(format!("error rate must be in [0, 1), got {error_rate}")));
    }
    let truth = ground_truth(corpus)?;
    simulate_with_truth(corpus.without_labels(), &truth, config, error_rate)
}

pub fn simulate_with_truth(
    corpus: Corpus,
    truth: &GroundTruth,
    config: &SessionConfig,
    error_rate: f64,
) -> Result<SimulationReport> {
    if truth.len() != corpus.len() {
        return Err(Error::Validation("ground truth does not cover the corpus".into()));
    }
    let n_documents = corpus.len();
    let mut session = Session::start(corpus, config.clone())?;
    let mut oracle_rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    oracle_rng.set_stream(u64::MAX);

    let mut trace: Vec<(DocId, Decision)> = Vec::new();
    while session.phase() != Phase::Done {
        let batch = session.next_batch()?;
        let answers: Vec<(DocId, Decision)> = batch
            .iter()
            .map(|&id| {
                let flip = oracle_rng.gen::<f64>() < error_rate;
                (id, Decision::from(truth.is_relevant(id) != flip))
            })
            .collect();
        session.submit_labels(&answers)?;
        trace.extend(answers);
    }

    let curve = recall_cost_curve(&trace, truth)?;
    let stop_screened = session.corpus().n_labeled();
    Ok(SimulationReport {
        stop_screened,
        true_recall: curve.last().map_or(0.0, |p| p.recall),
        estimated_recall: session.estimate().map(|e| e.estimated_recall),
        cost: stop_screened as f64 / n_documents as f64,
        curve,
        stop_reason: session.stop_reason(),
        n_documents,
        n_relevant: truth.n_relevant(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub n_docs: usize,
    pub n_relevant: usize,
    pub vocab_size: usize,
    /// Fraction of a relevant document's tokens drawn from the topical
    /// vocabulary. Irrelevant documents draw `(1 - signal) / 2` of theirs
    /// from it, so at 1.0 they share no topical tokens.
    pub signal: f64,
    pub seed: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            n_docs: 5000,
            n_relevant: 250,
            vocab_size: 2000,
            signal: 0.6,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    pub truth: GroundTruth,
    /// Size of the topical vocabulary (the first words of the word list).
    pub n_topical: usize,
}

impl SyntheticCorpus {
    /// The corpus with ground truth attached as replay labels, ready to export.
    pub fn labeled(&self) -> Corpus {
        let mut c = self.corpus.without_labels();
        for (i, &r) in self.truth.as_slice().iter().enumerate() {
            c.record_label(DocId::from(i), Decision::from(r), LabelSource::Replay)
                .expect("ids come from the corpus");
        }
        c
    }
}

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// Deterministic pseudo-word for index `i`: three consonant-vowel syllables.
pub fn synthetic_word(i: usize) -> String {
    let n_syl = CONSONANTS.len() * VOWELS.len();
    let mut rest = i;
    let mut word = String::with_capacity(6);
    for _ in 0..3 {
        let s = rest % n_syl;
        rest /= n_syl;
        word.push(CONSONANTS[s / VOWELS.len()] as char);
        word.push(VOWELS[s % VOWELS.len()] as char);
    }
    debug_assert!(rest == 0, "word index out of range");
    word
}

pub fn generate_synthetic(params: &SyntheticParams) -> Result<SyntheticCorpus> {
    let SyntheticParams {
        n_docs,
        n_relevant,
        vocab_size,
        signal,
        seed,
    } = *params;
    if n_relevant == 0 || n_relevant >= n_docs {
        return Err(Error::Config(format!(
            "need 0 < relevant < documents, got {n_relevant} of {n_docs}"
        )));
    }
    if !(0.0..=1.0).contains(&signal) {
        return Err(Error::Config(format!("signal must be in [0, 1], got {signal}")));
    }
    let max_words = (CONSONANTS.len() * VOWELS.len()).pow(3);
    if !(20..=max_words).contains(&vocab_size) {
        return Err(Error::Config(format!(
            "vocabulary size must be in [20, {max_words}], got {vocab_size}"
        )));
    }

    let words: Vec<String> = (0..vocab_size).map(synthetic_word).collect();
    debug_assert!(words.iter().all(|w| !is_stopword(w)));
    let n_topical = (vocab_size / 10).max(2);
    let zipf = |n: usize| WeightedIndex::new((1..=n).map(|r| 1.0 / r as f64)).expect("non-empty pool");
    let topical = zipf(n_topical);
    let background = zipf(vocab_size - n_topical);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut relevant = vec![false; n_docs];
    for i in index::sample(&mut rng, n_docs, n_relevant) {
        relevant[i] = true;
    }

    let leak = (1.0 - signal) / 2.0;
    let mut documents = Vec::with_capacity(n_docs);
    for (i, &is_rel) in relevant.iter().enumerate() {
        let p_topical = if is_rel { signal } else { leak };
        let draw = |len: usize, rng: &mut ChaCha8Rng| -> Vec<&str> {
            (0..len)
                .map(|_| {
                    if rng.gen::<f64>() < p_topical {
                        words[topical.sample(rng)].as_str()
                    } else {
                        words[n_topical + background.sample(rng)].as_str()
                    }
                })
                .collect()
        };
        let title_len = rng.gen_range(6..=12);
        let abstract_len = rng.gen_range(40..=120);
        let title_words = draw(title_len, &mut rng);
        let abstract_words = draw(abstract_len, &mut rng);
        let title = title_words
            .iter()
            .map(|w| {
                let mut c = w.chars();
                let first = c.next().map(|f| f.to_ascii_uppercase()).unwrap_or_default();
                format!("{first}{}", c.as_str())
            })
            .collect::<Vec<_>>()
            .join(" ");
        documents.push(Document {
            doc_id: DocId::from(i),
            title,
            abstract_text: format!("{}.", abstract_words.join(" ")),
            year: Some(rng.gen_range(1990..=2020)),
            link: Some(format!("https://example.org/papers/{i}")),
        });
    }

    Ok(SyntheticCorpus {
        corpus: Corpus::new(documents),
        truth: GroundTruth::new(relevant),
        n_topical,
    })
}
