//! Straight-line reimplementations used as oracles by the integration tests.
//! They favour transparency over speed and share no code with the library.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Minimises `½(s² + b²) + C Σ [ln(1 + e^z) − y z]`, `z = s·d + b`, by plain
/// Newton steps until the gradient vanishes. Single-class data gets the flat
/// curve at the clamped class rate.
pub fn l2_logistic(points: &[(f64, bool)], c: f64) -> (f64, f64) {
    let positives = points.iter().filter(|p| p.1).count();
    if positives == 0 || positives == points.len() {
        let rate = (positives as f64 / points.len() as f64).clamp(1e-6, 1.0 - 1e-6);
        return (0.0, (rate / (1.0 - rate)).ln());
    }
    let objective = |s: f64, b: f64| {
        let mut f = 0.5 * (s * s + b * b);
        for &(d, y) in points {
            let z = s * d + b;
            let t = if y { 1.0 } else { 0.0 };
            f += c * ((1.0 + z.exp()).ln() - t * z);
        }
        f
    };
    let (mut s, mut b) = (0.0f64, 0.0f64);
    for _ in 0..500 {
        let (mut gs, mut gb) = (s, b);
        let (mut hss, mut hsb, mut hbb) = (1.0, 0.0, 1.0);
        for &(d, y) in points {
            let p = sigmoid(s * d + b);
            let t = if y { 1.0 } else { 0.0 };
            gs += c * (p - t) * d;
            gb += c * (p - t);
            let w = c * p * (1.0 - p);
            hss += w * d * d;
            hsb += w * d;
            hbb += w;
        }
        if gs.abs().max(gb.abs()) < 1e-13 {
            break;
        }
        let det = hss * hbb - hsb * hsb;
        let ds = (hbb * gs - hsb * gb) / det;
        let db = (hss * gb - hsb * gs) / det;
        let mut step = 1.0;
        let f0 = objective(s, b);
        while objective(s - step * ds, b - step * db) > f0 && step > 1e-12 {
            step /= 2.0;
        }
        s -= step * ds;
        b -= step * db;
    }
    (s, b)
}

/// The accumulation rule, written as the pseudocode reads: a candidate list
/// `can`, a running `count` and integer `target`; once `count >= target`
/// the head of `can` is marked and the list is emptied.
pub fn temporary_label(probs: &[(usize, f64)], y: &mut [bool]) {
    let mut order: Vec<(usize, f64)> = probs.to_vec();
    order.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut count = 0.0;
    let mut target = 1;
    let mut can: Vec<usize> = Vec::new();
    for (x, p) in order {
        count += p;
        can.push(x);
        if count >= target as f64 {
            y[can[0]] = true;
            target += 1;
            can.clear();
        }
    }
}

/// The whole estimator: `Y` from the known positives, refit, reassign
/// temporary positives from scratch, repeat while `ΣY` changes (cap 50).
pub fn semi(decisions: &[f64], labels: &[Option<bool>], training_negatives: usize) -> usize {
    let known: Vec<bool> = labels.iter().map(|l| *l == Some(true)).collect();
    let mut y = known.clone();
    let mut estimate = y.iter().filter(|v| **v).count();
    let mut last = 0;
    let mut rounds = 0;
    while estimate != last && rounds < 50 {
        let points: Vec<(f64, bool)> = decisions.iter().copied().zip(y.iter().copied()).collect();
        let c = estimate.max(1) as f64 / training_negatives.max(1) as f64;
        let (s, b) = l2_logistic(&points, c);
        y = known.clone();
        let probs: Vec<(usize, f64)> = (0..decisions.len())
            .filter(|&i| labels[i].is_none())
            .map(|i| (i, sigmoid(s * decisions[i] + b)))
            .collect();
        temporary_label(&probs, &mut y);
        last = estimate;
        estimate = y.iter().filter(|v| **v).count();
        rounds += 1;
    }
    estimate
}

/// A random estimator input: decisions, active labels and the training
/// negative count. At least one included and one unlabeled document.
pub struct SemiInstance {
    pub decisions: Vec<f64>,
    pub labels: Vec<Option<bool>>,
    pub negatives: usize,
}

pub fn random_semi_instance(seed: u64, max_docs: usize) -> SemiInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n = rng.gen_range(4..=max_docs);
        let mut decisions = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let relevant = rng.gen_bool(0.35);
            let centre = if relevant { 0.6 } else { -0.6 };
            decisions.push(centre + rng.gen_range(-1.2..1.2));
            labels.push(rng.gen_bool(0.5).then_some(relevant));
        }
        let included = labels.contains(&Some(true));
        let unlabeled = labels.iter().any(|l| l.is_none());
        if included && unlabeled {
            let negatives = rng.gen_range(1..=n);
            return SemiInstance {
                decisions,
                labels,
                negatives,
            };
        }
    }
}

/// Whitespace tokens of already-clean lowercase text.
pub fn words(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_owned).collect()
}

/// Every term's TF-IDF mass `Σ_d (1 + ln tf) · ln(N / df)`.
pub fn tfidf_mass(docs: &[Vec<String>]) -> BTreeMap<String, f64> {
    let n = docs.len() as f64;
    let df = doc_freq(docs);
    let mut mass = BTreeMap::new();
    for doc in docs {
        for (term, tf) in term_freq(doc) {
            let idf = (n / df[&term] as f64).ln();
            *mass.entry(term).or_insert(0.0) += (1.0 + (tf as f64).ln()) * idf;
        }
    }
    mass
}

/// The `k` heaviest terms, ties broken by the term string.
pub fn top_terms(docs: &[Vec<String>], k: usize) -> BTreeSet<String> {
    let mut ranked: Vec<(String, f64)> = tfidf_mass(docs).into_iter().collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    ranked.into_iter().take(k).map(|(t, _)| t).collect()
}

/// Unit-length TF-IDF weights of one document, keyed by term.
pub fn tfidf_weights(docs: &[Vec<String>], doc: usize) -> BTreeMap<String, f64> {
    let n = docs.len() as f64;
    let df = doc_freq(docs);
    let raw: BTreeMap<String, f64> = term_freq(&docs[doc])
        .into_iter()
        .map(|(t, tf)| {
            let w = (1.0 + (tf as f64).ln()) * (n / df[&t] as f64).ln();
            (t, w)
        })
        .collect();
    let norm = raw.values().map(|w| w * w).sum::<f64>().sqrt();
    raw.into_iter()
        .filter(|(_, w)| *w != 0.0)
        .map(|(t, w)| (t, w / norm))
        .collect()
}

/// Okapi BM25 with k1 = 1.5, b = 0.75 and idf `ln(1 + (N − n + ½)/(n + ½))`.
pub fn bm25(docs: &[Vec<String>], query: &[&str]) -> Vec<f64> {
    let (k1, b) = (1.5, 0.75);
    let n = docs.len() as f64;
    let avg = docs.iter().map(Vec::len).sum::<usize>() as f64 / n;
    let df = doc_freq(docs);
    let terms: BTreeSet<&str> = query.iter().copied().collect();
    docs.iter()
        .map(|doc| {
            let tf = term_freq(doc);
            let len = doc.len() as f64;
            terms
                .iter()
                .map(|&t| {
                    let f = *tf.get(t).unwrap_or(&0) as f64;
                    let nt = *df.get(t).unwrap_or(&0) as f64;
                    let idf = (1.0 + (n - nt + 0.5) / (nt + 0.5)).ln();
                    idf * f * (k1 + 1.0) / (f + k1 * (1.0 - b + b * len / avg))
                })
                .sum()
        })
        .collect()
}

fn term_freq(doc: &[String]) -> BTreeMap<String, usize> {
    let mut tf = BTreeMap::new();
    for t in doc {
        *tf.entry(t.clone()).or_insert(0) += 1;
    }
    tf
}

fn doc_freq(docs: &[Vec<String>]) -> BTreeMap<String, usize> {
    let mut df = BTreeMap::new();
    for doc in docs {
        for t in doc.iter().collect::<BTreeSet<_>>() {
            *df.entry(t.clone()).or_insert(0) += 1;
        }
    }
    df
}
