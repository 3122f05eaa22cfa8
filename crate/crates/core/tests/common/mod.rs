//! Fixtures shared by the integration tests.
#![allow(dead_code)]

pub mod grad;

use m2h::corpus::{Channel, Document};
use m2h::lda::{GibbsSampler, LdaModel};
use m2h::seeded_rng;
use rand::Rng;

/// Two topics over disjoint halves of the vocabulary, with uneven word
/// weights inside each half.
pub fn disjoint_topics(vocab: usize) -> [Vec<f64>; 2] {
    let half = vocab / 2;
    let topic = |offset: usize| {
        let mut p = vec![0.0; vocab];
        for w in 0..half {
            p[offset + w] = 1.0 + (w % 7) as f64;
        }
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        p
    };
    [topic(0), topic(half)]
}

fn draw(p: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &x) in p.iter().enumerate() {
        acc += x;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

/// Documents mixing the two topics with a uniform per-document weight.
pub fn two_topic_corpus(docs: usize, len: usize, vocab: usize, seed: u64) -> Vec<Document> {
    let topics = disjoint_topics(vocab);
    let mut rng = seeded_rng(seed);
    (0..docs)
        .map(|d| {
            let theta: f64 = rng.random();
            let tokens = (0..len)
                .map(|_| {
                    let k = usize::from(rng.random::<f64>() >= theta);
                    draw(&topics[k], rng.random()) as u32
                })
                .collect();
            Document::new(format!("doc{d}"), 0, Channel::Trs, tokens)
        })
        .collect()
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Largest per-topic total variation under the best topic permutation
/// (exhaustive over both orderings).
pub fn best_permutation_tv(model: &LdaModel, truth: &[Vec<f64>; 2]) -> f64 {
    let est = [model.topic_distribution(0), model.topic_distribution(1)];
    [[0, 1], [1, 0]]
        .iter()
        .map(|perm| {
            (0..2)
                .map(|k| total_variation(&est[perm[k]], &truth[k]))
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Checks every count-conservation invariant of the sampler state.
pub fn assert_conserved(s: &GibbsSampler<'_>, docs: &[&Document], vocab: usize) {
    let t = s.params().topics;
    let mut total = 0u64;
    for (d, doc) in docs.iter().enumerate() {
        let counts = s.doc_topic_counts(d);
        let sum: u32 = counts.iter().sum();
        assert_eq!(sum as usize, doc.len(), "doc {d} topic counts");
        let mut recount = vec![0u32; t];
        for &z in s.assignments(d) {
            recount[z as usize] += 1;
        }
        assert_eq!(recount, counts, "doc {d} assignments");
        total += u64::from(sum);
    }
    assert_eq!(total, docs.iter().map(|d| d.len() as u64).sum::<u64>());
    for k in 0..t {
        let column: u64 = (0..vocab).map(|w| u64::from(s.word_topic_count(w, k))).sum();
        assert_eq!(column, s.topic_totals()[k], "topic {k} total");
    }
    assert_eq!(s.topic_totals().iter().sum::<u64>(), total);
}
