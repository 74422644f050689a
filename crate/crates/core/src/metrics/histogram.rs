use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::text::{partition, TokenId, TokenizedCorpus};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HistogramKind {
    Ngram(usize),
    Length,
}

/// Raw counts. Keys with zero count are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram<K: Ord> {
    kind: HistogramKind,
    counts: BTreeMap<K, u64>,
    total: u64,
}

pub type NgramHistogram = Histogram<Vec<TokenId>>;
pub type LengthHistogram = Histogram<usize>;

impl<K: Ord + Clone> Histogram<K> {
    pub fn new(kind: HistogramKind) -> Self {
        Self {
            kind,
            counts: BTreeMap::new(),
            total: 0,
        }
    }

    pub fn add(&mut self, key: K) {
        self.add_count(key, 1);
    }

    pub fn add_count(&mut self, key: K, count: u64) {
        if count == 0 {
            return;
        }
        *self.counts.entry(key).or_insert(0) += count;
        self.total += count;
    }

    pub fn kind(&self) -> HistogramKind {
        self.kind
    }

    pub fn counts(&self) -> &BTreeMap<K, u64> {
        &self.counts
    }

    pub fn get(&self, key: &K) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn normalize(&self) -> Result<NormalizedHistogram<K>> {
        if self.total == 0 {
            return Err(Error::EmptyCorpus(format!(
                "cannot normalize an empty {:?} histogram",
                self.kind
            )));
        }
        let total = self.total as f64;
        Ok(NormalizedHistogram {
            kind: self.kind,
            weights: self
                .counts
                .iter()
                .map(|(k, &c)| (k.clone(), c as f64 / total))
                .collect(),
        })
    }
}

/// Probability weights over the same key space as a [`Histogram`].
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedHistogram<K: Ord> {
    kind: HistogramKind,
    weights: BTreeMap<K, f64>,
}

impl<K: Ord> NormalizedHistogram<K> {
    /// Validates nonnegativity and unit mass (within 1e-9).
    pub fn from_weights(kind: HistogramKind, weights: BTreeMap<K, f64>) -> Result<Self> {
        if weights.values().any(|&w| !w.is_finite() || w < 0.0) {
            return Err(Error::Distribution("negative or non-finite weight".into()));
        }
        let sum: f64 = weights.values().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Distribution(format!("weights sum to {sum}")));
        }
        Ok(Self { kind, weights })
    }

    pub fn kind(&self) -> HistogramKind {
        self.kind
    }

    pub fn weights(&self) -> &BTreeMap<K, f64> {
        &self.weights
    }

    pub fn mass(&self) -> f64 {
        self.weights.values().sum()
    }
}

/// Sum of absolute weight differences over the union of supports.
pub fn l1_distance<K: Ord>(p: &NormalizedHistogram<K>, q: &NormalizedHistogram<K>) -> Result<f64> {
    if p.kind != q.kind {
        return Err(Error::IncompatibleHistogram(format!("{:?} vs {:?}", p.kind, q.kind)));
    }
    let mut a = p.weights.iter().peekable();
    let mut b = q.weights.iter().peekable();
    let mut sum = 0.0;
    loop {
        match (a.peek(), b.peek()) {
            (Some((ka, wa)), Some((kb, wb))) => match ka.cmp(kb) {
                std::cmp::Ordering::Less => {
                    sum += **wa;
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    sum += **wb;
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    sum += (**wa - **wb).abs();
                    a.next();
                    b.next();
                }
            },
            (Some((_, wa)), None) => {
                sum += **wa;
                a.next();
            }
            (None, Some((_, wb))) => {
                sum += **wb;
                b.next();
            }
            (None, None) => break,
        }
    }
    Ok(sum.min(2.0))
}

/// Contiguous within-sentence n-grams; no BOS/EOS padding.
pub fn ngram_histogram(corpus: &TokenizedCorpus, n: usize) -> Result<NgramHistogram> {
    if n == 0 {
        return Err(Error::Config("n-gram order must be at least 1".into()));
    }
    let mut h = Histogram::new(HistogramKind::Ngram(n));
    for s in corpus.sentences() {
        for w in s.windows(n) {
            h.add(w.to_vec());
        }
    }
    Ok(h)
}

pub fn length_histogram(corpus: &TokenizedCorpus) -> LengthHistogram {
    let mut h = Histogram::new(HistogramKind::Length);
    for s in corpus.sentences() {
        h.add(s.len());
    }
    h
}

/// L1 between the normalized order-`n` histograms of two corpora.
pub fn ngram_l1(a: &TokenizedCorpus, b: &TokenizedCorpus, n: usize) -> Result<f64> {
    a.ensure_shared_vocab(b)?;
    l1_distance(
        &ngram_histogram(a, n)?.normalize()?,
        &ngram_histogram(b, n)?.normalize()?,
    )
}

pub fn length_l1(a: &TokenizedCorpus, b: &TokenizedCorpus) -> Result<f64> {
    l1_distance(&length_histogram(a).normalize()?, &length_histogram(b).normalize()?)
}

/// n-gram L1 between two seeded random halves of one corpus.
pub fn partition_baseline(corpus: &TokenizedCorpus, n: usize, seed: u64) -> Result<f64> {
    let (a, b) = partition(corpus, 0.5, seed)?;
    ngram_l1(&a, &b, n)
}

/// Length-histogram L1 between two seeded random halves of one corpus.
pub fn length_partition_baseline(corpus: &TokenizedCorpus, seed: u64) -> Result<f64> {
    let (a, b) = partition(corpus, 0.5, seed)?;
    length_l1(&a, &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::TokenizeMode;

    fn corpus(lines: &[&str]) -> TokenizedCorpus {
        TokenizedCorpus::from_lines(lines.iter().copied(), TokenizeMode::Whitespace, "t")
    }

    fn norm(pairs: &[(u32, f64)]) -> NormalizedHistogram<u32> {
        NormalizedHistogram::from_weights(HistogramKind::Ngram(1), pairs.iter().copied().collect()).unwrap()
    }

    #[test]
    fn unigram_and_bigram_counts() {
        let c = corpus(&["a b a"]);
        let a = c.vocab().lookup("a").unwrap();
        let b = c.vocab().lookup("b").unwrap();
        let h1 = ngram_histogram(&c, 1).unwrap();
        assert_eq!(h1.get(&vec![a]), 2);
        assert_eq!(h1.get(&vec![b]), 1);
        assert_eq!(h1.total(), 3);
        let h2 = ngram_histogram(&c, 2).unwrap();
        assert_eq!(h2.counts().len(), 2);
        assert_eq!(h2.get(&vec![a, b]), 1);
        assert_eq!(h2.get(&vec![b, a]), 1);
    }

    #[test]
    fn short_sentences_contribute_nothing() {
        let c = corpus(&["a", "b c"]);
        assert!(ngram_histogram(&c, 5).unwrap().is_empty());
        assert!(ngram_histogram(&c, 5).unwrap().normalize().is_err());
        // no cross-sentence bigram (a, b)
        assert_eq!(ngram_histogram(&c, 2).unwrap().total(), 1);
    }

    #[test]
    fn l1_examples() {
        let p = norm(&[(1, 0.5), (2, 0.5)]);
        assert_eq!(l1_distance(&p, &p).unwrap(), 0.0);
        assert_eq!(l1_distance(&p, &norm(&[(3, 1.0)])).unwrap(), 2.0);
        assert_eq!(l1_distance(&p, &norm(&[(1, 1.0)])).unwrap(), 1.0);
    }

    #[test]
    fn l1_rejects_order_mismatch() {
        let c = corpus(&["a b c"]);
        let h1 = ngram_histogram(&c, 1).unwrap().normalize().unwrap();
        let h2 = ngram_histogram(&c, 2).unwrap().normalize().unwrap();
        assert!(matches!(l1_distance(&h1, &h2), Err(Error::IncompatibleHistogram(_))));
    }

    #[test]
    fn length_histogram_totals_sentences() {
        let c = corpus(&["a", "a b", "", "c d"]);
        let h = length_histogram(&c);
        assert_eq!(h.total(), 4);
        assert_eq!(h.get(&2), 2);
        assert_eq!(h.get(&0), 1);
    }

    #[test]
    fn baseline_of_identical_sentences_is_zero() {
        let lines = vec!["the cat sat on the mat"; 40];
        let c = corpus(&lines);
        assert_eq!(partition_baseline(&c, 1, 3).unwrap(), 0.0);
        assert_eq!(partition_baseline(&c, 5, 3).unwrap(), 0.0);
        assert_eq!(length_partition_baseline(&c, 3).unwrap(), 0.0);
    }

    #[test]
    fn baseline_zero_for_seed_that_splits_types_evenly() {
        // Two sentence types, two of each. Search for a seed whose halves
        // each receive one of each type; at n=1 the halves then match.
        let c = corpus(&["x y", "x y", "z w", "z w"]);
        let seed = (0..1000u64)
            .find(|&s| {
                let (a, _) = crate::text::partition_indices(4, 0.5, s).unwrap();
                a.iter().filter(|&&i| i < 2).count() == 1
            })
            .expect("some seed splits evenly");
        assert_eq!(partition_baseline(&c, 1, seed).unwrap(), 0.0);
    }
}
