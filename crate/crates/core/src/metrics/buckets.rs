//! Bucketed analyses: word F1 by reference frequency, BLEU by reference
//! length, and the sentence-BLEU histogram.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::bleu::{check_refs, pair_stats, score_from_stats, smoothed_score, BleuStats};
use crate::text::{TokenId, TokenizedCorpus};

/// `[0,1) [1,2) [2,4) [4,8) [8,16) [16,64) [64,inf)`
pub const DEFAULT_FREQUENCY_EDGES: &[u64] = &[0, 1, 2, 4, 8, 16, 64];
/// `[0,10) [10,20) ... [60,inf)`
pub const DEFAULT_LENGTH_EDGES: &[u64] = &[0, 10, 20, 30, 40, 50, 60];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bucket {
    pub lower: u64,
    /// Exclusive; `None` for the open last bucket.
    pub upper: Option<u64>,
    /// `None` when the bucket is empty.
    pub statistic: Option<f64>,
    pub support: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BucketedReport {
    pub buckets: Vec<Bucket>,
    /// Items below the first edge.
    pub unbucketed: usize,
}

fn validate_edges(edges: &[u64]) -> Result<()> {
    if edges.is_empty() || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!(
            "bucket edges must be non-empty and strictly increasing, got {edges:?}"
        )));
    }
    Ok(())
}

fn bucket_of(edges: &[u64], value: u64) -> Option<usize> {
    edges.iter().rposition(|&e| e <= value)
}

fn empty_buckets(edges: &[u64]) -> Vec<Bucket> {
    edges
        .iter()
        .enumerate()
        .map(|(i, &lower)| Bucket {
            lower,
            upper: edges.get(i + 1).copied(),
            statistic: None,
            support: 0,
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct WordF1 {
    pub matched: u64,
    pub hyp_count: u64,
    pub ref_count: u64,
}

impl WordF1 {
    pub fn precision(&self) -> f64 {
        if self.hyp_count == 0 {
            0.0
        } else {
            self.matched as f64 / self.hyp_count as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.ref_count == 0 {
            0.0
        } else {
            self.matched as f64 / self.ref_count as f64
        }
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

/// Per-word clipped counts over every word seen in either corpus.
pub fn word_f1_table(hyp: &TokenizedCorpus, reference: &TokenizedCorpus) -> Result<BTreeMap<TokenId, WordF1>> {
    hyp.ensure_aligned(reference)?;
    hyp.ensure_shared_vocab(reference)?;
    let mut table: BTreeMap<TokenId, WordF1> = BTreeMap::new();
    let mut h: HashMap<TokenId, u64> = HashMap::new();
    let mut r: HashMap<TokenId, u64> = HashMap::new();
    for (hs, rs) in hyp.sentences().iter().zip(reference.sentences()) {
        h.clear();
        r.clear();
        for &t in hs.iter() {
            *h.entry(t).or_insert(0) += 1;
        }
        for &t in rs.iter() {
            *r.entry(t).or_insert(0) += 1;
        }
        for (&t, &c) in &h {
            let e = table.entry(t).or_default();
            e.hyp_count += c;
            e.matched += c.min(r.get(&t).copied().unwrap_or(0));
        }
        for (&t, &c) in &r {
            table.entry(t).or_default().ref_count += c;
        }
    }
    Ok(table)
}

/// Words bucketed by reference frequency; each bucket reports the macro
/// average of per-word F1 and the number of words.
pub fn word_f1_by_frequency(
    hyp: &TokenizedCorpus,
    reference: &TokenizedCorpus,
    edges: &[u64],
) -> Result<BucketedReport> {
    validate_edges(edges)?;
    let table = word_f1_table(hyp, reference)?;
    let mut buckets = empty_buckets(edges);
    let mut sums = vec![0.0; edges.len()];
    let mut unbucketed = 0;
    for w in table.values() {
        match bucket_of(edges, w.ref_count) {
            Some(b) => {
                sums[b] += w.f1();
                buckets[b].support += 1;
            }
            None => unbucketed += 1,
        }
    }
    for (b, sum) in buckets.iter_mut().zip(sums) {
        if b.support > 0 {
            b.statistic = Some(sum / b.support as f64);
        }
    }
    Ok(BucketedReport { buckets, unbucketed })
}

/// Pairs bucketed by the length of the first reference; each bucket reports
/// corpus BLEU over its own pairs.
pub fn bleu_by_length(hyp: &TokenizedCorpus, refs: &[TokenizedCorpus], edges: &[u64]) -> Result<BucketedReport> {
    validate_edges(edges)?;
    check_refs(hyp, refs)?;
    let mut buckets = empty_buckets(edges);
    let mut stats = vec![BleuStats::default(); edges.len()];
    let mut unbucketed = 0;
    for i in 0..hyp.len() {
        match bucket_of(edges, refs[0].sentences()[i].len() as u64) {
            Some(b) => {
                stats[b] += pair_stats(hyp, refs, i);
                buckets[b].support += 1;
            }
            None => unbucketed += 1,
        }
    }
    for (b, s) in buckets.iter_mut().zip(&stats) {
        if b.support > 0 {
            b.statistic = Some(score_from_stats(s).score);
        }
    }
    Ok(BucketedReport { buckets, unbucketed })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SentenceBleuReport {
    /// Ten bins of width 10; the last one is closed at 100.
    pub bins: Vec<Bucket>,
    pub mean: f64,
    /// Population variance.
    pub variance: f64,
    /// Share of sentences scoring 30 or more.
    pub at_least_30: f64,
    pub scores: Vec<f64>,
}

pub fn sentence_bleu_scores(hyp: &TokenizedCorpus, refs: &[TokenizedCorpus]) -> Result<Vec<f64>> {
    check_refs(hyp, refs)?;
    Ok((0..hyp.len())
        .map(|i| smoothed_score(&pair_stats(hyp, refs, i)))
        .collect())
}

pub fn bleu_bin(score: f64) -> usize {
    ((score / 10.0).floor().max(0.0) as usize).min(9)
}

pub fn sentence_bleu_histogram(hyp: &TokenizedCorpus, refs: &[TokenizedCorpus]) -> Result<SentenceBleuReport> {
    let scores = sentence_bleu_scores(hyp, refs)?;
    let mut bins: Vec<Bucket> = (0..10u64)
        .map(|i| Bucket {
            lower: i * 10,
            upper: Some(i * 10 + 10),
            statistic: None,
            support: 0,
        })
        .collect();
    for &s in &scores {
        bins[bleu_bin(s)].support += 1;
    }
    let n = scores.len() as f64;
    for b in &mut bins {
        if !scores.is_empty() {
            b.statistic = Some(b.support as f64 / n);
        }
    }
    let (mean, variance, at_least_30) = if scores.is_empty() {
        (0.0, 0.0, 0.0)
    } else {
        let mean = scores.iter().sum::<f64>() / n;
        let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
        let hi = scores.iter().filter(|&&s| s >= 30.0).count() as f64 / n;
        (mean, var, hi)
    };
    Ok(SentenceBleuReport {
        bins,
        mean,
        variance,
        at_least_30,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{CorpusBuilder, TokenizeMode};
    use std::sync::Arc;

    fn pair(hyp: &[&str], reference: &[&str]) -> (TokenizedCorpus, TokenizedCorpus) {
        let mut b = CorpusBuilder::new(TokenizeMode::Whitespace);
        let h = b.add_lines(hyp.iter().copied());
        let r = b.add_lines(reference.iter().copied());
        let v = b.finish();
        (
            TokenizedCorpus::new(Arc::clone(&v), h, "hyp"),
            TokenizedCorpus::new(v, r, "ref"),
        )
    }

    #[test]
    fn identical_corpora_give_perfect_f1() {
        let lines = ["a b c", "a a d", "e"];
        let (h, r) = pair(&lines, &lines);
        let rep = word_f1_by_frequency(&h, &r, DEFAULT_FREQUENCY_EDGES).unwrap();
        for b in &rep.buckets {
            if b.support > 0 {
                assert_eq!(b.statistic, Some(1.0));
            }
        }
        assert_eq!(rep.buckets.iter().map(|b| b.support).sum::<usize>(), 5);
    }

    #[test]
    fn word_missing_from_hypothesis_has_zero_f1() {
        let (h, r) = pair(&["a b"], &["a c"]);
        let t = word_f1_table(&h, &r).unwrap();
        let c = h.vocab().lookup("c").unwrap();
        assert_eq!(t[&c].f1(), 0.0);
        let b = h.vocab().lookup("b").unwrap();
        assert_eq!(t[&b].ref_count, 0);
        assert_eq!(t[&b].f1(), 0.0);
    }

    #[test]
    fn bleu_by_length_identical() {
        let lines = ["a b c d e", "f g h i j k l m n o p q", "r s t u"];
        let (h, r) = pair(&lines, &lines);
        let rep = bleu_by_length(&h, &[r], DEFAULT_LENGTH_EDGES).unwrap();
        for b in &rep.buckets {
            match b.support {
                0 => assert_eq!(b.statistic, None),
                _ => assert_eq!(b.statistic, Some(100.0)),
            }
        }
    }

    #[test]
    fn histogram_extremes() {
        let (h, r) = pair(&["a b c d", ""], &["a b c d", "p q"]);
        let rep = sentence_bleu_histogram(&h, &[r]).unwrap();
        assert_eq!(rep.scores, vec![100.0, 0.0]);
        assert_eq!(rep.variance, 2500.0);
        assert_eq!(rep.bins[0].support, 1);
        assert_eq!(rep.bins[9].support, 1);
    }

    #[test]
    fn bad_edges_rejected() {
        let (h, r) = pair(&["a"], &["a"]);
        assert!(word_f1_by_frequency(&h, &r, &[]).is_err());
        assert!(bleu_by_length(&h, &[r], &[5, 5]).is_err());
    }

    #[test]
    fn bin_index() {
        assert_eq!(bleu_bin(0.0), 0);
        assert_eq!(bleu_bin(29.999), 2);
        assert_eq!(bleu_bin(30.0), 3);
        assert_eq!(bleu_bin(100.0), 9);
    }
}
