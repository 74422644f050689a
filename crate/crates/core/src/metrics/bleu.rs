//! Corpus and sentence BLEU: clipped n-gram precision up to order 4 with a
//! closest-reference-length brevity penalty.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::text::{TokenId, TokenizedCorpus};

pub const MAX_ORDER: usize = 4;

/// Additive sufficient statistics for BLEU.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl std::ops::AddAssign for BleuStats {
    fn add_assign(&mut self, rhs: Self) {
        for n in 0..MAX_ORDER {
            self.matches[n] += rhs.matches[n];
            self.totals[n] += rhs.totals[n];
        }
        self.hyp_len += rhs.hyp_len;
        self.ref_len += rhs.ref_len;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BleuScore {
    pub score: f64,
    pub precisions: [f64; MAX_ORDER],
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub hyp_len: u64,
    pub ref_len: u64,
}

fn ngram_counts(tokens: &[TokenId], n: usize) -> HashMap<&[TokenId], u64> {
    let mut m = HashMap::new();
    for w in tokens.windows(n) {
        *m.entry(w).or_insert(0) += 1;
    }
    m
}

/// Clipped matches against the per-n-gram maximum over references; the
/// reference length is the one closest to the hypothesis (shorter on ties).
pub fn sentence_stats(hyp: &[TokenId], refs: &[&[TokenId]]) -> BleuStats {
    let mut stats = BleuStats {
        hyp_len: hyp.len() as u64,
        ref_len: closest_ref_len(hyp.len(), refs) as u64,
        ..Default::default()
    };
    for n in 1..=MAX_ORDER {
        let hyp_counts = ngram_counts(hyp, n);
        let mut max_ref: HashMap<&[TokenId], u64> = HashMap::new();
        for r in refs {
            for (g, c) in ngram_counts(r, n) {
                let e = max_ref.entry(g).or_insert(0);
                *e = (*e).max(c);
            }
        }
        let mut matched = 0;
        let mut total = 0;
        for (g, c) in hyp_counts {
            total += c;
            matched += c.min(max_ref.get(g).copied().unwrap_or(0));
        }
        stats.matches[n - 1] = matched;
        stats.totals[n - 1] = total;
    }
    stats
}

fn closest_ref_len(hyp_len: usize, refs: &[&[TokenId]]) -> usize {
    refs.iter()
        .map(|r| r.len())
        .min_by_key(|&l| (l.abs_diff(hyp_len), l))
        .unwrap_or(0)
}

fn brevity_penalty(hyp_len: u64, ref_len: u64) -> f64 {
    if hyp_len == 0 {
        0.0
    } else if hyp_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    }
}

/// Unsmoothed score: zero as soon as one order has n-grams but no match.
/// Orders with no hypothesis n-grams at all are vacuous (precision 1) and
/// left out of the geometric mean; an empty hypothesis side scores 0.
pub fn score_from_stats(stats: &BleuStats) -> BleuScore {
    let mut precisions = [1.0; MAX_ORDER];
    for (p, (&m, &t)) in precisions.iter_mut().zip(stats.matches.iter().zip(&stats.totals)) {
        if t > 0 {
            *p = m as f64 / t as f64;
        }
    }
    let bp = brevity_penalty(stats.hyp_len, stats.ref_len);
    let orders = stats.totals.iter().filter(|&&t| t > 0).count();
    let score = if orders > 0 && precisions.iter().all(|&p| p > 0.0) {
        let log_sum: f64 = (0..MAX_ORDER)
            .filter(|&n| stats.totals[n] > 0)
            .map(|n| precisions[n].ln())
            .sum();
        bp * (log_sum / orders as f64).exp() * 100.0
    } else {
        0.0
    };
    BleuScore {
        score,
        precisions,
        matches: stats.matches,
        totals: stats.totals,
        brevity_penalty: bp,
        hyp_len: stats.hyp_len,
        ref_len: stats.ref_len,
    }
}

pub(crate) fn check_refs(hyp: &TokenizedCorpus, refs: &[TokenizedCorpus]) -> Result<()> {
    if refs.is_empty() {
        return Err(Error::Config("at least one reference is required".into()));
    }
    for r in refs {
        hyp.ensure_aligned(r)?;
        hyp.ensure_shared_vocab(r)?;
    }
    Ok(())
}

pub(crate) fn pair_stats(hyp: &TokenizedCorpus, refs: &[TokenizedCorpus], i: usize) -> BleuStats {
    let rs: Vec<&[TokenId]> = refs.iter().map(|r| r.sentences()[i].tokens()).collect();
    sentence_stats(hyp.sentences()[i].tokens(), &rs)
}

pub fn corpus_bleu(hyp: &TokenizedCorpus, refs: &[TokenizedCorpus]) -> Result<BleuScore> {
    if hyp.is_empty() {
        return Err(Error::EmptyCorpus("hypothesis corpus has no sentences".into()));
    }
    check_refs(hyp, refs)?;
    let mut stats = BleuStats::default();
    for i in 0..hyp.len() {
        stats += pair_stats(hyp, refs, i);
    }
    Ok(score_from_stats(&stats))
}

/// Smoothed single-sentence BLEU.
///
/// Orders for which the hypothesis has no n-grams at all are left out of the
/// geometric mean; an order with n-grams but no match gets precision
/// `1 / (2 * count)`. An empty hypothesis scores 0.
pub fn sentence_bleu(hyp: &[TokenId], refs: &[&[TokenId]]) -> f64 {
    smoothed_score(&sentence_stats(hyp, refs))
}

pub(crate) fn smoothed_score(stats: &BleuStats) -> f64 {
    if stats.hyp_len == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    let mut orders = 0;
    for n in 0..MAX_ORDER {
        let total = stats.totals[n];
        if total == 0 {
            continue;
        }
        let p = if stats.matches[n] > 0 {
            stats.matches[n] as f64 / total as f64
        } else {
            1.0 / (2.0 * total as f64)
        };
        log_sum += p.ln();
        orders += 1;
    }
    brevity_penalty(stats.hyp_len, stats.ref_len) * (log_sum / orders as f64).exp() * 100.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<TokenId> {
        v.iter().map(|&i| TokenId(i)).collect()
    }

    #[test]
    fn identical_scores_100() {
        let h = ids(&[3, 4, 5, 6, 7]);
        let s = score_from_stats(&sentence_stats(&h, &[&h]));
        assert_eq!(s.score, 100.0);
        assert_eq!(sentence_bleu(&h, &[&h]), 100.0);
    }

    #[test]
    fn short_identical_sentence_scores_100_smoothed() {
        let h = ids(&[3, 4]);
        assert_eq!(sentence_bleu(&h, &[&h]), 100.0);
    }

    #[test]
    fn four_token_hand_example() {
        // hyp a b c d vs ref a b c e
        let h = ids(&[3, 4, 5, 6]);
        let r = ids(&[3, 4, 5, 7]);
        let s = score_from_stats(&sentence_stats(&h, &[&r]));
        assert_eq!(s.matches, [3, 2, 1, 0]);
        assert_eq!(s.totals, [4, 3, 2, 1]);
        assert_eq!(s.precisions[..3], [0.75, 2.0 / 3.0, 0.5]);
        assert_eq!(s.score, 0.0);
        // smoothing replaces p4 = 0 with 1/2
        let expected = ((0.75f64).ln() + (2.0f64 / 3.0).ln() + 0.5f64.ln() + 0.5f64.ln()) / 4.0;
        assert!((sentence_bleu(&h, &[&r]) - expected.exp() * 100.0).abs() < 1e-12);
    }

    #[test]
    fn empty_hypothesis() {
        let r = ids(&[3, 4]);
        assert_eq!(sentence_bleu(&[], &[&r]), 0.0);
        assert_eq!(score_from_stats(&sentence_stats(&[], &[&r])).score, 0.0);
    }

    #[test]
    fn closest_reference_length_prefers_shorter_on_tie() {
        let h = ids(&[3, 3, 3]);
        let r2 = ids(&[3, 3]);
        let r4 = ids(&[3, 3, 3, 3]);
        assert_eq!(sentence_stats(&h, &[&r4, &r2]).ref_len, 2);
    }

    #[test]
    fn clipping_uses_max_over_references() {
        let h = ids(&[3, 3, 3]);
        let r1 = ids(&[3, 4]);
        let r2 = ids(&[3, 3, 4]);
        assert_eq!(sentence_stats(&h, &[&r1, &r2]).matches[0], 2);
    }
}
