use std::cmp::Ordering;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoding::{Hypothesis, SequenceModel};
use crate::error::{Error, Result};
use crate::text::TokenId;

/// Largest number of sequences [`brute_force_mode`] will enumerate.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

/// `q_i ∝ p_i^(1/T)`, computed in log space. `T = 1` returns `p` unchanged.
/// Zero entries stay zero and equal entries stay equal.
pub fn temperature_transform(p: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::Config(format!(
            "temperature {temperature} must be positive and finite"
        )));
    }
    if temperature == 1.0 {
        return Ok(p.to_vec());
    }
    let logs: Vec<f64> = p.iter().map(|&x| x.ln() / temperature).collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::Distribution("all entries are zero".into()));
    }
    let mut q: Vec<f64> = logs.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = q.iter().sum();
    for x in &mut q {
        *x /= sum;
    }
    Ok(q)
}

fn emittable(id: usize) -> bool {
    id != TokenId::BOS.index() && id != TokenId::UNK.index()
}

/// Highest-probability token; ties go to the lowest id.
fn argmax(p: &[f64]) -> TokenId {
    let mut best = TokenId::EOS.index();
    for (i, &x) in p.iter().enumerate() {
        if emittable(i) && x > p[best] {
            best = i;
        }
    }
    TokenId(best as u32)
}

fn extend(h: &Hypothesis, token: TokenId, p: f64) -> Hypothesis {
    let mut tokens = h.tokens.clone();
    let finished = token == TokenId::EOS;
    if !finished {
        tokens.push(token);
    }
    Hypothesis {
        tokens,
        finished,
        log_prob: h.log_prob + p.ln(),
    }
}

/// Search order: higher log-probability first, then lexicographically
/// smaller token sequence (with `EOS` appended when finished).
fn rank(a: &Hypothesis, b: &Hypothesis) -> Ordering {
    b.log_prob.total_cmp(&a.log_prob).then_with(|| {
        let tail = |h: &Hypothesis| h.finished.then_some(TokenId::EOS);
        a.tokens
            .iter()
            .chain(tail(a).iter())
            .cmp(b.tokens.iter().chain(tail(b).iter()))
    })
}

fn empty() -> Hypothesis {
    Hypothesis {
        tokens: Vec::new(),
        finished: false,
        log_prob: 0.0,
    }
}

pub fn greedy_decode<M: SequenceModel + ?Sized>(model: &M, context: &str, max_len: usize) -> Hypothesis {
    let mut h = empty();
    for _ in 0..max_len {
        let p = model.next_distribution(context, &h.tokens);
        let t = argmax(&p);
        h = extend(&h, t, p[t.index()]);
        if h.finished {
            break;
        }
    }
    h
}

/// Token-by-token draws from the tempered distribution. `T = 0` is exactly
/// [`greedy_decode`]. The recorded log-probability is under the untempered
/// model.
pub fn sample_decode<M: SequenceModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    context: &str,
    temperature: f64,
    max_len: usize,
    rng: &mut R,
) -> Result<Hypothesis> {
    if temperature == 0.0 {
        return Ok(greedy_decode(model, context, max_len));
    }
    if temperature.is_nan() || temperature < 0.0 {
        return Err(Error::Config(format!("temperature {temperature} must be nonnegative")));
    }
    let mut h = empty();
    for _ in 0..max_len {
        let p = model.next_distribution(context, &h.tokens);
        let q = temperature_transform(&p, temperature)?;
        let dist = WeightedIndex::new(&q).map_err(|e| Error::Distribution(e.to_string()))?;
        let t = TokenId(dist.sample(rng) as u32);
        h = extend(&h, t, p[t.index()]);
        if h.finished {
            break;
        }
    }
    Ok(h)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeamResult {
    pub best: Hypothesis,
    /// Every hypothesis that reached `EOS`, in search order.
    pub completed: Vec<Hypothesis>,
    /// Live hypotheses when the budget ran out (length-capped), in search
    /// order; empty when the search stopped on completions.
    pub capped: Vec<Hypothesis>,
}

/// Length-synchronous beam search on raw cumulative log-probability.
///
/// Each step ranks all one-token extensions of the live beams. Finished
/// candidates among the top `width` move to the completed pool; the top
/// `width` unfinished candidates become the next beams. The search stops
/// once `width` hypotheses are complete or after `max_len` steps, when the
/// surviving beams compete as capped hypotheses.
pub fn beam_decode<M: SequenceModel + ?Sized>(
    model: &M,
    context: &str,
    width: usize,
    max_len: usize,
) -> Result<BeamResult> {
    if width == 0 {
        return Err(Error::Config("beam width must be at least 1".into()));
    }
    let mut live = vec![empty()];
    let mut completed: Vec<Hypothesis> = Vec::new();
    let mut stopped = false;
    for _ in 0..max_len {
        let mut candidates = Vec::new();
        for h in &live {
            let p = model.next_distribution(context, &h.tokens);
            for (i, &x) in p.iter().enumerate() {
                if x > 0.0 && emittable(i) {
                    candidates.push(extend(h, TokenId(i as u32), x));
                }
            }
        }
        candidates.sort_by(rank);
        completed.extend(candidates.iter().take(width).filter(|c| c.finished).cloned());
        live = candidates.into_iter().filter(|c| !c.finished).take(width).collect();
        if completed.len() >= width || live.is_empty() {
            stopped = true;
            break;
        }
    }
    completed.sort_by(rank);
    let capped = if stopped { Vec::new() } else { live };
    let best = completed
        .iter()
        .chain(&capped)
        .min_by(|a, b| rank(a, b))
        .cloned()
        .unwrap_or_else(empty);
    Ok(BeamResult {
        best,
        completed,
        capped,
    })
}

/// Number of sequences enumerated by [`brute_force_mode`] for `content`
/// non-special tokens: all `EOS`-terminated sequences with fewer than
/// `max_len` content tokens plus all capped ones. Saturates.
pub fn enumeration_size(content: usize, max_len: usize) -> u128 {
    let c = content as u128;
    let mut total: u128 = 0;
    let mut power: u128 = 1;
    for _ in 0..max_len {
        total = total.saturating_add(power);
        power = power.saturating_mul(c);
    }
    total.saturating_add(power)
}

/// Exact highest-probability sequence, under the same ranking as
/// [`beam_decode`].
pub fn brute_force_mode<M: SequenceModel + ?Sized>(model: &M, context: &str, max_len: usize) -> Result<Hypothesis> {
    let content = model.vocab().corpus_ids().count();
    let needed = enumeration_size(content, max_len);
    if needed > ENUMERATION_LIMIT {
        return Err(Error::EnumerationBudget {
            needed,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut best: Option<Hypothesis> = None;
    let mut offer = |h: Hypothesis| {
        if best.as_ref().is_none_or(|b| rank(&h, b) == Ordering::Less) {
            best = Some(h);
        }
    };
    let mut stack = vec![empty()];
    while let Some(h) = stack.pop() {
        if h.tokens.len() == max_len {
            offer(h);
            continue;
        }
        let p = model.next_distribution(context, &h.tokens);
        for (i, &x) in p.iter().enumerate() {
            if x > 0.0 && emittable(i) {
                let next = extend(&h, TokenId(i as u32), x);
                if next.finished {
                    offer(next);
                } else {
                    stack.push(next);
                }
            }
        }
    }
    Ok(best.unwrap_or_else(empty))
}

/// Replays `tokens` (plus `EOS` when `finished`) through the model,
/// accumulating log-probabilities in decode order.
pub fn score_sequence<M: SequenceModel + ?Sized>(model: &M, context: &str, tokens: &[TokenId], finished: bool) -> f64 {
    let mut lp = 0.0;
    let steps = tokens.iter().copied().chain(finished.then_some(TokenId::EOS));
    for (i, t) in steps.enumerate() {
        lp += model.next_distribution(context, &tokens[..i])[t.index()].ln();
    }
    lp
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "lowercase")]
pub enum DecodeStrategy {
    Sample { temperature: f64 },
    Greedy,
    Beam { width: usize },
}

impl DecodeStrategy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DecodeStrategy::Sample { temperature } if !(temperature >= 0.0 && temperature.is_finite()) => {
                Err(Error::Config(format!("temperature {temperature} must be nonnegative")))
            }
            DecodeStrategy::Beam { width: 0 } => Err(Error::Config("beam width must be at least 1".into())),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub strategy: DecodeStrategy,
    pub max_len: usize,
    pub seed: u64,
}

/// RNG for sentence `index`: ChaCha8 seeded with `seed`, stream `index`.
pub fn sentence_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Decodes every context independently, in parallel; output order matches
/// input order and does not depend on the thread count.
pub fn decode_corpus<M: SequenceModel + ?Sized>(
    model: &M,
    contexts: &[String],
    config: &DecodeConfig,
) -> Result<Vec<Hypothesis>> {
    config.strategy.validate()?;
    contexts
        .par_iter()
        .enumerate()
        .map(|(i, ctx)| match config.strategy {
            DecodeStrategy::Sample { temperature } => sample_decode(
                model,
                ctx,
                temperature,
                config.max_len,
                &mut sentence_rng(config.seed, i),
            ),
            DecodeStrategy::Greedy => Ok(greedy_decode(model, ctx, config.max_len)),
            DecodeStrategy::Beam { width } => beam_decode(model, ctx, width, config.max_len).map(|r| r.best),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoding::{pronoun_toy_grammar, TabularModel, WILDCARD};
    use crate::text::Vocabulary;
    use std::sync::Arc;

    fn two_way(px: f64) -> (TabularModel, TokenId, TokenId) {
        let mut v = Vocabulary::new();
        let x = v.intern("x");
        let y = v.intern("y");
        let mut m = TabularModel::new(Arc::new(v), 3);
        m.set_row(WILDCARD, &[], &[(x, px), (y, 1.0 - px)]).unwrap();
        (m, x, y)
    }

    #[test]
    fn temperature_examples() {
        let p = [0.6, 0.4];
        assert_eq!(temperature_transform(&p, 1.0).unwrap(), p.to_vec());
        let q = temperature_transform(&p, 0.5).unwrap();
        assert!((q[0] - 0.36 / 0.52).abs() < 1e-12);
        assert!((q[1] - 0.16 / 0.52).abs() < 1e-12);
        let q = temperature_transform(&p, 0.01).unwrap();
        assert!(q[0] > 1.0 - 1e-12);
        assert!(temperature_transform(&p, 0.0).is_err());
        assert!(temperature_transform(&p, -1.0).is_err());
        let q = temperature_transform(&[0.0, 0.5, 0.5], 0.3).unwrap();
        assert_eq!(q[0], 0.0);
        assert_eq!(q[1], q[2]);
    }

    #[test]
    fn greedy_tie_goes_to_lower_id() {
        let (m, x, _) = two_way(0.5);
        let h = greedy_decode(&m, "", 3);
        assert_eq!(h.tokens, vec![x]);
        assert!(h.finished);
        assert!((h.log_prob - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn zero_temperature_is_greedy() {
        let m = pronoun_toy_grammar(0.3).unwrap();
        let mut rng = sentence_rng(1, 0);
        assert_eq!(
            sample_decode(&m, "", 0.0, 4, &mut rng).unwrap(),
            greedy_decode(&m, "", 4)
        );
    }

    #[test]
    fn sampled_frequency_matches_probability() {
        let (m, x, _) = two_way(0.7);
        let n = 20_000;
        let hits = (0..n)
            .filter(|&i| sample_decode(&m, "", 1.0, 3, &mut sentence_rng(11, i)).unwrap().tokens == [x])
            .count();
        assert!((hits as f64 / n as f64 - 0.7).abs() < 0.015);
    }

    #[test]
    fn beam_keeps_completed_and_capped_pools() {
        let m = pronoun_toy_grammar(0.4).unwrap();
        let r = beam_decode(&m, "", 2, 5).unwrap();
        assert_eq!(r.completed.len(), 2);
        assert!(r.capped.is_empty());
        assert_eq!(m.vocab().resolve(r.best.tokens[0]), Some("he"));
        let r = beam_decode(&m, "", 2, 1).unwrap();
        assert!(r.completed.is_empty());
        assert_eq!(r.capped.len(), 2);
        assert!(beam_decode(&m, "", 0, 3).is_err());
    }

    #[test]
    fn replay_reproduces_log_prob() {
        let m = pronoun_toy_grammar(0.4).unwrap();
        for i in 0..20 {
            let h = sample_decode(&m, "", 1.0, 4, &mut sentence_rng(3, i)).unwrap();
            assert_eq!(score_sequence(&m, "", &h.tokens, h.finished), h.log_prob);
        }
    }

    #[test]
    fn enumeration_count() {
        assert_eq!(enumeration_size(2, 2), 1 + 2 + 4);
        assert_eq!(enumeration_size(3, 0), 1);
        assert!(enumeration_size(usize::MAX, 100) == u128::MAX);
        let mut v = Vocabulary::new();
        for i in 0..20 {
            v.intern(&format!("w{i}"));
        }
        let m = TabularModel::new(Arc::new(v), 6);
        assert!(matches!(
            brute_force_mode(&m, "", 6),
            Err(Error::EnumerationBudget { .. })
        ));
    }

    #[test]
    fn brute_force_two_sequences() {
        let (m, x, _) = two_way(0.6);
        assert_eq!(brute_force_mode(&m, "", 3).unwrap().tokens, vec![x]);
    }

    #[test]
    fn corpus_decode_is_ordered_and_seeded() {
        let m = pronoun_toy_grammar(0.5).unwrap();
        let ctx: Vec<String> = vec![String::new(); 50];
        let cfg = DecodeConfig {
            strategy: DecodeStrategy::Sample { temperature: 1.0 },
            max_len: 4,
            seed: 9,
        };
        let a = decode_corpus(&m, &ctx, &cfg).unwrap();
        let b = decode_corpus(&m, &ctx, &cfg).unwrap();
        assert_eq!(a, b);
        for (i, h) in a.iter().enumerate() {
            assert_eq!(h, &sample_decode(&m, "", 1.0, 4, &mut sentence_rng(9, i)).unwrap());
        }
    }
}
