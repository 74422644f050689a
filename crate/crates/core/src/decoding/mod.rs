//! Conditional sequence models and decoders.
//!
//! Every model exposes a next-token distribution over its whole vocabulary
//! (`BOS` and `UNK` always carry zero mass). Decoders never look inside a
//! model beyond that.

mod format;
mod ngram;
mod search;
mod tabular;
mod trainable;

use std::sync::Arc;

pub use ngram::{fit_ngram, NgramModel};
pub use search::{
    beam_decode, brute_force_mode, decode_corpus, enumeration_size, greedy_decode, sample_decode, score_sequence,
    sentence_rng, temperature_transform, BeamResult, DecodeConfig, DecodeStrategy, ENUMERATION_LIMIT,
};
pub use tabular::{pronoun_toy_grammar, TabularModel, WILDCARD};
pub use trainable::{smoothed_ce_loss_and_grad, train_context_model, ContextModelConfig, TrainableContextModel};

use crate::error::{Error, Result};
use crate::text::{TokenId, Vocabulary};

pub(crate) const ROW_TOLERANCE: f64 = 1e-9;

pub trait SequenceModel: Send + Sync {
    fn vocab(&self) -> &Arc<Vocabulary>;

    /// Distribution over `vocab()` for the token following `prefix`.
    /// `prefix` never contains `EOS`.
    fn next_distribution(&self, context: &str, prefix: &[TokenId]) -> Vec<f64>;

    /// Default decode-step budget.
    fn max_len(&self) -> usize;
}

impl<M: SequenceModel + ?Sized> SequenceModel for &M {
    fn vocab(&self) -> &Arc<Vocabulary> {
        (**self).vocab()
    }

    fn next_distribution(&self, context: &str, prefix: &[TokenId]) -> Vec<f64> {
        (**self).next_distribution(context, prefix)
    }

    fn max_len(&self) -> usize {
        (**self).max_len()
    }
}

impl<M: SequenceModel + ?Sized> SequenceModel for Box<M> {
    fn vocab(&self) -> &Arc<Vocabulary> {
        (**self).vocab()
    }

    fn next_distribution(&self, context: &str, prefix: &[TokenId]) -> Vec<f64> {
        (**self).next_distribution(context, prefix)
    }

    fn max_len(&self) -> usize {
        (**self).max_len()
    }
}

/// A decoded sequence. `tokens` excludes `EOS`; `finished` records whether
/// the sequence ended with `EOS` or hit the step budget.
#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis {
    pub tokens: Vec<TokenId>,
    pub finished: bool,
    /// Sum of per-step natural-log probabilities under the untempered model,
    /// including the `EOS` step when finished.
    pub log_prob: f64,
}

impl Hypothesis {
    /// Token sequence as scored, with `EOS` appended when finished.
    pub fn full_sequence(&self) -> Vec<TokenId> {
        let mut s = self.tokens.clone();
        if self.finished {
            s.push(TokenId::EOS);
        }
        s
    }

    pub fn surface(&self, vocab: &Vocabulary) -> String {
        self.tokens
            .iter()
            .map(|&t| vocab.resolve(t).unwrap_or(crate::text::UNK_FORM))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Checks a distribution over a vocabulary of `len` ids.
pub fn validate_distribution(p: &[f64], len: usize, tolerance: f64) -> Result<()> {
    if p.len() != len {
        return Err(Error::Distribution(format!(
            "length {} for vocabulary of {len}",
            p.len()
        )));
    }
    if let Some(x) = p.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::Distribution(format!(
            "entry {x} is not a finite nonnegative number"
        )));
    }
    for special in [TokenId::BOS, TokenId::UNK] {
        if p[special.index()] != 0.0 {
            return Err(Error::Distribution(format!("mass on reserved id {special}")));
        }
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > tolerance {
        return Err(Error::Distribution(format!("sums to {sum}")));
    }
    Ok(())
}

/// Normalized form of a source line used as a model context key: tokens
/// joined by single spaces.
pub fn context_key(tokens: &[&str]) -> String {
    tokens.join(" ")
}
