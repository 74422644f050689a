use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decoding::format::{intern_form, join_forms, vocab_directive, ModelFile};
use crate::decoding::SequenceModel;
use crate::error::{Error, Result};
use crate::text::{TokenId, TokenizedCorpus, Vocabulary};

const HEADER: &str = "#divlab-context-model v1";
const INIT_SCALE: f64 = 0.01;

fn check_smoothing(epsilon: f64) -> Result<()> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::Config(format!("label smoothing {epsilon} outside [0, 1)")));
    }
    Ok(())
}

fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|&l| l - lse).collect()
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(f64::exp).collect()
}

/// Cross-entropy against `(1 - ε) onehot(target) + ε uniform`, with gradient
/// `softmax(logits) - q` in the logits.
pub fn smoothed_ce_loss_and_grad(logits: &[f64], target: usize, epsilon: f64) -> Result<(f64, Vec<f64>)> {
    check_smoothing(epsilon)?;
    if target >= logits.len() {
        return Err(Error::Config(format!(
            "target {target} outside {} logits",
            logits.len()
        )));
    }
    let v = logits.len() as f64;
    let logp = log_softmax(logits);
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(logits.len());
    for (i, &lp) in logp.iter().enumerate() {
        let q = epsilon / v + if i == target { 1.0 - epsilon } else { 0.0 };
        loss -= q * lp;
        grad.push(lp.exp() - q);
    }
    Ok((loss, grad))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextModelConfig {
    /// Number of previous output tokens in the state.
    pub history: usize,
    pub label_smoothing: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// When false the model never emits `EOS` and decoding runs to the step
    /// budget; `EOS` is then also left out of the smoothing alphabet.
    pub append_eos: bool,
}

impl Default for ContextModelConfig {
    fn default() -> Self {
        Self {
            history: 1,
            label_smoothing: 0.0,
            learning_rate: 1.0,
            epochs: 500,
            seed: 0,
            append_eos: true,
        }
    }
}

impl ContextModelConfig {
    fn validate(&self) -> Result<()> {
        check_smoothing(self.label_smoothing)?;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

type State = (String, Vec<TokenId>);

/// Softmax-parameterized next-token table per `(context, last k tokens)`.
///
/// The output alphabet is every corpus token of the vocabulary, plus `EOS`
/// when sentences end with it. Unseen states give the uniform distribution
/// over the alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainableContextModel {
    vocab: Arc<Vocabulary>,
    alphabet: Vec<TokenId>,
    config: ContextModelConfig,
    logits: BTreeMap<State, Vec<f64>>,
    trained: bool,
    max_len: usize,
}

fn state_of(context: &str, history: usize, prefix: &[TokenId]) -> State {
    let mut s = vec![TokenId::BOS; history.saturating_sub(prefix.len())];
    s.extend_from_slice(&prefix[prefix.len().saturating_sub(history)..]);
    (context.to_owned(), s)
}

/// Per-state target counts over the alphabet, and the event total.
type Tally = (BTreeMap<State, Vec<f64>>, f64);

fn tally(
    corpus: &TokenizedCorpus,
    contexts: &[String],
    alphabet: &BTreeMap<TokenId, usize>,
    config: &ContextModelConfig,
) -> Tally {
    let mut counts: BTreeMap<State, Vec<f64>> = BTreeMap::new();
    let mut n = 0.0;
    for (i, s) in corpus.sentences().iter().enumerate() {
        let ctx = contexts.get(i).map_or("", String::as_str);
        let eos = config.append_eos.then_some(TokenId::EOS);
        for (t, w) in s.iter().copied().chain(eos).enumerate() {
            let row = counts
                .entry(state_of(ctx, config.history, &s[..t]))
                .or_insert_with(|| vec![0.0; alphabet.len()]);
            row[alphabet[&w]] += 1.0;
            n += 1.0;
        }
    }
    (counts, n)
}

/// Full-batch gradient descent on the mean smoothed cross-entropy over all
/// `(state, next token)` events, starting from small seeded logits.
///
/// `contexts` is aligned with `corpus`; an empty slice means every sentence
/// has the empty context.
pub fn train_context_model(
    corpus: &TokenizedCorpus,
    contexts: &[String],
    config: &ContextModelConfig,
) -> Result<TrainableContextModel> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::Training("cannot train on an empty corpus".into()));
    }
    if !contexts.is_empty() && contexts.len() != corpus.len() {
        return Err(Error::Alignment {
            left: corpus.label().to_owned(),
            left_count: corpus.len(),
            right: "contexts".into(),
            right_count: contexts.len(),
        });
    }
    let vocab = Arc::clone(corpus.vocab());
    let mut alphabet: Vec<TokenId> = Vec::new();
    if config.append_eos {
        alphabet.push(TokenId::EOS);
    }
    alphabet.extend(vocab.corpus_ids());
    if alphabet.is_empty() {
        return Err(Error::Training("empty output alphabet".into()));
    }
    let position: BTreeMap<TokenId, usize> = alphabet.iter().enumerate().map(|(i, &t)| (t, i)).collect();
    let (counts, n) = tally(corpus, contexts, &position, config);
    if n == 0.0 {
        return Err(Error::Training("corpus has no training events".into()));
    }

    let a = alphabet.len() as f64;
    let eps = config.label_smoothing;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut logits: BTreeMap<State, Vec<f64>> = counts
        .keys()
        .map(|s| {
            (
                s.clone(),
                (0..alphabet.len())
                    .map(|_| rng.gen_range(-INIT_SCALE..=INIT_SCALE))
                    .collect(),
            )
        })
        .collect();
    // Mean gradient for a state: (n_s p - sum of smoothed targets) / n.
    let targets: BTreeMap<&State, (f64, Vec<f64>)> = counts
        .iter()
        .map(|(s, c)| {
            let n_s: f64 = c.iter().sum();
            let q = c.iter().map(|&k| (1.0 - eps) * k + eps * n_s / a).collect();
            (s, (n_s, q))
        })
        .collect();
    for _ in 0..config.epochs {
        for (s, l) in logits.iter_mut() {
            let (n_s, q) = &targets[s];
            let p = softmax(l);
            for ((li, pi), qi) in l.iter_mut().zip(&p).zip(q) {
                *li -= config.learning_rate * (n_s * pi - qi) / n;
            }
        }
    }
    let longest = corpus.sentences().iter().map(|s| s.len()).max().unwrap_or(0);
    let max_len = if config.append_eos { 2 * longest + 1 } else { longest };
    Ok(TrainableContextModel {
        vocab,
        alphabet,
        config: *config,
        logits,
        trained: true,
        max_len,
    })
}

impl TrainableContextModel {
    pub fn config(&self) -> &ContextModelConfig {
        &self.config
    }

    pub fn alphabet(&self) -> &[TokenId] {
        &self.alphabet
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub fn with_max_len(mut self, max_len: usize) -> Self {
        self.max_len = max_len;
        self
    }

    /// Trained states, in key order.
    pub fn states(&self) -> impl Iterator<Item = (&str, &[TokenId])> {
        self.logits.keys().map(|(c, h)| (c.as_str(), h.as_slice()))
    }

    /// Distribution over the alphabet for a state.
    pub fn state_distribution(&self, context: &str, prefix: &[TokenId]) -> Vec<f64> {
        match self.logits.get(&state_of(context, self.config.history, prefix)) {
            Some(l) => softmax(l),
            None => vec![1.0 / self.alphabet.len() as f64; self.alphabet.len()],
        }
    }

    /// Entropy in nats of each trained state's distribution, in key order.
    pub fn state_entropies(&self) -> Vec<f64> {
        self.logits
            .values()
            .map(|l| -softmax(l).iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>())
            .collect()
    }

    /// Mean smoothed cross-entropy of the model on a corpus.
    pub fn loss(&self, corpus: &TokenizedCorpus, contexts: &[String]) -> Result<f64> {
        let position: BTreeMap<TokenId, usize> = self.alphabet.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        if corpus.vocab().as_ref() != self.vocab.as_ref() {
            return Err(Error::VocabularyMismatch("corpus and model".into()));
        }
        let (counts, n) = tally(corpus, contexts, &position, &self.config);
        let mut total = 0.0;
        for ((ctx, hist), c) in &counts {
            let logits = self
                .logits
                .get(&(ctx.clone(), hist.clone()))
                .cloned()
                .unwrap_or_else(|| vec![0.0; self.alphabet.len()]);
            for (i, &k) in c.iter().enumerate() {
                if k > 0.0 {
                    total += k * smoothed_ce_loss_and_grad(&logits, i, self.config.label_smoothing)?.0;
                }
            }
        }
        Ok(total / n)
    }

    /// Header, config and `#vocab`/`#alphabet` directives, then
    /// `context<TAB>history<TAB>logits` rows with space-separated logits.
    pub fn to_text(&self) -> String {
        let v = &self.vocab;
        let c = &self.config;
        let mut out = format!(
            "{HEADER}\n#history\t{}\n#label_smoothing\t{}\n#learning_rate\t{}\n#epochs\t{}\n#seed\t{}\n#append_eos\t{}\n#trained\t{}\n#max_len\t{}\n{}#alphabet\t{}\n",
            c.history,
            c.label_smoothing,
            c.learning_rate,
            c.epochs,
            c.seed,
            c.append_eos,
            self.trained,
            self.max_len,
            vocab_directive(v),
            join_forms(v, &self.alphabet),
        );
        for ((ctx, hist), l) in &self.logits {
            let ls: Vec<String> = l.iter().map(f64::to_string).collect();
            out.push_str(&format!("{ctx}\t{}\t{}\n", join_forms(v, hist), ls.join(" ")));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let file = ModelFile::parse(text, HEADER, "context model")?;
        let config = ContextModelConfig {
            history: file.required("history")?,
            label_smoothing: file.required("label_smoothing")?,
            learning_rate: file.required("learning_rate")?,
            epochs: file.required("epochs")?,
            seed: file.required("seed")?,
            append_eos: file.required("append_eos")?,
        };
        config.validate().map_err(|e| file.error(1, e.to_string()))?;
        let mut vocab = file.vocabulary();
        let alphabet_forms: String = file.required("alphabet")?;
        let alphabet: Vec<TokenId> = alphabet_forms
            .split(' ')
            .filter(|f| !f.is_empty())
            .map(|f| intern_form(&mut vocab, f))
            .collect();
        let mut logits = BTreeMap::new();
        for (line, fields) in &file.rows {
            let [ctx, hist, ls] = fields[..] else {
                return Err(file.error(*line, "expected context<TAB>history<TAB>logits"));
            };
            let hist: Vec<TokenId> = hist.split(' ').map(|f| intern_form(&mut vocab, f)).collect();
            if hist.len() != config.history {
                return Err(file.error(*line, "history length does not match `#history`"));
            }
            let l: Vec<f64> = ls
                .split(' ')
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| file.error(*line, "bad logit"))?;
            if l.len() != alphabet.len() || l.iter().any(|x| !x.is_finite()) {
                return Err(file.error(*line, "logit row does not match the alphabet"));
            }
            logits.insert((ctx.to_owned(), hist), l);
        }
        Ok(Self {
            vocab: Arc::new(vocab),
            alphabet,
            config,
            logits,
            trained: file.required("trained")?,
            max_len: file.required("max_len")?,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

impl SequenceModel for TrainableContextModel {
    fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    fn next_distribution(&self, context: &str, prefix: &[TokenId]) -> Vec<f64> {
        let mut p = vec![0.0; self.vocab.len()];
        for (&t, q) in self.alphabet.iter().zip(self.state_distribution(context, prefix)) {
            p[t.index()] = q;
        }
        p
    }

    fn max_len(&self) -> usize {
        self.max_len
    }
}
