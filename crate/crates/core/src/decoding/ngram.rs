use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use crate::decoding::format::{intern_form, join_forms, vocab_directive, ModelFile};
use crate::decoding::SequenceModel;
use crate::error::{Error, Result};
use crate::text::{TokenId, TokenizedCorpus, Vocabulary};

const HEADER: &str = "#divlab-ngram v1";

/// Unconditional additive-smoothing n-gram model.
///
/// The next token depends on the last `history` tokens of the `BOS`-padded
/// prefix. Outcomes are every corpus token of the vocabulary plus `EOS`,
/// `V` in all, and `P(w | h) = (c(h, w) + α) / (c(h) + α V)`. The source
/// context is ignored.
#[derive(Clone, Debug, PartialEq)]
pub struct NgramModel {
    vocab: Arc<Vocabulary>,
    history: usize,
    alpha: f64,
    counts: BTreeMap<Vec<TokenId>, BTreeMap<TokenId, u64>>,
    totals: BTreeMap<Vec<TokenId>, u64>,
    max_len: usize,
}

fn validate(history: usize, alpha: f64) -> Result<()> {
    if history == 0 {
        return Err(Error::Config("n-gram history must be at least 1".into()));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!("smoothing constant {alpha} must be positive")));
    }
    Ok(())
}

fn state(history: usize, prefix: &[TokenId]) -> Vec<TokenId> {
    let mut s = vec![TokenId::BOS; history.saturating_sub(prefix.len())];
    s.extend_from_slice(&prefix[prefix.len().saturating_sub(history)..]);
    s
}

/// Fits counts over every sentence, including the final `EOS` transition.
/// The step budget defaults to twice the longest sentence plus one.
pub fn fit_ngram(corpus: &TokenizedCorpus, history: usize, alpha: f64) -> Result<NgramModel> {
    validate(history, alpha)?;
    if corpus.is_empty() {
        return Err(Error::Training("cannot fit an n-gram model to an empty corpus".into()));
    }
    let mut model = NgramModel {
        vocab: Arc::clone(corpus.vocab()),
        history,
        alpha,
        counts: BTreeMap::new(),
        totals: BTreeMap::new(),
        max_len: 0,
    };
    let mut longest = 0;
    for s in corpus.sentences() {
        longest = longest.max(s.len());
        let events = s.iter().copied().chain(std::iter::once(TokenId::EOS));
        for (i, w) in events.enumerate() {
            model.add(state(history, &s[..i]), w, 1);
        }
    }
    model.max_len = 2 * longest + 1;
    Ok(model)
}

impl NgramModel {
    fn add(&mut self, state: Vec<TokenId>, token: TokenId, count: u64) {
        *self.totals.entry(state.clone()).or_insert(0) += count;
        *self.counts.entry(state).or_default().entry(token).or_insert(0) += count;
    }

    pub fn history(&self) -> usize {
        self.history
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn with_max_len(mut self, max_len: usize) -> Self {
        self.max_len = max_len;
        self
    }

    /// Number of outcomes `V`.
    pub fn outcomes(&self) -> usize {
        self.vocab.corpus_ids().count() + 1
    }

    pub fn count(&self, state: &[TokenId], token: TokenId) -> u64 {
        self.counts.get(state).and_then(|m| m.get(&token)).copied().unwrap_or(0)
    }

    pub fn state_total(&self, state: &[TokenId]) -> u64 {
        self.totals.get(state).copied().unwrap_or(0)
    }

    /// Header, `#history`, `#alpha`, `#max_len` and `#vocab` directives, then
    /// `state<TAB>token<TAB>count` rows.
    pub fn to_text(&self) -> String {
        let v = &self.vocab;
        let mut out = format!(
            "{HEADER}\n#history\t{}\n#alpha\t{}\n#max_len\t{}\n{}",
            self.history,
            self.alpha,
            self.max_len,
            vocab_directive(v)
        );
        for (state, row) in &self.counts {
            let s = join_forms(v, state);
            for (&t, &c) in row {
                out.push_str(&format!("{s}\t{}\t{c}\n", join_forms(v, &[t])));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let file = ModelFile::parse(text, HEADER, "n-gram model")?;
        let history: usize = file.required("history")?;
        let alpha: f64 = file.required("alpha")?;
        validate(history, alpha).map_err(|e| file.error(1, e.to_string()))?;
        let mut vocab = file.vocabulary();
        let mut events = Vec::new();
        for (line, fields) in &file.rows {
            let [s, t, c] = fields[..] else {
                return Err(file.error(*line, "expected state<TAB>token<TAB>count"));
            };
            let state: Vec<TokenId> = s.split(' ').map(|f| intern_form(&mut vocab, f)).collect();
            if state.len() != history {
                return Err(file.error(*line, format!("state has {} tokens, expected {history}", state.len())));
            }
            let token = intern_form(&mut vocab, t);
            if token == TokenId::BOS {
                return Err(file.error(*line, "the start symbol cannot be emitted"));
            }
            let count: u64 = c.parse().map_err(|_| file.error(*line, format!("bad count `{c}`")))?;
            events.push((state, token, count));
        }
        let mut model = NgramModel {
            vocab: Arc::new(vocab),
            history,
            alpha,
            counts: BTreeMap::new(),
            totals: BTreeMap::new(),
            max_len: file.required("max_len")?,
        };
        for (s, t, c) in events {
            model.add(s, t, c);
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

impl SequenceModel for NgramModel {
    fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    fn next_distribution(&self, _context: &str, prefix: &[TokenId]) -> Vec<f64> {
        let s = state(self.history, prefix);
        let denom = self.state_total(&s) as f64 + self.alpha * self.outcomes() as f64;
        let mut p = vec![0.0; self.vocab.len()];
        let row = self.counts.get(&s);
        for t in self.vocab.corpus_ids().chain(std::iter::once(TokenId::EOS)) {
            let c = row.and_then(|r| r.get(&t)).copied().unwrap_or(0);
            p[t.index()] = (c as f64 + self.alpha) / denom;
        }
        p
    }

    fn max_len(&self) -> usize {
        self.max_len
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::TokenizeMode;

    fn corpus(lines: &[&str]) -> TokenizedCorpus {
        TokenizedCorpus::from_lines(lines.iter().copied(), TokenizeMode::Whitespace, "c")
    }

    #[test]
    fn single_path_limit() {
        let c = corpus(&["a"]);
        let m = fit_ngram(&c, 1, 1e-9).unwrap();
        let a = c.vocab().lookup("a").unwrap();
        assert!(m.next_distribution("", &[])[a.index()] > 1.0 - 1e-8);
        assert!(m.next_distribution("", &[a])[TokenId::EOS.index()] > 1.0 - 1e-8);
    }

    #[test]
    fn large_alpha_is_near_uniform() {
        let c = corpus(&["a b", "a a"]);
        let m = fit_ngram(&c, 1, 1e9).unwrap();
        for x in m.next_distribution("", &[]).iter().skip(3) {
            assert!((x - 1.0 / 3.0).abs() < 1e-6);
        }
    }

    #[test]
    fn rows_match_hand_counts() {
        let c = corpus(&["a b a", "b"]);
        let m = fit_ngram(&c, 1, 0.5).unwrap();
        let a = c.vocab().lookup("a").unwrap();
        let b = c.vocab().lookup("b").unwrap();
        // after `a`: b once, EOS once; V = 3
        let p = m.next_distribution("", &[b, a]);
        assert_eq!(p[b.index()], 1.5 / 3.5);
        assert_eq!(p[TokenId::EOS.index()], 1.5 / 3.5);
        assert_eq!(p[a.index()], 0.5 / 3.5);
        assert_eq!(p[TokenId::BOS.index()], 0.0);
        // unseen state falls back to uniform
        let m2 = fit_ngram(&c, 2, 0.5).unwrap();
        let u = m2.next_distribution("", &[b, b]);
        assert!(u[3..].iter().chain([&u[1]]).all(|&x| x == 1.0 / 3.0));
    }

    #[test]
    fn text_round_trip() {
        let c = corpus(&["a b a", "b c", "c c a b"]);
        let m = fit_ngram(&c, 2, 0.1).unwrap();
        let back = NgramModel::from_text(&m.to_text()).unwrap();
        assert_eq!(back.to_text(), m.to_text());
        assert_eq!(back.next_distribution("", &[]), m.next_distribution("", &[]));
    }

    #[test]
    fn bad_hyperparameters() {
        let c = corpus(&["a"]);
        assert!(matches!(fit_ngram(&c, 0, 1.0), Err(Error::Config(_))));
        assert!(matches!(fit_ngram(&c, 1, 0.0), Err(Error::Config(_))));
        let empty = corpus(&[]);
        assert!(matches!(fit_ngram(&empty, 1, 1.0), Err(Error::Training(_))));
    }
}
