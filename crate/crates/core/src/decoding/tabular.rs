use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;

use crate::decoding::format::{form, intern_form, join_forms, vocab_directive, ModelFile};
use crate::decoding::{validate_distribution, SequenceModel, ROW_TOLERANCE};
use crate::error::{Error, Result};
use crate::text::{TokenId, Vocabulary};

/// Context (or, in files, prefix) matching anything.
pub const WILDCARD: &str = "*";

const HEADER: &str = "#divlab-tabular v1";
/// Row sums in hand-written files may be off by this much; rows further
/// than 1e-9 from one are renormalized.
const FILE_TOLERANCE: f64 = 1e-6;

/// Explicit next-token tables keyed by `(context, prefix)`.
///
/// Lookup tries the exact context, then the wildcard context, then the
/// default row. Without a configured default, unlisted prefixes end the
/// sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularModel {
    vocab: Arc<Vocabulary>,
    rows: BTreeMap<String, BTreeMap<Vec<TokenId>, Vec<f64>>>,
    default_row: Vec<f64>,
    max_len: usize,
}

fn eos_row(len: usize) -> Vec<f64> {
    let mut row = vec![0.0; len];
    row[TokenId::EOS.index()] = 1.0;
    row
}

impl TabularModel {
    pub fn new(vocab: Arc<Vocabulary>, max_len: usize) -> Self {
        let default_row = eos_row(vocab.len());
        Self {
            vocab,
            rows: BTreeMap::new(),
            default_row,
            max_len,
        }
    }

    fn dense(&self, entries: &[(TokenId, f64)]) -> Result<Vec<f64>> {
        let mut row = vec![0.0; self.vocab.len()];
        for &(t, p) in entries {
            if !self.vocab.contains_id(t) {
                return Err(Error::Distribution(format!("token id {t} outside the vocabulary")));
            }
            row[t.index()] += p;
        }
        validate_distribution(&row, self.vocab.len(), ROW_TOLERANCE)?;
        Ok(row)
    }

    /// Sets the row for `(context, prefix)`; the row must sum to 1 within
    /// 1e-9.
    pub fn set_row(&mut self, context: &str, prefix: &[TokenId], entries: &[(TokenId, f64)]) -> Result<()> {
        if prefix.iter().any(|t| t.is_reserved()) {
            return Err(Error::Distribution("prefix contains a reserved id".into()));
        }
        let row = self.dense(entries)?;
        self.rows
            .entry(context.to_owned())
            .or_default()
            .insert(prefix.to_vec(), row);
        Ok(())
    }

    pub fn set_default(&mut self, entries: &[(TokenId, f64)]) -> Result<()> {
        self.default_row = self.dense(entries)?;
        Ok(())
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[TokenId], &[f64])> {
        self.rows
            .iter()
            .flat_map(|(c, m)| m.iter().map(move |(p, r)| (c.as_str(), p.as_slice(), r.as_slice())))
    }

    pub fn default_row(&self) -> &[f64] {
        &self.default_row
    }

    /// Random model over `content` fresh tokens with a row for every prefix
    /// shorter than `max_len` under the wildcard context. Weights are small
    /// integers, so ties and zero-probability tokens are common.
    pub fn random<R: Rng + ?Sized>(content: usize, max_len: usize, rng: &mut R) -> Self {
        let mut vocab = Vocabulary::new();
        let ids: Vec<TokenId> = (0..content).map(|i| vocab.intern(&format!("t{i}"))).collect();
        let mut outputs = ids.clone();
        outputs.push(TokenId::EOS);
        let mut model = Self::new(Arc::new(vocab), max_len);
        let mut frontier: Vec<Vec<TokenId>> = vec![Vec::new()];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for prefix in frontier {
                let mut weights: Vec<u32> = outputs.iter().map(|_| rng.gen_range(0..4)).collect();
                if weights.iter().all(|&w| w == 0) {
                    let k = rng.gen_range(0..weights.len());
                    weights[k] = 1;
                }
                let total: u32 = weights.iter().sum();
                let entries: Vec<(TokenId, f64)> = outputs
                    .iter()
                    .zip(&weights)
                    .map(|(&t, &w)| (t, f64::from(w) / f64::from(total)))
                    .collect();
                model
                    .set_row(WILDCARD, &prefix, &entries)
                    .expect("weights normalize to one");
                for &t in &ids {
                    let mut p = prefix.clone();
                    p.push(t);
                    next.push(p);
                }
            }
            frontier = next;
        }
        model
    }

    /// Text form: header, `#max_len` and `#vocab` directives, then
    /// `context<TAB>prefix<TAB>token<TAB>prob` rows with space-separated
    /// prefixes. The default row uses `*` for both context and prefix.
    pub fn to_text(&self) -> String {
        let v = &self.vocab;
        let mut out = format!("{HEADER}\n#max_len\t{}\n{}", self.max_len, vocab_directive(v));
        let mut emit = |ctx: &str, prefix: &str, row: &[f64]| {
            for (i, &p) in row.iter().enumerate() {
                if p > 0.0 {
                    out.push_str(&format!("{ctx}\t{prefix}\t{}\t{p}\n", form(v, TokenId(i as u32))));
                }
            }
        };
        for (ctx, prefix, row) in self.rows() {
            emit(ctx, &join_forms(v, prefix), row);
        }
        emit(WILDCARD, WILDCARD, &self.default_row);
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let file = ModelFile::parse(text, HEADER, "tabular model")?;
        let max_len: usize = file.required("max_len")?;
        let mut vocab = file.vocabulary();
        type Key = (String, Option<Vec<TokenId>>);
        let mut grouped: BTreeMap<Key, (usize, Vec<(TokenId, f64)>)> = BTreeMap::new();
        let mut order: Vec<Key> = Vec::new();
        for (line, fields) in &file.rows {
            let [ctx, prefix, token, prob] = fields[..] else {
                return Err(file.error(*line, "expected context<TAB>prefix<TAB>token<TAB>prob"));
            };
            let prob: f64 = prob
                .parse()
                .map_err(|_| file.error(*line, format!("bad probability `{prob}`")))?;
            let prefix_ids = if prefix == WILDCARD {
                if ctx != WILDCARD {
                    return Err(file.error(*line, "a wildcard prefix requires the wildcard context"));
                }
                None
            } else {
                let ids: Vec<TokenId> = prefix
                    .split(' ')
                    .filter(|f| !f.is_empty())
                    .map(|f| intern_form(&mut vocab, f))
                    .collect();
                if ids.iter().any(|t| t.is_reserved()) {
                    return Err(file.error(*line, "prefix contains a reserved token"));
                }
                Some(ids)
            };
            let token = intern_form(&mut vocab, token);
            if token == TokenId::BOS {
                return Err(file.error(*line, "the start symbol cannot be emitted"));
            }
            let key = (ctx.to_owned(), prefix_ids);
            let slot = grouped.entry(key.clone()).or_insert_with(|| {
                order.push(key);
                (*line, Vec::new())
            });
            slot.1.push((token, prob));
        }
        let mut model = TabularModel::new(Arc::new(vocab), max_len);
        for key in order {
            let (line, mut entries) = grouped.remove(&key).expect("key recorded");
            let sum: f64 = entries.iter().map(|e| e.1).sum();
            if entries.iter().any(|e| !(e.1 >= 0.0 && e.1.is_finite())) || (sum - 1.0).abs() > FILE_TOLERANCE {
                return Err(file.error(line, format!("row sums to {sum}, expected 1")));
            }
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                for e in &mut entries {
                    e.1 /= sum;
                }
            }
            let result = match &key.1 {
                None => model.set_default(&entries),
                Some(prefix) => model.set_row(&key.0, prefix, &entries),
            };
            result.map_err(|e| file.error(line, e.to_string()))?;
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

impl SequenceModel for TabularModel {
    fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    fn next_distribution(&self, context: &str, prefix: &[TokenId]) -> Vec<f64> {
        [context, WILDCARD]
            .iter()
            .find_map(|c| self.rows.get(*c).and_then(|m| m.get(prefix)))
            .unwrap_or(&self.default_row)
            .clone()
    }

    fn max_len(&self) -> usize {
        self.max_len
    }
}

/// `she` or `he` with the given odds, then `went`, then end of sentence.
/// `she` has the lower id, so an even split resolves to `she` under the
/// lowest-id tie rule.
pub fn pronoun_toy_grammar(p_female: f64) -> Result<TabularModel> {
    if !(p_female > 0.0 && p_female < 1.0) {
        return Err(Error::Config(format!("female probability {p_female} outside (0, 1)")));
    }
    let mut vocab = Vocabulary::new();
    let she = vocab.intern("she");
    let he = vocab.intern("he");
    let went = vocab.intern("went");
    let mut m = TabularModel::new(Arc::new(vocab), 4);
    m.set_row(WILDCARD, &[], &[(she, p_female), (he, 1.0 - p_female)])?;
    m.set_row(WILDCARD, &[she], &[(went, 1.0)])?;
    m.set_row(WILDCARD, &[he], &[(went, 1.0)])?;
    Ok(m)
}
