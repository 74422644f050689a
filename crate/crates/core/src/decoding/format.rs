//! Shared layout of the plain-text model files: an exact header line,
//! `#key<TAB>value` directives, free `#` comments, then tab-separated rows.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::text::{TokenId, Vocabulary, BOS_FORM, EOS_FORM};

pub(crate) struct ModelFile<'a> {
    pub what: &'static str,
    pub directives: BTreeMap<&'a str, (usize, &'a str)>,
    /// `(1-based line number, fields)`.
    pub rows: Vec<(usize, Vec<&'a str>)>,
}

impl<'a> ModelFile<'a> {
    pub fn parse(text: &'a str, header: &str, what: &'static str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, first)) if first.trim_end_matches('\r') == header => {}
            _ => {
                return Err(Error::Format {
                    what,
                    line: 1,
                    message: format!("expected header `{header}`"),
                })
            }
        }
        let mut directives = BTreeMap::new();
        let mut rows = Vec::new();
        for (i, line) in lines {
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('\t') {
                    directives.insert(k, (i + 1, v));
                }
                continue;
            }
            rows.push((i + 1, line.split('\t').collect()));
        }
        Ok(Self { what, directives, rows })
    }

    pub fn error(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Format {
            what: self.what,
            line,
            message: message.into(),
        }
    }

    pub fn directive<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.directives.get(key) {
            None => Ok(None),
            Some(&(line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| self.error(line, format!("bad value `{v}` for `{key}`"))),
        }
    }

    pub fn required<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.directive(key)?
            .ok_or_else(|| self.error(1, format!("missing `#{key}` directive")))
    }

    /// Vocabulary from the optional `#vocab` directive (space-separated
    /// forms in id order).
    pub fn vocabulary(&self) -> Vocabulary {
        let mut vocab = Vocabulary::new();
        if let Some(&(_, forms)) = self.directives.get("vocab") {
            for f in forms.split(' ').filter(|f| !f.is_empty()) {
                vocab.intern(f);
            }
        }
        vocab
    }
}

pub(crate) fn vocab_directive(vocab: &Vocabulary) -> String {
    let forms: Vec<&str> = vocab.corpus_ids().filter_map(|id| vocab.resolve(id)).collect();
    format!("#vocab\t{}\n", forms.join(" "))
}

/// Reserved forms map to their special ids; everything else is interned.
pub(crate) fn intern_form(vocab: &mut Vocabulary, form: &str) -> TokenId {
    match form {
        BOS_FORM => TokenId::BOS,
        EOS_FORM => TokenId::EOS,
        _ => vocab.intern(form),
    }
}

pub(crate) fn form(vocab: &Vocabulary, id: TokenId) -> &str {
    vocab.resolve(id).unwrap_or(crate::text::UNK_FORM)
}

pub(crate) fn join_forms(vocab: &Vocabulary, ids: &[TokenId]) -> String {
    ids.iter().map(|&t| form(vocab, t)).collect::<Vec<_>>().join(" ")
}
