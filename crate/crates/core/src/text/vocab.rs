use std::collections::HashMap;
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

/// Index of a surface form in a [`Vocabulary`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TokenId(pub u32);

impl TokenId {
    pub const BOS: TokenId = TokenId(0);
    pub const EOS: TokenId = TokenId(1);
    pub const UNK: TokenId = TokenId(2);

    pub const fn index(self) -> usize {
        self.0 as usize
    }

    pub const fn is_reserved(self) -> bool {
        self.0 < FIRST_CORPUS_ID
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

const FIRST_CORPUS_ID: u32 = 3;

pub const BOS_FORM: &str = "<s>";
pub const EOS_FORM: &str = "</s>";
pub const UNK_FORM: &str = "<unk>";

/// Bijection between surface forms and token ids.
///
/// Ids 0..3 are reserved for BOS, EOS and UNK. The reserved forms are never
/// entered into the lookup index, so a corpus that literally contains `</s>`
/// gets its own ordinary id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    forms: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocabulary {
    pub fn new() -> Self {
        Self {
            forms: vec![BOS_FORM.to_owned(), EOS_FORM.to_owned(), UNK_FORM.to_owned()],
            index: HashMap::new(),
        }
    }

    pub fn intern(&mut self, form: &str) -> TokenId {
        if let Some(&id) = self.index.get(form) {
            return id;
        }
        let id = TokenId(self.forms.len() as u32);
        self.forms.push(form.to_owned());
        self.index.insert(form.to_owned(), id);
        id
    }

    pub fn lookup(&self, form: &str) -> Option<TokenId> {
        self.index.get(form).copied()
    }

    /// Id for `form`, or UNK when the form was never interned.
    pub fn lookup_or_unk(&self, form: &str) -> TokenId {
        self.lookup(form).unwrap_or(TokenId::UNK)
    }

    pub fn resolve(&self, id: TokenId) -> Option<&str> {
        self.forms.get(id.index()).map(String::as_str)
    }

    pub fn contains_id(&self, id: TokenId) -> bool {
        id.index() < self.forms.len()
    }

    /// Total number of ids, reserved ones included.
    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.len() == FIRST_CORPUS_ID as usize
    }

    /// Ids of interned (non-reserved) forms, in id order.
    pub fn corpus_ids(&self) -> impl Iterator<Item = TokenId> + '_ {
        (FIRST_CORPUS_ID..self.forms.len() as u32).map(TokenId)
    }

    /// True when every id of `self` maps to the same form in `other`.
    pub fn is_prefix_of(&self, other: &Vocabulary) -> bool {
        self.forms.len() <= other.forms.len() && self.forms.iter().zip(&other.forms).all(|(a, b)| a == b)
    }
}

/// A tokenized sentence. Never contains BOS or EOS.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sentence(Vec<TokenId>);

impl Sentence {
    pub fn new(tokens: Vec<TokenId>) -> Self {
        Self(tokens)
    }

    pub fn tokens(&self) -> &[TokenId] {
        &self.0
    }

    pub fn into_tokens(self) -> Vec<TokenId> {
        self.0
    }
}

impl Deref for Sentence {
    type Target = [TokenId];

    fn deref(&self) -> &[TokenId] {
        &self.0
    }
}

impl From<Vec<TokenId>> for Sentence {
    fn from(tokens: Vec<TokenId>) -> Self {
        Self(tokens)
    }
}
