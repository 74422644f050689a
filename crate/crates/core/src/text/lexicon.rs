use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::text::{TokenId, Vocabulary};

pub const PUNCTUATION: &str = "punctuation";
pub const NUMERIC: &str = "numeric";

pub const BUILTIN_PUNCTUATION: &[&str] = &[".", ",", "?", "!", "\"", "'", "...", "!!!", "?!", "!?", ";", ":"];
const ENGLISH_FEMALE: &[&str] = &["she", "her", "hers", "herself"];
const ENGLISH_MALE: &[&str] = &["he", "him", "his", "himself"];
const GERMAN_FEMALE: &[&str] = &["sie"];
const GERMAN_MALE: &[&str] = &["er"];

/// Named token classes. Forms are stored case-folded and matched after
/// case-folding the query.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SubsetLexicon {
    classes: BTreeMap<String, BTreeSet<String>>,
}

impl Default for SubsetLexicon {
    fn default() -> Self {
        Self::builtin()
    }
}

pub fn female_class(side: &str) -> String {
    format!("{side}-female")
}

pub fn male_class(side: &str) -> String {
    format!("{side}-male")
}

impl SubsetLexicon {
    pub fn empty() -> Self {
        Self {
            classes: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut lex = Self::empty();
        lex.set_class(PUNCTUATION, BUILTIN_PUNCTUATION.iter().copied());
        lex.set_class("english-female", ENGLISH_FEMALE.iter().copied());
        lex.set_class("english-male", ENGLISH_MALE.iter().copied());
        lex.set_class("german-female", GERMAN_FEMALE.iter().copied());
        lex.set_class("german-male", GERMAN_MALE.iter().copied());
        lex
    }

    /// Replaces (or adds) a class.
    pub fn set_class<'a>(&mut self, name: &str, forms: impl IntoIterator<Item = &'a str>) {
        let set = forms.into_iter().map(fold).collect();
        self.classes.insert(name.to_owned(), set);
    }

    /// Applies an override file on top of `self`. Each non-empty line is
    /// `class-name<TAB>form1 form2 ...` and replaces that class wholesale.
    pub fn apply_overrides(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, forms) = line.split_once('\t').ok_or_else(|| Error::Format {
                what: "lexicon file",
                line: i + 1,
                message: "expected `class<TAB>forms`".into(),
            })?;
            let name = name.trim();
            if name.is_empty() || name == NUMERIC {
                return Err(Error::Format {
                    what: "lexicon file",
                    line: i + 1,
                    message: format!("invalid class name `{name}`"),
                });
            }
            self.set_class(name, forms.split_whitespace());
        }
        self.validate()
    }

    pub fn load_overrides(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lex = Self::builtin();
        lex.apply_overrides(&text)?;
        Ok(lex)
    }

    /// Female and male sets of every side must be disjoint.
    pub fn validate(&self) -> Result<()> {
        for name in self.classes.keys() {
            let Some(side) = name.strip_suffix("-female") else {
                continue;
            };
            if let (Some(f), Some(m)) = (self.class(name), self.class(&male_class(side))) {
                if let Some(shared) = f.intersection(m).next() {
                    return Err(Error::Lexicon(format!(
                        "`{shared}` is in both {side}-female and {side}-male"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn class(&self, name: &str) -> Option<&BTreeSet<String>> {
        self.classes.get(name)
    }

    pub fn class_names(&self) -> impl Iterator<Item = &str> {
        self.classes.keys().map(String::as_str)
    }

    pub fn has_class(&self, name: &str) -> bool {
        name == NUMERIC || self.classes.contains_key(name)
    }

    pub fn contains(&self, class: &str, surface: &str) -> bool {
        if class == NUMERIC {
            return is_numeric(surface);
        }
        self.classes.get(class).is_some_and(|set| set.contains(&fold(surface)))
    }

    /// Every class containing `surface`, plus `numeric` for number-like forms.
    pub fn classify(&self, surface: &str) -> BTreeSet<String> {
        let folded = fold(surface);
        let mut out: BTreeSet<String> = self
            .classes
            .iter()
            .filter(|(_, set)| set.contains(&folded))
            .map(|(name, _)| name.clone())
            .collect();
        if is_numeric(surface) {
            out.insert(NUMERIC.to_owned());
        }
        out
    }

    /// Per-id membership table for `class` over `vocab`.
    pub fn mask(&self, vocab: &Vocabulary, class: &str) -> Result<Vec<bool>> {
        if !self.has_class(class) {
            return Err(Error::UnknownClass(class.to_owned()));
        }
        Ok((0..vocab.len() as u32)
            .map(|i| {
                let id = TokenId(i);
                !id.is_reserved() && vocab.resolve(id).is_some_and(|s| self.contains(class, s))
            })
            .collect())
    }

    /// Female and male class names for a language side.
    pub fn gendered_classes(&self, side: &str) -> Result<(String, String)> {
        let (f, m) = (female_class(side), male_class(side));
        for c in [&f, &m] {
            if !self.classes.contains_key(c) {
                return Err(Error::UnknownClass(c.clone()));
            }
        }
        Ok((f, m))
    }
}

fn fold(s: &str) -> String {
    s.to_lowercase()
}

/// Digits with optional sign, decimal and thousands separators.
pub fn is_numeric(surface: &str) -> bool {
    let mut digit = false;
    for c in surface.chars() {
        match c {
            '0'..='9' => digit = true,
            '+' | '-' | '.' | ',' => {}
            _ => return false,
        }
    }
    digit
}
