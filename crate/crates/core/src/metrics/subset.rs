use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::text::lexicon::{NUMERIC, PUNCTUATION};
use crate::text::{SubsetLexicon, TokenizedCorpus};

pub fn class_count(corpus: &TokenizedCorpus, lexicon: &SubsetLexicon, class: &str) -> Result<u64> {
    let mask = lexicon.mask(corpus.vocab(), class)?;
    Ok(corpus
        .sentences()
        .iter()
        .flat_map(|s| s.iter())
        .filter(|id| mask[id.index()])
        .count() as u64)
}

/// Share of all tokens that belong to `class`.
pub fn subset_frequency(corpus: &TokenizedCorpus, lexicon: &SubsetLexicon, class: &str) -> Result<f64> {
    let count = class_count(corpus, lexicon, class)?;
    let total = corpus.token_count();
    if total == 0 {
        return Err(Error::EmptyCorpus(format!(
            "{} has no tokens; frequency of `{class}` is undefined",
            corpus.label()
        )));
    }
    Ok(count as f64 / total as f64)
}

/// female / (female + male) for a language side; `None` when the corpus
/// holds no gendered pronoun at all.
pub fn female_fraction(corpus: &TokenizedCorpus, lexicon: &SubsetLexicon, side: &str) -> Result<Option<f64>> {
    let (f, m) = lexicon.gendered_classes(side)?;
    let female = class_count(corpus, lexicon, &f)?;
    let male = class_count(corpus, lexicon, &m)?;
    if female + male == 0 {
        Ok(None)
    } else {
        Ok(Some(female as f64 / (female + male) as f64))
    }
}

/// Fraction of sentence pairs whose output shares more than half of its
/// content unigrams with the source. Punctuation and numbers are removed
/// from both sides first; an output with no content token is not a copy.
/// Tokens are compared by surface form, so the two corpora may use
/// different vocabularies.
pub fn copy_rate(source: &TokenizedCorpus, output: &TokenizedCorpus, lexicon: &SubsetLexicon) -> Result<f64> {
    source.ensure_aligned(output)?;
    if source.is_empty() {
        return Err(Error::EmptyCorpus("copy rate over zero sentences".into()));
    }
    let copies = (0..source.len())
        .filter(|&i| is_copy(&source.surfaces(i), &output.surfaces(i), lexicon))
        .count();
    Ok(copies as f64 / source.len() as f64)
}

fn is_content(lexicon: &SubsetLexicon, s: &str) -> bool {
    !lexicon.contains(PUNCTUATION, s) && !lexicon.contains(NUMERIC, s)
}

pub(crate) fn is_copy(src: &[&str], out: &[&str], lexicon: &SubsetLexicon) -> bool {
    let mut src_counts: HashMap<&str, u64> = HashMap::new();
    for &t in src.iter().filter(|t| is_content(lexicon, t)) {
        *src_counts.entry(t).or_insert(0) += 1;
    }
    let mut out_counts: HashMap<&str, u64> = HashMap::new();
    for &t in out.iter().filter(|t| is_content(lexicon, t)) {
        *out_counts.entry(t).or_insert(0) += 1;
    }
    let out_total: u64 = out_counts.values().sum();
    if out_total == 0 {
        return false;
    }
    let shared: u64 = out_counts
        .iter()
        .map(|(t, &c)| c.min(src_counts.get(t).copied().unwrap_or(0)))
        .sum();
    // shared / out_total > 1/2, in integers
    2 * shared > out_total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::TokenizeMode;

    fn corpus(lines: &[&str]) -> TokenizedCorpus {
        TokenizedCorpus::from_lines(lines.iter().copied(), TokenizeMode::Whitespace, "t")
    }

    #[test]
    fn frequency_examples() {
        let lex = SubsetLexicon::builtin();
        let c = corpus(&["she went ."]);
        assert_eq!(subset_frequency(&c, &lex, "punctuation").unwrap(), 1.0 / 3.0);
        assert_eq!(subset_frequency(&c, &lex, "english-female").unwrap(), 1.0 / 3.0);
        assert_eq!(subset_frequency(&c, &lex, "english-male").unwrap(), 0.0);
    }

    #[test]
    fn frequency_errors() {
        let lex = SubsetLexicon::builtin();
        assert!(matches!(
            subset_frequency(&corpus(&["", ""]), &lex, "punctuation"),
            Err(Error::EmptyCorpus(_))
        ));
        assert!(matches!(
            subset_frequency(&corpus(&["a"]), &lex, "klingon-female"),
            Err(Error::UnknownClass(_))
        ));
    }

    #[test]
    fn female_fraction_examples() {
        let lex = SubsetLexicon::builtin();
        let f = |lines: &[&str]| female_fraction(&corpus(lines), &lex, "english").unwrap();
        assert_eq!(f(&["she and he", "her him"]), Some(0.5));
        assert_eq!(f(&["he he his him himself"]), Some(0.0));
        assert_eq!(f(&["no pronouns here"]), None);
        assert_eq!(f(&["She said"]), Some(1.0));
    }

    #[test]
    fn copy_boundaries() {
        let lex = SubsetLexicon::builtin();
        assert!(is_copy(&["a", "b"], &["a", "b"], &lex));
        // exactly 2 of 4 content unigrams shared: not more than half
        assert!(!is_copy(&["a", "b"], &["a", "b", "c", "d"], &lex));
        assert!(is_copy(&["x", "y", ".", "7"], &["x", "!", "3"], &lex));
        assert!(!is_copy(&["x"], &[".", "3"], &lex));
        // multiset intersection clips repeated tokens
        assert!(!is_copy(&["a"], &["a", "a", "b"], &lex));
    }

    #[test]
    fn copy_rate_of_identical_corpora() {
        let lex = SubsetLexicon::builtin();
        let src = corpus(&["ein haus", "zwei", "x y"]);
        let out = corpus(&["ein haus", "two", "x q"]);
        assert_eq!(copy_rate(&src, &src, &lex).unwrap(), 1.0);
        // pair 0 copy, pair 1 not, pair 2 exactly half -> not
        assert_eq!(copy_rate(&src, &out, &lex).unwrap(), 1.0 / 3.0);
        assert!(matches!(
            copy_rate(&src, &corpus(&["a"]), &lex),
            Err(Error::Alignment { .. })
        ));
    }
}
