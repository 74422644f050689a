//! Pronoun recall and misgendering between a hypothesis and a reference.
//!
//! Counts are clipped per sentence: a hypothesis pronoun only matches a
//! reference pronoun of the same form (or class) in the aligned sentence.
//! A female-to-male replacement in a sentence requires the hypothesis to both
//! lose female pronouns and gain male ones relative to the reference.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::Result;
use crate::metrics::female_fraction;
use crate::text::{SubsetLexicon, TokenizedCorpus};

fn folded_count(corpus: &TokenizedCorpus, i: usize, form: &str) -> u64 {
    corpus.surfaces(i).iter().filter(|s| s.to_lowercase() == form).count() as u64
}

/// Clipped recall of one surface form (case-folded). `None` when the form
/// never occurs in the reference.
pub fn token_recall(hyp: &TokenizedCorpus, reference: &TokenizedCorpus, token: &str) -> Result<Option<f64>> {
    hyp.ensure_aligned(reference)?;
    let form = token.to_lowercase();
    let (mut matched, mut total) = (0u64, 0u64);
    for i in 0..reference.len() {
        let r = folded_count(reference, i, &form);
        if r == 0 {
            continue;
        }
        total += r;
        matched += r.min(folded_count(hyp, i, &form));
    }
    Ok((total > 0).then(|| matched as f64 / total as f64))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PronounConfusion {
    /// Female pronoun occurrences in the reference.
    pub female_ref_total: u64,
    pub male_ref_total: u64,
    /// Reference sentences containing at least one female pronoun.
    pub female_ref_sentences: u64,
    pub male_ref_sentences: u64,
    pub female_matched: u64,
    pub male_matched: u64,
    /// Reference-female sentences where female pronouns were dropped and
    /// male ones added.
    pub female_to_male: u64,
    pub male_to_female: u64,
    /// Occurrence-weighted events: sum of `min(fr - fh, mh - mr)`.
    pub female_to_male_tokens: u64,
    pub male_to_female_tokens: u64,
}

fn replacement(lost_from: u64, lost_to: u64, gained_from: u64, gained_to: u64) -> u64 {
    if lost_to < lost_from && gained_to > gained_from {
        (lost_from - lost_to).min(gained_to - gained_from)
    } else {
        0
    }
}

pub fn misgender_matrix(
    hyp: &TokenizedCorpus,
    reference: &TokenizedCorpus,
    lexicon: &SubsetLexicon,
    side: &str,
) -> Result<PronounConfusion> {
    hyp.ensure_aligned(reference)?;
    let (f_class, m_class) = lexicon.gendered_classes(side)?;
    let count = |c: &TokenizedCorpus, i: usize, class: &str| {
        c.surfaces(i).iter().filter(|s| lexicon.contains(class, s)).count() as u64
    };
    let mut out = PronounConfusion::default();
    for i in 0..reference.len() {
        let (fr, mr) = (count(reference, i, &f_class), count(reference, i, &m_class));
        let (fh, mh) = (count(hyp, i, &f_class), count(hyp, i, &m_class));
        out.female_ref_total += fr;
        out.male_ref_total += mr;
        out.female_ref_sentences += u64::from(fr > 0);
        out.male_ref_sentences += u64::from(mr > 0);
        out.female_matched += fr.min(fh);
        out.male_matched += mr.min(mh);
        let f2m = replacement(fr, fh, mr, mh);
        let m2f = replacement(mr, mh, fr, fh);
        out.female_to_male += u64::from(f2m > 0);
        out.male_to_female += u64::from(m2f > 0);
        out.female_to_male_tokens += f2m;
        out.male_to_female_tokens += m2f;
    }
    Ok(out)
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl PronounConfusion {
    pub fn female_recall(&self) -> Option<f64> {
        ratio(self.female_matched, self.female_ref_total)
    }

    pub fn male_recall(&self) -> Option<f64> {
        ratio(self.male_matched, self.male_ref_total)
    }

    /// Replacement sentences over reference sentences with a female pronoun.
    pub fn female_to_male_rate(&self) -> Option<f64> {
        ratio(self.female_to_male, self.female_ref_sentences)
    }

    pub fn male_to_female_rate(&self) -> Option<f64> {
        ratio(self.male_to_female, self.male_ref_sentences)
    }

    /// Replaced occurrences over female reference occurrences.
    pub fn female_to_male_token_rate(&self) -> Option<f64> {
        ratio(self.female_to_male_tokens, self.female_ref_total)
    }

    pub fn male_to_female_token_rate(&self) -> Option<f64> {
        ratio(self.male_to_female_tokens, self.male_ref_total)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenderReport {
    pub side: String,
    pub token_recall: BTreeMap<String, Option<f64>>,
    pub female_recall: Option<f64>,
    pub male_recall: Option<f64>,
    pub female_to_male_rate: Option<f64>,
    pub male_to_female_rate: Option<f64>,
    pub female_to_male_token_rate: Option<f64>,
    pub male_to_female_token_rate: Option<f64>,
    pub hypothesis_female_fraction: Option<f64>,
    pub reference_female_fraction: Option<f64>,
    pub confusion: PronounConfusion,
}

pub fn gender_report(
    hyp: &TokenizedCorpus,
    reference: &TokenizedCorpus,
    lexicon: &SubsetLexicon,
    side: &str,
) -> Result<GenderReport> {
    let confusion = misgender_matrix(hyp, reference, lexicon, side)?;
    let (f_class, m_class) = lexicon.gendered_classes(side)?;
    let mut recalls = BTreeMap::new();
    for class in [&f_class, &m_class] {
        for form in lexicon.class(class).into_iter().flatten() {
            recalls.insert(form.clone(), token_recall(hyp, reference, form)?);
        }
    }
    Ok(GenderReport {
        side: side.to_owned(),
        token_recall: recalls,
        female_recall: confusion.female_recall(),
        male_recall: confusion.male_recall(),
        female_to_male_rate: confusion.female_to_male_rate(),
        male_to_female_rate: confusion.male_to_female_rate(),
        female_to_male_token_rate: confusion.female_to_male_token_rate(),
        male_to_female_token_rate: confusion.male_to_female_token_rate(),
        hypothesis_female_fraction: female_fraction(hyp, lexicon, side)?,
        reference_female_fraction: female_fraction(reference, lexicon, side)?,
        confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{CorpusBuilder, TokenizeMode};
    use std::sync::Arc;

    fn pair(hyp: &[&str], reference: &[&str]) -> (TokenizedCorpus, TokenizedCorpus) {
        let mut b = CorpusBuilder::new(TokenizeMode::Whitespace);
        let h = b.add_lines(hyp.iter().copied());
        let r = b.add_lines(reference.iter().copied());
        let v = b.finish();
        (
            TokenizedCorpus::new(Arc::clone(&v), h, "hyp"),
            TokenizedCorpus::new(v, r, "ref"),
        )
    }

    #[test]
    fn recall_identity_and_clipping() {
        let (h, r) = pair(&["she went"], &["she went"]);
        assert_eq!(token_recall(&h, &r, "she").unwrap(), Some(1.0));
        let (h, r) = pair(&["she said it"], &["she said she"]);
        assert_eq!(token_recall(&h, &r, "she").unwrap(), Some(0.5));
        assert_eq!(token_recall(&h, &r, "her").unwrap(), None);
    }

    #[test]
    fn recall_is_case_folded() {
        let (h, r) = pair(&["she went"], &["She went"]);
        assert_eq!(token_recall(&h, &r, "she").unwrap(), Some(1.0));
    }

    #[test]
    fn simple_replacement() {
        let lex = SubsetLexicon::builtin();
        let (h, r) = pair(&["he went"], &["she went"]);
        let m = misgender_matrix(&h, &r, &lex, "english").unwrap();
        assert_eq!(m.female_to_male, 1);
        assert_eq!(m.female_matched, 0);
        assert_eq!(m.male_to_female, 0);
    }

    #[test]
    fn extra_male_without_female_loss_is_not_an_event() {
        let lex = SubsetLexicon::builtin();
        let (h, r) = pair(&["he went he"], &["he went"]);
        let m = misgender_matrix(&h, &r, &lex, "english").unwrap();
        assert_eq!(
            m,
            PronounConfusion {
                male_ref_total: 1,
                male_ref_sentences: 1,
                male_matched: 1,
                ..Default::default()
            }
        );
    }

    #[test]
    fn token_weighted_events() {
        let lex = SubsetLexicon::builtin();
        let (h, r) = pair(&["he saw him"], &["she saw her"]);
        let m = misgender_matrix(&h, &r, &lex, "english").unwrap();
        assert_eq!(m.female_to_male, 1);
        assert_eq!(m.female_to_male_tokens, 2);
        assert_eq!(m.female_to_male_rate(), Some(1.0));
        assert_eq!(m.female_to_male_token_rate(), Some(1.0));
    }

    #[test]
    fn identical_report() {
        let lex = SubsetLexicon::builtin();
        let lines = ["she went home", "he saw her", "they left"];
        let (h, r) = pair(&lines, &lines);
        let rep = gender_report(&h, &r, &lex, "english").unwrap();
        assert_eq!(rep.female_recall, Some(1.0));
        assert_eq!(rep.male_recall, Some(1.0));
        assert_eq!(rep.female_to_male_rate, Some(0.0));
        assert_eq!(rep.male_to_female_rate, Some(0.0));
        assert_eq!(rep.token_recall["she"], Some(1.0));
        assert_eq!(rep.token_recall["hers"], None);
        assert_eq!(rep.hypothesis_female_fraction, rep.reference_female_fraction);
    }

    #[test]
    fn all_male_hypothesis() {
        let lex = SubsetLexicon::builtin();
        let (h, r) = pair(&["he went", "he went"], &["she went", "he went"]);
        let rep = gender_report(&h, &r, &lex, "english").unwrap();
        assert_eq!(rep.female_recall, Some(0.0));
        assert_eq!(rep.male_to_female_rate, Some(0.0));
        assert_eq!(rep.female_to_male_rate, Some(1.0));
        assert_eq!(rep.hypothesis_female_fraction, Some(0.0));
    }
}
