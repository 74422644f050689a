use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::discriminator::tfidf::{SparseVector, TfIdfVectorizer, DEFAULT_MIN_DF};
use crate::error::{Error, Result};
use crate::text::TokenizedCorpus;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Real,
    Generated,
}

impl Label {
    pub fn target(self) -> f64 {
        match self {
            Label::Real => 0.0,
            Label::Generated => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub features: SparseVector,
    pub label: Label,
    pub split: Split,
    /// Sentence index in the corpus the example came from.
    pub origin: usize,
}

#[derive(Clone, Debug)]
pub struct DiscriminationDataset {
    vectorizer: TfIdfVectorizer,
    train: Vec<Example>,
    test: Vec<Example>,
}

struct Raw {
    tokens: Vec<String>,
    label: Label,
    origin: usize,
}

fn raw(corpus: &TokenizedCorpus, label: Label, order: &[usize]) -> Vec<Raw> {
    order
        .iter()
        .map(|&i| Raw {
            tokens: corpus.surfaces(i).into_iter().map(str::to_owned).collect(),
            label,
            origin: i,
        })
        .collect()
}

pub fn build_dataset(generated: &TokenizedCorpus, real: &TokenizedCorpus, seed: u64) -> Result<DiscriminationDataset> {
    build_dataset_with(generated, real, seed, DEFAULT_MIN_DF)
}

/// Labels, shuffles and halves the data.
///
/// Both classes are cut down to the size `n` of the smaller one. Generated
/// sentences contribute `ceil(n/2)` to train and real ones `floor(n/2)`, so
/// each split is balanced to within one example. The vectorizer only sees
/// the train split.
pub fn build_dataset_with(
    generated: &TokenizedCorpus,
    real: &TokenizedCorpus,
    seed: u64,
    min_df: usize,
) -> Result<DiscriminationDataset> {
    if generated.is_empty() || real.is_empty() {
        return Err(Error::Dataset(format!(
            "need sentences on both sides (generated {}, real {})",
            generated.len(),
            real.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g_idx: Vec<usize> = (0..generated.len()).collect();
    let mut r_idx: Vec<usize> = (0..real.len()).collect();
    g_idx.shuffle(&mut rng);
    r_idx.shuffle(&mut rng);
    let n = g_idx.len().min(r_idx.len());
    let g_cut = n.div_ceil(2);
    let r_cut = n / 2;

    let mut train_raw = raw(generated, Label::Generated, &g_idx[..g_cut]);
    train_raw.extend(raw(real, Label::Real, &r_idx[..r_cut]));
    let mut test_raw = raw(generated, Label::Generated, &g_idx[g_cut..n]);
    test_raw.extend(raw(real, Label::Real, &r_idx[r_cut..n]));
    train_raw.shuffle(&mut rng);
    test_raw.shuffle(&mut rng);

    let docs: Vec<Vec<&str>> = train_raw
        .iter()
        .map(|r| r.tokens.iter().map(String::as_str).collect())
        .collect();
    let vectorizer = TfIdfVectorizer::fit(&docs, min_df);
    let encode = |rows: Vec<Raw>, split: Split| -> Vec<Example> {
        rows.into_iter()
            .map(|r| Example {
                features: vectorizer.transform(&r.tokens),
                label: r.label,
                split,
                origin: r.origin,
            })
            .collect()
    };
    let train = encode(train_raw, Split::Train);
    let test = encode(test_raw, Split::Test);
    Ok(DiscriminationDataset {
        vectorizer,
        train,
        test,
    })
}

impl DiscriminationDataset {
    pub fn from_parts(vectorizer: TfIdfVectorizer, train: Vec<Example>, test: Vec<Example>) -> Self {
        Self {
            vectorizer,
            train,
            test,
        }
    }

    pub fn vectorizer(&self) -> &TfIdfVectorizer {
        &self.vectorizer
    }

    pub fn train(&self) -> &[Example] {
        &self.train
    }

    pub fn test(&self) -> &[Example] {
        &self.test
    }

    pub fn n_features(&self) -> usize {
        self.vectorizer.len()
    }
}

pub fn label_counts(examples: &[Example]) -> (usize, usize) {
    let g = examples.iter().filter(|e| e.label == Label::Generated).count();
    (g, examples.len() - g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::TokenizeMode;

    fn corpus(n: usize, tag: &str) -> TokenizedCorpus {
        let lines: Vec<String> = (0..n).map(|i| format!("{tag} w{} x", i % 5)).collect();
        TokenizedCorpus::from_lines(lines.iter().map(String::as_str), TokenizeMode::Whitespace, tag)
    }

    #[test]
    fn even_split() {
        let ds = build_dataset(&corpus(100, "g"), &corpus(100, "r"), 1).unwrap();
        assert_eq!(ds.train().len(), 100);
        assert_eq!(ds.test().len(), 100);
        assert_eq!(label_counts(ds.train()), (50, 50));
        assert_eq!(label_counts(ds.test()), (50, 50));
    }

    #[test]
    fn uneven_inputs_stay_balanced() {
        let ds = build_dataset(&corpus(101, "g"), &corpus(99, "r"), 1).unwrap();
        let (tg, tr) = label_counts(ds.train());
        let (sg, sr) = label_counts(ds.test());
        assert_eq!((tg, tr, sg, sr), (50, 49, 49, 50));
    }

    #[test]
    fn splits_are_disjoint() {
        let ds = build_dataset(&corpus(40, "g"), &corpus(40, "r"), 9).unwrap();
        for label in [Label::Generated, Label::Real] {
            let tr: Vec<usize> = ds
                .train()
                .iter()
                .filter(|e| e.label == label)
                .map(|e| e.origin)
                .collect();
            assert!(ds
                .test()
                .iter()
                .filter(|e| e.label == label)
                .all(|e| !tr.contains(&e.origin)));
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let a = build_dataset(&corpus(30, "g"), &corpus(30, "r"), 4).unwrap();
        let b = build_dataset(&corpus(30, "g"), &corpus(30, "r"), 4).unwrap();
        assert_eq!(a.train(), b.train());
        assert_eq!(a.test(), b.test());
    }

    #[test]
    fn empty_side_is_an_error() {
        let empty = TokenizedCorpus::from_lines(std::iter::empty(), TokenizeMode::Whitespace, "e");
        assert!(matches!(
            build_dataset(&empty, &corpus(3, "r"), 0),
            Err(Error::Dataset(_))
        ));
    }
}
