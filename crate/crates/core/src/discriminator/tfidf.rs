use std::collections::{BTreeMap, BTreeSet};

/// Sparse feature vector: `(feature index, value)` pairs in index order.
pub type SparseVector = Vec<(usize, f64)>;

pub const DEFAULT_MIN_DF: usize = 2;

/// Unigram TF-IDF with smoothed idf `ln((1 + D) / (1 + df)) + 1`, raw term
/// counts and L2-normalized rows.
#[derive(Clone, Debug, PartialEq)]
pub struct TfIdfVectorizer {
    features: BTreeMap<String, usize>,
    idf: Vec<f64>,
    n_documents: usize,
    min_df: usize,
}

impl TfIdfVectorizer {
    pub fn fit<S: AsRef<str>>(documents: &[Vec<S>], min_df: usize) -> Self {
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in documents {
            let uniq: BTreeSet<&str> = doc.iter().map(AsRef::as_ref).collect();
            for t in uniq {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        let d = documents.len() as f64;
        let mut features = BTreeMap::new();
        let mut idf = Vec::new();
        for (term, count) in df.into_iter().filter(|&(_, c)| c >= min_df) {
            features.insert(term.to_owned(), idf.len());
            idf.push(((1.0 + d) / (1.0 + count as f64)).ln() + 1.0);
        }
        Self {
            features,
            idf,
            n_documents: documents.len(),
            min_df,
        }
    }

    pub(crate) fn from_parts(features: Vec<(String, f64)>, n_documents: usize, min_df: usize) -> Self {
        let mut map = BTreeMap::new();
        let mut idf = Vec::with_capacity(features.len());
        for (f, w) in features {
            map.insert(f, idf.len());
            idf.push(w);
        }
        Self {
            features: map,
            idf,
            n_documents,
            min_df,
        }
    }

    pub fn transform<S: AsRef<str>>(&self, document: &[S]) -> SparseVector {
        let mut tf: BTreeMap<usize, f64> = BTreeMap::new();
        for t in document {
            if let Some(&i) = self.features.get(t.as_ref()) {
                *tf.entry(i).or_insert(0.0) += 1.0;
            }
        }
        let mut v: SparseVector = tf.into_iter().map(|(i, c)| (i, c * self.idf[i])).collect();
        let norm = v.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, x) in &mut v {
                *x /= norm;
            }
        }
        v
    }

    pub fn len(&self) -> usize {
        self.idf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idf.is_empty()
    }

    pub fn feature_index(&self, term: &str) -> Option<usize> {
        self.features.get(term).copied()
    }

    pub fn idf(&self, index: usize) -> f64 {
        self.idf[index]
    }

    /// Features in index order.
    pub fn features(&self) -> impl Iterator<Item = (&str, f64)> {
        // index order coincides with lexicographic order by construction
        self.features.iter().map(|(f, &i)| (f.as_str(), self.idf[i]))
    }

    pub fn n_documents(&self) -> usize {
        self.n_documents
    }

    pub fn min_df(&self) -> usize {
        self.min_df
    }
}
