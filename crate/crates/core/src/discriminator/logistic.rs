use serde::{Deserialize, Serialize};

use crate::discriminator::dataset::{label_counts, DiscriminationDataset, Example, Label};
use crate::discriminator::tfidf::{SparseVector, TfIdfVectorizer};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub l2: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            learning_rate: 1.0,
            l2: 1e-4,
            epochs: 500,
            seed: 0,
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn dot(w: &[f64], x: &SparseVector) -> f64 {
    x.iter().map(|&(i, v)| w[i] * v).sum()
}

/// Mean binary cross-entropy plus `l2 / 2 * |w|^2` (bias unregularized),
/// with its gradient in `(weights, bias)`.
pub fn objective(weights: &[f64], bias: f64, examples: &[Example], l2: f64) -> (f64, Vec<f64>, f64) {
    let mut loss = 0.0;
    let mut grad = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    let n = examples.len().max(1) as f64;
    for e in examples {
        let z = dot(weights, &e.features) + bias;
        let y = e.label.target();
        loss += softplus(z) - y * z;
        let r = sigmoid(z) - y;
        for &(i, v) in &e.features {
            grad[i] += r * v;
        }
        grad_b += r;
    }
    loss /= n;
    grad_b /= n;
    let mut sq = 0.0;
    for (g, &w) in grad.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
        sq += w * w;
    }
    (loss + 0.5 * l2 * sq, grad, grad_b)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearDiscriminator {
    weights: Vec<f64>,
    bias: f64,
    trained: bool,
    hyperparams: Hyperparams,
}

impl LinearDiscriminator {
    /// Untrained model with zero weights.
    pub fn new(n_features: usize, hyperparams: Hyperparams) -> Self {
        Self {
            weights: vec![0.0; n_features],
            bias: 0.0,
            trained: false,
            hyperparams,
        }
    }

    pub(crate) fn from_parts(weights: Vec<f64>, bias: f64, trained: bool, hyperparams: Hyperparams) -> Self {
        Self {
            weights,
            bias,
            trained,
            hyperparams,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hyperparams
    }

    pub fn score(&self, x: &SparseVector) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    pub fn probability(&self, x: &SparseVector) -> f64 {
        sigmoid(self.score(x))
    }

    /// A score of exactly zero is labelled real.
    pub fn predict(&self, x: &SparseVector) -> Label {
        if self.score(x) > 0.0 {
            Label::Generated
        } else {
            Label::Real
        }
    }

    pub fn loss(&self, examples: &[Example]) -> f64 {
        objective(&self.weights, self.bias, examples, self.hyperparams.l2).0
    }
}

/// Full-batch gradient descent from zero weights, recording the training
/// objective before each epoch and after the last.
pub fn train_with_trace(
    dataset: &DiscriminationDataset,
    hyperparams: Hyperparams,
) -> Result<(LinearDiscriminator, Vec<f64>)> {
    let (g, r) = label_counts(dataset.train());
    if g == 0 || r == 0 {
        return Err(Error::Training(format!(
            "training split needs both labels (generated {g}, real {r})"
        )));
    }
    let lr = hyperparams.learning_rate;
    if lr.is_nan() || lr <= 0.0 || hyperparams.l2.is_nan() || hyperparams.l2 < 0.0 {
        return Err(Error::Config(format!("invalid hyperparameters {hyperparams:?}")));
    }
    let mut model = LinearDiscriminator::new(dataset.n_features(), hyperparams);
    let mut trace = Vec::with_capacity(hyperparams.epochs + 1);
    for _ in 0..hyperparams.epochs {
        let (loss, grad, grad_b) = objective(&model.weights, model.bias, dataset.train(), hyperparams.l2);
        trace.push(loss);
        for (w, g) in model.weights.iter_mut().zip(&grad) {
            *w -= lr * g;
        }
        model.bias -= lr * grad_b;
    }
    trace.push(model.loss(dataset.train()));
    model.trained = true;
    Ok((model, trace))
}

pub fn train(dataset: &DiscriminationDataset, hyperparams: Hyperparams) -> Result<LinearDiscriminator> {
    train_with_trace(dataset, hyperparams).map(|(m, _)| m)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscriminationReport {
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub test_size: usize,
    /// 95% Wilson score interval for the test accuracy.
    pub test_ci_low: f64,
    pub test_ci_high: f64,
    pub generated_precision: Option<f64>,
    pub generated_recall: Option<f64>,
    pub real_precision: Option<f64>,
    pub real_recall: Option<f64>,
}

/// 95% Wilson score interval for `successes` out of `n`.
pub fn wilson_interval(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    const Z: f64 = 1.959_963_984_540_054;
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn accuracy(model: &LinearDiscriminator, examples: &[Example]) -> f64 {
    if examples.is_empty() {
        return 0.0;
    }
    let ok = examples
        .iter()
        .filter(|e| model.predict(&e.features) == e.label)
        .count();
    ok as f64 / examples.len() as f64
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn evaluate(model: &LinearDiscriminator, dataset: &DiscriminationDataset) -> Result<DiscriminationReport> {
    if !model.trained {
        return Err(Error::Untrained);
    }
    if model.weights.len() != dataset.n_features() {
        return Err(Error::Config(format!(
            "model has {} features, dataset {}",
            model.weights.len(),
            dataset.n_features()
        )));
    }
    let test = dataset.test();
    let mut tp = 0; // generated predicted generated
    let mut tn = 0;
    let mut fp = 0;
    let mut fneg = 0;
    for e in test {
        match (model.predict(&e.features), e.label) {
            (Label::Generated, Label::Generated) => tp += 1,
            (Label::Real, Label::Real) => tn += 1,
            (Label::Generated, Label::Real) => fp += 1,
            (Label::Real, Label::Generated) => fneg += 1,
        }
    }
    let (low, high) = wilson_interval(tp + tn, test.len());
    Ok(DiscriminationReport {
        train_accuracy: accuracy(model, dataset.train()),
        test_accuracy: if test.is_empty() {
            0.0
        } else {
            (tp + tn) as f64 / test.len() as f64
        },
        test_size: test.len(),
        test_ci_low: low,
        test_ci_high: high,
        generated_precision: ratio(tp, tp + fp),
        generated_recall: ratio(tp, tp + fneg),
        real_precision: ratio(tn, tn + fneg),
        real_recall: ratio(tn, tn + fp),
    })
}

const MODEL_HEADER: &str = "divlab-discriminator v1";

/// Plain-text model file: a header, `key<TAB>value` settings, then one
/// `feature<TAB>idf<TAB>weight` row per feature in index order.
pub fn write_model(vectorizer: &TfIdfVectorizer, model: &LinearDiscriminator) -> String {
    let h = &model.hyperparams;
    let mut out = String::new();
    out.push_str(MODEL_HEADER);
    out.push('\n');
    for (k, v) in [
        ("learning_rate", h.learning_rate.to_string()),
        ("l2", h.l2.to_string()),
        ("epochs", h.epochs.to_string()),
        ("seed", h.seed.to_string()),
        ("min_df", vectorizer.min_df().to_string()),
        ("documents", vectorizer.n_documents().to_string()),
        ("trained", model.trained.to_string()),
        ("bias", model.bias.to_string()),
        ("features", vectorizer.len().to_string()),
    ] {
        out.push_str(&format!("{k}\t{v}\n"));
    }
    for ((f, idf), w) in vectorizer.features().zip(&model.weights) {
        out.push_str(&format!("{f}\t{idf}\t{w}\n"));
    }
    out
}

pub fn read_model(text: &str) -> Result<(TfIdfVectorizer, LinearDiscriminator)> {
    let bad = |line: usize, message: String| Error::Format {
        what: "discriminator model",
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim_end() == MODEL_HEADER => {}
        _ => return Err(bad(1, format!("expected header `{MODEL_HEADER}`"))),
    }
    let mut settings = std::collections::HashMap::new();
    for key in [
        "learning_rate",
        "l2",
        "epochs",
        "seed",
        "min_df",
        "documents",
        "trained",
        "bias",
        "features",
    ] {
        let (i, l) = lines.next().ok_or_else(|| bad(0, format!("missing `{key}`")))?;
        let (k, v) = l
            .split_once('\t')
            .ok_or_else(|| bad(i + 1, "expected key<TAB>value".into()))?;
        if k != key {
            return Err(bad(i + 1, format!("expected `{key}`, found `{k}`")));
        }
        settings.insert(key, (i + 1, v.to_owned()));
    }
    fn num<T: std::str::FromStr>(s: &std::collections::HashMap<&str, (usize, String)>, key: &str) -> Result<T> {
        let (line, v) = &s[key];
        v.parse().map_err(|_| Error::Format {
            what: "discriminator model",
            line: *line,
            message: format!("bad value for `{key}`"),
        })
    }
    let hyper = Hyperparams {
        learning_rate: num(&settings, "learning_rate")?,
        l2: num(&settings, "l2")?,
        epochs: num(&settings, "epochs")?,
        seed: num(&settings, "seed")?,
    };
    let n: usize = num(&settings, "features")?;
    let mut features = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (i, l) in lines.filter(|(_, l)| !l.is_empty()) {
        let parts: Vec<&str> = l.split('\t').collect();
        if parts.len() != 3 {
            return Err(bad(i + 1, "expected feature<TAB>idf<TAB>weight".into()));
        }
        let idf: f64 = parts[1].parse().map_err(|_| bad(i + 1, "bad idf".into()))?;
        let w: f64 = parts[2].parse().map_err(|_| bad(i + 1, "bad weight".into()))?;
        features.push((parts[0].to_owned(), idf));
        weights.push(w);
    }
    if features.len() != n {
        return Err(bad(0, format!("expected {n} features, found {}", features.len())));
    }
    let vectorizer = TfIdfVectorizer::from_parts(features, num(&settings, "documents")?, num(&settings, "min_df")?);
    let model = LinearDiscriminator::from_parts(weights, num(&settings, "bias")?, num(&settings, "trained")?, hyper);
    Ok((vectorizer, model))
}
