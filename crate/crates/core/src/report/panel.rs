use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::discriminator::{build_dataset_with, evaluate, train, DiscriminationReport, Hyperparams, DEFAULT_MIN_DF};
use crate::error::{Error, Result};
use crate::gender::{gender_report, GenderReport};
use crate::metrics::{
    bleu_by_length, copy_rate, corpus_bleu, female_fraction, length_l1, length_partition_baseline, ngram_l1,
    partition_baseline, sentence_bleu_histogram, subset_frequency, word_f1_by_frequency, BleuScore, Bucket,
    BucketedReport, DEFAULT_FREQUENCY_EDGES, DEFAULT_LENGTH_EDGES,
};
use crate::text::lexicon::PUNCTUATION;
use crate::text::{partition_indices, ParallelCorpus, SubsetLexicon, TokenizeMode};

pub const PANEL_SCHEMA: &str = "divlab.panel/1";

/// Why a metric has no value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Absence {
    /// A corpus or histogram involved has no items.
    EmptyCorpus,
    /// Too few sentences to split into two parts.
    TooFewSentences,
    /// Not enough data for the discriminator to train.
    InsufficientData,
    /// Neither corpus contains a gendered pronoun.
    NoGenderedTokens,
    /// The reference has no token of the class, so a ratio is undefined.
    ReferenceLacksClass,
    /// The metric does not apply to this row.
    NotApplicable,
}

/// A value, or `{"absent": reason}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Metric<T> {
    Value(T),
    Absent { absent: Absence },
}

impl<T> Metric<T> {
    pub fn absent(reason: Absence) -> Self {
        Metric::Absent { absent: reason }
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            Metric::Value(v) => Some(v),
            Metric::Absent { .. } => None,
        }
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Metric<U> {
        match self {
            Metric::Value(v) => Metric::Value(f(v)),
            Metric::Absent { absent } => Metric::Absent { absent },
        }
    }

    fn from_option(v: Option<T>, reason: Absence) -> Self {
        v.map_or(Metric::absent(reason), Metric::Value)
    }
}

/// Data-shape failures become absences; everything else propagates.
fn soft<T>(r: Result<T>) -> Result<Metric<T>> {
    match r {
        Ok(v) => Ok(Metric::Value(v)),
        Err(Error::EmptyCorpus(_)) => Ok(Metric::absent(Absence::EmptyCorpus)),
        Err(Error::DegeneratePartition { .. }) => Ok(Metric::absent(Absence::TooFewSentences)),
        Err(Error::Dataset(_) | Error::Training(_)) => Ok(Metric::absent(Absence::InsufficientData)),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PanelConfig {
    pub seed: u64,
    pub orders: Vec<usize>,
    pub side: String,
    pub tokenize: TokenizeMode,
    pub frequency_edges: Vec<u64>,
    pub length_edges: Vec<u64>,
    pub discriminator: Hyperparams,
    pub min_df: usize,
    pub lexicon_sha256: String,
}

impl PanelConfig {
    pub fn new(seed: u64, lexicon: &SubsetLexicon) -> Self {
        Self {
            seed,
            orders: vec![1, 5],
            side: "english".into(),
            tokenize: TokenizeMode::Whitespace,
            frequency_edges: DEFAULT_FREQUENCY_EDGES.to_vec(),
            length_edges: DEFAULT_LENGTH_EDGES.to_vec(),
            discriminator: Hyperparams {
                seed,
                ..Default::default()
            },
            min_df: DEFAULT_MIN_DF,
            lexicon_sha256: lexicon_digest(lexicon),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.orders.is_empty() || self.orders.contains(&0) {
            return Err(Error::Config(format!(
                "n-gram orders must be positive, got {:?}",
                self.orders
            )));
        }
        Ok(())
    }

    /// SHA-256 of the compact JSON serialization.
    pub fn digest(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Digest of the lexicon's classes and forms, in sorted order.
pub fn lexicon_digest(lexicon: &SubsetLexicon) -> String {
    let mut text = String::new();
    for name in lexicon.class_names() {
        let forms: Vec<&str> = lexicon.class(name).into_iter().flatten().map(String::as_str).collect();
        text.push_str(&format!("{name}\t{}\n", forms.join(" ")));
    }
    sha256_hex(text.as_bytes())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InputInfo {
    pub role: String,
    pub path: Option<String>,
    pub sentences: usize,
    pub sha256: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunMetadata {
    pub inputs: Vec<InputInfo>,
    pub config: PanelConfig,
    pub config_digest: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderMetric {
    pub order: usize,
    pub value: Metric<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SentenceBleuSummary {
    pub mean: f64,
    pub variance: f64,
    pub at_least_30: f64,
    pub histogram: Vec<Bucket>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Baselines {
    pub ngram_l1: Vec<OrderMetric>,
    pub length_l1: Metric<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticPanelReport {
    pub schema_version: String,
    pub metadata: RunMetadata,
    pub sentences: usize,
    pub ngram_l1: Vec<OrderMetric>,
    pub length_l1: Metric<f64>,
    /// Output punctuation frequency over reference punctuation frequency.
    pub punctuation_ratio: Metric<f64>,
    pub female_fraction: Metric<f64>,
    pub reference_female_fraction: Metric<f64>,
    pub copy_rate: Metric<f64>,
    pub bleu: Metric<BleuScore>,
    pub sentence_bleu: Metric<SentenceBleuSummary>,
    pub word_f1_by_frequency: Metric<BucketedReport>,
    pub bleu_by_length: Metric<BucketedReport>,
    pub gender: Metric<GenderReport>,
    pub discriminator: Metric<DiscriminationReport>,
    pub baselines: Baselines,
}

/// Partition baselines of the (first) reference under the config seed.
pub fn baselines(corpus: &ParallelCorpus, config: &PanelConfig) -> Result<Baselines> {
    let reference = corpus.reference();
    let ngram_l1 = config
        .orders
        .iter()
        .map(|&n| {
            Ok(OrderMetric {
                order: n,
                value: soft(partition_baseline(reference, n, config.seed))?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Baselines {
        ngram_l1,
        length_l1: soft(length_partition_baseline(reference, config.seed))?,
    })
}

/// Generated sentences from one seeded half of the hypothesis against real
/// sentences from the other half of the reference, so no pair contributes
/// both of its sides.
pub fn panel_discriminator(corpus: &ParallelCorpus, config: &PanelConfig) -> Result<Metric<DiscriminationReport>> {
    let hyp = corpus
        .hypothesis()
        .ok_or_else(|| Error::Config("panel needs a hypothesis".into()))?;
    let (a, b) = match soft(partition_indices(corpus.len(), 0.5, config.seed))? {
        Metric::Value(split) => split,
        Metric::Absent { absent } => return Ok(Metric::absent(absent)),
    };
    let generated = hyp.select(&a);
    let real = corpus.reference().select(&b);
    let run = || -> Result<DiscriminationReport> {
        let ds = build_dataset_with(&generated, &real, config.seed, config.min_df)?;
        let model = train(&ds, config.discriminator)?;
        evaluate(&model, &ds)
    };
    soft(run())
}

pub fn build_panel(
    corpus: &ParallelCorpus,
    lexicon: &SubsetLexicon,
    config: &PanelConfig,
    inputs: Vec<InputInfo>,
) -> Result<DiagnosticPanelReport> {
    config.validate()?;
    let hyp = corpus
        .hypothesis()
        .ok_or_else(|| Error::Config("panel needs a hypothesis".into()))?;
    let reference = corpus.reference();
    let refs = corpus.references();

    let ngram = config
        .orders
        .iter()
        .map(|&n| {
            Ok(OrderMetric {
                order: n,
                value: soft(ngram_l1(hyp, reference, n))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let punctuation_ratio = match (
        soft(subset_frequency(hyp, lexicon, PUNCTUATION))?,
        soft(subset_frequency(reference, lexicon, PUNCTUATION))?,
    ) {
        (Metric::Value(_), Metric::Value(0.0)) => Metric::absent(Absence::ReferenceLacksClass),
        (Metric::Value(h), Metric::Value(r)) => Metric::Value(h / r),
        (Metric::Absent { absent }, _) | (_, Metric::Absent { absent }) => Metric::absent(absent),
    };

    let sentence_bleu = soft(sentence_bleu_histogram(hyp, refs))?.map(|r| SentenceBleuSummary {
        mean: r.mean,
        variance: r.variance,
        at_least_30: r.at_least_30,
        histogram: r.bins,
    });

    Ok(DiagnosticPanelReport {
        schema_version: PANEL_SCHEMA.into(),
        metadata: RunMetadata {
            inputs,
            config: config.clone(),
            config_digest: config.digest(),
        },
        sentences: corpus.len(),
        ngram_l1: ngram,
        length_l1: soft(length_l1(hyp, reference))?,
        punctuation_ratio,
        female_fraction: Metric::from_option(female_fraction(hyp, lexicon, &config.side)?, Absence::NoGenderedTokens),
        reference_female_fraction: Metric::from_option(
            female_fraction(reference, lexicon, &config.side)?,
            Absence::NoGenderedTokens,
        ),
        copy_rate: soft(copy_rate(corpus.source(), hyp, lexicon))?,
        bleu: soft(corpus_bleu(hyp, refs))?,
        sentence_bleu,
        word_f1_by_frequency: soft(word_f1_by_frequency(hyp, reference, &config.frequency_edges))?,
        bleu_by_length: soft(bleu_by_length(hyp, refs, &config.length_edges))?,
        gender: soft(gender_report(hyp, reference, lexicon, &config.side))?,
        discriminator: panel_discriminator(corpus, config)?,
        baselines: baselines(corpus, config)?,
    })
}
