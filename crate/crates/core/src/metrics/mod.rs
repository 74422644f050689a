//! Distributional similarity panel: n-gram and length histograms with L1
//! distance, token-subset frequencies, copy rate, BLEU and bucketed analyses.

pub mod bleu;
pub mod buckets;
pub mod histogram;
pub mod subset;

pub use bleu::{corpus_bleu, sentence_bleu, BleuScore, BleuStats, MAX_ORDER};
pub use buckets::{
    bleu_by_length, sentence_bleu_histogram, word_f1_by_frequency, word_f1_table, Bucket, BucketedReport,
    SentenceBleuReport, WordF1, DEFAULT_FREQUENCY_EDGES, DEFAULT_LENGTH_EDGES,
};
pub use histogram::{
    l1_distance, length_histogram, length_l1, length_partition_baseline, ngram_histogram, ngram_l1, partition_baseline,
    Histogram, HistogramKind, LengthHistogram, NgramHistogram, NormalizedHistogram,
};
pub use subset::{class_count, copy_rate, female_fraction, subset_frequency};
