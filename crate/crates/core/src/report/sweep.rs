use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;

use crate::decoding::{context_key, decode_corpus, DecodeConfig, DecodeStrategy, SequenceModel};
use crate::error::{Error, Result};
use crate::report::panel::{baselines, build_panel, Absence, DiagnosticPanelReport, InputInfo, Metric, PanelConfig};
use crate::text::{parallel_from_lines, tokenize, SubsetLexicon};

pub const SWEEP_SCHEMA: &str = "divlab.sweep/1";

/// `T=0,0.5,1.0;B=1,5,10`. Temperatures must lie in `[0, 1]` and widths be
/// at least 1; settings must be unique.
pub fn parse_grid(spec: &str) -> Result<Vec<DecodeStrategy>> {
    let mut grid = Vec::new();
    for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, values) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("grid part `{part}` lacks `=`")))?;
        for v in values.split(',').map(str::trim) {
            let s = match key.trim() {
                "T" | "t" => {
                    let t: f64 = v.parse().map_err(|_| Error::Config(format!("bad temperature `{v}`")))?;
                    if !(0.0..=1.0).contains(&t) {
                        return Err(Error::Config(format!("temperature {t} outside [0, 1]")));
                    }
                    DecodeStrategy::Sample { temperature: t }
                }
                "B" | "b" => {
                    let w: usize = v.parse().map_err(|_| Error::Config(format!("bad beam width `{v}`")))?;
                    DecodeStrategy::Beam { width: w }
                }
                other => return Err(Error::Config(format!("unknown grid key `{other}`"))),
            };
            s.validate()?;
            grid.push(s);
        }
    }
    validate_grid(&grid)?;
    Ok(grid)
}

/// Temperatures 0, 0.1, ..., 1.0 and beam widths 1, 2, 5, 10.
pub fn default_grid() -> Vec<DecodeStrategy> {
    (0..=10)
        .map(|i| DecodeStrategy::Sample {
            temperature: f64::from(i) / 10.0,
        })
        .chain([1, 2, 5, 10].map(|width| DecodeStrategy::Beam { width }))
        .collect()
}

fn setting(s: &DecodeStrategy) -> (&'static str, Option<f64>) {
    match *s {
        DecodeStrategy::Sample { temperature } => ("sample", Some(temperature)),
        DecodeStrategy::Greedy => ("greedy", None),
        DecodeStrategy::Beam { width } => ("beam", Some(width as f64)),
    }
}

fn validate_grid(grid: &[DecodeStrategy]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("empty grid".into()));
    }
    let mut seen = BTreeSet::new();
    for s in grid {
        s.validate()?;
        let (name, p) = setting(s);
        if !seen.insert((name, p.map(f64::to_bits))) {
            return Err(Error::Config(format!("duplicate setting {name} {p:?}")));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub strategy: String,
    pub parameter: Option<f64>,
    pub baseline: bool,
    /// Aligned with [`SweepTable::columns`].
    pub values: Vec<Metric<f64>>,
    pub panel: Option<DiagnosticPanelReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepMetadata {
    pub model: String,
    pub max_len: usize,
    pub grid: Vec<DecodeStrategy>,
    pub inputs: Vec<InputInfo>,
    pub config: PanelConfig,
    pub config_digest: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepTable {
    pub schema_version: String,
    pub metadata: SweepMetadata,
    pub columns: Vec<String>,
    pub rows: Vec<SweepRow>,
}

pub fn panel_columns(orders: &[usize]) -> Vec<String> {
    let mut cols: Vec<String> = orders.iter().map(|n| format!("l1_{n}")).collect();
    cols.extend(
        [
            "length_l1",
            "punctuation_ratio",
            "female_fraction",
            "reference_female_fraction",
            "copy_rate",
            "bleu",
            "sentence_bleu_mean",
            "sentence_bleu_variance",
            "female_recall",
            "male_recall",
            "female_to_male_rate",
            "male_to_female_rate",
            "discriminator_train_accuracy",
            "discriminator_test_accuracy",
        ]
        .map(String::from),
    );
    cols
}

fn nested<T>(m: &Metric<T>, f: impl FnOnce(&T) -> Option<f64>, reason: Absence) -> Metric<f64> {
    match m {
        Metric::Value(v) => f(v).map_or(Metric::absent(reason), Metric::Value),
        Metric::Absent { absent } => Metric::absent(*absent),
    }
}

/// Flat values for [`panel_columns`].
pub fn panel_values(p: &DiagnosticPanelReport) -> Vec<Metric<f64>> {
    let mut v: Vec<Metric<f64>> = p.ngram_l1.iter().map(|o| o.value.clone()).collect();
    let g = |f: fn(&crate::gender::GenderReport) -> Option<f64>| nested(&p.gender, f, Absence::NoGenderedTokens);
    v.extend([
        p.length_l1.clone(),
        p.punctuation_ratio.clone(),
        p.female_fraction.clone(),
        p.reference_female_fraction.clone(),
        p.copy_rate.clone(),
        p.bleu.clone().map(|b| b.score),
        p.sentence_bleu.clone().map(|s| s.mean),
        p.sentence_bleu.clone().map(|s| s.variance),
        g(|r| r.female_recall),
        g(|r| r.male_recall),
        g(|r| r.female_to_male_rate),
        g(|r| r.male_to_female_rate),
        p.discriminator.clone().map(|d| d.train_accuracy),
        p.discriminator.clone().map(|d| d.test_accuracy),
    ]);
    v
}

pub struct SweepOutcome {
    pub table: SweepTable,
    /// Decoded lines per grid setting, in grid order.
    pub outputs: Vec<(DecodeStrategy, Vec<String>)>,
}

/// Decodes every source under every grid setting and scores each output
/// against the references. One decode per setting; the baseline row holds
/// the reference partition baselines and the reference female fraction.
#[allow(clippy::too_many_arguments)]
pub fn run_sweep(
    model: &dyn SequenceModel,
    model_label: &str,
    source_lines: &[String],
    reference_lines: &[String],
    grid: &[DecodeStrategy],
    max_len: usize,
    lexicon: &SubsetLexicon,
    config: &PanelConfig,
    inputs: Vec<InputInfo>,
) -> Result<SweepOutcome> {
    validate_grid(grid)?;
    config.validate()?;
    if source_lines.len() != reference_lines.len() {
        return Err(Error::Alignment {
            left: "source".into(),
            left_count: source_lines.len(),
            right: "reference".into(),
            right_count: reference_lines.len(),
        });
    }
    let contexts: Vec<String> = source_lines
        .iter()
        .map(|l| context_key(&tokenize(l, config.tokenize)))
        .collect();
    let columns = panel_columns(&config.orders);

    let reference_only = parallel_from_lines(source_lines, &[reference_lines], None, config.tokenize)?;
    let base = baselines(&reference_only, config)?;
    let ref_female = crate::metrics::female_fraction(reference_only.reference(), lexicon, &config.side)?;
    let mut baseline_values: Vec<Metric<f64>> = base.ngram_l1.iter().map(|o| o.value.clone()).collect();
    baseline_values.push(base.length_l1.clone());
    for col in &columns[config.orders.len() + 1..] {
        baseline_values.push(match col.as_str() {
            "female_fraction" | "reference_female_fraction" => {
                ref_female.map_or(Metric::absent(Absence::NoGenderedTokens), Metric::Value)
            }
            _ => Metric::absent(Absence::NotApplicable),
        });
    }
    let mut rows = vec![SweepRow {
        strategy: "baseline".into(),
        parameter: None,
        baseline: true,
        values: baseline_values,
        panel: None,
    }];

    let mut outputs = Vec::with_capacity(grid.len());
    for strategy in grid {
        let decode = DecodeConfig {
            strategy: *strategy,
            max_len,
            seed: config.seed,
        };
        let hyps = decode_corpus(model, &contexts, &decode)?;
        let lines: Vec<String> = hyps.iter().map(|h| h.surface(model.vocab())).collect();
        let corpus = parallel_from_lines(source_lines, &[reference_lines], Some(&lines), config.tokenize)?;
        let panel = build_panel(&corpus, lexicon, config, inputs.clone())?;
        let (name, parameter) = setting(strategy);
        rows.push(SweepRow {
            strategy: name.into(),
            parameter,
            baseline: false,
            values: panel_values(&panel),
            panel: Some(panel),
        });
        outputs.push((*strategy, lines));
    }
    Ok(SweepOutcome {
        table: SweepTable {
            schema_version: SWEEP_SCHEMA.into(),
            metadata: SweepMetadata {
                model: model_label.into(),
                max_len,
                grid: grid.to_vec(),
                inputs,
                config: config.clone(),
                config_digest: config.digest(),
            },
            columns,
            rows,
        },
        outputs,
    })
}

impl SweepTable {
    /// `strategy,parameter,baseline,<columns>`; absent values are empty
    /// cells and numbers use the shortest round-trip decimal form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("strategy,parameter,baseline");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{},", r.strategy);
            if let Some(p) = r.parameter {
                let _ = write!(out, "{p}");
            }
            let _ = write!(out, ",{}", r.baseline);
            for v in &r.values {
                out.push(',');
                if let Metric::Value(x) = v {
                    let _ = write!(out, "{x}");
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("table serializes");
        s.push('\n');
        s
    }
}
