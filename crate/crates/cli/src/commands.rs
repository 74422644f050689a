use std::path::Path;

use divlab_core::decoding::{
    brute_force_mode, context_key, decode_corpus, fit_ngram, train_context_model, ContextModelConfig, DecodeConfig,
    DecodeStrategy, NgramModel, SequenceModel, TabularModel, TrainableContextModel,
};
use divlab_core::discriminator::{build_dataset_with, evaluate, save_model, train, Hyperparams};
use divlab_core::metrics::{length_partition_baseline, partition_baseline};
use divlab_core::report::{
    build_panel, default_grid, parse_grid, run_sweep, sha256_hex, to_json, InputInfo, Metric, OrderMetric, PanelConfig,
};
use divlab_core::text::{load_parallel, read_lines, tokenize, SubsetLexicon, TokenizeMode, TokenizedCorpus};
use divlab_core::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{
    BaselineArgs, Cli, Command, DecodeArgs, DiscriminateArgs, Format, Global, ModelKind, PanelArgs, StrategyArg,
    SweepArgs, TrainArgs,
};

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let g = &cli.global;
    match &cli.command {
        Command::Panel(a) => panel(g, a),
        Command::Sweep(a) => sweep(g, a),
        Command::TrainLm(a) => train_lm(g, a),
        Command::Decode(a) => decode(g, a),
        Command::Discriminate(a) => discriminate(g, a),
        Command::Baseline(a) => baseline(g, a),
    }
}

fn emit(global: &Global, content: &str) -> Result<()> {
    match &global.out {
        Some(path) => std::fs::write(path, content).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        }),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())
                .and_then(|()| out.flush())
                .map_err(|e| Error::Io {
                    path: "<stdout>".into(),
                    source: e,
                })
        }
    }
}

fn json_only(global: &Global, verb: &str) -> Result<()> {
    match global.format {
        Format::Json => Ok(()),
        Format::Csv => Err(Error::Config(format!("`{verb}` has no CSV form"))),
    }
}

fn lexicon(global: &Global) -> Result<SubsetLexicon> {
    let lex = match &global.lexicon {
        Some(p) => SubsetLexicon::load_overrides(p)?,
        None => SubsetLexicon::builtin(),
    };
    lex.gendered_classes(&global.side)?;
    Ok(lex)
}

fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(sha256_hex(&bytes))
}

fn input(role: &str, path: &Path, sentences: usize) -> Result<InputInfo> {
    Ok(InputInfo {
        role: role.into(),
        path: Some(path.display().to_string()),
        sentences,
        sha256: Some(file_sha256(path)?),
    })
}

fn panel_config(global: &Global, lexicon: &SubsetLexicon, orders: &[usize]) -> PanelConfig {
    let mut cfg = PanelConfig::new(global.seed, lexicon);
    cfg.orders = orders.to_vec();
    cfg.side = global.side.clone();
    cfg.tokenize = global.tokenize;
    cfg
}

fn panel(global: &Global, a: &PanelArgs) -> Result<()> {
    json_only(global, "panel")?;
    let lex = lexicon(global)?;
    let refs: Vec<&Path> = a.refs.iter().map(|p| p.as_path()).collect();
    let corpus = load_parallel(&a.src, &refs, Some(&a.hyp), global.tokenize)?;
    let n = corpus.len();
    let mut inputs = vec![input("source", &a.src, n)?];
    for r in &a.refs {
        inputs.push(input("reference", r, n)?);
    }
    inputs.push(input("hypothesis", &a.hyp, n)?);
    let report = build_panel(&corpus, &lex, &panel_config(global, &lex, &a.orders.0), inputs)?;
    emit(global, &to_json(&report))
}

/// Picks the model type from the file header.
fn load_model(path: &Path) -> Result<Box<dyn SequenceModel>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let header = text.lines().next().unwrap_or("").trim_end();
    Ok(match header {
        "#divlab-tabular v1" => Box::new(TabularModel::from_text(&text)?),
        "#divlab-ngram v1" => Box::new(NgramModel::from_text(&text)?),
        "#divlab-context-model v1" => Box::new(TrainableContextModel::from_text(&text)?),
        other => {
            return Err(Error::Format {
                what: "model file",
                line: 1,
                message: format!("unrecognized header `{other}`"),
            })
        }
    })
}

fn contexts(lines: &[String], mode: TokenizeMode) -> Vec<String> {
    lines.iter().map(|l| context_key(&tokenize(l, mode))).collect()
}

fn sweep(global: &Global, a: &SweepArgs) -> Result<()> {
    let lex = lexicon(global)?;
    let src = read_lines(&a.src)?;
    let reference = read_lines(&a.reference)?;
    let grid = match &a.grid {
        Some(spec) => parse_grid(spec)?,
        None => default_grid(),
    };
    let mut inputs = vec![
        input("source", &a.src, src.len())?,
        input("reference", &a.reference, reference.len())?,
    ];
    let (model, label): (Box<dyn SequenceModel>, String) = match (&a.model, &a.fit) {
        (Some(path), _) => {
            inputs.push(input("model", path, 0)?);
            (load_model(path)?, format!("file:{}", path.display()))
        }
        (None, Some(path)) => {
            let lines = read_lines(path)?;
            inputs.push(input("fit", path, lines.len())?);
            let corpus = TokenizedCorpus::from_lines(lines.iter().map(String::as_str), global.tokenize, "fit");
            let m = fit_ngram(&corpus, a.order, a.alpha)?;
            (Box::new(m), format!("ngram(history={}, alpha={})", a.order, a.alpha))
        }
        (None, None) => return Err(Error::Config("sweep needs --model or --fit".into())),
    };
    let max_len = a.max_len.unwrap_or_else(|| model.max_len());
    let cfg = panel_config(global, &lex, &a.orders.0);
    let outcome = run_sweep(
        model.as_ref(),
        &label,
        &src,
        &reference,
        &grid,
        max_len,
        &lex,
        &cfg,
        inputs,
    )?;
    if let Some(dir) = &a.decoded_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.clone(),
            source: e,
        })?;
        for (strategy, lines) in &outcome.outputs {
            let name = match *strategy {
                DecodeStrategy::Sample { temperature } => format!("sample_T{temperature}.txt"),
                DecodeStrategy::Greedy => "greedy.txt".into(),
                DecodeStrategy::Beam { width } => format!("beam_B{width}.txt"),
            };
            let path = dir.join(name);
            std::fs::write(&path, lines_text(lines)).map_err(|e| Error::Io { path, source: e })?;
        }
    }
    match global.format {
        Format::Json => emit(global, &outcome.table.to_json()),
        Format::Csv => emit(global, &outcome.table.to_csv()),
    }
}

fn lines_text(lines: &[String]) -> String {
    lines.iter().map(|l| format!("{l}\n")).collect()
}

#[derive(Serialize)]
struct TrainRecord<'a> {
    kind: &'static str,
    corpus_sha256: String,
    contexts_sha256: Option<String>,
    tokenize: TokenizeMode,
    history: usize,
    alpha: Option<f64>,
    context_model: Option<&'a ContextModelConfig>,
}

/// Inserts a `#config_digest` directive right after the header line.
fn with_digest(text: &str, digest: &str) -> String {
    let (header, rest) = text.split_once('\n').unwrap_or((text, ""));
    format!("{header}\n#config_digest\t{digest}\n{rest}")
}

fn train_lm(global: &Global, a: &TrainArgs) -> Result<()> {
    json_only(global, "train-lm")?;
    let lines = read_lines(&a.corpus)?;
    let corpus = TokenizedCorpus::from_lines(lines.iter().map(String::as_str), global.tokenize, "corpus");
    let corpus_sha256 = file_sha256(&a.corpus)?;
    let (text, record_digest) = match a.kind {
        ModelKind::Ngram => {
            let m = fit_ngram(&corpus, a.order, a.alpha)?;
            let rec = TrainRecord {
                kind: "ngram",
                corpus_sha256,
                contexts_sha256: None,
                tokenize: global.tokenize,
                history: a.order,
                alpha: Some(a.alpha),
                context_model: None,
            };
            (m.to_text(), digest_of(&rec))
        }
        ModelKind::Trainable => {
            let ctx = match &a.contexts {
                Some(p) => contexts(&read_lines(p)?, global.tokenize),
                None => Vec::new(),
            };
            let cfg = ContextModelConfig {
                history: a.order,
                label_smoothing: a.label_smoothing,
                learning_rate: a.learning_rate,
                epochs: a.epochs,
                seed: global.seed,
                append_eos: !a.no_eos,
            };
            let m = train_context_model(&corpus, &ctx, &cfg)?;
            let rec = TrainRecord {
                kind: "trainable",
                corpus_sha256,
                contexts_sha256: a.contexts.as_deref().map(file_sha256).transpose()?,
                tokenize: global.tokenize,
                history: a.order,
                alpha: None,
                context_model: Some(&cfg),
            };
            (m.to_text(), digest_of(&rec))
        }
    };
    emit(global, &with_digest(&text, &record_digest))
}

fn digest_of<T: Serialize>(value: &T) -> String {
    sha256_hex(serde_json::to_string(value).expect("record serializes").as_bytes())
}

fn decode(global: &Global, a: &DecodeArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let src = read_lines(&a.src)?;
    let max_len = a.max_len.unwrap_or_else(|| model.max_len());
    let contexts = contexts(&src, global.tokenize);
    let strategy = match a.strategy {
        StrategyArg::Sample => DecodeStrategy::Sample {
            temperature: a.temperature,
        },
        StrategyArg::Greedy => DecodeStrategy::Greedy,
        StrategyArg::Beam => DecodeStrategy::Beam { width: a.beam },
        StrategyArg::Exact => {
            let hyps = contexts
                .par_iter()
                .map(|c| brute_force_mode(model.as_ref(), c, max_len))
                .collect::<Result<Vec<_>>>()?;
            let lines: Vec<String> = hyps.iter().map(|h| h.surface(model.vocab())).collect();
            return emit(global, &lines_text(&lines));
        }
    };
    let config = DecodeConfig {
        strategy,
        max_len,
        seed: global.seed,
    };
    let hyps = decode_corpus(model.as_ref(), &contexts, &config)?;
    let lines: Vec<String> = hyps.iter().map(|h| h.surface(model.vocab())).collect();
    emit(global, &lines_text(&lines))
}

#[derive(Serialize)]
struct DiscriminateOutput {
    schema_version: &'static str,
    inputs: Vec<InputInfo>,
    seed: u64,
    hyperparams: Hyperparams,
    min_df: usize,
    features: usize,
    train_size: usize,
    report: divlab_core::discriminator::DiscriminationReport,
}

fn discriminate(global: &Global, a: &DiscriminateArgs) -> Result<()> {
    json_only(global, "discriminate")?;
    let read = |p: &Path, label: &str| -> Result<TokenizedCorpus> {
        let lines = read_lines(p)?;
        Ok(TokenizedCorpus::from_lines(
            lines.iter().map(String::as_str),
            global.tokenize,
            label,
        ))
    };
    let generated = read(&a.generated, "generated")?;
    let real = read(&a.real, "real")?;
    let hyper = Hyperparams {
        learning_rate: a.learning_rate,
        l2: a.l2,
        epochs: a.epochs,
        seed: global.seed,
    };
    let ds = build_dataset_with(&generated, &real, global.seed, a.min_df)?;
    let model = train(&ds, hyper)?;
    let report = evaluate(&model, &ds)?;
    if let Some(path) = &a.save_model {
        save_model(path, ds.vectorizer(), &model)?;
    }
    let out = DiscriminateOutput {
        schema_version: "divlab.discriminate/1",
        inputs: vec![
            input("generated", &a.generated, generated.len())?,
            input("real", &a.real, real.len())?,
        ],
        seed: global.seed,
        hyperparams: hyper,
        min_df: a.min_df,
        features: ds.n_features(),
        train_size: ds.train().len(),
        report,
    };
    emit(global, &to_json(&out))
}

#[derive(Serialize)]
struct BaselineOutput {
    schema_version: &'static str,
    input: InputInfo,
    seed: u64,
    ngram_l1: Vec<OrderMetric>,
    length_l1: Metric<f64>,
}

fn baseline(global: &Global, a: &BaselineArgs) -> Result<()> {
    let lines = read_lines(&a.reference)?;
    let corpus = TokenizedCorpus::from_lines(lines.iter().map(String::as_str), global.tokenize, "reference");
    let ngram_l1 = a
        .orders
        .0
        .iter()
        .map(|&n| {
            Ok(OrderMetric {
                order: n,
                value: Metric::Value(partition_baseline(&corpus, n, global.seed)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let length = length_partition_baseline(&corpus, global.seed)?;
    match global.format {
        Format::Json => {
            let out = BaselineOutput {
                schema_version: "divlab.baseline/1",
                input: input("reference", &a.reference, corpus.len())?,
                seed: global.seed,
                ngram_l1,
                length_l1: Metric::Value(length),
            };
            emit(global, &to_json(&out))
        }
        Format::Csv => {
            let mut csv = String::from("histogram,order,l1\n");
            for m in &ngram_l1 {
                if let Metric::Value(v) = m.value {
                    csv.push_str(&format!("ngram,{},{v}\n", m.order));
                }
            }
            csv.push_str(&format!("length,,{length}\n"));
            emit(global, &csv)
        }
    }
}
