use divlab_core::decoding::{
    beam_decode, brute_force_mode, decode_corpus, enumeration_size, fit_ngram, greedy_decode, pronoun_toy_grammar,
    sample_decode, score_sequence, sentence_rng, temperature_transform, train_context_model, ContextModelConfig,
    DecodeConfig, DecodeStrategy, NgramModel, SequenceModel, TabularModel, TrainableContextModel,
};
use divlab_core::text::{TokenId, TokenizeMode, TokenizedCorpus};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_model(seed: u64, content: usize, max_len: usize) -> TabularModel {
    TabularModel::random(content, max_len, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Every prefix reachable within the budget, for row-sum checks.
fn prefixes(model: &dyn SequenceModel, max_len: usize) -> Vec<Vec<TokenId>> {
    let ids: Vec<TokenId> = model.vocab().corpus_ids().collect();
    let mut all = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for p in &frontier {
            for &t in &ids {
                let mut q: Vec<TokenId> = p.clone();
                q.push(t);
                next.push(q);
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    all
}

fn assert_rows_sum_to_one(model: &dyn SequenceModel, context: &str, max_len: usize) {
    for p in prefixes(model, max_len) {
        let row = model.next_distribution(context, &p);
        assert_eq!(row.len(), model.vocab().len());
        let sum: f64 = row.iter().sum();
        assert!((sum - 1.0).abs() <= 1e-9, "prefix {p:?} sums to {sum}");
        assert_eq!(row[TokenId::BOS.index()], 0.0);
        assert!(row.iter().all(|x| x.is_finite() && *x >= 0.0));
    }
}

fn corpus(lines: &[&str]) -> TokenizedCorpus {
    TokenizedCorpus::from_lines(lines.iter().copied(), TokenizeMode::Whitespace, "train")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn degenerate_strategies_coincide(seed in any::<u64>(), content in 1usize..5, max_len in 1usize..6) {
        let m = random_model(seed, content, max_len);
        let greedy = greedy_decode(&m, "", max_len);
        let t0 = sample_decode(&m, "", 0.0, max_len, &mut sentence_rng(seed, 0)).unwrap();
        let b1 = beam_decode(&m, "", 1, max_len).unwrap().best;
        prop_assert_eq!(&greedy, &t0);
        prop_assert_eq!(&greedy, &b1);
    }

    #[test]
    fn exhaustive_beam_finds_the_mode(seed in any::<u64>(), content in 1usize..4, max_len in 1usize..5) {
        let m = random_model(seed, content, max_len);
        let width = enumeration_size(content, max_len) as usize;
        let beam = beam_decode(&m, "", width, max_len).unwrap().best;
        let mode = brute_force_mode(&m, "", max_len).unwrap();
        prop_assert_eq!(&beam, &mode);
        // No width beats the exhaustive one.
        for w in 1..=width.min(6) {
            prop_assert!(beam_decode(&m, "", w, max_len).unwrap().best.log_prob <= mode.log_prob);
        }
    }

    #[test]
    fn recorded_log_probs_replay(seed in any::<u64>(), content in 1usize..5, max_len in 1usize..6, t in 0.1f64..2.0) {
        let m = random_model(seed, content, max_len);
        let hyps = [
            greedy_decode(&m, "", max_len),
            sample_decode(&m, "", t, max_len, &mut sentence_rng(seed, 1)).unwrap(),
            beam_decode(&m, "", 3, max_len).unwrap().best,
        ];
        for h in hyps {
            prop_assert!(h.tokens.len() <= max_len);
            prop_assert!(h.finished || h.tokens.len() == max_len);
            prop_assert!(!h.tokens.contains(&TokenId::EOS) && !h.tokens.contains(&TokenId::BOS));
            let replay = score_sequence(&m, "", &h.tokens, h.finished);
            prop_assert!((replay - h.log_prob).abs() <= 1e-12, "{} vs {}", replay, h.log_prob);
        }
    }

    #[test]
    fn beam_results_are_ranked(seed in any::<u64>(), content in 1usize..5, max_len in 1usize..6, width in 1usize..6) {
        let m = random_model(seed, content, max_len);
        let r = beam_decode(&m, "", width, max_len).unwrap();
        let pool: Vec<_> = r.completed.iter().chain(&r.capped).collect();
        prop_assert!(pool.iter().all(|h| h.log_prob <= r.best.log_prob));
        prop_assert!(r.completed.iter().all(|h| h.finished));
        prop_assert!(r.capped.iter().all(|h| !h.finished && h.tokens.len() == max_len));
    }

    #[test]
    fn tabular_rows_sum_to_one(seed in any::<u64>(), content in 1usize..4, max_len in 1usize..4) {
        let m = random_model(seed, content, max_len);
        assert_rows_sum_to_one(&m, "", max_len);
        let reparsed = TabularModel::from_text(&m.to_text()).unwrap();
        prop_assert_eq!(reparsed.to_text(), m.to_text());
    }

    #[test]
    fn temperature_preserves_argmax_and_mass(
        weights in prop::collection::vec(0.0f64..1.0, 2..10),
        t in 0.05f64..5.0,
    ) {
        let total: f64 = weights.iter().sum();
        prop_assume!(total > 1e-6);
        let p: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let q = temperature_transform(&p, t).unwrap();
        prop_assert!((q.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        let argmax = |v: &[f64]| (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b });
        prop_assert_eq!(argmax(&q), argmax(&p));
        for (a, b) in p.iter().zip(&q) {
            prop_assert_eq!(*a == 0.0, *b == 0.0);
        }
    }

    #[test]
    fn ngram_rows_sum_to_one(history in 1usize..3, alpha in 0.01f64..2.0) {
        let m: NgramModel = fit_ngram(&corpus(&["a b a", "b b", "a c", "c"]), history, alpha).unwrap().with_max_len(3);
        assert_rows_sum_to_one(&m, "", 3);
        let reparsed = NgramModel::from_text(&m.to_text()).unwrap();
        prop_assert_eq!(reparsed.to_text(), m.to_text());
    }
}

#[test]
fn temperature_one_is_identity_and_low_temperature_sharpens() {
    let p = [0.1, 0.2, 0.3, 0.4];
    assert_eq!(temperature_transform(&p, 1.0).unwrap(), p.to_vec());
    let cold = temperature_transform(&p, 0.05).unwrap();
    assert!(cold[3] > 0.99);
    assert!(temperature_transform(&p, 0.0).is_err());
    assert!(temperature_transform(&p, -1.0).is_err());
}

/// Pearson chi-square statistic of T=1 first-token draws against the model.
#[test]
fn sampling_frequencies_follow_the_model() {
    let m = random_model(31, 4, 2);
    let p = m.next_distribution("", &[]);
    let n = 20_000;
    let cfg = DecodeConfig {
        strategy: DecodeStrategy::Sample { temperature: 1.0 },
        max_len: 2,
        seed: 4,
    };
    let hyps = decode_corpus(&m, &vec![String::new(); n], &cfg).unwrap();
    let mut counts = vec![0usize; p.len()];
    for h in &hyps {
        let first = h.tokens.first().copied().unwrap_or(TokenId::EOS);
        counts[first.index()] += 1;
    }
    let mut chi2 = 0.0;
    let mut cells = 0;
    for (c, q) in counts.iter().zip(&p) {
        if *q > 0.0 {
            let e = q * n as f64;
            chi2 += (*c as f64 - e).powi(2) / e;
            cells += 1;
        } else {
            assert_eq!(*c, 0);
        }
    }
    // 0.999 quantile of chi-square with at most 4 degrees of freedom.
    assert!(cells >= 2);
    assert!(chi2 < 18.47, "chi-square {chi2} over {cells} cells");
}

#[test]
fn corpus_decoding_is_thread_count_invariant() {
    let m = pronoun_toy_grammar(0.4).unwrap();
    let contexts = vec![String::new(); 500];
    let cfg = DecodeConfig {
        strategy: DecodeStrategy::Sample { temperature: 1.0 },
        max_len: 4,
        seed: 12,
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| decode_corpus(&m, &contexts, &cfg).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn enumeration_guard_rejects_large_spaces() {
    let m = random_model(1, 4, 3);
    assert!(enumeration_size(4, 12) > 1_000_000);
    let err = brute_force_mode(&m, "", 12).unwrap_err();
    assert_eq!(err.kind(), divlab_core::ErrorKind::Numerical);
}

#[test]
fn trainable_model_rows_sum_to_one_and_round_trip() {
    let c = corpus(&["a b", "b a c", "c", "a a b"]);
    let cfg = ContextModelConfig {
        history: 2,
        label_smoothing: 0.1,
        epochs: 50,
        seed: 3,
        ..Default::default()
    };
    let m: TrainableContextModel = train_context_model(&c, &[], &cfg).unwrap();
    assert_rows_sum_to_one(&m, "", 3);
    let again = train_context_model(&c, &[], &cfg).unwrap();
    assert_eq!(m.to_text(), again.to_text());
    let reparsed = TrainableContextModel::from_text(&m.to_text()).unwrap();
    assert_eq!(reparsed.to_text(), m.to_text());
}
