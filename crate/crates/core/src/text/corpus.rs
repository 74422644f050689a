use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::text::{tokenize, Sentence, TokenId, TokenizeMode, Vocabulary};

/// Sentences sharing one vocabulary, in source line order.
#[derive(Clone, Debug)]
pub struct TokenizedCorpus {
    vocab: Arc<Vocabulary>,
    sentences: Vec<Sentence>,
    label: String,
}

impl TokenizedCorpus {
    /// Panics if a sentence holds an id the vocabulary cannot resolve.
    pub fn new(vocab: Arc<Vocabulary>, sentences: Vec<Sentence>, label: impl Into<String>) -> Self {
        for s in &sentences {
            for &id in s.iter() {
                assert!(vocab.contains_id(id), "token id {id} outside vocabulary");
            }
        }
        Self {
            vocab,
            sentences,
            label: label.into(),
        }
    }

    /// Tokenizes in-memory lines into a fresh vocabulary.
    pub fn from_lines<'a>(
        lines: impl IntoIterator<Item = &'a str>,
        mode: TokenizeMode,
        label: impl Into<String>,
    ) -> Self {
        let mut builder = CorpusBuilder::new(mode);
        let sentences = builder.add_lines(lines);
        Self::new(builder.finish(), sentences, label)
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(|s| s.len()).sum()
    }

    pub fn surface(&self, id: TokenId) -> &str {
        self.vocab.resolve(id).unwrap_or(crate::text::vocab::UNK_FORM)
    }

    pub fn surfaces(&self, index: usize) -> Vec<&str> {
        self.sentences[index].iter().map(|&id| self.surface(id)).collect()
    }

    /// Sentence joined with single spaces.
    pub fn detokenize(&self, index: usize) -> String {
        self.surfaces(index).join(" ")
    }

    /// Sub-corpus holding the given sentence indices in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            vocab: Arc::clone(&self.vocab),
            sentences: indices.iter().map(|&i| self.sentences[i].clone()).collect(),
            label: self.label.clone(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Rebinds the corpus to a vocabulary that extends its own.
    pub fn rebind(self, vocab: Arc<Vocabulary>) -> Result<Self> {
        if !self.vocab.is_prefix_of(&vocab) {
            return Err(Error::VocabularyMismatch(format!(
                "{} cannot be rebound to a vocabulary that does not extend it",
                self.label
            )));
        }
        Ok(Self { vocab, ..self })
    }

    pub fn shares_vocab(&self, other: &TokenizedCorpus) -> bool {
        Arc::ptr_eq(&self.vocab, &other.vocab) || *self.vocab == *other.vocab
    }

    pub(crate) fn ensure_shared_vocab(&self, other: &TokenizedCorpus) -> Result<()> {
        if self.shares_vocab(other) {
            Ok(())
        } else {
            Err(Error::VocabularyMismatch(format!("{} vs {}", self.label, other.label)))
        }
    }

    pub(crate) fn ensure_aligned(&self, other: &TokenizedCorpus) -> Result<()> {
        if self.len() == other.len() {
            Ok(())
        } else {
            Err(Error::Alignment {
                left: self.label.clone(),
                left_count: self.len(),
                right: other.label.clone(),
                right_count: other.len(),
            })
        }
    }
}

/// Accumulates sentences into one growing vocabulary.
#[derive(Debug)]
pub struct CorpusBuilder {
    vocab: Vocabulary,
    mode: TokenizeMode,
}

impl CorpusBuilder {
    pub fn new(mode: TokenizeMode) -> Self {
        Self::with_vocab(Vocabulary::new(), mode)
    }

    /// Continue interning into an existing vocabulary. Ids already assigned
    /// keep their meaning.
    pub fn with_vocab(vocab: Vocabulary, mode: TokenizeMode) -> Self {
        Self { vocab, mode }
    }

    pub fn add_line(&mut self, line: &str) -> Sentence {
        let ids = tokenize(line, self.mode)
            .into_iter()
            .map(|t| self.vocab.intern(t))
            .collect::<Vec<_>>();
        Sentence::new(ids)
    }

    pub fn add_lines<'a>(&mut self, lines: impl IntoIterator<Item = &'a str>) -> Vec<Sentence> {
        lines.into_iter().map(|l| self.add_line(l)).collect()
    }

    pub fn add_file(&mut self, path: &Path) -> Result<Vec<Sentence>> {
        let lines = read_lines(path)?;
        Ok(self.add_lines(lines.iter().map(String::as_str)))
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn finish(self) -> Arc<Vocabulary> {
        Arc::new(self.vocab)
    }
}

/// Reads a one-sentence-per-line UTF-8 file. Accepts LF or CRLF; a final
/// newline does not produce an extra empty sentence.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    split_lines(&bytes, path)
}

pub(crate) fn split_lines(bytes: &[u8], path: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut rest = bytes;
    while !rest.is_empty() {
        let (line, next) = match rest.iter().position(|&b| b == b'\n') {
            Some(i) => (&rest[..i], &rest[i + 1..]),
            None => (rest, &rest[rest.len()..]),
        };
        let line = line.strip_suffix(b"\r").unwrap_or(line);
        let text = std::str::from_utf8(line).map_err(|_| Error::InvalidEncoding {
            path: path.to_path_buf(),
            line: out.len() + 1,
        })?;
        out.push(text.to_owned());
        rest = next;
    }
    Ok(out)
}

/// Source side, one or more references and an optional hypothesis, all with
/// the same number of sentences. References and hypothesis share a vocabulary.
#[derive(Clone, Debug)]
pub struct ParallelCorpus {
    source: TokenizedCorpus,
    references: Vec<TokenizedCorpus>,
    hypothesis: Option<TokenizedCorpus>,
}

impl ParallelCorpus {
    pub fn new(
        source: TokenizedCorpus,
        references: Vec<TokenizedCorpus>,
        hypothesis: Option<TokenizedCorpus>,
    ) -> Result<Self> {
        if references.is_empty() {
            return Err(Error::Config("at least one reference is required".into()));
        }
        for r in &references {
            source.ensure_aligned(r)?;
            references[0].ensure_shared_vocab(r)?;
        }
        if let Some(h) = &hypothesis {
            source.ensure_aligned(h)?;
            references[0].ensure_shared_vocab(h)?;
        }
        Ok(Self {
            source,
            references,
            hypothesis,
        })
    }

    pub fn source(&self) -> &TokenizedCorpus {
        &self.source
    }

    pub fn references(&self) -> &[TokenizedCorpus] {
        &self.references
    }

    pub fn reference(&self) -> &TokenizedCorpus {
        &self.references[0]
    }

    pub fn hypothesis(&self) -> Option<&TokenizedCorpus> {
        self.hypothesis.as_ref()
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }
}

/// Loads aligned files. The source side gets its own vocabulary; references
/// and hypothesis share the target-side vocabulary.
pub fn load_parallel(
    src_path: &Path,
    ref_paths: &[&Path],
    hyp_path: Option<&Path>,
    mode: TokenizeMode,
) -> Result<ParallelCorpus> {
    let mut src_builder = CorpusBuilder::new(mode);
    let src_sents = src_builder.add_file(src_path)?;
    let source = TokenizedCorpus::new(src_builder.finish(), src_sents, src_path.display().to_string());

    let mut tgt = CorpusBuilder::new(mode);
    let mut ref_sents = Vec::with_capacity(ref_paths.len());
    for p in ref_paths {
        let sents = tgt.add_file(p)?;
        check_count(&source, sents.len(), p)?;
        ref_sents.push((p.display().to_string(), sents));
    }
    let hyp_sents = match hyp_path {
        Some(p) => {
            let sents = tgt.add_file(p)?;
            check_count(&source, sents.len(), p)?;
            Some((p.display().to_string(), sents))
        }
        None => None,
    };
    let vocab = tgt.finish();
    let references = ref_sents
        .into_iter()
        .map(|(label, s)| TokenizedCorpus::new(Arc::clone(&vocab), s, label))
        .collect();
    let hypothesis = hyp_sents.map(|(label, s)| TokenizedCorpus::new(Arc::clone(&vocab), s, label));
    ParallelCorpus::new(source, references, hypothesis)
}

/// In-memory counterpart of [`load_parallel`], labelling the sides
/// `source`, `reference` (`reference2`, ...) and `hypothesis`.
pub fn parallel_from_lines(
    source: &[String],
    references: &[&[String]],
    hypothesis: Option<&[String]>,
    mode: TokenizeMode,
) -> Result<ParallelCorpus> {
    let source = TokenizedCorpus::from_lines(source.iter().map(String::as_str), mode, "source");
    let mut tgt = CorpusBuilder::new(mode);
    let ref_sents: Vec<Vec<Sentence>> = references
        .iter()
        .map(|r| tgt.add_lines(r.iter().map(String::as_str)))
        .collect();
    let hyp_sents = hypothesis.map(|h| tgt.add_lines(h.iter().map(String::as_str)));
    let vocab = tgt.finish();
    let references = ref_sents
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let label = if i == 0 {
                "reference".to_owned()
            } else {
                format!("reference{}", i + 1)
            };
            TokenizedCorpus::new(Arc::clone(&vocab), s, label)
        })
        .collect();
    let hypothesis = hyp_sents.map(|s| TokenizedCorpus::new(Arc::clone(&vocab), s, "hypothesis"));
    ParallelCorpus::new(source, references, hypothesis)
}

fn check_count(source: &TokenizedCorpus, count: usize, path: &Path) -> Result<()> {
    if source.len() == count {
        Ok(())
    } else {
        Err(Error::Alignment {
            left: source.label().to_owned(),
            left_count: source.len(),
            right: path.display().to_string(),
            right_count: count,
        })
    }
}

/// Index split behind [`partition`]: shuffle `0..len` under `seed`, cut at
/// `round(fraction * len)`, and restore source order within each part.
pub fn partition_indices(len: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::DegeneratePartition { fraction, total: len });
    }
    let cut = (fraction * len as f64).round() as usize;
    if cut == 0 || cut >= len {
        return Err(Error::DegeneratePartition { fraction, total: len });
    }
    let mut idx: Vec<usize> = (0..len).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let mut a = idx[..cut].to_vec();
    let mut b = idx[cut..].to_vec();
    a.sort_unstable();
    b.sort_unstable();
    Ok((a, b))
}

pub fn partition(corpus: &TokenizedCorpus, fraction: f64, seed: u64) -> Result<(TokenizedCorpus, TokenizedCorpus)> {
    let (a, b) = partition_indices(corpus.len(), fraction, seed)?;
    Ok((corpus.select(&a), corpus.select(&b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn corpus(n: usize) -> TokenizedCorpus {
        let lines: Vec<String> = (0..n).map(|i| format!("w{} common", i % 17)).collect();
        TokenizedCorpus::from_lines(lines.iter().map(String::as_str), TokenizeMode::Whitespace, "t")
    }

    fn write_tmp(dir: &tempfile::TempDir, name: &str, content: &[u8]) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::File::create(&p).unwrap().write_all(content).unwrap();
        p
    }

    #[test]
    fn partition_halves_are_disjoint_and_complete() {
        let c = corpus(100);
        let (a, b) = partition_indices(100, 0.5, 7).unwrap();
        assert_eq!((a.len(), b.len()), (50, 50));
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        let (pa, pb) = partition(&c, 0.5, 7).unwrap();
        assert_eq!(pa.len() + pb.len(), 100);
    }

    #[test]
    fn partition_is_deterministic() {
        assert_eq!(
            partition_indices(100, 0.5, 7).unwrap(),
            partition_indices(100, 0.5, 7).unwrap()
        );
        assert_ne!(
            partition_indices(100, 0.5, 7).unwrap(),
            partition_indices(100, 0.5, 8).unwrap()
        );
    }

    #[test]
    fn partition_of_two() {
        let (a, b) = partition_indices(2, 0.5, 0).unwrap();
        assert_eq!((a.len(), b.len()), (1, 1));
    }

    #[test]
    fn degenerate_partitions() {
        assert!(matches!(
            partition_indices(3, 0.1, 0),
            Err(Error::DegeneratePartition { .. })
        ));
        assert!(partition_indices(1, 0.5, 0).is_err());
        assert!(partition_indices(10, 1.0, 0).is_err());
        assert!(partition_indices(10, 0.0, 0).is_err());
    }

    #[test]
    fn crlf_and_trailing_newline() {
        let lines = split_lines(b"a b\r\nc\n\nd", Path::new("x")).unwrap();
        assert_eq!(lines, vec!["a b", "c", "", "d"]);
        assert_eq!(split_lines(b"a\n", Path::new("x")).unwrap(), vec!["a"]);
    }

    #[test]
    fn invalid_utf8_names_line() {
        let err = split_lines(b"ok\n\xff\xfe\n", Path::new("x")).unwrap_err();
        assert!(matches!(err, Error::InvalidEncoding { line: 2, .. }));
    }

    #[test]
    fn load_parallel_aligned_and_misaligned() {
        let dir = tempfile::tempdir().unwrap();
        let src = write_tmp(&dir, "src", b"a b\nc d\ne f\n");
        let r1 = write_tmp(&dir, "r1", b"x y\nz\nw\n");
        let r2 = write_tmp(&dir, "r2", b"x\nz z\nw y\n");
        let short = write_tmp(&dir, "short", b"x\ny\n");

        let pc = load_parallel(&src, &[&r1], None, TokenizeMode::Whitespace).unwrap();
        assert_eq!(pc.len(), 3);

        let pc = load_parallel(&src, &[&r1, &r2], Some(&r1), TokenizeMode::Whitespace).unwrap();
        assert_eq!(pc.references().len(), 2);
        assert!(pc.reference().shares_vocab(&pc.references()[1]));
        assert!(pc.reference().shares_vocab(pc.hypothesis().unwrap()));

        let err = load_parallel(&src, &[&short], None, TokenizeMode::Whitespace).unwrap_err();
        match err {
            Error::Alignment {
                left_count,
                right_count,
                ..
            } => assert_eq!((left_count, right_count), (3, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn detokenize_round_trip() {
        let c = TokenizedCorpus::from_lines(["she  went\thome ."], TokenizeMode::Whitespace, "t");
        let line = c.detokenize(0);
        assert_eq!(line, "she went home .");
        let mut b = CorpusBuilder::with_vocab((**c.vocab()).clone(), TokenizeMode::Whitespace);
        assert_eq!(b.add_line(&line), c.sentences()[0]);
    }
}
