use std::fs;
use std::path::PathBuf;

use divlab_core::metrics::female_fraction;
use divlab_core::text::{load_parallel, read_lines, tokenize, SubsetLexicon, TokenizeMode};
use divlab_core::{Error, ErrorKind};

fn write(dir: &tempfile::TempDir, name: &str, bytes: &[u8]) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, bytes).unwrap();
    path
}

#[test]
fn parallel_files_share_one_target_vocabulary() {
    let dir = tempfile::tempdir().unwrap();
    let src = write(&dir, "src", b"sie ging\r\ner kam\n");
    let reference = write(&dir, "ref", b"she went\nhe came\n");
    let hyp = write(&dir, "hyp", b"he went\nhe came");
    let corpus = load_parallel(&src, &[&reference], Some(&hyp), TokenizeMode::Whitespace).unwrap();
    assert_eq!(corpus.len(), 2);
    assert_eq!(corpus.source().surfaces(0), ["sie", "ging"]);
    let h = corpus.hypothesis().unwrap();
    assert!(h.shares_vocab(corpus.reference()));
    assert_eq!(h.sentences()[1], corpus.reference().sentences()[1]);
}

#[test]
fn misaligned_files_name_both_counts() {
    let dir = tempfile::tempdir().unwrap();
    let src = write(&dir, "src", b"a\nb\nc\n");
    let reference = write(&dir, "ref", b"a\nb\n");
    let err = load_parallel(&src, &[&reference], None, TokenizeMode::Whitespace).unwrap_err();
    assert!(
        matches!(
            err,
            Error::Alignment {
                left_count: 3,
                right_count: 2,
                ..
            }
        ),
        "{err}"
    );
    assert_eq!(err.kind(), ErrorKind::Input);
}

#[test]
fn invalid_utf8_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(&dir, "bad", b"fine\n\xff\xfe\n");
    match read_lines(&path).unwrap_err() {
        Error::InvalidEncoding { line, .. } => assert_eq!(line, 2),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn missing_file_is_an_input_error() {
    let err = read_lines(std::path::Path::new("/nonexistent/divlab")).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Input);
}

#[test]
fn simple_tokenization_detaches_punctuation() {
    assert_eq!(
        tokenize("\"Hello, world!\"", TokenizeMode::Simple),
        ["\"", "Hello", ",", "world", "!", "\""]
    );
    assert_eq!(tokenize("  a\tb  ", TokenizeMode::Whitespace), ["a", "b"]);
}

#[test]
fn lexicon_matching_ignores_case() {
    let c = divlab_core::text::TokenizedCorpus::from_lines(["She said He left", "he"], TokenizeMode::Whitespace, "c");
    let lex = SubsetLexicon::builtin();
    assert_eq!(female_fraction(&c, &lex, "english").unwrap(), Some(1.0 / 3.0));
}

#[test]
fn lexicon_overrides_replace_classes() {
    let mut lex = SubsetLexicon::builtin();
    lex.apply_overrides("english-female\tsie ihr\n").unwrap();
    assert!(lex.contains("english-female", "Sie"));
    assert!(!lex.contains("english-female", "she"));
    assert!(lex.apply_overrides("no tab here\n").is_err());
}
