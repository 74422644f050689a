use serde::{Deserialize, Serialize};

use super::lexicon::BUILTIN_PUNCTUATION;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenizeMode {
    /// Split on runs of Unicode whitespace only.
    #[default]
    Whitespace,
    /// Whitespace split, then detach leading and trailing punctuation.
    Simple,
}

impl std::str::FromStr for TokenizeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "whitespace" => Ok(Self::Whitespace),
            "simple" => Ok(Self::Simple),
            other => Err(format!("unknown tokenize mode `{other}`")),
        }
    }
}

const PUNCT_CHARS: &[char] = &['.', ',', '?', '!', '"', '\'', ';', ':'];

fn is_punct(c: char) -> bool {
    PUNCT_CHARS.contains(&c)
}

pub fn tokenize(line: &str, mode: TokenizeMode) -> Vec<&str> {
    match mode {
        TokenizeMode::Whitespace => line.split_whitespace().collect(),
        TokenizeMode::Simple => {
            let mut out = Vec::new();
            for chunk in line.split_whitespace() {
                detach(chunk, &mut out);
            }
            out
        }
    }
}

fn detach<'a>(chunk: &'a str, out: &mut Vec<&'a str>) {
    let lead = chunk
        .char_indices()
        .find(|&(_, c)| !is_punct(c))
        .map_or(chunk.len(), |(i, _)| i);
    if lead == chunk.len() {
        push_run(chunk, out);
        return;
    }
    let trail = chunk
        .char_indices()
        .rev()
        .find(|&(_, c)| !is_punct(c))
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(chunk.len());
    push_run(&chunk[..lead], out);
    out.push(&chunk[lead..trail]);
    push_run(&chunk[trail..], out);
}

// A punctuation run that is itself a lexicon entry ("...", "?!") stays whole;
// anything else is split per character.
fn push_run<'a>(run: &'a str, out: &mut Vec<&'a str>) {
    if run.is_empty() {
        return;
    }
    if BUILTIN_PUNCTUATION.contains(&run) {
        out.push(run);
        return;
    }
    for (i, c) in run.char_indices() {
        out.push(&run[i..i + c.len_utf8()]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whitespace_split() {
        assert_eq!(
            tokenize("she went home .", TokenizeMode::Whitespace),
            vec!["she", "went", "home", "."]
        );
        assert!(tokenize("", TokenizeMode::Whitespace).is_empty());
        assert!(tokenize("  \t ", TokenizeMode::Simple).is_empty());
    }

    #[test]
    fn simple_detaches_trailing_punctuation() {
        assert_eq!(tokenize("home.", TokenizeMode::Simple), vec!["home", "."]);
        assert_eq!(
            tokenize("\"Hello,\" she said!", TokenizeMode::Simple),
            vec!["\"", "Hello", ",", "\"", "she", "said", "!"]
        );
    }

    #[test]
    fn simple_keeps_lexicon_runs_whole() {
        assert_eq!(tokenize("wait...", TokenizeMode::Simple), vec!["wait", "..."]);
        assert_eq!(tokenize("what?!", TokenizeMode::Simple), vec!["what", "?!"]);
        assert_eq!(tokenize("!!!", TokenizeMode::Simple), vec!["!!!"]);
        assert_eq!(tokenize("end.\"", TokenizeMode::Simple), vec!["end", ".", "\""]);
    }

    #[test]
    fn inner_apostrophes_stay() {
        assert_eq!(tokenize("don't", TokenizeMode::Simple), vec!["don't"]);
        assert_eq!(tokenize("3.14", TokenizeMode::Simple), vec!["3.14"]);
    }
}
