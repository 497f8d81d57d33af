use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The 12-tag universal part-of-speech inventory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UniversalTag {
    #[serde(rename = "ADJ")]
    Adj,
    #[serde(rename = "ADP")]
    Adp,
    #[serde(rename = "ADV")]
    Adv,
    #[serde(rename = "CONJ")]
    Conj,
    #[serde(rename = "DET")]
    Det,
    #[serde(rename = "NOUN")]
    Noun,
    #[serde(rename = "NUM")]
    Num,
    #[serde(rename = "PRT")]
    Prt,
    #[serde(rename = "PRON")]
    Pron,
    #[serde(rename = "VERB")]
    Verb,
    #[serde(rename = ".")]
    Punct,
    #[serde(rename = "X")]
    X,
}

impl UniversalTag {
    pub const ALL: [UniversalTag; 12] = [
        UniversalTag::Adj,
        UniversalTag::Adp,
        UniversalTag::Adv,
        UniversalTag::Conj,
        UniversalTag::Det,
        UniversalTag::Noun,
        UniversalTag::Num,
        UniversalTag::Prt,
        UniversalTag::Pron,
        UniversalTag::Verb,
        UniversalTag::Punct,
        UniversalTag::X,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            UniversalTag::Adj => "ADJ",
            UniversalTag::Adp => "ADP",
            UniversalTag::Adv => "ADV",
            UniversalTag::Conj => "CONJ",
            UniversalTag::Det => "DET",
            UniversalTag::Noun => "NOUN",
            UniversalTag::Num => "NUM",
            UniversalTag::Prt => "PRT",
            UniversalTag::Pron => "PRON",
            UniversalTag::Verb => "VERB",
            UniversalTag::Punct => ".",
            UniversalTag::X => "X",
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    /// Maps a Penn Treebank tag onto the universal set.
    pub fn from_penn(tag: &str) -> Option<UniversalTag> {
        use UniversalTag::*;
        let t = match tag {
            "!" | "#" | "$" | "''" | "``" | "(" | ")" | "," | "-LRB-" | "-RRB-" | "." | ":"
            | "?" => Punct,
            "CC" => Conj,
            "CD" => Num,
            "DT" | "EX" | "PDT" | "WDT" => Det,
            "FW" | "LS" | "SYM" | "UH" | "RN" | "WH" | "CD|RB" => X,
            "IN" | "IN|RP" => Adp,
            "JJ" | "JJR" | "JJRJR" | "JJS" | "JJ|RB" | "JJ|VBG" => Adj,
            "MD" | "VB" | "VBD" | "VBD|VBN" | "VBG" | "VBG|NN" | "VBN" | "VBP" | "VBP|TO"
            | "VBZ" | "VP" => Verb,
            "NN" | "NNP" | "NNPS" | "NNS" | "NN|NNS" | "NN|SYM" | "NN|VBG" | "NP" => Noun,
            "POS" | "PRT" | "RP" | "TO" => Prt,
            "PRP" | "PRP$" | "PRP|VBP" | "WP" | "WP$" => Pron,
            "RB" | "RBR" | "RBS" | "RB|RP" | "RB|VBG" | "WRB" => Adv,
            _ => return None,
        };
        Some(t)
    }
}

impl fmt::Display for UniversalTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UniversalTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        UniversalTag::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Data(format!("unknown tag {s}")))
    }
}

/// Most-frequent-tag lexicon with a suffix fallback for unseen words.
#[derive(Debug, Clone, Default)]
pub struct TagLexicon {
    counts: HashMap<String, [u64; 12]>,
}

impl TagLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, token: &str, tag: UniversalTag, count: u64) {
        self.counts.entry(token.to_string()).or_insert([0; 12])[tag.index()] += count;
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Reads `token TAB tag TAB count` lines.
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lex = Self::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let (Some(tok), Some(tag), Some(count), None) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(Error::Parse {
                    line: n + 1,
                    msg: "expected token<TAB>tag<TAB>count".into(),
                });
            };
            let tag: UniversalTag = tag.parse()?;
            let count: u64 = count.trim().parse().map_err(|_| Error::Parse {
                line: n + 1,
                msg: format!("bad count {count:?}"),
            })?;
            lex.add(tok, tag, count);
        }
        Ok(lex)
    }

    /// Counts tags from `word/TAG` tokenized text, one sentence per line.
    /// Tags may be universal or Penn Treebank tags.
    pub fn from_tagged_text(text: &str) -> Result<Self> {
        let mut lex = Self::new();
        for (n, line) in text.lines().enumerate() {
            for item in line.split_whitespace() {
                let (word, tag) = item.rsplit_once('/').ok_or_else(|| Error::Parse {
                    line: n + 1,
                    msg: format!("expected word/TAG, got {item:?}"),
                })?;
                let tag = tag
                    .parse::<UniversalTag>()
                    .ok()
                    .or_else(|| UniversalTag::from_penn(tag))
                    .ok_or_else(|| Error::Data(format!("unknown tag {tag}")))?;
                lex.add(word, tag, 1);
            }
        }
        Ok(lex)
    }

    /// Writes the lexicon in the `token TAB tag TAB count` format, sorted.
    pub fn write_to(&self, mut out: impl Write) -> std::io::Result<()> {
        let mut tokens: Vec<&String> = self.counts.keys().collect();
        tokens.sort();
        for tok in tokens {
            for tag in UniversalTag::ALL {
                let c = self.counts[tok][tag.index()];
                if c > 0 {
                    writeln!(out, "{tok}\t{tag}\t{c}")?;
                }
            }
        }
        Ok(())
    }

    /// Most frequent tag for a known token; ties go to the earlier tag in
    /// [`UniversalTag::ALL`]. Falls back to the lowercased form.
    pub fn lookup(&self, token: &str) -> Option<UniversalTag> {
        let counts = self
            .counts
            .get(token)
            .or_else(|| self.counts.get(&token.to_lowercase()))?;
        let mut best = None;
        for tag in UniversalTag::ALL {
            let c = counts[tag.index()];
            if c > 0 && best.map_or(true, |(_, bc)| c > bc) {
                best = Some((tag, c));
            }
        }
        best.map(|(t, _)| t)
    }
}

/// Tags every token: lexicon first, then shape/suffix rules.
pub fn tag_pos<S: AsRef<str>>(tokens: &[S], lexicon: &TagLexicon) -> Vec<UniversalTag> {
    tokens
        .iter()
        .map(|t| {
            let t = t.as_ref();
            lexicon.lookup(t).unwrap_or_else(|| fallback_tag(t))
        })
        .collect()
}

const BRACKETS: [&str; 6] = ["-LRB-", "-RRB-", "-LSB-", "-RSB-", "-LCB-", "-RCB-"];

fn fallback_tag(token: &str) -> UniversalTag {
    if token.chars().any(|c| c.is_ascii_digit())
        && token
            .chars()
            .all(|c| c.is_ascii_digit() || matches!(c, ',' | '.' | '-' | '/' | ':'))
    {
        return UniversalTag::Num;
    }
    if BRACKETS.contains(&token) || (!token.is_empty() && token.chars().all(|c| !c.is_alphanumeric()))
    {
        return UniversalTag::Punct;
    }
    let lower = token.to_lowercase();
    let has = |suffix: &str| lower.len() >= suffix.len() + 2 && lower.ends_with(suffix);
    if has("ly") {
        UniversalTag::Adv
    } else if has("ness") || has("tion") {
        UniversalTag::Noun
    } else if has("able") || has("ous") || has("ful") {
        UniversalTag::Adj
    } else {
        UniversalTag::X
    }
}

/// Reads a sidecar file with one whitespace-separated tag line per example.
pub fn load_tag_sidecar(path: &Path) -> Result<Vec<Vec<UniversalTag>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tag_sidecar(&text)
}

pub fn parse_tag_sidecar(text: &str) -> Result<Vec<Vec<UniversalTag>>> {
    text.lines()
        .map(|line| line.split_whitespace().map(str::parse).collect())
        .collect()
}

/// Checks that sidecar tag lines line up with token sequences one-to-one.
pub fn align_sidecar<S: AsRef<str>>(
    token_seqs: &[Vec<S>],
    tags: Vec<Vec<UniversalTag>>,
) -> Result<Vec<Vec<UniversalTag>>> {
    if tags.len() != token_seqs.len() {
        return Err(Error::Alignment(format!(
            "sidecar has {} lines but the corpus has {} examples",
            tags.len(),
            token_seqs.len()
        )));
    }
    for (i, (toks, t)) in token_seqs.iter().zip(&tags).enumerate() {
        if toks.len() != t.len() {
            return Err(Error::Alignment(format!(
                "example {i}: {} tokens but {} tags",
                toks.len(),
                t.len()
            )));
        }
    }
    Ok(tags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use UniversalTag::*;

    const TAGGED: &str = "\
a/DT lovely/JJ film/NN ./.
the/DT film/NN is/VBZ a/DT lovely/JJ mess/NN
a/DT film/VB
I/PRP film/NN quickly/RB";

    #[test]
    fn lexicon_from_tagged_corpus() {
        let lex = TagLexicon::from_tagged_text(TAGGED).unwrap();
        assert_eq!(tag_pos(&["a", "lovely", "film"], &lex), vec![Det, Adj, Noun]);
    }

    #[test]
    fn numeric_and_punct_rules() {
        let lex = TagLexicon::new();
        assert_eq!(tag_pos(&["1984"], &lex), vec![Num]);
        assert_eq!(tag_pos(&["?"], &lex), vec![Punct]);
        assert_eq!(tag_pos(&["-LRB-", "3,000", "..."], &lex), vec![Punct, Num, Punct]);
    }

    #[test]
    fn suffix_rules() {
        let lex = TagLexicon::new();
        assert_eq!(
            tag_pos(&["sadly", "darkness", "creation", "readable", "famous", "joyful", "zorp", "fly"], &lex),
            vec![Adv, Noun, Noun, Adj, Adj, Adj, X, X]
        );
    }

    #[test]
    fn lexicon_case_fallback_and_ties() {
        let mut lex = TagLexicon::new();
        lex.add("run", Verb, 3);
        lex.add("run", Noun, 3);
        assert_eq!(lex.lookup("Run"), Some(Noun));
    }

    #[test]
    fn lexicon_round_trip_through_file() {
        let lex = TagLexicon::from_tagged_text(TAGGED).unwrap();
        let mut buf = Vec::new();
        lex.write_to(&mut buf).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("lex.tsv");
        std::fs::write(&p, &buf).unwrap();
        let back = TagLexicon::load(&p).unwrap();
        assert_eq!(back.lookup("film"), Some(Noun));
        assert_eq!(back.lookup("quickly"), Some(Adv));
        assert_eq!(back.len(), lex.len());
    }

    #[test]
    fn sidecar_accepts_aligned_lines() {
        let tags = parse_tag_sidecar("DET ADJ NOUN\n").unwrap();
        let toks = vec![vec!["a", "lovely", "film"]];
        assert_eq!(align_sidecar(&toks, tags).unwrap()[0], vec![Det, Adj, Noun]);
    }

    #[test]
    fn sidecar_unknown_tag() {
        let err = parse_tag_sidecar("DET FOO").unwrap_err();
        assert!(err.to_string().contains("unknown tag FOO"), "{err}");
    }

    #[test]
    fn sidecar_too_short() {
        let tags = parse_tag_sidecar("DET\n").unwrap();
        let toks = vec![vec!["a"], vec!["b"]];
        assert!(matches!(align_sidecar(&toks, tags), Err(Error::Alignment(_))));
    }

    #[test]
    fn sidecar_length_mismatch() {
        let tags = parse_tag_sidecar("DET NOUN\n").unwrap();
        let toks = vec![vec!["a"]];
        assert!(matches!(align_sidecar(&toks, tags), Err(Error::Alignment(_))));
    }

    #[test]
    fn tag_strings_round_trip() {
        for t in UniversalTag::ALL {
            assert_eq!(t.as_str().parse::<UniversalTag>().unwrap(), t);
            assert_eq!(serde_json::to_string(&t).unwrap(), format!("\"{t}\""));
        }
    }
}
