//! Light PTB-style tokenization for free text.
//!
//! Splits on whitespace, peels punctuation off word edges and separates
//! English clitics the way the treebank does (`don't` → `do n't`).

const EDGE_PUNCT: &[char] = &[
    '.', ',', '!', '?', ';', ':', '"', '(', ')', '[', ']', '{', '}', '`',
];

const CLITICS: &[&str] = &["n't", "'s", "'re", "'ve", "'ll", "'d", "'m"];

pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for raw in text.split_whitespace() {
        let chunk = raw.replace(['\u{2019}', '\u{2018}'], "'");
        let mut s = chunk.as_str();

        while let Some(c) = s.chars().next() {
            if EDGE_PUNCT.contains(&c) && s.len() > c.len_utf8() {
                out.push(c.to_string());
                s = &s[c.len_utf8()..];
            } else {
                break;
            }
        }

        let mut tail = Vec::new();
        while let Some(c) = s.chars().last() {
            if !EDGE_PUNCT.contains(&c) || s.len() == c.len_utf8() {
                break;
            }
            // a run of dots stays one token
            if c == '.' {
                let core = s.trim_end_matches('.');
                if core.is_empty() {
                    break;
                }
                tail.push(s[core.len()..].to_string());
                s = core;
            } else {
                tail.push(c.to_string());
                s = &s[..s.len() - c.len_utf8()];
            }
        }

        if !s.is_empty() {
            split_clitic(s, &mut out);
        }
        out.extend(tail.into_iter().rev());
    }
    out
}

fn split_clitic(word: &str, out: &mut Vec<String>) {
    let lower = word.to_lowercase();
    for clitic in CLITICS {
        if lower.len() > clitic.len() && lower.ends_with(clitic) && word.is_char_boundary(word.len() - clitic.len()) {
            let cut = word.len() - clitic.len();
            out.push(word[..cut].to_string());
            out.push(word[cut..].to_string());
            return;
        }
    }
    out.push(word.to_string());
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn negation_clitic() {
        assert_eq!(t("i don't like this movie"), ["i", "do", "n't", "like", "this", "movie"]);
        assert_eq!(t("It isn't great."), ["It", "is", "n't", "great", "."]);
    }

    #[test]
    fn punctuation_edges() {
        assert_eq!(t("\"Wow,\" she said..."), ["\"", "Wow", ",", "\"", "she", "said", "..."]);
        assert_eq!(t("(great)"), ["(", "great", ")"]);
        assert_eq!(t("?"), ["?"]);
    }

    #[test]
    fn possessive_and_curly_quote() {
        assert_eq!(t("crowd-pleaser\u{2019}s fresh"), ["crowd-pleaser", "'s", "fresh"]);
    }

    #[test]
    fn pretokenized_text_is_stable() {
        let s = "the movie is n't bad .";
        assert_eq!(t(s).join(" "), s);
    }
}
