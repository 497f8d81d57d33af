//! Small synthetic corpora for tests, examples and smoke runs.

use crate::data::{Corpus, RawExample, Source, TagLexicon, Task};
use crate::numerics::Rng;

const FILLERS: &[&str] = &["the", "film", "was", "plot", "a", "it", "story", "really"];
pub const POSITIVE_WORD: &str = "good";
pub const NEGATIVE_WORD: &str = "bad";

/// Binary corpus where each sentence holds 2 to 4 filler words and exactly
/// one label-bearing word ("good" → 1, "bad" → 0) at a random position.
/// Labels alternate, so every split is balanced. Validation and test splits
/// hold `n / 2` examples each.
pub fn separable_corpus(n: usize, seed: u64) -> Corpus {
    let mut rng = Rng::new(seed);
    let mut split = |count: usize| -> Vec<RawExample> {
        (0..count)
            .map(|i| {
                let label = i % 2;
                let mut words: Vec<String> = (0..2 + rng.below(3))
                    .map(|_| FILLERS[rng.below(FILLERS.len())].to_string())
                    .collect();
                let at = rng.below(words.len() + 1);
                let key = if label == 1 { POSITIVE_WORD } else { NEGATIVE_WORD };
                words.insert(at, key.to_string());
                RawExample {
                    text_tokens: words,
                    label,
                    source: Source::SstSentence,
                }
            })
            .collect()
    };
    let train = split(n);
    let val = split(n / 2);
    let test = split(n / 2);
    Corpus::from_raw(Task::SstCoarse, train, val, test, &TagLexicon::new(), false)
        .expect("toy labels are valid")
}

/// Position of the label-bearing word in a toy sentence.
pub fn key_position(text_tokens: &[String]) -> Option<usize> {
    text_tokens
        .iter()
        .position(|t| t == POSITIVE_WORD || t == NEGATIVE_WORD)
}
