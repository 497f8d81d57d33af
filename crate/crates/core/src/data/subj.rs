use std::path::Path;

use super::tokenize::tokenize;
use super::{RawExample, Source};
use crate::error::{Error, Result};
use crate::numerics::Rng;

pub const SUBJECTIVE: usize = 0;
pub const OBJECTIVE: usize = 1;

/// Reads one sentence per line. Lines that are not valid UTF-8 are decoded
/// as Latin-1, which is how the original distribution is encoded.
pub fn read_sentences(path: &Path) -> Result<Vec<Vec<String>>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(bytes
        .split(|&b| b == b'\n')
        .map(|line| match std::str::from_utf8(line) {
            Ok(s) => tokenize(s),
            Err(_) => tokenize(&line.iter().map(|&b| b as char).collect::<String>()),
        })
        .filter(|toks| !toks.is_empty())
        .collect())
}

/// Labels, shuffles and splits the subjective/objective sentence files.
pub fn split_subjectivity(
    subjective: Vec<Vec<String>>,
    objective: Vec<Vec<String>>,
    rng: &mut Rng,
    sizes: (usize, usize, usize),
) -> Result<(Vec<RawExample>, Vec<RawExample>, Vec<RawExample>)> {
    let mut all: Vec<RawExample> = subjective
        .into_iter()
        .map(|t| (t, SUBJECTIVE))
        .chain(objective.into_iter().map(|t| (t, OBJECTIVE)))
        .map(|(text_tokens, label)| RawExample {
            text_tokens,
            label,
            source: Source::Subj,
        })
        .collect();
    let (n_train, n_val, n_test) = sizes;
    let wanted = n_train + n_val + n_test;
    if wanted > all.len() {
        return Err(Error::Data(format!(
            "requested split of {wanted} sentences but the corpus has {}",
            all.len()
        )));
    }
    rng.shuffle(&mut all);
    all.truncate(wanted);
    let test = all.split_off(n_train + n_val);
    let val = all.split_off(n_train);
    Ok((all, val, test))
}

pub fn load_subjectivity(
    subjective_path: &Path,
    objective_path: &Path,
    rng: &mut Rng,
    sizes: (usize, usize, usize),
) -> Result<(Vec<RawExample>, Vec<RawExample>, Vec<RawExample>)> {
    split_subjectivity(
        read_sentences(subjective_path)?,
        read_sentences(objective_path)?,
        rng,
        sizes,
    )
}
