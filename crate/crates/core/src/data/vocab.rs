use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub const UNK: usize = 0;
pub const UNK_TOKEN: &str = "<unk>";

/// Token ↔ embedding-row index. Id 0 is reserved for unknown tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::from(vec![UNK_TOKEN.to_string()])
    }
}

impl Vocabulary {
    /// Assigns ids in first-seen order.
    pub fn build<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Self {
        let mut v = Self::default();
        for t in tokens {
            v.insert(t);
        }
        v
    }

    pub fn insert(&mut self, token: &str) -> usize {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        let id = self.tokens.len();
        self.tokens.push(token.to_string());
        self.index.insert(token.to_string(), id);
        id
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 1
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Id for a token. Unknown surface forms are retried lowercased and
    /// then capitalized before mapping to [`UNK`].
    pub fn encode(&self, token: &str) -> usize {
        if let Some(id) = self.get(token) {
            return id;
        }
        let lower = token.to_lowercase();
        if let Some(id) = self.get(&lower) {
            return id;
        }
        let mut chars = lower.chars();
        let capital: String = match chars.next() {
            Some(c) => c.to_uppercase().chain(chars).collect(),
            None => return UNK,
        };
        self.get(&capital).unwrap_or(UNK)
    }

    pub fn encode_all<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.encode(t.as_ref())).collect()
    }

    pub fn decode(&self, id: usize) -> &str {
        self.tokens.get(id).map_or(UNK_TOKEN, String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

impl From<Vec<String>> for Vocabulary {
    fn from(mut tokens: Vec<String>) -> Self {
        if tokens.first().map(String::as_str) != Some(UNK_TOKEN) {
            tokens.insert(0, UNK_TOKEN.to_string());
        }
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self { tokens, index }
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}
