//! Closed-lexicon tokenizer.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use crate::error::{CoreError, Result};

pub type TokenId = u32;

pub const PAD: TokenId = 0;
pub const UNK: TokenId = 1;
pub const SEP: TokenId = 2;

const RESERVED: [&str; 3] = ["<pad>", "<unk>", "<sep>"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, TokenId>,
}

/// Lowercased words; every non-alphanumeric, non-space character is its own
/// token.
pub fn split_words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut word = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            word.extend(ch.to_lowercase());
            continue;
        }
        if !word.is_empty() {
            out.push(std::mem::take(&mut word));
        }
        if !ch.is_whitespace() {
            out.push(ch.to_string());
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

impl Vocabulary {
    /// Reserved tokens first, then every word of `texts` in sorted order.
    pub fn from_texts<S: AsRef<str>>(texts: &[S]) -> Self {
        let words: BTreeSet<String> = texts.iter().flat_map(|t| split_words(t.as_ref())).collect();
        let tokens = RESERVED
            .iter()
            .map(|s| s.to_string())
            .chain(words.into_iter().filter(|w| !RESERVED.contains(&w.as_str())))
            .collect();
        Self::from_tokens(tokens).expect("reserved tokens are in place")
    }

    /// The vocabulary of everything the game generator can print, except
    /// treasure-hunt entity and room names.
    pub fn game_lexicon() -> Self {
        Self::from_texts(&dsqn_microworld::lexicon::vocabulary_surface())
    }

    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        for (i, r) in RESERVED.iter().enumerate() {
            if tokens.get(i).map(String::as_str) != Some(*r) {
                return Err(CoreError::Vocabulary(format!("line {} must be {r}", i + 1)));
            }
        }
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(CoreError::Vocabulary(format!("line {}: bad token {t:?}", i + 1)));
            }
            if ids.insert(t.clone(), i as TokenId).is_some() {
                return Err(CoreError::Vocabulary(format!("line {}: duplicate token {t:?}", i + 1)));
            }
        }
        Ok(Vocabulary { tokens, ids })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> TokenId {
        self.ids.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokenize(&self, text: &str) -> Vec<TokenId> {
        split_words(text).iter().map(|w| self.id(w)).collect()
    }

    /// One token per line; the line number is the id.
    pub fn to_text(&self) -> String {
        let mut s = self.tokens.join("\n");
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_tokens(text.lines().map(str::to_string).collect())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| CoreError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
        Self::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_examples() {
        let v = Vocabulary::game_lexicon();
        assert_eq!(v.id("<pad>"), PAD);
        assert!(v.tokenize("").is_empty());
        let ids = v.tokenize("Take the knife.");
        let want: Vec<TokenId> = ["take", "the", "knife", "."].iter().map(|w| v.id(w)).collect();
        assert_eq!(ids, want);
        assert!(ids.iter().all(|&i| i != UNK));
        assert_eq!(v.tokenize("take golden amulet")[1..], [UNK, UNK]);
    }

    #[test]
    fn ids_are_dense_and_file_round_trips() {
        let v = Vocabulary::game_lexicon();
        for i in 0..v.len() {
            assert_eq!(v.id(v.token(i as TokenId).unwrap()), i as TokenId);
        }
        assert_eq!(Vocabulary::from_text(&v.to_text()).unwrap(), v);
        assert!(Vocabulary::from_text("a\nb\n").is_err());
    }

    #[test]
    fn punctuation_splits() {
        assert_eq!(split_words("Oh no, the EGG is ruined!"), ["oh", "no", ",", "the", "egg", "is", "ruined", "!"]);
    }
}
