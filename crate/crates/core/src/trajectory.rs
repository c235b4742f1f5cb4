//! Dialogue histories and their flattened token form.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::vocab::{TokenId, Vocabulary, SEP};

/// Tokens kept from the end of a flattened trajectory.
pub const MAX_TOKENS: usize = 500;
/// Actions are strictly shorter than this.
pub const MAX_ACTION_TOKENS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    Game,
    Player,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub speaker: Speaker,
    pub text: String,
}

/// Game and player turns, alternating, starting with the game.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    utterances: Vec<Utterance>,
}

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn opening(text: impl Into<String>) -> Self {
        let mut t = Self::new();
        t.push(Speaker::Game, text).expect("first turn is the game's");
        t
    }

    pub fn push(&mut self, speaker: Speaker, text: impl Into<String>) -> Result<()> {
        let expected = match self.utterances.last() {
            None | Some(Utterance { speaker: Speaker::Player, .. }) => Speaker::Game,
            Some(_) => Speaker::Player,
        };
        if speaker != expected {
            return Err(CoreError::invalid(format!("expected a {expected:?} turn")));
        }
        self.utterances.push(Utterance {
            speaker,
            text: text.into(),
        });
        Ok(())
    }

    pub fn utterances(&self) -> &[Utterance] {
        &self.utterances
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn flatten(&self, vocab: &Vocabulary) -> Vec<TokenId> {
        let parts: Vec<Vec<TokenId>> = self.utterances.iter().map(|u| vocab.tokenize(&u.text)).collect();
        flatten_tokens(&parts, MAX_TOKENS)
    }
}

/// Joins utterances with SEP and keeps only the last `max` tokens.
pub fn flatten_tokens(parts: &[Vec<TokenId>], max: usize) -> Vec<TokenId> {
    let mut out = Vec::new();
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            out.push(SEP);
        }
        out.extend_from_slice(p);
    }
    if out.len() > max {
        out.drain(..out.len() - max);
    }
    out
}

/// Tokenized command; 1 to 9 tokens.
pub fn action_tokens(vocab: &Vocabulary, command: &str) -> Result<Vec<TokenId>> {
    let t = vocab.tokenize(command);
    if t.is_empty() || t.len() >= MAX_ACTION_TOKENS {
        return Err(CoreError::invalid(format!(
            "action `{command}` has {} tokens; need 1 to {}",
            t.len(),
            MAX_ACTION_TOKENS - 1
        )));
    }
    Ok(t)
}

/// Running history of one episode, kept tokenized per utterance so that each
/// step only tokenizes the new turns.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenHistory {
    parts: Vec<Vec<TokenId>>,
    /// Tokens the flattened form may hold.
    window: usize,
}

impl TokenHistory {
    pub fn opening(vocab: &Vocabulary, text: &str) -> Self {
        Self::with_window(vocab, text, MAX_TOKENS)
    }

    pub fn with_window(vocab: &Vocabulary, text: &str, window: usize) -> Self {
        TokenHistory {
            parts: vec![vocab.tokenize(text)],
            window: window.max(1),
        }
    }

    pub fn push_turn(&mut self, vocab: &Vocabulary, command: &str, response: &str) {
        self.parts.push(vocab.tokenize(command));
        self.parts.push(vocab.tokenize(response));
        // Drop turns that the window can no longer reach.
        let mut total = 0;
        let mut keep_from = self.parts.len();
        while keep_from > 0 && total < self.window {
            keep_from -= 1;
            total += self.parts[keep_from].len() + 1;
        }
        if keep_from > 0 {
            // An even cut keeps the history opening on game text.
            let cut = keep_from - keep_from % 2;
            self.parts.drain(..cut);
        }
    }

    pub fn flatten(&self) -> Vec<TokenId> {
        flatten_tokens(&self.parts, self.window)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::UNK;

    #[test]
    fn flatten_examples() {
        let v = Vocabulary::game_lexicon();
        let mut t = Trajectory::opening("You take the knife.");
        t.push(Speaker::Player, "look").unwrap();
        assert_eq!(t.flatten(&v).len(), 5 + 1 + 1);
        assert!(Trajectory::new().flatten(&v).is_empty());
        assert!(t.push(Speaker::Player, "look").is_err());
    }

    #[test]
    fn long_streams_keep_the_tail() {
        let parts: Vec<Vec<TokenId>> = (0..6).map(|i| vec![10 + i as TokenId; 99]).collect();
        // 6 * 99 tokens + 5 separators = 599
        let full = flatten_tokens(&parts, usize::MAX);
        assert_eq!(full.len(), 599);
        let trimmed = flatten_tokens(&parts, MAX_TOKENS);
        assert_eq!(trimmed.len(), 500);
        assert_eq!(trimmed[..], full[99..]);
    }

    #[test]
    fn history_matches_full_flatten() {
        let v = Vocabulary::game_lexicon();
        let mut traj = Trajectory::opening("You are in the kitchen.");
        let mut hist = TokenHistory::opening(&v, "You are in the kitchen.");
        for i in 0..80 {
            let resp = format!("You see a carrot, an egg and a knife. Step {i}.");
            traj.push(Speaker::Player, "examine carrot").unwrap();
            traj.push(Speaker::Game, resp.clone()).unwrap();
            hist.push_turn(&v, "examine carrot", &resp);
            assert_eq!(hist.flatten(), traj.flatten(&v));
        }
    }

    #[test]
    fn action_length_bounds() {
        let v = Vocabulary::game_lexicon();
        assert!(action_tokens(&v, "").is_err());
        assert!(action_tokens(&v, "a b c d e f g h i j").is_err());
        assert_eq!(action_tokens(&v, "eat toffee lump").unwrap()[1..], [UNK, UNK]);
    }
}
