use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub model_dim: usize,
    pub heads: usize,
    pub inner_dim: usize,
    pub layers: usize,
    pub word_embed_dim: usize,
    pub max_tokens: usize,
    pub action_units: usize,
    /// Adds sinusoidal position encodings to the trajectory encoder input.
    pub positional: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            model_dim: 128,
            heads: 8,
            inner_dim: 256,
            layers: 1,
            word_embed_dim: 64,
            max_tokens: 500,
            action_units: 32,
            positional: true,
        }
    }
}

impl EncoderConfig {
    /// Tiny shapes for gradient checks and fast tests.
    pub fn micro() -> Self {
        EncoderConfig {
            model_dim: 8,
            heads: 2,
            inner_dim: 16,
            layers: 1,
            word_embed_dim: 8,
            max_tokens: 500,
            action_units: 8,
            positional: true,
        }
    }

    pub fn head_dim(&self) -> usize {
        self.model_dim / self.heads
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CoreError::Config(m.to_string()));
        if [self.model_dim, self.heads, self.inner_dim, self.word_embed_dim, self.max_tokens, self.action_units]
            .contains(&0)
        {
            return bad("encoder sizes must be positive");
        }
        if self.model_dim % self.heads != 0 {
            return bad("model_dim must be divisible by heads");
        }
        if self.layers != 1 {
            return bad("the trajectory encoder has exactly one layer");
        }
        Ok(())
    }
}
