use dsqn_tensor::{ParamId, ParameterStore, Tape, Tensor, Var};
use rand::Rng;

use super::init::{xavier_uniform, zeros};
use super::EncoderConfig;
use crate::error::{CoreError, Result};
use crate::vocab::{TokenId, PAD};

const LN_EPS: f64 = 1e-5;

/// Fixed sinusoidal table, `[len×dim]`.
pub fn positional_encoding(len: usize, dim: usize) -> Tensor {
    let mut data = Vec::with_capacity(len * dim);
    for pos in 0..len {
        for j in 0..dim {
            let rate = 10000f64.powf((2 * (j / 2)) as f64 / dim as f64);
            let angle = pos as f64 / rate;
            data.push(if j % 2 == 0 { angle.sin() } else { angle.cos() });
        }
    }
    Tensor::mat(len, dim, data)
}

#[derive(Clone, Debug)]
struct Linear {
    w: ParamId,
    b: ParamId,
}

impl Linear {
    fn register<R: Rng>(store: &mut ParameterStore, name: &str, rows: usize, cols: usize, rng: &mut R) -> Result<Self> {
        Ok(Linear {
            w: store.insert(format!("{name}.w"), xavier_uniform(rng, rows, cols))?,
            b: store.insert(format!("{name}.b"), zeros(1, cols))?,
        })
    }

    fn apply(&self, tape: &mut Tape, store: &ParameterStore, x: Var) -> Result<Var> {
        let w = tape.param(store, self.w);
        let b = tape.param(store, self.b);
        let xw = tape.matmul(x, w)?;
        Ok(tape.add_row(xw, b)?)
    }
}

#[derive(Clone, Debug)]
struct LayerNorm {
    gain: ParamId,
    bias: ParamId,
}

impl LayerNorm {
    fn register(store: &mut ParameterStore, name: &str, dim: usize) -> Result<Self> {
        Ok(LayerNorm {
            gain: store.insert(format!("{name}.gain"), Tensor::full(vec![1, dim], 1.0))?,
            bias: store.insert(format!("{name}.bias"), zeros(1, dim))?,
        })
    }

    fn apply(&self, tape: &mut Tape, store: &ParameterStore, x: Var) -> Result<Var> {
        let g = tape.param(store, self.gain);
        let b = tape.param(store, self.bias);
        let n = tape.layer_norm_rows(x, LN_EPS)?;
        let scaled = tape.mul_row(n, g)?;
        Ok(tape.add_row(scaled, b)?)
    }
}

/// One post-norm transformer layer over word embeddings, max-pooled over the
/// non-padding positions.
#[derive(Clone, Debug)]
pub struct StateEncoder {
    cfg: EncoderConfig,
    embed: ParamId,
    proj: Linear,
    q: Linear,
    k: Linear,
    v: Linear,
    o: Linear,
    ln1: LayerNorm,
    ffn1: Linear,
    ffn2: Linear,
    ln2: LayerNorm,
    positions: Tensor,
}

impl StateEncoder {
    pub fn register<R: Rng>(store: &mut ParameterStore, cfg: &EncoderConfig, vocab: usize, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let (e, d, f) = (cfg.word_embed_dim, cfg.model_dim, cfg.inner_dim);
        Ok(StateEncoder {
            cfg: cfg.clone(),
            embed: store.insert("state.embed", xavier_uniform(rng, vocab, e))?,
            proj: Linear::register(store, "state.proj", e, d, rng)?,
            q: Linear::register(store, "state.attn.q", d, d, rng)?,
            k: Linear::register(store, "state.attn.k", d, d, rng)?,
            v: Linear::register(store, "state.attn.v", d, d, rng)?,
            o: Linear::register(store, "state.attn.o", d, d, rng)?,
            ln1: LayerNorm::register(store, "state.ln1", d)?,
            ffn1: Linear::register(store, "state.ffn1", d, f, rng)?,
            ffn2: Linear::register(store, "state.ffn2", f, d, rng)?,
            ln2: LayerNorm::register(store, "state.ln2", d)?,
            positions: positional_encoding(cfg.max_tokens, d),
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.cfg
    }

    /// `[1×model_dim]` encoding of a flattened trajectory. PAD positions are
    /// neither attended to nor pooled.
    pub fn forward(&self, tape: &mut Tape, store: &ParameterStore, tokens: &[TokenId]) -> Result<Var> {
        let n = tokens.len();
        if n == 0 || n > self.cfg.max_tokens {
            return Err(CoreError::invalid(format!(
                "trajectory of {n} tokens; need 1 to {}",
                self.cfg.max_tokens
            )));
        }
        let keep: Vec<bool> = tokens.iter().map(|&t| t != PAD).collect();
        let live: Vec<usize> = (0..n).filter(|&i| keep[i]).collect();
        if live.is_empty() {
            return Err(CoreError::invalid("trajectory holds only padding"));
        }
        let d = self.cfg.model_dim;
        let embed = tape.param(store, self.embed);
        let ids: Vec<usize> = tokens.iter().map(|&t| t as usize).collect();
        let words = tape.gather_rows(embed, &ids)?;
        let mut x = self.proj.apply(tape, store, words)?;
        if self.cfg.positional {
            let pe = Tensor::mat(n, d, self.positions.data()[..n * d].to_vec());
            let pe = tape.constant(pe);
            x = tape.add(x, pe)?;
        }

        let q = self.q.apply(tape, store, x)?;
        let k = self.k.apply(tape, store, x)?;
        let v = self.v.apply(tape, store, x)?;
        let hd = self.cfg.head_dim();
        let scale = 1.0 / (hd as f64).sqrt();
        let mut heads = Vec::with_capacity(self.cfg.heads);
        for h in 0..self.cfg.heads {
            let qh = tape.slice_cols(q, h * hd, hd)?;
            let kh = tape.slice_cols(k, h * hd, hd)?;
            let vh = tape.slice_cols(v, h * hd, hd)?;
            let kt = tape.transpose(kh)?;
            let raw = tape.matmul(qh, kt)?;
            let scores = tape.scale(raw, scale);
            let attn = tape.softmax_rows_masked(scores, Some(&keep))?;
            heads.push(tape.matmul(attn, vh)?);
        }
        let ctx = if heads.len() == 1 { heads[0] } else { tape.concat_cols(&heads)? };
        let attended = self.o.apply(tape, store, ctx)?;
        let res1 = tape.add(x, attended)?;
        let x1 = self.ln1.apply(tape, store, res1)?;

        let hidden = self.ffn1.apply(tape, store, x1)?;
        let hidden = tape.relu(hidden);
        let ff = self.ffn2.apply(tape, store, hidden)?;
        let res2 = tape.add(x1, ff)?;
        let x2 = self.ln2.apply(tape, store, res2)?;

        let pooled_rows = if live.len() == n { x2 } else { tape.gather_rows(x2, &live)? };
        Ok(tape.max_axis(pooled_rows, 0)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_start_with_sin_cos() {
        let pe = positional_encoding(3, 4);
        assert_eq!(pe.at(0, 0), 0.0);
        assert_eq!(pe.at(0, 1), 1.0);
        assert!((pe.at(1, 0) - 1f64.sin()).abs() < 1e-15);
        assert!((pe.at(2, 3) - (2.0 / 100f64).cos()).abs() < 1e-15);
    }
}
