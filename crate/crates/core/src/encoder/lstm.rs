use std::collections::BTreeMap;

use dsqn_tensor::{ParamId, ParameterStore, Tape, Tensor, Var};
use rand::Rng;

use super::init::{xavier_uniform, zeros};
use super::EncoderConfig;
use crate::error::{CoreError, Result};
use crate::trajectory::MAX_ACTION_TOKENS;
use crate::vocab::TokenId;

/// Single-layer LSTM over command tokens; the encoding is the hidden state
/// after the last token. Gate column blocks are input, forget, cell, output.
#[derive(Clone, Debug)]
pub struct ActionEncoder {
    units: usize,
    embed: ParamId,
    wx: ParamId,
    wh: ParamId,
    b: ParamId,
}

impl ActionEncoder {
    pub fn register<R: Rng>(store: &mut ParameterStore, cfg: &EncoderConfig, vocab: usize, rng: &mut R) -> Result<Self> {
        let u = cfg.action_units;
        let mut bias = zeros(1, 4 * u);
        bias.data_mut()[u..2 * u].fill(1.0);
        Ok(ActionEncoder {
            units: u,
            embed: store.insert("action.embed", xavier_uniform(rng, vocab, cfg.word_embed_dim))?,
            wx: store.insert("action.lstm.wx", xavier_uniform(rng, cfg.word_embed_dim, 4 * u))?,
            wh: store.insert("action.lstm.wh", xavier_uniform(rng, u, 4 * u))?,
            b: store.insert("action.lstm.b", bias)?,
        })
    }

    pub fn units(&self) -> usize {
        self.units
    }

    /// `[n×units]`, one row per action in input order. Actions of equal
    /// length share one batched recurrence.
    pub fn forward(&self, tape: &mut Tape, store: &ParameterStore, actions: &[&[TokenId]]) -> Result<Var> {
        if actions.is_empty() {
            return Err(CoreError::invalid("no actions to encode"));
        }
        let mut by_len: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, a) in actions.iter().enumerate() {
            if a.is_empty() || a.len() >= MAX_ACTION_TOKENS {
                return Err(CoreError::invalid(format!("action of {} tokens", a.len())));
            }
            by_len.entry(a.len()).or_default().push(i);
        }
        let embed = tape.param(store, self.embed);
        let wx = tape.param(store, self.wx);
        let wh = tape.param(store, self.wh);
        let b = tape.param(store, self.b);
        let u = self.units;

        let mut blocks = Vec::new();
        let mut order = Vec::with_capacity(actions.len());
        for (len, members) in &by_len {
            let n = members.len();
            let mut h = tape.constant(Tensor::zeros(vec![n, u]));
            let mut c = tape.constant(Tensor::zeros(vec![n, u]));
            for t in 0..*len {
                let ids: Vec<usize> = members.iter().map(|&m| actions[m][t] as usize).collect();
                let x = tape.gather_rows(embed, &ids)?;
                let xw = tape.matmul(x, wx)?;
                let hw = tape.matmul(h, wh)?;
                let pre = tape.add(xw, hw)?;
                let gates = tape.add_row(pre, b)?;
                let i_pre = tape.slice_cols(gates, 0, u)?;
                let f_pre = tape.slice_cols(gates, u, u)?;
                let g_pre = tape.slice_cols(gates, 2 * u, u)?;
                let o_pre = tape.slice_cols(gates, 3 * u, u)?;
                let i = tape.sigmoid(i_pre);
                let f = tape.sigmoid(f_pre);
                let g = tape.tanh(g_pre);
                let o = tape.sigmoid(o_pre);
                let keep = tape.mul(f, c)?;
                let write = tape.mul(i, g)?;
                c = tape.add(keep, write)?;
                let tc = tape.tanh(c);
                h = tape.mul(o, tc)?;
            }
            blocks.push(h);
            order.extend_from_slice(members);
        }
        let stacked = if blocks.len() == 1 { blocks[0] } else { tape.concat_rows(&blocks)? };
        if order.iter().enumerate().all(|(i, &m)| i == m) {
            return Ok(stacked);
        }
        let mut inverse = vec![0; order.len()];
        for (row, &m) in order.iter().enumerate() {
            inverse[m] = row;
        }
        Ok(tape.gather_rows(stacked, &inverse)?)
    }
}
