use std::fmt::Write;

use dsqn_microworld::StateLabel;
use dsqn_tensor::ParameterStore;

use crate::agent::{semantic_embedding, Network, Tokens};
use crate::error::Result;

/// Header `count dim`, then `label v1 v2 ...` per trajectory. Values use the
/// shortest round-trip formatting, so parsing recovers them exactly.
pub fn export_embeddings(net: &Network, store: &ParameterStore, factored: bool, corpus: &[(Tokens, StateLabel)]) -> Result<String> {
    let mut out = format!("{} {}\n", corpus.len(), net.config().model_dim);
    for (t, label) in corpus {
        let v = semantic_embedding(net, store, t, factored)?;
        write!(out, "{label}").expect("write to string");
        for x in v {
            write!(out, " {x}").expect("write to string");
        }
        out.push('\n');
    }
    Ok(out)
}

/// Inverse of [`export_embeddings`].
pub fn parse_embeddings(text: &str) -> Option<Vec<(StateLabel, Vec<f64>)>> {
    let mut lines = text.lines();
    let mut head = lines.next()?.split(' ');
    let count: usize = head.next()?.parse().ok()?;
    let dim: usize = head.next()?.parse().ok()?;
    let mut out = Vec::with_capacity(count);
    for line in lines {
        let mut parts = line.split(' ');
        let label = StateLabel(u64::from_str_radix(parts.next()?, 16).ok()?);
        let v: Vec<f64> = parts.map(|p| p.parse().ok()).collect::<Option<_>>()?;
        if v.len() != dim {
            return None;
        }
        out.push((label, v));
    }
    (out.len() == count).then_some(out)
}
