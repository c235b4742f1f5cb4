use std::sync::Arc;

use dsqn_microworld::{GameSpec, StateLabel};
use dsqn_tensor::ParameterStore;
use rand::Rng;

use super::play::{play_episode, Policy};
use crate::agent::{snn_predict, Network, PairLabel, Tokens};
use crate::error::{CoreError, Result};
use crate::train::{sample_snn_batch, LabelIndex, SnnPair};
use crate::vocab::Vocabulary;

/// Fraction of pairs where `predict(pair) > 0.5` agrees with the label.
pub fn accuracy_with<F>(pairs: &[SnnPair], mut predict: F) -> Result<f64>
where
    F: FnMut(&SnnPair) -> Result<f64>,
{
    if pairs.is_empty() {
        return Err(CoreError::invalid("empty pair corpus"));
    }
    let mut right = 0usize;
    for p in pairs {
        let same = predict(p)? > 0.5;
        if same == (p.label == PairLabel::Equivalent) {
            right += 1;
        }
    }
    Ok(right as f64 / pairs.len() as f64)
}

pub fn snn_accuracy(net: &Network, store: &ParameterStore, factored: bool, pairs: &[SnnPair]) -> Result<f64> {
    accuracy_with(pairs, |p| snn_predict(net, store, &p.a, &p.b, factored))
}

/// Trajectories and labels visited while `policy` plays each game once.
pub fn episode_memory<P: Policy>(policy: &mut P, games: &[GameSpec], vocab: &Vocabulary) -> Result<Vec<(Tokens, StateLabel)>> {
    let mut out = Vec::new();
    for spec in games {
        out.extend(play_episode(policy, spec, vocab)?.states);
    }
    Ok(out)
}

/// A balanced pair corpus drawn from an evaluation memory.
pub fn pair_corpus<R: Rng>(memory: &[(Tokens, StateLabel)], n_pairs: usize, rng: &mut R) -> Vec<SnnPair> {
    let pool: Vec<Tokens> = memory.iter().map(|(t, _)| Arc::clone(t)).collect();
    let index = LabelIndex::from_labels(memory.iter().map(|(_, l)| *l));
    sample_snn_batch(&pool, &index, n_pairs, rng)
}
