use std::collections::BTreeMap;

use dsqn_microworld::{GameSpec, StateLabel};
use dsqn_tensor::ParameterStore;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans_pp, MAX_ITERATIONS};
use super::play::{play_episode, Policy};
use super::vmeasure::{v_measure, VMeasure};
use crate::agent::{semantic_embedding, Network, Tokens};
use crate::error::{CoreError, Result};
use crate::vocab::Vocabulary;

pub const MIN_LABEL_COUNT: usize = 10;
pub const CORPUS_SIZE: usize = 5_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub scores: VMeasure,
    /// Number of clusters, equal to the number of surviving labels.
    pub k: usize,
    /// Trajectories that survived the label-count filter.
    pub points: usize,
    pub inertia: f64,
}

/// Plays the games round-robin until `size` decision-point trajectories
/// have been gathered.
pub fn gather_corpus<P: Policy>(
    policy: &mut P,
    games: &[GameSpec],
    size: usize,
    vocab: &Vocabulary,
) -> Result<Vec<(Tokens, StateLabel)>> {
    if games.is_empty() {
        return Err(CoreError::invalid("no games to gather a corpus from"));
    }
    let mut out = Vec::with_capacity(size);
    let mut g = 0;
    while out.len() < size {
        out.extend(play_episode(policy, &games[g % games.len()], vocab)?.states);
        g += 1;
    }
    out.truncate(size);
    Ok(out)
}

/// Keeps entries whose label occurs at least `min_count` times.
pub fn filter_frequent<T: Clone>(corpus: &[(T, StateLabel)], min_count: usize) -> Vec<(T, StateLabel)> {
    let mut counts: BTreeMap<StateLabel, usize> = BTreeMap::new();
    for (_, l) in corpus {
        *counts.entry(*l).or_insert(0) += 1;
    }
    corpus.iter().filter(|(_, l)| counts[l] >= min_count).cloned().collect()
}

/// Clusters `points` into as many groups as there are distinct labels.
pub fn cluster_points<R: Rng>(points: &[Vec<f64>], labels: &[StateLabel], restarts: usize, rng: &mut R) -> Result<ClusterReport> {
    let k = labels.iter().collect::<std::collections::BTreeSet<_>>().len();
    if k < 2 {
        return Err(CoreError::invalid(format!("clustering needs at least 2 labels, found {k}")));
    }
    let km = kmeans_pp(points, k, restarts, MAX_ITERATIONS, rng)?;
    Ok(ClusterReport {
        scores: v_measure(labels, &km.assignments)?,
        k,
        points: points.len(),
        inertia: km.inertia,
    })
}

pub fn cluster_eval<R: Rng>(
    net: &Network,
    store: &ParameterStore,
    factored: bool,
    corpus: &[(Tokens, StateLabel)],
    min_count: usize,
    restarts: usize,
    rng: &mut R,
) -> Result<ClusterReport> {
    let kept = filter_frequent(corpus, min_count);
    let points = kept
        .iter()
        .map(|(t, _)| semantic_embedding(net, store, t, factored))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<StateLabel> = kept.iter().map(|(_, l)| *l).collect();
    cluster_points(&points, &labels, restarts, rng)
}
