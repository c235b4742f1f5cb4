use std::collections::VecDeque;

use dsqn_microworld::StateLabel;
use indexmap::IndexMap;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{PairLabel, ReplayMemory, Tokens};

/// Redraws allowed when a drawn label has a single trajectory.
pub const LABEL_REDRAWS: usize = 10;

/// Where sampled trajectories live, addressed by sequence number.
pub trait TrajectoryPool {
    fn trajectory(&self, seq: u64) -> &Tokens;
}

impl TrajectoryPool for ReplayMemory {
    fn trajectory(&self, seq: u64) -> &Tokens {
        &self.get(seq).expect("label index points at a live replay entry").trajectory
    }
}

impl TrajectoryPool for Vec<Tokens> {
    fn trajectory(&self, seq: u64) -> &Tokens {
        &self[seq as usize]
    }
}

/// Label → sequence numbers holding it, oldest first. Labels keep the order
/// in which they were first seen, so sampling never depends on hashing.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelIndex {
    map: IndexMap<StateLabel, VecDeque<u64>>,
    /// Labels with at least two entries.
    multi: usize,
}

impl LabelIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn labels(&self) -> usize {
        self.map.len()
    }

    pub fn entries(&self, label: StateLabel) -> Option<&VecDeque<u64>> {
        self.map.get(&label)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StateLabel, &VecDeque<u64>)> {
        self.map.iter()
    }

    pub fn insert(&mut self, label: StateLabel, seq: u64) {
        let list = self.map.entry(label).or_default();
        list.push_back(seq);
        if list.len() == 2 {
            self.multi += 1;
        }
    }

    /// Drops an evicted entry. Eviction is oldest-first, so it is always at
    /// the front of its label's list.
    pub fn remove_evicted(&mut self, label: StateLabel, seq: u64) {
        let Some(list) = self.map.get_mut(&label) else {
            return;
        };
        if list.front() == Some(&seq) {
            list.pop_front();
            if list.len() == 1 {
                self.multi -= 1;
            }
            if list.is_empty() {
                self.map.shift_remove(&label);
            }
        }
    }

    pub fn from_labels(labels: impl IntoIterator<Item = StateLabel>) -> Self {
        let mut idx = Self::new();
        for (seq, l) in labels.into_iter().enumerate() {
            idx.insert(l, seq as u64);
        }
        idx
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnnPair {
    pub a: Tokens,
    pub b: Tokens,
    pub label: PairLabel,
    pub label_a: StateLabel,
    pub label_b: StateLabel,
}

/// Balanced pair batch. Anchor labels are drawn uniformly from the label
/// space; each anchor yields one same-label and one different-label pair.
/// Returns an empty batch when the pool cannot supply both kinds.
pub fn sample_snn_batch<P: TrajectoryPool, R: Rng>(
    pool: &P,
    index: &LabelIndex,
    n_pairs: usize,
    rng: &mut R,
) -> Vec<SnnPair> {
    let n_labels = index.map.len();
    if n_labels < 2 || index.multi == 0 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(n_pairs);
    for _ in 0..n_pairs / 2 {
        let mut drawn = None;
        for _ in 0..=LABEL_REDRAWS {
            let li = rng.gen_range(0..n_labels);
            if index.map[li].len() >= 2 {
                drawn = Some(li);
                break;
            }
        }
        let Some(li) = drawn else { continue };
        let (&label, list) = index.map.get_index(li).unwrap();
        let i = rng.gen_range(0..list.len());
        let mut j = rng.gen_range(0..list.len() - 1);
        if j >= i {
            j += 1;
        }
        let mut other = rng.gen_range(0..n_labels - 1);
        if other >= li {
            other += 1;
        }
        let (&other_label, other_list) = index.map.get_index(other).unwrap();
        let k = rng.gen_range(0..other_list.len());

        let anchor = pool.trajectory(list[i]).clone();
        out.push(SnnPair {
            a: anchor.clone(),
            b: pool.trajectory(list[j]).clone(),
            label: PairLabel::Equivalent,
            label_a: label,
            label_b: label,
        });
        out.push(SnnPair {
            a: anchor,
            b: pool.trajectory(other_list[k]).clone(),
            label: PairLabel::Different,
            label_a: label,
            label_b: other_label,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn pool(labels: &[u64]) -> (Vec<Tokens>, LabelIndex) {
        let trajs = (0..labels.len()).map(|i| Arc::new(vec![i as u32])).collect();
        (trajs, LabelIndex::from_labels(labels.iter().map(|&l| StateLabel(l))))
    }

    #[test]
    fn degenerate_pools_give_empty_batches() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (p, i) = pool(&[1, 1, 1]);
        assert!(sample_snn_batch(&p, &i, 8, &mut rng).is_empty());
        let (p, i) = pool(&[1, 2, 3]);
        assert!(sample_snn_batch(&p, &i, 8, &mut rng).is_empty());
    }

    #[test]
    fn pairs_are_balanced_and_correctly_labelled() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (p, i) = pool(&[1, 2, 1, 3, 3, 2, 4, 1]);
        for _ in 0..50 {
            let batch = sample_snn_batch(&p, &i, 16, &mut rng);
            let pos = batch.iter().filter(|b| b.label == PairLabel::Equivalent).count();
            assert_eq!(pos * 2, batch.len());
            for b in &batch {
                assert_eq!(b.label == PairLabel::Equivalent, b.label_a == b.label_b);
                if b.label == PairLabel::Equivalent {
                    assert!(!Arc::ptr_eq(&b.a, &b.b));
                }
            }
        }
    }

    #[test]
    fn eviction_repairs_the_index() {
        let mut idx = LabelIndex::from_labels([StateLabel(1), StateLabel(2), StateLabel(1)]);
        assert_eq!(idx.multi, 1);
        idx.remove_evicted(StateLabel(1), 0);
        assert_eq!(idx.multi, 0);
        idx.remove_evicted(StateLabel(2), 1);
        assert_eq!(idx.labels(), 1);
        assert_eq!(idx.entries(StateLabel(1)).unwrap(), &VecDeque::from([2]));
    }
}
