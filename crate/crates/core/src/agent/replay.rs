use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use dsqn_microworld::StateLabel;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::vocab::TokenId;

pub type Tokens = Arc<Vec<TokenId>>;
pub type ActionSet = Arc<Vec<Vec<TokenId>>>;

/// One step of play. Consecutive transitions of an episode share their
/// trajectory buffers.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub trajectory: Tokens,
    pub action: Vec<TokenId>,
    pub reward: f64,
    pub next_trajectory: Tokens,
    pub terminal: bool,
    /// Unused when `terminal`.
    pub next_admissible: ActionSet,
    /// Label of the game state `trajectory` describes.
    pub label: StateLabel,
}

pub const DEFAULT_CAPACITY: usize = 500_000;

/// Ring buffer with oldest-first eviction. Entries are addressed by a
/// sequence number that keeps counting across evictions.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayMemory {
    capacity: usize,
    entries: VecDeque<Transition>,
    first_seq: u64,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayMemory {
            capacity,
            entries: VecDeque::with_capacity(capacity.min(1 << 16)),
            first_seq: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sequence number the next push will receive.
    pub fn next_seq(&self) -> u64 {
        self.first_seq + self.entries.len() as u64
    }

    /// Sequence number of the oldest entry still held.
    pub fn first_seq(&self) -> u64 {
        self.first_seq
    }

    /// Appends and returns the evicted entry, if the buffer was full.
    pub fn push(&mut self, t: Transition) -> Option<Transition> {
        let evicted = if self.entries.len() == self.capacity {
            self.first_seq += 1;
            self.entries.pop_front()
        } else {
            None
        };
        self.entries.push_back(t);
        evicted
    }

    pub fn get(&self, seq: u64) -> Option<&Transition> {
        let i = seq.checked_sub(self.first_seq)?;
        self.entries.get(usize::try_from(i).ok()?)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.entries.iter()
    }

    /// `n` distinct positions (fewer if the buffer is smaller), uniformly.
    pub fn sample_indices<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        let n = n.min(self.entries.len());
        rand::seq::index::sample(rng, self.entries.len(), n).into_vec()
    }

    pub fn at(&self, i: usize) -> &Transition {
        &self.entries[i]
    }

    pub fn snapshot(&self) -> ReplaySnapshot {
        let mut tables = Interner::default();
        let entries = self
            .entries
            .iter()
            .map(|t| StoredTransition {
                trajectory: tables.tokens(&t.trajectory),
                action: t.action.clone(),
                reward: t.reward,
                next_trajectory: tables.tokens(&t.next_trajectory),
                terminal: t.terminal,
                next_admissible: tables.actions(&t.next_admissible),
                label: t.label,
            })
            .collect();
        ReplaySnapshot {
            capacity: self.capacity,
            first_seq: self.first_seq,
            token_table: tables.token_table,
            action_table: tables.action_table,
            entries,
        }
    }

    pub fn from_snapshot(s: ReplaySnapshot) -> Self {
        let tokens: Vec<Tokens> = s.token_table.into_iter().map(Arc::new).collect();
        let actions: Vec<ActionSet> = s.action_table.into_iter().map(Arc::new).collect();
        let entries = s
            .entries
            .into_iter()
            .map(|e| Transition {
                trajectory: tokens[e.trajectory].clone(),
                action: e.action,
                reward: e.reward,
                next_trajectory: tokens[e.next_trajectory].clone(),
                terminal: e.terminal,
                next_admissible: actions[e.next_admissible].clone(),
                label: e.label,
            })
            .collect();
        ReplayMemory {
            capacity: s.capacity,
            entries,
            first_seq: s.first_seq,
        }
    }
}

/// Serialized form that stores each shared buffer once.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplaySnapshot {
    capacity: usize,
    first_seq: u64,
    token_table: Vec<Vec<TokenId>>,
    action_table: Vec<Vec<Vec<TokenId>>>,
    entries: Vec<StoredTransition>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct StoredTransition {
    trajectory: usize,
    action: Vec<TokenId>,
    reward: f64,
    next_trajectory: usize,
    terminal: bool,
    next_admissible: usize,
    label: StateLabel,
}

#[derive(Default)]
struct Interner {
    token_ids: HashMap<*const Vec<TokenId>, usize>,
    token_table: Vec<Vec<TokenId>>,
    action_ids: HashMap<*const Vec<Vec<TokenId>>, usize>,
    action_table: Vec<Vec<Vec<TokenId>>>,
}

impl Interner {
    fn tokens(&mut self, t: &Tokens) -> usize {
        let table = &mut self.token_table;
        *self.token_ids.entry(Arc::as_ptr(t)).or_insert_with(|| {
            table.push(t.as_ref().clone());
            table.len() - 1
        })
    }

    fn actions(&mut self, a: &ActionSet) -> usize {
        let table = &mut self.action_table;
        *self.action_ids.entry(Arc::as_ptr(a)).or_insert_with(|| {
            table.push(a.as_ref().clone());
            table.len() - 1
        })
    }
}
