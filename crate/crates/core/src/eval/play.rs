use std::collections::HashMap;
use std::sync::Arc;

use dsqn_microworld::{Game, GameSpec, StateLabel, Status};
use dsqn_tensor::ParameterStore;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{adjust_q_bandit, argmax, q_values_factored, q_values_plain, Mode, Network, Tokens};
use crate::error::Result;
use crate::trajectory::{action_tokens, TokenHistory, MAX_TOKENS};
use crate::vocab::{TokenId, Vocabulary};

/// Anything that picks one of the admissible commands.
pub trait Policy {
    fn begin_episode(&mut self) {}
    /// Trajectory length the policy reads.
    fn window(&self) -> usize {
        MAX_TOKENS
    }
    fn choose(&mut self, trajectory: &[TokenId], commands: &[String], actions: &[Vec<TokenId>]) -> Result<usize>;
}

/// The learned agent: ε-greedy over Q-values lowered by a per-episode count
/// penalty for commands already chosen.
#[derive(Clone, Debug)]
pub struct Agent<'a> {
    pub net: &'a Network,
    pub store: &'a ParameterStore,
    pub mode: Mode,
    pub epsilon: f64,
    pub bandit_c: f64,
    rng: ChaCha8Rng,
    counts: HashMap<String, u32>,
}

impl<'a> Agent<'a> {
    pub fn new(net: &'a Network, store: &'a ParameterStore, mode: Mode, epsilon: f64, bandit_c: f64, rng: ChaCha8Rng) -> Self {
        Agent {
            net,
            store,
            mode,
            epsilon,
            bandit_c,
            rng,
            counts: HashMap::new(),
        }
    }

    /// ε = 0 with the count penalty: the test-time policy.
    pub fn greedy(net: &'a Network, store: &'a ParameterStore, mode: Mode, bandit_c: f64) -> Self {
        Self::new(net, store, mode, 0.0, bandit_c, ChaCha8Rng::seed_from_u64(0))
    }

    pub fn q_values(&self, trajectory: &[TokenId], actions: &[Vec<TokenId>]) -> Result<Vec<f64>> {
        if self.mode.factored() {
            Ok(q_values_factored(self.net, self.store, trajectory, actions)?.0)
        } else {
            q_values_plain(self.net, self.store, trajectory, actions)
        }
    }
}

impl Policy for Agent<'_> {
    fn begin_episode(&mut self) {
        self.counts.clear();
    }

    fn window(&self) -> usize {
        self.net.config().max_tokens
    }

    fn choose(&mut self, trajectory: &[TokenId], commands: &[String], actions: &[Vec<TokenId>]) -> Result<usize> {
        let pick = if self.epsilon > 0.0 && self.rng.gen::<f64>() < self.epsilon {
            self.rng.gen_range(0..actions.len())
        } else {
            let q = self.q_values(trajectory, actions)?;
            let counts: Vec<u32> = commands.iter().map(|c| self.counts.get(c).copied().unwrap_or(0)).collect();
            argmax(&adjust_q_bandit(&q, &counts, self.bandit_c)?)
        };
        *self.counts.entry(commands[pick].clone()).or_insert(0) += 1;
        Ok(pick)
    }
}

#[derive(Clone, Debug)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(rng: ChaCha8Rng) -> Self {
        RandomPolicy { rng }
    }
}

impl Policy for RandomPolicy {
    fn choose(&mut self, _: &[TokenId], _: &[String], actions: &[Vec<TokenId>]) -> Result<usize> {
        Ok(self.rng.gen_range(0..actions.len()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeLog {
    pub earned: f64,
    pub max_score: f64,
    pub steps: u32,
    pub won: bool,
    pub commands: Vec<String>,
    /// Trajectory and state label at every decision point.
    pub states: Vec<(Tokens, StateLabel)>,
}

pub fn tokenize_actions(vocab: &Vocabulary, commands: &[String]) -> Result<Vec<Vec<TokenId>>> {
    commands.iter().map(|c| action_tokens(vocab, c)).collect()
}

/// Plays one episode from a fresh reset.
pub fn play_episode<P: Policy>(policy: &mut P, spec: &GameSpec, vocab: &Vocabulary) -> Result<EpisodeLog> {
    let mut game = Game::new(spec.clone())?;
    let obs = game.reset();
    policy.begin_episode();
    let mut history = TokenHistory::with_window(vocab, &obs.text, policy.window());
    let mut commands = obs.admissible;
    let mut label = obs.label;
    let mut log = EpisodeLog {
        earned: 0.0,
        max_score: spec.max_score,
        steps: 0,
        won: false,
        commands: Vec::new(),
        states: Vec::new(),
    };
    loop {
        let tokens = Arc::new(history.flatten());
        let actions = tokenize_actions(vocab, &commands)?;
        let pick = policy.choose(&tokens, &commands, &actions)?;
        log.states.push((tokens, label));
        let command = commands[pick].clone();
        let r = game.step(&command)?;
        log.earned += r.engine_reward;
        log.steps += 1;
        history.push_turn(vocab, &command, &r.response);
        log.commands.push(command);
        if r.terminal() {
            log.won = r.status == Status::Won;
            return Ok(log);
        }
        commands = r.admissible;
        label = r.label;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub game: usize,
    pub episode: usize,
    pub earned: f64,
    pub max_score: f64,
    pub steps: u32,
    pub won: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlayReport {
    /// Earned points over achievable points, as a percentage.
    pub score_pct: f64,
    pub earned: f64,
    pub achievable: f64,
    pub episodes: Vec<EpisodeSummary>,
}

/// Runs `f(g)` for every game index, spread over `threads` workers, and
/// returns the results in game order.
pub fn for_each_game<T: Send, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T + Sync,
{
    let threads = threads.max(1).min(n.max(1));
    if threads == 1 {
        return (0..n).map(&f).collect();
    }
    let mut slots: Vec<Option<T>> = (0..n).map(|_| None).collect();
    let chunk = n.div_ceil(threads);
    std::thread::scope(|s| {
        for (c, out) in slots.chunks_mut(chunk).enumerate() {
            let f = &f;
            s.spawn(move || {
                for (j, slot) in out.iter_mut().enumerate() {
                    *slot = Some(f(c * chunk + j));
                }
            });
        }
    });
    slots.into_iter().map(|s| s.expect("every game was played")).collect()
}

/// Plays every game `episodes` times. Each game starts from its own copy of
/// `policy`, so results do not depend on game order or thread count.
pub fn play_logs<P: Policy + Clone + Sync>(
    policy: &P,
    games: &[GameSpec],
    episodes: usize,
    vocab: &Vocabulary,
    threads: usize,
) -> Result<Vec<Vec<EpisodeLog>>> {
    for_each_game(games.len(), threads, |g| {
        let mut p = policy.clone();
        (0..episodes).map(|_| play_episode(&mut p, &games[g], vocab)).collect::<Result<Vec<_>>>()
    })
    .into_iter()
    .collect()
}

pub fn summarize(logs: &[Vec<EpisodeLog>]) -> PlayReport {
    let mut episodes = Vec::new();
    for (g, game) in logs.iter().enumerate() {
        for (e, log) in game.iter().enumerate() {
            episodes.push(EpisodeSummary {
                game: g,
                episode: e,
                earned: log.earned,
                max_score: log.max_score,
                steps: log.steps,
                won: log.won,
            });
        }
    }
    let earned: f64 = episodes.iter().map(|e| e.earned).sum();
    let achievable: f64 = episodes.iter().map(|e| e.max_score).sum();
    let score_pct = if achievable > 0.0 { 100.0 * earned / achievable } else { 0.0 };
    PlayReport {
        score_pct,
        earned,
        achievable,
        episodes,
    }
}

pub fn play_eval<P: Policy + Clone + Sync>(
    policy: &P,
    games: &[GameSpec],
    episodes: usize,
    vocab: &Vocabulary,
    threads: usize,
) -> Result<PlayReport> {
    Ok(summarize(&play_logs(policy, games, episodes, vocab, threads)?))
}
