use std::collections::HashMap;
use std::sync::Arc;

use dsqn_microworld::{EngineState, Game, GameSpec, StateLabel};
use dsqn_tensor::{Adam, Container, ParameterStore, Tape, Tensor, Var};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::metrics::MetricRecord;
use super::sampler::{sample_snn_batch, LabelIndex, SnnPair};
use crate::agent::replay::ReplaySnapshot;
use crate::agent::{
    argmax, dqn_loss, multitask_loss, q_values_factored, q_values_plain, snn_loss, sync_target, td_target, ActionSet,
    Network, ReplayMemory, StateRepr, Tokens, Transition,
};
use crate::agent::loss::{dqn_term, snn_term};
use crate::config::{RunConfig, Schedule};
use crate::error::{CoreError, Result};
use crate::eval::{pair_corpus, play_logs, snn_accuracy, summarize, tokenize_actions, Agent};
use crate::rng::{streams, substream};
use crate::trajectory::TokenHistory;
use crate::vocab::{TokenId, Vocabulary};

/// The episode currently being played.
#[derive(Clone, Debug)]
struct Live {
    game_index: usize,
    game: Game,
    history: TokenHistory,
    trajectory: Tokens,
    commands: Vec<String>,
    actions: ActionSet,
    label: StateLabel,
}

impl Live {
    fn start(games: &[GameSpec], game_index: usize, vocab: &Vocabulary, window: usize) -> Result<Self> {
        let mut game = Game::new(games[game_index].clone())?;
        let obs = game.reset();
        let history = TokenHistory::with_window(vocab, &obs.text, window);
        Ok(Live {
            game_index,
            trajectory: Arc::new(history.flatten()),
            actions: Arc::new(tokenize_actions(vocab, &obs.admissible)?),
            commands: obs.admissible,
            label: obs.label,
            history,
            game,
        })
    }
}

/// Losses of one update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Losses {
    pub l_dqn: f64,
    pub l_snn: Option<f64>,
}

/// Harness state that is not a parameter tensor.
#[derive(Serialize, Deserialize)]
struct SavedState {
    games_digest: String,
    step: u64,
    train_steps: u64,
    snn_skipped: u64,
    best_dev: Option<f64>,
    adam_step: u64,
    eps_rng: ChaCha8Rng,
    sampler_rng: ChaCha8Rng,
    replay: ReplaySnapshot,
    labels: LabelIndex,
    game_index: usize,
    engine: EngineState,
    history: TokenHistory,
}

pub fn games_digest(games: &[GameSpec]) -> String {
    let mut h = Sha256::new();
    for g in games {
        h.update(serde_json::to_vec(g).expect("spec serializes"));
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn bincode_err(e: bincode::Error) -> CoreError {
    CoreError::Checkpoint(e.to_string())
}

/// Encodings computed once per tape, keyed by trajectory buffer.
#[derive(Default)]
struct ReprCache {
    map: HashMap<*const Vec<TokenId>, StateRepr>,
}

impl ReprCache {
    fn get(&mut self, net: &Network, tape: &mut Tape, store: &ParameterStore, t: &Tokens, factored: bool) -> Result<StateRepr> {
        if let Some(r) = self.map.get(&Arc::as_ptr(t)) {
            return Ok(*r);
        }
        let r = net.represent(tape, store, t, factored)?;
        self.map.insert(Arc::as_ptr(t), r);
        Ok(r)
    }
}

/// The training loop: one live episode, a replay memory, an online and a
/// delayed network.
pub struct Trainer {
    cfg: RunConfig,
    vocab: Vocabulary,
    games: Vec<GameSpec>,
    dev: Vec<GameSpec>,
    net: Network,
    online: ParameterStore,
    target: ParameterStore,
    adam: Adam,
    replay: ReplayMemory,
    labels: LabelIndex,
    eps_rng: ChaCha8Rng,
    sampler_rng: ChaCha8Rng,
    step: u64,
    train_steps: u64,
    snn_skipped: u64,
    best_dev: Option<f64>,
    live: Live,
}

/// What one environment step produced.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutput {
    pub record: Option<MetricRecord>,
    /// Set when this step ran a dev evaluation.
    pub dev_score_pct: Option<f64>,
    /// Set when the dev score beat every earlier one.
    pub improved: bool,
}

impl Trainer {
    pub fn new(cfg: RunConfig, vocab: Vocabulary, games: Vec<GameSpec>, dev: Vec<GameSpec>) -> Result<Self> {
        cfg.validate()?;
        if games.is_empty() {
            return Err(CoreError::invalid("training needs at least one game"));
        }
        let seed = cfg.general.seed;
        let (net, online) = Network::init(&cfg.encoder, vocab.len(), &mut substream(seed, streams::AGENT_INIT))?;
        let target = online.clone();
        let adam = Adam::new(&online, cfg.train.adam());
        let live = Live::start(&games, 0, &vocab, cfg.encoder.max_tokens)?;
        Ok(Trainer {
            replay: ReplayMemory::new(cfg.train.replay_capacity),
            labels: LabelIndex::new(),
            eps_rng: substream(seed, streams::EPSILON),
            sampler_rng: substream(seed, streams::SAMPLER),
            step: 0,
            train_steps: 0,
            snn_skipped: 0,
            best_dev: None,
            cfg,
            vocab,
            games,
            dev,
            net,
            online,
            target,
            adam,
            live,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn online(&self) -> &ParameterStore {
        &self.online
    }

    pub fn target(&self) -> &ParameterStore {
        &self.target
    }

    pub fn replay(&self) -> &ReplayMemory {
        &self.replay
    }

    pub fn labels(&self) -> &LabelIndex {
        &self.labels
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn train_steps(&self) -> u64 {
        self.train_steps
    }

    pub fn snn_skipped(&self) -> u64 {
        self.snn_skipped
    }

    pub fn best_dev(&self) -> Option<f64> {
        self.best_dev
    }

    pub fn finished(&self) -> bool {
        self.step >= self.cfg.train.total_steps
    }

    fn in_training(&self) -> bool {
        self.step > self.cfg.train.observation_steps
    }

    fn choose(&mut self, epsilon: f64) -> Result<usize> {
        let n = self.live.actions.len();
        if !self.in_training() {
            return Ok(self.eps_rng.gen_range(0..n));
        }
        if epsilon > 0.0 && self.eps_rng.gen::<f64>() < epsilon {
            return Ok(self.eps_rng.gen_range(0..n));
        }
        let q = if self.cfg.train.mode.factored() {
            q_values_factored(&self.net, &self.online, &self.live.trajectory, &self.live.actions)?.0
        } else {
            q_values_plain(&self.net, &self.online, &self.live.trajectory, &self.live.actions)?
        };
        Ok(argmax(&q))
    }

    fn store(&mut self, t: Transition) {
        let label = t.label;
        let seq = self.replay.next_seq();
        let first = self.replay.first_seq();
        if let Some(old) = self.replay.push(t) {
            self.labels.remove_evicted(old.label, first);
        }
        self.labels.insert(label, seq);
    }

    /// Plays one environment step and, past the observation phase, one update.
    pub fn step(&mut self) -> Result<StepOutput> {
        self.step += 1;
        let training = self.in_training();
        let epsilon = if training { self.cfg.train.epsilon().value(self.train_steps) } else { 1.0 };
        let pick = self.choose(epsilon)?;
        let command = self.live.commands[pick].clone();
        let r = self.live.game.step(&command)?;
        self.live.history.push_turn(&self.vocab, &command, &r.response);
        let next_trajectory: Tokens = Arc::new(self.live.history.flatten());
        let terminal = r.terminal();
        let next_actions: ActionSet = if terminal {
            Arc::new(Vec::new())
        } else {
            Arc::new(tokenize_actions(&self.vocab, &r.admissible)?)
        };
        self.store(Transition {
            trajectory: Arc::clone(&self.live.trajectory),
            action: self.live.actions[pick].clone(),
            reward: r.reward,
            next_trajectory: Arc::clone(&next_trajectory),
            terminal,
            next_admissible: Arc::clone(&next_actions),
            label: self.live.label,
        });
        if terminal {
            let next = (self.live.game_index + 1) % self.games.len();
            self.live = Live::start(&self.games, next, &self.vocab, self.cfg.encoder.max_tokens)?;
        } else {
            self.live.trajectory = next_trajectory;
            self.live.actions = next_actions;
            self.live.commands = r.admissible;
            self.live.label = r.label;
        }

        let mut losses = None;
        if training {
            self.train_steps += 1;
            losses = Some(self.update()?);
            if self.train_steps % self.cfg.train.sync_period == 0 {
                sync_target(&self.online, &mut self.target)?;
            }
        }

        let tc = &self.cfg.train;
        let eval_now = self.step % tc.eval_every == 0;
        let log_now = training && self.step % tc.log_every == 0;
        let mut out = StepOutput {
            record: None,
            dev_score_pct: None,
            improved: false,
        };
        if !(eval_now || log_now) {
            return Ok(out);
        }
        let mut rec = MetricRecord::new(self.step, epsilon);
        if let Some(l) = losses {
            rec.l_dqn = Some(l.l_dqn);
            rec.s1 = Some(self.net.scalar(&self.online, self.net.s1()));
            if tc.mode.trains_snn() {
                rec.l_snn = l.l_snn;
                rec.s2 = Some(self.net.scalar(&self.online, self.net.s2()));
                rec.snn_skipped = Some(self.snn_skipped);
            }
        }
        if eval_now && !self.dev.is_empty() {
            let (score, acc) = self.dev_eval()?;
            rec.dev_score_pct = Some(score);
            rec.snn_acc = acc;
            out.dev_score_pct = Some(score);
            if self.best_dev.is_none_or(|b| score > b) {
                self.best_dev = Some(score);
                out.improved = true;
            }
        }
        out.record = Some(rec);
        Ok(out)
    }

    /// Mean squared TD error over a replay batch, on `tape`.
    fn dqn_part(&self, tape: &mut Tape, cache: &mut ReprCache, batch: &[&Transition], targets: &[f64]) -> Result<Var> {
        let factored = self.cfg.train.mode.factored();
        let mut rows = Vec::with_capacity(batch.len());
        for t in batch {
            let r = cache.get(&self.net, tape, &self.online, &t.trajectory, factored)?;
            // Q_snn + Q_var is bilinear, so it equals Q of the summed state vectors.
            rows.push(match r.variable {
                Some(v) => tape.add(r.semantic, v)?,
                None => r.encoded,
            });
        }
        let s = tape.concat_rows(&rows)?;
        let w = tape.param(&self.online, self.net.w_dqn());
        let sw = tape.matmul(s, w)?;
        let acts: Vec<&[TokenId]> = batch.iter().map(|t| t.action.as_slice()).collect();
        let fa = self.net.encode_actions(tape, &self.online, &acts)?;
        let prod = tape.mul(sw, fa)?;
        let ones = tape.constant(Tensor::full([self.cfg.encoder.action_units, 1], 1.0));
        let q = tape.matmul(prod, ones)?;
        dqn_loss(tape, q, targets)
    }

    fn snn_part(&self, tape: &mut Tape, cache: &mut ReprCache, pairs: &[SnnPair]) -> Result<Var> {
        let factored = self.cfg.train.mode.factored();
        let mut a = Vec::with_capacity(pairs.len());
        let mut b = Vec::with_capacity(pairs.len());
        for p in pairs {
            a.push(cache.get(&self.net, tape, &self.online, &p.a, factored)?.semantic);
            b.push(cache.get(&self.net, tape, &self.online, &p.b, factored)?.semantic);
        }
        let a = tape.concat_rows(&a)?;
        let b = tape.concat_rows(&b)?;
        let prob = self.net.snn_prob(tape, &self.online, a, b)?;
        let labels: Vec<_> = pairs.iter().map(|p| p.label).collect();
        snn_loss(tape, prob, &labels)
    }

    fn apply(&mut self, tape: &Tape, loss: Var) -> Result<()> {
        let grads = tape.backward(loss)?.params(&self.online);
        self.adam.step(&mut self.online, &grads)?;
        Ok(())
    }

    fn update(&mut self) -> Result<Losses> {
        let tc = self.cfg.train.clone();
        let factored = tc.mode.factored();
        let idx = self.replay.sample_indices(tc.dqn_batch, &mut self.sampler_rng);
        let batch: Vec<Transition> = idx.iter().map(|&i| self.replay.at(i).clone()).collect();
        let targets = batch
            .iter()
            .map(|t| {
                td_target(
                    &self.net,
                    &self.target,
                    t.reward,
                    t.terminal,
                    &t.next_trajectory,
                    &t.next_admissible,
                    tc.discount,
                    factored,
                )
            })
            .collect::<Result<Vec<f64>>>()?;
        let pairs = if tc.mode.trains_snn() {
            let p = sample_snn_batch(&self.replay, &self.labels, tc.snn_pairs, &mut self.sampler_rng);
            if p.is_empty() {
                self.snn_skipped += 1;
            }
            p
        } else {
            Vec::new()
        };
        let batch_refs: Vec<&Transition> = batch.iter().collect();

        let mut tape = Tape::new();
        let mut cache = ReprCache::default();
        let l_dqn = self.dqn_part(&mut tape, &mut cache, &batch_refs, &targets)?;
        let l_dqn_value = tape.value(l_dqn).item();
        if !tc.mode.trains_snn() {
            self.apply(&tape, l_dqn)?;
            return Ok(Losses {
                l_dqn: l_dqn_value,
                l_snn: None,
            });
        }
        let s1 = tape.param(&self.online, self.net.s1());
        match tc.schedule {
            Schedule::Joint => {
                if pairs.is_empty() {
                    let loss = dqn_term(&mut tape, l_dqn, s1)?;
                    self.apply(&tape, loss)?;
                    return Ok(Losses {
                        l_dqn: l_dqn_value,
                        l_snn: None,
                    });
                }
                let l_snn = self.snn_part(&mut tape, &mut cache, &pairs)?;
                let s2 = tape.param(&self.online, self.net.s2());
                let loss = multitask_loss(&mut tape, l_dqn, l_snn, s1, s2)?;
                let l_snn_value = tape.value(l_snn).item();
                self.apply(&tape, loss)?;
                Ok(Losses {
                    l_dqn: l_dqn_value,
                    l_snn: Some(l_snn_value),
                })
            }
            Schedule::Independent => {
                let loss = dqn_term(&mut tape, l_dqn, s1)?;
                self.apply(&tape, loss)?;
                if pairs.is_empty() {
                    return Ok(Losses {
                        l_dqn: l_dqn_value,
                        l_snn: None,
                    });
                }
                let mut tape = Tape::new();
                let mut cache = ReprCache::default();
                let l_snn = self.snn_part(&mut tape, &mut cache, &pairs)?;
                let s2 = tape.param(&self.online, self.net.s2());
                let loss = snn_term(&mut tape, l_snn, s2)?;
                let l_snn_value = tape.value(l_snn).item();
                self.apply(&tape, loss)?;
                Ok(Losses {
                    l_dqn: l_dqn_value,
                    l_snn: Some(l_snn_value),
                })
            }
        }
    }

    /// Greedy play of every dev game once, plus pair accuracy on the states
    /// those episodes visited.
    pub fn dev_eval(&self) -> Result<(f64, Option<f64>)> {
        let mode = self.cfg.train.mode;
        let agent = Agent::greedy(&self.net, &self.online, mode, self.cfg.train.bandit_c);
        let logs = play_logs(&agent, &self.dev, 1, &self.vocab, self.cfg.general.threads)?;
        let score = summarize(&logs).score_pct;
        if !mode.trains_snn() {
            return Ok((score, None));
        }
        let memory: Vec<_> = logs.iter().flatten().flat_map(|l| l.states.iter().cloned()).collect();
        let mut rng = substream(self.cfg.general.seed, &format!("dev-pairs-{}", self.step));
        let pairs = pair_corpus(&memory, self.cfg.train.dev_pairs, &mut rng);
        if pairs.is_empty() {
            return Ok((score, None));
        }
        Ok((score, Some(snn_accuracy(&self.net, &self.online, mode.factored(), &pairs)?)))
    }

    /// Parameters, configuration and vocabulary: enough to act.
    pub fn model(&self) -> Container {
        let mut c = Container::new();
        c.push_store("online", &self.online);
        c.push_blob("config", serde_json::to_vec(&self.cfg).expect("config serializes"));
        c.push_blob("vocab", self.vocab.to_text().into_bytes());
        c
    }

    /// Everything needed to continue the run exactly.
    pub fn checkpoint(&self) -> Result<Container> {
        let mut c = self.model();
        c.push_store("target", &self.target);
        c.push_store("adam.m", &self.adam.m);
        c.push_store("adam.v", &self.adam.v);
        let state = SavedState {
            games_digest: games_digest(&self.games),
            step: self.step,
            train_steps: self.train_steps,
            snn_skipped: self.snn_skipped,
            best_dev: self.best_dev,
            adam_step: self.adam.step,
            eps_rng: self.eps_rng.clone(),
            sampler_rng: self.sampler_rng.clone(),
            replay: self.replay.snapshot(),
            labels: self.labels.clone(),
            game_index: self.live.game_index,
            engine: self.live.game.state().clone(),
            history: self.live.history.clone(),
        };
        c.push_blob("trainer", bincode::serialize(&state).map_err(bincode_err)?);
        Ok(c)
    }

    pub fn restore(c: &Container, games: Vec<GameSpec>, dev: Vec<GameSpec>) -> Result<Self> {
        let (cfg, vocab, net, online) = load_model(c)?;
        let state: SavedState = bincode::deserialize(c.blob("trainer")?).map_err(bincode_err)?;
        if state.games_digest != games_digest(&games) {
            return Err(CoreError::Checkpoint("training games differ from the ones this run started with".into()));
        }
        let target = c.store("target")?;
        online.check_layout(&target)?;
        let mut adam = Adam::new(&online, cfg.train.adam());
        adam.m = c.store("adam.m")?;
        adam.v = c.store("adam.v")?;
        online.check_layout(&adam.m)?;
        online.check_layout(&adam.v)?;
        adam.step = state.adam_step;
        let replay = ReplayMemory::from_snapshot(state.replay);
        if state.game_index >= games.len() {
            return Err(CoreError::Checkpoint("live game index out of range".into()));
        }
        let game = Game::with_state(games[state.game_index].clone(), state.engine)?;
        let flat = state.history.flatten();
        // Reuse the buffer the last transition already points at, so sharing
        // in later snapshots matches an uninterrupted run.
        let trajectory = match replay.len().checked_sub(1).map(|i| replay.at(i)) {
            Some(t) if !t.terminal && *t.next_trajectory == flat => Arc::clone(&t.next_trajectory),
            _ => Arc::new(flat),
        };
        let commands = game.admissible();
        let live = Live {
            game_index: state.game_index,
            actions: Arc::new(tokenize_actions(&vocab, &commands)?),
            label: game.label(),
            commands,
            trajectory,
            history: state.history,
            game,
        };
        Ok(Trainer {
            cfg,
            vocab,
            games,
            dev,
            net,
            online,
            target,
            adam,
            replay,
            labels: state.labels,
            eps_rng: state.eps_rng,
            sampler_rng: state.sampler_rng,
            step: state.step,
            train_steps: state.train_steps,
            snn_skipped: state.snn_skipped,
            best_dev: state.best_dev,
            live,
        })
    }
}

/// Reads the acting part of a model or checkpoint container.
pub fn load_model(c: &Container) -> Result<(RunConfig, Vocabulary, Network, ParameterStore)> {
    let cfg = RunConfig::from_json(c.blob("config")?)?;
    let vocab_text = std::str::from_utf8(c.blob("vocab")?).map_err(|e| CoreError::Checkpoint(e.to_string()))?;
    let vocab = Vocabulary::from_text(vocab_text)?;
    let online = c.store("online")?;
    let net = Network::for_store(&cfg.encoder, &online)?;
    if online.by_name("state.embed")?.rows() != vocab.len() {
        return Err(CoreError::Checkpoint("vocabulary size does not match the embeddings".into()));
    }
    Ok((cfg, vocab, net, online))
}
