use dsqn_tensor::{sigmoid, ParamId, ParameterStore, Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::encoder::{xavier_uniform, zeros, ActionEncoder, EncoderConfig, StateEncoder};
use crate::error::{CoreError, Result};
use crate::vocab::TokenId;

/// Which losses are trained and how Q is formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Q-learning alone.
    DqnOnly,
    /// Q-learning plus the equivalence head on the shared encoding.
    Dsqn,
    /// As `Dsqn`, with Q split into a semantic and a time-sensitive part.
    DsqnFactored,
}

impl Mode {
    pub fn factored(self) -> bool {
        self == Mode::DsqnFactored
    }

    pub fn trains_snn(self) -> bool {
        self != Mode::DqnOnly
    }
}

impl std::str::FromStr for Mode {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dqn_only" => Ok(Mode::DqnOnly),
            "dsqn" => Ok(Mode::Dsqn),
            "dsqn_factored" => Ok(Mode::DsqnFactored),
            _ => Err(CoreError::Config(format!("unknown mode `{s}`"))),
        }
    }
}

#[derive(Clone, Debug)]
struct Dense {
    w: ParamId,
    b: ParamId,
}

/// Per-trajectory state encodings on a tape.
#[derive(Clone, Copy, Debug)]
pub struct StateRepr {
    /// Pooled encoder output, f_e(t).
    pub encoded: Var,
    /// What the equivalence head compares: f_snn(t) when factored, else f_e(t).
    pub semantic: Var,
    /// f_var(t), factored only.
    pub variable: Option<Var>,
}

/// Q-values for one state over a list of actions, each `[1×n]`.
#[derive(Clone, Copy, Debug)]
pub struct QVars {
    pub q: Var,
    pub q_snn: Option<Var>,
    pub q_var: Option<Var>,
}

/// Encoders plus every head. Online and target stores share the layout, so
/// one `Network` drives both.
#[derive(Clone, Debug)]
pub struct Network {
    pub state: StateEncoder,
    pub action: ActionEncoder,
    w_dqn: ParamId,
    w_snn: ParamId,
    b_snn: ParamId,
    s1: ParamId,
    s2: ParamId,
    dense_snn: Dense,
    dense_var: Dense,
}

impl Network {
    pub fn init<R: Rng>(cfg: &EncoderConfig, vocab: usize, rng: &mut R) -> Result<(Network, ParameterStore)> {
        let mut store = ParameterStore::new();
        let net = Self::register(&mut store, cfg, vocab, rng)?;
        Ok((net, store))
    }

    pub fn register<R: Rng>(store: &mut ParameterStore, cfg: &EncoderConfig, vocab: usize, rng: &mut R) -> Result<Self> {
        let state = StateEncoder::register(store, cfg, vocab, rng)?;
        let action = ActionEncoder::register(store, cfg, vocab, rng)?;
        let d = cfg.model_dim;
        let dense = |store: &mut ParameterStore, name: &str, rng: &mut R| -> Result<Dense> {
            Ok(Dense {
                w: store.insert(format!("head.{name}.w"), xavier_uniform(rng, d, d))?,
                b: store.insert(format!("head.{name}.b"), zeros(1, d))?,
            })
        };
        let dense_snn = dense(store, "dense_snn", rng)?;
        let dense_var = dense(store, "dense_var", rng)?;
        Ok(Network {
            state,
            action,
            w_dqn: store.insert("head.w_dqn", xavier_uniform(rng, d, cfg.action_units))?,
            w_snn: store.insert("head.w_snn", xavier_uniform(rng, 1, d))?,
            b_snn: store.insert("head.b_snn", zeros(1, 1))?,
            s1: store.insert("head.s1", zeros(1, 1))?,
            s2: store.insert("head.s2", zeros(1, 1))?,
            dense_snn,
            dense_var,
        })
    }

    /// Rebuilds the handles for a store loaded from disk.
    pub fn for_store(cfg: &EncoderConfig, store: &ParameterStore) -> Result<Self> {
        let vocab = store.by_name("state.embed")?.rows();
        let (net, fresh) = Self::init(cfg, vocab, &mut rand_chacha::ChaCha8Rng::seed_from_u64(0))?;
        fresh.check_layout(store)?;
        Ok(net)
    }

    pub fn config(&self) -> &EncoderConfig {
        self.state.config()
    }

    pub fn s1(&self) -> ParamId {
        self.s1
    }

    pub fn s2(&self) -> ParamId {
        self.s2
    }

    pub fn w_dqn(&self) -> ParamId {
        self.w_dqn
    }

    pub fn b_snn(&self) -> ParamId {
        self.b_snn
    }

    /// Parameters only the equivalence loss can move.
    pub fn snn_only_params(&self) -> [ParamId; 3] {
        [self.w_snn, self.b_snn, self.s2]
    }

    pub fn dense_params(&self) -> [ParamId; 4] {
        [self.dense_snn.w, self.dense_snn.b, self.dense_var.w, self.dense_var.b]
    }

    fn dense(&self, tape: &mut Tape, store: &ParameterStore, layer: &Dense, x: Var) -> Result<Var> {
        let w = tape.param(store, layer.w);
        let b = tape.param(store, layer.b);
        let xw = tape.matmul(x, w)?;
        let pre = tape.add_row(xw, b)?;
        Ok(tape.tanh(pre))
    }

    pub fn represent(&self, tape: &mut Tape, store: &ParameterStore, tokens: &[TokenId], factored: bool) -> Result<StateRepr> {
        let encoded = self.state.forward(tape, store, tokens)?;
        if !factored {
            return Ok(StateRepr {
                encoded,
                semantic: encoded,
                variable: None,
            });
        }
        let semantic = self.dense(tape, store, &self.dense_snn, encoded)?;
        let variable = self.dense(tape, store, &self.dense_var, encoded)?;
        Ok(StateRepr {
            encoded,
            semantic,
            variable: Some(variable),
        })
    }

    pub fn encode_actions(&self, tape: &mut Tape, store: &ParameterStore, actions: &[&[TokenId]]) -> Result<Var> {
        self.action.forward(tape, store, actions)
    }

    /// `s · W_dqn · f_aᵀ` for a `[1×d]` state vector and `[n×u]` actions.
    fn bilinear(&self, tape: &mut Tape, store: &ParameterStore, s: Var, fa: Var) -> Result<Var> {
        let w = tape.param(store, self.w_dqn);
        let sw = tape.matmul(s, w)?;
        let fat = tape.transpose(fa)?;
        Ok(tape.matmul(sw, fat)?)
    }

    pub fn q_values(&self, tape: &mut Tape, store: &ParameterStore, repr: &StateRepr, fa: Var) -> Result<QVars> {
        match repr.variable {
            None => Ok(QVars {
                q: self.bilinear(tape, store, repr.encoded, fa)?,
                q_snn: None,
                q_var: None,
            }),
            Some(var) => {
                let q_snn = self.bilinear(tape, store, repr.semantic, fa)?;
                let q_var = self.bilinear(tape, store, var, fa)?;
                Ok(QVars {
                    q: tape.add(q_snn, q_var)?,
                    q_snn: Some(q_snn),
                    q_var: Some(q_var),
                })
            }
        }
    }

    /// `σ(W_snn |a − b| + b)` row by row for `[p×d]` inputs; `[p×1]`.
    pub fn snn_prob(&self, tape: &mut Tape, store: &ParameterStore, a: Var, b: Var) -> Result<Var> {
        let diff = tape.sub(a, b)?;
        let dist = tape.abs(diff);
        let w = tape.param(store, self.w_snn);
        let wt = tape.transpose(w)?;
        let logit = tape.matmul(dist, wt)?;
        let bias = tape.param(store, self.b_snn);
        let logit = tape.add_row(logit, bias)?;
        Ok(tape.sigmoid(logit))
    }

    pub fn scalar(&self, store: &ParameterStore, id: ParamId) -> f64 {
        store.get(id).item()
    }
}

fn tokens_ref(actions: &[Vec<TokenId>]) -> Vec<&[TokenId]> {
    actions.iter().map(Vec::as_slice).collect()
}

/// `Q_i = f_e(t)ᵀ W_dqn f_a(a_i)` in input order.
pub fn q_values_plain(net: &Network, store: &ParameterStore, t: &[TokenId], actions: &[Vec<TokenId>]) -> Result<Vec<f64>> {
    let mut tape = Tape::new();
    let repr = net.represent(&mut tape, store, t, false)?;
    let fa = net.encode_actions(&mut tape, store, &tokens_ref(actions))?;
    let q = net.q_values(&mut tape, store, &repr, fa)?;
    Ok(tape.value(q.q).data().to_vec())
}

/// `(q, q_snn, q_var)` with `q = q_snn + q_var`.
pub fn q_values_factored(
    net: &Network,
    store: &ParameterStore,
    t: &[TokenId],
    actions: &[Vec<TokenId>],
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let mut tape = Tape::new();
    let repr = net.represent(&mut tape, store, t, true)?;
    let fa = net.encode_actions(&mut tape, store, &tokens_ref(actions))?;
    let q = net.q_values(&mut tape, store, &repr, fa)?;
    let get = |v: Option<Var>| tape.value(v.unwrap()).data().to_vec();
    Ok((tape.value(q.q).data().to_vec(), get(q.q_snn), get(q.q_var)))
}

/// Probability that two trajectories describe the same state.
pub fn snn_predict(net: &Network, store: &ParameterStore, ti: &[TokenId], tj: &[TokenId], factored: bool) -> Result<f64> {
    let mut tape = Tape::new();
    let a = net.represent(&mut tape, store, ti, factored)?.semantic;
    let b = net.represent(&mut tape, store, tj, factored)?.semantic;
    let p = net.snn_prob(&mut tape, store, a, b)?;
    Ok(tape.value(p).item())
}

/// The vector the equivalence head sees for `t`.
pub fn semantic_embedding(net: &Network, store: &ParameterStore, t: &[TokenId], factored: bool) -> Result<Vec<f64>> {
    let mut tape = Tape::new();
    let r = net.represent(&mut tape, store, t, factored)?;
    Ok(tape.value(r.semantic).data().to_vec())
}

/// `σ(b)`: the prediction for any trajectory paired with itself.
pub fn self_pair_prob(net: &Network, store: &ParameterStore) -> f64 {
    sigmoid(store.get(net.b_snn).item())
}

/// Overwrites one scalar parameter (tests and diagnostics).
pub fn set_scalar(store: &mut ParameterStore, id: ParamId, v: f64) {
    *store.get_mut(id) = Tensor::scalar(v);
}
