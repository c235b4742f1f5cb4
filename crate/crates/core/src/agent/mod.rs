//! Q-network heads, losses, action selection and replay memory.

pub mod loss;
pub mod network;
pub mod policy;
pub mod replay;

use dsqn_tensor::ParameterStore;

pub use loss::{dqn_loss, multitask_loss, multitask_value, snn_loss, snn_loss_value, td_value, PairLabel};
pub use network::{
    q_values_factored, q_values_plain, self_pair_prob, semantic_embedding, snn_predict, Mode, Network, QVars,
    StateRepr,
};
pub use policy::{adjust_q_bandit, argmax, epsilon_greedy, EpsilonSchedule};
pub use replay::{ActionSet, ReplayMemory, Tokens, Transition};

use crate::error::Result;
use crate::vocab::TokenId;

/// Copies every online value into the target store.
pub fn sync_target(online: &ParameterStore, target: &mut ParameterStore) -> Result<()> {
    Ok(target.copy_from(online)?)
}

/// Largest Q over `actions` under `store`, computed without gradients.
pub fn max_q(net: &Network, store: &ParameterStore, t: &[TokenId], actions: &[Vec<TokenId>], factored: bool) -> Result<f64> {
    let q = if factored {
        q_values_factored(net, store, t, actions)?.0
    } else {
        q_values_plain(net, store, t, actions)?
    };
    Ok(q.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// TD target computed with the delayed network.
#[allow(clippy::too_many_arguments)]
pub fn td_target(
    net: &Network,
    target: &ParameterStore,
    r: f64,
    terminal: bool,
    next: &[TokenId],
    admissible: &[Vec<TokenId>],
    lambda: f64,
    factored: bool,
) -> Result<f64> {
    if terminal {
        return td_value(r, true, None, lambda);
    }
    if admissible.is_empty() {
        return td_value(r, false, None, lambda);
    }
    let m = max_q(net, target, next, admissible, factored)?;
    td_value(r, false, Some(m), lambda)
}
