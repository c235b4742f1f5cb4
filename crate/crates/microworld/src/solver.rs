//! Breadth-first search over engine states.

use std::collections::{HashSet, VecDeque};

use crate::engine::{apply, legal_actions, Action, EngineState, Status, MAX_STEPS};
use crate::spec::GameSpec;

/// Shortest winning command sequence, or `None` if no win exists within
/// `max_depth` steps (capped at the episode limit).
pub fn solve(spec: &GameSpec, max_depth: usize) -> Option<Vec<String>> {
    let depth_cap = max_depth.min(MAX_STEPS as usize);
    let subgoals = spec.subgoals();
    let root = EngineState::initial(spec);
    let mut nodes: Vec<(Option<usize>, Option<Action>)> = vec![(None, None)];
    let mut states = vec![root.clone()];
    let mut depth = vec![0usize];
    let mut seen: HashSet<EngineState> = HashSet::from([root]);
    let mut queue = VecDeque::from([0usize]);

    while let Some(n) = queue.pop_front() {
        if depth[n] >= depth_cap {
            continue;
        }
        let state = states[n].clone();
        for action in legal_actions(spec, &state) {
            let mut next = state.clone();
            apply(spec, &subgoals, &mut next, action);
            match next.status {
                Status::Won => {
                    let mut path = vec![action.command(spec)];
                    let mut at = n;
                    while let (Some(parent), Some(a)) = nodes[at] {
                        path.push(a.command(spec));
                        at = parent;
                    }
                    path.reverse();
                    return Some(path);
                }
                Status::Lost => continue,
                Status::Running => {}
            }
            if seen.insert(next.clone()) {
                nodes.push((Some(n), Some(action)));
                states.push(next);
                depth.push(depth[n] + 1);
                queue.push_back(nodes.len() - 1);
            }
        }
    }
    None
}
