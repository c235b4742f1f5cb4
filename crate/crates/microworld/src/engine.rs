//! Deterministic game engine.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WorldError};
use crate::label::StateLabel;
use crate::lexicon as lx;
use crate::spec::{Cook, Direction, EntityKind, GameSpec, Location, Quest, Subgoal};
use crate::text::{self, Voice};

pub const MAX_STEPS: u32 = 100;
pub const STEP_PENALTY: f64 = -0.1;
pub const LOSS_REWARD: f64 = -1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Place {
    Room(usize),
    Inside(usize),
    Inventory,
    /// Eaten or used up in the meal.
    Gone,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntityState {
    pub place: Place,
    pub chopped: bool,
    pub cooked: Option<Cook>,
    pub damaged: bool,
    pub open: bool,
    pub locked: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Won,
    Lost,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EngineState {
    pub room: usize,
    pub entities: Vec<EntityState>,
    /// Parallel to [`GameSpec::subgoals`].
    pub achieved: Vec<bool>,
    pub score: u32,
    pub steps: u32,
    pub status: Status,
}

impl EngineState {
    pub fn initial(spec: &GameSpec) -> Self {
        let entities = spec
            .entities
            .iter()
            .map(|e| EntityState {
                place: match e.location {
                    Location::Room(r) => Place::Room(r),
                    Location::Inside(c) => Place::Inside(c),
                },
                chopped: false,
                cooked: None,
                damaged: false,
                open: e.starts_open,
                locked: e.kind == EntityKind::Lock,
            })
            .collect();
        EngineState {
            room: spec.start_room,
            entities,
            achieved: vec![false; spec.subgoals().len()],
            score: 0,
            steps: 0,
            status: Status::Running,
        }
    }

    /// Held entities in index order.
    pub fn inventory(&self) -> Vec<usize> {
        (0..self.entities.len())
            .filter(|&e| self.entities[e].place == Place::Inventory)
            .collect()
    }

    pub fn holds(&self, e: usize) -> bool {
        self.entities[e].place == Place::Inventory
    }

    /// In the current room, either in the open or inside an open container.
    pub fn visible(&self, e: usize) -> bool {
        match self.entities[e].place {
            Place::Room(r) => r == self.room,
            Place::Inside(c) => self.entities[c].open && self.visible(c),
            _ => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    Look,
    Inventory,
    Go(Direction),
    Examine(usize),
    Take(usize),
    Open(usize),
    Close(usize),
    Chop(usize),
    Cook(usize, Cook),
    PrepareMeal,
    Eat(usize),
    Unlock { lock: usize, key: usize },
}

impl Action {
    pub fn command(&self, spec: &GameSpec) -> String {
        let n = |e: usize| spec.entities[e].name.as_str();
        match *self {
            Action::Look => "look".into(),
            Action::Inventory => "inventory".into(),
            Action::Go(d) => format!("go {}", d.word()),
            Action::Examine(e) => format!("examine {}", n(e)),
            Action::Take(e) => format!("take {}", n(e)),
            Action::Open(e) => format!("open {}", n(e)),
            Action::Close(e) => format!("close {}", n(e)),
            Action::Chop(e) => format!("chop {}", n(e)),
            Action::Cook(e, Cook::Fry) => format!("fry {}", n(e)),
            Action::Cook(e, Cook::Roast) => format!("roast {}", n(e)),
            Action::PrepareMeal => "prepare meal".into(),
            Action::Eat(e) => format!("eat {}", n(e)),
            Action::Unlock { lock, key } => format!("unlock {} with {}", n(lock), n(key)),
        }
    }
}

/// What an action did, before it is put into words.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Looked,
    Inventoried,
    Blocked,
    Walked(Direction),
    Examined(usize),
    Took { entity: usize, from: Option<usize> },
    Opened(usize),
    Closed(usize),
    Chopped(usize),
    Cooked(usize, Cook),
    Damaged(usize),
    Meal,
    Ate(usize),
    Unlocked { lock: usize, key: usize },
    NoFit { lock: usize, key: usize },
}

/// Every command legal in `state`, in no particular order. Empty once the
/// episode has ended.
pub fn legal_actions(spec: &GameSpec, state: &EngineState) -> Vec<Action> {
    if state.status != Status::Running {
        return Vec::new();
    }
    let mut out = vec![Action::Look, Action::Inventory];
    out.extend(Direction::ALL.iter().map(|&d| Action::Go(d)));
    let held_kind = |k: EntityKind| {
        (0..spec.entities.len()).any(|e| spec.entities[e].kind == k && state.holds(e))
    };
    let here_kind = |k: EntityKind| {
        (0..spec.entities.len()).any(|e| spec.entities[e].kind == k && state.visible(e))
    };
    let knife = held_kind(EntityKind::Knife);
    let stove = here_kind(EntityKind::Stove);
    let oven = here_kind(EntityKind::Oven);
    for (e, ent) in spec.entities.iter().enumerate() {
        let st = &state.entities[e];
        let visible = state.visible(e);
        let held = state.holds(e);
        if visible || held {
            out.push(Action::Examine(e));
        }
        if visible && ent.kind.portable() {
            out.push(Action::Take(e));
        }
        if visible && ent.kind == EntityKind::Container {
            out.push(if st.open { Action::Close(e) } else { Action::Open(e) });
        }
        if held && ent.kind == EntityKind::Food && !st.damaged {
            if knife && !st.chopped {
                out.push(Action::Chop(e));
            }
            if st.cooked.is_none() {
                if stove {
                    out.push(Action::Cook(e, Cook::Fry));
                }
                if oven {
                    out.push(Action::Cook(e, Cook::Roast));
                }
            }
        }
        if held && ent.kind == EntityKind::Edible {
            out.push(Action::Eat(e));
        }
        if visible && ent.kind == EntityKind::Lock && st.locked {
            for key in state.inventory() {
                if spec.entities[key].kind == EntityKind::Key {
                    out.push(Action::Unlock { lock: e, key });
                }
            }
        }
    }
    if let Quest::Recipe { items, kitchen } = &spec.quest {
        let ready = items.iter().all(|i| {
            let st = &state.entities[i.entity];
            state.holds(i.entity) && st.chopped == i.chop && st.cooked == i.cook && !st.damaged
        });
        if state.room == *kitchen && ready {
            out.push(Action::PrepareMeal);
        }
    }
    out
}

fn mark(subgoals: &[Subgoal], state: &mut EngineState, goal: Subgoal) -> u32 {
    match subgoals.iter().position(|g| *g == goal) {
        Some(i) if !state.achieved[i] => {
            state.achieved[i] = true;
            1
        }
        _ => 0,
    }
}

/// Applies a legal action. Returns the outcome and the engine-native points
/// earned. Does not advance the step counter.
pub fn apply(spec: &GameSpec, subgoals: &[Subgoal], state: &mut EngineState, action: Action) -> (Outcome, u32) {
    let sub = spec.subgoal_reward as u32;
    let done = spec.completion_reward as u32;
    match action {
        Action::Look => (Outcome::Looked, 0),
        Action::Inventory => (Outcome::Inventoried, 0),
        Action::Go(d) => match spec.rooms[state.room].exits[d.index()] {
            Some(r) => {
                state.room = r;
                (Outcome::Walked(d), 0)
            }
            None => (Outcome::Blocked, 0),
        },
        Action::Examine(e) => (Outcome::Examined(e), 0),
        Action::Take(e) => {
            let from = match state.entities[e].place {
                Place::Inside(c) => Some(c),
                _ => None,
            };
            state.entities[e].place = Place::Inventory;
            let pts = mark(subgoals, state, Subgoal::Acquire { entity: e }) * sub;
            (Outcome::Took { entity: e, from }, pts)
        }
        Action::Open(c) => {
            state.entities[c].open = true;
            (Outcome::Opened(c), 0)
        }
        Action::Close(c) => {
            state.entities[c].open = false;
            (Outcome::Closed(c), 0)
        }
        Action::Chop(e) => {
            state.entities[e].chopped = true;
            match spec.recipe_item(e) {
                Some(item) if !item.chop => ruin(state, e),
                Some(_) => (Outcome::Chopped(e), mark(subgoals, state, Subgoal::Chop { entity: e }) * sub),
                None => (Outcome::Chopped(e), 0),
            }
        }
        Action::Cook(e, cook) => {
            state.entities[e].cooked = Some(cook);
            match spec.recipe_item(e) {
                Some(item) if item.cook != Some(cook) => ruin(state, e),
                Some(_) => (
                    Outcome::Cooked(e, cook),
                    mark(subgoals, state, Subgoal::Cook { entity: e, cook }) * sub,
                ),
                None => (Outcome::Cooked(e, cook), 0),
            }
        }
        Action::PrepareMeal => {
            if let Quest::Recipe { items, .. } = &spec.quest {
                for i in items {
                    state.entities[i.entity].place = Place::Gone;
                }
            }
            state.status = Status::Won;
            (Outcome::Meal, done)
        }
        Action::Eat(e) => {
            state.entities[e].place = Place::Gone;
            if spec.quest == (Quest::Consume { target: e }) {
                state.status = Status::Won;
                (Outcome::Ate(e), done)
            } else {
                (Outcome::Ate(e), 0)
            }
        }
        Action::Unlock { lock, key } => {
            if spec.entities[lock].key != Some(key) {
                return (Outcome::NoFit { lock, key }, 0);
            }
            state.entities[lock].locked = false;
            if spec.quest == (Quest::Unlock { key, lock }) {
                state.status = Status::Won;
                (Outcome::Unlocked { lock, key }, done)
            } else {
                (Outcome::Unlocked { lock, key }, 0)
            }
        }
    }
}

fn ruin(state: &mut EngineState, e: usize) -> (Outcome, u32) {
    state.entities[e].damaged = true;
    state.status = Status::Lost;
    (Outcome::Damaged(e), 0)
}

/// Canonical, variation-free rendering of what the player sees and carries.
pub fn canonical_scene(spec: &GameSpec, state: &EngineState) -> String {
    let describe = |e: usize| {
        let st = &state.entities[e];
        let mut flags = Vec::new();
        if st.chopped {
            flags.push("chopped".to_string());
        }
        if let Some(c) = st.cooked {
            flags.push(c.participle().to_string());
        }
        if st.damaged {
            flags.push("damaged".into());
        }
        match spec.entities[e].kind {
            EntityKind::Container => flags.push(if st.open { "open".into() } else { "closed".into() }),
            EntityKind::Lock => flags.push(if st.locked { "locked".into() } else { "unlocked".into() }),
            _ => {}
        }
        format!("{}[{}]", spec.entities[e].name, flags.join(","))
    };
    let mut seen: Vec<String> = (0..spec.entities.len()).filter(|&e| state.visible(e)).map(describe).collect();
    let mut held: Vec<String> = state.inventory().into_iter().map(describe).collect();
    seen.sort();
    held.sort();
    format!("room:{}|scene:{}|inventory:{}", spec.rooms[state.room].name, seen.join(";"), held.join(";"))
}

pub fn state_label(spec: &GameSpec, state: &EngineState) -> StateLabel {
    StateLabel::of(&canonical_scene(spec, state))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub text: String,
    pub admissible: Vec<String>,
    pub label: StateLabel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub response: String,
    /// +1 per newly achieved subgoal, +1 on the winning step.
    pub engine_reward: f64,
    /// Engine reward plus the step penalty, or the loss reward on a loss.
    pub reward: f64,
    pub status: Status,
    pub admissible: Vec<String>,
    pub label: StateLabel,
}

impl StepResult {
    pub fn terminal(&self) -> bool {
        self.status != Status::Running
    }
}

/// A live game instance. Cloning is cheap apart from the state itself.
#[derive(Clone, Debug)]
pub struct Game {
    spec: Arc<GameSpec>,
    subgoals: Arc<Vec<Subgoal>>,
    state: EngineState,
}

impl Game {
    pub fn new(spec: GameSpec) -> Result<Self> {
        spec.validate().map_err(WorldError::Spec)?;
        let subgoals = Arc::new(spec.subgoals());
        let state = EngineState::initial(&spec);
        Ok(Game {
            spec: Arc::new(spec),
            subgoals,
            state,
        })
    }

    /// Resumes a game at a previously saved state.
    pub fn with_state(spec: GameSpec, state: EngineState) -> Result<Self> {
        let mut game = Self::new(spec)?;
        if state.entities.len() != game.spec.entities.len()
            || state.achieved.len() != game.subgoals.len()
            || state.room >= game.spec.rooms.len()
        {
            return Err(WorldError::Spec("saved state does not fit this game".into()));
        }
        game.state = state;
        Ok(game)
    }

    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn state(&self) -> &EngineState {
        &self.state
    }

    pub fn reset(&mut self) -> Observation {
        self.state = EngineState::initial(&self.spec);
        let v = Voice::new(self.spec.seed, 0, "");
        let text = format!(
            "{} {}",
            text::quest_statement(&self.spec, &v),
            text::room_description(&self.spec, &self.state, &v)
        );
        Observation {
            text,
            admissible: self.admissible(),
            label: self.label(),
        }
    }

    /// Sorted, de-duplicated command strings.
    pub fn admissible(&self) -> Vec<String> {
        self.admissible_actions().into_iter().map(|(c, _)| c).collect()
    }

    pub fn admissible_actions(&self) -> Vec<(String, Action)> {
        let mut out: Vec<(String, Action)> = legal_actions(&self.spec, &self.state)
            .into_iter()
            .map(|a| (a.command(&self.spec), a))
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out.dedup_by(|a, b| a.0 == b.0);
        out
    }

    pub fn label(&self) -> StateLabel {
        state_label(&self.spec, &self.state)
    }

    pub fn step(&mut self, command: &str) -> Result<StepResult> {
        if self.state.status != Status::Running {
            return Err(WorldError::Finished);
        }
        let action = self
            .admissible_actions()
            .into_iter()
            .find(|(c, _)| c == command)
            .map(|(_, a)| a)
            .ok_or_else(|| WorldError::NotAdmissible {
                command: command.to_string(),
            })?;
        let v = Voice::new(self.spec.seed, self.state.steps, command);
        let (outcome, points) = apply(&self.spec, &self.subgoals, &mut self.state, action);
        self.state.score += points;
        self.state.steps += 1;

        let mut parts = vec![text::render(&self.spec, &self.state, &outcome, &v)];
        let subgoal_points = match self.state.status {
            Status::Won => points.saturating_sub(self.spec.completion_reward as u32),
            _ => points,
        };
        if subgoal_points > 0 {
            parts.push(v.pick(lx::SCORE_UP, 8).to_string());
        }
        match self.state.status {
            Status::Won => parts.push(v.pick(lx::WIN, 9).to_string()),
            Status::Lost => parts.push(v.pick(lx::LOSE, 9).to_string()),
            Status::Running if self.state.steps >= MAX_STEPS => {
                self.state.status = Status::Lost;
                parts.push(lx::OUT_OF_TIME.to_string());
                parts.push(v.pick(lx::LOSE, 9).to_string());
            }
            Status::Running => {}
        }
        let engine_reward = f64::from(points);
        let reward = if self.state.status == Status::Lost {
            LOSS_REWARD
        } else {
            engine_reward + STEP_PENALTY
        };
        Ok(StepResult {
            response: parts.join(" "),
            engine_reward,
            reward,
            status: self.state.status,
            admissible: self.admissible(),
            label: self.label(),
        })
    }
}
