//! Surface realisation: templated English with deterministic variation.

use crate::engine::{EngineState, Outcome, Place};
use crate::label::fnv1a64;
use crate::lexicon::{self as lx, article, fill, join_list};
use crate::spec::{Direction, EntityKind, GameSpec, Quest};

/// Chooses among synonymous templates. The choice depends only on the game
/// seed, the step count and the command, so replays reproduce it.
#[derive(Clone, Copy, Debug)]
pub struct Voice {
    key: u64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Voice {
    pub fn new(seed: u64, steps: u32, command: &str) -> Self {
        let key = splitmix(seed ^ splitmix(u64::from(steps)) ^ fnv1a64(command.as_bytes()));
        Voice { key }
    }

    pub fn pick<'a>(&self, pool: &[&'a str], slot: u64) -> &'a str {
        let h = splitmix(self.key ^ slot.wrapping_mul(0x2545_f491_4f6c_dd1d));
        pool[(h % pool.len() as u64) as usize]
    }
}

/// Noun phrase without article, carrying visible state.
pub fn entity_phrase(spec: &GameSpec, state: &EngineState, e: usize) -> String {
    let ent = &spec.entities[e];
    let st = &state.entities[e];
    let mut words: Vec<&str> = Vec::new();
    match ent.kind {
        EntityKind::Food => {
            if st.damaged {
                words.push("ruined");
            }
            if st.chopped {
                words.push("chopped");
            }
            if let Some(c) = st.cooked {
                words.push(c.participle());
            }
        }
        EntityKind::Container => words.push(if st.open { "open" } else { "closed" }),
        EntityKind::Lock => words.push(if st.locked { "locked" } else { "unlocked" }),
        _ => {}
    }
    words.push(&ent.name);
    let mut phrase = words.join(" ");
    if ent.kind == EntityKind::Container && st.open {
        let inside = contents(spec, state, e);
        if !inside.is_empty() {
            phrase = format!("{phrase} containing {}", join_list(&inside));
        }
    }
    phrase
}

fn with_article(phrase: String) -> String {
    format!("{} {phrase}", article(&phrase))
}

fn contents(spec: &GameSpec, state: &EngineState, container: usize) -> Vec<String> {
    (0..spec.entities.len())
        .filter(|&e| state.entities[e].place == Place::Inside(container))
        .map(|e| with_article(entity_phrase(spec, state, e)))
        .collect()
}

pub fn room_description(spec: &GameSpec, state: &EngineState, v: &Voice) -> String {
    let room = &spec.rooms[state.room];
    let mut out = vec![fill(v.pick(lx::ROOM_INTRO, 1), &[("{a}", &room.adjective), ("{r}", &room.name)])];
    let here: Vec<String> = (0..spec.entities.len())
        .filter(|&e| state.entities[e].place == Place::Room(state.room))
        .map(|e| with_article(entity_phrase(spec, state, e)))
        .collect();
    if here.is_empty() {
        out.push(v.pick(lx::ROOM_EMPTY, 2).to_string());
    } else {
        out.push(fill(v.pick(lx::ROOM_CONTENTS, 2), &[("{l}", &join_list(&here))]));
    }
    let exits: Vec<String> = Direction::ALL
        .iter()
        .filter(|d| room.exits[d.index()].is_some())
        .map(|d| d.word().to_string())
        .collect();
    if exits.is_empty() {
        out.push(v.pick(lx::NO_EXITS, 3).to_string());
    } else {
        out.push(fill(v.pick(lx::EXITS, 3), &[("{l}", &join_list(&exits))]));
    }
    out.join(" ")
}

fn recipe_list(spec: &GameSpec) -> String {
    let Quest::Recipe { items, .. } = &spec.quest else {
        return String::new();
    };
    let phrases: Vec<String> = items
        .iter()
        .map(|i| {
            let mut words: Vec<&str> = Vec::new();
            if i.chop {
                words.push("chopped");
            }
            if let Some(c) = i.cook {
                words.push(c.participle());
            }
            words.push(&spec.entities[i.entity].name);
            with_article(words.join(" "))
        })
        .collect();
    join_list(&phrases)
}

pub fn quest_statement(spec: &GameSpec, v: &Voice) -> String {
    let name = |e: usize| spec.entities[e].name.as_str();
    match &spec.quest {
        Quest::Recipe { .. } => fill(v.pick(lx::RECIPE_QUEST, 4), &[("{l}", &recipe_list(spec))]),
        Quest::Consume { target } => fill(v.pick(lx::CONSUME_QUEST, 4), &[("{x}", name(*target))]),
        Quest::Unlock { key, lock } => fill(
            v.pick(lx::UNLOCK_QUEST, 4),
            &[("{x}", name(*key)), ("{c}", name(*lock))],
        ),
    }
}

fn examine(spec: &GameSpec, state: &EngineState, e: usize, v: &Voice) -> String {
    let ent = &spec.entities[e];
    let st = &state.entities[e];
    let x = [("{x}", ent.name.as_str()), ("{c}", ent.name.as_str())];
    match ent.kind {
        EntityKind::Food => {
            let look = v.pick(lx::FOOD_LOOKS, 6);
            let mut out = vec![fill(v.pick(lx::EXAMINE_FOOD, 5), &[("{x}", &ent.name), ("{a}", look)])];
            if st.chopped {
                out.push(lx::EXAMINE_STATE_CHOPPED.to_string());
            }
            if let Some(c) = st.cooked {
                out.push(fill(lx::EXAMINE_STATE_COOKED, &[("{a}", c.participle())]));
            }
            out.join(" ")
        }
        EntityKind::Knife => v.pick(lx::EXAMINE_KNIFE, 5).to_string(),
        EntityKind::Stove => v.pick(lx::EXAMINE_STOVE, 5).to_string(),
        EntityKind::Oven => v.pick(lx::EXAMINE_OVEN, 5).to_string(),
        EntityKind::Cookbook => fill(v.pick(lx::EXAMINE_COOKBOOK, 5), &[("{l}", &recipe_list(spec))]),
        EntityKind::Container if st.open => {
            let head = fill(v.pick(lx::EXAMINE_CONTAINER_OPEN, 5), &x);
            let inside = contents(spec, state, e);
            if inside.is_empty() {
                format!("{head} {}", v.pick(lx::OPEN_EMPTY, 6))
            } else {
                format!("{head} {}", fill(v.pick(lx::OPEN_REVEALS, 6), &[("{l}", &join_list(&inside))]))
            }
        }
        EntityKind::Container => fill(v.pick(lx::EXAMINE_CONTAINER_CLOSED, 5), &x),
        _ => fill(v.pick(lx::EXAMINE_PLAIN, 5), &x),
    }
}

/// Response text for an outcome, rendered against the state after it.
pub fn render(spec: &GameSpec, state: &EngineState, outcome: &Outcome, v: &Voice) -> String {
    let name = |e: usize| spec.entities[e].name.as_str();
    match *outcome {
        Outcome::Looked => room_description(spec, state, v),
        Outcome::Inventoried => {
            let held: Vec<String> = state
                .inventory()
                .into_iter()
                .map(|e| with_article(entity_phrase(spec, state, e)))
                .collect();
            if held.is_empty() {
                v.pick(lx::CARRYING_NOTHING, 1).to_string()
            } else {
                fill(v.pick(lx::CARRYING, 1), &[("{l}", &join_list(&held))])
            }
        }
        Outcome::Blocked => lx::BLOCKED.to_string(),
        Outcome::Walked(d) => format!(
            "{} {}",
            fill(v.pick(lx::WALK, 7), &[("{d}", d.word())]),
            room_description(spec, state, v)
        ),
        Outcome::Examined(e) => examine(spec, state, e, v),
        Outcome::Took { entity, from: None } => fill(v.pick(lx::TAKE, 1), &[("{x}", name(entity))]),
        Outcome::Took { entity, from: Some(c) } => {
            fill(v.pick(lx::TAKE_FROM, 1), &[("{x}", name(entity)), ("{c}", name(c))])
        }
        Outcome::Opened(c) => {
            let head = fill(v.pick(lx::OPEN, 1), &[("{c}", name(c))]);
            let inside = contents(spec, state, c);
            if inside.is_empty() {
                format!("{head} {}", v.pick(lx::OPEN_EMPTY, 6))
            } else {
                format!("{head} {}", fill(v.pick(lx::OPEN_REVEALS, 6), &[("{l}", &join_list(&inside))]))
            }
        }
        Outcome::Closed(c) => fill(v.pick(lx::CLOSE, 1), &[("{c}", name(c))]),
        Outcome::Chopped(e) => fill(v.pick(lx::CHOP, 1), &[("{x}", name(e))]),
        Outcome::Cooked(e, c) => {
            let pool = match c {
                crate::spec::Cook::Fry => lx::FRY,
                crate::spec::Cook::Roast => lx::ROAST,
            };
            fill(v.pick(pool, 1), &[("{x}", name(e))])
        }
        Outcome::Damaged(e) => fill(v.pick(lx::DAMAGE, 1), &[("{x}", name(e))]),
        Outcome::Meal => v.pick(lx::PREPARE, 1).to_string(),
        Outcome::Ate(e) => fill(v.pick(lx::EAT, 1), &[("{x}", name(e))]),
        Outcome::Unlocked { lock, key } => fill(v.pick(lx::UNLOCK, 1), &[("{x}", name(key)), ("{c}", name(lock))]),
        Outcome::NoFit { lock, key } => fill(v.pick(lx::NOT_FIT, 1), &[("{x}", name(key)), ("{c}", name(lock))]),
    }
}
