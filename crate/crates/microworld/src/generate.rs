//! Procedural game generation.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, WorldError};
use crate::lexicon;
use crate::spec::{
    Cook, Direction, Entity, EntityKind, GameSpec, GameTypeDescriptor, Genre, Location, Quest,
    RecipeItem, Room, Skill,
};

pub const SUBGOAL_REWARD: f64 = 1.0;
pub const COMPLETION_REWARD: f64 = 1.0;
pub const MAX_INGREDIENTS: usize = 8;

/// Rooms reachable from `start`, in breadth-first order.
pub fn reachable_rooms(rooms: &[Room], start: usize) -> Vec<usize> {
    let mut seen = vec![false; rooms.len()];
    let mut order = Vec::new();
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(r) = queue.pop_front() {
        order.push(r);
        for next in rooms[r].exits.iter().flatten() {
            if !seen[*next] {
                seen[*next] = true;
                queue.push_back(*next);
            }
        }
    }
    order
}

/// Rejects descriptors the generator cannot realise exactly.
pub fn check_descriptor(genre: Genre, d: &GameTypeDescriptor) -> Result<()> {
    let bad = |msg: &str| Err(WorldError::Descriptor(msg.to_string()));
    if d.rooms == 0 {
        return bad("a game needs at least one room");
    }
    match genre {
        Genre::Cooking => {
            if d.rooms > lexicon::COOKING_ROOMS.len() {
                return bad("more rooms than cooking room names");
            }
            if d.ingredients == 0 || d.ingredients > MAX_INGREDIENTS {
                return bad("ingredient count out of range");
            }
            if d.skills.iter().any(|s| matches!(s, Skill::Eat | Skill::Unlock)) {
                return bad("cooking games only use chop, fry and roast");
            }
            let cooks = d.skills.iter().filter(|s| matches!(s, Skill::Fry | Skill::Roast)).count();
            if cooks > d.ingredients {
                return bad("each ingredient takes at most one cooking method");
            }
        }
        Genre::TreasureHunt => {
            if d.rooms > lexicon::HUNT_ROOMS.len() {
                return bad("more rooms than treasure-hunt room names");
            }
            if d.ingredients != 1 {
                return bad("treasure hunts have exactly one quest target");
            }
            let eat = BTreeSet::from([Skill::Eat]);
            let unlock = BTreeSet::from([Skill::Unlock]);
            if d.skills == unlock && d.rooms < 2 {
                return bad("the key and the lock must be in different rooms");
            }
            if d.skills != eat && d.skills != unlock {
                return bad("treasure hunts need exactly one of eat or unlock");
            }
        }
    }
    Ok(())
}

/// `count` games of one type; fully determined by `(genre, descriptor, seed)`.
pub fn generate_games(
    genre: Genre,
    descriptor: &GameTypeDescriptor,
    count: usize,
    seed: u64,
) -> Result<Vec<GameSpec>> {
    if count == 0 {
        return Err(WorldError::Descriptor("count must be at least 1".into()));
    }
    check_descriptor(genre, descriptor)?;
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| generate_game(genre, descriptor, master.gen()))
        .collect()
}

pub fn generate_game(genre: Genre, descriptor: &GameTypeDescriptor, seed: u64) -> Result<GameSpec> {
    check_descriptor(genre, descriptor)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = match genre {
        Genre::Cooking => cooking(&mut rng, descriptor, seed),
        Genre::TreasureHunt => hunt(&mut rng, descriptor, seed),
    };
    spec.validate().map_err(WorldError::Spec)?;
    Ok(spec)
}

/// Random connected layout on a grid, built by growing a tree from the origin.
fn grid_layout(rng: &mut ChaCha8Rng, n: usize) -> (Vec<(i32, i32)>, Vec<[Option<usize>; 4]>) {
    let mut pos = vec![(0, 0)];
    let mut exits = vec![[None; 4]];
    let mut occupied = BTreeMap::from([((0, 0), 0usize)]);
    while pos.len() < n {
        let from = rng.gen_range(0..pos.len());
        let dir = Direction::ALL[rng.gen_range(0..4)];
        let (dx, dy) = dir.offset();
        let cell = (pos[from].0 + dx, pos[from].1 + dy);
        if occupied.contains_key(&cell) {
            continue;
        }
        let idx = pos.len();
        occupied.insert(cell, idx);
        pos.push(cell);
        exits.push([None; 4]);
        exits[from][dir.index()] = Some(idx);
        exits[idx][dir.opposite().index()] = Some(from);
    }
    (pos, exits)
}

fn build_rooms(rng: &mut ChaCha8Rng, names: Vec<String>) -> Vec<Room> {
    let (pos, exits) = grid_layout(rng, names.len());
    names
        .into_iter()
        .zip(pos)
        .zip(exits)
        .map(|((name, pos), exits)| Room {
            name,
            adjective: lexicon::ROOM_ADJECTIVES.choose(rng).unwrap().to_string(),
            pos,
            exits,
        })
        .collect()
}

fn sample<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str], n: usize) -> Vec<&'a str> {
    pool.choose_multiple(rng, n).copied().collect()
}

fn entity(name: &str, kind: EntityKind, location: Location) -> Entity {
    Entity {
        name: name.to_string(),
        kind,
        location,
        starts_open: false,
        key: None,
    }
}

fn furnish(rng: &mut ChaCha8Rng, pool: &[&str], rooms: usize, entities: &mut Vec<Entity>) {
    let names = sample(rng, pool, rooms.min(pool.len()));
    for (r, name) in names.into_iter().enumerate() {
        if rng.gen_bool(0.6) {
            entities.push(entity(name, EntityKind::Furniture, Location::Room(r)));
        }
    }
}

fn finish(
    seed: u64,
    genre: Genre,
    descriptor: &GameTypeDescriptor,
    rooms: Vec<Room>,
    start_room: usize,
    entities: Vec<Entity>,
    quest: Quest,
) -> GameSpec {
    let mut spec = GameSpec {
        seed,
        genre,
        descriptor: descriptor.clone(),
        rooms,
        start_room,
        entities,
        quest,
        subgoal_reward: SUBGOAL_REWARD,
        completion_reward: COMPLETION_REWARD,
        max_score: 0.0,
    };
    spec.max_score = spec.subgoals().len() as f64 * SUBGOAL_REWARD + COMPLETION_REWARD;
    spec
}

fn cooking(rng: &mut ChaCha8Rng, d: &GameTypeDescriptor, seed: u64) -> GameSpec {
    let others: Vec<&str> = lexicon::COOKING_ROOMS.iter().copied().filter(|r| *r != "kitchen").collect();
    let mut names: Vec<String> = sample(rng, &others, d.rooms - 1).into_iter().map(String::from).collect();
    let kitchen = rng.gen_range(0..d.rooms);
    names.insert(kitchen, "kitchen".to_string());
    let rooms = build_rooms(rng, names);
    let start_room = rng.gen_range(0..d.rooms);

    let mut entities = Vec::new();
    let fridge = entities.len();
    entities.push(entity(lexicon::FRIDGE, EntityKind::Container, Location::Room(kitchen)));
    entities.push(entity(lexicon::COOKBOOK, EntityKind::Cookbook, Location::Room(kitchen)));
    if d.skills.contains(&Skill::Fry) {
        entities.push(entity(lexicon::STOVE, EntityKind::Stove, Location::Room(kitchen)));
    }
    if d.skills.contains(&Skill::Roast) {
        entities.push(entity(lexicon::OVEN, EntityKind::Oven, Location::Room(kitchen)));
    }
    if d.skills.contains(&Skill::Chop) {
        let r = rng.gen_range(0..d.rooms);
        entities.push(entity(lexicon::KNIFE, EntityKind::Knife, Location::Room(r)));
    }
    let furniture: Vec<&str> = lexicon::COOKING_FURNITURE.to_vec();
    furnish(rng, &furniture, d.rooms, &mut entities);

    let foods = sample(rng, lexicon::INGREDIENTS, d.ingredients + 1);
    let mut food_ids = Vec::new();
    for name in foods {
        let r = rng.gen_range(0..d.rooms);
        let location = if r == kitchen && rng.gen_bool(0.5) {
            Location::Inside(fridge)
        } else {
            Location::Room(r)
        };
        food_ids.push(entities.len());
        entities.push(entity(name, EntityKind::Food, location));
    }
    // The last food is a distractor that the recipe never asks for.
    food_ids.pop();

    let cooks: Vec<Cook> = [Cook::Fry, Cook::Roast]
        .into_iter()
        .filter(|c| d.skills.contains(&c.skill()))
        .collect();
    let chop = d.skills.contains(&Skill::Chop);
    let mut order: Vec<usize> = (0..food_ids.len()).collect();
    order.shuffle(rng);
    let mut items: Vec<RecipeItem> = food_ids
        .iter()
        .map(|&e| RecipeItem {
            entity: e,
            chop: false,
            cook: None,
        })
        .collect();
    for (rank, &i) in order.iter().enumerate() {
        items[i].cook = match cooks.get(rank) {
            Some(c) => Some(*c),
            None if cooks.is_empty() => None,
            None => {
                let pick = rng.gen_range(0..=cooks.len());
                cooks.get(pick).copied()
            }
        };
        items[i].chop = chop && (rank == 0 || rng.gen_bool(0.5));
    }
    finish(
        seed,
        Genre::Cooking,
        d,
        rooms,
        start_room,
        entities,
        Quest::Recipe { items, kitchen },
    )
}

fn hunt(rng: &mut ChaCha8Rng, d: &GameTypeDescriptor, seed: u64) -> GameSpec {
    let names: Vec<String> = sample(rng, lexicon::HUNT_ROOMS, d.rooms).into_iter().map(String::from).collect();
    let rooms = build_rooms(rng, names);
    let start_room = rng.gen_range(0..d.rooms);
    let mut entities = Vec::new();
    furnish(rng, lexicon::HUNT_FURNITURE, d.rooms, &mut entities);

    let chest_room = rng.gen_range(0..d.rooms);
    let chest = entities.len();
    let chest_name = lexicon::HUNT_CONTAINERS.choose(rng).unwrap();
    entities.push(entity(chest_name, EntityKind::Container, Location::Room(chest_room)));

    for name in sample(rng, lexicon::HUNT_ITEMS, 2) {
        let r = rng.gen_range(0..d.rooms);
        entities.push(entity(name, EntityKind::Item, Location::Room(r)));
    }

    let quest = if d.skills.contains(&Skill::Eat) {
        let edibles = sample(rng, lexicon::HUNT_EDIBLES, 2);
        let target = entities.len();
        entities.push(entity(edibles[0], EntityKind::Edible, Location::Inside(chest)));
        let r = rng.gen_range(0..d.rooms);
        entities.push(entity(edibles[1], EntityKind::Edible, Location::Room(r)));
        Quest::Consume { target }
    } else {
        let shapes = sample(rng, lexicon::KEY_SHAPES, 2);
        let key_noun = lexicon::KEY_NOUNS.choose(rng).unwrap();
        let lock_noun = lexicon::LOCK_NOUNS.choose(rng).unwrap();

        let key_room = rng.gen_range(0..d.rooms);
        let lock_room = loop {
            let r = rng.gen_range(0..d.rooms);
            if r != key_room {
                break r;
            }
        };
        let key_location = if key_room == chest_room && rng.gen_bool(0.5) {
            Location::Inside(chest)
        } else {
            Location::Room(key_room)
        };
        let key = entities.len();
        entities.push(entity(&format!("{} {key_noun}", shapes[0]), EntityKind::Key, key_location));
        let r = rng.gen_range(0..d.rooms);
        entities.push(entity(&format!("{} {key_noun}", shapes[1]), EntityKind::Key, Location::Room(r)));
        let lock = entities.len();
        let mut gate = entity(&format!("{} {lock_noun}", shapes[0]), EntityKind::Lock, Location::Room(lock_room));
        gate.key = Some(key);
        entities.push(gate);
        Quest::Unlock { key, lock }
    };
    finish(seed, Genre::TreasureHunt, d, rooms, start_room, entities, quest)
}
