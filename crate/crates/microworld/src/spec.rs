use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Genre {
    Cooking,
    TreasureHunt,
}

/// Actions a game type may require the player to master.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Skill {
    Chop,
    Fry,
    Roast,
    Eat,
    Unlock,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cook {
    Fry,
    Roast,
}

impl Cook {
    pub fn skill(self) -> Skill {
        match self {
            Cook::Fry => Skill::Fry,
            Cook::Roast => Skill::Roast,
        }
    }

    pub fn participle(self) -> &'static str {
        match self {
            Cook::Fry => "fried",
            Cook::Roast => "roasted",
        }
    }
}

/// What makes one game type harder than another.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameTypeDescriptor {
    /// Recipe ingredients for cooking; quest targets (always 1) for hunts.
    pub ingredients: usize,
    pub skills: BTreeSet<Skill>,
    pub rooms: usize,
}

impl GameTypeDescriptor {
    pub fn new(ingredients: usize, skills: &[Skill], rooms: usize) -> Self {
        GameTypeDescriptor {
            ingredients,
            skills: skills.iter().copied().collect(),
            rooms,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    North,
    South,
    East,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::North,
        Direction::South,
        Direction::East,
        Direction::West,
    ];

    pub fn word(self) -> &'static str {
        match self {
            Direction::North => "north",
            Direction::South => "south",
            Direction::East => "east",
            Direction::West => "west",
        }
    }

    pub fn offset(self) -> (i32, i32) {
        match self {
            Direction::North => (0, 1),
            Direction::South => (0, -1),
            Direction::East => (1, 0),
            Direction::West => (-1, 0),
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::North => Direction::South,
            Direction::South => Direction::North,
            Direction::East => Direction::West,
            Direction::West => Direction::East,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Room {
    pub name: String,
    /// Per-game descriptive adjective used in surface text only.
    pub adjective: String,
    pub pos: (i32, i32),
    /// Neighbour room index per direction, indexed by [`Direction::index`].
    pub exits: [Option<usize>; 4],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    /// Food item: recipe ingredient or distractor.
    Food,
    Knife,
    Stove,
    Oven,
    Cookbook,
    Container,
    Furniture,
    /// Portable treasure-hunt object.
    Item,
    /// Portable and edible treasure-hunt object.
    Edible,
    Key,
    /// Fixed lock (gate, hatch) opened by a key.
    Lock,
}

impl EntityKind {
    pub fn portable(self) -> bool {
        matches!(
            self,
            EntityKind::Food | EntityKind::Knife | EntityKind::Item | EntityKind::Edible | EntityKind::Key
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Room(usize),
    /// Inside the container entity with this index.
    Inside(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub name: String,
    pub kind: EntityKind,
    pub location: Location,
    /// Containers only.
    #[serde(default)]
    pub starts_open: bool,
    /// Lock entities: the key entity that opens it.
    #[serde(default)]
    pub key: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecipeItem {
    pub entity: usize,
    pub chop: bool,
    pub cook: Option<Cook>,
}

impl RecipeItem {
    pub fn preparations(&self) -> usize {
        usize::from(self.chop) + usize::from(self.cook.is_some())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Quest {
    Recipe { items: Vec<RecipeItem>, kitchen: usize },
    /// Take the target and eat it.
    Consume { target: usize },
    /// Take the key and unlock the lock with it.
    Unlock { key: usize, lock: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Subgoal {
    Acquire { entity: usize },
    Chop { entity: usize },
    Cook { entity: usize, cook: Cook },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub seed: u64,
    pub genre: Genre,
    pub descriptor: GameTypeDescriptor,
    pub rooms: Vec<Room>,
    pub start_room: usize,
    pub entities: Vec<Entity>,
    pub quest: Quest,
    pub subgoal_reward: f64,
    pub completion_reward: f64,
    pub max_score: f64,
}

impl GameSpec {
    /// Rewarded intermediate steps, in a fixed order.
    pub fn subgoals(&self) -> Vec<Subgoal> {
        match &self.quest {
            Quest::Recipe { items, .. } => {
                let mut out: Vec<Subgoal> =
                    items.iter().map(|i| Subgoal::Acquire { entity: i.entity }).collect();
                for i in items {
                    if i.chop {
                        out.push(Subgoal::Chop { entity: i.entity });
                    }
                    if let Some(cook) = i.cook {
                        out.push(Subgoal::Cook {
                            entity: i.entity,
                            cook,
                        });
                    }
                }
                out
            }
            Quest::Consume { target } => vec![Subgoal::Acquire { entity: *target }],
            Quest::Unlock { key, .. } => vec![Subgoal::Acquire { entity: *key }],
        }
    }

    pub fn recipe_item(&self, entity: usize) -> Option<&RecipeItem> {
        match &self.quest {
            Quest::Recipe { items, .. } => items.iter().find(|i| i.entity == entity),
            _ => None,
        }
    }

    pub fn entity_by_name(&self, name: &str) -> Option<usize> {
        self.entities.iter().position(|e| e.name == name)
    }

    /// Checks structural consistency of a spec loaded from disk.
    pub fn validate(&self) -> Result<(), String> {
        let nr = self.rooms.len();
        let ne = self.entities.len();
        if nr == 0 || self.start_room >= nr {
            return Err("no rooms or bad start room".into());
        }
        for (i, r) in self.rooms.iter().enumerate() {
            for d in Direction::ALL {
                if let Some(j) = r.exits[d.index()] {
                    if j >= nr || self.rooms[j].exits[d.opposite().index()] != Some(i) {
                        return Err(format!("room {i}: exit {} is not symmetric", d.word()));
                    }
                }
            }
        }
        if crate::generate::reachable_rooms(&self.rooms, self.start_room).len() != nr {
            return Err("room graph is not connected".into());
        }
        for (i, e) in self.entities.iter().enumerate() {
            match e.location {
                Location::Room(r) if r >= nr => return Err(format!("entity {i}: bad room")),
                Location::Inside(c) if c >= ne || self.entities[c].kind != EntityKind::Container => {
                    return Err(format!("entity {i}: not inside a container"))
                }
                _ => {}
            }
            if e.kind == EntityKind::Lock && e.key.is_none_or(|k| k >= ne) {
                return Err(format!("entity {i}: lock without key"));
            }
        }
        let expect = self.subgoals().len() as f64 * self.subgoal_reward + self.completion_reward;
        if self.max_score <= 0.0 || self.max_score != expect {
            return Err(format!("max_score {} but subgoals sum to {expect}", self.max_score));
        }
        Ok(())
    }
}
