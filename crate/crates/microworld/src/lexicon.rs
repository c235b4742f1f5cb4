//! Word pools for both genres and the surface templates built from them.
//!
//! Treasure-hunt entity names share no token with anything the cooking
//! generator can print, so a vocabulary built from cooking games sees them as
//! unknown words.

pub const COOKING_ROOMS: &[&str] = &[
    "kitchen",
    "pantry",
    "living room",
    "bedroom",
    "bathroom",
    "backyard",
    "garden",
    "corridor",
    "dining room",
    "shed",
    "driveway",
    "porch",
    "laundry room",
    "study",
];

pub const HUNT_ROOMS: &[&str] = &[
    "vault",
    "attic",
    "chapel",
    "armory",
    "crypt",
    "gallery",
    "dungeon",
    "observatory",
    "workshop",
    "greenhouse",
];

pub const ROOM_ADJECTIVES: &[&str] = &[
    "cozy", "bright", "spacious", "tidy", "cluttered", "dim", "small", "large", "quiet", "draughty",
];

pub const INGREDIENTS: &[&str] = &[
    "carrot",
    "potato",
    "onion",
    "tomato",
    "bell pepper",
    "egg",
    "chicken wing",
    "pork chop",
    "apple",
    "banana",
    "lettuce",
    "cucumber",
    "garlic",
    "mushroom",
    "salmon fillet",
    "zucchini",
    "eggplant",
    "cauliflower",
    "leek",
    "tuna steak",
];

pub const COOKING_FURNITURE: &[&str] = &[
    "table", "counter", "sofa", "shelf", "bed", "bench", "cabinet", "armchair",
];

pub const FOOD_LOOKS: &[&str] = &["fresh", "ripe", "tasty", "ordinary", "plump"];

pub const KNIFE: &str = "knife";
pub const STOVE: &str = "stove";
pub const OVEN: &str = "oven";
pub const FRIDGE: &str = "fridge";
pub const COOKBOOK: &str = "cookbook";

pub const HUNT_EDIBLES: &[&str] = &[
    "chocolate bar",
    "honey cake",
    "licorice stick",
    "marzipan loaf",
    "toffee lump",
    "nougat slab",
];

pub const HUNT_CONTAINERS: &[&str] = &["chest", "trunk", "casket", "coffer", "locker"];

pub const KEY_SHAPES: &[&str] = &["rectangular", "oval", "hexagonal", "triangular", "crescent"];
pub const KEY_NOUNS: &[&str] = &["passkey", "keycard"];
pub const LOCK_NOUNS: &[&str] = &["gate", "portcullis", "hatch"];

pub const HUNT_ITEMS: &[&str] = &[
    "golden coin",
    "lantern",
    "scroll",
    "amulet",
    "compass",
    "goblet",
    "crown",
    "silver chalice",
    "velvet pouch",
    "ivory figurine",
    "bronze medallion",
    "jade statuette",
];

pub const HUNT_FURNITURE: &[&str] = &["pedestal", "altar", "tapestry", "stone plinth"];

// Surface templates. `{x}` is an entity, `{c}` a container, `{r}` a room,
// `{a}` an adjective, `{d}` a direction, `{l}` a rendered list.

pub const ROOM_INTRO: &[&str] = &[
    "You are in the {a} {r}.",
    "You find yourself in the {a} {r}.",
    "You arrive in the {a} {r}.",
    "This is the {a} {r}.",
];

pub const ROOM_CONTENTS: &[&str] = &[
    "You see {l}.",
    "There is {l} here.",
    "You notice {l}.",
];

pub const ROOM_EMPTY: &[&str] = &["The room is empty.", "There is nothing here."];

pub const EXITS: &[&str] = &["Exits lead {l}.", "You can go {l}.", "Paths lead {l}."];

pub const NO_EXITS: &[&str] = &["There are no exits.", "There is no way out."];

pub const BLOCKED: &str = "You cannot go that way.";

pub const WALK: &[&str] = &["You walk {d}.", "You head {d}.", "You go {d}."];

pub const CARRYING: &[&str] = &["You are carrying {l}.", "You carry {l}."];

pub const CARRYING_NOTHING: &[&str] = &["You are carrying nothing.", "Your hands are empty."];

pub const TAKE: &[&str] = &["You take the {x}.", "You pick up the {x}.", "Taken: the {x}."];

pub const TAKE_FROM: &[&str] = &[
    "You take the {x} from the {c}.",
    "You remove the {x} from the {c}.",
];

pub const OPEN: &[&str] = &["You open the {c}.", "The {c} swings open."];

pub const OPEN_REVEALS: &[&str] = &["Inside you see {l}.", "It contains {l}."];

pub const OPEN_EMPTY: &[&str] = &["It is empty.", "There is nothing inside."];

pub const CLOSE: &[&str] = &["You close the {c}.", "The {c} is now closed."];

pub const CHOP: &[&str] = &["You chop the {x}.", "You slice the {x} into pieces."];

pub const FRY: &[&str] = &["You fry the {x}.", "The {x} sizzles on the stove."];

pub const ROAST: &[&str] = &["You roast the {x}.", "The {x} roasts in the oven."];

pub const DAMAGE: &[&str] = &[
    "You ruin the {x}! The recipe is impossible now.",
    "Oh no, the {x} is ruined!",
];

pub const PREPARE: &[&str] = &[
    "You prepare the meal. It smells delicious!",
    "You combine the ingredients into a meal.",
];

pub const EXAMINE_FOOD: &[&str] = &["The {x} looks {a}.", "It is a {a} {x}."];

pub const EXAMINE_STATE_CHOPPED: &str = "It has been chopped.";
pub const EXAMINE_STATE_COOKED: &str = "It has been {a}.";

pub const EXAMINE_KNIFE: &[&str] = &["A sharp knife.", "The knife is sharp."];
pub const EXAMINE_STOVE: &[&str] = &["A stove for frying.", "You could fry food on the stove."];
pub const EXAMINE_OVEN: &[&str] = &["An oven for roasting.", "You could roast food in the oven."];
pub const EXAMINE_COOKBOOK: &[&str] = &["The cookbook reads: {l}.", "The recipe says: {l}."];
pub const EXAMINE_CONTAINER_CLOSED: &[&str] = &["The {c} is closed.", "The {c} is shut."];
pub const EXAMINE_CONTAINER_OPEN: &[&str] = &["The {c} is open.", "The {c} stands open."];
pub const EXAMINE_PLAIN: &[&str] = &["Nothing special about the {x}.", "It is just a {x}."];

pub const SCORE_UP: &[&str] = &[
    "Your score goes up by one point.",
    "You gain a point.",
];

pub const WIN: &[&str] = &["You win!", "You have won!"];
pub const LOSE: &[&str] = &["You lose!", "You have lost!"];
pub const OUT_OF_TIME: &str = "You have run out of time.";

pub const RECIPE_QUEST: &[&str] = &[
    "Your task is to cook a meal. The recipe needs {l}. Then prepare the meal in the kitchen.",
    "Tonight you must make a meal. Gather {l}. Then prepare the meal in the kitchen.",
];

pub const CONSUME_QUEST: &[&str] = &[
    "Your task is to find the {x} and eat it.",
    "Somewhere here is the {x}. Find it and eat it.",
];

pub const UNLOCK_QUEST: &[&str] = &[
    "Your task is to find the {x} and use it to unlock the {c}.",
    "The {c} is locked. Find the {x} and unlock it.",
];

pub const EAT: &[&str] = &["You eat the {x}. Delicious!", "You devour the {x}."];

pub const UNLOCK: &[&str] = &["You unlock the {c} with the {x}.", "The {x} opens the {c}."];

pub const NOT_FIT: &[&str] = &["The {x} does not fit the {c}.", "That does not fit."];

/// Connectives used when rendering lists and entity phrases.
pub const GLUE: &[&str] = &[
    "a", "an", "and", ",", "the", "closed", "open", "containing", "chopped", "fried", "roasted",
    "with", "meal", "go", "look", "inventory", "examine", "take", "open", "close", "chop", "fry",
    "roast", "prepare", "north", "south", "east", "west", "locked",
];

/// Connectives only the treasure-hunt genre prints.
pub const HUNT_GLUE: &[&str] = &["eat", "unlock", "unlocked"];

/// Every string the cooking generator and engine can emit: templates with the
/// placeholders stripped, plus all cooking words.
pub fn cooking_surface() -> Vec<String> {
    let template_sets: &[&[&str]] = &[
        ROOM_INTRO,
        ROOM_CONTENTS,
        ROOM_EMPTY,
        EXITS,
        NO_EXITS,
        &[BLOCKED, EXAMINE_STATE_CHOPPED, EXAMINE_STATE_COOKED, OUT_OF_TIME],
        WALK,
        CARRYING,
        CARRYING_NOTHING,
        TAKE,
        TAKE_FROM,
        OPEN,
        OPEN_REVEALS,
        OPEN_EMPTY,
        CLOSE,
        CHOP,
        FRY,
        ROAST,
        DAMAGE,
        PREPARE,
        EXAMINE_FOOD,
        EXAMINE_KNIFE,
        EXAMINE_STOVE,
        EXAMINE_OVEN,
        EXAMINE_COOKBOOK,
        EXAMINE_CONTAINER_CLOSED,
        EXAMINE_CONTAINER_OPEN,
        EXAMINE_PLAIN,
        SCORE_UP,
        WIN,
        LOSE,
        RECIPE_QUEST,
    ];
    let word_sets: &[&[&str]] = &[
        COOKING_ROOMS,
        ROOM_ADJECTIVES,
        INGREDIENTS,
        COOKING_FURNITURE,
        FOOD_LOOKS,
        &[KNIFE, STOVE, OVEN, FRIDGE, COOKBOOK],
        GLUE,
    ];
    let mut out = Vec::new();
    for set in template_sets {
        for t in *set {
            out.push(strip_placeholders(t));
        }
    }
    for set in word_sets {
        out.extend(set.iter().map(|w| w.to_string()));
    }
    out
}

/// Everything either genre prints except treasure-hunt room and entity names.
pub fn vocabulary_surface() -> Vec<String> {
    let mut out = cooking_surface();
    for set in [CONSUME_QUEST, UNLOCK_QUEST, EAT, UNLOCK, NOT_FIT] {
        out.extend(set.iter().map(|t| strip_placeholders(t)));
    }
    out.extend(HUNT_GLUE.iter().map(|w| w.to_string()));
    out
}

/// Entity names the treasure-hunt generator can produce.
pub fn hunt_entity_names() -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    out.extend(HUNT_EDIBLES.iter().map(|s| s.to_string()));
    out.extend(HUNT_CONTAINERS.iter().map(|s| s.to_string()));
    out.extend(HUNT_ITEMS.iter().map(|s| s.to_string()));
    out.extend(HUNT_FURNITURE.iter().map(|s| s.to_string()));
    for shape in KEY_SHAPES {
        for noun in KEY_NOUNS.iter().chain(LOCK_NOUNS) {
            out.push(format!("{shape} {noun}"));
        }
    }
    out
}

/// Entity names the cooking generator can produce.
pub fn cooking_entity_names() -> Vec<String> {
    INGREDIENTS
        .iter()
        .chain(COOKING_FURNITURE)
        .chain(&[KNIFE, STOVE, OVEN, FRIDGE, COOKBOOK])
        .map(|s| s.to_string())
        .collect()
}

fn strip_placeholders(t: &str) -> String {
    let mut out = String::with_capacity(t.len());
    let mut depth = 0;
    for ch in t.chars() {
        match ch {
            '{' => depth += 1,
            '}' => depth -= 1,
            _ if depth == 0 => out.push(ch),
            _ => {}
        }
    }
    out
}

/// Fills a template; all placeholders are whitespace-separated words.
pub fn fill(template: &str, subs: &[(&str, &str)]) -> String {
    let mut s = template.to_string();
    for (key, val) in subs {
        s = s.replace(key, val);
    }
    s
}

pub fn article(phrase: &str) -> &'static str {
    match phrase.chars().next() {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}

/// "a, b and c"
pub fn join_list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}
