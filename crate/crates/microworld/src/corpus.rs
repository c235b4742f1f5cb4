//! The desk-scale corpus: twelve cooking types split four ways, plus
//! out-of-genre treasure hunts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::generate::generate_games;
use crate::spec::{GameSpec, GameTypeDescriptor, Genre, Skill};

pub const SPLITS: [&str; 5] = ["train", "dev", "test1", "test2", "test_th"];

pub const GAMES_PER_TYPE: usize = 10;
/// Games per type in train, dev, test1 and test2.
pub const SPLIT_SIZES: [usize; 4] = [6, 2, 1, 1];
pub const HUNTS_PER_TYPE: usize = 5;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub train: Vec<GameSpec>,
    pub dev: Vec<GameSpec>,
    pub test1: Vec<GameSpec>,
    pub test2: Vec<GameSpec>,
    pub test_th: Vec<GameSpec>,
}

impl Corpus {
    pub fn split(&self, name: &str) -> Option<&Vec<GameSpec>> {
        match name {
            "train" => Some(&self.train),
            "dev" => Some(&self.dev),
            "test1" => Some(&self.test1),
            "test2" => Some(&self.test2),
            "test_th" => Some(&self.test_th),
            _ => None,
        }
    }

    pub fn split_mut(&mut self, name: &str) -> Option<&mut Vec<GameSpec>> {
        match name {
            "train" => Some(&mut self.train),
            "dev" => Some(&mut self.dev),
            "test1" => Some(&mut self.test1),
            "test2" => Some(&mut self.test2),
            "test_th" => Some(&mut self.test_th),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        SPLITS.iter().map(|s| self.split(s).unwrap().len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Cooking types ordered roughly by difficulty.
pub fn cooking_types() -> Vec<GameTypeDescriptor> {
    use Skill::*;
    vec![
        GameTypeDescriptor::new(1, &[], 1),
        GameTypeDescriptor::new(1, &[Chop], 1),
        GameTypeDescriptor::new(1, &[Fry], 2),
        GameTypeDescriptor::new(2, &[], 2),
        GameTypeDescriptor::new(2, &[Chop], 2),
        GameTypeDescriptor::new(2, &[Roast], 3),
        GameTypeDescriptor::new(2, &[Chop, Fry], 3),
        GameTypeDescriptor::new(1, &[Chop, Roast], 4),
        GameTypeDescriptor::new(3, &[], 4),
        GameTypeDescriptor::new(3, &[Chop], 4),
        GameTypeDescriptor::new(2, &[Fry, Roast], 4),
        GameTypeDescriptor::new(3, &[Chop, Fry, Roast], 6),
    ]
}

/// Retrieve-and-eat and key-and-lock hunts over two and three rooms.
pub fn hunt_types() -> Vec<GameTypeDescriptor> {
    vec![
        GameTypeDescriptor::new(1, &[Skill::Eat], 2),
        GameTypeDescriptor::new(1, &[Skill::Eat], 3),
        GameTypeDescriptor::new(1, &[Skill::Unlock], 2),
        GameTypeDescriptor::new(1, &[Skill::Unlock], 3),
    ]
}

pub fn desk_corpus(seed: u64) -> Result<Corpus> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corpus = Corpus::default();
    for d in cooking_types() {
        let games = generate_games(Genre::Cooking, &d, GAMES_PER_TYPE, rng.gen())?;
        let mut it = games.into_iter();
        for (name, n) in SPLITS.iter().zip(SPLIT_SIZES) {
            corpus.split_mut(name).unwrap().extend(it.by_ref().take(n));
        }
    }
    for d in hunt_types() {
        let games = generate_games(Genre::TreasureHunt, &d, HUNTS_PER_TYPE, rng.gen())?;
        corpus.test_th.extend(games);
    }
    Ok(corpus)
}
