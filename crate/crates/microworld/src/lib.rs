//! Procedural text games for training and evaluating text-game agents.
//!
//! Cooking games vary in ingredient count, required preparations and room
//! count. Treasure hunts use entity names that never occur in cooking games.

pub mod corpus;
pub mod engine;
pub mod error;
pub mod generate;
pub mod io;
pub mod label;
pub mod lexicon;
pub mod record;
pub mod solver;
pub mod spec;
pub mod text;

pub use corpus::{desk_corpus, Corpus, SPLITS};
pub use engine::{
    Action, EngineState, EntityState, Game, Observation, Place, Status, StepResult, LOSS_REWARD, MAX_STEPS,
    STEP_PENALTY,
};
pub use error::{Result, WorldError};
pub use generate::{generate_game, generate_games};
pub use label::StateLabel;
pub use record::RecordedStep;
pub use solver::solve;
pub use spec::{GameSpec, GameTypeDescriptor, Genre, Skill};
