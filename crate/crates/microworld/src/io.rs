//! Game spec files: one pretty-printed JSON document per game.

use std::fs;
use std::path::{Path, PathBuf};

use crate::corpus::{Corpus, SPLITS};
use crate::error::{Result, WorldError};
use crate::spec::GameSpec;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> WorldError + '_ {
    move |source| WorldError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_spec(path: &Path, spec: &GameSpec) -> Result<()> {
    let mut text = serde_json::to_string_pretty(spec).map_err(|source| WorldError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_spec(path: &Path) -> Result<GameSpec> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let spec: GameSpec = serde_json::from_str(&text).map_err(|source| WorldError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    spec.validate()
        .map_err(|msg| WorldError::Spec(format!("{}: {msg}", path.display())))?;
    Ok(spec)
}

/// Writes `specs` as `dir/000.json`, `dir/001.json`, ...
pub fn write_split(dir: &Path, specs: &[GameSpec]) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for (i, spec) in specs.iter().enumerate() {
        write_spec(&dir.join(format!("{i:03}.json")), spec)?;
    }
    Ok(())
}

/// Reads every `*.json` file in `dir`, in file-name order.
pub fn read_split(dir: &Path) -> Result<Vec<GameSpec>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| read_spec(p)).collect()
}

pub fn write_corpus(root: &Path, corpus: &Corpus) -> Result<()> {
    for name in SPLITS {
        write_split(&root.join(name), corpus.split(name).unwrap())?;
    }
    Ok(())
}

pub fn read_corpus(root: &Path) -> Result<Corpus> {
    let mut corpus = Corpus::default();
    for name in SPLITS {
        *corpus.split_mut(name).unwrap() = read_split(&root.join(name))?;
    }
    Ok(corpus)
}
