use std::path::{Path, PathBuf};

use dsqn_microworld::GameSpec;
use dsqn_tensor::Container;

use super::metrics::{MetricRecord, MetricsWriter};
use super::trainer::Trainer;
use crate::error::{CoreError, Result};

pub const METRICS_FILE: &str = "metrics.jsonl";
pub const LATEST: &str = "latest.ckpt";
pub const BEST: &str = "best.ckpt";
pub const SERIES_DIR: &str = "models";

/// Files one training run writes under its output directory.
#[derive(Clone, Debug)]
pub struct RunDir {
    pub root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunDir { root: root.into() }
    }

    pub fn metrics(&self) -> PathBuf {
        self.root.join(METRICS_FILE)
    }

    pub fn latest(&self) -> PathBuf {
        self.root.join(LATEST)
    }

    pub fn best(&self) -> PathBuf {
        self.root.join(BEST)
    }

    pub fn series(&self, step: u64) -> PathBuf {
        self.root.join(SERIES_DIR).join(format!("step-{step:08}.ckpt"))
    }

    fn prepare(&self) -> Result<()> {
        std::fs::create_dir_all(self.root.join(SERIES_DIR)).map_err(|e| CoreError::io(&self.root, e))
    }
}

fn save(c: &Container, path: &Path) -> Result<()> {
    Ok(c.save(path)?)
}

/// Steps `trainer` until it finishes or reaches `stop_at`, streaming records
/// and writing checkpoints at every evaluation and at the end.
pub fn run_training<F: FnMut(&MetricRecord)>(
    trainer: &mut Trainer,
    dir: &RunDir,
    metrics: &mut MetricsWriter,
    stop_at: Option<u64>,
    mut on_record: F,
) -> Result<()> {
    dir.prepare()?;
    while !trainer.finished() && stop_at.is_none_or(|s| trainer.step_count() < s) {
        let out = trainer.step()?;
        if let Some(r) = &out.record {
            metrics.write(r)?;
            on_record(r);
        }
        if out.dev_score_pct.is_some() {
            metrics.flush()?;
            let model = trainer.model();
            if out.improved {
                save(&model, &dir.best())?;
            }
            if trainer.config().train.keep_series {
                save(&model, &dir.series(trainer.step_count()))?;
            }
            save(&trainer.checkpoint()?, &dir.latest())?;
        }
    }
    metrics.flush()?;
    save(&trainer.checkpoint()?, &dir.latest())?;
    if trainer.best_dev().is_none() {
        save(&trainer.model(), &dir.best())?;
    }
    Ok(())
}

pub fn start_run(dir: &RunDir) -> Result<MetricsWriter> {
    dir.prepare()?;
    MetricsWriter::create(&dir.metrics())
}

/// Reloads `latest.ckpt` and trims the metrics stream back to it.
pub fn resume_run(dir: &RunDir, games: Vec<GameSpec>, dev: Vec<GameSpec>) -> Result<(Trainer, MetricsWriter)> {
    let path = dir.latest();
    if !path.exists() {
        return Err(CoreError::io(&path, std::io::Error::from(std::io::ErrorKind::NotFound)));
    }
    let trainer = Trainer::restore(&Container::load(&path)?, games, dev)?;
    let metrics = MetricsWriter::resume(&dir.metrics(), trainer.step_count())?;
    Ok((trainer, metrics))
}
