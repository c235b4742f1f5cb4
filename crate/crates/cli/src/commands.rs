use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::ArgMatches;
use dsqn_core::agent::{Network, Tokens};
use dsqn_core::config::RunConfig;
use dsqn_core::eval::{
    cluster_eval, episode_memory, export_embeddings, gather_corpus, pair_corpus, play_eval, snn_accuracy, Agent,
    EvalReport,
};
use dsqn_core::rng::{derive_seed, streams, substream};
use dsqn_core::train::{load_model, resume_run, run_training, start_run, RunDir, Trainer};
use dsqn_core::vocab::Vocabulary;
use dsqn_microworld::{desk_corpus, io as world_io, Game, GameSpec, StateLabel, Status};
use dsqn_tensor::{Container, ParameterStore};

use crate::args::overrides;
use crate::error::{CliError, Result};

struct Ctx<'a> {
    workdir: PathBuf,
    m: &'a ArgMatches,
}

impl Ctx<'_> {
    fn path(&self, rel: &str) -> PathBuf {
        self.workdir.join(rel)
    }

    fn arg(&self, id: &str) -> PathBuf {
        self.path(self.m.get_one::<String>(id).expect("argument has a default"))
    }

    /// `base`, then the config file, then flags.
    fn config(&self, base: RunConfig) -> Result<RunConfig> {
        let mut cfg = base;
        if let Some(file) = self.m.get_one::<String>("config") {
            let path = self.path(file);
            require(&path)?;
            cfg.apply_text(&std::fs::read_to_string(&path)?)?;
        }
        for (k, v) in overrides(self.m) {
            cfg.set(&k, &v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn split(&self, name: &str) -> Result<Vec<GameSpec>> {
        let dir = self.path("games").join(name);
        require(&dir)?;
        let games = world_io::read_split(&dir)?;
        if games.is_empty() {
            return Err(CliError::Failed(format!("no games in {}", dir.display())));
        }
        Ok(games)
    }
}

fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Missing(path.to_path_buf()))
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

pub fn run(root: &ArgMatches) -> Result<()> {
    let (name, m) = root.subcommand().expect("a subcommand is required");
    let ctx = Ctx {
        workdir: PathBuf::from(m.get_one::<String>("workdir").expect("default")),
        m,
    };
    match name {
        "gen-games" => gen_games(&ctx),
        "train" => train(&ctx),
        "eval-play" => eval_play(&ctx),
        "eval-snn" => eval_snn(&ctx),
        "eval-cluster" => eval_cluster(&ctx),
        "export-embeddings" => export(&ctx),
        "play" => play(&ctx),
        other => Err(CliError::Usage(format!("unknown subcommand `{other}`"))),
    }
}

fn gen_games(ctx: &Ctx) -> Result<()> {
    let cfg = ctx.config(RunConfig::default())?;
    let corpus = desk_corpus(derive_seed(cfg.general.seed, streams::GAMES))?;
    let root = ctx.path("games");
    for split in dsqn_microworld::SPLITS {
        let dir = root.join(split);
        // Clear earlier output so the directory holds exactly this corpus.
        if dir.exists() {
            for entry in std::fs::read_dir(&dir)? {
                let p = entry?.path();
                if p.extension().is_some_and(|e| e == "json") {
                    std::fs::remove_file(p)?;
                }
            }
        }
    }
    world_io::write_corpus(&root, &corpus)?;
    for split in dsqn_microworld::SPLITS {
        println!("{split}: {} games", corpus.split(split).map_or(0, Vec::len));
    }
    Ok(())
}

fn train(ctx: &Ctx) -> Result<()> {
    let dir = RunDir::new(ctx.arg("run"));
    let games = ctx.split("train")?;
    let dev = ctx.split("dev")?;
    let (mut trainer, mut metrics) = if ctx.m.get_flag("resume") {
        if !overrides(ctx.m).is_empty() || ctx.m.get_one::<String>("config").is_some() {
            return Err(CliError::Usage("a resumed run keeps its saved configuration".into()));
        }
        require(&dir.latest())?;
        resume_run(&dir, games, dev)?
    } else {
        let cfg = ctx.config(RunConfig::default())?;
        let trainer = Trainer::new(cfg, Vocabulary::game_lexicon(), games, dev)?;
        let metrics = start_run(&dir)?;
        write_file(&dir.root.join("config.txt"), &trainer.config().to_text())?;
        (trainer, metrics)
    };
    let total = trainer.config().train.total_steps;
    run_training(&mut trainer, &dir, &mut metrics, None, |r| {
        if let Some(score) = r.dev_score_pct {
            let acc = r.snn_acc.map_or(String::new(), |a| format!(" snn_acc {a:.3}"));
            eprintln!("step {}/{total}: dev {score:.1}%{acc} epsilon {:.3}", r.step, r.epsilon);
        }
    })?;
    println!(
        "trained {} steps; best dev score {}",
        trainer.step_count(),
        trainer.best_dev().map_or("n/a".to_string(), |s| format!("{s:.1}%"))
    );
    Ok(())
}

struct Loaded {
    cfg: RunConfig,
    vocab: Vocabulary,
    net: Network,
    store: ParameterStore,
}

fn load(ctx: &Ctx) -> Result<Loaded> {
    let path = ctx.arg("checkpoint");
    require(&path)?;
    let (saved, vocab, net, store) = load_model(&Container::load(&path)?)?;
    let mut cfg = ctx.config(saved.clone())?;
    // The network's shape is fixed by the checkpoint.
    cfg.encoder = saved.encoder;
    Ok(Loaded { cfg, vocab, net, store })
}

impl Loaded {
    fn greedy(&self) -> Agent<'_> {
        Agent::greedy(&self.net, &self.store, self.cfg.train.mode, self.cfg.train.bandit_c)
    }

    fn report(&self) -> EvalReport {
        EvalReport {
            config: self.cfg.to_json(),
            ..EvalReport::default()
        }
    }

    /// Trajectories from ε-greedy play on the evaluation split.
    fn stochastic_corpus(&self, games: &[GameSpec]) -> Result<Vec<(Tokens, StateLabel)>> {
        let e = &self.cfg.eval;
        let mut agent = Agent::new(
            &self.net,
            &self.store,
            self.cfg.train.mode,
            e.cluster_epsilon,
            self.cfg.train.bandit_c,
            substream(self.cfg.general.seed, streams::EVAL),
        );
        Ok(gather_corpus(&mut agent, games, e.cluster_trajectories, &self.vocab)?)
    }
}

fn eval_play(ctx: &Ctx) -> Result<()> {
    let l = load(ctx)?;
    let splits: Vec<String> = ctx.m.get_one::<String>("splits").expect("default").split(',').map(|s| s.trim().to_string()).collect();
    let mut report = l.report();
    let mut results = BTreeMap::new();
    for split in &splits {
        let games = ctx.split(split)?;
        let r = play_eval(&l.greedy(), &games, l.cfg.eval.episodes, &l.vocab, l.cfg.general.threads)?;
        println!("{split}: {:.2}% of achievable points", r.score_pct);
        results.insert(split.clone(), r);
    }
    report.play = results;
    let path = ctx.arg("report");
    write_file(&path, "")?;
    report.save(&path)?;
    Ok(())
}

fn eval_snn(ctx: &Ctx) -> Result<()> {
    let l = load(ctx)?;
    let games = ctx.split(&l.cfg.eval.eval_split)?;
    let memory = episode_memory(&mut l.greedy(), &games, &l.vocab)?;
    let mut rng = substream(l.cfg.general.seed, "snn-eval");
    let pairs = pair_corpus(&memory, l.cfg.eval.snn_eval_pairs, &mut rng);
    if pairs.is_empty() {
        return Err(CliError::Failed("evaluation memory holds too few distinct states to form pairs".into()));
    }
    let acc = snn_accuracy(&l.net, &l.store, l.cfg.train.mode.factored(), &pairs)?;
    println!("pair accuracy {acc:.4} over {} pairs", pairs.len());
    let mut report = l.report();
    report.snn_accuracy = Some(acc);
    report.snn_pairs = Some(pairs.len());
    let path = ctx.arg("report");
    write_file(&path, "")?;
    report.save(&path)?;
    Ok(())
}

fn eval_cluster(ctx: &Ctx) -> Result<()> {
    let l = load(ctx)?;
    let games = ctx.split(&l.cfg.eval.eval_split)?;
    let corpus = l.stochastic_corpus(&games)?;
    let mut rng = substream(l.cfg.general.seed, streams::KMEANS);
    let e = &l.cfg.eval;
    let r = cluster_eval(&l.net, &l.store, l.cfg.train.mode.factored(), &corpus, e.min_label_count, e.kmeans_restarts, &mut rng)?;
    println!(
        "k {} over {} trajectories: H {:.4} C {:.4} V {:.4}",
        r.k, r.points, r.scores.homogeneity, r.scores.completeness, r.scores.v
    );
    let mut report = l.report();
    report.clustering = Some(r);
    let path = ctx.arg("report");
    write_file(&path, "")?;
    report.save(&path)?;
    Ok(())
}

fn export(ctx: &Ctx) -> Result<()> {
    let l = load(ctx)?;
    let games = ctx.split(&l.cfg.eval.eval_split)?;
    let corpus = l.stochastic_corpus(&games)?;
    let text = export_embeddings(&l.net, &l.store, l.cfg.train.mode.factored(), &corpus)?;
    let path = ctx.arg("output");
    write_file(&path, &text)?;
    println!("wrote {} embeddings to {}", corpus.len(), path.display());
    Ok(())
}

fn play(ctx: &Ctx) -> Result<()> {
    let spec = match ctx.m.get_one::<String>("spec") {
        Some(file) => {
            let path = ctx.path(file);
            require(&path)?;
            world_io::read_spec(&path)?
        }
        None => {
            let split = ctx.m.get_one::<String>("split").expect("default");
            let games = ctx.split(split)?;
            let i = *ctx.m.get_one::<usize>("game").expect("default");
            games
                .get(i)
                .cloned()
                .ok_or_else(|| CliError::Usage(format!("{split} has {} games; no index {i}", games.len())))?
        }
    };
    let max_score = spec.max_score;
    let mut game = Game::new(spec)?;
    let obs = game.reset();
    let out = std::io::stdout();
    let mut out = out.lock();
    writeln!(out, "{}", obs.text)?;

    if ctx.m.get_one::<String>("checkpoint").is_some() {
        let l = load(ctx)?;
        let mut agent = l.greedy();
        let log = dsqn_core::eval::play_episode(&mut agent, game.spec(), &l.vocab)?;
        // Replay the agent's commands on the live game to show the text.
        for cmd in &log.commands {
            let r = game.step(cmd)?;
            writeln!(out, "\n> {cmd}\n{}", r.response)?;
        }
    } else {
        writeln!(out, "(type a command; `help` lists what is possible here, `quit` leaves)")?;
        let stdin = std::io::stdin();
        for line in stdin.lock().lines() {
            let line = line?;
            let cmd = line.trim();
            match cmd {
                "" => continue,
                "quit" | "exit" => break,
                "help" => {
                    writeln!(out, "{}", game.admissible().join(", "))?;
                    continue;
                }
                _ => {}
            }
            match game.step(cmd) {
                Ok(r) => {
                    writeln!(out, "{}", r.response)?;
                    if r.terminal() {
                        break;
                    }
                }
                Err(dsqn_microworld::WorldError::NotAdmissible { .. }) => {
                    writeln!(out, "That is not possible here. Try: {}", game.admissible().join(", "))?;
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    let st = game.state();
    let outcome = match st.status {
        Status::Won => "won",
        Status::Lost => "lost",
        Status::Running => "unfinished",
    };
    writeln!(out, "\nScore {}/{max_score} after {} moves ({outcome}).", st.score, st.steps)?;
    Ok(())
}
