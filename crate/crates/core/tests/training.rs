use dsqn_core::agent::Mode;
use dsqn_core::config::{RunConfig, Schedule};
use dsqn_core::encoder::EncoderConfig;
use dsqn_core::train::{read_metrics, resume_run, run_training, start_run, RunDir, Trainer};
use dsqn_core::vocab::Vocabulary;
use dsqn_microworld::{generate_games, GameSpec, GameTypeDescriptor, Genre, Skill};
use dsqn_tensor::ParameterStore;

fn games(n: usize, seed: u64) -> Vec<GameSpec> {
    let d = GameTypeDescriptor::new(1, &[Skill::Chop], 1);
    generate_games(Genre::Cooking, &d, n, seed).unwrap()
}

fn config(mode: Mode, total: u64, obs: u64) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.encoder = EncoderConfig::micro();
    cfg.encoder.max_tokens = 48;
    cfg.train.mode = mode;
    cfg.train.total_steps = total;
    cfg.train.observation_steps = obs;
    cfg.train.replay_capacity = 60;
    cfg.train.dqn_batch = 4;
    cfg.train.snn_pairs = 4;
    cfg.train.sync_period = 7;
    cfg.train.eval_every = 20;
    cfg.train.log_every = 5;
    cfg.train.epsilon_decay_steps = 40;
    cfg.train.dev_pairs = 8;
    cfg.general.seed = 11;
    cfg
}

fn trainer(cfg: RunConfig) -> Trainer {
    Trainer::new(cfg, Vocabulary::game_lexicon(), games(3, 1), games(2, 2)).unwrap()
}

fn same_values(a: &ParameterStore, b: &ParameterStore) -> bool {
    a.iter().zip(b.iter()).all(|((_, n1, t1), (_, n2, t2))| n1 == n2 && t1.data() == t2.data())
}

#[test]
fn observation_phase_leaves_parameters_untouched() {
    let mut t = trainer(config(Mode::DsqnFactored, 60, 40));
    let init = t.online().clone();
    for _ in 0..40 {
        t.step().unwrap();
    }
    assert_eq!(t.train_steps(), 0);
    assert!(same_values(&init, t.online()));
    t.step().unwrap();
    assert!(!same_values(&init, t.online()));
}

#[test]
fn dqn_only_never_moves_the_pair_head() {
    let mut t = trainer(config(Mode::DqnOnly, 50, 10));
    let init = t.online().clone();
    let mut records = Vec::new();
    while !t.finished() {
        if let Some(r) = t.step().unwrap().record {
            records.push(r);
        }
    }
    let net = t.network();
    for id in net.snn_only_params().into_iter().chain(net.dense_params()) {
        assert_eq!(init.get(id).data(), t.online().get(id).data());
    }
    assert!(!same_values(&init, t.online()));
    for r in &records {
        assert!(r.l_snn.is_none() && r.s2.is_none() && r.snn_acc.is_none());
        if r.step > 10 {
            assert!(r.l_dqn.is_some());
        }
    }
}

#[test]
fn record_schedule_and_contents() {
    let mut t = trainer(config(Mode::Dsqn, 80, 12));
    let mut records = Vec::new();
    while !t.finished() {
        if let Some(r) = t.step().unwrap().record {
            records.push(r);
        }
    }
    assert!(records.windows(2).all(|w| w[0].step < w[1].step));
    let evals: Vec<u64> = records.iter().filter(|r| r.dev_score_pct.is_some()).map(|r| r.step).collect();
    assert_eq!(evals, vec![20, 40, 60, 80]);
    for r in &records {
        if r.step > 12 {
            assert!(r.l_dqn.is_some() && r.s1.is_some() && r.s2.is_some());
        }
        if let Some(s) = r.dev_score_pct {
            assert!((0.0..=100.0).contains(&s));
        }
    }
    assert!(t.replay().len() <= 60);
}

#[test]
fn replay_stays_within_capacity_and_index_stays_consistent() {
    let mut t = trainer(config(Mode::Dsqn, 150, 140));
    while !t.finished() {
        t.step().unwrap();
        assert!(t.replay().len() <= t.replay().capacity());
        let indexed: usize = t.labels().iter().map(|(_, v)| v.len()).sum();
        assert_eq!(indexed, t.replay().len());
        for (label, seqs) in t.labels().iter() {
            for &s in seqs {
                assert_eq!(t.replay().get(s).unwrap().label, *label);
            }
        }
    }
}

fn full_run(dir: &std::path::Path, cfg: RunConfig) -> (String, Vec<u8>) {
    let run = RunDir::new(dir);
    let mut t = trainer(cfg);
    let mut m = start_run(&run).unwrap();
    run_training(&mut t, &run, &mut m, None, |_| {}).unwrap();
    (std::fs::read_to_string(run.metrics()).unwrap(), std::fs::read(run.latest()).unwrap())
}

#[test]
fn identical_seeds_give_identical_runs() {
    for schedule in [Schedule::Joint, Schedule::Independent] {
        let mut cfg = config(Mode::DsqnFactored, 70, 15);
        cfg.train.schedule = schedule;
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ra = full_run(a.path(), cfg.clone());
        let rb = full_run(b.path(), cfg);
        assert_eq!(ra.0, rb.0);
        assert_eq!(ra.1, rb.1);
        assert!(!read_metrics(&RunDir::new(a.path()).metrics()).unwrap().is_empty());
    }
}

#[test]
fn resume_matches_uninterrupted_run() {
    let cfg = config(Mode::DsqnFactored, 90, 15);
    let whole = tempfile::tempdir().unwrap();
    let (metrics, ckpt) = full_run(whole.path(), cfg.clone());

    let split = tempfile::tempdir().unwrap();
    let run = RunDir::new(split.path());
    let mut t = trainer(cfg);
    let mut m = start_run(&run).unwrap();
    // Stop between evaluations so the resumed run has records to rewrite.
    run_training(&mut t, &run, &mut m, Some(47), |_| {}).unwrap();
    drop((t, m));
    let (mut t, mut m) = resume_run(&run, games(3, 1), games(2, 2)).unwrap();
    assert_eq!(t.step_count(), 47);
    run_training(&mut t, &run, &mut m, None, |_| {}).unwrap();
    assert_eq!(std::fs::read_to_string(run.metrics()).unwrap(), metrics);
    assert_eq!(std::fs::read(run.latest()).unwrap(), ckpt);
}

#[test]
fn resume_rejects_other_games() {
    let dir = tempfile::tempdir().unwrap();
    let run = RunDir::new(dir.path());
    let mut t = trainer(config(Mode::Dsqn, 30, 10));
    let mut m = start_run(&run).unwrap();
    run_training(&mut t, &run, &mut m, Some(12), |_| {}).unwrap();
    assert!(resume_run(&run, games(3, 99), games(2, 2)).is_err());
}
