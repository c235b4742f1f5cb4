use std::sync::Arc;

use dsqn_core::agent::{semantic_embedding, Mode, Network, PairLabel};
use dsqn_core::encoder::EncoderConfig;
use dsqn_core::eval::{
    accuracy_with, cluster_points, export_embeddings, kmeans_pp, parse_embeddings, play_eval, v_measure, Policy,
    RandomPolicy,
};
use dsqn_core::error::Result;
use dsqn_core::train::SnnPair;
use dsqn_core::vocab::{TokenId, Vocabulary};
use dsqn_microworld::{generate_games, solve, GameSpec, GameTypeDescriptor, Genre, StateLabel};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Mutual-information form: H = I/H(C), C = I/H(K).
fn oracle(classes: &[usize], clusters: &[usize]) -> (f64, f64, f64) {
    let n = classes.len() as f64;
    let nc = classes.iter().max().unwrap() + 1;
    let nk = clusters.iter().max().unwrap() + 1;
    let mut table = vec![vec![0.0f64; nk]; nc];
    for (&c, &k) in classes.iter().zip(clusters) {
        table[c][k] += 1.0;
    }
    let row: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let col: Vec<f64> = (0..nk).map(|k| table.iter().map(|r| r[k]).sum()).collect();
    let ent = |v: &[f64]| -> f64 { v.iter().filter(|&&x| x > 0.0).map(|&x| -(x / n) * (x / n).ln()).sum() };
    let (hc, hk) = (ent(&row), ent(&col));
    let mut mi = 0.0;
    for c in 0..nc {
        for k in 0..nk {
            let x = table[c][k];
            if x > 0.0 {
                mi += (x / n) * ((x * n) / (row[c] * col[k])).ln();
            }
        }
    }
    let h = if hc == 0.0 { 1.0 } else { mi / hc };
    let cc = if hk == 0.0 { 1.0 } else { mi / hk };
    let v = if h + cc == 0.0 { 0.0 } else { 2.0 * h * cc / (h + cc) };
    (h, cc, v)
}

fn shuffled_ids(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        ids.swap(i, rng.gen_range(0..=i));
    }
    ids
}

#[test]
fn v_measure_matches_the_entropy_oracle_on_random_labelings() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=30);
        let nc = rng.gen_range(1..=6);
        let nk = rng.gen_range(1..=6);
        let classes: Vec<usize> = (0..n).map(|_| rng.gen_range(0..nc)).collect();
        let clusters: Vec<usize> = (0..n).map(|_| rng.gen_range(0..nk)).collect();
        let m = v_measure(&classes, &clusters).unwrap();
        let (h, c, v) = oracle(&classes, &clusters);
        assert!((m.homogeneity - h).abs() < 1e-9, "{classes:?} {clusters:?}");
        assert!((m.completeness - c).abs() < 1e-9);
        assert!((m.v - v).abs() < 1e-9);

        let pc = shuffled_ids(nc, &mut rng);
        let pk = shuffled_ids(nk, &mut rng);
        let classes2: Vec<usize> = classes.iter().map(|&c| pc[c]).collect();
        let clusters2: Vec<usize> = clusters.iter().map(|&k| pk[k] + 100).collect();
        let m2 = v_measure(&classes2, &clusters2).unwrap();
        assert!((m.v - m2.v).abs() < 1e-12);
        assert!((m.homogeneity - m2.homogeneity).abs() < 1e-12);
        assert!((m.completeness - m2.completeness).abs() < 1e-12);
    }
}

#[test]
fn v_measure_reference_case() {
    let m = v_measure(&[0, 0, 1, 1], &[0, 1, 2, 2]).unwrap();
    let (h, c, v) = oracle(&[0, 0, 1, 1], &[0, 1, 2, 2]);
    assert!((m.homogeneity - h).abs() < 1e-9 && (m.completeness - c).abs() < 1e-9 && (m.v - v).abs() < 1e-9);
    assert_eq!(m.homogeneity, 1.0);
    assert!(v_measure::<u8, u8>(&[], &[]).is_err());
    assert!(v_measure(&[1], &[1, 2]).is_err());
}

proptest! {
    #[test]
    fn v_measure_of_a_labeling_with_itself_is_one(x in proptest::collection::vec(0u8..5, 1..40)) {
        let m = v_measure(&x, &x).unwrap();
        prop_assert!((m.homogeneity - 1.0).abs() < 1e-12);
        prop_assert!((m.completeness - 1.0).abs() < 1e-12);
        prop_assert!((m.v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn v_measure_scores_stay_in_unit_range(
        pairs in proptest::collection::vec((0u8..6, 0u8..6), 1..40)
    ) {
        let (a, b): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
        let m = v_measure(&a, &b).unwrap();
        for s in [m.homogeneity, m.completeness, m.v] {
            prop_assert!((0.0..=1.0).contains(&s));
        }
    }

    #[test]
    fn kmeans_is_deterministic_for_a_fixed_seed(seed in 0u64..1000) {
        let mut g = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Vec<f64>> = (0..25).map(|_| vec![g.gen::<f64>(), g.gen::<f64>()]).collect();
        let a = kmeans_pp(&pts, 4, 3, 300, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let b = kmeans_pp(&pts, 4, 3, 300, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn kmeans_separates_distant_blobs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for trial in 0..20 {
        let radius = 1.0;
        let mut pts = Vec::new();
        let mut truth = Vec::new();
        for (b, center) in [[0.0, 0.0], [10.0 * radius, 0.0]].iter().enumerate() {
            for _ in 0..30 {
                let ang = rng.gen::<f64>() * std::f64::consts::TAU;
                let r = radius * rng.gen::<f64>().sqrt();
                pts.push(vec![center[0] + r * ang.cos(), center[1] + r * ang.sin()]);
                truth.push(b);
            }
        }
        let km = kmeans_pp(&pts, 2, 10, 300, &mut ChaCha8Rng::seed_from_u64(trial)).unwrap();
        let m = v_measure(&truth, &km.assignments).unwrap();
        assert_eq!(m.v, 1.0, "trial {trial}");
    }
}

#[test]
fn lloyd_inertia_never_increases() {
    let mut g = ChaCha8Rng::seed_from_u64(9);
    let pts: Vec<Vec<f64>> = (0..80).map(|_| (0..3).map(|_| g.gen::<f64>()).collect()).collect();
    let mut last = f64::INFINITY;
    for iters in 1..40 {
        let km = kmeans_pp(&pts, 6, 1, iters, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert!(km.inertia <= last + 1e-12, "iteration {iters}: {} > {last}", km.inertia);
        last = km.inertia;
    }
}

fn pair(label: PairLabel, i: u32) -> SnnPair {
    SnnPair {
        a: Arc::new(vec![i]),
        b: Arc::new(vec![i + 1]),
        label,
        label_a: StateLabel(1),
        label_b: StateLabel(if label == PairLabel::Equivalent { 1 } else { 2 }),
    }
}

#[test]
fn pair_accuracy_limits() {
    let pairs: Vec<SnnPair> = (0..20)
        .map(|i| pair(if i % 2 == 0 { PairLabel::Equivalent } else { PairLabel::Different }, i))
        .collect();
    let oracle = |p: &SnnPair| -> Result<f64> { Ok(if p.label == PairLabel::Equivalent { 0.51 } else { 0.49 }) };
    assert_eq!(accuracy_with(&pairs, oracle).unwrap(), 1.0);
    assert_eq!(accuracy_with(&pairs, |_| Ok(0.7)).unwrap(), 0.5);
    assert_eq!(accuracy_with(&pairs, |_| Ok(0.2)).unwrap(), 0.5);
    assert!(accuracy_with(&[], |_| Ok(0.7)).is_err());
}

#[test]
fn pair_accuracy_is_symmetric_under_member_swap() {
    let cfg = EncoderConfig::micro();
    let vocab = Vocabulary::game_lexicon();
    let (net, store) = Network::init(&cfg, vocab.len(), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let pairs: Vec<SnnPair> = (0..16)
        .map(|i| {
            let t = |rng: &mut ChaCha8Rng| Arc::new((0..rng.gen_range(3..20)).map(|_| rng.gen_range(3..vocab.len() as u32)).collect::<Vec<_>>());
            let label = if i % 2 == 0 { PairLabel::Equivalent } else { PairLabel::Different };
            SnnPair { a: t(&mut rng), b: t(&mut rng), label, label_a: StateLabel(0), label_b: StateLabel(0) }
        })
        .collect();
    let swapped: Vec<SnnPair> = pairs
        .iter()
        .map(|p| SnnPair { a: p.b.clone(), b: p.a.clone(), ..p.clone() })
        .collect();
    for factored in [false, true] {
        let a = dsqn_core::eval::snn_accuracy(&net, &store, factored, &pairs).unwrap();
        let b = dsqn_core::eval::snn_accuracy(&net, &store, factored, &swapped).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn clustering_limits() {
    let labels: Vec<StateLabel> = (0..40).map(|i| StateLabel(i % 4)).collect();
    let one_hot: Vec<Vec<f64>> = labels.iter().map(|l| (0..4).map(|j| f64::from(j == l.0 as u32)).collect()).collect();
    let r = cluster_points(&one_hot, &labels, 10, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert_eq!(r.k, 4);
    assert!((r.scores.v - 1.0).abs() < 1e-12);
    let constant = vec![vec![0.5, 0.5]; 40];
    let r = cluster_points(&constant, &labels, 10, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert_eq!(r.scores.v, 0.0);
    let single = vec![StateLabel(3); 40];
    assert!(cluster_points(&one_hot, &single, 10, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
}

#[test]
fn export_is_exact_and_reproducible() {
    let cfg = EncoderConfig::micro();
    let vocab = Vocabulary::game_lexicon();
    let (net, store) = Network::init(&cfg, vocab.len(), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let corpus: Vec<(Arc<Vec<TokenId>>, StateLabel)> = (0..7)
        .map(|i| (Arc::new(vocab.tokenize(&format!("you see {i} apples in the kitchen"))), StateLabel(i)))
        .collect();
    for factored in [false, true] {
        let text = export_embeddings(&net, &store, factored, &corpus).unwrap();
        assert_eq!(text, export_embeddings(&net, &store, factored, &corpus).unwrap());
        let parsed = parse_embeddings(&text).unwrap();
        assert_eq!(parsed.len(), corpus.len());
        for ((label, v), (t, l)) in parsed.iter().zip(&corpus) {
            assert_eq!(label, l);
            assert_eq!(v, &semantic_embedding(&net, &store, t, factored).unwrap());
        }
    }
}

fn one_room_games(n: usize, seed: u64) -> Vec<GameSpec> {
    generate_games(Genre::Cooking, &GameTypeDescriptor::new(1, &[], 1), n, seed).unwrap()
}

/// Replays a precomputed solution.
#[derive(Clone)]
struct Scripted {
    plans: Vec<Vec<String>>,
    game: usize,
    turn: usize,
}

impl Policy for Scripted {
    fn begin_episode(&mut self) {
        self.turn = 0;
    }

    fn choose(&mut self, _: &[TokenId], commands: &[String], _: &[Vec<TokenId>]) -> Result<usize> {
        let want = &self.plans[self.game][self.turn];
        self.turn += 1;
        Ok(commands.iter().position(|c| c == want).expect("plan step is admissible"))
    }
}

#[test]
fn perfect_play_scores_one_hundred() {
    let vocab = Vocabulary::game_lexicon();
    for (g, spec) in one_room_games(4, 3).iter().enumerate() {
        let plan = solve(spec, 30).unwrap();
        let p = Scripted { plans: vec![plan], game: 0, turn: 0 };
        let r = play_eval(&p, std::slice::from_ref(spec), 10, &vocab, 1).unwrap();
        assert_eq!(r.score_pct, 100.0, "game {g}");
    }
}

#[test]
fn random_play_scores_above_zero() {
    let vocab = Vocabulary::game_lexicon();
    let games = one_room_games(1, 4);
    let mut positive = 0;
    for seed in 0..100 {
        let p = RandomPolicy::new(ChaCha8Rng::seed_from_u64(seed));
        let r = play_eval(&p, &games, 10, &vocab, 1).unwrap();
        assert!((0.0..=100.0).contains(&r.score_pct));
        if r.score_pct > 0.0 {
            positive += 1;
        }
    }
    assert!(positive >= 95, "{positive}/100");
}

#[test]
fn score_ignores_game_order_and_thread_count() {
    let vocab = Vocabulary::game_lexicon();
    let games = one_room_games(5, 6);
    let p = RandomPolicy::new(ChaCha8Rng::seed_from_u64(1));
    let a = play_eval(&p, &games, 3, &vocab, 1).unwrap();
    let mut rev = games.clone();
    rev.reverse();
    let b = play_eval(&p, &rev, 3, &vocab, 1).unwrap();
    let c = play_eval(&p, &games, 3, &vocab, 3).unwrap();
    assert!((a.score_pct - b.score_pct).abs() < 1e-9);
    assert_eq!(a, c);
}

#[test]
fn greedy_agent_is_deterministic() {
    let vocab = Vocabulary::game_lexicon();
    let games = one_room_games(2, 7);
    let (net, store) = Network::init(&EncoderConfig::micro(), vocab.len(), &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    let agent = dsqn_core::eval::Agent::greedy(&net, &store, Mode::Dsqn, 0.0);
    let a = play_eval(&agent, &games, 2, &vocab, 1).unwrap();
    let b = play_eval(&agent, &games, 2, &vocab, 2).unwrap();
    assert_eq!(a, b);
}
