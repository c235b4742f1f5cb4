use std::sync::Arc;

use dsqn_core::agent::{
    dqn_loss, multitask_loss, multitask_value, q_values_factored, self_pair_prob, snn_loss, snn_predict, Network,
    PairLabel,
};
use dsqn_core::encoder::EncoderConfig;
use dsqn_core::train::{sample_snn_batch, LabelIndex};
use dsqn_core::vocab::{TokenId, Vocabulary, PAD};
use dsqn_microworld::StateLabel;
use dsqn_tensor::{sigmoid, ParameterStore, Tape, Var};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn setup(seed: u64) -> (Vocabulary, Network, ParameterStore) {
    let vocab = Vocabulary::game_lexicon();
    let (net, mut store) = Network::init(&EncoderConfig::micro(), vocab.len(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    // Non-zero biases and task weights so every gradient path is exercised.
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        if store.name(id).ends_with(".b") || store.name(id).ends_with("bias") || store.name(id).starts_with("head.s") {
            for v in store.get_mut(id).data_mut() {
                *v += rng.gen_range(-0.3..0.3);
            }
        }
    }
    (vocab, net, store)
}

fn random_tokens(rng: &mut ChaCha8Rng, vocab: &Vocabulary, lo: usize, hi: usize) -> Vec<TokenId> {
    (0..rng.gen_range(lo..hi)).map(|_| rng.gen_range(3..vocab.len() as TokenId)).collect()
}

struct Batch {
    states: Vec<Vec<TokenId>>,
    actions: Vec<Vec<TokenId>>,
    targets: Vec<f64>,
    pairs: Vec<(Vec<TokenId>, Vec<TokenId>, PairLabel)>,
}

fn batch(vocab: &Vocabulary, seed: u64) -> Batch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = (0..3).map(|_| random_tokens(&mut rng, vocab, 4, 12)).collect();
    let actions = (0..3).map(|_| random_tokens(&mut rng, vocab, 1, 5)).collect();
    let targets = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let pairs = (0..4)
        .map(|i| {
            let l = if i % 2 == 0 { PairLabel::Equivalent } else { PairLabel::Different };
            (random_tokens(&mut rng, vocab, 3, 10), random_tokens(&mut rng, vocab, 3, 10), l)
        })
        .collect();
    Batch { states, actions, targets, pairs }
}

/// The full weighted loss, built per trajectory so it shares no batching
/// code with the trainer.
fn total_loss(net: &Network, store: &ParameterStore, b: &Batch, tape: &mut Tape) -> Var {
    let mut qs = Vec::new();
    for (s, a) in b.states.iter().zip(&b.actions) {
        let repr = net.represent(tape, store, s, true).unwrap();
        let fa = net.encode_actions(tape, store, &[a.as_slice()]).unwrap();
        qs.push(net.q_values(tape, store, &repr, fa).unwrap().q);
    }
    let q = tape.concat_rows(&qs).unwrap();
    let l_dqn = dqn_loss(tape, q, &b.targets).unwrap();
    let mut probs = Vec::new();
    for (x, y, _) in &b.pairs {
        let rx = net.represent(tape, store, x, true).unwrap().semantic;
        let ry = net.represent(tape, store, y, true).unwrap().semantic;
        probs.push(net.snn_prob(tape, store, rx, ry).unwrap());
    }
    let p = tape.concat_rows(&probs).unwrap();
    let labels: Vec<_> = b.pairs.iter().map(|x| x.2).collect();
    let l_snn = snn_loss(tape, p, &labels).unwrap();
    let s1 = tape.param(store, net.s1());
    let s2 = tape.param(store, net.s2());
    multitask_loss(tape, l_dqn, l_snn, s1, s2).unwrap()
}

fn loss_value(net: &Network, store: &ParameterStore, b: &Batch) -> f64 {
    let mut tape = Tape::new();
    let l = total_loss(net, store, b, &mut tape);
    tape.value(l).item()
}

/// Worst relative error per parameter over a handful of probed entries.
fn finite_difference_errors(seed: u64, probes: usize) -> Vec<(String, f64)> {
    let (vocab, net, mut store) = setup(seed);
    let b = batch(&vocab, seed + 1);
    let mut tape = Tape::new();
    let l = total_loss(&net, &store, &b, &mut tape);
    let grads = tape.backward(l).unwrap().params(&store);
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 2);
    let h = 1e-5;
    let ids: Vec<_> = store.ids().collect();
    let mut out = Vec::new();
    for id in ids {
        let name = store.name(id).to_string();
        let n = store.get(id).len();
        let g = grads.get(id).clone();
        // Embedding rows only receive gradient where their token occurs.
        let candidates: Vec<usize> = if name.ends_with("embed") {
            (0..n).filter(|&i| g.data()[i] != 0.0).collect()
        } else {
            (0..n).collect()
        };
        let mut worst: f64 = 0.0;
        for _ in 0..probes.min(candidates.len()) {
            let i = candidates[rng.gen_range(0..candidates.len())];
            let orig = store.get(id).data()[i];
            store.get_mut(id).data_mut()[i] = orig + h;
            let up = loss_value(&net, &store, &b);
            store.get_mut(id).data_mut()[i] = orig - h;
            let down = loss_value(&net, &store, &b);
            store.get_mut(id).data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = g.data()[i];
            worst = worst.max(dsqn_tensor::gradcheck::rel_err(a, numeric, 1e-6));
        }
        out.push((name, worst));
    }
    out
}

#[test]
fn every_parameter_matches_finite_differences() {
    for seed in [1, 2] {
        for (name, err) in finite_difference_errors(seed, 6) {
            let tol = if name.contains("embed") || name.starts_with("action.lstm") { 1e-3 } else { 1e-2 };
            assert!(err < tol, "{name}: relative error {err}");
        }
    }
}

#[test]
fn factored_q_is_the_sum_of_its_parts() {
    let (vocab, net, store) = setup(3);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10 {
        let t = random_tokens(&mut rng, &vocab, 3, 40);
        let acts: Vec<Vec<TokenId>> = (0..5).map(|_| random_tokens(&mut rng, &vocab, 1, 6)).collect();
        let (q, qs, qv) = q_values_factored(&net, &store, &t, &acts).unwrap();
        for i in 0..q.len() {
            assert!((q[i] - (qs[i] + qv[i])).abs() < 1e-12);
        }
    }
}

#[test]
fn pair_prediction_is_symmetric_and_self_pairs_give_sigmoid_bias() {
    let (vocab, net, store) = setup(5);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for factored in [false, true] {
        for _ in 0..10 {
            let a = random_tokens(&mut rng, &vocab, 2, 30);
            let b = random_tokens(&mut rng, &vocab, 2, 30);
            let ab = snn_predict(&net, &store, &a, &b, factored).unwrap();
            let ba = snn_predict(&net, &store, &b, &a, factored).unwrap();
            assert_eq!(ab.to_bits(), ba.to_bits());
            let aa = snn_predict(&net, &store, &a, &a, factored).unwrap();
            assert_eq!(aa, sigmoid(store.get(net.b_snn()).item()));
            assert_eq!(aa, self_pair_prob(&net, &store));
        }
    }
}

#[test]
fn multitask_reference_value() {
    assert_eq!(multitask_value(2.0, 1.0, 0.0, 0.0), 2.0);
}

#[test]
fn trailing_padding_does_not_change_the_encoding() {
    let (vocab, net, store) = setup(7);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..5 {
        let t = random_tokens(&mut rng, &vocab, 3, 30);
        let mut padded = t.clone();
        padded.extend(std::iter::repeat_n(PAD, 9));
        let e = |x: &[TokenId]| {
            let mut tape = Tape::new();
            let r = net.represent(&mut tape, &store, x, false).unwrap().encoded;
            tape.value(r).data().to_vec()
        };
        let (a, b) = (e(&t), e(&padded));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn action_encodings_follow_input_order() {
    let (vocab, net, store) = setup(9);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let acts: Vec<Vec<TokenId>> = (0..7).map(|_| random_tokens(&mut rng, &vocab, 1, 9)).collect();
    let encode = |xs: &[Vec<TokenId>]| {
        let mut tape = Tape::new();
        let refs: Vec<&[TokenId]> = xs.iter().map(Vec::as_slice).collect();
        let v = net.encode_actions(&mut tape, &store, &refs).unwrap();
        tape.value(v).clone()
    };
    let all = encode(&acts);
    for (i, a) in acts.iter().enumerate() {
        let single = encode(std::slice::from_ref(a));
        let cols = single.cols();
        for c in 0..cols {
            assert_eq!(all.at(i, c), single.at(0, c));
        }
    }
    let mut rev = acts.clone();
    rev.reverse();
    let back = encode(&rev);
    for i in 0..acts.len() {
        for c in 0..all.cols() {
            assert_eq!(all.at(i, c), back.at(acts.len() - 1 - i, c));
        }
    }
}

#[test]
fn anchor_labels_are_uniform_over_the_label_space() {
    let mut labels = vec![StateLabel(1); 1000];
    labels.extend(vec![StateLabel(2); 10]);
    let pool: Vec<Arc<Vec<TokenId>>> = (0..labels.len()).map(|i| Arc::new(vec![i as TokenId])).collect();
    let index = LabelIndex::from_labels(labels.iter().copied());
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut counts = [0.0f64; 2];
    let mut anchors = 0;
    while anchors < 10_000 {
        for p in sample_snn_batch(&pool, &index, 100, &mut rng) {
            if p.label == PairLabel::Equivalent {
                counts[(p.label_a.0 - 1) as usize] += 1.0;
                anchors += 1;
            }
        }
    }
    let expected = anchors as f64 / 2.0;
    let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new(1.0).unwrap().cdf(chi2);
    assert!(p > 0.01, "chi2 {chi2} p {p} counts {counts:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_pair_batch_is_balanced(raw in proptest::collection::vec(0u64..6, 2..60), n in 1usize..40, seed in 0u64..1000) {
        let labels: Vec<StateLabel> = raw.iter().map(|&l| StateLabel(l)).collect();
        let pool: Vec<Arc<Vec<TokenId>>> = (0..labels.len()).map(|i| Arc::new(vec![i as TokenId])).collect();
        let index = LabelIndex::from_labels(labels.iter().copied());
        let batch = sample_snn_batch(&pool, &index, n, &mut ChaCha8Rng::seed_from_u64(seed));
        let pos = batch.iter().filter(|p| p.label == PairLabel::Equivalent).count();
        prop_assert_eq!(2 * pos, batch.len());
        prop_assert!(batch.len() <= n);
        for p in &batch {
            prop_assert_eq!(labels[p.a[0] as usize], p.label_a);
            prop_assert_eq!(labels[p.b[0] as usize], p.label_b);
            prop_assert_eq!(p.label == PairLabel::Equivalent, p.label_a == p.label_b);
        }
    }
}
