//! Times encoder passes at a given trajectory length.
use std::time::Instant;

use dsqn_core::agent::{q_values_plain, Network};
use dsqn_core::encoder::EncoderConfig;
use dsqn_core::vocab::Vocabulary;
use dsqn_tensor::Tape;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let micro = std::env::args().any(|a| a == "--micro");
    let len: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(500);
    let cfg = if micro { EncoderConfig::micro() } else { EncoderConfig::default() };
    let vocab = Vocabulary::game_lexicon();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (net, store) = Network::init(&cfg, vocab.len(), &mut rng).unwrap();
    let t: Vec<u32> = (0..len).map(|_| rng.gen_range(3..vocab.len() as u32)).collect();
    let acts: Vec<Vec<u32>> = (0..15).map(|_| (0..3).map(|_| rng.gen_range(3..vocab.len() as u32)).collect()).collect();
    let n = 20;
    let start = Instant::now();
    for _ in 0..n {
        q_values_plain(&net, &store, &t, &acts).unwrap();
    }
    println!("forward + 15 actions: {:.3} ms", start.elapsed().as_secs_f64() * 1e3 / n as f64);
    let start = Instant::now();
    for _ in 0..n {
        let mut tape = Tape::new();
        let r = net.represent(&mut tape, &store, &t, false).unwrap();
        let s = tape.sum(r.encoded);
        tape.backward(s).unwrap().params(&store);
    }
    println!("forward + backward: {:.3} ms", start.elapsed().as_secs_f64() * 1e3 / n as f64);
}
