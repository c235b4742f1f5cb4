use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule {
            start: 1.0,
            end: 0.0001,
            decay_steps: 10_000_000,
        }
    }
}

impl EpsilonSchedule {
    /// Linear from `start` to `end` over `decay_steps`, then flat.
    pub fn value(&self, step: u64) -> f64 {
        if step >= self.decay_steps {
            return self.end;
        }
        let frac = step as f64 / self.decay_steps as f64;
        self.start + (self.end - self.start) * frac
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
        }
    }
    best
}

/// `q_i − c·count_i`.
pub fn adjust_q_bandit(q: &[f64], counts: &[u32], c: f64) -> Result<Vec<f64>> {
    if q.len() != counts.len() {
        return Err(CoreError::invalid(format!("{} Q-values but {} counts", q.len(), counts.len())));
    }
    Ok(q.iter().zip(counts).map(|(&v, &n)| v - c * f64::from(n)).collect())
}

/// With probability `epsilon` a uniform index, else the greedy one. The random
/// draws happen only when `epsilon > 0`, so greedy play consumes no entropy.
pub fn epsilon_greedy<R: Rng>(q: &[f64], epsilon: f64, rng: &mut R) -> usize {
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        rng.gen_range(0..q.len())
    } else {
        argmax(q)
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn schedule_endpoints_and_shape() {
        let s = EpsilonSchedule {
            start: 1.0,
            end: 0.0001,
            decay_steps: 1000,
        };
        assert_eq!(s.value(0), 1.0);
        assert_eq!(s.value(1000), 0.0001);
        assert_eq!(s.value(5000), 0.0001);
        for k in 0..1000 {
            assert!(s.value(k + 1) < s.value(k));
        }
    }

    #[test]
    fn greedy_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(epsilon_greedy(&[1.0, 3.0, 2.0], 0.0, &mut rng), 1);
        assert_eq!(epsilon_greedy(&[2.0, 2.0, 1.0], 0.0, &mut rng), 0);
    }

    #[test]
    fn bandit_examples() {
        assert_eq!(adjust_q_bandit(&[1.0, 2.0], &[0, 0], 0.07).unwrap(), [1.0, 2.0]);
        assert_eq!(adjust_q_bandit(&[1.0, 2.0], &[3, 1], 0.0).unwrap(), [1.0, 2.0]);
        let adj = adjust_q_bandit(&[1.0, 1.0], &[2, 0], 0.1).unwrap();
        assert!((adj[0] - 0.8).abs() < 1e-15 && adj[1] == 1.0);
        assert_eq!(argmax(&adj), 1);
        assert!(adjust_q_bandit(&[1.0], &[0, 0], 0.1).is_err());
    }
}
