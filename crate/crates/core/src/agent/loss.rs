use dsqn_tensor::{Tape, Tensor, Var};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Guard against `ln 0` in the cross-entropy.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairLabel {
    Equivalent,
    Different,
}

impl PairLabel {
    pub fn target(self) -> f64 {
        match self {
            PairLabel::Equivalent => 1.0,
            PairLabel::Different => 0.0,
        }
    }
}

/// `r` on terminal steps, else `r + λ·max_next`.
pub fn td_value(r: f64, terminal: bool, max_next: Option<f64>, lambda: f64) -> Result<f64> {
    if terminal {
        return Ok(r);
    }
    match max_next {
        Some(m) => Ok(r + lambda * m),
        None => Err(CoreError::invalid("non-terminal transition without admissible next actions")),
    }
}

/// Mean squared error against constant targets. `predicted` is `[b×1]`.
pub fn dqn_loss(tape: &mut Tape, predicted: Var, targets: &[f64]) -> Result<Var> {
    if targets.is_empty() {
        return Err(CoreError::invalid("empty DQN batch"));
    }
    let y = tape.constant(Tensor::mat(targets.len(), 1, targets.to_vec()));
    let err = tape.sub(predicted, y)?;
    let sq = tape.mul(err, err)?;
    Ok(tape.mean(sq))
}

/// Mean binary cross-entropy of `[p×1]` probabilities.
pub fn snn_loss(tape: &mut Tape, prob: Var, labels: &[PairLabel]) -> Result<Var> {
    if labels.is_empty() {
        return Err(CoreError::invalid("empty pair batch"));
    }
    let n = labels.len();
    let y = Tensor::mat(n, 1, labels.iter().map(|l| l.target()).collect());
    let not_y = y.map(|v| 1.0 - v);
    let y = tape.constant(y);
    let not_y = tape.constant(not_y);
    let ln_p = tape.ln(prob, PROB_FLOOR);
    let neg = tape.scale(prob, -1.0);
    let q = tape.add_scalar(neg, 1.0);
    let ln_q = tape.ln(q, PROB_FLOOR);
    let a = tape.mul(y, ln_p)?;
    let b = tape.mul(not_y, ln_q)?;
    let ll = tape.add(a, b)?;
    let mean = tape.mean(ll);
    Ok(tape.scale(mean, -1.0))
}

pub fn snn_loss_value(prob: f64, label: PairLabel) -> f64 {
    match label {
        PairLabel::Equivalent => -prob.max(PROB_FLOOR).ln(),
        PairLabel::Different => -(1.0 - prob).max(PROB_FLOOR).ln(),
    }
}

/// `½e^{−s1}·l_dqn + e^{−s2}·l_snn + ½s1 + ½s2`.
pub fn multitask_loss(tape: &mut Tape, l_dqn: Var, l_snn: Var, s1: Var, s2: Var) -> Result<Var> {
    let dqn = dqn_term(tape, l_dqn, s1)?;
    let snn = snn_term(tape, l_snn, s2)?;
    Ok(tape.add(dqn, snn)?)
}

/// `½e^{−s1}·l_dqn + ½s1`, the Q-learning half of the joint loss.
pub fn dqn_term(tape: &mut Tape, l_dqn: Var, s1: Var) -> Result<Var> {
    let neg = tape.scale(s1, -1.0);
    let w = tape.exp(neg);
    let wl = tape.mul(w, l_dqn)?;
    let sum = tape.add(wl, s1)?;
    Ok(tape.scale(sum, 0.5))
}

/// `e^{−s2}·l_snn + ½s2`, the equivalence half of the joint loss.
pub fn snn_term(tape: &mut Tape, l_snn: Var, s2: Var) -> Result<Var> {
    let neg = tape.scale(s2, -1.0);
    let w = tape.exp(neg);
    let wl = tape.mul(w, l_snn)?;
    let half = tape.scale(s2, 0.5);
    Ok(tape.add(wl, half)?)
}

pub fn multitask_value(l_dqn: f64, l_snn: f64, s1: f64, s2: f64) -> f64 {
    0.5 * (-s1).exp() * l_dqn + (-s2).exp() * l_snn + 0.5 * s1 + 0.5 * s2
}

#[cfg(test)]
mod tests {
    use dsqn_tensor::gradcheck;

    use super::*;

    fn s(v: f64) -> Tensor {
        Tensor::scalar(v)
    }

    #[test]
    fn td_examples() {
        assert_eq!(td_value(-1.0, true, None, 0.9).unwrap(), -1.0);
        assert!((td_value(1.0, false, Some(2.0), 0.9).unwrap() - 2.8).abs() < 1e-12);
        assert_eq!(td_value(0.5, false, Some(7.0), 0.0).unwrap(), 0.5);
        assert!(td_value(0.5, false, None, 0.9).is_err());
    }

    #[test]
    fn dqn_loss_examples() {
        let mut t = Tape::new();
        let p = t.constant(Tensor::mat(1, 1, vec![3.0]));
        let l = dqn_loss(&mut t, p, &[1.0]).unwrap();
        assert_eq!(t.value(l).item(), 4.0);
        let mut t = Tape::new();
        let p = t.constant(Tensor::mat(2, 1, vec![1.0, 2.0]));
        let l = dqn_loss(&mut t, p, &[1.0, 2.0]).unwrap();
        assert_eq!(t.value(l).item(), 0.0);
    }

    #[test]
    fn dqn_loss_gradient() {
        let pred = Tensor::mat(3, 1, vec![0.3, -1.2, 2.0]);
        let targets = [1.0, 0.5, -0.25];
        let g = gradcheck::check(&[pred.clone()], 1e-4, |t, v| dqn_loss(t, v[0], &targets).map_err(err)).unwrap();
        for i in 0..3 {
            let want = 2.0 * (pred.data()[i] - targets[i]) / 3.0;
            assert!((g.analytic[0].data()[i] - want).abs() < 1e-12);
        }
        assert!(g.max_rel_err < 1e-6);
    }

    fn err(e: CoreError) -> dsqn_tensor::TensorError {
        dsqn_tensor::TensorError::Invalid {
            op: "test",
            msg: e.to_string(),
        }
    }

    #[test]
    fn snn_loss_examples() {
        let ln2 = std::f64::consts::LN_2;
        assert!((snn_loss_value(0.5, PairLabel::Equivalent) - ln2).abs() < 1e-15);
        assert!((snn_loss_value(0.5, PairLabel::Different) - ln2).abs() < 1e-15);
        assert!(snn_loss_value(1.0 - 1e-15, PairLabel::Equivalent) < 1e-14);
        for p in [0.01, 0.3, 0.77] {
            let (a, b) = (snn_loss_value(p, PairLabel::Equivalent), snn_loss_value(1.0 - p, PairLabel::Different));
            assert!((a - b).abs() <= 1e-15 * a.abs());
        }
        let mut t = Tape::new();
        let p = t.constant(Tensor::mat(2, 1, vec![0.2, 0.9]));
        let l = snn_loss(&mut t, p, &[PairLabel::Different, PairLabel::Equivalent]).unwrap();
        let want = (snn_loss_value(0.2, PairLabel::Different) + snn_loss_value(0.9, PairLabel::Equivalent)) / 2.0;
        assert!((t.value(l).item() - want).abs() < 1e-15);
    }

    #[test]
    fn multitask_examples() {
        assert_eq!(multitask_value(2.0, 1.0, 0.0, 0.0), 2.0);
        let mut t = Tape::new();
        let v: Vec<Var> = [2.0, 1.0, 0.0, 0.0].iter().map(|&x| t.leaf(s(x))).collect();
        let l = multitask_loss(&mut t, v[0], v[1], v[2], v[3]).unwrap();
        assert_eq!(t.value(l).item(), 2.0);

        // Stationary in s1 when l_dqn = 1 and s1 = 0.
        let mut t = Tape::new();
        let v: Vec<Var> = [1.0, 0.4, 0.0, 0.3].iter().map(|&x| t.leaf(s(x))).collect();
        let l = multitask_loss(&mut t, v[0], v[1], v[2], v[3]).unwrap();
        let g = t.backward(l).unwrap();
        assert_eq!(g.wrt(&t, v[2]).item(), 0.0);
    }

    #[test]
    fn multitask_gradient_in_s() {
        let inputs = [s(1.7), s(0.6), s(-0.4), s(0.9)];
        let g = gradcheck::check(&inputs, 1e-5, |t, v| multitask_loss(t, v[0], v[1], v[2], v[3]).map_err(err)).unwrap();
        for k in 2..4 {
            let (a, n) = (g.analytic[k].item(), g.numeric[k].item());
            assert!((a - n).abs() < 1e-6, "{a} vs {n}");
        }
        let (l_dqn, s1) = (1.7, -0.4);
        assert!((g.analytic[2].item() - (-0.5 * (-s1 as f64).exp() * l_dqn + 0.5)).abs() < 1e-12);
    }
}
