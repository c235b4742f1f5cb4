//! Central finite-difference comparison for tape gradients.
//!
//! The numeric side only ever evaluates the forward pass, so it shares no code
//! with [`Tape::backward`](crate::Tape::backward).

use crate::error::Result;
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

/// Largest elementwise discrepancy found, per input.
#[derive(Clone, Debug)]
pub struct GradCheck {
    pub analytic: Vec<Tensor>,
    pub numeric: Vec<Tensor>,
    pub max_rel_err: f64,
}

/// `|a - n| / max(|a|, |n|, floor)`. The floor keeps differences that are
/// pure rounding noise around zero from reading as large relative errors.
pub fn rel_err(a: f64, n: f64, floor: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(floor)
}

/// Compares the tape gradient of `f` at `inputs` with central differences of
/// step `h`. `f` must return a single-element var.
pub fn check<F>(inputs: &[Tensor], h: f64, f: F) -> Result<GradCheck>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let grads = tape.backward(out)?;
    let analytic: Vec<Tensor> = vars.iter().map(|&v| grads.wrt(&tape, v)).collect();

    let eval = |xs: &[Tensor]| -> Result<f64> {
        let mut t = Tape::new();
        let vs: Vec<Var> = xs.iter().map(|x| t.constant(x.clone())).collect();
        let o = f(&mut t, &vs)?;
        Ok(t.value(o).item())
    };

    let mut numeric = Vec::with_capacity(inputs.len());
    let mut worst: f64 = 0.0;
    let mut probe = inputs.to_vec();
    for (k, input) in inputs.iter().enumerate() {
        let mut num = Tensor::zeros(input.shape().to_vec());
        for i in 0..input.len() {
            let orig = input.data()[i];
            probe[k].data_mut()[i] = orig + h;
            let plus = eval(&probe)?;
            probe[k].data_mut()[i] = orig - h;
            let minus = eval(&probe)?;
            probe[k].data_mut()[i] = orig;
            let d = (plus - minus) / (2.0 * h);
            num.data_mut()[i] = d;
            worst = worst.max(rel_err(analytic[k].data()[i], d, 1e-6));
        }
        numeric.push(num);
    }
    Ok(GradCheck {
        analytic,
        numeric,
        max_rel_err: worst,
    })
}
