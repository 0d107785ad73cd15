//! Central-difference verification of backpropagation.

use rand_chacha::ChaCha8Rng;

use super::net::{Grads, NetModel};
use crate::error::Result;

/// Denominator floor of the relative error, so that parameters whose true
/// gradient vanishes are judged on absolute agreement.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

fn loss(model: &NetModel, x: &[f64], label: usize) -> Result<f64> {
    let p = model.predict(x)?;
    Ok(-p[label].ln())
}

/// Maximum over all parameters of `|a − n| / max(|a|, |n|, floor)` where `a`
/// is the backpropagated and `n` the central-difference gradient of the
/// cross-entropy loss. Dropout is inactive.
pub fn grad_check(model: &NetModel, x: &[f64], label: usize, epsilon: f64) -> Result<f64> {
    let mut analytic = Grads::zeros_like(model);
    model.accumulate_gradient(x, label, None::<&mut ChaCha8Rng>, &mut analytic)?;
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    let n_tensors = analytic.tensors.len();
    for t in 0..n_tensors {
        for i in 0..analytic.tensors[t].len() {
            let orig = probe.param_tensors()[t].0[i];
            probe.param_tensors_mut()[t].0[i] = orig + epsilon;
            let up = loss(&probe, x, label)?;
            probe.param_tensors_mut()[t].0[i] = orig - epsilon;
            let down = loss(&probe, x, label)?;
            probe.param_tensors_mut()[t].0[i] = orig;
            let numeric = (up - down) / (2.0 * epsilon);
            let a = analytic.tensors[t][i];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
            worst = worst.max(err);
        }
    }
    Ok(worst)
}

/// Analytic gradient of one sample's loss, dropout inactive.
pub fn gradient(model: &NetModel, x: &[f64], label: usize) -> Result<Grads> {
    let mut g = Grads::zeros_like(model);
    model.accumulate_gradient(x, label, None::<&mut ChaCha8Rng>, &mut g)?;
    Ok(g)
}
