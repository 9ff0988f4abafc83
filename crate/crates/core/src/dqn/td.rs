use alloc::format;
use alloc::vec::Vec;

use super::{Adam, QGrads, QNetwork, Transition};
use crate::env::{Action, LanderState};
use crate::error::{ensure, Error, Result};
use crate::nn::Matrix2D;

/// Huber loss with threshold 1.
pub fn huber(x: f64) -> f64 {
    if x.abs() <= 1.0 {
        0.5 * x * x
    } else {
        x.abs() - 0.5
    }
}

fn huber_grad(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

/// Bootstrapped targets `r + γ·max_a' Q_target(s', a')`, or `r` for
/// terminal transitions.
pub fn td_targets(target: &QNetwork, batch: &[Transition], gamma: f64) -> Result<Vec<f64>> {
    let next: Vec<LanderState> = batch.iter().map(|t| t.next_state).collect();
    let q = target.q_batch(&next)?;
    Ok(batch
        .iter()
        .enumerate()
        .map(|(i, t)| {
            if t.done {
                t.reward
            } else {
                let best = q.row(i).iter().fold(f32::NEG_INFINITY, |a, b| a.max(*b));
                t.reward + gamma * best as f64
            }
        })
        .collect())
}

/// Mean Huber loss of the taken-action Q-values against `targets`, and its
/// gradient with respect to every parameter.
pub fn loss_and_grads(online: &QNetwork, batch: &[Transition], targets: &[f64]) -> Result<(f64, QGrads)> {
    ensure!(!batch.is_empty(), "TD batch is empty");
    ensure!(targets.len() == batch.len(), "one target per transition required");
    let states: Vec<LanderState> = batch.iter().map(|t| t.state).collect();
    let (q, caches) = online.forward_batch(&states)?;
    let n = batch.len() as f64;
    let mut grad = Matrix2D::zeros(batch.len(), Action::COUNT);
    let mut loss = 0.0;
    for (i, (t, y)) in batch.iter().zip(targets).enumerate() {
        let a = t.action.index();
        let err = q.get(i, a) as f64 - y;
        loss += huber(err);
        grad.set(i, a, (huber_grad(err) / n) as f32);
    }
    let loss = loss / n;
    if !loss.is_finite() {
        return Err(Error::numeric("td_update", format!("loss {loss} over {} transitions", batch.len())));
    }
    Ok((loss, online.backward_batch(&caches, grad)?))
}

/// One optimizer step on the DQN objective; returns the mean loss before
/// the step.
pub fn td_update(
    online: &mut QNetwork,
    target: &QNetwork,
    batch: &[Transition],
    gamma: f64,
    optimizer: &mut Adam,
) -> Result<f64> {
    ensure!((0.0..=1.0).contains(&gamma), "gamma {gamma} outside [0, 1]");
    let targets = td_targets(target, batch, gamma)?;
    let (loss, grads) = loss_and_grads(online, batch, &targets)?;
    optimizer.step(online, &grads)?;
    Ok(loss)
}
