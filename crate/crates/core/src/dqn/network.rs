use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::env::{Action, LanderState};
use crate::error::{ensure, Error, Result};
use crate::nn::{Activation, DenseBatchCache, DenseGrads, DenseLayer, Matrix2D, NamedTensor};
use crate::rng::Rng;

/// Layer widths from input to output.
pub const LAYER_SIZES: [usize; 5] = [3, 256, 256, 128, Action::COUNT];

/// The action-value network: three ReLU hidden layers and a linear output
/// with one value per action, in [`Action::ALL`] order. States are divided
/// by `input_scale` before the first layer.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    pub layers: [DenseLayer; 4],
    pub input_scale: [f32; 3],
}

/// Per-layer gradients of a batch loss, first layer first.
pub type QGrads = [DenseGrads; 4];

impl QNetwork {
    pub fn zeros(input_scale: [f32; 3]) -> Self {
        Self {
            layers: core::array::from_fn(|i| {
                let act = if i == 3 { Activation::Identity } else { Activation::Relu };
                DenseLayer::zeros(LAYER_SIZES[i], LAYER_SIZES[i + 1], act)
            }),
            input_scale,
        }
    }

    /// Weights and biases uniform in `±1/√fan_in`.
    pub fn init(input_scale: [f32; 3], seed: u64) -> Self {
        let mut net = Self::zeros(input_scale);
        let mut rng = Rng::new(seed);
        for l in &mut net.layers {
            let bound = 1.0 / libm::sqrt(l.inputs() as f64);
            for v in l.weights.data_mut().iter_mut().chain(l.bias.iter_mut()) {
                *v = rng.uniform_range(-bound, bound) as f32;
            }
        }
        net
    }

    pub fn validate(&self) -> Result<()> {
        for (i, l) in self.layers.iter().enumerate() {
            ensure!(
                l.inputs() == LAYER_SIZES[i] && l.outputs() == LAYER_SIZES[i + 1],
                "layer {i} is {}->{}, expected {}->{}",
                l.inputs(),
                l.outputs(),
                LAYER_SIZES[i],
                LAYER_SIZES[i + 1]
            );
            ensure!(
                l.weights.is_finite() && l.bias.iter().all(|v| v.is_finite()),
                "layer {i} holds non-finite parameters"
            );
        }
        ensure!(
            self.input_scale.iter().all(|s| *s > 0.0 && s.is_finite()),
            "input scale must be positive"
        );
        Ok(())
    }

    pub fn normalize(&self, s: &LanderState) -> [f32; 3] {
        [
            (s.dx / self.input_scale[0] as f64) as f32,
            (s.dy / self.input_scale[1] as f64) as f32,
            (s.dz / self.input_scale[2] as f64) as f32,
        ]
    }

    pub fn q_values(&self, s: &LanderState) -> Result<[f32; Action::COUNT]> {
        ensure!(
            s.dx.is_finite() && s.dy.is_finite() && s.dz.is_finite(),
            "state must be finite"
        );
        let mut x = self.normalize(s).to_vec();
        for l in &self.layers {
            x = l.forward(&x)?;
        }
        Ok(core::array::from_fn(|i| x[i]))
    }

    /// Q-values for a batch of states, one row each.
    pub fn q_batch(&self, states: &[LanderState]) -> Result<Matrix2D> {
        Ok(self.forward_batch(states)?.0)
    }

    pub(crate) fn forward_batch(&self, states: &[LanderState]) -> Result<(Matrix2D, [DenseBatchCache; 4])> {
        let mut data = Vec::with_capacity(states.len() * 3);
        for s in states {
            data.extend_from_slice(&self.normalize(s));
        }
        let mut x = Matrix2D::from_vec(states.len(), 3, data)?;
        let mut caches = Vec::with_capacity(4);
        for l in &self.layers {
            let (y, cache) = l.forward_batch(&x)?;
            caches.push(cache);
            x = y;
        }
        let caches: [DenseBatchCache; 4] = caches.try_into().map_err(|_| Error::contract("layer count"))?;
        Ok((x, caches))
    }

    pub(crate) fn backward_batch(&self, caches: &[DenseBatchCache; 4], grad_out: Matrix2D) -> Result<QGrads> {
        let mut grads: Vec<DenseGrads> = Vec::with_capacity(4);
        let mut g = grad_out;
        for (l, cache) in self.layers.iter().zip(caches).rev() {
            let lg = l.backward_batch(cache, &g)?;
            g = Matrix2D::from_vec(cache.input.rows(), l.inputs(), lg.input.clone())?;
            grads.push(lg);
        }
        grads.reverse();
        grads.try_into().map_err(|_| Error::contract("layer count"))
    }

    pub fn parameters_mut(&mut self) -> impl Iterator<Item = &mut [f32]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.data_mut() as &mut [f32], l.bias.as_mut_slice()])
    }

    pub fn parameters(&self) -> impl Iterator<Item = &[f32]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.data(), l.bias.as_slice()])
    }

    pub fn to_named(&self) -> Vec<NamedTensor> {
        let mut out = Vec::with_capacity(8);
        for (i, l) in self.layers.iter().enumerate() {
            let (r, c) = l.weights.shape();
            out.push(NamedTensor {
                name: format!("layer{i}.weight"),
                shape: alloc::vec![r, c],
                data: l.weights.data().to_vec(),
            });
            out.push(NamedTensor {
                name: format!("layer{i}.bias"),
                shape: alloc::vec![r],
                data: l.bias.clone(),
            });
        }
        out
    }

    pub fn from_named(input_scale: [f32; 3], tensors: &[NamedTensor]) -> Result<Self> {
        let mut net = Self::zeros(input_scale);
        let expected = net.to_named();
        ensure!(
            tensors.len() == expected.len(),
            "expected {} tensors, found {}",
            expected.len(),
            tensors.len()
        );
        for (want, l) in expected.chunks(2).zip(&mut net.layers) {
            for (w, slot) in want.iter().zip([l.weights.data_mut() as &mut [f32], l.bias.as_mut_slice()]) {
                let t = tensors
                    .iter()
                    .find(|t| t.name == w.name)
                    .ok_or_else(|| Error::contract(format!("missing tensor {}", w.name)))?;
                ensure!(t.shape == w.shape, "tensor {} has shape {:?}, expected {:?}", t.name, t.shape, w.shape);
                ensure!(t.data.len() == slot.len(), "tensor {} payload length mismatch", t.name);
                slot.copy_from_slice(&t.data);
            }
        }
        let names: Vec<&String> = tensors.iter().map(|t| &t.name).collect();
        for (i, n) in names.iter().enumerate() {
            ensure!(!names[..i].contains(n), "duplicate tensor name {n}");
        }
        net.validate()?;
        Ok(net)
    }

    /// Mean absolute Q-value over a set of states, used as a divergence probe.
    pub fn mean_abs_q(&self, states: &[LanderState]) -> Result<f64> {
        let q = self.q_batch(states)?;
        Ok(q.data().iter().map(|v| (*v as f64).abs()).sum::<f64>() / q.data().len().max(1) as f64)
    }
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f32]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// ε-greedy action: uniform with probability `epsilon`, otherwise greedy.
pub fn select_action(net: &QNetwork, state: &LanderState, epsilon: f64, rng: &mut Rng) -> Result<Action> {
    ensure!((0.0..=1.0).contains(&epsilon), "epsilon {epsilon} outside [0, 1]");
    if rng.bernoulli(epsilon) {
        return Ok(Action::ALL[rng.below(Action::COUNT as u64) as usize]);
    }
    Ok(Action::ALL[argmax(&net.q_values(state)?)])
}

/// `θ_target ← τ·θ_online + (1−τ)·θ_target`.
pub fn soft_update(target: &mut QNetwork, online: &QNetwork, tau: f64) -> Result<()> {
    ensure!((0.0..=1.0).contains(&tau), "tau {tau} outside [0, 1]");
    for (t, o) in target.layers.iter().zip(&online.layers) {
        ensure!(
            t.weights.shape() == o.weights.shape() && t.bias.len() == o.bias.len(),
            "target and online topologies differ"
        );
    }
    for (t, o) in target.parameters_mut().zip(online.parameters()) {
        for (a, b) in t.iter_mut().zip(o) {
            *a = (tau * *b as f64 + (1.0 - tau) * *a as f64) as f32;
        }
    }
    Ok(())
}
