use alloc::vec::Vec;

use crate::env::{Action, LanderState};
use crate::error::{ensure, Result};
use crate::rng::Rng;

/// One stored experience. `done` marks transitions into an absorbing state;
/// step-cap truncations are stored with `done = false` so they bootstrap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: LanderState,
    pub action: Action,
    pub reward: f64,
    pub next_state: LanderState,
    pub done: bool,
}

/// Fixed-capacity ring buffer of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        ensure!(capacity > 0, "replay capacity must be positive");
        Ok(Self {
            capacity,
            items: Vec::new(),
            next: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Stores `t`, overwriting the oldest entry once full.
    pub fn push(&mut self, t: Transition) -> Result<()> {
        ensure!(t.reward.is_finite(), "transition reward must be finite");
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
        Ok(())
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.items.get(i)
    }

    /// `batch` distinct transitions chosen uniformly at random.
    pub fn sample(&self, batch: usize, rng: &mut Rng) -> Result<Vec<Transition>> {
        ensure!(
            batch > 0 && batch <= self.items.len(),
            "cannot draw {batch} transitions from a buffer of {}",
            self.items.len()
        );
        Ok(floyd_sample(self.items.len(), batch, rng)
            .into_iter()
            .map(|i| self.items[i])
            .collect())
    }
}

/// Floyd's algorithm: `k` distinct indices below `n`, each `k`-subset equally
/// likely, in `O(k²)` time independent of `n`.
fn floyd_sample(n: usize, k: usize, rng: &mut Rng) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    for j in n - k..n {
        let t = rng.below(j as u64 + 1) as usize;
        if chosen.contains(&t) {
            chosen.push(j);
        } else {
            chosen.push(t);
        }
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(r: f64) -> Transition {
        Transition {
            state: LanderState::new(0.0, 0.0, 1.0),
            action: Action::Descend,
            reward: r,
            next_state: LanderState::new(0.0, 0.0, 0.0),
            done: true,
        }
    }

    #[test]
    fn ring_overwrites_oldest() {
        let mut b = ReplayBuffer::new(3).unwrap();
        for i in 0..5 {
            b.push(t(i as f64)).unwrap();
        }
        assert_eq!(b.len(), 3);
        let rewards: Vec<f64> = (0..3).map(|i| b.get(i).unwrap().reward).collect();
        assert_eq!(rewards, [3.0, 4.0, 2.0]);
        assert!(b.push(t(f64::NAN)).is_err());
    }

    #[test]
    fn samples_are_distinct() {
        let mut rng = Rng::new(1);
        for _ in 0..200 {
            let mut s = floyd_sample(40, 32, &mut rng);
            s.sort_unstable();
            s.dedup();
            assert_eq!(s.len(), 32);
            assert!(s.iter().all(|i| *i < 40));
        }
        assert_eq!(floyd_sample(5, 5, &mut rng).len(), 5);
    }

    #[test]
    fn sampling_frequency_is_uniform() {
        let (n, k, draws) = (50usize, 8usize, 20_000usize);
        let mut b = ReplayBuffer::new(n).unwrap();
        for i in 0..n {
            b.push(t(i as f64)).unwrap();
        }
        let mut rng = Rng::new(7);
        let mut counts = alloc::vec![0usize; n];
        for _ in 0..draws {
            for tr in b.sample(k, &mut rng).unwrap() {
                counts[tr.reward as usize] += 1;
            }
        }
        // Each index is included with probability k/n per draw.
        let p = k as f64 / n as f64;
        let mean = draws as f64 * p;
        let sigma = libm::sqrt(draws as f64 * p * (1.0 - p));
        for c in counts {
            assert!((c as f64 - mean).abs() <= 3.0 * sigma, "{c} vs {mean}±{sigma}");
        }
    }
}
