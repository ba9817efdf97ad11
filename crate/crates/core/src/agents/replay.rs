use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Cumulants, Features};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Features,
    pub action: usize,
    pub reward: f64,
    pub cumulants: Cumulants,
    pub next_state: Features,
    /// True only when the next state has no successor. Episode ends are
    /// time limits and bootstrap normally.
    pub terminal: bool,
}

/// Fixed-capacity ring buffer with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
    pushed: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
            pushed: 0,
        }
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

    /// Total transitions ever pushed.
    pub fn pushed(&self) -> u64 {
        self.pushed
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
        self.pushed += 1;
    }

    pub fn get(&self, index: usize) -> &Transition {
        &self.items[index]
    }

    /// `batch` indices drawn uniformly with replacement, or `None` while the
    /// buffer holds fewer than `batch` transitions.
    pub fn sample_indices(&self, batch: usize, rng: &mut impl Rng) -> Option<Vec<usize>> {
        if batch == 0 || self.items.len() < batch {
            return None;
        }
        Some((0..batch).map(|_| rng.random_range(0..self.items.len())).collect())
    }

    pub fn clear(&mut self) {
        self.items.clear();
        self.next = 0;
    }
}
