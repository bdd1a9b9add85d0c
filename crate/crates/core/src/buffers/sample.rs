use std::collections::VecDeque;

use super::Transition;
use crate::Result;

/// Bounded FIFO of online transitions; the oldest entry is evicted first.
#[derive(Clone, Debug)]
pub struct SampleBuffer {
    items: VecDeque<Transition>,
    capacity: usize,
    state_dim: usize,
    action_dim: usize,
}

impl SampleBuffer {
    pub fn new(capacity: usize, state_dim: usize, action_dim: usize) -> Self {
        assert!(capacity > 0, "sample buffer capacity must be positive");
        Self { items: VecDeque::with_capacity(capacity.min(1 << 16)), capacity, state_dim, action_dim }
    }

    pub fn push(&mut self, t: Transition) -> Result<()> {
        t.check_dims(self.state_dim, self.action_dim)?;
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.items[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }
}
