use alloc::vec::Vec;

use crate::rng::{RngState, RngStream};

/// Epoch-shuffled index stream: indices are served from a permutation that
/// is redrawn whenever it runs out, so every example appears once per pass.
#[derive(Clone, Debug)]
pub struct BatchSampler {
    n: usize,
    order: Vec<usize>,
    pos: usize,
    rng: RngStream,
}

impl BatchSampler {
    pub fn new(n: usize, rng: RngStream) -> Self {
        assert!(n > 0, "sampler over an empty dataset");
        Self {
            n,
            order: Vec::new(),
            pos: 0,
            rng,
        }
    }

    pub fn next_batch(&mut self, size: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(size);
        while out.len() < size {
            if self.pos == self.order.len() {
                self.order = self.rng.permutation(self.n);
                self.pos = 0;
            }
            out.push(self.order[self.pos]);
            self.pos += 1;
        }
        out
    }

    pub fn rng_state(&self) -> RngState {
        self.rng.state()
    }
}
