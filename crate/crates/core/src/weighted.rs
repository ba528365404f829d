//! Weighted sampling tree.
//!
//! An implicit complete binary tree over the next power of two of the leaf
//! count; absent leaves weigh zero. Each internal node holds the total
//! weight of its subtree, so a weighted draw is an O(log t) descent and a
//! weight update an O(log t) path recomputation. Ancestor totals are
//! recomputed as the sum of the two children, which keeps integer-valued
//! weights exact.

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WeightedError {
    #[error("weight at index {0} is negative")]
    NegativeWeight(usize),
    #[error("total weight is zero")]
    ZeroTotalWeight,
}

#[derive(Debug, Clone)]
pub struct WeightedIndex {
    /// 1-based heap layout; leaves occupy `[size, size + size)`.
    tree: Vec<f64>,
    size: usize,
    len: usize,
}

impl WeightedIndex {
    /// Builds the tree in time linear in the number of weights.
    pub fn new(weights: &[f64]) -> Result<Self, WeightedError> {
        if let Some(i) = weights.iter().position(|w| *w < 0.0 || !w.is_finite()) {
            return Err(WeightedError::NegativeWeight(i));
        }
        let size = weights.len().max(1).next_power_of_two();
        let mut tree = vec![0.0; 2 * size];
        tree[size..size + weights.len()].copy_from_slice(weights);
        for u in (1..size).rev() {
            tree[u] = tree[2 * u] + tree[2 * u + 1];
        }
        Ok(Self {
            tree,
            size,
            len: weights.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn total(&self) -> f64 {
        self.tree[1]
    }

    pub fn get(&self, i: usize) -> f64 {
        assert!(i < self.len, "leaf index out of range");
        self.tree[self.size + i]
    }

    /// Replaces the weight of leaf `i` and fixes all ancestor totals.
    pub fn update(&mut self, i: usize, w: f64) -> Result<(), WeightedError> {
        assert!(i < self.len, "leaf index out of range");
        if w < 0.0 || !w.is_finite() {
            return Err(WeightedError::NegativeWeight(i));
        }
        let mut u = self.size + i;
        self.tree[u] = w;
        while u > 1 {
            u /= 2;
            self.tree[u] = self.tree[2 * u] + self.tree[2 * u + 1];
        }
        Ok(())
    }

    /// Draws leaf `i` with probability `w_i / total`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize, WeightedError> {
        if self.total() <= 0.0 {
            return Err(WeightedError::ZeroTotalWeight);
        }
        let mut x = rng.gen::<f64>() * self.total();
        let mut u = 1;
        while u < self.size {
            let left = self.tree[2 * u];
            if x < left {
                u = 2 * u;
            } else {
                x -= left;
                u = 2 * u + 1;
            }
        }
        let mut i = u - self.size;
        // Rounding at the boundary can land on a zero leaf; step back to the
        // nearest positive one.
        if self.tree[u] <= 0.0 {
            i = (0..self.len)
                .rev()
                .find(|&j| self.tree[self.size + j] > 0.0)
                .expect("positive total implies a positive leaf");
        }
        Ok(i)
    }
}
