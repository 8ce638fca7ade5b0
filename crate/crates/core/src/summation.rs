//! Compensated summation and the fixed-shape reduction tree.
//!
//! Long sums are cut into blocks of [`BLOCK`] terms at fixed offsets. Each block
//! is accumulated with Neumaier compensation and the block partials are then
//! combined pairwise. Because the block boundaries and the tree shape depend
//! only on the number of terms, the result is bitwise identical no matter how
//! the blocks were distributed over workers.

use std::ops::{Add, AddAssign};

pub const BLOCK: usize = 4096;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl AddAssign<f64> for NeumaierSum {
    fn add_assign(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }
}

impl Add for NeumaierSum {
    type Output = NeumaierSum;

    fn add(mut self, rhs: NeumaierSum) -> NeumaierSum {
        self += rhs.sum;
        self.compensation += rhs.compensation;
        self
    }
}

/// Pairwise reduction over `items` with a shape fixed by `items.len()`.
pub fn pairwise<T: Clone>(items: &[T], combine: &impl Fn(&T, &T) -> T) -> Option<T> {
    match items.len() {
        0 => None,
        1 => Some(items[0].clone()),
        n => {
            let mid = n / 2;
            let left = pairwise(&items[..mid], combine)?;
            let right = pairwise(&items[mid..], combine)?;
            Some(combine(&left, &right))
        }
    }
}

/// Number of fixed blocks covering `n` terms.
pub fn block_count(n: usize) -> usize {
    n.div_ceil(BLOCK)
}

/// Index range of block `b` among `n` terms.
pub fn block_range(b: usize, n: usize) -> std::ops::Range<usize> {
    let start = b * BLOCK;
    start..((b + 1) * BLOCK).min(n)
}

/// Deterministic sum of `f(i)` over `0..n`.
pub fn tree_sum(n: usize, f: impl Fn(usize) -> f64 + Sync + Send) -> f64 {
    let partials = crate::par::map_indexed(block_count(n), |b| {
        let mut acc = NeumaierSum::default();
        for i in block_range(b, n) {
            acc += f(i);
        }
        acc
    });
    pairwise(&partials, &|a, b| *a + *b).map_or(0.0, |s| s.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn compensation_recovers_small_terms() {
        let mut s = NeumaierSum::default();
        s += 1e16;
        for _ in 0..1000 {
            s += 1.0;
        }
        s += -1e16;
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn empty_sum_is_zero() {
        assert_eq!(tree_sum(0, |_| 1.0), 0.0);
    }

    proptest! {
        #[test]
        fn tree_sum_close_to_exact(values in prop::collection::vec(-1e3f64..1e3, 1..20_000)) {
            let exact: f64 = values.iter().sum();
            let got = tree_sum(values.len(), |i| values[i]);
            let scale: f64 = values.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
            prop_assert!((got - exact).abs() <= 1e-12 * scale);
            // repeatable bit for bit
            prop_assert_eq!(got.to_bits(), tree_sum(values.len(), |i| values[i]).to_bits());
        }
    }
}
