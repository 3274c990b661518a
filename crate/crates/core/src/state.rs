//! Per-alternative running statistics shared by every procedure.

use crate::error::{Error, Result};

/// Sample counts and running means for `k` alternatives.
///
/// Means are stored as `(count, mean)` and updated incrementally; an
/// alternative with `n_i = 0` has no defined mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingState {
    n: Vec<u64>,
    mean: Vec<f64>,
    total_used: u64,
}

impl SamplingState {
    pub fn new(k: usize) -> Self {
        Self {
            n: vec![0; k],
            mean: vec![f64::NAN; k],
            total_used: 0,
        }
    }

    pub fn k(&self) -> usize {
        self.n.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.n
    }

    pub fn count(&self, i: usize) -> u64 {
        self.n[i]
    }

    /// Running mean of alternative `i`, `None` before its first observation.
    pub fn mean(&self, i: usize) -> Option<f64> {
        (self.n[i] > 0).then(|| self.mean[i])
    }

    /// Raw mean slice; entries with zero count hold `NaN`.
    pub fn means(&self) -> &[f64] {
        &self.mean
    }

    pub fn total_used(&self) -> u64 {
        self.total_used
    }

    /// Fold one observation into alternative `i`.
    pub fn observe(&mut self, i: usize, x: f64) -> Result<()> {
        self.observe_batch(i, x, 1)
    }

    /// Fold `count` observations whose sum is `sum` into alternative `i`:
    /// `mean' = (n * mean + sum) / (n + count)`.
    pub fn observe_batch(&mut self, i: usize, sum: f64, count: u64) -> Result<()> {
        let k = self.k();
        if i >= k {
            return Err(Error::IndexOutOfRange { index: i, k });
        }
        if count == 0 {
            return Ok(());
        }
        self.fold(i, sum, count);
        Ok(())
    }

    /// Unchecked variant of [`observe_batch`](Self::observe_batch) for hot loops.
    #[inline]
    pub(crate) fn fold(&mut self, i: usize, sum: f64, count: u64) {
        let n = self.n[i];
        self.mean[i] = if n == 0 {
            sum / count as f64
        } else {
            (n as f64 * self.mean[i] + sum) / (n + count) as f64
        };
        self.n[i] = n + count;
        self.total_used += count;
    }

    /// Overwrite alternative `i` after a run of `added` single-observation folds
    /// carried out by the caller.
    #[inline]
    pub(crate) fn set_run(&mut self, i: usize, n: u64, mean: f64, added: u64) {
        self.n[i] = n;
        self.mean[i] = mean;
        self.total_used += added;
    }

    /// Index of the largest running mean, ties to the lowest index.
    pub fn current_best(&self) -> Result<usize> {
        if let Some(i) = self.n.iter().position(|&c| c == 0) {
            return Err(Error::Uninitialized { index: i });
        }
        Ok(argmax_lowest(&self.mean))
    }

    /// Largest running mean, i.e. `Y(t)`.
    pub fn max_mean(&self) -> Result<f64> {
        self.current_best().map(|i| self.mean[i])
    }
}

/// Argmax over a non-empty slice with ties broken by the lowest index.
pub fn argmax_lowest(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Max-tournament over running means supporting point updates, used by the
/// greedy phase to find the current best in `O(log k)`.
#[derive(Debug, Clone)]
pub(crate) struct BestTree {
    size: usize,
    k: usize,
    // node -> (winning value, winning leaf); leaves live at size..2*size
    nodes: Vec<(f64, usize)>,
}

/// `a` beats `b`: larger value, ties to the lower index.
#[inline]
fn beats(a: (f64, usize), b: (f64, usize)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 < b.1)
}

impl BestTree {
    pub(crate) fn new(vals: &[f64]) -> Self {
        let k = vals.len();
        let size = k.next_power_of_two().max(1);
        let mut nodes = vec![(f64::NEG_INFINITY, 0usize); 2 * size];
        for i in 0..size {
            nodes[size + i] = (vals.get(i).copied().unwrap_or(f64::NEG_INFINITY), i);
        }
        let mut t = Self { size, k, nodes };
        for node in (1..size).rev() {
            t.pull(node);
        }
        t
    }

    #[inline]
    fn pull(&mut self, node: usize) {
        let l = self.nodes[2 * node];
        let r = self.nodes[2 * node + 1];
        // left leaves have lower indices, so ties keep the left winner
        self.nodes[node] = if r.0 > l.0 { r } else { l };
    }

    #[inline]
    pub(crate) fn best(&self) -> usize {
        self.nodes[1].1
    }

    #[inline]
    pub(crate) fn value(&self, i: usize) -> f64 {
        self.nodes[self.size + i].0
    }

    pub(crate) fn set(&mut self, i: usize, value: f64) {
        debug_assert!(i < self.k);
        self.nodes[self.size + i].0 = value;
        let mut node = (self.size + i) / 2;
        while node >= 1 {
            self.pull(node);
            node /= 2;
        }
    }

    /// Best leaf other than `skip`, or `None` when `k == 1`. Walks the
    /// winners of the siblings along the path from `skip` to the root.
    pub(crate) fn best_excluding(&self, skip: usize) -> Option<usize> {
        if self.k < 2 {
            return None;
        }
        let mut node = self.size + skip;
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        while node > 1 {
            let sib = self.nodes[node ^ 1];
            if beats(sib, best) {
                best = sib;
            }
            node /= 2;
        }
        Some(best.1)
    }
}
