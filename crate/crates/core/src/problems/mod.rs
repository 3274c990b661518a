//! Benchmark problems: synthetic Gaussian configurations and the
//! three-stage flow-line throughput testbed.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;

pub mod flowline;
pub mod gaussian;

pub use flowline::{
    enumerate_flowline, flowline_exact_mean, flowline_simulate, tp_instance, tp_table_row,
    FlowLineDesign, FlowSamplerKind, TableRow,
};
pub use gaussian::{make_gaussian, GaussianConfig, GaussianKind, GoodSetRule};

/// Observation oracle. Randomness comes only from the caller's generator.
pub trait Sampler: Send + Sync {
    fn sample(&self, i: usize, rng: &mut SimRng) -> f64;

    /// Sum of `n` fresh observations of alternative `i`.
    fn sample_sum(&self, i: usize, n: u64, rng: &mut SimRng) -> f64 {
        let mut s = 0.0;
        for _ in 0..n {
            s += self.sample(i, rng);
        }
        s
    }

    /// Keep drawing alternative `i`, starting from `n` observations with
    /// running mean `m`, while the mean stays above `r` (or equal to it when
    /// `wins_ties`). Stops after `max >= 1` draws at most; returns the new
    /// count and mean. Each draw is folded as `(n m + x) / (n + 1)`.
    #[allow(clippy::too_many_arguments)]
    fn run_while_above(
        &self,
        i: usize,
        mut n: u64,
        mut m: f64,
        r: f64,
        wins_ties: bool,
        max: u64,
        rng: &mut SimRng,
    ) -> (u64, f64) {
        let mut left = max;
        loop {
            let x = self.sample(i, rng);
            m = (n as f64 * m + x) / (n + 1) as f64;
            n += 1;
            left -= 1;
            if left == 0 || !(m > r || (m == r && wins_ties)) {
                return (n, m);
            }
        }
    }
}

/// A selection problem: `k` alternatives with known true means and an
/// observation oracle.
#[derive(Clone)]
pub struct ProblemInstance {
    pub label: String,
    pub true_means: Vec<f64>,
    /// Known variances; absent for simulation models.
    pub variances: Option<Vec<f64>>,
    pub best_set: Vec<usize>,
    pub sampler: Arc<dyn Sampler>,
}

impl fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("label", &self.label)
            .field("k", &self.k())
            .field("best_set", &self.best_set)
            .finish()
    }
}

impl ProblemInstance {
    pub fn new(
        label: impl Into<String>,
        true_means: Vec<f64>,
        variances: Option<Vec<f64>>,
        sampler: Arc<dyn Sampler>,
    ) -> Result<Self> {
        if true_means.is_empty() {
            return Err(Error::InvalidParameter("instance needs k >= 1".into()));
        }
        if let Some(v) = &variances {
            if v.len() != true_means.len() {
                return Err(Error::InvalidParameter(
                    "variances length differs from k".into(),
                ));
            }
        }
        let best_set = best_set(&true_means);
        Ok(Self {
            label: label.into(),
            true_means,
            variances,
            best_set,
            sampler,
        })
    }

    pub fn k(&self) -> usize {
        self.true_means.len()
    }

    pub fn max_mean(&self) -> f64 {
        self.true_means[self.best_set[0]]
    }

    pub fn is_best(&self, i: usize) -> bool {
        self.best_set.binary_search(&i).is_ok()
    }

    /// Smallest difference between the best mean and any strictly smaller one;
    /// `None` when all means are equal.
    pub fn gap(&self) -> Option<f64> {
        let m = self.max_mean();
        self.true_means
            .iter()
            .filter(|&&v| v < m)
            .map(|&v| m - v)
            .min_by(f64::total_cmp)
    }

    /// Replace the oracle, keeping the mean landscape.
    pub fn with_sampler(&self, sampler: Arc<dyn Sampler>) -> Self {
        Self {
            sampler,
            ..self.clone()
        }
    }
}

/// Indices attaining the maximal mean, ascending.
pub fn best_set(means: &[f64]) -> Vec<usize> {
    let m = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..means.len()).filter(|&i| means[i] == m).collect()
}

/// Alternatives whose mean lies strictly within `delta` of the best.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodSet {
    pub delta: f64,
    pub indices: Vec<usize>,
}

impl GoodSet {
    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

pub fn good_set(instance: &ProblemInstance, delta: f64) -> Result<GoodSet> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must be > 0, got {delta}"
        )));
    }
    let cut = instance.max_mean() - delta;
    let indices = (0..instance.k())
        .filter(|&i| instance.true_means[i] > cut)
        .collect();
    Ok(GoodSet { delta, indices })
}

/// Either a synthetic configuration or a flow-line instance `tp:S1,S2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemSpec {
    Gaussian(GaussianKind),
    Tp { s1: u32, s2: u32 },
}

impl ProblemSpec {
    /// Build an instance with `k` alternatives (ignored for flow-line).
    pub fn build(
        &self,
        k: usize,
        config_seed: u64,
        flow: FlowSamplerKind,
    ) -> Result<ProblemInstance> {
        match self {
            ProblemSpec::Gaussian(kind) => make_gaussian(&GaussianConfig {
                kind: kind.clone(),
                k,
                seed: config_seed,
            }),
            ProblemSpec::Tp { s1, s2 } => tp_instance(*s1, *s2, flow),
        }
    }

    pub fn id(&self) -> String {
        match self {
            ProblemSpec::Gaussian(k) => k.to_string(),
            ProblemSpec::Tp { s1, s2 } => format!("tp:{s1},{s2}"),
        }
    }
}

impl FromStr for ProblemSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(rest) = s.strip_prefix("tp:") {
            let (a, b) = rest
                .split_once(',')
                .ok_or_else(|| Error::InvalidParameter(format!("expected tp:S1,S2, got {s}")))?;
            let parse = |x: &str| {
                x.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::InvalidParameter(format!("bad flow-line size in {s}")))
            };
            return Ok(ProblemSpec::Tp {
                s1: parse(a)?,
                s2: parse(b)?,
            });
        }
        Ok(ProblemSpec::Gaussian(s.parse()?))
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// Replays fixed observation lists, one queue per alternative. Panics when a
/// queue runs dry, which makes over-sampling in tests loud.
pub struct StubSampler {
    queues: Vec<std::sync::Mutex<std::collections::VecDeque<f64>>>,
}

impl StubSampler {
    pub fn new(lists: Vec<Vec<f64>>) -> Self {
        Self {
            queues: lists
                .into_iter()
                .map(|l| std::sync::Mutex::new(l.into()))
                .collect(),
        }
    }

    pub fn remaining(&self, i: usize) -> usize {
        self.queues[i].lock().unwrap().len()
    }
}

impl Sampler for StubSampler {
    fn sample(&self, i: usize, _rng: &mut SimRng) -> f64 {
        self.queues[i]
            .lock()
            .unwrap()
            .pop_front()
            .unwrap_or_else(|| panic!("stub sampler for alternative {i} exhausted"))
    }
}

/// Each alternative always returns the same value.
pub struct ConstantSampler(pub Vec<f64>);

impl Sampler for ConstantSampler {
    fn sample(&self, i: usize, _rng: &mut SimRng) -> f64 {
        self.0[i]
    }

    fn sample_sum(&self, i: usize, n: u64, _rng: &mut SimRng) -> f64 {
        self.0[i] * n as f64
    }
}

/// Wraps another sampler and counts draws per alternative.
pub struct CountingSampler {
    inner: Arc<dyn Sampler>,
    counts: Vec<std::sync::atomic::AtomicU64>,
}

impl CountingSampler {
    pub fn new(inner: Arc<dyn Sampler>, k: usize) -> Self {
        Self {
            inner,
            counts: (0..k).map(|_| Default::default()).collect(),
        }
    }

    pub fn counts(&self) -> Vec<u64> {
        self.counts
            .iter()
            .map(|c| c.load(std::sync::atomic::Ordering::Relaxed))
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.counts().iter().sum()
    }
}

impl Sampler for CountingSampler {
    fn sample(&self, i: usize, rng: &mut SimRng) -> f64 {
        self.counts[i].fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        self.inner.sample(i, rng)
    }

    fn sample_sum(&self, i: usize, n: u64, rng: &mut SimRng) -> f64 {
        self.counts[i].fetch_add(n, std::sync::atomic::Ordering::Relaxed);
        self.inner.sample_sum(i, n, rng)
    }

    fn run_while_above(
        &self,
        i: usize,
        n: u64,
        m: f64,
        r: f64,
        wins_ties: bool,
        max: u64,
        rng: &mut SimRng,
    ) -> (u64, f64) {
        let out = self.inner.run_while_above(i, n, m, r, wins_ties, max, rng);
        self.counts[i].fetch_add(out.0 - n, std::sync::atomic::Ordering::Relaxed);
        out
    }
}
