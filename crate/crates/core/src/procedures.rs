//! Sequential fixed-budget selection procedures.
//!
//! * [`run_greedy`]: one draw each, then always sample the current best.
//! * [`run_efg`]: equal-allocation exploration followed by the greedy phase.
//! * [`run_efg_plus`]: a discarded seeding pass ranks alternatives into
//!   geometric groups that receive unequal exploration, then greedy.
//! * [`run_ea`], [`run_sh`], [`run_modified_sh`]: baselines.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::ProblemInstance;
use crate::rng::{RngStream, SimRng};
use crate::state::{BestTree, SamplingState};

/// Budget phases, in the order procedures run them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    Initialization,
    Seeding,
    Exploration,
    Greedy,
    Allocation,
    Round(u32),
}

/// Stream path components for phase-scoped randomness.
pub mod stream_tag {
    pub const SEEDING: u64 = 1;
    pub const EXPLORATION: u64 = 2;
    pub const GREEDY: u64 = 3;
    pub const TIMING: u64 = 4;
}

/// How the greedy phase spent its budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyDiagnostics {
    pub greedy_budget: u64,
    /// Non-best alternatives that received at least one greedy draw.
    pub touched_nonbest: usize,
    /// `touched_nonbest` over the number of non-best alternatives.
    pub touched_frac: f64,
    /// Smallest true mean among the touched non-best alternatives.
    pub min_mean_touched: Option<f64>,
    /// Share of the greedy budget that went to a best alternative.
    pub best_share: f64,
    pub per_alt_greedy_n: Vec<u64>,
}

impl GreedyDiagnostics {
    pub(crate) fn from_counts(instance: &ProblemInstance, per_alt: Vec<u64>) -> Self {
        let budget: u64 = per_alt.iter().sum();
        let mut touched = 0usize;
        let mut min_mean: Option<f64> = None;
        let mut best_draws = 0u64;
        for (i, &n) in per_alt.iter().enumerate() {
            if n == 0 {
                continue;
            }
            if instance.is_best(i) {
                best_draws += n;
            } else {
                touched += 1;
                let m = instance.true_means[i];
                min_mean = Some(min_mean.map_or(m, |x: f64| x.min(m)));
            }
        }
        let nonbest = instance.k() - instance.best_set.len();
        Self {
            greedy_budget: budget,
            touched_nonbest: touched,
            touched_frac: if nonbest == 0 {
                0.0
            } else {
                touched as f64 / nonbest as f64
            },
            min_mean_touched: min_mean,
            best_share: if budget == 0 {
                0.0
            } else {
                best_draws as f64 / budget as f64
            },
            per_alt_greedy_n: per_alt,
        }
    }
}

/// Outcome of one procedure run.
#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub selected: usize,
    pub final_state: SamplingState,
    pub phase_budgets: BTreeMap<Phase, u64>,
    /// Budget left unused by the procedure's rounding or loop guard.
    pub unspent: u64,
    /// Observations folded beyond the nominal budget.
    pub overshoot: u64,
    pub diagnostics: Option<GreedyDiagnostics>,
    pub wall_time: Duration,
    /// Time spent in sampling phases (virtual worker time for simulated pools).
    pub sim_time: Duration,
}

impl SelectionResult {
    pub fn spent(&self) -> u64 {
        self.phase_budgets.values().sum()
    }
}

/// Where greedy observations come from.
pub(crate) trait GreedyDraws {
    /// Sample `s` from `(n, m)` while it beats `(r, r_idx)`, at most `max` times.
    #[allow(clippy::too_many_arguments)]
    fn run(
        &mut self,
        instance: &ProblemInstance,
        s: usize,
        n: u64,
        m: f64,
        r: f64,
        r_idx: usize,
        max: u64,
    ) -> (u64, f64);
}

/// All greedy draws from one generator.
pub(crate) struct SharedRng<'a>(pub &'a mut SimRng);

impl GreedyDraws for SharedRng<'_> {
    #[inline]
    fn run(
        &mut self,
        instance: &ProblemInstance,
        s: usize,
        n: u64,
        m: f64,
        r: f64,
        r_idx: usize,
        max: u64,
    ) -> (u64, f64) {
        instance
            .sampler
            .run_while_above(s, n, m, r, s < r_idx, max, self.0)
    }
}

/// Greedy draw `b` from its own stream `base.child(b)`.
pub(crate) struct PerDrawStreams {
    pub base: RngStream,
    pub next: u64,
}

impl GreedyDraws for PerDrawStreams {
    fn run(
        &mut self,
        instance: &ProblemInstance,
        s: usize,
        mut n: u64,
        mut m: f64,
        r: f64,
        r_idx: usize,
        max: u64,
    ) -> (u64, f64) {
        let mut left = max;
        loop {
            let x = instance
                .sampler
                .sample(s, &mut self.base.child(self.next).rng());
            self.next += 1;
            m = (n as f64 * m + x) / (n + 1) as f64;
            n += 1;
            left -= 1;
            if left == 0 || !(m > r || (m == r && s < r_idx)) {
                return (n, m);
            }
        }
    }
}

/// Core greedy loop: `budget` draws, each on the current best.
///
/// The current best keeps being sampled for as long as it still wins the
/// lowest-index argmax against the runner-up; only its mean changes in that
/// stretch, so this is the same allocation as a full argmax per draw.
pub(crate) fn greedy_engine<D: GreedyDraws>(
    state: &mut SamplingState,
    instance: &ProblemInstance,
    budget: u64,
    draws: &mut D,
) -> Result<GreedyDiagnostics> {
    state.current_best()?;
    let k = state.k();
    let mut per_alt = vec![0u64; k];
    let mut remaining = budget;
    if remaining > 0 {
        let mut tree = BestTree::new(state.means());
        while remaining > 0 {
            let s = tree.best();
            let (r_idx, r) = match tree.best_excluding(s) {
                Some(j) => (j, tree.value(j)),
                None => (usize::MAX, f64::NEG_INFINITY),
            };
            let n0 = state.count(s);
            let (n, m) = draws.run(instance, s, n0, state.means()[s], r, r_idx, remaining);
            let added = n - n0;
            remaining -= added;
            state.set_run(s, n, m, added);
            per_alt[s] += added;
            tree.set(s, m);
        }
    }
    Ok(GreedyDiagnostics::from_counts(instance, per_alt))
}

/// Spend exactly `budget` draws, each on the current best at that moment.
pub fn greedy_phase(
    state: &mut SamplingState,
    instance: &ProblemInstance,
    budget: u64,
    rng: &mut SimRng,
) -> Result<GreedyDiagnostics> {
    greedy_engine(state, instance, budget, &mut SharedRng(rng))
}

fn check_state_size(instance: &ProblemInstance) -> Result<usize> {
    let k = instance.k();
    if k == 0 {
        return Err(Error::InvalidParameter("empty instance".into()));
    }
    Ok(k)
}

fn finish(
    state: SamplingState,
    selected: usize,
    phase_budgets: BTreeMap<Phase, u64>,
    budget: u64,
    diagnostics: Option<GreedyDiagnostics>,
    start: Instant,
    sim_time: Duration,
) -> SelectionResult {
    let spent: u64 = phase_budgets.values().sum();
    SelectionResult {
        selected,
        final_state: state,
        unspent: budget.saturating_sub(spent),
        overshoot: spent.saturating_sub(budget),
        phase_budgets,
        diagnostics,
        wall_time: start.elapsed(),
        sim_time,
    }
}

/// Pure greedy: one observation per alternative, then `B - k` greedy draws.
pub fn run_greedy(
    instance: &ProblemInstance,
    budget: u64,
    stream: &RngStream,
) -> Result<SelectionResult> {
    run_efg(instance, budget, EfgSplit::N0(1), stream).map(|mut r| {
        // the single exploration draw is the initialization step
        if let Some(n) = r.phase_budgets.remove(&Phase::Exploration) {
            r.phase_budgets.insert(Phase::Initialization, n);
        }
        r
    })
}

/// How EFG divides its budget between exploration and greedy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EfgSplit {
    /// Fixed exploration size per alternative.
    N0(u64),
    /// Proportion `p` of the budget for exploration: `n0 = floor(p B / k)`.
    Proportion(f64),
}

/// `floor(x)` that is robust to products like `0.7 * 100 = 70.00000000000001`
/// and `0.29 * 100 = 28.999999999999996`.
pub(crate) fn floor_guarded(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as u64
    } else {
        x.floor() as u64
    }
}

impl EfgSplit {
    pub fn n0(&self, budget: u64, k: usize) -> Result<u64> {
        let n0 = match *self {
            EfgSplit::N0(n) => n,
            EfgSplit::Proportion(p) => {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "p must lie in (0, 1], got {p}"
                    )));
                }
                floor_guarded(p * budget as f64 / k as f64)
            }
        };
        if n0 < 1 {
            return Err(Error::InsufficientBudget {
                needed: k as u64,
                budget,
            });
        }
        Ok(n0)
    }
}

/// Explore-first greedy: `n0` draws per alternative, then the remaining
/// `B - n0 k` draws greedily.
pub fn run_efg(
    instance: &ProblemInstance,
    budget: u64,
    split: EfgSplit,
    stream: &RngStream,
) -> Result<SelectionResult> {
    let start = Instant::now();
    let k = check_state_size(instance)?;
    let n0 = split.n0(budget, k)?;
    let explore = n0 * k as u64;
    if explore > budget {
        return Err(Error::InsufficientBudget {
            needed: explore,
            budget,
        });
    }
    let mut rng = stream.rng();
    let mut state = SamplingState::new(k);
    let sampler = instance.sampler.clone();
    for i in 0..k {
        let s = sampler.sample_sum(i, n0, &mut rng);
        state.fold(i, s, n0);
    }
    let g = budget - explore;
    let diag = greedy_phase(&mut state, instance, g, &mut rng)?;
    let selected = state.current_best()?;
    let mut pb = BTreeMap::new();
    pb.insert(Phase::Exploration, explore);
    pb.insert(Phase::Greedy, g);
    let elapsed = start.elapsed();
    Ok(finish(
        state,
        selected,
        pb,
        budget,
        Some(diag),
        start,
        elapsed,
    ))
}

/// Equal allocation: `floor(B/k)` draws each, the remainder to the lowest indices.
pub fn run_ea(
    instance: &ProblemInstance,
    budget: u64,
    stream: &RngStream,
) -> Result<SelectionResult> {
    let start = Instant::now();
    let k = check_state_size(instance)?;
    let alloc = ea_allocation(budget, k)?;
    let mut rng = stream.rng();
    let mut state = SamplingState::new(k);
    for (i, &n) in alloc.iter().enumerate() {
        let s = instance.sampler.sample_sum(i, n, &mut rng);
        state.fold(i, s, n);
    }
    let selected = state.current_best()?;
    let mut pb = BTreeMap::new();
    pb.insert(Phase::Allocation, budget);
    let elapsed = start.elapsed();
    Ok(finish(state, selected, pb, budget, None, start, elapsed))
}

pub fn ea_allocation(budget: u64, k: usize) -> Result<Vec<u64>> {
    let kk = k as u64;
    if budget < kk {
        return Err(Error::InsufficientBudget { needed: kk, budget });
    }
    let (q, r) = (budget / kk, budget % kk);
    Ok((0..kk).map(|i| q + u64::from(i < r)).collect())
}

/// Exploration groups of EFG+.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupPlan {
    /// `groups[r]` lists alternatives in rank order.
    pub groups: Vec<Vec<usize>>,
    pub per_group_n: Vec<u64>,
}

impl GroupPlan {
    pub fn total(&self) -> u64 {
        self.groups
            .iter()
            .zip(&self.per_group_n)
            .map(|(g, &n)| g.len() as u64 * n)
            .sum()
    }

    /// Exploration size of every alternative, by index.
    pub fn sizes(&self, k: usize) -> Vec<u64> {
        let mut out = vec![0u64; k];
        for (g, &n) in self.groups.iter().zip(&self.per_group_n) {
            for &i in g {
                out[i] = n;
            }
        }
        out
    }
}

/// Split `ranked` (best first) into `g` geometric groups. With
/// `D = 2^g - 1`, the first group holds ranks `1..=floor(k/D)`, group `r`
/// ranks `floor(k 2^(r-2)/D)+1 ..= floor(k 2^(r-1)/D)`, the last group the
/// rest; group `r` gets `floor(n0 D / (g 2^(r-1)))` draws per alternative.
pub fn plan_groups(ranked: &[usize], k: usize, g: u32, n0: u64) -> Result<GroupPlan> {
    if ranked.len() != k {
        return Err(Error::InvalidParameter(format!(
            "ranking has {} entries for k = {k}",
            ranked.len()
        )));
    }
    if !(2..63).contains(&g) {
        return Err(Error::InvalidParameter(format!("G must be >= 2, got {g}")));
    }
    let delta = (1u64 << g) - 1;
    if delta > k as u64 {
        return Err(Error::InvalidParameter(format!(
            "2^G - 1 = {delta} exceeds k = {k}"
        )));
    }
    if (g as u64) > n0 {
        return Err(Error::InvalidParameter(format!(
            "G = {g} exceeds n0 = {n0}"
        )));
    }
    let kk = k as u64;
    let mut bounds = vec![0usize];
    bounds.push((kk / delta) as usize);
    for r in 2..g {
        bounds.push((kk * (1u64 << (r - 1)) / delta) as usize);
    }
    bounds.push(k);
    let groups = bounds
        .windows(2)
        .map(|w| ranked[w[0]..w[1]].to_vec())
        .collect();
    let per_group_n = (1..=g)
        .map(|r| n0 * delta / (g as u64 * (1u64 << (r - 1))))
        .collect();
    Ok(GroupPlan {
        groups,
        per_group_n,
    })
}

/// Descending order of `means`, ties to the lower index.
pub fn rank_descending(means: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..means.len()).collect();
    idx.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(a.cmp(&b)));
    idx
}

/// Per-alternative sizes of the three EFG+ phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EfgPlusSplit {
    pub n_sd: u64,
    pub n0: u64,
    pub n_g: u64,
    pub groups: u32,
}

/// Default number of exploration groups.
pub const DEFAULT_GROUPS: u32 = 11;

impl EfgPlusSplit {
    /// Fractions of `c = floor(B/k)` for seeding and exploration; greedy
    /// takes what is left. `G` is lowered so that `2^G - 1 <= k` and `G <= n0`.
    pub fn from_fractions(budget: u64, k: usize, f_sd: f64, f_0: f64, groups: u32) -> Result<Self> {
        let c = budget / k as u64;
        let n_sd = floor_guarded(f_sd * c as f64);
        let n0 = floor_guarded(f_0 * c as f64);
        if n_sd + n0 > c {
            return Err(Error::InvalidParameter(
                "seeding and exploration exceed B/k".into(),
            ));
        }
        Ok(Self {
            n_sd,
            n0,
            n_g: c - n_sd - n0,
            groups: effective_groups(groups, k, n0),
        })
    }

    /// The 20% / 70% / 10% split with `G = 11` by default.
    pub fn standard(budget: u64, k: usize) -> Result<Self> {
        Self::from_fractions(budget, k, 0.2, 0.7, DEFAULT_GROUPS)
    }
}

/// Largest usable group count not above `g`.
pub fn effective_groups(g: u32, k: usize, n0: u64) -> u32 {
    let log = (k as u64 + 1).ilog2();
    g.min(log).min(n0.min(u32::MAX as u64) as u32).max(2)
}

pub(crate) fn check_efg_plus(
    instance: &ProblemInstance,
    budget: u64,
    n_sd: u64,
    n0: u64,
    g: u32,
) -> Result<()> {
    let k = instance.k() as u64;
    if n_sd < 1 {
        return Err(Error::InvalidParameter("seeding needs n_sd >= 1".into()));
    }
    let needed = (n_sd + n0) * k;
    if budget < needed {
        return Err(Error::InsufficientBudget { needed, budget });
    }
    let delta = 1u64.checked_shl(g).map(|v| v - 1).unwrap_or(u64::MAX);
    if g < 2 || delta > k || (g as u64) > n0 {
        return Err(Error::InvalidParameter(format!(
            "need 2^G - 1 <= k and 2 <= G <= n0 (G = {g}, k = {k}, n0 = {n0})"
        )));
    }
    Ok(())
}

/// Seeding then grouped exploration. Each alternative's block of draws comes
/// from its own `(phase, i)` stream.
fn seed_and_explore(
    instance: &ProblemInstance,
    n_sd: u64,
    n0: u64,
    g: u32,
    stream: &RngStream,
) -> Result<SamplingState> {
    let k = instance.k();
    let sampler = &instance.sampler;
    let seed_stream = stream.child(stream_tag::SEEDING);
    let seeding_means: Vec<f64> = (0..k)
        .map(|i| {
            let mut r = seed_stream.child(i as u64).rng();
            sampler.sample_sum(i, n_sd, &mut r) / n_sd as f64
        })
        .collect();
    let ranked = rank_descending(&seeding_means);
    let plan = plan_groups(&ranked, k, g, n0)?;
    let explore_sizes = plan.sizes(k);
    let ex_stream = stream.child(stream_tag::EXPLORATION);
    let mut state = SamplingState::new(k);
    for (i, &n) in explore_sizes.iter().enumerate() {
        let mut r = ex_stream.child(i as u64).rng();
        let s = sampler.sample_sum(i, n, &mut r);
        state.fold(i, s, n);
    }
    Ok(state)
}

/// EFG+: seeding (discarded), grouped exploration, then greedy until the
/// non-seeding total reaches `B - n_sd k`. Greedy draw `b` uses stream
/// `(GREEDY, b)`.
pub fn run_efg_plus(
    instance: &ProblemInstance,
    budget: u64,
    n_sd: u64,
    n0: u64,
    g: u32,
    stream: &RngStream,
) -> Result<SelectionResult> {
    let start = Instant::now();
    check_efg_plus(instance, budget, n_sd, n0, g)?;
    let k = instance.k() as u64;
    let mut state = seed_and_explore(instance, n_sd, n0, g, stream)?;
    let explored = state.total_used();
    let target = budget - n_sd * k;
    let greedy = target - explored;
    let mut draws = PerDrawStreams {
        base: stream.child(stream_tag::GREEDY),
        next: 0,
    };
    let diag = greedy_engine(&mut state, instance, greedy, &mut draws)?;
    let selected = state.current_best()?;
    let mut pb = BTreeMap::new();
    pb.insert(Phase::Seeding, n_sd * k);
    pb.insert(Phase::Exploration, explored);
    pb.insert(Phase::Greedy, greedy);
    let elapsed = start.elapsed();
    Ok(finish(
        state,
        selected,
        pb,
        budget,
        Some(diag),
        start,
        elapsed,
    ))
}

/// Halving schedule shared by both SH variants. `per_survivor(l, |S|)` gives
/// the fresh draws for round `l` (1-based).
fn halving<F>(
    instance: &ProblemInstance,
    budget: u64,
    stream: &RngStream,
    mut per_survivor: F,
) -> Result<SelectionResult>
where
    F: FnMut(u32, usize, u64) -> Result<u64>,
{
    let start = Instant::now();
    let k = check_state_size(instance)?;
    let rounds = (k as u64).next_power_of_two().trailing_zeros();
    let mut rng = stream.rng();
    let mut state = SamplingState::new(k);
    let mut survivors: Vec<usize> = (0..k).collect();
    let mut pb = BTreeMap::new();
    let mut spent = 0u64;
    for l in 1..=rounds {
        let t = per_survivor(l, survivors.len(), budget - spent)?;
        let mut round_means = Vec::with_capacity(survivors.len());
        for &i in &survivors {
            let s = instance.sampler.sample_sum(i, t, &mut rng);
            state.fold(i, s, t);
            round_means.push(s / t as f64);
        }
        let used = t * survivors.len() as u64;
        spent += used;
        pb.insert(Phase::Round(l), used);
        let order = rank_descending(&round_means);
        let keep = survivors.len().div_ceil(2);
        let mut next: Vec<usize> = order[..keep].iter().map(|&j| survivors[j]).collect();
        next.sort_unstable();
        survivors = next;
    }
    debug_assert_eq!(survivors.len(), 1);
    let elapsed = start.elapsed();
    Ok(finish(
        state,
        survivors[0],
        pb,
        budget,
        None,
        start,
        elapsed,
    ))
}

/// Sequential halving: `L = ceil(log2 k)` rounds, round budget `B/L` split
/// evenly over survivors, round means from that round's draws only, the top
/// half (rounded up) survives.
pub fn run_sh(
    instance: &ProblemInstance,
    budget: u64,
    stream: &RngStream,
) -> Result<SelectionResult> {
    let k = instance.k() as u64;
    let rounds = k.next_power_of_two().trailing_zeros().max(1) as u64;
    if budget < rounds * k {
        return Err(Error::InsufficientBudget {
            needed: rounds * k,
            budget,
        });
    }
    halving(instance, budget, stream, |_, n, _| {
        Ok(budget / (n as u64 * rounds))
    })
}

/// Sequential halving with per-survivor draws
/// `T_l = floor(B/(81k) (16/9)^(l-1) l)`; needs `B >= 81 k`.
pub fn run_modified_sh(
    instance: &ProblemInstance,
    budget: u64,
    stream: &RngStream,
) -> Result<SelectionResult> {
    let k = instance.k() as u64;
    if budget < 81 * k {
        return Err(Error::InsufficientBudget {
            needed: 81 * k,
            budget,
        });
    }
    let unit = budget as f64 / (81.0 * k as f64);
    halving(instance, budget, stream, |l, n, left| {
        let t = floor_guarded(unit * (16.0f64 / 9.0).powi(l as i32 - 1) * l as f64);
        // never overrun B, even when odd survivor counts round up
        let t = t.min(left / n as u64);
        if t == 0 {
            return Err(Error::InsufficientBudget {
                needed: 81 * k,
                budget,
            });
        }
        Ok(t)
    })
}

pub fn modified_sh_schedule(budget: u64, k: usize, rounds: u32) -> Vec<u64> {
    let unit = budget as f64 / (81.0 * k as f64);
    (1..=rounds)
        .map(|l| floor_guarded(unit * (16.0f64 / 9.0).powi(l as i32 - 1) * l as f64))
        .collect()
}
