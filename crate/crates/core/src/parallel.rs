//! Master/worker versions of EFG+: synchronous batched greedy
//! ([`run_efg_pp`]) and asynchronous greedy ([`run_asyn_efg_pp`]).
//!
//! A [`WorkerPool`] runs either on a virtual clock, where every observation
//! costs a draw from a service-time model, or on real threads. The
//! simulated pool is fully deterministic; seeding and exploration there draw
//! each alternative's block from its own stream, so their outcome does not
//! depend on `q`.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::mpsc;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::ProblemInstance;
use crate::procedures::{
    check_efg_plus, plan_groups, rank_descending, stream_tag, EfgPlusSplit, GreedyDiagnostics,
    Phase, SelectionResult,
};
use crate::rng::{RngStream, SimRng};
use crate::state::SamplingState;

/// Cost of one observation, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ServiceTime {
    Constant { ms: f64 },
    Uniform { lo_ms: f64, hi_ms: f64 },
}

impl Default for ServiceTime {
    fn default() -> Self {
        ServiceTime::Uniform {
            lo_ms: 0.5,
            hi_ms: 1.5,
        }
    }
}

impl ServiceTime {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ServiceTime::Constant { ms } => ms >= 0.0 && ms.is_finite(),
            ServiceTime::Uniform { lo_ms, hi_ms } => {
                lo_ms >= 0.0 && hi_ms >= lo_ms && hi_ms.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "invalid service time {self:?}"
            )))
        }
    }

    /// Total cost of `n` observations, in seconds.
    pub fn draw_total(&self, n: u64, rng: &mut SimRng) -> f64 {
        match *self {
            ServiceTime::Constant { ms } => ms * n as f64 / 1e3,
            ServiceTime::Uniform { lo_ms, hi_ms } => {
                let w = hi_ms - lo_ms;
                let mut s = 0.0;
                for _ in 0..n {
                    s += lo_ms + w * rng.random::<f64>();
                }
                s / 1e3
            }
        }
    }
}

impl FromStr for ServiceTime {
    type Err = Error;

    /// `const:MS` or `uniform:LO,HI`.
    fn from_str(s: &str) -> Result<Self> {
        let bad =
            || Error::InvalidParameter(format!("expected const:MS or uniform:LO,HI, got {s}"));
        let t = if let Some(ms) = s.strip_prefix("const:") {
            ServiceTime::Constant {
                ms: ms.parse().map_err(|_| bad())?,
            }
        } else if let Some(r) = s.strip_prefix("uniform:") {
            let (a, b) = r.split_once(',').ok_or_else(bad)?;
            ServiceTime::Uniform {
                lo_ms: a.parse().map_err(|_| bad())?,
                hi_ms: b.parse().map_err(|_| bad())?,
            }
        } else {
            return Err(bad());
        };
        t.validate()?;
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolMode {
    /// Virtual clock, deterministic.
    #[default]
    Simulated,
    /// OS threads; service times are slept.
    Real,
}

impl FromStr for PoolMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sim" | "simulated" => Ok(PoolMode::Simulated),
            "real" => Ok(PoolMode::Real),
            _ => Err(Error::InvalidParameter(format!("unknown pool mode {s}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkerPool {
    pub q: usize,
    pub mode: PoolMode,
    pub service: ServiceTime,
}

impl WorkerPool {
    pub fn simulated(q: usize, service: ServiceTime) -> Self {
        Self {
            q,
            mode: PoolMode::Simulated,
            service,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::InvalidParameter("q must be >= 1".into()));
        }
        self.service.validate()
    }
}

/// Busy time against elapsed time for one phase.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseUtilization {
    /// Summed worker busy time.
    pub busy: Duration,
    /// Elapsed (virtual or real) time of the phase.
    pub wall: Duration,
    /// `busy / (q * wall)`.
    pub utilization: f64,
}

impl PhaseUtilization {
    fn new(busy: f64, wall: f64, q: usize) -> Self {
        Self {
            busy: Duration::from_secs_f64(busy.max(0.0)),
            wall: Duration::from_secs_f64(wall.max(0.0)),
            utilization: utilization(busy, wall, q),
        }
    }
}

/// `busy / (q * wall)`, or 1 for an empty phase.
pub fn utilization(busy: f64, wall: f64, q: usize) -> f64 {
    if wall <= 0.0 {
        1.0
    } else {
        busy / (q as f64 * wall)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilizationReport {
    pub q: usize,
    pub mode: PoolMode,
    pub phases: BTreeMap<Phase, PhaseUtilization>,
    pub overall: PhaseUtilization,
    /// Master-to-worker task messages over the whole run.
    pub messages: u64,
    /// Greedy batches dispatched.
    pub greedy_messages: u64,
}

#[derive(Debug, Clone)]
pub struct ParallelOutcome {
    pub result: SelectionResult,
    pub utilization: UtilizationReport,
}

/// Parameters of EFG++ and Asyn-EFG++: the EFG+ split plus the greedy batch size `z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EfgPpConfig {
    pub split: EfgPlusSplit,
    pub z: u64,
}

/// Fill alternatives in index order into `q` workers of capacity
/// `ceil(T/q)`, splitting an alternative across consecutive workers when a
/// worker is full. Worker `j` gets a list of `(alternative, count)` pieces.
pub fn sequential_fill(sizes: &[u64], q: usize) -> Vec<Vec<(usize, u64)>> {
    let total: u64 = sizes.iter().sum();
    let cap = total.div_ceil(q as u64);
    let mut out = vec![Vec::new(); q];
    let mut j = 0usize;
    let mut room = cap;
    for (i, &n) in sizes.iter().enumerate() {
        let mut left = n;
        while left > 0 {
            if room == 0 {
                j += 1;
                room = cap;
            }
            let take = left.min(room);
            out[j].push((i, take));
            left -= take;
            room -= take;
        }
    }
    out
}

struct Completion {
    worker: usize,
    alt: usize,
    sum: f64,
    n: u64,
}

/// Execution backend shared by the synchronous and asynchronous drivers.
trait Backend {
    fn q(&self) -> usize;
    /// Current time in seconds since the run started.
    fn now(&self) -> f64;
    /// Accumulated worker busy time, reset on read.
    fn take_busy(&mut self) -> f64;
    /// Draw `sizes[i]` observations of every alternative and return the
    /// per-alternative sums. Blocks until all workers finish.
    fn blocks(&mut self, tag: u64, sizes: &[u64]) -> Result<Vec<f64>>;
    /// Hand worker `j` a batch of `n` draws of `alt` from `stream`.
    fn dispatch(&mut self, j: usize, alt: usize, n: u64, stream: RngStream);
    /// Next finished batch.
    fn wait_any(&mut self) -> Result<Completion>;
}

struct SimBackend<'a> {
    q: usize,
    service: ServiceTime,
    instance: &'a ProblemInstance,
    master: RngStream,
    time_rngs: Vec<SimRng>,
    now: f64,
    busy: f64,
    pending: Vec<(f64, Completion)>,
}

impl<'a> SimBackend<'a> {
    fn new(pool: &WorkerPool, instance: &'a ProblemInstance, stream: &RngStream) -> Self {
        let ts = stream.child(stream_tag::TIMING);
        Self {
            q: pool.q,
            service: pool.service,
            instance,
            master: stream.clone(),
            time_rngs: (0..pool.q).map(|j| ts.child(j as u64).rng()).collect(),
            now: 0.0,
            busy: 0.0,
            pending: Vec::new(),
        }
    }
}

impl Backend for SimBackend<'_> {
    fn q(&self) -> usize {
        self.q
    }

    fn now(&self) -> f64 {
        self.now
    }

    fn take_busy(&mut self) -> f64 {
        std::mem::take(&mut self.busy)
    }

    fn blocks(&mut self, tag: u64, sizes: &[u64]) -> Result<Vec<f64>> {
        let ps = self.master.child(tag);
        let sums = sizes
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                self.instance
                    .sampler
                    .sample_sum(i, n, &mut ps.child(i as u64).rng())
            })
            .collect();
        let mut longest: f64 = 0.0;
        for (j, pieces) in sequential_fill(sizes, self.q).iter().enumerate() {
            let n: u64 = pieces.iter().map(|p| p.1).sum();
            let t = self.service.draw_total(n, &mut self.time_rngs[j]);
            self.busy += t;
            longest = longest.max(t);
        }
        self.now += longest;
        Ok(sums)
    }

    fn dispatch(&mut self, j: usize, alt: usize, n: u64, stream: RngStream) {
        let sum = self.instance.sampler.sample_sum(alt, n, &mut stream.rng());
        let t = self.service.draw_total(n, &mut self.time_rngs[j]);
        self.busy += t;
        self.pending.push((
            self.now + t,
            Completion {
                worker: j,
                alt,
                sum,
                n,
            },
        ));
    }

    fn wait_any(&mut self) -> Result<Completion> {
        let pos = self
            .pending
            .iter()
            .enumerate()
            .min_by(|a, b| {
                a.1 .0
                    .total_cmp(&b.1 .0)
                    .then(a.1 .1.worker.cmp(&b.1 .1.worker))
            })
            .map(|(p, _)| p)
            .ok_or_else(|| Error::InvalidParameter("no batch in flight".into()))?;
        let (t, c) = self.pending.swap_remove(pos);
        self.now = self.now.max(t);
        Ok(c)
    }
}

enum Task {
    Blocks(Vec<(usize, u64, RngStream)>),
    Batch {
        alt: usize,
        n: u64,
        stream: RngStream,
    },
}

struct Done {
    worker: usize,
    parts: Vec<(usize, f64, u64)>,
    busy: f64,
}

struct RealBackend {
    q: usize,
    start: Instant,
    master: RngStream,
    senders: Vec<mpsc::Sender<Task>>,
    results: mpsc::Receiver<Done>,
    busy: f64,
}

impl RealBackend {
    fn spawn<'scope>(
        scope: &'scope std::thread::Scope<'scope, '_>,
        pool: &WorkerPool,
        instance: &'scope ProblemInstance,
        stream: &RngStream,
    ) -> Self {
        let (done_tx, done_rx) = mpsc::channel::<Done>();
        let ts = stream.child(stream_tag::TIMING);
        let senders = (0..pool.q)
            .map(|j| {
                let (tx, rx) = mpsc::channel::<Task>();
                let done = done_tx.clone();
                let mut trng = ts.child(j as u64).rng();
                let service = pool.service;
                scope.spawn(move || {
                    for task in rx {
                        let t0 = Instant::now();
                        let jobs = match task {
                            Task::Blocks(v) => v,
                            Task::Batch { alt, n, stream } => vec![(alt, n, stream)],
                        };
                        let mut parts = Vec::with_capacity(jobs.len());
                        let mut total = 0;
                        for (alt, n, s) in jobs {
                            parts.push((alt, instance.sampler.sample_sum(alt, n, &mut s.rng()), n));
                            total += n;
                        }
                        let cost = service.draw_total(total, &mut trng);
                        if cost > 0.0 {
                            std::thread::sleep(Duration::from_secs_f64(cost));
                        }
                        let busy = t0.elapsed().as_secs_f64();
                        if done
                            .send(Done {
                                worker: j,
                                parts,
                                busy,
                            })
                            .is_err()
                        {
                            break;
                        }
                    }
                });
                tx
            })
            .collect();
        Self {
            q: pool.q,
            start: Instant::now(),
            master: stream.clone(),
            senders,
            results: done_rx,
            busy: 0.0,
        }
    }

    fn recv(&mut self) -> Result<Done> {
        let d = self
            .results
            .recv()
            .map_err(|_| Error::InvalidParameter("worker pool shut down".into()))?;
        self.busy += d.busy;
        Ok(d)
    }
}

impl Backend for RealBackend {
    fn q(&self) -> usize {
        self.q
    }

    fn now(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    fn take_busy(&mut self) -> f64 {
        std::mem::take(&mut self.busy)
    }

    fn blocks(&mut self, tag: u64, sizes: &[u64]) -> Result<Vec<f64>> {
        let ps = self.master.child(tag);
        let plan = sequential_fill(sizes, self.q);
        let mut sent = 0;
        for (j, pieces) in plan.into_iter().enumerate() {
            if pieces.is_empty() {
                continue;
            }
            let jobs = pieces
                .into_iter()
                .map(|(i, n)| (i, n, ps.child(i as u64).child(j as u64)))
                .collect();
            self.senders[j]
                .send(Task::Blocks(jobs))
                .map_err(|_| Error::InvalidParameter("worker pool shut down".into()))?;
            sent += 1;
        }
        let mut by_worker: Vec<Vec<(usize, f64, u64)>> = vec![Vec::new(); self.q];
        for _ in 0..sent {
            let d = self.recv()?;
            by_worker[d.worker] = d.parts;
        }
        // merge in worker order so the sums do not depend on arrival order
        let mut sums = vec![0.0; sizes.len()];
        for parts in by_worker {
            for (i, s, _) in parts {
                sums[i] += s;
            }
        }
        Ok(sums)
    }

    fn dispatch(&mut self, j: usize, alt: usize, n: u64, stream: RngStream) {
        // a closed channel surfaces as an error in the next wait_any
        let _ = self.senders[j].send(Task::Batch { alt, n, stream });
    }

    fn wait_any(&mut self) -> Result<Completion> {
        let d = self.recv()?;
        let (alt, sum, n) = d.parts[0];
        Ok(Completion {
            worker: d.worker,
            alt,
            sum,
            n,
        })
    }
}

struct Recorder {
    q: usize,
    phases: BTreeMap<Phase, PhaseUtilization>,
    busy_total: f64,
    messages: u64,
    greedy_messages: u64,
    mark: f64,
}

impl Recorder {
    fn close<B: Backend>(&mut self, b: &mut B, phase: Phase) {
        let now = b.now();
        let busy = b.take_busy();
        self.busy_total += busy;
        self.phases
            .insert(phase, PhaseUtilization::new(busy, now - self.mark, self.q));
        self.mark = now;
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum GreedyMode {
    Sync,
    Async,
}

fn drive<B: Backend>(
    b: &mut B,
    instance: &ProblemInstance,
    budget: u64,
    cfg: &EfgPpConfig,
    stream: &RngStream,
    mode: GreedyMode,
    pool: &WorkerPool,
) -> Result<ParallelOutcome> {
    let start = Instant::now();
    let k = instance.k();
    let q = b.q();
    let EfgPlusSplit {
        n_sd, n0, groups, ..
    } = cfg.split;
    let mut rec = Recorder {
        q,
        phases: BTreeMap::new(),
        busy_total: 0.0,
        messages: 0,
        greedy_messages: 0,
        mark: b.now(),
    };
    let active = |sizes: &[u64]| {
        sequential_fill(sizes, q)
            .iter()
            .filter(|p| !p.is_empty())
            .count() as u64
    };

    let seed_sizes = vec![n_sd; k];
    let sums = b.blocks(stream_tag::SEEDING, &seed_sizes)?;
    rec.messages += active(&seed_sizes);
    rec.close(b, Phase::Seeding);
    let means: Vec<f64> = sums.iter().map(|s| s / n_sd as f64).collect();
    let sizes = plan_groups(&rank_descending(&means), k, groups, n0)?.sizes(k);
    let sums = b.blocks(stream_tag::EXPLORATION, &sizes)?;
    rec.messages += active(&sizes);
    let mut state = SamplingState::new(k);
    for i in 0..k {
        state.fold(i, sums[i], sizes[i]);
    }
    rec.close(b, Phase::Exploration);

    let explored = state.total_used();
    let target = budget - n_sd * k as u64;
    let z = cfg.z;
    let qz = q as u64 * z;
    let gs = stream.child(stream_tag::GREEDY);
    let mut per_alt = vec![0u64; k];

    match mode {
        GreedyMode::Sync => {
            let mut stage = 0u64;
            let mut ys = vec![0.0; q];
            while state.total_used() + qz <= target {
                let s = state.current_best()?;
                for j in 0..q {
                    b.dispatch(j, s, z, gs.child(stage * q as u64 + j as u64));
                }
                for _ in 0..q {
                    let c = b.wait_any()?;
                    ys[c.worker] = c.sum;
                }
                state.fold(s, ys.iter().sum(), qz);
                per_alt[s] += qz;
                rec.greedy_messages += q as u64;
                stage += 1;
            }
        }
        GreedyMode::Async => {
            let mut seq = 0u64;
            let s0 = state.current_best()?;
            for j in 0..q {
                b.dispatch(j, s0, z, gs.child(seq));
                seq += 1;
            }
            while state.total_used() + qz <= target {
                let c = b.wait_any()?;
                state.fold(c.alt, c.sum, c.n);
                per_alt[c.alt] += c.n;
                let s = state.current_best()?;
                b.dispatch(c.worker, s, z, gs.child(seq));
                seq += 1;
            }
            for _ in 0..q {
                let c = b.wait_any()?;
                state.fold(c.alt, c.sum, c.n);
                per_alt[c.alt] += c.n;
            }
            rec.greedy_messages = seq;
        }
    }
    rec.messages += rec.greedy_messages;
    rec.close(b, Phase::Greedy);

    let greedy_used = state.total_used() - explored;
    let selected = state.current_best()?;
    let mut pb = BTreeMap::new();
    pb.insert(Phase::Seeding, n_sd * k as u64);
    pb.insert(Phase::Exploration, explored);
    pb.insert(Phase::Greedy, greedy_used);
    let spent = n_sd * k as u64 + explored + greedy_used;
    let total_wall = b.now();
    let overall = PhaseUtilization::new(rec.busy_total, total_wall, q);
    let result = SelectionResult {
        selected,
        final_state: state,
        phase_budgets: pb,
        unspent: budget.saturating_sub(spent),
        overshoot: spent.saturating_sub(budget),
        diagnostics: Some(GreedyDiagnostics::from_counts(instance, per_alt)),
        wall_time: start.elapsed(),
        sim_time: Duration::from_secs_f64(rec.busy_total),
    };
    Ok(ParallelOutcome {
        result,
        utilization: UtilizationReport {
            q,
            mode: pool.mode,
            phases: rec.phases,
            overall,
            messages: rec.messages,
            greedy_messages: rec.greedy_messages,
        },
    })
}

fn run(
    instance: &ProblemInstance,
    budget: u64,
    cfg: &EfgPpConfig,
    pool: &WorkerPool,
    stream: &RngStream,
    mode: GreedyMode,
) -> Result<ParallelOutcome> {
    pool.validate()?;
    if cfg.z == 0 {
        return Err(Error::InvalidParameter("batch size z must be >= 1".into()));
    }
    let s = cfg.split;
    check_efg_plus(instance, budget, s.n_sd, s.n0, s.groups)?;
    match pool.mode {
        PoolMode::Simulated => {
            let mut b = SimBackend::new(pool, instance, stream);
            drive(&mut b, instance, budget, cfg, stream, mode, pool)
        }
        PoolMode::Real => std::thread::scope(|scope| {
            let mut b = RealBackend::spawn(scope, pool, instance, stream);
            let out = drive(&mut b, instance, budget, cfg, stream, mode, pool);
            drop(b);
            out
        }),
    }
}

/// EFG++: EFG+ with seeding and exploration spread over `q` workers and a
/// greedy phase in stages of `q` batches of `z` draws, all on the current
/// best; stage `b`, worker `j` draws from stream `(GREEDY, b q + j)`.
/// Stages run while the non-seeding total plus `q z` stays within
/// `B - n_sd k`; the remainder is reported as unspent.
pub fn run_efg_pp(
    instance: &ProblemInstance,
    budget: u64,
    cfg: &EfgPpConfig,
    pool: &WorkerPool,
    stream: &RngStream,
) -> Result<ParallelOutcome> {
    run(instance, budget, cfg, pool, stream, GreedyMode::Sync)
}

/// Asyn-EFG++: every worker holds one batch of `z` draws; each completion
/// is folded and the freed worker immediately receives a batch of the new
/// current best (stream `(GREEDY, seq)` for the `seq`-th dispatch). When the
/// guard fails, the `q` outstanding batches are drained and folded, so the
/// run can overshoot the budget; the excess is reported.
pub fn run_asyn_efg_pp(
    instance: &ProblemInstance,
    budget: u64,
    cfg: &EfgPpConfig,
    pool: &WorkerPool,
    stream: &RngStream,
) -> Result<ParallelOutcome> {
    run(instance, budget, cfg, pool, stream, GreedyMode::Async)
}
