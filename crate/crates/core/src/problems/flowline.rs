//! Three-station tandem flow line with exponential service, finite buffers
//! and production blocking, fed by an unlimited source.
//!
//! A design allocates `S1` units of service rate over the three stations and
//! `S2` buffer slots (service positions included) over stations 2 and 3. The
//! performance of a design is its long-run throughput.

use std::sync::{Arc, OnceLock};

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Exp1, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ProblemInstance, Sampler};
use crate::error::{Error, Result};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FlowLineDesign {
    pub x1: u32,
    pub x2: u32,
    pub x3: u32,
    pub b2: u32,
    pub b3: u32,
}

impl FlowLineDesign {
    pub fn new(x1: u32, x2: u32, x3: u32, b2: u32, b3: u32) -> Result<Self> {
        let d = Self { x1, x2, x3, b2, b3 };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if [self.x1, self.x2, self.x3, self.b2, self.b3].contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "flow-line design components must be >= 1: {self:?}"
            )));
        }
        Ok(())
    }

    fn rates(&self) -> [f64; 3] {
        [self.x1 as f64, self.x2 as f64, self.x3 as f64]
    }
}

/// All designs with `x1+x2+x3 = s1` and `b2+b3 = s2`, lexicographic in
/// `(x1, x2, b2)`.
pub fn enumerate_flowline(s1: u32, s2: u32) -> Result<Vec<FlowLineDesign>> {
    if s1 < 3 || s2 < 2 {
        return Err(Error::InvalidParameter(format!(
            "need S1 >= 3 and S2 >= 2, got ({s1}, {s2})"
        )));
    }
    let mut out = Vec::with_capacity(((s1 - 1) * (s1 - 2) / 2 * (s2 - 1)) as usize);
    for x1 in 1..s1 - 1 {
        for x2 in 1..s1 - x1 {
            let x3 = s1 - x1 - x2;
            for b2 in 1..s2 {
                out.push(FlowLineDesign {
                    x1,
                    x2,
                    x3,
                    b2,
                    b3: s2 - b2,
                });
            }
        }
    }
    Ok(out)
}

/// Markov state: jobs at stages 2 and 3 (service positions included) and
/// whether stations 1 and 2 hold a finished job they cannot pass on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct State {
    n2: u32,
    n3: u32,
    blk1: bool,
    blk2: bool,
}

impl State {
    const EMPTY: State = State {
        n2: 0,
        n3: 0,
        blk1: false,
        blk2: false,
    };

    /// Increases by one on every non-departure transition.
    fn potential(&self) -> u32 {
        self.n2 + 2 * self.n3 + self.blk1 as u32 + self.blk2 as u32
    }
}

/// Outcome of a service completion at `station` (0-based), or `None` when
/// that station is idle or blocked. The flag marks a departure.
#[inline]
fn complete(d: &FlowLineDesign, s: State, station: usize) -> Option<(State, bool)> {
    let mut t = s;
    match station {
        0 => {
            if s.blk1 {
                return None;
            }
            if s.n2 < d.b2 {
                t.n2 += 1;
            } else {
                t.blk1 = true;
            }
            Some((t, false))
        }
        1 => {
            if s.n2 == 0 || s.blk2 {
                return None;
            }
            if s.n3 < d.b3 {
                t.n3 += 1;
                t.n2 -= 1;
                if t.blk1 {
                    t.blk1 = false;
                    t.n2 += 1;
                }
            } else {
                t.blk2 = true;
            }
            Some((t, false))
        }
        _ => {
            if s.n3 == 0 {
                return None;
            }
            t.n3 -= 1;
            if t.blk2 {
                t.blk2 = false;
                t.n3 += 1;
                t.n2 -= 1;
            }
            if t.blk1 && t.n2 < d.b2 {
                t.blk1 = false;
                t.n2 += 1;
            }
            Some((t, true))
        }
    }
}

/// Reachable state space with a level ordering that keeps the generator banded.
struct StateSpace {
    design: FlowLineDesign,
    states: Vec<State>,
    // dense lookup over (n2, n3, blk1, blk2)
    lookup: Vec<u32>,
}

impl StateSpace {
    fn new(d: FlowLineDesign) -> Self {
        let mut states = Vec::new();
        for n2 in 0..=d.b2 {
            for n3 in 0..=d.b3 {
                for blk1 in [false, true] {
                    for blk2 in [false, true] {
                        if blk1 && n2 != d.b2 {
                            continue;
                        }
                        if blk2 && (n3 != d.b3 || n2 == 0) {
                            continue;
                        }
                        states.push(State { n2, n3, blk1, blk2 });
                    }
                }
            }
        }
        // The longer buffer is the outer level, so the band width scales with
        // the shorter one.
        if d.b2 >= d.b3 {
            states.sort_by_key(|s| (s.n2, s.n3, s.blk1, s.blk2));
        } else {
            states.sort_by_key(|s| (s.n3, s.n2, s.blk1, s.blk2));
        }
        let mut lookup = vec![u32::MAX; ((d.b2 + 1) * (d.b3 + 1) * 4) as usize];
        let mut sp = Self {
            design: d,
            states,
            lookup: Vec::new(),
        };
        for (i, s) in sp.states.iter().enumerate() {
            lookup[sp.slot(*s)] = i as u32;
        }
        sp.lookup = lookup;
        sp
    }

    #[inline]
    fn slot(&self, s: State) -> usize {
        let d = &self.design;
        ((((s.n2 * (d.b3 + 1)) + s.n3) * 4) + (s.blk1 as u32) * 2 + s.blk2 as u32) as usize
    }

    #[inline]
    fn index(&self, s: State) -> usize {
        self.lookup[self.slot(s)] as usize
    }

    fn len(&self) -> usize {
        self.states.len()
    }

    /// `(from, to, rate, departure)` for every transition.
    fn transitions(&self) -> Vec<(usize, usize, f64, bool)> {
        let rates = self.design.rates();
        let mut out = Vec::with_capacity(3 * self.len());
        for (i, &s) in self.states.iter().enumerate() {
            for (st, &r) in rates.iter().enumerate() {
                if let Some((t, dep)) = complete(&self.design, s, st) {
                    out.push((i, self.index(t), r, dep));
                }
            }
        }
        out
    }
}

/// Stationary distribution of the generator with the given transitions,
/// by banded state reduction (Grassmann-Taksar-Heyman): no subtractions,
/// so no cancellation.
fn gth_banded(n: usize, trans: &[(usize, usize, f64, bool)]) -> Result<Vec<f64>> {
    let w = trans
        .iter()
        .map(|&(i, j, _, _)| i.abs_diff(j))
        .max()
        .unwrap_or(0)
        .max(1);
    let width = 2 * w + 1;
    let mut a = vec![0.0f64; n * width];
    let at = |i: usize, j: usize| i * width + (j + w - i);
    for &(i, j, r, _) in trans {
        if i != j {
            a[at(i, j)] += r;
        }
    }
    let mut out_rate = vec![0.0f64; n];
    for m in (1..n).rev() {
        let lo = m.saturating_sub(w);
        let s: f64 = (lo..m).map(|j| a[at(m, j)]).sum();
        if !(s > 0.0) {
            return Err(Error::Numerical {
                what: format!("state {m} cannot reach lower states"),
                residual: s,
            });
        }
        out_rate[m] = s;
        for i in lo..m {
            let f = a[at(i, m)];
            if f == 0.0 {
                continue;
            }
            let f = f / s;
            for j in lo..m {
                if j != i {
                    let v = a[at(m, j)];
                    if v != 0.0 {
                        a[at(i, j)] += f * v;
                    }
                }
            }
        }
    }
    let mut pi = vec![0.0f64; n];
    pi[0] = 1.0;
    for m in 1..n {
        let lo = m.saturating_sub(w);
        let inflow: f64 = (lo..m).map(|i| pi[i] * a[at(i, m)]).sum();
        pi[m] = inflow / out_rate[m];
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);
    Ok(pi)
}

/// Steady-state throughput from the balance equations of the tandem CTMC.
pub fn flowline_exact_mean(d: &FlowLineDesign) -> Result<f64> {
    Ok(flowline_steady_state(d)?.throughput)
}

/// Stationary solution together with its balance residual.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub throughput: f64,
    pub states: usize,
    /// `max_j |(pi Q)_j|`.
    pub residual: f64,
    pub min_prob: f64,
    pub prob_sum: f64,
}

pub fn flowline_steady_state(d: &FlowLineDesign) -> Result<SteadyState> {
    d.validate()?;
    let sp = StateSpace::new(*d);
    let trans = sp.transitions();
    let pi = gth_banded(sp.len(), &trans)?;
    let mut flow = vec![0.0f64; sp.len()];
    for &(i, j, r, _) in &trans {
        flow[j] += pi[i] * r;
        flow[i] -= pi[i] * r;
    }
    let residual = flow.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(residual <= 1e-10) {
        return Err(Error::Numerical {
            what: format!("balance residual too large for {d:?}"),
            residual,
        });
    }
    let busy3: f64 = sp
        .states
        .iter()
        .zip(&pi)
        .filter(|(s, _)| s.n3 >= 1)
        .map(|(_, p)| p)
        .sum();
    Ok(SteadyState {
        throughput: d.x3 as f64 * busy3,
        states: sp.len(),
        residual,
        min_prob: pi.iter().copied().fold(f64::INFINITY, f64::min),
        prob_sum: pi.iter().sum(),
    })
}

/// Departures before the observation window opens.
pub const WARMUP_JOBS: u32 = 1000;
/// Departures in the observation window.
pub const WINDOW_JOBS: u32 = 50;

/// One throughput observation by discrete-event simulation: start empty,
/// run until job 1050 leaves station 3, return `50 / (t_1050 - t_1000)`.
/// Simultaneous completions are resolved in station order 3, 2, 1.
pub fn flowline_simulate(d: &FlowLineDesign, rng: &mut SimRng) -> f64 {
    let rates = d.rates();
    let mut s = State::EMPTY;
    let mut next: [Option<f64>; 3] = [None; 3];
    let mut departures = 0u32;
    let mut window_start = 0.0f64;
    let draw = |rng: &mut SimRng, r: f64| -> f64 {
        let e: f64 = rng.sample(Exp1);
        e / r
    };
    next[0] = Some(draw(rng, rates[0]));
    loop {
        // earliest completion; scanning 3, 2, 1 with strict < keeps that priority
        let mut st = usize::MAX;
        let mut t = f64::INFINITY;
        for i in (0..3).rev() {
            if let Some(ti) = next[i] {
                if ti < t {
                    t = ti;
                    st = i;
                }
            }
        }
        let now = t;
        next[st] = None;
        let (ns, dep) = complete(d, s, st).expect("scheduled station is active");
        // a station-3 completion may also release a blocked station 2 or 1,
        // whose pending clocks were already cleared when they blocked
        s = ns;
        if dep {
            departures += 1;
            if departures == WARMUP_JOBS {
                window_start = now;
            } else if departures == WARMUP_JOBS + WINDOW_JOBS {
                return WINDOW_JOBS as f64 / (now - window_start);
            }
        }
        for i in (0..3).rev() {
            if next[i].is_none() && active(&s, i) {
                next[i] = Some(now + draw(rng, rates[i]));
            }
        }
    }
}

#[inline]
fn active(s: &State, station: usize) -> bool {
    match station {
        0 => !s.blk1,
        1 => s.n2 >= 1 && !s.blk2,
        _ => s.n3 >= 1,
    }
}

/// Exact-in-distribution replacement for [`flowline_simulate`].
///
/// The state seen just after the 1000th departure (starting empty) has a
/// distribution that can be computed by pushing probability mass from one
/// departure epoch to the next. Between departures every transition raises
/// [`State::potential`] by one, so a single sweep in potential order does
/// the push. An observation then draws that state and runs the jump chain
/// through the last 50 departures. Holding times are not drawn one by one:
/// the total time spent in states with the same set of busy stations is a
/// single Gamma variate, and there are at most seven such sets.
pub struct FastFlowLine {
    jumps: Vec<Jump>,
    /// Total event rate of each busy-station set.
    set_rate: [f64; 8],
    start: WeightedAliasIndex<f64>,
}

/// Per-state jump table.
#[derive(Clone, Copy)]
struct Jump {
    /// Cumulative choice thresholds for stations 3 and 2.
    cut: [f64; 2],
    /// Target per station, high bit set on a departure.
    next: [u32; 3],
    /// Bit `j` set when station `j + 1` can fire.
    set: u8,
}

const DEP_BIT: u32 = 1 << 31;

impl FastFlowLine {
    pub fn new(d: FlowLineDesign) -> Result<Self> {
        d.validate()?;
        let sp = StateSpace::new(d);
        let n = sp.len();
        let rates = d.rates();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| sp.states[i].potential());
        // per state: up to three (target, prob, departure)
        let mut moves: Vec<[(u32, f64, bool); 3]> = Vec::with_capacity(n);
        let mut nmoves: Vec<u8> = Vec::with_capacity(n);
        let mut jumps = Vec::with_capacity(n);
        for (i, &s) in sp.states.iter().enumerate() {
            let mut m = [(0u32, 0.0, false); 3];
            let mut jump = Jump {
                cut: [0.0; 2],
                next: [i as u32; 3],
                set: 0,
            };
            let mut c = 0;
            let mut total = 0.0;
            for (st, &r) in rates.iter().enumerate() {
                if let Some((t, dep)) = complete(&d, s, st) {
                    m[c] = (sp.index(t) as u32, r, dep);
                    jump.next[st] = sp.index(t) as u32 | if dep { DEP_BIT } else { 0 };
                    jump.set |= 1 << st;
                    c += 1;
                    total += r;
                }
            }
            for e in m.iter_mut().take(c) {
                e.1 /= total;
            }
            let on = |st: usize| {
                if jump.set & (1 << st) != 0 {
                    rates[st]
                } else {
                    0.0
                }
            };
            jump.cut = [on(2) / total, (on(2) + on(1)) / total];
            if jump.set & 1 == 0 {
                // station 1 cannot fire: make sure rounding never selects it
                jump.cut[1] = f64::INFINITY;
            }
            moves.push(m);
            nmoves.push(c as u8);
            jumps.push(jump);
        }
        let mut set_rate = [0.0; 8];
        for (set, r) in set_rate.iter_mut().enumerate() {
            *r = (0..3)
                .filter(|st| set & (1 << st) != 0)
                .map(|st| rates[st])
                .sum();
        }
        let mut v = vec![0.0f64; n];
        v[sp.index(State::EMPTY)] = 1.0;
        let mut w = vec![0.0f64; n];
        let mut out = vec![0.0f64; n];
        for _ in 0..WARMUP_JOBS {
            w.copy_from_slice(&v);
            out.iter_mut().for_each(|x| *x = 0.0);
            for &i in &order {
                let m = w[i];
                if m == 0.0 {
                    continue;
                }
                for &(t, p, dep) in &moves[i][..nmoves[i] as usize] {
                    if dep {
                        out[t as usize] += m * p;
                    } else {
                        w[t as usize] += m * p;
                    }
                }
            }
            let diff: f64 = out.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
            std::mem::swap(&mut v, &mut out);
            if diff < 1e-15 {
                break;
            }
        }
        let start = WeightedAliasIndex::new(v).map_err(|e| Error::Numerical {
            what: format!("departure-epoch distribution unusable: {e}"),
            residual: f64::NAN,
        })?;
        Ok(Self {
            jumps,
            set_rate,
            start,
        })
    }

    /// One observation: departures per unit time over a 50-departure window.
    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        let mut s = self.start.sample(rng);
        let mut visits = [0u32; 8];
        let mut deps = 0u32;
        while deps < WINDOW_JOBS {
            let j = &self.jumps[s];
            visits[j.set as usize] += 1;
            let u: f64 = rng.random();
            // u < cut[0] -> station 3, u < cut[1] -> station 2, else station 1
            let station = 2 - (u >= j.cut[0]) as usize - (u >= j.cut[1]) as usize;
            let t = j.next[station];
            deps += t >> 31;
            s = (t & !DEP_BIT) as usize;
        }
        let mut elapsed = 0.0;
        for (set, &c) in visits.iter().enumerate() {
            if c > 0 {
                elapsed += Gamma::new(c as f64, 1.0 / self.set_rate[set])
                    .expect("positive shape and scale")
                    .sample(rng);
            }
        }
        WINDOW_JOBS as f64 / elapsed
    }
}

/// How flow-line observations are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FlowSamplerKind {
    /// Event-by-event simulation of all 1050 departures.
    Des,
    /// Jump chain of the embedded CTMC with per-design tables.
    #[default]
    Fast,
}

impl std::str::FromStr for FlowSamplerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "des" => Ok(Self::Des),
            "fast" => Ok(Self::Fast),
            _ => Err(Error::InvalidParameter(format!(
                "unknown flow sampler '{s}'"
            ))),
        }
    }
}

/// Observation oracle over a list of designs. Fast tables are built the
/// first time a design is sampled.
pub struct FlowLineSampler {
    designs: Vec<FlowLineDesign>,
    fast: Option<Vec<OnceLock<FastFlowLine>>>,
}

impl FlowLineSampler {
    pub fn new(designs: Vec<FlowLineDesign>, kind: FlowSamplerKind) -> Result<Self> {
        for d in &designs {
            d.validate()?;
        }
        let fast = match kind {
            FlowSamplerKind::Des => None,
            FlowSamplerKind::Fast => Some((0..designs.len()).map(|_| OnceLock::new()).collect()),
        };
        Ok(Self { designs, fast })
    }
}

impl Sampler for FlowLineSampler {
    fn sample(&self, i: usize, rng: &mut SimRng) -> f64 {
        match &self.fast {
            Some(f) => f[i]
                .get_or_init(|| {
                    FastFlowLine::new(self.designs[i]).expect("design validated on construction")
                })
                .sample(rng),
            None => flowline_simulate(&self.designs[i], rng),
        }
    }

    fn sample_sum(&self, i: usize, n: u64, rng: &mut SimRng) -> f64 {
        let mut s = 0.0;
        match &self.fast {
            Some(f) => {
                let table = f[i].get_or_init(|| {
                    FastFlowLine::new(self.designs[i]).expect("design validated on construction")
                });
                for _ in 0..n {
                    s += table.sample(rng);
                }
            }
            None => {
                for _ in 0..n {
                    s += flowline_simulate(&self.designs[i], rng);
                }
            }
        }
        s
    }
}

/// Exact means for every design, in enumeration order.
pub fn flowline_means(designs: &[FlowLineDesign]) -> Result<Vec<f64>> {
    designs.par_iter().map(flowline_exact_mean).collect()
}

/// Relative tolerance under which two exact throughputs count as tied.
/// Mirror-image designs have equal throughput in exact arithmetic but the
/// solver may separate them by a few ulps.
pub const TIE_TOL: f64 = 1e-9;

/// Snap means within [`TIE_TOL`] of the maximum onto it.
fn snap_ties(means: &mut [f64]) {
    let m = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for v in means.iter_mut() {
        if m - *v <= TIE_TOL * m.abs() {
            *v = m;
        }
    }
}

/// Flow-line problem over every design of the `(s1, s2)` family.
pub fn tp_instance(s1: u32, s2: u32, kind: FlowSamplerKind) -> Result<ProblemInstance> {
    let designs = enumerate_flowline(s1, s2)?;
    let mut means = flowline_means(&designs)?;
    snap_ties(&mut means);
    let sampler = Arc::new(FlowLineSampler::new(designs, kind)?);
    ProblemInstance::new(format!("tp:{s1},{s2}"), means, None, sampler)
}

/// Summary of a flow-line instance: size, best mean, gap, ties and good count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub s1: u32,
    pub s2: u32,
    pub k: usize,
    pub highest_mean: f64,
    pub gamma: f64,
    pub n_best: usize,
    pub n_good: usize,
    pub delta: f64,
}

pub fn tp_table_row(s1: u32, s2: u32, delta: f64) -> Result<TableRow> {
    let designs = enumerate_flowline(s1, s2)?;
    let mut means = flowline_means(&designs)?;
    snap_ties(&mut means);
    table_row_from_means(s1, s2, &means, delta)
}

pub fn table_row_from_means(s1: u32, s2: u32, means: &[f64], delta: f64) -> Result<TableRow> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter("delta must be > 0".into()));
    }
    let m = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n_best = means.iter().filter(|&&v| v == m).count();
    let gamma = means
        .iter()
        .filter(|&&v| v < m)
        .map(|&v| m - v)
        .fold(f64::INFINITY, f64::min);
    let n_good = means.iter().filter(|&&v| v > m - delta).count();
    Ok(TableRow {
        s1,
        s2,
        k: means.len(),
        highest_mean: m,
        gamma,
        n_best,
        n_good,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;

    fn binom(n: u32, r: u32) -> u32 {
        (0..r).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn enumeration_counts() {
        for (s1, s2) in [(3, 2), (5, 4), (20, 20), (30, 30), (7, 11)] {
            let d = enumerate_flowline(s1, s2).unwrap();
            assert_eq!(d.len() as u32, binom(s1 - 1, 2) * (s2 - 1));
        }
        assert_eq!(
            enumerate_flowline(3, 2).unwrap(),
            vec![FlowLineDesign::new(1, 1, 1, 1, 1).unwrap()]
        );
        assert!(enumerate_flowline(2, 5).is_err());
        let d = enumerate_flowline(6, 4).unwrap();
        assert!(d.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn state_space_has_no_dead_ends() {
        let d = FlowLineDesign::new(2, 3, 4, 3, 2).unwrap();
        let sp = StateSpace::new(d);
        for &s in &sp.states {
            assert!((0..3).any(|st| complete(&d, s, st).is_some()));
            for st in 0..3 {
                if let Some((t, dep)) = complete(&d, s, st) {
                    // potential rises by one except on departures
                    if !dep {
                        assert_eq!(t.potential(), s.potential() + 1);
                    } else {
                        assert!(t.potential() < s.potential());
                    }
                }
            }
        }
    }

    /// Dense Gaussian elimination on the balance equations, replacing one
    /// row with the normalization.
    #[allow(clippy::needless_range_loop)]
    fn dense_throughput(d: &FlowLineDesign) -> f64 {
        let sp = StateSpace::new(*d);
        let n = sp.len();
        let mut q = vec![vec![0.0f64; n]; n];
        for (i, j, r, _) in sp.transitions() {
            q[i][j] += r;
            q[i][i] -= r;
        }
        // solve A x = e0 with A = Q^T, first row replaced by ones
        let mut a: Vec<Vec<f64>> = (0..n).map(|r| (0..n).map(|c| q[c][r]).collect()).collect();
        a[0] = vec![1.0; n];
        let mut b = vec![0.0; n];
        b[0] = 1.0;
        for c in 0..n {
            let p = (c..n)
                .max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))
                .unwrap();
            a.swap(c, p);
            b.swap(c, p);
            for r in c + 1..n {
                let f = a[r][c] / a[c][c];
                if f != 0.0 {
                    for cc in c..n {
                        a[r][cc] -= f * a[c][cc];
                    }
                    b[r] -= f * b[c];
                }
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
            x[r] = (b[r] - s) / a[r][r];
        }
        d.x3 as f64
            * sp.states
                .iter()
                .zip(&x)
                .filter(|(s, _)| s.n3 >= 1)
                .map(|(_, p)| p)
                .sum::<f64>()
    }

    #[test]
    fn banded_solver_matches_dense_elimination() {
        for d in enumerate_flowline(8, 7).unwrap() {
            let a = flowline_exact_mean(&d).unwrap();
            let b = dense_throughput(&d);
            assert!((a - b).abs() < 1e-10 * b, "{d:?}: {a} vs {b}");
        }
    }

    #[test]
    fn steady_state_sanity() {
        for d in enumerate_flowline(9, 9).unwrap() {
            let ss = flowline_steady_state(&d).unwrap();
            assert!(ss.min_prob >= 0.0);
            assert!((ss.prob_sum - 1.0).abs() < 1e-12);
            assert!(ss.residual <= 1e-10);
            let cap = d.x1.min(d.x2).min(d.x3) as f64;
            assert!(ss.throughput > 0.0 && ss.throughput <= cap * (1.0 + 1e-12));
        }
    }

    #[test]
    fn single_slot_line_known_value() {
        // all rates 1, single slots: throughput 22/39
        let d = FlowLineDesign::new(1, 1, 1, 1, 1).unwrap();
        let a = flowline_exact_mean(&d).unwrap();
        assert!((a - 22.0 / 39.0).abs() < 1e-14);
        assert!((a - dense_throughput(&d)).abs() < 1e-14);
    }

    #[test]
    fn simulation_is_deterministic() {
        let d = FlowLineDesign::new(6, 7, 7, 12, 8).unwrap();
        let mut a = derive_stream(5, &[1]).rng();
        let mut b = derive_stream(5, &[1]).rng();
        assert_eq!(flowline_simulate(&d, &mut a), flowline_simulate(&d, &mut b));
        let f = FastFlowLine::new(d).unwrap();
        let mut a = derive_stream(5, &[2]).rng();
        let mut b = derive_stream(5, &[2]).rng();
        assert_eq!(f.sample(&mut a), f.sample(&mut b));
    }

    #[test]
    fn snapping_merges_only_near_ties() {
        let mut m = vec![5.0, 5.0 - 1e-12, 4.99];
        snap_ties(&mut m);
        assert_eq!(m, vec![5.0, 5.0, 4.99]);
    }
}
