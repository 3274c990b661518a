//! Boundary-crossing quantities of the standard-normal running average
//! `Z(n) = (Z_1 + ... + Z_n) / n` and the PCS bounds built from them.
//!
//! * `C(x) = exp(sum_{n>=1} Phi(-sqrt(n) x) / n)` is the expected first
//!   time `Z(n) < x` for `x > 0`.
//! * For `x < 0`, `Pr{min_n Z(n) > x} = 1 / C(-x)`.
//! * `C(x; n0)`, the expected crossing time when the process is only
//!   inspected from `n0` onwards, has no closed form and is estimated by
//!   Monte Carlo.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derive_stream;

/// Truncation and root-finding tolerances for the series computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesControl {
    pub max_terms: usize,
    /// Certified bound on the neglected tail of the log-series.
    pub tail_tol: f64,
    /// Bracket width on the argument of `C` at which bisection stops.
    pub root_tol: f64,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            max_terms: 50_000_000,
            tail_tol: 1e-12,
            root_tol: 1e-10,
        }
    }
}

impl SeriesControl {
    pub fn validate(&self) -> Result<()> {
        if self.max_terms < 1 {
            return Err(Error::InvalidParameter("max_terms must be >= 1".into()));
        }
        if !(self.tail_tol > 0.0) {
            return Err(Error::InvalidParameter("tail_tol must be > 0".into()));
        }
        if !(self.root_tol > 0.0) {
            return Err(Error::InvalidParameter("root_tol must be > 0".into()));
        }
        Ok(())
    }
}

/// Standard normal CDF.
#[inline]
pub fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Partial sum of `sum_n Phi(-sqrt(n) x) / n` for `x > 0` together with the
/// number of terms used and the certified tail bound.
#[derive(Debug, Clone, Copy)]
pub struct SeriesValue {
    pub sum: f64,
    pub terms: usize,
    pub tail_bound: f64,
}

/// Tail bound after `m` terms, from `Phi(-y) <= exp(-y^2 / 2)`:
/// `exp(-(m+1) x^2 / 2) / ((m+1) (1 - exp(-x^2 / 2)))`.
fn tail_bound(x: f64, m: usize) -> f64 {
    let h = 0.5 * x * x;
    let m1 = (m + 1) as f64;
    (-m1 * h).exp() / (m1 * -(-h).exp_m1())
}

pub fn log_series(x: f64, ctl: &SeriesControl) -> Result<SeriesValue> {
    ctl.validate()?;
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("series needs x > 0, got {x}")));
    }
    // Neumaier-compensated summation; many small terms for small x.
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut m = 0usize;
    let mut tail = f64::INFINITY;
    while m < ctl.max_terms {
        m += 1;
        let term = phi(-(m as f64).sqrt() * x) / m as f64;
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        // checking the bound every step is cheap relative to erfc
        tail = tail_bound(x, m);
        if tail <= ctl.tail_tol {
            return Ok(SeriesValue {
                sum: sum + comp,
                terms: m,
                tail_bound: tail,
            });
        }
    }
    Err(Error::Truncation {
        achieved_tail: tail,
        terms: m,
    })
}

/// `C(x)`, the expected boundary-crossing time of the standard-normal
/// running average below `x > 0`.
pub fn c_of_x(x: f64, ctl: &SeriesControl) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!(
            "C(x) is infinite for x <= 0 (got {x})"
        )));
    }
    Ok(log_series(x, ctl)?.sum.exp())
}

/// `Pr{N(x) < inf}` for `x < 0`: the running average ever drops below `x`.
pub fn prob_crossing_finite(x: f64, ctl: &SeriesControl) -> Result<f64> {
    if !(x < 0.0) {
        return Err(Error::Domain(format!(
            "crossing probability is 1 for x >= 0 (got {x})"
        )));
    }
    let s = log_series(-x, ctl)?.sum;
    Ok(-(-s).exp_m1())
}

/// `Pr{min_n Z(n) > x} = 1 / C(-x)` for `x < 0`.
pub fn prob_min_above(x: f64, ctl: &SeriesControl) -> Result<f64> {
    if !(x < 0.0) {
        return Err(Error::Domain(format!(
            "min-above probability needs x < 0 (got {x})"
        )));
    }
    Ok(1.0 / c_of_x(-x, ctl)?)
}

/// Bisection for the root of a decreasing function `f(x) - target` on
/// `(lo, hi)` with `f(lo) > target >= f(hi)`.
fn bisect_decreasing<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<bool>,
{
    // f returns true when the value at x is still above the target
    for _ in 0..2000 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Find `lo in (0, hi)` with `above(lo) == true` by repeated halving.
fn bracket_below<F>(mut above: F, hi: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<bool>,
{
    let mut lo = 0.5 * hi;
    for _ in 0..1000 {
        if above(lo)? {
            return Ok(lo);
        }
        lo *= 0.5;
        if lo < f64::MIN_POSITIVE {
            break;
        }
    }
    Err(Error::Numerical {
        what: "could not bracket the root from below".into(),
        residual: lo,
    })
}

/// The split `gamma0 in (0, gamma)` solving `C((gamma - gamma0) / sigma_bar) = c`.
pub fn solve_gamma0(gamma: f64, sigma_bar: f64, c: f64, ctl: &SeriesControl) -> Result<f64> {
    check_positive("gamma", gamma)?;
    check_positive("sigma_bar", sigma_bar)?;
    check_positive("c", c)?;
    let x_hi = gamma / sigma_bar;
    let threshold = c_of_x(x_hi, ctl)?;
    if c <= threshold {
        return Err(Error::Hypothesis(format!(
            "c = {c} must exceed C(gamma / sigma_bar) = {threshold}"
        )));
    }
    let above = |x: f64| -> Result<bool> { Ok(c_of_x(x, ctl)? > c) };
    let x_lo = bracket_below(above, x_hi)?;
    let x = bisect_decreasing(above, x_lo, x_hi, ctl.root_tol)?;
    Ok(gamma - sigma_bar * x)
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {v}")))
    }
}

/// Analytic PCS quantities for one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub gamma: f64,
    pub gamma0: f64,
    /// Monte Carlo bracket on `gamma0` when it was obtained by noisy search.
    pub gamma0_bracket: Option<(f64, f64)>,
    pub sigma_bar: f64,
    pub sigma1: f64,
    /// Budget per alternative, `B / k`.
    pub c: f64,
    pub pcs_lower: f64,
    /// Monte Carlo half-width on `pcs_lower`, when it is an estimate.
    pub pcs_lower_half_width: Option<f64>,
    pub pcs_upper: Option<f64>,
    pub n0: u64,
    pub n_g: Option<u64>,
    pub tail_tol: f64,
    pub root_tol: f64,
}

/// Asymptotic PCS bounds of the pure greedy procedure with `B = c k`:
/// `1 / C(gamma0 / sigma1) <= PCS` and, under the slippage configuration,
/// `PCS <= 1 / C(gamma / sigma1)`.
pub fn greedy_pcs_bounds(
    gamma: f64,
    sigma_bar: f64,
    sigma1: f64,
    c: f64,
    ctl: &SeriesControl,
) -> Result<BoundReport> {
    check_positive("sigma1", sigma1)?;
    let gamma0 = solve_gamma0(gamma, sigma_bar, c, ctl)?;
    let pcs_lower = 1.0 / c_of_x(gamma0 / sigma1, ctl)?;
    let pcs_upper = 1.0 / c_of_x(gamma / sigma1, ctl)?;
    Ok(BoundReport {
        gamma,
        gamma0,
        gamma0_bracket: None,
        sigma_bar,
        sigma1,
        c,
        pcs_lower,
        pcs_lower_half_width: None,
        pcs_upper: Some(pcs_upper),
        n0: 1,
        n_g: None,
        tail_tol: ctl.tail_tol,
        root_tol: ctl.root_tol,
    })
}

/// Closed-form bound on the greedy budget per alternative needed after an
/// exploration of `n0`: `beta * exp(-kappa * n0)` with
/// `kappa = (gamma - gamma0)^2 / (2 sigma_bar^2)` and `beta = 1 / (1 - exp(-kappa))`.
pub fn ng_upper_bound(gamma: f64, gamma0: f64, sigma_bar: f64, n0: u64) -> Result<f64> {
    check_positive("sigma_bar", sigma_bar)?;
    if !(gamma0 > 0.0 && gamma0 < gamma) {
        return Err(Error::Domain(format!(
            "gamma0 = {gamma0} must lie in (0, {gamma})"
        )));
    }
    if n0 < 1 {
        return Err(Error::Domain("n0 must be >= 1".into()));
    }
    let d = gamma - gamma0;
    let kappa = d * d / (2.0 * sigma_bar * sigma_bar);
    let beta = 1.0 / -(-kappa).exp_m1();
    Ok(beta * (-kappa * n0 as f64).exp())
}

/// Monte Carlo mean with a 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub half_width: f64,
    pub reps: u64,
    pub std_dev: f64,
}

impl McEstimate {
    pub const Z95: f64 = 1.959_963_984_540_054;

    pub fn std_err(&self) -> f64 {
        self.std_dev / (self.reps as f64).sqrt()
    }

    /// Half-width at an arbitrary normal quantile `z`.
    pub fn half_width_at(&self, z: f64) -> f64 {
        z * self.std_err()
    }

    pub fn covers(&self, value: f64, z: f64) -> bool {
        (self.mean - value).abs() <= self.half_width_at(z)
    }
}

/// Streaming mean/variance with a parallel merge.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(a: Moments, b: Moments) -> Moments {
        if a.n == 0 {
            return b;
        }
        if b.n == 0 {
            return a;
        }
        let n = a.n + b.n;
        let d = b.mean - a.mean;
        let mean = a.mean + d * b.n as f64 / n as f64;
        let m2 = a.m2 + b.m2 + d * d * (a.n as f64 * b.n as f64) / n as f64;
        Moments { n, mean, m2 }
    }

    fn estimate(&self) -> McEstimate {
        let sd = if self.n >= 2 {
            (self.m2 / (self.n - 1) as f64).sqrt()
        } else {
            f64::INFINITY
        };
        let hw = if self.n >= 2 {
            McEstimate::Z95 * sd / (self.n as f64).sqrt()
        } else {
            f64::INFINITY
        };
        McEstimate {
            mean: self.mean,
            half_width: hw,
            reps: self.n,
            std_dev: sd,
        }
    }
}

/// Paths per deterministic shard of a Monte Carlo run.
const SHARD: u64 = 1 << 13;

/// Hard cap on the length of one simulated crossing path.
pub const PATH_CAP: u64 = 100_000_000;

/// Run `reps` independent path functionals split over shards whose streams
/// derive from `(seed, [shard])`, merging by count-weighted moments.
fn sharded_mc<F>(reps: u64, seed: u64, f: F) -> Result<McEstimate>
where
    F: Fn(&mut crate::rng::SimRng) -> Result<f64> + Sync,
{
    let shards = reps.div_ceil(SHARD);
    let parts: Result<Vec<Moments>> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut rng = derive_stream(seed, &[s]).rng();
            let count = SHARD.min(reps - s * SHARD);
            let mut m = Moments::default();
            for _ in 0..count {
                m.push(f(&mut rng)?);
            }
            Ok(m)
        })
        .collect();
    Ok(parts?
        .into_iter()
        .fold(Moments::default(), Moments::merge)
        .estimate())
}

/// `inf{n >= n0 : Z(n) < x}` along one path. The first `n0` observations
/// enter through their sum, which is `N(0, n0)`.
pub(crate) fn crossing_time<R: Rng + ?Sized>(x: f64, n0: u64, rng: &mut R) -> Result<u64> {
    let z: f64 = rng.sample(StandardNormal);
    let mut n = n0;
    let mut mean = z * (n0 as f64).sqrt() / n0 as f64;
    while mean >= x {
        if n >= PATH_CAP {
            return Err(Error::PathCap { cap: PATH_CAP });
        }
        let z: f64 = rng.sample(StandardNormal);
        mean = (n as f64 * mean + z) / (n + 1) as f64;
        n += 1;
    }
    Ok(n)
}

/// Monte Carlo estimate of `C(x; n0) = E[inf{n >= n0 : Z(n) < x}]`.
pub fn estimate_c_n0(x: f64, n0: u64, reps: u64, seed: u64) -> Result<McEstimate> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!(
            "C(x; n0) is infinite for x <= 0 (got {x})"
        )));
    }
    if n0 < 1 || reps < 2 {
        return Err(Error::InvalidParameter("need n0 >= 1 and reps >= 2".into()));
    }
    sharded_mc(reps, seed, |rng| {
        crossing_time(x, n0, rng).map(|n| n as f64)
    })
}

/// Smallest horizon `N` for which the probability of a first crossing of
/// level `-a` after `N` is certified below `residual`.
pub fn censoring_horizon(a: f64, residual: f64) -> u64 {
    let h = 0.5 * a * a;
    let denom = -(-h).exp_m1();
    // exp(-(N+1) h) / denom < residual
    let n = ((denom * residual).ln() / -h).ceil() - 1.0;
    n.max(1.0) as u64
}

/// Monte Carlo estimate of `Pr{min_{n >= n0} Z(n) > -a}` for `a > 0`, with
/// the path censored at a horizon whose residual crossing probability is
/// below `residual`.
pub fn estimate_min_above(
    a: f64,
    n0: u64,
    reps: u64,
    seed: u64,
    residual: f64,
) -> Result<McEstimate> {
    check_positive("a", a)?;
    if n0 < 1 || reps < 2 {
        return Err(Error::InvalidParameter("need n0 >= 1 and reps >= 2".into()));
    }
    let horizon = censoring_horizon(a, residual).max(n0);
    if horizon > PATH_CAP {
        return Err(Error::PathCap { cap: PATH_CAP });
    }
    sharded_mc(reps, seed, |rng| {
        let z: f64 = rng.sample(StandardNormal);
        let mut n = n0;
        let mut mean = z * (n0 as f64).sqrt() / n0 as f64;
        if mean <= -a {
            return Ok(0.0);
        }
        while n < horizon {
            let z: f64 = rng.sample(StandardNormal);
            mean = (n as f64 * mean + z) / (n + 1) as f64;
            n += 1;
            if mean <= -a {
                return Ok(0.0);
            }
        }
        Ok(1.0)
    })
}

/// EFG counterpart of [`greedy_pcs_bounds`]: solves
/// `C((gamma - gamma0) / sigma_bar; n0) = n0 + n_g` by bisection over Monte
/// Carlo evaluations that share one set of paths (so the estimate is
/// monotone in the argument), and estimates
/// `Pr{min_{n >= n0} X_1(n) > mu_1 - gamma0}` with `sigma_1 = sigma_bar`.
pub fn efg_bound_params(
    gamma: f64,
    sigma_bar: f64,
    n0: u64,
    n_g: u64,
    reps: u64,
    seed: u64,
    ctl: &SeriesControl,
) -> Result<BoundReport> {
    check_positive("gamma", gamma)?;
    check_positive("sigma_bar", sigma_bar)?;
    ctl.validate()?;
    let target = (n0 + n_g) as f64;
    let x_hi = gamma / sigma_bar;
    let eval = |x: f64| estimate_c_n0(x, n0, reps, seed);
    let at_hi = eval(x_hi)?;
    if target <= at_hi.mean {
        return Err(Error::Hypothesis(format!(
            "n_g = {n_g} must exceed C(gamma / sigma_bar; n0) - n0 = {:.4} (+/- {:.4})",
            at_hi.mean - n0 as f64,
            at_hi.half_width
        )));
    }
    let point = |x: f64| -> Result<bool> { Ok(eval(x)?.mean > target) };
    let x_lo = bracket_below(point, x_hi)?;
    let x_star = bisect_decreasing(point, x_lo, x_hi, ctl.root_tol)?;

    // Bracket from the confidence band: the upper curve crosses the target
    // at a larger argument than the lower one.
    let upper = |x: f64| -> Result<bool> {
        let e = eval(x)?;
        Ok(e.mean + e.half_width > target)
    };
    let lower = |x: f64| -> Result<bool> {
        let e = eval(x)?;
        Ok(e.mean - e.half_width > target)
    };
    let bracket_tol = ctl.root_tol.max(1e-6);
    let x_up = bisect_decreasing(upper, x_lo, x_hi, bracket_tol)?;
    let x_dn = if lower(x_lo)? {
        bisect_decreasing(lower, x_lo, x_hi, bracket_tol)?
    } else {
        bisect_decreasing(lower, bracket_below(lower, x_lo)?, x_hi, bracket_tol)?
    };
    let g_a = gamma - sigma_bar * x_up;
    let g_b = gamma - sigma_bar * x_dn;
    let gamma0 = gamma - sigma_bar * x_star;

    let pcs = estimate_min_above(
        gamma0 / sigma_bar,
        n0,
        reps,
        seed ^ 0xA5A5_5A5A_0F0F_F0F0,
        1e-3,
    )?;
    Ok(BoundReport {
        gamma,
        gamma0,
        gamma0_bracket: Some((g_a.min(g_b).max(0.0), g_a.max(g_b).min(gamma))),
        sigma_bar,
        sigma1: sigma_bar,
        c: target,
        pcs_lower: pcs.mean,
        pcs_lower_half_width: Some(pcs.half_width),
        pcs_upper: None,
        n0,
        n_g: Some(n_g),
        tail_tol: ctl.tail_tol,
        root_tol: ctl.root_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctl() -> SeriesControl {
        SeriesControl::default()
    }

    #[test]
    fn phi_reference_values() {
        assert!((phi(0.0) - 0.5).abs() < 1e-15);
        let e = (phi(1.959_963_984_540_054) - 0.975).abs();
        assert!(e < 1e-13, "{e:e}");
        // Phi(-10) = 7.619853024160527e-24
        assert!((phi(-10.0) / 7.619_853_024_160_527e-24 - 1.0).abs() < 1e-12);
        assert_eq!(phi(-40.0), 0.0);
    }

    #[test]
    fn c_large_argument_is_one() {
        let v = c_of_x(
            10.0,
            &SeriesControl {
                tail_tol: 1e-9,
                ..ctl()
            },
        )
        .unwrap();
        assert!((v - 1.0).abs() < 1e-6);
    }

    #[test]
    fn c_is_decreasing() {
        let c = ctl();
        let (a, b, d) = (
            c_of_x(0.5, &c).unwrap(),
            c_of_x(1.0, &c).unwrap(),
            c_of_x(2.0, &c).unwrap(),
        );
        assert!(a > b && b > d && d >= 1.0);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(c_of_x(0.0, &ctl()), Err(Error::Domain(_))));
        assert!(matches!(c_of_x(-1.0, &ctl()), Err(Error::Domain(_))));
        assert!(matches!(
            prob_crossing_finite(0.0, &ctl()),
            Err(Error::Domain(_))
        ));
        assert!(matches!(prob_min_above(0.5, &ctl()), Err(Error::Domain(_))));
        assert!(matches!(
            estimate_c_n0(0.0, 1, 10, 1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn truncation_error_reports_tail() {
        let c = SeriesControl {
            max_terms: 10,
            ..ctl()
        };
        match c_of_x(0.01, &c) {
            Err(Error::Truncation {
                achieved_tail,
                terms,
            }) => {
                assert_eq!(terms, 10);
                assert!(achieved_tail > c.tail_tol);
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn tail_is_certified() {
        let v = log_series(0.3, &ctl()).unwrap();
        assert!(v.tail_bound <= 1e-12);
        // brute-force the neglected part well past the stopping point
        let mut rest = 0.0;
        for n in v.terms + 1..v.terms * 20 {
            rest += phi(-(n as f64).sqrt() * 0.3) / n as f64;
        }
        assert!(rest <= v.tail_bound);
    }

    #[test]
    fn complement_and_inverse_identities() {
        let c = ctl();
        let a = prob_min_above(-0.3, &c).unwrap();
        let b = prob_crossing_finite(-0.3, &c).unwrap();
        assert!((a - (1.0 - b)).abs() < 1e-14);
        let p = prob_min_above(-0.2, &c).unwrap();
        assert!((p * c_of_x(0.2, &c).unwrap() - 1.0).abs() < 1e-12);
        assert!((prob_min_above(-10.0, &c).unwrap() - 1.0).abs() < 1e-6);
        assert!(prob_crossing_finite(-10.0, &c).unwrap() < 1e-6);
    }

    #[test]
    fn gamma0_root_properties() {
        let c = ctl();
        let g0 = solve_gamma0(0.1, 1.0, 100.0, &c).unwrap();
        assert!(g0 > 0.0 && g0 < 0.1);
        let back = c_of_x((0.1 - g0) / 1.0, &c).unwrap();
        assert!((back - 100.0).abs() / 100.0 < 1e-6);
    }

    #[test]
    fn gamma0_near_threshold_goes_to_zero() {
        let c = ctl();
        let thr = c_of_x(0.1, &c).unwrap();
        let g0 = solve_gamma0(0.1, 1.0, thr * (1.0 + 1e-9), &c).unwrap();
        assert!(g0 > 0.0 && g0 < 1e-6, "gamma0 = {g0}");
        assert!(matches!(
            solve_gamma0(0.1, 1.0, thr * 0.999, &c),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn ng_bound_substitution() {
        let b = ng_upper_bound(1.5, 0.5, 1.0, 1).unwrap();
        let beta = 1.0 / (1.0 - (-0.5f64).exp());
        assert!((b - beta * (-0.5f64).exp()).abs() < 1e-15);
        for n0 in 1..=100 {
            assert!(
                ng_upper_bound(1.0, 0.5, 1.0, n0 + 1).unwrap()
                    < ng_upper_bound(1.0, 0.5, 1.0, n0).unwrap()
            );
        }
        assert!(
            ng_upper_bound(1.0, 0.5, 2.0, 5).unwrap() > ng_upper_bound(1.0, 0.5, 1.0, 5).unwrap()
        );
        assert!(matches!(
            ng_upper_bound(1.0, 1.0, 1.0, 3),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn censoring_horizon_is_certified() {
        let a: f64 = 0.2;
        let n = censoring_horizon(a, 1e-3);
        let h = 0.5 * a * a;
        let bound = |m: u64| (-((m + 1) as f64) * h).exp() / (1.0 - (-h).exp());
        assert!(bound(n) < 1e-3);
        assert!(bound(n - 1) >= 1e-3 * 0.999);
    }

    #[test]
    fn mc_shards_are_deterministic() {
        let a = estimate_c_n0(0.7, 3, 20_000, 99).unwrap();
        let b = estimate_c_n0(0.7, 3, 20_000, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.reps, 20_000);
    }
}
