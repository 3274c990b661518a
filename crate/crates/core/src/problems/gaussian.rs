//! Synthetic configurations with normally distributed observations.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Beta, Distribution, Normal, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use super::{ProblemInstance, Sampler};
use crate::error::{Error, Result};
use crate::rng::{derive_stream, SimRng};

/// Growth rule for the number of good alternatives `g(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoodSetRule {
    /// `ceil(0.05 k)`
    Linear,
    /// `ceil(0.5 sqrt(k))`
    Sqrt,
}

impl GoodSetRule {
    pub fn g(self, k: usize) -> usize {
        let g = match self {
            GoodSetRule::Linear => (0.05 * k as f64).ceil(),
            GoodSetRule::Sqrt => (0.5 * (k as f64).sqrt()).ceil(),
        } as usize;
        g.max(2).min(k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GaussianKind {
    /// Slippage, common unit variance: `mu = (0.1, 0, ..., 0)`.
    ScCv,
    /// Equally spaced means `-(i-1)/k`, unit variance.
    EmCv,
    /// Equally spaced means, increasing variance `1 + (i-1)/k`.
    EmIv,
    /// Equally spaced means, decreasing variance `2 - (i-1)/k`.
    EmDv,
    /// Means drawn from `N(0, 1)`, variance 9.
    NormalCv,
    /// Means drawn from `Beta(1.5, 2)`, variance 9.
    BetaCv,
    /// `mu_i = -0.1 (i-2)` for `i >= 2`.
    ProgressivelyWorse,
    /// `mu_i = -lambda (i-2) / k` for `i >= 2`.
    BoundedSpread { lambda: f64 },
    /// `g(k)` good alternatives within `delta` of the best, the rest in `(-1, 0)`.
    GoodSetUniform { delta: f64, rule: GoodSetRule },
    /// Slippage with a custom gap and common variance.
    Slippage { gap: f64, variance: f64 },
}

impl fmt::Display for GaussianKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GaussianKind::ScCv => write!(f, "sc-cv"),
            GaussianKind::EmCv => write!(f, "em-cv"),
            GaussianKind::EmIv => write!(f, "em-iv"),
            GaussianKind::EmDv => write!(f, "em-dv"),
            GaussianKind::NormalCv => write!(f, "normal-cv"),
            GaussianKind::BetaCv => write!(f, "beta-cv"),
            GaussianKind::ProgressivelyWorse => write!(f, "progressively-worse"),
            GaussianKind::BoundedSpread { lambda } => write!(f, "bounded-spread:{lambda}"),
            GaussianKind::GoodSetUniform { delta, rule } => {
                let r = match rule {
                    GoodSetRule::Linear => "linear",
                    GoodSetRule::Sqrt => "sqrt",
                };
                write!(f, "good-set:{delta}:{r}")
            }
            GaussianKind::Slippage { gap, variance } => write!(f, "slippage:{gap}:{variance}"),
        }
    }
}

impl FromStr for GaussianKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unknown configuration '{s}'"));
        let num =
            |x: Option<&str>| -> Result<f64> { x.ok_or_else(bad)?.parse().map_err(|_| bad()) };
        let lower = s.to_ascii_lowercase();
        let mut parts = lower.split(':');
        let head = parts.next().unwrap_or("");
        let kind = match head {
            "sc-cv" => GaussianKind::ScCv,
            "em-cv" => GaussianKind::EmCv,
            "em-iv" => GaussianKind::EmIv,
            "em-dv" => GaussianKind::EmDv,
            "normal-cv" => GaussianKind::NormalCv,
            "beta-cv" => GaussianKind::BetaCv,
            "progressively-worse" => GaussianKind::ProgressivelyWorse,
            "bounded-spread" => GaussianKind::BoundedSpread {
                lambda: num(parts.next())?,
            },
            "good-set" => {
                let delta = num(parts.next())?;
                let rule = match parts.next() {
                    Some("linear") => GoodSetRule::Linear,
                    Some("sqrt") => GoodSetRule::Sqrt,
                    _ => return Err(bad()),
                };
                GaussianKind::GoodSetUniform { delta, rule }
            }
            "slippage" => GaussianKind::Slippage {
                gap: num(parts.next())?,
                variance: num(parts.next())?,
            },
            _ => return Err(bad()),
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(kind)
    }
}

/// A synthetic configuration; `seed` drives the random-mean kinds only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianConfig {
    pub kind: GaussianKind,
    pub k: usize,
    pub seed: u64,
}

/// Independent `N(mu_i, sigma_i^2)` observations.
pub struct GaussianSampler {
    means: Vec<f64>,
    sds: Vec<f64>,
}

impl GaussianSampler {
    pub fn new(means: Vec<f64>, variances: &[f64]) -> Self {
        Self {
            means,
            sds: variances.iter().map(|v| v.sqrt()).collect(),
        }
    }
}

impl Sampler for GaussianSampler {
    #[inline]
    fn sample(&self, i: usize, rng: &mut SimRng) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.means[i] + self.sds[i] * z
    }

    /// The sum of `n` normals is itself normal, so one draw suffices.
    #[inline]
    fn sample_sum(&self, i: usize, n: u64, rng: &mut SimRng) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        let nf = n as f64;
        nf * self.means[i] + self.sds[i] * nf.sqrt() * z
    }
}

/// Path index reserved for the mean-landscape stream.
const CONFIG_STREAM: u64 = 0xC0F1_6000;

pub fn make_gaussian(config: &GaussianConfig) -> Result<ProblemInstance> {
    let k = config.k;
    if k < 2 {
        return Err(Error::InvalidParameter(format!("need k >= 2, got {k}")));
    }
    let kf = k as f64;
    let mut rng = derive_stream(config.seed, &[CONFIG_STREAM]).rng();
    let (means, variances): (Vec<f64>, Vec<f64>) = match &config.kind {
        GaussianKind::ScCv => slippage(k, 0.1, 1.0),
        GaussianKind::Slippage { gap, variance } => {
            if !(*variance > 0.0) {
                return Err(Error::InvalidParameter("variance must be > 0".into()));
            }
            slippage(k, *gap, *variance)
        }
        GaussianKind::EmCv | GaussianKind::EmIv | GaussianKind::EmDv => {
            let means = (0..k)
                .map(|i| if i == 0 { 0.1 } else { -(i as f64) / kf })
                .collect();
            let var = (0..k)
                .map(|i| match config.kind {
                    GaussianKind::EmIv => 1.0 + i as f64 / kf,
                    GaussianKind::EmDv => 2.0 - i as f64 / kf,
                    _ => 1.0,
                })
                .collect();
            (means, var)
        }
        GaussianKind::NormalCv => {
            let d = Normal::new(0.0, 1.0).expect("valid normal");
            ((0..k).map(|_| d.sample(&mut rng)).collect(), vec![9.0; k])
        }
        GaussianKind::BetaCv => {
            let d = Beta::new(1.5, 2.0).expect("valid beta");
            ((0..k).map(|_| d.sample(&mut rng)).collect(), vec![9.0; k])
        }
        GaussianKind::ProgressivelyWorse => spread(k, 0.1 * kf),
        GaussianKind::BoundedSpread { lambda } => {
            if !(*lambda >= 0.0) {
                return Err(Error::InvalidParameter("lambda must be >= 0".into()));
            }
            spread(k, *lambda)
        }
        GaussianKind::GoodSetUniform { delta, rule } => {
            if !(*delta > 0.0) {
                return Err(Error::InvalidParameter("delta must be > 0".into()));
            }
            let g = rule.g(k);
            let mu2 = delta - delta / kf;
            let good = Uniform::new(0.0, mu2).expect("valid range");
            let bad = Uniform::new(-1.0, 0.0).expect("valid range");
            let mut m = Vec::with_capacity(k);
            m.push(*delta);
            m.push(mu2);
            for i in 2..k {
                m.push(if i < g {
                    good.sample(&mut rng)
                } else {
                    bad.sample(&mut rng)
                });
            }
            (m, vec![1.0; k])
        }
    };
    let sampler = Arc::new(GaussianSampler::new(means.clone(), &variances));
    ProblemInstance::new(
        format!("{}/k={k}", config.kind),
        means,
        Some(variances),
        sampler,
    )
}

fn slippage(k: usize, gap: f64, variance: f64) -> (Vec<f64>, Vec<f64>) {
    let mut m = vec![0.0; k];
    m[0] = gap;
    (m, vec![variance; k])
}

/// `mu_1 = 0.1` and `mu_i = -lambda (i-2)/k` (1-based) for the rest.
fn spread(k: usize, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let kf = k as f64;
    let m = (0..k)
        .map(|i| {
            if i == 0 {
                0.1
            } else {
                -lambda * (i as f64 - 1.0) / kf
            }
        })
        .collect();
    (m, vec![1.0; k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::good_set;

    fn build(kind: GaussianKind, k: usize) -> ProblemInstance {
        make_gaussian(&GaussianConfig { kind, k, seed: 7 }).unwrap()
    }

    #[test]
    fn sc_cv_small() {
        let p = build(GaussianKind::ScCv, 4);
        assert_eq!(p.true_means, vec![0.1, 0.0, 0.0, 0.0]);
        assert_eq!(p.variances.as_deref(), Some(&[1.0; 4][..]));
        assert_eq!(p.best_set, vec![0]);
    }

    #[test]
    fn em_cv_small() {
        let p = build(GaussianKind::EmCv, 4);
        assert_eq!(p.true_means, vec![0.1, -0.25, -0.5, -0.75]);
        let iv = build(GaussianKind::EmIv, 4);
        assert_eq!(iv.variances.unwrap(), vec![1.0, 1.25, 1.5, 1.75]);
        let dv = build(GaussianKind::EmDv, 4);
        assert_eq!(dv.variances.unwrap(), vec![2.0, 1.75, 1.5, 1.25]);
    }

    #[test]
    fn spread_family() {
        let p = build(GaussianKind::BoundedSpread { lambda: 2.0 }, 4);
        assert_eq!(p.true_means, vec![0.1, 0.0, -0.5, -1.0]);
        let q = build(GaussianKind::ProgressivelyWorse, 5);
        for (a, b) in q.true_means.iter().zip([0.1, 0.0, -0.1, -0.2, -0.3]) {
            assert!((a - b).abs() < 1e-12);
        }
        let zero = build(GaussianKind::BoundedSpread { lambda: 0.0 }, 6);
        assert_eq!(zero.true_means, build(GaussianKind::ScCv, 6).true_means);
    }

    #[test]
    fn good_set_uniform_count() {
        let p = build(
            GaussianKind::GoodSetUniform {
                delta: 0.05,
                rule: GoodSetRule::Sqrt,
            },
            64,
        );
        assert_eq!(good_set(&p, 0.05).unwrap().len(), 4);
        assert_eq!(GoodSetRule::Linear.g(1000), 50);
        assert_eq!(GoodSetRule::Sqrt.g(4), 2);
    }

    #[test]
    fn random_means_fixed_by_seed() {
        let a = build(GaussianKind::NormalCv, 100);
        let b = build(GaussianKind::NormalCv, 100);
        assert_eq!(a.true_means, b.true_means);
        let c = make_gaussian(&GaussianConfig {
            kind: GaussianKind::NormalCv,
            k: 100,
            seed: 8,
        })
        .unwrap();
        assert_ne!(a.true_means, c.true_means);
        let beta = build(GaussianKind::BetaCv, 200);
        assert!(beta.true_means.iter().all(|&m| (0.0..=1.0).contains(&m)));
    }

    #[test]
    fn k_below_two_rejected() {
        assert!(make_gaussian(&GaussianConfig {
            kind: GaussianKind::ScCv,
            k: 1,
            seed: 0
        })
        .is_err());
    }

    #[test]
    fn sum_of_one_matches_single_draw() {
        let s = GaussianSampler::new(vec![0.3, -1.0], &[2.0, 0.5]);
        let mut a = derive_stream(1, &[]).rng();
        let mut b = derive_stream(1, &[]).rng();
        for i in 0..100 {
            assert_eq!(s.sample(i % 2, &mut a), s.sample_sum(i % 2, 1, &mut b));
        }
    }

    #[test]
    fn kind_round_trips_through_text() {
        for kind in [
            GaussianKind::ScCv,
            GaussianKind::BetaCv,
            GaussianKind::BoundedSpread { lambda: 0.2 },
            GaussianKind::GoodSetUniform {
                delta: 0.05,
                rule: GoodSetRule::Linear,
            },
            GaussianKind::Slippage {
                gap: 0.1,
                variance: 0.25,
            },
        ] {
            assert_eq!(kind.to_string().parse::<GaussianKind>().unwrap(), kind);
        }
    }
}
