use rand::distr::{weighted::WeightedIndex, Bernoulli, Distribution, Uniform};
use rand::Rng;
use rand_distr::{Exp, Normal, Poisson, SkewNormal, StudentT, Weibull};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::open_unit;

/// A marginal or innovation distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum MarginalSpec {
    Normal { mu: f64, sigma: f64 },
    StudentT { nu: f64 },
    Exponential { rate: f64 },
    Uniform { a: f64, b: f64 },
    Poisson { mu: f64 },
    /// Zero with probability `omega`, otherwise Poisson with rate
    /// `mu / (1 - omega)`, so that the overall mean is `mu`.
    Zip { omega: f64, mu: f64 },
    Bernoulli { p: f64 },
    Laplace { mu: f64, b: f64 },
    SkewNormal { xi: f64, omega: f64, alpha: f64 },
    /// Shape `k` and scale `lambda`.
    Weibull { k: f64, lambda: f64 },
    /// Mixture of normals given as `(mu, sigma)` pairs.
    NormalMixture { weights: Vec<f64>, components: Vec<(f64, f64)> },
    /// Product of independent `Bernoulli(p)` and `Poisson(mu)` draws.
    ScaledPoissonProduct { p: f64, mu: f64 },
}

impl MarginalSpec {
    pub const STANDARD_NORMAL: MarginalSpec = MarginalSpec::Normal { mu: 0.0, sigma: 1.0 };

    /// Whether draws are nonnegative integers.
    pub fn is_integer(&self) -> bool {
        matches!(
            self,
            MarginalSpec::Poisson { .. }
                | MarginalSpec::Zip { .. }
                | MarginalSpec::Bernoulli { .. }
                | MarginalSpec::ScaledPoissonProduct { .. }
        )
    }

    pub fn sampler(&self) -> Result<Sampler> {
        let bad = |what: &str| Error::Param(format!("{what}: {self:?}"));
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        Ok(match *self {
            MarginalSpec::Normal { mu, sigma } if finite(&[mu]) && sigma > 0.0 => {
                Sampler::Normal(Normal::new(mu, sigma).map_err(|_| bad("normal"))?)
            }
            MarginalSpec::StudentT { nu } if nu > 0.0 => {
                Sampler::StudentT(StudentT::new(nu).map_err(|_| bad("student t"))?)
            }
            MarginalSpec::Exponential { rate } if rate > 0.0 && rate.is_finite() => {
                Sampler::Exp(Exp::new(rate).map_err(|_| bad("exponential"))?)
            }
            MarginalSpec::Uniform { a, b } if finite(&[a, b]) && a < b => {
                Sampler::Uniform(Uniform::new(a, b).map_err(|_| bad("uniform"))?)
            }
            MarginalSpec::Poisson { mu } if mu > 0.0 && mu.is_finite() => {
                Sampler::Poisson(Poisson::new(mu).map_err(|_| bad("poisson"))?)
            }
            MarginalSpec::Zip { omega, mu } if (0.0..1.0).contains(&omega) && mu > 0.0 => {
                Sampler::Zip {
                    zero: Bernoulli::new(omega).map_err(|_| bad("zip"))?,
                    count: Poisson::new(mu / (1.0 - omega)).map_err(|_| bad("zip"))?,
                }
            }
            MarginalSpec::Bernoulli { p } => {
                Sampler::Bernoulli(Bernoulli::new(p).map_err(|_| bad("bernoulli"))?)
            }
            MarginalSpec::Laplace { mu, b } if mu.is_finite() && b > 0.0 && b.is_finite() => {
                Sampler::Laplace { mu, b }
            }
            MarginalSpec::SkewNormal { xi, omega, alpha } if finite(&[xi, alpha]) && omega > 0.0 => {
                Sampler::SkewNormal(SkewNormal::new(xi, omega, alpha).map_err(|_| bad("skew normal"))?)
            }
            MarginalSpec::Weibull { k, lambda } if k > 0.0 && lambda > 0.0 => {
                Sampler::Weibull(Weibull::new(lambda, k).map_err(|_| bad("weibull"))?)
            }
            MarginalSpec::NormalMixture { ref weights, ref components }
                if !weights.is_empty() && weights.len() == components.len() =>
            {
                let pick = WeightedIndex::new(weights).map_err(|_| bad("mixture weights"))?;
                let comps = components
                    .iter()
                    .map(|&(mu, sigma)| {
                        if mu.is_finite() && sigma > 0.0 {
                            Normal::new(mu, sigma).map_err(|_| bad("mixture component"))
                        } else {
                            Err(bad("mixture component"))
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                Sampler::Mixture { pick, comps }
            }
            MarginalSpec::ScaledPoissonProduct { p, mu } if mu > 0.0 && mu.is_finite() => {
                Sampler::PoissonProduct {
                    on: Bernoulli::new(p).map_err(|_| bad("bernoulli factor"))?,
                    count: Poisson::new(mu).map_err(|_| bad("poisson factor"))?,
                }
            }
            _ => return Err(bad("invalid distribution parameters")),
        })
    }
}

/// A validated, ready-to-draw distribution.
#[derive(Debug, Clone)]
pub enum Sampler {
    Normal(Normal<f64>),
    StudentT(StudentT<f64>),
    Exp(Exp<f64>),
    Uniform(Uniform<f64>),
    Poisson(Poisson<f64>),
    Zip { zero: Bernoulli, count: Poisson<f64> },
    Bernoulli(Bernoulli),
    Laplace { mu: f64, b: f64 },
    SkewNormal(SkewNormal<f64>),
    Weibull(Weibull<f64>),
    Mixture { pick: WeightedIndex<f64>, comps: Vec<Normal<f64>> },
    PoissonProduct { on: Bernoulli, count: Poisson<f64> },
}

impl Sampler {
    pub fn is_integer(&self) -> bool {
        matches!(
            self,
            Sampler::Poisson(_) | Sampler::Zip { .. } | Sampler::Bernoulli(_) | Sampler::PoissonProduct { .. }
        )
    }

    /// One draw as a real number.
    pub fn real<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Normal(d) => d.sample(rng),
            Sampler::StudentT(d) => d.sample(rng),
            Sampler::Exp(d) => d.sample(rng),
            Sampler::Uniform(d) => d.sample(rng),
            Sampler::Laplace { mu, b } => {
                let u = open_unit(rng) - 0.5;
                mu - b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            Sampler::SkewNormal(d) => d.sample(rng),
            Sampler::Weibull(d) => d.sample(rng),
            Sampler::Mixture { pick, comps } => comps[pick.sample(rng)].sample(rng),
            _ => self.count(rng) as f64,
        }
    }

    /// One draw of an integer distribution. Real distributions are truncated
    /// toward zero, so callers should check [`Sampler::is_integer`] first.
    pub fn count<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            Sampler::Poisson(d) => d.sample(rng) as u64,
            Sampler::Zip { zero, count } => {
                if zero.sample(rng) {
                    0
                } else {
                    count.sample(rng) as u64
                }
            }
            Sampler::Bernoulli(d) => d.sample(rng) as u64,
            Sampler::PoissonProduct { on, count } => {
                let on = on.sample(rng);
                let c = count.sample(rng) as u64;
                if on {
                    c
                } else {
                    0
                }
            }
            other => other.real(rng).max(0.0) as u64,
        }
    }
}
