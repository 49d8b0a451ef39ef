//! Core domain types: problem parameters, policies and demand distributions.
//!
//! All types are immutable after construction; operations are pure.

use serde::{Deserialize, Serialize};

use crate::numerics::{integrate_adaptive, std_normal_cdf, std_normal_quantile, Tolerance};
use crate::{Error, Result};

/// Underage/overage costs with the derived critical quantile `q = b/(b+h)`.
///
/// The critical quantile is always recomputed from `(b, h)`; it is never
/// stored independently. Relative regret is invariant to scaling `b + h`,
/// so constructing from `q` alone normalizes to `(b, h) = (q, 1-q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    b: f64,
    h: f64,
}

impl ProblemParams {
    pub fn new(b: f64, h: f64) -> Result<Self> {
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::domain("underage cost b must be finite and > 0"));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::domain("overage cost h must be finite and > 0"));
        }
        Ok(Self { b, h })
    }

    pub fn from_q(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::domain(
                "critical quantile q must lie strictly in (0, 1)",
            ));
        }
        Self::new(q, 1.0 - q)
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Critical quantile `q = b/(b+h)`.
    pub fn q(&self) -> f64 {
        self.b / (self.b + self.h)
    }

    pub fn cost_scale(&self) -> f64 {
        self.b + self.h
    }

    /// Single-period cost `c(x, d) = b (d-x)^+ + h (x-d)^+`.
    pub fn cost(&self, x: f64, d: f64) -> f64 {
        self.b * (d - x).max(0.0) + self.h * (x - d).max(0.0)
    }
}

/// Which structural family a [`Policy`] belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyForm {
    /// General mixture over order-statistic ranks.
    Mixture,
    /// All mass on one rank.
    SingleOs { rank: usize },
    /// All mass on the empirical critical quantile rank.
    Saa,
    /// Mass `gamma` on rank `k`, `1 - gamma` on rank `k - 1`.
    TwoPoint { k: usize, gamma: f64 },
    /// Deterministic level `gamma D_{k:n} + (1-gamma) D_{k-1:n}`. The
    /// weights vector mirrors the two-point layout but is not used for
    /// Bernoulli-regret evaluation.
    ConvexCombination { k: usize, gamma: f64 },
}

/// A data-driven policy over `n` samples: a probability vector over
/// order-statistic ranks `1..=n`, plus its structural form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    n: usize,
    weights: Vec<f64>,
    form: PolicyForm,
}

const WEIGHT_SUM_TOL: f64 = 1e-12;

impl Policy {
    pub fn mixture(weights: Vec<f64>) -> Result<Self> {
        let n = weights.len();
        if n == 0 {
            return Err(Error::domain("mixture needs at least one rank"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::domain("mixture weights must be nonnegative"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::domain(format!(
                "mixture weights sum to {sum}, expected 1"
            )));
        }
        Ok(Self {
            n,
            weights,
            form: PolicyForm::Mixture,
        })
    }

    pub fn single_os(rank: usize, n: usize) -> Result<Self> {
        if n == 0 || rank == 0 || rank > n {
            return Err(Error::domain(
                "single order statistic requires 1 <= rank <= n",
            ));
        }
        let mut weights = vec![0.0; n];
        weights[rank - 1] = 1.0;
        Ok(Self {
            n,
            weights,
            form: PolicyForm::SingleOs { rank },
        })
    }

    pub(crate) fn saa_with_rank(rank: usize, n: usize) -> Result<Self> {
        let mut p = Self::single_os(rank, n)?;
        p.form = PolicyForm::Saa;
        Ok(p)
    }

    pub fn two_point(k: usize, gamma: f64, n: usize) -> Result<Self> {
        if n < 2 || k < 2 || k > n {
            return Err(Error::domain("two-point policy requires 2 <= k <= n"));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::domain("two-point weight gamma must lie in [0, 1]"));
        }
        let mut weights = vec![0.0; n];
        weights[k - 1] = gamma;
        weights[k - 2] = 1.0 - gamma;
        Ok(Self {
            n,
            weights,
            form: PolicyForm::TwoPoint { k, gamma },
        })
    }

    pub fn convex_combination(k: usize, gamma: f64, n: usize) -> Result<Self> {
        let mut p = Self::two_point(k, gamma, n)?;
        p.form = PolicyForm::ConvexCombination { k, gamma };
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn form(&self) -> PolicyForm {
        self.form
    }

    /// True for every form whose cost decomposes over order-statistic ranks
    /// (everything except the convex combination).
    pub fn is_mixture_form(&self) -> bool {
        !matches!(self.form, PolicyForm::ConvexCombination { .. })
    }

    /// The prescribed inventory level for sorted samples, consuming `u`
    /// (a uniform draw in `[0,1)`) for the randomization.
    pub fn decide(&self, sorted_samples: &[f64], u: f64) -> f64 {
        debug_assert_eq!(sorted_samples.len(), self.n);
        match self.form {
            PolicyForm::ConvexCombination { k, gamma } => {
                gamma * sorted_samples[k - 1] + (1.0 - gamma) * sorted_samples[k - 2]
            }
            PolicyForm::SingleOs { rank } => sorted_samples[rank - 1],
            _ => {
                let mut acc = 0.0;
                for (i, w) in self.weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        return sorted_samples[i];
                    }
                }
                sorted_samples[self.n - 1]
            }
        }
    }
}

/// Which side of the critical mean `1 - q` a worst case was found on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
    Global,
}

/// A worst-case regret value together with the attaining Bernoulli mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretEvaluation {
    pub value: f64,
    pub argmax_mu: f64,
    pub side: Side,
}

/// Parametric demand families, all supported on `[0, inf)`.
///
/// Serializes as `{"family": "...", "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum DemandDistribution {
    Bernoulli { mean: f64 },
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
    Lognormal { mu_log: f64, sigma_log: f64 },
    Pareto { shape: f64, scale: f64 },
    DiscreteFinite { points: Vec<f64>, masses: Vec<f64> },
}

impl DemandDistribution {
    /// Checks the family invariants. Call after deserializing untrusted
    /// input; the constructors used in code run it implicitly.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Bernoulli { mean } => {
                if !(0.0..=1.0).contains(mean) {
                    return Err(Error::domain("bernoulli mean must lie in [0, 1]"));
                }
            }
            Self::Uniform { lo, hi } => {
                if !(*lo >= 0.0 && hi > lo && hi.is_finite()) {
                    return Err(Error::domain("uniform requires 0 <= lo < hi"));
                }
            }
            Self::Exponential { rate } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    return Err(Error::domain("exponential rate must be > 0"));
                }
            }
            Self::Lognormal { mu_log, sigma_log } => {
                if !mu_log.is_finite() || !(*sigma_log > 0.0 && sigma_log.is_finite()) {
                    return Err(Error::domain(
                        "lognormal requires finite mu_log and sigma_log > 0",
                    ));
                }
            }
            Self::Pareto { shape, scale } => {
                if !(*shape > 0.0 && *scale > 0.0) {
                    return Err(Error::domain("pareto requires shape > 0 and scale > 0"));
                }
            }
            Self::DiscreteFinite { points, masses } => {
                if points.is_empty() || points.len() != masses.len() {
                    return Err(Error::domain("discrete support and masses must align"));
                }
                if points[0] < 0.0 || points.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::domain(
                        "discrete support must be nonnegative and strictly increasing",
                    ));
                }
                if masses.iter().any(|m| *m < 0.0) {
                    return Err(Error::domain("discrete masses must be nonnegative"));
                }
                let s: f64 = masses.iter().sum();
                if (s - 1.0).abs() > 1e-9 {
                    return Err(Error::domain(format!(
                        "discrete masses sum to {s}, expected 1"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn bernoulli(mean: f64) -> Result<Self> {
        let d = Self::Bernoulli { mean };
        d.validate()?;
        Ok(d)
    }

    pub fn discrete(points: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        let d = Self::DiscreteFinite { points, masses };
        d.validate()?;
        Ok(d)
    }

    /// Right-continuous cdf `F(x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Bernoulli { mean } => {
                if x < 0.0 {
                    0.0
                } else if x < 1.0 {
                    1.0 - mean
                } else {
                    1.0
                }
            }
            Self::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Self::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Self::Lognormal { mu_log, sigma_log } => {
                if x <= 0.0 {
                    0.0
                } else {
                    std_normal_cdf((x.ln() - mu_log) / sigma_log)
                }
            }
            Self::Pareto { shape, scale } => {
                if x < *scale {
                    0.0
                } else {
                    1.0 - (scale / x).powf(*shape)
                }
            }
            Self::DiscreteFinite { points, masses } => {
                let mut acc = 0.0;
                for (p, m) in points.iter().zip(masses) {
                    if *p <= x {
                        acc += m;
                    } else {
                        break;
                    }
                }
                acc
            }
        }
    }

    /// Generalized inverse `min{x >= 0 : F(x) >= p}`. Atoms resolve to the
    /// lower support point when `F` hits `p` exactly.
    pub fn quantile(&self, p: f64) -> f64 {
        assert!(p > 0.0 && p < 1.0, "quantile requires p in (0, 1)");
        match self {
            Self::Bernoulli { mean } => {
                if 1.0 - mean >= p {
                    0.0
                } else {
                    1.0
                }
            }
            Self::Uniform { lo, hi } => lo + p * (hi - lo),
            Self::Exponential { rate } => -(-p).ln_1p() / rate,
            Self::Lognormal { mu_log, sigma_log } => {
                (mu_log + sigma_log * std_normal_quantile(p)).exp()
            }
            Self::Pareto { shape, scale } => scale * (1.0 - p).powf(-1.0 / shape),
            Self::DiscreteFinite { points, masses } => {
                let mut acc = 0.0;
                for (x, m) in points.iter().zip(masses) {
                    acc += m;
                    if acc >= p {
                        return *x;
                    }
                }
                *points.last().expect("validated nonempty support")
            }
        }
    }

    /// Mean of the distribution; errors when the first moment diverges.
    pub fn mean(&self) -> Result<f64> {
        match self {
            Self::Bernoulli { mean } => Ok(*mean),
            Self::Uniform { lo, hi } => Ok(0.5 * (lo + hi)),
            Self::Exponential { rate } => Ok(1.0 / rate),
            Self::Lognormal { mu_log, sigma_log } => {
                Ok((mu_log + 0.5 * sigma_log * sigma_log).exp())
            }
            Self::Pareto { shape, scale } => {
                if *shape <= 1.0 {
                    Err(Error::Divergence("pareto mean requires shape > 1"))
                } else {
                    Ok(shape * scale / (shape - 1.0))
                }
            }
            Self::DiscreteFinite { points, masses } => {
                Ok(points.iter().zip(masses).map(|(x, m)| x * m).sum())
            }
        }
    }

    /// Upper endpoint of the support, if bounded.
    pub(crate) fn support_upper(&self) -> Option<f64> {
        match self {
            Self::Bernoulli { .. } => Some(1.0),
            Self::Uniform { hi, .. } => Some(*hi),
            Self::DiscreteFinite { points, .. } => points.last().copied(),
            _ => None,
        }
    }
}

/// Oracle cost `opt(F)`: the full-information expected newsvendor cost at
/// the critical quantile, equal to
/// `(b+h) * integral of min{(1-q) F(y), q (1-F(y))}`.
///
/// Closed forms cover Bernoulli, uniform and exponential demand; discrete
/// distributions sum the piecewise-constant integrand exactly; the heavier
/// families fall back to adaptive quadrature.
pub fn oracle_cost(dist: &DemandDistribution, params: &ProblemParams) -> Result<f64> {
    let q = params.q();
    let scale = params.cost_scale();
    match dist {
        DemandDistribution::Bernoulli { mean } => {
            Ok(scale * ((1.0 - q) * (1.0 - mean)).min(q * mean))
        }
        DemandDistribution::Uniform { lo, hi } => Ok(scale * (hi - lo) * q * (1.0 - q) * 0.5),
        DemandDistribution::Exponential { rate } => {
            let x_star = -(1.0 - q).ln() / rate;
            Ok(scale * (1.0 - q) * x_star)
        }
        DemandDistribution::DiscreteFinite { points, masses } => {
            let mut acc = 0.0;
            let mut cum = 0.0;
            for i in 0..points.len() - 1 {
                cum += masses[i];
                acc += (points[i + 1] - points[i]) * ((1.0 - q) * cum).min(q * (1.0 - cum));
            }
            Ok(scale * acc)
        }
        DemandDistribution::Lognormal { .. } | DemandDistribution::Pareto { .. } => {
            dist.mean()?; // surfaces the divergence error for heavy tails
            let tol = Tolerance {
                abs_tol: 1e-13,
                rel_tol: 1e-11,
                max_iter: 4_000_000,
            };
            let integrand = |y: f64| {
                let f = dist.cdf(y);
                ((1.0 - q) * f).min(q * (1.0 - f))
            };
            Ok(scale * integrate_adaptive(integrand, 0.0, f64::INFINITY, &tol)?)
        }
    }
}
