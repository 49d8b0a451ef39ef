//! Seeded Monte Carlo estimation of expected relative regret.
//!
//! Each replication draws from its own ChaCha stream keyed by
//! `(seed, replication index)`, so estimates are bit-identical across runs
//! and across any degree of parallelism. All families are sampled by
//! inverse transform, which keeps common random numbers meaningful across
//! policies and sample sizes.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bernoulli_regret::saa_policy;
use crate::bounds::{ThresholdMethod, ThresholdResult};
use crate::minimax::{derandomize, solve_minimax, Degeneracy};
use crate::model::{oracle_cost, DemandDistribution, Policy, ProblemParams};
use crate::numerics::Tolerance;
use crate::{Error, Result};

/// A fully specified simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Replication count `M`.
    pub replications: usize,
    /// Out-of-sample draws `K` per replication.
    pub out_of_sample: usize,
    pub seed: u64,
    pub policy: Policy,
    pub dist: DemandDistribution,
    /// In-sample size; must match the policy's.
    pub n: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 || self.out_of_sample == 0 {
            return Err(Error::config("replications and out_of_sample must be >= 1"));
        }
        if self.n == 0 || self.n != self.policy.n() {
            return Err(Error::config(format!(
                "config n = {} does not match the policy's n = {}",
                self.n,
                self.policy.n()
            )));
        }
        self.dist.validate()
    }
}

/// Replication-protocol knobs shared across a threshold scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimProtocol {
    pub replications: usize,
    pub out_of_sample: usize,
    pub seed: u64,
}

impl Default for SimProtocol {
    fn default() -> Self {
        Self {
            replications: 100_000,
            out_of_sample: 1_000,
            seed: 42,
        }
    }
}

/// Mean relative regret with its replication-level uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub mean_regret: f64,
    pub std_error: f64,
    pub ci95: (f64, f64),
    pub m_used: usize,
    pub k_used: usize,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Per-replication generator: one ChaCha key per seed, one stream per
/// replication index.
fn replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(replication);
    rng
}

/// Uniform in the open interval (0, 1); safe to feed to quantile functions.
fn next_uniform(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// One replication's realized average cost divided by the oracle, minus 1.
fn replication_regret(cfg: &SimConfig, params: &ProblemParams, oracle: f64, m: u64) -> f64 {
    let mut rng = replication_rng(cfg.seed, m);

    let mut samples: Vec<f64> = (0..cfg.n)
        .map(|_| cfg.dist.quantile(next_uniform(&mut rng)))
        .collect();
    samples.sort_by(|a, b| a.partial_cmp(b).expect("demand draws are finite"));

    // the decision draw is consumed by every form so that paired runs of
    // randomized and deterministic policies share out-of-sample streams
    let u_decision = next_uniform(&mut rng);
    let x = cfg.policy.decide(&samples, u_decision);

    let mut cost_sum = 0.0;
    for _ in 0..cfg.out_of_sample {
        let d = cfg.dist.quantile(next_uniform(&mut rng));
        cost_sum += params.cost(x, d);
    }
    let avg_cost = cost_sum / cfg.out_of_sample as f64;
    avg_cost / oracle - 1.0
}

/// Per-replication regrets, in replication order. Exposed for paired
/// (common-random-number) comparisons between policies.
pub fn replication_regrets(cfg: &SimConfig, params: &ProblemParams) -> Result<Vec<f64>> {
    cfg.validate()?;
    let oracle = oracle_cost(&cfg.dist, params)?;
    if oracle <= 0.0 {
        return Err(Error::config(
            "simulation requires opt(F) > 0; point masses have no regret scale",
        ));
    }
    Ok((0..cfg.replications as u64)
        .into_par_iter()
        .map(|m| replication_regret(cfg, params, oracle, m))
        .collect())
}

fn summarize(regrets: &[f64], k_used: usize) -> SimEstimate {
    let m = regrets.len();
    let mean = regrets.iter().sum::<f64>() / m as f64;
    let std_error = if m > 1 {
        let var = regrets.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (m - 1) as f64;
        (var / m as f64).sqrt()
    } else {
        0.0
    };
    SimEstimate {
        mean_regret: mean,
        std_error,
        ci95: (mean - 1.96 * std_error, mean + 1.96 * std_error),
        m_used: m,
        k_used,
    }
}

/// Estimates the expected relative regret of `cfg.policy` against
/// `cfg.dist` by seeded replication.
pub fn simulate_regret(cfg: &SimConfig, params: &ProblemParams) -> Result<SimEstimate> {
    let regrets = replication_regrets(cfg, params)?;
    Ok(summarize(&regrets, cfg.out_of_sample))
}

/// Which policy family a simulated threshold scan builds per sample size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyFamily {
    Saa,
    /// The convexified minimax policy, re-solved at every `n`.
    MinimaxCvx,
}

fn family_policy(family: PolicyFamily, n: usize, params: &ProblemParams) -> Result<Policy> {
    match family {
        PolicyFamily::Saa => saa_policy(n, params),
        PolicyFamily::MinimaxCvx => {
            let tol = Tolerance::default();
            let sol = solve_minimax(n, params, &tol)?;
            if sol.degenerate != Degeneracy::None || n == 1 {
                sol.policy(n)
            } else {
                derandomize(&sol, n)
            }
        }
    }
}

/// Scans sample sizes upward and returns the first `n` whose 95% CI upper
/// bound falls at or below `tau`. The same seed is reused at every `n`
/// (common random numbers across the scan).
pub fn simulate_threshold(
    family: PolicyFamily,
    dist: &DemandDistribution,
    params: &ProblemParams,
    tau: f64,
    protocol: &SimProtocol,
    n_cap: usize,
) -> Result<ThresholdResult> {
    if !(tau > 0.0) {
        return Err(Error::domain("threshold target tau must be positive"));
    }
    if n_cap == 0 {
        return Err(Error::domain("simulate_threshold requires n_cap >= 1"));
    }
    let method = match family {
        PolicyFamily::Saa => ThresholdMethod::SimSaa,
        PolicyFamily::MinimaxCvx => ThresholdMethod::SimMinimaxCvx,
    };
    for n in 1..=n_cap {
        let policy = family_policy(family, n, params)?;
        let cfg = SimConfig {
            replications: protocol.replications,
            out_of_sample: protocol.out_of_sample,
            seed: protocol.seed,
            policy,
            dist: dist.clone(),
            n,
        };
        let est = simulate_regret(&cfg, params)?;
        if est.ci95.1 <= tau {
            return Ok(ThresholdResult {
                tau,
                method,
                n_star: Some(n),
                n_cap,
                certified_up_to: n,
            });
        }
    }
    Err(Error::Horizon { n_cap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::general_regret::exact_policy_cost;

    fn base_cfg(n: usize, params: &ProblemParams) -> SimConfig {
        SimConfig {
            replications: 4_000,
            out_of_sample: 200,
            seed: 7,
            policy: saa_policy(n, params).unwrap(),
            dist: DemandDistribution::Uniform { lo: 0.0, hi: 1.0 },
            n,
        }
    }

    #[test]
    fn validation_errors() {
        let params = ProblemParams::from_q(0.8).unwrap();
        let mut cfg = base_cfg(10, &params);
        cfg.n = 9;
        assert!(matches!(
            simulate_regret(&cfg, &params),
            Err(Error::InvalidConfig(_))
        ));

        let mut cfg = base_cfg(10, &params);
        cfg.replications = 0;
        assert!(simulate_regret(&cfg, &params).is_err());

        let mut cfg = base_cfg(10, &params);
        cfg.dist = DemandDistribution::discrete(vec![3.0], vec![1.0]).unwrap();
        assert!(matches!(
            simulate_regret(&cfg, &params),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn deterministic_across_runs_and_thread_counts() {
        let params = ProblemParams::from_q(0.8).unwrap();
        let cfg = base_cfg(12, &params);
        let a = simulate_regret(&cfg, &params).unwrap();
        let b = simulate_regret(&cfg, &params).unwrap();
        assert_eq!(a.mean_regret.to_bits(), b.mean_regret.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());

        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let c = single.install(|| simulate_regret(&cfg, &params)).unwrap();
        assert_eq!(a.mean_regret.to_bits(), c.mean_regret.to_bits());
    }

    #[test]
    fn single_replication_is_reproducible() {
        let params = ProblemParams::from_q(0.9).unwrap();
        let mut cfg = base_cfg(5, &params);
        cfg.replications = 1;
        cfg.out_of_sample = 1;
        let a = simulate_regret(&cfg, &params).unwrap();
        let b = simulate_regret(&cfg, &params).unwrap();
        assert_eq!(a.mean_regret.to_bits(), b.mean_regret.to_bits());
        assert_eq!(a.std_error, 0.0);
        assert_eq!(a.m_used, 1);
    }

    #[test]
    fn agrees_with_exact_cost_within_noise() {
        let params = ProblemParams::new(9.0, 1.0).unwrap();
        let tol = Tolerance::default();
        for (n, dist) in [
            (8usize, DemandDistribution::Exponential { rate: 1.0 }),
            (15, DemandDistribution::Uniform { lo: 0.0, hi: 2.0 }),
            (20, DemandDistribution::bernoulli(0.13).unwrap()),
        ] {
            let policy = saa_policy(n, &params).unwrap();
            let exact = exact_policy_cost(&policy, &dist, &params, &tol).unwrap();
            let cfg = SimConfig {
                replications: 20_000,
                out_of_sample: 200,
                seed: 99,
                policy,
                dist,
                n,
            };
            let est = simulate_regret(&cfg, &params).unwrap();
            let gap = (est.mean_regret - exact.relative_regret).abs();
            assert!(
                gap <= 4.0 * est.std_error.max(1e-12),
                "n={n}: MC {} vs exact {} (4se = {})",
                est.mean_regret,
                exact.relative_regret,
                4.0 * est.std_error
            );
        }
    }

    #[test]
    fn threshold_trivial_target_crosses_at_once() {
        let params = ProblemParams::from_q(0.8).unwrap();
        let protocol = SimProtocol {
            replications: 2_000,
            out_of_sample: 200,
            seed: 3,
        };
        let r = simulate_threshold(
            PolicyFamily::Saa,
            &DemandDistribution::Uniform { lo: 0.0, hi: 1.0 },
            &params,
            5.0,
            &protocol,
            10,
        )
        .unwrap();
        assert_eq!(r.n_star, Some(1));
        assert_eq!(r.method, ThresholdMethod::SimSaa);
    }

    #[test]
    fn threshold_horizon_error() {
        let params = ProblemParams::from_q(0.9).unwrap();
        let protocol = SimProtocol {
            replications: 500,
            out_of_sample: 50,
            seed: 3,
        };
        let r = simulate_threshold(
            PolicyFamily::Saa,
            &DemandDistribution::Pareto {
                shape: 1.5,
                scale: 1.0,
            },
            &params,
            0.001,
            &protocol,
            3,
        );
        assert!(matches!(r, Err(Error::Horizon { n_cap: 3 })));
    }

    #[test]
    fn paired_seed_convex_dominates_two_point() {
        // derandomization is pointwise convex averaging, so with shared
        // randomness the convex level can only help
        let params = ProblemParams::from_q(0.8).unwrap();
        let tol = Tolerance::default();
        let n = 15;
        let sol = solve_minimax(n, &params, &tol).unwrap();
        let two_point = sol.policy(n).unwrap();
        let cvx = derandomize(&sol, n).unwrap();
        let dist = DemandDistribution::Uniform { lo: 0.0, hi: 1.0 };

        let mk = |policy: Policy| SimConfig {
            replications: 20_000,
            out_of_sample: 100,
            seed: 2024,
            policy,
            dist: dist.clone(),
            n,
        };
        let r_tp = replication_regrets(&mk(two_point), &params).unwrap();
        let r_cx = replication_regrets(&mk(cvx), &params).unwrap();
        let diffs: Vec<f64> = r_cx.iter().zip(&r_tp).map(|(a, b)| a - b).collect();
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let var =
            diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (diffs.len() - 1) as f64;
        let se = (var / diffs.len() as f64).sqrt();
        assert!(
            mean <= 3.0 * se,
            "convex combination must not lose: diff {mean}, se {se}"
        );
    }
}
