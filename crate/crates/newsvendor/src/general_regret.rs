//! Exact expected cost and relative regret of mixture policies against
//! arbitrary demand distributions, through the single-integral cost form
//!
//! ```text
//! C(pi, F, n) = (b+h) * integral of sum_i lambda_i [(1 - B_{i,n}(F(y)))(F(y) - q) + q(1 - F(y))]
//! ```
//!
//! Distributions with a piecewise-constant cdf are summed segment by
//! segment (no quadrature); continuous families go through adaptive
//! quadrature with the semi-infinite window rule for unbounded support.
//! This module also hosts the brute-force falsification harness checking
//! that no finite discrete distribution beats the Bernoulli worst case.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{oracle_cost, DemandDistribution, Policy, ProblemParams};
use crate::numerics::{bernstein_tail, integrate_adaptive, Tolerance};
use crate::{Error, Result};

/// Expected policy cost, oracle cost and their ratio minus one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub policy_cost: f64,
    pub oracle_cost: f64,
    pub relative_regret: f64,
}

/// The cost integrand at a fixed cdf level `t = F(y)`.
fn cost_integrand_at_level(policy: &Policy, q: f64, t: f64) -> f64 {
    let n = policy.n();
    let mut acc = 0.0;
    for (i, w) in policy.weights().iter().enumerate() {
        if *w > 0.0 {
            let tail = bernstein_tail(i + 1, n, t).expect("cdf level in [0,1]");
            acc += w * ((1.0 - tail) * (t - q) + q * (1.0 - t));
        }
    }
    acc
}

fn regret_with_convention(policy_cost: f64, oracle: f64) -> f64 {
    if oracle == 0.0 {
        // point-mass convention: zero cost against a point mass is optimal
        if policy_cost.abs() <= 1e-15 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        policy_cost / oracle - 1.0
    }
}

/// Exact out-of-sample expected cost of a mixture-form policy, with the
/// oracle cost and relative regret.
///
/// Convex combinations are rejected: their cost has no rank-decomposed
/// integral form and is evaluated by simulation only.
pub fn exact_policy_cost(
    policy: &Policy,
    dist: &DemandDistribution,
    params: &ProblemParams,
    tol: &Tolerance,
) -> Result<CostBreakdown> {
    if !policy.is_mixture_form() {
        return Err(Error::UnsupportedPolicyForm(
            "convex combinations have no rank-decomposed cost; use the simulation engine",
        ));
    }
    dist.mean()?; // rejects infinite-mean inputs up front
    let q = params.q();
    let scale = params.cost_scale();

    let policy_cost = match dist {
        DemandDistribution::Bernoulli { mean } => {
            // F = 1 - mean on [0, 1), constant; one segment
            scale * cost_integrand_at_level(policy, q, 1.0 - mean)
        }
        DemandDistribution::DiscreteFinite { points, masses } => {
            let mut acc = 0.0;
            let mut cum = 0.0;
            for i in 0..points.len().saturating_sub(1) {
                cum += masses[i];
                acc += (points[i + 1] - points[i]) * cost_integrand_at_level(policy, q, cum);
            }
            scale * acc
        }
        _ => {
            let integrand = |y: f64| cost_integrand_at_level(policy, q, dist.cdf(y));
            let upper = dist.support_upper().unwrap_or(f64::INFINITY);
            scale * integrate_adaptive(integrand, 0.0, upper, tol)?
        }
    };

    let oracle = oracle_cost(dist, params)?;
    Ok(CostBreakdown {
        policy_cost,
        oracle_cost: oracle,
        relative_regret: regret_with_convention(policy_cost, oracle),
    })
}

/// Number of compositions of `units` into `parts` nonnegative integers.
fn composition_count(units: u64, parts: u64) -> u128 {
    // C(units + parts - 1, parts - 1), saturating well above the guard
    let mut result: u128 = 1;
    let k = (parts - 1) as u128;
    let n = (units as u128) + k;
    for i in 1..=k {
        result = result.saturating_mul(n - k + i) / i;
        if result > u128::MAX / 2 {
            return u128::MAX;
        }
    }
    result
}

const ENUMERATION_GUARD: u128 = 10_000_000;

/// Brute-force search for a discrete distribution beating the Bernoulli
/// worst case: enumerates every probability vector on `support_grid` whose
/// masses are multiples of `mass_step`, evaluates the exact relative regret
/// of `policy` against each, and returns the maximum with its attaining
/// distribution.
///
/// Ties break lexicographically on the mass vector, so the result is
/// deterministic under any parallel schedule.
pub fn bernoulli_dominance_search(
    policy: &Policy,
    params: &ProblemParams,
    support_grid: &[f64],
    mass_step: f64,
) -> Result<(f64, DemandDistribution)> {
    if !policy.is_mixture_form() {
        return Err(Error::UnsupportedPolicyForm(
            "the dominance oracle evaluates mixture forms only",
        ));
    }
    if support_grid.is_empty() || support_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("support grid must be strictly increasing"));
    }
    if support_grid[0] < 0.0 {
        return Err(Error::domain("support grid must be nonnegative"));
    }
    let units_f = 1.0 / mass_step;
    if !(mass_step > 0.0) || (units_f - units_f.round()).abs() > 1e-9 {
        return Err(Error::domain("mass_step must divide 1"));
    }
    let units = units_f.round() as u64;
    let parts = support_grid.len() as u64;
    let count = composition_count(units, parts);
    if count > ENUMERATION_GUARD {
        return Err(Error::CombinatorialExplosion(count));
    }

    let q = params.q();

    // relative regret is invariant to the (b+h) scale, so the tables drop it;
    // the cdf of every candidate only takes lattice values j * mass_step,
    // so the cost and oracle integrands are tabulated once
    let psi: Vec<f64> = (0..=units)
        .map(|j| cost_integrand_at_level(policy, q, j as f64 / units as f64))
        .collect();
    let opt_tab: Vec<f64> = (0..=units)
        .map(|j| {
            let t = j as f64 / units as f64;
            ((1.0 - q) * t).min(q * (1.0 - t))
        })
        .collect();

    let evaluate = |alloc: &[u64]| -> f64 {
        let mut cost = 0.0;
        let mut oracle = 0.0;
        let mut cum = 0u64;
        for i in 0..alloc.len() - 1 {
            cum += alloc[i];
            let seg = support_grid[i + 1] - support_grid[i];
            cost += seg * psi[cum as usize];
            oracle += seg * opt_tab[cum as usize];
        }
        regret_with_convention(cost, oracle)
    };

    // fan out over the first coordinate; each branch enumerates the rest
    // by a mutable odometer
    let best = (0..=units)
        .into_par_iter()
        .map(|first| {
            let mut alloc = vec![0u64; parts as usize];
            alloc[0] = first;
            let mut best_val = f64::NEG_INFINITY;
            let mut best_alloc: Vec<u64> = Vec::new();
            enumerate_rest(&mut alloc, 1, units - first, &mut |alloc| {
                let v = evaluate(alloc);
                if v > best_val || (v == best_val && alloc < best_alloc.as_slice()) {
                    best_val = v;
                    best_alloc = alloc.to_vec();
                }
            });
            (best_val, best_alloc)
        })
        .reduce(
            || (f64::NEG_INFINITY, Vec::new()),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && !b.1.is_empty() && (a.1.is_empty() || b.1 < a.1)) {
                    b
                } else {
                    a
                }
            },
        );

    let (value, alloc) = best;
    let mut points = Vec::new();
    let mut masses = Vec::new();
    for (x, units_here) in support_grid.iter().zip(&alloc) {
        if *units_here > 0 {
            points.push(*x);
            masses.push(*units_here as f64 * mass_step);
        }
    }
    let dist = DemandDistribution::discrete(points, masses)?;
    Ok((value, dist))
}

fn enumerate_rest(alloc: &mut [u64], idx: usize, remaining: u64, visit: &mut impl FnMut(&[u64])) {
    if idx == alloc.len() - 1 {
        alloc[idx] = remaining;
        visit(alloc);
        return;
    }
    for here in 0..=remaining {
        alloc[idx] = here;
        enumerate_rest(alloc, idx + 1, remaining - here, visit);
    }
    alloc[idx] = 0;
}
