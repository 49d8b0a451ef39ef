//! The optimal data-driven policy: a randomization between two consecutive
//! order statistics, found by binary search on the crossing rank followed by
//! bisection on the randomization weight.
//!
//! The solver rests on three structural facts about one-sided worst cases
//! of single order statistics: the left-side sup is strictly increasing in
//! the rank, the right-side sup strictly decreasing, and an optimal mixture
//! must balance the two sides exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bernoulli_regret::{mixture_regret_alpha, worst_case_regret, SideRestriction};
use crate::model::{Policy, ProblemParams};
use crate::numerics::{maximize_scalar, Tolerance, DEFAULT_GRID};
use crate::{Error, Result};

/// Whether an extremal order statistic is already optimal at this `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Degeneracy {
    None,
    /// The minimum sample (rank 1) is optimal.
    ExtremalLow,
    /// The maximum sample (rank n) is optimal.
    ExtremalHigh,
}

/// Solution of the minimax problem at one sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimaxSolution {
    /// Upper rank of the two-point support (`k` and `k-1`), or the extremal
    /// rank when degenerate.
    pub k: usize,
    /// Probability placed on rank `k`.
    pub gamma: f64,
    /// The minimax worst-case relative regret.
    pub optimal_value: f64,
    pub degenerate: Degeneracy,
    /// `|sup_left - sup_right|` achieved by the returned policy.
    pub balance_residual: f64,
}

impl MinimaxSolution {
    /// The policy realizing this solution as a mixture form.
    pub fn policy(&self, n: usize) -> Result<Policy> {
        match self.degenerate {
            Degeneracy::ExtremalLow => Policy::single_os(1, n),
            Degeneracy::ExtremalHigh => Policy::single_os(n, n),
            Degeneracy::None => {
                if n == 1 {
                    Policy::single_os(1, 1)
                } else {
                    Policy::two_point(self.k, self.gamma, n)
                }
            }
        }
    }
}

/// One-sided sup of a single order statistic, in alpha space.
fn os_side_sup(
    rank: usize,
    n: usize,
    q: f64,
    side: SideRestriction,
    tol: &Tolerance,
) -> Result<f64> {
    let policy = Policy::single_os(rank, n)?;
    Ok(worst_case_regret(&policy, &ProblemParams::from_q(q)?, side, tol)?.value)
}

/// Classifies the sample size per the extremal-optimality conditions:
/// rank 1 wins when its left-side worst case dominates its right-side one,
/// rank n when its right-side worst case dominates its left-side one. The
/// two conditions never hold together.
pub fn check_degenerate(n: usize, params: &ProblemParams, tol: &Tolerance) -> Result<Degeneracy> {
    if n == 0 {
        return Err(Error::domain("check_degenerate requires n >= 1"));
    }
    let q = params.q();
    let sl1 = os_side_sup(1, n, q, SideRestriction::Left, tol)?;
    let sr1 = os_side_sup(1, n, q, SideRestriction::Right, tol)?;
    if sl1 > sr1 {
        return Ok(Degeneracy::ExtremalLow);
    }
    let sln = os_side_sup(n, n, q, SideRestriction::Left, tol)?;
    let srn = os_side_sup(n, n, q, SideRestriction::Right, tol)?;
    if sln < srn {
        return Ok(Degeneracy::ExtremalHigh);
    }
    Ok(Degeneracy::None)
}

/// One-sided sup of the two-point mixture `gamma OS_k + (1-gamma) OS_{k-1}`.
///
/// The regret peak has width on the order of `sqrt(q(1-q)/n)`, so the scan
/// grid only needs a few points per peak width; the golden-section step
/// then recovers full precision. This keeps the gamma bisection (dozens of
/// sups per solve) affordable at large `n`.
fn two_point_side_sup(
    k: usize,
    gamma: f64,
    n: usize,
    q: f64,
    side: SideRestriction,
    tol: &Tolerance,
) -> Result<f64> {
    let (lo, hi) = match side {
        SideRestriction::Left => (q, 1.0),
        SideRestriction::Right => (0.0, q),
        SideRestriction::Full => unreachable!("solver always works per side"),
    };
    let grid = (10.0 * (n as f64).sqrt()) as usize;
    let grid = grid.clamp(513, DEFAULT_GRID);
    let policy = Policy::two_point(k, gamma, n)?;
    let f = |alpha: f64| mixture_regret_alpha(&policy, q, alpha);
    Ok(maximize_scalar(f, lo, hi, grid, tol)?.1)
}

/// Solves the minimax problem at sample size `n`.
///
/// Degenerate sizes return the extremal single order statistic. Otherwise
/// the crossing rank `k` is located by binary search on the sign of
/// `sup_right(OS_m) - sup_left(OS_m)` (monotone in `m`), and the weight
/// `gamma` by bisection of the balance function
/// `sup_right(pi^{k,gamma}) - sup_left(pi^{k,gamma})` on `[0, 1]`.
pub fn solve_minimax(n: usize, params: &ProblemParams, tol: &Tolerance) -> Result<MinimaxSolution> {
    if n == 0 {
        return Err(Error::domain("solve_minimax requires n >= 1"));
    }
    let q = params.q();
    let degenerate = check_degenerate(n, params, tol)?;
    match degenerate {
        Degeneracy::ExtremalLow | Degeneracy::ExtremalHigh => {
            let rank = if degenerate == Degeneracy::ExtremalLow {
                1
            } else {
                n
            };
            let left = os_side_sup(rank, n, q, SideRestriction::Left, tol)?;
            let right = os_side_sup(rank, n, q, SideRestriction::Right, tol)?;
            Ok(MinimaxSolution {
                k: rank,
                gamma: 1.0,
                optimal_value: left.max(right),
                degenerate,
                balance_residual: (left - right).abs(),
            })
        }
        Degeneracy::None => {
            if n == 1 {
                // both one-sided sups of the only order statistic tie; the
                // unique mixture policy is already balanced
                let left = os_side_sup(1, 1, q, SideRestriction::Left, tol)?;
                let right = os_side_sup(1, 1, q, SideRestriction::Right, tol)?;
                return Ok(MinimaxSolution {
                    k: 1,
                    gamma: 1.0,
                    optimal_value: left.max(right),
                    degenerate: Degeneracy::ExtremalLow,
                    balance_residual: (left - right).abs(),
                });
            }

            // binary search for the crossing rank
            let imbalance = |m: usize| -> Result<f64> {
                Ok(os_side_sup(m, n, q, SideRestriction::Right, tol)?
                    - os_side_sup(m, n, q, SideRestriction::Left, tol)?)
            };
            let mut j = 1usize;
            let mut k = n;
            while j < k {
                let m = (j + k) / 2;
                if imbalance(m)? >= 0.0 {
                    j = m + 1;
                } else {
                    k = m;
                }
            }

            // gamma = 0 gives OS_{k-1} (imbalance >= 0), gamma = 1 gives
            // OS_k (imbalance <= 0); bisect the monotone balance function
            let balance = |g: f64| -> Result<f64> {
                Ok(two_point_side_sup(k, g, n, q, SideRestriction::Right, tol)?
                    - two_point_side_sup(k, g, n, q, SideRestriction::Left, tol)?)
            };
            let b0 = balance(0.0)?;
            let b1 = balance(1.0)?;
            if b0 < -tol.abs_tol.max(1e-9) || b1 > tol.abs_tol.max(1e-9) {
                return Err(Error::InternalInconsistency(
                    "gamma bracket carries no sign change; rank crossing violated",
                ));
            }
            // ties (sign exactly zero at an endpoint) resolve to that rank alone
            let gamma = if b1 >= 0.0 {
                1.0
            } else if b0 <= 0.0 {
                0.0
            } else {
                let mut lo = 0.0f64;
                let mut hi = 1.0f64;
                let mut g = 0.5;
                for _ in 0..tol.max_iter.min(200) {
                    g = 0.5 * (lo + hi);
                    let b = balance(g)?;
                    if b.abs() <= tol.abs_tol {
                        break;
                    }
                    if b > 0.0 {
                        lo = g;
                    } else {
                        hi = g;
                    }
                    if hi - lo < 1e-15 {
                        break;
                    }
                }
                g
            };
            let left = two_point_side_sup(k, gamma, n, q, SideRestriction::Left, tol)?;
            let right = two_point_side_sup(k, gamma, n, q, SideRestriction::Right, tol)?;
            Ok(MinimaxSolution {
                k,
                gamma,
                optimal_value: left.max(right),
                degenerate: Degeneracy::None,
                balance_residual: (left - right).abs(),
            })
        }
    }
}

/// The convex derandomization: the deterministic level
/// `gamma D_{k:n} + (1-gamma) D_{k-1:n}`, weakly better than the two-point
/// randomization against every distribution and identical against Bernoulli
/// demand.
pub fn derandomize(sol: &MinimaxSolution, n: usize) -> Result<Policy> {
    if sol.degenerate != Degeneracy::None {
        return Err(Error::UnsupportedPolicyForm(
            "degenerate solutions are single order statistics; nothing to derandomize",
        ));
    }
    if n == 1 {
        return Err(Error::UnsupportedPolicyForm(
            "n = 1 admits only the single order statistic",
        ));
    }
    Policy::convex_combination(sol.k, sol.gamma, n)
}

/// One row of the optimal-performance curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalCurvePoint {
    pub n: usize,
    pub k: usize,
    pub gamma: f64,
    pub opt_regret: f64,
    pub degenerate: Degeneracy,
}

/// Solves the minimax problem for every `n = 1..=n_max` in parallel.
pub fn optimal_curve(
    n_max: usize,
    params: &ProblemParams,
    tol: &Tolerance,
) -> Result<Vec<OptimalCurvePoint>> {
    if n_max == 0 {
        return Err(Error::domain("optimal_curve requires n_max >= 1"));
    }
    (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let sol = solve_minimax(n, params, tol)?;
            Ok(OptimalCurvePoint {
                n,
                k: sol.k,
                gamma: sol.gamma,
                opt_regret: sol.optimal_value,
                degenerate: sol.degenerate,
            })
        })
        .collect()
}
