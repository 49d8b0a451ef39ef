//! Instance-independent bounds on SAA performance and minimal-sample-size
//! threshold functionals.
//!
//! The classical tail bound on SAA's relative regret integrates to
//!
//! ```text
//! U(n) = integral over eps >= 0 of min{1, 2 exp(-n eps^2 min(q,1-q) / (18 + 8 eps))}
//! ```
//!
//! The probability bound is capped at 1; without the cap the small-regret
//! region is double counted and the published sample-size tables are not
//! reproducible. The cap boundary is the positive root of a quadratic, so
//! the integral splits into an exact linear piece plus a smooth tail.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bernoulli_regret::{saa_policy, worst_case_regret, SideRestriction};
use crate::minimax::solve_minimax;
use crate::model::ProblemParams;
use crate::numerics::{integrate_adaptive, Tolerance};
use crate::{Error, Result};

/// Performance functional a threshold is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMethod {
    /// Exact worst-case SAA regret.
    ExactSaa,
    /// The instance-independent upper bound `U(n)`.
    LeviUb,
    /// The minimax-optimal regret.
    Optimal,
    /// Monte Carlo confidence-interval threshold for SAA.
    SimSaa,
    /// Monte Carlo confidence-interval threshold for the convexified
    /// minimax policy.
    SimMinimaxCvx,
}

impl std::fmt::Display for ThresholdMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::ExactSaa => "exact-saa",
            Self::LeviUb => "levi-ub",
            Self::Optimal => "optimal",
            Self::SimSaa => "sim-saa",
            Self::SimMinimaxCvx => "sim-minimax-cvx",
        };
        f.write_str(s)
    }
}

/// Minimal sample size achieving a target regret under a named functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub tau: f64,
    pub method: ThresholdMethod,
    /// `None` means the target is not met anywhere below `n_cap`.
    pub n_star: Option<usize>,
    pub n_cap: usize,
    /// Largest sample size the "for all n >= m" quantifier was verified to.
    pub certified_up_to: usize,
}

impl ThresholdResult {
    /// Table cell rendering: the count, or `"<n_cap>+"` when unmet.
    pub fn cell(&self) -> String {
        match self.n_star {
            Some(n) => n.to_string(),
            None => format!("{}+", self.n_cap),
        }
    }
}

/// The instance-independent bound `U(n)` on SAA's worst-case relative
/// regret, to relative accuracy 1e-8.
pub fn levi_bound(n: usize, params: &ProblemParams, tol: &Tolerance) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("levi_bound requires n >= 1"));
    }
    let c = params.q().min(1.0 - params.q());
    let nc = n as f64 * c;
    // cap boundary: n c eps^2 = ln 2 (18 + 8 eps)
    let ln2 = std::f64::consts::LN_2;
    let disc = (8.0 * ln2) * (8.0 * ln2) + 4.0 * nc * 18.0 * ln2;
    let eps0 = (8.0 * ln2 + disc.sqrt()) / (2.0 * nc);
    let quad_tol = Tolerance {
        abs_tol: 1e-14,
        rel_tol: tol.rel_tol.min(1e-9),
        max_iter: tol.max_iter.max(2_000_000),
    };
    let tail = integrate_adaptive(
        |e| 2.0 * (-nc * e * e / (18.0 + 8.0 * e)).exp(),
        eps0,
        f64::INFINITY,
        &quad_tol,
    )?;
    Ok(eps0 + tail)
}

fn suffix_threshold(curve: &[f64], tau: f64) -> Option<usize> {
    // smallest m with curve[j] <= tau for ALL j >= m (1-indexed n)
    let mut m = None;
    let mut running_ok = true;
    for (idx, v) in curve.iter().enumerate().rev() {
        if *v > tau {
            running_ok = false;
        }
        if running_ok {
            m = Some(idx + 1);
        } else {
            break;
        }
    }
    m
}

/// Worst-case regret curves used by the exact threshold scans.
pub fn regret_curve(
    method: ThresholdMethod,
    params: &ProblemParams,
    n_cap: usize,
    tol: &Tolerance,
) -> Result<Vec<f64>> {
    match method {
        ThresholdMethod::ExactSaa => (1..=n_cap)
            .into_par_iter()
            .map(|n| {
                let p = saa_policy(n, params)?;
                Ok(worst_case_regret(&p, params, SideRestriction::Full, tol)?.value)
            })
            .collect(),
        ThresholdMethod::Optimal => (1..=n_cap)
            .into_par_iter()
            .map(|n| Ok(solve_minimax(n, params, tol)?.optimal_value))
            .collect(),
        _ => Err(Error::config(
            "regret_curve supports the exact-saa and optimal methods",
        )),
    }
}

/// Minimal `m` such that the performance functional stays at or below `tau`
/// for every `n` in `[m, n_cap]`.
///
/// `U(n)` is strictly decreasing, so the bound method binary searches the
/// first crossing; the exact curves are non-monotone and are scanned with a
/// suffix maximum to honor the "for all larger n" quantifier.
pub fn threshold(
    tau: f64,
    method: ThresholdMethod,
    params: &ProblemParams,
    n_cap: usize,
    tol: &Tolerance,
) -> Result<ThresholdResult> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::domain("threshold target tau must lie in (0, 1)"));
    }
    if n_cap == 0 {
        return Err(Error::domain("threshold requires n_cap >= 1"));
    }
    match method {
        ThresholdMethod::LeviUb => {
            if levi_bound(n_cap, params, tol)? > tau {
                return Ok(ThresholdResult {
                    tau,
                    method,
                    n_star: None,
                    n_cap,
                    certified_up_to: n_cap,
                });
            }
            let mut lo = 1usize;
            let mut hi = n_cap;
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                if levi_bound(mid, params, tol)? <= tau {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            Ok(ThresholdResult {
                tau,
                method,
                n_star: Some(lo),
                n_cap,
                certified_up_to: n_cap,
            })
        }
        ThresholdMethod::ExactSaa | ThresholdMethod::Optimal => {
            let curve = regret_curve(method, params, n_cap, tol)?;
            Ok(ThresholdResult {
                tau,
                method,
                n_star: suffix_threshold(&curve, tau),
                n_cap,
                certified_up_to: n_cap,
            })
        }
        ThresholdMethod::SimSaa | ThresholdMethod::SimMinimaxCvx => Err(Error::config(
            "simulated thresholds are produced by the simulation module",
        )),
    }
}

/// Default certification horizon: four times the first crossing, with a
/// floor of 1000. The "for all n >= m" quantifier cannot be certified to
/// infinity; the horizon used is reported in `certified_up_to`.
pub fn default_n_cap(first_crossing: usize) -> usize {
    1000usize.max(4 * first_crossing)
}
