//! Large-sample behavior: the limiting constant `C*`, the `H+`/`H-` limit
//! functionals and convergence diagnostics joining exact finite-sample
//! values with their asymptote.

use serde::{Deserialize, Serialize};

use crate::bernoulli_regret::{saa_policy, worst_case_regret, SideRestriction};
use crate::minimax::solve_minimax;
use crate::model::ProblemParams;
use crate::numerics::{maximize_scalar, std_normal_cdf, Tolerance, DEFAULT_GRID};
use crate::{Error, Result};

/// Beyond this point the Gaussian tail drives `p (1 - Phi(p))` below 1e-15.
const P_SEARCH_UPPER: f64 = 8.0;

/// The asymptotic profile of the optimal regret: `R*_n ~ C*/sqrt(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticProfile {
    /// `C* = max_{p >= 0} p (1 - Phi(p)) / sqrt(q (1-q))`.
    pub c_star: f64,
    /// The maximizer of `p (1 - Phi(p))`.
    pub p_star: f64,
    /// Critical quantile the profile was computed for.
    pub q: f64,
}

impl AsymptoticProfile {
    /// The approximation `C*/sqrt(n)` this profile describes.
    pub fn approximation(&self, n: usize) -> f64 {
        self.c_star / (n as f64).sqrt()
    }
}

/// Computes the limiting constant to 1e-8.
pub fn c_star(params: &ProblemParams, tol: &Tolerance) -> Result<AsymptoticProfile> {
    let refine = Tolerance {
        abs_tol: tol.abs_tol.min(1e-10),
        ..*tol
    };
    let (p_star, max_val) = maximize_scalar(
        |p| p * (1.0 - std_normal_cdf(p)),
        0.0,
        P_SEARCH_UPPER,
        DEFAULT_GRID,
        &refine,
    )?;
    let q = params.q();
    Ok(AsymptoticProfile {
        c_star: max_val / (q * (1.0 - q)).sqrt(),
        p_star,
        q,
    })
}

/// `H+(delta, l) = delta / (q(1-q)) * (1 - Phi((delta - l) / sqrt(q(1-q))))`.
pub fn h_plus(delta: f64, ell: f64, params: &ProblemParams) -> f64 {
    assert!(delta >= 0.0, "h_plus requires delta >= 0");
    let v = params.q() * (1.0 - params.q());
    delta / v * (1.0 - std_normal_cdf((delta - ell) / v.sqrt()))
}

/// `H-(delta, l) = delta / (q(1-q)) * (1 - Phi((delta + l) / sqrt(q(1-q))))`,
/// so `H+(delta, l) = H-(delta, -l)` exactly.
pub fn h_minus(delta: f64, ell: f64, params: &ProblemParams) -> f64 {
    h_plus(delta, -ell, params)
}

/// One convergence-diagnostic row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub n: usize,
    pub sqrtn_saa: f64,
    pub sqrtn_opt: f64,
    pub c_star: f64,
}

/// Joins `sqrt(n)` times the exact SAA and optimal worst cases with the
/// limiting constant, for convergence diagnostics.
pub fn asymptotic_convergence_check(
    params: &ProblemParams,
    n_list: &[usize],
    tol: &Tolerance,
) -> Result<Vec<ConvergencePoint>> {
    if n_list.is_empty() {
        return Err(Error::domain(
            "asymptotic_convergence_check requires sample sizes",
        ));
    }
    let profile = c_star(params, tol)?;
    n_list
        .iter()
        .map(|&n| {
            if n == 0 {
                return Err(Error::domain("sample sizes must be >= 1"));
            }
            let sqrt_n = (n as f64).sqrt();
            let saa = saa_policy(n, params)?;
            let saa_val = worst_case_regret(&saa, params, SideRestriction::Full, tol)?.value;
            let opt_val = solve_minimax(n, params, tol)?.optimal_value;
            Ok(ConvergencePoint {
                n,
                sqrtn_saa: sqrt_n * saa_val,
                sqrtn_opt: sqrt_n * opt_val,
                c_star: profile.c_star,
            })
        })
        .collect()
}
