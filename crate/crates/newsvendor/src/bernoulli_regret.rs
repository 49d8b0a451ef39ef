//! Closed-form relative regret of mixture-of-order-statistics policies
//! against Bernoulli demand, and the worst-case (sup over the mean)
//! evaluator.
//!
//! For a single rank `r` and `alpha = 1 - mu` the regret splits at the
//! critical quantile:
//!
//! ```text
//! R(OS_r, Bernoulli(1 - alpha)) = (q - alpha) B_{r,n}(alpha) / ((1-q) alpha)  for alpha <= q
//!                               = (alpha - q)(1 - B_{r,n}(alpha)) / ((1-alpha) q)  for alpha >= q
//! ```
//!
//! Both branches vanish at `alpha = q` (the Bernoulli mean `1 - q`), and
//! the endpoint 0/0 forms are evaluated by their analytic limits rather
//! than by probing a neighborhood.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{Policy, ProblemParams, RegretEvaluation, Side};
use crate::numerics::{bernstein_tail, maximize_scalar, Tolerance, DEFAULT_GRID};
use crate::{Error, Result};

/// Restricts the worst-case search to one side of the critical mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideRestriction {
    /// Bernoulli means in `[0, 1]`.
    Full,
    /// Means in `[0, 1-q]` (order statistics overshoot).
    Left,
    /// Means in `[1-q, 1]` (order statistics undershoot).
    Right,
}

/// Regret of the single rank `r` at `alpha = 1 - mu`, with analytic
/// endpoint limits.
fn single_os_regret_alpha(rank: usize, n: usize, alpha: f64, q: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&alpha));
    if alpha == 0.0 {
        // mu -> 1: B_{r,n}(alpha)/alpha -> n for r = 1, 0 otherwise
        return if rank == 1 {
            q * n as f64 / (1.0 - q)
        } else {
            0.0
        };
    }
    if alpha == 1.0 {
        // mu -> 0: (1 - B_{r,n}(alpha))/(1-alpha) -> n for r = n, 0 otherwise
        return if rank == n {
            (1.0 - q) * n as f64 / q
        } else {
            0.0
        };
    }
    if alpha == q {
        return 0.0;
    }
    let tail = bernstein_tail(rank, n, alpha).expect("validated rank and alpha");
    if alpha < q {
        (q - alpha) * tail / ((1.0 - q) * alpha)
    } else {
        (alpha - q) * (1.0 - tail) / ((1.0 - alpha) * q)
    }
}

/// Mixture regret at `alpha = 1 - mu`: the weight-linear combination of the
/// single-rank curves.
pub(crate) fn mixture_regret_alpha(policy: &Policy, q: f64, alpha: f64) -> f64 {
    let n = policy.n();
    let mut acc = 0.0;
    for (i, w) in policy.weights().iter().enumerate() {
        if *w > 0.0 {
            acc += w * single_os_regret_alpha(i + 1, n, alpha, q);
        }
    }
    acc
}

/// Relative regret of a mixture-form policy against `Bernoulli(mu)`.
///
/// Returns the continuous-extension limit at `mu` in `{0, 1}` and exactly 0
/// at `mu = 1 - q`. Convex-combination policies are rejected; against
/// Bernoulli demand their regret coincides with the two-point form, so they
/// are routed through that form instead.
pub fn regret_vs_bernoulli(policy: &Policy, params: &ProblemParams, mu: f64) -> Result<f64> {
    if !policy.is_mixture_form() {
        return Err(Error::UnsupportedPolicyForm(
            "convex combination has no mixture-form Bernoulli regret; evaluate its two-point twin",
        ));
    }
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::domain("bernoulli mean must lie in [0, 1]"));
    }
    Ok(mixture_regret_alpha(policy, params.q(), 1.0 - mu))
}

/// Supremum of the Bernoulli regret over one side (or both sides) of the
/// critical mean, via dense-grid scan plus golden-section refinement.
pub fn worst_case_regret(
    policy: &Policy,
    params: &ProblemParams,
    side: SideRestriction,
    tol: &Tolerance,
) -> Result<RegretEvaluation> {
    if !policy.is_mixture_form() {
        return Err(Error::UnsupportedPolicyForm(
            "convex combination has no mixture-form Bernoulli regret; evaluate its two-point twin",
        ));
    }
    let q = params.q();
    match side {
        SideRestriction::Full => {
            let left = one_sided_sup(policy, q, SideRestriction::Left, tol)?;
            let right = one_sided_sup(policy, q, SideRestriction::Right, tol)?;
            // deterministic tie rule: the right side wins ties
            let best = if right.value >= left.value {
                right
            } else {
                left
            };
            Ok(RegretEvaluation {
                side: Side::Global,
                ..best
            })
        }
        s => one_sided_sup(policy, q, s, tol),
    }
}

fn one_sided_sup(
    policy: &Policy,
    q: f64,
    side: SideRestriction,
    tol: &Tolerance,
) -> Result<RegretEvaluation> {
    // mu in [0, 1-q] corresponds to alpha in [q, 1] and vice versa
    let (lo, hi, tag) = match side {
        SideRestriction::Left => (q, 1.0, Side::Left),
        SideRestriction::Right => (0.0, q, Side::Right),
        SideRestriction::Full => unreachable!("handled by caller"),
    };
    let f = |alpha: f64| mixture_regret_alpha(policy, q, alpha);
    let (arg_alpha, value) = maximize_scalar(f, lo, hi, DEFAULT_GRID, tol)?;
    Ok(RegretEvaluation {
        value,
        argmax_mu: 1.0 - arg_alpha,
        side: tag,
    })
}

/// The SAA rank `ceil(q n)`, snapping near-integer products before the
/// ceiling so that e.g. `q n = 36 + 4e-16` does not round up to 37.
pub fn saa_rank(n: usize, q: f64) -> usize {
    let qn = q * n as f64;
    let nearest = qn.round();
    let rank = if (qn - nearest).abs() < 1e-9 {
        nearest
    } else {
        qn.ceil()
    };
    (rank as usize).clamp(1, n)
}

/// The SAA policy: all mass on the `ceil(q n)`-th order statistic.
pub fn saa_policy(n: usize, params: &ProblemParams) -> Result<Policy> {
    if n == 0 {
        return Err(Error::domain("saa_policy requires n >= 1"));
    }
    Policy::saa_with_rank(saa_rank(n, params.q()), n)
}

/// One point of a worst-case regret curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    pub regret: f64,
    pub argmax_mu: f64,
}

/// Worst-case SAA regret for `n = 1..=n_max`, fanned out across samples
/// sizes. Deterministic regardless of the parallel schedule.
pub fn saa_curve(n_max: usize, params: &ProblemParams, tol: &Tolerance) -> Result<Vec<CurvePoint>> {
    if n_max == 0 {
        return Err(Error::domain("saa_curve requires n_max >= 1"));
    }
    (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let policy = saa_policy(n, params)?;
            let eval = worst_case_regret(&policy, params, SideRestriction::Full, tol)?;
            Ok(CurvePoint {
                n,
                regret: eval.value,
                argmax_mu: eval.argmax_mu,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params9() -> ProblemParams {
        ProblemParams::new(9.0, 1.0).unwrap()
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn zero_regret_at_critical_mean() {
        let params = params9();
        let policy = Policy::mixture(vec![0.25, 0.25, 0.25, 0.25]).unwrap();
        assert_eq!(
            regret_vs_bernoulli(&policy, &params, 1.0 - params.q()).unwrap(),
            0.0
        );
    }

    #[test]
    fn first_order_statistic_closed_form() {
        // R(OS_1, B(1 - alpha)) = (q - alpha)(1 - (1-alpha)^n) / ((1-q) alpha)
        let params = ProblemParams::from_q(0.6).unwrap();
        let q = params.q();
        let n = 7;
        let policy = Policy::single_os(1, n).unwrap();
        for alpha in [0.05, 0.2, 0.45, 0.6] {
            let got = regret_vs_bernoulli(&policy, &params, 1.0 - alpha).unwrap();
            let want = if alpha == q {
                0.0
            } else {
                (q - alpha) * (1.0 - (1.0 - alpha).powi(n as i32)) / ((1.0 - q) * alpha)
            };
            assert_close(got, want, 1e-13);
        }
    }

    #[test]
    fn endpoint_limits() {
        let params = params9();
        let q = params.q();
        let n = 12;
        // mu -> 1: only rank 1 keeps a finite positive limit
        let os1 = Policy::single_os(1, n).unwrap();
        assert_close(
            regret_vs_bernoulli(&os1, &params, 1.0).unwrap(),
            q * n as f64 / (1.0 - q),
            1e-12,
        );
        let os2 = Policy::single_os(2, n).unwrap();
        assert_eq!(regret_vs_bernoulli(&os2, &params, 1.0).unwrap(), 0.0);
        // mu -> 0: only rank n survives
        let osn = Policy::single_os(n, n).unwrap();
        assert_close(
            regret_vs_bernoulli(&osn, &params, 0.0).unwrap(),
            (1.0 - q) * n as f64 / q,
            1e-12,
        );
        assert_eq!(regret_vs_bernoulli(&os1, &params, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn convex_combination_rejected() {
        let params = params9();
        let policy = Policy::convex_combination(2, 0.5, 3).unwrap();
        assert!(matches!(
            regret_vs_bernoulli(&policy, &params, 0.5),
            Err(Error::UnsupportedPolicyForm(_))
        ));
    }

    #[test]
    fn saa_rank_examples() {
        assert_eq!(saa_rank(10, 0.9), 9);
        assert_eq!(saa_rank(20, 0.9), 18);
        assert_eq!(saa_rank(7, 0.7), 5);
        assert_eq!(saa_rank(40, 0.9), 36);
        assert_eq!(saa_rank(210, 0.9), 189);
    }

    #[test]
    fn saa_reported_worst_cases() {
        // q = .9: 49.3% at n = 10, 26.8% at n = 20, 8.1% at n = 100
        let params = params9();
        let tol = Tolerance::default();
        for (n, want) in [(10usize, 0.493), (20, 0.268), (100, 0.081)] {
            let policy = saa_policy(n, &params).unwrap();
            let eval = worst_case_regret(&policy, &params, SideRestriction::Full, &tol).unwrap();
            assert_close(eval.value, want, 2e-3);
        }
    }

    #[test]
    fn single_os_worst_case_matches_dense_grid() {
        // 1e6-point grid oracle at (OS_1, n = 2, q = .5)
        let params = ProblemParams::from_q(0.5).unwrap();
        let policy = Policy::single_os(1, 2).unwrap();
        let tol = Tolerance::default();
        let eval = worst_case_regret(&policy, &params, SideRestriction::Full, &tol).unwrap();

        let q = 0.5;
        let mut best = 0.0f64;
        for i in 0..=1_000_000u32 {
            let alpha = i as f64 / 1_000_000.0;
            best = best.max(mixture_regret_alpha(&policy, q, alpha));
        }
        assert_close(eval.value, best, 1e-6);
    }

    #[test]
    fn saa_right_side_sup_matches_dense_grid() {
        // 1e6-point grid oracle for SAA at n = 20, q = .9, means above 1-q
        let params = params9();
        let q = params.q();
        let policy = saa_policy(20, &params).unwrap();
        let tol = Tolerance::default();
        let eval = worst_case_regret(&policy, &params, SideRestriction::Right, &tol).unwrap();

        let mut best = 0.0f64;
        for i in 0..=1_000_000u32 {
            let alpha = q * i as f64 / 1_000_000.0;
            best = best.max(mixture_regret_alpha(&policy, q, alpha));
        }
        assert_close(eval.value, best, 1e-6);
        assert!(eval.value >= best);
    }

    #[test]
    fn saa_curve_matches_pointwise_and_n1_is_os1() {
        let params = params9();
        let tol = Tolerance::default();
        let curve = saa_curve(25, &params, &tol).unwrap();
        assert_eq!(curve.len(), 25);
        let os1 = Policy::single_os(1, 1).unwrap();
        let direct = worst_case_regret(&os1, &params, SideRestriction::Full, &tol).unwrap();
        assert_eq!(curve[0].regret.to_bits(), direct.value.to_bits());
    }

    #[test]
    fn saa_curve_non_monotone_at_q09() {
        let params = params9();
        let tol = Tolerance::default();
        let curve = saa_curve(100, &params, &tol).unwrap();
        let bump = curve.windows(2).any(|w| w[1].regret > w[0].regret + 1e-4);
        assert!(bump, "expected at least one regret increase below n = 100");
    }

    #[test]
    fn rank_monotonicity_on_each_side() {
        // higher ranks hurt left of the critical mean and help right of it
        let params = ProblemParams::from_q(0.7).unwrap();
        let q = params.q();
        let n = 9;
        let tol = Tolerance::default();
        let mut prev_left = f64::NEG_INFINITY;
        let mut prev_right = f64::INFINITY;
        for r in 1..=n {
            let policy = Policy::single_os(r, n).unwrap();
            for mu in [0.05, 0.15, 0.25] {
                let lo_rank = if r > 1 {
                    Some(Policy::single_os(r - 1, n).unwrap())
                } else {
                    None
                };
                if let Some(lo) = lo_rank {
                    let a = regret_vs_bernoulli(&lo, &params, mu).unwrap();
                    let b = regret_vs_bernoulli(&policy, &params, mu).unwrap();
                    assert!(
                        a <= b + 1e-12,
                        "left side rank monotonicity at mu={mu} r={r}"
                    );
                }
            }
            for mu in [0.4, 0.6, 0.9] {
                if r > 1 {
                    let lo = Policy::single_os(r - 1, n).unwrap();
                    let a = regret_vs_bernoulli(&lo, &params, mu).unwrap();
                    let b = regret_vs_bernoulli(&policy, &params, mu).unwrap();
                    assert!(
                        a >= b - 1e-12,
                        "right side rank monotonicity at mu={mu} r={r}"
                    );
                }
            }
            let sl = worst_case_regret(&policy, &params, SideRestriction::Left, &tol).unwrap();
            let sr = worst_case_regret(&policy, &params, SideRestriction::Right, &tol).unwrap();
            assert!(
                sl.value > prev_left,
                "strict one-sided sup increase, rank {r}"
            );
            assert!(
                sr.value < prev_right || r == 1,
                "strict one-sided sup decrease, rank {r}"
            );
            assert!(sl.argmax_mu <= 1.0 - q + 1e-9 && sr.argmax_mu >= 1.0 - q - 1e-9);
            prev_left = sl.value;
            prev_right = sr.value;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn regret_nonnegative_and_linear(
            n in 1usize..50,
            seed in 0u64..1_000_000,
            mu in 0.0f64..=1.0,
            q in 0.1f64..0.9,
        ) {
            // pseudo-random simplex weights from the seed
            let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let mut raw = Vec::with_capacity(n);
            for _ in 0..n {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                raw.push(((state >> 11) as f64 / (1u64 << 53) as f64) + 1e-12);
            }
            let total: f64 = raw.iter().sum();
            let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
            let renorm: f64 = weights.iter().sum();
            let weights: Vec<f64> = weights.iter().map(|w| w / renorm).collect();

            let params = ProblemParams::from_q(q).unwrap();
            let policy = Policy::mixture(weights.clone()).unwrap();
            let r = regret_vs_bernoulli(&policy, &params, mu).unwrap();
            prop_assert!(r >= -1e-12, "regret must be nonnegative, got {r}");

            // mixture linearity against the per-rank decomposition
            let mut linear = 0.0;
            for (i, w) in weights.iter().enumerate() {
                let os = Policy::single_os(i + 1, n).unwrap();
                linear += w * regret_vs_bernoulli(&os, &params, mu).unwrap();
            }
            prop_assert!((r - linear).abs() <= 1e-12 * linear.abs().max(1.0));
        }
    }
}
