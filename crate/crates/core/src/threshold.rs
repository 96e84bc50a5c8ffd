//! Expected downtime under a waiting threshold and its minimization.
//!
//! A node that has not recovered after `tau` seconds is intervened on, which
//! costs a further `c_int` seconds on average. The downtime is therefore
//! `T` if `T < tau` and `tau + c_int` otherwise, with expectation
//!
//! ```text
//! E[DT](tau) = integral_0^tau t f(t) dt + S(tau) (tau + c_int)
//! ```
//!
//! Its derivative is `S(tau) (1 - c_int h(tau))`, so interior optima sit where
//! the hazard rate crosses `1 / c_int` from above. The minimizer compares
//! those crossings against the two boundary policies: intervene immediately
//! (`E[DT] = c_int`) and never intervene (`E[DT] = E[T]`).
//!
//! For the Lomax family the crossing is at `tau = kappa c_int - 1 / lambda`.

use crate::distributions::DistributionParams;
use crate::error::{Error, Result};
use crate::optim::{bisect, log_grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCase {
    Interior,
    RebootImmediately,
    NeverReboot,
}

impl BoundaryCase {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryCase::Interior => "Interior",
            BoundaryCase::RebootImmediately => "RebootImmediately",
            BoundaryCase::NeverReboot => "NeverReboot",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    /// Optimal waiting time; `f64::INFINITY` for [`BoundaryCase::NeverReboot`].
    pub tau_hat: f64,
    pub edt_at_tau_hat: f64,
    pub edt_at_zero: f64,
    /// `E[DT]` as `tau -> inf`, i.e. the mean; `None` when the mean is infinite.
    pub edt_limit: Option<f64>,
    pub baseline_tau: f64,
    pub edt_at_baseline: f64,
    pub relative_savings: f64,
    pub boundary_case: BoundaryCase,
    pub c_int: f64,
}

fn check_cost(c_int: f64) -> Result<()> {
    if c_int.is_finite() && c_int > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "c_int",
            value: c_int,
            reason: "intervention cost must be finite and positive",
        })
    }
}

/// `E[DT](tau)`. Returns `+inf` for `tau = inf` when the mean is infinite.
pub fn expected_downtime(d: &DistributionParams, tau: f64, c_int: f64) -> Result<f64> {
    check_cost(c_int)?;
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::Domain { value: tau });
    }
    if tau == 0.0 {
        return Ok(c_int);
    }
    if tau == f64::INFINITY {
        return Ok(d.mean().unwrap_or(f64::INFINITY));
    }
    let s = d.survival_unchecked(tau);
    Ok(d.partial_expectation(tau)? + s * (tau + c_int))
}

/// Same as [`expected_downtime`] but always through quadrature; exposed for
/// cross-checking the closed forms.
pub fn expected_downtime_quadrature(d: &DistributionParams, tau: f64, c_int: f64) -> Result<f64> {
    check_cost(c_int)?;
    if tau == 0.0 {
        return Ok(c_int);
    }
    let s = d.survival_unchecked(tau);
    Ok(d.partial_expectation_quadrature(tau) + s * (tau + c_int))
}

pub const ROOT_SCAN: (f64, f64) = (1e-6, 1e8);
const SCAN_POINTS: usize = 1401;

/// All `tau` in the scan range where the hazard crosses `1 / c_int`
/// downward, i.e. the local minima of `E[DT]`.
pub fn hazard_crossings(d: &DistributionParams, c_int: f64) -> Vec<f64> {
    let g = |tau: f64| c_int * d.hazard_unchecked(tau) - 1.0;
    let grid = log_grid(ROOT_SCAN.0, ROOT_SCAN.1, SCAN_POINTS);
    let values: Vec<f64> = grid.iter().map(|&t| g(t)).collect();
    let mut roots = Vec::new();
    for i in 0..grid.len() - 1 {
        if values[i] > 0.0 && values[i + 1] <= 0.0 {
            roots.push(bisect(g, grid[i], grid[i + 1], 1e-15, 200));
        }
    }
    roots
}

pub fn optimal_threshold(d: &DistributionParams, c_int: f64) -> Result<ThresholdReport> {
    optimal_threshold_with_baseline(d, c_int, 0.0)
}

/// Global minimizer of `E[DT]`, with savings reported against `baseline_tau`.
pub fn optimal_threshold_with_baseline(
    d: &DistributionParams,
    c_int: f64,
    baseline_tau: f64,
) -> Result<ThresholdReport> {
    check_cost(c_int)?;
    let edt_limit = d.mean().ok();

    let mut best = (0.0, c_int, BoundaryCase::RebootImmediately);
    for tau in hazard_crossings(d, c_int) {
        let v = expected_downtime(d, tau, c_int)?;
        if v < best.1 {
            best = (tau, v, BoundaryCase::Interior);
        }
    }
    // A hazard still above 1/c_int at the end of the scan means E[DT] keeps
    // falling; the never-intervene limit is only a candidate with a finite mean.
    if let Some(limit) = edt_limit {
        if limit < best.1 {
            best = (f64::INFINITY, limit, BoundaryCase::NeverReboot);
        }
    }

    let (tau_hat, edt_at_tau_hat, boundary_case) = best;
    let edt_at_baseline = expected_downtime(d, baseline_tau, c_int)?;
    Ok(ThresholdReport {
        tau_hat,
        edt_at_tau_hat,
        edt_at_zero: c_int,
        edt_limit,
        baseline_tau,
        edt_at_baseline,
        relative_savings: savings(edt_at_baseline, edt_at_tau_hat),
        boundary_case,
        c_int,
    })
}

fn savings(baseline: f64, optimum: f64) -> f64 {
    if !baseline.is_finite() || baseline <= 0.0 {
        return 0.0;
    }
    ((baseline - optimum) / baseline).max(0.0)
}

/// Fractional reduction of `E[DT]` when moving from `tau_baseline` to the optimum.
pub fn relative_savings(d: &DistributionParams, c_int: f64, tau_baseline: f64) -> Result<f64> {
    Ok(optimal_threshold_with_baseline(d, c_int, tau_baseline)?.relative_savings)
}

/// `(tau, E[DT](tau))` for each grid point.
pub fn downtime_curve(d: &DistributionParams, c_int: f64, tau_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    tau_grid
        .iter()
        .map(|&tau| Ok((tau, expected_downtime(d, tau, c_int)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::DistributionParams as D;

    #[test]
    fn downtime_examples() {
        for d in [D::lomax(2.0, 0.5).unwrap(), D::weibull(0.7, 50.0).unwrap()] {
            assert_eq!(expected_downtime(&d, 0.0, 10.0).unwrap(), 10.0);
        }
        let d = D::lomax(2.0, 0.5).unwrap();
        assert_eq!(expected_downtime(&d, f64::INFINITY, 3.0).unwrap(), 2.0);
        assert!((expected_downtime(&d, 1e12, 3.0).unwrap() - 2.0).abs() < 1e-9);
        assert!((expected_downtime(&d, 18.0, 10.0).unwrap() - 1.9).abs() < 1e-13);
        assert!((expected_downtime(&d, 10.0, 10.0).unwrap() - 1.944_444_444_444_444_4).abs() < 1e-13);
    }

    #[test]
    fn lomax_interior_optimum() {
        let d = D::lomax(2.0, 0.5).unwrap();
        let r = optimal_threshold(&d, 10.0).unwrap();
        assert_eq!(r.boundary_case, BoundaryCase::Interior);
        assert!((r.tau_hat - 18.0).abs() < 1e-9, "{}", r.tau_hat);
        assert!((r.edt_at_tau_hat - 1.9).abs() < 1e-12);
        assert_eq!(r.edt_at_zero, 10.0);
    }

    #[test]
    fn low_hazard_reboots_immediately() {
        let d = D::lomax(1.0, 1.0).unwrap();
        let r = optimal_threshold(&d, 0.5).unwrap();
        assert_eq!(r.boundary_case, BoundaryCase::RebootImmediately);
        assert_eq!(r.tau_hat, 0.0);
        assert_eq!(r.edt_at_tau_hat, 0.5);
        assert_eq!(r.edt_limit, None);
    }

    #[test]
    fn exponential_is_all_or_nothing() {
        let e = D::exponential(1.0).unwrap();
        let r = optimal_threshold(&e, 10.0).unwrap();
        assert_eq!(r.boundary_case, BoundaryCase::NeverReboot);
        assert_eq!(r.tau_hat, f64::INFINITY);
        assert_eq!(r.edt_at_tau_hat, 1.0);
        let slow = D::exponential(0.01).unwrap();
        let r = optimal_threshold(&slow, 10.0).unwrap();
        assert_eq!(r.boundary_case, BoundaryCase::RebootImmediately);
    }

    #[test]
    fn infinite_mean_never_chooses_never_reboot() {
        // hazard above 1/c_int over the whole scan, but the mean is infinite
        let d = D::log_logistic(0.9, 1e3).unwrap();
        let r = optimal_threshold(&d, 1e9).unwrap();
        assert_ne!(r.boundary_case, BoundaryCase::NeverReboot);
    }

    #[test]
    fn savings_examples() {
        let d = D::lomax(2.0, 0.5).unwrap();
        assert!(relative_savings(&d, 10.0, 18.0).unwrap().abs() < 1e-12);
        let s = relative_savings(&d, 10.0, 10.0).unwrap();
        let oracle = (1.944_444_444_444_444_4 - 1.9) / 1.944_444_444_444_444_4;
        assert!((s - oracle).abs() < 1e-12);
        assert!((s - 0.023).abs() < 5e-4);
        let zero = relative_savings(&d, 10.0, 0.0).unwrap();
        assert!((zero - (10.0 - 1.9) / 10.0).abs() < 1e-12);
    }

    #[test]
    fn curve_examples() {
        let d = D::lomax(2.0, 0.5).unwrap();
        assert_eq!(downtime_curve(&d, 7.0, &[0.0]).unwrap(), vec![(0.0, 7.0)]);
        let grid: Vec<f64> = (0..=400).map(|i| i as f64 * 0.1).collect();
        let curve = downtime_curve(&d, 10.0, &grid).unwrap();
        let argmin = curve.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
        assert!((argmin - 18.0).abs() <= 0.1);
    }

    #[test]
    fn invalid_inputs() {
        let d = D::lomax(2.0, 0.5).unwrap();
        assert!(expected_downtime(&d, -1.0, 10.0).is_err());
        assert!(expected_downtime(&d, 1.0, 0.0).is_err());
    }
}
