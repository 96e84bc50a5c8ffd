//! Coupled waiting thresholds on a small recovery state machine.
//!
//! States: `Unhealthy`, `PoweringOn`, `HumanInvestigate`, `Ready` (absorbing).
//!
//! * From Unhealthy a node recovers organically (`T1 < tau1`) or is rebooted
//!   into PoweringOn after `tau1`.
//! * From PoweringOn it bounces back to Unhealthy with probability `p` after a
//!   fixed `B` seconds; otherwise it comes up organically (`T2 < tau2`) or is
//!   escalated to HumanInvestigate after `tau2`.
//! * HumanInvestigate reaches Ready after `C_HI` seconds.
//!
//! With `p > 0` the reboot cost depends on `tau1`, so the thresholds must be
//! optimized together; the objective is the Unhealthy hitting time.

use crate::distributions::DistributionParams;
use crate::error::{Error, Result};
use crate::markov::{expected_time_to_absorption, TransitionModel};
use crate::threshold::optimal_threshold;

pub const UNHEALTHY: &str = "Unhealthy";
pub const POWERING_ON: &str = "PoweringOn";
pub const HUMAN_INVESTIGATE: &str = "HumanInvestigate";
pub const READY: &str = "Ready";

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledScenario {
    /// Organic recovery Unhealthy -> Ready.
    pub dist1: DistributionParams,
    /// Organic recovery PoweringOn -> Ready.
    pub dist2: DistributionParams,
    /// Probability of bouncing PoweringOn -> Unhealthy.
    pub p: f64,
    /// Duration of the bounce.
    pub bounce_time: f64,
    /// HumanInvestigate -> Ready.
    pub c_hi: f64,
}

impl CoupledScenario {
    pub fn new(dist1: DistributionParams, dist2: DistributionParams, p: f64, bounce_time: f64, c_hi: f64) -> Result<Self> {
        let s = Self {
            dist1,
            dist2,
            p,
            bounce_time,
            c_hi,
        };
        s.validate()?;
        Ok(s)
    }

    /// Checks `0 <= p < 1`, `B >= 0`, `C_HI >= 0`. A certain bounce (`p = 1`)
    /// means Ready can never be reached through PoweringOn.
    pub fn validate(&self) -> Result<()> {
        if self.p == 1.0 {
            return Err(Error::AbsorbingUnreachable {
                condition: f64::INFINITY,
            });
        }
        if !(0.0..1.0).contains(&self.p) {
            return Err(Error::InvalidParameter {
                name: "p",
                value: self.p,
                reason: "bounce probability must lie in [0, 1)",
            });
        }
        for (name, v) in [("B", self.bounce_time), ("C_HI", self.c_hi)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "must be finite and nonnegative",
                });
            }
        }
        Ok(())
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_nan() || tau < 0.0 {
        Err(Error::Domain { value: tau })
    } else {
        Ok(())
    }
}

/// `(S(tau), F(tau), E[T | T < tau])` for the transition rows.
fn split_at(d: &DistributionParams, tau: f64) -> Result<(f64, f64, f64)> {
    let below = d.cdf(tau)?;
    let mean_below = if below > 0.0 {
        d.conditional_mean_below(tau)?
    } else {
        0.0
    };
    Ok((1.0 - below, below, mean_below))
}

/// Unhealthy / PoweringOn / Ready model for explicit row values.
pub fn two_state_model_from_parts(
    survival: f64,
    mean_below: f64,
    tau: f64,
    p: f64,
    bounce_time: f64,
    c_int: f64,
) -> Result<TransitionModel> {
    TransitionModel::from_rows(
        &[UNHEALTHY, POWERING_ON, READY],
        &[
            vec![0.0, survival, 1.0 - survival],
            vec![p, 0.0, 1.0 - p],
            vec![0.0; 3],
        ],
        &[
            vec![0.0, tau, mean_below],
            vec![bounce_time, 0.0, c_int],
            vec![0.0; 3],
        ],
        READY,
    )
}

/// Two transient states: PoweringOn reaches Ready in `c_int` or bounces.
pub fn build_two_state_model(s: &CoupledScenario, tau: f64, c_int: f64) -> Result<TransitionModel> {
    s.validate()?;
    check_tau(tau)?;
    let (surv, _, mean_below) = split_at(&s.dist1, tau)?;
    two_state_model_from_parts(surv, mean_below, tau, s.p, s.bounce_time, c_int)
}

/// PoweringOn hitting time as a function of the Unhealthy threshold.
pub fn intervention_cost_vs_tau(s: &CoupledScenario, c_int_base: f64, tau_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    s.validate()?;
    let powering_on = 1;
    tau_grid
        .iter()
        .map(|&tau| {
            let m = build_two_state_model(s, tau, c_int_base)?;
            Ok((tau, expected_time_to_absorption(&m)?[powering_on]))
        })
        .collect()
}

pub fn build_four_state_model(s: &CoupledScenario, tau1: f64, tau2: f64) -> Result<TransitionModel> {
    s.validate()?;
    check_tau(tau1)?;
    check_tau(tau2)?;
    let (s1, f1, m1) = split_at(&s.dist1, tau1)?;
    let (s2, f2, m2) = split_at(&s.dist2, tau2)?;
    let q = 1.0 - s.p;
    TransitionModel::from_rows(
        &[UNHEALTHY, POWERING_ON, HUMAN_INVESTIGATE, READY],
        &[
            vec![0.0, s1, 0.0, f1],
            vec![s.p, 0.0, q * s2, q * f2],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![0.0; 4],
        ],
        &[
            vec![0.0, tau1, 0.0, m1],
            vec![s.bounce_time, 0.0, tau2, m2],
            vec![0.0, 0.0, 0.0, s.c_hi],
            vec![0.0; 4],
        ],
        READY,
    )
}

/// Expected Unhealthy -> Ready time under thresholds `(tau1, tau2)`.
pub fn unhealthy_downtime(s: &CoupledScenario, tau1: f64, tau2: f64) -> Result<f64> {
    let m = build_four_state_model(s, tau1, tau2)?;
    Ok(expected_time_to_absorption(&m)?[0])
}

/// Expected PoweringOn -> Ready time under thresholds `(tau1, tau2)`.
pub fn powering_on_cost(s: &CoupledScenario, tau1: f64, tau2: f64) -> Result<f64> {
    let m = build_four_state_model(s, tau1, tau2)?;
    Ok(expected_time_to_absorption(&m)?[1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointOptimum {
    pub tau1: f64,
    pub tau2: f64,
    pub downtime: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub const MAX_ITERATIONS: usize = 20_000;
const REL_STEP: f64 = 1e-5;
const GRADIENT_TOL: f64 = 1e-6;
const STEP_TOL: f64 = 1e-8;
const ARMIJO: f64 = 1e-4;

fn objective(s: &CoupledScenario, x: [f64; 2]) -> f64 {
    match unhealthy_downtime(s, x[0], x[1]) {
        Ok(v) if v.is_finite() => v,
        _ => f64::INFINITY,
    }
}

/// Central differences with step `1e-5 * max(tau, 1)`; one-sided at the
/// `tau = 0` boundary.
pub fn downtime_gradient(s: &CoupledScenario, x: [f64; 2]) -> [f64; 2] {
    let mut g = [0.0; 2];
    for k in 0..2 {
        let h = REL_STEP * x[k].max(1.0);
        let mut hi = x;
        hi[k] += h;
        let mut lo = x;
        if x[k] >= h {
            lo[k] -= h;
            g[k] = (objective(s, hi) - objective(s, lo)) / (2.0 * h);
        } else {
            g[k] = (objective(s, hi) - objective(s, x)) / h;
        }
    }
    g
}

/// Projected descent on `unhealthy_downtime` from `init`.
///
/// Directions come from a BFGS inverse-Hessian estimate built from the
/// finite-difference gradients (the two thresholds usually live on very
/// different scales), followed by a backtracking line search and projection
/// onto `tau >= 0`. The estimate is reset to a scaled identity whenever it
/// stops giving a descent direction or a bound becomes active.
///
/// Converged once the projected gradient's max-norm is below `1e-6` times the
/// current downtime *and* the last step moved each threshold by less than
/// `1e-8 * max(tau, 1)`; the objective is often so flat in `tau` that the
/// gradient test alone stops early. Otherwise the best point so far is
/// returned with `converged = false`.
pub fn joint_optimize(s: &CoupledScenario, init: (f64, f64)) -> Result<JointOptimum> {
    s.validate()?;
    check_tau(init.0)?;
    check_tau(init.1)?;
    let mut x = [init.0, init.1];
    let mut fx = objective(s, x);
    if !fx.is_finite() {
        return Err(Error::InfiniteCost(UNHEALTHY.to_string()));
    }
    let mut g = projected_gradient(s, x);
    let mut h: Option<[[f64; 2]; 2]> = None;
    let mut iterations = 0;
    let mut converged = false;
    let mut last_move = f64::INFINITY;

    while iterations < MAX_ITERATIONS {
        let gmax = g[0].abs().max(g[1].abs());
        let small_gradient = gmax < GRADIENT_TOL * fx;
        if gmax == 0.0 || (small_gradient && last_move < STEP_TOL) {
            converged = small_gradient;
            break;
        }
        iterations += 1;

        let bound_active = (0..2).any(|k| x[k] == 0.0 && g[k] >= 0.0);
        let mut d = match h {
            Some(m) if !bound_active => [-(m[0][0] * g[0] + m[0][1] * g[1]), -(m[1][0] * g[0] + m[1][1] * g[1])],
            _ => {
                // first step moves the larger coordinate by about a tenth of its scale
                let scale = 0.1 * x[0].max(x[1]).max(1.0) / gmax;
                [-scale * g[0], -scale * g[1]]
            }
        };
        if d[0] * g[0] + d[1] * g[1] >= 0.0 {
            let scale = 0.1 * x[0].max(x[1]).max(1.0) / gmax;
            d = [-scale * g[0], -scale * g[1]];
            h = None;
        }

        let mut accepted = None;
        let mut t = 1.0;
        while t > 1e-14 {
            let cand = [(x[0] + t * d[0]).max(0.0), (x[1] + t * d[1]).max(0.0)];
            if cand == x {
                break;
            }
            let fc = objective(s, cand);
            let decrease: f64 = (0..2).map(|k| g[k] * (x[k] - cand[k])).sum();
            if fc <= fx - ARMIJO * decrease {
                accepted = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, fc)) = accepted else {
            if h.is_some() {
                // retry once from a plain gradient step
                h = None;
                continue;
            }
            converged = small_gradient;
            break;
        };

        let gc = projected_gradient(s, cand);
        let sv = [cand[0] - x[0], cand[1] - x[1]];
        let yv = [gc[0] - g[0], gc[1] - g[1]];
        last_move = (0..2).map(|k| sv[k].abs() / x[k].max(1.0)).fold(0.0, f64::max);
        h = bfgs_update(h, sv, yv);
        x = cand;
        fx = fc;
        g = gc;
    }
    Ok(JointOptimum {
        tau1: x[0],
        tau2: x[1],
        downtime: fx,
        iterations,
        converged,
    })
}

/// Gradient with components pointing out through an active `tau = 0` face
/// removed.
fn projected_gradient(s: &CoupledScenario, x: [f64; 2]) -> [f64; 2] {
    let mut g = downtime_gradient(s, x);
    for k in 0..2 {
        if x[k] == 0.0 && g[k] > 0.0 {
            g[k] = 0.0;
        }
    }
    g
}

fn bfgs_update(h: Option<[[f64; 2]; 2]>, s: [f64; 2], y: [f64; 2]) -> Option<[[f64; 2]; 2]> {
    let sy = s[0] * y[0] + s[1] * y[1];
    let yy = y[0] * y[0] + y[1] * y[1];
    let ss = s[0] * s[0] + s[1] * s[1];
    if sy.is_nan() || sy <= 1e-12 * (ss * yy).sqrt() {
        return None;
    }
    let h = h.unwrap_or_else(|| {
        let g = sy / yy;
        [[g, 0.0], [0.0, g]]
    });
    let rho = 1.0 / sy;
    let hy = [h[0][0] * y[0] + h[0][1] * y[1], h[1][0] * y[0] + h[1][1] * y[1]];
    let yhy = y[0] * hy[0] + y[1] * hy[1];
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = h[i][j] - rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
    Some(out)
}

/// Deterministic five-point lattice over `[0, 10 m1] x [0, 10 m2]`, where
/// `m` is each recovery distribution's mean (or time scale if infinite).
pub fn lattice_starts(s: &CoupledScenario) -> Vec<(f64, f64)> {
    let span = |d: &DistributionParams| 10.0 * d.mean().unwrap_or_else(|_| d.time_scale());
    let (a, b) = (span(&s.dist1), span(&s.dist2));
    [(0.5, 0.5), (0.1, 0.1), (0.1, 0.9), (0.9, 0.1), (0.9, 0.9)]
        .iter()
        .map(|&(u, v)| (u * a, v * b))
        .collect()
}

/// Best of [`joint_optimize`] over [`lattice_starts`]; ties go to the
/// lexicographically smallest `(tau1, tau2)`.
pub fn joint_optimize_multistart(s: &CoupledScenario) -> Result<JointOptimum> {
    let mut best: Option<JointOptimum> = None;
    for start in lattice_starts(s) {
        let r = joint_optimize(s, start)?;
        let better = match &best {
            None => true,
            Some(b) => {
                r.downtime < b.downtime
                    || (r.downtime == b.downtime && (r.tau1, r.tau2) < (b.tau1, b.tau2))
            }
        };
        if better {
            best = Some(r);
        }
    }
    best.ok_or_else(|| Error::InvalidModel("no starting points".into()))
}

/// Thresholds optimized one after the other, valid when `p = 0`: `tau2`
/// against `C_HI`, then `tau1` against the resulting reboot cost.
pub fn sequential_thresholds(s: &CoupledScenario) -> Result<(f64, f64)> {
    let second = optimal_threshold(&s.dist2, s.c_hi)?;
    let first = optimal_threshold(&s.dist1, second.edt_at_tau_hat)?;
    Ok((first.tau_hat, second.tau_hat))
}
