//! Intervention cost as an expected hitting time of an absorbing Markov chain.
//!
//! `P[i][j]` is the probability that a node in state `i` moves next to `j`
//! and `T[i][j]` the mean time that move takes. With the absorbing state
//! (Ready) removed, `Q` is the transient block of `P` and the expected time to
//! absorption `t` solves
//!
//! ```text
//! (I - Q) t = (P ∘ T) 1
//! ```
//!
//! where `∘` is the elementwise product.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::simulation::TransitionRecord;

const ROW_SUM_TOL: f64 = 1e-9;
const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel {
    states: Vec<String>,
    p: DMatrix<f64>,
    t: DMatrix<f64>,
    absorbing: usize,
}

impl TransitionModel {
    pub fn new(states: Vec<String>, p: DMatrix<f64>, t: DMatrix<f64>, absorbing: usize) -> Result<Self> {
        let n = states.len();
        if p.shape() != (n, n) || t.shape() != (n, n) {
            return Err(Error::InvalidModel(format!(
                "expected {n}x{n} matrices, got P {:?} and T {:?}",
                p.shape(),
                t.shape()
            )));
        }
        if absorbing >= n {
            return Err(Error::InvalidModel(format!("absorbing index {absorbing} out of range")));
        }
        for i in 0..n {
            let row = p.row(i);
            if row.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::InvalidModel(format!("row `{}` of P has entries outside [0, 1]", states[i])));
            }
            if i == absorbing {
                if row.iter().any(|&v| v != 0.0) || t.row(i).iter().any(|&v| v != 0.0) {
                    return Err(Error::InvalidModel(format!(
                        "absorbing state `{}` must have all-zero rows",
                        states[i]
                    )));
                }
                continue;
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidModel(format!(
                    "row `{}` of P sums to {sum}",
                    states[i]
                )));
            }
            for j in 0..n {
                if p[(i, j)] > 0.0 && (t[(i, j)].is_nan() || t[(i, j)] < 0.0) {
                    return Err(Error::InvalidModel(format!(
                        "T[{}][{}] = {} is not a nonnegative time",
                        states[i], states[j], t[(i, j)]
                    )));
                }
            }
        }
        Ok(Self { states, p, t, absorbing })
    }

    /// Convenience constructor from nested rows and an absorbing state name.
    pub fn from_rows(states: &[&str], p: &[Vec<f64>], t: &[Vec<f64>], absorbing: &str) -> Result<Self> {
        let n = states.len();
        let flatten = |rows: &[Vec<f64>]| -> Result<DMatrix<f64>> {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::InvalidModel(format!("expected {n}x{n} rows")));
            }
            Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
        };
        let absorbing_idx = states
            .iter()
            .position(|s| *s == absorbing)
            .ok_or_else(|| Error::UnknownState(absorbing.to_string()))?;
        Self::new(
            states.iter().map(|s| s.to_string()).collect(),
            flatten(p)?,
            flatten(t)?,
            absorbing_idx,
        )
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn probabilities(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn mean_times(&self) -> &DMatrix<f64> {
        &self.t
    }

    pub fn absorbing(&self) -> usize {
        self.absorbing
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::UnknownState(name.to_string()))
    }

    /// Returns a copy with every mean time multiplied by `factor`.
    pub fn scale_times(&self, factor: f64) -> Self {
        Self {
            t: &self.t * factor,
            ..self.clone()
        }
    }

    /// Expected one-step cost `sum_j P[i][j] T[i][j]`, skipping `P = 0` entries.
    fn step_cost(&self, i: usize) -> f64 {
        (0..self.states.len())
            .filter(|&j| self.p[(i, j)] > 0.0)
            .map(|j| self.p[(i, j)] * self.t[(i, j)])
            .sum()
    }
}

/// Empirical transition frequencies and mean durations.
///
/// Transitions leaving the absorbing state (a node starting a new episode)
/// are ignored. Every other listed state must have at least one outgoing
/// transition.
pub fn estimate_transition_model(
    logs: &[TransitionRecord],
    states: &[String],
    absorbing: &str,
) -> Result<TransitionModel> {
    let n = states.len();
    let index: HashMap<&str, usize> = states.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let absorbing_idx = *index
        .get(absorbing)
        .ok_or_else(|| Error::UnknownState(absorbing.to_string()))?;
    let lookup = |name: &str| index.get(name).copied().ok_or_else(|| Error::UnknownState(name.to_string()));

    let mut counts = DMatrix::<f64>::zeros(n, n);
    let mut durations = DMatrix::<f64>::zeros(n, n);
    for r in logs {
        let i = lookup(&r.from_state)?;
        let j = lookup(&r.to_state)?;
        if i == absorbing_idx {
            continue;
        }
        counts[(i, j)] += 1.0;
        durations[(i, j)] += r.duration;
    }

    let mut p = DMatrix::<f64>::zeros(n, n);
    let mut t = DMatrix::<f64>::zeros(n, n);
    for i in (0..n).filter(|&i| i != absorbing_idx) {
        let total: f64 = counts.row(i).iter().sum();
        if total == 0.0 {
            return Err(Error::UnreachableRow(states[i].clone()));
        }
        for j in 0..n {
            if counts[(i, j)] > 0.0 {
                p[(i, j)] = counts[(i, j)] / total;
                t[(i, j)] = durations[(i, j)] / counts[(i, j)];
            }
        }
    }
    TransitionModel::new(states.to_vec(), p, t, absorbing_idx)
}

/// Expected time to reach the absorbing state from every state (the
/// absorbing state itself maps to 0), indexed like [`TransitionModel::states`].
pub fn expected_time_to_absorption(m: &TransitionModel) -> Result<Vec<f64>> {
    let transient: Vec<usize> = (0..m.states.len()).filter(|&i| i != m.absorbing).collect();
    let k = transient.len();
    let mut a = DMatrix::<f64>::identity(k, k);
    let mut b = DVector::<f64>::zeros(k);
    for (r, &i) in transient.iter().enumerate() {
        for (c, &j) in transient.iter().enumerate() {
            a[(r, c)] -= m.p[(i, j)];
        }
        b[r] = m.step_cost(i);
        if !b[r].is_finite() {
            return Err(Error::InfiniteCost(m.states[i].clone()));
        }
    }

    let inverse = a
        .clone()
        .try_inverse()
        .ok_or(Error::AbsorbingUnreachable { condition: f64::INFINITY })?;
    let condition = one_norm(&a) * one_norm(&inverse);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::AbsorbingUnreachable { condition });
    }
    let solution = a
        .lu()
        .solve(&b)
        .ok_or(Error::AbsorbingUnreachable { condition: f64::INFINITY })?;

    let mut times = vec![0.0; m.states.len()];
    for (r, &i) in transient.iter().enumerate() {
        // round-off can leave tiny negatives for zero-cost states
        times[i] = solution[r].max(0.0);
    }
    Ok(times)
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Expected time from `from_state` to the absorbing state.
pub fn intervention_cost(m: &TransitionModel, from_state: &str) -> Result<f64> {
    let i = m.index_of(from_state)?;
    Ok(expected_time_to_absorption(m)?[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(from: &str, to: &str, duration: f64) -> TransitionRecord {
        TransitionRecord::new("n", from, to, duration, 0)
    }

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn loop_model() -> TransitionModel {
        TransitionModel::from_rows(
            &["U", "P", "R"],
            &[vec![0.0, 0.4, 0.6], vec![0.5, 0.0, 0.5], vec![0.0; 3]],
            &[vec![0.0, 5.0, 3.0], vec![2.0, 0.0, 7.0], vec![0.0; 3]],
            "R",
        )
        .unwrap()
    }

    #[test]
    fn estimate_from_hand_counted_logs() {
        let logs = vec![
            record("U", "R", 2.0),
            record("U", "R", 4.0),
            record("U", "R", 6.0),
            record("U", "P", 5.0),
            record("P", "R", 1.0),
        ];
        let m = estimate_transition_model(&logs, &names(&["U", "P", "R"]), "R").unwrap();
        let p = m.probabilities();
        let t = m.mean_times();
        assert_eq!(p[(0, 2)], 0.75);
        assert_eq!(p[(0, 1)], 0.25);
        assert_eq!(t[(0, 2)], 4.0);
        assert_eq!(t[(0, 1)], 5.0);
    }

    #[test]
    fn single_transition() {
        let m = estimate_transition_model(&[record("U", "R", 7.0)], &names(&["U", "R"]), "R").unwrap();
        assert_eq!(m.probabilities()[(0, 1)], 1.0);
        assert_eq!(m.mean_times()[(0, 1)], 7.0);
        assert_eq!(expected_time_to_absorption(&m).unwrap(), vec![7.0, 0.0]);
    }

    #[test]
    fn empty_row_is_an_error() {
        let err = estimate_transition_model(&[record("U", "R", 7.0)], &names(&["U", "P", "R"]), "R").unwrap_err();
        assert_eq!(err, Error::UnreachableRow("P".into()));
        let err = estimate_transition_model(&[record("U", "X", 7.0)], &names(&["U", "R"]), "R").unwrap_err();
        assert_eq!(err, Error::UnknownState("X".into()));
    }

    #[test]
    fn hitting_time_examples() {
        let m = TransitionModel::from_rows(
            &["U", "R"],
            &[vec![0.0, 1.0], vec![0.0, 0.0]],
            &[vec![0.0, 5.0], vec![0.0, 0.0]],
            "R",
        )
        .unwrap();
        assert_eq!(intervention_cost(&m, "U").unwrap(), 5.0);

        let m = TransitionModel::from_rows(
            &["U", "P", "R"],
            &[vec![0.0, 0.4, 0.6], vec![0.0, 0.0, 1.0], vec![0.0; 3]],
            &[vec![0.0, 5.0, 3.0], vec![0.0, 0.0, 7.0], vec![0.0; 3]],
            "R",
        )
        .unwrap();
        let t = expected_time_to_absorption(&m).unwrap();
        assert!((t[1] - 7.0).abs() < 1e-12);
        assert!((t[0] - 6.6).abs() < 1e-12);

        let t = expected_time_to_absorption(&loop_model()).unwrap();
        assert!((t[0] - 7.0).abs() < 1e-12);
        assert!((t[1] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn cost_lookup() {
        let m = loop_model();
        assert!((intervention_cost(&m, "P").unwrap() - 8.0).abs() < 1e-12);
        assert_eq!(intervention_cost(&m, "R").unwrap(), 0.0);
        assert_eq!(intervention_cost(&m, "Z").unwrap_err(), Error::UnknownState("Z".into()));
    }

    #[test]
    fn disconnected_chains_are_independent() {
        let build = |slow: f64| {
            TransitionModel::from_rows(
                &["A", "B", "C", "R"],
                &[
                    vec![0.0, 0.5, 0.0, 0.5],
                    vec![0.0, 0.0, 0.0, 1.0],
                    vec![0.0, 0.0, 0.0, 1.0],
                    vec![0.0; 4],
                ],
                &[
                    vec![0.0, 2.0, 0.0, 4.0],
                    vec![0.0, 0.0, 0.0, 6.0],
                    vec![0.0, 0.0, 0.0, slow],
                    vec![0.0; 4],
                ],
                "R",
            )
            .unwrap()
        };
        let a = expected_time_to_absorption(&build(1.0)).unwrap();
        let b = expected_time_to_absorption(&build(1000.0)).unwrap();
        // block-diagonal oracle: t_B = 6, t_A = 0.5 (2 + 6) + 0.5 * 4
        assert_eq!(a[1], 6.0);
        assert!((a[0] - 6.0).abs() < 1e-12);
        assert_eq!(a[0], b[0]);
        assert_eq!(b[2], 1000.0);
    }

    #[test]
    fn closed_loop_is_unreachable() {
        let m = TransitionModel::from_rows(
            &["U", "P", "R"],
            &[vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0; 3]],
            &[vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0; 3]],
            "R",
        )
        .unwrap();
        assert!(matches!(
            expected_time_to_absorption(&m),
            Err(Error::AbsorbingUnreachable { .. })
        ));
    }

    #[test]
    fn validation() {
        assert!(TransitionModel::from_rows(
            &["U", "R"],
            &[vec![0.0, 0.9], vec![0.0, 0.0]],
            &[vec![0.0, 1.0], vec![0.0, 0.0]],
            "R"
        )
        .is_err());
        assert!(TransitionModel::from_rows(
            &["U", "R"],
            &[vec![0.0, 1.0], vec![1.0, 0.0]],
            &[vec![0.0, 1.0], vec![0.0, 0.0]],
            "R"
        )
        .is_err());
    }

    #[test]
    fn time_scaling_is_linear() {
        let m = loop_model();
        let base = expected_time_to_absorption(&m).unwrap();
        let scaled = expected_time_to_absorption(&m.scale_times(3.5)).unwrap();
        for (a, b) in base.iter().zip(&scaled) {
            assert!((3.5 * a - b).abs() < 1e-12 * b.max(1.0));
        }
    }

    #[test]
    fn one_hop_reduces_to_row_dot_product() {
        let m = TransitionModel::from_rows(
            &["A", "B", "R"],
            &[vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0], vec![0.0; 3]],
            &[vec![0.0, 0.0, 3.0], vec![0.0, 0.0, 9.0], vec![0.0; 3]],
            "R",
        )
        .unwrap();
        assert_eq!(expected_time_to_absorption(&m).unwrap(), vec![3.0, 9.0, 0.0]);
    }
}
