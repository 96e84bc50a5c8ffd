//! Synthetic transition logs, policy replay and A/B measurement.
//!
//! Every episode draws from its own ChaCha stream keyed by
//! `(seed, episode_index)`, so results do not depend on evaluation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::joint::{CoupledScenario, HUMAN_INVESTIGATE, POWERING_ON, READY, UNHEALTHY};
use crate::regression::FeatureVector;

/// One logged state change: the node spent `duration` seconds in `from_state`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRecord {
    pub node_id: String,
    pub from_state: String,
    pub to_state: String,
    pub duration: f64,
    pub timestamp: i64,
    pub features: Option<FeatureVector>,
}

impl TransitionRecord {
    pub fn new(node_id: &str, from_state: &str, to_state: &str, duration: f64, timestamp: i64) -> Self {
        Self {
            node_id: node_id.to_string(),
            from_state: from_state.to_string(),
            to_state: to_state.to_string(),
            duration,
            timestamp,
            features: None,
        }
    }

    pub fn with_features(mut self, features: FeatureVector) -> Self {
        self.features = Some(features);
        self
    }
}

/// Random stream for one episode.
pub fn episode_rng(seed: u64, episode: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode);
    rng
}

const MAX_STEPS: usize = 100_000;

/// Walks one episode from Unhealthy to Ready under `(tau1, tau2)`, calling
/// `emit(from, to, duration)` for every transition.
fn walk<R: Rng>(s: &CoupledScenario, policy: (f64, f64), rng: &mut R, mut emit: impl FnMut(&'static str, &'static str, f64)) {
    let (tau1, tau2) = policy;
    let mut state = UNHEALTHY;
    for _ in 0..MAX_STEPS {
        match state {
            UNHEALTHY => {
                let t = s.dist1.sample(rng);
                if t < tau1 {
                    emit(UNHEALTHY, READY, t);
                    return;
                }
                emit(UNHEALTHY, POWERING_ON, tau1);
                state = POWERING_ON;
            }
            POWERING_ON => {
                if s.p > 0.0 && rng.random::<f64>() < s.p {
                    emit(POWERING_ON, UNHEALTHY, s.bounce_time);
                    state = UNHEALTHY;
                    continue;
                }
                let t = s.dist2.sample(rng);
                if t < tau2 {
                    emit(POWERING_ON, READY, t);
                    return;
                }
                emit(POWERING_ON, HUMAN_INVESTIGATE, tau2);
                emit(HUMAN_INVESTIGATE, READY, s.c_hi);
                return;
            }
            _ => unreachable!("walk only visits transient states"),
        }
    }
}

/// Synthetic logs for `n_episodes` nodes that start Unhealthy. Intervened
/// transitions are logged with the threshold as their (censored) duration.
pub fn generate_logs(s: &CoupledScenario, policy: (f64, f64), n_episodes: usize, seed: u64) -> Result<Vec<TransitionRecord>> {
    s.validate()?;
    if n_episodes == 0 {
        return Err(Error::InvalidSamples("n_episodes must be at least 1".into()));
    }
    let mut out = Vec::new();
    let mut clock: i64 = 0;
    for e in 0..n_episodes {
        let node = format!("node-{e}");
        let mut rng = episode_rng(seed, e as u64);
        walk(s, policy, &mut rng, |from, to, d| {
            out.push(TransitionRecord::new(&node, from, to, d, clock));
            clock += 1;
        });
    }
    Ok(out)
}

/// Downtime of each episode, without materializing records.
pub fn simulate_downtimes(s: &CoupledScenario, policy: (f64, f64), n_episodes: usize, seed: u64) -> Result<Vec<f64>> {
    s.validate()?;
    Ok((0..n_episodes)
        .map(|e| {
            let mut rng = episode_rng(seed, e as u64);
            let mut total = 0.0;
            walk(s, policy, &mut rng, |_, _, d| total += d);
            total
        })
        .collect())
}

/// Total time of one episode; it must end in Ready.
pub fn episode_downtime(records: &[TransitionRecord]) -> Result<f64> {
    match records.last() {
        Some(r) if r.to_state == READY => Ok(records.iter().map(|r| r.duration).sum()),
        _ => Err(Error::IncompleteEpisode),
    }
}

/// Splits logs into runs of consecutive records sharing a node id.
pub fn split_episodes(records: &[TransitionRecord]) -> Vec<&[TransitionRecord]> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=records.len() {
        if i == records.len() || records[i].node_id != records[start].node_id {
            if i > start {
                out.push(&records[start..i]);
            }
            start = i;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbResult {
    pub treatment_mean: f64,
    pub control_mean: f64,
    pub treatment_n: usize,
    pub control_n: usize,
    pub t_stat: f64,
    pub p_value: f64,
    pub assignment_prob: f64,
}

/// Randomized comparison of two policies. Each episode flips a coin with
/// `P(treatment) = assignment_prob` and is then replayed under the chosen
/// policy; the groups are compared with Welch's t-test (two-sided).
pub fn ab_experiment(
    s: &CoupledScenario,
    treatment: (f64, f64),
    control: (f64, f64),
    assignment_prob: f64,
    n_episodes: usize,
    seed: u64,
) -> Result<AbResult> {
    s.validate()?;
    if !(assignment_prob > 0.0 && assignment_prob < 1.0) {
        return Err(Error::InvalidParameter {
            name: "assignment_prob",
            value: assignment_prob,
            reason: "must lie strictly between 0 and 1",
        });
    }
    let mut treated = Vec::new();
    let mut controls = Vec::new();
    for e in 0..n_episodes {
        let mut rng = episode_rng(seed, e as u64);
        let in_treatment = rng.random::<f64>() < assignment_prob;
        let policy = if in_treatment { treatment } else { control };
        let mut total = 0.0;
        walk(s, policy, &mut rng, |_, _, d| total += d);
        if in_treatment {
            treated.push(total);
        } else {
            controls.push(total);
        }
    }
    if treated.len() < 2 {
        return Err(Error::InsufficientSample {
            group: "treatment",
            n: treated.len(),
        });
    }
    if controls.len() < 2 {
        return Err(Error::InsufficientSample {
            group: "control",
            n: controls.len(),
        });
    }
    let (t_stat, p_value) = welch_t_test(&treated, &controls)?;
    Ok(AbResult {
        treatment_mean: mean(&treated),
        control_mean: mean(&controls),
        treatment_n: treated.len(),
        control_n: controls.len(),
        t_stat,
        p_value,
        assignment_prob,
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn variance(v: &[f64], m: f64) -> f64 {
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

/// Welch's unequal-variance t-test. Returns `(t, two-sided p)` with
/// Welch-Satterthwaite degrees of freedom.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() < 2 {
        return Err(Error::InsufficientSample { group: "a", n: a.len() });
    }
    if b.len() < 2 {
        return Err(Error::InsufficientSample { group: "b", n: b.len() });
    }
    let (ma, mb) = (mean(a), mean(b));
    let va = variance(a, ma) / a.len() as f64;
    let vb = variance(b, mb) / b.len() as f64;
    let se2 = va + vb;
    if se2 <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (va * va / (a.len() - 1) as f64 + vb * vb / (b.len() - 1) as f64);
    Ok((t, student_t_two_sided(t, df)))
}

/// `P(|T| > |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let x = df / (df + t * t);
    beta_reg(0.5 * df, 0.5, x).clamp(0.0, 1.0)
}
