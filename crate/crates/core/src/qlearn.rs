//! Tabular Q-learning: the first-order update with Boltzmann selection and
//! second-order Q-learning (SOQL) with greedy mixed-strategy updates.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::game::ops::argmax_set;
use crate::game::{logit_map, MixedStrategy};
use crate::loglinear::ConstrainedActionMap;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SoqlParams {
    /// Aggregation step μ.
    pub mu: f64,
    /// Greedy mixing step ϑ.
    pub theta: f64,
    /// Perturbation magnitude ξ.
    pub xi: f64,
    /// Perturbation zone threshold ζ on `‖X‖∞`.
    pub zeta: f64,
    /// Boltzmann temperature of the first-order comparator.
    pub tau: f64,
}

impl Default for SoqlParams {
    fn default() -> Self {
        Self { mu: 0.97, theta: 0.5, xi: 0.01, zeta: 0.9999, tau: 1e-3 }
    }
}

impl SoqlParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < self.mu && self.mu < 1.0) {
            return Err(invalid("mu", format!("need 0 < theta < mu < 1, got theta={} mu={}", self.theta, self.mu)));
        }
        if !(self.xi >= 0.0 && self.xi < 1.0) {
            return Err(invalid("xi", "must lie in [0, 1); 0 disables the perturbation"));
        }
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return Err(invalid("zeta", "must lie in (0, 1)"));
        }
        if !(self.tau > 0.0) {
            return Err(invalid("tau", "must be positive"));
        }
        Ok(())
    }
}

/// Per-player aggregates `P`, `Q`, mixed strategies `X` and current actions.
#[derive(Clone, Debug, PartialEq)]
pub struct QState {
    pub p: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub x: Vec<MixedStrategy>,
    pub current: Vec<usize>,
    pub iteration: u64,
}

impl QState {
    /// `P = Q = 0`, `X` uniform.
    pub fn new(action_counts: &[usize], initial: Vec<usize>) -> Self {
        Self {
            p: action_counts.iter().map(|&m| vec![0.0; m]).collect(),
            q: action_counts.iter().map(|&m| vec![0.0; m]).collect(),
            x: action_counts.iter().map(|&m| MixedStrategy::uniform(m)).collect(),
            current: initial,
            iteration: 0,
        }
    }

    pub fn num_players(&self) -> usize {
        self.q.len()
    }
}

/// `Q_β ← Q_β + step·(u − Q_β)` for the played action only.
pub fn standard_q_update(state: &mut QState, player: usize, played: usize, payoff: f64, step: f64) {
    let q = &mut state.q[player][played];
    *q += step * (payoff - *q);
}

pub fn boltzmann_selection(state: &QState, player: usize, tau: f64) -> Result<MixedStrategy> {
    logit_map(&state.q[player], tau)
}

/// `P ← P + μ(u − P)`, `Q ← Q + μ(P_old − Q)` for the played action.
pub fn soql_update(state: &mut QState, player: usize, played: usize, payoff: f64, mu: f64) {
    let p_old = state.p[player][played];
    state.p[player][played] = p_old + mu * (payoff - p_old);
    let q = &mut state.q[player][played];
    *q += mu * (p_old - *q);
}

/// `X ← (1−ϑ)X + ϑ e_{β*}` with `β*` a uniformly chosen maximizer of `Q`.
/// Returns `β*`.
pub fn greedy_strategy_update<R: Rng + ?Sized>(state: &mut QState, player: usize, theta: f64, rng: &mut R) -> usize {
    let best = argmax_set(&state.q[player]);
    let target = best[rng.random_range(0..best.len())];
    mix_toward(&mut state.x[player], target, theta);
    target
}

fn mix_toward(x: &mut MixedStrategy, target: usize, theta: f64) {
    let w = x.weights_mut();
    for v in w.iter_mut() {
        *v *= 1.0 - theta;
    }
    w[target] += theta;
}

/// `(1−μ)^m P₀ + (1 − (1−μ)^m) u`.
pub fn closed_form_p(p0: f64, u: f64, mu: f64, m: u32) -> f64 {
    let r = (1.0 - mu).powi(m as i32);
    r * p0 + (1.0 - r) * u
}

/// Second aggregate after `m` repeated plays, from its values at steps `n`
/// and `n+1`.
pub fn closed_form_q(qn: f64, qn1: f64, u: f64, mu: f64, m: u32) -> f64 {
    let r = 1.0 - mu;
    let mf = m as f64;
    let rm = r.powi(m as i32);
    let rm1 = if m == 0 { 1.0 / r } else { r.powi(m as i32 - 1) };
    mf * rm1 * qn1 - (mf - 1.0) * rm * qn + ((mf - 1.0) * rm - mf * rm1 + 1.0) * u
}

/// Mixed strategy after `m` greedy steps toward a fixed `target`.
pub fn closed_form_strategy(x0: &MixedStrategy, target: usize, theta: f64, m: u32) -> MixedStrategy {
    let r = (1.0 - theta).powi(m as i32);
    let mut w: Vec<f64> = x0.weights().iter().map(|v| r * v).collect();
    w[target] += 1.0 - r;
    MixedStrategy::from_raw(w)
}

/// `ρ = ξ·max(0, (‖X‖∞ − ζ)/(1 − ζ))`.
pub fn perturbation_magnitude(x: &MixedStrategy, xi: f64, zeta: f64) -> f64 {
    xi * ((x.max_norm() - zeta) / (1.0 - zeta)).clamp(0.0, 1.0)
}

/// `X̃ = (1−ρ)X + ρ/|A|`; the identity outside the zone.
pub fn perturb_strategy(x: &MixedStrategy, xi: f64, zeta: f64, zone_entered: bool) -> MixedStrategy {
    if !zone_entered {
        return x.clone();
    }
    let rho = perturbation_magnitude(x, xi, zeta);
    let n = x.len() as f64;
    MixedStrategy::from_raw(x.weights().iter().map(|v| (1.0 - rho) * v + rho / n).collect())
}

/// `μ_j = 1 − X̃_j`.
pub fn adaptive_step(x_tilde: &MixedStrategy, action: usize) -> f64 {
    1.0 - x_tilde[action]
}

/// Samples from `x` restricted to `allowed` and renormalized; uniform over
/// `allowed` if the restriction carries no mass.
pub fn masked_sample<R: Rng + ?Sized>(x: &MixedStrategy, allowed: &[usize], rng: &mut R) -> usize {
    let total: f64 = allowed.iter().map(|&a| x[a]).sum();
    let u = rng.random::<f64>();
    if !(total > 0.0) || !total.is_finite() {
        return allowed[((u * allowed.len() as f64) as usize).min(allowed.len() - 1)];
    }
    let mut acc = 0.0;
    for &a in allowed {
        acc += x[a] / total;
        if u < acc {
            return a;
        }
    }
    *allowed.last().expect("constrained sets are non-empty")
}

/// Diagnostics of one SOQL iteration.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SoqlStep {
    pub payoffs: Vec<f64>,
    /// The player allowed to draw from its perturbed strategy, if any.
    pub token: Option<usize>,
}

/// One SOQL iteration. `payoff` maps the realized joint action to every
/// player's utility. Once every strategy is inside the perturbation zone a
/// single random player draws from its perturbed strategy and updates with
/// the adaptive step; everyone else draws from `X` and uses constant `μ`.
pub fn soql_episode_step<R, F>(
    state: &mut QState,
    params: &SoqlParams,
    constraints: &ConstrainedActionMap,
    payoff: F,
    rng: &mut R,
) -> SoqlStep
where
    R: Rng + ?Sized,
    F: FnOnce(&[usize]) -> Vec<f64>,
{
    let n = state.num_players();
    let all_in_zone = state.x.iter().all(|x| x.max_norm() >= params.zeta);
    let token = all_in_zone.then(|| rng.random_range(0..n));
    let mut perturbed = None;
    let mut joint = Vec::with_capacity(n);
    for i in 0..n {
        let allowed = constraints.reachable(i, state.current[i]);
        let a = if token == Some(i) {
            let xt = perturb_strategy(&state.x[i], params.xi, params.zeta, true);
            let a = masked_sample(&xt, allowed, rng);
            perturbed = Some(xt);
            a
        } else {
            masked_sample(&state.x[i], allowed, rng)
        };
        joint.push(a);
    }
    let payoffs = payoff(&joint);
    for i in 0..n {
        let mu = match (&perturbed, token) {
            (Some(xt), Some(t)) if t == i => adaptive_step(xt, joint[i]),
            _ => params.mu,
        };
        soql_update(state, i, joint[i], payoffs[i], mu);
        greedy_strategy_update(state, i, params.theta, rng);
    }
    state.current = joint;
    state.iteration += 1;
    SoqlStep { payoffs, token }
}

/// One first-order Q-learning iteration: Boltzmann draws over each player's
/// constrained set, then `Q ← Q + μ(u − Q)` on the played action.
pub fn ql_episode_step<R, F>(
    state: &mut QState,
    step: f64,
    tau: f64,
    constraints: &ConstrainedActionMap,
    payoff: F,
    rng: &mut R,
) -> Result<Vec<f64>>
where
    R: Rng + ?Sized,
    F: FnOnce(&[usize]) -> Vec<f64>,
{
    let n = state.num_players();
    let mut joint = Vec::with_capacity(n);
    for i in 0..n {
        let allowed = constraints.reachable(i, state.current[i]);
        let scores: Vec<f64> = allowed.iter().map(|&a| state.q[i][a]).collect();
        let x = logit_map(&scores, tau)?;
        joint.push(allowed[x.sample_with(rng.random::<f64>())]);
    }
    let payoffs = payoff(&joint);
    for i in 0..n {
        standard_q_update(state, i, joint[i], payoffs[i], step);
    }
    state.current = joint;
    state.iteration += 1;
    Ok(payoffs)
}
