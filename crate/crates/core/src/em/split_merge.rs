//! Split and merge moves with partial EM, and the AIC-driven model
//! selection loop built on them.

use rand::Rng;

use super::{
    aic, clamp_covariance, em_iterate, moments, points, principal_axis, AicState, EmOptions, GmmEstimate,
    ObservationLog,
};
use crate::error::{invalid, Error, Result};
use crate::field::GaussianComponent;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelectionOptions {
    /// Full EM run on every candidate after a split or merge.
    pub em: EmOptions,
    /// Partial-EM passes over the split or merged components.
    pub partial_iterations: usize,
    pub aic_tau: f64,
    /// Consecutive rejected proposals that end the search.
    pub patience: usize,
    pub max_rounds: usize,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        Self {
            em: EmOptions { iterations: 200, ..EmOptions::default() },
            partial_iterations: 50,
            aic_tau: 1e-3,
            patience: 6,
            max_rounds: 40,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SelectionTrace {
    /// Component count after each round.
    pub counts: Vec<usize>,
    pub aic: Vec<f64>,
}

/// Pair with the largest `J_merge = P_jᵀ P_j'`, the responsibility vectors
/// weighted by cell counts.
pub fn merge_select(estimate: &GmmEstimate, log: &ObservationLog) -> Option<(usize, usize)> {
    let m = estimate.num_components();
    if m < 2 {
        return None;
    }
    let resp = estimate.responsibilities(log);
    let mut best = (f64::NEG_INFINITY, (0, 1));
    for j in 0..m {
        for k in j + 1..m {
            let score: f64 = resp.iter().zip(log.unique()).map(|(r, (_, w))| w * r[j] * r[k]).sum();
            if score > best.0 {
                best = (score, (j, k));
            }
        }
    }
    Some(best.1)
}

/// Merges components `j` and `k` into one that takes their combined weight;
/// the remaining components are untouched.
pub fn merge_components(
    estimate: &GmmEstimate,
    log: &ObservationLog,
    pair: (usize, usize),
    opts: &EmOptions,
) -> Result<GmmEstimate> {
    let (j, k) = (pair.0.min(pair.1), pair.0.max(pair.1));
    let m = estimate.num_components();
    if j == k || k >= m {
        return Err(invalid("pair", format!("cannot merge {j} and {k} of {m} components")));
    }
    let (a, b) = (&estimate.components[j], &estimate.components[k]);
    let weight = a.weight + b.weight;
    let pts = points(log);
    // With the other components fixed, the merged responsibility is the sum
    // of the pair's; one M-step is already the partial-EM fixed point.
    let resp = estimate.responsibilities(log);
    let (n, mean, cov) = moments(&pts, |t| resp[t][j] + resp[t][k]);
    let merged = if n > 0.0 {
        GaussianComponent { weight, mean, cov: clamp_covariance(cov, opts.cov_floor) }
    } else {
        let mix = |x: f64, y: f64| (a.weight * x + b.weight * y) / weight;
        GaussianComponent {
            weight,
            mean: [mix(a.mean[0], b.mean[0]), mix(a.mean[1], b.mean[1])],
            cov: clamp_covariance(
                [
                    [mix(a.cov[0][0], b.cov[0][0]), mix(a.cov[0][1], b.cov[0][1])],
                    [mix(a.cov[1][0], b.cov[1][0]), mix(a.cov[1][1], b.cov[1][1])],
                ],
                opts.cov_floor,
            ),
        }
    };
    let mut out = estimate.clone();
    out.components[j] = merged;
    out.components.remove(k);
    out.starved.remove(k);
    out.starved[j] = false;
    Ok(out)
}

/// `J_split(k)`: divergence between the responsibility-weighted empirical
/// distribution of each component and its own Gaussian, per cell.
pub fn split_score(estimate: &GmmEstimate, log: &ObservationLog) -> Vec<f64> {
    let resp = estimate.responsibilities(log);
    (0..estimate.num_components())
        .map(|k| {
            let comp = &estimate.components[k];
            let mass: f64 = resp.iter().zip(log.unique()).map(|(r, (_, w))| w * r[k]).sum();
            if mass <= 0.0 {
                return 0.0;
            }
            resp.iter()
                .zip(log.unique())
                .map(|(r, (c, w))| {
                    let p = w * r[k] / mass;
                    if p > 0.0 {
                        p * (p.ln() - comp.log_density(c.centroid()))
                    } else {
                        0.0
                    }
                })
                .sum()
        })
        .collect()
}

pub fn split_select(estimate: &GmmEstimate, log: &ObservationLog) -> Option<usize> {
    split_score(estimate, log)
        .into_iter()
        .enumerate()
        .filter(|(_, s)| s.is_finite())
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, _)| k)
}

/// Replaces component `k` by two children fitted by partial EM inside the
/// parent's responsibility mass. The children share the parent's weight.
pub fn split_component(
    estimate: &GmmEstimate,
    log: &ObservationLog,
    k: usize,
    opts: &EmOptions,
    partial_iterations: usize,
) -> Result<GmmEstimate> {
    let parent = *estimate.components.get(k).ok_or_else(|| invalid("component", format!("{k} out of range")))?;
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    let axis = principal_axis(&parent.cov);
    let offset = 0.005 * (log.grid() as f64) * std::f64::consts::SQRT_2;
    let s = parent.det().max(0.0).sqrt().max(opts.cov_floor);
    let child = |sign: f64| GaussianComponent {
        weight: parent.weight / 2.0,
        mean: [parent.mean[0] + sign * offset * axis[0], parent.mean[1] + sign * offset * axis[1]],
        cov: [[s, 0.0], [0.0, s]],
    };
    let mut kids = [child(1.0), child(-1.0)];
    let pts = points(log);
    let outer: Vec<f64> = estimate.responsibilities(log).iter().map(|r| r[k]).collect();

    for _ in 0..partial_iterations {
        let inner: Vec<[f64; 2]> = pts
            .iter()
            .map(|(p, _)| {
                let l = [kids[0].weight.ln() + kids[0].log_density(*p), kids[1].weight.ln() + kids[1].log_density(*p)];
                let mx = l[0].max(l[1]);
                if mx == f64::NEG_INFINITY {
                    return [0.5, 0.5];
                }
                let e = [(l[0] - mx).exp(), (l[1] - mx).exp()];
                [e[0] / (e[0] + e[1]), e[1] / (e[0] + e[1])]
            })
            .collect();
        let mut next = kids;
        let mut total = 0.0;
        for (c, kid) in next.iter_mut().enumerate() {
            let (n, mean, cov) = moments(&pts, |t| outer[t] * inner[t][c]);
            total += n;
            kid.weight = n;
            if n > 0.0 {
                kid.mean = mean;
                kid.cov = clamp_covariance(cov, opts.cov_floor);
            }
        }
        if total <= 0.0 {
            break;
        }
        for kid in &mut next {
            kid.weight = (kid.weight / total * parent.weight).max(opts.starvation);
        }
        let delta = next
            .iter()
            .zip(&kids)
            .map(|(a, b)| (a.mean[0] - b.mean[0]).abs().max((a.mean[1] - b.mean[1]).abs()))
            .fold(0.0, f64::max);
        kids = next;
        if delta < opts.tol {
            break;
        }
    }
    // children keep exactly the parent's weight
    let w = kids[0].weight + kids[1].weight;
    for kid in &mut kids {
        kid.weight *= parent.weight / w;
    }

    let mut out = estimate.clone();
    out.components[k] = kids[0];
    out.components.insert(k + 1, kids[1]);
    out.starved[k] = false;
    out.starved.insert(k + 1, false);
    Ok(out)
}

/// Grows a single-component fit to `m` components by repeatedly splitting
/// the worst-fitting component and re-running full EM.
pub fn fit_by_splitting(log: &ObservationLog, m: usize, opts: &EmOptions) -> Result<GmmEstimate> {
    if m == 0 {
        return Err(invalid("m", "need at least one component"));
    }
    let mut est = em_iterate(log, &GmmEstimate::single(log, opts)?, opts)?;
    while est.num_components() < m {
        let k = split_select(&est, log).unwrap_or(0);
        est = split_component(&est, log, k, opts, 50)?;
        est = em_iterate(log, &est, opts)?;
    }
    Ok(est)
}

/// Candidate for `target` components reached by one split or merge from
/// `estimate`, followed by full EM.
fn candidate(
    estimate: &GmmEstimate,
    log: &ObservationLog,
    target: usize,
    opts: &SelectionOptions,
) -> Result<GmmEstimate> {
    let m = estimate.num_components();
    let moved = if target > m {
        let k = split_select(estimate, log).unwrap_or(0);
        split_component(estimate, log, k, &opts.em, opts.partial_iterations)?
    } else {
        let pair = merge_select(estimate, log).ok_or_else(|| invalid("target", "cannot merge a single component"))?;
        merge_components(estimate, log, pair, &opts.em)?
    };
    em_iterate(log, &moved, &opts.em)
}

/// One proposal: build the `M̂ ± 1` candidate and keep it or the current
/// estimate by the AIC logit. Returns the estimate and whether it changed.
pub fn model_selection_round<R: Rng + ?Sized>(
    log: &ObservationLog,
    estimate: &GmmEstimate,
    state: &mut AicState,
    opts: &SelectionOptions,
    rng: &mut R,
) -> Result<(GmmEstimate, bool)> {
    let target = state.propose(estimate.num_components(), rng);
    let cand = candidate(estimate, log, target, opts)?;
    let chosen = super::propose_component_count(state, estimate, &cand, log, rng)?;
    if chosen == target && target != estimate.num_components() {
        Ok((cand, true))
    } else {
        Ok((estimate.clone(), false))
    }
}

/// Model selection from one component until `patience` proposals in a row
/// are rejected.
pub fn select_components<R: Rng + ?Sized>(
    log: &ObservationLog,
    opts: &SelectionOptions,
    rng: &mut R,
) -> Result<(GmmEstimate, SelectionTrace)> {
    let mut est = em_iterate(log, &GmmEstimate::single(log, &opts.em)?, &opts.em)?;
    let mut state = AicState::new(1, opts.aic_tau)?;
    let mut trace = SelectionTrace::default();
    let mut rejected = 0;
    for _ in 0..opts.max_rounds {
        let (next, changed) = model_selection_round(log, &est, &mut state, opts, rng)?;
        est = next;
        trace.counts.push(est.num_components());
        trace.aic.push(aic(&est, log)?);
        if changed {
            rejected = 0;
        } else {
            rejected += 1;
            if rejected >= opts.patience {
                break;
            }
        }
    }
    Ok((est, trace))
}
