//! Per-robot environment estimation: EM over observed cells with
//! worth-weighted repetition, AIC-driven component-count proposals and
//! split/merge EM.

mod split_merge;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::field::{Cell, GaussianComponent, WorthField, WorthMap};

pub use split_merge::{
    fit_by_splitting, merge_components, merge_select, model_selection_round, select_components, split_component,
    split_score, split_select, SelectionOptions, SelectionTrace,
};

/// Observed cells `O^i`, in arrival order, with multiplicities. A dense
/// per-cell histogram backs the EM sums.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationLog {
    grid: usize,
    order: Vec<(Cell, u32)>,
    slot: Vec<u32>,
    unique: Vec<(Cell, f64)>,
    total: f64,
}

impl ObservationLog {
    pub fn new(grid: usize) -> Self {
        Self { grid, order: Vec::new(), slot: vec![u32::MAX; grid * grid], unique: Vec::new(), total: 0.0 }
    }

    pub fn from_cells(grid: usize, cells: impl IntoIterator<Item = Cell>) -> Self {
        let mut log = Self::new(grid);
        for c in cells {
            log.push(c, 1);
        }
        log
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    /// Appends `multiplicity` copies of `cell`.
    pub fn push(&mut self, cell: Cell, multiplicity: u32) {
        assert!(cell.x < self.grid && cell.y < self.grid, "observation off the grid");
        if multiplicity == 0 {
            return;
        }
        self.order.push((cell, multiplicity));
        let k = cell.index(self.grid);
        if self.slot[k] == u32::MAX {
            self.slot[k] = self.unique.len() as u32;
            self.unique.push((cell, 0.0));
        }
        self.unique[self.slot[k] as usize].1 += multiplicity as f64;
        self.total += multiplicity as f64;
    }

    /// Number of observations counting repetitions.
    pub fn len(&self) -> usize {
        self.total as usize
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn entries(&self) -> &[(Cell, u32)] {
        &self.order
    }

    /// Distinct cells with their total counts, in first-seen order.
    pub fn unique(&self) -> &[(Cell, f64)] {
        &self.unique
    }

    pub fn total_weight(&self) -> f64 {
        self.total
    }

    pub fn mean(&self) -> Option<[f64; 2]> {
        if self.is_empty() {
            return None;
        }
        let mut m = [0.0; 2];
        for (c, w) in &self.unique {
            let p = c.centroid();
            m[0] += w * p[0];
            m[1] += w * p[1];
        }
        Some([m[0] / self.total, m[1] / self.total])
    }
}

/// Draws `n` observations from a mixture, discretized to cells; draws that
/// land off the grid are redrawn.
pub fn synthetic_log(field: &WorthField, n: usize, seed: u64) -> ObservationLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = field.grid;
    let cumulative: Vec<f64> = field
        .components
        .iter()
        .scan(0.0, |acc, c| {
            *acc += c.weight;
            Some(*acc)
        })
        .collect();
    let total = *cumulative.last().unwrap_or(&1.0);
    let mut log = ObservationLog::new(grid);
    while log.len() < n {
        let u = rng.random::<f64>() * total;
        let j = cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1);
        let comp = &field.components[j];
        let z0: f64 = StandardNormal.sample(&mut rng);
        let z1: f64 = StandardNormal.sample(&mut rng);
        // Cholesky of the 2×2 covariance
        let l00 = comp.cov[0][0].sqrt();
        let l10 = comp.cov[1][0] / l00;
        let l11 = (comp.cov[1][1] - l10 * l10).max(0.0).sqrt();
        let x = comp.mean[0] + l00 * z0;
        let y = comp.mean[1] + l10 * z0 + l11 * z1;
        if x >= 0.0 && y >= 0.0 && x < grid as f64 && y < grid as f64 {
            log.push(Cell::new(x as usize, y as usize), 1);
        }
    }
    log
}

/// Random mixture of `m` isotropic components whose means are at least
/// `separation` standard deviations apart and at least `3σ` from the border.
/// Weights are drawn uniformly and floored at `0.5/m` before normalizing.
pub fn separated_mixture(seed: u64, grid: usize, m: usize, sigma: f64, separation: f64) -> Result<WorthField> {
    if m == 0 {
        return Err(invalid("m", "need at least one component"));
    }
    let lo = 3.0 * sigma;
    let hi = grid as f64 - 3.0 * sigma;
    if hi <= lo {
        return Err(invalid("sigma", "grid too small for the requested spread"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10_000 {
        let mut means: Vec<[f64; 2]> = Vec::with_capacity(m);
        for _ in 0..200 {
            let c = [rng.random_range(lo..hi), rng.random_range(lo..hi)];
            let ok = means.iter().all(|p| ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt() >= separation * sigma);
            if ok {
                means.push(c);
                if means.len() == m {
                    break;
                }
            }
        }
        if means.len() < m {
            continue;
        }
        let raw: Vec<f64> = (0..m).map(|_| rng.random::<f64>().max(0.5)).collect();
        let total: f64 = raw.iter().sum();
        let comps =
            means.into_iter().zip(raw).map(|(mean, w)| GaussianComponent::isotropic(w / total, mean, sigma)).collect();
        return WorthField::new(grid, comps);
    }
    Err(invalid("separation", "could not place the requested components"))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmOptions {
    pub iterations: usize,
    /// Stop once no parameter moves by more than this.
    pub tol: f64,
    /// Smallest covariance eigenvalue.
    pub cov_floor: f64,
    /// Components whose responsibility mass falls below this fraction of the
    /// log are starved.
    pub starvation: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self { iterations: 10, tol: 1e-6, cov_floor: 1.0 / 12.0, starvation: 1e-6 }
    }
}

/// Estimated mixture `λ̂` with its component count `M̂ = components.len()`.
#[derive(Clone, Debug, PartialEq)]
pub struct GmmEstimate {
    pub components: Vec<GaussianComponent>,
    /// Components whose weight was floored in the last EM pass.
    pub starved: Vec<bool>,
}

/// Projects a symmetric 2×2 matrix onto `{Σ : λ_min(Σ) ≥ floor}` by
/// clamping its eigenvalues; this is the exact constrained M-step.
pub(crate) fn clamp_covariance(c: [[f64; 2]; 2], floor: f64) -> [[f64; 2]; 2] {
    let (a, b, d) = (c[0][0], 0.5 * (c[0][1] + c[1][0]), c[1][1]);
    let half_tr = 0.5 * (a + d);
    // hypot: squaring a tiny off-diagonal would underflow
    let rad = (0.5 * (a - d)).hypot(b);
    let (l1, l2) = (half_tr + rad, half_tr - rad);
    if l2 >= floor {
        return [[a, b], [b, d]];
    }
    let (l1c, l2c) = (l1.max(floor), l2.max(floor));
    // two algebraically equivalent eigenvectors; take the better conditioned one
    let (vx, vy) = if a >= d { (l1 - d, b) } else { (b, l1 - a) };
    let norm = vx.hypot(vy);
    if b.abs() < 1e-300 || !(norm > 0.0) || !norm.is_finite() {
        return [[a.max(floor), 0.0], [0.0, d.max(floor)]];
    }
    let (vx, vy) = (vx / norm, vy / norm);
    let off = (l1c - l2c) * vx * vy;
    [[l1c * vx * vx + l2c * vy * vy, off], [off, l1c * vy * vy + l2c * vx * vx]]
}

/// Principal eigenvector of a symmetric 2×2 matrix.
pub(crate) fn principal_axis(c: &[[f64; 2]; 2]) -> [f64; 2] {
    let (a, b, d) = (c[0][0], c[0][1], c[1][1]);
    let fallback = if a >= d { [1.0, 0.0] } else { [0.0, 1.0] };
    if b.abs() < 1e-300 {
        return fallback;
    }
    let l1 = 0.5 * (a + d) + (0.5 * (a - d)).hypot(b);
    let (vx, vy) = if a >= d { (l1 - d, b) } else { (b, l1 - a) };
    let n = vx.hypot(vy);
    if !(n > 0.0) || !n.is_finite() {
        return fallback;
    }
    [vx / n, vy / n]
}

fn ln_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Weighted mean and covariance of `points` under `weights`.
pub(crate) fn moments(points: &[([f64; 2], f64)], resp: impl Fn(usize) -> f64) -> (f64, [f64; 2], [[f64; 2]; 2]) {
    let mut n = 0.0;
    let mut m = [0.0; 2];
    for (k, (p, w)) in points.iter().enumerate() {
        let r = w * resp(k);
        n += r;
        m[0] += r * p[0];
        m[1] += r * p[1];
    }
    if n <= 0.0 {
        return (0.0, [0.0; 2], [[0.0; 2]; 2]);
    }
    m = [m[0] / n, m[1] / n];
    let mut c = [[0.0; 2]; 2];
    for (k, (p, w)) in points.iter().enumerate() {
        let r = w * resp(k);
        let d = [p[0] - m[0], p[1] - m[1]];
        c[0][0] += r * d[0] * d[0];
        c[0][1] += r * d[0] * d[1];
        c[1][1] += r * d[1] * d[1];
    }
    c[0][0] /= n;
    c[0][1] /= n;
    c[1][1] /= n;
    c[1][0] = c[0][1];
    (n, m, c)
}

pub(crate) fn points(log: &ObservationLog) -> Vec<([f64; 2], f64)> {
    log.unique().iter().map(|(c, w)| (c.centroid(), *w)).collect()
}

impl GmmEstimate {
    pub fn new(components: Vec<GaussianComponent>) -> Self {
        let n = components.len();
        Self { components, starved: vec![false; n] }
    }

    /// Single component at the log's sample mean and covariance.
    pub fn single(log: &ObservationLog, opts: &EmOptions) -> Result<Self> {
        if log.is_empty() {
            return Err(Error::EmptyLog);
        }
        let pts = points(log);
        let (_, mean, cov) = moments(&pts, |_| 1.0);
        Ok(Self::new(vec![GaussianComponent { weight: 1.0, mean, cov: clamp_covariance(cov, opts.cov_floor) }]))
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn weight_sum(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    pub fn density(&self, p: [f64; 2]) -> f64 {
        self.components.iter().map(|c| c.weight * c.density(p)).sum()
    }

    pub fn ln_density(&self, p: [f64; 2]) -> f64 {
        let terms: Vec<f64> = self.components.iter().map(|c| c.weight.ln() + c.log_density(p)).collect();
        ln_sum_exp(&terms)
    }

    /// `Σ_τ ln Σ_j ω_j g(O_τ | μ_j, Σ_j)`.
    pub fn log_likelihood(&self, log: &ObservationLog) -> f64 {
        log.unique().iter().map(|(c, w)| w * self.ln_density(c.centroid())).sum()
    }

    /// Posterior `P(j | O_τ, λ̂)` per distinct cell (rows sum to one).
    pub fn responsibilities(&self, log: &ObservationLog) -> Vec<Vec<f64>> {
        log.unique().iter().map(|(c, _)| self.posterior(c.centroid())).collect()
    }

    pub(crate) fn posterior(&self, p: [f64; 2]) -> Vec<f64> {
        let terms: Vec<f64> = self.components.iter().map(|c| c.weight.ln() + c.log_density(p)).collect();
        let z = ln_sum_exp(&terms);
        if !z.is_finite() {
            let m = terms.len() as f64;
            return vec![1.0 / m; terms.len()];
        }
        terms.iter().map(|t| (t - z).exp()).collect()
    }

    pub fn to_field(&self, grid: usize) -> Result<WorthField> {
        WorthField::new(grid, self.components.clone())
    }

    fn renormalize(&mut self) {
        let s = self.weight_sum();
        for c in &mut self.components {
            c.weight /= s;
        }
    }
}

/// A robot's estimated worth: the mixture density at the cell centroid.
impl WorthMap for GmmEstimate {
    fn worth(&self, cell: Cell) -> f64 {
        self.density(cell.centroid())
    }
}

fn max_change(a: &GmmEstimate, b: &GmmEstimate) -> f64 {
    a.components
        .iter()
        .zip(&b.components)
        .map(|(x, y)| {
            let mut d = (x.weight - y.weight).abs();
            for k in 0..2 {
                d = d.max((x.mean[k] - y.mean[k]).abs());
                for l in 0..2 {
                    d = d.max((x.cov[k][l] - y.cov[k][l]).abs());
                }
            }
            d
        })
        .fold(0.0, f64::max)
}

/// Up to `opts.iterations` full EM passes (E-step, then weights, means and
/// covariances), stopping early once parameters settle.
pub fn em_iterate(log: &ObservationLog, estimate: &GmmEstimate, opts: &EmOptions) -> Result<GmmEstimate> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    if estimate.components.is_empty() {
        return Err(invalid("components", "estimate has no components"));
    }
    let pts = points(log);
    let total = log.total_weight();
    let mut est = estimate.clone();
    for _ in 0..opts.iterations {
        let resp: Vec<Vec<f64>> = pts.iter().map(|(p, _)| est.posterior(*p)).collect();
        let mut next = est.clone();
        for (j, comp) in next.components.iter_mut().enumerate() {
            let (nj, mean, cov) = moments(&pts, |k| resp[k][j]);
            if nj < opts.starvation * total {
                comp.weight = opts.starvation;
                next.starved[j] = true;
                continue;
            }
            next.starved[j] = false;
            comp.weight = nj / total;
            comp.mean = mean;
            comp.cov = clamp_covariance(cov, opts.cov_floor);
        }
        next.renormalize();
        let delta = max_change(&est, &next);
        est = next;
        if delta < opts.tol {
            break;
        }
    }
    Ok(est)
}

/// `1 + V·round(f/f_mode)` when `f ≥ f_mode`, else 1.
pub fn worth_weighted_multiplicity(f_value: f64, f_mode: f64, v: u32) -> u32 {
    if f_mode > 0.0 && f_value >= f_mode {
        1 + v * (f_value / f_mode).round() as u32
    } else {
        1
    }
}

/// Number of free parameters of a 2-D full-covariance mixture.
pub fn parameter_count(m: usize) -> usize {
    6 * m - 1
}

/// `AIC = 2k − 2 ln L`.
pub fn aic(estimate: &GmmEstimate, log: &ObservationLog) -> Result<f64> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    let ll = estimate.log_likelihood(log);
    if !ll.is_finite() {
        return Err(Error::DegenerateLikelihood(format!("log-likelihood is {ll}")));
    }
    Ok(2.0 * parameter_count(estimate.num_components()) as f64 - 2.0 * ll)
}

/// Bookkeeping of the periodic component-count proposals.
#[derive(Clone, Debug, PartialEq)]
pub struct AicState {
    /// Proposal period `n_AIC` in iterations.
    pub period: usize,
    pub tau: f64,
    pub last_proposal: Option<usize>,
    pub iaic_current: f64,
    pub iaic_proposal: f64,
}

impl AicState {
    pub fn new(period: usize, tau: f64) -> Result<Self> {
        if period == 0 {
            return Err(invalid("n_aic", "period must be at least 1"));
        }
        if !(tau > 0.0) {
            return Err(invalid("aic_tau", "temperature must be positive"));
        }
        Ok(Self { period, tau, last_proposal: None, iaic_current: f64::NAN, iaic_proposal: f64::NAN })
    }

    /// `M̂ + 1` or `M̂ − 1` with equal odds; only `M̂ + 1` when `M̂ = 1`.
    pub fn propose<R: Rng + ?Sized>(&mut self, current: usize, rng: &mut R) -> usize {
        let t = if current <= 1 || rng.random::<bool>() { current + 1 } else { current - 1 };
        self.last_proposal = Some(t);
        t
    }
}

/// Probability of keeping the current model: a two-point logit over
/// `IAIC = −AIC`.
pub fn keep_probability(iaic_current: f64, iaic_proposal: f64, tau: f64) -> f64 {
    crate::loglinear::switch_probability(iaic_current - iaic_proposal, tau)
}

/// Chooses between the current estimate and a candidate fitted with the
/// proposed count on the same log. Returns the chosen component count.
pub fn propose_component_count<R: Rng + ?Sized>(
    state: &mut AicState,
    current: &GmmEstimate,
    candidate: &GmmEstimate,
    log: &ObservationLog,
    rng: &mut R,
) -> Result<usize> {
    state.iaic_current = -aic(current, log)?;
    state.iaic_proposal = -aic(candidate, log)?;
    let keep = keep_probability(state.iaic_current, state.iaic_proposal, state.tau);
    Ok(if rng.random::<f64>() < keep { current.num_components() } else { candidate.num_components() })
}
