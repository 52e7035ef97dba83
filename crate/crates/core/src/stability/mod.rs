//! Exhaustive analysis of the perturbed Markov chain that P-SBLLL induces on
//! small games: resistances, transition probabilities, kernels, stationary
//! distributions, stochastically stable states and resistance trees.

mod report;
mod tree;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::game::{construct_potential, Game, JointAction, JointSpace};
use crate::loglinear::ConstrainedActionMap;

pub use report::{analyze, OracleOptions, OracleReport};
use tree::{min_arborescence, Arc};

/// Per-player wake-up rate as a function of the player's current action.
pub trait RevisionModel: Sync {
    fn rate(&self, player: usize, action: usize) -> f64;
}

impl<F: Fn(usize, usize) -> f64 + Sync> RevisionModel for F {
    fn rate(&self, player: usize, action: usize) -> f64 {
        self(player, action)
    }
}

/// Action-independent wake-up rates.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantRevision(pub Vec<f64>);

impl ConstantRevision {
    pub fn uniform(players: usize, rate: f64) -> Self {
        Self(vec![rate; players])
    }
}

impl RevisionModel for ConstantRevision {
    fn rate(&self, player: usize, _action: usize) -> f64 {
        self.0[player]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransitionResistance {
    pub source: JointAction,
    pub target: JointAction,
    pub deviators: Vec<usize>,
    pub resistance: f64,
}

fn deviators(source: &[usize], target: &[usize]) -> Vec<usize> {
    (0..source.len()).filter(|&i| source[i] != target[i]).collect()
}

fn check_feasible(constraints: &ConstrainedActionMap, source: &[usize], target: &[usize]) -> Result<()> {
    if source.len() != target.len() {
        return Err(Error::DimensionMismatch { expected: source.len(), actual: target.len() });
    }
    for i in deviators(source, target) {
        if !constraints.allows(i, source[i], target[i]) {
            return Err(Error::InfeasibleTransition { player: i, from: source[i], to: target[i] });
        }
    }
    Ok(())
}

/// `R(α₁→α₂) = Σ_{i∈S} max{u^i(α₁), u^i(α₂)} − u^i(α₂)` over the players
/// whose actions differ.
pub fn resistance<G: Game + ?Sized>(
    game: &G,
    constraints: &ConstrainedActionMap,
    source: &[usize],
    target: &[usize],
) -> Result<TransitionResistance> {
    check_feasible(constraints, source, target)?;
    let s = deviators(source, target);
    let r = s
        .iter()
        .map(|&i| {
            let (u1, u2) = (game.utility(i, source), game.utility(i, target));
            u1.max(u2) - u2
        })
        .sum();
    Ok(TransitionResistance {
        source: JointAction::new(source.to_vec()),
        target: JointAction::new(target.to_vec()),
        deviators: s,
        resistance: r,
    })
}

fn ln_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Natural log of the probability that exactly the deviators wake, each
/// draws its target action and each accepts it.
pub fn ln_transition_probability<G: Game + ?Sized>(
    game: &G,
    rates: &dyn RevisionModel,
    constraints: &ConstrainedActionMap,
    source: &[usize],
    target: &[usize],
    epsilon: f64,
) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid("epsilon", "must lie in (0, 1)"));
    }
    check_feasible(constraints, source, target)?;
    let ln_eps = epsilon.ln();
    let mut ln_p = 0.0;
    for i in 0..source.len() {
        let rp = rates.rate(i, source[i]);
        if source[i] == target[i] {
            ln_p += (1.0 - rp).ln();
            continue;
        }
        let width = constraints.reachable(i, source[i]).len() as f64;
        ln_p += rp.ln() - width.ln();
        let (u1, u2) = (game.utility(i, source), game.utility(i, target));
        let v = u1.max(u2);
        // ε^{V−u₂} / (ε^{V−u₁} + ε^{V−u₂})
        let (a, b) = ((v - u1) * ln_eps, (v - u2) * ln_eps);
        ln_p += b - ln_add_exp(a, b);
    }
    Ok(ln_p)
}

pub fn transition_probability<G: Game + ?Sized>(
    game: &G,
    rates: &dyn RevisionModel,
    constraints: &ConstrainedActionMap,
    source: &[usize],
    target: &[usize],
    epsilon: f64,
) -> Result<f64> {
    ln_transition_probability(game, rates, constraints, source, target, epsilon).map(f64::exp)
}

/// `P_ε / ε^R` for one transition; finite and positive in the limit ε → 0.
pub fn scaled_transition_probability<G: Game + ?Sized>(
    game: &G,
    rates: &dyn RevisionModel,
    constraints: &ConstrainedActionMap,
    source: &[usize],
    target: &[usize],
    epsilon: f64,
) -> Result<f64> {
    let ln_p = ln_transition_probability(game, rates, constraints, source, target, epsilon)?;
    let r = resistance(game, constraints, source, target)?.resistance;
    Ok((ln_p - r * epsilon.ln()).exp())
}

/// Sparse row-stochastic kernel over the joint-action space.
#[derive(Clone, Debug)]
pub struct PerturbedChain {
    space: JointSpace,
    epsilon: f64,
    rows: Vec<Vec<(usize, f64)>>,
}

impl PerturbedChain {
    /// Wraps an explicit kernel; rows are `(column, probability)` lists.
    pub fn from_rows(space: JointSpace, epsilon: f64, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        if rows.len() != space.size() {
            return Err(Error::DimensionMismatch { expected: space.size(), actual: rows.len() });
        }
        Ok(Self { space, epsilon, rows })
    }

    pub fn space(&self) -> &JointSpace {
        &self.space
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, state: usize) -> &[(usize, f64)] {
        &self.rows[state]
    }

    pub fn entry(&self, from: usize, to: usize) -> f64 {
        self.rows[from].iter().filter(|(c, _)| *c == to).map(|(_, p)| p).sum()
    }

    pub fn dense(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        let mut m = vec![vec![0.0; n]; n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, p) in row {
                m[i][j] += p;
            }
        }
        m
    }
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn kernel_row<G: Game + ?Sized>(
    game: &G,
    rates: &dyn RevisionModel,
    constraints: &ConstrainedActionMap,
    space: &JointSpace,
    state: usize,
    tau: f64,
) -> Vec<(usize, f64)> {
    let source = space.profile(state);
    let n = source.len();
    // option 0 = asleep, option k ≥ 1 = awake with the k-th constrained action
    let options: Vec<&[usize]> = (0..n).map(|i| constraints.reachable(i, source[i])).collect();
    let radices: Vec<usize> = options.iter().map(|o| o.len() + 1).collect();
    let wake: Vec<f64> = (0..n).map(|i| rates.rate(i, source[i])).collect();
    let u_source: Vec<f64> = (0..n).map(|i| game.utility(i, &source)).collect();

    let mut acc = std::collections::BTreeMap::<usize, f64>::new();
    let mut pick = vec![0usize; n];
    let mut trial = source.0.clone();
    loop {
        let mut p_draw = 1.0;
        let mut awake = Vec::new();
        for i in 0..n {
            if pick[i] == 0 {
                p_draw *= 1.0 - wake[i];
                trial[i] = source[i];
            } else {
                p_draw *= wake[i] / options[i].len() as f64;
                trial[i] = options[i][pick[i] - 1];
                awake.push(i);
            }
        }
        if p_draw > 0.0 {
            let accept: Vec<f64> =
                awake.iter().map(|&i| logistic((game.utility(i, &trial) - u_source[i]) / tau)).collect();
            for mask in 0u64..(1u64 << awake.len()) {
                let mut p = p_draw;
                let mut next = source.0.clone();
                for (b, &i) in awake.iter().enumerate() {
                    if mask >> b & 1 == 1 {
                        p *= accept[b];
                        next[i] = trial[i];
                    } else {
                        p *= 1.0 - accept[b];
                    }
                }
                let to = space.index(&next);
                if to != state && p > 0.0 {
                    *acc.entry(to).or_default() += p;
                }
            }
        }
        let mut k = 0;
        loop {
            if k == n {
                let off: f64 = acc.values().sum();
                let mut row: Vec<(usize, f64)> = acc.into_iter().collect();
                row.push((state, (1.0 - off).max(0.0)));
                row.sort_unstable_by_key(|e| e.0);
                return row;
            }
            pick[k] += 1;
            if pick[k] < radices[k] {
                break;
            }
            pick[k] = 0;
            k += 1;
        }
    }
}

/// Builds the full P-SBLLL kernel at noise level `ε = e^{−1/τ}`, summing
/// over every wake set, trial draw and acceptance pattern.
pub fn build_chain<G: Game + Sync + ?Sized>(
    game: &G,
    rates: &dyn RevisionModel,
    constraints: &ConstrainedActionMap,
    epsilon: f64,
    cap: usize,
) -> Result<PerturbedChain> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid("epsilon", "must lie in (0, 1)"));
    }
    let space = game.joint_space();
    if space.size() > cap {
        return Err(Error::StateSpaceTooLarge { size: space.size(), cap });
    }
    if constraints.num_players() != space.num_players() {
        return Err(Error::DimensionMismatch { expected: space.num_players(), actual: constraints.num_players() });
    }
    let tau = -1.0 / epsilon.ln();
    let rows =
        (0..space.size()).into_par_iter().map(|s| kernel_row(game, rates, constraints, &space, s, tau)).collect();
    Ok(PerturbedChain { space, epsilon, rows })
}

/// Dense solves are used up to this many states, power iteration above.
pub const DENSE_LIMIT: usize = 2_000;

/// Stationary distribution `π P = π`, `Σπ = 1`.
pub fn stationary_distribution(chain: &PerturbedChain, tol: f64) -> Result<Vec<f64>> {
    let n = chain.size();
    let pi = if n <= DENSE_LIMIT { gth(chain.dense())? } else { power_iteration(chain, tol, 200_000)? };
    let r = residual(chain, &pi);
    if r > tol.max(1e-12) {
        return Err(Error::NoConvergence { iterations: 0, residual: r });
    }
    Ok(pi)
}

/// `‖πP − π‖₁`.
pub fn residual(chain: &PerturbedChain, pi: &[f64]) -> f64 {
    let mut next = vec![0.0; pi.len()];
    for (i, row) in chain.rows.iter().enumerate() {
        for &(j, p) in row {
            next[j] += pi[i] * p;
        }
    }
    next.iter().zip(pi).map(|(a, b)| (a - b).abs()).sum()
}

/// Grassmann–Taksar–Heyman elimination; subtraction-free, so tiny
/// transition probabilities keep full relative accuracy.
fn gth(mut p: Vec<Vec<f64>>) -> Result<Vec<f64>> {
    let n = p.len();
    for k in (1..n).rev() {
        let s: f64 = p[k][..k].iter().sum();
        if !(s > 0.0) {
            return Err(Error::NoConvergence { iterations: n - k, residual: f64::NAN });
        }
        for row in p.iter_mut().take(k) {
            row[k] /= s;
        }
        let (upper, lower) = p.split_at_mut(k);
        let row_k = &lower[0];
        for row in upper.iter_mut() {
            let f = row[k];
            if f != 0.0 {
                for j in 0..k {
                    row[j] += f * row_k[j];
                }
            }
        }
    }
    let mut pi = vec![0.0; n];
    pi[0] = 1.0;
    for j in 1..n {
        pi[j] = (0..j).map(|i| pi[i] * p[i][j]).sum();
    }
    let total: f64 = pi.iter().sum();
    Ok(pi.into_iter().map(|v| v / total).collect())
}

fn power_iteration(chain: &PerturbedChain, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = chain.size();
    let mut pi = vec![1.0 / n as f64; n];
    let mut r = f64::INFINITY;
    for it in 0..max_iter {
        let mut next = vec![0.0; n];
        for (i, row) in chain.rows.iter().enumerate() {
            for &(j, p) in row {
                next[j] += pi[i] * p;
            }
        }
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= s);
        r = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if r <= tol {
            return Ok(pi);
        }
        if it + 1 == max_iter {
            break;
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, residual: r })
}

/// Stationary distributions along a decreasing ε schedule and the states
/// whose mass survives.
#[derive(Clone, Debug)]
pub struct StableStates {
    pub epsilons: Vec<f64>,
    pub distributions: Vec<Vec<f64>>,
    pub stable: Vec<usize>,
}

/// A state is reported stable when its mass at the smallest ε is at least
/// `mass_threshold` and does not shrink along the schedule.
pub fn stochastically_stable_states<G: Game + Sync + ?Sized>(
    game: &G,
    rates: &dyn RevisionModel,
    constraints: &ConstrainedActionMap,
    epsilons: &[f64],
    mass_threshold: f64,
    cap: usize,
) -> Result<StableStates> {
    if epsilons.is_empty() || epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("epsilons", "schedule must be non-empty and strictly decreasing"));
    }
    let distributions = epsilons
        .iter()
        .map(|&e| stationary_distribution(&build_chain(game, rates, constraints, e, cap)?, 1e-10))
        .collect::<Result<Vec<_>>>()?;
    let last = distributions.last().expect("non-empty schedule");
    let stable = (0..last.len())
        .filter(|&s| last[s] >= mass_threshold && distributions.windows(2).all(|w| w[1][s] >= w[0][s] - 1e-12))
        .collect();
    Ok(StableStates { epsilons: epsilons.to_vec(), distributions, stable })
}

/// Separability witness search: `u^i` must depend only on `α^i`.
pub fn check_separable<G: Game + ?Sized>(game: &G) -> Result<()> {
    let space = game.joint_space();
    let n = space.num_players();
    let mut seen: Vec<Vec<Option<(JointAction, f64)>>> = (0..n).map(|i| vec![None; game.num_actions(i)]).collect();
    for joint in space.iter() {
        for i in 0..n {
            let u = game.utility(i, &joint);
            match &seen[i][joint[i]] {
                None => seen[i][joint[i]] = Some((joint.clone(), u)),
                Some((first, v)) if (v - u).abs() > 1e-12 * v.abs().max(u.abs()).max(1.0) => {
                    return Err(Error::NotSeparable { player: i, first: first.0.clone(), second: joint.0.clone() })
                }
                _ => {}
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResistanceIdentityReport {
    pub transitions_checked: usize,
    pub max_residual: f64,
    /// `(source, target, residual)` above the tolerance.
    pub violations: Vec<(usize, usize, f64)>,
}

/// Checks `R(α₁→α₂) − R(α₂→α₁) = Φ(α₁) − Φ(α₂)` on every feasible pair.
pub fn verify_resistance_identity<G: Game + ?Sized>(
    game: &G,
    constraints: &ConstrainedActionMap,
    tol: f64,
) -> Result<ResistanceIdentityReport> {
    check_separable(game)?;
    let phi = construct_potential(game, 1e-9).ok_or(Error::NotPotential)?;
    let space = game.joint_space();
    let profiles: Vec<JointAction> = space.iter().collect();
    let mut report = ResistanceIdentityReport::default();
    for (a, p1) in profiles.iter().enumerate() {
        for (b, p2) in profiles.iter().enumerate() {
            if !constraints.feasible(p1, p2) {
                continue;
            }
            let forward = resistance(game, constraints, p1, p2)?.resistance;
            let backward = resistance(game, constraints, p2, p1)?.resistance;
            let res = ((forward - backward) - (phi[a] - phi[b])).abs();
            report.transitions_checked += 1;
            report.max_residual = report.max_residual.max(res);
            if res > tol {
                report.violations.push((a, b, res));
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResistanceTree {
    pub root: usize,
    /// `(child, parent, resistance)`: every edge points toward the root.
    pub edges: Vec<(usize, usize, f64)>,
    pub total: f64,
}

/// Minimum-resistance spanning tree directed toward `root`. Its total is
/// the stochastic potential of the root.
pub fn min_resistance_tree<G: Game + ?Sized>(
    game: &G,
    constraints: &ConstrainedActionMap,
    root: &[usize],
    cap: usize,
) -> Result<ResistanceTree> {
    let space = game.joint_space();
    if space.size() > cap {
        return Err(Error::StateSpaceTooLarge { size: space.size(), cap });
    }
    let root_index = space.index(root);
    let profiles: Vec<JointAction> = space.iter().collect();
    let mut arcs = Vec::new();
    for (a, p1) in profiles.iter().enumerate() {
        for (b, p2) in profiles.iter().enumerate() {
            if a != b && constraints.feasible(p1, p2) {
                let r = resistance(game, constraints, p1, p2)?.resistance;
                // reversed so the tree hangs away from the root
                arcs.push(Arc { from: b, to: a, weight: r });
            }
        }
    }
    let chosen = min_arborescence(space.size(), root_index, &arcs).ok_or_else(|| {
        let state =
            (0..space.size()).find(|&s| s != root_index && !arcs.iter().any(|a| a.to == s)).unwrap_or(root_index);
        Error::RootUnreachable { state: profiles[state].0.clone(), root: root.to_vec() }
    })?;
    let edges: Vec<(usize, usize, f64)> = chosen.iter().map(|&k| (arcs[k].to, arcs[k].from, arcs[k].weight)).collect();
    let total = edges.iter().map(|e| e.2).sum();
    Ok(ResistanceTree { root: root_index, edges, total })
}

/// Stochastic potential of every state.
pub fn stochastic_potentials<G: Game + ?Sized>(
    game: &G,
    constraints: &ConstrainedActionMap,
    cap: usize,
) -> Result<Vec<f64>> {
    let space = game.joint_space();
    space.iter().map(|root| min_resistance_tree(game, constraints, &root, cap).map(|t| t.total)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{Game, TableGame};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_separable(rng: &mut ChaCha8Rng, players: usize, actions: usize) -> TableGame {
        let values: Vec<Vec<f64>> =
            (0..players).map(|_| (0..actions).map(|_| rng.random_range(0..5) as f64).collect()).collect();
        TableGame::separable(&values).unwrap()
    }

    #[test]
    fn resistance_examples() {
        let c = ConstrainedActionMap::complete(&[2, 2]);
        let g = TableGame::new(vec![2, 2], vec![5.0, 1.0, 0.0, 3.0, 2.0, 4.0, 0.0, 0.0]).unwrap();
        assert_eq!(resistance(&g, &c, &[0, 0], &[1, 0]).unwrap().resistance, 3.0);
        assert_eq!(resistance(&g, &c, &[1, 0], &[0, 0]).unwrap().resistance, 0.0);
        // (1→4) and (3→2) per player
        let h = TableGame::new(vec![2, 2], vec![1.0, 3.0, 0.0, 0.0, 0.0, 0.0, 4.0, 2.0]).unwrap();
        let r = resistance(&h, &c, &[0, 0], &[1, 1]).unwrap();
        assert_eq!(r.resistance, 1.0);
        assert_eq!(r.deviators, vec![0, 1]);
        let path = ConstrainedActionMap::path(&[3]);
        assert!(matches!(
            resistance(&TableGame::separable(&[vec![0.0; 3]]).unwrap(), &path, &[0], &[2]),
            Err(Error::InfeasibleTransition { .. })
        ));
    }

    #[test]
    fn transition_probability_examples() {
        let g = TableGame::separable(&[vec![1.0, 1.0], vec![0.0, 2.0]]).unwrap();
        let c = ConstrainedActionMap::complete(&[2, 2]);
        let rates = ConstantRevision(vec![0.5, 0.3]);
        let stay = transition_probability(&g, &rates, &c, &[0, 0], &[0, 0], 0.1).unwrap();
        assert_abs_diff_eq!(stay, 0.5 * 0.7, epsilon = 1e-15);
        let single = transition_probability(&g, &rates, &c, &[0, 0], &[1, 0], 0.1).unwrap();
        assert_abs_diff_eq!(single, 0.5 * 0.5 * 0.5 * 0.7, epsilon = 1e-15);
    }

    #[test]
    fn epsilon_scaling_converges() {
        let g = TableGame::new(vec![2, 2], vec![0.0, 2.0, 1.0, 0.0, 3.0, 1.0, 2.0, 1.0]).unwrap();
        let c = ConstrainedActionMap::complete(&[2, 2]);
        let rates = ConstantRevision(vec![0.4, 0.6]);
        let space = g.space().clone();
        for s in space.iter() {
            for t in space.iter() {
                // a tied deviator keeps a factor 1/2 in the limit
                let limit: f64 = (0..2)
                    .map(|i| match (s[i] != t[i], g.utility(i, &s) == g.utility(i, &t)) {
                        (true, true) => rates.0[i] / 4.0,
                        (true, false) => rates.0[i] / 2.0,
                        _ => 1.0 - rates.0[i],
                    })
                    .product();
                let r = scaled_transition_probability(&g, &rates, &c, &s, &t, 1e-6).unwrap();
                assert!((r / limit - 1.0).abs() < 1e-3, "{s} -> {t}: {r} vs {limit}");
            }
        }
    }

    #[test]
    fn kernel_rows_are_stochastic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let payoffs: Vec<f64> = (0..27 * 3).map(|_| rng.random::<f64>()).collect();
        let g = TableGame::new(vec![3, 3, 3], payoffs).unwrap();
        let c = ConstrainedActionMap::complete(&[3, 3, 3]);
        let chain = build_chain(&g, &ConstantRevision::uniform(3, 0.3), &c, 0.2, 20_000).unwrap();
        for s in 0..chain.size() {
            let sum: f64 = chain.row(s).iter().map(|e| e.1).sum();
            assert!((sum - 1.0).abs() < 1e-10);
            assert!(chain.row(s).iter().all(|e| e.1 >= 0.0));
        }
    }

    #[test]
    fn kernel_small_cases() {
        let one = TableGame::separable(&[vec![0.0]]).unwrap();
        let chain =
            build_chain(&one, &ConstantRevision::uniform(1, 0.5), &ConstrainedActionMap::complete(&[1]), 0.5, 10)
                .unwrap();
        assert_eq!(chain.dense(), vec![vec![1.0]]);
        // wake 1/2 × draw other 1/2 × accept 1/2
        let flat = TableGame::separable(&[vec![0.0, 0.0]]).unwrap();
        let chain =
            build_chain(&flat, &ConstantRevision::uniform(1, 0.5), &ConstrainedActionMap::complete(&[2]), 0.5, 10)
                .unwrap();
        assert_abs_diff_eq!(chain.entry(0, 1), 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(chain.entry(1, 0), 0.125, epsilon = 1e-15);
        assert!(matches!(
            build_chain(&flat, &ConstantRevision::uniform(1, 0.5), &ConstrainedActionMap::complete(&[2]), 0.5, 1),
            Err(Error::StateSpaceTooLarge { .. })
        ));
    }

    #[test]
    fn stationary_examples() {
        let space = JointSpace::new(vec![2]);
        let chain =
            PerturbedChain::from_rows(space.clone(), 0.5, vec![vec![(0, 0.9), (1, 0.1)], vec![(0, 0.2), (1, 0.8)]])
                .unwrap();
        let pi = stationary_distribution(&chain, 1e-12).unwrap();
        assert_abs_diff_eq!(pi[0], 2.0 / 3.0, epsilon = 1e-14);
        let ds = PerturbedChain::from_rows(
            JointSpace::new(vec![3]),
            0.5,
            vec![
                vec![(0, 0.2), (1, 0.5), (2, 0.3)],
                vec![(0, 0.5), (1, 0.2), (2, 0.3)],
                vec![(0, 0.3), (1, 0.3), (2, 0.4)],
            ],
        )
        .unwrap();
        for p in stationary_distribution(&ds, 1e-12).unwrap() {
            assert_abs_diff_eq!(p, 1.0 / 3.0, epsilon = 1e-14);
        }
        let flat = TableGame::separable(&[vec![1.0, 1.0]]).unwrap();
        let chain =
            build_chain(&flat, &ConstantRevision::uniform(1, 0.5), &ConstrainedActionMap::complete(&[2]), 0.1, 10)
                .unwrap();
        let pi = stationary_distribution(&chain, 1e-12).unwrap();
        assert_abs_diff_eq!(pi[0], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn power_iteration_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = random_separable(&mut rng, 2, 4);
        let c = ConstrainedActionMap::complete(&[4, 4]);
        let chain = build_chain(&g, &ConstantRevision::uniform(2, 0.5), &c, 0.3, 100).unwrap();
        let dense = gth(chain.dense()).unwrap();
        let power = power_iteration(&chain, 1e-14, 100_000).unwrap();
        for (a, b) in dense.iter().zip(&power) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn stable_states_examples() {
        let g = TableGame::separable(&[vec![0.0, 1.0]]).unwrap();
        let c = ConstrainedActionMap::complete(&[2]);
        let r = ConstantRevision::uniform(1, 0.5);
        let st = stochastically_stable_states(&g, &r, &c, &[1e-1, 1e-2, 1e-3], 0.05, 100).unwrap();
        assert_eq!(st.stable, vec![1]);
        // tied maximizers (0,1) and (1,1)
        let tied = TableGame::separable(&[vec![2.0, 2.0], vec![0.0, 1.0]]).unwrap();
        let c2 = ConstrainedActionMap::complete(&[2, 2]);
        let st = stochastically_stable_states(
            &tied,
            &ConstantRevision::uniform(2, 0.5),
            &c2,
            &[1e-1, 1e-2, 1e-3],
            0.05,
            100,
        )
        .unwrap();
        assert_eq!(st.stable, vec![1, 3]);
        let pi = st.distributions.last().unwrap();
        assert!((0.5..=2.0).contains(&(pi[1] / pi[3])));
        assert!(stochastically_stable_states(&g, &r, &c, &[1e-2, 1e-1], 0.05, 100).is_err());
    }

    #[test]
    fn resistance_identity_on_random_separable_games() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let g = random_separable(&mut rng, 3, 3);
            let rep = verify_resistance_identity(&g, &ConstrainedActionMap::path(&[3, 3, 3]), 1e-12).unwrap();
            assert!(rep.violations.is_empty());
            assert!(rep.transitions_checked > 27);
        }
    }

    #[test]
    fn resistance_identity_rejects_non_separable() {
        let g = TableGame::new(vec![2, 2], vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0]).unwrap();
        match verify_resistance_identity(&g, &ConstrainedActionMap::complete(&[2, 2]), 1e-12) {
            Err(Error::NotSeparable { player, first, second }) => {
                assert_eq!(player, 0);
                assert_eq!(first[0], second[0]);
                assert_ne!(first[1], second[1]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn resistance_tree_examples() {
        let two = TableGame::separable(&[vec![3.0, 1.0]]).unwrap();
        let c = ConstrainedActionMap::complete(&[2]);
        let t = min_resistance_tree(&two, &c, &[0], 100).unwrap();
        assert_eq!(t.edges, vec![(1, 0, 0.0)]);
        let t = min_resistance_tree(&two, &c, &[1], 100).unwrap();
        assert_eq!(t.total, 2.0);
        let chain = TableGame::separable(&[vec![0.0, 1.0, 2.0]]).unwrap();
        let t = min_resistance_tree(&chain, &ConstrainedActionMap::path(&[3]), &[2], 100).unwrap();
        assert_eq!(t.total, 0.0);
        assert_eq!(t.edges.len(), 2);
        let broken = ConstrainedActionMap::explicit(vec![vec![vec![0], vec![1], vec![2]]]).unwrap();
        assert!(matches!(min_resistance_tree(&chain, &broken, &[2], 100), Err(Error::RootUnreachable { .. })));
    }

    #[test]
    fn stochastic_potential_minimized_at_potential_maximizer() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let g = random_separable(&mut rng, 2, 2);
            let c = ConstrainedActionMap::complete(&[2, 2]);
            let sp = stochastic_potentials(&g, &c, 100).unwrap();
            let phi = construct_potential(&g, 1e-9).unwrap();
            let min_sp = sp.iter().cloned().fold(f64::INFINITY, f64::min);
            let max_phi = phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for s in 0..4 {
                assert_eq!(sp[s] == min_sp, phi[s] == max_phi, "state {s}: {sp:?} {phi:?}");
            }
        }
    }
}
