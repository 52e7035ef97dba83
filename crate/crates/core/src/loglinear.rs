//! Log-linear learners: LLL, BLLL and P-SBLLL.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::game::{logit_map, Game, JointAction, JointSpace};

/// `A^i_c`: for every player and every current action, the actions it may
/// try next. Sets always include the current action.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstrainedActionMap {
    sets: Vec<Vec<Vec<usize>>>,
}

/// Outcome of checking reachability and reversibility of a constraint map.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConstraintReport {
    /// Players whose reachability graph is disconnected.
    pub disconnected: Vec<usize>,
    /// `(player, a, b)` with `b ∈ A_c(a)` but `a ∉ A_c(b)`.
    pub asymmetric: Vec<(usize, usize, usize)>,
    /// `(player, a)` whose constrained set is empty.
    pub empty: Vec<(usize, usize)>,
}

impl ConstraintReport {
    pub fn reachable(&self) -> bool {
        self.disconnected.is_empty() && self.empty.is_empty()
    }

    pub fn reversible(&self) -> bool {
        self.asymmetric.is_empty()
    }

    pub fn holds(&self) -> bool {
        self.reachable() && self.reversible()
    }
}

impl ConstrainedActionMap {
    /// `A^i_c(α) = A^i` for every player.
    pub fn complete(action_counts: &[usize]) -> Self {
        let sets = action_counts.iter().map(|&m| (0..m).map(|_| (0..m).collect()).collect()).collect();
        Self { sets }
    }

    pub fn complete_for<G: Game + ?Sized>(game: &G) -> Self {
        let counts: Vec<usize> = (0..game.num_players()).map(|i| game.num_actions(i)).collect();
        Self::complete(&counts)
    }

    /// Arbitrary per-player lists; no validation beyond bounds, use
    /// [`validate_constraints`] for the assumptions.
    pub fn explicit(sets: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        for (i, player) in sets.iter().enumerate() {
            let m = player.len();
            if player.iter().flatten().any(|&b| b >= m) {
                return Err(invalid("constraints", format!("player {i} lists an action outside 0..{m}")));
            }
        }
        Ok(Self { sets })
    }

    /// Path constraints `a ↔ a±1` plus staying put.
    pub fn path(action_counts: &[usize]) -> Self {
        let sets = action_counts
            .iter()
            .map(|&m| (0..m).map(|a| (a.saturating_sub(1)..=(a + 1).min(m - 1)).collect()).collect())
            .collect();
        Self { sets }
    }

    /// Each of `players` moves on a `grid × grid` lattice (cell index
    /// `y·grid + x`) to any cell within `radius`, itself included.
    pub fn lattice(players: usize, grid: usize, radius: f64) -> Self {
        let r = radius.floor() as isize;
        let g = grid as isize;
        let one: Vec<Vec<usize>> = (0..grid * grid)
            .map(|k| {
                let (x, y) = ((k % grid) as isize, (k / grid) as isize);
                let mut out = Vec::new();
                for dy in -r..=r {
                    for dx in -r..=r {
                        let (nx, ny) = (x + dx, y + dy);
                        if nx >= 0
                            && ny >= 0
                            && nx < g
                            && ny < g
                            && ((dx * dx + dy * dy) as f64) <= radius * radius + 1e-12
                        {
                            out.push((ny * g + nx) as usize);
                        }
                    }
                }
                out.sort_unstable();
                out
            })
            .collect();
        Self { sets: vec![one; players] }
    }

    pub fn num_players(&self) -> usize {
        self.sets.len()
    }

    pub fn num_actions(&self, player: usize) -> usize {
        self.sets[player].len()
    }

    pub fn reachable(&self, player: usize, current: usize) -> &[usize] {
        &self.sets[player][current]
    }

    pub fn allows(&self, player: usize, from: usize, to: usize) -> bool {
        from == to || self.sets[player][from].contains(&to)
    }

    /// True when every deviator's new action is reachable from its old one.
    pub fn feasible(&self, source: &[usize], target: &[usize]) -> bool {
        source.iter().zip(target).enumerate().all(|(i, (&a, &b))| self.allows(i, a, b))
    }
}

/// Checks Assumption 1 (connected reachability) by breadth-first search and
/// Assumption 2 (reversibility) pairwise.
pub fn validate_constraints(map: &ConstrainedActionMap) -> ConstraintReport {
    let mut report = ConstraintReport::default();
    for (i, player) in map.sets.iter().enumerate() {
        let m = player.len();
        for (a, set) in player.iter().enumerate() {
            if set.is_empty() {
                report.empty.push((i, a));
            }
            for &b in set {
                if !player[b].contains(&a) {
                    report.asymmetric.push((i, a, b));
                }
            }
        }
        if m == 0 {
            continue;
        }
        let mut seen = vec![false; m];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(a) = stack.pop() {
            for &b in &player[a] {
                if !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            report.disconnected.push(i);
        }
    }
    report
}

/// Situation-dependent wake-up probability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RevisionPolicy {
    pub a1: f64,
    pub a2: f64,
    /// Intended wake rate at a local peak. Not part of the functional form;
    /// tune `k` to approach it.
    pub a3: f64,
    /// Drop rate of the exponential in `F`.
    pub k: f64,
    pub p_min: f64,
}

impl Default for RevisionPolicy {
    fn default() -> Self {
        Self { a1: 1.0, a2: 0.5, a3: 0.1, k: 4.0, p_min: 1e-6 }
    }
}

impl RevisionPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.a1 > 0.0 && self.a1 <= 1.0) {
            return Err(invalid("a1", "must lie in (0, 1]"));
        }
        if !(self.a2 > 0.0 && self.a2 <= 1.0) {
            return Err(invalid("a2", "must lie in (0, 1]"));
        }
        if !(self.k > 0.0) {
            return Err(invalid("k", "drop rate must be positive"));
        }
        if !(self.p_min > 0.0 && self.p_min < 0.5) {
            return Err(invalid("p_min", "must lie in (0, 0.5)"));
        }
        Ok(())
    }

    /// `c = ln(a1)/k`.
    pub fn c(&self) -> f64 {
        self.a1.ln() / self.k
    }

    pub fn probability(&self, f: f64, g: f64) -> Result<f64> {
        revision_probability(self, f, g)
    }
}

/// `rp(F, G) = (a2 − e^{−k(F−c)})·G + e^{−k(F−c)}`, clamped into
/// `[p_min, 1 − p_min]`.
pub fn revision_probability(policy: &RevisionPolicy, f: f64, g: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&f) {
        return Err(invalid("F", format!("{f} is outside [0, 1]")));
    }
    if !(0.0..=1.0).contains(&g) {
        return Err(invalid("G", format!("{g} is outside [0, 1]")));
    }
    let base = (-policy.k * (f - policy.c())).exp();
    let rp = (policy.a2 - base) * g + base;
    Ok(rp.clamp(policy.p_min, 1.0 - policy.p_min))
}

/// Probability of adopting a trial whose utility exceeds the current one by
/// `delta`: `1/(1 + e^{−Δ/τ})`, evaluated without overflow.
pub fn switch_probability(delta: f64, tau: f64) -> f64 {
    let z = delta / tau;
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Debug)]
pub struct LoglinearState {
    pub joint: JointAction,
    tau: f64,
    pub iteration: u64,
    pub rng: ChaCha8Rng,
}

impl LoglinearState {
    pub fn new(joint: JointAction, tau: f64, seed: u64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(invalid("tau", "temperature must be positive and finite"));
        }
        Ok(Self { joint, tau, iteration: 0, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `ε = e^{−1/τ}`.
    pub fn epsilon(&self) -> f64 {
        (-1.0 / self.tau).exp()
    }
}

fn scores<G: Game + ?Sized>(game: &G, player: usize, joint: &[usize]) -> Vec<f64> {
    let mut probe = joint.to_vec();
    (0..game.num_actions(player))
        .map(|a| {
            probe[player] = a;
            game.utility(player, &probe)
        })
        .collect()
}

/// One LLL update: a uniformly random player resamples from the logit
/// distribution over its whole action set. Returns the updater.
pub fn lll_step<G: Game + ?Sized>(game: &G, state: &mut LoglinearState) -> Result<usize> {
    let i = state.rng.random_range(0..game.num_players());
    let x = logit_map(&scores(game, i, &state.joint), state.tau)?;
    let a = x.sample_with(state.rng.random::<f64>());
    state.joint.0[i] = a;
    state.iteration += 1;
    Ok(i)
}

/// One BLLL update: a uniformly random player draws a trial from its
/// constrained set and keeps or adopts it by a binary logit choice.
pub fn blll_step<G: Game + ?Sized>(game: &G, state: &mut LoglinearState, constraints: &ConstrainedActionMap) -> usize {
    let i = state.rng.random_range(0..game.num_players());
    let current = state.joint[i];
    let set = constraints.reachable(i, current);
    let trial = set[state.rng.random_range(0..set.len())];
    let u_now = game.utility(i, &state.joint);
    let u_trial = game.utility(i, &state.joint.with(i, trial));
    if state.rng.random::<f64>() < switch_probability(u_trial - u_now, state.tau) {
        state.joint.0[i] = trial;
    }
    state.iteration += 1;
    i
}

/// How P-SBLLL decides who is awake.
#[derive(Clone, Copy, Debug)]
pub enum WakeRule<'a> {
    /// Player `i` wakes with probability `rates[i]`, independently.
    Independent(&'a [f64]),
    /// Exactly one uniformly chosen player wakes.
    ForcedSingle,
}

/// Who woke and who switched in one P-SBLLL step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PsblllOutcome {
    pub awake: Vec<usize>,
    pub adopted: Vec<usize>,
}

/// One P-SBLLL update. Awake players draw trials, `α_T` is the profile in
/// which all of them play their trials, and each awake player adopts its
/// trial with probability `1/(1 + e^{−(u^i(α_T) − u^i(α))/τ})`.
pub fn psblll_step<G: Game + ?Sized>(
    game: &G,
    state: &mut LoglinearState,
    constraints: &ConstrainedActionMap,
    wake: WakeRule<'_>,
) -> PsblllOutcome {
    let n = game.num_players();
    let awake: Vec<usize> = match wake {
        WakeRule::Independent(rates) => (0..n).filter(|&i| state.rng.random::<f64>() < rates[i]).collect(),
        WakeRule::ForcedSingle => vec![state.rng.random_range(0..n)],
    };
    let mut trial_profile = state.joint.clone();
    for &i in &awake {
        let set = constraints.reachable(i, state.joint[i]);
        trial_profile.0[i] = set[state.rng.random_range(0..set.len())];
    }
    let mut adopted = Vec::new();
    let mut next = state.joint.clone();
    for &i in &awake {
        let delta = game.utility(i, &trial_profile) - game.utility(i, &state.joint);
        if state.rng.random::<f64>() < switch_probability(delta, state.tau) {
            next.0[i] = trial_profile[i];
            adopted.push(i);
        }
    }
    state.joint = next;
    state.iteration += 1;
    PsblllOutcome { awake, adopted }
}

/// Visit counts over the joint space for a trajectory of `steps` updates.
pub fn visit_histogram(space: &JointSpace, mut step: impl FnMut() -> JointAction, steps: usize) -> Vec<u64> {
    let mut counts = vec![0u64; space.size()];
    for _ in 0..steps {
        counts[space.index(&step())] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::TableGame;
    use approx::assert_abs_diff_eq;

    fn coordination() -> TableGame {
        TableGame::identical_interest(vec![2, 2], &[1.0, 0.0, 0.0, 2.0]).unwrap()
    }

    #[test]
    fn revision_probability_examples() {
        let p = RevisionPolicy::default();
        // F = c, G = 0 → e^0 = 1 clamped
        assert_eq!(revision_probability(&p, p.c(), 0.0).unwrap(), 1.0 - 1e-6);
        for f in [0.0, 0.3, 1.0] {
            assert_abs_diff_eq!(revision_probability(&p, f, 1.0).unwrap(), 0.5, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(revision_probability(&p, 1.0, 0.0).unwrap(), (-4.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!((-4.0f64).exp(), 0.018315638888734, epsilon = 1e-14);
        assert!(revision_probability(&p, 1.2, 0.0).is_err());
        assert!(revision_probability(&p, 0.5, -0.1).is_err());
    }

    #[test]
    fn revision_probability_monotone_in_f() {
        let p = RevisionPolicy::default();
        let mut last = f64::INFINITY;
        for k in 0..=100 {
            let rp = revision_probability(&p, k as f64 / 100.0, 0.0).unwrap();
            assert!(rp <= last && rp > 0.0 && rp < 1.0);
            last = rp;
        }
    }

    #[test]
    fn switch_probability_matches_logit() {
        for tau in [0.1_f64, 1.0] {
            for delta in [-1.0, 0.0, 1.0] {
                let want = 1.0 / (1.0 + (-delta / tau).exp());
                assert_abs_diff_eq!(switch_probability(delta, tau), want, epsilon = 1e-15);
                assert_abs_diff_eq!(
                    switch_probability(delta, tau) + switch_probability(-delta, tau),
                    1.0,
                    epsilon = 1e-15
                );
            }
        }
        assert_eq!(switch_probability(1e300, 1e-3), 1.0);
        assert_eq!(switch_probability(-1e300, 1e-3), 0.0);
    }

    #[test]
    fn constraint_validation() {
        assert!(validate_constraints(&ConstrainedActionMap::complete(&[3, 2])).holds());
        let one_way = ConstrainedActionMap::explicit(vec![vec![vec![0, 1], vec![1]]]).unwrap();
        let r = validate_constraints(&one_way);
        assert_eq!(r.asymmetric, vec![(0, 0, 1)]);
        assert!(r.reachable());
        let split = ConstrainedActionMap::explicit(vec![vec![vec![0], vec![1]]]).unwrap();
        assert_eq!(validate_constraints(&split).disconnected, vec![0]);
        let grid = ConstrainedActionMap::lattice(2, 4, 1.5);
        assert!(validate_constraints(&grid).holds());
        assert_eq!(grid.reachable(0, 5).len(), 9);
        assert_eq!(grid.reachable(0, 0).len(), 4);
        assert!(ConstrainedActionMap::explicit(vec![vec![vec![2]]]).is_err());
    }

    #[test]
    fn lll_infinite_temperature_is_uniform() {
        let g = TableGame::separable(&[vec![0.0, 5.0, 9.0]]).unwrap();
        let mut s = LoglinearState::new(JointAction::new(vec![0]), 1e12, 3).unwrap();
        let space = g.space().clone();
        let hist = visit_histogram(
            &space,
            || {
                lll_step(&g, &mut s).unwrap();
                s.joint.clone()
            },
            30_000,
        );
        for c in hist {
            assert!((c as f64 / 30_000.0 - 1.0 / 3.0).abs() < 0.015);
        }
    }

    #[test]
    fn lll_single_player_logit() {
        let g = TableGame::separable(&[vec![0.0, 1.0]]).unwrap();
        let mut s = LoglinearState::new(JointAction::new(vec![0]), 1.0, 9).unwrap();
        let space = g.space().clone();
        let hist = visit_histogram(
            &space,
            || {
                lll_step(&g, &mut s).unwrap();
                s.joint.clone()
            },
            100_000,
        );
        let e = std::f64::consts::E;
        assert!((hist[1] as f64 / 1e5 - e / (1.0 + e)).abs() < 0.01);
    }

    #[test]
    fn lll_concentrates_on_maximizer() {
        let g = TableGame::identical_interest(vec![2, 2], &[0.5, 0.3, 0.3, 1.0]).unwrap();
        let mut s = LoglinearState::new(JointAction::new(vec![0, 0]), 0.1, 1).unwrap();
        let space = g.space().clone();
        let hist = visit_histogram(
            &space,
            || {
                lll_step(&g, &mut s).unwrap();
                s.joint.clone()
            },
            100_000,
        );
        assert!(hist[3] as f64 / 1e5 >= 0.9);
    }

    #[test]
    fn blll_degenerate_trial_and_symmetry() {
        let g = TableGame::separable(&[vec![1.0, 1.0]]).unwrap();
        let only_self = ConstrainedActionMap::explicit(vec![vec![vec![0], vec![1]]]).unwrap();
        let mut s = LoglinearState::new(JointAction::new(vec![1]), 0.5, 2).unwrap();
        for _ in 0..100 {
            blll_step(&g, &mut s, &only_self);
            assert_eq!(s.joint.as_slice(), &[1]);
        }
        let complete = ConstrainedActionMap::complete(&[2]);
        let space = g.space().clone();
        let hist = visit_histogram(
            &space,
            || {
                blll_step(&g, &mut s, &complete);
                s.joint.clone()
            },
            50_000,
        );
        assert!((hist[0] as f64 / 5e4 - 0.5).abs() < 0.015);
    }

    #[test]
    fn blll_modal_state_is_potential_maximizer() {
        let phi = [0.0, 0.3, 0.1, 0.2, 0.5, 0.0, 0.4, 0.1, 1.0];
        let g = TableGame::identical_interest(vec![3, 3], &phi).unwrap();
        let c = ConstrainedActionMap::complete(&[3, 3]);
        let mut s = LoglinearState::new(JointAction::new(vec![0, 0]), 0.05, 4).unwrap();
        let space = g.space().clone();
        let hist = visit_histogram(
            &space,
            || {
                blll_step(&g, &mut s, &c);
                s.joint.clone()
            },
            100_000,
        );
        let modal = (0..9).max_by_key(|&k| hist[k]).unwrap();
        assert_eq!(modal, 8);
    }

    #[test]
    fn psblll_nobody_awake_and_sleepers_unchanged() {
        let g = coordination();
        let c = ConstrainedActionMap::complete(&[2, 2]);
        let mut s = LoglinearState::new(JointAction::new(vec![1, 0]), 0.1, 5).unwrap();
        for _ in 0..50 {
            let out = psblll_step(&g, &mut s, &c, WakeRule::Independent(&[0.0, 0.0]));
            assert!(out.awake.is_empty());
            assert_eq!(s.joint.as_slice(), &[1, 0]);
        }
        for _ in 0..200 {
            let before = s.joint.clone();
            let out = psblll_step(&g, &mut s, &c, WakeRule::Independent(&[0.5, 0.0]));
            assert_eq!(s.joint[1], before[1]);
            assert!(out.adopted.iter().all(|i| out.awake.contains(i)));
        }
    }

    #[test]
    fn psblll_switch_rate_matches_logit() {
        // one player, trial always the other action, Δ = 1, τ = 1
        let g = TableGame::separable(&[vec![0.0, 1.0]]).unwrap();
        let c = ConstrainedActionMap::explicit(vec![vec![vec![1], vec![0]]]).unwrap();
        let mut s = LoglinearState::new(JointAction::new(vec![0]), 1.0, 6).unwrap();
        let mut switched = 0;
        for _ in 0..100_000 {
            s.joint = JointAction::new(vec![0]);
            if !psblll_step(&g, &mut s, &c, WakeRule::ForcedSingle).adopted.is_empty() {
                switched += 1;
            }
        }
        let want = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((switched as f64 / 1e5 - want).abs() < 0.01);
    }

    #[test]
    fn psblll_evaluates_common_trial_profile() {
        // Player 0 gains only if player 1 also moves: u^0 = 1 at (1,1), else 0.
        let g = TableGame::new(vec![2, 2], vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
        let c = ConstrainedActionMap::explicit(vec![vec![vec![1], vec![0]], vec![vec![1], vec![0]]]).unwrap();
        let mut s = LoglinearState::new(JointAction::new(vec![0, 0]), 1e-3, 7).unwrap();
        let mut adopted0 = 0;
        for _ in 0..2_000 {
            s.joint = JointAction::new(vec![0, 0]);
            let out = psblll_step(&g, &mut s, &c, WakeRule::Independent(&[1.0, 1.0]));
            adopted0 += out.adopted.contains(&0) as usize;
        }
        // u^0(α_T) = 1 > 0 so player 0 adopts almost surely
        assert!(adopted0 > 1_990);
    }

    #[test]
    fn epsilon_accessor() {
        let s = LoglinearState::new(JointAction::new(vec![0]), 0.5, 0).unwrap();
        assert_abs_diff_eq!(s.epsilon(), (-2.0f64).exp(), epsilon = 1e-16);
        assert!(LoglinearState::new(JointAction::new(vec![0]), 0.0, 0).is_err());
    }
}
