use super::{Game, JointAction, MixedStrategy};
use crate::error::{invalid, Error, Result};

/// Relative tolerance used when grouping utilities into ties.
pub(crate) const TIE_RTOL: f64 = 1e-12;

pub(crate) fn ties(best: f64, value: f64) -> bool {
    (best - value).abs() <= TIE_RTOL * best.abs().max(value.abs())
}

fn strictly_better(candidate: f64, incumbent: f64) -> bool {
    candidate > incumbent && !ties(incumbent, candidate)
}

/// Unilateral deviation witnessing the largest potential mismatch.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub player: usize,
    pub from_action: usize,
    pub to_action: usize,
    pub context: JointAction,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialCertificate {
    pub potential: Vec<f64>,
    pub max_violation: f64,
    /// Set when `max_violation > tol`.
    pub violation: Option<Violation>,
}

impl PotentialCertificate {
    pub fn holds(&self) -> bool {
        self.violation.is_none()
    }
}

/// Checks `ΔΦ = Δu^i` over every unilateral deviation. `phi` is indexed by
/// the game's joint-space index.
pub fn verify_potential<G: Game + ?Sized>(game: &G, phi: &[f64], tol: f64) -> Result<PotentialCertificate> {
    let space = game.joint_space();
    if phi.len() != space.size() {
        return Err(Error::DimensionMismatch { expected: space.size(), actual: phi.len() });
    }
    let (max_violation, witness) = scan_violations(game, |j| phi[space.index(j)]);
    Ok(PotentialCertificate {
        potential: phi.to_vec(),
        max_violation,
        violation: witness.filter(|_| max_violation > tol),
    })
}

/// Like [`verify_potential`] with `Φ` given as a function.
pub fn verify_potential_with<G, F>(game: &G, phi: F, tol: f64) -> PotentialCertificate
where
    G: Game + ?Sized,
    F: Fn(&[usize]) -> f64,
{
    let space = game.joint_space();
    let table: Vec<f64> = space.iter().map(|j| phi(&j)).collect();
    let (max_violation, witness) = scan_violations(game, |j| table[space.index(j)]);
    PotentialCertificate { potential: table, max_violation, violation: witness.filter(|_| max_violation > tol) }
}

fn scan_violations<G, F>(game: &G, phi: F) -> (f64, Option<Violation>)
where
    G: Game + ?Sized,
    F: Fn(&[usize]) -> f64,
{
    let space = game.joint_space();
    let mut worst = 0.0;
    let mut witness = None;
    for joint in space.iter() {
        for i in 0..game.num_players() {
            let a1 = joint[i];
            let u1 = game.utility(i, &joint);
            let p1 = phi(&joint);
            // Each unordered pair once: only deviations to higher indices.
            for a2 in (a1 + 1)..game.num_actions(i) {
                let dev = joint.with(i, a2);
                let gap = ((phi(&dev) - p1) - (game.utility(i, &dev) - u1)).abs();
                if gap > worst {
                    worst = gap;
                    witness = Some(Violation { player: i, from_action: a1, to_action: a2, context: joint.clone() });
                }
            }
        }
    }
    (worst, witness)
}

/// Recovers a potential by summing unilateral utility differences along the
/// coordinate path from the all-first-actions profile. Returns `None` when
/// the result fails [`verify_potential`] at `tol`.
pub fn construct_potential<G: Game + ?Sized>(game: &G, tol: f64) -> Option<Vec<f64>> {
    let space = game.joint_space();
    let n = game.num_players();
    let mut phi = Vec::with_capacity(space.size());
    for joint in space.iter() {
        let mut walk = vec![0usize; n];
        let mut value = 0.0;
        for k in 0..n {
            let before = game.utility(k, &walk);
            walk[k] = joint[k];
            value += game.utility(k, &walk) - before;
        }
        phi.push(value);
    }
    let cert = verify_potential(game, &phi, tol).ok()?;
    cert.holds().then_some(phi)
}

/// All maximizers of `u^i(·, context^{-i})`, ties included.
pub fn best_response_set<G: Game + ?Sized>(game: &G, player: usize, context: &[usize]) -> Vec<usize> {
    let mut probe = context.to_vec();
    let values: Vec<f64> = (0..game.num_actions(player))
        .map(|a| {
            probe[player] = a;
            game.utility(player, &probe)
        })
        .collect();
    argmax_set(&values)
}

/// Indices of all maximal entries under the tie tolerance.
pub(crate) fn argmax_set(values: &[f64]) -> Vec<usize> {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values.iter().enumerate().filter(|(_, v)| ties(best, **v)).map(|(k, _)| k).collect()
}

pub fn is_pure_nash<G: Game + ?Sized>(game: &G, profile: &[usize]) -> bool {
    (0..game.num_players()).all(|i| best_response_set(game, i, profile).contains(&profile[i]))
}

/// `Σ_α (Π_s x^s_{α^s}) u^i(α)`.
pub fn expected_utility<G: Game + ?Sized>(game: &G, player: usize, profile: &[MixedStrategy]) -> Result<f64> {
    if profile.len() != game.num_players() {
        return Err(Error::DimensionMismatch { expected: game.num_players(), actual: profile.len() });
    }
    for (i, x) in profile.iter().enumerate() {
        if x.len() != game.num_actions(i) {
            return Err(Error::DimensionMismatch { expected: game.num_actions(i), actual: x.len() });
        }
    }
    let mut total = 0.0;
    for joint in game.joint_space().iter() {
        let weight: f64 = joint.iter().enumerate().map(|(s, &a)| profile[s][a]).product();
        if weight != 0.0 {
            total += weight * game.utility(player, &joint);
        }
    }
    Ok(total)
}

/// Logit choice: `x_α ∝ exp(score_α / τ)`, evaluated with the maximum score
/// subtracted so no finite input overflows.
pub fn logit_map(scores: &[f64], tau: f64) -> Result<MixedStrategy> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(invalid("tau", format!("temperature must be positive, got {tau}")));
    }
    if scores.is_empty() {
        return Err(invalid("scores", "empty score vector"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(invalid("scores", "scores must be finite"));
    }
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = scores.iter().map(|s| ((s - top) / tau).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= z);
    Ok(MixedStrategy::from_raw(w))
}

/// Follows strictly improving unilateral deviations, always taking the
/// lowest-indexed player that can improve and its lowest-indexed improving
/// action. The returned path starts at `start` and ends at a pure Nash
/// equilibrium.
pub fn improvement_path<G: Game + ?Sized>(game: &G, start: &[usize], max_steps: usize) -> Result<Vec<JointAction>> {
    let mut current = JointAction(start.to_vec());
    let mut path = vec![current.clone()];
    'outer: loop {
        for i in 0..game.num_players() {
            let here = game.utility(i, &current);
            for a in 0..game.num_actions(i) {
                if a == current[i] {
                    continue;
                }
                let next = current.with(i, a);
                if strictly_better(game.utility(i, &next), here) {
                    if path.len() > max_steps {
                        return Err(Error::StepLimitExceeded(max_steps));
                    }
                    current = next;
                    path.push(current.clone());
                    continue 'outer;
                }
            }
        }
        return Ok(path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::TableGame;
    use approx::assert_abs_diff_eq;

    fn coordination() -> TableGame {
        // (a,a)=1, (a,b)=0, (b,a)=0, (b,b)=1
        TableGame::identical_interest(vec![2, 2], &[1.0, 0.0, 0.0, 1.0]).unwrap()
    }

    fn matching_pennies() -> TableGame {
        TableGame::new(vec![2, 2], vec![1.0, -1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0]).unwrap()
    }

    #[test]
    fn identical_interest_has_zero_violation() {
        let g = coordination();
        let cert = verify_potential(&g, &[1.0, 0.0, 0.0, 1.0], 0.0).unwrap();
        assert_eq!(cert.max_violation, 0.0);
        assert!(cert.holds());
    }

    #[test]
    fn wrong_potential_reports_witness() {
        // u^1(a,·)=0, u^1(b,·)=1; u^2 ≡ 0
        let g = TableGame::new(vec![2, 2], vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
        let cert = verify_potential(&g, &[0.0; 4], 0.5).unwrap();
        assert_eq!(cert.max_violation, 1.0);
        let v = cert.violation.unwrap();
        assert_eq!((v.player, v.from_action, v.to_action), (0, 0, 1));
    }

    #[test]
    fn potential_dimension_mismatch() {
        let g = coordination();
        assert!(matches!(
            verify_potential(&g, &[0.0; 3], 1e-9),
            Err(Error::DimensionMismatch { expected: 4, actual: 3 })
        ));
    }

    #[test]
    fn construct_potential_identical_interest() {
        let w = [3.0, 1.0, -2.0, 5.0, 0.5, 7.0];
        let g = TableGame::identical_interest(vec![2, 3], &w).unwrap();
        let phi = construct_potential(&g, 1e-12).unwrap();
        for (p, v) in phi.iter().zip(w) {
            assert_abs_diff_eq!(*p, v - w[0], epsilon = 1e-12);
        }
    }

    #[test]
    fn matching_pennies_has_no_potential() {
        // Two deviation orders from (a,a) to (b,b) disagree:
        // via (b,a): Δu^1 + Δu^2 = (-1-1) + (-1-(-1))... enumerated below.
        let g = matching_pennies();
        let via_ba = (g.utility(0, &[1, 0]) - g.utility(0, &[0, 0])) + (g.utility(1, &[1, 1]) - g.utility(1, &[1, 0]));
        let via_ab = (g.utility(1, &[0, 1]) - g.utility(1, &[0, 0])) + (g.utility(0, &[1, 1]) - g.utility(0, &[0, 1]));
        assert!((via_ba - via_ab).abs() > 1.0);
        assert!(construct_potential(&g, 1e-9).is_none());
    }

    #[test]
    fn best_response_includes_ties() {
        let g = TableGame::new(vec![3], vec![1.0, 3.0, 3.0]).unwrap();
        assert_eq!(best_response_set(&g, 0, &[0]), vec![1, 2]);
        let single = TableGame::new(vec![1, 2], vec![0.0, 4.0, 0.0, 2.0]).unwrap();
        assert_eq!(best_response_set(&single, 0, &[0, 1]), vec![0]);
    }

    #[test]
    fn nash_on_coordination_game() {
        let g = coordination();
        assert!(is_pure_nash(&g, &[0, 0]));
        assert!(is_pure_nash(&g, &[1, 1]));
        assert!(!is_pure_nash(&g, &[0, 1]));
        let trivial = TableGame::new(vec![1, 1], vec![0.3, -2.0]).unwrap();
        assert!(is_pure_nash(&trivial, &[0, 0]));
    }

    #[test]
    fn expected_utility_pure_and_uniform() {
        let g = TableGame::new(vec![2, 2], vec![0.0, 0.0, 1.0, 0.0, 2.0, 0.0, 3.0, 0.0]).unwrap();
        let pure = [MixedStrategy::pure(2, 1), MixedStrategy::pure(2, 0)];
        assert_eq!(expected_utility(&g, 0, &pure).unwrap(), 2.0);
        let uni = [MixedStrategy::uniform(2), MixedStrategy::uniform(2)];
        assert_abs_diff_eq!(expected_utility(&g, 0, &uni).unwrap(), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn logit_examples() {
        let x = logit_map(&[1.0, 0.0], 1.0).unwrap();
        // e/(1+e), 1/(1+e) at 1e-15 precision
        assert_abs_diff_eq!(x[0], 0.731_058_578_630_004_9, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], 0.268_941_421_369_995_1, epsilon = 1e-15);
        let eq = logit_map(&[2.5; 4], 0.3).unwrap();
        assert!(eq.weights().iter().all(|w| (w - 0.25).abs() < 1e-15));
        let cold = logit_map(&[1.0, 0.0], 1e-6).unwrap();
        assert!(cold[0] >= 1.0 - 1e-9);
        assert!(logit_map(&[1.0], 0.0).is_err());
        assert!(logit_map(&[1.0], -1.0).is_err());
    }

    #[test]
    fn logit_survives_huge_scores() {
        let x = logit_map(&[1e300, -1e300, 5e299], 1.0).unwrap();
        assert!(MixedStrategy::new(x.weights().to_vec()).is_ok());
        assert_eq!(x[0], 1.0);
    }

    #[test]
    fn improvement_path_cases() {
        let g = coordination();
        let at_nash = improvement_path(&g, &[1, 1], 10).unwrap();
        assert_eq!(at_nash.len(), 1);
        let p = improvement_path(&g, &[0, 1], 10).unwrap();
        assert!(p.len() <= 3);
        let end = p.last().unwrap();
        assert_eq!(end[0], end[1]);
        assert!(is_pure_nash(&g, end));
    }

    #[test]
    fn improvement_path_cycles_in_matching_pennies() {
        let g = matching_pennies();
        assert!(matches!(improvement_path(&g, &[0, 0], 20), Err(Error::StepLimitExceeded(20))));
    }
}
