use super::{Game, JointSpace};
use crate::error::{invalid, Error, Result};

/// Dense payoff table: one row per joint action (row-major, last player
/// fastest), one payoff per player in each row.
#[derive(Clone, Debug, PartialEq)]
pub struct TableGame {
    space: JointSpace,
    payoffs: Vec<f64>,
    player_labels: Vec<String>,
    action_labels: Vec<Vec<String>>,
}

impl TableGame {
    pub fn new(action_counts: Vec<usize>, payoffs: Vec<f64>) -> Result<Self> {
        if action_counts.is_empty() {
            return Err(invalid("players", "a game needs at least one player"));
        }
        if action_counts.contains(&0) {
            return Err(invalid("actions", "every action set must be non-empty"));
        }
        let space = JointSpace::new(action_counts);
        let n = space.num_players();
        let expected = space.size() * n;
        if payoffs.len() != expected {
            return Err(Error::DimensionMismatch { expected, actual: payoffs.len() });
        }
        if payoffs.iter().any(|u| !u.is_finite()) {
            return Err(invalid("payoffs", "utilities must be finite"));
        }
        let player_labels = (0..n).map(|i| format!("p{}", i + 1)).collect();
        let action_labels = space.radices().iter().map(|&m| (0..m).map(|a| format!("a{}", a + 1)).collect()).collect();
        Ok(Self { space, payoffs, player_labels, action_labels })
    }

    /// Tabulates any game. Fails if the joint space is larger than `cap`.
    pub fn tabulate<G: Game + ?Sized>(game: &G, cap: usize) -> Result<Self> {
        let space = game.joint_space();
        if space.size() > cap {
            return Err(Error::StateSpaceTooLarge { size: space.size(), cap });
        }
        let n = space.num_players();
        let mut payoffs = Vec::with_capacity(space.size() * n);
        for joint in space.iter() {
            for i in 0..n {
                payoffs.push(game.utility(i, &joint));
            }
        }
        Self::new(space.radices().to_vec(), payoffs)
    }

    /// Game where every player receives `common[joint]`.
    pub fn identical_interest(action_counts: Vec<usize>, common: &[f64]) -> Result<Self> {
        let n = action_counts.len();
        let payoffs = common.iter().flat_map(|&w| std::iter::repeat_n(w, n)).collect();
        Self::new(action_counts, payoffs)
    }

    /// Separable game `u^i(α) = values[i][α^i]`.
    pub fn separable(values: &[Vec<f64>]) -> Result<Self> {
        let counts: Vec<usize> = values.iter().map(Vec::len).collect();
        let space = JointSpace::new(counts.clone());
        let mut payoffs = Vec::with_capacity(space.size() * values.len());
        for joint in space.iter() {
            for (i, v) in values.iter().enumerate() {
                payoffs.push(v[joint[i]]);
            }
        }
        Self::new(counts, payoffs)
    }

    pub fn with_labels(mut self, players: Vec<String>, actions: Vec<Vec<String>>) -> Result<Self> {
        if players.len() != self.space.num_players() {
            return Err(Error::DimensionMismatch { expected: self.space.num_players(), actual: players.len() });
        }
        for (labels, &m) in actions.iter().zip(self.space.radices()) {
            if labels.len() != m {
                return Err(Error::DimensionMismatch { expected: m, actual: labels.len() });
            }
        }
        self.player_labels = players;
        self.action_labels = actions;
        Ok(self)
    }

    pub fn space(&self) -> &JointSpace {
        &self.space
    }

    pub fn player_labels(&self) -> &[String] {
        &self.player_labels
    }

    pub fn action_labels(&self, player: usize) -> &[String] {
        &self.action_labels[player]
    }

    pub fn payoffs(&self) -> &[f64] {
        &self.payoffs
    }
}

impl Game for TableGame {
    fn num_players(&self) -> usize {
        self.space.num_players()
    }

    fn num_actions(&self, player: usize) -> usize {
        self.space.radices()[player]
    }

    fn utility(&self, player: usize, joint: &[usize]) -> f64 {
        let n = self.space.num_players();
        self.payoffs[self.space.index(joint) * n + player]
    }

    fn joint_space(&self) -> JointSpace {
        self.space.clone()
    }
}
