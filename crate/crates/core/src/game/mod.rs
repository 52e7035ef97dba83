//! Finite normal-form games.
//!
//! A [`Game`] exposes `N` players with finite action sets and a utility
//! evaluator. Oracle-sized games are stored densely in a [`TableGame`];
//! large games (the coverage game) implement [`Game`] with a callback.

pub(crate) mod ops;
mod spec;
mod strategy;
mod table;

pub use ops::{
    best_response_set, construct_potential, expected_utility, improvement_path, is_pure_nash, logit_map,
    verify_potential, verify_potential_with, PotentialCertificate, Violation,
};
pub use spec::{GameSource, GameSpec};
pub use strategy::MixedStrategy;
pub use table::TableGame;

use std::fmt;

/// A finite game in normal form.
pub trait Game {
    fn num_players(&self) -> usize;

    fn num_actions(&self, player: usize) -> usize;

    /// `u^i(joint)`. `joint` holds one action index per player.
    fn utility(&self, player: usize, joint: &[usize]) -> f64;

    fn joint_space(&self) -> JointSpace {
        JointSpace::new((0..self.num_players()).map(|i| self.num_actions(i)).collect())
    }
}

impl<G: Game + ?Sized> Game for &G {
    fn num_players(&self) -> usize {
        (**self).num_players()
    }
    fn num_actions(&self, player: usize) -> usize {
        (**self).num_actions(player)
    }
    fn utility(&self, player: usize, joint: &[usize]) -> f64 {
        (**self).utility(player, joint)
    }
}

/// One action index per player.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointAction(pub Vec<usize>);

impl JointAction {
    pub fn new(actions: Vec<usize>) -> Self {
        Self(actions)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Profile with player `i` switched to `action`.
    pub fn with(&self, player: usize, action: usize) -> Self {
        let mut next = self.0.clone();
        next[player] = action;
        Self(next)
    }
}

impl std::ops::Deref for JointAction {
    type Target = [usize];
    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for JointAction {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

impl fmt::Display for JointAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, a) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// Mixed-radix indexing of the joint-action space. The first player is the
/// most significant digit, so row-major tables list the last player fastest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointSpace {
    radices: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

impl JointSpace {
    pub fn new(radices: Vec<usize>) -> Self {
        let mut strides = vec![1; radices.len()];
        let mut size = 1usize;
        for i in (0..radices.len()).rev() {
            strides[i] = size;
            size = size.saturating_mul(radices[i]);
        }
        Self { radices, strides, size }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn num_players(&self) -> usize {
        self.radices.len()
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn index(&self, joint: &[usize]) -> usize {
        joint.iter().zip(&self.strides).map(|(a, s)| a * s).sum()
    }

    pub fn profile(&self, mut index: usize) -> JointAction {
        let mut out = vec![0; self.radices.len()];
        for (i, s) in self.strides.iter().enumerate() {
            out[i] = index / s;
            index %= s;
        }
        JointAction(out)
    }

    pub fn contains(&self, joint: &[usize]) -> bool {
        joint.len() == self.radices.len() && joint.iter().zip(&self.radices).all(|(a, r)| a < r)
    }

    pub fn iter(&self) -> impl Iterator<Item = JointAction> + '_ {
        (0..self.size).map(move |k| self.profile(k))
    }
}
