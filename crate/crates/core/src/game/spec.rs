//! Human-readable game definitions (TOML).
//!
//! ```toml
//! players = ["row", "col"]
//! actions = [["a", "b"], ["a", "b"]]
//! # one row per joint action, last player fastest; one payoff per player
//! payoffs = [[1, 1], [0, 0], [0, 0], [1, 1]]
//! ```
//!
//! or a built-in utility:
//!
//! ```toml
//! builtin = "coverage"
//! [coverage]
//! grid = 3
//! robots = 2
//! ```

use serde::{Deserialize, Serialize};

use super::TableGame;
use crate::coverage::CoverageGameSpec;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GameSpec {
    #[serde(default)]
    pub players: Option<Vec<String>>,
    #[serde(default)]
    pub actions: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub payoffs: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub builtin: Option<String>,
    #[serde(default)]
    pub coverage: Option<CoverageGameSpec>,
}

/// Where a parsed game came from.
#[derive(Clone, Debug, PartialEq)]
pub enum GameSource {
    Table,
    Coverage(CoverageGameSpec),
}

impl GameSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn build(&self) -> Result<(TableGame, GameSource)> {
        match self.builtin.as_deref() {
            Some("coverage") => {
                let spec = self.coverage.clone().unwrap_or_default();
                Ok((spec.tabulate()?, GameSource::Coverage(spec)))
            }
            Some(other) => Err(Error::Config(format!("unknown builtin `{other}` (expected `coverage`)"))),
            None => Ok((self.build_table()?, GameSource::Table)),
        }
    }

    fn build_table(&self) -> Result<TableGame> {
        let actions = self.actions.as_ref().ok_or_else(|| Error::Config("missing key `actions`".into()))?;
        let payoffs = self.payoffs.as_ref().ok_or_else(|| Error::Config("missing key `payoffs`".into()))?;
        let n = actions.len();
        if let Some(players) = &self.players {
            if players.len() != n {
                return Err(Error::Config(format!(
                    "key `players` lists {} players but `actions` has {n}",
                    players.len()
                )));
            }
        }
        let counts: Vec<usize> = actions.iter().map(Vec::len).collect();
        let size: usize = counts.iter().product();
        if payoffs.len() != size {
            return Err(Error::Config(format!("key `payoffs` has {} rows, expected {size}", payoffs.len())));
        }
        if let Some(bad) = payoffs.iter().position(|row| row.len() != n) {
            return Err(Error::Config(format!(
                "key `payoffs` row {bad} has {} entries, expected {n}",
                payoffs[bad].len()
            )));
        }
        let flat = payoffs.iter().flatten().copied().collect();
        let game = TableGame::new(counts, flat).map_err(|e| Error::Config(e.to_string()))?;
        let players = self.players.clone().unwrap_or_else(|| (0..n).map(|i| format!("p{}", i + 1)).collect());
        game.with_labels(players, actions.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Game;

    #[test]
    fn parses_table_game() {
        let spec = GameSpec::from_toml_str(
            r#"
            players = ["row", "col"]
            actions = [["a", "b"], ["a", "b"]]
            payoffs = [[1, 1], [0, 0], [0, 0], [2, 2]]
            "#,
        )
        .unwrap();
        let (g, src) = spec.build().unwrap();
        assert_eq!(src, GameSource::Table);
        assert_eq!(g.utility(1, &[1, 1]), 2.0);
        assert_eq!(g.player_labels()[0], "row");
    }

    #[test]
    fn unknown_key_is_named() {
        let err = GameSpec::from_toml_str("actions = [[\"a\"]]\npayofs = [[1]]").unwrap_err();
        assert!(err.to_string().contains("payofs"), "{err}");
    }

    #[test]
    fn wrong_row_count_is_named() {
        let spec = GameSpec::from_toml_str("actions = [[\"a\", \"b\"]]\npayoffs = [[1]]").unwrap();
        let err = spec.build().unwrap_err();
        assert!(err.to_string().contains("payoffs"), "{err}");
    }
}
