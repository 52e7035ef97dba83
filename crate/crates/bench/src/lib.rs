//! Shared fixtures for the benchmarks.

use gamelab::em::{separated_mixture, synthetic_log, ObservationLog};
use gamelab::field::{GaussianComponent, WorthField};
use gamelab::harness::{Algorithm, ExperimentConfig, ScenarioConfig};
use gamelab::TableGame;

/// Random-looking but fixed `n`-player game with `m` actions each.
pub fn table_game(n: usize, m: usize) -> TableGame {
    let size = m.pow(n as u32);
    let payoffs = (0..size * n).map(|k| ((k * 2_654_435_761) % 1_000) as f64 / 1_000.0).collect();
    TableGame::new(vec![m; n], payoffs).expect("valid table")
}

/// Two-cluster observation log on a 40×40 grid.
pub fn two_cluster_log(n: usize) -> ObservationLog {
    let field = separated_mixture(3, 40, 2, 2.0, 6.0).expect("mixture fits the grid");
    synthetic_log(&field, n, 5)
}

/// Coverage experiment on a single-peak field, `iterations` long.
pub fn coverage_config(algorithm: Algorithm, grid: usize, iterations: u64) -> ExperimentConfig {
    let c = grid as f64 / 2.0;
    ExperimentConfig {
        algorithm,
        grid,
        iterations,
        min_iterations: iterations,
        scenario: ScenarioConfig {
            components: vec![GaussianComponent::isotropic(1.0, [c, c], grid as f64 / 6.0)],
            ..Default::default()
        },
        ..ExperimentConfig::default()
    }
}

pub fn field(grid: usize) -> WorthField {
    coverage_config(Algorithm::Psblll, grid, 1).field().expect("inline field")
}
