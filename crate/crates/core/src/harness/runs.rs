//! The coverage experiment loops.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coverage::CoverageWorld;
use crate::em::{
    em_iterate, model_selection_round, worth_weighted_multiplicity, AicState, EmOptions, GmmEstimate, ObservationLog,
    SelectionOptions,
};
use crate::error::{invalid, Result};
use crate::field::{Cell, FieldRaster, WorthMap};
use crate::game::logit_map;
use crate::loglinear::{revision_probability, switch_probability, ConstrainedActionMap};
use crate::qlearn::{ql_episode_step, soql_episode_step, QState};

use super::config::{Algorithm, Environment, ExperimentConfig};
use super::record::{steady_state, EstimateRow, IterationRow, RunRecord};

/// Runs `config` once with `seed`, dispatching on the algorithm.
pub fn run(config: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    match config.algorithm {
        Algorithm::Psblll => run_psblll(config, seed),
        Algorithm::Soql => run_soql(config, seed),
        Algorithm::Blll | Algorithm::Lll | Algorithm::Ql => run_comparators(config, seed),
    }
}

pub fn run_psblll(config: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    expect(config, &[Algorithm::Psblll])?;
    run_loglinear(config, seed)
}

pub fn run_soql(config: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    expect(config, &[Algorithm::Soql])?;
    run_qlearning(config, seed)
}

/// BLLL and LLL baselines and first-order Q-learning.
pub fn run_comparators(config: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    expect(config, &[Algorithm::Blll, Algorithm::Lll, Algorithm::Ql])?;
    match config.algorithm {
        Algorithm::Ql => run_qlearning(config, seed),
        _ => run_loglinear(config, seed),
    }
}

fn expect(config: &ExperimentConfig, allowed: &[Algorithm]) -> Result<()> {
    config.validate()?;
    if !allowed.contains(&config.algorithm) {
        return Err(invalid("algorithm", format!("{} is not handled here", config.algorithm.name())));
    }
    Ok(())
}

struct Setup {
    rng: ChaCha8Rng,
    raster: FieldRaster,
    world: CoverageWorld,
    initial: Vec<Cell>,
}

fn setup(config: &ExperimentConfig, seed: u64) -> Result<Setup> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raster = config.field()?.raster();
    let g = config.grid;
    let initial: Vec<Cell> =
        (0..config.robots).map(|_| Cell::new(rng.random_range(0..g), rng.random_range(0..g))).collect();
    let mut world = CoverageWorld::new(raster.clone(), config.coverage.clone(), initial.clone())?;
    for i in 0..config.robots {
        world.lay_flag(i);
    }
    Ok(Setup { rng, raster, world, initial })
}

/// A robot's private observation log and mixture estimate.
struct Estimator {
    log: ObservationLog,
    estimate: GmmEstimate,
    aic: AicState,
    /// Observed worths, sorted, for the adaptive `f_mode`.
    worths: Vec<f64>,
}

impl Estimator {
    fn new(grid: usize, cell: Cell, worth: f64, config: &ExperimentConfig) -> Result<Self> {
        let mut log = ObservationLog::new(grid);
        log.push(cell, 1);
        let em = config.estimation.em_options();
        let estimate = GmmEstimate::single(&log, &em)?;
        let aic = AicState::new(config.estimation.n_aic, config.estimation.aic_tau.unwrap_or(config.tau))?;
        Ok(Self { log, estimate, aic, worths: vec![worth] })
    }

    fn observe(&mut self, cell: Cell, worth: f64, config: &ExperimentConfig, em: &EmOptions) -> Result<()> {
        let at = self.worths.partition_point(|&w| w < worth);
        self.worths.insert(at, worth);
        let q = config.estimation.f_mode_quantile;
        let f_mode = self.worths[(q * (self.worths.len() - 1) as f64).round() as usize];
        self.log.push(cell, worth_weighted_multiplicity(worth, f_mode, config.estimation.v));
        self.estimate = em_iterate(&self.log, &self.estimate, em)?;
        Ok(())
    }
}

fn snapshot(n: u64, robot: usize, est: &GmmEstimate, out: &mut Vec<EstimateRow>) {
    for (component, c) in est.components.iter().enumerate() {
        out.push(EstimateRow { n, robot, component, weight: c.weight, mean: c.mean, cov: c.cov });
    }
}

fn record_row(
    world: &CoverageWorld,
    raster: &FieldRaster,
    n: u64,
    previous: &[Cell],
    awake: i64,
    moved: usize,
) -> IterationRow {
    let positions = world.positions().to_vec();
    IterationRow {
        n,
        covered: world.total_covered(raster, &positions),
        utility_sum: world.utility_sum(raster, &positions, previous),
        potential: world.potential(raster, &positions, previous),
        awake,
        moved,
        positions,
    }
}

fn finish(
    config: &ExperimentConfig,
    seed: u64,
    s: Setup,
    rows: Vec<IterationRow>,
    estimates: Vec<EstimateRow>,
    steady: bool,
    start: Instant,
) -> RunRecord {
    let flags = (0..config.robots).map(|i| s.world.flagged_cells(i).collect()).collect();
    RunRecord {
        algorithm: config.algorithm,
        seed,
        initial_positions: s.initial,
        rows,
        estimates,
        flags,
        steady,
        total_mass: s.raster.total(),
        wall_time: start.elapsed(),
    }
}

fn is_steady(config: &ExperimentConfig, n: u64, series: &[f64], mass: f64) -> bool {
    n >= config.min_iterations && steady_state(series, config.steady.window, config.steady.tol * mass)
}

/// P-SBLLL, BLLL and LLL on the coverage world. Every awake robot draws a
/// trial from its motion set; utilities of the trials are evaluated at the
/// common trial profile, the current option with its own last move and the
/// trial with the move it would make.
fn run_loglinear(config: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    let start = Instant::now();
    let mut s = setup(config, seed)?;
    let n_robots = config.robots;
    let estimated = config.environment == Environment::EstimatedField;
    let em = config.estimation.em_options();
    let selection: SelectionOptions = config.estimation.selection_options(config.tau);
    let mut estimators = Vec::new();
    if estimated {
        for &c in &s.initial {
            estimators.push(Estimator::new(config.grid, c, s.raster.worth(c), config)?);
        }
    }
    let mut max_f = vec![0.0_f64; n_robots];
    let mut max_g = vec![0.0_f64; n_robots];
    let mut rows = Vec::new();
    let mut estimates = Vec::new();
    let mut series = Vec::new();
    let mut steady = false;

    for n in 1..=config.iterations {
        if estimated && n % config.estimation.n_aic as u64 == 0 {
            for (i, e) in estimators.iter_mut().enumerate() {
                let (next, _) = model_selection_round(&e.log, &e.estimate, &mut e.aic, &selection, &mut s.rng)?;
                e.estimate = next;
                snapshot(n, i, &e.estimate, &mut estimates);
            }
        }
        let positions = s.world.positions().to_vec();
        let previous = s.world.previous().to_vec();

        let awake: Vec<usize> = match config.algorithm {
            Algorithm::Psblll => {
                let mut rates = Vec::with_capacity(n_robots);
                for (i, &p) in positions.iter().enumerate() {
                    let f = s.raster.worth(p);
                    let g = s.raster.local_gradient(p);
                    max_f[i] = max_f[i].max(f);
                    max_g[i] = max_g[i].max(g);
                    let big_f = if max_f[i] > 0.0 { f / max_f[i] } else { 0.0 };
                    let big_g = if max_g[i] > 0.0 { g / max_g[i] } else { 0.0 };
                    rates.push(revision_probability(&config.revision, big_f, big_g)?);
                }
                rates.iter().enumerate().filter_map(|(i, &rp)| (s.rng.random::<f64>() < rp).then_some(i)).collect()
            }
            _ => vec![s.rng.random_range(0..n_robots)],
        };

        let mut next = positions.clone();
        let mut adopted = Vec::new();
        {
            let map_of = |i: usize| -> &dyn WorthMap {
                if estimated {
                    &estimators[i].estimate
                } else {
                    &s.raster
                }
            };
            if config.algorithm == Algorithm::Lll {
                let i = awake[0];
                let moves = s.world.constrained_moves(positions[i]);
                let mut probe = positions.clone();
                let scores: Vec<f64> = moves
                    .iter()
                    .map(|&c| {
                        probe[i] = c;
                        s.world.utility_unchecked(map_of(i), i, &probe, positions[i])
                    })
                    .collect();
                let x = logit_map(&scores, config.tau)?;
                next[i] = moves[x.sample_with(s.rng.random::<f64>())];
                adopted.push(i);
            } else {
                let mut trial = positions.clone();
                for &i in &awake {
                    let moves = s.world.constrained_moves(positions[i]);
                    trial[i] = moves[s.rng.random_range(0..moves.len())];
                }
                for &i in &awake {
                    let map = map_of(i);
                    let u_now = s.world.utility_unchecked(map, i, &positions, previous[i]);
                    let u_trial = s.world.utility_unchecked(map, i, &trial, positions[i]);
                    if s.rng.random::<f64>() < switch_probability(u_trial - u_now, config.tau) {
                        next[i] = trial[i];
                        adopted.push(i);
                    }
                }
            }
        }

        let moved = next.iter().zip(&positions).filter(|(a, b)| a != b).count();
        s.world.advance(next.clone());
        for &i in &adopted {
            s.world.lay_flag(i);
            if estimated {
                let w = s.raster.worth(next[i]);
                estimators[i].observe(next[i], w, config, &em)?;
            }
        }
        let row = record_row(&s.world, &s.raster, n, &positions, awake.len() as i64, moved);
        series.push(row.covered);
        rows.push(row);
        if is_steady(config, n, &series, s.raster.total()) {
            steady = true;
            break;
        }
    }
    Ok(finish(config, seed, s, rows, estimates, steady, start))
}

/// SOQL and first-order Q-learning. Each robot holds `P`, `Q` and `X` over
/// every grid cell and samples only inside its motion set; the received
/// payoff is its true-field utility.
fn run_qlearning(config: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    let start = Instant::now();
    let mut s = setup(config, seed)?;
    let g = config.grid;
    let constraints = ConstrainedActionMap::lattice(config.robots, g, config.coverage.motion_radius);
    let counts = vec![g * g; config.robots];
    let mut q = QState::new(&counts, s.initial.iter().map(|c| c.index(g)).collect());
    let mut rows = Vec::new();
    let mut series = Vec::new();
    let mut steady = false;

    for n in 1..=config.iterations {
        let positions = s.world.positions().to_vec();
        let world = &s.world;
        let raster = &s.raster;
        let payoff = |joint: &[usize]| -> Vec<f64> {
            let cells: Vec<Cell> = joint.iter().map(|&k| Cell::from_index(k, g)).collect();
            (0..cells.len()).map(|i| world.utility_unchecked(raster, i, &cells, positions[i])).collect()
        };
        let awake = if config.algorithm == Algorithm::Soql {
            let step = soql_episode_step(&mut q, &config.soql, &constraints, payoff, &mut s.rng);
            step.token.map_or(-1, |t| t as i64)
        } else {
            ql_episode_step(&mut q, config.soql.mu, config.soql.tau, &constraints, payoff, &mut s.rng)?;
            config.robots as i64
        };
        let next: Vec<Cell> = q.current.iter().map(|&k| Cell::from_index(k, g)).collect();
        let moved = next.iter().zip(&positions).filter(|(a, b)| a != b).count();
        s.world.advance(next.clone());
        for i in 0..config.robots {
            if next[i] != positions[i] {
                s.world.lay_flag(i);
            }
        }
        let row = record_row(&s.world, &s.raster, n, &positions, awake, moved);
        series.push(row.covered);
        rows.push(row);
        if is_steady(config, n, &series, s.raster.total()) {
            steady = true;
            break;
        }
    }
    Ok(finish(config, seed, s, rows, Vec::new(), steady, start))
}
