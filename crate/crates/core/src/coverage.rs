//! Multi-robot coverage game on a lattice.
//!
//! Robot `i` at cell `α^i(n)` that came from `α^i(n−1)` earns
//!
//! ```text
//! u^i = ϱ^i [C^i(α^i(n)) − C^i_n(α^i(n))] − K^i |α^i(n) − α^i(n−1)|
//! ```
//!
//! where `C^i` sums worth over the robot's δ-ball, `C^i_n` sums worth over
//! the intersections of that ball with every other robot's ball, and `ϱ^i`
//! is zero when the robot stands on a cell flagged by another robot.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{generate_scenario, Cell, FieldRaster, ScenarioOptions, WorthMap};
use crate::game::{Game, TableGame};

/// Geometry and cost parameters of the coverage game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoverageParams {
    /// Covering range δ.
    pub delta: f64,
    /// Radius of the one-step motion set (1.5 gives the Moore neighbourhood).
    pub motion_radius: f64,
    /// Energy coefficient `K^i`, shared by all robots.
    pub energy: f64,
    /// Foreign flags are visible within this range; `None` means `2δ`.
    pub flag_range: Option<f64>,
}

impl Default for CoverageParams {
    fn default() -> Self {
        Self { delta: 1.5, motion_radius: 1.5, energy: 3e-5, flag_range: None }
    }
}

impl CoverageParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(invalid("delta", "covering range must be positive"));
        }
        if !(self.energy > 0.0) {
            return Err(invalid("energy", "energy coefficient must be positive"));
        }
        if !(self.motion_radius >= 1.0) {
            return Err(invalid("motion_radius", "robots must be able to reach adjacent cells"));
        }
        Ok(())
    }

    pub fn detection_range(&self) -> f64 {
        self.flag_range.unwrap_or(2.0 * self.delta)
    }
}

/// Integer offsets `(dx, dy)` with `dx² + dy² ≤ r²`.
fn ball_offsets(radius: f64) -> Vec<(isize, isize)> {
    let r = radius.floor() as isize;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if ((dx * dx + dy * dy) as f64) <= radius * radius + 1e-12 {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// The shared state of a coverage run.
#[derive(Clone, Debug)]
pub struct CoverageWorld {
    grid: usize,
    field: FieldRaster,
    params: CoverageParams,
    positions: Vec<Cell>,
    previous: Vec<Cell>,
    flags: Vec<Vec<bool>>,
    flag_counts: Vec<usize>,
    sense: Vec<(isize, isize)>,
    moves: Vec<(isize, isize)>,
}

impl CoverageWorld {
    pub fn new(field: FieldRaster, params: CoverageParams, positions: Vec<Cell>) -> Result<Self> {
        params.validate()?;
        let grid = field.grid();
        if positions.is_empty() {
            return Err(invalid("robots", "at least one robot is required"));
        }
        if let Some(c) = positions.iter().find(|c| c.x >= grid || c.y >= grid) {
            return Err(invalid("positions", format!("{c:?} lies outside the {grid}x{grid} grid")));
        }
        let n = positions.len();
        Ok(Self {
            grid,
            sense: ball_offsets(params.delta),
            moves: ball_offsets(params.motion_radius),
            field,
            params,
            previous: positions.clone(),
            positions,
            flags: vec![vec![false; grid * grid]; n],
            flag_counts: vec![0; n],
        })
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn field(&self) -> &FieldRaster {
        &self.field
    }

    pub fn params(&self) -> &CoverageParams {
        &self.params
    }

    pub fn num_robots(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[Cell] {
        &self.positions
    }

    pub fn previous(&self) -> &[Cell] {
        &self.previous
    }

    /// Commits a new joint position; the current one becomes `α(n−1)`.
    pub fn advance(&mut self, next: Vec<Cell>) {
        debug_assert_eq!(next.len(), self.positions.len());
        self.previous = std::mem::replace(&mut self.positions, next);
    }

    fn shifted(&self, pos: Cell, (dx, dy): (isize, isize)) -> Option<Cell> {
        let x = pos.x as isize + dx;
        let y = pos.y as isize + dy;
        let g = self.grid as isize;
        (x >= 0 && y >= 0 && x < g && y < g).then(|| Cell::new(x as usize, y as usize))
    }

    /// `{l ∈ 𝓛 : |pos − l| ≤ radius}`, truncated at the boundary.
    pub fn neighbor_cells(&self, pos: Cell, radius: f64) -> Vec<Cell> {
        ball_offsets(radius).into_iter().filter_map(|o| self.shifted(pos, o)).collect()
    }

    fn sensed(&self, pos: Cell) -> impl Iterator<Item = Cell> + '_ {
        self.sense.iter().filter_map(move |&o| self.shifted(pos, o))
    }

    /// `A^i_c`: the motion ball around `pos`, which always contains `pos`.
    pub fn constrained_moves(&self, pos: Cell) -> Vec<Cell> {
        self.moves.iter().filter_map(|&o| self.shifted(pos, o)).collect()
    }

    /// `C^i` for a robot standing at `pos`.
    pub fn covered_worth(&self, map: &dyn WorthMap, pos: Cell) -> f64 {
        self.sensed(pos).map(|c| map.worth(c)).sum()
    }

    /// `Σ_i C^i` over the given positions, overlap not deducted.
    pub fn total_covered(&self, map: &dyn WorthMap, positions: &[Cell]) -> f64 {
        positions.iter().map(|&p| self.covered_worth(map, p)).sum()
    }

    /// `C^i_n`: worth in the intersection of robot `i`'s ball with each other
    /// robot's ball, summed separately over every other robot.
    pub fn overlap_worth(&self, map: &dyn WorthMap, robot: usize, positions: &[Cell]) -> f64 {
        let me = positions[robot];
        let delta = self.params.delta + 1e-12;
        let mut total = 0.0;
        for (j, &other) in positions.iter().enumerate() {
            if j == robot || me.distance(other) > 2.0 * delta {
                continue;
            }
            total += self.sensed(me).filter(|c| c.distance(other) <= delta).map(|c| map.worth(c)).sum::<f64>();
        }
        total
    }

    /// `ϱ^i`: zero when `pos` carries another robot's flag visible from `from`.
    pub fn flag_factor(&self, robot: usize, pos: Cell, from: Cell) -> f64 {
        if pos.distance(from) > self.params.detection_range() + 1e-12 {
            return 1.0;
        }
        let k = pos.index(self.grid);
        let foreign = self.flags.iter().enumerate().any(|(j, f)| j != robot && f[k]);
        if foreign {
            0.0
        } else {
            1.0
        }
    }

    /// Utility of `robot` when the joint position is `positions` and the
    /// robot's previous cell was `old`.
    pub fn utility(&self, map: &dyn WorthMap, robot: usize, positions: &[Cell], old: Cell) -> Result<f64> {
        let new = positions[robot];
        if new.distance(old) > self.params.motion_radius + 1e-12 {
            return Err(Error::InfeasibleTransition {
                player: robot,
                from: old.index(self.grid),
                to: new.index(self.grid),
            });
        }
        Ok(self.utility_unchecked(map, robot, positions, old))
    }

    pub(crate) fn utility_unchecked(&self, map: &dyn WorthMap, robot: usize, positions: &[Cell], old: Cell) -> f64 {
        let new = positions[robot];
        let rho = self.flag_factor(robot, new, old);
        let coverage = if rho == 0.0 {
            0.0
        } else {
            rho * (self.covered_worth(map, new) - self.overlap_worth(map, robot, positions))
        };
        coverage - self.params.energy * new.distance(old)
    }

    /// `Σ_j u^j` taken literally. Every pairwise overlap is deducted twice,
    /// once in each robot's utility.
    pub fn utility_sum(&self, map: &dyn WorthMap, positions: &[Cell], olds: &[Cell]) -> f64 {
        (0..positions.len()).map(|j| self.utility_unchecked(map, j, positions, olds[j])).sum()
    }

    /// Exact potential of the coverage game: the utility sum with every
    /// pairwise overlap shared evenly between the two robots,
    /// `Σ_j ϱ^j [C^j − ½ C^j_n] − K^j |α^j(n) − α^j(n−1)|`.
    ///
    /// A unilateral move by robot `i` changes this by exactly `Δu^i` whenever
    /// no foreign flag is in play.
    pub fn potential(&self, map: &dyn WorthMap, positions: &[Cell], olds: &[Cell]) -> f64 {
        (0..positions.len())
            .map(|j| {
                let new = positions[j];
                let rho = self.flag_factor(j, new, olds[j]);
                let coverage = if rho == 0.0 {
                    0.0
                } else {
                    rho * (self.covered_worth(map, new) - 0.5 * self.overlap_worth(map, j, positions))
                };
                coverage - self.params.energy * new.distance(olds[j])
            })
            .sum()
    }

    pub fn has_flag(&self, robot: usize, cell: Cell) -> bool {
        self.flags[robot][cell.index(self.grid)]
    }

    pub fn flag_count(&self, robot: usize) -> usize {
        self.flag_counts[robot]
    }

    pub fn flagged_cells(&self, robot: usize) -> impl Iterator<Item = Cell> + '_ {
        let g = self.grid;
        self.flags[robot].iter().enumerate().filter(|(_, f)| **f).map(move |(k, _)| Cell::from_index(k, g))
    }

    /// Adds the robot's current cell to `Υ^i`. Returns whether it was new.
    pub fn lay_flag(&mut self, robot: usize) -> bool {
        let k = self.positions[robot].index(self.grid);
        let fresh = !self.flags[robot][k];
        if fresh {
            self.flags[robot][k] = true;
            self.flag_counts[robot] += 1;
        }
        fresh
    }
}

/// A coverage world frozen at one instant, viewed as a normal-form game in
/// which each robot picks any grid cell and previous positions are fixed.
pub struct CoverageGame<'a> {
    world: &'a CoverageWorld,
    map: &'a dyn WorthMap,
    olds: Vec<Cell>,
}

impl<'a> CoverageGame<'a> {
    pub fn new(world: &'a CoverageWorld, map: &'a dyn WorthMap, olds: Vec<Cell>) -> Self {
        Self { world, map, olds }
    }

    fn cells(&self, joint: &[usize]) -> Vec<Cell> {
        joint.iter().map(|&k| Cell::from_index(k, self.world.grid)).collect()
    }

    pub fn potential_of(&self, joint: &[usize]) -> f64 {
        self.world.potential(self.map, &self.cells(joint), &self.olds)
    }
}

impl Game for CoverageGame<'_> {
    fn num_players(&self) -> usize {
        self.world.num_robots()
    }

    fn num_actions(&self, _player: usize) -> usize {
        self.world.grid * self.world.grid
    }

    fn utility(&self, player: usize, joint: &[usize]) -> f64 {
        self.world.utility_unchecked(self.map, player, &self.cells(joint), self.olds[player])
    }
}

/// Built-in coverage game for the game-definition file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoverageGameSpec {
    pub grid: usize,
    pub robots: usize,
    pub delta: f64,
    pub energy: f64,
    pub scenario_seed: u64,
    /// Previous positions `α(n−1)` as `[x, y]`; defaults to the corners.
    pub anchor: Option<Vec<[usize; 2]>>,
}

impl Default for CoverageGameSpec {
    fn default() -> Self {
        Self { grid: 3, robots: 2, delta: 1.5, energy: 3e-5, scenario_seed: 1, anchor: None }
    }
}

impl CoverageGameSpec {
    pub fn tabulate(&self) -> Result<TableGame> {
        if self.robots == 0 {
            return Err(invalid("robots", "need at least one robot"));
        }
        let field = scenario_for_small_grid(self.scenario_seed, self.grid)?;
        let anchor: Vec<Cell> = match &self.anchor {
            Some(a) if a.len() == self.robots => a.iter().map(|p| Cell::new(p[0], p[1])).collect(),
            Some(a) => return Err(Error::DimensionMismatch { expected: self.robots, actual: a.len() }),
            None => (0..self.robots)
                .map(|i| {
                    let far = self.grid - 1;
                    [Cell::new(0, 0), Cell::new(far, far), Cell::new(far, 0), Cell::new(0, far)][i % 4]
                })
                .collect(),
        };
        let params = CoverageParams { delta: self.delta, energy: self.energy, ..CoverageParams::default() };
        let world = CoverageWorld::new(field, params, anchor.clone())?;
        let game = CoverageGame::new(&world, world.field(), anchor);
        TableGame::tabulate(&game, 20_000)
    }
}

/// Random field for grids of any size: generated on a 16-cell canvas and
/// rescaled, so small oracle grids still get a smooth mixture.
pub(crate) fn scenario_for_small_grid(seed: u64, grid: usize) -> Result<FieldRaster> {
    if grid == 0 {
        return Err(invalid("grid", "grid must have at least one cell"));
    }
    let canvas = grid.max(8);
    let field = generate_scenario(seed, canvas, &ScenarioOptions::default())?;
    let scale = canvas as f64 / grid as f64;
    Ok(FieldRaster::from_fn(grid, |c| {
        let p = c.centroid();
        field.evaluate_point([p[0] * scale, p[1] * scale]) * scale * scale
    }))
}
