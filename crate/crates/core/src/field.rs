//! Gaussian-mixture worth field over an `L × L` lattice of unit cells.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A lattice cell. Its centroid sits at `(x + 0.5, y + 0.5)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    pub fn centroid(self) -> [f64; 2] {
        [self.x as f64 + 0.5, self.y as f64 + 0.5]
    }

    pub fn distance(self, other: Cell) -> f64 {
        let dx = self.x as f64 - other.x as f64;
        let dy = self.y as f64 - other.y as f64;
        dx.hypot(dy)
    }

    pub fn index(self, grid: usize) -> usize {
        self.y * grid + self.x
    }

    pub fn from_index(index: usize, grid: usize) -> Self {
        Self::new(index % grid, index / grid)
    }
}

/// Anything that assigns a worth to a cell: the true field, a raster of it,
/// or a robot's mixture estimate.
pub trait WorthMap {
    fn worth(&self, cell: Cell) -> f64;
}

/// One bivariate normal component with its weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: [f64; 2],
    /// Row-major symmetric 2×2 covariance.
    pub cov: [[f64; 2]; 2],
}

impl GaussianComponent {
    pub fn new(weight: f64, mean: [f64; 2], cov: [[f64; 2]; 2]) -> Result<Self> {
        let c = Self { weight, mean, cov };
        c.validate()?;
        Ok(c)
    }

    pub fn isotropic(weight: f64, mean: [f64; 2], sigma: f64) -> Self {
        Self { weight, mean, cov: [[sigma * sigma, 0.0], [0.0, sigma * sigma]] }
    }

    pub fn det(&self) -> f64 {
        self.cov[0][0] * self.cov[1][1] - self.cov[0][1] * self.cov[1][0]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.weight >= 0.0) {
            return Err(invalid("weight", "component weight must be non-negative"));
        }
        if (self.cov[0][1] - self.cov[1][0]).abs() > 1e-12 {
            return Err(invalid("cov", "covariance must be symmetric"));
        }
        let det = self.det();
        if !(det > 0.0) || !(self.cov[0][0] > 0.0) {
            return Err(Error::SingularCovariance(det));
        }
        Ok(())
    }

    /// Bivariate normal density `g(p | μ, Σ)`.
    pub fn density(&self, p: [f64; 2]) -> f64 {
        let det = self.det();
        let dx = p[0] - self.mean[0];
        let dy = p[1] - self.mean[1];
        let q = (self.cov[1][1] * dx * dx - 2.0 * self.cov[0][1] * dx * dy + self.cov[0][0] * dy * dy) / det;
        (-0.5 * q).exp() / (2.0 * PI * det.sqrt())
    }

    pub fn log_density(&self, p: [f64; 2]) -> f64 {
        let det = self.det();
        let dx = p[0] - self.mean[0];
        let dy = p[1] - self.mean[1];
        let q = (self.cov[1][1] * dx * dx - 2.0 * self.cov[0][1] * dx * dy + self.cov[0][0] * dy * dy) / det;
        -0.5 * q - (2.0 * PI).ln() - 0.5 * det.ln()
    }
}

/// `f(l) = Σ_j ω_j g(l | μ_j, Σ_j)` on an `L × L` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorthField {
    pub grid: usize,
    pub components: Vec<GaussianComponent>,
}

impl WorthField {
    pub fn new(grid: usize, components: Vec<GaussianComponent>) -> Result<Self> {
        if grid == 0 {
            return Err(invalid("grid", "grid must have at least one cell"));
        }
        for c in &components {
            c.validate()?;
        }
        Ok(Self { grid, components })
    }

    /// A field that is zero everywhere.
    pub fn empty(grid: usize) -> Self {
        Self { grid, components: Vec::new() }
    }

    pub fn weight_sum(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    pub fn evaluate_point(&self, p: [f64; 2]) -> f64 {
        self.components.iter().map(|c| c.weight * c.density(p)).sum()
    }

    pub fn evaluate(&self, cell: Cell) -> f64 {
        self.evaluate_point(cell.centroid())
    }

    /// Magnitude of the lattice gradient at `cell`: central differences over
    /// neighbouring centroids, one-sided at the boundary.
    pub fn local_gradient(&self, cell: Cell) -> f64 {
        lattice_gradient(self.grid, cell, |c| self.evaluate(c))
    }

    pub fn raster(&self) -> FieldRaster {
        FieldRaster::from_fn(self.grid, |c| self.evaluate(c))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("field serializes")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let f: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::new(f.grid, f.components)
    }
}

impl WorthMap for WorthField {
    fn worth(&self, cell: Cell) -> f64 {
        self.evaluate(cell)
    }
}

pub(crate) fn lattice_gradient(grid: usize, cell: Cell, f: impl Fn(Cell) -> f64) -> f64 {
    let axis = |lo: Cell, hi: Cell, span: f64| (f(hi) - f(lo)) / span;
    let gx = if grid < 2 {
        0.0
    } else if cell.x == 0 {
        axis(cell, Cell::new(1, cell.y), 1.0)
    } else if cell.x == grid - 1 {
        axis(Cell::new(cell.x - 1, cell.y), cell, 1.0)
    } else {
        axis(Cell::new(cell.x - 1, cell.y), Cell::new(cell.x + 1, cell.y), 2.0)
    };
    let gy = if grid < 2 {
        0.0
    } else if cell.y == 0 {
        axis(cell, Cell::new(cell.x, 1), 1.0)
    } else if cell.y == grid - 1 {
        axis(Cell::new(cell.x, cell.y - 1), cell, 1.0)
    } else {
        axis(Cell::new(cell.x, cell.y - 1), Cell::new(cell.x, cell.y + 1), 2.0)
    };
    gx.hypot(gy)
}

/// Field values cached per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldRaster {
    grid: usize,
    values: Vec<f64>,
}

impl FieldRaster {
    pub fn from_fn(grid: usize, f: impl Fn(Cell) -> f64) -> Self {
        let values = (0..grid * grid).map(|k| f(Cell::from_index(k, grid))).collect();
        Self { grid, values }
    }

    pub fn uniform(grid: usize, value: f64) -> Self {
        Self { grid, values: vec![value; grid * grid] }
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn local_gradient(&self, cell: Cell) -> f64 {
        lattice_gradient(self.grid, cell, |c| self.worth(c))
    }

    /// `x,y,worth` rows, one per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,worth\n");
        for (k, v) in self.values.iter().enumerate() {
            let c = Cell::from_index(k, self.grid);
            let _ = writeln!(out, "{},{},{}", c.x, c.y, v);
        }
        out
    }
}

impl WorthMap for FieldRaster {
    fn worth(&self, cell: Cell) -> f64 {
        self.values[cell.index(self.grid)]
    }
}

/// Knobs for random scenario generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioOptions {
    pub min_components: usize,
    pub max_components: usize,
    /// Concentration of the symmetric Dirichlet for weights.
    pub dirichlet_alpha: f64,
    /// Means are drawn from `[margin·L, (1 − margin)·L]`.
    pub margin: f64,
    /// Per-axis σ range as fractions of `L`.
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self {
            min_components: 1,
            max_components: 5,
            dirichlet_alpha: 3.0,
            margin: 0.1,
            sigma_min: 1.0 / 20.0,
            sigma_max: 1.0 / 8.0,
        }
    }
}

/// Draws a random mixture field. Deterministic in `seed`.
pub fn generate_scenario(seed: u64, grid: usize, opts: &ScenarioOptions) -> Result<WorthField> {
    if grid < 8 {
        return Err(invalid("grid", format!("scenarios need L >= 8, got {grid}")));
    }
    if opts.min_components == 0 || opts.min_components > opts.max_components {
        return Err(invalid("components", format!("bad range [{}, {}]", opts.min_components, opts.max_components)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(opts.min_components..=opts.max_components);
    let weights: Vec<f64> = if m == 1 {
        vec![1.0]
    } else {
        // symmetric Dirichlet via normalized Gamma draws
        let gamma = Gamma::new(opts.dirichlet_alpha, 1.0).map_err(|e| invalid("dirichlet_alpha", e.to_string()))?;
        let w: Vec<f64> = (0..m).map(|_| gamma.sample(&mut rng)).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|v| v / s).collect()
    };
    let l = grid as f64;
    let lo = opts.margin * l;
    let hi = (1.0 - opts.margin) * l;
    let components = weights
        .into_iter()
        .map(|w| {
            let mean = [rng.random_range(lo..hi), rng.random_range(lo..hi)];
            let sx = rng.random_range(opts.sigma_min * l..=opts.sigma_max * l);
            let sy = rng.random_range(opts.sigma_min * l..=opts.sigma_max * l);
            GaussianComponent { weight: w, mean, cov: [[sx * sx, 0.0], [0.0, sy * sy]] }
        })
        .collect();
    WorthField::new(grid, components)
}
