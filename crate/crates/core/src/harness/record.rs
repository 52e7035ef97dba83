use std::fmt::Write as _;
use std::time::Duration;

use crate::coverage::{CoverageParams, CoverageWorld};
use crate::error::Result;
use crate::field::{Cell, FieldRaster};

use super::config::Algorithm;

/// State after one iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRow {
    pub n: u64,
    /// `Σ_i C^i` on the true field, overlap not deducted.
    pub covered: f64,
    /// `Σ_i u^i` on the true field, overlap deducted.
    pub utility_sum: f64,
    pub potential: f64,
    /// Robots that revised (log-linear) or the perturbed player (SOQL, -1
    /// when none).
    pub awake: i64,
    /// Robots that changed cell.
    pub moved: usize,
    pub positions: Vec<Cell>,
}

/// One component of one robot's estimate at a proposal boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateRow {
    pub n: u64,
    pub robot: usize,
    pub component: usize,
    pub weight: f64,
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub initial_positions: Vec<Cell>,
    pub rows: Vec<IterationRow>,
    pub estimates: Vec<EstimateRow>,
    pub flags: Vec<Vec<Cell>>,
    pub steady: bool,
    pub total_mass: f64,
    pub wall_time: Duration,
}

impl RunRecord {
    pub fn iterations(&self) -> usize {
        self.rows.len()
    }

    pub fn covered_series(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.covered).collect()
    }

    pub fn final_positions(&self) -> &[Cell] {
        self.rows.last().map(|r| r.positions.as_slice()).unwrap_or(&self.initial_positions)
    }

    pub fn final_covered(&self) -> f64 {
        self.rows.last().map(|r| r.covered).unwrap_or(0.0)
    }

    /// First iteration whose covered worth reaches `fraction` of the final
    /// value.
    pub fn iterations_to_fraction(&self, fraction: f64) -> Option<u64> {
        let target = fraction * self.final_covered();
        self.rows.iter().find(|r| r.covered >= target).map(|r| r.n)
    }

    /// `n,covered,utility_sum,potential,awake,moved,x0,y0,x1,y1,…`
    pub fn to_csv(&self) -> String {
        let robots = self.initial_positions.len();
        let mut s = String::from("n,covered,utility_sum,potential,awake,moved");
        for i in 0..robots {
            let _ = write!(s, ",x{i},y{i}");
        }
        s.push('\n');
        for r in &self.rows {
            let _ = write!(s, "{},{},{},{},{},{}", r.n, r.covered, r.utility_sum, r.potential, r.awake, r.moved);
            for p in &r.positions {
                let _ = write!(s, ",{},{}", p.x, p.y);
            }
            s.push('\n');
        }
        s
    }

    /// `n,robot,component,weight,mx,my,cxx,cxy,cyy`
    pub fn estimates_csv(&self) -> String {
        let mut s = String::from("n,robot,component,weight,mx,my,cxx,cxy,cyy\n");
        for e in &self.estimates {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                e.n, e.robot, e.component, e.weight, e.mean[0], e.mean[1], e.cov[0][0], e.cov[0][1], e.cov[1][1]
            );
        }
        s
    }
}

/// True when the trailing `window` values span at most `tol`.
pub fn steady_state(series: &[f64], window: usize, tol: f64) -> bool {
    assert!(window >= 2, "steady-state window must be at least 2");
    if series.len() < window {
        return false;
    }
    let tail = &series[series.len() - window..];
    let (lo, hi) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi - lo <= tol
}

/// Recomputes the covered-worth column from logged positions.
pub fn recompute_covered(record: &RunRecord, field: &FieldRaster, params: &CoverageParams) -> Result<Vec<f64>> {
    let world = CoverageWorld::new(field.clone(), params.clone(), record.initial_positions.clone())?;
    Ok(record.rows.iter().map(|r| world.total_covered(field, &r.positions)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steady_examples() {
        assert!(steady_state(&[0.3; 10], 5, 0.0));
        let rising: Vec<f64> = (0..100).map(|k| k as f64 * 1e-3).collect();
        assert!(!steady_state(&rising, 20, 1e-3));
        assert!(!steady_state(&[1.0; 3], 5, 1.0));
        let mut series: Vec<f64> = (0..500).map(|k| (k as f64 / 500.0).sqrt()).collect();
        series.extend(std::iter::repeat_n(1.0, 1_000));
        let fired = (2..=series.len()).find(|&n| steady_state(&series[..n], 200, 1e-4)).unwrap();
        assert!(fired <= 500 + 200, "{fired}");
    }

    #[test]
    fn fraction_crossing() {
        let rows = [0.1, 0.5, 0.95, 1.0]
            .iter()
            .enumerate()
            .map(|(k, &c)| IterationRow {
                n: k as u64 + 1,
                covered: c,
                utility_sum: c,
                potential: c,
                awake: 0,
                moved: 0,
                positions: vec![Cell::new(0, 0)],
            })
            .collect();
        let rec = RunRecord {
            algorithm: Algorithm::Blll,
            seed: 0,
            initial_positions: vec![Cell::new(0, 0)],
            rows,
            estimates: vec![],
            flags: vec![vec![]],
            steady: false,
            total_mass: 1.0,
            wall_time: Duration::ZERO,
        };
        assert_eq!(rec.iterations_to_fraction(0.9), Some(3));
        assert_eq!(rec.to_csv().lines().count(), 5);
        assert_eq!(rec.to_csv().lines().next().unwrap(), "n,covered,utility_sum,potential,awake,moved,x0,y0");
    }
}
