use std::fmt::Write as _;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::record::RunRecord;
use super::runs::run;
use super::svg::band_plot;

/// One `(config, seed)` cell of a sweep.
#[derive(Debug)]
pub struct SweepCell {
    pub config: usize,
    pub seed: u64,
    pub outcome: Result<RunRecord, String>,
}

/// Per-iteration mean and min/max envelope of covered worth over seeds.
/// Runs that stopped early are held at their final value.
#[derive(Clone, Debug, PartialEq)]
pub struct Band {
    pub label: String,
    pub mean: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

#[derive(Debug)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
    pub bands: Vec<Band>,
}

/// Runs every config against `seeds` (or its own seed list when `seeds`
/// is empty), in parallel. Failures are kept per cell.
pub fn sweep(configs: &[ExperimentConfig], seeds: &[u64]) -> SweepReport {
    let jobs: Vec<(usize, u64)> = configs
        .iter()
        .enumerate()
        .flat_map(|(k, c)| {
            let list = if seeds.is_empty() { c.seeds.clone() } else { seeds.to_vec() };
            list.into_iter().map(move |s| (k, s))
        })
        .collect();
    let cells: Vec<SweepCell> = jobs
        .par_iter()
        .map(|&(k, seed)| SweepCell { config: k, seed, outcome: run(&configs[k], seed).map_err(|e| e.to_string()) })
        .collect();
    let bands = configs
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let series: Vec<Vec<f64>> = cells
                .iter()
                .filter(|cell| cell.config == k)
                .filter_map(|cell| cell.outcome.as_ref().ok())
                .map(RunRecord::covered_series)
                .collect();
            band(c.label(), &series)
        })
        .collect();
    SweepReport { cells, bands }
}

pub fn band(label: String, series: &[Vec<f64>]) -> Band {
    let len = series.iter().map(Vec::len).max().unwrap_or(0);
    let mut out =
        Band { label, mean: vec![0.0; len], min: vec![f64::INFINITY; len], max: vec![f64::NEG_INFINITY; len] };
    for n in 0..len {
        for s in series {
            let v = match s.get(n).or(s.last()) {
                Some(&v) => v,
                None => continue,
            };
            out.mean[n] += v;
            out.min[n] = out.min[n].min(v);
            out.max[n] = out.max[n].max(v);
        }
        out.mean[n] /= series.iter().filter(|s| !s.is_empty()).count() as f64;
    }
    out
}

impl SweepReport {
    /// `n,<label>_mean,<label>_min,<label>_max,…`
    pub fn bands_csv(&self) -> String {
        let len = self.bands.iter().map(|b| b.mean.len()).max().unwrap_or(0);
        let mut s = String::from("n");
        for b in &self.bands {
            let _ = write!(s, ",{0}_mean,{0}_min,{0}_max", b.label);
        }
        s.push('\n');
        for n in 0..len {
            let _ = write!(s, "{}", n + 1);
            for b in &self.bands {
                match b.mean.get(n) {
                    Some(m) => {
                        let _ = write!(s, ",{},{},{}", m, b.min[n], b.max[n]);
                    }
                    None => s.push_str(",,,"),
                }
            }
            s.push('\n');
        }
        s
    }

    /// `label,seed,status,iterations,final_covered,steady,iters_to_90pct,error`
    pub fn summary_csv(&self, configs: &[ExperimentConfig]) -> String {
        let mut s = String::from("label,seed,status,iterations,final_covered,steady,iters_to_90pct,error\n");
        for c in &self.cells {
            let label = configs[c.config].label();
            match &c.outcome {
                Ok(r) => {
                    let t90 = r.iterations_to_fraction(0.9).map(|v| v.to_string()).unwrap_or_default();
                    let _ = writeln!(
                        s,
                        "{label},{},ok,{},{},{},{t90},",
                        c.seed,
                        r.iterations(),
                        r.final_covered(),
                        r.steady
                    );
                }
                Err(e) => {
                    let _ = writeln!(s, "{label},{},failed,,,,,\"{}\"", c.seed, e.replace('"', "'"));
                }
            }
        }
        s
    }

    pub fn to_svg(&self) -> String {
        band_plot(&self.bands, "iteration", "covered worth")
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.outcome.is_err()).count()
    }
}
