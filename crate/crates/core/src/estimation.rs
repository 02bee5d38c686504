//! Posterior summaries of the time-varying density and convergence
//! diagnostics.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::Draw;
use crate::mixture::{density_grid, mean_functional};

/// Type-7 (linear interpolation) quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Bins of the histogram used for the mode of the mean functional.
pub const MODE_BINS: usize = 512;
/// Probability mass of the densest window reported as the mode.
pub const MODE_MASS: f64 = 0.1;

/// Midpoint of the narrowest run of contiguous bins of a 512-bin histogram
/// holding at least 10% of the values (ties go to the fuller run).
pub fn histogram_mode(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi > lo) {
        return lo;
    }
    let width = (hi - lo) / MODE_BINS as f64;
    let mut counts = vec![0usize; MODE_BINS];
    for &v in values {
        counts[(((v - lo) / width) as usize).min(MODE_BINS - 1)] += 1;
    }
    let need = ((MODE_MASS * values.len() as f64).ceil() as usize).max(1);
    let (mut best_len, mut best_start, mut best_count) = (usize::MAX, 0usize, 0usize);
    let (mut start, mut acc) = (0usize, 0usize);
    for end in 0..MODE_BINS {
        acc += counts[end];
        while acc - counts[start] >= need && start < end {
            acc -= counts[start];
            start += 1;
        }
        let len = end - start + 1;
        if acc >= need && (len < best_len || (len == best_len && acc > best_count)) {
            best_len = len;
            best_start = start;
            best_count = acc;
        }
    }
    lo + width * (best_start as f64 + best_len as f64 / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanSummary {
    pub t: f64,
    pub mode: f64,
    pub mean: f64,
    pub median: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Pointwise posterior summaries on a `(time, y)` grid. Density matrices are
/// indexed `[time][y]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySurface {
    pub times: Vec<f64>,
    pub y_grid: Vec<f64>,
    pub q025: Vec<Vec<f64>>,
    pub q50: Vec<Vec<f64>>,
    pub q975: Vec<Vec<f64>>,
    pub mean: Vec<Vec<f64>>,
    pub mean_functional: Vec<MeanSummary>,
}

/// Summary of a set of values, independent of their order.
fn order_free_summary(mut v: Vec<f64>) -> (f64, f64, f64, f64) {
    v.sort_by(f64::total_cmp);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (quantile_sorted(&v, 0.025), quantile_sorted(&v, 0.5), quantile_sorted(&v, 0.975), mean)
}

/// Evaluates every draw on the grid (at every time of the draws) and reduces
/// to pointwise quantiles and means. Depends only on the multiset of draws.
pub fn summarize(draws: &[Draw], y_grid: &[f64]) -> Result<DensitySurface> {
    let first = draws.first().ok_or_else(|| Error::Data("no posterior draws to summarize".into()))?;
    if y_grid.is_empty() {
        return Err(Error::param("empty y grid"));
    }
    let times = first.measure.times.clone();
    if draws.iter().any(|d| d.measure.times.len() != times.len()) {
        return Err(Error::Data("draws disagree on the time grid".into()));
    }
    let ny = y_grid.len();
    let per_time: Vec<(Vec<[f64; 4]>, MeanSummary)> = (0..times.len())
        .into_par_iter()
        .map(|i| {
            let grids: Vec<Vec<f64>> = draws.iter().map(|d| density_grid(&d.measure, i, y_grid)).collect();
            let cells = (0..ny)
                .map(|k| {
                    let (a, b, c, m) = order_free_summary(grids.iter().map(|g| g[k]).collect());
                    [a, b, c, m]
                })
                .collect();
            let etas: Vec<f64> = draws.iter().map(|d| mean_functional(&d.measure, i)).collect();
            let mode = {
                let mut s = etas.clone();
                s.sort_by(f64::total_cmp);
                histogram_mode(&s)
            };
            let (lo, median, hi, mean) = order_free_summary(etas);
            (cells, MeanSummary { t: times[i], mode, mean, median, lo, hi })
        })
        .collect();
    let pick = |k: usize| per_time.iter().map(|(c, _)| c.iter().map(|q| q[k]).collect()).collect();
    Ok(DensitySurface {
        y_grid: y_grid.to_vec(),
        q025: pick(0),
        q50: pick(1),
        q975: pick(2),
        mean: pick(3),
        mean_functional: per_time.into_iter().map(|(_, m)| m).collect(),
        times,
    })
}

/// `n` equally spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

impl DensitySurface {
    /// Long format: `t,y,q025,q50,q975,mean`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "y", "q025", "q50", "q975", "mean"]).map_err(csv_err)?;
        for (i, t) in self.times.iter().enumerate() {
            for (k, y) in self.y_grid.iter().enumerate() {
                wr.write_record([
                    t.to_string(),
                    y.to_string(),
                    self.q025[i][k].to_string(),
                    self.q50[i][k].to_string(),
                    self.q975[i][k].to_string(),
                    self.mean[i][k].to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    /// `t,mode,mean,lo,hi`.
    pub fn write_mean_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "mode", "mean", "lo", "hi"]).map_err(csv_err)?;
        for m in &self.mean_functional {
            wr.write_record([m.t, m.mode, m.mean, m.lo, m.hi].map(|v| v.to_string())).map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer(w, self)?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Data(e.to_string())
}

/// Potential scale reduction factor of equal-length scalar chains, floored
/// at 1.
pub fn gelman_rubin(chains: &[Vec<f64>]) -> Result<f64> {
    if chains.len() < 2 {
        return Err(Error::param("need at least two chains"));
    }
    let n = chains[0].len();
    if n < 10 || chains.iter().any(|c| c.len() != n) {
        return Err(Error::param("chains must have equal lengths of at least 10"));
    }
    let nf = n as f64;
    let stats: Vec<(f64, f64)> = chains.iter().map(|c| crate::stats::mean_var(c)).collect();
    let w = stats.iter().map(|s| s.1).sum::<f64>() / stats.len() as f64;
    if !(w > 0.0) {
        return Err(Error::Degenerate("chains have zero within-chain variance".into()));
    }
    let means: Vec<f64> = stats.iter().map(|s| s.0).collect();
    let b = nf * crate::stats::mean_var(&means).1;
    let var_plus = (nf - 1.0) / nf * w + b / nf;
    Ok((var_plus / w).sqrt().max(1.0))
}

/// Effective sample size with Geyer's initial monotone sequence estimator,
/// capped at the trace length. A trace stuck for either half of its length
/// is rejected as degenerate.
pub fn effective_sample_size(trace: &[f64]) -> Result<f64> {
    let n = trace.len();
    if n < 10 {
        return Err(Error::param("trace needs at least 10 values"));
    }
    let (mean, _) = crate::stats::mean_var(trace);
    let centered: Vec<f64> = trace.iter().map(|x| x - mean).collect();
    let acov =
        |lag: usize| centered[..n - lag].iter().zip(&centered[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    let c0 = acov(0);
    let half = n / 2;
    if !(c0 > 0.0) || constant(&trace[..half]) || constant(&trace[half..]) {
        return Err(Error::Degenerate("trace is constant over half its length or more".into()));
    }
    let mut sum = 0.0;
    let mut prev_pair = f64::INFINITY;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = (acov(2 * k) + acov(2 * k + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        sum += pair;
        prev_pair = pair;
        k += 1;
    }
    let tau = (2.0 * sum - 1.0).max(1e-12);
    Ok((n as f64 / tau).min(n as f64))
}

fn constant(x: &[f64]) -> bool {
    x.iter().all(|v| *v == x[0])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    /// Share of times whose true mean lies in the 95% band.
    pub mean_coverage: f64,
    /// Share of `(t, y)` cells whose true density lies in the 95% band.
    pub density_coverage: f64,
    /// RMSE of the posterior median of the mean functional.
    pub median_rmse: f64,
    /// RMSE of the posterior mode of the mean functional.
    pub mode_rmse: f64,
}

/// Compares a surface with known truth `t -> mean` and `(t, y) -> density`.
pub fn coverage_report<M, D>(surface: &DensitySurface, truth_mean: M, truth_density: D) -> Result<CoverageReport>
where
    M: Fn(f64) -> f64,
    D: Fn(f64, f64) -> f64,
{
    let nt = surface.times.len();
    if nt == 0 || surface.mean_functional.len() != nt || surface.q025.len() != nt {
        return Err(Error::Data("surface grids do not match".into()));
    }
    let mut covered = 0usize;
    let (mut se_med, mut se_mode) = (0.0, 0.0);
    for m in &surface.mean_functional {
        let truth = truth_mean(m.t);
        if m.lo <= truth && truth <= m.hi {
            covered += 1;
        }
        se_med += (m.median - truth).powi(2);
        se_mode += (m.mode - truth).powi(2);
    }
    let mut cells = 0usize;
    let mut inside = 0usize;
    for (i, &t) in surface.times.iter().enumerate() {
        for (k, &y) in surface.y_grid.iter().enumerate() {
            let f = truth_density(t, y);
            cells += 1;
            if surface.q025[i][k] <= f && f <= surface.q975[i][k] {
                inside += 1;
            }
        }
    }
    Ok(CoverageReport {
        mean_coverage: covered as f64 / nt as f64,
        density_coverage: inside as f64 / cells as f64,
        median_rmse: (se_med / nt as f64).sqrt(),
        mode_rmse: (se_mode / nt as f64).sqrt(),
    })
}
