//! Two-segment linear fit of quality against group size with an estimated
//! breakpoint `N_c`, bootstrap uncertainties and the derived critical masses.
//!
//! Breakpoint search is exact. The partition of the data into left and right
//! segments only changes at observed sizes, so the candidates are every
//! distinct size (points equal to the breakpoint belong to both segments in
//! free mode) and every open interval between consecutive distinct sizes:
//!
//! * free mode fits each side independently; on an open interval the SSE is
//!   constant and, when the two lines cross inside the interval, the crossing
//!   is reported as the breakpoint;
//! * continuous mode fits a hinge. On an open interval the constrained optimum
//!   is the free fit when its crossing lies inside the interval and otherwise
//!   sits on an endpoint, which is itself a candidate.
//!
//! Each segment must contain at least [`MIN_SEGMENT_DISTINCT`] distinct sizes.
//! Ties in SSE resolve toward the smaller breakpoint.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::ols::{fit_design, hat_values, simple_line, total_sum_of_squares};

/// Minimum number of distinct sizes on each side of a breakpoint.
pub const MIN_SEGMENT_DISTINCT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContinuityMode {
    /// Independent lines on `N <= N_c` and `N >= N_c`.
    Free,
    /// Lines constrained to meet at `N_c`.
    Continuous,
}

impl FromStr for ContinuityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "free" => Ok(Self::Free),
            "continuous" => Ok(Self::Continuous),
            other => Err(Error::Usage(format!("unknown fit mode '{other}', expected free or continuous"))),
        }
    }
}

impl fmt::Display for ContinuityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Free => "free",
            Self::Continuous => "continuous",
        })
    }
}

/// Intercepts, slopes and breakpoint of the two-segment model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseParams {
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
    pub breakpoint: f64,
}

impl PiecewiseParams {
    /// Expected quality at size `n`; the left branch applies at `n == N_c`.
    pub fn predict(&self, n: f64) -> f64 {
        if n <= self.breakpoint {
            self.a1 + self.b1 * n
        } else {
            self.a2 + self.b2 * n
        }
    }

    fn as_array(&self) -> [f64; 5] {
        [self.a1, self.b1, self.a2, self.b2, self.breakpoint]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseErrors {
    pub se_a1: f64,
    pub se_b1: f64,
    pub se_a2: f64,
    pub se_b2: f64,
    pub se_breakpoint: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseFit {
    pub params: PiecewiseParams,
    pub mode: ContinuityMode,
    /// Minimised objective. In free mode a point sitting exactly on the
    /// breakpoint contributes to both segments.
    pub sse: f64,
    pub r_squared: f64,
    /// Record indices of the active points the fit was computed on.
    pub indices: Vec<usize>,
    /// `s - <s>(N)` for each active record, in dataset order.
    pub residuals: Vec<f64>,
    pub n_left: usize,
    pub n_right: usize,
    pub errors: Option<PiecewiseErrors>,
}

impl PiecewiseFit {
    pub fn predict(&self, n: f64) -> f64 {
        self.params.predict(n)
    }

    pub fn breakpoint(&self) -> f64 {
        self.params.breakpoint
    }

    /// Diagonal of the hat matrix of the final segment design, per active record.
    pub fn leverage(&self, dataset: &Dataset) -> Result<Vec<(usize, f64)>> {
        self.check_dataset(dataset)?;
        let x = dataset.active_headcounts();
        let c = self.params.breakpoint;
        let design = match self.mode {
            ContinuityMode::Continuous => {
                DMatrix::from_fn(x.len(), 3, |i, j| match j {
                    0 => 1.0,
                    1 => x[i],
                    _ => (x[i] - c).max(0.0),
                })
            }
            ContinuityMode::Free => DMatrix::from_fn(x.len(), 4, |i, j| {
                let left = x[i] <= c;
                match (j, left) {
                    (0, true) | (2, false) => 1.0,
                    (1, true) | (3, false) => x[i],
                    _ => 0.0,
                }
            }),
        };
        let h = hat_values(&design)?;
        Ok(self.indices.iter().copied().zip(h).collect())
    }

    pub(crate) fn check_dataset(&self, dataset: &Dataset) -> Result<()> {
        if dataset.active_indices() != self.indices {
            return Err(Error::State(
                "piecewise fit was computed on a different set of active records".into(),
            ));
        }
        Ok(())
    }
}

/// Fits the two-segment model to the active records of `dataset`.
pub fn fit_piecewise(dataset: &Dataset, mode: ContinuityMode) -> Result<PiecewiseFit> {
    let x = dataset.active_headcounts();
    let y = dataset.active_qualities();
    if x.len() < 4 {
        return Err(Error::Validation(format!(
            "a piecewise fit needs at least 4 active records, got {}",
            x.len()
        )));
    }
    let found = search(&x, &y, mode)?;
    let params = found.params;
    let residuals: Vec<f64> = x.iter().zip(&y).map(|(n, s)| s - params.predict(*n)).collect();
    let sst = total_sum_of_squares(&y);
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let r_squared = if sst > 0.0 { 1.0 - rss / sst } else { 1.0 };
    Ok(PiecewiseFit {
        params,
        mode,
        sse: found.sse,
        r_squared,
        indices: dataset.active_indices(),
        residuals,
        n_left: x.iter().filter(|n| **n <= params.breakpoint).count(),
        n_right: x.iter().filter(|n| **n >= params.breakpoint).count(),
        errors: None,
    })
}

#[derive(Debug, Clone, Copy)]
struct Found {
    params: PiecewiseParams,
    sse: f64,
}

fn distinct_sorted(x: &[f64]) -> Vec<f64> {
    let mut u = x.to_vec();
    u.sort_by(|a, b| a.partial_cmp(b).expect("finite sizes"));
    u.dedup();
    u
}

fn split(x: &[f64], y: &[f64], keep: impl Fn(f64) -> bool) -> (Vec<f64>, Vec<f64>) {
    x.iter().zip(y).filter(|(n, _)| keep(**n)).map(|(n, s)| (*n, *s)).unzip()
}

fn tie_tolerance(y: &[f64]) -> f64 {
    let sum_sq: f64 = y.iter().map(|v| v * v).sum();
    1e-9 * total_sum_of_squares(y) + 1e-13 * sum_sq + f64::MIN_POSITIVE
}

fn search(x: &[f64], y: &[f64], mode: ContinuityMode) -> Result<Found> {
    let u = distinct_sorted(x);
    if u.len() == 1 {
        return Err(Error::Validation("all sizes are identical".into()));
    }
    let m = u.len();
    let k = MIN_SEGMENT_DISTINCT;
    if m < 2 * k - 1 {
        return Err(Error::DegeneratePartition(format!(
            "{m} distinct sizes cannot give {k} distinct sizes to each segment"
        )));
    }
    let tol = tie_tolerance(y);
    let mut best: Option<Found> = None;
    let mut consider = |cand: Option<Found>| {
        if let Some(c) = cand {
            if best.map_or(true, |b| c.sse < b.sse - tol) {
                best = Some(c);
            }
        }
    };
    // Data-point candidates u[k-1..=m-k], open intervals (u[j], u[j+1]) for j in k-1..=m-k-1,
    // visited in increasing breakpoint order.
    for j in (k - 1)..=(m - k) {
        consider(match mode {
            ContinuityMode::Free => free_at(x, y, u[j]),
            ContinuityMode::Continuous => hinge_at(x, y, u[j]),
        });
        if j + 1 <= m - k {
            consider(interval_candidate(x, y, u[j], u[j + 1], mode, tol));
        }
    }
    best.ok_or_else(|| Error::DegeneratePartition("no admissible breakpoint".into()))
}

fn free_at(x: &[f64], y: &[f64], c: f64) -> Option<Found> {
    let (xl, yl) = split(x, y, |n| n <= c);
    let (xr, yr) = split(x, y, |n| n >= c);
    if distinct_sorted(&xl).len() < MIN_SEGMENT_DISTINCT || distinct_sorted(&xr).len() < MIN_SEGMENT_DISTINCT {
        return None;
    }
    let (a1, b1, s1) = simple_line(&xl, &yl)?;
    let (a2, b2, s2) = simple_line(&xr, &yr)?;
    Some(Found { params: PiecewiseParams { a1, b1, a2, b2, breakpoint: c }, sse: s1 + s2 })
}

fn hinge_at(x: &[f64], y: &[f64], c: f64) -> Option<Found> {
    let left = distinct_sorted(&x.iter().copied().filter(|n| *n <= c).collect::<Vec<_>>()).len();
    let right = distinct_sorted(&x.iter().copied().filter(|n| *n >= c).collect::<Vec<_>>()).len();
    if left < MIN_SEGMENT_DISTINCT || right < MIN_SEGMENT_DISTINCT {
        return None;
    }
    let design = DMatrix::from_fn(x.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => x[i],
        _ => (x[i] - c).max(0.0),
    });
    let fit = fit_design(&design, y).ok()?;
    let (a1, b1, d) = (fit.coefficients[0], fit.coefficients[1], fit.coefficients[2]);
    Some(Found {
        params: PiecewiseParams { a1, b1, a2: a1 - d * c, b2: b1 + d, breakpoint: c },
        sse: fit.sse,
    })
}

fn crossing(p: &PiecewiseParams) -> Option<f64> {
    let db = p.b1 - p.b2;
    if db.abs() <= 1e-12 * (p.b1.abs() + p.b2.abs()) || db == 0.0 {
        return None;
    }
    Some((p.a2 - p.a1) / db)
}

fn interval_candidate(x: &[f64], y: &[f64], lo: f64, hi: f64, mode: ContinuityMode, tol: f64) -> Option<Found> {
    let (xl, yl) = split(x, y, |n| n <= lo);
    let (xr, yr) = split(x, y, |n| n >= hi);
    let (a1, b1, s1) = simple_line(&xl, &yl)?;
    let (a2, b2, s2) = simple_line(&xr, &yr)?;
    let mut found = Found {
        params: PiecewiseParams { a1, b1, a2, b2, breakpoint: 0.5 * (lo + hi) },
        sse: s1 + s2,
    };
    let cross = crossing(&found.params);
    match mode {
        ContinuityMode::Continuous => {
            let c = cross.filter(|c| *c > lo && *c < hi)?;
            found.params.breakpoint = c;
            Some(found)
        }
        ContinuityMode::Free => {
            if let Some(c) = cross.filter(|c| *c >= lo && *c <= hi) {
                if c > lo && c < hi {
                    found.params.breakpoint = c;
                } else if let Some(at) = free_at(x, y, c) {
                    if at.sse <= found.sse + tol {
                        return Some(at);
                    }
                }
            }
            Some(found)
        }
    }
}

/// SSE of the model with the breakpoint held at `c`, or `None` if `c` leaves
/// fewer than [`MIN_SEGMENT_DISTINCT`] distinct sizes on either side.
pub fn sse_at(x: &[f64], y: &[f64], c: f64, mode: ContinuityMode) -> Option<f64> {
    match mode {
        ContinuityMode::Free => free_at(x, y, c).map(|f| f.sse),
        ContinuityMode::Continuous => hinge_at(x, y, c).map(|f| f.sse),
    }
}

/// Case-resampling bootstrap of a piecewise fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bootstrap {
    /// The original fit with `errors` filled in.
    pub fit: PiecewiseFit,
    /// Parameters of every non-degenerate resample, in resample order.
    pub replicates: Vec<PiecewiseParams>,
    pub resamples: usize,
    pub discarded: usize,
    pub seed: u64,
}

/// Minimum number of bootstrap resamples accepted.
pub const MIN_RESAMPLES: usize = 200;

/// Resamples the active records with replacement `resamples` times, refits
/// each resample and takes standard deviations of the replicate parameters.
///
/// Resample `i` draws from its own ChaCha8 stream `(seed, i)`, so results do
/// not depend on thread scheduling.
pub fn bootstrap_errors(dataset: &Dataset, fit: &PiecewiseFit, resamples: usize, seed: u64) -> Result<Bootstrap> {
    if resamples < MIN_RESAMPLES {
        return Err(Error::Validation(format!(
            "bootstrap needs at least {MIN_RESAMPLES} resamples, got {resamples}"
        )));
    }
    fit.check_dataset(dataset)?;
    let x = dataset.active_headcounts();
    let y = dataset.active_qualities();
    let n = x.len();
    let mode = fit.mode;
    let outcomes: Vec<Option<PiecewiseParams>> = (0..resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let (xs, ys): (Vec<f64>, Vec<f64>) = (0..n)
                .map(|_| {
                    let j = rng.random_range(0..n);
                    (x[j], y[j])
                })
                .unzip();
            search(&xs, &ys, mode).ok().map(|f| f.params)
        })
        .collect();
    let replicates: Vec<PiecewiseParams> = outcomes.into_iter().flatten().collect();
    let discarded = resamples - replicates.len();
    if 2 * discarded > resamples || replicates.len() < 2 {
        return Err(Error::Unstable { discarded, resamples });
    }
    let sd = |k: usize| {
        let vals: Vec<f64> = replicates.iter().map(|p| p.as_array()[k]).collect();
        sample_sd(&vals)
    };
    let mut fit = fit.clone();
    fit.errors = Some(PiecewiseErrors {
        se_a1: sd(0),
        se_b1: sd(1),
        se_a2: sd(2),
        se_b2: sd(3),
        se_breakpoint: sd(4),
    });
    Ok(Bootstrap { fit, replicates, resamples, discarded, seed })
}

pub(crate) fn sample_sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Linear-interpolated quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Pointwise prediction band over a grid of sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBand {
    pub level: f64,
    pub grid: Vec<f64>,
    pub prediction: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Percentile band of the bootstrap replicate predictions at each grid size.
/// The band is widened where needed so that it always contains the point fit.
pub fn confidence_band(boot: &Bootstrap, grid: &[f64], level: f64) -> Result<ConfidenceBand> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Validation(format!("confidence level must lie in (0, 1), got {level}")));
    }
    if boot.replicates.is_empty() {
        return Err(Error::State("bootstrap holds no replicates".into()));
    }
    let alpha = 1.0 - level;
    let mut band = ConfidenceBand {
        level,
        grid: grid.to_vec(),
        prediction: Vec::with_capacity(grid.len()),
        lower: Vec::with_capacity(grid.len()),
        upper: Vec::with_capacity(grid.len()),
    };
    let mut preds = Vec::with_capacity(boot.replicates.len());
    for &n in grid {
        preds.clear();
        preds.extend(boot.replicates.iter().map(|p| p.predict(n)));
        preds.sort_by(|a, b| a.partial_cmp(b).expect("finite predictions"));
        let center = boot.fit.predict(n);
        band.prediction.push(center);
        band.lower.push(quantile_sorted(&preds, alpha / 2.0).min(center));
        band.upper.push(quantile_sorted(&preds, 1.0 - alpha / 2.0).max(center));
    }
    Ok(band)
}

/// `count` evenly spaced sizes spanning `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect(),
    }
}

/// Lower and upper critical masses, `N_k = N_c / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalMasses {
    pub lower: f64,
    pub upper: f64,
    pub se_lower: Option<f64>,
    pub se_upper: Option<f64>,
}

impl CriticalMasses {
    pub fn from_breakpoint(breakpoint: f64, se_breakpoint: Option<f64>) -> Result<Self> {
        if !(breakpoint.is_finite() && breakpoint > 0.0) {
            return Err(Error::Validation(format!("breakpoint must be positive, got {breakpoint}")));
        }
        Ok(Self {
            lower: breakpoint / 2.0,
            upper: breakpoint,
            se_lower: se_breakpoint.map(|s| s / 2.0),
            se_upper: se_breakpoint,
        })
    }

    /// Lower critical mass rounded to whole researchers, e.g. `(9, Some(3))`.
    pub fn rounded_lower(&self) -> (i64, Option<i64>) {
        (self.lower.round() as i64, self.se_lower.map(|s| s.round() as i64))
    }

    pub fn headline(&self) -> String {
        match self.rounded_lower() {
            (v, Some(e)) => format!("N_k = {v} \u{b1} {e}"),
            (v, None) => format!("N_k = {v}"),
        }
    }
}

pub fn critical_masses(fit: &PiecewiseFit) -> Result<CriticalMasses> {
    CriticalMasses::from_breakpoint(fit.params.breakpoint, fit.errors.map(|e| e.se_breakpoint))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeClass {
    Small,
    Medium,
    Large,
}

impl SizeClass {
    /// small: `N < N_k`, medium: `N_k <= N < N_c`, large: `N >= N_c`.
    pub fn of(n: f64, masses: &CriticalMasses) -> Self {
        if n < masses.lower {
            Self::Small
        } else if n < masses.upper {
            Self::Medium
        } else {
            Self::Large
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub classes: Vec<(usize, SizeClass)>,
    pub small: usize,
    pub medium: usize,
    pub large: usize,
}

impl Classification {
    pub fn total(&self) -> usize {
        self.small + self.medium + self.large
    }
}

/// Classifies every active record by size.
pub fn classify(dataset: &Dataset, masses: &CriticalMasses) -> Classification {
    let classes: Vec<(usize, SizeClass)> =
        dataset.active().map(|r| (r.index, SizeClass::of(r.headcount, masses))).collect();
    let count = |c: SizeClass| classes.iter().filter(|(_, k)| *k == c).count();
    Classification {
        small: count(SizeClass::Small),
        medium: count(SizeClass::Medium),
        large: count(SizeClass::Large),
        classes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn line_dataset() -> Dataset {
        let x: Vec<f64> = (2..=20).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|n| 2.0 + 3.0 * n).collect();
        Dataset::from_pairs(&x, &y).unwrap()
    }

    #[test]
    fn single_line_takes_smallest_breakpoint() {
        for mode in [ContinuityMode::Free, ContinuityMode::Continuous] {
            let fit = fit_piecewise(&line_dataset(), mode).unwrap();
            assert_abs_diff_eq!(fit.params.b1, 3.0, epsilon = 1e-9);
            assert_abs_diff_eq!(fit.params.b2, 3.0, epsilon = 1e-9);
            assert!(fit.residuals.iter().all(|r| r.abs() < 1e-9));
            assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
            // third distinct size is the first admissible candidate
            assert_eq!(fit.breakpoint(), 4.0, "{mode}");
        }
    }

    #[test]
    fn identical_sizes_rejected() {
        let ds = Dataset::from_pairs(&[5.0; 8], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]).unwrap();
        assert!(matches!(fit_piecewise(&ds, ContinuityMode::Free), Err(Error::Validation(_))));
    }

    #[test]
    fn too_few_distinct_sizes() {
        let ds = Dataset::from_pairs(&[1.0, 2.0, 3.0, 4.0, 4.0], &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!(matches!(fit_piecewise(&ds, ContinuityMode::Free), Err(Error::DegeneratePartition(_))));
        let ds = Dataset::from_pairs(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(fit_piecewise(&ds, ContinuityMode::Free), Err(Error::Validation(_))));
    }

    #[test]
    fn continuous_mode_meets_at_breakpoint() {
        let ds = Dataset::fixture().exclude(&crate::Selector::Index(9)).unwrap();
        let fit = fit_piecewise(&ds, ContinuityMode::Continuous).unwrap();
        let p = fit.params;
        assert_abs_diff_eq!(p.a1 + p.b1 * p.breakpoint, p.a2 + p.b2 * p.breakpoint, epsilon = 1e-9);
        assert!(fit.n_left >= 3 && fit.n_right >= 3);
    }

    #[test]
    fn critical_mass_examples() {
        let m = CriticalMasses::from_breakpoint(17.4, Some(5.6)).unwrap();
        assert_abs_diff_eq!(m.lower, 8.7, epsilon = 1e-12);
        assert_abs_diff_eq!(m.se_lower.unwrap(), 2.8, epsilon = 1e-12);
        assert_eq!(m.rounded_lower(), (9, Some(3)));
        assert_eq!(m.upper, 2.0 * m.lower);
        assert_eq!(m.headline(), "N_k = 9 \u{b1} 3");
        assert_eq!(CriticalMasses::from_breakpoint(12.5, None).unwrap().lower, 6.25);
        assert!(CriticalMasses::from_breakpoint(0.0, None).is_err());
    }

    #[test]
    fn class_boundaries() {
        let m = CriticalMasses::from_breakpoint(18.0, None).unwrap();
        assert_eq!(SizeClass::of(8.99, &m), SizeClass::Small);
        assert_eq!(SizeClass::of(9.0, &m), SizeClass::Medium);
        assert_eq!(SizeClass::of(17.99, &m), SizeClass::Medium);
        assert_eq!(SizeClass::of(18.0, &m), SizeClass::Large);
    }

    #[test]
    fn bootstrap_validates_inputs() {
        let ds = line_dataset();
        let fit = fit_piecewise(&ds, ContinuityMode::Continuous).unwrap();
        assert!(matches!(bootstrap_errors(&ds, &fit, 199, 1), Err(Error::Validation(_))));
        let other = ds.exclude(&crate::Selector::Index(3)).unwrap();
        assert!(matches!(bootstrap_errors(&other, &fit, 200, 1), Err(Error::State(_))));
    }

    #[test]
    fn bootstrap_flags_unstable_data() {
        // Six distinct sizes: most resamples lose a size and cannot be split.
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let y = [1.0, 2.0, 3.5, 3.0, 2.0, 1.0];
        let ds = Dataset::from_pairs(&x, &y).unwrap();
        let fit = fit_piecewise(&ds, ContinuityMode::Free).unwrap();
        assert!(matches!(bootstrap_errors(&ds, &fit, 300, 4), Err(Error::Unstable { .. })));
    }

    #[test]
    fn band_rejects_bad_level() {
        let ds = line_dataset();
        let fit = fit_piecewise(&ds, ContinuityMode::Continuous).unwrap();
        let boot = bootstrap_errors(&ds, &fit, 200, 7).unwrap();
        assert!(confidence_band(&boot, &[5.0], 1.0).is_err());
        assert!(confidence_band(&boot, &[5.0], 0.0).is_err());
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 0.5), 3.0);
        assert_eq!(quantile_sorted(&v, 0.125), 1.5);
        assert_eq!(linspace(1.0, 3.0, 3), vec![1.0, 2.0, 3.0]);
    }
}
