//! End-to-end analysis: load, exclude, fit, bootstrap, test, compare, rank
//! and classify, with a JSON report and CSV plot data.

use std::fmt;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::Value;

use crate::data::{Dataset, Selector, WeightScheme};
use crate::error::{Error, Result};
use crate::hypothesis::{ks_normality, test_equal_slopes, test_no_correlation, test_zero_right_slope, TestResult};
use crate::nls::{compare_ansaetze, CompareOptions, Comparison};
use crate::ranking::{rank_groups, residuals_vs_mean, residuals_vs_model, RankedGroup, ResidualReport};
use crate::segmented::{
    bootstrap_errors, classify, confidence_band, critical_masses, fit_piecewise, linspace, Bootstrap, Classification,
    ConfidenceBand, ContinuityMode, CriticalMasses, MIN_RESAMPLES,
};

/// Significant digits kept for every float in JSON and CSV output.
pub const SIGNIFICANT_DIGITS: usize = 10;
/// Grid points in the fit-line plot data.
pub const FIT_GRID_POINTS: usize = 200;
/// A record is an outlier candidate when its leverage exceeds this multiple of the mean.
pub const LEVERAGE_FLAG_RATIO: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// `None` selects the embedded 2008 Statistics & OR fixture.
    pub input: Option<PathBuf>,
    pub weights: String,
    pub exclude: Vec<String>,
    pub mode: ContinuityMode,
    pub resamples: usize,
    pub seed: u64,
    pub level: f64,
}

impl RunConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            input: None,
            weights: "2009".into(),
            exclude: Vec::new(),
            mode: ContinuityMode::Continuous,
            resamples: 10_000,
            seed,
            level: 0.95,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resamples < MIN_RESAMPLES {
            return Err(Error::Usage(format!(
                "resamples must be at least {MIN_RESAMPLES}, got {}",
                self.resamples
            )));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Usage(format!("confidence level must lie in (0, 1), got {}", self.level)));
        }
        self.weights.parse::<WeightScheme>()?;
        Ok(())
    }

    /// Loads the input and applies the exclusions.
    pub fn dataset(&self) -> std::result::Result<Dataset, StageError> {
        let scheme = self.weights.parse::<WeightScheme>().map_err(StageError::at("config"))?;
        let mut ds = match &self.input {
            Some(path) => Dataset::load(path, &scheme).map_err(StageError::at("load"))?,
            None => Dataset::fixture(),
        };
        for sel in &self.exclude {
            let selector: Selector = sel.parse().map_err(StageError::at("exclude"))?;
            ds = ds.exclude(&selector).map_err(StageError::at("exclude"))?;
        }
        Ok(ds)
    }
}

/// An error tagged with the pipeline stage that raised it.
#[derive(Debug, Clone, PartialEq)]
pub struct StageError {
    pub stage: &'static str,
    pub error: Error,
}

impl StageError {
    pub fn at(stage: &'static str) -> impl Fn(Error) -> StageError {
        move |error| StageError { stage, error }
    }

    /// 2 for I/O and usage problems, 1 for analysis failures.
    pub fn exit_code(&self) -> i32 {
        match self.error {
            Error::Io(_) | Error::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": { "stage": self.stage, "kind": error_kind(&self.error), "message": self.error.to_string() }
        })
        .to_string()
    }
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stage failed: {}", self.stage, self.error)
    }
}

impl std::error::Error for StageError {}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Validation(_) => "validation",
        Error::Parse { .. } => "parse",
        Error::Lookup(_) => "lookup",
        Error::Io(_) => "io",
        Error::Singular { .. } => "singular",
        Error::UndefinedVariance(_) => "undefined_variance",
        Error::DegeneratePartition(_) => "degenerate_partition",
        Error::Unstable { .. } => "unstable",
        Error::NotConverged { .. } => "not_converged",
        Error::Domain(_) => "domain",
        Error::State(_) => "state",
        Error::Usage(_) => "usage",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub records: usize,
    pub active: usize,
    pub mean_headcount: f64,
    pub mean_quality: f64,
    pub excluded: Vec<ExcludedRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcludedRecord {
    pub index: usize,
    pub name: String,
}

impl DatasetSummary {
    pub fn of(ds: &Dataset) -> Self {
        Self {
            records: ds.len(),
            active: ds.active_len(),
            mean_headcount: ds.mean_headcount(),
            mean_quality: ds.mean_quality(),
            excluded: ds
                .excluded()
                .iter()
                .map(|i| ExcludedRecord { index: *i, name: ds.get(*i).map(|r| r.name.clone()).unwrap_or_default() })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutlierCandidate {
    pub index: usize,
    pub name: String,
    pub headcount: f64,
    pub leverage: f64,
    pub mean_leverage: f64,
    pub ratio: f64,
}

/// Records whose leverage in the piecewise fit exceeds
/// [`LEVERAGE_FLAG_RATIO`] times the mean leverage.
pub fn outlier_candidates(ds: &Dataset, boot: &Bootstrap) -> Result<Vec<OutlierCandidate>> {
    let lev = boot.fit.leverage(ds)?;
    let mean = lev.iter().map(|(_, h)| h).sum::<f64>() / lev.len() as f64;
    Ok(lev
        .into_iter()
        .filter(|(_, h)| *h > LEVERAGE_FLAG_RATIO * mean)
        .map(|(index, h)| {
            let r = ds.get(index).expect("fit indices come from the dataset");
            OutlierCandidate {
                index,
                name: r.name.clone(),
                headcount: r.headcount,
                leverage: h,
                mean_leverage: mean,
                ratio: h / mean,
            }
        })
        .collect())
}

/// Every stage's output for one run.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub config: RunConfig,
    pub dataset: Dataset,
    pub bootstrap: Bootstrap,
    pub band: ConfidenceBand,
    /// Fit and band over every record, ignoring exclusions.
    pub bootstrap_all: Bootstrap,
    pub band_all: ConfidenceBand,
    pub masses: CriticalMasses,
    pub classification: Classification,
    pub tests: Vec<TestResult>,
    pub comparison: Comparison,
    pub residuals_vs_mean: ResidualReport,
    pub residuals_vs_mean_active: ResidualReport,
    pub residuals_vs_model: ResidualReport,
    pub outliers: Vec<OutlierCandidate>,
}

/// Runs every stage in order. Errors carry the failing stage name.
pub fn run_full_analysis(config: &RunConfig) -> std::result::Result<Analysis, StageError> {
    config.validate().map_err(StageError::at("config"))?;
    let dataset = config.dataset()?;
    let (bootstrap, band) = fit_with_band(&dataset, config)?;
    let all = Dataset::new(dataset.records().to_vec()).map_err(StageError::at("fit"))?;
    let (bootstrap_all, band_all) = fit_with_band(&all, config)?;

    let masses = critical_masses(&bootstrap.fit).map_err(StageError::at("critical_masses"))?;
    let classification = classify(&dataset, &masses);

    let tests = vec![
        test_no_correlation(&dataset),
        test_equal_slopes(&bootstrap),
        test_zero_right_slope(&dataset, &bootstrap.fit),
        ks_normality(&bootstrap.fit.residuals),
    ]
    .into_iter()
    .collect::<Result<Vec<_>>>()
    .map_err(StageError::at("tests"))?;

    let comparison = compare_ansaetze(
        &dataset,
        &CompareOptions { mode: config.mode, bootstrap: Some((config.resamples, config.seed)) },
    );

    let residuals_vs_mean = residuals_vs_mean(&dataset, true);
    let residuals_vs_mean_active = crate::ranking::residuals_vs_mean(&dataset, false);
    let residuals_vs_model = residuals_vs_model(&dataset, &bootstrap.fit).map_err(StageError::at("rank"))?;
    let outliers = outlier_candidates(&dataset, &bootstrap).map_err(StageError::at("leverage"))?;

    Ok(Analysis {
        config: config.clone(),
        dataset,
        bootstrap,
        band,
        bootstrap_all,
        band_all,
        masses,
        classification,
        tests,
        comparison,
        residuals_vs_mean,
        residuals_vs_mean_active,
        residuals_vs_model,
        outliers,
    })
}

/// Fit, bootstrap and 200-point band for one dataset.
pub fn fit_with_band(ds: &Dataset, config: &RunConfig) -> std::result::Result<(Bootstrap, ConfidenceBand), StageError> {
    let fit = fit_piecewise(ds, config.mode).map_err(StageError::at("fit"))?;
    let boot = bootstrap_errors(ds, &fit, config.resamples, config.seed).map_err(StageError::at("bootstrap"))?;
    let x = ds.active_headcounts();
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let band = confidence_band(&boot, &linspace(lo, hi, FIT_GRID_POINTS), config.level)
        .map_err(StageError::at("band"))?;
    Ok((boot, band))
}

#[derive(Serialize)]
struct FitSection<'a> {
    mode: ContinuityMode,
    parameters: &'a crate::segmented::PiecewiseParams,
    standard_errors: Option<crate::segmented::PiecewiseErrors>,
    breakpoint: f64,
    r_squared: f64,
    sse: f64,
    n_left: usize,
    n_right: usize,
    resamples: usize,
    discarded_resamples: usize,
}

impl<'a> FitSection<'a> {
    fn of(boot: &'a Bootstrap) -> Self {
        Self {
            mode: boot.fit.mode,
            parameters: &boot.fit.params,
            standard_errors: boot.fit.errors,
            breakpoint: boot.fit.params.breakpoint,
            r_squared: boot.fit.r_squared,
            sse: boot.fit.sse,
            n_left: boot.fit.n_left,
            n_right: boot.fit.n_right,
            resamples: boot.resamples,
            discarded_resamples: boot.discarded,
        }
    }
}

#[derive(Serialize)]
struct MassesSection<'a> {
    #[serde(flatten)]
    masses: &'a CriticalMasses,
    headline: String,
}

#[derive(Serialize)]
struct Counts {
    small: usize,
    medium: usize,
    large: usize,
    total: usize,
}

#[derive(Serialize)]
struct ResidualSection<'a> {
    #[serde(flatten)]
    report: &'a ResidualReport,
    ranking: Vec<RankedGroup>,
}

impl<'a> ResidualSection<'a> {
    fn of(report: &'a ResidualReport) -> Self {
        Self { report, ranking: rank_groups(report) }
    }
}

#[derive(Serialize)]
struct ReportDocument<'a> {
    config: &'a RunConfig,
    dataset: DatasetSummary,
    fit: FitSection<'a>,
    fit_all_records: FitSection<'a>,
    critical_masses: MassesSection<'a>,
    classification_counts: Counts,
    tests: &'a [TestResult],
    comparison: &'a Comparison,
    residuals_vs_mean: ResidualSection<'a>,
    residuals_vs_mean_active: ResidualSection<'a>,
    residuals_vs_model: ResidualSection<'a>,
    outlier_candidates: &'a [OutlierCandidate],
    excluded: Vec<ExcludedRecord>,
}

impl Analysis {
    pub fn headline(&self) -> String {
        self.masses.headline()
    }

    pub fn to_json(&self) -> String {
        let summary = DatasetSummary::of(&self.dataset);
        let excluded = summary.excluded.clone();
        let doc = ReportDocument {
            config: &self.config,
            dataset: summary,
            fit: FitSection::of(&self.bootstrap),
            fit_all_records: FitSection::of(&self.bootstrap_all),
            critical_masses: MassesSection { masses: &self.masses, headline: self.headline() },
            classification_counts: Counts {
                small: self.classification.small,
                medium: self.classification.medium,
                large: self.classification.large,
                total: self.classification.total(),
            },
            tests: &self.tests,
            comparison: &self.comparison,
            residuals_vs_mean: ResidualSection::of(&self.residuals_vs_mean),
            residuals_vs_mean_active: ResidualSection::of(&self.residuals_vs_mean_active),
            residuals_vs_model: ResidualSection::of(&self.residuals_vs_model),
            outlier_candidates: &self.outliers,
            excluded,
        };
        to_json_string(&doc)
    }

    pub fn plot_data(&self, figure: &str) -> Result<String> {
        emit_plot_data(self, figure)
    }
}

/// Rounds `x` to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_significant(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().expect("formatted float parses")
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                *v = serde_json::Number::from_f64(round_significant(x)).map(Value::Number).unwrap_or(Value::Null);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with floats rounded to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("report types serialize");
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("json value serializes");
    s.push('\n');
    s
}

pub fn fmt_num(x: f64) -> String {
    round_significant(x).to_string()
}

/// Plot-data figure identifiers accepted by [`emit_plot_data`].
pub const FIGURES: [&str; 5] = ["scatter", "fit", "fit-all", "rank-mean", "rank-model"];

/// CSV plot data for one figure:
///
/// * `scatter`: `index,name,N,s,excluded` for every record;
/// * `fit` / `fit-all`: `N,prediction,band_lo,band_hi` on a 200-point grid for
///   the active records or for all records;
/// * `rank-mean`: `index,name,deviation,excluded`, deviations from the mean of all records;
/// * `rank-model`: the same against the fitted model, active records only.
pub fn emit_plot_data(analysis: &Analysis, figure: &str) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    match figure {
        "scatter" => {
            w.write_record(["index", "name", "N", "s", "excluded"]).map_err(io)?;
            for r in analysis.dataset.records() {
                w.write_record([
                    r.index.to_string(),
                    r.name.clone(),
                    fmt_num(r.headcount),
                    fmt_num(r.quality),
                    u8::from(analysis.dataset.is_excluded(r.index)).to_string(),
                ])
                .map_err(io)?;
            }
        }
        "fit" | "fit-all" => {
            let band = if figure == "fit" { &analysis.band } else { &analysis.band_all };
            w.write_record(["N", "prediction", "band_lo", "band_hi"]).map_err(io)?;
            for i in 0..band.grid.len() {
                w.write_record([
                    fmt_num(band.grid[i]),
                    fmt_num(band.prediction[i]),
                    fmt_num(band.lower[i]),
                    fmt_num(band.upper[i]),
                ])
                .map_err(io)?;
            }
        }
        "rank-mean" | "rank-model" => {
            let report = if figure == "rank-mean" { &analysis.residuals_vs_mean } else { &analysis.residuals_vs_model };
            write_deviations(&mut w, report).map_err(io)?;
        }
        other => {
            return Err(Error::Usage(format!(
                "unknown figure '{other}', expected one of {}",
                FIGURES.join(", ")
            )))
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8 csv"))
}

/// `index,name,deviation,excluded` rows for a residual report.
pub fn deviations_csv(report: &ResidualReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    write_deviations(&mut w, report).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

fn write_deviations(w: &mut csv::Writer<Vec<u8>>, report: &ResidualReport) -> std::result::Result<(), csv::Error> {
    w.write_record(["index", "name", "deviation", "excluded"])?;
    for d in &report.deviations {
        w.write_record([d.index.to_string(), d.name.clone(), fmt_num(d.deviation), u8::from(d.excluded).to_string()])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_rounding() {
        assert_eq!(round_significant(17.541323066153), 17.54132307);
        assert_eq!(round_significant(0.0), 0.0);
        assert_eq!(round_significant(-1.234567890123e-7), -1.23456789e-7);
        assert_eq!(fmt_num(2.0), "2");
    }

    #[test]
    fn config_validation() {
        let mut c = RunConfig::new(1);
        assert!(c.validate().is_ok());
        c.resamples = 100;
        assert_eq!(c.validate().unwrap_err(), Error::Usage("resamples must be at least 200, got 100".into()));
        let mut c = RunConfig::new(1);
        c.level = 1.5;
        assert!(c.validate().is_err());
        c.level = 0.9;
        c.weights = "2011".into();
        assert!(c.validate().is_err());
    }

    #[test]
    fn missing_input_is_load_stage_io_error() {
        let mut c = RunConfig::new(1);
        c.input = Some("/nonexistent/table.csv".into());
        let err = run_full_analysis(&c).unwrap_err();
        assert_eq!(err.stage, "load");
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_json().contains("\"stage\":\"load\""));
    }
}
