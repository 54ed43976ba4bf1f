//! Deviations of group quality from the overall mean and from the
//! size-adjusted expectation, with dispersion statistics and rankings.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::Result;
use crate::segmented::{sample_sd, PiecewiseFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualMode {
    VsMean,
    VsModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub index: usize,
    pub name: String,
    pub deviation: f64,
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub mode: ResidualMode,
    /// Deviations of the reported set, in dataset order.
    pub deviations: Vec<Deviation>,
    pub range: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std_dev: f64,
    pub excluded_indices: BTreeSet<usize>,
}

fn summarise(mode: ResidualMode, deviations: Vec<Deviation>, excluded: BTreeSet<usize>) -> ResidualReport {
    let values: Vec<f64> = deviations.iter().map(|d| d.deviation).collect();
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    ResidualReport {
        mode,
        range: if values.is_empty() { 0.0 } else { hi - lo },
        std_dev: sample_sd(&values),
        deviations,
        excluded_indices: excluded,
    }
}

/// `s_i - mean(s)` over the active records, or over every record when
/// `include_excluded` is set; the mean is taken over the same set.
pub fn residuals_vs_mean(dataset: &Dataset, include_excluded: bool) -> ResidualReport {
    let included: Vec<_> = dataset
        .records()
        .iter()
        .filter(|r| include_excluded || !dataset.is_excluded(r.index))
        .collect();
    let mean = included.iter().map(|r| r.quality).sum::<f64>() / included.len().max(1) as f64;
    let deviations = included
        .iter()
        .map(|r| Deviation {
            index: r.index,
            name: r.name.clone(),
            deviation: r.quality - mean,
            excluded: dataset.is_excluded(r.index),
        })
        .collect();
    let excluded = if include_excluded { BTreeSet::new() } else { dataset.excluded().clone() };
    summarise(ResidualMode::VsMean, deviations, excluded)
}

/// `s_i - <s>(N_i)` over the active records; excluded records are omitted.
pub fn residuals_vs_model(dataset: &Dataset, fit: &PiecewiseFit) -> Result<ResidualReport> {
    fit.check_dataset(dataset)?;
    let deviations = dataset
        .active()
        .map(|r| Deviation {
            index: r.index,
            name: r.name.clone(),
            deviation: r.quality - fit.predict(r.headcount),
            excluded: false,
        })
        .collect();
    Ok(summarise(ResidualMode::VsModel, deviations, dataset.excluded().clone()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedGroup {
    pub rank: usize,
    pub index: usize,
    pub name: String,
    pub deviation: f64,
}

/// Orders groups by deviation, largest first; ties go alphabetically.
pub fn rank_groups(report: &ResidualReport) -> Vec<RankedGroup> {
    let mut sorted: Vec<&Deviation> = report.deviations.iter().collect();
    sorted.sort_by(|a, b| {
        b.deviation
            .partial_cmp(&a.deviation)
            .expect("finite deviations")
            .then_with(|| a.name.cmp(&b.name))
    });
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, d)| RankedGroup { rank: i + 1, index: d.index, name: d.name.clone(), deviation: d.deviation })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Selector;
    use crate::segmented::{fit_piecewise, ContinuityMode};
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_record() {
        let ds = Dataset::from_pairs(&[4.0], &[30.0]).unwrap();
        let rep = residuals_vs_mean(&ds, true);
        assert_eq!(rep.deviations[0].deviation, 0.0);
        assert_eq!(rep.range, 0.0);
        assert_eq!(rep.std_dev, 0.0);
    }

    #[test]
    fn ties_sort_alphabetically() {
        let ds = Dataset::from_pairs(&[1.0, 2.0, 3.0], &[10.0, 10.0, 10.0]).unwrap();
        let mut rep = residuals_vs_mean(&ds, true);
        for (d, name) in rep.deviations.iter_mut().zip(["Charlie", "Alpha", "Bravo"]) {
            d.name = name.into();
        }
        let names: Vec<_> = rank_groups(&rep).into_iter().map(|g| g.name).collect();
        assert_eq!(names, ["Alpha", "Bravo", "Charlie"]);
    }

    #[test]
    fn fixture_vs_mean_top_is_oxford() {
        let rep = residuals_vs_mean(&Dataset::fixture(), true);
        let ranked = rank_groups(&rep);
        assert_eq!(ranked[0].name, "Oxford");
        assert_eq!(ranked.len(), 30);
        assert_abs_diff_eq!(rep.deviations.iter().map(|d| d.deviation).sum::<f64>(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn vs_model_omits_excluded_and_checks_fit() {
        let ds = Dataset::fixture().exclude(&Selector::Index(9)).unwrap();
        let fit = fit_piecewise(&ds, ContinuityMode::Continuous).unwrap();
        let rep = residuals_vs_model(&ds, &fit).unwrap();
        assert_eq!(rep.deviations.len(), 29);
        assert!(rep.deviations.iter().all(|d| d.index != 9));
        assert!(residuals_vs_model(&Dataset::fixture(), &fit).is_err());
    }
}
