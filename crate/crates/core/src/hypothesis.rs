//! Hypothesis tests on the quality/size relation and the fit residuals.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::ols::{fit_linear, total_sum_of_squares};
use crate::segmented::{sample_sd, Bootstrap, PiecewiseFit};
use crate::special::{f_survival, kolmogorov_cdf, lilliefors_p_value, normal_cdf, student_t_two_sided};

pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Reject,
    FailToReject,
}

impl Decision {
    pub fn at(p_value: f64, alpha: f64) -> Self {
        if p_value < alpha {
            Decision::Reject
        } else {
            Decision::FailToReject
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub name: String,
    pub null_hypothesis: String,
    pub statistic: f64,
    pub p_value: f64,
    /// Degrees of freedom, where the reference distribution has any.
    pub dof: Vec<f64>,
    pub decision_at_005: Decision,
    /// Set when the p-value rests on an approximation worth flagging.
    pub note: Option<String>,
}

impl TestResult {
    fn new(name: &str, null: &str, statistic: f64, p_value: f64, dof: Vec<f64>) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            name: name.into(),
            null_hypothesis: null.into(),
            statistic,
            p_value,
            dof,
            decision_at_005: Decision::at(p_value, ALPHA),
            note: None,
        }
    }
}

/// Regression F-test of a straight line against the intercept-only model.
pub fn test_no_correlation(dataset: &Dataset) -> Result<TestResult> {
    no_correlation_xy(&dataset.active_headcounts(), &dataset.active_qualities())
}

pub fn no_correlation_xy(x: &[f64], y: &[f64]) -> Result<TestResult> {
    if x.len() < 4 {
        return Err(Error::Validation(format!("no-correlation test needs 4 records, got {}", x.len())));
    }
    let sst = total_sum_of_squares(y);
    if sst == 0.0 {
        return Err(Error::UndefinedVariance("qualities are constant".into()));
    }
    let fit = fit_linear(x, y, 1)?;
    let d2 = (x.len() - 2) as f64;
    let ssr = sst - fit.sse;
    let f = if fit.sse > 0.0 { ssr / (fit.sse / d2) } else { f64::INFINITY };
    let p = f_survival(f, 1.0, d2)?;
    Ok(TestResult::new(
        "no_correlation",
        "quality does not depend on size (zero slope)",
        f,
        p,
        vec![1.0, d2],
    ))
}

/// Bootstrap test that the left and right slopes coincide.
///
/// The statistic is `(b1 - b2) / sd*(b1 - b2)` with the standard deviation
/// taken over bootstrap replicates; the two-sided p-value is twice the smaller
/// fraction of replicate differences on either side of zero.
pub fn test_equal_slopes(boot: &Bootstrap) -> Result<TestResult> {
    if boot.replicates.len() < 2 {
        return Err(Error::State("slope test needs bootstrap replicates".into()));
    }
    let diffs: Vec<f64> = boot.replicates.iter().map(|p| p.b1 - p.b2).collect();
    let sd = sample_sd(&diffs);
    let observed = boot.fit.params.b1 - boot.fit.params.b2;
    let statistic = if sd > 0.0 {
        observed / sd
    } else if observed == 0.0 {
        0.0
    } else {
        observed.signum() * f64::INFINITY
    };
    let total = diffs.len() as f64;
    let below = diffs.iter().filter(|d| **d <= 0.0).count() as f64 / total;
    let above = diffs.iter().filter(|d| **d >= 0.0).count() as f64 / total;
    let p = (2.0 * below.min(above)).min(1.0);
    let mut result = TestResult::new(
        "equal_slopes",
        "slopes left and right of the breakpoint coincide",
        statistic,
        p,
        Vec::new(),
    );
    result.note = Some(format!("bootstrap distribution of {} replicates", diffs.len()));
    Ok(result)
}

/// t-test that the OLS slope of the records at or above the breakpoint is zero.
pub fn test_zero_right_slope(dataset: &Dataset, fit: &PiecewiseFit) -> Result<TestResult> {
    fit.check_dataset(dataset)?;
    let c = fit.breakpoint();
    let (x, y): (Vec<f64>, Vec<f64>) = dataset
        .active()
        .filter(|r| r.headcount >= c)
        .map(|r| (r.headcount, r.quality))
        .unzip();
    zero_slope_xy(&x, &y)
}

pub fn zero_slope_xy(x: &[f64], y: &[f64]) -> Result<TestResult> {
    if x.len() < 3 {
        return Err(Error::DegeneratePartition(format!(
            "right segment has {} records, the slope test needs 3",
            x.len()
        )));
    }
    let line = fit_linear(x, y, 1)?;
    let dof = (x.len() - 2) as f64;
    let slope = line.coefficients[1];
    let se = line.standard_errors[1];
    let scale = y.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let t = if slope.abs() <= 1e-12 * scale {
        0.0
    } else if se > 0.0 {
        slope / se
    } else {
        slope.signum() * f64::INFINITY
    };
    let p = student_t_two_sided(t, dof)?;
    Ok(TestResult::new(
        "zero_right_slope",
        "quality does not depend on size above the breakpoint",
        t,
        p,
        vec![dof],
    ))
}

/// Kolmogorov-Smirnov distance of the residuals from a normal with their own
/// mean and standard deviation.
///
/// Because both parameters come from the sample, the decision p-value uses
/// the Lilliefors approximation; the plain asymptotic Kolmogorov p-value is
/// reported in the note and is conservative.
pub fn ks_normality(residuals: &[f64]) -> Result<TestResult> {
    let n = residuals.len();
    if n < 5 {
        return Err(Error::Validation(format!("normality test needs 5 residuals, got {n}")));
    }
    let mean = residuals.iter().sum::<f64>() / n as f64;
    let sd = sample_sd(residuals);
    if !(sd > 0.0) {
        return Err(Error::Validation("residuals have zero variance".into()));
    }
    let d = ks_statistic(residuals, |v| normal_cdf((v - mean) / sd));
    let p = lilliefors_p_value(d, n);
    let p_asymptotic = 1.0 - kolmogorov_cdf(d * (n as f64).sqrt())?;
    let mut result = TestResult::new(
        "ks_normality",
        "residuals are normally distributed",
        d,
        p,
        Vec::new(),
    );
    result.note = Some(format!(
        "approximate: mean and sd estimated from the sample (Lilliefors); uncorrected asymptotic p = {p_asymptotic:.4}"
    ));
    Ok(result)
}

/// Uncorrected asymptotic Kolmogorov p-value for a sample statistic `d`.
pub fn kolmogorov_p_value(d: f64, n: usize) -> Result<f64> {
    Ok(1.0 - kolmogorov_cdf(d * (n as f64).sqrt())?)
}

/// Two-sided one-sample K-S statistic `sup |F_n - F|`.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite sample"));
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0_f64, |d, (i, v)| {
        let f = cdf(*v);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn perfect_correlation() {
        let x: Vec<f64> = (1..=10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let r = no_correlation_xy(&x, &y).unwrap();
        assert!(r.p_value < 1e-12);
        assert_eq!(r.decision_at_005, Decision::Reject);
        assert!(matches!(no_correlation_xy(&x, &[3.0; 10]), Err(Error::UndefinedVariance(_))));
    }

    #[test]
    fn f_test_matches_t_test() {
        let x = [1.0, 2.0, 4.0, 5.0, 7.0, 8.0];
        let y = [2.0, 1.0, 4.0, 3.0, 6.0, 4.0];
        let f = no_correlation_xy(&x, &y).unwrap();
        let t = zero_slope_xy(&x, &y).unwrap();
        assert_abs_diff_eq!(f.p_value, t.p_value, epsilon = 1e-12);
        assert_abs_diff_eq!(f.statistic, t.statistic * t.statistic, epsilon = 1e-9);
    }

    #[test]
    fn right_slope_edges() {
        let flat = zero_slope_xy(&[20.0, 22.0, 25.0, 28.0], &[40.0; 4]).unwrap();
        assert_eq!(flat.statistic, 0.0);
        assert_eq!(flat.p_value, 1.0);
        let x = [20.0, 22.0, 25.0, 28.0, 30.0];
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| 5.0 * v + if i % 2 == 0 { 1e-6 } else { -1e-6 }).collect();
        let steep = zero_slope_xy(&x, &y).unwrap();
        assert!(steep.p_value < 1e-3);
        assert!(matches!(zero_slope_xy(&[1.0, 2.0], &[1.0, 2.0]), Err(Error::DegeneratePartition(_))));
    }

    #[test]
    fn ks_rejects_degenerate_input() {
        assert!(ks_normality(&[1.0, 2.0, 3.0, 4.0]).is_err());
        assert!(ks_normality(&[2.0; 6]).is_err());
    }

    #[test]
    fn ks_statistic_against_uniform() {
        // sample at the quartile midpoints of U(0,1): D = 1/8
        let d = ks_statistic(&[0.125, 0.375, 0.625, 0.875], |v| v.clamp(0.0, 1.0));
        assert_abs_diff_eq!(d, 0.125, epsilon = 1e-15);
    }

    #[test]
    fn decision_rule() {
        assert_eq!(Decision::at(0.049, ALPHA), Decision::Reject);
        assert_eq!(Decision::at(0.05, ALPHA), Decision::FailToReject);
    }
}
