//! Linear least squares: polynomial fits, R² and parameter covariance.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Result of an ordinary least-squares fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    /// Coefficients in the order of the design columns; for polynomials
    /// `c0 + c1 x + c2 x^2 + ...` on the raw (unscaled) abscissa.
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    /// Row-major parameter covariance `sigma^2 (X^T X)^-1`.
    pub covariance: Vec<Vec<f64>>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub sse: f64,
    pub r_squared: f64,
    pub dof: usize,
}

impl LinearFit {
    /// Evaluates a polynomial fit at `x`.
    pub fn predict_polynomial(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

/// `1 - SSE/SST`.
pub fn r_squared(y: &[f64], predictions: &[f64]) -> Result<f64> {
    if y.len() != predictions.len() || y.len() < 2 {
        return Err(Error::Validation(format!(
            "r_squared needs two equal-length vectors of length >= 2, got {} and {}",
            y.len(),
            predictions.len()
        )));
    }
    let sst = total_sum_of_squares(y);
    if sst == 0.0 {
        return Err(Error::UndefinedVariance("observations are constant".into()));
    }
    let sse: f64 = y.iter().zip(predictions).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(1.0 - sse / sst)
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub(crate) fn total_sum_of_squares(y: &[f64]) -> f64 {
    let m = mean(y);
    y.iter().map(|v| (v - m).powi(2)).sum()
}

/// Least-squares polynomial of the given degree in raw powers of `x`.
pub fn fit_linear(x: &[f64], y: &[f64], degree: usize) -> Result<LinearFit> {
    if degree == 0 {
        return Err(Error::Validation("polynomial degree must be at least 1".into()));
    }
    if x.len() != y.len() {
        return Err(Error::Validation(format!("length mismatch: {} x vs {} y", x.len(), y.len())));
    }
    if x.len() < degree + 2 {
        return Err(Error::Validation(format!(
            "degree {degree} fit needs at least {} points, got {}",
            degree + 2,
            x.len()
        )));
    }
    if x.iter().all(|v| *v == x[0]) {
        return Err(Error::Validation("all x values are identical".into()));
    }
    // Columns use (x / scale)^k to keep the QR well conditioned; the scale is
    // unwound from coefficients and covariance afterwards.
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let design = DMatrix::from_fn(x.len(), degree + 1, |i, j| (x[i] / scale).powi(j as i32));
    let mut fit = fit_design(&design, y).map_err(|e| match e {
        Error::Singular { .. } => Error::Singular { degree },
        other => other,
    })?;
    let factors: Vec<f64> = (0..=degree).map(|j| scale.powi(j as i32)).collect();
    for j in 0..=degree {
        fit.coefficients[j] /= factors[j];
        fit.standard_errors[j] /= factors[j];
        for k in 0..=degree {
            fit.covariance[j][k] /= factors[j] * factors[k];
        }
    }
    Ok(fit)
}

/// Least squares on an explicit design matrix whose first column is the
/// intercept. Solved through a Householder QR factorisation.
pub fn fit_design(design: &DMatrix<f64>, y: &[f64]) -> Result<LinearFit> {
    let (n, p) = design.shape();
    if n != y.len() {
        return Err(Error::Validation(format!("design has {n} rows but {} observations", y.len())));
    }
    if n <= p {
        return Err(Error::Validation(format!("{p} parameters need more than {n} observations")));
    }
    let qr = design.clone().qr();
    let r = qr.r();
    let max_diag = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..p).any(|i| r[(i, i)].abs() <= 1e-12 * max_diag) || max_diag == 0.0 {
        return Err(Error::Singular { degree: p.saturating_sub(1) });
    }
    let yv = DVector::from_column_slice(y);
    let qty = qr.q().transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or(Error::Singular { degree: p.saturating_sub(1) })?;
    let fitted = design * &beta;
    let residuals: Vec<f64> = yv.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
    let sse: f64 = residuals.iter().map(|e| e * e).sum();
    let dof = n - p;
    let sigma2 = sse / dof as f64;

    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or(Error::Singular { degree: p.saturating_sub(1) })?;
    let xtx_inv = &r_inv * r_inv.transpose();
    let covariance: Vec<Vec<f64>> =
        (0..p).map(|i| (0..p).map(|j| sigma2 * xtx_inv[(i, j)]).collect()).collect();
    let standard_errors = (0..p).map(|i| covariance[i][i].max(0.0).sqrt()).collect();

    let sst = total_sum_of_squares(y);
    let r_squared = if sst > 0.0 { 1.0 - sse / sst } else if sse == 0.0 { 1.0 } else { 0.0 };

    Ok(LinearFit {
        coefficients: beta.iter().copied().collect(),
        standard_errors,
        covariance,
        fitted: fitted.iter().copied().collect(),
        residuals,
        sse,
        r_squared,
        dof,
    })
}

/// Diagonal of the hat matrix `X (X^T X)^-1 X^T`.
pub fn hat_values(design: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (n, p) = design.shape();
    if n < p {
        return Err(Error::Validation(format!("{p} columns need at least {p} rows")));
    }
    let qr = design.clone().qr();
    let q = qr.q();
    Ok((0..n).map(|i| (0..p).map(|j| q[(i, j)].powi(2)).sum()).collect())
}

/// Intercept, slope and SSE of a straight-line fit, or `None` if `x` has no spread.
pub(crate) fn simple_line(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    Some((intercept, slope, sse))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (1..=8).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 + 2.0 * v).collect();
        let fit = fit_linear(&x, &y, 1).unwrap();
        assert_abs_diff_eq!(fit.coefficients[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.coefficients[1], 2.0, epsilon = 1e-12);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-12));
        assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn five_points_against_normal_equations() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [1.0, 2.0, 2.0, 4.0, 5.0];
        // Hand solve: Sx=15, Sy=14, Sxx=55, Sxy=52, n=5
        // slope = (5*52 - 15*14)/(5*55 - 225) = 50/50 = 1, intercept = (14 - 15)/5 = -0.2
        let fit = fit_linear(&x, &y, 1).unwrap();
        assert_abs_diff_eq!(fit.coefficients[0], -0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.coefficients[1], 1.0, epsilon = 1e-12);
        // residuals .2 .2 -.8 .2 .2: SSE = 0.8, SST = 10.8, Var(slope) = (0.8/3)/10
        assert_abs_diff_eq!(fit.sse, 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.r_squared, 1.0 - 0.8 / 10.8, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.standard_errors[1], (0.8 / 3.0 / 10.0_f64).sqrt(), epsilon = 1e-12);
        assert_eq!(fit.dof, 3);
    }

    #[test]
    fn residuals_sum_to_zero_and_r2_identity() {
        let x = [2.0, 4.0, 5.0, 7.5, 9.0, 13.0, 14.5];
        let y = [3.1, 4.0, 6.2, 6.0, 9.9, 11.0, 10.2];
        for degree in 1..=3 {
            let fit = fit_linear(&x, &y, degree).unwrap();
            assert!(fit.residuals.iter().sum::<f64>().abs() < 1e-9);
            let r2 = 1.0 - fit.sse / total_sum_of_squares(&y);
            assert_abs_diff_eq!(fit.r_squared, r2, epsilon = 1e-12);
            assert_abs_diff_eq!(r_squared(&y, &fit.fitted).unwrap(), r2, epsilon = 1e-12);
        }
    }

    #[test]
    fn r_squared_edges() {
        let y = [1.0, 2.0, 4.0];
        assert_eq!(r_squared(&y, &y).unwrap(), 1.0);
        let m = mean(&y);
        assert_abs_diff_eq!(r_squared(&y, &[m; 3]).unwrap(), 0.0, epsilon = 1e-15);
        assert!(matches!(r_squared(&[2.0, 2.0], &[1.0, 3.0]), Err(Error::UndefinedVariance(_))));
        assert!(r_squared(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(fit_linear(&[1.0; 5], &[1.0, 2.0, 3.0, 4.0, 5.0], 1), Err(Error::Validation(_))));
        assert!(matches!(fit_linear(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], 2), Err(Error::Validation(_))));
        // two distinct x values cannot carry a quadratic
        let x = [1.0, 1.0, 2.0, 2.0, 1.0];
        let y = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(fit_linear(&x, &y, 2).unwrap_err(), Error::Singular { degree: 2 });
    }

    #[test]
    fn hat_values_sum_to_rank() {
        let x = [1.0, 2.0, 3.0, 4.0, 10.0];
        let design = DMatrix::from_fn(5, 2, |i, j| if j == 0 { 1.0 } else { x[i] });
        let h = hat_values(&design).unwrap();
        assert_abs_diff_eq!(h.iter().sum::<f64>(), 2.0, epsilon = 1e-12);
        assert!(h[4] > h[1]);
    }
}
