//! Alternative fitting ansätze for quality against size: polynomials through
//! linear least squares, and a power law and a shifted logarithm through
//! Levenberg-Marquardt with analytic Jacobians.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::ols::{fit_linear, simple_line, total_sum_of_squares};
use crate::report::fmt_num;
use crate::segmented::{bootstrap_errors, fit_piecewise, ContinuityMode};

/// Smallest admissible `N + D2` for the shifted logarithm.
pub const LOG_DOMAIN_MARGIN: f64 = 1e-6;
const MULTI_STARTS: usize = 8;
/// Consecutive accepted steps with negligible SSE change before giving up.
const STALL_STEPS: usize = 5;
const POLISH_STEPS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ansatz {
    /// `A0 + A1 N + A2 N^2`
    Quadratic,
    /// `B0 + B1 N + B2 N^2 + B3 N^3`
    Cubic,
    /// `C0 + C1 N^C2`
    Power,
    /// `D0 + D1 ln(N + D2)`
    LogShift,
}

impl Ansatz {
    pub const ALL: [Ansatz; 4] = [Ansatz::Quadratic, Ansatz::Cubic, Ansatz::Power, Ansatz::LogShift];

    pub fn arity(self) -> usize {
        match self {
            Ansatz::Quadratic | Ansatz::Power | Ansatz::LogShift => 3,
            Ansatz::Cubic => 4,
        }
    }

    pub fn formula(self) -> &'static str {
        match self {
            Ansatz::Quadratic => "A0 + A1 N + A2 N^2",
            Ansatz::Cubic => "B0 + B1 N + B2 N^2 + B3 N^3",
            Ansatz::Power => "C0 + C1 N^C2",
            Ansatz::LogShift => "D0 + D1 ln(N + D2)",
        }
    }

    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            Ansatz::Quadratic => &["A0", "A1", "A2"],
            Ansatz::Cubic => &["B0", "B1", "B2", "B3"],
            Ansatz::Power => &["C0", "C1", "C2"],
            Ansatz::LogShift => &["D0", "D1", "D2"],
        }
    }

    pub fn evaluate(self, p: &[f64], n: f64) -> f64 {
        match self {
            Ansatz::Quadratic | Ansatz::Cubic => p.iter().rev().fold(0.0, |acc, c| acc * n + c),
            Ansatz::Power => p[0] + p[1] * n.powf(p[2]),
            Ansatz::LogShift => p[0] + p[1] * (n + p[2]).ln(),
        }
    }

    /// Partial derivatives of the model with respect to each parameter.
    pub fn gradient(self, p: &[f64], n: f64, out: &mut [f64]) {
        match self {
            Ansatz::Quadratic | Ansatz::Cubic => {
                let mut pow = 1.0;
                for o in out.iter_mut() {
                    *o = pow;
                    pow *= n;
                }
            }
            Ansatz::Power => {
                let np = n.powf(p[2]);
                out[0] = 1.0;
                out[1] = np;
                out[2] = p[1] * np * n.ln();
            }
            Ansatz::LogShift => {
                out[0] = 1.0;
                out[1] = (n + p[2]).ln();
                out[2] = p[1] / (n + p[2]);
            }
        }
    }

    fn in_domain(self, p: &[f64], min_n: f64) -> bool {
        p.iter().all(|v| v.is_finite())
            && match self {
                Ansatz::LogShift => min_n + p[2] >= LOG_DOMAIN_MARGIN,
                _ => true,
            }
    }

    /// Scale-aware starting point for the nonlinear ansätze.
    pub fn default_init(self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let (min_x, max_x) = min_max(x);
        let (min_y, max_y) = min_max(y);
        match self {
            Ansatz::Power => {
                let span = max_x.sqrt() - min_x.sqrt();
                vec![min_y, (max_y - min_y) / span, 0.5]
            }
            Ansatz::LogShift => {
                let span = (max_x - min_x).ln();
                let mut d2 = 1.0;
                if min_x + d2 < LOG_DOMAIN_MARGIN {
                    d2 = -min_x + 1.0;
                }
                vec![min_y, (max_y - min_y) / span, d2]
            }
            Ansatz::Quadratic | Ansatz::Cubic => vec![0.0; self.arity()],
        }
    }
}

impl fmt::Display for Ansatz {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ansatz::Quadratic => "quadratic",
            Ansatz::Cubic => "cubic",
            Ansatz::Power => "power",
            Ansatz::LogShift => "logshift",
        })
    }
}

impl FromStr for Ansatz {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "quadratic" => Ok(Ansatz::Quadratic),
            "cubic" => Ok(Ansatz::Cubic),
            "power" => Ok(Ansatz::Power),
            "logshift" | "log" => Ok(Ansatz::LogShift),
            other => Err(Error::Usage(format!("unknown ansatz '{other}'"))),
        }
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(*x), hi.max(*x)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzFit {
    pub ansatz: Ansatz,
    pub parameters: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub sse: f64,
    pub r_squared: f64,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
}

impl AnsatzFit {
    pub fn predict(&self, n: f64) -> f64 {
        self.ansatz.evaluate(&self.parameters, n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub initial_damping: f64,
    pub damping_up: f64,
    pub damping_down: f64,
    pub max_iterations: usize,
    /// Give up after several accepted steps in a row each lower SSE by less
    /// than this fraction without meeting the gradient test.
    pub sse_rel_tol: f64,
    /// Converged once `|grad SSE|` falls below this.
    pub gradient_tol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            initial_damping: 1e-3,
            damping_up: 10.0,
            damping_down: 10.0,
            max_iterations: 500,
            sse_rel_tol: 1e-12,
            gradient_tol: 1e-8,
        }
    }
}

/// Final state of a Levenberg-Marquardt run.
#[derive(Debug, Clone, PartialEq)]
pub struct LmOutcome {
    pub parameters: Vec<f64>,
    pub sse: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    /// SSE after each accepted step, starting with the initial SSE.
    pub sse_history: Vec<f64>,
}

struct Problem<'a> {
    ansatz: Ansatz,
    x: &'a [f64],
    y: &'a [f64],
    min_x: f64,
}

impl Problem<'_> {
    fn residuals(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.x.len(), self.x.iter().zip(self.y).map(|(n, s)| s - self.ansatz.evaluate(p, *n)))
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let k = p.len();
        let mut row = vec![0.0; k];
        let mut j = DMatrix::zeros(self.x.len(), k);
        for (i, n) in self.x.iter().enumerate() {
            self.ansatz.gradient(p, *n, &mut row);
            for c in 0..k {
                j[(i, c)] = row[c];
            }
        }
        j
    }
}

/// Minimises the SSE of `ansatz` from `init`. The damped normal equations use
/// Marquardt's diagonal scaling; steps leaving the model's domain count as
/// rejections.
pub fn levenberg_marquardt(ansatz: Ansatz, x: &[f64], y: &[f64], init: &[f64], opts: &LmOptions) -> Result<LmOutcome> {
    let problem = Problem { ansatz, x, y, min_x: min_max(x).0 };
    if init.len() != ansatz.arity() {
        return Err(Error::Validation(format!(
            "{ansatz} needs {} parameters, got {}",
            ansatz.arity(),
            init.len()
        )));
    }
    if !ansatz.in_domain(init, problem.min_x) {
        return Err(domain_error(ansatz, init, x));
    }
    let mut p = init.to_vec();
    let mut r = problem.residuals(&p);
    let mut sse = r.norm_squared();
    let mut history = vec![sse];
    let mut lambda = opts.initial_damping;
    let mut iterations = 0;
    let mut converged = false;
    let mut stalled = 0;
    let mut grad_norm;
    loop {
        let jac = problem.jacobian(&p);
        let jtr = jac.transpose() * &r;
        grad_norm = 2.0 * jtr.norm();
        if grad_norm < opts.gradient_tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        let scale: Vec<f64> = (0..jac.ncols()).map(|c| jac.column(c).norm_squared().max(1e-300)).collect();
        let mut accepted = false;
        while iterations < opts.max_iterations {
            iterations += 1;
            let Some(step) = damped_step(&jac, &r, &scale, lambda) else {
                lambda *= opts.damping_up;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            if ansatz.in_domain(&trial, problem.min_x) {
                let r_trial = problem.residuals(&trial);
                // (r - r')·(r + r') keeps the decrease accurate when it is far below ulp(SSE)
                let decrease = (&r - &r_trial).dot(&(&r + &r_trial));
                if decrease.is_finite() && decrease > 0.0 {
                    let rel = decrease / sse.max(f64::MIN_POSITIVE);
                    p = trial;
                    r = r_trial;
                    // the direct sum can round up by an ulp even on a true decrease
                    sse = r.norm_squared().min(sse);
                    history.push(sse);
                    lambda = (lambda / opts.damping_down).max(1e-15);
                    accepted = true;
                    if rel < opts.sse_rel_tol {
                        stalled += 1;
                    } else {
                        stalled = 0;
                    }
                    break;
                }
            }
            lambda *= opts.damping_up;
            if lambda > 1e16 {
                break;
            }
        }
        if !accepted || stalled >= STALL_STEPS {
            grad_norm = polish(&problem, &mut p, &mut r, opts.gradient_tol);
            sse = r.norm_squared().min(sse);
            history.push(sse);
            converged = grad_norm < opts.gradient_tol;
            break;
        }
    }
    Ok(LmOutcome { parameters: p, sse, iterations, converged, gradient_norm: grad_norm, sse_history: history })
}

/// Once SSE changes are below rounding noise, SSE can no longer rank trial
/// points but the gradient still can: take plain Gauss-Newton steps while they
/// shrink it. Returns the final gradient norm.
fn polish(problem: &Problem, p: &mut Vec<f64>, r: &mut DVector<f64>, tol: f64) -> f64 {
    let grad = |jac: &DMatrix<f64>, r: &DVector<f64>| 2.0 * (jac.transpose() * r).norm();
    let mut jac = problem.jacobian(p);
    let mut g = grad(&jac, r);
    for _ in 0..POLISH_STEPS {
        if g < tol {
            break;
        }
        let scale = vec![0.0; p.len()];
        let Some(step) = damped_step(&jac, r, &scale, 0.0) else { break };
        let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        if !problem.ansatz.in_domain(&trial, problem.min_x) {
            break;
        }
        let r_trial = problem.residuals(&trial);
        let jac_trial = problem.jacobian(&trial);
        let g_trial = grad(&jac_trial, &r_trial);
        // a genuine decrease only; the SSE change must stay at rounding level
        if !(g_trial < g) || r_trial.norm_squared() > r.norm_squared() * (1.0 + 1e-12) {
            break;
        }
        *p = trial;
        *r = r_trial;
        jac = jac_trial;
        g = g_trial;
    }
    g
}

/// Solves `min |J d - r|^2 + lambda sum_i D_i d_i^2` by QR of the stacked
/// system, which avoids squaring the condition number of `J`.
fn damped_step(jac: &DMatrix<f64>, r: &DVector<f64>, scale: &[f64], lambda: f64) -> Option<DVector<f64>> {
    let (m, k) = jac.shape();
    let mut a = DMatrix::zeros(m + k, k);
    a.rows_mut(0, m).copy_from(jac);
    for (i, d) in scale.iter().enumerate() {
        a[(m + i, i)] = (lambda * d).sqrt();
    }
    let mut b = DVector::zeros(m + k);
    b.rows_mut(0, m).copy_from(r);
    let qr = a.qr();
    let rhs = qr.q().transpose() * b;
    let step = qr.r().solve_upper_triangular(&rhs)?;
    step.iter().all(|v| v.is_finite()).then_some(step)
}

fn domain_error(ansatz: Ansatz, p: &[f64], x: &[f64]) -> Error {
    match ansatz {
        Ansatz::LogShift => {
            let (i, n) = x
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite sizes"))
                .map(|(i, n)| (i, *n))
                .unwrap_or((0, f64::NAN));
            Error::Domain(format!(
                "ln(N + D2) undefined at active record {} (N = {n}) for D2 = {}",
                i + 1,
                p[2]
            ))
        }
        _ => Error::Domain(format!("{ansatz} parameters not finite: {p:?}")),
    }
}

/// Start `k` of the fallback search: a random nonlinear parameter with the
/// linear ones solved exactly for it. Power exponents alternate in sign so a
/// decaying law is reachable from a growing default.
fn jittered_start(ansatz: Ansatz, base: &[f64], k: usize, x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    rng.set_stream(k as u64);
    let min_x = min_max(x).0;
    let shape = match ansatz {
        Ansatz::Power => {
            let e: f64 = rng.random_range(0.1..1.5);
            if k % 2 == 0 { e } else { -e }
        }
        Ansatz::LogShift => -min_x + LOG_DOMAIN_MARGIN + rng.random_range(0.1..10.0),
        _ => return base.to_vec(),
    };
    let z: Vec<f64> = x
        .iter()
        .map(|n| match ansatz {
            Ansatz::Power => n.powf(shape),
            _ => (n + shape).ln(),
        })
        .collect();
    match simple_line(&z, y) {
        Some((c0, c1, _)) => vec![c0, c1, shape],
        None => vec![base[0], base[1], shape],
    }
}

fn finish(ansatz: Ansatz, x: &[f64], y: &[f64], outcome: LmOutcome) -> AnsatzFit {
    let problem = Problem { ansatz, x, y, min_x: min_max(x).0 };
    let jac = problem.jacobian(&outcome.parameters);
    let k = ansatz.arity();
    let sigma2 = outcome.sse / (x.len() - k) as f64;
    let standard_errors = (jac.transpose() * &jac)
        .try_inverse()
        .map(|inv| (0..k).map(|i| (sigma2 * inv[(i, i)]).max(0.0).sqrt()).collect())
        .unwrap_or_else(|| vec![f64::NAN; k]);
    let sst = total_sum_of_squares(y);
    AnsatzFit {
        ansatz,
        parameters: outcome.parameters,
        standard_errors,
        sse: outcome.sse,
        r_squared: 1.0 - outcome.sse / sst,
        converged: outcome.converged,
        iterations: outcome.iterations,
        gradient_norm: outcome.gradient_norm,
    }
}

/// Fits one ansatz to the active records.
pub fn fit_ansatz(dataset: &Dataset, ansatz: Ansatz, init: Option<&[f64]>) -> Result<AnsatzFit> {
    fit_ansatz_xy(&dataset.active_headcounts(), &dataset.active_qualities(), ansatz, init)
}

pub fn fit_ansatz_xy(x: &[f64], y: &[f64], ansatz: Ansatz, init: Option<&[f64]>) -> Result<AnsatzFit> {
    let k = ansatz.arity();
    if x.len() < k + 2 {
        return Err(Error::Validation(format!(
            "{ansatz} fit needs at least {} active records, got {}",
            k + 2,
            x.len()
        )));
    }
    if total_sum_of_squares(y) == 0.0 {
        return Err(Error::UndefinedVariance("qualities are constant".into()));
    }
    match ansatz {
        Ansatz::Quadratic | Ansatz::Cubic => {
            let fit = fit_linear(x, y, k - 1)?;
            Ok(AnsatzFit {
                ansatz,
                parameters: fit.coefficients,
                standard_errors: fit.standard_errors,
                sse: fit.sse,
                r_squared: fit.r_squared,
                converged: true,
                iterations: 0,
                gradient_norm: 0.0,
            })
        }
        Ansatz::Power | Ansatz::LogShift => {
            let opts = LmOptions::default();
            if let Some(init) = init {
                let out = levenberg_marquardt(ansatz, x, y, init, &opts)?;
                return if out.converged {
                    Ok(finish(ansatz, x, y, out))
                } else {
                    Err(not_converged(ansatz, &out))
                };
            }
            let base = ansatz.default_init(x, y);
            let first = levenberg_marquardt(ansatz, x, y, &base, &opts)?;
            if first.converged {
                return Ok(finish(ansatz, x, y, first));
            }
            let runs: Vec<Option<LmOutcome>> = (0..MULTI_STARTS)
                .into_par_iter()
                .map(|k| levenberg_marquardt(ansatz, x, y, &jittered_start(ansatz, &base, k, x, y), &opts).ok())
                .collect();
            let best = runs
                .into_iter()
                .flatten()
                .filter(|o| o.converged)
                .fold(None::<LmOutcome>, |best, o| match best {
                    Some(b) if b.sse <= o.sse => Some(b),
                    _ => Some(o),
                });
            match best {
                Some(out) => Ok(finish(ansatz, x, y, out)),
                None => Err(not_converged(ansatz, &first)),
            }
        }
    }
}

fn not_converged(ansatz: Ansatz, out: &LmOutcome) -> Error {
    Error::NotConverged {
        ansatz: ansatz.to_string(),
        iterations: out.iterations,
        sse: out.sse,
        gradient_norm: out.gradient_norm,
    }
}

/// One row of the model comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub formula: String,
    pub parameter_names: Vec<String>,
    pub parameters: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub r_squared: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// Sorted by R² (best first); failed rows last in canonical order.
    pub rows: Vec<ComparisonRow>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareOptions {
    pub mode: ContinuityMode,
    /// `(resamples, seed)` for bootstrap errors on the piecewise row.
    pub bootstrap: Option<(usize, u64)>,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self { mode: ContinuityMode::Continuous, bootstrap: None }
    }
}

fn failed_row(model: &str, formula: &str, names: &[&str], err: &Error) -> ComparisonRow {
    ComparisonRow {
        model: model.to_string(),
        formula: formula.to_string(),
        parameter_names: names.iter().map(|s| s.to_string()).collect(),
        parameters: Vec::new(),
        standard_errors: Vec::new(),
        r_squared: None,
        converged: false,
        error: Some(err.to_string()),
    }
}

/// Fits the piecewise model and every ansatz; individual failures become
/// rows carrying the error message.
pub fn compare_ansaetze(dataset: &Dataset, options: &CompareOptions) -> Comparison {
    let piecewise_names = ["a1", "b1", "a2", "b2", "N_c"];
    let piecewise_formula = "a1 + b1 N if N <= N_c; a2 + b2 N if N >= N_c";
    let mut rows = Vec::new();
    let piecewise = fit_piecewise(dataset, options.mode).and_then(|fit| match options.bootstrap {
        Some((resamples, seed)) => bootstrap_errors(dataset, &fit, resamples, seed).map(|b| b.fit),
        None => Ok(fit),
    });
    rows.push(match piecewise {
        Ok(fit) => {
            let p = fit.params;
            ComparisonRow {
                model: "piecewise".into(),
                formula: piecewise_formula.into(),
                parameter_names: piecewise_names.iter().map(|s| s.to_string()).collect(),
                parameters: vec![p.a1, p.b1, p.a2, p.b2, p.breakpoint],
                standard_errors: fit
                    .errors
                    .map(|e| vec![e.se_a1, e.se_b1, e.se_a2, e.se_b2, e.se_breakpoint])
                    .unwrap_or_default(),
                r_squared: Some(fit.r_squared),
                converged: true,
                error: None,
            }
        }
        Err(e) => failed_row("piecewise", piecewise_formula, &piecewise_names, &e),
    });
    for ansatz in Ansatz::ALL {
        rows.push(match fit_ansatz(dataset, ansatz, None) {
            Ok(fit) => ComparisonRow {
                model: ansatz.to_string(),
                formula: ansatz.formula().into(),
                parameter_names: ansatz.parameter_names().iter().map(|s| s.to_string()).collect(),
                parameters: fit.parameters,
                standard_errors: fit.standard_errors,
                r_squared: Some(fit.r_squared),
                converged: fit.converged,
                error: None,
            },
            Err(e) => failed_row(&ansatz.to_string(), ansatz.formula(), ansatz.parameter_names(), &e),
        });
    }
    // stable sort keeps canonical order among failures
    rows.sort_by(|a, b| match (a.r_squared, b.r_squared) {
        (Some(x), Some(y)) => y.partial_cmp(&x).unwrap_or(std::cmp::Ordering::Equal),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    Comparison { rows }
}

impl Comparison {
    pub fn row(&self, model: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.model == model)
    }

    /// Long-format CSV: `model,parameter,value,std_error,r_squared,error`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,parameter,value,std_error,r_squared,error\n");
        for row in &self.rows {
            let r2 = row.r_squared.map(fmt_num).unwrap_or_default();
            if let Some(err) = &row.error {
                out.push_str(&format!("{},,,,,\"{}\"\n", row.model, err.replace('"', "'")));
                continue;
            }
            for (i, name) in row.parameter_names.iter().enumerate() {
                let se = row.standard_errors.get(i).copied().map(fmt_num).unwrap_or_default();
                out.push_str(&format!("{},{},{},{},{},\n", row.model, name, fmt_num(row.parameters[i]), se, r2));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_power_recovery() {
        let x: Vec<f64> = (1..=25).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|n| 2.0 * n.sqrt()).collect();
        let fit = fit_ansatz_xy(&x, &y, Ansatz::Power, None).unwrap();
        assert!(fit.converged);
        assert_abs_diff_eq!(fit.parameters[0], 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.parameters[1], 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.parameters[2], 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn exact_log_recovery() {
        let x: Vec<f64> = (1..=25).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|n| 3.0 + 7.0 * (n + 2.5).ln()).collect();
        let fit = fit_ansatz_xy(&x, &y, Ansatz::LogShift, None).unwrap();
        assert_abs_diff_eq!(fit.parameters[0], 3.0, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.parameters[1], 7.0, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.parameters[2], 2.5, epsilon = 1e-6);
    }

    #[test]
    fn log_domain_violation_names_record() {
        let x = [3.0, 5.0, 2.0, 9.0, 12.0];
        let y = [1.0, 2.0, 0.5, 3.0, 3.5];
        let err = fit_ansatz_xy(&x, &y, Ansatz::LogShift, Some(&[0.0, 1.0, -2.5])).unwrap_err();
        match err {
            Error::Domain(msg) => assert!(msg.contains("record 3"), "{msg}"),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn too_few_points() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 2.0, 2.5, 2.7];
        assert!(matches!(fit_ansatz_xy(&x, &y, Ansatz::Power, None), Err(Error::Validation(_))));
        assert!(matches!(fit_ansatz_xy(&x, &y, Ansatz::Cubic, None), Err(Error::Validation(_))));
    }

    #[test]
    fn parsing_and_arity() {
        for a in Ansatz::ALL {
            assert_eq!(a.to_string().parse::<Ansatz>().unwrap(), a);
            assert_eq!(a.parameter_names().len(), a.arity());
        }
    }

    #[test]
    fn comparison_with_three_records_reports_every_failure() {
        let ds = Dataset::from_pairs(&[1.0, 2.0, 3.0], &[2.0, 4.0, 5.0]).unwrap();
        let table = compare_ansaetze(&ds, &CompareOptions::default());
        assert_eq!(table.rows.len(), 5);
        assert!(table.rows.iter().all(|r| r.error.is_some() && r.parameters.is_empty()));
    }
}
