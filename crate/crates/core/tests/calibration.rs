//! Monte Carlo calibration of the hypothesis tests under their null
//! hypotheses, plus power checks against gross violations.

use critmass_core::hypothesis::{
    ks_normality, no_correlation_xy, test_equal_slopes, zero_slope_xy, Decision,
};
use critmass_core::segmented::{bootstrap_errors, fit_piecewise};
use critmass_core::{ContinuityMode, Dataset, PlantedPiecewise, Selector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const ALPHA: f64 = 0.05;
const RATE_BAND: (f64, f64) = (0.02, 0.10);

fn normals(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn active_sizes() -> Vec<f64> {
    Dataset::fixture().exclude(&Selector::Index(9)).unwrap().active_headcounts()
}

fn rejection_rate(trials: u64, mut rejects: impl FnMut(u64) -> bool) -> f64 {
    (0..trials).filter(|&s| rejects(s)).count() as f64 / trials as f64
}

fn assert_calibrated(name: &str, rate: f64) {
    println!("{name}: rejection rate {rate:.3}");
    assert!(
        (RATE_BAND.0..=RATE_BAND.1).contains(&rate),
        "{name}: null rejection rate {rate} outside {RATE_BAND:?}"
    );
}

#[test]
fn no_correlation_under_independence() {
    let x: Vec<f64> = (0..50).map(|i| 2.0 + 0.5 * i as f64).collect();
    let rate = rejection_rate(100, |s| {
        let y: Vec<f64> = normals(s, 50).iter().map(|e| 40.0 + 5.0 * e).collect();
        no_correlation_xy(&x, &y).unwrap().p_value < ALPHA
    });
    assert!(rate <= 0.10, "p > 0.05 in only {:.0}% of trials", 100.0 * (1.0 - rate));
    let wide = rejection_rate(1000, |s| {
        let y: Vec<f64> = normals(10_000 + s, 50).iter().map(|e| 40.0 + 5.0 * e).collect();
        no_correlation_xy(&x, &y).unwrap().p_value < ALPHA
    });
    assert_calibrated("no_correlation", wide);
}

#[test]
fn equal_slopes_on_a_straight_line() {
    let sizes = active_sizes();
    let line = PlantedPiecewise::continuous(20.0, 1.0, 1.0, 18.0);
    let rate = rejection_rate(100, |s| {
        let ds = line.generate(&sizes, 6.7, 90_000 + s).unwrap();
        let fit = fit_piecewise(&ds, ContinuityMode::Continuous).unwrap();
        let boot = bootstrap_errors(&ds, &fit, 400, s).unwrap();
        test_equal_slopes(&boot).unwrap().p_value < ALPHA
    });
    assert_calibrated("equal_slopes", rate);
}

#[test]
fn equal_slopes_detects_a_gross_kink() {
    let sizes: Vec<f64> = (2..=30).map(f64::from).collect();
    let ds = PlantedPiecewise::continuous(10.0, 2.0, 0.0, 15.5).generate(&sizes, 0.05, 1).unwrap();
    let fit = fit_piecewise(&ds, ContinuityMode::Continuous).unwrap();
    let boot = bootstrap_errors(&ds, &fit, 1000, 1).unwrap();
    assert!(test_equal_slopes(&boot).unwrap().p_value < 0.001);
}

#[test]
fn right_slope_t_test_at_the_true_breakpoint() {
    // records above a known breakpoint of a flat right branch
    let x: Vec<f64> = active_sizes().into_iter().filter(|n| *n >= 12.0).collect();
    let rate = rejection_rate(1000, |s| {
        let y: Vec<f64> = normals(20_000 + s, x.len()).iter().map(|e| 50.0 + 6.7 * e).collect();
        zero_slope_xy(&x, &y).unwrap().p_value < ALPHA
    });
    assert_calibrated("zero_right_slope", rate);
}

#[test]
fn ks_on_normal_draws() {
    let rate = rejection_rate(100, |s| ks_normality(&normals(1000 + s, 1000)).unwrap().decision_at_005 == Decision::Reject);
    assert!(rate <= 0.10, "fail_to_reject in only {:.0}% of trials", 100.0 * (1.0 - rate));
    let small = rejection_rate(1000, |s| ks_normality(&normals(50_000 + s, 29)).unwrap().p_value < ALPHA);
    assert_calibrated("ks_normality n=29", small);
}

#[test]
fn ks_detects_uniform_tails() {
    // single draws of 100 have power near 0.6 against a uniform, so check the rate
    let rate = rejection_rate(200, |s| {
        let mut rng = ChaCha8Rng::seed_from_u64(70_000 + s);
        let u: Vec<f64> = (0..100).map(|_| 100.0 * (rng.random::<f64>() - 0.5)).collect();
        ks_normality(&u).unwrap().decision_at_005 == Decision::Reject
    });
    println!("ks_normality uniform n=100: rejection rate {rate:.3}");
    assert!(rate > 0.4, "power against uniform {rate}");
}
