use approx::assert_abs_diff_eq;
use critmass_core::micro::generate_dataset;
use critmass_core::nls::{compare_ansaetze, CompareOptions};
use critmass_core::ranking::{rank_groups, residuals_vs_model};
use critmass_core::report::{emit_plot_data, run_full_analysis, RunConfig};
use critmass_core::segmented::{bootstrap_errors, confidence_band, fit_piecewise, linspace};
use critmass_core::{ContinuityMode, Dataset, Error, MicroParams, PlantedPiecewise, Selector};

fn active_fixture() -> Dataset {
    Dataset::fixture().exclude(&Selector::Index(9)).unwrap()
}

fn sizes(lo: u32, hi: u32) -> Vec<f64> {
    (lo..=hi).map(f64::from).collect()
}

#[test]
fn zero_noise_planted_lines_are_recovered_in_both_modes() {
    for bp in [15.0, 15.5] {
        let planted = PlantedPiecewise::continuous(10.0, 2.0, 0.5, bp);
        let ds = planted.generate(&sizes(2, 30), 0.0, 7).unwrap();
        for mode in [ContinuityMode::Free, ContinuityMode::Continuous] {
            let fit = fit_piecewise(&ds, mode).unwrap();
            let (got, want) = (fit.params, planted.params);
            for (g, w, what) in [
                (got.a1, want.a1, "a1"),
                (got.b1, want.b1, "b1"),
                (got.a2, want.a2, "a2"),
                (got.b2, want.b2, "b2"),
                (got.breakpoint, want.breakpoint, "breakpoint"),
            ] {
                assert!((g - w).abs() < 1e-6, "{mode} bp {bp}: {what} = {g}, planted {w}");
            }
            assert!(fit.sse < 1e-12);
        }
    }
}

#[test]
fn zero_noise_micro_left_branch_is_linear() {
    let params = MicroParams { a: 12.0, b: 3.0, c: 0.0, n_c: 40.0, noise_sd: 0.0, seed: 1 };
    let ds = generate_dataset(&sizes(2, 30), &params).unwrap();
    let planted = PlantedPiecewise::from_micro_left_branch(&params, 0.0, 0.0);
    for r in ds.records() {
        assert_abs_diff_eq!(r.quality, planted.params.a1 + planted.params.b1 * r.headcount, epsilon = 1e-12);
    }
}

#[test]
fn bootstrap_is_reproducible_and_seed_sensitive() {
    let ds = active_fixture();
    let fit = fit_piecewise(&ds, ContinuityMode::Continuous).unwrap();
    let a = bootstrap_errors(&ds, &fit, 300, 11).unwrap();
    let b = bootstrap_errors(&ds, &fit, 300, 11).unwrap();
    let c = bootstrap_errors(&ds, &fit, 300, 12).unwrap();
    assert_eq!(a.replicates, b.replicates);
    assert_eq!(a.fit.errors, b.fit.errors);
    assert_ne!(a.fit.errors, c.fit.errors);
    assert!(matches!(bootstrap_errors(&ds, &fit, 199, 11), Err(Error::Validation(_))));
}

#[test]
fn zero_noise_bootstrap_has_no_spread() {
    let ds = PlantedPiecewise::continuous(10.0, 2.0, 0.5, 15.5).generate(&sizes(2, 30), 0.0, 0).unwrap();
    let fit = fit_piecewise(&ds, ContinuityMode::Continuous).unwrap();
    let boot = bootstrap_errors(&ds, &fit, 200, 3).unwrap();
    let e = boot.fit.errors.unwrap();
    for se in [e.se_a1, e.se_b1, e.se_a2, e.se_b2] {
        assert!(se < 1e-6, "{e:?}");
    }
    let band = confidence_band(&boot, &linspace(2.0, 30.0, 50), 0.95).unwrap();
    assert!(band.lower.iter().zip(&band.upper).all(|(l, u)| u - l < 1e-6));
}

#[test]
fn band_contains_fit_and_widens_towards_the_largest_group() {
    let ds = active_fixture();
    let fit = fit_piecewise(&ds, ContinuityMode::Continuous).unwrap();
    let boot = bootstrap_errors(&ds, &fit, 1000, 5).unwrap();
    let x = ds.active_headcounts();
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let band = confidence_band(&boot, &linspace(lo, hi, 200), 0.95).unwrap();
    for i in 0..200 {
        assert!(band.lower[i] <= band.prediction[i] && band.prediction[i] <= band.upper[i]);
        assert_abs_diff_eq!(band.prediction[i], fit.predict(band.grid[i]), epsilon = 1e-12);
    }
    let mean = ds.mean_headcount();
    let ends = confidence_band(&boot, &[mean, hi], 0.95).unwrap();
    let width = |i: usize| ends.upper[i] - ends.lower[i];
    assert!(width(0) < width(1), "width at mean {} vs max {}", width(0), width(1));
}

#[test]
fn applied_mathematics_shaped_comparison_converges_everywhere() {
    // left branch a1 = 5, b1 = 2.5 with fragmentation above 12
    let params = MicroParams { a: 7.5, b: 5.0, c: 20.0, n_c: 12.0, noise_sd: 5.0, seed: 45 };
    let sizes: Vec<f64> = (0..45).map(|i| 2.0 + i as f64 * 1.1).collect();
    let ds = generate_dataset(&sizes, &params).unwrap();
    let table = compare_ansaetze(&ds, &CompareOptions::default());
    assert_eq!(table.rows.len(), 5);
    for row in &table.rows {
        assert!(row.converged && row.error.is_none(), "{row:?}");
    }
    let r2: Vec<f64> = table.rows.iter().map(|r| r.r_squared.unwrap()).collect();
    assert!(r2.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn model_ranking_snapshot() {
    let ds = active_fixture();
    let fit = fit_piecewise(&ds, ContinuityMode::Continuous).unwrap();
    let ranked = rank_groups(&residuals_vs_model(&ds, &fit).unwrap());
    let top: Vec<&str> = ranked.iter().take(5).map(|g| g.name.as_str()).collect();
    assert_eq!(top, ["Oxford", "Nottingham", "Leeds", "St Andrews", "Imperial"]);
    let bottom: Vec<&str> = ranked.iter().rev().take(2).map(|g| g.name.as_str()).collect();
    assert_eq!(bottom, ["Salford", "Lancaster"]);
    assert_abs_diff_eq!(ranked[0].deviation, 14.885, epsilon = 1e-3);
}

fn quick_config() -> RunConfig {
    RunConfig { exclude: vec!["#9".into()], resamples: 400, ..RunConfig::new(2008) }
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let cfg = quick_config();
    let (a, b) = (run_full_analysis(&cfg).unwrap(), run_full_analysis(&cfg).unwrap());
    assert_eq!(a.to_json(), b.to_json());
    for fig in critmass_core::report::FIGURES {
        assert_eq!(emit_plot_data(&a, fig).unwrap(), emit_plot_data(&b, fig).unwrap());
    }
    let other = run_full_analysis(&RunConfig { seed: 2009, ..cfg }).unwrap();
    assert_ne!(a.to_json(), other.to_json());
}

#[test]
fn plot_data_shapes() {
    let analysis = run_full_analysis(&quick_config()).unwrap();
    let rows = |fig: &str| -> Vec<Vec<String>> {
        let text = emit_plot_data(&analysis, fig).unwrap();
        let mut r = csv::Reader::from_reader(text.as_bytes());
        r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
    };
    let fit = rows("fit");
    assert_eq!(fit.len(), 200);
    let nums: Vec<Vec<f64>> = fit.iter().map(|r| r.iter().map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(nums[0][0], 2.0);
    assert_eq!(nums[199][0], 28.9);
    assert!(nums.iter().all(|r| r[2] <= r[1] && r[1] <= r[3]));
    assert_eq!(rows("rank-model").len(), 29);
    assert_eq!(rows("rank-mean").len(), 30);
    let scatter = rows("scatter");
    assert_eq!(scatter.len(), 30);
    assert_eq!(scatter.iter().filter(|r| r[4] == "1").count(), 1);
    assert!(matches!(emit_plot_data(&analysis, "fig9"), Err(Error::Usage(_))));
}

#[test]
fn headline_and_outlier_flag() {
    // the rounded error bar needs the full resample count: se(N_k) sits near 2.5
    let analysis = run_full_analysis(&RunConfig { resamples: 10_000, ..quick_config() }).unwrap();
    assert_eq!(analysis.headline(), "N_k = 9 ± 3");
    assert!(analysis.to_json().contains("\"headline\": \"N_k = 9 ± 3\""));

    let full = run_full_analysis(&RunConfig { exclude: vec![], ..quick_config() }).unwrap();
    let largest = full
        .dataset
        .records()
        .iter()
        .max_by(|a, b| a.headcount.partial_cmp(&b.headcount).unwrap())
        .unwrap();
    let flagged = full.outliers.iter().find(|o| o.index == largest.index).expect("largest group flagged");
    assert!(flagged.name.starts_with("Joint submission"));
    assert!(flagged.ratio > 3.0);
}

#[test]
fn stage_names_on_failure() {
    let err = run_full_analysis(&RunConfig { exclude: vec!["Atlantis".into()], ..quick_config() }).unwrap_err();
    assert_eq!((err.stage, err.exit_code()), ("exclude", 1));
    let err = run_full_analysis(&RunConfig { resamples: 10, ..quick_config() }).unwrap_err();
    assert_eq!((err.stage, err.exit_code()), ("config", 2));
    let tiny = tempfile_with("a,1,10\nb,2,20\nc,3,30\n");
    let err = run_full_analysis(&RunConfig { input: Some(tiny.clone()), exclude: vec![], ..quick_config() }).unwrap_err();
    assert_eq!(err.stage, "fit");
    std::fs::remove_file(tiny).unwrap();
}

fn tempfile_with(text: &str) -> std::path::PathBuf {
    let path = std::env::temp_dir().join(format!("critmass-pipeline-{}.csv", std::process::id()));
    std::fs::write(&path, text).unwrap();
    path
}
