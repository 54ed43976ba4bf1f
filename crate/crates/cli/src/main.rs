use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use critmass_core::hypothesis::{
    ks_normality, test_equal_slopes, test_no_correlation, test_zero_right_slope,
};
use critmass_core::micro::generate_dataset;
use critmass_core::nls::{compare_ansaetze, CompareOptions};
use critmass_core::ranking::{rank_groups, residuals_vs_mean, residuals_vs_model};
use critmass_core::report::{
    deviations_csv, emit_plot_data, fit_with_band, run_full_analysis, to_json_string, RunConfig, StageError, FIGURES,
};
use critmass_core::segmented::{bootstrap_errors, classify, critical_masses, fit_piecewise};
use critmass_core::{ContinuityMode, Dataset, Error, MicroParams};

type Staged<T> = Result<T, StageError>;

#[derive(Parser)]
#[command(name = "critmass", version, about = "Critical-mass analysis of research-group quality")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segmented fit with bootstrap errors and critical masses.
    Fit(FitArgs),
    /// Hypothesis tests on the fit.
    Test(TestArgs),
    /// Piecewise fit against the four alternative ansaetze.
    Compare(CompareArgs),
    /// Rank groups by deviation from the mean or from the model.
    Rank(RankArgs),
    /// Generate synthetic data from the microscopic model.
    Simulate(SimulateArgs),
    /// Full pipeline: one JSON report plus plot data for every figure.
    Report(ReportArgs),
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Delimited input file; defaults to the embedded Statistics & OR table.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Record to exclude, by name or as "#INDEX". Repeatable.
    #[arg(long)]
    exclude: Vec<String>,
    /// Weighting scheme for profile inputs.
    #[arg(long, default_value = "2009", value_parser = ["2009", "2010"])]
    weights: String,
}

#[derive(Args, Clone)]
struct BootArgs {
    /// Continuity constraint at the breakpoint.
    #[arg(long, default_value = "continuous", value_parser = parse_mode)]
    mode: ContinuityMode,
    #[arg(long, default_value_t = 10_000)]
    resamples: usize,
    /// Bootstrap seed. There is no default: runs must be reproducible by hand.
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_mode(s: &str) -> Result<ContinuityMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    boot: BootArgs,
    /// Confidence level of the prediction band.
    #[arg(long, default_value_t = 0.95)]
    band: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV of the fit line and band on a 200-point grid.
    #[arg(long)]
    plot_data: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Which {
    All,
    Nocorr,
    Slopes,
    Rightflat,
    Ks,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    boot: BootArgs,
    #[arg(long, value_enum, default_value = "all")]
    which: Which,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    boot: BootArgs,
    /// Output file; the format follows the extension unless --format is given.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum RankMode {
    Mean,
    Model,
}

#[derive(Args)]
struct RankArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "model")]
    mode: RankMode,
    /// Continuity constraint of the reference fit in model mode.
    #[arg(long, default_value = "continuous", value_parser = parse_mode)]
    fit_mode: ContinuityMode,
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV with columns index, name, deviation, excluded.
    #[arg(long)]
    plot_data: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, allow_negative_numbers = true)]
    a: f64,
    #[arg(long)]
    b: f64,
    #[arg(long, default_value_t = 0.0)]
    c: f64,
    #[arg(long)]
    nc: f64,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// A file of sizes (whitespace or comma separated) or a range "start:end:step".
    #[arg(long)]
    sizes: String,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    boot: BootArgs,
    #[arg(long, default_value_t = 0.95)]
    band: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory receiving one CSV per figure.
    #[arg(long)]
    plot_dir: Option<PathBuf>,
    /// Single figure to write, as FIGURE=PATH. Repeatable.
    #[arg(long)]
    plot_data: Vec<String>,
}

fn config(data: &DataArgs, boot: &BootArgs, level: f64) -> Staged<RunConfig> {
    let seed = boot
        .seed
        .ok_or_else(|| StageError { stage: "config", error: Error::Usage("--seed is required".into()) })?;
    let cfg = RunConfig {
        input: data.input.clone(),
        weights: data.weights.clone(),
        exclude: data.exclude.clone(),
        mode: boot.mode,
        resamples: boot.resamples,
        seed,
        level,
    };
    cfg.validate().map_err(StageError::at("config"))?;
    Ok(cfg)
}

fn load(data: &DataArgs) -> Staged<Dataset> {
    let cfg = RunConfig {
        input: data.input.clone(),
        weights: data.weights.clone(),
        exclude: data.exclude.clone(),
        ..RunConfig::new(0)
    };
    cfg.dataset()
}

fn emit(path: Option<&Path>, text: &str) -> Staged<()> {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| StageError { stage: "write", error: Error::Io(format!("{}: {e}", p.display())) }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_fit(args: &FitArgs) -> Staged<()> {
    let cfg = config(&args.data, &args.boot, args.band)?;
    let ds = cfg.dataset()?;
    let (boot, band) = fit_with_band(&ds, &cfg)?;
    let masses = critical_masses(&boot.fit).map_err(StageError::at("critical_masses"))?;
    let classes = classify(&ds, &masses);
    let excluded: Vec<_> = ds
        .excluded()
        .iter()
        .map(|i| json!({"index": i, "name": ds.get(*i).map(|r| r.name.as_str())}))
        .collect();
    let doc = json!({
        "config": cfg,
        "mode": boot.fit.mode,
        "parameters": boot.fit.params,
        "standard_errors": boot.fit.errors,
        "breakpoint": boot.fit.params.breakpoint,
        "r_squared": boot.fit.r_squared,
        "sse": boot.fit.sse,
        "discarded_resamples": boot.discarded,
        "critical_masses": {
            "lower": masses.lower, "upper": masses.upper,
            "se_lower": masses.se_lower, "se_upper": masses.se_upper,
            "headline": masses.headline(),
        },
        "classification_counts": {"small": classes.small, "medium": classes.medium, "large": classes.large},
        "excluded": excluded,
    });
    emit(args.out.as_deref(), &to_json_string(&doc))?;
    if let Some(p) = &args.plot_data {
        let mut csv = String::from("N,prediction,band_lo,band_hi\n");
        for i in 0..band.grid.len() {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                critmass_core::report::fmt_num(band.grid[i]),
                critmass_core::report::fmt_num(band.prediction[i]),
                critmass_core::report::fmt_num(band.lower[i]),
                critmass_core::report::fmt_num(band.upper[i]),
            ));
        }
        emit(Some(p), &csv)?;
    }
    Ok(())
}

fn run_test(args: &TestArgs) -> Staged<()> {
    let ds = load(&args.data)?;
    let wants = |w: Which| args.which == Which::All || args.which == w;
    let tests = StageError::at("tests");
    let mut results = Vec::new();
    if wants(Which::Nocorr) {
        results.push(test_no_correlation(&ds).map_err(&tests)?);
    }
    let needs_fit = wants(Which::Slopes) || wants(Which::Rightflat) || wants(Which::Ks);
    if needs_fit {
        let fit = fit_piecewise(&ds, args.boot.mode).map_err(StageError::at("fit"))?;
        if wants(Which::Slopes) {
            let cfg = config(&args.data, &args.boot, 0.95)?;
            let boot = bootstrap_errors(&ds, &fit, cfg.resamples, cfg.seed).map_err(StageError::at("bootstrap"))?;
            results.push(test_equal_slopes(&boot).map_err(&tests)?);
        }
        if wants(Which::Rightflat) {
            results.push(test_zero_right_slope(&ds, &fit).map_err(&tests)?);
        }
        if wants(Which::Ks) {
            results.push(ks_normality(&fit.residuals).map_err(&tests)?);
        }
    }
    emit(args.out.as_deref(), &to_json_string(&results))
}

fn run_compare(args: &CompareArgs) -> Staged<()> {
    let ds = load(&args.data)?;
    let bootstrap = match args.boot.seed {
        Some(_) => {
            let cfg = config(&args.data, &args.boot, 0.95)?;
            Some((cfg.resamples, cfg.seed))
        }
        None => None,
    };
    let table = compare_ansaetze(&ds, &CompareOptions { mode: args.boot.mode, bootstrap });
    let format = args.format.unwrap_or_else(|| match &args.out {
        Some(p) if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) => Format::Csv,
        _ => Format::Json,
    });
    let text = match format {
        Format::Json => to_json_string(&table),
        Format::Csv => table.to_csv(),
    };
    emit(args.out.as_deref(), &text)
}

fn run_rank(args: &RankArgs) -> Staged<()> {
    let ds = load(&args.data)?;
    let report = match args.mode {
        RankMode::Mean => residuals_vs_mean(&ds, true),
        RankMode::Model => {
            let fit = fit_piecewise(&ds, args.fit_mode).map_err(StageError::at("fit"))?;
            residuals_vs_model(&ds, &fit).map_err(StageError::at("rank"))?
        }
    };
    let mut csv = String::from("rank,index,name,deviation\n");
    for g in rank_groups(&report) {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            g.rank,
            g.index,
            quote(&g.name),
            critmass_core::report::fmt_num(g.deviation)
        ));
    }
    emit(args.out.as_deref(), &csv)?;
    if let Some(p) = &args.plot_data {
        emit(Some(p), &deviations_csv(&report))?;
    }
    Ok(())
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn parse_sizes(spec: &str) -> Staged<Vec<f64>> {
    let usage = |msg: String| StageError { stage: "config", error: Error::Usage(msg) };
    let path = Path::new(spec);
    let text = if path.exists() {
        fs::read_to_string(path)
            .map_err(|e| StageError { stage: "load", error: Error::Io(format!("{spec}: {e}")) })?
    } else if spec.contains(':') {
        let parts: Vec<f64> = spec
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| usage(format!("bad size range '{spec}', expected start:end:step")))?;
        let (start, end, step) = match parts[..] {
            [s, e] => (s, e, 1.0),
            [s, e, st] => (s, e, st),
            _ => return Err(usage(format!("bad size range '{spec}', expected start:end:step"))),
        };
        if !(step > 0.0) || end < start {
            return Err(usage(format!("size range '{spec}' is empty or has a nonpositive step")));
        }
        let count = ((end - start) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|i| start + i as f64 * step).collect());
    } else {
        return Err(StageError { stage: "load", error: Error::Io(format!("{spec}: no such file")) });
    };
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| usage(format!("bad size '{t}' in {spec}"))))
        .collect()
}

fn run_simulate(args: &SimulateArgs) -> Staged<()> {
    let sizes = parse_sizes(&args.sizes)?;
    let params = MicroParams { a: args.a, b: args.b, c: args.c, n_c: args.nc, noise_sd: args.noise, seed: args.seed };
    let ds = generate_dataset(&sizes, &params).map_err(StageError::at("simulate"))?;
    emit(args.out.as_deref(), &ds.to_csv())
}

fn run_report(args: &ReportArgs) -> Staged<()> {
    let cfg = config(&args.data, &args.boot, args.band)?;
    let mut targets: Vec<(String, PathBuf)> = Vec::new();
    for spec in &args.plot_data {
        let (fig, path) = spec.split_once('=').ok_or_else(|| StageError {
            stage: "config",
            error: Error::Usage(format!("--plot-data expects FIGURE=PATH, got '{spec}'")),
        })?;
        targets.push((fig.to_string(), PathBuf::from(path)));
    }
    let analysis = run_full_analysis(&cfg)?;
    if let Some(dir) = &args.plot_dir {
        fs::create_dir_all(dir)
            .map_err(|e| StageError { stage: "write", error: Error::Io(format!("{}: {e}", dir.display())) })?;
        for fig in FIGURES {
            targets.push((fig.to_string(), dir.join(format!("{fig}.csv"))));
        }
    }
    for (fig, path) in &targets {
        let csv = emit_plot_data(&analysis, fig).map_err(StageError::at("plot_data"))?;
        emit(Some(path), &csv)?;
    }
    emit(args.out.as_deref(), &analysis.to_json())?;
    if args.out.is_some() {
        println!("{}", analysis.headline());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fit(a) => run_fit(a),
        Command::Test(a) => run_test(a),
        Command::Compare(a) => run_compare(a),
        Command::Rank(a) => run_rank(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Report(a) => run_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
