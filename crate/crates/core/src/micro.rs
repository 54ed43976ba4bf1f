//! Microscopic strength model of a research group and seeded synthetic data.
//!
//! A group of `N` researchers with mean individual strength `a` and mean
//! pairwise interaction `b` has strength `S = N a + N (N - 1) b / 2`. Above the
//! cutoff `n_c` the group splits into `ceil(N / n_c)` subgroups of average
//! size `M`, which interact with each other at strength `c`:
//! `S = N a + N (M - 1) b / 2 + G (G - 1) c / 2` with `G` subgroups.
//! Quality is strength per head.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, GroupRecord};
use crate::error::{Error, Result};
use crate::segmented::PiecewiseParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicroParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub n_c: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl MicroParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.n_c > 1.0) {
            return Err(Error::Validation(format!("fragmentation cutoff must exceed 1, got {}", self.n_c)));
        }
        if !(self.b >= 0.0 && self.c >= 0.0) {
            return Err(Error::Validation("interaction strengths b and c must be nonnegative".into()));
        }
        if !(self.noise_sd >= 0.0) {
            return Err(Error::Validation(format!("noise sd must be nonnegative, got {}", self.noise_sd)));
        }
        Ok(())
    }
}

/// Size decomposition and strength of one synthetic group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticGroup {
    pub headcount: f64,
    pub subgroup_count: u64,
    pub subgroup_size: f64,
    pub strength: f64,
    pub quality: f64,
}

/// Expected group strength and its subgroup decomposition.
pub fn group(n: f64, params: &MicroParams) -> SyntheticGroup {
    let (count, size, strength) = if n <= params.n_c {
        (1, n, n * params.a + 0.5 * n * (n - 1.0) * params.b)
    } else {
        let g = (n / params.n_c).ceil();
        let m = n / g;
        let s = n * params.a + 0.5 * n * (m - 1.0) * params.b + 0.5 * g * (g - 1.0) * params.c;
        (g as u64, m, s)
    };
    SyntheticGroup {
        headcount: n,
        subgroup_count: count,
        subgroup_size: size,
        strength,
        quality: strength / n,
    }
}

pub fn expected_strength(n: f64, params: &MicroParams) -> f64 {
    group(n, params).strength
}

pub fn expected_quality(n: f64, params: &MicroParams) -> f64 {
    group(n, params).quality
}

fn noise_stream(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

fn check_sizes(sizes: &[f64]) -> Result<()> {
    if sizes.is_empty() {
        return Err(Error::Validation("no sizes to generate".into()));
    }
    if let Some(bad) = sizes.iter().find(|n| !(n.is_finite() && **n > 0.0)) {
        return Err(Error::Validation(format!("sizes must be positive, got {bad}")));
    }
    Ok(())
}

fn build(sizes: &[f64], qualities: impl Iterator<Item = f64>) -> Result<Dataset> {
    let records = sizes
        .iter()
        .zip(qualities)
        .enumerate()
        .map(|(i, (&n, s))| GroupRecord {
            index: i + 1,
            name: format!("synthetic-{:03}", i + 1),
            headcount: n,
            quality: s,
        })
        .collect();
    Dataset::new(records)
}

/// One record per size with quality `expected_quality + noise`, where the
/// noise for record `i` comes from ChaCha8 stream `(seed, i)`.
///
/// Qualities are not clamped to the 0..=100 assessment scale.
pub fn generate_dataset(sizes: &[f64], params: &MicroParams) -> Result<Dataset> {
    params.validate()?;
    check_sizes(sizes)?;
    build(
        sizes,
        sizes.iter().enumerate().map(|(i, &n)| {
            let eps: f64 = StandardNormal.sample(&mut noise_stream(params.seed, i));
            expected_quality(n, params) + params.noise_sd * eps
        }),
    )
}

/// Planted two-segment truth for estimator checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedPiecewise {
    pub params: PiecewiseParams,
}

impl PlantedPiecewise {
    /// Continuous lines meeting at `breakpoint`.
    pub fn continuous(a1: f64, b1: f64, b2: f64, breakpoint: f64) -> Self {
        let a2 = a1 + (b1 - b2) * breakpoint;
        Self { params: PiecewiseParams { a1, b1, a2, b2, breakpoint } }
    }

    /// Left-branch parameters of the micro-model below its cutoff:
    /// intercept `a - b/2`, slope `b/2`.
    pub fn from_micro_left_branch(params: &MicroParams, a2: f64, b2: f64) -> Self {
        Self {
            params: PiecewiseParams {
                a1: params.a - params.b / 2.0,
                b1: params.b / 2.0,
                a2,
                b2,
                breakpoint: params.n_c,
            },
        }
    }

    pub fn generate(&self, sizes: &[f64], noise_sd: f64, seed: u64) -> Result<Dataset> {
        check_sizes(sizes)?;
        if !(noise_sd >= 0.0) {
            return Err(Error::Validation(format!("noise sd must be nonnegative, got {noise_sd}")));
        }
        build(
            sizes,
            sizes.iter().enumerate().map(|(i, &n)| {
                let eps: f64 = StandardNormal.sample(&mut noise_stream(seed, i));
                self.params.predict(n) + noise_sd * eps
            }),
        )
    }
}
