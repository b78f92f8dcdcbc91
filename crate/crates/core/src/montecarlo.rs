//! Sampling harness: empirical moments against the exact polynomials,
//! normality diagnostics, and exhaustive enumeration on tiny lattices.
//!
//! Sample `i` of a run with master seed `s` is drawn with seed
//! `s.wrapping_add(i)` (see [`sample_seed`]). Samples are generated and
//! measured in parallel, collected in index order, and reduced into exact
//! integer power sums, so summaries do not depend on the thread count.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::complex::{CellSet, Complex, VoxelField};
use crate::lattice::{LatticeError, LatticeSpec};
use crate::measure::{measure, IntrinsicVolumes, MeasureError};
use crate::models::{sample, Model, ModelError, ModelParams};
use crate::moments::{
    mean, model_variable, variance, variance_valid_for, wasserstein_bound, BoundMode, MomentsError,
    Variable,
};
use crate::poly::{int, rational_to_f64, RationalPolynomial};

/// Largest configuration count [`exhaustive_verify`] will enumerate.
pub const EXHAUSTIVE_LIMIT: u64 = 1 << 20;

#[derive(Debug, Error)]
pub enum MonteCarloError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(u64),
    #[error("need at least two lattice sides")]
    TooFewSides,
    #[error("{sites} random sites give more than {limit} configurations")]
    TooManyConfigurations { sites: u64, limit: u64 },
    #[error("q = {0} gives zero variance; the standardization is undefined")]
    DegenerateVariance(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Moments(#[from] MomentsError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn sample_seed(master: u64, index: u64) -> u64 {
    master.wrapping_add(index)
}

/// Exact value of the `f64` probability the sampler compares against.
fn exact_probability(p: f64) -> BigRational {
    BigRational::from_float(p).expect("probabilities are finite")
}

fn eval_in_variable(poly: &RationalPolynomial, variable: Variable, p: &BigRational) -> BigRational {
    match variable {
        Variable::P => poly.eval(p),
        Variable::Q => poly.eval(&(BigRational::one() - p)),
    }
}

/// Measures `samples` independent draws, in sample order.
pub fn sample_volumes(
    params: &ModelParams,
    samples: u64,
) -> Result<Vec<IntrinsicVolumes>, MonteCarloError> {
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let complex = sample(&params.with_seed(sample_seed(params.seed, i)))?;
            Ok(measure(&complex)?)
        })
        .collect()
}

/// Exact power sums `sum x^a` for `a = 1..=4`.
#[derive(Clone, Debug, Default)]
struct PowerSums([BigInt; 4]);

impl PowerSums {
    fn push(&mut self, x: i64) {
        let x = BigInt::from(x);
        let mut power = x.clone();
        for slot in &mut self.0 {
            *slot += &power;
            power *= &x;
        }
    }

    /// Biased central moments `m_2, m_3, m_4` and the mean.
    fn central(&self, n: u64) -> (BigRational, [BigRational; 3]) {
        let n = BigRational::from_integer(BigInt::from(n));
        let raw: Vec<BigRational> = self
            .0
            .iter()
            .map(|s| BigRational::from_integer(s.clone()) / &n)
            .collect();
        let m = raw[0].clone();
        let m2 = &raw[1] - &m * &m;
        let m3 = &raw[2] - int(3) * &m * &raw[1] + int(2) * &m * &m * &m;
        let m4 = &raw[3] - int(4) * &m * &raw[2] + int(6) * &m * &m * &raw[1]
            - int(3) * &m * &m * &m * &m;
        (m, [m2, m3, m4])
    }
}

/// Moment-based shape statistics from biased central moments: skewness
/// `g1 = m3 / m2^(3/2)` and excess kurtosis `g2 = m4 / m2^2 - 3`.
fn shape(central: &[BigRational; 3]) -> (Option<f64>, Option<f64>) {
    if central[0].is_zero() {
        return (None, None);
    }
    let m2 = rational_to_f64(&central[0]);
    let skew = rational_to_f64(&central[1]) / m2.powf(1.5);
    let kurt = rational_to_f64(&(&central[2] / (&central[0] * &central[0]))) - 3.0;
    (Some(skew), Some(kurt))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VolumeStats {
    pub k: usize,
    pub mean: f64,
    /// Unbiased sample variance (denominator `samples - 1`).
    pub variance: f64,
    pub mean_std_error: f64,
    pub expected_mean: f64,
    /// `(mean - expected_mean) / mean_std_error`; `0` for an exact match with
    /// zero spread, absent when the spread is zero but the means differ.
    pub z_score: Option<f64>,
    /// Absent when the variance formula does not apply to this lattice.
    pub expected_variance: Option<f64>,
    pub variance_ratio: Option<f64>,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub params: ModelParams,
    pub samples: u64,
    pub seed: u64,
    pub stats: Vec<VolumeStats>,
    /// Unbiased sample covariance of `(mu_0, ..., mu_d)`.
    pub covariance: Vec<Vec<f64>>,
    pub wall_time_secs: f64,
}

impl SimulationSummary {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("summaries serialize")
    }

    /// Key-sorted JSON without the wall time, byte-identical across runs and
    /// thread counts.
    pub fn canonical_json(&self) -> String {
        let mut value = self.to_json();
        if let serde_json::Value::Object(map) = &mut value {
            map.remove("wall_time_secs");
        }
        value.to_string()
    }
}

/// Summarizes measured samples against the exact moments of `params`.
pub fn summarize(
    params: &ModelParams,
    volumes: &[IntrinsicVolumes],
) -> Result<SimulationSummary, MonteCarloError> {
    let samples = volumes.len() as u64;
    if samples < 2 {
        return Err(MonteCarloError::TooFewSamples(samples));
    }
    let spec = params.spec;
    let d = spec.dim();
    let volume = BigRational::from_integer(BigInt::from(spec.top_count()));
    let variable = model_variable(params.model);
    let p = exact_probability(params.p);
    let n_big = BigRational::from_integer(BigInt::from(samples));
    let bessel = &n_big / (&n_big - BigRational::one());

    let mut stats = Vec::with_capacity(d + 1);
    for k in 0..=d {
        let mut sums = PowerSums::default();
        for v in volumes {
            sums.push(v.get(k));
        }
        let (m, central) = sums.central(samples);
        let unbiased = &central[0] * &bessel;
        let se2 = &unbiased / &n_big;
        let expected_mean = eval_in_variable(&mean(params.model, d, k)?, variable, &p) * &volume;
        let diff = &m - &expected_mean;
        let z_score = if se2.is_zero() {
            diff.is_zero().then_some(0.0)
        } else {
            Some(rational_to_f64(&diff) / rational_to_f64(&se2).sqrt())
        };
        let expected_variance = if variance_valid_for(params.model, spec.side()) {
            Some(eval_in_variable(&variance(params.model, d, k)?, variable, &p) * &volume)
        } else {
            None
        };
        let variance_ratio = expected_variance
            .as_ref()
            .filter(|v| !v.is_zero())
            .map(|v| rational_to_f64(&(&unbiased / v)));
        let (skewness, excess_kurtosis) = shape(&central);
        stats.push(VolumeStats {
            k,
            mean: rational_to_f64(&m),
            variance: rational_to_f64(&unbiased),
            mean_std_error: rational_to_f64(&se2).sqrt(),
            expected_mean: rational_to_f64(&expected_mean),
            z_score,
            expected_variance: expected_variance.as_ref().map(rational_to_f64),
            variance_ratio,
            skewness,
            excess_kurtosis,
        });
    }

    let sums: Vec<BigInt> = (0..=d)
        .map(|k| volumes.iter().map(|v| BigInt::from(v.get(k))).sum())
        .collect();
    let covariance = (0..=d)
        .map(|a| {
            (0..=d)
                .map(|b| {
                    let cross: BigInt = volumes
                        .iter()
                        .map(|v| BigInt::from(v.get(a)) * BigInt::from(v.get(b)))
                        .sum();
                    let num = BigRational::from_integer(cross)
                        - BigRational::from_integer(&sums[a] * &sums[b]) / &n_big;
                    rational_to_f64(&(num / (&n_big - BigRational::one())))
                })
                .collect()
        })
        .collect();

    Ok(SimulationSummary {
        params: *params,
        samples,
        seed: params.seed,
        stats,
        covariance,
        wall_time_secs: 0.0,
    })
}

/// Samples, measures and summarizes, also returning the per-sample values.
pub fn simulate_with_samples(
    params: &ModelParams,
    samples: u64,
) -> Result<(SimulationSummary, Vec<IntrinsicVolumes>), MonteCarloError> {
    if samples < 2 {
        return Err(MonteCarloError::TooFewSamples(samples));
    }
    let start = Instant::now();
    let volumes = sample_volumes(params, samples)?;
    let mut summary = summarize(params, &volumes)?;
    summary.wall_time_secs = start.elapsed().as_secs_f64();
    Ok((summary, volumes))
}

pub fn simulate(params: &ModelParams, samples: u64) -> Result<SimulationSummary, MonteCarloError> {
    Ok(simulate_with_samples(params, samples)?.0)
}

/// Writes `sample_index, mu_0, ..., mu_d` rows.
pub fn write_samples_csv(
    volumes: &[IntrinsicVolumes],
    out: impl Write,
) -> Result<(), MonteCarloError> {
    let mut writer = csv::Writer::from_writer(out);
    let d = volumes.first().map_or(0, |v| v.values().len() - 1);
    let mut header = vec!["sample_index".to_owned()];
    header.extend((0..=d).map(|k| format!("mu_{k}")));
    writer.write_record(&header)?;
    for (i, v) in volumes.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(v.values().iter().map(i64::to_string));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Supremum distance between the empirical CDF of `values` and the standard
/// normal CDF, accounting for ties.
pub fn ecdf_sup_distance(values: &[f64]) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut sup: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let f = normal.cdf(sorted[i]);
        sup = sup
            .max((f - i as f64 / n).abs())
            .max(((j + 1) as f64 / n - f).abs());
        i = j + 1;
    }
    sup
}

/// Standard error of the sample skewness for `n` normal observations.
pub fn skewness_std_error(n: u64) -> f64 {
    let n = n as f64;
    (6.0 * n * (n - 1.0) / ((n - 2.0) * (n + 1.0) * (n + 3.0))).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CltEntry {
    pub n: u64,
    pub k: usize,
    pub skewness: f64,
    pub skewness_std_error: f64,
    pub excess_kurtosis: f64,
    pub sup_distance: f64,
    /// Present for the voxel model.
    pub wasserstein_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CltReport {
    pub model: Model,
    pub d: usize,
    pub p: f64,
    pub samples: u64,
    pub seed: u64,
    pub entries: Vec<CltEntry>,
}

impl CltReport {
    pub fn entry(&self, n: u64, k: usize) -> Option<&CltEntry> {
        self.entries.iter().find(|e| e.n == n && e.k == k)
    }
}

/// For each side in `sides`, standardizes every `mu_k` with the exact mean
/// and variance and reports its shape statistics and distance to normal.
/// `params.spec.side()` is ignored; the dimension, model, `p` and seed are
/// reused for every side.
pub fn clt_diagnostics(
    params: &ModelParams,
    samples: u64,
    sides: &[u64],
) -> Result<CltReport, MonteCarloError> {
    if sides.len() < 2 {
        return Err(MonteCarloError::TooFewSides);
    }
    if samples < 2 {
        return Err(MonteCarloError::TooFewSamples(samples));
    }
    if params.p == 0.0 || params.p == 1.0 {
        return Err(MonteCarloError::DegenerateVariance(params.q()));
    }
    let d = params.spec.dim();
    let variable = model_variable(params.model);
    let p = exact_probability(params.p);
    let q = BigRational::one() - &p;
    let mut entries = Vec::new();
    for &n in sides {
        let spec = LatticeSpec::new(d, n)?;
        let run = ModelParams { spec, ..*params };
        let volumes = sample_volumes(&run, samples)?;
        let volume = BigRational::from_integer(BigInt::from(spec.top_count()));
        for k in 0..=d {
            let mu = eval_in_variable(&mean(params.model, d, k)?, variable, &p) * &volume;
            let var = eval_in_variable(&variance(params.model, d, k)?, variable, &p) * &volume;
            if !var.is_positive() || !variance_valid_for(params.model, n) {
                return Err(MonteCarloError::DegenerateVariance(params.q()));
            }
            let sigma = rational_to_f64(&var).sqrt();
            let mu = rational_to_f64(&mu);
            let standardized: Vec<f64> = volumes
                .iter()
                .map(|v| (v.get(k) as f64 - mu) / sigma)
                .collect();
            let mut sums = PowerSums::default();
            for v in &volumes {
                sums.push(v.get(k));
            }
            let (skewness, excess_kurtosis) = shape(&sums.central(samples).1);
            let bound = match params.model {
                Model::Voxel => Some(wasserstein_bound(d, k, &q, n, BoundMode::Exact)?),
                _ => None,
            };
            entries.push(CltEntry {
                n,
                k,
                skewness: skewness.unwrap_or(0.0),
                skewness_std_error: skewness_std_error(samples),
                excess_kurtosis: excess_kurtosis.unwrap_or(0.0),
                sup_distance: ecdf_sup_distance(&standardized),
                wasserstein_bound: bound,
            });
        }
    }
    Ok(CltReport {
        model: params.model,
        d,
        p: params.p,
        samples,
        seed: params.seed,
        entries,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PolynomialCheck {
    pub k: usize,
    pub kind: &'static str,
    pub matches: bool,
    /// `(degree, "num/den")` of `enumerated - expected`; empty on a match.
    pub difference: Vec<(u64, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExhaustiveReport {
    pub model: Model,
    pub d: usize,
    pub n: u64,
    pub variable: Variable,
    pub configurations: u64,
    pub checks: Vec<PolynomialCheck>,
}

impl ExhaustiveReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.matches)
    }
}

/// Builds the complex for configuration `mask` over the model's random sites.
fn configuration(model: Model, spec: LatticeSpec, mask: u64) -> Complex {
    let bit = |i: u64| mask >> i & 1 == 1;
    match model {
        Model::Voxel => Complex::Voxel(VoxelField::from_fn(spec, bit)),
        Model::Plaquette => Complex::Plaquette(VoxelField::from_fn(spec, bit)),
        Model::ClosedFaces => Complex::Cells(CellSet::from_fn(spec, bit).closure()),
        Model::IndependentFaces => Complex::Cells(CellSet::from_fn(spec, bit)),
    }
}

/// Selection probability of one site of each class, in the model's
/// variable. Independent-faces sites are classed by dimension.
fn class_probabilities(model: Model, d: usize) -> Vec<RationalPolynomial> {
    match model {
        Model::Voxel | Model::ClosedFaces => {
            vec![RationalPolynomial::from_int_terms(&[(0, 1), (1, -1)])]
        }
        Model::Plaquette => vec![RationalPolynomial::x()],
        Model::IndependentFaces => (0..=d)
            .map(|i| RationalPolynomial::monomial(i as u64, int(1)))
            .collect(),
    }
}

fn site_classes(model: Model, spec: LatticeSpec) -> Vec<usize> {
    match model {
        Model::IndependentFaces => (0..spec.total_cells())
            .map(|i| {
                spec.coords_of_index(i)
                    .iter()
                    .filter(|&&c| c & 1 == 1)
                    .count()
            })
            .collect(),
        Model::ClosedFaces => vec![0; spec.total_cells() as usize],
        Model::Voxel | Model::Plaquette => vec![0; spec.top_count() as usize],
    }
}

/// Enumerates every configuration of the model's random sites, weighting
/// each by its probability as an exact polynomial, and compares the
/// resulting `E mu_k` and `Var mu_k` with `n^d` times the closed forms.
/// Variances are compared only where the formula applies to side `n`.
pub fn exhaustive_verify(
    model: Model,
    d: usize,
    n: u64,
) -> Result<ExhaustiveReport, MonteCarloError> {
    let spec = LatticeSpec::new(d, n)?;
    let classes = site_classes(model, spec);
    let sites = classes.len() as u64;
    if sites > 63 || 1u64 << sites > EXHAUSTIVE_LIMIT {
        return Err(MonteCarloError::TooManyConfigurations {
            sites,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let configurations = 1u64 << sites;
    let class_count = classes.iter().max().map_or(0, |&c| c + 1);
    let mut class_sizes = vec![0u64; class_count];
    for &c in &classes {
        class_sizes[c] += 1;
    }

    // configurations with the same selected count per class share a weight
    type Group = (Vec<BigInt>, Vec<BigInt>);
    let groups: BTreeMap<Vec<u64>, Group> = (0..configurations)
        .into_par_iter()
        .map(|mask| {
            let mut key = vec![0u64; class_count];
            for (i, &c) in classes.iter().enumerate() {
                key[c] += mask >> i & 1;
            }
            measure(&configuration(model, spec, mask)).map(|v| (key, v))
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(BTreeMap::new(), |mut acc, (key, v)| {
            let entry = acc
                .entry(key)
                .or_insert_with(|| (vec![BigInt::zero(); d + 1], vec![BigInt::zero(); d + 1]));
            for k in 0..=d {
                let x = BigInt::from(v.get(k));
                entry.1[k] += &x * &x;
                entry.0[k] += x;
            }
            acc
        });

    let probs = class_probabilities(model, d);
    let one = RationalPolynomial::one();
    let mut first = vec![RationalPolynomial::zero(); d + 1];
    let mut second = vec![RationalPolynomial::zero(); d + 1];
    for (key, (s1, s2)) in &groups {
        let mut weight = RationalPolynomial::one();
        for (c, &selected) in key.iter().enumerate() {
            let absent = &one - &probs[c];
            weight = weight
                * probs[c].pow(selected as u32)
                * absent.pow((class_sizes[c] - selected) as u32);
        }
        for k in 0..=d {
            first[k] = &first[k] + &weight.scale(&BigRational::from_integer(s1[k].clone()));
            second[k] = &second[k] + &weight.scale(&BigRational::from_integer(s2[k].clone()));
        }
    }

    let volume = int(spec.top_count() as i64);
    let mut checks = Vec::new();
    for k in 0..=d {
        let mut record =
            |kind: &'static str, got: &RationalPolynomial, want: RationalPolynomial| {
                let diff = got - &want.scale(&volume);
                checks.push(PolynomialCheck {
                    k,
                    kind,
                    matches: diff.is_zero(),
                    difference: diff.coefficient_strings(),
                });
            };
        record("mean", &first[k], mean(model, d, k)?);
        if variance_valid_for(model, n) {
            let var = &second[k] - &(&first[k] * &first[k]);
            record("variance", &var, variance(model, d, k)?);
        }
    }
    Ok(ExhaustiveReport {
        model,
        d,
        n,
        variable: model_variable(model),
        configurations,
        checks,
    })
}

/// `|a| <= b` for an optional z-score.
pub fn within(z: Option<f64>, bound: f64) -> bool {
    z.is_some_and(|z| z.abs() <= bound)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(model: Model, d: usize, n: u64, p: f64, seed: u64) -> ModelParams {
        ModelParams::new(model, LatticeSpec::new(d, n).unwrap(), p, seed).unwrap()
    }

    #[test]
    fn power_sums_match_direct_moments() {
        let xs = [3i64, -1, 4, 1, -5, 9, 2, 6];
        let mut sums = PowerSums::default();
        for &x in &xs {
            sums.push(x);
        }
        let (m, central) = sums.central(xs.len() as u64);
        let mean = xs.iter().sum::<i64>() as f64 / 8.0;
        assert_eq!(rational_to_f64(&m), mean);
        for (a, c) in central.iter().enumerate() {
            let direct: f64 = xs
                .iter()
                .map(|&x| (x as f64 - mean).powi(a as i32 + 2))
                .sum::<f64>()
                / 8.0;
            assert!((rational_to_f64(c) - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_runs_are_exact() {
        let s = simulate(&params(Model::Voxel, 2, 8, 0.0, 5), 20).unwrap();
        for st in &s.stats {
            assert_eq!(st.variance, 0.0);
            assert_eq!(st.z_score, Some(0.0));
            assert_eq!(st.expected_variance, Some(0.0));
            assert_eq!(st.variance_ratio, None);
            assert_eq!(st.skewness, None);
        }
        let full = simulate(&params(Model::ClosedFaces, 2, 4, 1.0, 5), 5).unwrap();
        assert_eq!(full.stats[2].mean, 16.0);
        assert!(full.stats.iter().all(|st| st.z_score == Some(0.0)));
        assert!(matches!(
            simulate(&params(Model::Voxel, 2, 8, 0.5, 5), 1),
            Err(MonteCarloError::TooFewSamples(1))
        ));
    }

    #[test]
    fn small_lattices_have_no_variance_target() {
        let s = simulate(&params(Model::Voxel, 2, 2, 0.5, 1), 50).unwrap();
        assert!(s.stats.iter().all(|st| st.expected_variance.is_none()));
        let s = simulate(&params(Model::Plaquette, 2, 2, 0.5, 1), 50).unwrap();
        assert!(s.stats.iter().all(|st| st.expected_variance.is_some()));
    }

    #[test]
    fn summaries_are_reproducible_and_thread_independent() {
        let p = params(Model::Voxel, 2, 16, 0.3, 77);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| simulate(&p, 200).unwrap().canonical_json())
        };
        let a = run(1);
        assert_eq!(a, run(4));
        assert_eq!(a, run(1));
        assert!(!a.contains("wall_time"));
        assert_ne!(a, simulate(&p.with_seed(78), 200).unwrap().canonical_json());
    }

    #[test]
    fn top_volume_mean_matches_occupancy() {
        for model in [Model::Voxel, Model::Plaquette] {
            let s = simulate(&params(model, 2, 32, 0.3, 11), 2000).unwrap();
            let top = &s.stats[2];
            assert!((top.expected_mean - 0.3 * 1024.0).abs() < 1e-9);
            assert!(within(top.z_score, 4.0), "{top:?}");
        }
    }

    #[test]
    fn csv_dump_layout() {
        let (summary, volumes) =
            simulate_with_samples(&params(Model::Voxel, 2, 4, 0.5, 3), 3).unwrap();
        let mut out = Vec::new();
        write_samples_csv(&volumes, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "sample_index,mu_0,mu_1,mu_2");
        assert_eq!(lines.len(), 4);
        let last: Vec<i64> = lines[3].split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(last[0], 2);
        assert_eq!(&last[1..], volumes[2].values());
        assert_eq!(summary.samples, 3);
    }

    #[test]
    fn sup_distance() {
        assert!((ecdf_sup_distance(&[0.0]) - 0.5).abs() < 1e-12);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let n = 2000;
        let quantiles: Vec<f64> = (0..n)
            .map(|i| normal.inverse_cdf((i as f64 + 0.5) / n as f64))
            .collect();
        assert!(ecdf_sup_distance(&quantiles) <= 0.5 / n as f64 + 1e-9);
        // ties: all mass at one point
        assert!((ecdf_sup_distance(&[1.0; 10]) - normal.cdf(1.0)).abs() < 1e-12);
    }

    #[test]
    fn exhaustive_small_cases() {
        for (model, d, n, configs) in [
            (Model::Voxel, 1, 3, 8),
            (Model::ClosedFaces, 1, 3, 64),
            (Model::IndependentFaces, 1, 2, 16),
            (Model::Plaquette, 1, 3, 8),
        ] {
            let report = exhaustive_verify(model, d, n).unwrap();
            assert_eq!(report.configurations, configs);
            assert!(report.passed(), "{report:?}");
            assert_eq!(report.checks.len(), 2 * (d + 1));
        }
        let small = exhaustive_verify(Model::Voxel, 2, 2).unwrap();
        assert!(small.checks.iter().all(|c| c.kind == "mean"));
        assert!(small.passed());
        assert!(matches!(
            exhaustive_verify(Model::Voxel, 2, 5),
            Err(MonteCarloError::TooManyConfigurations { sites: 25, .. })
        ));
    }

    #[test]
    fn exhaustive_detects_wrong_formula() {
        // the voxel variance does not hold on n = 2
        let spec = LatticeSpec::new(1, 2).unwrap();
        let mut total = RationalPolynomial::zero();
        let mut sq = RationalPolynomial::zero();
        for mask in 0..4u64 {
            let v = measure(&configuration(Model::Voxel, spec, mask))
                .unwrap()
                .get(0);
            let on = mask.count_ones();
            let w = RationalPolynomial::from_int_terms(&[(0, 1), (1, -1)]).pow(on)
                * RationalPolynomial::x().pow(2 - on);
            total = &total + &w.scale(&int(v));
            sq = &sq + &w.scale(&int(v * v));
        }
        let var = &sq - &(&total * &total);
        assert_ne!(var, variance(Model::Voxel, 1, 0).unwrap().scale(&int(2)));
    }

    #[test]
    fn clt_rejects_degenerate_inputs() {
        let p = params(Model::Voxel, 2, 8, 1.0, 0);
        assert!(matches!(
            clt_diagnostics(&p, 10, &[4, 8]),
            Err(MonteCarloError::DegenerateVariance(_))
        ));
        let p = params(Model::Voxel, 2, 8, 0.4, 0);
        assert!(matches!(
            clt_diagnostics(&p, 10, &[8]),
            Err(MonteCarloError::TooFewSides)
        ));
        let report = clt_diagnostics(&p, 50, &[4, 8]).unwrap();
        assert_eq!(report.entries.len(), 6);
        assert!(report.entry(8, 0).unwrap().wasserstein_bound.is_some());
    }
}
