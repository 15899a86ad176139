//! Training runs, held-out evaluation and N-sweep scaling experiments.

use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::sharpness_and_holevo;
use crate::io::{write_atomic, write_json};
use crate::optimizer::{de_optimize, DeConfig, HolevoObjective, TrainingSet};
use crate::policy::{Policy, PolicyFile, PolicyMeta};
use crate::rng::{derive_seed, stream, tag};
use crate::symstate::StateKind;

pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Everything needed to reproduce one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub n: usize,
    pub state: StateKind,
    /// Master seed; training phases, noise and held-out set derive from it.
    pub seed: u64,
    pub de: DeConfig,
}

impl TrainConfig {
    /// Default optimizer settings with the DE seed derived from `seed`.
    pub fn new(n: usize, state: StateKind, seed: u64) -> Self {
        TrainConfig {
            n,
            state,
            seed,
            de: DeConfig::for_photons(n, derive_seed(seed, tag::OPTIMIZER)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::domain("N must be >= 1"));
        }
        self.de.validate()
    }
}

/// V_H on a phase set with its bootstrap standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoldOut {
    pub holevo_variance: f64,
    pub std_err: f64,
    pub samples: usize,
}

/// Summary written next to a trained policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: TrainConfig,
    pub train_holevo: f64,
    pub train_std_err: f64,
    pub test_holevo: f64,
    pub test_std_err: f64,
    pub evaluations: usize,
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRun {
    pub policy: Policy,
    pub report: TrainReport,
}

impl TrainingRun {
    pub fn policy_file(&self) -> PolicyFile {
        PolicyFile::new(
            &self.policy,
            PolicyMeta {
                seed: Some(self.report.config.seed),
                generations: Some(self.report.config.de.generations),
                objective: Some(self.report.train_holevo),
                state: Some(self.report.config.state),
            },
        )
    }

    /// Writes the policy to `path` and the report to `<path stem>.report.json`.
    pub fn write(&self, path: &Path) -> Result<PathBuf> {
        self.policy_file().write(path)?;
        let report_path = report_path_for(path);
        write_json(&report_path, &self.report)?;
        Ok(report_path)
    }
}

pub fn report_path_for(policy_path: &Path) -> PathBuf {
    let stem = policy_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "policy".into());
    policy_path.with_file_name(format!("{stem}.report.json"))
}

/// Trains a policy by DE on K = 10N² phases and scores it on a fresh
/// held-out set of the same size.
pub fn run_training(config: &TrainConfig) -> Result<TrainingRun> {
    config.validate()?;
    let state = config.state.prepare(config.n)?;
    let training = TrainingSet::sample(config.n, derive_seed(config.seed, tag::TRAINING_PHASES));
    let objective = HolevoObjective::new(
        state,
        training,
        config.de.shots_per_phi,
        derive_seed(config.seed, tag::TRAINING_NOISE),
    );
    log::info!(
        "training N={} state={} K={} pop={} gens={}",
        config.n,
        config.state,
        objective.training().len(),
        config.de.population,
        config.de.generations
    );
    let outcome = de_optimize(config.n, &config.de, |x: &[f64]| objective.evaluate(x))?;
    let policy = outcome.policy()?;
    let train_pairs = objective.estimate_pairs(policy.deltas())?;
    let train = bootstrap_holevo(
        &train_pairs,
        BOOTSTRAP_RESAMPLES,
        derive_seed(config.seed, tag::BOOTSTRAP),
    )?;
    let test = evaluate_held_out(&policy, config.state, config.seed)?;
    Ok(TrainingRun {
        policy,
        report: TrainReport {
            config: config.clone(),
            train_holevo: train.holevo_variance,
            train_std_err: train.std_err,
            test_holevo: test.holevo_variance,
            test_std_err: test.std_err,
            evaluations: outcome.evaluations,
            trace: outcome.trace,
        },
    })
}

/// Held-out V_H for the run with master seed `seed`: a phase set of size
/// 10N² and detector noise disjoint from the training streams.
pub fn evaluate_held_out(policy: &Policy, state: StateKind, seed: u64) -> Result<HoldOut> {
    let n = policy.len();
    evaluate_on_random_phases(
        policy,
        state,
        TrainingSet::size_for(n),
        derive_seed(seed, tag::TEST_PHASES),
        derive_seed(seed, tag::TEST_NOISE),
    )
}

/// V_H over `count` uniformly random phases, one shot each.
pub fn evaluate_on_random_phases(
    policy: &Policy,
    state: StateKind,
    count: usize,
    phase_seed: u64,
    noise_seed: u64,
) -> Result<HoldOut> {
    let prepared = state.prepare(policy.len())?;
    let phases = TrainingSet::with_size(count, phase_seed);
    let objective = HolevoObjective::new(prepared, phases, 1, noise_seed);
    let pairs = objective.estimate_pairs(policy.deltas())?;
    bootstrap_holevo(
        &pairs,
        BOOTSTRAP_RESAMPLES,
        derive_seed(noise_seed, tag::BOOTSTRAP),
    )
}

/// V_H of `pairs` and the standard deviation of V_H over `resamples`
/// bootstrap resamples. Unsharp resamples are skipped.
pub fn bootstrap_holevo(pairs: &[(f64, f64)], resamples: usize, seed: u64) -> Result<HoldOut> {
    let point = sharpness_and_holevo(pairs)?.holevo_variance;
    let mut rng = stream(seed, 0);
    let mut values = Vec::with_capacity(resamples);
    let mut buf = vec![(0.0, 0.0); pairs.len()];
    for _ in 0..resamples {
        for slot in buf.iter_mut() {
            *slot = pairs[rng.gen_range(0..pairs.len())];
        }
        if let Ok(r) = sharpness_and_holevo(&buf) {
            values.push(r.holevo_variance);
        }
    }
    let std_err = if values.len() > 1 {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(HoldOut {
        holevo_variance: point,
        std_err,
        samples: pairs.len(),
    })
}

/// Least-squares line through (log₁₀ N, log₁₀ V_H).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 3 {
        return Err(Error::domain(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(bad) = points
        .iter()
        .find(|(n, v)| n.is_nan() || *n <= 0.0 || v.is_nan() || *v <= 0.0)
    {
        return Err(Error::domain(format!(
            "non-positive point {bad:?} in power-law fit"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.log10()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.log10()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("all N values are equal"));
    }
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - exponent * x).powi(2))
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(PowerLawFit {
        exponent,
        intercept,
        r2,
    })
}

/// Optional overrides of the per-N optimizer defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DeOverrides {
    pub population: Option<usize>,
    pub weight: Option<f64>,
    pub crossover: Option<f64>,
    pub generations: Option<usize>,
    /// Generations as a multiple of N; ignored when `generations` is set.
    pub generations_per_photon: Option<usize>,
    pub shots_per_phi: Option<usize>,
}

impl DeOverrides {
    pub fn apply(&self, mut de: DeConfig, n: usize) -> DeConfig {
        if let Some(p) = self.population {
            de.population = p;
        }
        if let Some(w) = self.weight {
            de.weight = w;
        }
        if let Some(c) = self.crossover {
            de.crossover = c;
        }
        if let Some(g) = self.generations_per_photon {
            de.generations = g * n;
        }
        if let Some(g) = self.generations {
            de.generations = g;
        }
        if let Some(s) = self.shots_per_phi {
            de.shots_per_phi = s;
        }
        de
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub state: StateKind,
    pub seed: u64,
    #[serde(default)]
    pub de: DeOverrides,
}

impl ScalingConfig {
    /// Training config for one N; each N gets its own derived master seed.
    pub fn train_config(&self, n: usize) -> TrainConfig {
        let seed = derive_seed(self.seed, n as u64);
        let mut cfg = TrainConfig::new(n, self.state, seed);
        cfg.de = self.de.apply(cfg.de, n);
        cfg
    }
}

/// One CSV row: held-out V_H at N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub v_h: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub state: StateKind,
    pub rows: Vec<ScalingRow>,
    pub fit_exponent: f64,
    pub fit_intercept: f64,
    pub fit_r2: f64,
}

pub struct ScalingRun {
    pub result: ScalingResult,
    pub runs: Vec<TrainingRun>,
}

/// Trains at every N in `n_min..=n_max` and fits V_H ∝ N^γ to the held-out values.
pub fn run_scaling(config: &ScalingConfig) -> Result<ScalingRun> {
    if config.n_min < 1 || config.n_max < config.n_min {
        return Err(Error::domain(format!(
            "invalid N range {}..={}",
            config.n_min, config.n_max
        )));
    }
    if config.n_max - config.n_min + 1 < 3 {
        return Err(Error::domain(
            "need at least 3 values of N to fit a power law",
        ));
    }
    // Largest N first so the long jobs start early on the pool.
    let ns: Vec<usize> = (config.n_min..=config.n_max).rev().collect();
    let mut runs: Vec<TrainingRun> = ns
        .par_iter()
        .map(|&n| run_training(&config.train_config(n)))
        .collect::<Result<_>>()?;
    runs.sort_by_key(|r| r.report.config.n);
    let rows: Vec<ScalingRow> = runs
        .iter()
        .map(|r| ScalingRow {
            n: r.report.config.n,
            v_h: r.report.test_holevo,
            std_err: r.report.test_std_err,
        })
        .collect();
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.v_h)).collect();
    let fit = fit_power_law(&points)?;
    Ok(ScalingRun {
        result: ScalingResult {
            state: config.state,
            rows,
            fit_exponent: fit.exponent,
            fit_intercept: fit.intercept,
            fit_r2: fit.r2,
        },
        runs,
    })
}

impl ScalingResult {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).map_err(|source| Error::Csv {
                path: PathBuf::from("<memory>"),
                source,
            })?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::io("<memory>", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn read_csv(path: &Path) -> Result<Vec<ScalingRow>> {
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
        r.deserialize()
            .collect::<std::result::Result<Vec<ScalingRow>, _>>()
            .map_err(csv_err)
    }

    /// Writes `scaling_<state>.csv` and `scaling_<state>.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        let csv_path = dir.join(format!("scaling_{}.csv", self.state));
        let json_path = dir.join(format!("scaling_{}.json", self.state));
        write_atomic(&csv_path, self.to_csv()?.as_bytes())?;
        write_json(&json_path, self)?;
        Ok((csv_path, json_path))
    }
}

impl ScalingRun {
    /// Writes the CSV/JSON summary and every trained policy under `dir/policies/`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        for run in &self.runs {
            let path = dir.join("policies").join(format!(
                "{}_n{:03}.json",
                self.result.state, run.report.config.n
            ));
            run.write(&path)?;
        }
        self.result.write(dir)
    }
}
