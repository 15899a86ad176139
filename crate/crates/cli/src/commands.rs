use std::path::{Path, PathBuf};

use aqem_core::experiment::{
    evaluate_on_random_phases, run_scaling, run_training, HoldOut, ScalingConfig, TrainConfig,
};
use aqem_core::inference::DEFAULT_FISHER_STEP;
use aqem_core::optimizer::{HolevoObjective, TrainingSet};
use aqem_core::policy::MAX_ENUMERABLE_PHOTONS;
use aqem_core::rng::{derive_seed, tag};
use aqem_core::{
    estimate_distribution, fisher_information, plain_variance, sharpness_and_holevo, FisherReport,
    PolicyFile, StateKind,
};
use serde::Serialize;

use crate::args::{EvaluateArgs, FisherArgs, ScalingArgs, TrainArgs};
use crate::config::FileConfig;
use crate::failure::Failure;

const DEFAULT_SEED: u64 = 1;
const DEFAULT_N_MIN: usize = 4;
const DEFAULT_N_MAX: usize = 16;
const DEFAULT_SHOTS: usize = 100_000;

fn required<T>(value: Option<T>, name: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::usage(format!("--{name} is required (flag or config file)")))
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => aqem_core::io::write_json(path, value)?,
        None => println!(
            "{}",
            serde_json::to_string_pretty(value).expect("output serializes")
        ),
    }
    Ok(())
}

#[derive(Serialize)]
struct TrainSummary {
    policy: PathBuf,
    report: PathBuf,
    n: usize,
    state: StateKind,
    train_holevo: f64,
    test_holevo: f64,
    test_std_err: f64,
}

pub fn train(args: TrainArgs, file: &FileConfig) -> Result<(), Failure> {
    let n = required(args.n.or(file.n), "n")?;
    if n == 0 {
        return Err(Failure::usage("--n must be at least 1"));
    }
    let state = required(args.state.or(file.state), "state")?;
    let seed = args.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let out = required(args.out.or_else(|| file.out.clone()), "out")?;

    let mut config = TrainConfig::new(n, state, seed);
    config.de = file.de_overrides(&args.de).apply(config.de, n);
    config
        .de
        .validate()
        .map_err(|e| Failure::usage(e.to_string()))?;

    let run = run_training(&config)?;
    let report = run.write(&out)?;
    emit(
        &TrainSummary {
            policy: out,
            report,
            n,
            state,
            train_holevo: run.report.train_holevo,
            test_holevo: run.report.test_holevo,
            test_std_err: run.report.test_std_err,
        },
        None,
    )
}

fn load_policy(path: &Path, state: Option<StateKind>) -> Result<(PolicyFile, StateKind), Failure> {
    let file = PolicyFile::read(path).map_err(|e| Failure::usage(e.to_string()))?;
    let state = state
        .or(file.meta.state)
        .ok_or_else(|| Failure::usage("the policy file does not record its state; pass --state"))?;
    Ok((file, state))
}

#[derive(Serialize)]
struct PointEvaluation {
    n: usize,
    state: StateKind,
    phi: f64,
    /// "exact" (full decision-tree enumeration) or "sampled".
    method: &'static str,
    samples: Option<usize>,
    sharpness: f64,
    holevo_variance: f64,
    bias: Option<f64>,
    /// Only available for exact evaluation.
    plain_variance: Option<f64>,
}

#[derive(Serialize)]
struct RandomEvaluation {
    n: usize,
    state: StateKind,
    phases: usize,
    #[serde(flatten)]
    result: HoldOut,
}

pub fn evaluate(args: EvaluateArgs) -> Result<(), Failure> {
    let (file, state) = load_policy(&args.policy, args.state)?;
    let policy = file.policy()?;
    let n = policy.len();
    let seed = args.seed.unwrap_or(DEFAULT_SEED);

    if let Some(count) = args.random {
        if count < 2 {
            return Err(Failure::usage("--random needs at least 2 phases"));
        }
        let result = evaluate_on_random_phases(
            &policy,
            state,
            count,
            derive_seed(seed, tag::TEST_PHASES),
            derive_seed(seed, tag::TEST_NOISE),
        )?;
        return emit(
            &RandomEvaluation {
                n,
                state,
                phases: count,
                result,
            },
            args.out.as_deref(),
        );
    }

    let phi = args.phi.expect("clap enforces --phi or --random");
    if !phi.is_finite() {
        return Err(Failure::usage("--phi must be finite"));
    }
    let prepared = state.prepare(n)?;
    let result = if n <= MAX_ENUMERABLE_PHOTONS && args.shots.is_none() {
        let dist = estimate_distribution(&prepared, &policy, phi)?;
        let report = dist.imprecision()?;
        PointEvaluation {
            n,
            state,
            phi,
            method: "exact",
            samples: None,
            sharpness: report.sharpness,
            holevo_variance: report.holevo_variance,
            bias: report.bias,
            plain_variance: Some(plain_variance(&dist)),
        }
    } else {
        let shots = args.shots.unwrap_or(DEFAULT_SHOTS);
        if shots == 0 {
            return Err(Failure::usage("--shots must be positive"));
        }
        let phases = TrainingSet {
            phis: vec![phi; shots],
            seed,
        };
        let objective =
            HolevoObjective::new(prepared, phases, 1, derive_seed(seed, tag::TEST_NOISE));
        let report = sharpness_and_holevo(&objective.estimate_pairs(policy.deltas())?)?;
        PointEvaluation {
            n,
            state,
            phi,
            method: "sampled",
            samples: Some(shots),
            sharpness: report.sharpness,
            holevo_variance: report.holevo_variance,
            bias: report.bias,
            plain_variance: None,
        }
    };
    emit(&result, args.out.as_deref())
}

#[derive(Serialize)]
struct FisherOutput {
    state: StateKind,
    #[serde(flatten)]
    report: FisherReport,
}

pub fn fisher(args: FisherArgs) -> Result<(), Failure> {
    let (file, state) = load_policy(&args.policy, args.state)?;
    let policy = file.policy()?;
    let h = args.step.unwrap_or(DEFAULT_FISHER_STEP);
    if !(1e-6..=1e-3).contains(&h) {
        return Err(Failure::usage(format!(
            "--step {h} is outside [1e-6, 1e-3]"
        )));
    }
    if !args.phi.is_finite() {
        return Err(Failure::usage("--phi must be finite"));
    }
    if policy.len() > MAX_ENUMERABLE_PHOTONS {
        return Err(Failure::usage(format!(
            "exact Fisher information is limited to N <= {MAX_ENUMERABLE_PHOTONS}"
        )));
    }
    let prepared = state.prepare(policy.len())?;
    let report = fisher_information(&prepared, &policy, args.phi, h)?;
    if report.warning {
        log::warn!("excluded probability mass {:e}", report.excluded_mass);
    }
    emit(&FisherOutput { state, report }, args.out.as_deref())
}

#[derive(Serialize)]
struct ScalingSummary {
    csv: PathBuf,
    json: PathBuf,
    state: StateKind,
    fit_exponent: f64,
    fit_r2: f64,
}

pub fn scaling(args: ScalingArgs, file: &FileConfig) -> Result<(), Failure> {
    let config = ScalingConfig {
        n_min: args.n_min.or(file.n_min).unwrap_or(DEFAULT_N_MIN),
        n_max: args.n_max.or(file.n_max).unwrap_or(DEFAULT_N_MAX),
        state: required(args.state.or(file.state), "state")?,
        seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        de: file.de_overrides(&args.de),
    };
    let out = required(args.out.or_else(|| file.out.clone()), "out")?;
    if config.n_min == 0 || config.n_max < config.n_min + 2 {
        return Err(Failure::usage("need 1 <= n-min and at least 3 values of N"));
    }
    for n in [config.n_min, config.n_max] {
        config
            .train_config(n)
            .validate()
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    let run = run_scaling(&config)?;
    let (csv, json) = run.write(&out)?;
    emit(
        &ScalingSummary {
            csv,
            json,
            state: config.state,
            fit_exponent: run.result.fit_exponent,
            fit_r2: run.result.fit_r2,
        },
        None,
    )
}
