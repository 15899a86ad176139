//! Differential evolution over feedback policies.
//!
//! The search space is the torus [0, 2π)^dim. The variant is DE/rand/1/bin:
//! uniform initialization, mutant a + F(b - c) from three distinct members
//! other than the target, binomial crossover with one forced coordinate,
//! periodic wrap back onto the torus and greedy one-to-one selection.
//!
//! Each generation draws its random numbers from its own stream of the run
//! seed, so a run resumed from a [`Checkpoint`] continues bit-identically.
//! Objectives are evaluated in parallel and collected in member order; the
//! result does not depend on the number of worker threads.

use std::f64::consts::TAU;
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angle::wrap_two_pi;
use crate::error::{Error, Result};
use crate::inference::sharpness_and_holevo;
use crate::interferometer::ShotRunner;
use crate::policy::Policy;
use crate::rng::stream;
use crate::symstate::SymmetricState;

/// Objective value reported for an unsharp (S ≈ 0) or failed evaluation.
/// Larger than any attainable Holevo variance with S ≥ 1e-12.
pub const UNSHARP_OBJECTIVE: f64 = 1e24;

/// Differential-evolution hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeConfig {
    pub population: usize,
    /// Differential weight F.
    pub weight: f64,
    /// Crossover rate CR.
    pub crossover: f64,
    pub generations: usize,
    pub seed: u64,
    /// Simulated shots per training phase.
    #[serde(default = "default_shots")]
    pub shots_per_phi: usize,
}

fn default_shots() -> usize {
    1
}

impl DeConfig {
    /// population = max(40, 4N), F = 0.7, CR = 0.9, 100·N generations.
    pub fn for_photons(n: usize, seed: u64) -> Self {
        DeConfig {
            population: (4 * n).max(40),
            weight: 0.7,
            crossover: 0.9,
            generations: 100 * n.max(1),
            seed,
            shots_per_phi: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population < 4 {
            return Err(Error::domain(format!(
                "population {} < 4 (rand/1 mutation needs three partners)",
                self.population
            )));
        }
        if !(self.weight > 0.0 && self.weight <= 2.0) {
            return Err(Error::domain(format!(
                "weight F = {} outside (0, 2]",
                self.weight
            )));
        }
        if !(0.0..=1.0).contains(&self.crossover) {
            return Err(Error::domain(format!(
                "crossover CR = {} outside [0, 1]",
                self.crossover
            )));
        }
        if self.generations < 1 {
            return Err(Error::domain("generations must be >= 1"));
        }
        if self.shots_per_phi < 1 {
            return Err(Error::domain("shots_per_phi must be >= 1"));
        }
        Ok(())
    }
}

/// Result of a DE run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeOutcome {
    pub best: Vec<f64>,
    pub best_objective: f64,
    /// Best objective after each generation.
    pub trace: Vec<f64>,
    pub evaluations: usize,
}

impl DeOutcome {
    pub fn policy(&self) -> Result<Policy> {
        Policy::new(self.best.clone())
    }
}

/// Resumable optimizer state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config: DeConfig,
    pub dim: usize,
    /// Number of completed generations.
    pub generation: usize,
    pub population: Vec<Vec<f64>>,
    pub objectives: Vec<f64>,
    pub trace: Vec<f64>,
    pub evaluations: usize,
}

impl Checkpoint {
    pub fn read(path: &Path) -> Result<Self> {
        crate::io::read_json(path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        crate::io::write_json(path, self)
    }
}

/// A differential-evolution run in progress.
pub struct DifferentialEvolution<F> {
    config: DeConfig,
    dim: usize,
    objective: F,
    population: Vec<Vec<f64>>,
    objectives: Vec<f64>,
    generation: usize,
    trace: Vec<f64>,
    evaluations: usize,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

impl<F> DifferentialEvolution<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    /// Samples and evaluates the initial population.
    pub fn new(dim: usize, config: DeConfig, objective: F) -> Result<Self> {
        config.validate()?;
        if dim == 0 {
            return Err(Error::domain("search dimension must be >= 1"));
        }
        let mut rng = stream(config.seed, 0);
        let population: Vec<Vec<f64>> = (0..config.population)
            .map(|_| {
                (0..dim)
                    .map(|_| wrap_two_pi(rng.gen::<f64>() * TAU))
                    .collect()
            })
            .collect();
        let objectives = evaluate_all(&objective, &population);
        Ok(DifferentialEvolution {
            evaluations: population.len(),
            config,
            dim,
            objective,
            population,
            objectives,
            generation: 0,
            trace: Vec::new(),
        })
    }

    pub fn from_checkpoint(cp: Checkpoint, objective: F) -> Result<Self> {
        cp.config.validate()?;
        if cp.population.len() != cp.config.population
            || cp.objectives.len() != cp.population.len()
            || cp.population.iter().any(|m| m.len() != cp.dim)
        {
            return Err(Error::domain(
                "checkpoint population does not match its config",
            ));
        }
        Ok(DifferentialEvolution {
            config: cp.config,
            dim: cp.dim,
            objective,
            population: cp.population,
            objectives: cp.objectives,
            generation: cp.generation,
            trace: cp.trace,
            evaluations: cp.evaluations,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            config: self.config.clone(),
            dim: self.dim,
            generation: self.generation,
            population: self.population.clone(),
            objectives: self.objectives.clone(),
            trace: self.trace.clone(),
            evaluations: self.evaluations,
        }
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn population(&self) -> &[Vec<f64>] {
        &self.population
    }

    pub fn is_finished(&self) -> bool {
        self.generation >= self.config.generations
    }

    fn best_index(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.objectives.iter().enumerate() {
            if v < self.objectives[best] {
                best = i;
            }
        }
        best
    }

    /// Runs one generation: build all trials, evaluate them, then select.
    pub fn step(&mut self) {
        let np = self.config.population;
        let mut rng = stream(self.config.seed, self.generation as u64 + 1);
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                // three distinct partners, none equal to the target
                let picks = sample(&mut rng, np - 1, 3);
                let pick = |k: usize| {
                    let j = picks.index(k);
                    if j >= i {
                        j + 1
                    } else {
                        j
                    }
                };
                let (a, b, c) = (
                    &self.population[pick(0)],
                    &self.population[pick(1)],
                    &self.population[pick(2)],
                );
                let forced = rng.gen_range(0..self.dim);
                let target = &self.population[i];
                (0..self.dim)
                    .map(|d| {
                        if d == forced || rng.gen::<f64>() < self.config.crossover {
                            wrap_two_pi(a[d] + self.config.weight * (b[d] - c[d]))
                        } else {
                            target[d]
                        }
                    })
                    .collect()
            })
            .collect();
        let scores = evaluate_all(&self.objective, &trials);
        self.evaluations += trials.len();
        for (i, (trial, score)) in trials.into_iter().zip(scores).enumerate() {
            if score <= self.objectives[i] {
                self.population[i] = trial;
                self.objectives[i] = score;
            }
        }
        self.generation += 1;
        let best = self.objectives[self.best_index()];
        self.trace.push(best);
        log::trace!("generation {}: best {best:e}", self.generation);
    }

    /// Steps until the configured number of generations is reached.
    pub fn run(mut self) -> DeOutcome {
        while !self.is_finished() {
            self.step();
        }
        self.outcome()
    }

    pub fn outcome(&self) -> DeOutcome {
        let best = self.best_index();
        DeOutcome {
            best: self.population[best].clone(),
            best_objective: self.objectives[best],
            trace: self.trace.clone(),
            evaluations: self.evaluations,
        }
    }
}

fn evaluate_all<F>(objective: &F, members: &[Vec<f64>]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    members.par_iter().map(|m| sanitize(objective(m))).collect()
}

/// Minimizes `objective` over [0, 2π)^dim.
pub fn de_optimize<F>(dim: usize, config: &DeConfig, objective: F) -> Result<DeOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    Ok(DifferentialEvolution::new(dim, config.clone(), objective)?.run())
}

/// Phases used to score a policy: K = 10N² values uniform on [0, 2π).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub phis: Vec<f64>,
    pub seed: u64,
}

impl TrainingSet {
    pub fn size_for(n: usize) -> usize {
        10 * n * n
    }

    pub fn sample(n: usize, seed: u64) -> Self {
        Self::with_size(Self::size_for(n), seed)
    }

    pub fn with_size(k: usize, seed: u64) -> Self {
        let mut rng = stream(seed, 0);
        TrainingSet {
            phis: (0..k)
                .map(|_| wrap_two_pi(rng.gen::<f64>() * TAU))
                .collect(),
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.phis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phis.is_empty()
    }
}

/// Holevo-variance objective with frozen measurement noise.
///
/// The detector uniforms for every (phase, shot) are drawn once from
/// `noise_seed`, so the objective is a deterministic function of the policy.
/// Replicate `r` of phase `k` always uses the same uniforms, so raising
/// `shots_per_phi` only adds shots.
#[derive(Debug, Clone)]
pub struct HolevoObjective {
    state: SymmetricState,
    training: TrainingSet,
    shots_per_phi: usize,
    // uniforms[r][k * N + m]
    uniforms: Vec<Vec<f64>>,
}

impl HolevoObjective {
    pub fn new(
        state: SymmetricState,
        training: TrainingSet,
        shots_per_phi: usize,
        noise_seed: u64,
    ) -> Self {
        let n = state.photons();
        let k = training.len();
        let uniforms = (0..shots_per_phi.max(1))
            .map(|r| {
                let mut rng = stream(noise_seed, r as u64);
                (0..k * n).map(|_| rng.gen::<f64>()).collect()
            })
            .collect();
        HolevoObjective {
            state,
            training,
            shots_per_phi: shots_per_phi.max(1),
            uniforms,
        }
    }

    pub fn photons(&self) -> usize {
        self.state.photons()
    }

    pub fn training(&self) -> &TrainingSet {
        &self.training
    }

    /// (φ_k, estimate) for every training phase and shot.
    pub fn estimate_pairs(&self, deltas: &[f64]) -> Result<Vec<(f64, f64)>> {
        let n = self.photons();
        if deltas.len() != n {
            return Err(Error::domain(format!(
                "policy has {} steps, objective expects {n}",
                deltas.len()
            )));
        }
        let mut runner = ShotRunner::new();
        let mut pairs = Vec::with_capacity(self.training.len() * self.shots_per_phi);
        for block in &self.uniforms {
            for (k, &phi) in self.training.phis.iter().enumerate() {
                let us = block[k * n..(k + 1) * n].iter().copied();
                pairs.push((phi, runner.run(&self.state, deltas, phi, us)?));
            }
        }
        Ok(pairs)
    }

    /// V_H over the training pairs, or [`UNSHARP_OBJECTIVE`].
    pub fn evaluate(&self, deltas: &[f64]) -> f64 {
        self.estimate_pairs(deltas)
            .and_then(|pairs| sharpness_and_holevo(&pairs))
            .map(|r| r.holevo_variance)
            .unwrap_or(UNSHARP_OBJECTIVE)
    }
}

/// One-call form of [`HolevoObjective::evaluate`].
pub fn objective(
    policy: &Policy,
    state: &SymmetricState,
    training: &TrainingSet,
    shots_per_phi: usize,
    noise_seed: u64,
) -> Result<f64> {
    if policy.len() != state.photons() {
        return Err(Error::domain("policy length does not match the state"));
    }
    Ok(
        HolevoObjective::new(state.clone(), training.clone(), shots_per_phi, noise_seed)
            .evaluate(policy.deltas()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angle::wrap_pi;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn wrapped_quadratic(hidden: &[f64]) -> impl Fn(&[f64]) -> f64 + Sync + '_ {
        move |x: &[f64]| {
            x.iter()
                .zip(hidden)
                .map(|(a, b)| wrap_pi(a - b).powi(2))
                .sum()
        }
    }

    #[test]
    fn config_validation() {
        let mut c = DeConfig::for_photons(4, 1);
        assert_eq!(c.population, 40);
        assert_eq!(c.generations, 400);
        assert!(c.validate().is_ok());
        c.population = 3;
        assert!(c.validate().is_err());
        let mut c = DeConfig::for_photons(4, 1);
        c.weight = 0.0;
        assert!(c.validate().is_err());
        c.weight = 2.5;
        assert!(c.validate().is_err());
        let mut c = DeConfig::for_photons(4, 1);
        c.crossover = 1.5;
        assert!(c.validate().is_err());
        let mut c = DeConfig::for_photons(4, 1);
        c.generations = 0;
        assert!(c.validate().is_err());
        assert_eq!(DeConfig::for_photons(20, 0).population, 80);
    }

    #[test]
    fn converges_on_wrapped_quadratic() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let hidden: Vec<f64> = (0..10).map(|_| rng.gen::<f64>() * TAU).collect();
        let config = DeConfig {
            population: 40,
            weight: 0.5,
            crossover: 0.9,
            generations: 200,
            seed: 5,
            shots_per_phi: 1,
        };
        let out = de_optimize(10, &config, wrapped_quadratic(&hidden)).unwrap();
        assert!(out.best_objective < 1e-4, "best {}", out.best_objective);
        assert_eq!(out.trace.len(), 200);
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn degenerate_run() {
        let config = DeConfig {
            population: 4,
            weight: 0.5,
            crossover: 0.5,
            generations: 1,
            seed: 1,
            shots_per_phi: 1,
        };
        let out = de_optimize(3, &config, |x: &[f64]| x.iter().sum()).unwrap();
        assert_eq!(out.trace.len(), 1);
        assert_eq!(out.best.len(), 3);
        assert_eq!(out.evaluations, 8);
    }

    #[test]
    fn equal_seeds_identical_runs() {
        let hidden = vec![1.0, 2.0, 3.0, 4.0];
        let config = DeConfig::for_photons(4, 42);
        let config = DeConfig {
            generations: 30,
            ..config
        };
        let a = de_optimize(4, &config, wrapped_quadratic(&hidden)).unwrap();
        let b = de_optimize(4, &config, wrapped_quadratic(&hidden)).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.trace), bits(&b.trace));
        assert_eq!(bits(&a.best), bits(&b.best));
    }

    #[test]
    fn members_stay_on_torus() {
        let config = DeConfig {
            population: 12,
            weight: 1.9,
            crossover: 1.0,
            generations: 1,
            seed: 3,
            shots_per_phi: 1,
        };
        let mut de = DifferentialEvolution::new(6, config, |x: &[f64]| -x[0]).unwrap();
        for _ in 0..40 {
            de.step();
            assert!(de
                .population()
                .iter()
                .flatten()
                .all(|v| (0.0..TAU).contains(v)));
        }
    }

    #[test]
    fn resumes_bit_identically() {
        let hidden = vec![0.5; 5];
        let config = DeConfig {
            generations: 40,
            ..DeConfig::for_photons(5, 9)
        };
        let full = de_optimize(5, &config, wrapped_quadratic(&hidden)).unwrap();

        let mut de =
            DifferentialEvolution::new(5, config.clone(), wrapped_quadratic(&hidden)).unwrap();
        for _ in 0..17 {
            de.step();
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.json");
        de.checkpoint().write(&path).unwrap();
        let cp = Checkpoint::read(&path).unwrap();
        assert_eq!(cp.generation, 17);
        let resumed = DifferentialEvolution::from_checkpoint(cp, wrapped_quadratic(&hidden))
            .unwrap()
            .run();
        assert_eq!(resumed, full);
    }

    #[test]
    fn nan_objective_never_selected() {
        let config = DeConfig {
            population: 8,
            generations: 5,
            ..DeConfig::for_photons(2, 4)
        };
        let out = de_optimize(
            2,
            &config,
            |x: &[f64]| if x[0] < 3.0 { f64::NAN } else { x[0] },
        )
        .unwrap();
        assert!(out.best_objective.is_finite() || out.best_objective == f64::INFINITY);
    }

    #[test]
    fn training_set_shape() {
        let t = TrainingSet::sample(4, 11);
        assert_eq!(t.len(), 160);
        assert!(t.phis.iter().all(|p| (0.0..TAU).contains(p)));
        assert_eq!(t, TrainingSet::sample(4, 11));
        assert_ne!(t.phis, TrainingSet::sample(4, 12).phis);
    }

    #[test]
    fn zero_policy_objective_is_exact() {
        // All estimates are 0, so S = |mean e^{iφ_k}| directly.
        let n = 3;
        let training = TrainingSet::sample(n, 8);
        let state = SymmetricState::sine(n).unwrap();
        let got = objective(&Policy::zeros(n), &state, &training, 1, 99).unwrap();
        let s = training
            .phis
            .iter()
            .map(|&p| Complex64::from_polar(1.0, p))
            .sum::<Complex64>()
            .norm()
            / training.len() as f64;
        assert!((got - (s.powi(-2) - 1.0)).abs() < 1e-9 * got.max(1.0));
    }

    #[test]
    fn single_photon_perfect_objective() {
        let training = TrainingSet {
            phis: vec![0.0; 10],
            seed: 0,
        };
        let state = SymmetricState::product(1).unwrap();
        let got = objective(&Policy::zeros(1), &state, &training, 1, 3).unwrap();
        assert_eq!(got, 0.0);
    }

    #[test]
    fn unsharp_objective_returns_sentinel() {
        // φ = ±π/2 with estimates stuck at 0: errors cancel exactly.
        let training = TrainingSet {
            phis: vec![
                std::f64::consts::FRAC_PI_2,
                3.0 * std::f64::consts::FRAC_PI_2,
            ],
            seed: 0,
        };
        let state = SymmetricState::product(2).unwrap();
        let got = objective(&Policy::zeros(2), &state, &training, 1, 3).unwrap();
        assert_eq!(got, UNSHARP_OBJECTIVE);
    }

    #[test]
    fn objective_deterministic_and_length_checked() {
        let n = 5;
        let training = TrainingSet::sample(n, 1);
        let state = SymmetricState::sine(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = Policy::random(n, &mut rng);
        let a = objective(&p, &state, &training, 1, 7).unwrap();
        let b = objective(&p, &state, &training, 1, 7).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!(objective(&Policy::zeros(4), &state, &training, 1, 7).is_err());
    }

    #[test]
    fn doubling_shots_moves_objective_within_standard_error() {
        // Over repeated noise seeds, the mean |ΔS| between 1 and 2 shots per
        // phase stays below the standard error of S at one shot per phase.
        let n = 4;
        let state = SymmetricState::sine(n).unwrap();
        let training = TrainingSet::sample(n, 5);
        let policy = Policy::new(vec![1.6, 0.9, 0.5, 0.25]).unwrap();
        let runs = 20;
        let mut mean_abs_diff = 0.0;
        let mut mean_se = 0.0;
        for seed in 0..runs {
            let one = HolevoObjective::new(state.clone(), training.clone(), 1, seed);
            let two = HolevoObjective::new(state.clone(), training.clone(), 2, seed);
            let p1 = one.estimate_pairs(policy.deltas()).unwrap();
            let p2 = two.estimate_pairs(policy.deltas()).unwrap();
            let s1 = sharpness_and_holevo(&p1).unwrap().sharpness;
            let s2 = sharpness_and_holevo(&p2).unwrap().sharpness;
            // binomial-style standard error of a mean of cosines
            let cos: Vec<f64> = p1.iter().map(|(a, b)| (a - b).cos()).collect();
            let m = cos.iter().sum::<f64>() / cos.len() as f64;
            let var = cos.iter().map(|c| (c - m).powi(2)).sum::<f64>() / (cos.len() - 1) as f64;
            mean_se += (var / cos.len() as f64).sqrt() / runs as f64;
            mean_abs_diff += (s1 - s2).abs() / runs as f64;
        }
        assert!(mean_abs_diff < mean_se, "{mean_abs_diff} vs {mean_se}");
    }
}
