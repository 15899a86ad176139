//! Exact and sampled distributions of outcomes and estimates, circular
//! imprecision statistics, Fisher information and the Cramér-Rao bound.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angle::{circular_distance, wrap_pi, wrap_two_pi};
use crate::error::{Error, Result};
use crate::interferometer::{
    branch_probabilities, kraus_apply, Outcome, PhasePair, PROBABILITY_FLOOR,
};
use crate::policy::{check_enumerable, feedback_update, Policy};
use crate::symstate::SymmetricState;

/// Estimates closer than this (mod 2π) are the same support point.
pub const ESTIMATE_TOLERANCE: f64 = 1e-12;
/// Sharpness below this is reported as [`Error::Unsharp`].
pub const SHARPNESS_FLOOR: f64 = 1e-12;
/// Outcome strings rarer than this are left out of the Fisher sum.
pub const FISHER_PROBABILITY_CUTOFF: f64 = 1e-12;
/// Excluded mass above this sets the Fisher warning flag.
pub const FISHER_EXCLUDED_MASS_WARNING: f64 = 1e-6;
pub const DEFAULT_FISHER_STEP: f64 = 1e-5;

/// P(x_N | φ, policy) for every outcome string, indexed by `Σ x_m 2^{m-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    true_phi: f64,
    probs: Vec<f64>,
    estimates: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn photons(&self) -> usize {
        self.probs.len().trailing_zeros() as usize
    }

    pub fn true_phi(&self) -> f64 {
        self.true_phi
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// Φ_N for each outcome string.
    pub fn estimates(&self) -> &[f64] {
        &self.estimates
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Sums probabilities over each preimage set of the estimator.
    pub fn estimate_distribution(&self) -> EstimateDistribution {
        EstimateDistribution::from_weighted(
            self.true_phi,
            self.estimates
                .iter()
                .copied()
                .zip(self.probs.iter().copied()),
        )
    }
}

/// Exact outcome distribution by depth-first traversal of the decision tree.
pub fn outcome_distribution(
    state: &SymmetricState,
    policy: &Policy,
    phi: f64,
) -> Result<OutcomeDistribution> {
    let n = state.photons();
    check_enumerable(n)?;
    if policy.len() != n {
        return Err(Error::domain(format!(
            "policy has {} steps but the state has {n} photons",
            policy.len()
        )));
    }
    let phi = wrap_two_pi(phi);
    let mut probs = vec![0.0; 1usize << n];
    let mut walk = TreeWalk {
        deltas: policy.deltas(),
        phi,
        probs: &mut probs,
    };
    walk.descend(state, 1.0, 0, 0.0, 0)?;
    Ok(OutcomeDistribution {
        true_phi: phi,
        probs,
        estimates: policy.terminal_phases()?,
    })
}

struct TreeWalk<'a> {
    deltas: &'a [f64],
    phi: f64,
    probs: &'a mut [f64],
}

impl TreeWalk<'_> {
    fn descend(
        &mut self,
        state: &SymmetricState,
        mass: f64,
        depth: usize,
        control: f64,
        index: usize,
    ) -> Result<()> {
        if depth == self.deltas.len() {
            self.probs[index] = mass;
            return Ok(());
        }
        let p = PhasePair::new(self.phi, control);
        for x in Outcome::BOTH {
            let child = kraus_apply(state, x, p)?;
            let branch = child.norm_sqr();
            if branch < PROBABILITY_FLOOR || mass * branch == 0.0 {
                continue;
            }
            let child = child.normalized()?;
            self.descend(
                &child,
                mass * branch,
                depth + 1,
                feedback_update(control, x, self.deltas[depth]),
                index | ((x as usize) << depth),
            )?;
        }
        Ok(())
    }
}

/// Distribution of the estimate for a fixed true phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateDistribution {
    pub true_phi: f64,
    /// (estimate, probability), sorted by estimate.
    pub support: Vec<(f64, f64)>,
}

impl EstimateDistribution {
    /// Groups `(estimate, weight)` pairs whose estimates agree mod 2π within
    /// [`ESTIMATE_TOLERANCE`]. Zero weights are kept so that the support
    /// reflects the estimator's range.
    pub fn from_weighted(true_phi: f64, items: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut items: Vec<(f64, f64)> = items
            .into_iter()
            .map(|(e, w)| (wrap_two_pi(e), w))
            .collect();
        items.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut support: Vec<(f64, f64)> = Vec::new();
        for (e, w) in items {
            match support.last_mut() {
                Some(last) if e - last.0 <= ESTIMATE_TOLERANCE => last.1 += w,
                _ => support.push((e, w)),
            }
        }
        if support.len() > 1 {
            let first = support[0].0;
            let last = support[support.len() - 1].0;
            if first + TAU - last <= ESTIMATE_TOLERANCE {
                let (_, w) = support.pop().expect("non-empty");
                support[0].1 += w;
            }
        }
        EstimateDistribution {
            true_phi: wrap_two_pi(true_phi),
            support,
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.support.iter().map(|s| s.1).sum()
    }

    /// Index of the support point matching `estimate`, if any.
    pub fn locate(&self, estimate: f64) -> Option<usize> {
        let e = wrap_two_pi(estimate);
        let i = self
            .support
            .partition_point(|s| s.0 < e - ESTIMATE_TOLERANCE);
        let near = |k: usize| circular_distance(self.support[k].0, e) <= ESTIMATE_TOLERANCE;
        if i < self.support.len() && near(i) {
            Some(i)
        } else if !self.support.is_empty() && near(0) {
            Some(0)
        } else if !self.support.is_empty() && near(self.support.len() - 1) {
            Some(self.support.len() - 1)
        } else {
            None
        }
    }

    /// Sharpness and Holevo variance of the exact distribution.
    pub fn imprecision(&self) -> Result<ImprecisionReport> {
        let weighted = self.support.iter().map(|&(e, p)| (p, self.true_phi - e));
        let mut report = circular_summary(weighted)?;
        report.bias = Some(report.circular_mean.abs());
        report.sample_count = self.support.len();
        Ok(report)
    }
}

/// Circular summary of estimation errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImprecisionReport {
    pub sharpness: f64,
    pub holevo_variance: f64,
    /// Argument of the mean error phasor, in (-π, π].
    pub circular_mean: f64,
    /// |φ - mean estimate| on the circle; only defined when every pair shares one φ.
    pub bias: Option<f64>,
    pub sample_count: usize,
}

fn circular_summary(
    weighted_errors: impl Iterator<Item = (f64, f64)>,
) -> Result<ImprecisionReport> {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut total = 0.0;
    let mut count = 0usize;
    for (w, err) in weighted_errors {
        sum += Complex64::from_polar(w, err);
        total += w;
        count += 1;
    }
    if count == 0 || total.is_nan() || total <= 0.0 {
        return Err(Error::domain("no samples"));
    }
    let mean = sum / total;
    let sharpness = mean.norm().min(1.0);
    if sharpness < SHARPNESS_FLOOR {
        return Err(Error::Unsharp(sharpness));
    }
    Ok(ImprecisionReport {
        sharpness,
        holevo_variance: sharpness.powi(-2) - 1.0,
        circular_mean: wrap_pi(mean.arg()),
        bias: None,
        sample_count: count,
    })
}

/// S = |Σ_k e^{i(φ_k - Φ_k)} / K| and V_H = S^{-2} - 1 over `(φ_k, estimate_k)` pairs.
pub fn sharpness_and_holevo(pairs: &[(f64, f64)]) -> Result<ImprecisionReport> {
    let mut report = circular_summary(pairs.iter().map(|&(phi, est)| (1.0, phi - est)))?;
    let first = pairs[0].0;
    if pairs.iter().all(|p| p.0 == first) {
        report.bias = Some(report.circular_mean.abs());
    }
    Ok(report)
}

/// Σ P(φ̃) (φ - φ̃)² with the difference wrapped to (-π, π].
pub fn plain_variance(dist: &EstimateDistribution) -> f64 {
    dist.support
        .iter()
        .map(|&(e, p)| p * wrap_pi(e - dist.true_phi).powi(2))
        .sum()
}

/// Classical Fisher information of the outcome distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherReport {
    pub n: usize,
    pub phi: f64,
    pub fisher: f64,
    /// 1/√F, absent when F = 0.
    pub crlb: Option<f64>,
    /// Probability mass of outcome strings left out of the sum.
    pub excluded_mass: f64,
    pub h: f64,
    /// Set when the excluded mass exceeds [`FISHER_EXCLUDED_MASS_WARNING`].
    pub warning: bool,
}

/// F(φ) = Σ P (∂ log P/∂φ)² with ∂P/∂φ from central differences of step `h`.
pub fn fisher_information(
    state: &SymmetricState,
    policy: &Policy,
    phi: f64,
    h: f64,
) -> Result<FisherReport> {
    if !(1e-6..=1e-3).contains(&h) {
        return Err(Error::domain(format!(
            "finite-difference step {h} outside [1e-6, 1e-3]"
        )));
    }
    let center = outcome_distribution(state, policy, phi)?;
    let plus = outcome_distribution(state, policy, phi + h)?;
    let minus = outcome_distribution(state, policy, phi - h)?;
    let mut fisher = 0.0;
    let mut excluded = 0.0;
    for ((&p, &pp), &pm) in center
        .probabilities()
        .iter()
        .zip(plus.probabilities())
        .zip(minus.probabilities())
    {
        if p < FISHER_PROBABILITY_CUTOFF {
            excluded += p;
            continue;
        }
        let dp = (pp - pm) / (2.0 * h);
        fisher += dp * dp / p;
    }
    Ok(FisherReport {
        n: state.photons(),
        phi: wrap_two_pi(phi),
        fisher,
        crlb: crlb(fisher).ok(),
        excluded_mass: excluded,
        h,
        warning: excluded > FISHER_EXCLUDED_MASS_WARNING,
    })
}

/// Cramér-Rao bound 1/√F on the standard deviation.
pub fn crlb(fisher: f64) -> Result<f64> {
    if fisher.is_nan() || fisher <= 0.0 {
        return Err(Error::domain(format!(
            "Fisher information {fisher} is not positive"
        )));
    }
    Ok(fisher.sqrt().recip())
}

/// Convenience wrapper: exact distribution of the estimate.
pub fn estimate_distribution(
    state: &SymmetricState,
    policy: &Policy,
    phi: f64,
) -> Result<EstimateDistribution> {
    Ok(outcome_distribution(state, policy, phi)?.estimate_distribution())
}

/// Total-variation distance ½ Σ |p - q| between two aligned probability vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions must be aligned");
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Branch probabilities along one recorded history, useful when checking
/// product-state independence.
pub fn conditional_probabilities(
    state: &SymmetricState,
    outcomes: &[Outcome],
    controls: &[f64],
    phi: f64,
) -> Result<Vec<[f64; 2]>> {
    let mut current = state.clone();
    let mut out = Vec::with_capacity(outcomes.len());
    for (&x, &c) in outcomes.iter().zip(controls) {
        let p = PhasePair::new(phi, c);
        out.push(branch_probabilities(&current, p)?);
        current = kraus_apply(&current, x, p)?.normalized()?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interferometer::simulate_single_shot;
    use crate::symstate::StateKind;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn single_photon_deterministic_distribution() {
        let s = SymmetricState::product(1).unwrap();
        let d = outcome_distribution(&s, &Policy::new(vec![0.5]).unwrap(), 0.0).unwrap();
        assert!(d.probabilities()[0].abs() < 1e-15);
        assert!((d.probabilities()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mass_is_conserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for kind in [StateKind::Sine, StateKind::Product] {
            for n in 1..=10 {
                let s = kind.prepare(n).unwrap();
                let p = Policy::random(n, &mut rng);
                let d = outcome_distribution(&s, &p, rng.gen::<f64>() * TAU).unwrap();
                assert!((d.total_mass() - 1.0).abs() < 1e-9);
                assert_eq!(d.probabilities().len(), 1 << n);
            }
        }
    }

    #[test]
    fn product_distribution_is_a_product_of_single_photon_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 7;
        let s = SymmetricState::product(n).unwrap();
        let policy = Policy::random(n, &mut rng);
        let phi = 2.1;
        let d = outcome_distribution(&s, &policy, phi).unwrap();
        for h in crate::policy::enumerate_histories(&policy).unwrap() {
            let mut want = 1.0;
            for (x, control) in h.outcomes().iter().zip(h.phases()) {
                let p1 = ((phi - control) / 2.0).cos().powi(2);
                want *= if *x == Outcome::One { p1 } else { 1.0 - p1 };
            }
            assert!((d.probabilities()[h.index()] - want).abs() < 1e-13);
        }
    }

    #[test]
    fn product_conditionals_ignore_earlier_outcomes() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 6;
        let s = SymmetricState::product(n).unwrap();
        let phi = 0.9;
        for _ in 0..30 {
            let outcomes: Vec<Outcome> = (0..n).map(|_| Outcome::from_bit(rng.gen())).collect();
            let controls: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * TAU).collect();
            let cond = conditional_probabilities(&s, &outcomes, &controls, phi).unwrap();
            for (c, &ctrl) in cond.iter().zip(&controls) {
                let fresh = branch_probabilities(
                    &SymmetricState::product(1).unwrap(),
                    PhasePair::new(phi, ctrl),
                )
                .unwrap();
                assert!((c[1] - fresh[1]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn rejects_oversized_trees() {
        let s = SymmetricState::product(27).unwrap();
        assert!(matches!(
            outcome_distribution(&s, &Policy::zeros(27), 0.1),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn zero_policy_single_support_point() {
        let s = SymmetricState::sine(5).unwrap();
        let d = estimate_distribution(&s, &Policy::zeros(5), 1.0).unwrap();
        assert_eq!(d.support.len(), 1);
        assert_eq!(d.support[0].0, 0.0);
        assert!((d.support[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grouping_matches_brute_force_regroup() {
        // Δ = (a, a, 2a) collides several strings onto the same estimate.
        let a = 0.7;
        let policy = Policy::new(vec![a, a, 2.0 * a]).unwrap();
        let s = SymmetricState::sine(3).unwrap();
        let out = outcome_distribution(&s, &policy, 0.4).unwrap();
        let grouped = out.estimate_distribution();
        assert!(grouped.support.len() <= 8);
        assert!(grouped.support.len() < 8);

        // Brute force: compare every pair of strings directly.
        let est = out.estimates();
        let probs = out.probabilities();
        let mut used = [false; 8];
        let mut brute: Vec<(f64, f64)> = Vec::new();
        for i in 0..8 {
            if used[i] {
                continue;
            }
            let mut mass = 0.0;
            for j in i..8 {
                if circular_distance(est[i], est[j]) < 1e-9 {
                    used[j] = true;
                    mass += probs[j];
                }
            }
            brute.push((est[i], mass));
        }
        assert_eq!(brute.len(), grouped.support.len());
        for (e, m) in brute {
            let k = grouped.locate(e).expect("estimate present");
            assert!((grouped.support[k].1 - m).abs() < 1e-14);
        }
    }

    #[test]
    fn grouping_merges_across_zero() {
        let d = EstimateDistribution::from_weighted(
            0.0,
            [(1e-14, 0.25), (TAU - 1e-14, 0.25), (1.0, 0.5)],
        );
        assert_eq!(d.support.len(), 2);
        assert!((d.support[0].1 - 0.5).abs() < 1e-15);
        assert_eq!(d.locate(TAU - 1e-13), Some(0));
        assert_eq!(d.locate(2.0), None);
    }

    #[test]
    fn holevo_perfect_estimates() {
        let pairs: Vec<(f64, f64)> = (0..10).map(|k| (k as f64 * 0.3, k as f64 * 0.3)).collect();
        let r = sharpness_and_holevo(&pairs).unwrap();
        assert!((r.sharpness - 1.0).abs() < 1e-15);
        assert!(r.holevo_variance.abs() < 1e-14);
        assert_eq!(r.bias, None);
    }

    #[test]
    fn holevo_antipodal_errors_are_unsharp() {
        let pairs = [(0.0, FRAC_PI_2), (0.0, -FRAC_PI_2)];
        assert!(matches!(
            sharpness_and_holevo(&pairs),
            Err(Error::Unsharp(_))
        ));
        assert!(sharpness_and_holevo(&[]).is_err());
    }

    #[test]
    fn holevo_bias_for_repeated_phase() {
        let pairs = [(1.0, 1.2), (1.0, 1.2)];
        let r = sharpness_and_holevo(&pairs).unwrap();
        assert!((r.bias.unwrap() - 0.2).abs() < 1e-12);
        assert!((r.circular_mean + 0.2).abs() < 1e-12);
    }

    #[test]
    fn holevo_wrapped_normal_oracle() {
        // A wrapped normal with σ has mean resultant length e^{-σ²/2},
        // so V_H = e^{σ²} - 1.
        let sigma = 0.1;
        let normal = Normal::new(0.0, sigma).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let pairs: Vec<(f64, f64)> = (0..1_000_000)
            .map(|_| {
                let phi = rng.gen::<f64>() * TAU;
                (phi, wrap_two_pi(phi - normal.sample(&mut rng)))
            })
            .collect();
        let r = sharpness_and_holevo(&pairs).unwrap();
        let want = (sigma * sigma).exp() - 1.0;
        assert!(
            (r.holevo_variance / want - 1.0).abs() < 0.02,
            "{} vs {want}",
            r.holevo_variance
        );
        assert!((r.holevo_variance - (r.sharpness.powi(-2) - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn plain_variance_examples() {
        let point = EstimateDistribution::from_weighted(1.0, [(1.0, 1.0)]);
        assert_eq!(plain_variance(&point), 0.0);
        let a = 0.3;
        let two = EstimateDistribution::from_weighted(1.0, [(1.0 + a, 0.5), (1.0 - a, 0.5)]);
        assert!((plain_variance(&two) - a * a).abs() < 1e-14);
        // wrapped across zero
        let wrapped = EstimateDistribution::from_weighted(0.1, [(TAU - 0.1, 1.0)]);
        assert!((plain_variance(&wrapped) - 0.04).abs() < 1e-12);
    }

    #[test]
    fn plain_variance_random_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let phi = 2.0;
        let raw: Vec<(f64, f64)> = (0..20)
            .map(|_| (rng.gen::<f64>() * TAU, rng.gen::<f64>()))
            .collect();
        let total: f64 = raw.iter().map(|r| r.1).sum();
        let items: Vec<(f64, f64)> = raw.iter().map(|&(e, w)| (e, w / total)).collect();
        let d = EstimateDistribution::from_weighted(phi, items.clone());
        let mut direct = 0.0;
        for (e, w) in items {
            let mut diff = e - phi;
            while diff > PI {
                diff -= TAU;
            }
            while diff <= -PI {
                diff += TAU;
            }
            direct += w * diff * diff;
        }
        assert!((plain_variance(&d) - direct).abs() < 1e-12);
    }

    #[test]
    fn crlb_values() {
        assert_eq!(crlb(1.0).unwrap(), 1.0);
        assert_eq!(crlb(4.0).unwrap(), 0.5);
        assert!((crlb(9.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(crlb(0.0).is_err());
        assert!(crlb(-1.0).is_err());
    }

    #[test]
    fn fisher_single_photon_is_one() {
        let s = SymmetricState::product(1).unwrap();
        // Φ_0 = 0 for the only photon, so φ alone sets the operating point.
        for phi in [0.3, 2.0, 4.0] {
            let r = fisher_information(
                &s,
                &Policy::new(vec![0.7]).unwrap(),
                phi,
                DEFAULT_FISHER_STEP,
            )
            .unwrap();
            assert!((r.fisher - 1.0).abs() < 1e-6, "phi {phi}: {}", r.fisher);
            assert!(!r.warning);
        }
    }

    #[test]
    fn fisher_rejects_bad_step() {
        let s = SymmetricState::product(1).unwrap();
        let p = Policy::zeros(1);
        assert!(fisher_information(&s, &p, 0.3, 1e-2).is_err());
        assert!(fisher_information(&s, &p, 0.3, 1e-8).is_err());
    }

    #[test]
    fn fisher_excluded_mass_flagged() {
        // φ = Φ: outcome 0 is impossible at every step.
        let s = SymmetricState::product(2).unwrap();
        let r = fisher_information(&s, &Policy::zeros(2), 0.0, 1e-5).unwrap();
        assert!(r.excluded_mass < 1e-9);
        assert!(r.fisher >= 0.0);
    }

    #[test]
    fn sampled_histogram_matches_exact_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 4;
        let s = SymmetricState::sine(n).unwrap();
        let policy = Policy::random(n, &mut rng);
        let phi = 1.1;
        let exact = outcome_distribution(&s, &policy, phi).unwrap();
        let shots = 100_000;
        let mut counts = vec![0.0; 1 << n];
        for _ in 0..shots {
            let (_, h) = simulate_single_shot(&s, &policy, phi, &mut rng).unwrap();
            counts[h.index()] += 1.0 / shots as f64;
        }
        assert!(total_variation(&counts, exact.probabilities()) < 0.02);
    }

    proptest! {
        #[test]
        fn holevo_rotation_invariant(errs in proptest::collection::vec(-0.8f64..0.8, 2..50), shift in 0.0f64..TAU) {
            let pairs: Vec<(f64, f64)> = errs.iter().enumerate().map(|(k, e)| (k as f64, k as f64 - e)).collect();
            let rotated: Vec<(f64, f64)> = pairs.iter().map(|&(p, e)| (wrap_two_pi(p + shift), wrap_two_pi(e + shift))).collect();
            let a = sharpness_and_holevo(&pairs).unwrap();
            let b = sharpness_and_holevo(&rotated).unwrap();
            prop_assert!((a.sharpness - b.sharpness).abs() < 1e-12);
            prop_assert!((a.holevo_variance - b.holevo_variance).abs() < 1e-9);
        }
    }
}
