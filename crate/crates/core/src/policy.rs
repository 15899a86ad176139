//! Feedback policies, the Markovian update rule and decision-tree bookkeeping.

use std::f64::consts::TAU;
use std::path::Path;

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::angle::wrap_two_pi;
use crate::error::{Error, Result};
use crate::interferometer::Outcome;
use crate::symstate::StateKind;

/// Largest photon count whose decision tree we are willing to materialize.
pub const MAX_ENUMERABLE_PHOTONS: usize = 26;

/// Φ_m = Φ_{m-1} - (-1)^{x_m} Δ_m, reduced to `[0, 2π)`.
#[inline]
pub fn feedback_update(prev: f64, x: Outcome, delta: f64) -> f64 {
    match x {
        Outcome::Zero => wrap_two_pi(prev - delta),
        Outcome::One => wrap_two_pi(prev + delta),
    }
}

/// Feedback increments (Δ_1, …, Δ_N), each in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    deltas: Vec<f64>,
}

impl Policy {
    pub fn new(deltas: Vec<f64>) -> Result<Self> {
        if let Some(bad) = deltas.iter().find(|d| !(0.0..TAU).contains(*d)) {
            return Err(Error::domain(format!(
                "policy increment {bad} outside [0, 2π)"
            )));
        }
        Ok(Policy { deltas })
    }

    /// Reduces every increment into `[0, 2π)` first.
    pub fn wrapped(deltas: impl IntoIterator<Item = f64>) -> Result<Self> {
        let deltas: Vec<f64> = deltas.into_iter().collect();
        if deltas.iter().any(|d| !d.is_finite()) {
            return Err(Error::domain("non-finite policy increment"));
        }
        Ok(Policy {
            deltas: deltas.into_iter().map(wrap_two_pi).collect(),
        })
    }

    pub fn zeros(n: usize) -> Self {
        Policy {
            deltas: vec![0.0; n],
        }
    }

    /// Increments drawn uniformly from `[0, 2π)`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Policy {
            deltas: (0..n)
                .map(|_| wrap_two_pi(rng.gen::<f64>() * TAU))
                .collect(),
        }
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    /// Control phase after applying the policy to `outcomes` from Φ_0 = 0.
    pub fn final_phase(&self, outcomes: impl IntoIterator<Item = Outcome>) -> f64 {
        outcomes
            .into_iter()
            .zip(&self.deltas)
            .fold(0.0, |phase, (x, &d)| feedback_update(phase, x, d))
    }

    /// Final phase Φ_N for every outcome string, indexed by `Σ x_m 2^{m-1}`.
    pub fn terminal_phases(&self) -> Result<Vec<f64>> {
        check_enumerable(self.len())?;
        let mut phases = vec![0.0f64];
        for (m, &delta) in self.deltas.iter().enumerate() {
            let width = 1usize << m;
            phases.resize(2 * width, 0.0);
            for prefix in 0..width {
                let prev = phases[prefix];
                phases[prefix | width] = feedback_update(prev, Outcome::One, delta);
                phases[prefix] = feedback_update(prev, Outcome::Zero, delta);
            }
        }
        Ok(phases)
    }
}

pub(crate) fn check_enumerable(n: usize) -> Result<()> {
    if n > MAX_ENUMERABLE_PHOTONS {
        return Err(Error::Resource(format!(
            "decision tree with N = {n} exceeds the enumeration limit N <= {MAX_ENUMERABLE_PHOTONS}"
        )));
    }
    Ok(())
}

/// Outcomes x_1..x_M and the control phases Φ_0..Φ_M they produced.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeHistory {
    outcomes: Vec<Outcome>,
    phases: Vec<f64>,
}

impl Default for OutcomeHistory {
    fn default() -> Self {
        Self::new()
    }
}

impl OutcomeHistory {
    pub fn new() -> Self {
        OutcomeHistory {
            outcomes: Vec::new(),
            phases: vec![0.0],
        }
    }

    pub fn push(&mut self, x: Outcome, next_phase: f64) {
        self.outcomes.push(x);
        self.phases.push(next_phase);
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn current_phase(&self) -> f64 {
        *self.phases.last().expect("phases always holds Φ_0")
    }

    /// Outcome string packed as `Σ x_m 2^{m-1}`.
    pub fn index(&self) -> usize {
        self.outcomes
            .iter()
            .enumerate()
            .map(|(m, x)| (x.bit() as usize) << m)
            .sum()
    }
}

/// Iterator over every outcome string of a policy, in index order.
pub struct Histories<'a> {
    policy: &'a Policy,
    next: usize,
    end: usize,
}

impl Iterator for Histories<'_> {
    type Item = OutcomeHistory;

    fn next(&mut self) -> Option<OutcomeHistory> {
        if self.next >= self.end {
            return None;
        }
        let idx = self.next;
        self.next += 1;
        let mut h = OutcomeHistory::new();
        for (m, &delta) in self.policy.deltas().iter().enumerate() {
            let x = Outcome::from_bit(idx >> m & 1 == 1);
            h.push(x, feedback_update(h.current_phase(), x, delta));
        }
        Some(h)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.end - self.next;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Histories<'_> {}

/// All 2^N outcome strings with their phase trajectories.
pub fn enumerate_histories(policy: &Policy) -> Result<Histories<'_>> {
    check_enumerable(policy.len())?;
    Ok(Histories {
        policy,
        next: 0,
        end: 1usize << policy.len(),
    })
}

/// Number of branches Σ_{m=1..M} (d^L)^m of the decision tree for M bundles
/// of L d-level particles.
pub fn policy_tree_size(d: u32, l: u32, m: u32) -> Result<BigUint> {
    if d < 2 || l < 1 || m < 1 {
        return Err(Error::domain(format!(
            "need d >= 2, L >= 1, M >= 1 (got {d}, {l}, {m})"
        )));
    }
    let per_node = BigUint::from(d).pow(l);
    let mut total = BigUint::from(0u32);
    let mut level = BigUint::from(1u32);
    for _ in 0..m {
        level *= &per_node;
        total += &level;
    }
    Ok(total)
}

/// Provenance attached to a stored policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct PolicyMeta {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub generations: Option<usize>,
    #[serde(default)]
    pub objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateKind>,
}

/// On-disk policy: `{"n": N, "deltas": [...], "meta": {...}}`.
///
/// Doubles are written in shortest round-trip form, so reading back yields
/// bit-identical increments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyFile {
    pub n: usize,
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub meta: PolicyMeta,
}

impl PolicyFile {
    pub fn new(policy: &Policy, meta: PolicyMeta) -> Self {
        PolicyFile {
            n: policy.len(),
            deltas: policy.deltas().to_vec(),
            meta,
        }
    }

    pub fn policy(&self) -> Result<Policy> {
        if self.deltas.len() != self.n {
            return Err(Error::domain(format!(
                "policy file declares n = {} but has {} increments",
                self.n,
                self.deltas.len()
            )));
        }
        Policy::new(self.deltas.clone())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("policy serializes");
        s.push('\n');
        s
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: PolicyFile = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        file.policy()?;
        Ok(file)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_json().as_bytes())
    }
}
