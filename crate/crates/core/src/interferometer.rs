//! Mach-Zehnder passage of one photon at a time, as Kraus operators on the
//! symmetric state, and single-shot adaptive simulation.
//!
//! Conventions: the beamsplitter is B = (1/√2)[[1, i], [i, 1]] and the
//! interferometer is V = B · diag(e^{iφ}, e^{iΦ}) · B. Column 0 of V is the
//! mode-a input, column 1 the mode-b input; the row is the detected port `x`.
//! With these choices x = 1 is certain when φ = Φ for a mode-a photon.

use num_complex::Complex64;
use rand::Rng;

use crate::angle::wrap_two_pi;
use crate::error::{Error, Result};
use crate::policy::{feedback_update, OutcomeHistory, Policy};
use crate::symstate::SymmetricState;

/// Branch probabilities below this are treated as exactly zero.
pub const PROBABILITY_FLOOR: f64 = 1e-300;

/// Detector port that registered the photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Zero = 0,
    One = 1,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Zero, Outcome::One];

    #[inline]
    pub fn bit(self) -> u8 {
        self as u8
    }

    #[inline]
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Outcome::One
        } else {
            Outcome::Zero
        }
    }
}

/// Unknown phase φ and controllable phase Φ, both kept in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePair {
    pub unknown: f64,
    pub control: f64,
}

impl PhasePair {
    pub fn new(unknown: f64, control: f64) -> Self {
        PhasePair {
            unknown: wrap_two_pi(unknown),
            control: wrap_two_pi(control),
        }
    }
}

pub type Matrix2 = [[Complex64; 2]; 2];

/// V = B diag(e^{iφ}, e^{iΦ}) B, written out in closed form.
pub fn single_photon_matrix(p: PhasePair) -> Matrix2 {
    let a = Complex64::from_polar(1.0, p.unknown);
    let b = Complex64::from_polar(1.0, p.control);
    let i = Complex64::new(0.0, 1.0);
    let diag = (a - b) * 0.5;
    let off = i * (a + b) * 0.5;
    [[diag, off], [off, -diag]]
}

/// √((n+1)/R) and √((R-n)/R) for n = 0..R-1.
fn extraction_weights(r: usize) -> impl Iterator<Item = (f64, f64)> {
    let rf = r as f64;
    (0..r).map(move |n| (((n + 1) as f64 / rf).sqrt(), ((r - n) as f64 / rf).sqrt()))
}

/// K_x ψ: removes one photon from the symmetric state, sends it through V and
/// projects it onto port `x`. The result is unnormalized with R-1 photons.
pub fn kraus_apply(state: &SymmetricState, x: Outcome, p: PhasePair) -> Result<SymmetricState> {
    let r = state.photons();
    if r == 0 {
        return Err(Error::domain("cannot measure a photon from an empty state"));
    }
    let v = single_photon_matrix(p);
    let row = v[x as usize];
    let psi = state.amplitudes();
    let out = extraction_weights(r)
        .enumerate()
        .map(|(n, (up, down))| row[0] * psi[n + 1] * up + row[1] * psi[n] * down)
        .collect();
    SymmetricState::from_amplitudes(out)
}

/// (P(0), P(1)) for measuring the next photon of a normalized state.
pub fn branch_probabilities(state: &SymmetricState, p: PhasePair) -> Result<[f64; 2]> {
    let r = state.photons();
    if r == 0 {
        return Err(Error::domain("cannot measure a photon from an empty state"));
    }
    Ok(branch_probs_raw(
        state.amplitudes(),
        &single_photon_matrix(p),
    ))
}

fn branch_probs_raw(psi: &[Complex64], v: &Matrix2) -> [f64; 2] {
    let r = psi.len() - 1;
    let mut p = [0.0; 2];
    for (n, (up, down)) in extraction_weights(r).enumerate() {
        let hi = psi[n + 1] * up;
        let lo = psi[n] * down;
        p[0] += (v[0][0] * hi + v[0][1] * lo).norm_sqr();
        p[1] += (v[1][0] * hi + v[1][1] * lo).norm_sqr();
    }
    p
}

/// Result of measuring one photon.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub outcome: Outcome,
    pub probability: f64,
    /// Normalized, one photon fewer.
    pub post_state: SymmetricState,
}

/// Measures the next photon, choosing x = 0 when `u < P(0)`.
pub fn measure_one(state: &SymmetricState, p: PhasePair, u: f64) -> Result<MeasurementRecord> {
    let probs = branch_probabilities(state, p)?;
    let outcome = if u < probs[0] {
        Outcome::Zero
    } else {
        Outcome::One
    };
    let probability = probs[outcome as usize];
    if probability < PROBABILITY_FLOOR {
        return Err(Error::DegenerateBranch {
            outcome: outcome.bit(),
            probability,
        });
    }
    let post = kraus_apply(state, outcome, p)?;
    let post_state = post.normalized()?;
    Ok(MeasurementRecord {
        outcome,
        probability: probability.min(1.0),
        post_state,
    })
}

/// Runs one adaptive estimation: each photon is measured at the current
/// control phase, which is then updated by the policy. Φ_0 = 0 and the
/// estimate is the final control phase.
pub fn simulate_single_shot<R: Rng + ?Sized>(
    state: &SymmetricState,
    policy: &Policy,
    phi: f64,
    rng: &mut R,
) -> Result<(f64, OutcomeHistory)> {
    check_policy_len(state, policy)?;
    let mut current = state.clone();
    let mut history = OutcomeHistory::new();
    for &delta in policy.deltas() {
        let control = history.current_phase();
        let rec = measure_one(&current, PhasePair::new(phi, control), rng.gen::<f64>())?;
        history.push(rec.outcome, feedback_update(control, rec.outcome, delta));
        current = rec.post_state;
    }
    Ok((history.current_phase(), history))
}

fn check_policy_len(state: &SymmetricState, policy: &Policy) -> Result<()> {
    if policy.len() != state.photons() {
        return Err(Error::domain(format!(
            "policy has {} steps but the state has {} photons",
            policy.len(),
            state.photons()
        )));
    }
    Ok(())
}

/// Allocation-free single-shot runner for the training loop.
///
/// Produces the same estimate as [`simulate_single_shot`] when fed the same
/// uniforms, but only returns the final phase. Both branches are built in one
/// pass, and only the index range holding nonzero amplitudes is touched, so
/// a product state costs O(1) per photon.
#[derive(Debug, Clone, Default)]
pub struct ShotRunner {
    src: Vec<Complex64>,
    out: [Vec<Complex64>; 2],
    weights: Vec<Vec<(f64, f64)>>,
    // e^{iΔ_m} for the policy seen last
    deltas: Vec<f64>,
    rotations: Vec<Complex64>,
}

impl ShotRunner {
    pub fn new() -> Self {
        Self::default()
    }

    fn ensure_weights(&mut self, r: usize) {
        for k in self.weights.len()..=r {
            self.weights.push(if k == 0 {
                Vec::new()
            } else {
                extraction_weights(k).collect()
            });
        }
    }

    fn ensure_rotations(&mut self, deltas: &[f64]) {
        if self.deltas != deltas {
            self.deltas.clear();
            self.deltas.extend_from_slice(deltas);
            self.rotations.clear();
            self.rotations
                .extend(deltas.iter().map(|&d| Complex64::from_polar(1.0, d)));
        }
    }

    /// `uniforms` must yield at least one value per photon.
    ///
    /// V is only needed up to a global phase, so it is built from
    /// e^{i(φ-Φ)}, with e^{-iΦ} carried along by multiplying the cached
    /// policy rotations instead of evaluating trigonometric functions.
    pub fn run(
        &mut self,
        state: &SymmetricState,
        deltas: &[f64],
        phi: f64,
        mut uniforms: impl Iterator<Item = f64>,
    ) -> Result<f64> {
        let photons = state.photons();
        if deltas.len() != photons {
            return Err(Error::domain("policy length does not match photon count"));
        }
        self.ensure_weights(photons);
        self.ensure_rotations(deltas);
        let amps = state.amplitudes();
        let zero = Complex64::new(0.0, 0.0);
        // [lo, hi] bounds the nonzero amplitudes of `src`
        let Some(mut lo) = amps.iter().position(|a| *a != zero) else {
            return Err(Error::domain("zero state"));
        };
        let mut hi = amps
            .iter()
            .rposition(|a| *a != zero)
            .expect("nonzero exists");
        self.src.clear();
        self.src.extend_from_slice(amps);
        for b in &mut self.out {
            b.clear();
            b.resize(photons + 1, zero);
        }

        let i = Complex64::new(0.0, 1.0);
        let signal = Complex64::from_polar(1.0, phi);
        // e^{-iΦ}
        let mut counter = Complex64::new(1.0, 0.0);
        let mut control = 0.0;
        for (step, &delta) in deltas.iter().enumerate() {
            let r = photons - step;
            let a = signal * counter;
            let diag = (a - 1.0) * 0.5;
            let off = i * (a + 1.0) * 0.5;
            let v = [[diag, off], [off, -diag]];
            let weights = &self.weights[r];
            let new_lo = lo.saturating_sub(1);
            let new_hi = hi.min(r - 1);

            let (src, [out0, out1]) = (&self.src, &mut self.out);
            let mut p0 = 0.0;
            let mut p1 = 0.0;
            for n in new_lo..=new_hi {
                let (up, down) = weights[n];
                let hi_amp = src[n + 1] * up;
                let lo_amp = src[n] * down;
                let a0 = v[0][0] * hi_amp + v[0][1] * lo_amp;
                let a1 = v[1][0] * hi_amp + v[1][1] * lo_amp;
                p0 += a0.norm_sqr();
                p1 += a1.norm_sqr();
                out0[n] = a0;
                out1[n] = a1;
            }
            let u = uniforms
                .next()
                .ok_or_else(|| Error::domain("ran out of uniforms"))?;
            let outcome = if u < p0 { Outcome::Zero } else { Outcome::One };
            let prob = if outcome == Outcome::Zero { p0 } else { p1 };
            if prob < PROBABILITY_FLOOR {
                return Err(Error::DegenerateBranch {
                    outcome: outcome.bit(),
                    probability: prob,
                });
            }
            let chosen = &mut self.out[outcome as usize];
            let inv = 1.0 / prob.sqrt();
            for a in &mut chosen[new_lo..=new_hi] {
                *a *= inv;
            }
            std::mem::swap(&mut self.src, chosen);
            // Entries just outside the support are read next step and must be zero.
            if new_lo > 0 {
                self.src[new_lo - 1] = zero;
            }
            self.src[new_hi + 1..r].fill(zero);
            lo = new_lo;
            hi = new_hi;
            control = feedback_update(control, outcome, delta);
            let rot = self.rotations[step];
            counter *= match outcome {
                Outcome::Zero => rot,
                Outcome::One => rot.conj(),
            };
        }
        Ok(control)
    }
}
