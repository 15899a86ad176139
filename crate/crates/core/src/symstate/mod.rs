//! N-photon two-mode states in the permutation-symmetric basis.
//!
//! Basis vector `n` is |n, R-n⟩: `n` photons in mode a, `R - n` in mode b.

mod wigner;

pub use wigner::{wigner_d_half_pi, WignerDTable};

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pure symmetric state of `photons()` photons.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricState {
    amps: Vec<Complex64>,
}

impl SymmetricState {
    /// Wraps raw amplitudes without normalizing. `amps[n]` is the amplitude of |n, R-n⟩.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::domain(
                "a symmetric state needs at least one amplitude",
            ));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::domain("non-finite amplitude"));
        }
        Ok(SymmetricState { amps })
    }

    /// All `photons` photons in mode a: |1,0⟩^{⊗N} = |N, 0⟩.
    pub fn product(photons: usize) -> Result<Self> {
        if photons == 0 {
            return Err(Error::domain("product state needs N >= 1"));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); photons + 1];
        amps[photons] = Complex64::new(1.0, 0.0);
        Ok(SymmetricState { amps })
    }

    /// The sine state, renormalized to unit norm.
    pub fn sine(photons: usize) -> Result<Self> {
        Self::sine_with_raw_norm(photons).map(|(s, _)| s)
    }

    /// The sine state together with its norm before renormalization.
    ///
    /// amps_n = (N/2+1)^{-1/2} Σ_k sin((k+1)π/(N+2)) i^{k-n} d^{N/2}_{n-N/2, k-N/2}(π/2)
    ///
    /// The global phase is the one fixed by the factor i^{k-n}; other phase
    /// conventions for this state differ only by a global phase.
    pub fn sine_with_raw_norm(photons: usize) -> Result<(Self, f64)> {
        if photons == 0 {
            return Err(Error::domain("sine state needs N >= 1"));
        }
        let n_ph = photons;
        let table = WignerDTable::half_pi(n_ph as u32);
        let prefactor = (n_ph as f64 / 2.0 + 1.0).powf(-0.5);
        let weights: Vec<f64> = (0..=n_ph)
            .map(|k| ((k + 1) as f64 * PI / (n_ph + 2) as f64).sin())
            .collect();
        let amps: Vec<Complex64> = (0..=n_ph)
            .map(|n| {
                let sum = (0..=n_ph).fold(Complex64::new(0.0, 0.0), |acc, k| {
                    acc + i_pow(k as i64 - n as i64) * (weights[k] * table.at(n, k))
                });
                sum * prefactor
            })
            .collect();
        let state = SymmetricState { amps };
        let raw = state.norm();
        log::debug!("sine state N={n_ph}: norm before renormalization {raw:.17}");
        let state = state.normalized()?;
        Ok((state, raw))
    }

    pub fn photons(&self) -> usize {
        self.amps.len() - 1
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Scales to unit norm. Fails on a zero vector.
    pub fn normalized(mut self) -> Result<Self> {
        let nrm = self.norm();
        if nrm <= 0.0 || !nrm.is_finite() {
            return Err(Error::domain(format!(
                "cannot normalize state with norm {nrm:e}"
            )));
        }
        let inv = 1.0 / nrm;
        for a in &mut self.amps {
            *a *= inv;
        }
        Ok(self)
    }

    /// Index of the single occupied basis vector, if the state is one (up to `tol`).
    pub fn basis_index(&self, tol: f64) -> Option<usize> {
        let mut found = None;
        for (n, a) in self.amps.iter().enumerate() {
            if a.norm_sqr() > tol {
                if found.is_some() {
                    return None;
                }
                found = Some(n);
            }
        }
        found
    }
}

/// i^k for any integer k.
fn i_pow(k: i64) -> Complex64 {
    match k.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Which input state to feed the interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Sine,
    Product,
}

impl StateKind {
    pub fn prepare(self, photons: usize) -> Result<SymmetricState> {
        match self {
            StateKind::Sine => SymmetricState::sine(photons),
            StateKind::Product => SymmetricState::product(photons),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StateKind::Sine => "sine",
            StateKind::Product => "product",
        }
    }
}

impl fmt::Display for StateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sine" => Ok(StateKind::Sine),
            "product" => Ok(StateKind::Product),
            other => Err(Error::domain(format!("unknown state kind {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn product_state_is_last_basis_vector() {
        let s = SymmetricState::product(3).unwrap();
        let want = [0.0, 0.0, 0.0, 1.0];
        for (a, w) in s.amplitudes().iter().zip(want) {
            assert_eq!(*a, Complex64::new(w, 0.0));
        }
        let s1 = SymmetricState::product(1).unwrap();
        assert_eq!(
            s1.amplitudes(),
            &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]
        );
        for n in 1..20 {
            assert_eq!(SymmetricState::product(n).unwrap().norm_sqr(), 1.0);
        }
    }

    #[test]
    fn zero_photons_rejected() {
        assert!(SymmetricState::product(0).is_err());
        assert!(SymmetricState::sine(0).is_err());
        assert!(SymmetricState::from_amplitudes(vec![]).is_err());
    }

    #[test]
    fn sine_state_normalized() {
        let s = SymmetricState::sine(4).unwrap();
        assert_eq!(s.photons(), 4);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sine_state_single_photon_literal() {
        // N = 1: prefactor (3/2)^{-1/2}, weights sin(π/3) = sin(2π/3) = √3/2,
        // d^{1/2} at π/2 written out by hand.
        let d = |n: usize, k: usize| -> f64 {
            match (n, k) {
                (1, 1) | (0, 0) | (0, 1) => FRAC_1_SQRT_2,
                (1, 0) => -FRAC_1_SQRT_2,
                _ => unreachable!(),
            }
        };
        let pre = (1.5f64).powf(-0.5);
        let w = 3f64.sqrt() / 2.0;
        let phase = |k: i64, n: i64| Complex64::from_polar(1.0, PI * (k - n) as f64 / 2.0);
        let mut want = [Complex64::new(0.0, 0.0); 2];
        for (n, slot) in want.iter_mut().enumerate() {
            for k in 0..2usize {
                *slot += phase(k as i64, n as i64) * w * d(n, k) * pre;
            }
        }
        let got = SymmetricState::sine(1).unwrap();
        for (g, w) in got.amplitudes().iter().zip(want) {
            assert!((g - w).norm() < 1e-14, "{g} vs {w}");
        }
    }

    #[test]
    fn sine_state_pre_normalization_norm_stable() {
        for n in 1..=100 {
            let (_, raw) = SymmetricState::sine_with_raw_norm(n).unwrap();
            assert!((raw - 1.0).abs() < 1e-6, "N={n}: raw norm {raw}");
        }
    }

    #[test]
    fn sine_state_matches_exact_oracle_n10() {
        let n = 10usize;
        let pre = (n as f64 / 2.0 + 1.0).powf(-0.5);
        let got = SymmetricState::sine(n).unwrap();
        for row in 0..=n {
            let mut want = Complex64::new(0.0, 0.0);
            for k in 0..=n {
                let d = super::wigner::tests::exact_d(
                    n as i64,
                    2 * row as i64 - n as i64,
                    2 * k as i64 - n as i64,
                );
                let s = ((k + 1) as f64 * PI / (n + 2) as f64).sin();
                want += Complex64::from_polar(1.0, PI * (k as f64 - row as f64) / 2.0) * s * d;
            }
            want *= pre;
            assert!((got.amplitudes()[row] - want).norm() < 1e-8);
        }
    }

    #[test]
    fn i_pow_cycles() {
        assert_eq!(i_pow(-1), Complex64::new(0.0, -1.0));
        assert_eq!(i_pow(5), Complex64::new(0.0, 1.0));
        assert_eq!(i_pow(-2), Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn state_kind_parses() {
        assert_eq!("sine".parse::<StateKind>().unwrap(), StateKind::Sine);
        assert_eq!("product".parse::<StateKind>().unwrap(), StateKind::Product);
        assert!("bell".parse::<StateKind>().is_err());
    }
}
