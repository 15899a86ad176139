//! Wigner small-d matrix elements at β = π/2.
//!
//! Angular momenta are carried as doubled integers (`two_j = 2j`, `two_m = 2m`)
//! so that half-integer index arithmetic stays exact.
//!
//! Convention: d^j_{m,m'}(β) = ⟨j m| exp(-iβJ_y) |j m'⟩, which gives
//! d^{1/2}_{1/2,-1/2}(β) = -sin(β/2).
//!
//! Rows are evaluated with the three-term recursion in m' that follows from
//! J_z = J_x at β = π/2:
//!
//! ```text
//! 2m d_{m,m'} = -[c+(m') d_{m,m'+1} + c-(m') d_{m,m'-1}]
//! c±(m') = sqrt((j ∓ m')(j ± m' + 1))
//! ```
//!
//! seeded at the edge m' = j by d_{m,j} = sqrt(C(2j, j+m)) 2^{-j}. The
//! recursion runs inward from the edge (the growing direction) down to
//! m' = 0 or 1/2 and the other half of the row comes from the reflection
//! d_{m,-m'}(π/2) = (-1)^{j+m} d_{m,m'}(π/2).

use crate::error::{Error, Result};

fn check_index(two_j: u32, two_m: i32, name: &str) -> Result<()> {
    let tj = two_j as i64;
    let tm = two_m as i64;
    if tm.abs() > tj || (tj - tm) % 2 != 0 {
        return Err(Error::domain(format!(
            "{name} = {two_m}/2 is not a valid projection for j = {two_j}/2"
        )));
    }
    Ok(())
}

/// sqrt(C(2j, j+m)) * 2^{-j}, the m' = j edge element.
fn edge_element(two_j: u32, two_m: i32) -> f64 {
    let n = two_j as u64;
    let k = ((two_j as i64 + two_m as i64) / 2) as u64;
    let k = k.min(n - k);
    // Build C(n, k) / 2^n as a running product of ratios to stay in range.
    let mut log_binom = 0.0f64;
    for i in 0..k {
        log_binom += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    (0.5 * log_binom - 0.5 * n as f64 * std::f64::consts::LN_2).exp()
}

/// Computes the full row d^j_{m, m'}(π/2) for m' = -j..=j (ascending).
fn row(two_j: u32, two_m: i32) -> Vec<f64> {
    let dim = two_j as usize + 1;
    let mut out = vec![0.0; dim];
    let tj = two_j as i64;
    let tm = two_m as i64;
    // index of m' is (two_mp + two_j) / 2
    let idx = |two_mp: i64| ((two_mp + tj) / 2) as usize;

    out[dim - 1] = edge_element(two_j, two_m);
    // Walk m' from j down to the middle of the row.
    let mut two_mp = tj;
    while two_mp > 1 {
        let c_plus = 0.5 * (((tj - two_mp) * (tj + two_mp + 2)) as f64).sqrt();
        let c_minus = 0.5 * (((tj + two_mp) * (tj - two_mp + 2)) as f64).sqrt();
        let upper = if two_mp < tj {
            out[idx(two_mp + 2)]
        } else {
            0.0
        };
        let here = out[idx(two_mp)];
        out[idx(two_mp - 2)] = -(tm as f64 * here + c_plus * upper) / c_minus;
        two_mp -= 2;
    }

    // Reflect onto negative m'.
    let sign = if ((tj + tm) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    for i in 0..dim / 2 {
        out[i] = sign * out[dim - 1 - i];
    }
    out
}

/// d^j_{m,m'}(π/2) with all three arguments doubled.
pub fn wigner_d_half_pi(two_j: u32, two_m: i32, two_mp: i32) -> Result<f64> {
    check_index(two_j, two_m, "m")?;
    check_index(two_j, two_mp, "m'")?;
    let r = row(two_j, two_m);
    Ok(r[((two_mp as i64 + two_j as i64) / 2) as usize])
}

/// All elements d^j_{m,m'}(π/2) for one j.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerDTable {
    two_j: u32,
    // row-major, rows indexed by m, columns by m', both ascending from -j
    entries: Vec<f64>,
}

impl WignerDTable {
    pub fn half_pi(two_j: u32) -> Self {
        let dim = two_j as usize + 1;
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            let two_m = 2 * i as i32 - two_j as i32;
            entries.extend(row(two_j, two_m));
        }
        WignerDTable { two_j, entries }
    }

    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    pub fn dim(&self) -> usize {
        self.two_j as usize + 1
    }

    /// Element by zero-based positions: `row = j + m`, `col = j + m'`.
    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.dim() + col]
    }

    /// Element by doubled projections.
    pub fn get(&self, two_m: i32, two_mp: i32) -> Result<f64> {
        check_index(self.two_j, two_m, "m")?;
        check_index(self.two_j, two_mp, "m'")?;
        let tj = self.two_j as i32;
        Ok(self.at(((two_m + tj) / 2) as usize, ((two_mp + tj) / 2) as usize))
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let d = self.dim();
        &self.entries[row * d..(row + 1) * d]
    }

    /// Largest deviation of DᵀD from the identity.
    pub fn orthogonality_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in a..d {
                let rows: f64 = (0..d).map(|k| self.at(a, k) * self.at(b, k)).sum();
                let cols: f64 = (0..d).map(|k| self.at(k, a) * self.at(k, b)).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((rows - target).abs()).max((cols - target).abs());
            }
        }
        worst
    }
}
