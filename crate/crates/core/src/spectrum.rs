//! Circuit Hamiltonian in the LC-oscillator eigenbasis, its diagonalization,
//! and sweeps of the bias flux through the avoided crossing.
//!
//! The oscillator is centered at `c` (default φ_x) with flux
//! φ = c + σ₀(a + a†). The quadratic inductive term is then exactly
//! ħω(n + ½) plus, when c ≠ φ_x, a linear shift. The Josephson term needs
//! ⟨m|cos 2πφ|n⟩ = cos(2πc + kπ/2)·M_k(m, n) with k = |m − n| and
//!
//! ```text
//! M_k(n + k, n) = λᵏ e^{-λ²/2} √(n!/(n+k)!) L_n^{(k)}(λ²),   λ = 2πσ₀,
//! ```
//!
//! the magnitude of the displacement-operator matrix element ⟨m|D(iλ)|n⟩.

use std::f64::consts::PI;

use faer::Mat;
use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::CircuitParams;
use crate::error::{Error, Result};
use crate::linalg;

pub const MIN_DIM: usize = 32;
pub const MAX_DIM: usize = 2000;
pub const DEFAULT_DIM: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HoBasisConfig {
    pub dim: usize,
    /// Expansion center in Φ₀; `None` follows the bias flux φ_x.
    pub center: Option<f64>,
}

impl Default for HoBasisConfig {
    fn default() -> Self {
        Self {
            dim: DEFAULT_DIM,
            center: None,
        }
    }
}

impl HoBasisConfig {
    pub fn new(dim: usize) -> Self {
        Self { dim, center: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(MIN_DIM..=MAX_DIM).contains(&self.dim) {
            return Err(Error::BasisDimension { dim: self.dim });
        }
        Ok(())
    }

    pub fn center_for(&self, params: &CircuitParams) -> f64 {
        self.center.unwrap_or(params.phi_x)
    }
}

/// Magnitudes M_k(m, n) of the displacement matrix elements for a fixed λ,
/// stored as a lower triangle (m ≥ n).
#[derive(Debug, Clone)]
pub struct DisplacementTable {
    dim: usize,
    lambda: f64,
    lower: Vec<f64>,
}

impl DisplacementTable {
    pub fn new(lambda: f64, dim: usize) -> Self {
        let x = lambda * lambda;
        let ln_lambda = lambda.ln();
        let mut ln_fact = vec![0.0; dim + 1];
        for k in 1..=dim {
            ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
        }
        let mut lower = vec![0.0; dim * (dim + 1) / 2];
        for k in 0..dim {
            // S_n = √(n!/(n+k)!) L_n^{(k)}(x), upward in n; M = λᵏ e^{-x/2} S_n.
            let ln_start = k as f64 * ln_lambda - 0.5 * ln_fact[k] - 0.5 * x;
            if ln_start < -740.0 {
                break;
            }
            let mut s_prev = 0.0;
            let mut s = ln_start.exp();
            for n in 0..(dim - k) {
                let m = n + k;
                lower[m * (m + 1) / 2 + n] = s;
                let nf = n as f64;
                let kf = k as f64;
                let next = ((2.0 * nf + 1.0 + kf - x) * s - (nf * (nf + kf)).sqrt() * s_prev)
                    / ((nf + 1.0) * (nf + 1.0 + kf)).sqrt();
                s_prev = s;
                s = next;
            }
        }
        Self { dim, lambda, lower }
    }

    pub fn for_params(params: &CircuitParams, dim: usize) -> Self {
        Self::new(2.0 * PI * params.scales().sigma0_sq.sqrt(), dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn magnitude(&self, m: usize, n: usize) -> f64 {
        let (m, n) = if m >= n { (m, n) } else { (n, m) };
        self.lower[m * (m + 1) / 2 + n]
    }

    /// ⟨m|cos(2πφ)|n⟩ for an oscillator centered at `center`.
    pub fn cos_element(&self, center: f64, m: usize, n: usize) -> f64 {
        let k = m.abs_diff(n) as f64;
        (2.0 * PI * center + k * PI / 2.0).cos() * self.magnitude(m, n)
    }
}

pub fn build_hamiltonian(params: &CircuitParams, config: &HoBasisConfig) -> Result<Mat<f64>> {
    params.validate()?;
    config.validate()?;
    let table = DisplacementTable::for_params(params, config.dim);
    Ok(hamiltonian_from_table(params, config, &table))
}

fn hamiltonian_from_table(
    params: &CircuitParams,
    config: &HoBasisConfig,
    table: &DisplacementTable,
) -> Mat<f64> {
    let dim = config.dim;
    let scales = params.scales();
    let center = config.center_for(params);
    let shift = center - params.phi_x;
    let sigma0 = scales.sigma0_sq.sqrt();
    // E_L (x + shift)² = E_L x² + 2 E_L shift x + E_L shift²
    let linear = 2.0 * params.e_l * shift * sigma0;
    let mut h = Mat::<f64>::zeros(dim, dim);
    for m in 0..dim {
        for n in 0..=m {
            let mut v = -params.e_j * table.cos_element(center, m, n);
            if m == n {
                v += scales.hbar_omega * (n as f64 + 0.5) + params.e_l * shift * shift;
            } else if m == n + 1 {
                v += linear * (m as f64).sqrt();
            }
            h[(m, n)] = v;
            h[(n, m)] = v;
        }
    }
    h
}

#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub energies: Vec<f64>,
    /// Column k holds the oscillator-basis coefficients of eigenstate k.
    pub states: Mat<f64>,
    pub params: CircuitParams,
    pub config: HoBasisConfig,
}

pub fn eigensolve(h: &Mat<f64>, params: &CircuitParams, config: &HoBasisConfig) -> Result<SpectralResult> {
    let e = linalg::eigensolve(h)?;
    Ok(SpectralResult {
        energies: e.values,
        states: e.vectors,
        params: *params,
        config: *config,
    })
}

pub fn diagonalize(params: &CircuitParams, config: &HoBasisConfig) -> Result<SpectralResult> {
    let h = build_hamiltonian(params, config)?;
    eigensolve(&h, params, config)
}

impl SpectralResult {
    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn center(&self) -> f64 {
        self.config.center_for(&self.params)
    }

    pub fn coefficients(&self, k: usize) -> Vec<f64> {
        (0..self.dim()).map(|i| self.states[(i, k)]).collect()
    }

    /// (⟨φ⟩, var φ) of eigenstate k, from the tridiagonal flux operator.
    pub fn flux_moments(&self, k: usize) -> (f64, f64) {
        let c = self.coefficients(k);
        let sigma0 = self.params.scales().sigma0_sq.sqrt();
        let x = ladder_apply(&c, 1.0);
        let mean_x: f64 = sigma0 * c.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
        let second: f64 = sigma0 * sigma0 * x.iter().map(|v| v * v).sum::<f64>();
        (self.center() + mean_x, second - mean_x * mean_x)
    }

    /// 2 Δφ Δk for eigenstate k, where k = −i d/dφ; equals 1 for a minimum
    /// uncertainty state (ΔΦ ΔQ = ħ/2).
    pub fn uncertainty_product(&self, k: usize) -> f64 {
        let (_, var_phi) = self.flux_moments(k);
        let c = self.coefficients(k);
        let sigma0 = self.params.scales().sigma0_sq.sqrt();
        // k̂ = i(a† − a)/(2σ₀); real coefficients give ⟨k̂⟩ = 0.
        let y = ladder_apply(&c, -1.0);
        let var_k = y.iter().map(|v| v * v).sum::<f64>() / (4.0 * sigma0 * sigma0);
        2.0 * (var_phi * var_k).sqrt()
    }
}

impl SpectralResult {
    /// ⟨a|P|b⟩ for the reflection φ − c → c − φ about the basis center,
    /// which acts as (−1)ⁿ on oscillator states.
    pub fn parity_element(&self, a: usize, b: usize) -> f64 {
        (0..self.dim())
            .map(|n| {
                let s = if n % 2 == 0 { 1.0 } else { -1.0 };
                s * self.states[(n, a)] * self.states[(n, b)]
            })
            .sum()
    }

    /// Rotates the pair (a, b) into parity eigenstates, returning the even
    /// combination first. Meaningful when the potential is symmetric about
    /// the basis center; it resolves the arbitrary mixing the eigensolver
    /// leaves inside a degenerate doublet.
    pub fn parity_adapted(&self, a: usize, b: usize) -> (Vec<f64>, Vec<f64>) {
        let (paa, pab, pbb) = (
            self.parity_element(a, a),
            self.parity_element(a, b),
            self.parity_element(b, b),
        );
        // eigenvector of [[paa, pab], [pab, pbb]] for the larger eigenvalue
        let theta = 0.5 * (2.0 * pab).atan2(paa - pbb);
        let (c, s) = (theta.cos(), theta.sin());
        let va = self.coefficients(a);
        let vb = self.coefficients(b);
        let even = va.iter().zip(&vb).map(|(x, y)| c * x + s * y).collect();
        let odd = va.iter().zip(&vb).map(|(x, y)| -s * x + c * y).collect();
        (even, odd)
    }
}

/// (a† + sign·a) c, keeping the component that leaves the truncated basis.
fn ladder_apply(c: &[f64], sign: f64) -> Vec<f64> {
    let n = c.len();
    let mut out = vec![0.0; n + 1];
    for (i, &ci) in c.iter().enumerate() {
        // a† |i> = √(i+1) |i+1>
        out[i + 1] += (i as f64 + 1.0).sqrt() * ci;
        // a |i> = √i |i-1>
        if i > 0 {
            out[i - 1] += sign * (i as f64).sqrt() * ci;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TargetPair {
    pub lower: usize,
    pub upper: usize,
    pub splitting: f64,
}

/// Picks the sub-barrier doublet with the largest tunnel splitting.
///
/// Candidates are level pairs (2j, 2j+1) whose mean energy lies in
/// [U_min, U_barrier), whose splitting exceeds 1e-6·ħω and is smaller than
/// the distance to the next level up. Ties go to the lower doublet.
pub fn find_target_states(result: &SpectralResult) -> Result<TargetPair> {
    let well = result.params.double_well().ok_or(Error::NoSubBarrierDoublet)?;
    let min_split = 1e-6 * result.params.scales().hbar_omega;
    let e = &result.energies;
    let mut best: Option<TargetPair> = None;
    let mut j = 0;
    while j + 1 < e.len() {
        let (lo, hi) = (e[j], e[j + 1]);
        let mean = 0.5 * (lo + hi);
        if mean >= well.u_barrier {
            break;
        }
        let split = hi - lo;
        let next_gap = e.get(j + 2).map_or(f64::INFINITY, |n| n - hi);
        if mean >= well.u_min && split > min_split && split < next_gap {
            let better = best.map_or(true, |b| split > b.splitting);
            if better {
                best = Some(TargetPair {
                    lower: j,
                    upper: j + 1,
                    splitting: split,
                });
            }
        }
        j += 2;
    }
    best.ok_or(Error::NoSubBarrierDoublet)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub phi_x: f64,
    pub energies: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
}

impl Sweep {
    /// E_upper − E_lower at every sweep point.
    pub fn gap(&self, lower: usize, upper: usize) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.energies[upper] - r.energies[lower])
            .collect()
    }

    /// Index of the sweep point with the smallest gap.
    pub fn argmin_gap(&self, lower: usize, upper: usize) -> Option<usize> {
        self.gap(lower, upper)
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
    }
}

/// Lowest `n_levels` energies for every bias flux in `phi_x_values`, with the
/// basis re-centered at each point. Output order follows the input.
pub fn sweep_phi_x(
    params: &CircuitParams,
    phi_x_values: &[f64],
    n_levels: usize,
    dim: usize,
) -> Result<Sweep> {
    if phi_x_values.is_empty() {
        return Err(Error::Domain("empty phi_x range".into()));
    }
    let config = HoBasisConfig::new(dim);
    config.validate()?;
    params.validate()?;
    if n_levels == 0 || n_levels > dim {
        return Err(Error::Domain(format!("n_levels = {n_levels} must be in 1..={dim}")));
    }
    let table = DisplacementTable::for_params(params, dim);
    let rows = phi_x_values
        .par_iter()
        .map(|&phi_x| {
            let p = params.with_phi_x(phi_x);
            let h = hamiltonian_from_table(&p, &config, &table);
            let mut energies = linalg::eigenvalues(&h).map_err(|e| Error::Sweep {
                phi_x,
                source: Box::new(e),
            })?;
            energies.truncate(n_levels);
            Ok(SweepRow { phi_x, energies })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Sweep { rows })
}

/// `points` values evenly spaced over [lo, hi] inclusive.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}
