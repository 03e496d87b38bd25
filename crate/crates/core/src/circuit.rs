//! rf-SQUID circuit parameters, the double-well potential, and closed-form
//! estimates of the reference variance and effective sizes.
//!
//! Units: energies are frequencies in GHz (E/h), fluxes are in units of the
//! flux quantum Φ₀ = h/2e. With φ = Φ/Φ₀ the Hamiltonian reads
//!
//! ```text
//! H = -(E_C/π²) d²/dφ² + E_L (φ - φ_x)² - E_J cos(2πφ)
//! ```
//!
//! so the bare LC oscillator has ħω = (2/π)√(E_L E_C) and a ground-state flux
//! variance σ₀² = √(E_C/E_L)/(2π).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ratio above which both E_L/E_C and E_J/E_C count as the deep-well regime.
pub const DEEP_WELL_RATIO: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    /// Charging energy e²/2C (GHz).
    pub e_c: f64,
    /// Inductive energy Φ₀²/2L (GHz).
    pub e_l: f64,
    /// Josephson energy I_c Φ₀/2π (GHz).
    pub e_j: f64,
    /// External bias flux (Φ₀).
    pub phi_x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedScales {
    /// LC quantum ħω (GHz).
    pub hbar_omega: f64,
    /// Zero-point flux variance ħ/(2Cω) of the bare LC ground state (Φ₀²).
    pub sigma0_sq: f64,
    /// ω_cl / ω = √(1 + 2π² E_J/E_L).
    pub omega_cl_ratio: f64,
}

impl CircuitParams {
    pub fn new(e_c: f64, e_l: f64, e_j: f64, phi_x: f64) -> Result<Self> {
        let p = Self { e_c, e_l, e_j, phi_x };
        p.validate()?;
        Ok(p)
    }

    /// Friedman et al. (SUNY, 2000): E_C = 188 MHz, E_L = 13 THz, E_J = 1.588 THz,
    /// biased at the symmetry point.
    pub fn suny2000() -> Self {
        Self {
            e_c: 0.188,
            e_l: 13_000.0,
            e_j: 1_588.0,
            phi_x: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.e_c, self.e_l, self.e_j, self.phi_x]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("non-finite value".into()));
        }
        if self.e_c <= 0.0 {
            return Err(Error::InvalidParams(format!("e_c = {} must be > 0", self.e_c)));
        }
        if self.e_l <= 0.0 {
            return Err(Error::InvalidParams(format!("e_l = {} must be > 0", self.e_l)));
        }
        if self.e_j < 0.0 {
            return Err(Error::InvalidParams(format!("e_j = {} must be >= 0", self.e_j)));
        }
        Ok(())
    }

    pub fn with_phi_x(self, phi_x: f64) -> Self {
        Self { phi_x, ..self }
    }

    pub fn deep_well(&self) -> bool {
        self.e_l / self.e_c > DEEP_WELL_RATIO && self.e_j / self.e_c > DEEP_WELL_RATIO
    }

    pub fn scales(&self) -> DerivedScales {
        DerivedScales {
            hbar_omega: 2.0 / PI * (self.e_l * self.e_c).sqrt(),
            sigma0_sq: (self.e_c / self.e_l).sqrt() / (2.0 * PI),
            omega_cl_ratio: (1.0 + 2.0 * PI * PI * self.e_j / self.e_l).sqrt(),
        }
    }

    /// Prefactor of -d²/dφ² in the Hamiltonian (GHz·Φ₀²).
    pub fn kinetic_coefficient(&self) -> f64 {
        self.e_c / (PI * PI)
    }

    /// U(φ) = E_L (φ - φ_x)² - E_J cos(2πφ), in GHz.
    pub fn potential(&self, phi: f64) -> f64 {
        let dx = phi - self.phi_x;
        self.e_l * dx * dx - self.e_j * (2.0 * PI * phi).cos()
    }

    pub fn potential_derivative(&self, phi: f64) -> f64 {
        2.0 * self.e_l * (phi - self.phi_x) + 2.0 * PI * self.e_j * (2.0 * PI * phi).sin()
    }

    /// All local minima of U within φ_x ± 1/2, ascending in φ.
    ///
    /// U' is scanned on a fine mesh for sign changes from - to +, each of which
    /// is refined by bisection to 1e-12 in φ.
    pub fn local_minima(&self) -> Vec<f64> {
        const MESH: usize = 4000;
        let lo = self.phi_x - 0.5;
        let step = 1.0 / MESH as f64;
        let mut minima = Vec::new();
        let mut prev = self.potential_derivative(lo);
        for i in 1..=MESH {
            let x = lo + i as f64 * step;
            let cur = self.potential_derivative(x);
            if prev < 0.0 && cur >= 0.0 {
                minima.push(self.refine_root(x - step, x));
            }
            prev = cur;
        }
        minima
    }

    fn refine_root(&self, mut a: f64, mut b: f64) -> f64 {
        // U'(a) < 0 <= U'(b)
        while b - a > 1e-12 {
            let m = 0.5 * (a + b);
            if self.potential_derivative(m) < 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    /// The two deepest minima of a double well, or `None` for a single well.
    pub fn double_well(&self) -> Option<DoubleWell> {
        let mut minima = self.local_minima();
        if minima.len() < 2 {
            return None;
        }
        minima.sort_by(|a, b| self.potential(*a).total_cmp(&self.potential(*b)));
        let (mut left, mut right) = (minima[0], minima[1]);
        if left > right {
            std::mem::swap(&mut left, &mut right);
        }
        let barrier = self.refine_barrier(left, right);
        Some(DoubleWell {
            left,
            right,
            barrier,
            u_min: self.potential(left).min(self.potential(right)),
            u_barrier: self.potential(barrier),
        })
    }

    /// Location of the maximum of U between two minima (golden section).
    fn refine_barrier(&self, a: f64, b: f64) -> f64 {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (a, b);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        while (b - a).abs() > 1e-10 {
            if self.potential(c) > self.potential(d) {
                b = d;
            } else {
                a = c;
            }
            c = b - g * (b - a);
            d = a + g * (b - a);
        }
        0.5 * (a + b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleWell {
    pub left: f64,
    pub right: f64,
    pub barrier: f64,
    pub u_min: f64,
    pub u_barrier: f64,
}

impl DoubleWell {
    pub fn separation(&self) -> f64 {
        self.right - self.left
    }
}

/// Harmonic estimate of the single-well ground-state flux variance at φ_x = 0,
/// ħ/(2Cω_cl) = √(E_C/(E_L + 2π²E_J))/(2π) in Φ₀².
pub fn reference_variance(params: &CircuitParams) -> f64 {
    if !params.deep_well() {
        log::warn!(
            "reference_variance outside the deep-well regime (E_L/E_C = {:.3e}, E_J/E_C = {:.3e})",
            params.e_l / params.e_c,
            params.e_j / params.e_c
        );
    }
    (params.e_c / (params.e_l + 2.0 * PI * PI * params.e_j)).sqrt() / (2.0 * PI)
}

/// Effective size of an ideal cat with flux variance `cat_variance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdealEffectiveSize {
    /// cat_variance / reference_variance.
    pub ratio: f64,
    /// The closed form 0.86π√((E_L + 2π²E_J)/E_C), i.e. the ratio for a cat
    /// variance of 0.655² Φ₀² rounded into a prefactor.
    pub printed_approximation: f64,
    /// Dominant-E_J limit 2√2 π² √(E_J/E_C).
    pub dominant_josephson: f64,
}

pub fn ideal_effective_size(params: &CircuitParams, cat_variance: f64) -> Result<IdealEffectiveSize> {
    if !(cat_variance > 0.0) {
        return Err(Error::Domain(format!("cat variance {cat_variance} must be > 0")));
    }
    Ok(IdealEffectiveSize {
        ratio: cat_variance / reference_variance(params),
        printed_approximation: 0.86
            * PI
            * ((params.e_l + 2.0 * PI * PI * params.e_j) / params.e_c).sqrt(),
        dominant_josephson: 2.0 * 2f64.sqrt() * PI * PI * (params.e_j / params.e_c).sqrt(),
    })
}

/// Reduced description of a three-junction (Delft-type) flux qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeJunctionParams {
    pub e_j_over_e_c: f64,
    /// Josephson energy of the smaller junction relative to the two identical ones.
    pub alpha: f64,
}

impl ThreeJunctionParams {
    /// van der Wal et al. (Delft, 2000): E_J/E_C = 38, α = 0.8.
    pub fn delft2000() -> Self {
        Self {
            e_j_over_e_c: 38.0,
            alpha: 0.8,
        }
    }
}

/// 4 arccos²(1/2α) √(4α + 2) √(E_J/E_C).
pub fn delft_effective_size(p: &ThreeJunctionParams) -> Result<f64> {
    if !(p.alpha > 0.5) {
        return Err(Error::Domain(format!("alpha = {} must exceed 1/2", p.alpha)));
    }
    if !(p.e_j_over_e_c >= 0.0) {
        return Err(Error::Domain(format!("E_J/E_C = {} must be >= 0", p.e_j_over_e_c)));
    }
    let a = (1.0 / (2.0 * p.alpha)).acos();
    Ok(4.0 * a * a * (4.0 * p.alpha + 2.0).sqrt() * p.e_j_over_e_c.sqrt())
}
