//! Gaussian flux dephasing, the spectral formula for the quantum coherence
//! I(ρ, Φ) (a quarter of the quantum Fisher information), and the effective
//! size relative to a single-well reference state.

use faer::Mat;
use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::CircuitParams;
use crate::error::{Error, Result};
use crate::grid::{self, FluxGrid, GridData, GridState};
use crate::linalg;
use crate::spectrum::{self, find_target_states, HoBasisConfig, SpectralResult, TargetPair};

/// Eigenvalues of ρΔφ below this are treated as zero.
pub const EIGEN_FLOOR: f64 = 1e-12;
/// Eigenvalues below minus this mean ρ is not a density matrix.
pub const NEGATIVE_TOL: f64 = 1e-10;
/// Grid rows whose density is below this fraction of the peak are dropped
/// before the eigendecomposition.
const SUPPORT_REL: f64 = 1e-30;

/// ρ(φ, φ′) → exp(−(φ − φ′)²/(2Γ²)) ρ(φ, φ′).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DephasingChannel {
    pub gamma: f64,
}

impl DephasingChannel {
    /// `gamma = ∞` is the identity channel.
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::Domain(format!("correlation length {gamma} must be > 0")));
        }
        Ok(Self { gamma })
    }

    pub fn identity() -> Self {
        Self { gamma: f64::INFINITY }
    }

    pub fn kernel(&self, dphi: f64) -> f64 {
        if self.gamma.is_infinite() {
            1.0
        } else {
            (-dphi * dphi / (2.0 * self.gamma * self.gamma)).exp()
        }
    }

    /// Kernels multiply, so 1/Γ² adds.
    pub fn then(&self, other: &Self) -> Self {
        let inv = self.gamma.powi(-2) + other.gamma.powi(-2);
        Self { gamma: inv.sqrt().recip() }
    }
}

/// Applies the channel elementwise. A pure input is promoted to ψψᵀ.
///
/// The kernel is a Gaussian of φ − φ′ and hence positive semidefinite, so
/// positivity is preserved; [`quantum_coherence`] checks it on use.
pub fn dephase(gs: &GridState, ch: &DephasingChannel) -> GridState {
    let n = gs.grid.n_points;
    let h = gs.grid.spacing();
    let k: Vec<f64> = (0..n).map(|m| ch.kernel(m as f64 * h)).collect();
    let rho = match &gs.data {
        GridData::Pure(psi) => Mat::from_fn(n, n, |i, j| psi[i] * psi[j] * k[i.abs_diff(j)]),
        GridData::Mixed(r) => Mat::from_fn(n, n, |i, j| r[(i, j)] * k[i.abs_diff(j)]),
    };
    GridState {
        grid: gs.grid,
        data: GridData::Mixed(rho),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coherence {
    /// I(ρ, Φ) in Φ₀².
    pub value: f64,
    /// Eigenvalue mass of ρ left out of the spectral sum.
    pub weight_cut: f64,
}

/// I(ρ, Φ) = Σ_{i<j} (λ_i − λ_j)²/(λ_i + λ_j) |⟨ψ_i|Φ|ψ_j⟩|².
///
/// Pairs with one index in the numerical null space contribute
/// λ_i |⟨ψ_i|Φ|ψ_j⟩|²; they are summed through completeness as
/// λ_i (⟨ψ_i|Φ²|ψ_i⟩ − Σ_{j kept} |⟨ψ_i|Φ|ψ_j⟩|²).
pub fn quantum_coherence(gs: &GridState) -> Result<Coherence> {
    let h = gs.grid.spacing();
    let (mean, var) = gs.flux_moments();
    let rho = match &gs.data {
        GridData::Pure(_) => return Ok(Coherence { value: var, weight_cut: 0.0 }),
        GridData::Mixed(r) => r,
    };
    let support = gs.support(SUPPORT_REL);
    let s = support.len();
    let outside: f64 = (0..gs.grid.n_points)
        .filter(|i| !support.contains(i))
        .map(|i| rho[(i, i)] * h)
        .sum();
    let a = Mat::from_fn(s, s, |i, j| rho[(support.start + i, support.start + j)] * h);
    let eig = linalg::eigensolve(&a)?;
    if let Some(&min) = eig.values.first() {
        if min < -NEGATIVE_TOL {
            return Err(Error::InvalidDensity(format!("eigenvalue {min:.3e}")));
        }
    }
    let trace: f64 = eig.values.iter().sum();
    if (trace + outside - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidDensity(format!("trace {}", trace + outside)));
    }
    let kept: Vec<usize> = (0..s).filter(|&i| eig.values[i] >= EIGEN_FLOOR).collect();
    let weight_cut = outside
        + (0..s)
            .filter(|&i| eig.values[i] < EIGEN_FLOOR)
            .map(|i| eig.values[i].abs())
            .sum::<f64>();

    // centered flux keeps Φ² free of cancellation
    let x: Vec<f64> = (0..s).map(|k| gs.grid.phi(support.start + k) - mean).collect();
    let nk = kept.len();
    let u = Mat::from_fn(s, nk, |k, c| eig.vectors[(k, kept[c])]);
    let xu = Mat::from_fn(s, nk, |k, c| x[k] * u[(k, c)]);
    let xm = u.transpose() * &xu;
    let lam: Vec<f64> = kept.iter().map(|&i| eig.values[i]).collect();

    let mut value = 0.0;
    for i in 0..nk {
        let x2: f64 = (0..s).map(|k| xu[(k, i)] * xu[(k, i)]).sum();
        let mut inside = 0.0;
        for j in 0..nk {
            let xij = xm[(i, j)];
            inside += xij * xij;
            if j > i {
                let d = lam[i] - lam[j];
                value += d * d / (lam[i] + lam[j]) * xij * xij;
            }
        }
        value += lam[i] * (x2 - inside).max(0.0);
    }
    if value > var * (1.0 + 1e-9) + 1e-15 {
        log::warn!("coherence {value:e} exceeds variance {var:e}");
    }
    Ok(Coherence { value, weight_cut })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherenceReport {
    pub variance: f64,
    pub coherence_i: f64,
    pub i_rel: f64,
    pub energy: f64,
    pub spectrum_weight_cut: f64,
}

/// Flux variance of the single-well ground state at φ_x = 0, from the
/// oscillator-basis solver.
pub fn reference_state_variance(params: &CircuitParams, dim: usize) -> Result<f64> {
    let p = params.with_phi_x(0.0);
    let r = spectrum::diagonalize(&p, &HoBasisConfig::new(dim))?;
    Ok(r.flux_moments(0).1)
}

/// Everything needed to analyze states of one circuit at one bias: the
/// diagonalized Hamiltonian, the oscillator basis sampled on the grid, and
/// the reference variance.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub spectrum: SpectralResult,
    pub hamiltonian: Mat<f64>,
    pub basis: Mat<f64>,
    pub grid: FluxGrid,
    pub var_ref: f64,
}

impl Workspace {
    pub fn new(params: &CircuitParams, config: &HoBasisConfig, grid: &FluxGrid) -> Result<Self> {
        let var_ref = reference_state_variance(params, config.dim)?;
        Self::with_reference(params, config, grid, var_ref)
    }

    pub fn with_reference(params: &CircuitParams, config: &HoBasisConfig, grid: &FluxGrid, var_ref: f64) -> Result<Self> {
        grid.validate()?;
        let hamiltonian = spectrum::build_hamiltonian(params, config)?;
        let spectrum = spectrum::eigensolve(&hamiltonian, params, config)?;
        let basis = grid::basis_for(params, config, grid);
        Ok(Self {
            spectrum,
            hamiltonian,
            basis,
            grid: *grid,
            var_ref,
        })
    }

    pub fn params(&self) -> &CircuitParams {
        &self.spectrum.params
    }

    /// Eigenstate k on the grid.
    pub fn eigenstate(&self, k: usize) -> Result<GridState> {
        self.coefficients_to_grid(&self.spectrum.coefficients(k))
    }

    pub fn coefficients_to_grid(&self, c: &[f64]) -> Result<GridState> {
        grid::to_grid_with(c, &self.basis, &self.grid)
    }

    /// Tr(ρH) after projecting onto the oscillator basis.
    pub fn energy(&self, gs: &GridState) -> Result<(f64, f64)> {
        let proj = grid::project_with(gs, &self.basis)?;
        Ok((proj.expectation(&self.hamiltonian), proj.discarded))
    }

    pub fn report(&self, gs: &GridState) -> Result<CoherenceReport> {
        let c = quantum_coherence(gs)?;
        let (energy, _) = self.energy(gs)?;
        Ok(CoherenceReport {
            variance: gs.flux_variance(),
            coherence_i: c.value,
            i_rel: c.value / self.var_ref,
            energy,
            spectrum_weight_cut: c.weight_cut,
        })
    }

    /// √(ħ/(Cω)) = √2 σ₀, the zero-point correlation length of the LC mode.
    pub fn zero_point_gamma(&self) -> f64 {
        (2.0 * self.params().scales().sigma0_sq).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DephasingRow {
    pub gamma: f64,
    pub gamma_over_sigma_ref: f64,
    pub i_rel_0: f64,
    pub i_rel_1: f64,
    /// E₁ − E₀ of the dephased states.
    pub delta_e: f64,
    /// 1 − ΔE/ΔE₀.
    pub gap_rel_diff: f64,
    pub e0_dephased: f64,
    pub e1_dephased: f64,
    pub weight_cut: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DephasingTable {
    pub targets: TargetPair,
    pub var_ref: f64,
    /// Undephased E₁ − E₀.
    pub delta_e0: f64,
    pub rows: Vec<DephasingRow>,
}

/// Dephases both states of the target doublet at every Γ (in Φ₀) and
/// records their effective sizes and dephased energies.
pub fn coherence_vs_gamma(ws: &Workspace, targets: TargetPair, gammas: &[f64]) -> Result<DephasingTable> {
    let s0 = ws.eigenstate(targets.lower)?;
    let s1 = ws.eigenstate(targets.upper)?;
    let delta_e0 = ws.spectrum.energies[targets.upper] - ws.spectrum.energies[targets.lower];
    let sigma_ref = ws.var_ref.sqrt();
    let rows = gammas
        .par_iter()
        .map(|&gamma| {
            let ch = DephasingChannel::new(gamma)?;
            let r0 = ws.report(&dephase(&s0, &ch))?;
            let r1 = ws.report(&dephase(&s1, &ch))?;
            let delta_e = r1.energy - r0.energy;
            Ok(DephasingRow {
                gamma,
                gamma_over_sigma_ref: gamma / sigma_ref,
                i_rel_0: r0.i_rel,
                i_rel_1: r1.i_rel,
                delta_e,
                gap_rel_diff: 1.0 - delta_e / delta_e0,
                e0_dephased: r0.energy,
                e1_dephased: r1.energy,
                weight_cut: r0.spectrum_weight_cut.max(r1.spectrum_weight_cut),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DephasingTable {
        targets,
        var_ref: ws.var_ref,
        delta_e0,
        rows,
    })
}

/// As [`coherence_vs_gamma`] with the targets picked by
/// [`find_target_states`].
pub fn coherence_vs_gamma_auto(ws: &Workspace, gammas: &[f64]) -> Result<DephasingTable> {
    let targets = find_target_states(&ws.spectrum)?;
    coherence_vs_gamma(ws, targets, gammas)
}

/// `points` values log-spaced over [lo, hi] inclusive.
pub fn log_ladder(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    spectrum::linspace(lo.ln(), hi.ln(), points)
        .into_iter()
        .map(f64::exp)
        .collect()
}
