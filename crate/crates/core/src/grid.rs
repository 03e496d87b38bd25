//! Uniform flux grids, states sampled on them, and the finite-difference
//! Schrödinger solver used as an independent check of the oscillator-basis
//! spectrum.

use std::f64::consts::PI;
use std::path::Path;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::circuit::CircuitParams;
use crate::error::{Error, Result};
use crate::linalg::SymTridiagonal;
use crate::output::{self, CsvTable};
use crate::spectrum::HoBasisConfig;

pub const MIN_POINTS: usize = 256;
pub const NORM_TOL: f64 = 1e-10;
/// Edge density relative to the peak above which a state is considered cut off.
pub const LEAK_TOL: f64 = 1e-12;
/// Largest trace weight `project_to_basis` may discard.
pub const MAX_TRUNCATION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxGrid {
    pub phi_min: f64,
    pub phi_max: f64,
    pub n_points: usize,
}

impl FluxGrid {
    pub fn new(phi_min: f64, phi_max: f64, n_points: usize) -> Result<Self> {
        let g = Self {
            phi_min,
            phi_max,
            n_points,
        };
        g.validate()?;
        Ok(g)
    }

    /// [−1, 2] with 2048 points: both wells near φ_x = ½ plus generous tails.
    pub fn standard() -> Self {
        Self {
            phi_min: -1.0,
            phi_max: 2.0,
            n_points: 2048,
        }
    }

    /// [−1.5, 2.5] with 4096 points, the finite-difference oracle's grid.
    pub fn oracle() -> Self {
        Self {
            phi_min: -1.5,
            phi_max: 2.5,
            n_points: 4096,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.phi_min.is_finite() && self.phi_max.is_finite()) || self.phi_min >= self.phi_max {
            return Err(Error::InvalidGrid(format!(
                "need phi_min < phi_max, got [{}, {}]",
                self.phi_min, self.phi_max
            )));
        }
        if self.n_points < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "n_points = {} below the minimum {MIN_POINTS}",
                self.n_points
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        (self.phi_max - self.phi_min) / (self.n_points - 1) as f64
    }

    pub fn phi(&self, i: usize) -> f64 {
        self.phi_min + i as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.phi(i)).collect()
    }

    /// Same interval with half the spacing.
    pub fn refined(&self) -> Self {
        Self {
            n_points: 2 * self.n_points - 1,
            ..*self
        }
    }
}

#[derive(Debug, Clone)]
pub enum GridData {
    Pure(Vec<f64>),
    /// ρ(φ_i, φ_j), normalized so that Σ ρ_ii Δφ = 1.
    Mixed(Mat<f64>),
}

#[derive(Debug, Clone)]
pub struct GridState {
    pub grid: FluxGrid,
    pub data: GridData,
}

impl GridState {
    pub fn pure(grid: FluxGrid, psi: Vec<f64>) -> Result<Self> {
        if psi.len() != grid.n_points {
            return Err(Error::InvalidDensity(format!(
                "{} amplitudes for {} grid points",
                psi.len(),
                grid.n_points
            )));
        }
        let norm = psi.iter().map(|v| v * v).sum::<f64>() * grid.spacing();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidDensity(format!("norm {norm}")));
        }
        Ok(Self {
            grid,
            data: GridData::Pure(psi),
        })
    }

    /// Rescales `psi` to unit grid norm.
    pub fn pure_normalized(grid: FluxGrid, mut psi: Vec<f64>) -> Result<Self> {
        let norm = psi.iter().map(|v| v * v).sum::<f64>() * grid.spacing();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidDensity(format!("norm {norm}")));
        }
        let s = norm.sqrt().recip();
        psi.iter_mut().for_each(|v| *v *= s);
        Self::pure(grid, psi)
    }

    pub fn mixed(grid: FluxGrid, rho: Mat<f64>) -> Result<Self> {
        let n = grid.n_points;
        if rho.nrows() != n || rho.ncols() != n {
            return Err(Error::InvalidDensity(format!(
                "{}x{} matrix on a {n}-point grid",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let trace = (0..n).map(|i| rho[(i, i)]).sum::<f64>() * grid.spacing();
        if (trace - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidDensity(format!("trace {trace}")));
        }
        let scale = rho.norm_max().max(f64::MIN_POSITIVE);
        for j in 0..n {
            for i in 0..j {
                if (rho[(i, j)] - rho[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidDensity("not symmetric".into()));
                }
            }
        }
        Ok(Self {
            grid,
            data: GridData::Mixed(rho),
        })
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.data, GridData::Pure(_))
    }

    /// Probability density ρ(φ_i, φ_i).
    pub fn density(&self) -> Vec<f64> {
        match &self.data {
            GridData::Pure(psi) => psi.iter().map(|v| v * v).collect(),
            GridData::Mixed(rho) => (0..self.grid.n_points).map(|i| rho[(i, i)]).collect(),
        }
    }

    /// (⟨φ⟩, var φ) by trapezoid sums.
    pub fn flux_moments(&self) -> (f64, f64) {
        let h = self.grid.spacing();
        let p = self.density();
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (i, &w) in p.iter().enumerate() {
            let phi = self.grid.phi(i);
            m1 += w * phi * h;
            m2 += w * phi * phi * h;
        }
        (m1, m2 - m1 * m1)
    }

    pub fn flux_variance(&self) -> f64 {
        self.flux_moments().1
    }

    /// Probability of finding φ below `phi`.
    pub fn weight_below(&self, phi: f64) -> f64 {
        let h = self.grid.spacing();
        self.density()
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.phi(*i) < phi)
            .map(|(_, w)| w * h)
            .sum()
    }

    /// Dense ρ(φ_i, φ_j); a pure state becomes ψψᵀ.
    pub fn to_matrix(&self) -> Mat<f64> {
        match &self.data {
            GridData::Pure(psi) => Mat::from_fn(psi.len(), psi.len(), |i, j| psi[i] * psi[j]),
            GridData::Mixed(rho) => rho.clone(),
        }
    }

    /// Indices where the density exceeds `rel` times its maximum, as one
    /// contiguous range.
    pub fn support(&self, rel: f64) -> std::ops::Range<usize> {
        let p = self.density();
        let peak = p.iter().cloned().fold(0.0, f64::max);
        let cut = rel * peak;
        let first = p.iter().position(|&w| w > cut).unwrap_or(0);
        let last = p.iter().rposition(|&w| w > cut).unwrap_or(p.len() - 1);
        first..last + 1
    }

    /// Writes `phi,psi` for a pure state, or `phi,density` for a mixed one.
    pub fn write_csv(&self, path: &Path, metadata: &[String]) -> Result<()> {
        let (col, values) = match &self.data {
            GridData::Pure(psi) => ("psi", psi.clone()),
            GridData::Mixed(_) => ("density", self.density()),
        };
        let mut t = CsvTable::new(["phi", col]);
        t.metadata.extend(metadata.iter().cloned());
        for (i, v) in values.into_iter().enumerate() {
            t.push(vec![self.grid.phi(i), v]);
        }
        t.write(path)
    }

    /// Raw little-endian f64 matrix, row-major, plus a `<path>.json` sidecar
    /// holding the grid.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let rho = self.to_matrix();
        let n = self.grid.n_points;
        let mut bytes = Vec::with_capacity(8 * n * n);
        for i in 0..n {
            for j in 0..n {
                bytes.extend_from_slice(&rho[(i, j)].to_le_bytes());
            }
        }
        output::write_file(path, &bytes)?;
        let mut sidecar = path.as_os_str().to_owned();
        sidecar.push(".json");
        output::write_json(Path::new(&sidecar), &self.grid)
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut sidecar = path.as_os_str().to_owned();
        sidecar.push(".json");
        let grid: FluxGrid = serde_json::from_str(&std::fs::read_to_string(Path::new(&sidecar))?)?;
        grid.validate()?;
        let bytes = std::fs::read(path)?;
        let n = grid.n_points;
        if bytes.len() != 8 * n * n {
            return Err(Error::InvalidGrid(format!("{} bytes for {n}x{n} matrix", bytes.len())));
        }
        let rho = Mat::from_fn(n, n, |i, j| {
            let k = 8 * (i * n + j);
            f64::from_le_bytes(bytes[k..k + 8].try_into().unwrap())
        });
        Self::mixed(grid, rho)
    }
}

/// Orthonormal oscillator eigenfunctions h_0..h_{dim−1} of width σ₀ about
/// `center`, sampled on the grid: an N × dim matrix.
///
/// The three-term recurrence runs on a rescaled value with a separate log
/// scale, so the Gaussian factor never underflows before it is needed.
pub fn basis_on_grid(grid: &FluxGrid, sigma0: f64, center: f64, dim: usize) -> Mat<f64> {
    const BIG: f64 = 1e100;
    let ln_big = BIG.ln();
    let ln_norm = -0.25 * (2.0 * PI * sigma0 * sigma0).ln();
    let mut b = Mat::<f64>::zeros(grid.n_points, dim);
    for i in 0..grid.n_points {
        let xi = (grid.phi(i) - center) / (2f64.sqrt() * sigma0);
        let mut log_scale = ln_norm - 0.5 * xi * xi;
        let mut prev = 0.0;
        let mut cur = 1.0;
        for n in 0..dim {
            let v = cur * log_scale.exp();
            b[(i, n)] = if v.is_finite() { v } else { 0.0 };
            let nf = n as f64;
            let next = (2.0 / (nf + 1.0)).sqrt() * xi * cur - (nf / (nf + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
            if cur.abs() > BIG {
                cur /= BIG;
                prev /= BIG;
                log_scale += ln_big;
            }
        }
    }
    b
}

pub fn basis_for(params: &CircuitParams, config: &HoBasisConfig, grid: &FluxGrid) -> Mat<f64> {
    basis_on_grid(
        grid,
        params.scales().sigma0_sq.sqrt(),
        config.center_for(params),
        config.dim,
    )
}

/// Samples a state given by oscillator-basis coefficients on the grid.
pub fn to_grid(coeffs: &[f64], params: &CircuitParams, config: &HoBasisConfig, grid: &FluxGrid) -> Result<GridState> {
    grid.validate()?;
    let basis = basis_for(params, config, grid);
    to_grid_with(coeffs, &basis, grid)
}

/// As [`to_grid`] with a precomputed basis matrix.
pub fn to_grid_with(coeffs: &[f64], basis: &Mat<f64>, grid: &FluxGrid) -> Result<GridState> {
    let n = grid.n_points;
    let psi: Vec<f64> = (0..n)
        .map(|i| coeffs.iter().enumerate().map(|(k, c)| c * basis[(i, k)]).sum())
        .collect();
    let peak = psi.iter().map(|v| v * v).fold(0.0, f64::max);
    let edge = (psi[0] * psi[0]).max(psi[n - 1] * psi[n - 1]);
    if edge > LEAK_TOL * peak {
        return Err(Error::BoundaryLeak { ratio: edge / peak });
    }
    GridState::pure_normalized(*grid, psi)
}

#[derive(Debug, Clone)]
pub struct Projection {
    /// Oscillator-basis density matrix, renormalized to unit trace.
    pub rho: Mat<f64>,
    /// Trace weight that fell outside the truncated basis.
    pub discarded: f64,
}

impl Projection {
    /// Tr(ρH).
    pub fn expectation(&self, h: &Mat<f64>) -> f64 {
        let n = self.rho.nrows();
        let mut acc = 0.0;
        for j in 0..n {
            for i in 0..n {
                acc += self.rho[(i, j)] * h[(j, i)];
            }
        }
        acc
    }
}

/// ρ_mn = Σ_ij h_m(φ_i) ρ(φ_i, φ_j) h_n(φ_j) Δφ².
pub fn project_to_basis(gs: &GridState, params: &CircuitParams, config: &HoBasisConfig) -> Result<Projection> {
    let basis = basis_for(params, config, &gs.grid);
    project_with(gs, &basis)
}

/// As [`project_to_basis`] with a precomputed basis matrix.
pub fn project_with(gs: &GridState, basis: &Mat<f64>) -> Result<Projection> {
    let h = gs.grid.spacing();
    let support = gs.support(1e-30);
    let b = basis.as_ref().subrows(support.start, support.len());
    let mut rho = match &gs.data {
        GridData::Pure(psi) => {
            let v = faer::col::from_slice(&psi[support.clone()]);
            let c = b.transpose() * v;
            Mat::from_fn(basis.ncols(), basis.ncols(), |m, n| c[m] * c[n] * h * h)
        }
        GridData::Mixed(full) => {
            let r = full.as_ref().submatrix(support.start, support.start, support.len(), support.len());
            let rb = r * b;
            let mut out = b.transpose() * &rb;
            out *= faer::scale(h * h);
            out
        }
    };
    let trace: f64 = (0..rho.nrows()).map(|i| rho[(i, i)]).sum();
    let discarded = 1.0 - trace;
    if discarded.abs() > MAX_TRUNCATION {
        return Err(Error::TruncationLoss { discarded });
    }
    rho *= faer::scale(1.0 / trace);
    Ok(Projection { rho, discarded })
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Richardson-extrapolated eigenvalues from spacings h and h/2.
    pub energies: Vec<f64>,
    /// Plain second-order eigenvalues on the input grid.
    pub energies_coarse: Vec<f64>,
    /// Eigenfunctions on the input grid, unit trapezoid norm, largest lobe positive.
    pub states: Vec<Vec<f64>>,
    pub grid: FluxGrid,
}

/// Lowest `n_levels` eigenpairs of −κ d²/dφ² + U(φ) with Dirichlet walls,
/// discretized by the three-point stencil.
///
/// The stencil error is O(h²), so the eigenvalues from the given grid and
/// its refinement are combined as (4E_{h/2} − E_h)/3.
pub fn finite_difference_oracle(params: &CircuitParams, grid: &FluxGrid, n_levels: usize) -> Result<OracleResult> {
    params.validate()?;
    grid.validate()?;
    let sigma0 = params.scales().sigma0_sq.sqrt();
    let required = sigma0 / 8.0;
    if grid.spacing() >= required {
        return Err(Error::Resolution {
            spacing: grid.spacing(),
            required,
        });
    }
    if n_levels == 0 || n_levels > grid.n_points {
        return Err(Error::Domain(format!("n_levels = {n_levels}")));
    }
    let coarse = stencil(params, grid);
    let fine = stencil(params, &grid.refined());
    let energies_coarse = coarse.lowest(n_levels);
    let energies_fine = fine.lowest(n_levels);
    let energies = energies_coarse
        .iter()
        .zip(&energies_fine)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect();

    // unit Euclidean vectors first; the reorthogonalization relies on it
    let mut states: Vec<Vec<f64>> = Vec::with_capacity(n_levels);
    for &e in &energies_coarse {
        let prev: Vec<&[f64]> = states.iter().map(Vec::as_slice).collect();
        let v = coarse.eigenvector(e, &prev);
        states.push(v);
    }
    let scale = grid.spacing().sqrt().recip();
    for v in &mut states {
        let peak = v.iter().cloned().fold(0.0, |a: f64, x| if x.abs() > a.abs() { x } else { a });
        let s = peak.signum() * scale;
        v.iter_mut().for_each(|x| *x *= s);
    }
    Ok(OracleResult {
        energies,
        energies_coarse,
        states,
        grid: *grid,
    })
}

fn stencil(params: &CircuitParams, grid: &FluxGrid) -> SymTridiagonal {
    let h = grid.spacing();
    let k = params.kinetic_coefficient() / (h * h);
    let diag = (0..grid.n_points).map(|i| 2.0 * k + params.potential(grid.phi(i))).collect();
    let off = vec![-k; grid.n_points - 1];
    SymTridiagonal::new(diag, off)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::diagonalize;

    #[test]
    fn grid_validation() {
        assert!(FluxGrid::new(0.0, 1.0, 255).is_err());
        assert!(FluxGrid::new(1.0, 1.0, 512).is_err());
        let g = FluxGrid::new(-1.0, 2.0, 2048).unwrap();
        assert!((g.phi(2047) - 2.0).abs() < 1e-15);
        assert_eq!(g.refined().n_points, 4095);
        assert!((g.refined().spacing() * 2.0 - g.spacing()).abs() < 1e-16);
    }

    #[test]
    fn lc_ground_state_is_gaussian() {
        let p = CircuitParams::suny2000();
        let cfg = HoBasisConfig::new(64);
        let mut c = vec![0.0; 64];
        c[0] = 1.0;
        let gs = to_grid(&c, &p, &cfg, &FluxGrid::standard()).unwrap();
        let (mean, var) = gs.flux_moments();
        assert!((mean - 0.5).abs() < 1e-12);
        assert!((var / p.scales().sigma0_sq - 1.0).abs() < 1e-10);
    }

    #[test]
    fn basis_orthonormal_on_grid() {
        let p = CircuitParams::suny2000();
        let g = FluxGrid::standard();
        let b = basis_for(&p, &HoBasisConfig::new(512), &g);
        let gram = b.transpose() * &b;
        let h = g.spacing();
        for i in (0..512).step_by(37) {
            for j in (0..512).step_by(41) {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] * h - expected).abs() < 1e-9, "({i},{j}) {}", gram[(i, j)] * h);
            }
        }
    }

    #[test]
    fn parseval_for_eigenstates() {
        let p = CircuitParams::suny2000();
        let cfg = HoBasisConfig::new(512);
        let r = diagonalize(&p, &cfg).unwrap();
        let g = FluxGrid::standard();
        let basis = basis_for(&p, &cfg, &g);
        for k in [0, 1, 20, 47] {
            let c = r.coefficients(k);
            let psi: Vec<f64> = (0..g.n_points)
                .map(|i| c.iter().enumerate().map(|(n, cn)| cn * basis[(i, n)]).sum())
                .collect();
            let norm: f64 = psi.iter().map(|v| v * v).sum::<f64>() * g.spacing();
            assert!((norm - 1.0).abs() < 1e-8, "state {k}: {norm}");
        }
    }

    #[test]
    fn boundary_leak_detected() {
        let p = CircuitParams::suny2000();
        let cfg = HoBasisConfig::new(64);
        let mut c = vec![0.0; 64];
        c[0] = 1.0;
        let narrow = FluxGrid::new(0.45, 0.55, 512).unwrap();
        assert!(matches!(to_grid(&c, &p, &cfg, &narrow), Err(Error::BoundaryLeak { .. })));
    }

    #[test]
    fn projection_round_trip() {
        let p = CircuitParams::suny2000();
        let cfg = HoBasisConfig::new(512);
        let r = diagonalize(&p, &cfg).unwrap();
        let g = FluxGrid::standard();
        let c = r.coefficients(47);
        let gs = to_grid(&c, &p, &cfg, &g).unwrap();
        let proj = project_to_basis(&gs, &p, &cfg).unwrap();
        let mut fidelity = 0.0;
        for m in 0..512 {
            for n in 0..512 {
                fidelity += c[m] * proj.rho[(m, n)] * c[n];
            }
        }
        assert!(fidelity > 1.0 - 1e-8, "{fidelity}");
        let h = crate::spectrum::build_hamiltonian(&p, &cfg).unwrap();
        let e = proj.expectation(&h);
        assert!((e / r.energies[47] - 1.0).abs() < 1e-9);

        let mixed = GridState::mixed(g, gs.to_matrix()).unwrap();
        let proj2 = project_to_basis(&mixed, &p, &cfg).unwrap();
        assert!((proj2.expectation(&h) - e).abs() < 1e-8 * e);
    }

    #[test]
    fn oracle_lc_ladder() {
        let p = CircuitParams::new(0.188, 13_000.0, 0.0, 0.5).unwrap();
        let o = finite_difference_oracle(&p, &FluxGrid::new(0.0, 1.0, 2048).unwrap(), 11).unwrap();
        let hw = p.scales().hbar_omega;
        for (k, e) in o.energies.iter().enumerate() {
            let exact = hw * (k as f64 + 0.5);
            assert!((e / exact - 1.0).abs() < 1e-6, "k={k}: {e} vs {exact}");
        }
    }

    #[test]
    fn oracle_rejects_coarse_grid() {
        let p = CircuitParams::suny2000();
        let g = FluxGrid::new(-1.0, 2.0, 256).unwrap();
        assert!(matches!(finite_difference_oracle(&p, &g, 4), Err(Error::Resolution { .. })));
    }

    #[test]
    fn oracle_states_have_parity_at_symmetry_point() {
        // shallow enough that the lowest doublets are split well above rounding
        let p = CircuitParams::new(5.0, 1_000.0, 300.0, 0.5).unwrap();
        let g = FluxGrid::new(-0.5, 1.5, 1025).unwrap();
        let o = finite_difference_oracle(&p, &g, 6).unwrap();
        let n = g.n_points;
        for (k, v) in o.states.iter().enumerate() {
            let even: f64 = (0..n).map(|i| v[i] * v[n - 1 - i]).sum::<f64>() * g.spacing();
            assert!((even.abs() - 1.0).abs() < 1e-8, "state {k}: overlap with mirror {even}");
        }
    }

    #[test]
    fn binary_round_trip() {
        let g = FluxGrid::new(0.0, 1.0, 256).unwrap();
        let psi: Vec<f64> = g.points().iter().map(|x| (-(x - 0.5f64).powi(2) / 0.005).exp()).collect();
        let gs = GridState::pure_normalized(g, psi).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rho.bin");
        gs.write_binary(&path).unwrap();
        let back = GridState::read_binary(&path).unwrap();
        assert_eq!(back.grid, g);
        let a = gs.to_matrix();
        let GridData::Mixed(b) = back.data else { panic!() };
        assert_eq!((&a - &b).norm_max(), 0.0);
    }
}
