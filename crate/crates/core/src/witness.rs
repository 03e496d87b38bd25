//! Certified lower bounds on I(ρ, Φ) from two measured outcome
//! distributions: one of ρ, one after flux-generated dynamics.
//!
//! For a unitary V_t = e^{−iΦt} the Bhattacharyya coefficient B bounds the
//! fidelity, and I ≥ arccos²(B)/t². When t is random with density μ(t), the
//! chain B ≥ F(ρ, 𝓔(ρ)) ≥ f(I) with
//!
//! ```text
//! f(I) = ∫_{|t| ≤ π/(2√I)} μ(t) cos(√I t) dt
//! ```
//!
//! holds, and since f decreases the bound is found by inverting f at B.
//!
//! Flux-bin projectors commute with V_t, so flux-binned statistics never
//! change and certify nothing. The measurements offered here are therefore
//! charge bins (the conjugate variable) and projectors onto given states.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{FluxGrid, GridData, GridState};
use crate::quad;

pub const NORM_TOL: f64 = 1e-9;
pub const BISECTION_STEPS: usize = 64;
pub const I_FLOOR: f64 = 1e-12;
const QUAD_TOL: f64 = 1e-12;
/// Gaussian μ(t) is integrated over at most ±this many standard deviations.
const GAUSS_CLIP: f64 = 40.0;
const MONOTONE_SAMPLES: usize = 65;
const MONOTONE_SLACK: f64 = 2e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeDistribution {
    pub probabilities: Vec<f64>,
    /// Outcome bin edges in the measured variable (len = outcomes + 1).
    pub edges: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn new(probabilities: Vec<f64>, edges: Vec<f64>) -> Result<Self> {
        if edges.len() != probabilities.len() + 1 {
            return Err(Error::InvalidDistribution(format!(
                "{} edges for {} outcomes",
                edges.len(),
                probabilities.len()
            )));
        }
        if let Some(p) = probabilities.iter().find(|p| !(**p >= 0.0)) {
            return Err(Error::InvalidDistribution(format!("probability {p}")));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        Ok(Self { probabilities, edges })
    }

    /// Clips round-off negatives to zero before validating.
    fn from_raw(raw: Vec<f64>, edges: Vec<f64>) -> Result<Self> {
        let p = raw.into_iter().map(|x| if x < 0.0 && x > -1e-12 { 0.0 } else { x }).collect();
        Self::new(p, edges)
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    /// Merges neighbouring outcomes pairwise (a trailing odd one stays alone).
    pub fn coarsen(&self) -> Self {
        let p = self.probabilities.chunks(2).map(|c| c.iter().sum()).collect();
        let mut edges: Vec<f64> = self.edges.iter().step_by(2).cloned().collect();
        if self.edges.len() % 2 == 0 {
            edges.push(*self.edges.last().unwrap());
        }
        Self { probabilities: p, edges }
    }
}

/// B = Σ_k √(p_k q_k).
pub fn bhattacharyya(p: &OutcomeDistribution, q: &OutcomeDistribution) -> Result<f64> {
    if p.edges != q.edges {
        return Err(Error::BinningMismatch);
    }
    let b: f64 = p
        .probabilities
        .iter()
        .zip(&q.probabilities)
        .map(|(a, b)| (a * b).sqrt())
        .sum();
    Ok(b.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMethod {
    ExactUnitary,
    NumericInversion,
    WeakDephasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessBound {
    pub b: f64,
    /// Certified lower bound on I(ρ, Φ), Φ₀².
    pub bound_i: f64,
    pub method: BoundMethod,
}

fn check_b(b: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::Domain(format!("Bhattacharyya coefficient {b} outside [0, 1]")));
    }
    Ok(())
}

/// I ≥ arccos²(B)/t².
pub fn unitary_bound(b: f64, t: f64) -> Result<WitnessBound> {
    check_b(b)?;
    if t == 0.0 {
        return Err(Error::ZeroTime);
    }
    let a = b.acos();
    Ok(WitnessBound {
        b,
        bound_i: a * a / (t * t),
        method: BoundMethod::ExactUnitary,
    })
}

/// Distribution of the evolution time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TimeDistribution {
    Delta { t0: f64 },
    /// Normal with standard deviation 1/Γ_w, so that averaging e^{−iΦt}
    /// dephases with correlation length Γ_w.
    Gaussian { gamma_w: f64 },
}

impl TimeDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TimeDistribution::Delta { t0 } if t0.is_finite() => Ok(()),
            TimeDistribution::Gaussian { gamma_w } if gamma_w > 0.0 => Ok(()),
            other => Err(Error::Domain(format!("invalid time distribution {other:?}"))),
        }
    }

    fn is_trivial(&self) -> bool {
        match *self {
            TimeDistribution::Delta { t0 } => t0 == 0.0,
            TimeDistribution::Gaussian { gamma_w } => gamma_w.is_infinite(),
        }
    }

    /// f(I) = ∫_{|t| ≤ π/(2√I)} μ(t) cos(√I t) dt.
    pub fn window_integral(&self, i: f64) -> f64 {
        let w = i.sqrt();
        let half = PI / (2.0 * w);
        match *self {
            TimeDistribution::Delta { t0 } => {
                if t0.abs() <= half {
                    (w * t0).cos()
                } else {
                    0.0
                }
            }
            TimeDistribution::Gaussian { gamma_w } => {
                let sigma = gamma_w.recip();
                let upper = half.min(GAUSS_CLIP * sigma);
                let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
                let g = |t: f64| norm * (-0.5 * (t / sigma).powi(2)).exp() * (w * t).cos();
                2.0 * quad::integrate(g, 0.0, upper, 0.5 * QUAD_TOL).value
            }
        }
    }

    /// ∫ μ(t) e^{−iΔt} dt for a flux difference Δ; the Gaussian case by
    /// quadrature of its (even) real part.
    pub fn characteristic(&self, delta: f64) -> Complex64 {
        match *self {
            TimeDistribution::Delta { t0 } => Complex64::from_polar(1.0, -delta * t0),
            TimeDistribution::Gaussian { gamma_w } => {
                let sigma = gamma_w.recip();
                let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
                let g = |t: f64| norm * (-0.5 * (t / sigma).powi(2)).exp() * (delta * t).cos();
                Complex64::new(2.0 * quad::integrate(g, 0.0, GAUSS_CLIP * sigma, 0.5 * QUAD_TOL).value, 0.0)
            }
        }
    }
}

/// Certified I from B under random evolution time μ: the smallest I with
/// f(I) ≤ B, located by bisection in log I over [1e-12, i_max].
pub fn averaged_bound(b: f64, mu: &TimeDistribution, i_max: f64) -> Result<WitnessBound> {
    check_b(b)?;
    mu.validate()?;
    if !(i_max > I_FLOOR) {
        return Err(Error::Domain(format!("i_max = {i_max} must exceed {I_FLOOR}")));
    }
    let zero = WitnessBound {
        b,
        bound_i: 0.0,
        method: BoundMethod::NumericInversion,
    };
    // f(0⁺) = 1
    if b >= 1.0 || mu.is_trivial() {
        return Ok(zero);
    }
    check_monotone(mu, i_max)?;
    let f = |i: f64| mu.window_integral(i);
    if f(I_FLOOR) <= b {
        return Ok(zero);
    }
    if f(i_max) > b {
        log::warn!("f(i_max) = {} still above B = {b}; bound capped at i_max", f(i_max));
        return Ok(WitnessBound { bound_i: i_max, ..zero });
    }
    let (mut lo, mut hi) = (I_FLOOR.ln(), i_max.ln());
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if f(mid.exp()) > b {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(WitnessBound {
        bound_i: lo.exp(),
        ..zero
    })
}

fn check_monotone(mu: &TimeDistribution, i_max: f64) -> Result<()> {
    let (a, z) = (I_FLOOR.ln(), i_max.ln());
    let mut prev = f64::INFINITY;
    for k in 0..MONOTONE_SAMPLES {
        let i = (a + (z - a) * k as f64 / (MONOTONE_SAMPLES - 1) as f64).exp();
        let v = mu.window_integral(i);
        if v > prev + MONOTONE_SLACK {
            return Err(Error::MonotonicityViolation { at: i });
        }
        prev = v;
    }
    Ok(())
}

/// I ≳ 2Γ_w² ln(1/B), the small-I limit of the Gaussian-time bound.
pub fn weak_dephasing_bound(b: f64, gamma_w: f64) -> Result<WitnessBound> {
    check_b(b)?;
    if b == 0.0 {
        return Err(Error::UnboundedWeakBound);
    }
    Ok(WitnessBound {
        b,
        bound_i: 2.0 * gamma_w * gamma_w * (1.0 / b).ln(),
        method: BoundMethod::WeakDephasing,
    })
}

/// Largest flux variance any state on the grid can have.
pub fn grid_i_max(grid: &FluxGrid) -> f64 {
    (0.5 * (grid.phi_max - grid.phi_min)).powi(2)
}

/// 𝓔(ρ) = ∫ μ(t) V_t ρ V_t† dt for a symmetric μ, built from the
/// quadrature characteristic function at every grid offset.
pub fn average_unitaries(gs: &GridState, mu: &TimeDistribution) -> Result<GridState> {
    if let TimeDistribution::Delta { t0 } = *mu {
        if t0 != 0.0 {
            return Err(Error::Domain("a shifted delta is a unitary, not a real channel".into()));
        }
    }
    if mu.is_trivial() {
        return GridState::mixed(gs.grid, gs.to_matrix());
    }
    let n = gs.grid.n_points;
    let h = gs.grid.spacing();
    let c: Vec<f64> = (0..n).map(|m| mu.characteristic(m as f64 * h).re).collect();
    let rho = gs.to_matrix();
    let out = Mat::from_fn(n, n, |i, j| rho[(i, j)] * c[i.abs_diff(j)]);
    GridState::mixed(gs.grid, out)
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Measurement {
    /// Contiguous equal-width flux bins over the grid. Commutes with V_t.
    FluxBins { n_bins: usize },
    /// Equal-width bins of the charge variable k (conjugate to φ) on
    /// [−k_max, k_max]; the outermost bins absorb everything beyond.
    ChargeBins { n_bins: usize, k_max: f64 },
    /// Projectors onto the given orthonormal grid states plus the
    /// complementary outcome.
    Projective {
        #[serde(skip)]
        vectors: Arc<Vec<Vec<f64>>>,
    },
}

impl Measurement {
    pub fn projective(vectors: Vec<Vec<f64>>) -> Self {
        Measurement::Projective {
            vectors: Arc::new(vectors),
        }
    }

    /// Outcome statistics of V_t gs V_t† (t = 0 for gs itself).
    pub fn distribution(&self, gs: &GridState, t: f64) -> Result<OutcomeDistribution> {
        let grid = gs.grid;
        let h = grid.spacing();
        match self {
            Measurement::FluxBins { n_bins } => {
                let n_bins = *n_bins;
                if n_bins == 0 {
                    return Err(Error::Domain("n_bins = 0".into()));
                }
                let width = (grid.phi_max - grid.phi_min) / n_bins as f64;
                let edges = (0..=n_bins).map(|k| grid.phi_min + k as f64 * width).collect();
                let mut p = vec![0.0; n_bins];
                for (i, w) in gs.density().into_iter().enumerate() {
                    let k = (((grid.phi(i) - grid.phi_min) / width) as usize).min(n_bins - 1);
                    p[k] += w * h;
                }
                renormalize(&mut p);
                OutcomeDistribution::from_raw(p, edges)
            }
            Measurement::ChargeBins { n_bins, k_max } => {
                let (n_bins, k_max) = (*n_bins, *k_max);
                if n_bins == 0 || !(k_max > 0.0) {
                    return Err(Error::Domain(format!("charge bins {n_bins} over ±{k_max}")));
                }
                let pk = charge_probabilities(gs, t);
                let n = grid.n_points;
                let width = 2.0 * k_max / n_bins as f64;
                let edges = (0..=n_bins).map(|k| -k_max + k as f64 * width).collect();
                let mut p = vec![0.0; n_bins];
                for (j, w) in pk.into_iter().enumerate() {
                    let k = charge_of(j, n, h);
                    let idx = ((k + k_max) / width).floor().clamp(0.0, (n_bins - 1) as f64) as usize;
                    p[idx] += w;
                }
                renormalize(&mut p);
                OutcomeDistribution::from_raw(p, edges)
            }
            Measurement::Projective { vectors } => {
                let mut p = projector_weights(gs, vectors, t);
                let rest = 1.0 - p.iter().sum::<f64>();
                p.push(rest.max(0.0));
                renormalize(&mut p);
                let edges = (0..=p.len()).map(|k| k as f64).collect();
                OutcomeDistribution::from_raw(p, edges)
            }
        }
    }
}

fn renormalize(p: &mut [f64]) {
    let s: f64 = p.iter().sum();
    if s > 0.0 {
        p.iter_mut().for_each(|x| *x /= s);
    }
}

/// Angular wavenumber of DFT index j.
fn charge_of(j: usize, n: usize, h: f64) -> f64 {
    let signed = if j < n.div_ceil(2) { j as f64 } else { j as f64 - n as f64 };
    2.0 * PI * signed / (n as f64 * h)
}

/// diag(F ρ' F†) with ρ' = V_t ρ V_t† h and F the unitary DFT.
fn charge_probabilities(gs: &GridState, t: f64) -> Vec<f64> {
    let n = gs.grid.n_points;
    let h = gs.grid.spacing();
    let phase: Vec<Complex64> = (0..n).map(|i| Complex64::from_polar(1.0, -gs.grid.phi(i) * t)).collect();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let scale = 1.0 / n as f64;
    match &gs.data {
        GridData::Pure(psi) => {
            let mut v: Vec<Complex64> = psi.iter().zip(&phase).map(|(a, p)| p * (a * h.sqrt())).collect();
            fft.process(&mut v);
            v.iter().map(|z| z.norm_sqr() * scale).collect()
        }
        GridData::Mixed(rho) => {
            // columns of F ρ', stored column by column
            let mut cols: Vec<Vec<Complex64>> = (0..n)
                .map(|b| {
                    let mut c: Vec<Complex64> = (0..n).map(|a| phase[a] * phase[b].conj() * (rho[(a, b)] * h)).collect();
                    fft.process(&mut c);
                    c
                })
                .collect();
            // (F ρ' F†)_jj = Σ_b (Fρ')_jb conj(F_jb), F_jb = e^{−2πi jb/n}/√n
            let twiddle: Vec<Complex64> = (0..n)
                .map(|m| Complex64::from_polar(1.0, 2.0 * PI * m as f64 / n as f64))
                .collect();
            let mut out = vec![0.0; n];
            for (j, o) in out.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (b, col) in cols.iter().enumerate() {
                    acc += col[j] * twiddle[(j * b) % n];
                }
                *o = acc.re * scale;
            }
            cols.clear();
            out
        }
    }
}

/// ⟨v|V_t ρ V_t†|v⟩ for each real grid state v.
fn projector_weights(gs: &GridState, vectors: &[Vec<f64>], t: f64) -> Vec<f64> {
    let n = gs.grid.n_points;
    let h = gs.grid.spacing();
    let phase: Vec<Complex64> = (0..n).map(|i| Complex64::from_polar(1.0, -gs.grid.phi(i) * t)).collect();
    match &gs.data {
        GridData::Pure(psi) => vectors
            .iter()
            .map(|v| {
                let amp: Complex64 = (0..n).map(|i| phase[i] * (v[i] * psi[i] * h)).sum();
                amp.norm_sqr()
            })
            .collect(),
        GridData::Mixed(rho) => {
            // Re[e^{−i(φ_a−φ_b)t}] suffices: ρ and v are real and ρ is symmetric
            let r = Mat::from_fn(n, n, |a, b| rho[(a, b)] * (phase[a] * phase[b].conj()).re * h * h);
            vectors
                .iter()
                .map(|v| {
                    let col = faer::col::from_slice(v);
                    let rv = &r * col;
                    (0..n).map(|a| v[a] * rv[a]).sum()
                })
                .collect()
        }
    }
}

/// How the second distribution is produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Protocol {
    /// V_t with a known time; certified by the unitary bound.
    Unitary { t: f64 },
    /// Random time with density μ; certified by inverting f.
    Averaged { mu: TimeDistribution },
    /// Gaussian random time; certified by the weak-dephasing closed form.
    WeakDephasing { gamma_w: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct ProtocolOutcome {
    pub p: OutcomeDistribution,
    pub q: OutcomeDistribution,
    pub bound: WitnessBound,
}

/// Measures ρ and its evolved version with the same measurement and turns
/// their overlap into a certified bound on I(ρ, Φ).
pub fn simulate_protocol(gs: &GridState, protocol: &Protocol, measurement: &Measurement) -> Result<ProtocolOutcome> {
    let p = measurement.distribution(gs, 0.0)?;
    let i_max = grid_i_max(&gs.grid);
    let (q, bound) = match *protocol {
        Protocol::Unitary { t } => {
            let q = measurement.distribution(gs, t)?;
            let b = bhattacharyya(&p, &q)?;
            let bound = if t == 0.0 {
                WitnessBound {
                    b,
                    bound_i: 0.0,
                    method: BoundMethod::ExactUnitary,
                }
            } else {
                unitary_bound(b, t)?
            };
            (q, bound)
        }
        Protocol::Averaged { mu } => {
            mu.validate()?;
            let q = match mu {
                TimeDistribution::Delta { t0 } => measurement.distribution(gs, t0)?,
                TimeDistribution::Gaussian { .. } => measurement.distribution(&average_unitaries(gs, &mu)?, 0.0)?,
            };
            let b = bhattacharyya(&p, &q)?;
            (q, averaged_bound(b, &mu, i_max)?)
        }
        Protocol::WeakDephasing { gamma_w } => {
            let mu = TimeDistribution::Gaussian { gamma_w };
            mu.validate()?;
            let q = measurement.distribution(&average_unitaries(gs, &mu)?, 0.0)?;
            let b = bhattacharyya(&p, &q)?;
            (q, weak_dephasing_bound(b, gamma_w)?)
        }
    };
    Ok(ProtocolOutcome { p, q, bound })
}

/// Best unitary bound over a set of evolution times. Each time yields a
/// valid bound, so their maximum is one too.
pub fn optimized_unitary(gs: &GridState, times: &[f64], measurement: &Measurement) -> Result<(f64, ProtocolOutcome)> {
    let mut best: Option<(f64, ProtocolOutcome)> = None;
    for &t in times {
        let out = simulate_protocol(gs, &Protocol::Unitary { t }, measurement)?;
        if best.as_ref().map_or(true, |(_, b)| out.bound.bound_i > b.bound.bound_i) {
            best = Some((t, out));
        }
    }
    best.ok_or_else(|| Error::Domain("no evolution times given".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherence::{dephase, DephasingChannel};

    fn dist(p: &[f64]) -> OutcomeDistribution {
        OutcomeDistribution::new(p.to_vec(), (0..=p.len()).map(|k| k as f64).collect()).unwrap()
    }

    #[test]
    fn bhattacharyya_basics() {
        let p = dist(&[0.5, 0.5]);
        assert!((bhattacharyya(&p, &p).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(bhattacharyya(&dist(&[1.0, 0.0]), &dist(&[0.0, 1.0])).unwrap(), 0.0);
        let b = bhattacharyya(&p, &dist(&[1.0, 0.0])).unwrap();
        assert!((b - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(matches!(bhattacharyya(&p, &dist(&[0.2, 0.3, 0.5])), Err(Error::BinningMismatch)));
    }

    #[test]
    fn distribution_validation() {
        assert!(OutcomeDistribution::new(vec![0.5, 0.6], vec![0.0, 1.0, 2.0]).is_err());
        assert!(OutcomeDistribution::new(vec![0.5, 0.5], vec![0.0, 1.0]).is_err());
        assert!(OutcomeDistribution::new(vec![1.5, -0.5], vec![0.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn unitary_bound_values() {
        assert_eq!(unitary_bound(1.0, 3.0).unwrap().bound_i, 0.0);
        assert!((unitary_bound(0.0, 1.0).unwrap().bound_i - PI * PI / 4.0).abs() < 1e-15);
        assert!(matches!(unitary_bound(0.5, 0.0), Err(Error::ZeroTime)));
        assert!(unitary_bound(1.1, 1.0).is_err());
    }

    #[test]
    fn weak_bound_values() {
        assert_eq!(weak_dephasing_bound(1.0, 2.0).unwrap().bound_i, 0.0);
        let b = weak_dephasing_bound((-0.5f64).exp(), 1.0).unwrap();
        assert!((b.bound_i - 1.0).abs() < 1e-15);
        assert!(matches!(weak_dephasing_bound(0.0, 1.0), Err(Error::UnboundedWeakBound)));
    }

    #[test]
    fn delta_inversion_matches_unitary() {
        for &(b, t0) in &[(0.9, 3.0), (0.5, 1.0), (0.1, 10.0), (0.99, 0.3), (0.0, 2.0)] {
            let mu = TimeDistribution::Delta { t0 };
            let avg = averaged_bound(b, &mu, 100.0).unwrap().bound_i;
            let exact = unitary_bound(b, t0).unwrap().bound_i;
            assert!((avg / exact - 1.0).abs() < 1e-9, "b={b} t0={t0}: {avg} vs {exact}");
        }
        assert_eq!(averaged_bound(1.0, &TimeDistribution::Delta { t0: 1.0 }, 1.0).unwrap().bound_i, 0.0);
    }

    #[test]
    fn gaussian_inversion_matches_weak_form_in_its_regime() {
        let gamma_w: f64 = 3.0;
        for &i in &[0.01f64, 0.03, 0.09] {
            // B = exp(−I/(2Γ²)) is the weak-limit relation
            let b = (-i / (2.0 * gamma_w * gamma_w)).exp();
            let num = averaged_bound(b, &TimeDistribution::Gaussian { gamma_w }, 4.0).unwrap().bound_i;
            let weak = weak_dephasing_bound(b, gamma_w).unwrap().bound_i;
            assert!((num / weak - 1.0).abs() < 0.05, "I={i}: {num} vs {weak}");
        }
    }

    #[test]
    fn window_integral_normalized_and_decreasing() {
        let mu = TimeDistribution::Gaussian { gamma_w: 0.2 };
        assert!((mu.window_integral(1e-14) - 1.0).abs() < 1e-9);
        let mut last = 1.0;
        for k in 0..40 {
            let v = mu.window_integral(1e-6 * 1.5f64.powi(k));
            assert!(v <= last + 1e-12);
            last = v;
        }
    }

    #[test]
    fn channel_equivalence_on_grid() {
        let g = FluxGrid::new(-0.5, 1.5, 512).unwrap();
        let psi: Vec<f64> = g
            .points()
            .iter()
            .map(|x| (-(x - 0.2f64).powi(2) / 0.002).exp() + (-(x - 0.8f64).powi(2) / 0.002).exp())
            .collect();
        let gs = GridState::pure_normalized(g, psi).unwrap();
        for gamma_w in [0.02, 0.1, 0.5] {
            let a = average_unitaries(&gs, &TimeDistribution::Gaussian { gamma_w }).unwrap();
            let d = dephase(&gs, &DephasingChannel::new(gamma_w).unwrap());
            let (GridData::Mixed(a), GridData::Mixed(d)) = (a.data, d.data) else { panic!() };
            assert!((&a - &d).norm_max() < 1e-10, "Γ_w={gamma_w}");
        }
    }

    #[test]
    fn flux_bins_cannot_see_phase_dynamics() {
        let g = FluxGrid::new(-0.5, 1.5, 256).unwrap();
        let psi: Vec<f64> = g.points().iter().map(|x| (-(x - 0.5f64).powi(2) / 0.01).exp()).collect();
        let gs = GridState::pure_normalized(g, psi).unwrap();
        let out = simulate_protocol(&gs, &Protocol::Unitary { t: 5.0 }, &Measurement::FluxBins { n_bins: 64 }).unwrap();
        // B = 1 up to rounding, and arccos amplifies that to ~√ε
        assert!((out.bound.b - 1.0).abs() < 1e-12);
        assert!(out.bound.bound_i < 1e-14);
    }

    #[test]
    fn charge_distribution_matches_pure_and_mixed_paths() {
        let g = FluxGrid::new(-0.5, 1.5, 256).unwrap();
        let psi: Vec<f64> = g
            .points()
            .iter()
            .map(|x| (-(x - 0.3f64).powi(2) / 0.004).exp() - 0.7 * (-(x - 0.7f64).powi(2) / 0.004).exp())
            .collect();
        let gs = GridState::pure_normalized(g, psi).unwrap();
        let mixed = GridState::mixed(g, gs.to_matrix()).unwrap();
        let m = Measurement::ChargeBins { n_bins: 32, k_max: 150.0 };
        for t in [0.0, 2.5] {
            let a = m.distribution(&gs, t).unwrap();
            let b = m.distribution(&mixed, t).unwrap();
            for (x, y) in a.probabilities.iter().zip(&b.probabilities) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn protocol_trivial_cases() {
        let g = FluxGrid::new(-0.5, 1.5, 256).unwrap();
        let psi: Vec<f64> = g.points().iter().map(|x| (-(x - 0.5f64).powi(2) / 0.01).exp()).collect();
        let gs = GridState::pure_normalized(g, psi).unwrap();
        let m = Measurement::ChargeBins { n_bins: 64, k_max: 100.0 };
        let out = simulate_protocol(&gs, &Protocol::Unitary { t: 0.0 }, &m).unwrap();
        assert!((out.bound.b - 1.0).abs() < 1e-12 && out.bound.bound_i == 0.0);
        let id = Protocol::Averaged {
            mu: TimeDistribution::Gaussian { gamma_w: f64::INFINITY },
        };
        assert_eq!(simulate_protocol(&gs, &id, &m).unwrap().bound.bound_i, 0.0);
    }

    #[test]
    fn coarsening_never_raises_bound() {
        let g = FluxGrid::new(-0.5, 1.5, 512).unwrap();
        let psi: Vec<f64> = g
            .points()
            .iter()
            .map(|x| (-(x - 0.25f64).powi(2) / 0.003).exp() + (-(x - 0.75f64).powi(2) / 0.003).exp())
            .collect();
        let gs = GridState::pure_normalized(g, psi).unwrap();
        let truth = gs.flux_variance();
        let mut last = f64::INFINITY;
        for n_bins in [256, 128, 64, 32, 16, 8] {
            let m = Measurement::ChargeBins { n_bins, k_max: 200.0 };
            let b = simulate_protocol(&gs, &Protocol::Unitary { t: 2.0 }, &m).unwrap().bound.bound_i;
            assert!(b <= last * (1.0 + 1e-9) + 1e-15, "{n_bins}: {b} > {last}");
            assert!(b <= truth);
            last = b;
        }
    }

    #[test]
    fn coarsen_merges_pairs() {
        let d = dist(&[0.1, 0.2, 0.3, 0.4]);
        let c = d.coarsen();
        assert_eq!(c.edges, vec![0.0, 2.0, 4.0]);
        assert!((c.probabilities[0] - 0.3).abs() < 1e-15);
        let odd = dist(&[0.2, 0.3, 0.5]).coarsen();
        assert_eq!(odd.edges, vec![0.0, 2.0, 3.0]);
        assert_eq!(odd.probabilities.len(), 2);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn normalized(w: Vec<f64>) -> OutcomeDistribution {
            let total: f64 = w.iter().sum();
            let n = w.len();
            OutcomeDistribution::new(w.into_iter().map(|x| x / total).collect(), (0..=n).map(|k| k as f64).collect()).unwrap()
        }

        proptest! {
            #[test]
            fn bhattacharyya_is_a_symmetric_overlap(w in prop::collection::vec((0.01f64..1.0, 0.01f64..1.0), 2..20)) {
                let p = normalized(w.iter().map(|x| x.0).collect());
                let q = normalized(w.iter().map(|x| x.1).collect());
                let b = bhattacharyya(&p, &q).unwrap();
                prop_assert!((0.0..=1.0).contains(&b));
                prop_assert!((b - bhattacharyya(&q, &p).unwrap()).abs() < 1e-15);
                prop_assert!((bhattacharyya(&p, &p).unwrap() - 1.0).abs() < 1e-12);
                // post-processing cannot decrease the overlap
                prop_assert!(bhattacharyya(&p.coarsen(), &q.coarsen()).unwrap() >= b - 1e-12);
            }

            #[test]
            fn delta_time_inversion_is_the_unitary_bound(b in 0.01f64..0.999, t0 in 0.1f64..20.0) {
                let exact = unitary_bound(b, t0).unwrap().bound_i;
                let inv = averaged_bound(b, &TimeDistribution::Delta { t0 }, 1e3).unwrap().bound_i;
                prop_assert!((inv / exact - 1.0).abs() < 1e-9);
            }

            #[test]
            fn gaussian_bound_never_below_weak_form(b in 0.9f64..0.99999, gamma_w in 0.01f64..1.0) {
                let weak = weak_dephasing_bound(b, gamma_w).unwrap().bound_i;
                let mu = TimeDistribution::Gaussian { gamma_w };
                let num = averaged_bound(b, &mu, 1e3 * gamma_w * gamma_w).unwrap().bound_i;
                prop_assert!(num >= weak * (1.0 - 1e-9));
            }
        }
    }
}
