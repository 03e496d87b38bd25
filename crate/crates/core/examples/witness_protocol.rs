//! Certifies a lower bound on the effective size from two measured
//! distributions, for a cat state and for the upper target state.

use fluxcoh::coherence::{quantum_coherence, Workspace};
use fluxcoh::grid::{FluxGrid, GridData};
use fluxcoh::spectrum::{find_target_states, HoBasisConfig};
use fluxcoh::witness::{self, Measurement, Protocol, TimeDistribution};
use fluxcoh::CircuitParams;

fn main() -> fluxcoh::Result<()> {
    let ws = Workspace::new(&CircuitParams::suny2000(), &HoBasisConfig::new(512), &FluxGrid::standard())?;
    let t = find_target_states(&ws.spectrum)?;
    let (even, odd) = ws.spectrum.parity_adapted(0, 1);
    let cat = ws.coefficients_to_grid(&even)?;

    // projectors onto the ground-doublet parity states and higher levels
    let mut vectors = Vec::new();
    for c in [even, odd].into_iter().chain((2..32).map(|k| ws.spectrum.coefficients(k))) {
        if let GridData::Pure(v) = ws.coefficients_to_grid(&c)?.data {
            vectors.push(v);
        }
    }
    let energy = Measurement::projective(vectors);
    let charge = Measurement::ChargeBins { n_bins: 128, k_max: 300.0 };

    let i_cat = quantum_coherence(&cat)?.value;
    let gamma_w = 10.0 * i_cat.sqrt();
    for (name, protocol) in [
        ("weak", Protocol::WeakDephasing { gamma_w }),
        ("averaged", Protocol::Averaged { mu: TimeDistribution::Gaussian { gamma_w } }),
    ] {
        let out = witness::simulate_protocol(&cat, &protocol, &energy)?;
        println!(
            "cat, {name:8} energy projectors: B = {:.6}, bound {:.4} of true I = {:.4}",
            out.bound.b,
            out.bound.bound_i / i_cat,
            i_cat
        );
    }

    let upper = ws.eigenstate(t.upper)?;
    let i_up = quantum_coherence(&upper)?.value;
    let times = fluxcoh::coherence::log_ladder(1e-3, 10.0, 41);
    let (t_best, out) = witness::optimized_unitary(&upper, &times, &charge)?;
    println!(
        "upper, unitary t = {t_best:.3}, charge bins: bound {:.3} of true I, {:.1} x var_ref",
        out.bound.bound_i / i_up,
        out.bound.bound_i / ws.var_ref
    );
    Ok(())
}
