//! Effective size and energy gap of the dephased target doublet across a
//! short Gamma ladder. Rows where the size has collapsed but the gap has
//! not moved form the gray zone.

use fluxcoh::coherence::{self, Workspace};
use fluxcoh::grid::FluxGrid;
use fluxcoh::spectrum::HoBasisConfig;
use fluxcoh::CircuitParams;

fn main() -> fluxcoh::Result<()> {
    let ws = Workspace::new(&CircuitParams::suny2000(), &HoBasisConfig::new(512), &FluxGrid::standard())?;
    let sigma_ref = ws.var_ref.sqrt();
    let gammas: Vec<f64> = coherence::log_ladder(0.5, 16.0, 6).iter().map(|g| g * sigma_ref).collect();
    let table = coherence::coherence_vs_gamma_auto(&ws, &gammas)?;
    println!("var_ref = {:.4e}, unperturbed gap {:.4} GHz", table.var_ref, table.delta_e0);
    println!("Gamma/sigma_ref   i_rel_0   i_rel_1   1 - dE/dE0");
    for r in &table.rows {
        let gray = r.i_rel_0 <= 1.0 && r.i_rel_1 <= 1.0 && r.gap_rel_diff.abs() <= 1e-3;
        println!(
            "{:14.3}  {:8.3}  {:8.3}  {:11.2e}{}",
            r.gamma_over_sigma_ref,
            r.i_rel_0,
            r.i_rel_1,
            r.gap_rel_diff,
            if gray { "  gray" } else { "" }
        );
    }
    println!("zero-point Gamma = {:.3} sigma_ref", ws.zero_point_gamma() / sigma_ref);
    Ok(())
}
