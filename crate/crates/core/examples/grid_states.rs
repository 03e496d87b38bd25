//! Maps an eigenstate onto the flux grid, dephases it, and writes both the
//! pure wavefunction (CSV) and the density matrix (binary plus sidecar).

use fluxcoh::coherence::{dephase, quantum_coherence, DephasingChannel, Workspace};
use fluxcoh::grid::{FluxGrid, GridState};
use fluxcoh::spectrum::HoBasisConfig;
use fluxcoh::CircuitParams;

fn main() -> fluxcoh::Result<()> {
    let grid = FluxGrid::new(-1.0, 2.0, 1024)?;
    let ws = Workspace::new(&CircuitParams::suny2000(), &HoBasisConfig::new(512), &grid)?;
    let psi = ws.eigenstate(47)?;
    let rho = dephase(&psi, &DephasingChannel::new(ws.zero_point_gamma())?);
    println!("pure:     variance {:.5}, I = {:.5}", psi.flux_variance(), quantum_coherence(&psi)?.value);
    let c = quantum_coherence(&rho)?;
    println!("dephased: variance {:.5}, I = {:.3e} (weight cut {:.1e})", rho.flux_variance(), c.value, c.weight_cut);
    let (e_pure, _) = ws.energy(&psi)?;
    let (e_mixed, lost) = ws.energy(&rho)?;
    println!("energy {e_pure:.3} -> {e_mixed:.3} GHz (basis truncation {lost:.1e})");

    let dir = std::env::temp_dir().join("fluxcoh-grid-states");
    psi.write_csv(&dir.join("psi47.csv"), &["level 47 at phi_x = 0.5".into()])?;
    rho.write_binary(&dir.join("rho47.bin"))?;
    let back = GridState::read_binary(&dir.join("rho47.bin"))?;
    assert_eq!(back.to_matrix(), rho.to_matrix());
    println!("wrote {}", dir.display());
    Ok(())
}
