//! Cross-checks the oscillator-basis solver against the independent
//! finite-difference solver.

use fluxcoh::grid::{self, FluxGrid};
use fluxcoh::spectrum::{self, HoBasisConfig};
use fluxcoh::CircuitParams;

fn main() -> fluxcoh::Result<()> {
    let grid = FluxGrid::oracle();
    for phi_x in [0.0, 0.499, 0.5] {
        let p = CircuitParams::suny2000().with_phi_x(phi_x);
        let ho = spectrum::diagonalize(&p, &HoBasisConfig::new(512))?;
        let fd = grid::finite_difference_oracle(&p, &grid, 10)?;
        println!("phi_x = {phi_x}");
        for k in 0..10 {
            println!(
                "  {k:2}  {:14.6}  {:14.6}  rel {:.1e}  (unextrapolated {:.1e})",
                ho.energies[k],
                fd.energies[k],
                (ho.energies[k] / fd.energies[k] - 1.0).abs(),
                (ho.energies[k] / fd.energies_coarse[k] - 1.0).abs()
            );
        }
    }
    Ok(())
}
