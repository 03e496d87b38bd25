//! Locates the tunnel-split doublet near the barrier top and sweeps the
//! bias through its avoided crossing.

use fluxcoh::spectrum::{self, find_target_states, HoBasisConfig};
use fluxcoh::CircuitParams;

fn main() -> fluxcoh::Result<()> {
    let p = CircuitParams::suny2000();
    let basis = HoBasisConfig::new(512);
    let r = spectrum::diagonalize(&p, &basis)?;
    let t = find_target_states(&r)?;
    println!("target doublet: levels {} and {}, splitting {:.4} GHz", t.lower, t.upper, t.splitting);
    for k in [t.lower, t.upper] {
        let (mean, var) = r.flux_moments(k);
        println!("  level {k}: E = {:.3} GHz, <phi> = {mean:.4}, var = {var:.5}", r.energies[k]);
    }

    let values = spectrum::linspace(0.497, 0.503, 13);
    let sweep = spectrum::sweep_phi_x(&p, &values, t.upper + 1, basis.dim)?;
    let gap = sweep.gap(t.lower, t.upper);
    println!("\n  phi_x     gap (GHz)");
    for (x, g) in values.iter().zip(&gap) {
        println!("  {x:.4}  {g:9.4}");
    }
    let i = sweep.argmin_gap(t.lower, t.upper).unwrap();
    println!("minimum gap {:.4} GHz at phi_x = {}", gap[i], values[i]);
    Ok(())
}
