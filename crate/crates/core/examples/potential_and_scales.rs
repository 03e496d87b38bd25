//! Double-well geometry, oscillator scales and the closed-form size
//! estimates for the built-in rf-SQUID preset.

use fluxcoh::circuit::{self, ThreeJunctionParams};
use fluxcoh::CircuitParams;

fn main() -> fluxcoh::Result<()> {
    let p = CircuitParams::suny2000();
    let s = p.scales();
    println!("E_C = {} GHz, E_L = {} GHz, E_J = {} GHz, phi_x = {}", p.e_c, p.e_l, p.e_j, p.phi_x);
    println!("hbar*omega      = {:.4} GHz", s.hbar_omega);
    println!("sigma0^2        = {:.4e} Phi0^2", s.sigma0_sq);
    println!("omega_cl/omega  = {:.4}", s.omega_cl_ratio);

    let w = p.double_well().expect("preset is a double well");
    println!(
        "minima at {:.4}, {:.4}; barrier at {:.4} is {:.1} GHz above the wells; d = {:.4} Phi0",
        w.left,
        w.right,
        w.barrier,
        w.u_barrier - w.u_min,
        w.separation()
    );

    // d² as the cat spread, the convention behind the quoted closed form
    let ideal = circuit::ideal_effective_size(&p, w.separation().powi(2))?;
    println!(
        "ideal cat size  = {:.0} (closed form {:.0}, large-E_J limit {:.0})",
        ideal.ratio, ideal.printed_approximation, ideal.dominant_josephson
    );
    println!("three-junction  = {:.2}", circuit::delft_effective_size(&ThreeJunctionParams::delft2000())?);

    for phi in [-0.5, 0.0, 0.17, 0.5, 0.83, 1.0] {
        println!("U({phi:5.2}) = {:10.2} GHz", p.potential(phi));
    }
    Ok(())
}
