//! Co-state of the tracking problem by backward substitution and by the
//! resolvent closed form.

use goursat_volterra::costate::{costate_residuals, costate_via_resolvent, solve_costate};
use goursat_volterra::demos::{make_synthetic_lq, LqConfig};
use goursat_volterra::forward::{solve_forward, ForwardOptions};
use goursat_volterra::grid::make_grid;
use goursat_volterra::problem::ControlField;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = make_grid(1.0, 1.0, 10, 10)?;
    let (p, _) = make_synthetic_lq(&g, &LqConfig { a: 0.5, ..Default::default() })?;
    let u = ControlField::zeros_for(&p, &g);
    let y = solve_forward(&p, &u, &g, &ForwardOptions::default())?.y;

    let psi = solve_costate(&p, &y, &u, &g, 1e-14)?;
    let alt = costate_via_resolvent(&p, &y, &u, &g, 1e-14)?;
    println!("psi12(0,0) = {:.6e}", psi.psi12.at(0, 0)[0]);
    println!("paths differ by {:.1e}", psi.sup_diff(&alt));
    println!("residuals {:?}", costate_residuals(&p, &y, &u, &psi, &g)?);
    Ok(())
}
