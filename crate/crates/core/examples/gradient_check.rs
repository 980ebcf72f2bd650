//! Adjoint gradient of the column model against central differences.

use goursat_volterra::costate::solve_costate;
use goursat_volterra::demos::{make_chromatography, ChromatographyParams};
use goursat_volterra::forward::{solve_forward, ForwardOptions};
use goursat_volterra::gradient::{fd_directional, gradient, inner_product};
use goursat_volterra::grid::make_grid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = make_grid(1.0, 1.0, 12, 12)?;
    let p = make_chromatography(&g, &ChromatographyParams::default())?;
    let u = p.constant_control(&g, 1.2);
    let fopts = ForwardOptions { tol: 1e-14, ..Default::default() };

    let y = solve_forward(&p, &u, &g, &fopts)?.y;
    let psi = solve_costate(&p, &y, &u, &g, 1e-14)?;
    let grad = gradient(&p, &y, &u, &psi, &g)?;

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    println!("{:>3} {:>14} {:>14} {:>9}", "dir", "fd", "adjoint", "rel");
    for d in 0..6 {
        let mut du = u.clone();
        let v: Vec<f64> = u.flat().iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        du.set_flat(&v);
        let adj = inner_product(&grad, &du, &g);
        let fd = fd_directional(&p, &u, &du, &g, 2e-5, &fopts)?.value;
        println!("{d:>3} {fd:>14.6e} {adj:>14.6e} {:>9.1e}", (adj - fd).abs() / adj.abs());
    }
    Ok(())
}
