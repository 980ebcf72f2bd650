//! Resolvent kernel of a linear equation, checked against both identities
//! and used to solve `z = z0 + K z`.

use goursat_volterra::grid::{make_grid, GridField};
use goursat_volterra::gvlinalg::{
    gv_compose, kernel_power, kernel_power_bound, linear_residual, resolvent, solve_linear_picard, solve_linear_with,
    KernelTriple,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = make_grid(1.0, 1.0, 8, 8)?;
    let k = KernelTriple::scalar(&g, |s, _, x| 0.5 * (s - x).cos(), |_, t, y| 0.3 * (t - y), |_, _, _, _| 1.0);

    let r = resolvent(&k, &g, 1e-13)?;
    println!("Neumann terms: {}, tail bound {:?}", r.truncation_k, r.tail_bound);

    let mut r_minus_k = r.kernel.clone();
    r_minus_k.axpy(-1.0, &k);
    let worst = |d: (f64, f64, f64)| d.0.max(d.1).max(d.2);
    let left = worst(gv_compose(&k, &r.kernel, &g)?.sup_diff(&r_minus_k));
    let right = worst(gv_compose(&r.kernel, &k, &g)?.sup_diff(&r_minus_k));
    println!("K.R - (R-K): {left:.1e}   R.K - (R-K): {right:.1e}");

    let z0 = GridField::from_scalar(&g, |s, t| 1.0 + s * t);
    let z = solve_linear_with(&r, &z0, &g)?;
    let zp = solve_linear_picard(&k, &z0, &g, 1e-14, 200)?;
    println!("z(1,1) = {:.12}, Picard differs by {:.1e}", z.at(8, 8)[0], z.sup_diff(&zp));
    println!("residual {:.1e}", linear_residual(&k, &z, &z0, &g)?);

    let c = k.sup_bound();
    for pow in [1, 2, 4, 8] {
        let (m1, m2, m12) = kernel_power(&k, pow, &g)?.sup_norms();
        let (b1, b2, b12) = kernel_power_bound(c, pow, g.a(), g.b())?;
        println!("k = {pow}: |K^k| = ({m1:.2e}, {m2:.2e}, {m12:.2e})  bounds ({b1:.2e}, {b2:.2e}, {b12:.2e})");
    }
    Ok(())
}
