//! Column model: memory kernels, a forward solve at a constant velocity and
//! a short velocity identification run.

use goursat_volterra::demos::{make_chromatography, ChromatographyParams};
use goursat_volterra::forward::{solve_forward, ForwardOptions};
use goursat_volterra::gradient::cost;
use goursat_volterra::grid::make_grid;
use goursat_volterra::optimize::{optimize, OptimizeOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = make_grid(1.0, 1.0, 12, 12)?;
    let params = ChromatographyParams::default();
    let p = make_chromatography(&g, &params)?;
    println!("l0(A,B) = {:.4}, l1(A,B,0) = {:.4}", p.ell0(12, 12), p.ell1(12, 12, 0));

    for v in [0.8, params.target_velocity, 2.5] {
        let u = p.constant_control(&g, v);
        let y = solve_forward(&p, &u, &g, &ForwardOptions::default())?.y;
        println!("v = {v:<4} phi(A,B) = {:.5}  J = {:.4e}", y.at(12, 12)[0], cost(&p, &y, &u, &g)?);
    }

    let opts = OptimizeOptions { max_outer: 60, ..Default::default() };
    let res = optimize(&p, &p.constant_control(&g, 1.0), &g, &opts)?;
    let last = res.history.last().unwrap();
    let v_mean = res.control.u12.data().iter().sum::<f64>() / res.control.u12.data().len() as f64;
    println!("after {} steps: J = {:.4e}, mean velocity {v_mean:.4}", last.k, last.cost);
    Ok(())
}
