//! Picard solve of the manufactured problem `y = s t` and the exponential
//! problem `y = e^s`, with the weighted-norm contraction diagnostics.

use goursat_volterra::demos::{Exponential, ManufacturedLinear};
use goursat_volterra::forward::{choose_mu, contraction_factor, solve_forward, ForwardOptions};
use goursat_volterra::grid::make_grid;
use goursat_volterra::problem::{ControlField, GvProblem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = make_grid(1.0, 1.0, 16, 16)?;
    let p = ManufacturedLinear;
    let l = p.lipschitz();
    let mu = choose_mu(l.l1, l.l2, l.l12, g.a(), g.b(), 0.5)?;
    println!("mu = {mu:.4}, predicted ratio {:.3}", contraction_factor(l.l1, l.l2, l.l12, g.a(), g.b(), mu)?);

    let opts = ForwardOptions { tol: 1e-14, mu: Some(mu), ..Default::default() };
    let sol = solve_forward(&p, &ControlField::zeros_for(&p, &g), &g, &opts)?;
    for w in sol.log.windows(2).take(5) {
        let (a, b) = (w[0].delta_weighted.unwrap(), w[1].delta_weighted.unwrap());
        println!("iter {:>2}  delta {:.3e}  ratio {:.3}", w[1].iter, w[1].delta_sup, b / a);
    }
    println!("y(1,1) = {} after {} sweeps", sol.y.at(16, 16)[0], sol.log.len());

    for n in [8, 16, 32] {
        let g = make_grid(1.0, 1.0, n, n)?;
        let y = solve_forward(&Exponential, &ControlField::zeros_for(&Exponential, &g), &g, &opts)?.y;
        let err = (0..=n).map(|i| (y.at(i, n)[0] - g.s(i).exp()).abs()).fold(0.0, f64::max);
        println!("exponential, N = {n:>2}: sup error {err:.3e}");
    }
    Ok(())
}
