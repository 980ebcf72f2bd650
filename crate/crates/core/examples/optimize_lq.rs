//! Projected-gradient run on the tracking problem, then the extremum audit
//! of the converged control.

use goursat_volterra::demos::{make_synthetic_lq, LqConfig};
use goursat_volterra::grid::make_grid;
use goursat_volterra::optimize::{check_extremum_principle, optimize, OptimizeOptions};
use goursat_volterra::problem::ControlField;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = make_grid(1.0, 1.0, 16, 16)?;
    let (p, _) = make_synthetic_lq(&g, &LqConfig::default())?;
    let res = optimize(&p, &ControlField::zeros_for(&p, &g), &g, &OptimizeOptions::default())?;
    for r in res.history.iter().step_by(5) {
        println!("k {:>3}  J {:.8e}  stationarity {:.2e}  step {:.2e}", r.k, r.cost, r.stationarity, r.step);
    }
    println!("converged: {}", res.converged);

    let report = check_extremum_principle(&p, &res.control, &res.state, &res.costate, &g, 33, 1e-4)?;
    for c in &report.claims {
        match &c.reason {
            Some(why) => println!("{:<16} skipped: {why}", c.claim),
            None => println!("{:<16} {}/{} pass, worst gap {:.1e}", c.claim, c.passed, c.tested, c.worst_violation),
        }
    }

    // inverse crime: the target comes from a known control, so min J = 0
    let (p, truth) = make_synthetic_lq(&g, &LqConfig { inverse_crime: true, ..Default::default() })?;
    let opts = OptimizeOptions { stat_tol: 1e-9, max_outer: 400, ..Default::default() };
    let res = optimize(&p, &ControlField::zeros_for(&p, &g), &g, &opts)?;
    let u_true = truth.u_true.expect("inverse crime keeps the control");
    println!(
        "inverse crime: J {:.2e} -> {:.2e} in {} steps, |u - u_true| = {:.2e}",
        res.history[0].cost,
        res.history.last().unwrap().cost,
        res.history.len() - 1,
        res.control.sup_diff(&u_true)
    );
    Ok(())
}
