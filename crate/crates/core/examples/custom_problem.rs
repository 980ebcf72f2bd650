//! A user-defined problem: logistic growth along both axes with a
//! distributed control, validated, solved and optimized.

use goursat_volterra::grid::make_grid;
use goursat_volterra::optimize::{optimize, OptimizeOptions};
use goursat_volterra::problem::{
    validate_problem, ActiveTerms, BlockFlags, Bounds, ControlBoxes, ControlField, ControlPoint, Dims, GvProblem, Independence,
    Lipschitz,
};

struct Logistic;

impl GvProblem for Logistic {
    fn dims(&self) -> Dims {
        Dims { n: 1, p1: 0, p2: 0, p12: 1 }
    }
    fn lipschitz(&self) -> Lipschitz {
        Lipschitz { l1: 0.5, l2: 0.0, l12: 1.0 }
    }
    fn boxes(&self) -> ControlBoxes {
        ControlBoxes { u1: Bounds::unbounded(0), u2: Bounds::unbounded(0), u12: Bounds::uniform(1, -1.0, 1.0) }
    }
    fn independence(&self) -> Independence {
        Independence { f0: BlockFlags::ALL, f1: BlockFlags::ALL, f2: BlockFlags::ALL }
    }
    fn active_terms(&self) -> ActiveTerms {
        ActiveTerms { f1: true, f2: false, f12: true }
    }
    fn f0(&self, _: f64, _: f64, _: &ControlPoint, out: &mut [f64]) {
        out[0] = 0.1;
    }
    fn f1(&self, _: f64, _: f64, _: f64, y: &[f64], _: &ControlPoint, out: &mut [f64]) {
        out[0] = 0.5 * y[0].tanh();
    }
    fn dy_f1(&self, _: f64, _: f64, _: f64, y: &[f64], _: &ControlPoint, out: &mut [f64]) {
        out[0] = 0.5 / y[0].cosh().powi(2);
    }
    fn f12(&self, _: f64, _: f64, _: f64, _: f64, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        out[0] = y[0].sin() + u.u12[0];
    }
    fn dy_f12(&self, _: f64, _: f64, _: f64, _: f64, y: &[f64], _: &ControlPoint, out: &mut [f64]) {
        out[0] = y[0].cos();
    }
    fn du_f12(&self, _: f64, _: f64, _: f64, _: f64, _: &[f64], _: &ControlPoint, out: &mut [f64]) {
        out[0] = 1.0;
    }
    fn cost0(&self, y: &[f64], _: &ControlPoint) -> f64 {
        0.5 * (y[0] - 0.6).powi(2)
    }
    fn dy_cost0(&self, y: &[f64], _: &ControlPoint, out: &mut [f64]) {
        out[0] = y[0] - 0.6;
    }
    fn cost12(&self, _: f64, _: f64, _: &[f64], u: &ControlPoint) -> f64 {
        0.05 * u.u12[0].powi(2)
    }
    fn du_cost12(&self, _: f64, _: f64, _: &[f64], u: &ControlPoint, out: &mut [f64]) {
        out[0] = 0.1 * u.u12[0];
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = make_grid(1.0, 1.0, 10, 10)?;
    let report = validate_problem(&Logistic, &g, 50, 3)?;
    println!("validation passes: {} (max Jacobian error {:.1e})", report.passes(1e-6), report.max_jacobian_error());

    let res = optimize(&Logistic, &ControlField::zeros_for(&Logistic, &g), &g, &OptimizeOptions::default())?;
    let last = res.history.last().unwrap();
    println!("J {:.6e} -> {:.6e} in {} steps; y(A,B) = {:.5}", res.history[0].cost, last.cost, last.k, res.state.at(10, 10)[0]);
    Ok(())
}
