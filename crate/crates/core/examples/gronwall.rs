//! Gronwall series, its coefficient bound and the comparison check.

use goursat_volterra::grid::{make_grid, GridField};
use goursat_volterra::gronwall::{
    check_comparison, coefficient_bound, gronwall_bound, gronwall_bound_product_form, gronwall_coeffs, gronwall_series,
    growth_constant,
};
use goursat_volterra::gvlinalg::KernelTriple;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (a0, b1, b2, b12) = (1.0, 0.5, 0.25, 1.0);
    let b = growth_constant(b1, b2, b12);
    let co = gronwall_coeffs(a0, b1, b2, b12, 3, 3);
    for k in 0..=3 {
        let row: Vec<String> = (0..=3).map(|l| format!("{:.4}/{:.2}", co.c[k][l], coefficient_bound(b, k, l))).collect();
        println!("C[{k}][.] (value/bound): {}", row.join("  "));
    }

    for (ds, dt) in [(1.0, 1.0), (1.0, 0.0), (2.0, 0.5)] {
        let (_, v) = gronwall_series(a0, b1, b2, b12, ds, dt)?;
        println!(
            "ds {ds} dt {dt}: zeta {:.6}  bound {:.4}  product form {:.4}",
            v.value,
            gronwall_bound(a0, b1, b2, b12, ds, dt),
            gronwall_bound_product_form(a0, b1, b2, b12, ds, dt)
        );
    }

    let (_, bessel) = gronwall_series(1.0, 0.0, 0.0, 1.0, 1.0, 1.0)?;
    println!("I0(2) from the series: {:.10}", bessel.value);

    let g = make_grid(1.0, 1.0, 8, 8)?;
    let k = KernelTriple::scalar(&g, |_, _, _| b1, |_, _, _| b2, |_, _, _, _| b12);
    let f = GridField::from_scalar(&g, |s, t| 1.0 + s * t);
    let half = GridField::from_scalar(&g, |s, t| 0.5 * (1.0 + s * t));
    let cmp = check_comparison(&f, &half, &k, &g)?;
    println!("comparison holds: {}, corner margin {:.4}", cmp.holds, cmp.corner_margin);
    Ok(())
}
