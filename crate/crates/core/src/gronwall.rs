//! Constant-coefficient two-dimensional Gronwall machinery.
//!
//! The equation `ζ = A0 + B1 ∫ζ dσ + B2 ∫ζ dτ + B12 ∫∫ζ` on
//! `[s1, s] x [t1, t]` has the double power series solution
//! `ζ = A0 Σ C[k][l] ds^k dt^l`.

use serde::Serialize;

use crate::error::{invalid, GvError, Result};
use crate::grid::{Grid, GridField};
use crate::gvlinalg::{solve_linear, KernelTriple};

/// Series coefficients and the constants that generated them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GronwallCoeffs {
    /// `c[k][l]`, `k <= kmax`, `l <= lmax`.
    pub c: Vec<Vec<f64>>,
    pub b1: f64,
    pub b2: f64,
    pub b12: f64,
    pub a0: f64,
}

impl GronwallCoeffs {
    pub fn kmax(&self) -> usize {
        self.c.len() - 1
    }
    pub fn lmax(&self) -> usize {
        self.c[0].len() - 1
    }
}

/// `max(|B1|, |B2|, sqrt(|B12|/3))`.
pub fn growth_constant(b1: f64, b2: f64, b12: f64) -> f64 {
    b1.abs().max(b2.abs()).max((b12.abs() / 3.0).sqrt())
}

/// Fills the coefficient table by the boundary rows and the recursion
/// `C[k+1][l+1] = B1/(k+1) C[k][l+1] + B2/(l+1) C[k+1][l] + B12/((k+1)(l+1)) C[k][l]`.
pub fn gronwall_coeffs(a0: f64, b1: f64, b2: f64, b12: f64, kmax: usize, lmax: usize) -> GronwallCoeffs {
    let mut c = vec![vec![0.0; lmax + 1]; kmax + 1];
    c[0][0] = 1.0;
    for k in 1..=kmax {
        c[k][0] = c[k - 1][0] * b1 / k as f64;
    }
    for l in 1..=lmax {
        c[0][l] = c[0][l - 1] * b2 / l as f64;
    }
    for k in 0..kmax {
        for l in 0..lmax {
            let (k1, l1) = ((k + 1) as f64, (l + 1) as f64);
            c[k + 1][l + 1] = b1 / k1 * c[k][l + 1] + b2 / l1 * c[k + 1][l] + b12 / (k1 * l1) * c[k][l];
        }
    }
    GronwallCoeffs { c, b1, b2, b12, a0 }
}

/// `(3B)^{k+l} / (k! l!)`.
pub fn coefficient_bound(b: f64, k: usize, l: usize) -> f64 {
    let x = 3.0 * b;
    let mut v = 1.0;
    for i in 1..=k {
        v *= x / i as f64;
    }
    for j in 1..=l {
        v *= x / j as f64;
    }
    v
}

// Σ_{k > order} x^k / k!, bounded from above.
fn exp_tail(x: f64, order: usize) -> f64 {
    let mut term = 1.0;
    for i in 1..=order + 1 {
        term *= x / i as f64;
    }
    let ratio = x / (order + 2) as f64;
    if ratio < 1.0 {
        term / (1.0 - ratio)
    } else {
        term * x.exp()
    }
}

/// Relative accuracy demanded of the series.
pub const SERIES_RTOL: f64 = 1e-12;

/// Value of the series with its certified truncation bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    pub tail_bound: f64,
}

/// Sums `A0 Σ C[k][l] ds^k dt^l` over the table.
///
/// The omitted terms are bounded with `|C[k][l]| <= (3B)^{k+l}/(k! l!)`;
/// if that bound exceeds `1e-12 max(|ζ|, |A0|)` the table is too short and
/// the call fails.
pub fn gronwall_eval(coeffs: &GronwallCoeffs, ds: f64, dt: f64) -> Result<f64> {
    Ok(gronwall_eval_certified(coeffs, ds, dt)?.value)
}

pub fn gronwall_eval_certified(coeffs: &GronwallCoeffs, ds: f64, dt: f64) -> Result<SeriesValue> {
    if !(ds >= 0.0 && dt >= 0.0) {
        return Err(invalid("ds and dt must be nonnegative"));
    }
    let (kmax, lmax) = (coeffs.kmax(), coeffs.lmax());
    let mut sum = 0.0;
    let mut pk = 1.0;
    for row in &coeffs.c {
        let mut pl = 1.0;
        let mut acc = 0.0;
        for c in row {
            acc += c * pl;
            pl *= dt;
        }
        sum += acc * pk;
        pk *= ds;
    }
    let value = coeffs.a0 * sum;
    let b = growth_constant(coeffs.b1, coeffs.b2, coeffs.b12);
    let (x, y) = (3.0 * b * ds, 3.0 * b * dt);
    let tail_bound = coeffs.a0.abs() * (exp_tail(x, kmax) * y.exp() + x.exp() * exp_tail(y, lmax));
    if !value.is_finite() || tail_bound > SERIES_RTOL * value.abs().max(coeffs.a0.abs()) {
        return Err(GvError::Numerical {
            i: kmax,
            j: lmax,
            what: format!("series truncation bound {tail_bound:e} too large for value {value:e}"),
        });
    }
    Ok(SeriesValue { value, tail_bound })
}

/// Smallest square order (doubling from 8) whose tail meets [`SERIES_RTOL`].
pub fn gronwall_series(a0: f64, b1: f64, b2: f64, b12: f64, ds: f64, dt: f64) -> Result<(GronwallCoeffs, SeriesValue)> {
    let mut order = 8;
    loop {
        let co = gronwall_coeffs(a0, b1, b2, b12, order, order);
        match gronwall_eval_certified(&co, ds, dt) {
            Ok(v) => return Ok((co, v)),
            Err(GvError::Numerical { .. }) if order < 4096 => order *= 2,
            Err(e) => return Err(e),
        }
    }
}

/// `|A0| exp(3B (ds + dt))`, the bound implied by the coefficient bound.
///
/// Summing `(3B)^{k+l} ds^k dt^l / (k! l!)` gives `e^{3B ds} e^{3B dt}`.
pub fn gronwall_bound(a0: f64, b1: f64, b2: f64, b12: f64, ds: f64, dt: f64) -> f64 {
    a0.abs() * (3.0 * growth_constant(b1, b2, b12) * (ds + dt)).exp()
}

/// `|A0| exp(3B ds dt)`, the product form. Not a valid bound in general:
/// with `B1 > 0` and `dt = 0` it gives `|A0|` while `ζ = A0 e^{B1 ds}`.
pub fn gronwall_bound_product_form(a0: f64, b1: f64, b2: f64, b12: f64, ds: f64, dt: f64) -> f64 {
    a0.abs() * (3.0 * growth_constant(b1, b2, b12) * ds * dt).exp()
}

/// Outcome of a comparison check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    /// `z <= ζ + slack` at every node.
    pub holds: bool,
    /// `min (ζ - z)` over the grid.
    pub worst_margin: f64,
    /// Margin at the far corner.
    pub corner_margin: f64,
    pub slack: f64,
}

/// Solves the linear equation with forcings `zeta_forcing` and `z_forcing`
/// and checks `z <= ζ` everywhere.
///
/// All data must be nonnegative and `z_forcing <= zeta_forcing`, so `z`
/// satisfies the integral inequality whose extremal solution is `ζ`.
pub fn check_comparison(zeta_forcing: &GridField, z_forcing: &GridField, kernels: &KernelTriple, g: &Grid) -> Result<Comparison> {
    g.check_field(zeta_forcing)?;
    g.check_field(z_forcing)?;
    if zeta_forcing.dim() != 1 || z_forcing.dim() != 1 || kernels.m() != 1 {
        return Err(invalid("comparison check is scalar"));
    }
    if zeta_forcing.data().iter().chain(z_forcing.data()).any(|v| !(*v >= 0.0)) {
        return Err(invalid("forcings must be nonnegative"));
    }
    if !kernels.is_nonnegative() {
        return Err(invalid("kernels must be nonnegative"));
    }
    if zeta_forcing.data().iter().zip(z_forcing.data()).any(|(a, b)| b > a) {
        return Err(invalid("z forcing must not exceed the comparison forcing"));
    }
    let zeta = solve_linear(kernels, zeta_forcing, g, 1e-14)?;
    let z = solve_linear(kernels, z_forcing, g, 1e-14)?;
    let slack = 1e-12 * zeta.sup_norm().max(1.0);
    let mut worst = f64::INFINITY;
    for (a, b) in zeta.data().iter().zip(z.data()) {
        worst = worst.min(a - b);
    }
    let (ns, nt) = (g.ns(), g.nt());
    Ok(Comparison {
        holds: worst >= -slack,
        worst_margin: worst,
        corner_margin: zeta.at(ns, nt)[0] - z.at(ns, nt)[0],
        slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn coefficient_examples() {
        let c = gronwall_coeffs(1.0, 1.0, 1.0, 0.0, 3, 3);
        assert_eq!(c.c[1][1], 2.0);
        let cc = 0.7;
        let c = gronwall_coeffs(1.0, 0.0, 0.0, cc, 6, 6);
        let mut fact = 1.0;
        for k in 0..=6 {
            if k > 0 {
                fact *= k as f64;
            }
            for l in 0..=6 {
                if k == l {
                    let want = cc.powi(k as i32) / (fact * fact);
                    assert!((c.c[k][l] - want).abs() <= 1e-15 * want);
                } else {
                    assert_eq!(c.c[k][l], 0.0);
                }
            }
        }
        let b = 1.3;
        let c = gronwall_coeffs(1.0, b, 0.0, 0.0, 5, 5);
        assert_eq!(c.c[0], vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let mut want = 1.0;
        for k in 1..=5 {
            want *= b / k as f64;
            assert!((c.c[k][0] - want).abs() <= 1e-15);
            assert!(c.c[k][1..].iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn eval_examples() {
        let c = gronwall_coeffs(2.5, 0.0, 0.0, 0.0, 4, 4);
        assert_eq!(gronwall_eval(&c, 0.7, 0.3).unwrap(), 2.5);
        let (_, v) = gronwall_series(1.0, 0.0, 0.0, 1.0, 1.0, 1.0).unwrap();
        // I0(2) = Σ 1/(k!)², summed independently
        let mut i0 = 0.0;
        let mut t = 1.0;
        for k in 0..30 {
            if k > 0 {
                t /= (k * k) as f64;
            }
            i0 += t;
        }
        assert!((v.value - i0).abs() <= 1e-13);
        assert!((v.value - 2.2795853).abs() <= 1e-7);
        let (_, v) = gronwall_series(1.0, 1.0, 0.0, 0.0, 1.0, 0.37).unwrap();
        assert!((v.value - std::f64::consts::E).abs() <= 1e-13);
    }

    #[test]
    fn short_table_is_rejected() {
        let c = gronwall_coeffs(1.0, 1.0, 1.0, 1.0, 3, 3);
        assert!(gronwall_eval(&c, 1.0, 1.0).is_err());
        assert!(gronwall_eval(&c, -1.0, 1.0).is_err());
    }

    #[test]
    fn bound_examples() {
        assert_eq!(gronwall_bound(1.0, 0.0, 0.0, 0.0, 0.4, 0.9), 1.0);
        let b = gronwall_bound(1.0, 0.0, 0.0, 3.0, 1.0, 1.0);
        assert!((b - 6f64.exp()).abs() <= 1e-12 * b);
        let b = gronwall_bound(1.0, 0.0, 0.0, 1.0, 1.0, 1.0);
        assert!((b - (2.0 * 3f64.sqrt()).exp()).abs() <= 1e-12 * b);
        let (_, v) = gronwall_series(1.0, 0.0, 0.0, 1.0, 1.0, 1.0).unwrap();
        assert!(v.value <= b);
    }

    #[test]
    fn product_form_fails_off_the_diagonal() {
        // ζ = e^{ds} when only B1 = 1
        let (_, v) = gronwall_series(1.0, 1.0, 0.0, 0.0, 1.0, 0.0).unwrap();
        assert!(v.value > gronwall_bound_product_form(1.0, 1.0, 0.0, 0.0, 1.0, 0.0));
        assert!(v.value <= gronwall_bound(1.0, 1.0, 0.0, 0.0, 1.0, 0.0));
    }

    #[test]
    fn comparison_examples() {
        let g = make_grid(1.0, 1.0, 6, 6).unwrap();
        let k = KernelTriple::scalar(&g, |_, _, _| 0.5, |_, _, _| 0.3, |_, _, _, _| 1.0);
        let f = GridField::from_scalar(&g, |s, t| 1.0 + s * t);
        let same = check_comparison(&f, &f, &k, &g).unwrap();
        assert!(same.holds && same.worst_margin.abs() <= 1e-12);
        let mut half = f.clone();
        half.data_mut().iter_mut().for_each(|v| *v *= 0.5);
        let r = check_comparison(&f, &half, &k, &g).unwrap();
        let zeta = solve_linear(&k, &f, &g, 1e-14).unwrap();
        assert!(r.holds);
        assert!((r.corner_margin - 0.5 * zeta.at(6, 6)[0]).abs() <= 1e-12 * zeta.at(6, 6)[0]);
        let zero = KernelTriple::zeros(&g, 1);
        let r = check_comparison(&f, &half, &zero, &g).unwrap();
        assert!(r.holds && (r.worst_margin - 0.5).abs() <= 1e-15);
        let mut neg = f.clone();
        neg.at_mut(2, 2)[0] = -1.0;
        assert!(check_comparison(&f, &neg, &k, &g).is_err());
    }
}
