//! Picard iteration for the nonlinear state equation.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, GvError, Result};
use crate::grid::{Grid, GridField};
use crate::problem::{ControlField, GvProblem};

/// Stopping rule and diagnostics for [`solve_forward`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ForwardOptions {
    /// Sup-norm tolerance on successive iterates.
    pub tol: f64,
    pub max_iters: usize,
    /// When set, the log also records deltas in the weighted norm.
    pub mu: Option<f64>,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        ForwardOptions { tol: 1e-12, max_iters: 500, mu: None }
    }
}

impl ForwardOptions {
    fn check(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iters == 0 {
            return Err(invalid("forward options need tol > 0 and max_iters >= 1"));
        }
        if let Some(mu) = self.mu {
            if !(mu >= 0.0) {
                return Err(invalid("weight exponent mu must be >= 0"));
            }
        }
        Ok(())
    }
}

/// One Picard sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub delta_sup: f64,
    pub delta_weighted: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ForwardSolution {
    pub y: GridField,
    pub log: Vec<IterationRecord>,
}

/// Solves the state equation starting from `y0 = f0`.
pub fn solve_forward(p: &dyn GvProblem, u: &ControlField, g: &Grid, opts: &ForwardOptions) -> Result<ForwardSolution> {
    solve_forward_from(p, u, g, opts, None)
}

/// Same as [`solve_forward`] with an explicit starting guess.
pub fn solve_forward_from(
    p: &dyn GvProblem,
    u: &ControlField,
    g: &Grid,
    opts: &ForwardOptions,
    init: Option<&GridField>,
) -> Result<ForwardSolution> {
    opts.check()?;
    let d = p.dims();
    u.check_shape(g, &d)?;
    if !u.is_admissible() {
        return Err(invalid("control lies outside its box"));
    }
    let f0 = forcing(p, u, g)?;
    let mut y = match init {
        Some(y0) => {
            g.check_field(y0)?;
            if y0.dim() != d.n {
                return Err(invalid("initial guess has the wrong dimension"));
            }
            y0.clone()
        }
        None => f0.clone(),
    };
    let mut log = Vec::new();
    let mut next = GridField::zeros(g, d.n);
    for iter in 1..=opts.max_iters {
        picard_sweep(p, u, g, &f0, &y, &mut next)?;
        let delta_sup = next.sup_diff(&y);
        let delta_weighted = opts.mu.map(|mu| {
            let mut diff = next.clone();
            diff.axpy(-1.0, &y);
            diff.weighted_norm(g, mu)
        });
        std::mem::swap(&mut y, &mut next);
        log.push(IterationRecord { iter, delta_sup, delta_weighted });
        if delta_sup <= opts.tol {
            return Ok(ForwardSolution { y, log });
        }
    }
    let last_delta = log.last().map(|r| r.delta_sup).unwrap_or(f64::NAN);
    Err(GvError::Divergence { iterations: opts.max_iters, last_delta })
}

fn forcing(p: &dyn GvProblem, u: &ControlField, g: &Grid) -> Result<GridField> {
    let n = p.dims().n;
    let mut f0 = GridField::zeros(g, n);
    for i in 0..g.s_len() {
        for j in 0..g.t_len() {
            let out = f0.at_mut(i, j);
            p.f0(g.s(i), g.t(j), &u.point(i, j), out);
            if out.iter().any(|v| !v.is_finite()) {
                return Err(GvError::Numerical { i, j, what: "f0 is not finite".into() });
            }
        }
    }
    Ok(f0)
}

/// Writes `S(y)` into `out`.
pub(crate) fn picard_sweep(
    p: &dyn GvProblem,
    u: &ControlField,
    g: &Grid,
    f0: &GridField,
    y: &GridField,
    out: &mut GridField,
) -> Result<()> {
    let n = p.dims().n;
    let act = p.active_terms();
    let mut buf = vec![0.0; n];
    for i in 0..g.s_len() {
        let s = g.s(i);
        for j in 0..g.t_len() {
            let t = g.t(j);
            let mut acc = f0.at(i, j).to_vec();
            if act.f1 {
                for ip in 0..=i {
                    let w = g.cum_s(i, ip);
                    if w == 0.0 {
                        continue;
                    }
                    p.f1(s, t, g.s(ip), y.at(ip, j), &u.point(ip, j), &mut buf);
                    for (a, b) in acc.iter_mut().zip(&buf) {
                        *a += w * b;
                    }
                }
            }
            if act.f2 {
                for jp in 0..=j {
                    let w = g.cum_t(j, jp);
                    if w == 0.0 {
                        continue;
                    }
                    p.f2(s, t, g.t(jp), y.at(i, jp), &u.point(i, jp), &mut buf);
                    for (a, b) in acc.iter_mut().zip(&buf) {
                        *a += w * b;
                    }
                }
            }
            if act.f12 && i > 0 && j > 0 {
                for ip in 0..=i {
                    let ws = g.cum_s(i, ip);
                    for jp in 0..=j {
                        let w = ws * g.cum_t(j, jp);
                        p.f12(s, t, g.s(ip), g.t(jp), y.at(ip, jp), &u.point(ip, jp), &mut buf);
                        for (a, b) in acc.iter_mut().zip(&buf) {
                            *a += w * b;
                        }
                    }
                }
            }
            if acc.iter().any(|v| !v.is_finite()) {
                return Err(GvError::Numerical { i, j, what: "state update is not finite".into() });
            }
            out.at_mut(i, j).copy_from_slice(&acc);
        }
    }
    Ok(())
}

/// Contraction estimate of the Picard operator in the weighted norm.
///
/// `L1 (1-e^{-μ(A+B)})/μ + L2 (1-e^{-μ(A+B)})/μ + L12 (2-e^{-μA}-e^{-μB})/μ²`.
pub fn contraction_factor(l1: f64, l2: f64, l12: f64, a: f64, b: f64, mu: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(invalid("mu must be positive"));
    }
    if l1 < 0.0 || l2 < 0.0 || l12 < 0.0 || a < 0.0 || b < 0.0 {
        return Err(invalid("Lipschitz constants and extents must be nonnegative"));
    }
    let single = -(-mu * (a + b)).exp_m1() / mu;
    let double = (2.0 - (-mu * a).exp() - (-mu * b).exp()) / (mu * mu);
    Ok((l1 + l2) * single + l12 * double)
}

/// Lower end of the search in [`choose_mu`].
pub const MU_MIN: f64 = 1e-3;

/// Smallest `μ` (to within `1e-6`) with `contraction_factor <= q_target`.
///
/// Doubling from [`MU_MIN`], then bisection.
pub fn choose_mu(l1: f64, l2: f64, l12: f64, a: f64, b: f64, q_target: f64) -> Result<f64> {
    if !(q_target > 0.0 && q_target < 1.0) {
        return Err(invalid("q_target must lie in (0, 1)"));
    }
    let q = |mu: f64| contraction_factor(l1, l2, l12, a, b, mu);
    if q(MU_MIN)? <= q_target {
        return Ok(MU_MIN);
    }
    let mut hi = MU_MIN;
    while q(hi)? > q_target {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(invalid("contraction target unreachable"));
        }
    }
    let mut lo = hi / 2.0;
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if q(mid)? <= q_target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::problem::{ControlPoint, Dims, Lipschitz};

    struct Constant(f64);
    impl GvProblem for Constant {
        fn dims(&self) -> Dims {
            Dims { n: 1, p1: 0, p2: 0, p12: 0 }
        }
        fn lipschitz(&self) -> Lipschitz {
            Lipschitz::default()
        }
        fn f0(&self, _: f64, _: f64, _: &ControlPoint, out: &mut [f64]) {
            out[0] = self.0;
        }
    }

    #[test]
    fn constant_forcing_converges_at_once() {
        let g = make_grid(1.0, 1.0, 4, 4).unwrap();
        let p = Constant(2.5);
        let u = ControlField::zeros_for(&p, &g);
        let sol = solve_forward(&p, &u, &g, &ForwardOptions::default()).unwrap();
        assert_eq!(sol.log.len(), 1);
        assert!(sol.y.data().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn contraction_values() {
        let q = contraction_factor(1.0, 1.0, 0.0, 1.0, 1.0, 4.0).unwrap();
        assert!((q - 2.0 * (1.0 - (-8.0f64).exp()) / 4.0).abs() < 1e-15);
        assert!(q <= 0.5);
        assert_eq!(contraction_factor(0.0, 0.0, 0.0, 1.0, 1.0, 3.0).unwrap(), 0.0);
        let q = contraction_factor(0.0, 0.0, 1.0, 1.0, 1.0, 10.0).unwrap();
        assert!((q - (2.0 - 2.0 * (-10.0f64).exp()) / 100.0).abs() < 1e-15);
        assert!(contraction_factor(1.0, 1.0, 1.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn mu_search() {
        let mu = choose_mu(1.0, 1.0, 0.0, 1.0, 1.0, 0.5).unwrap();
        assert!((mu - 4.0).abs() < 2e-3, "mu = {mu}");
        assert!(contraction_factor(1.0, 1.0, 0.0, 1.0, 1.0, mu).unwrap() <= 0.5);
        assert!(contraction_factor(1.0, 1.0, 0.0, 1.0, 1.0, mu - 2e-6).unwrap() > 0.5);
        assert_eq!(choose_mu(0.0, 0.0, 0.0, 1.0, 1.0, 0.5).unwrap(), MU_MIN);
        let mu = choose_mu(5.0, 5.0, 5.0, 1.0, 1.0, 0.9).unwrap();
        assert!(contraction_factor(5.0, 5.0, 5.0, 1.0, 1.0, mu).unwrap() <= 0.9);
    }
}
