//! Cost evaluation, the exact discrete gradient, and finite-difference checks.
//!
//! The gradient is assembled from the control derivatives of the
//! Hamiltonians node by node. Pairing it with a direction `δu` under the
//! weighted product of [`inner_product`] gives the derivative of the
//! discrete cost along `δu`, to the accuracy of the state and co-state
//! solves.

use serde::Serialize;

use crate::costate::{hamiltonian_u_gradient, linearized_kernels, CoState, HamiltonianAt};
use crate::error::{invalid, GvError, Result};
use crate::forward::{solve_forward, ForwardOptions};
use crate::grid::{Grid, GridField, NodeSeq};
use crate::gvlinalg::solve_linear_picard;
use crate::problem::{ControlField, GvProblem};

/// Discrete cost of a state/control pair.
pub fn cost(p: &dyn GvProblem, y: &GridField, u: &ControlField, g: &Grid) -> Result<f64> {
    let d = p.dims();
    g.check_field(y)?;
    u.check_shape(g, &d)?;
    let (ns, nt) = (g.ns(), g.nt());
    let mut j = p.cost0(y.at(ns, nt), &u.point(ns, nt));
    for i in 0..g.s_len() {
        j += g.full_s(i) * p.cost1(g.s(i), y.at(i, nt), &u.point(i, nt));
    }
    for jj in 0..g.t_len() {
        j += g.full_t(jj) * p.cost2(g.t(jj), y.at(ns, jj), &u.point(ns, jj));
    }
    for i in 0..g.s_len() {
        let ws = g.full_s(i);
        for jj in 0..g.t_len() {
            j += ws * g.full_t(jj) * p.cost12(g.s(i), g.t(jj), y.at(i, jj), &u.point(i, jj));
        }
    }
    if !j.is_finite() {
        return Err(GvError::Numerical { i: ns, j: nt, what: "cost is not finite".into() });
    }
    Ok(j)
}

/// Raw corner contributions `∇u h0`, split by block.
///
/// They are already folded into the last samples of the gradient blocks;
/// kept here for reporting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndpointGradient {
    pub u1_a: Vec<f64>,
    pub u2_b: Vec<f64>,
    pub u12_ab: Vec<f64>,
}

/// Gradient of the discrete cost, shaped like a [`ControlField`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub g_u1: NodeSeq,
    pub g_u2: NodeSeq,
    pub g_u12: GridField,
    pub g_end: EndpointGradient,
}

impl GradientField {
    /// The gradient as a control-shaped direction (same samples, `u`'s boxes).
    pub fn as_direction(&self, like: &ControlField) -> ControlField {
        ControlField { u1: self.g_u1.clone(), u2: self.g_u2.clone(), u12: self.g_u12.clone(), boxes: like.boxes.clone() }
    }

    pub fn sup_norm(&self) -> f64 {
        self.g_u1.sup_norm().max(self.g_u2.sup_norm()).max(self.g_u12.sup_norm())
    }

    /// `alpha * self`, sample by sample.
    pub fn scaled(&self, alpha: f64) -> GradientField {
        let mut out = self.clone();
        out.g_u1.data_mut().iter_mut().for_each(|v| *v *= alpha);
        out.g_u2.data_mut().iter_mut().for_each(|v| *v *= alpha);
        out.g_u12.data_mut().iter_mut().for_each(|v| *v *= alpha);
        for v in out.g_end.u1_a.iter_mut().chain(out.g_end.u2_b.iter_mut()).chain(out.g_end.u12_ab.iter_mut()) {
            *v *= alpha;
        }
        out
    }
}

/// Weighted pairing `Σ W g1·δu1 + Σ V g2·δu2 + ΣΣ W V g12·δu12`.
///
/// Works for any two control-shaped objects; see [`inner_product`].
pub fn control_dot(a: &ControlField, b: &ControlField, g: &Grid) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.u1.len() {
        acc += g.full_s(i) * dot(a.u1.at(i), b.u1.at(i));
    }
    for j in 0..a.u2.len() {
        acc += g.full_t(j) * dot(a.u2.at(j), b.u2.at(j));
    }
    for i in 0..a.u12.s_len() {
        for j in 0..a.u12.t_len() {
            acc += g.full_s(i) * g.full_t(j) * dot(a.u12.at(i, j), b.u12.at(i, j));
        }
    }
    acc
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `<G, δu>_w`, the first variation of the cost along `δu`.
pub fn inner_product(grad: &GradientField, du: &ControlField, g: &Grid) -> f64 {
    control_dot(&grad.as_direction(du), du, g)
}

/// Exact gradient of the discrete cost at `(y, u)` given the co-state.
pub fn gradient(p: &dyn GvProblem, y: &GridField, u: &ControlField, psi: &CoState, g: &Grid) -> Result<GradientField> {
    let d = p.dims();
    u.check_shape(g, &d)?;
    let (p1, p2, p12) = (d.p1, d.p2, d.p12);
    let (ns, nt) = (g.ns(), g.nt());
    let (sl, tl) = (g.s_len(), g.t_len());
    let split = |v: &[f64]| (v[..p1].to_vec(), v[p1..p1 + p2].to_vec(), v[p1 + p2..].to_vec());

    let mut g1 = NodeSeq::zeros(sl, p1);
    let mut g2 = NodeSeq::zeros(tl, p2);
    let mut g12 = GridField::zeros(g, p12);
    for i in 0..sl {
        for j in 0..tl {
            let h = hamiltonian_u_gradient(p, y, u, psi, g, HamiltonianAt::H12(i, j))?;
            let (a, b, c) = split(&h);
            axpy(g1.at_mut(i), g.full_t(j), &a);
            axpy(g2.at_mut(j), g.full_s(i), &b);
            g12.at_mut(i, j).copy_from_slice(&c);
        }
    }
    // top edge
    let mut top_u2 = vec![0.0; p2];
    for i in 0..sl {
        let h = hamiltonian_u_gradient(p, y, u, psi, g, HamiltonianAt::H1(i))?;
        let (a, b, c) = split(&h);
        axpy(g1.at_mut(i), 1.0, &a);
        axpy(&mut top_u2, g.full_s(i), &b);
        axpy(g12.at_mut(i, nt), 1.0 / g.full_t(nt), &c);
    }
    // right edge
    let mut right_u1 = vec![0.0; p1];
    for j in 0..tl {
        let h = hamiltonian_u_gradient(p, y, u, psi, g, HamiltonianAt::H2(j))?;
        let (a, b, c) = split(&h);
        axpy(&mut right_u1, g.full_t(j), &a);
        axpy(g2.at_mut(j), 1.0, &b);
        axpy(g12.at_mut(ns, j), 1.0 / g.full_s(ns), &c);
    }
    // corner
    let h = hamiltonian_u_gradient(p, y, u, psi, g, HamiltonianAt::H0)?;
    let (a, b, c) = split(&h);
    axpy(&mut right_u1, 1.0, &a);
    axpy(&mut top_u2, 1.0, &b);
    axpy(g1.at_mut(ns), 1.0 / g.full_s(ns), &right_u1);
    axpy(g2.at_mut(nt), 1.0 / g.full_t(nt), &top_u2);
    axpy(g12.at_mut(ns, nt), 1.0 / (g.full_s(ns) * g.full_t(nt)), &c);

    let out = GradientField { g_u1: g1, g_u2: g2, g_u12: g12, g_end: EndpointGradient { u1_a: a, u2_b: b, u12_ab: c } };
    if !out.sup_norm().is_finite() {
        return Err(GvError::Numerical { i: 0, j: 0, what: "gradient is not finite".into() });
    }
    Ok(out)
}

fn axpy(dst: &mut [f64], alpha: f64, src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += alpha * s;
    }
}

/// Central difference of the cost along `δu`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FdResult {
    pub value: f64,
    /// Step actually used (halved until both probes are admissible).
    pub eps: f64,
    /// The same difference at `eps / 2`.
    pub value_half: f64,
}

impl FdResult {
    /// Gap between the two step sizes, a cheap truncation-error indicator.
    pub fn richardson_gap(&self) -> f64 {
        (self.value - self.value_half).abs()
    }
}

/// Cost after a forward solve.
pub fn cost_of(p: &dyn GvProblem, u: &ControlField, g: &Grid, fopts: &ForwardOptions) -> Result<f64> {
    let sol = solve_forward(p, u, g, fopts)?;
    cost(p, &sol.y, u, g)
}

/// `(J(u + ε δu) - J(u - ε δu)) / (2ε)`, with `ε` halved while a probe
/// leaves the box.
pub fn fd_directional(p: &dyn GvProblem, u: &ControlField, du: &ControlField, g: &Grid, eps: f64, fopts: &ForwardOptions) -> Result<FdResult> {
    if !(eps > 0.0) {
        return Err(invalid("finite-difference step must be positive"));
    }
    let mut e = eps;
    for _ in 0..40 {
        if u.offset(e, du).is_admissible() && u.offset(-e, du).is_admissible() {
            let central = |h: f64| -> Result<f64> {
                Ok((cost_of(p, &u.offset(h, du), g, fopts)? - cost_of(p, &u.offset(-h, du), g, fopts)?) / (2.0 * h))
            };
            return Ok(FdResult { value: central(e)?, eps: e, value_half: central(0.5 * e)? });
        }
        e *= 0.5;
    }
    Err(invalid("direction leaves the control box for every tested step"))
}

/// Solves the linearized state equation for the variation `δy` caused by `δu`.
pub fn linearized_state(p: &dyn GvProblem, y: &GridField, u: &ControlField, du: &ControlField, g: &Grid, tol: f64) -> Result<GridField> {
    let d = p.dims();
    let (n, np) = (d.n, d.p());
    u.check_shape(g, &d)?;
    du.check_shape(g, &d)?;
    let act = p.active_terms();
    let mut jac = vec![0.0; n * np];
    let mut forcing = GridField::zeros(g, n);
    let dvec = |i: usize, j: usize| du.point(i, j).to_vec();
    for i in 0..g.s_len() {
        let s = g.s(i);
        for j in 0..g.t_len() {
            let t = g.t(j);
            let mut acc = vec![0.0; n];
            p.du_f0(s, t, &u.point(i, j), &mut jac);
            mat_vec_acc(&mut acc, 1.0, &jac, &dvec(i, j), n, np);
            if act.f1 {
                for ip in 0..=i {
                    let w = g.cum_s(i, ip);
                    if w != 0.0 {
                        p.du_f1(s, t, g.s(ip), y.at(ip, j), &u.point(ip, j), &mut jac);
                        mat_vec_acc(&mut acc, w, &jac, &dvec(ip, j), n, np);
                    }
                }
            }
            if act.f2 {
                for jp in 0..=j {
                    let w = g.cum_t(j, jp);
                    if w != 0.0 {
                        p.du_f2(s, t, g.t(jp), y.at(i, jp), &u.point(i, jp), &mut jac);
                        mat_vec_acc(&mut acc, w, &jac, &dvec(i, jp), n, np);
                    }
                }
            }
            if act.f12 && i > 0 && j > 0 {
                for ip in 0..=i {
                    for jp in 0..=j {
                        let w = g.cum_s(i, ip) * g.cum_t(j, jp);
                        p.du_f12(s, t, g.s(ip), g.t(jp), y.at(ip, jp), &u.point(ip, jp), &mut jac);
                        mat_vec_acc(&mut acc, w, &jac, &dvec(ip, jp), n, np);
                    }
                }
            }
            forcing.at_mut(i, j).copy_from_slice(&acc);
        }
    }
    let k = linearized_kernels(p, y, u, g)?;
    solve_linear_picard(&k, &forcing, g, tol, 10_000)
}

fn mat_vec_acc(acc: &mut [f64], w: f64, m: &[f64], v: &[f64], rows: usize, cols: usize) {
    for r in 0..rows {
        let s: f64 = m[r * cols..(r + 1) * cols].iter().zip(v).map(|(a, b)| a * b).sum();
        acc[r] += w * s;
    }
}

/// First variation from the state variation: the gradients of the four
/// cost terms paired with `δy` and `δu`.
pub fn first_variation(p: &dyn GvProblem, y: &GridField, u: &ControlField, du: &ControlField, dy: &GridField, g: &Grid) -> Result<f64> {
    let d = p.dims();
    let (n, np) = (d.n, d.p());
    let (ns, nt) = (g.ns(), g.nt());
    let mut gy = vec![0.0; n];
    let mut gu = vec![0.0; np];
    let pair = |gy: &[f64], gu: &[f64], i: usize, j: usize| dot(gy, dy.at(i, j)) + dot(gu, &du.point(i, j).to_vec());

    p.dy_cost0(y.at(ns, nt), &u.point(ns, nt), &mut gy);
    p.du_cost0(y.at(ns, nt), &u.point(ns, nt), &mut gu);
    let mut dj = pair(&gy, &gu, ns, nt);
    for i in 0..g.s_len() {
        p.dy_cost1(g.s(i), y.at(i, nt), &u.point(i, nt), &mut gy);
        p.du_cost1(g.s(i), y.at(i, nt), &u.point(i, nt), &mut gu);
        dj += g.full_s(i) * pair(&gy, &gu, i, nt);
    }
    for j in 0..g.t_len() {
        p.dy_cost2(g.t(j), y.at(ns, j), &u.point(ns, j), &mut gy);
        p.du_cost2(g.t(j), y.at(ns, j), &u.point(ns, j), &mut gu);
        dj += g.full_t(j) * pair(&gy, &gu, ns, j);
    }
    for i in 0..g.s_len() {
        for j in 0..g.t_len() {
            p.dy_cost12(g.s(i), g.t(j), y.at(i, j), &u.point(i, j), &mut gy);
            p.du_cost12(g.s(i), g.t(j), y.at(i, j), &u.point(i, j), &mut gu);
            dj += g.full_s(i) * g.full_t(j) * pair(&gy, &gu, i, j);
        }
    }
    Ok(dj)
}
