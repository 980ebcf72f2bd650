//! Co-state equations and Hamiltonians.
//!
//! The co-state `(ψ0, ψ1(s), ψ2(t), ψ12(s,t))` is the discrete Lagrange
//! multiplier of the state equation, split by where it lives: the corner
//! `(A,B)`, the top edge `t = B`, the right edge `s = A`, and the interior.
//! With the transposed weights of [`Grid::adj_s`] the split is exact, so the
//! gradient built from these multipliers is the true derivative of the
//! discrete cost.
//!
//! The Hamiltonians carry the `f0` terms as well (`ψ12 f0` in `h12`, and so
//! on). Without them the gradient misses the direct control influence on
//! the state.

use serde::Serialize;

use crate::error::{invalid, GvError, Result};
use crate::grid::{Grid, GridField, NodeSeq};
use crate::gvlinalg::{
    adjoint_residual, gv_adjoint_apply, resolvent, solve_adjoint_picard, vecmat_acc, KernelTriple,
};
use crate::problem::{ControlField, ControlPoint, ControlVec, Dims, GvProblem};

/// Iteration cap for the backward fixed-point solve of `ψ12`.
const ADJOINT_MAX_ITERS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct CoState {
    pub psi0: Vec<f64>,
    pub psi1: NodeSeq,
    pub psi2: NodeSeq,
    pub psi12: GridField,
}

impl CoState {
    /// Largest componentwise gap to another co-state.
    pub fn sup_diff(&self, other: &CoState) -> f64 {
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        d(&self.psi0, &other.psi0)
            .max(d(self.psi1.data(), other.psi1.data()))
            .max(d(self.psi2.data(), other.psi2.data()))
            .max(self.psi12.sup_diff(&other.psi12))
    }

    pub fn sup_norm(&self) -> f64 {
        self.psi0
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(self.psi1.sup_norm())
            .max(self.psi2.sup_norm())
            .max(self.psi12.sup_norm())
    }
}

fn check_inputs(p: &dyn GvProblem, y: &GridField, u: &ControlField, g: &Grid) -> Result<Dims> {
    let d = p.dims();
    g.check_field(y)?;
    if y.dim() != d.n {
        return Err(invalid("state field has the wrong dimension"));
    }
    u.check_shape(g, &d)?;
    Ok(d)
}

/// Jacobians of `f1`, `f2`, `f12` in `y` along the state `y`.
pub fn linearized_kernels(p: &dyn GvProblem, y: &GridField, u: &ControlField, g: &Grid) -> Result<KernelTriple> {
    let d = check_inputs(p, y, u, g)?;
    let act = p.active_terms();
    let mut k = KernelTriple::zeros(g, d.n);
    for i in 0..g.s_len() {
        let s = g.s(i);
        for j in 0..g.t_len() {
            let t = g.t(j);
            if act.f1 {
                for ip in 0..=i {
                    p.dy_f1(s, t, g.s(ip), y.at(ip, j), &u.point(ip, j), k.k1_mut(i, j, ip));
                }
            }
            if act.f2 {
                for jp in 0..=j {
                    p.dy_f2(s, t, g.t(jp), y.at(i, jp), &u.point(i, jp), k.k2_mut(i, j, jp));
                }
            }
            if act.f12 {
                for ip in 0..=i {
                    for jp in 0..=j {
                        p.dy_f12(s, t, g.s(ip), g.t(jp), y.at(ip, jp), &u.point(ip, jp), k.k12_mut(i, j, ip, jp));
                    }
                }
            }
        }
    }
    let (a, b, c) = k.sup_norms();
    if !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return Err(GvError::Numerical { i: 0, j: 0, what: "state Jacobian is not finite".into() });
    }
    Ok(k)
}

// Solves ψ (I - w B) = rhs for a row covector ψ, with B an n x n block.
fn solve_row(rhs: &[f64], w: f64, blk: &[f64], n: usize) -> Result<Vec<f64>> {
    if w == 0.0 {
        return Ok(rhs.to_vec());
    }
    // (I - w B)^T x = rhs, dense Gaussian elimination with partial pivoting
    let mut a = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            a[r * n + c] = if r == c { 1.0 } else { 0.0 } - w * blk[c * n + r];
        }
    }
    let mut x = rhs.to_vec();
    for col in 0..n {
        let piv = (col..n).max_by(|&p, &q| a[p * n + col].abs().total_cmp(&a[q * n + col].abs())).unwrap();
        if a[piv * n + col].abs() < 1e-300 {
            return Err(GvError::Numerical { i: 0, j: 0, what: "singular diagonal block in co-state sweep".into() });
        }
        if piv != col {
            for c in 0..n {
                a.swap(piv * n + c, col * n + c);
            }
            x.swap(piv, col);
        }
        for r in (col + 1)..n {
            let f = a[r * n + col] / a[col * n + col];
            if f != 0.0 {
                for c in col..n {
                    a[r * n + c] -= f * a[col * n + c];
                }
                x[r] -= f * x[col];
            }
        }
    }
    for col in (0..n).rev() {
        let mut v = x[col];
        for c in (col + 1)..n {
            v -= a[col * n + c] * x[c];
        }
        x[col] = v / a[col * n + col];
    }
    Ok(x)
}

struct Forcings {
    psi0: Vec<f64>,
    // ∇F1 + ψ0 K1(N,M,p) and its t analogue
    g1: NodeSeq,
    g2: NodeSeq,
}

fn edge_forcings(p: &dyn GvProblem, y: &GridField, u: &ControlField, g: &Grid, k: &KernelTriple) -> Forcings {
    let n = p.dims().n;
    let (ns, nt) = (g.ns(), g.nt());
    let mut psi0 = vec![0.0; n];
    p.dy_cost0(y.at(ns, nt), &u.point(ns, nt), &mut psi0);
    let mut g1 = NodeSeq::zeros(g.s_len(), n);
    for i in 0..g.s_len() {
        let out = g1.at_mut(i);
        p.dy_cost1(g.s(i), y.at(i, nt), &u.point(i, nt), out);
        vecmat_acc(out, 1.0, &psi0, k.k1(ns, nt, i), n);
    }
    let mut g2 = NodeSeq::zeros(g.t_len(), n);
    for j in 0..g.t_len() {
        let out = g2.at_mut(j);
        p.dy_cost2(g.t(j), y.at(ns, j), &u.point(ns, j), out);
        vecmat_acc(out, 1.0, &psi0, k.k2(ns, nt, j), n);
    }
    Forcings { psi0, g1, g2 }
}

// Forcing of the interior equation, given the edge co-states.
fn interior_forcing(
    p: &dyn GvProblem,
    y: &GridField,
    u: &ControlField,
    g: &Grid,
    k: &KernelTriple,
    psi0: &[f64],
    psi1: &NodeSeq,
    psi2: &NodeSeq,
) -> GridField {
    let n = p.dims().n;
    let (ns, nt) = (g.ns(), g.nt());
    let mut z = GridField::zeros(g, n);
    for pi in 0..g.s_len() {
        for q in 0..g.t_len() {
            let out = z.at_mut(pi, q);
            p.dy_cost12(g.s(pi), g.t(q), y.at(pi, q), &u.point(pi, q), out);
            vecmat_acc(out, 1.0, psi1.at(pi), k.k2(pi, nt, q), n);
            vecmat_acc(out, 1.0, psi2.at(q), k.k1(ns, q, pi), n);
            vecmat_acc(out, 1.0, psi0, k.k12(ns, nt, pi, q), n);
            for i in pi..g.s_len() {
                let w = g.adj_s(pi, i);
                if w != 0.0 {
                    vecmat_acc(out, w, psi1.at(i), k.k12(i, nt, pi, q), n);
                }
            }
            for j in q..g.t_len() {
                let w = g.adj_t(q, j);
                if w != 0.0 {
                    vecmat_acc(out, w, psi2.at(j), k.k12(ns, j, pi, q), n);
                }
            }
        }
    }
    z
}

// Backward substitution for ψ(p) = g(p) + Σ_{i>=p} ω_{p,i} ψ(i) B(i, p).
fn backward_edge(
    forcing: &NodeSeq,
    n: usize,
    weight: impl Fn(usize, usize) -> f64,
    block: impl Fn(usize, usize) -> Vec<f64>,
) -> Result<NodeSeq> {
    let len = forcing.len();
    let mut psi = NodeSeq::zeros(len, n);
    for pi in (0..len).rev() {
        let mut rhs = forcing.at(pi).to_vec();
        for i in (pi + 1)..len {
            let w = weight(pi, i);
            if w != 0.0 {
                let b = block(i, pi);
                let v = psi.at(i).to_vec();
                vecmat_acc(&mut rhs, w, &v, &b, n);
            }
        }
        let x = solve_row(&rhs, weight(pi, pi), &block(pi, pi), n)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(GvError::Numerical { i: pi, j: 0, what: "edge co-state is not finite".into() });
        }
        psi.at_mut(pi).copy_from_slice(&x);
    }
    Ok(psi)
}

/// Co-state by backward substitution on the edges and backward Picard
/// iteration in the interior.
pub fn solve_costate(p: &dyn GvProblem, y: &GridField, u: &ControlField, g: &Grid, tol: f64) -> Result<CoState> {
    let d = check_inputs(p, y, u, g)?;
    let k = linearized_kernels(p, y, u, g)?;
    solve_costate_with(p, y, u, g, &k, tol, d.n)
}

fn solve_costate_with(
    p: &dyn GvProblem,
    y: &GridField,
    u: &ControlField,
    g: &Grid,
    k: &KernelTriple,
    tol: f64,
    n: usize,
) -> Result<CoState> {
    let (ns, nt) = (g.ns(), g.nt());
    let f = edge_forcings(p, y, u, g, k);
    let psi1 = backward_edge(&f.g1, n, |a, b| g.adj_s(a, b), |i, pi| k.k1(i, nt, pi).to_vec())?;
    let psi2 = backward_edge(&f.g2, n, |a, b| g.adj_t(a, b), |j, q| k.k2(ns, j, q).to_vec())?;
    let zeta0 = interior_forcing(p, y, u, g, k, &f.psi0, &psi1, &psi2);
    let psi12 = solve_adjoint_picard(k, &zeta0, g, tol, ADJOINT_MAX_ITERS)?;
    Ok(CoState { psi0: f.psi0, psi1, psi2, psi12 })
}

/// Co-state through resolvent kernels: one-axis resolvents on the edges,
/// the two-variable resolvent in the interior.
pub fn costate_via_resolvent(p: &dyn GvProblem, y: &GridField, u: &ControlField, g: &Grid, tol: f64) -> Result<CoState> {
    let d = check_inputs(p, y, u, g)?;
    let n = d.n;
    let (ns, nt) = (g.ns(), g.nt());
    let k = linearized_kernels(p, y, u, g)?;
    let r = resolvent(&k, g, tol)?.kernel;
    let f = edge_forcings(p, y, u, g, &k);
    // R1 restricted to t = B is the resolvent of K1 restricted to t = B,
    // and likewise R2 on s = A.
    let mut psi1 = f.g1.clone();
    for pi in 0..g.s_len() {
        let out = psi1.at_mut(pi);
        for i in pi..g.s_len() {
            let w = g.adj_s(pi, i);
            if w != 0.0 {
                vecmat_acc(out, w, f.g1.at(i), r.k1(i, nt, pi), n);
            }
        }
    }
    let mut psi2 = f.g2.clone();
    for q in 0..g.t_len() {
        let out = psi2.at_mut(q);
        for j in q..g.t_len() {
            let w = g.adj_t(q, j);
            if w != 0.0 {
                vecmat_acc(out, w, f.g2.at(j), r.k2(ns, j, q), n);
            }
        }
    }
    let zeta0 = interior_forcing(p, y, u, g, &k, &f.psi0, &psi1, &psi2);
    let mut psi12 = gv_adjoint_apply(&zeta0, &r, g)?;
    psi12.axpy(1.0, &zeta0);
    Ok(CoState { psi0: f.psi0, psi1, psi2, psi12 })
}

/// Sup-norm residual of each co-state equation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CostateResiduals {
    pub psi0: f64,
    pub psi1: f64,
    pub psi2: f64,
    pub psi12: f64,
}

impl CostateResiduals {
    pub fn max(&self) -> f64 {
        self.psi0.max(self.psi1).max(self.psi2).max(self.psi12)
    }
}

/// Substitutes `psi` into the right-hand sides of the co-state equations.
pub fn costate_residuals(p: &dyn GvProblem, y: &GridField, u: &ControlField, psi: &CoState, g: &Grid) -> Result<CostateResiduals> {
    let d = check_inputs(p, y, u, g)?;
    let n = d.n;
    let (ns, nt) = (g.ns(), g.nt());
    let k = linearized_kernels(p, y, u, g)?;
    let f = edge_forcings(p, y, u, g, &k);
    let r0 = f.psi0.iter().zip(&psi.psi0).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let mut r1 = 0.0f64;
    for pi in 0..g.s_len() {
        let mut rhs = f.g1.at(pi).to_vec();
        for i in pi..g.s_len() {
            vecmat_acc(&mut rhs, g.adj_s(pi, i), psi.psi1.at(i), k.k1(i, nt, pi), n);
        }
        for (a, b) in rhs.iter().zip(psi.psi1.at(pi)) {
            r1 = r1.max((a - b).abs());
        }
    }
    let mut r2 = 0.0f64;
    for q in 0..g.t_len() {
        let mut rhs = f.g2.at(q).to_vec();
        for j in q..g.t_len() {
            vecmat_acc(&mut rhs, g.adj_t(q, j), psi.psi2.at(j), k.k2(ns, j, q), n);
        }
        for (a, b) in rhs.iter().zip(psi.psi2.at(q)) {
            r2 = r2.max((a - b).abs());
        }
    }
    let zeta0 = interior_forcing(p, y, u, g, &k, &psi.psi0, &psi.psi1, &psi.psi2);
    let r12 = adjoint_residual(&k, &psi.psi12, &zeta0, g)?;
    Ok(CostateResiduals { psi0: r0, psi1: r1, psi2: r2, psi12: r12 })
}

/// Which Hamiltonian to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HamiltonianAt {
    /// Corner Hamiltonian `h0`.
    H0,
    /// Top-edge Hamiltonian `h1(s_i)`.
    H1(usize),
    /// Right-edge Hamiltonian `h2(t_j)`.
    H2(usize),
    /// Interior Hamiltonian `h12(s_i, t_j)`.
    H12(usize, usize),
}

/// Replacement values for some blocks of the local control triple.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ControlOverride {
    pub u1: Option<Vec<f64>>,
    pub u2: Option<Vec<f64>>,
    pub u12: Option<Vec<f64>>,
}

impl HamiltonianAt {
    // Node whose state and control enter the Hamiltonian.
    fn node(&self, g: &Grid) -> Result<(usize, usize)> {
        let (ns, nt) = (g.ns(), g.nt());
        match *self {
            HamiltonianAt::H0 => Ok((ns, nt)),
            HamiltonianAt::H1(i) if i <= ns => Ok((i, nt)),
            HamiltonianAt::H2(j) if j <= nt => Ok((ns, j)),
            HamiltonianAt::H12(i, j) if i <= ns && j <= nt => Ok((i, j)),
            other => Err(invalid(format!("Hamiltonian location {other:?} is outside the grid"))),
        }
    }
}

fn local_control(u: &ControlField, d: Dims, i: usize, j: usize, ov: Option<&ControlOverride>) -> Result<ControlVec> {
    let base = u.point(i, j);
    let pick = |o: Option<&Vec<f64>>, b: &[f64], name: &str| -> Result<Vec<f64>> {
        match o {
            Some(v) if v.len() != b.len() => Err(invalid(format!("override for {name} has length {}, want {}", v.len(), b.len()))),
            Some(v) => Ok(v.clone()),
            None => Ok(b.to_vec()),
        }
    };
    let mut data = pick(ov.and_then(|o| o.u1.as_ref()), base.u1, "u1")?;
    data.extend(pick(ov.and_then(|o| o.u2.as_ref()), base.u2, "u2")?);
    data.extend(pick(ov.and_then(|o| o.u12.as_ref()), base.u12, "u12")?);
    Ok(ControlVec { dims: d, data })
}

// Accumulates ψ·f (value) and ψ·∂f/∂u (gradient) for every term of one Hamiltonian.
struct HamAcc {
    n: usize,
    np: usize,
    value: f64,
    grad: Option<Vec<f64>>,
    fbuf: Vec<f64>,
    jbuf: Vec<f64>,
}

impl HamAcc {
    fn add(&mut self, w: f64, psi: &[f64], f: impl Fn(&mut [f64]), du: impl Fn(&mut [f64])) {
        if w == 0.0 || psi.iter().all(|&v| v == 0.0) {
            return;
        }
        f(&mut self.fbuf);
        self.value += w * psi.iter().zip(&self.fbuf).map(|(a, b)| a * b).sum::<f64>();
        if let Some(gr) = self.grad.as_mut() {
            du(&mut self.jbuf);
            for r in 0..self.n {
                let x = w * psi[r];
                if x != 0.0 {
                    for c in 0..self.np {
                        gr[c] += x * self.jbuf[r * self.np + c];
                    }
                }
            }
        }
    }
}

fn hamiltonian_impl(
    p: &dyn GvProblem,
    y: &GridField,
    u: &ControlField,
    psi: &CoState,
    g: &Grid,
    at: HamiltonianAt,
    ov: Option<&ControlOverride>,
    want_grad: bool,
) -> Result<(f64, Vec<f64>)> {
    let d = check_inputs(p, y, u, g)?;
    let (n, np) = (d.n, d.p());
    let (ni, nj) = at.node(g)?;
    let (ns, nt) = (g.ns(), g.nt());
    let act = p.active_terms();
    let cv = local_control(u, d, ni, nj, ov)?;
    let cu = cv.point();
    let yv = y.at(ni, nj);
    let (sp, tq) = (g.s(ni), g.t(nj));
    let mut h = HamAcc { n, np, value: 0.0, grad: want_grad.then(|| vec![0.0; np]), fbuf: vec![0.0; n], jbuf: vec![0.0; n * np] };
    let cu_ref: &ControlPoint = &cu;

    // cost term
    let mut cg = vec![0.0; np];
    match at {
        HamiltonianAt::H0 => {
            h.value += p.cost0(yv, cu_ref);
            if want_grad {
                p.du_cost0(yv, cu_ref, &mut cg);
            }
        }
        HamiltonianAt::H1(_) => {
            h.value += p.cost1(sp, yv, cu_ref);
            if want_grad {
                p.du_cost1(sp, yv, cu_ref, &mut cg);
            }
        }
        HamiltonianAt::H2(_) => {
            h.value += p.cost2(tq, yv, cu_ref);
            if want_grad {
                p.du_cost2(tq, yv, cu_ref, &mut cg);
            }
        }
        HamiltonianAt::H12(..) => {
            h.value += p.cost12(sp, tq, yv, cu_ref);
            if want_grad {
                p.du_cost12(sp, tq, yv, cu_ref, &mut cg);
            }
        }
    }
    if let Some(gr) = h.grad.as_mut() {
        for (a, b) in gr.iter_mut().zip(&cg) {
            *a += b;
        }
    }

    let f0 = |o: &mut [f64]| p.f0(sp, tq, cu_ref, o);
    let df0 = |o: &mut [f64]| p.du_f0(sp, tq, cu_ref, o);
    match at {
        HamiltonianAt::H0 => {
            h.add(1.0, &psi.psi0, f0, df0);
        }
        HamiltonianAt::H1(pi) => {
            h.add(1.0, psi.psi1.at(pi), f0, df0);
            if act.f1 {
                // node pi on the top edge feeds f1 at (i, B), i >= pi, and at the corner
                h.add(1.0, &psi.psi0, |o| p.f1(g.s(ns), g.t(nt), sp, yv, cu_ref, o), |o| p.du_f1(g.s(ns), g.t(nt), sp, yv, cu_ref, o));
                for i in pi..g.s_len() {
                    let si = g.s(i);
                    h.add(g.adj_s(pi, i), psi.psi1.at(i), |o| p.f1(si, tq, sp, yv, cu_ref, o), |o| p.du_f1(si, tq, sp, yv, cu_ref, o));
                }
            }
        }
        HamiltonianAt::H2(q) => {
            h.add(1.0, psi.psi2.at(q), f0, df0);
            if act.f2 {
                h.add(1.0, &psi.psi0, |o| p.f2(g.s(ns), g.t(nt), tq, yv, cu_ref, o), |o| p.du_f2(g.s(ns), g.t(nt), tq, yv, cu_ref, o));
                for j in q..g.t_len() {
                    let tj = g.t(j);
                    h.add(g.adj_t(q, j), psi.psi2.at(j), |o| p.f2(sp, tj, tq, yv, cu_ref, o), |o| p.du_f2(sp, tj, tq, yv, cu_ref, o));
                }
            }
        }
        HamiltonianAt::H12(pi, q) => {
            let (sa, tb) = (g.s(ns), g.t(nt));
            h.add(1.0, psi.psi12.at(pi, q), f0, df0);
            if act.f1 {
                h.add(1.0, psi.psi2.at(q), |o| p.f1(sa, tq, sp, yv, cu_ref, o), |o| p.du_f1(sa, tq, sp, yv, cu_ref, o));
                for i in pi..g.s_len() {
                    let si = g.s(i);
                    h.add(g.adj_s(pi, i), psi.psi12.at(i, q), |o| p.f1(si, tq, sp, yv, cu_ref, o), |o| p.du_f1(si, tq, sp, yv, cu_ref, o));
                }
            }
            if act.f2 {
                h.add(1.0, psi.psi1.at(pi), |o| p.f2(sp, tb, tq, yv, cu_ref, o), |o| p.du_f2(sp, tb, tq, yv, cu_ref, o));
                for j in q..g.t_len() {
                    let tj = g.t(j);
                    h.add(g.adj_t(q, j), psi.psi12.at(pi, j), |o| p.f2(sp, tj, tq, yv, cu_ref, o), |o| p.du_f2(sp, tj, tq, yv, cu_ref, o));
                }
            }
            if act.f12 {
                h.add(1.0, &psi.psi0, |o| p.f12(sa, tb, sp, tq, yv, cu_ref, o), |o| p.du_f12(sa, tb, sp, tq, yv, cu_ref, o));
                for i in pi..g.s_len() {
                    let si = g.s(i);
                    h.add(g.adj_s(pi, i), psi.psi1.at(i), |o| p.f12(si, tb, sp, tq, yv, cu_ref, o), |o| p.du_f12(si, tb, sp, tq, yv, cu_ref, o));
                }
                for j in q..g.t_len() {
                    let tj = g.t(j);
                    h.add(g.adj_t(q, j), psi.psi2.at(j), |o| p.f12(sa, tj, sp, tq, yv, cu_ref, o), |o| p.du_f12(sa, tj, sp, tq, yv, cu_ref, o));
                }
                for i in pi..g.s_len() {
                    let ws = g.adj_s(pi, i);
                    if ws == 0.0 {
                        continue;
                    }
                    let si = g.s(i);
                    for j in q..g.t_len() {
                        let tj = g.t(j);
                        h.add(ws * g.adj_t(q, j), psi.psi12.at(i, j), |o| p.f12(si, tj, sp, tq, yv, cu_ref, o), |o| p.du_f12(si, tj, sp, tq, yv, cu_ref, o));
                    }
                }
            }
        }
    }
    if !h.value.is_finite() {
        return Err(GvError::Numerical { i: ni, j: nj, what: "Hamiltonian is not finite".into() });
    }
    Ok((h.value, h.grad.unwrap_or_default()))
}

/// Value of one Hamiltonian, optionally with some control blocks replaced.
pub fn hamiltonian(
    p: &dyn GvProblem,
    y: &GridField,
    u: &ControlField,
    psi: &CoState,
    g: &Grid,
    at: HamiltonianAt,
    ov: Option<&ControlOverride>,
) -> Result<f64> {
    Ok(hamiltonian_impl(p, y, u, psi, g, at, ov, false)?.0)
}

/// Gradient of one Hamiltonian in the local control triple `[u1 | u2 | u12]`.
pub fn hamiltonian_u_gradient(
    p: &dyn GvProblem,
    y: &GridField,
    u: &ControlField,
    psi: &CoState,
    g: &Grid,
    at: HamiltonianAt,
) -> Result<Vec<f64>> {
    Ok(hamiltonian_impl(p, y, u, psi, g, at, None, true)?.1)
}
