//! Uniform tensor grid on `[0,A]x[0,B]` with product trapezoid quadrature.
//!
//! Every solver in the crate discretizes its integrals with the weights
//! exposed here. Three weight families matter:
//!
//! * [`Grid::cum_s`] / [`Grid::cum_t`]: trapezoid weights of `∫_0^{s_i}`,
//!   indexed `(i, i')`. Row `i = 0` is all zeros.
//! * [`Grid::full_s`] / [`Grid::full_t`]: the full-interval weights.
//! * [`Grid::adj_s`] / [`Grid::adj_t`]: transposed weights used for the
//!   backward (`∫_s^A`) integrals of adjoint equations, chosen so that the
//!   discrete forward and adjoint operators are exact transposes under the
//!   weighted inner product.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Uniform grid, `ns` steps in `s` and `nt` steps in `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    a: f64,
    b: f64,
    ns: usize,
    nt: usize,
}

/// Builds a grid over `[0,a]x[0,b]` with `ns x nt` steps.
pub fn make_grid(a: f64, b: f64, ns: usize, nt: usize) -> Result<Grid> {
    if !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
        return Err(invalid(format!("grid extents must be positive, got A={a}, B={b}")));
    }
    if ns == 0 || nt == 0 {
        return Err(invalid(format!("grid step counts must be >= 1, got Ns={ns}, Nt={nt}")));
    }
    Ok(Grid { a, b, ns, nt })
}

/// Trapezoid weights on `n_steps + 1` nodes with spacing `h`.
pub fn trap_weights(n_steps: usize, h: f64) -> Result<Vec<f64>> {
    if n_steps == 0 {
        return Err(invalid("trap_weights needs at least one step"));
    }
    let mut w = vec![h; n_steps + 1];
    w[0] = 0.5 * h;
    w[n_steps] = 0.5 * h;
    Ok(w)
}

// Weight a_{i,i'} of the rule for ∫_0^{x_i}.
#[inline]
fn cum_weight(i: usize, ip: usize, h: f64) -> f64 {
    if i == 0 || ip > i {
        0.0
    } else if ip == 0 || ip == i {
        0.5 * h
    } else {
        h
    }
}

impl Grid {
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    /// Number of steps in `s`.
    pub fn ns(&self) -> usize {
        self.ns
    }
    /// Number of steps in `t`.
    pub fn nt(&self) -> usize {
        self.nt
    }
    /// Number of `s` nodes, `ns + 1`.
    pub fn s_len(&self) -> usize {
        self.ns + 1
    }
    /// Number of `t` nodes, `nt + 1`.
    pub fn t_len(&self) -> usize {
        self.nt + 1
    }
    pub fn hs(&self) -> f64 {
        self.a / self.ns as f64
    }
    pub fn ht(&self) -> f64 {
        self.b / self.nt as f64
    }

    /// `s` coordinate of node `i`. The last node is exactly `A`.
    #[inline]
    pub fn s(&self, i: usize) -> f64 {
        if i == self.ns {
            self.a
        } else {
            i as f64 * self.hs()
        }
    }

    /// `t` coordinate of node `j`. The last node is exactly `B`.
    #[inline]
    pub fn t(&self, j: usize) -> f64 {
        if j == self.nt {
            self.b
        } else {
            j as f64 * self.ht()
        }
    }

    pub fn s_nodes(&self) -> Vec<f64> {
        (0..=self.ns).map(|i| self.s(i)).collect()
    }

    pub fn t_nodes(&self) -> Vec<f64> {
        (0..=self.nt).map(|j| self.t(j)).collect()
    }

    /// Nearest `s` node index, clamped to the grid.
    pub fn nearest_s(&self, s: f64) -> usize {
        ((s / self.hs()).round().max(0.0) as usize).min(self.ns)
    }

    /// Nearest `t` node index, clamped to the grid.
    pub fn nearest_t(&self, t: f64) -> usize {
        ((t / self.ht()).round().max(0.0) as usize).min(self.nt)
    }

    /// Weight of node `ip` in the rule for `∫_0^{s_i}`.
    #[inline]
    pub fn cum_s(&self, i: usize, ip: usize) -> f64 {
        cum_weight(i, ip, self.hs())
    }

    /// Weight of node `jp` in the rule for `∫_0^{t_j}`.
    #[inline]
    pub fn cum_t(&self, j: usize, jp: usize) -> f64 {
        cum_weight(j, jp, self.ht())
    }

    /// Full-interval weight `W_i` in `s`.
    #[inline]
    pub fn full_s(&self, i: usize) -> f64 {
        self.cum_s(self.ns, i)
    }

    /// Full-interval weight `V_j` in `t`.
    #[inline]
    pub fn full_t(&self, j: usize) -> f64 {
        self.cum_t(self.nt, j)
    }

    /// Weight of node `i >= p` in the backward rule for `∫_{s_p}^A`.
    ///
    /// Equals `W_i a_{i,p} / W_p`. It reduces to the trapezoid rule on
    /// `[s_p, A]` except at `p = 0`, where the node `i = 0` gets weight 0.
    #[inline]
    pub fn adj_s(&self, p: usize, i: usize) -> f64 {
        self.full_s(i) * self.cum_s(i, p) / self.full_s(p)
    }

    /// Weight of node `j >= q` in the backward rule for `∫_{t_q}^B`.
    #[inline]
    pub fn adj_t(&self, q: usize, j: usize) -> f64 {
        self.full_t(j) * self.cum_t(j, q) / self.full_t(q)
    }

    /// Table `c[i][i1][i']` of composed weights for `∫_{σ}^{s} dσ1`.
    ///
    /// `c = a_{i,i1} a_{i1,i'} / a_{i,i'}`, zero whenever `a_{i,i'} = 0`.
    /// Flattened with stride `s_len`.
    pub fn compose_weights_s(&self) -> Vec<f64> {
        compose_table(self.ns, self.hs())
    }

    /// `t` analogue of [`Grid::compose_weights_s`].
    pub fn compose_weights_t(&self) -> Vec<f64> {
        compose_table(self.nt, self.ht())
    }

    /// Shape check helper.
    pub fn check_field(&self, f: &GridField) -> Result<()> {
        if f.s_len() != self.s_len() || f.t_len() != self.t_len() {
            return Err(invalid(format!(
                "field shape {}x{} does not match grid {}x{}",
                f.s_len(),
                f.t_len(),
                self.s_len(),
                self.t_len()
            )));
        }
        Ok(())
    }
}

fn compose_table(n: usize, h: f64) -> Vec<f64> {
    let len = n + 1;
    let mut c = vec![0.0; len * len * len];
    for i in 1..len {
        for i1 in 0..=i {
            for ip in 0..=i1 {
                let den = cum_weight(i, ip, h);
                if den > 0.0 {
                    c[(i * len + i1) * len + ip] = cum_weight(i, i1, h) * cum_weight(i1, ip, h) / den;
                }
            }
        }
    }
    c
}

/// Field of `dim`-vectors on the grid nodes, stored `(i, j, k)` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    s_len: usize,
    t_len: usize,
    dim: usize,
    data: Vec<f64>,
}

impl GridField {
    pub fn zeros(g: &Grid, dim: usize) -> Self {
        Self::zeros_shape(g.s_len(), g.t_len(), dim)
    }

    pub fn zeros_shape(s_len: usize, t_len: usize, dim: usize) -> Self {
        GridField { s_len, t_len, dim, data: vec![0.0; s_len * t_len * dim] }
    }

    /// Samples `f(s, t, out)` at every node.
    pub fn from_fn(g: &Grid, dim: usize, mut f: impl FnMut(f64, f64, &mut [f64])) -> Self {
        let mut out = Self::zeros(g, dim);
        for i in 0..g.s_len() {
            for j in 0..g.t_len() {
                f(g.s(i), g.t(j), out.at_mut(i, j));
            }
        }
        out
    }

    /// Scalar field from `f(s, t)`.
    pub fn from_scalar(g: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_fn(g, 1, |s, t, out| out[0] = f(s, t))
    }

    pub fn s_len(&self) -> usize {
        self.s_len
    }
    pub fn t_len(&self) -> usize {
        self.t_len
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &[f64] {
        let o = (i * self.t_len + j) * self.dim;
        &self.data[o..o + self.dim]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let o = (i * self.t_len + j) * self.dim;
        &mut self.data[o..o + self.dim]
    }

    /// Sup norm over nodes and components.
    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Sup norm of `self - other`.
    pub fn sup_diff(&self, other: &GridField) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Weighted norm `max e^{-μ(s+t)} |z(s,t)|`.
    pub fn weighted_norm(&self, g: &Grid, mu: f64) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.s_len {
            for j in 0..self.t_len {
                let w = (-mu * (g.s(i) + g.t(j))).exp();
                for v in self.at(i, j) {
                    m = m.max(w * v.abs());
                }
            }
        }
        m
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &GridField) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    /// First non-finite entry, as a node index.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        let k = self.data.iter().position(|v| !v.is_finite())?;
        let node = k / self.dim;
        Some((node / self.t_len, node % self.t_len))
    }
}

/// Sequence of `dim`-vectors on one axis of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSeq {
    len: usize,
    dim: usize,
    data: Vec<f64>,
}

impl NodeSeq {
    pub fn zeros(len: usize, dim: usize) -> Self {
        NodeSeq { len, dim, data: vec![0.0; len * dim] }
    }

    pub fn from_fn(nodes: &[f64], dim: usize, mut f: impl FnMut(f64, &mut [f64])) -> Self {
        let mut out = Self::zeros(nodes.len(), dim);
        for (k, &x) in nodes.iter().enumerate() {
            f(x, out.at_mut(k));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn at(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    #[inline]
    pub fn at_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `∫_0^{s_i} field(σ, t_j) dσ` at every node.
pub fn cum_integral_s(field: &GridField, g: &Grid) -> Result<GridField> {
    g.check_field(field)?;
    let d = field.dim();
    let mut out = GridField::zeros(g, d);
    for i in 1..g.s_len() {
        for j in 0..g.t_len() {
            for ip in 0..=i {
                let w = g.cum_s(i, ip);
                let src = field.at(ip, j).to_vec();
                for (o, v) in out.at_mut(i, j).iter_mut().zip(src) {
                    *o += w * v;
                }
            }
        }
    }
    Ok(out)
}

/// `∫_0^{t_j} field(s_i, τ) dτ` at every node.
pub fn cum_integral_t(field: &GridField, g: &Grid) -> Result<GridField> {
    g.check_field(field)?;
    let d = field.dim();
    let mut out = GridField::zeros(g, d);
    for i in 0..g.s_len() {
        for j in 1..g.t_len() {
            for jp in 0..=j {
                let w = g.cum_t(j, jp);
                let src = field.at(i, jp).to_vec();
                for (o, v) in out.at_mut(i, j).iter_mut().zip(src) {
                    *o += w * v;
                }
            }
        }
    }
    Ok(out)
}

/// Product-rule double integral over `[0,s_i]x[0,t_j]`.
pub fn cum_integral_st(field: &GridField, g: &Grid) -> Result<GridField> {
    g.check_field(field)?;
    let d = field.dim();
    let mut out = GridField::zeros(g, d);
    for i in 1..g.s_len() {
        for j in 1..g.t_len() {
            let mut acc = vec![0.0; d];
            for ip in 0..=i {
                for jp in 0..=j {
                    let w = g.cum_s(i, ip) * g.cum_t(j, jp);
                    for (a, v) in acc.iter_mut().zip(field.at(ip, jp)) {
                        *a += w * v;
                    }
                }
            }
            out.at_mut(i, j).copy_from_slice(&acc);
        }
    }
    Ok(out)
}
