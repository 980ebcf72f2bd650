//! Linear Goursat-Volterra algebra: kernel triples, composition, resolvents.
//!
//! A kernel triple `K = (K1, K2, K12)` acts on a field `z` by
//!
//! ```text
//! (K z)(s,t) = ∫_0^s K1(s,t,σ) z(σ,t) dσ + ∫_0^t K2(s,t,τ) z(s,τ) dτ
//!            + ∫_0^s ∫_0^t K12(s,t,σ,τ) z(σ,τ) dτ dσ
//! ```
//!
//! All integrals use the grid's trapezoid weights. Composition uses the
//! matching path weights `a_{i,i1} a_{i1,i'} / a_{i,i'}`, so applying a
//! composed triple is exactly the same as applying its factors one after
//! the other, up to rounding. Entries are `m x m` blocks; the block norm is
//! the max absolute row sum.

use crate::error::{invalid, GvError, Result};
use crate::grid::{Grid, GridField};

/// Causal kernel triple on a grid, entries are `m x m` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTriple {
    sl: usize,
    tl: usize,
    m: usize,
    k1: Vec<f64>,
    k2: Vec<f64>,
    k12: Vec<f64>,
}

impl KernelTriple {
    pub fn zeros(g: &Grid, m: usize) -> Self {
        let (sl, tl) = (g.s_len(), g.t_len());
        let mm = m * m;
        KernelTriple {
            sl,
            tl,
            m,
            k1: vec![0.0; sl * tl * sl * mm],
            k2: vec![0.0; sl * tl * tl * mm],
            k12: vec![0.0; sl * tl * sl * tl * mm],
        }
    }

    /// Samples the three kernels on their causal regions.
    ///
    /// Each closure writes an `m x m` row-major block.
    pub fn from_fns(
        g: &Grid,
        m: usize,
        mut k1: impl FnMut(f64, f64, f64, &mut [f64]),
        mut k2: impl FnMut(f64, f64, f64, &mut [f64]),
        mut k12: impl FnMut(f64, f64, f64, f64, &mut [f64]),
    ) -> Self {
        let mut k = Self::zeros(g, m);
        for i in 0..k.sl {
            for j in 0..k.tl {
                let (s, t) = (g.s(i), g.t(j));
                for ip in 0..=i {
                    k1(s, t, g.s(ip), k.k1_mut(i, j, ip));
                }
                for jp in 0..=j {
                    k2(s, t, g.t(jp), k.k2_mut(i, j, jp));
                }
                for ip in 0..=i {
                    for jp in 0..=j {
                        k12(s, t, g.s(ip), g.t(jp), k.k12_mut(i, j, ip, jp));
                    }
                }
            }
        }
        k
    }

    /// Scalar triple from three scalar functions.
    pub fn scalar(
        g: &Grid,
        k1: impl Fn(f64, f64, f64) -> f64,
        k2: impl Fn(f64, f64, f64) -> f64,
        k12: impl Fn(f64, f64, f64, f64) -> f64,
    ) -> Self {
        Self::from_fns(
            g,
            1,
            |s, t, x, o| o[0] = k1(s, t, x),
            |s, t, x, o| o[0] = k2(s, t, x),
            |s, t, x, y, o| o[0] = k12(s, t, x, y),
        )
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn s_len(&self) -> usize {
        self.sl
    }
    pub fn t_len(&self) -> usize {
        self.tl
    }

    #[inline]
    fn o1(&self, i: usize, j: usize, ip: usize) -> usize {
        ((i * self.tl + j) * self.sl + ip) * self.m * self.m
    }
    #[inline]
    fn o2(&self, i: usize, j: usize, jp: usize) -> usize {
        ((i * self.tl + j) * self.tl + jp) * self.m * self.m
    }
    #[inline]
    fn o12(&self, i: usize, j: usize, ip: usize, jp: usize) -> usize {
        (((i * self.tl + j) * self.sl + ip) * self.tl + jp) * self.m * self.m
    }

    /// Block `K1(s_i, t_j, σ_ip)`.
    #[inline]
    pub fn k1(&self, i: usize, j: usize, ip: usize) -> &[f64] {
        let o = self.o1(i, j, ip);
        &self.k1[o..o + self.m * self.m]
    }
    #[inline]
    pub fn k2(&self, i: usize, j: usize, jp: usize) -> &[f64] {
        let o = self.o2(i, j, jp);
        &self.k2[o..o + self.m * self.m]
    }
    #[inline]
    pub fn k12(&self, i: usize, j: usize, ip: usize, jp: usize) -> &[f64] {
        let o = self.o12(i, j, ip, jp);
        &self.k12[o..o + self.m * self.m]
    }

    /// Mutable block; panics outside the causal region.
    pub fn k1_mut(&mut self, i: usize, j: usize, ip: usize) -> &mut [f64] {
        assert!(ip <= i, "K1 entry above the diagonal");
        let o = self.o1(i, j, ip);
        let mm = self.m * self.m;
        &mut self.k1[o..o + mm]
    }
    pub fn k2_mut(&mut self, i: usize, j: usize, jp: usize) -> &mut [f64] {
        assert!(jp <= j, "K2 entry above the diagonal");
        let o = self.o2(i, j, jp);
        let mm = self.m * self.m;
        &mut self.k2[o..o + mm]
    }
    pub fn k12_mut(&mut self, i: usize, j: usize, ip: usize, jp: usize) -> &mut [f64] {
        assert!(ip <= i && jp <= j, "K12 entry above the diagonal");
        let o = self.o12(i, j, ip, jp);
        let mm = self.m * self.m;
        &mut self.k12[o..o + mm]
    }

    /// Sup of the block norms of `(K1, K2, K12)`.
    pub fn sup_norms(&self) -> (f64, f64, f64) {
        let m = self.m;
        let norm = |v: &[f64]| v.chunks(m * m).fold(0.0f64, |acc, b| acc.max(block_norm(b, m)));
        (norm(&self.k1), norm(&self.k2), norm(&self.k12))
    }

    /// The common bound `C = max` of [`KernelTriple::sup_norms`].
    pub fn sup_bound(&self) -> f64 {
        let (a, b, c) = self.sup_norms();
        a.max(b).max(c)
    }

    /// Componentwise sup norm of `self - other`.
    pub fn sup_diff(&self, other: &KernelTriple) -> (f64, f64, f64) {
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        (d(&self.k1, &other.k1), d(&self.k2, &other.k2), d(&self.k12, &other.k12))
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &KernelTriple) {
        for (a, b) in self.k1.iter_mut().zip(&other.k1) {
            *a += alpha * b;
        }
        for (a, b) in self.k2.iter_mut().zip(&other.k2) {
            *a += alpha * b;
        }
        for (a, b) in self.k12.iter_mut().zip(&other.k12) {
            *a += alpha * b;
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.k1.iter().chain(&self.k2).chain(&self.k12).all(|v| *v >= 0.0)
    }

    /// Every entry above a causal diagonal is zero.
    pub fn is_causal(&self) -> bool {
        let mm = self.m * self.m;
        for i in 0..self.sl {
            for j in 0..self.tl {
                for ip in (i + 1)..self.sl {
                    let o = self.o1(i, j, ip);
                    if self.k1[o..o + mm].iter().any(|&v| v != 0.0) {
                        return false;
                    }
                    for jp in 0..self.tl {
                        let o = self.o12(i, j, ip, jp);
                        if self.k12[o..o + mm].iter().any(|&v| v != 0.0) {
                            return false;
                        }
                    }
                }
                for jp in (j + 1)..self.tl {
                    let o = self.o2(i, j, jp);
                    if self.k2[o..o + mm].iter().any(|&v| v != 0.0) {
                        return false;
                    }
                    for ip in 0..self.sl {
                        let o = self.o12(i, j, ip, jp);
                        if self.k12[o..o + mm].iter().any(|&v| v != 0.0) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    fn all_finite(&self) -> bool {
        self.k1.iter().chain(&self.k2).chain(&self.k12).all(|v| v.is_finite())
    }

    fn is_zero(&self) -> bool {
        self.k1.iter().chain(&self.k2).chain(&self.k12).all(|&v| v == 0.0)
    }

    fn check_grid(&self, g: &Grid) -> Result<()> {
        if self.sl != g.s_len() || self.tl != g.t_len() {
            return Err(invalid("kernel triple does not match the grid"));
        }
        Ok(())
    }
}

/// Max absolute row sum of a row-major `m x m` block.
#[inline]
pub(crate) fn block_norm(b: &[f64], m: usize) -> f64 {
    b.chunks(m).fold(0.0f64, |acc, row| acc.max(row.iter().map(|v| v.abs()).sum()))
}

// acc += w * a * b for m x m row-major blocks.
#[inline]
fn gemm_acc(acc: &mut [f64], w: f64, a: &[f64], b: &[f64], m: usize) {
    if m == 1 {
        acc[0] += w * a[0] * b[0];
        return;
    }
    for r in 0..m {
        for k in 0..m {
            let x = w * a[r * m + k];
            if x == 0.0 {
                continue;
            }
            for c in 0..m {
                acc[r * m + c] += x * b[k * m + c];
            }
        }
    }
}

// acc += w * blk * v (block times column vector).
#[inline]
pub(crate) fn gemv_acc(acc: &mut [f64], w: f64, blk: &[f64], v: &[f64], m: usize) {
    for r in 0..m {
        let row = &blk[r * m..(r + 1) * m];
        let mut s = 0.0;
        for k in 0..m {
            s += row[k] * v[k];
        }
        acc[r] += w * s;
    }
}

// acc += w * v^T blk (row covector times block).
#[inline]
pub(crate) fn vecmat_acc(acc: &mut [f64], w: f64, v: &[f64], blk: &[f64], m: usize) {
    for k in 0..m {
        let x = w * v[k];
        if x == 0.0 {
            continue;
        }
        let row = &blk[k * m..(k + 1) * m];
        for c in 0..m {
            acc[c] += x * row[c];
        }
    }
}

/// `(K z)(s,t)` at every node.
pub fn gv_apply(k: &KernelTriple, z: &GridField, g: &Grid) -> Result<GridField> {
    k.check_grid(g)?;
    g.check_field(z)?;
    let m = k.m;
    if z.dim() != m {
        return Err(invalid(format!("field dim {} does not match kernel block dim {m}", z.dim())));
    }
    let mut out = GridField::zeros(g, m);
    for i in 0..k.sl {
        for j in 0..k.tl {
            let mut acc = vec![0.0; m];
            for ip in 0..=i {
                let w = g.cum_s(i, ip);
                if w != 0.0 {
                    gemv_acc(&mut acc, w, k.k1(i, j, ip), z.at(ip, j), m);
                }
            }
            for jp in 0..=j {
                let w = g.cum_t(j, jp);
                if w != 0.0 {
                    gemv_acc(&mut acc, w, k.k2(i, j, jp), z.at(i, jp), m);
                }
            }
            if i > 0 && j > 0 {
                for ip in 0..=i {
                    let ws = g.cum_s(i, ip);
                    for jp in 0..=j {
                        gemv_acc(&mut acc, ws * g.cum_t(j, jp), k.k12(i, j, ip, jp), z.at(ip, jp), m);
                    }
                }
            }
            out.at_mut(i, j).copy_from_slice(&acc);
        }
    }
    Ok(out)
}

/// Backward action `(ζ ~K)(s,t)` on a field of row covectors.
///
/// `∫_s^A ζ(σ,t) K1(σ,t,s) dσ + ∫_t^B ζ(s,τ) K2(s,τ,t) dτ
///  + ∫_s^A ∫_t^B ζ(σ,τ) K12(σ,τ,s,t) dτ dσ`, discretized with the
/// transposed weights of [`Grid::adj_s`] so that
/// `<ζ, K z>_w = <ζ ~K, z>_w` holds exactly.
pub fn gv_adjoint_apply(zeta: &GridField, k: &KernelTriple, g: &Grid) -> Result<GridField> {
    k.check_grid(g)?;
    g.check_field(zeta)?;
    let m = k.m;
    if zeta.dim() != m {
        return Err(invalid(format!("covector dim {} does not match kernel block dim {m}", zeta.dim())));
    }
    let (sl, tl) = (k.sl, k.tl);
    let mut out = GridField::zeros(g, m);
    for p in 0..sl {
        for q in 0..tl {
            let mut acc = vec![0.0; m];
            for i in p..sl {
                let w = g.adj_s(p, i);
                if w != 0.0 {
                    vecmat_acc(&mut acc, w, zeta.at(i, q), k.k1(i, q, p), m);
                }
            }
            for j in q..tl {
                let w = g.adj_t(q, j);
                if w != 0.0 {
                    vecmat_acc(&mut acc, w, zeta.at(p, j), k.k2(p, j, q), m);
                }
            }
            for i in p..sl {
                let ws = g.adj_s(p, i);
                if ws == 0.0 {
                    continue;
                }
                for j in q..tl {
                    let w = ws * g.adj_t(q, j);
                    if w != 0.0 {
                        vecmat_acc(&mut acc, w, zeta.at(i, j), k.k12(i, j, p, q), m);
                    }
                }
            }
            out.at_mut(p, q).copy_from_slice(&acc);
        }
    }
    Ok(out)
}

/// Trapezoid-weighted inner product `Σ W_i V_j ζ(i,j)·z(i,j)`.
pub fn weighted_inner(zeta: &GridField, z: &GridField, g: &Grid) -> f64 {
    let mut acc = 0.0;
    for i in 0..z.s_len() {
        for j in 0..z.t_len() {
            let w = g.full_s(i) * g.full_t(j);
            let dot: f64 = zeta.at(i, j).iter().zip(z.at(i, j)).map(|(a, b)| a * b).sum();
            acc += w * dot;
        }
    }
    acc
}

/// Composition `L ⊗ K`, the triple whose action is `z ↦ L (K z)`.
pub fn gv_compose(l: &KernelTriple, k: &KernelTriple, g: &Grid) -> Result<KernelTriple> {
    l.check_grid(g)?;
    k.check_grid(g)?;
    if l.m != k.m {
        return Err(invalid("block dimensions differ"));
    }
    let cs = g.compose_weights_s();
    let ct = g.compose_weights_t();
    Ok(compose_with(l, k, &cs, &ct))
}

fn compose_with(l: &KernelTriple, k: &KernelTriple, cs: &[f64], ct: &[f64]) -> KernelTriple {
    let (sl, tl, m) = (l.sl, l.tl, l.m);
    let mm = m * m;
    let cws = |i: usize, i1: usize, ip: usize| cs[(i * sl + i1) * sl + ip];
    let cwt = |j: usize, j1: usize, jp: usize| ct[(j * tl + j1) * tl + jp];
    let mut out = KernelTriple { sl, tl, m, k1: vec![0.0; l.k1.len()], k2: vec![0.0; l.k2.len()], k12: vec![0.0; l.k12.len()] };
    let l12_zero = l.k12.iter().all(|&v| v == 0.0);
    let k12_zero = k.k12.iter().all(|&v| v == 0.0);
    let mut acc = vec![0.0; sl * tl * mm];

    for i in 0..sl {
        for j in 0..tl {
            // single-variable parts
            for ip in 0..=i {
                let o = out.o1(i, j, ip);
                for i1 in ip..=i {
                    let w = cws(i, i1, ip);
                    if w != 0.0 {
                        gemm_acc(&mut out.k1[o..o + mm], w, l.k1(i, j, i1), k.k1(i1, j, ip), m);
                    }
                }
            }
            for jp in 0..=j {
                let o = out.o2(i, j, jp);
                for j1 in jp..=j {
                    let w = cwt(j, j1, jp);
                    if w != 0.0 {
                        gemm_acc(&mut out.k2[o..o + mm], w, l.k2(i, j, j1), k.k2(i, j1, jp), m);
                    }
                }
            }

            // mixed part, accumulated over (ip, jp) <= (i, j); rows with
            // s = 0 or t = 0 carry zero quadrature weight and stay zero
            if i == 0 || j == 0 {
                continue;
            }
            acc.fill(0.0);
            let at = |ip: usize, jp: usize| (ip * tl + jp) * mm;
            for ip in 0..=i {
                for jp in 0..=j {
                    let o = at(ip, jp);
                    // pointwise products
                    gemm_acc(&mut acc[o..o + mm], 1.0, l.k1(i, j, ip), k.k2(ip, j, jp), m);
                    gemm_acc(&mut acc[o..o + mm], 1.0, l.k2(i, j, jp), k.k1(i, jp, ip), m);
                }
            }
            if !k12_zero {
                // L1 then K12 along s
                for i1 in 1..=i {
                    let lb = l.k1(i, j, i1);
                    if lb.iter().all(|&v| v == 0.0) {
                        continue;
                    }
                    for ip in 0..=i1 {
                        let w = cws(i, i1, ip);
                        if w == 0.0 {
                            continue;
                        }
                        for jp in 0..=j {
                            let o = at(ip, jp);
                            gemm_acc(&mut acc[o..o + mm], w, lb, k.k12(i1, j, ip, jp), m);
                        }
                    }
                }
                // L2 then K12 along t
                for j1 in 1..=j {
                    let lb = l.k2(i, j, j1);
                    if lb.iter().all(|&v| v == 0.0) {
                        continue;
                    }
                    for ip in 0..=i {
                        for jp in 0..=j1 {
                            let w = cwt(j, j1, jp);
                            if w != 0.0 {
                                let o = at(ip, jp);
                                gemm_acc(&mut acc[o..o + mm], w, lb, k.k12(i, j1, ip, jp), m);
                            }
                        }
                    }
                }
            }
            if !l12_zero {
                for i1 in 0..=i {
                    for j1 in 0..=j {
                        let lb = l.k12(i, j, i1, j1);
                        if lb.iter().all(|&v| v == 0.0) {
                            continue;
                        }
                        // K1 at fixed τ = t_j1
                        for ip in 0..=i1 {
                            let w = cws(i, i1, ip);
                            if w != 0.0 {
                                let o = at(ip, j1);
                                gemm_acc(&mut acc[o..o + mm], w, lb, k.k1(i1, j1, ip), m);
                            }
                        }
                        // K2 at fixed σ = s_i1
                        for jp in 0..=j1 {
                            let w = cwt(j, j1, jp);
                            if w != 0.0 {
                                let o = at(i1, jp);
                                gemm_acc(&mut acc[o..o + mm], w, lb, k.k2(i1, j1, jp), m);
                            }
                        }
                        if k12_zero {
                            continue;
                        }
                        // K12 over both variables
                        let ctrow = &ct[(j * tl + j1) * tl..(j * tl + j1) * tl + j1 + 1];
                        for ip in 0..=i1 {
                            let ws = cws(i, i1, ip);
                            if ws == 0.0 {
                                continue;
                            }
                            let kb0 = k.o12(i1, j1, ip, 0);
                            if m == 1 {
                                let lw = ws * lb[0];
                                let kr = &k.k12[kb0..kb0 + j1 + 1];
                                let ar = &mut acc[ip * tl..ip * tl + j1 + 1];
                                for ((a, &c), &kv) in ar.iter_mut().zip(ctrow).zip(kr) {
                                    *a += lw * c * kv;
                                }
                            } else {
                                for jp in 0..=j1 {
                                    let w = ws * ctrow[jp];
                                    if w != 0.0 {
                                        let o = at(ip, jp);
                                        gemm_acc(&mut acc[o..o + mm], w, lb, k.k12(i1, j1, ip, jp), m);
                                    }
                                }
                            }
                        }
                    }
                }
            }
            for ip in 0..=i {
                for jp in 0..=j {
                    let o = out.o12(i, j, ip, jp);
                    let a = at(ip, jp);
                    out.k12[o..o + mm].copy_from_slice(&acc[a..a + mm]);
                }
            }
        }
    }
    out
}

/// `K ⊗ K ⊗ ... ⊗ K` (`k` factors).
pub fn kernel_power(kt: &KernelTriple, k: usize, g: &Grid) -> Result<KernelTriple> {
    if k == 0 {
        return Err(invalid("kernel power needs k >= 1"));
    }
    kt.check_grid(g)?;
    let cs = g.compose_weights_s();
    let ct = g.compose_weights_t();
    let mut p = kt.clone();
    for _ in 1..k {
        p = compose_with(kt, &p, &cs, &ct);
    }
    Ok(p)
}

/// Analytic bounds on the three components of the `k`-th kernel power.
///
/// Returns `(C^k A^{k-1}/(k-1)!, C^k B^{k-1}/(k-1)!, bound12)` where
/// `bound12 = (3C)^k Q^{2(k-1)} / (m_k! (k-2-m_k)!)`, `Q = max(A,B,1)`,
/// `m_k = floor(k/2 - 1)`, and `bound12 = C` for `k = 1`.
pub fn kernel_power_bound(c: f64, k: usize, a: f64, b: f64) -> Result<(f64, f64, f64)> {
    if k == 0 {
        return Err(invalid("kernel power bound needs k >= 1"));
    }
    if !(c >= 0.0) {
        return Err(invalid("sup bound C must be nonnegative"));
    }
    let (l1, l2, l12) = log_power_bounds(c, k, a, b);
    Ok((l1.exp(), l2.exp(), l12.exp()))
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|v| (v as f64).ln()).sum()
}

// Natural logs of the three bounds, -inf when C = 0.
fn log_power_bounds(c: f64, k: usize, a: f64, b: f64) -> (f64, f64, f64) {
    let kf = k as f64;
    let lc = c.ln();
    let single = |ext: f64| {
        if k == 1 {
            lc
        } else {
            kf * lc + (kf - 1.0) * ext.ln() - ln_factorial(k - 1)
        }
    };
    let mixed = if k == 1 {
        lc
    } else {
        let q = a.max(b).max(1.0);
        let mk = k / 2 - 1;
        kf * (3.0 * c).ln() + 2.0 * (kf - 1.0) * q.ln() - ln_factorial(mk) - ln_factorial(k - 2 - mk)
    };
    (single(a), single(b), mixed)
}

/// Hard cap on Neumann terms; beyond it the kernel is too large for this grid.
pub const MAX_NEUMANN_TERMS: usize = 600;

/// Rigorous bounds on `Σ_{k > kmax}` of each component of the power bounds.
pub fn neumann_tail(c: f64, kmax: usize, a: f64, b: f64) -> (f64, f64, f64) {
    if c == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let q = a.max(b).max(1.0);
    // ratio of consecutive bounds from k to k+1 (non-increasing for k >= 2)
    let ratio1 = |k: usize, ext: f64| c * ext / k as f64;
    let ratio12 = |k: usize| {
        let half = if k % 2 == 0 { k / 2 } else { (k - 1) / 2 };
        3.0 * c * q * q / half as f64
    };
    let tail = |logb: &dyn Fn(usize) -> f64, ratio: &dyn Fn(usize) -> f64| {
        let mut sum = 0.0;
        let mut k = kmax + 1;
        loop {
            let term = logb(k).exp();
            sum += term;
            let r = ratio(k);
            if k >= 2 && r < 0.5 {
                // remaining terms are dominated by a geometric series
                return sum + term * r / (1.0 - r);
            }
            if k > 100_000 {
                return f64::INFINITY;
            }
            k += 1;
        }
    };
    let t1 = tail(&|k| log_power_bounds(c, k, a, b).0, &|k| ratio1(k, a));
    let t2 = tail(&|k| log_power_bounds(c, k, a, b).1, &|k| ratio1(k, b));
    let t12 = tail(&|k| log_power_bounds(c, k, a, b).2, &|k| if k == 1 { f64::INFINITY } else { ratio12(k) });
    (t1, t2, t12)
}

/// Smallest `kmax >= 1` whose three tails are all below `tol`.
pub fn truncation_order(c: f64, a: f64, b: f64, tol: f64) -> Result<usize> {
    for k in 1..=MAX_NEUMANN_TERMS {
        let (t1, t2, t12) = neumann_tail(c, k, a, b);
        if t1 < tol && t2 < tol && t12 < tol {
            return Ok(k);
        }
    }
    Err(invalid(format!("kernel bound C={c} needs more than {MAX_NEUMANN_TERMS} Neumann terms")))
}

/// Truncated Neumann series `Σ_{k=1}^{kmax} K^k`.
#[derive(Debug, Clone)]
pub struct Resolvent {
    pub kernel: KernelTriple,
    pub truncation_k: usize,
    /// Rigorous bounds on the dropped terms, per component.
    pub tail_bound: (f64, f64, f64),
}

/// Resolvent kernel with analytic truncation.
pub fn resolvent(k: &KernelTriple, g: &Grid, tol: f64) -> Result<Resolvent> {
    if !(tol > 0.0) {
        return Err(invalid("resolvent tolerance must be positive"));
    }
    k.check_grid(g)?;
    if !k.all_finite() {
        return Err(GvError::Numerical { i: 0, j: 0, what: "kernel has non-finite entries".into() });
    }
    let c = k.sup_bound();
    let kmax = truncation_order(c, g.a(), g.b(), tol)?;
    let tail_bound = neumann_tail(c, kmax, g.a(), g.b());
    let cs = g.compose_weights_s();
    let ct = g.compose_weights_t();
    let mut sum = k.clone();
    let mut pow = k.clone();
    for _ in 2..=kmax {
        if pow.is_zero() {
            break;
        }
        pow = compose_with(k, &pow, &cs, &ct);
        sum.axpy(1.0, &pow);
    }
    Ok(Resolvent { kernel: sum, truncation_k: kmax, tail_bound })
}

/// `z = z0 + R z0`.
pub fn solve_linear(k: &KernelTriple, z0: &GridField, g: &Grid, tol: f64) -> Result<GridField> {
    let r = resolvent(k, g, tol)?;
    solve_linear_with(&r, z0, g)
}

/// `z = z0 + R z0` for a precomputed resolvent.
pub fn solve_linear_with(r: &Resolvent, z0: &GridField, g: &Grid) -> Result<GridField> {
    let mut z = gv_apply(&r.kernel, z0, g)?;
    z.axpy(1.0, z0);
    Ok(z)
}

/// Sup norm of `z - z0 - K z`.
pub fn linear_residual(k: &KernelTriple, z: &GridField, z0: &GridField, g: &Grid) -> Result<f64> {
    let mut r = gv_apply(k, z, g)?;
    r.axpy(1.0, z0);
    Ok(r.sup_diff(z))
}

/// Fixed-point iteration `z <- z0 + K z`.
pub fn solve_linear_picard(k: &KernelTriple, z0: &GridField, g: &Grid, tol: f64, max_iters: usize) -> Result<GridField> {
    let mut z = z0.clone();
    for _ in 0..max_iters {
        let mut next = gv_apply(k, &z, g)?;
        next.axpy(1.0, z0);
        if let Some((i, j)) = next.first_non_finite() {
            return Err(GvError::Numerical { i, j, what: "linear iterate is not finite".into() });
        }
        let delta = next.sup_diff(&z);
        z = next;
        if delta <= tol {
            return Ok(z);
        }
    }
    let mut next = gv_apply(k, &z, g)?;
    next.axpy(1.0, z0);
    Err(GvError::Divergence { iterations: max_iters, last_delta: next.sup_diff(&z) })
}

/// Adjoint solve `ζ = ζ0 + ζ0 ~R` through the resolvent.
pub fn solve_adjoint(k: &KernelTriple, zeta0: &GridField, g: &Grid, tol: f64) -> Result<GridField> {
    let r = resolvent(k, g, tol)?;
    solve_adjoint_with(&r, zeta0, g)
}

pub fn solve_adjoint_with(r: &Resolvent, zeta0: &GridField, g: &Grid) -> Result<GridField> {
    let mut z = gv_adjoint_apply(zeta0, &r.kernel, g)?;
    z.axpy(1.0, zeta0);
    Ok(z)
}

/// Adjoint solve by backward fixed-point iteration `ζ <- ζ0 + ζ ~K`.
pub fn solve_adjoint_picard(k: &KernelTriple, zeta0: &GridField, g: &Grid, tol: f64, max_iters: usize) -> Result<GridField> {
    let mut z = zeta0.clone();
    let mut last = f64::NAN;
    for _ in 0..max_iters {
        let mut next = gv_adjoint_apply(&z, k, g)?;
        next.axpy(1.0, zeta0);
        if let Some((i, j)) = next.first_non_finite() {
            return Err(GvError::Numerical { i, j, what: "adjoint iterate is not finite".into() });
        }
        last = next.sup_diff(&z);
        z = next;
        if last <= tol {
            return Ok(z);
        }
    }
    Err(GvError::Divergence { iterations: max_iters, last_delta: last })
}

/// Sup norm of `ζ - ζ0 - ζ ~K`.
pub fn adjoint_residual(k: &KernelTriple, zeta: &GridField, zeta0: &GridField, g: &Grid) -> Result<f64> {
    let mut r = gv_adjoint_apply(zeta, k, g)?;
    r.axpy(1.0, zeta0);
    Ok(r.sup_diff(zeta))
}

/// Scalar causal kernel on one axis, `k(x_i, x_i')` for `i' <= i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel1d {
    len: usize,
    h: f64,
    data: Vec<f64>,
}

impl Kernel1d {
    pub fn zeros(n_steps: usize, h: f64) -> Self {
        let len = n_steps + 1;
        Kernel1d { len, h, data: vec![0.0; len * len] }
    }

    pub fn from_fn(n_steps: usize, h: f64, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut k = Self::zeros(n_steps, h);
        for i in 0..k.len {
            for ip in 0..=i {
                k.data[i * k.len + ip] = f(i as f64 * h, ip as f64 * h);
            }
        }
        k
    }

    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize, ip: usize) -> f64 {
        self.data[i * self.len + ip]
    }

    pub fn set(&mut self, i: usize, ip: usize, v: f64) {
        assert!(ip <= i, "entry above the diagonal");
        self.data[i * self.len + ip] = v;
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `k ⊗ other` with the same path weights as the 2-D composition.
    pub fn compose(&self, other: &Kernel1d) -> Kernel1d {
        let n = self.len;
        let cw = compose_table_1d(n - 1, self.h);
        let mut out = Kernel1d::zeros(n - 1, self.h);
        for i in 0..n {
            for ip in 0..=i {
                let mut acc = 0.0;
                for i1 in ip..=i {
                    acc += cw[(i * n + i1) * n + ip] * self.get(i, i1) * other.get(i1, ip);
                }
                out.data[i * n + ip] = acc;
            }
        }
        out
    }
}

fn compose_table_1d(n_steps: usize, h: f64) -> Vec<f64> {
    crate::grid::make_grid(n_steps as f64 * h, 1.0, n_steps, 1)
        .map(|g| g.compose_weights_s())
        .unwrap_or_default()
}

/// One-axis resolvent `Σ k^j` truncated by the bound `C^j L^{j-1}/(j-1)!`.
pub fn resolvent_1d(k: &Kernel1d, tol: f64) -> Result<Kernel1d> {
    if !(tol > 0.0) {
        return Err(invalid("resolvent tolerance must be positive"));
    }
    if k.data.iter().any(|v| !v.is_finite()) {
        return Err(GvError::Numerical { i: 0, j: 0, what: "kernel has non-finite entries".into() });
    }
    let c = k.sup_norm();
    let ext = (k.len - 1) as f64 * k.h;
    let kmax = truncation_order(c, ext, ext, tol).or_else(|_| {
        // the mixed bound is irrelevant on one axis
        (1..=MAX_NEUMANN_TERMS)
            .find(|&kk| neumann_tail(c, kk, ext, ext).0 < tol)
            .ok_or_else(|| invalid("one-axis kernel too large"))
    })?;
    let mut sum = k.clone();
    let mut pow = k.clone();
    for _ in 2..=kmax {
        pow = k.compose(&pow);
        if pow.data.iter().all(|&v| v == 0.0) {
            break;
        }
        for (a, b) in sum.data.iter_mut().zip(&pow.data) {
            *a += b;
        }
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn apply_examples() {
        let g = make_grid(1.0, 1.0, 4, 4).unwrap();
        let one = GridField::from_scalar(&g, |_, _| 1.0);
        let z = KernelTriple::zeros(&g, 1);
        assert_eq!(gv_apply(&z, &one, &g).unwrap().sup_norm(), 0.0);
        let k = KernelTriple::scalar(&g, |_, _, _| 1.0, |_, _, _| 0.0, |_, _, _, _| 0.0);
        assert!((gv_apply(&k, &one, &g).unwrap().at(4, 2)[0] - 1.0).abs() < 1e-15);
        let k = KernelTriple::scalar(&g, |_, _, _| 0.0, |_, _, _| 0.0, |_, _, _, _| 1.0);
        assert!((gv_apply(&k, &one, &g).unwrap().at(4, 4)[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn compose_examples() {
        let g = make_grid(1.0, 1.0, 4, 4).unwrap();
        let k = KernelTriple::scalar(&g, |_, _, _| 1.0, |_, _, _| 0.0, |_, _, _, _| 0.0);
        let m = gv_compose(&k, &k, &g).unwrap();
        // interior σ: exactly s - σ
        for i in 2..5 {
            for ip in 1..i {
                assert!((m.k1(i, 3, ip)[0] - (g.s(i) - g.s(ip))).abs() < 1e-15);
            }
        }
        let (_, n2, n12) = m.sup_norms();
        assert_eq!((n2, n12), (0.0, 0.0));

        let k = KernelTriple::scalar(&g, |_, _, _| 1.0, |_, _, _| 1.0, |_, _, _, _| 0.0);
        let m = gv_compose(&k, &k, &g).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                // rows with s = 0 or t = 0 never act on a field and are stored as zero
                let want = if i == 0 || j == 0 { 0.0 } else { 2.0 };
                for ip in 0..=i {
                    for jp in 0..=j {
                        assert_eq!(m.k12(i, j, ip, jp)[0], want);
                    }
                }
            }
        }
        assert!(m.is_causal());
    }

    #[test]
    fn power_bound_examples() {
        assert_eq!(kernel_power_bound(1.0, 1, 1.0, 1.0).unwrap(), (1.0, 1.0, 1.0));
        let (_, _, b12) = kernel_power_bound(1.0, 3, 1.0, 1.0).unwrap();
        assert!((b12 - 27.0).abs() < 1e-12);
        let (b1, _, _) = kernel_power_bound(2.0, 4, 1.0, 1.0).unwrap();
        assert!((b1 - 16.0 / 6.0).abs() < 1e-12);
        assert!(kernel_power_bound(1.0, 0, 1.0, 1.0).is_err());
    }

    #[test]
    fn zero_kernel_resolvent() {
        let g = make_grid(1.0, 1.0, 3, 3).unwrap();
        let r = resolvent(&KernelTriple::zeros(&g, 1), &g, 1e-12).unwrap();
        assert_eq!(r.truncation_k, 1);
        assert_eq!(r.kernel.sup_bound(), 0.0);
        assert_eq!(r.tail_bound, (0.0, 0.0, 0.0));
    }

    #[test]
    fn one_axis_resolvent_exponential() {
        let n = 32;
        let k = Kernel1d::from_fn(n, 1.0 / n as f64, |_, _| 0.7);
        let r = resolvent_1d(&k, 1e-13).unwrap();
        // interior entries approximate 0.7 e^{0.7 (x - x')}
        let want = 0.7 * (0.7f64 * 0.5).exp();
        assert!((r.get(24, 8) - want).abs() < 1e-3);
    }
}
