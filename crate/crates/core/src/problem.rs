//! Problem definitions: dynamics, costs, Jacobians and control boxes.
//!
//! A problem implements [`GvProblem`]. Every mapping writes into a caller
//! buffer and defaults to zero, so an implementation only overrides the
//! terms it actually has. Jacobians in `y` are `n x n` row-major (row =
//! output component). Jacobians in the controls are `n x P` row-major with
//! `P = p1 + p2 + p12`, columns ordered `[u1 | u2 | u12]`. Cost gradients
//! are plain row vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, GvError, Result};
use crate::grid::{Grid, GridField, NodeSeq};

/// State and control dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub n: usize,
    pub p1: usize,
    pub p2: usize,
    pub p12: usize,
}

impl Dims {
    /// Total control width `p1 + p2 + p12`.
    pub fn p(&self) -> usize {
        self.p1 + self.p2 + self.p12
    }
}

/// Lipschitz constants of `f1`, `f2`, `f12` in `y` (sup norm).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Lipschitz {
    pub l1: f64,
    pub l2: f64,
    pub l12: f64,
}

/// One flag per control block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BlockFlags {
    pub u1: bool,
    pub u2: bool,
    pub u12: bool,
}

impl BlockFlags {
    pub const ALL: BlockFlags = BlockFlags { u1: true, u2: true, u12: true };
}

/// Which of `f0`, `f1`, `f2` are independent of each control block.
///
/// `true` means "independent". The default claims nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Independence {
    pub f0: BlockFlags,
    pub f1: BlockFlags,
    pub f2: BlockFlags,
}

/// Which integral terms can be nonzero. Solvers skip inactive ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActiveTerms {
    pub f1: bool,
    pub f2: bool,
    pub f12: bool,
}

impl Default for ActiveTerms {
    fn default() -> Self {
        ActiveTerms { f1: true, f2: true, f12: true }
    }
}

/// Componentwise box `lo <= u <= hi`. Infinite bounds are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn unbounded(dim: usize) -> Self {
        Bounds { lo: vec![f64::NEG_INFINITY; dim], hi: vec![f64::INFINITY; dim] }
    }

    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Self {
        Bounds { lo: vec![lo; dim], hi: vec![hi; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn check(&self) -> Result<()> {
        if self.lo.len() != self.hi.len() {
            return Err(invalid("box bounds have different lengths"));
        }
        for (k, (l, h)) in self.lo.iter().zip(&self.hi).enumerate() {
            if !(l <= h) {
                return Err(invalid(format!("empty box in component {k}: [{l}, {h}]")));
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.lo.iter().chain(&self.hi).all(|v| v.is_finite())
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        v.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (l, h))| *l <= *x && *x <= *h)
    }

    pub fn clamp(&self, v: &mut [f64]) {
        for (x, (l, h)) in v.iter_mut().zip(self.lo.iter().zip(&self.hi)) {
            *x = x.clamp(*l, *h);
        }
    }
}

/// Boxes for the three control blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlBoxes {
    pub u1: Bounds,
    pub u2: Bounds,
    pub u12: Bounds,
}

impl ControlBoxes {
    pub fn unbounded(d: &Dims) -> Self {
        ControlBoxes {
            u1: Bounds::unbounded(d.p1),
            u2: Bounds::unbounded(d.p2),
            u12: Bounds::unbounded(d.p12),
        }
    }

    pub fn check(&self) -> Result<()> {
        self.u1.check()?;
        self.u2.check()?;
        self.u12.check()
    }
}

/// Control triple at one node: `(u1(s), u2(t), u12(s,t))`.
#[derive(Debug, Clone, Copy)]
pub struct ControlPoint<'a> {
    pub u1: &'a [f64],
    pub u2: &'a [f64],
    pub u12: &'a [f64],
}

impl<'a> ControlPoint<'a> {
    /// Concatenation `[u1 | u2 | u12]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.u1.len() + self.u2.len() + self.u12.len());
        v.extend_from_slice(self.u1);
        v.extend_from_slice(self.u2);
        v.extend_from_slice(self.u12);
        v
    }
}

/// Owned control triple, splittable into a [`ControlPoint`].
#[derive(Debug, Clone, PartialEq)]
pub struct ControlVec {
    pub dims: Dims,
    pub data: Vec<f64>,
}

impl ControlVec {
    pub fn from_point(d: Dims, u: &ControlPoint) -> Self {
        ControlVec { dims: d, data: u.to_vec() }
    }

    pub fn point(&self) -> ControlPoint<'_> {
        let (a, rest) = self.data.split_at(self.dims.p1);
        let (b, c) = rest.split_at(self.dims.p2);
        ControlPoint { u1: a, u2: b, u12: c }
    }
}

/// A Goursat-Volterra control problem.
///
/// The state equation is
/// `y(s,t) = f0(s,t,u) + ∫_0^s f1(s,t,σ,y(σ,t),u(σ,t)) dσ
///  + ∫_0^t f2(s,t,τ,y(s,τ),u(s,τ)) dτ
///  + ∫_0^s∫_0^t f12(s,t,σ,τ,y(σ,τ),u(σ,τ)) dτ dσ`
/// and the cost is `J = F0(y(A,B)) + ∫F1(s,y(s,B)) ds + ∫F2(t,y(A,t)) dt
/// + ∫∫F12(s,t,y(s,t)) dt ds`, each term also depending on the local
/// control triple.
#[allow(unused_variables)]
pub trait GvProblem {
    fn dims(&self) -> Dims;

    fn lipschitz(&self) -> Lipschitz;

    fn boxes(&self) -> ControlBoxes {
        ControlBoxes::unbounded(&self.dims())
    }

    fn independence(&self) -> Independence {
        Independence::default()
    }

    fn active_terms(&self) -> ActiveTerms {
        ActiveTerms::default()
    }

    fn f0(&self, s: f64, t: f64, u: &ControlPoint, out: &mut [f64]) {
        out.fill(0.0);
    }
    fn f1(&self, s: f64, t: f64, sigma: f64, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        out.fill(0.0);
    }
    fn f2(&self, s: f64, t: f64, tau: f64, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        out.fill(0.0);
    }
    #[allow(clippy::too_many_arguments)]
    fn f12(&self, s: f64, t: f64, sigma: f64, tau: f64, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        out.fill(0.0);
    }

    fn dy_f1(&self, s: f64, t: f64, sigma: f64, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        out.fill(0.0);
    }
    fn dy_f2(&self, s: f64, t: f64, tau: f64, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        out.fill(0.0);
    }
    #[allow(clippy::too_many_arguments)]
    fn dy_f12(&self, s: f64, t: f64, sigma: f64, tau: f64, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        out.fill(0.0);
    }

    fn du_f0(&self, s: f64, t: f64, u: &ControlPoint, out: &mut [f64]) {
        out.fill(0.0);
    }
    fn du_f1(&self, s: f64, t: f64, sigma: f64, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        out.fill(0.0);
    }
    fn du_f2(&self, s: f64, t: f64, tau: f64, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        out.fill(0.0);
    }
    #[allow(clippy::too_many_arguments)]
    fn du_f12(&self, s: f64, t: f64, sigma: f64, tau: f64, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        out.fill(0.0);
    }

    fn cost0(&self, y: &[f64], u: &ControlPoint) -> f64 {
        0.0
    }
    fn cost1(&self, s: f64, y: &[f64], u: &ControlPoint) -> f64 {
        0.0
    }
    fn cost2(&self, t: f64, y: &[f64], u: &ControlPoint) -> f64 {
        0.0
    }
    fn cost12(&self, s: f64, t: f64, y: &[f64], u: &ControlPoint) -> f64 {
        0.0
    }

    fn dy_cost0(&self, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        out.fill(0.0);
    }
    fn dy_cost1(&self, s: f64, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        out.fill(0.0);
    }
    fn dy_cost2(&self, t: f64, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        out.fill(0.0);
    }
    fn dy_cost12(&self, s: f64, t: f64, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        out.fill(0.0);
    }

    fn du_cost0(&self, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        out.fill(0.0);
    }
    fn du_cost1(&self, s: f64, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        out.fill(0.0);
    }
    fn du_cost2(&self, t: f64, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        out.fill(0.0);
    }
    fn du_cost12(&self, s: f64, t: f64, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// Node samples of the three control blocks plus their boxes.
///
/// The endpoint controls `u1(A)`, `u2(B)`, `u12(A,·)`, `u12(·,B)` are the
/// last samples; they are not separate decision variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlField {
    pub u1: NodeSeq,
    pub u2: NodeSeq,
    pub u12: GridField,
    pub boxes: ControlBoxes,
}

impl ControlField {
    /// All-zero controls, clamped into `boxes`.
    pub fn zeros(g: &Grid, d: &Dims, boxes: ControlBoxes) -> Self {
        let mut u = ControlField {
            u1: NodeSeq::zeros(g.s_len(), d.p1),
            u2: NodeSeq::zeros(g.t_len(), d.p2),
            u12: GridField::zeros(g, d.p12),
            boxes,
        };
        u.clamp_in_place();
        u
    }

    /// Zero controls with the problem's own boxes.
    pub fn zeros_for(p: &dyn GvProblem, g: &Grid) -> Self {
        Self::zeros(g, &p.dims(), p.boxes())
    }

    pub fn dims(&self, n: usize) -> Dims {
        Dims { n, p1: self.u1.dim(), p2: self.u2.dim(), p12: self.u12.dim() }
    }

    /// Control triple at node `(i, j)`.
    #[inline]
    pub fn point(&self, i: usize, j: usize) -> ControlPoint<'_> {
        ControlPoint { u1: self.u1.at(i), u2: self.u2.at(j), u12: self.u12.at(i, j) }
    }

    pub fn check_shape(&self, g: &Grid, d: &Dims) -> Result<()> {
        if self.u1.len() != g.s_len()
            || self.u2.len() != g.t_len()
            || self.u12.s_len() != g.s_len()
            || self.u12.t_len() != g.t_len()
        {
            return Err(invalid("control field does not match the grid"));
        }
        if self.u1.dim() != d.p1 || self.u2.dim() != d.p2 || self.u12.dim() != d.p12 {
            return Err(invalid(format!(
                "control dims ({}, {}, {}) do not match problem ({}, {}, {})",
                self.u1.dim(),
                self.u2.dim(),
                self.u12.dim(),
                d.p1,
                d.p2,
                d.p12
            )));
        }
        if self.boxes.u1.dim() != d.p1 || self.boxes.u2.dim() != d.p2 || self.boxes.u12.dim() != d.p12 {
            return Err(invalid("control boxes do not match control dims"));
        }
        self.boxes.check()
    }

    /// Every sample lies in its box.
    pub fn is_admissible(&self) -> bool {
        let b = &self.boxes;
        (0..self.u1.len()).all(|i| b.u1.contains(self.u1.at(i)))
            && (0..self.u2.len()).all(|j| b.u2.contains(self.u2.at(j)))
            && self.u12.data().chunks(self.u12.dim().max(1)).all(|c| self.u12.dim() == 0 || b.u12.contains(c))
    }

    fn clamp_in_place(&mut self) {
        let b = self.boxes.clone();
        for i in 0..self.u1.len() {
            b.u1.clamp(self.u1.at_mut(i));
        }
        for j in 0..self.u2.len() {
            b.u2.clamp(self.u2.at_mut(j));
        }
        let d = self.u12.dim();
        if d > 0 {
            for c in self.u12.data_mut().chunks_mut(d) {
                b.u12.clamp(c);
            }
        }
    }

    /// Flat view of all samples, `[u1 | u2 | u12]`.
    pub fn flat(&self) -> Vec<f64> {
        let mut v = self.u1.data().to_vec();
        v.extend_from_slice(self.u2.data());
        v.extend_from_slice(self.u12.data());
        v
    }

    /// Overwrites all samples from a flat vector laid out like [`ControlField::flat`].
    pub fn set_flat(&mut self, v: &[f64]) {
        let (a, rest) = v.split_at(self.u1.data().len());
        let (b, c) = rest.split_at(self.u2.data().len());
        self.u1.data_mut().copy_from_slice(a);
        self.u2.data_mut().copy_from_slice(b);
        self.u12.data_mut().copy_from_slice(c);
    }

    /// `self + alpha * dir`, sample by sample, without projection.
    pub fn offset(&self, alpha: f64, dir: &ControlField) -> ControlField {
        let mut out = self.clone();
        let v: Vec<f64> = self.flat().iter().zip(dir.flat()).map(|(a, b)| a + alpha * b).collect();
        out.set_flat(&v);
        out
    }

    /// Sup norm of the sample-wise difference.
    pub fn sup_diff(&self, other: &ControlField) -> f64 {
        self.flat().iter().zip(other.flat()).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Control samples `(i, j)` rows for CSV output: `u1(s_i) u2(t_j) u12(s_i,t_j)`.
    pub fn node_row(&self, i: usize, j: usize) -> Vec<f64> {
        self.point(i, j).to_vec()
    }
}

/// Clamps every sample into its box.
pub fn project(u: &ControlField) -> Result<ControlField> {
    u.boxes.check()?;
    let mut out = u.clone();
    out.clamp_in_place();
    Ok(out)
}

/// Outcome of [`validate_problem`].
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub trials: usize,
    /// Largest observed `|f(y)-f(y')| / |y-y'|` for `f1`, `f2`, `f12`.
    pub observed: Lipschitz,
    pub declared: Lipschitz,
    /// Kernels whose observed ratio exceeds the declared constant.
    pub lipschitz_violations: Vec<String>,
    /// Largest `|analytic - finite difference|` per mapping.
    pub jacobian_errors: Vec<(String, f64)>,
}

impl ValidationReport {
    pub fn max_jacobian_error(&self) -> f64 {
        self.jacobian_errors.iter().fold(0.0, |m, (_, e)| m.max(*e))
    }

    /// Lipschitz claims hold and every Jacobian matches within `jac_tol`.
    pub fn passes(&self, jac_tol: f64) -> bool {
        self.lipschitz_violations.is_empty() && self.max_jacobian_error() <= jac_tol
    }
}

const FD_STEP: f64 = 1e-6;

fn finite_or_err(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(GvError::Validation(format!("{name} returned a non-finite value")))
    }
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn sample_in(rng: &mut ChaCha8Rng, b: &Bounds) -> Vec<f64> {
    (0..b.dim())
        .map(|k| {
            // unbounded sides get a unit-scale window
            let (l, h) = (b.lo[k], b.hi[k]);
            let lo = match (l.is_finite(), h.is_finite()) {
                (true, _) => l,
                (false, true) => h - 2.0,
                (false, false) => -1.0,
            };
            let hi = if h.is_finite() { h } else { lo + 2.0 };
            // stay off the faces so central differences remain feasible
            let pad = 1e-3 * (hi - lo);
            rng.gen_range(lo + pad..=hi - pad)
        })
        .collect()
}

// Central-difference Jacobian of `f` (output `rows`) around `x`.
fn fd_jacobian(x: &[f64], rows: usize, mut f: impl FnMut(&[f64], &mut [f64])) -> Vec<f64> {
    let cols = x.len();
    let mut jac = vec![0.0; rows * cols];
    let mut xp = x.to_vec();
    let mut fp = vec![0.0; rows];
    let mut fm = vec![0.0; rows];
    for c in 0..cols {
        let h = FD_STEP * (1.0 + x[c].abs());
        xp[c] = x[c] + h;
        f(&xp, &mut fp);
        xp[c] = x[c] - h;
        f(&xp, &mut fm);
        xp[c] = x[c];
        for r in 0..rows {
            jac[r * cols + c] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    jac
}

/// Spot-checks declared Lipschitz constants and Jacobians at random points.
///
/// Deterministic for a fixed `seed`.
pub fn validate_problem(p: &dyn GvProblem, g: &Grid, trials: usize, seed: u64) -> Result<ValidationReport> {
    if trials == 0 {
        return Err(invalid("validate_problem needs at least one trial"));
    }
    let d = p.dims();
    let n = d.n;
    let np = d.p();
    let boxes = p.boxes();
    boxes.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut observed = Lipschitz::default();
    let mut errs: Vec<(String, f64)> = [
        "dy_f1", "dy_f2", "dy_f12", "du_f0", "du_f1", "du_f2", "du_f12", "dy_cost0", "dy_cost1", "dy_cost2",
        "dy_cost12", "du_cost0", "du_cost1", "du_cost2", "du_cost12",
    ]
    .iter()
    .map(|s| (s.to_string(), 0.0))
    .collect();
    let mut bump = |name: &str, e: f64| {
        if let Some(slot) = errs.iter_mut().find(|(k, _)| k == name) {
            slot.1 = slot.1.max(e);
        }
    };

    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut jy = vec![0.0; n * n];
    let mut ju = vec![0.0; n * np];
    let mut gy = vec![0.0; n];
    let mut gu = vec![0.0; np];

    for _ in 0..trials {
        let s = rng.gen_range(0.0..=g.a());
        let t = rng.gen_range(0.0..=g.b());
        let sigma = rng.gen_range(0.0..=s);
        let tau = rng.gen_range(0.0..=t);
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y2: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut uv = sample_in(&mut rng, &boxes.u1);
        uv.extend(sample_in(&mut rng, &boxes.u2));
        uv.extend(sample_in(&mut rng, &boxes.u12));
        let uc = ControlVec { dims: d, data: uv.clone() };
        let u = uc.point();
        let dy = sup_dist(&y, &y2).max(f64::MIN_POSITIVE);

        // Lipschitz ratios
        p.f1(s, t, sigma, &y, &u, &mut a);
        finite_or_err("f1", &a)?;
        p.f1(s, t, sigma, &y2, &u, &mut b);
        observed.l1 = observed.l1.max(sup_dist(&a, &b) / dy);
        p.f2(s, t, tau, &y, &u, &mut a);
        finite_or_err("f2", &a)?;
        p.f2(s, t, tau, &y2, &u, &mut b);
        observed.l2 = observed.l2.max(sup_dist(&a, &b) / dy);
        p.f12(s, t, sigma, tau, &y, &u, &mut a);
        finite_or_err("f12", &a)?;
        p.f12(s, t, sigma, tau, &y2, &u, &mut b);
        observed.l12 = observed.l12.max(sup_dist(&a, &b) / dy);
        p.f0(s, t, &u, &mut a);
        finite_or_err("f0", &a)?;

        // y-Jacobians of the kernels
        p.dy_f1(s, t, sigma, &y, &u, &mut jy);
        let fd = fd_jacobian(&y, n, |x, o| p.f1(s, t, sigma, x, &u, o));
        bump("dy_f1", sup_dist(&jy, &fd));
        p.dy_f2(s, t, tau, &y, &u, &mut jy);
        let fd = fd_jacobian(&y, n, |x, o| p.f2(s, t, tau, x, &u, o));
        bump("dy_f2", sup_dist(&jy, &fd));
        p.dy_f12(s, t, sigma, tau, &y, &u, &mut jy);
        let fd = fd_jacobian(&y, n, |x, o| p.f12(s, t, sigma, tau, x, &u, o));
        bump("dy_f12", sup_dist(&jy, &fd));

        // u-Jacobians
        let with_u = |x: &[f64]| ControlVec { dims: d, data: x.to_vec() };
        p.du_f0(s, t, &u, &mut ju);
        let fd = fd_jacobian(&uv, n, |x, o| p.f0(s, t, &with_u(x).point(), o));
        bump("du_f0", sup_dist(&ju, &fd));
        p.du_f1(s, t, sigma, &y, &u, &mut ju);
        let fd = fd_jacobian(&uv, n, |x, o| p.f1(s, t, sigma, &y, &with_u(x).point(), o));
        bump("du_f1", sup_dist(&ju, &fd));
        p.du_f2(s, t, tau, &y, &u, &mut ju);
        let fd = fd_jacobian(&uv, n, |x, o| p.f2(s, t, tau, &y, &with_u(x).point(), o));
        bump("du_f2", sup_dist(&ju, &fd));
        p.du_f12(s, t, sigma, tau, &y, &u, &mut ju);
        let fd = fd_jacobian(&uv, n, |x, o| p.f12(s, t, sigma, tau, &y, &with_u(x).point(), o));
        bump("du_f12", sup_dist(&ju, &fd));

        // cost gradients
        type CostFn<'a> = Box<dyn Fn(&[f64], &ControlPoint) -> f64 + 'a>;
        let costs: [(&str, CostFn); 4] = [
            ("0", Box::new(|y: &[f64], u: &ControlPoint| p.cost0(y, u))),
            ("1", Box::new(move |y: &[f64], u: &ControlPoint| p.cost1(s, y, u))),
            ("2", Box::new(move |y: &[f64], u: &ControlPoint| p.cost2(t, y, u))),
            ("12", Box::new(move |y: &[f64], u: &ControlPoint| p.cost12(s, t, y, u))),
        ];
        for (tag, c) in costs.iter() {
            let v = c(&y, &u);
            if !v.is_finite() {
                return Err(GvError::Validation(format!("cost{tag} returned a non-finite value")));
            }
            match *tag {
                "0" => {
                    p.dy_cost0(&y, &u, &mut gy);
                    p.du_cost0(&y, &u, &mut gu);
                }
                "1" => {
                    p.dy_cost1(s, &y, &u, &mut gy);
                    p.du_cost1(s, &y, &u, &mut gu);
                }
                "2" => {
                    p.dy_cost2(t, &y, &u, &mut gy);
                    p.du_cost2(t, &y, &u, &mut gu);
                }
                _ => {
                    p.dy_cost12(s, t, &y, &u, &mut gy);
                    p.du_cost12(s, t, &y, &u, &mut gu);
                }
            }
            let fd = fd_jacobian(&y, 1, |x, o| o[0] = c(x, &u));
            bump(&format!("dy_cost{tag}"), sup_dist(&gy, &fd));
            let fd = fd_jacobian(&uv, 1, |x, o| o[0] = c(&y, &with_u(x).point()));
            bump(&format!("du_cost{tag}"), sup_dist(&gu, &fd));
        }
    }

    let declared = p.lipschitz();
    let mut lipschitz_violations = Vec::new();
    // a little room for rounding in the ratio itself
    let over = |obs: f64, dec: f64| obs > dec * (1.0 + 1e-9) + 1e-12;
    if over(observed.l1, declared.l1) {
        lipschitz_violations.push("f1".to_string());
    }
    if over(observed.l2, declared.l2) {
        lipschitz_violations.push("f2".to_string());
    }
    if over(observed.l12, declared.l12) {
        lipschitz_violations.push("f12".to_string());
    }
    Ok(ValidationReport { trials, observed, declared, lipschitz_violations, jacobian_errors: errs })
}
