//! Ready-made problems: two forward-solver test cases, a synthetic
//! linear-quadratic tracking problem, a decoupled quadratic, and the gas
//! chromatography identification problem with a hereditary sorption law.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::forward::{solve_forward, ForwardOptions};
use crate::grid::{Grid, GridField};
use crate::gvlinalg::{resolvent_1d, Kernel1d};
use crate::problem::{
    ActiveTerms, BlockFlags, Bounds, ControlBoxes, ControlField, ControlPoint, Dims, GvProblem, Independence, Lipschitz,
};

const ALL_INDEPENDENT: Independence = Independence { f0: BlockFlags::ALL, f1: BlockFlags::ALL, f2: BlockFlags::ALL };

/// `y = s t - t s²/2 + ∫_0^s y dσ`, exact solution `y = s t`.
///
/// The integrand is linear in `σ`, so the trapezoid rule is exact and the
/// discrete solution matches `s t` to rounding.
#[derive(Debug, Clone, Copy, Default)]
pub struct ManufacturedLinear;

impl ManufacturedLinear {
    pub fn exact(s: f64, t: f64) -> f64 {
        s * t
    }
}

impl GvProblem for ManufacturedLinear {
    fn dims(&self) -> Dims {
        Dims { n: 1, p1: 0, p2: 0, p12: 0 }
    }
    fn lipschitz(&self) -> Lipschitz {
        Lipschitz { l1: 1.0, l2: 0.0, l12: 0.0 }
    }
    fn independence(&self) -> Independence {
        ALL_INDEPENDENT
    }
    fn active_terms(&self) -> ActiveTerms {
        ActiveTerms { f1: true, f2: false, f12: false }
    }
    fn f0(&self, s: f64, t: f64, _u: &ControlPoint, out: &mut [f64]) {
        out[0] = s * t - t * s * s / 2.0;
    }
    fn f1(&self, _s: f64, _t: f64, _sigma: f64, y: &[f64], _u: &ControlPoint, out: &mut [f64]) {
        out[0] = y[0];
    }
    fn dy_f1(&self, _s: f64, _t: f64, _sigma: f64, _y: &[f64], _u: &ControlPoint, out: &mut [f64]) {
        out[0] = 1.0;
    }
}

/// `y = 1 + ∫_0^s y dσ`, exact solution `e^s`; second-order accurate.
#[derive(Debug, Clone, Copy, Default)]
pub struct Exponential;

impl Exponential {
    pub fn exact(s: f64, _t: f64) -> f64 {
        s.exp()
    }
}

impl GvProblem for Exponential {
    fn dims(&self) -> Dims {
        Dims { n: 1, p1: 0, p2: 0, p12: 0 }
    }
    fn lipschitz(&self) -> Lipschitz {
        Lipschitz { l1: 1.0, l2: 0.0, l12: 0.0 }
    }
    fn independence(&self) -> Independence {
        ALL_INDEPENDENT
    }
    fn active_terms(&self) -> ActiveTerms {
        ActiveTerms { f1: true, f2: false, f12: false }
    }
    fn f0(&self, _s: f64, _t: f64, _u: &ControlPoint, out: &mut [f64]) {
        out[0] = 1.0;
    }
    fn f1(&self, _s: f64, _t: f64, _sigma: f64, y: &[f64], _u: &ControlPoint, out: &mut [f64]) {
        out[0] = y[0];
    }
    fn dy_f1(&self, _s: f64, _t: f64, _sigma: f64, _y: &[f64], _u: &ControlPoint, out: &mut [f64]) {
        out[0] = 1.0;
    }
}

fn lookup(field: &GridField, g: &Grid, s: f64, t: f64) -> f64 {
    field.at(g.nearest_s(s), g.nearest_t(t))[0]
}

/// Settings for [`make_synthetic_lq`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LqConfig {
    /// Feedback coefficient in `f12 = a y + u`.
    pub a: f64,
    /// Control penalty in `F12`.
    pub rho: f64,
    /// Generate the target from a known control (and force `rho = 0`).
    pub inverse_crime: bool,
    /// Box for `u12`, symmetric.
    pub u_bound: f64,
    pub seed: u64,
}

impl Default for LqConfig {
    fn default() -> Self {
        LqConfig { a: 0.1, rho: 1e-2, inverse_crime: false, u_bound: 5.0, seed: 7 }
    }
}

/// Scalar tracking problem `y = ∫∫(a y + u)`, `F12 = ½(y - y_ref)² + ½ρu²`.
#[derive(Debug, Clone)]
pub struct SyntheticLq {
    pub a: f64,
    pub rho: f64,
    pub y_ref: GridField,
    pub u_bound: f64,
    grid: Grid,
}

/// What is known about the optimum of a synthetic instance.
#[derive(Debug, Clone)]
pub struct LqOptimum {
    /// The control that generated the target, for inverse-crime instances.
    pub u_true: Option<ControlField>,
    /// Known optimal cost, when there is one in closed form.
    pub j_star: Option<f64>,
}

impl SyntheticLq {
    pub fn with_target(a: f64, rho: f64, y_ref: GridField, u_bound: f64, g: &Grid) -> Result<Self> {
        g.check_field(&y_ref)?;
        if y_ref.dim() != 1 {
            return Err(invalid("tracking target must be scalar"));
        }
        if !(rho >= 0.0) || !a.is_finite() || !(u_bound > 0.0) {
            return Err(invalid("need finite a, rho >= 0 and u_bound > 0"));
        }
        Ok(SyntheticLq { a, rho, y_ref, u_bound, grid: g.clone() })
    }
}

fn smooth_field(g: &Grid, rng: &mut ChaCha8Rng, base: f64, amp: f64) -> GridField {
    let c: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (a, b) = (g.a(), g.b());
    GridField::from_scalar(g, |s, t| {
        let x = s / a;
        let y = t / b;
        base + amp / 3.0 * (c[0] * (std::f64::consts::PI * x).cos() + c[1] * (std::f64::consts::PI * y).sin() + c[2] * x * y)
    })
}

/// Builds a synthetic tracking problem.
///
/// With `inverse_crime` the target is the forward solution for a seeded
/// smooth control `u_true`, `rho` is forced to 0 and `J(u_true) = 0` is the
/// global minimum.
pub fn make_synthetic_lq(g: &Grid, cfg: &LqConfig) -> Result<(SyntheticLq, LqOptimum)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    if !cfg.inverse_crime {
        let y_ref = smooth_field(g, &mut rng, 0.5, 0.5);
        let p = SyntheticLq::with_target(cfg.a, cfg.rho, y_ref, cfg.u_bound, g)?;
        let j_star = if cfg.a == 0.0 && cfg.rho > 0.0 && p.y_ref.sup_norm() == 0.0 { Some(0.0) } else { None };
        return Ok((p, LqOptimum { u_true: None, j_star }));
    }
    let u_field = smooth_field(g, &mut rng, 1.5, 1.5);
    if u_field.sup_norm() > cfg.u_bound {
        return Err(invalid("generating control leaves the box; raise u_bound"));
    }
    let mut p = SyntheticLq::with_target(cfg.a, 0.0, GridField::zeros(g, 1), cfg.u_bound, g)?;
    let mut u_true = ControlField::zeros_for(&p, g);
    u_true.u12 = u_field;
    let opts = ForwardOptions { tol: 1e-14, max_iters: 1000, mu: None };
    p.y_ref = solve_forward(&p, &u_true, g, &opts)?.y;
    Ok((p, LqOptimum { u_true: Some(u_true), j_star: Some(0.0) }))
}

impl GvProblem for SyntheticLq {
    fn dims(&self) -> Dims {
        Dims { n: 1, p1: 0, p2: 0, p12: 1 }
    }
    fn lipschitz(&self) -> Lipschitz {
        Lipschitz { l1: 0.0, l2: 0.0, l12: self.a.abs() }
    }
    fn boxes(&self) -> ControlBoxes {
        ControlBoxes {
            u1: Bounds::unbounded(0),
            u2: Bounds::unbounded(0),
            u12: Bounds::uniform(1, -self.u_bound, self.u_bound),
        }
    }
    fn independence(&self) -> Independence {
        ALL_INDEPENDENT
    }
    fn active_terms(&self) -> ActiveTerms {
        ActiveTerms { f1: false, f2: false, f12: true }
    }
    fn f12(&self, _s: f64, _t: f64, _sg: f64, _tau: f64, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        out[0] = self.a * y[0] + u.u12[0];
    }
    fn dy_f12(&self, _s: f64, _t: f64, _sg: f64, _tau: f64, _y: &[f64], _u: &ControlPoint, out: &mut [f64]) {
        out[0] = self.a;
    }
    fn du_f12(&self, _s: f64, _t: f64, _sg: f64, _tau: f64, _y: &[f64], _u: &ControlPoint, out: &mut [f64]) {
        out[0] = 1.0;
    }
    fn cost12(&self, s: f64, t: f64, y: &[f64], u: &ControlPoint) -> f64 {
        let e = y[0] - lookup(&self.y_ref, &self.grid, s, t);
        0.5 * e * e + 0.5 * self.rho * u.u12[0] * u.u12[0]
    }
    fn dy_cost12(&self, s: f64, t: f64, y: &[f64], _u: &ControlPoint, out: &mut [f64]) {
        out[0] = y[0] - lookup(&self.y_ref, &self.grid, s, t);
    }
    fn du_cost12(&self, _s: f64, _t: f64, _y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        out[0] = self.rho * u.u12[0];
    }
}

/// `F12 = ½(u12 - c(s,t))²` with trivial dynamics; the minimizer is `c`.
#[derive(Debug, Clone)]
pub struct DecoupledQuadratic {
    pub bound: Option<f64>,
}

impl DecoupledQuadratic {
    /// Pointwise target, well inside `[-1, 1]`.
    pub fn target(s: f64, t: f64) -> f64 {
        0.5 * (2.0 * s).sin() + 0.3 * t - 0.2
    }
}

impl GvProblem for DecoupledQuadratic {
    fn dims(&self) -> Dims {
        Dims { n: 1, p1: 0, p2: 0, p12: 1 }
    }
    fn lipschitz(&self) -> Lipschitz {
        Lipschitz::default()
    }
    fn boxes(&self) -> ControlBoxes {
        let u12 = match self.bound {
            Some(b) => Bounds::uniform(1, -b, b),
            None => Bounds::unbounded(1),
        };
        ControlBoxes { u1: Bounds::unbounded(0), u2: Bounds::unbounded(0), u12 }
    }
    fn independence(&self) -> Independence {
        ALL_INDEPENDENT
    }
    fn active_terms(&self) -> ActiveTerms {
        ActiveTerms { f1: false, f2: false, f12: false }
    }
    fn cost12(&self, s: f64, t: f64, _y: &[f64], u: &ControlPoint) -> f64 {
        let e = u.u12[0] - Self::target(s, t);
        0.5 * e * e
    }
    fn du_cost12(&self, s: f64, t: f64, _y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        out[0] = u.u12[0] - Self::target(s, t);
    }
}

/// Parameters of the chromatography demo.
///
/// The sorption kernel is `K(s,t,τ) = k_amp (1 + k_slope s) e^{-k_decay (t-τ)}`.
/// Inlet `φ(0,t)` and initial `φ(s,0)` are Gaussian bumps. The target
/// `φ0` is the density produced by the constant velocity `target_velocity`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ChromatographyParams {
    pub beta: f64,
    pub k_amp: f64,
    pub k_slope: f64,
    pub k_decay: f64,
    pub inlet_height: f64,
    pub inlet_center: f64,
    pub inlet_width: f64,
    pub initial_height: f64,
    pub initial_center: f64,
    pub initial_width: f64,
    pub target_velocity: f64,
    pub mu_reg: f64,
    pub v_lo: f64,
    pub v_hi: f64,
}

impl Default for ChromatographyParams {
    fn default() -> Self {
        ChromatographyParams {
            beta: 2.0,
            k_amp: 0.5,
            k_slope: 0.5,
            k_decay: 1.0,
            inlet_height: 1.0,
            inlet_center: 0.3,
            inlet_width: 0.15,
            initial_height: 0.2,
            initial_center: 0.5,
            initial_width: 0.2,
            target_velocity: 1.5,
            mu_reg: 1e-3,
            v_lo: 0.5,
            v_hi: 3.0,
        }
    }
}

impl ChromatographyParams {
    pub fn kernel(&self, s: f64, t: f64, tau: f64) -> f64 {
        self.k_amp * (1.0 + self.k_slope * s) * (-self.k_decay * (t - tau)).exp()
    }

    pub fn kernel_t(&self, s: f64, t: f64, tau: f64) -> f64 {
        -self.k_decay * self.kernel(s, t, tau)
    }

    fn gauss(x: f64, h: f64, c: f64, w: f64) -> (f64, f64) {
        let v = h * (-(x - c) * (x - c) / (2.0 * w * w)).exp();
        (v, -(x - c) / (w * w) * v)
    }

    /// `φ(0,t)` and its derivative.
    pub fn inlet(&self, t: f64) -> (f64, f64) {
        Self::gauss(t, self.inlet_height, self.inlet_center, self.inlet_width)
    }

    /// `φ(s,0)` and its derivative.
    pub fn initial(&self, s: f64) -> (f64, f64) {
        Self::gauss(s, self.initial_height, self.initial_center, self.initial_width)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return Err(invalid("beta must be positive"));
        }
        if !(self.mu_reg >= 0.0) {
            return Err(invalid("mu_reg must be >= 0"));
        }
        if !(self.v_lo > 0.0 && self.v_lo <= self.v_hi) {
            return Err(invalid("velocity box needs 0 < v_lo <= v_hi"));
        }
        if !(self.inlet_width > 0.0 && self.initial_width > 0.0) {
            return Err(invalid("profile widths must be positive"));
        }
        if !(self.target_velocity >= self.v_lo && self.target_velocity <= self.v_hi) {
            return Err(invalid("target_velocity must lie in the velocity box"));
        }
        let all_finite = [
            self.k_amp,
            self.k_slope,
            self.k_decay,
            self.inlet_height,
            self.inlet_center,
            self.initial_height,
            self.initial_center,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return Err(invalid("chromatography parameters must be finite"));
        }
        Ok(())
    }
}

/// Gas chromatography with a hereditary sorption law.
///
/// State `[φ, φ_s, φ_t]`, control `u12 = v(s,t)` (flow speed). The
/// coefficients multiplying the state are
/// `a0 = β(ℓ0_t + ℓ1(s,t,t))/v`, `a2 = -β(1-ℓ0)/v`, `a3 = β/v`, with
/// `a1 = 0` since `v` has no time derivative in this model. In the memory
/// term `a3` is frozen at the inner point, which gives
/// `ã3(t,σ,τ) = β/v(σ,τ) (ℓ1(σ,t,τ) - ℓ1(σ,τ,τ))` and
/// `ã3_t = β/v(σ,τ) ℓ1_t(σ,t,τ)`.
#[derive(Debug, Clone)]
pub struct Chromatography {
    pub params: ChromatographyParams,
    pub target: GridField,
    grid: Grid,
    ell0: Vec<f64>,
    ell0_t: Vec<f64>,
    // per s node: ℓ1 and ℓ1_t on the t grid, (t index, τ index)
    ell1: Vec<Kernel1d>,
    ell1_t: Vec<Kernel1d>,
    lip: Lipschitz,
}

// Derivative along the first index of a causal table at (j, jp), using
// only entries with first index in [jp, last].
fn causal_dt(f: impl Fn(usize) -> f64, j: usize, jp: usize, last: usize, h: f64) -> f64 {
    if j > jp && j < last {
        (f(j + 1) - f(j - 1)) / (2.0 * h)
    } else if j + 2 <= last {
        (-3.0 * f(j) + 4.0 * f(j + 1) - f(j + 2)) / (2.0 * h)
    } else if j >= jp + 2 {
        (3.0 * f(j) - 4.0 * f(j - 1) + f(j - 2)) / (2.0 * h)
    } else if j < last {
        (f(j + 1) - f(j)) / h
    } else if j > jp {
        (f(j) - f(j - 1)) / h
    } else {
        0.0
    }
}

/// Precomputes `ℓ0`, `ℓ1` and their `t` derivatives, then fixes the target
/// by a forward solve at `target_velocity`.
pub fn make_chromatography(g: &Grid, params: &ChromatographyParams) -> Result<Chromatography> {
    params.check()?;
    let (sl, tl) = (g.s_len(), g.t_len());
    let ht = g.ht();
    let beta = params.beta;
    let mut ell0 = vec![0.0; sl * tl];
    for i in 0..sl {
        for j in 0..tl {
            let (s, t) = (g.s(i), g.t(j));
            let den = beta + params.kernel(s, t, t);
            if !(den > 0.0) {
                return Err(invalid(format!("beta + K(s,t,t) <= 0 at s = {s}, t = {t}")));
            }
            ell0[i * tl + j] = beta / den;
        }
    }
    let mut ell0_t = vec![0.0; sl * tl];
    for i in 0..sl {
        for j in 0..tl {
            ell0_t[i * tl + j] = causal_dt(|jj| ell0[i * tl + jj], j, 0, tl - 1, ht);
        }
    }
    let mut ell1 = Vec::with_capacity(sl);
    let mut ell1_t = Vec::with_capacity(sl);
    for i in 0..sl {
        let s = g.s(i);
        let k = Kernel1d::from_fn(g.nt(), ht, |t, tau| params.kernel_t(s, t, tau) / (beta + params.kernel(s, t, t)));
        let r = resolvent_1d(&k, 1e-14)?;
        let mut l1 = Kernel1d::zeros(g.nt(), ht);
        for j in 0..tl {
            for jp in 0..=j {
                l1.set(j, jp, r.get(j, jp) * ell0[i * tl + jp]);
            }
        }
        let mut l1t = Kernel1d::zeros(g.nt(), ht);
        for j in 0..tl {
            for jp in 0..=j {
                l1t.set(j, jp, causal_dt(|jj| l1.get(jj, jp), j, jp, tl - 1, ht));
            }
        }
        ell1.push(l1);
        ell1_t.push(l1t);
    }
    let mut p = Chromatography {
        params: params.clone(),
        target: GridField::zeros(g, 1),
        grid: g.clone(),
        ell0,
        ell0_t,
        ell1,
        ell1_t,
        lip: Lipschitz::default(),
    };
    p.lip = p.scan_lipschitz();
    let v = p.constant_control(g, params.target_velocity);
    let y = solve_forward(&p, &v, g, &ForwardOptions { tol: 1e-13, max_iters: 1000, mu: None })?.y;
    for i in 0..sl {
        for j in 0..tl {
            p.target.at_mut(i, j)[0] = y.at(i, j)[0];
        }
    }
    Ok(p)
}

impl Chromatography {
    /// Control field `v ≡ value` with the problem's box.
    pub fn constant_control(&self, g: &Grid, value: f64) -> ControlField {
        let mut u = ControlField::zeros_for(self, g);
        u.u12.data_mut().fill(value);
        u
    }

    /// `ℓ0` at node `(i, j)`.
    pub fn ell0(&self, i: usize, j: usize) -> f64 {
        self.ell0[i * self.grid.t_len() + j]
    }

    /// `ℓ1(s_i, t_j, t_jp)`.
    pub fn ell1(&self, i: usize, j: usize, jp: usize) -> f64 {
        self.ell1[i].get(j, jp)
    }

    fn node(&self, s: f64, t: f64) -> (usize, usize) {
        (self.grid.nearest_s(s), self.grid.nearest_t(t))
    }

    // (a0 v, a2 v) at the node; divide by v for the coefficients
    fn coeffs_times_v(&self, i: usize, j: usize) -> (f64, f64) {
        let tl = self.grid.t_len();
        let b = self.params.beta;
        (b * (self.ell0_t[i * tl + j] + self.ell1[i].get(j, j)), -b * (1.0 - self.ell0[i * tl + j]))
    }

    // ã3(t_jo, σ_i, τ_j) v and ã3_t v
    fn memory_times_v(&self, jo: usize, i: usize, j: usize) -> (f64, f64) {
        if jo < j {
            return (0.0, 0.0);
        }
        let b = self.params.beta;
        (b * (self.ell1[i].get(jo, j) - self.ell1[i].get(j, j)), b * self.ell1_t[i].get(jo, j))
    }

    fn scan_lipschitz(&self) -> Lipschitz {
        let (sl, tl) = (self.grid.s_len(), self.grid.t_len());
        let v = self.params.v_lo;
        let mut lip = Lipschitz::default();
        for i in 0..sl {
            for j in 0..tl {
                let (a0, a2) = self.coeffs_times_v(i, j);
                let local = (a0.abs() + a2.abs()) / v;
                lip.l1 = lip.l1.max(local);
                for jo in j..tl {
                    let (m, mt) = self.memory_times_v(jo, i, j);
                    let row0 = local + m.abs() / v;
                    lip.l2 = lip.l2.max(row0);
                    lip.l12 = lip.l12.max(row0).max(mt.abs() / v);
                }
            }
        }
        lip
    }

    // Writes the three integrand rows times 1/v: (row for φ, row for φ_s, row for φ_t)
    fn integrand_rows(&self, jo: usize, i: usize, j: usize, v: f64) -> ([f64; 3], [f64; 3]) {
        let (a0, a2) = self.coeffs_times_v(i, j);
        let (m, mt) = self.memory_times_v(jo, i, j);
        ([(a0 + m) / v, 0.0, a2 / v], [mt / v, 0.0, 0.0])
    }
}

impl GvProblem for Chromatography {
    fn dims(&self) -> Dims {
        Dims { n: 3, p1: 0, p2: 0, p12: 1 }
    }
    fn lipschitz(&self) -> Lipschitz {
        self.lip
    }
    fn boxes(&self) -> ControlBoxes {
        ControlBoxes {
            u1: Bounds::unbounded(0),
            u2: Bounds::unbounded(0),
            u12: Bounds::uniform(1, self.params.v_lo, self.params.v_hi),
        }
    }
    fn independence(&self) -> Independence {
        let dep = BlockFlags { u1: true, u2: true, u12: false };
        Independence { f0: BlockFlags::ALL, f1: dep, f2: dep }
    }

    fn f0(&self, s: f64, t: f64, _u: &ControlPoint, out: &mut [f64]) {
        let (init, init_s) = self.params.initial(s);
        let (inl, inl_t) = self.params.inlet(t);
        let (corner, _) = self.params.inlet(0.0);
        out[0] = init + inl - corner;
        out[1] = init_s;
        out[2] = inl_t;
    }

    fn f1(&self, _s: f64, t: f64, sigma: f64, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        let (i, j) = self.node(sigma, t);
        let (a0, a2) = self.coeffs_times_v(i, j);
        let v = u.u12[0];
        out[0] = 0.0;
        out[1] = 0.0;
        out[2] = (a0 * y[0] + a2 * y[2]) / v;
    }
    fn dy_f1(&self, _s: f64, t: f64, sigma: f64, _y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        let (i, j) = self.node(sigma, t);
        let (a0, a2) = self.coeffs_times_v(i, j);
        let v = u.u12[0];
        out.fill(0.0);
        out[6] = a0 / v;
        out[8] = a2 / v;
    }
    fn du_f1(&self, s: f64, t: f64, sigma: f64, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        let mut f = [0.0; 3];
        self.f1(s, t, sigma, y, u, &mut f);
        for k in 0..3 {
            out[k] = -f[k] / u.u12[0];
        }
    }

    fn f2(&self, s: f64, t: f64, tau: f64, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        let (i, j) = self.node(s, tau);
        let jo = self.grid.nearest_t(t);
        let (r, _) = self.integrand_rows(jo, i, j, u.u12[0]);
        out[0] = 0.0;
        out[1] = r[0] * y[0] + r[2] * y[2];
        out[2] = 0.0;
    }
    fn dy_f2(&self, s: f64, t: f64, tau: f64, _y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        let (i, j) = self.node(s, tau);
        let jo = self.grid.nearest_t(t);
        let (r, _) = self.integrand_rows(jo, i, j, u.u12[0]);
        out.fill(0.0);
        out[3..6].copy_from_slice(&r);
    }
    fn du_f2(&self, s: f64, t: f64, tau: f64, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        let mut f = [0.0; 3];
        self.f2(s, t, tau, y, u, &mut f);
        for k in 0..3 {
            out[k] = -f[k] / u.u12[0];
        }
    }

    fn f12(&self, _s: f64, t: f64, sigma: f64, tau: f64, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        let (i, j) = self.node(sigma, tau);
        let jo = self.grid.nearest_t(t);
        let (r0, r2) = self.integrand_rows(jo, i, j, u.u12[0]);
        out[0] = r0[0] * y[0] + r0[2] * y[2];
        out[1] = 0.0;
        out[2] = r2[0] * y[0];
    }
    fn dy_f12(&self, _s: f64, t: f64, sigma: f64, tau: f64, _y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        let (i, j) = self.node(sigma, tau);
        let jo = self.grid.nearest_t(t);
        let (r0, r2) = self.integrand_rows(jo, i, j, u.u12[0]);
        out.fill(0.0);
        out[0..3].copy_from_slice(&r0);
        out[6..9].copy_from_slice(&r2);
    }
    fn du_f12(&self, s: f64, t: f64, sigma: f64, tau: f64, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        let mut f = [0.0; 3];
        self.f12(s, t, sigma, tau, y, u, &mut f);
        for k in 0..3 {
            out[k] = -f[k] / u.u12[0];
        }
    }

    fn cost12(&self, s: f64, t: f64, y: &[f64], u: &ControlPoint) -> f64 {
        let e = y[0] - lookup(&self.target, &self.grid, s, t);
        e * e + self.params.mu_reg * u.u12[0] * u.u12[0]
    }
    fn dy_cost12(&self, s: f64, t: f64, y: &[f64], _u: &ControlPoint, out: &mut [f64]) {
        out[0] = 2.0 * (y[0] - lookup(&self.target, &self.grid, s, t));
        out[1] = 0.0;
        out[2] = 0.0;
    }
    fn du_cost12(&self, _s: f64, _t: f64, _y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        out[0] = 2.0 * self.params.mu_reg * u.u12[0];
    }
}
