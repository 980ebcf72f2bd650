#![allow(dead_code)]

use goursat_volterra::grid::{Grid, GridField};
use goursat_volterra::gvlinalg::KernelTriple;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random causal triple with entries uniform in `[-scale, scale]`.
pub fn random_kernel(g: &Grid, m: usize, scale: f64, rng: &mut ChaCha8Rng) -> KernelTriple {
    kernel_in(g, m, -scale, scale, rng)
}

/// Random causal triple with entries uniform in `[0, scale]`.
pub fn random_nonneg_kernel(g: &Grid, scale: f64, rng: &mut ChaCha8Rng) -> KernelTriple {
    kernel_in(g, 1, 0.0, scale, rng)
}

fn kernel_in(g: &Grid, m: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> KernelTriple {
    let mut draw = |o: &mut [f64]| {
        for v in o.iter_mut() {
            *v = rng.gen_range(lo..=hi) / m as f64;
        }
    };
    let mut k = KernelTriple::zeros(g, m);
    for i in 0..g.s_len() {
        for j in 0..g.t_len() {
            for ip in 0..=i {
                draw(k.k1_mut(i, j, ip));
            }
            for jp in 0..=j {
                draw(k.k2_mut(i, j, jp));
            }
            for ip in 0..=i {
                for jp in 0..=j {
                    draw(k.k12_mut(i, j, ip, jp));
                }
            }
        }
    }
    k
}

pub fn random_field(g: &Grid, dim: usize, rng: &mut ChaCha8Rng) -> GridField {
    let mut f = GridField::zeros(g, dim);
    for v in f.data_mut() {
        *v = rng.gen_range(-1.0..=1.0);
    }
    f
}

pub fn max3(t: (f64, f64, f64)) -> f64 {
    t.0.max(t.1).max(t.2)
}

use goursat_volterra::problem::{ControlPoint, Dims, GvProblem, Lipschitz};

/// `scale(coords) (M φ(y) + b sin(w·u))` with `φ = tanh` or identity.
#[derive(Clone, Debug)]
pub struct Term {
    pub m: Vec<f64>,
    pub b: Vec<f64>,
    pub w: Vec<f64>,
}

impl Term {
    fn random(n: usize, p: usize, ys: f64, us: f64, rng: &mut ChaCha8Rng) -> Term {
        Term {
            m: (0..n * n).map(|_| rng.gen_range(-ys..=ys)).collect(),
            b: (0..n).map(|_| rng.gen_range(-us..=us)).collect(),
            w: (0..p).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
        }
    }
    fn row_norm(&self, n: usize) -> f64 {
        (0..n).map(|r| self.m[r * n..(r + 1) * n].iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }
}

/// Smooth random problem touching every term and every control block.
///
/// With `linear` the state enters linearly, which makes the co-state
/// equations exactly linear as well.
#[derive(Clone, Debug)]
pub struct RandomProblem {
    pub n: usize,
    pub linear: bool,
    pub f0: Term,
    pub f1: Term,
    pub f2: Term,
    pub f12: Term,
    pub costs: [Term; 4],
}

impl RandomProblem {
    pub fn new(n: usize, linear: bool, seed: u64) -> Self {
        let mut r = rng(seed);
        let p = 3;
        let mut t = |ys: f64, us: f64| Term::random(n, p, ys, us, &mut r);
        RandomProblem {
            n,
            linear,
            f0: t(0.0, 0.5),
            f1: t(0.6, 0.4),
            f2: t(0.6, 0.4),
            f12: t(0.8, 0.4),
            costs: [t(0.5, 0.5), t(0.5, 0.5), t(0.5, 0.5), t(0.5, 0.5)],
        }
    }

    fn phi(&self, v: f64) -> (f64, f64) {
        if self.linear {
            (v, 1.0)
        } else {
            let th = v.tanh();
            (th, 1.0 - th * th)
        }
    }

    fn eval(&self, term: &Term, scale: f64, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        let n = self.n;
        let uv = u.to_vec();
        let su: f64 = term.w.iter().zip(&uv).map(|(a, b)| a * b).sum::<f64>().sin();
        for r in 0..n {
            let mut acc = term.b[r] * su;
            for c in 0..n {
                acc += term.m[r * n + c] * self.phi(y[c]).0;
            }
            out[r] = scale * acc;
        }
    }
    fn eval_dy(&self, term: &Term, scale: f64, y: &[f64], out: &mut [f64]) {
        let n = self.n;
        for r in 0..n {
            for c in 0..n {
                out[r * n + c] = scale * term.m[r * n + c] * self.phi(y[c]).1;
            }
        }
    }
    fn eval_du(&self, term: &Term, scale: f64, u: &ControlPoint, out: &mut [f64]) {
        let uv = u.to_vec();
        let p = uv.len();
        let cu: f64 = term.w.iter().zip(&uv).map(|(a, b)| a * b).sum::<f64>().cos();
        for r in 0..self.n {
            for c in 0..p {
                out[r * p + c] = scale * term.b[r] * cu * term.w[c];
            }
        }
    }

    // F = scale (½|y|² + c·φ(y) + sin(w·u) + 0.3|u|²)
    fn cost(&self, term: &Term, scale: f64, y: &[f64], u: &ControlPoint) -> f64 {
        let uv = u.to_vec();
        let su: f64 = term.w.iter().zip(&uv).map(|(a, b)| a * b).sum::<f64>().sin();
        let mut acc = su + 0.3 * uv.iter().map(|v| v * v).sum::<f64>();
        for (k, yk) in y.iter().enumerate() {
            acc += 0.5 * yk * yk + term.b[k] * self.phi(*yk).0;
        }
        scale * acc
    }
    fn cost_dy(&self, term: &Term, scale: f64, y: &[f64], out: &mut [f64]) {
        for (k, yk) in y.iter().enumerate() {
            out[k] = scale * (yk + term.b[k] * self.phi(*yk).1);
        }
    }
    fn cost_du(&self, term: &Term, scale: f64, u: &ControlPoint, out: &mut [f64]) {
        let uv = u.to_vec();
        let cu: f64 = term.w.iter().zip(&uv).map(|(a, b)| a * b).sum::<f64>().cos();
        for (c, v) in uv.iter().enumerate() {
            out[c] = scale * (cu * term.w[c] + 0.6 * v);
        }
    }
}

fn s1(s: f64, t: f64, sg: f64) -> f64 {
    1.0 + 0.3 * s + 0.2 * t * sg
}
fn s2(s: f64, t: f64, tau: f64) -> f64 {
    1.0 + 0.2 * s * tau + 0.1 * t
}
fn s12(s: f64, t: f64, sg: f64, tau: f64) -> f64 {
    1.0 + 0.1 * (s + t + sg + tau)
}

impl GvProblem for RandomProblem {
    fn dims(&self) -> Dims {
        Dims { n: self.n, p1: 1, p2: 1, p12: 1 }
    }
    fn lipschitz(&self) -> Lipschitz {
        // scales are bounded by their values at s = t = σ = τ = 1
        Lipschitz {
            l1: 1.5 * self.f1.row_norm(self.n),
            l2: 1.3 * self.f2.row_norm(self.n),
            l12: 1.4 * self.f12.row_norm(self.n),
        }
    }
    fn f0(&self, s: f64, t: f64, u: &ControlPoint, out: &mut [f64]) {
        let zero = vec![0.0; self.n];
        self.eval(&self.f0, 1.0 + s * t, &zero, u, out);
        out.iter_mut().enumerate().for_each(|(k, v)| *v += 0.1 * (k as f64 + 1.0) * (s + t));
    }
    fn f1(&self, s: f64, t: f64, sg: f64, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        self.eval(&self.f1, s1(s, t, sg), y, u, out)
    }
    fn f2(&self, s: f64, t: f64, tau: f64, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        self.eval(&self.f2, s2(s, t, tau), y, u, out)
    }
    fn f12(&self, s: f64, t: f64, sg: f64, tau: f64, y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        self.eval(&self.f12, s12(s, t, sg, tau), y, u, out)
    }
    fn dy_f1(&self, s: f64, t: f64, sg: f64, y: &[f64], _u: &ControlPoint, out: &mut [f64]) {
        self.eval_dy(&self.f1, s1(s, t, sg), y, out)
    }
    fn dy_f2(&self, s: f64, t: f64, tau: f64, y: &[f64], _u: &ControlPoint, out: &mut [f64]) {
        self.eval_dy(&self.f2, s2(s, t, tau), y, out)
    }
    fn dy_f12(&self, s: f64, t: f64, sg: f64, tau: f64, y: &[f64], _u: &ControlPoint, out: &mut [f64]) {
        self.eval_dy(&self.f12, s12(s, t, sg, tau), y, out)
    }
    fn du_f0(&self, s: f64, t: f64, u: &ControlPoint, out: &mut [f64]) {
        self.eval_du(&self.f0, 1.0 + s * t, u, out)
    }
    fn du_f1(&self, s: f64, t: f64, sg: f64, _y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        self.eval_du(&self.f1, s1(s, t, sg), u, out)
    }
    fn du_f2(&self, s: f64, t: f64, tau: f64, _y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        self.eval_du(&self.f2, s2(s, t, tau), u, out)
    }
    fn du_f12(&self, s: f64, t: f64, sg: f64, tau: f64, _y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        self.eval_du(&self.f12, s12(s, t, sg, tau), u, out)
    }
    fn cost0(&self, y: &[f64], u: &ControlPoint) -> f64 {
        self.cost(&self.costs[0], 1.0, y, u)
    }
    fn cost1(&self, s: f64, y: &[f64], u: &ControlPoint) -> f64 {
        self.cost(&self.costs[1], 1.0 + s, y, u)
    }
    fn cost2(&self, t: f64, y: &[f64], u: &ControlPoint) -> f64 {
        self.cost(&self.costs[2], 1.0 + t, y, u)
    }
    fn cost12(&self, s: f64, t: f64, y: &[f64], u: &ControlPoint) -> f64 {
        self.cost(&self.costs[3], 1.0 + s * t, y, u)
    }
    fn dy_cost0(&self, y: &[f64], _u: &ControlPoint, out: &mut [f64]) {
        self.cost_dy(&self.costs[0], 1.0, y, out)
    }
    fn dy_cost1(&self, s: f64, y: &[f64], _u: &ControlPoint, out: &mut [f64]) {
        self.cost_dy(&self.costs[1], 1.0 + s, y, out)
    }
    fn dy_cost2(&self, t: f64, y: &[f64], _u: &ControlPoint, out: &mut [f64]) {
        self.cost_dy(&self.costs[2], 1.0 + t, y, out)
    }
    fn dy_cost12(&self, s: f64, t: f64, y: &[f64], _u: &ControlPoint, out: &mut [f64]) {
        self.cost_dy(&self.costs[3], 1.0 + s * t, y, out)
    }
    fn du_cost0(&self, _y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        self.cost_du(&self.costs[0], 1.0, u, out)
    }
    fn du_cost1(&self, s: f64, _y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        self.cost_du(&self.costs[1], 1.0 + s, u, out)
    }
    fn du_cost2(&self, t: f64, _y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        self.cost_du(&self.costs[2], 1.0 + t, u, out)
    }
    fn du_cost12(&self, s: f64, t: f64, _y: &[f64], u: &ControlPoint, out: &mut [f64]) {
        self.cost_du(&self.costs[3], 1.0 + s * t, u, out)
    }
}

/// Random control field in `[-1, 1]` for every block.
pub fn random_control(p: &dyn GvProblem, g: &Grid, rng: &mut ChaCha8Rng) -> goursat_volterra::problem::ControlField {
    let mut u = goursat_volterra::problem::ControlField::zeros_for(p, g);
    let v: Vec<f64> = u.flat().iter().map(|_| rng.gen_range(-1.0..=1.0)).collect();
    u.set_flat(&v);
    u
}
