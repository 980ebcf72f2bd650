//! Projected-gradient minimization and the partial extremum principle check.

use serde::{Deserialize, Serialize};

use crate::costate::{hamiltonian, solve_costate, CoState, ControlOverride, HamiltonianAt};
use crate::error::{invalid, GvError, Result};
use crate::forward::{solve_forward, ForwardOptions};
use crate::gradient::{control_dot, cost, gradient, GradientField};
use crate::grid::{Grid, GridField};
use crate::problem::{Bounds, ControlField, GvProblem};

pub use crate::problem::project;

/// Line search and stopping parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizeOptions {
    pub max_outer: usize,
    /// First trial step; later iterations start from a Barzilai-Borwein step.
    pub step0: f64,
    pub armijo_c: f64,
    pub backtrack: f64,
    /// Stop when `|u - P(u - G)|_∞` falls to this value.
    pub stat_tol: f64,
    pub forward: ForwardOptions,
    /// Tolerance of the co-state solve.
    pub costate_tol: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            max_outer: 200,
            step0: 1.0,
            armijo_c: 1e-4,
            backtrack: 0.5,
            stat_tol: 1e-6,
            forward: ForwardOptions { tol: 1e-13, max_iters: 500, mu: None },
            costate_tol: 1e-13,
        }
    }
}

impl OptimizeOptions {
    fn check(&self) -> Result<()> {
        if !(self.step0 > 0.0) {
            return Err(invalid("step0 must be positive"));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(invalid("armijo_c must lie in (0, 1)"));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(invalid("backtrack must lie in (0, 1)"));
        }
        if !(self.stat_tol > 0.0) {
            return Err(invalid("stat_tol must be positive"));
        }
        Ok(())
    }
}

/// One outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistoryRow {
    pub k: usize,
    pub cost: f64,
    pub stationarity: f64,
    /// Step accepted on the way into this iterate (0 for the start).
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub control: ControlField,
    pub state: GridField,
    pub costate: CoState,
    pub gradient: GradientField,
    pub history: Vec<HistoryRow>,
    pub converged: bool,
}

/// State, cost, co-state and gradient at one control.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub y: GridField,
    pub cost: f64,
    pub psi: CoState,
    pub grad: GradientField,
}

/// Forward solve, cost, co-state and gradient in one call.
pub fn evaluate(p: &dyn GvProblem, u: &ControlField, g: &Grid, fopts: &ForwardOptions, costate_tol: f64) -> Result<Evaluation> {
    let y = solve_forward(p, u, g, fopts)?.y;
    let j = cost(p, &y, u, g)?;
    let psi = solve_costate(p, &y, u, g, costate_tol)?;
    let grad = gradient(p, &y, u, &psi, g)?;
    Ok(Evaluation { y, cost: j, psi, grad })
}

/// `|u - P(u - G)|_∞`.
pub fn stationarity(u: &ControlField, grad: &GradientField) -> Result<f64> {
    let trial = project(&u.offset(-1.0, &grad.as_direction(u)))?;
    Ok(u.sup_diff(&trial))
}

/// Projected gradient descent with Armijo backtracking.
///
/// Trial steps after the first come from the Barzilai-Borwein formula,
/// clamped to `[1e-12, 1e12]`. Every accepted step satisfies
/// `J(u+) <= J(u) + c <G, u+ - u>_w`, so the cost never increases.
pub fn optimize(p: &dyn GvProblem, u0: &ControlField, g: &Grid, opts: &OptimizeOptions) -> Result<OptimizeResult> {
    opts.check()?;
    u0.check_shape(g, &p.dims())?;
    if !u0.is_admissible() {
        return Err(invalid("starting control lies outside its box"));
    }
    let wrap = |iteration: usize, u: &ControlField, e: GvError| match e {
        GvError::InvalidArgument(_) => e,
        other => GvError::Optimizer { iteration, source: Box::new(other), snapshot: Box::new(u.clone()) },
    };
    let mut u = u0.clone();
    let mut ev = evaluate(p, &u, g, &opts.forward, opts.costate_tol).map_err(|e| wrap(0, &u, e))?;
    let mut history = Vec::new();
    let mut prev: Option<(ControlField, GradientField)> = None;
    let mut last_step = 0.0;
    let mut converged = false;

    for k in 0..=opts.max_outer {
        let stat = stationarity(&u, &ev.grad)?;
        history.push(HistoryRow { k, cost: ev.cost, stationarity: stat, step: last_step });
        if stat <= opts.stat_tol {
            converged = true;
            break;
        }
        if k == opts.max_outer {
            break;
        }
        let dir = ev.grad.as_direction(&u);
        let mut alpha = opts.step0;
        if let Some((pu, pg)) = &prev {
            let s = u.offset(-1.0, pu);
            let yv = dir.offset(-1.0, &pg.as_direction(&u));
            let sy = control_dot(&s, &yv, g);
            if sy > 0.0 {
                // alternate the long and short Barzilai-Borwein steps
                let bb = if k % 2 == 1 { control_dot(&s, &s, g) / sy } else { sy / control_dot(&yv, &yv, g) };
                alpha = bb.clamp(1e-12, 1e12);
            }
        }
        let mut accepted = None;
        for _ in 0..=60 {
            let trial = project(&u.offset(-alpha, &dir))?;
            let d = trial.offset(-1.0, &u);
            let decrease = control_dot(&dir, &d, g);
            let y = match solve_forward(p, &trial, g, &opts.forward) {
                Ok(sol) => sol.y,
                Err(GvError::Divergence { .. }) | Err(GvError::Numerical { .. }) => {
                    alpha *= opts.backtrack;
                    continue;
                }
                Err(e) => return Err(wrap(k, &u, e)),
            };
            let jt = cost(p, &y, &trial, g).map_err(|e| wrap(k, &u, e))?;
            if jt <= ev.cost + opts.armijo_c * decrease {
                accepted = Some((trial, y, jt));
                break;
            }
            alpha *= opts.backtrack;
        }
        let Some((trial, y, jt)) = accepted else {
            return Err(GvError::Stalled { iteration: k, cost: ev.cost, snapshot: Box::new(u.clone()) });
        };
        let psi = solve_costate(p, &y, &trial, g, opts.costate_tol).map_err(|e| wrap(k, &u, e))?;
        let grad = gradient(p, &y, &trial, &psi, g).map_err(|e| wrap(k, &u, e))?;
        prev = Some((u, ev.grad));
        u = trial;
        ev = Evaluation { y, cost: jt, psi, grad };
        last_step = alpha;
    }
    Ok(OptimizeResult { control: u, state: ev.y, costate: ev.psi, gradient: ev.grad, history, converged })
}

/// Result for one claim of the partial extremum principle.
#[derive(Debug, Clone, Serialize)]
pub struct ClaimResult {
    pub claim: String,
    pub applicable: bool,
    /// Why the claim was skipped, when it was.
    pub reason: Option<String>,
    pub tested: usize,
    pub passed: usize,
    pub pass_fraction: f64,
    /// Largest `objective(current) - min over samples`, positive = violation.
    pub worst_violation: f64,
    /// Node of the worst violation, when there is one.
    pub worst_node: Option<(usize, usize)>,
    /// Lattice index of the sampled minimizer at every tested point.
    #[serde(skip)]
    pub argmins: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtremumReport {
    pub tol: f64,
    pub n_samples: usize,
    pub claims: Vec<ClaimResult>,
}

impl ExtremumReport {
    pub fn claim(&self, name: &str) -> Option<&ClaimResult> {
        self.claims.iter().find(|c| c.claim == name)
    }
}

/// Lattice over a finite box with about `n` points, corners included.
///
/// `r = max(2, round(n^{1/d}))` points per axis; ties in the argmin go to
/// the first lattice point.
pub fn sample_lattice(b: &Bounds, n: usize) -> Vec<Vec<f64>> {
    let d = b.dim();
    if d == 0 {
        return vec![vec![]];
    }
    let r = ((n as f64).powf(1.0 / d as f64).round() as usize).max(2);
    let total = r.pow(d as u32);
    (0..total)
        .map(|mut idx| {
            (0..d)
                .map(|k| {
                    let step = idx % r;
                    idx /= r;
                    let f = step as f64 / (r - 1) as f64;
                    if step == r - 1 {
                        b.hi[k]
                    } else {
                        b.lo[k] + f * (b.hi[k] - b.lo[k])
                    }
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Copy, PartialEq)]
enum Block {
    U1,
    U2,
    U12,
}

fn override_of(block: Block, v: &[f64]) -> ControlOverride {
    let v = Some(v.to_vec());
    match block {
        Block::U1 => ControlOverride { u1: v, ..Default::default() },
        Block::U2 => ControlOverride { u2: v, ..Default::default() },
        Block::U12 => ControlOverride { u12: v, ..Default::default() },
    }
}

struct ClaimPlan {
    name: &'static str,
    block: Block,
    applicable: bool,
    condition: &'static str,
    // (node for reporting, weighted Hamiltonians making up the objective)
    points: Vec<((usize, usize), Vec<(f64, HamiltonianAt)>)>,
}

/// Audits the partial extremum principle at a (converged) control.
///
/// Each claim's objective is evaluated at the current control and at a
/// lattice of box samples, with the other controls, state and co-state
/// held fixed. Objectives are the discrete first-order ones: a node on the
/// top or right edge also carries its own interior Hamiltonian with weight
/// `W_i` or `V_j`, which vanishes as the grid is refined.
pub fn check_extremum_principle(
    p: &dyn GvProblem,
    u: &ControlField,
    y: &GridField,
    psi: &CoState,
    g: &Grid,
    n_samples: usize,
    tol: f64,
) -> Result<ExtremumReport> {
    if n_samples < 2 {
        return Err(invalid("extremum check needs at least two samples"));
    }
    let d = p.dims();
    u.check_shape(g, &d)?;
    let ind = p.independence();
    let (ns, nt) = (g.ns(), g.nt());
    let (sl, tl) = (g.s_len(), g.t_len());
    let ws = |i: usize| g.full_s(i);
    let vt = |j: usize| g.full_t(j);
    use HamiltonianAt::*;

    let mut plans = Vec::new();
    plans.push(ClaimPlan {
        name: "u12_pointwise",
        block: Block::U12,
        applicable: ind.f0.u12 && ind.f1.u12 && ind.f2.u12,
        condition: "f0, f1, f2 independent of u12",
        points: (0..ns).flat_map(|i| (0..nt).map(move |j| ((i, j), vec![(1.0, H12(i, j))]))).collect(),
    });
    plans.push(ClaimPlan {
        name: "u1_aggregated",
        block: Block::U1,
        applicable: ind.f0.u1 && ind.f2.u1,
        condition: "f0, f2 independent of u1",
        points: (0..ns)
            .map(|i| {
                let mut terms = vec![(1.0, H1(i))];
                terms.extend((0..tl).map(|j| (vt(j), H12(i, j))));
                ((i, nt), terms)
            })
            .collect(),
    });
    plans.push(ClaimPlan {
        name: "u2_aggregated",
        block: Block::U2,
        applicable: ind.f0.u2 && ind.f1.u2,
        condition: "f0, f1 independent of u2",
        points: (0..nt)
            .map(|j| {
                let mut terms = vec![(1.0, H2(j))];
                terms.extend((0..sl).map(|i| (ws(i), H12(i, j))));
                ((ns, j), terms)
            })
            .collect(),
    });
    plans.push(ClaimPlan {
        name: "u12_right_edge",
        block: Block::U12,
        applicable: ind.f0.u12,
        condition: "f0 independent of u12",
        points: (0..nt).map(|j| ((ns, j), vec![(1.0, H2(j)), (ws(ns), H12(ns, j))])).collect(),
    });
    plans.push(ClaimPlan {
        name: "u12_top_edge",
        block: Block::U12,
        applicable: ind.f0.u12,
        condition: "f0 independent of u12",
        points: (0..ns).map(|i| ((i, nt), vec![(1.0, H1(i)), (vt(nt), H12(i, nt))])).collect(),
    });
    {
        let mut terms = vec![(1.0, H0), (ws(ns), H1(ns))];
        terms.extend((0..tl).map(|j| (vt(j), H2(j))));
        terms.extend((0..tl).map(|j| (ws(ns) * vt(j), H12(ns, j))));
        plans.push(ClaimPlan { name: "u1_end", block: Block::U1, applicable: true, condition: "", points: vec![((ns, nt), terms)] });
        let mut terms = vec![(1.0, H0), (vt(nt), H2(nt))];
        terms.extend((0..sl).map(|i| (ws(i), H1(i))));
        terms.extend((0..sl).map(|i| (ws(i) * vt(nt), H12(i, nt))));
        plans.push(ClaimPlan { name: "u2_end", block: Block::U2, applicable: true, condition: "", points: vec![((ns, nt), terms)] });
        let terms = vec![(1.0, H0), (ws(ns), H1(ns)), (vt(nt), H2(nt)), (ws(ns) * vt(nt), H12(ns, nt))];
        plans.push(ClaimPlan { name: "u12_corner", block: Block::U12, applicable: true, condition: "", points: vec![((ns, nt), terms)] });
    }

    let mut claims = Vec::new();
    for plan in plans {
        let (bounds, dim) = match plan.block {
            Block::U1 => (&u.boxes.u1, d.p1),
            Block::U2 => (&u.boxes.u2, d.p2),
            Block::U12 => (&u.boxes.u12, d.p12),
        };
        let current = |i: usize, j: usize| -> Vec<f64> {
            match plan.block {
                Block::U1 => u.u1.at(i).to_vec(),
                Block::U2 => u.u2.at(j).to_vec(),
                Block::U12 => u.u12.at(i, j).to_vec(),
            }
        };
        let skip = |reason: String| ClaimResult {
            claim: plan.name.to_string(),
            applicable: false,
            reason: Some(reason),
            tested: 0,
            passed: 0,
            pass_fraction: 0.0,
            worst_violation: 0.0,
            worst_node: None,
            argmins: vec![],
        };
        if dim == 0 {
            claims.push(skip("control block is empty".into()));
            continue;
        }
        if !plan.applicable {
            claims.push(skip(format!("requires {}", plan.condition)));
            continue;
        }
        if !bounds.is_finite() {
            claims.push(skip("sampling needs a finite box".into()));
            continue;
        }
        let lattice = sample_lattice(bounds, n_samples);
        let objective = |terms: &[(f64, HamiltonianAt)], ov: Option<&ControlOverride>| -> Result<f64> {
            let mut acc = 0.0;
            for (w, at) in terms {
                acc += w * hamiltonian(p, y, u, psi, g, *at, ov)?;
            }
            Ok(acc)
        };
        let mut tested = 0;
        let mut passed = 0;
        let mut worst = f64::NEG_INFINITY;
        let mut worst_node = None;
        let mut argmins = Vec::with_capacity(plan.points.len());
        for ((i, j), terms) in &plan.points {
            let cur_v = current(*i, *j);
            let cur = objective(terms, Some(&override_of(plan.block, &cur_v)))?;
            let mut best = f64::INFINITY;
            let mut best_k = 0;
            for (k, v) in lattice.iter().enumerate() {
                let val = objective(terms, Some(&override_of(plan.block, v)))?;
                if val < best {
                    best = val;
                    best_k = k;
                }
            }
            let gap = cur - best;
            tested += 1;
            if gap <= tol {
                passed += 1;
            }
            if gap > worst {
                worst = gap;
                worst_node = Some((*i, *j));
            }
            argmins.push(best_k);
        }
        claims.push(ClaimResult {
            claim: plan.name.to_string(),
            applicable: true,
            reason: None,
            tested,
            passed,
            pass_fraction: if tested > 0 { passed as f64 / tested as f64 } else { 0.0 },
            worst_violation: worst.max(0.0),
            worst_node: if worst > 0.0 { worst_node } else { None },
            argmins,
        });
    }
    Ok(ExtremumReport { tol, n_samples, claims })
}
