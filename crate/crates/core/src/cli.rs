//! Command-line front end behind the `gv` binary.
//!
//! Every subcommand takes an optional JSON config path followed by
//! kebab-case overrides. Results go to CSV files under `--out-dir` and a
//! single JSON summary on stdout. Exit codes: 0 success, 1 configuration
//! error, 2 numerical failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::costate::{solve_costate, CoState};
use crate::demos::{
    make_chromatography, make_synthetic_lq, ChromatographyParams, DecoupledQuadratic, Exponential, LqConfig,
    ManufacturedLinear,
};
use crate::error::{GvError, Result};
use crate::forward::{solve_forward, ForwardOptions};
use crate::gradient::{cost, fd_directional, gradient, inner_product};
use crate::gronwall::{coefficient_bound, gronwall_bound, gronwall_coeffs, gronwall_series, growth_constant};
use crate::grid::{make_grid, Grid, GridField};
use crate::optimize::{check_extremum_principle, optimize, OptimizeOptions};
use crate::problem::{ControlField, GvProblem};

/// Names accepted by the `problem` key.
pub const PROBLEMS: &[&str] =
    &["manufactured-linear", "exponential", "synthetic-lq", "lq-inverse-crime", "decoupled-quadratic", "chromatography"];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub a: f64,
    pub b: f64,
    pub ns: usize,
    pub nt: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { a: 1.0, b: 1.0, ns: 16, nt: 16 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradcheckConfig {
    pub directions: usize,
    pub eps: f64,
    pub threshold: f64,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        GradcheckConfig { directions: 10, eps: 1e-4, threshold: 1e-4 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtremumConfig {
    pub samples: usize,
    pub tol: f64,
}

impl Default for ExtremumConfig {
    fn default() -> Self {
        ExtremumConfig { samples: 33, tol: 1e-4 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GronwallConfig {
    pub a0: f64,
    pub b1: f64,
    pub b2: f64,
    pub b12: f64,
    /// Highest `k` and `l` in the printed coefficient table.
    pub order: usize,
    pub ds: Vec<f64>,
    pub dt: Vec<f64>,
}

impl Default for GronwallConfig {
    fn default() -> Self {
        let lattice = vec![0.0, 0.25, 0.5, 0.75, 1.0];
        GronwallConfig { a0: 1.0, b1: 0.0, b2: 0.0, b12: 1.0, order: 6, ds: lattice.clone(), dt: lattice }
    }
}

/// Everything a run needs; every field has a default.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: String,
    pub grid: GridConfig,
    pub forward: ForwardOptions,
    pub costate_tol: f64,
    pub optimizer: OptimizeOptions,
    pub lq: LqConfig,
    pub chromatography: ChromatographyParams,
    /// Box half-width for the decoupled quadratic; `null` for unbounded.
    pub decoupled_bound: Option<f64>,
    /// Constant starting value for every control sample (clamped to the box).
    pub u_init: Option<f64>,
    pub gradcheck: GradcheckConfig,
    pub extremum: ExtremumConfig,
    pub gronwall: GronwallConfig,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: "synthetic-lq".into(),
            grid: GridConfig::default(),
            forward: ForwardOptions::default(),
            costate_tol: 1e-13,
            optimizer: OptimizeOptions::default(),
            lq: LqConfig::default(),
            chromatography: ChromatographyParams::default(),
            decoupled_bound: Some(5.0),
            u_init: None,
            gradcheck: GradcheckConfig::default(),
            extremum: ExtremumConfig::default(),
            gronwall: GronwallConfig::default(),
            out_dir: PathBuf::from("gv-out"),
            seed: 1,
        }
    }
}

fn config_err(key: &str, msg: impl std::fmt::Display) -> GvError {
    GvError::Config(format!("`{key}`: {msg}"))
}

impl RunConfig {
    /// Reads a JSON config; unknown keys are rejected by name.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| GvError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| GvError::Config(format!("{}: {e}", path.display())))
    }

    /// Rejects out-of-range values, naming the offending key.
    pub fn check(&self) -> Result<()> {
        if !PROBLEMS.contains(&self.problem.as_str()) {
            return Err(config_err("problem", format!("unknown problem '{}' (known: {})", self.problem, PROBLEMS.join(", "))));
        }
        let g = &self.grid;
        if !(g.a > 0.0 && g.a.is_finite()) {
            return Err(config_err("grid.a", "must be positive"));
        }
        if !(g.b > 0.0 && g.b.is_finite()) {
            return Err(config_err("grid.b", "must be positive"));
        }
        if g.ns == 0 {
            return Err(config_err("grid.ns", "must be at least 1"));
        }
        if g.nt == 0 {
            return Err(config_err("grid.nt", "must be at least 1"));
        }
        if !(self.forward.tol > 0.0) {
            return Err(config_err("forward.tol", "must be positive"));
        }
        if self.forward.max_iters == 0 {
            return Err(config_err("forward.max_iters", "must be at least 1"));
        }
        if !(self.costate_tol > 0.0) {
            return Err(config_err("costate_tol", "must be positive"));
        }
        let o = &self.optimizer;
        if !(o.step0 > 0.0) {
            return Err(config_err("optimizer.step0", "must be positive"));
        }
        if !(o.armijo_c > 0.0 && o.armijo_c < 1.0) {
            return Err(config_err("optimizer.armijo_c", "must lie in (0, 1)"));
        }
        if !(o.backtrack > 0.0 && o.backtrack < 1.0) {
            return Err(config_err("optimizer.backtrack", "must lie in (0, 1)"));
        }
        if !(o.stat_tol > 0.0) {
            return Err(config_err("optimizer.stat_tol", "must be positive"));
        }
        if !(o.forward.tol > 0.0) {
            return Err(config_err("optimizer.forward.tol", "must be positive"));
        }
        if !(o.costate_tol > 0.0) {
            return Err(config_err("optimizer.costate_tol", "must be positive"));
        }
        if !(self.gradcheck.eps > 0.0) {
            return Err(config_err("gradcheck.eps", "must be positive"));
        }
        if !(self.gradcheck.threshold > 0.0) {
            return Err(config_err("gradcheck.threshold", "must be positive"));
        }
        if self.extremum.samples < 2 {
            return Err(config_err("extremum.samples", "must be at least 2"));
        }
        if !(self.extremum.tol >= 0.0) {
            return Err(config_err("extremum.tol", "must be nonnegative"));
        }
        if let Some(b) = self.decoupled_bound {
            if !(b > 0.0) {
                return Err(config_err("decoupled_bound", "must be positive"));
            }
        }
        if !(self.lq.rho >= 0.0) {
            return Err(config_err("lq.rho", "must be nonnegative"));
        }
        if !(self.lq.u_bound > 0.0) {
            return Err(config_err("lq.u_bound", "must be positive"));
        }
        self.chromatography.check().map_err(|e| config_err("chromatography", e))?;
        let gw = &self.gronwall;
        if gw.ds.iter().chain(&gw.dt).any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(config_err("gronwall.ds/dt", "lattice values must be finite and nonnegative"));
        }
        if [gw.a0, gw.b1, gw.b2, gw.b12].iter().any(|v| !v.is_finite()) {
            return Err(config_err("gronwall", "constants must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Parser)]
#[command(name = "gv", version, about = "Goursat-Volterra solver, gradient check, optimizer and Gronwall tables")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Forward solve: state field, iteration log, cost.
    Solve(CommonArgs),
    /// Adjoint gradient against central differences along random directions.
    Gradcheck(CommonArgs),
    /// Projected-gradient optimization followed by the extremum check.
    Optimize(CommonArgs),
    /// Gronwall series coefficients, values and bounds.
    Gronwall(CommonArgs),
}

/// Config path plus overrides; flags win over the file.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON config file.
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub grid_a: Option<f64>,
    #[arg(long)]
    pub grid_b: Option<f64>,
    #[arg(long)]
    pub grid_ns: Option<usize>,
    #[arg(long)]
    pub grid_nt: Option<usize>,
    /// Forward solve tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub u_init: Option<f64>,
    #[arg(long)]
    pub max_outer: Option<usize>,
    #[arg(long)]
    pub stat_tol: Option<f64>,
    #[arg(long)]
    pub step0: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub directions: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub extremum_tol: Option<f64>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub a0: Option<f64>,
    #[arg(long)]
    pub b1: Option<f64>,
    #[arg(long)]
    pub b2: Option<f64>,
    #[arg(long)]
    pub b12: Option<f64>,
}

impl CommonArgs {
    /// Loads the config file (or defaults) and applies the flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($flag:ident => $($field:tt)+) => {
                if let Some(v) = self.$flag.clone() {
                    c.$($field)+ = v;
                }
            };
        }
        set!(problem => problem);
        set!(grid_a => grid.a);
        set!(grid_b => grid.b);
        set!(grid_ns => grid.ns);
        set!(grid_nt => grid.nt);
        set!(tol => forward.tol);
        set!(max_iters => forward.max_iters);
        set!(out_dir => out_dir);
        set!(seed => seed);
        set!(max_outer => optimizer.max_outer);
        set!(stat_tol => optimizer.stat_tol);
        set!(step0 => optimizer.step0);
        set!(rho => lq.rho);
        set!(directions => gradcheck.directions);
        set!(eps => gradcheck.eps);
        set!(threshold => gradcheck.threshold);
        set!(samples => extremum.samples);
        set!(extremum_tol => extremum.tol);
        set!(order => gronwall.order);
        set!(a0 => gronwall.a0);
        set!(b1 => gronwall.b1);
        set!(b2 => gronwall.b2);
        set!(b12 => gronwall.b12);
        if let Some(mu) = self.mu {
            c.forward.mu = Some(mu);
        }
        if let Some(u) = self.u_init {
            c.u_init = Some(u);
        }
        c.check()?;
        Ok(c)
    }
}

/// Builds the registered problem named in the config.
pub fn build_problem(cfg: &RunConfig, g: &Grid) -> Result<Box<dyn GvProblem>> {
    Ok(match cfg.problem.as_str() {
        "manufactured-linear" => Box::new(ManufacturedLinear),
        "exponential" => Box::new(Exponential),
        "synthetic-lq" | "lq-inverse-crime" => {
            let lq = LqConfig { inverse_crime: cfg.problem == "lq-inverse-crime", seed: cfg.seed, ..cfg.lq.clone() };
            Box::new(make_synthetic_lq(g, &lq)?.0)
        }
        "decoupled-quadratic" => Box::new(DecoupledQuadratic { bound: cfg.decoupled_bound }),
        "chromatography" => Box::new(make_chromatography(g, &cfg.chromatography)?),
        other => return Err(config_err("problem", format!("unknown problem '{other}'"))),
    })
}

fn initial_control(p: &dyn GvProblem, cfg: &RunConfig, g: &Grid) -> Result<ControlField> {
    let mut u = ControlField::zeros_for(p, g);
    // zero sits outside the velocity box, so start the column model inside it
    let start = match (cfg.u_init, cfg.problem.as_str()) {
        (None, "chromatography") => Some(1.0),
        (v, _) => v,
    };
    if let Some(v) = start {
        let n = u.flat().len();
        u.set_flat(&vec![v; n]);
        u = crate::optimize::project(&u)?;
    }
    Ok(u)
}

fn make_run_grid(cfg: &RunConfig) -> Result<Grid> {
    make_grid(cfg.grid.a, cfg.grid.b, cfg.grid.ns, cfg.grid.nt).map_err(|e| config_err("grid", e))
}

struct Csv {
    buf: String,
}

impl Csv {
    fn new(header: &[String]) -> Self {
        let mut buf = header.join(",");
        buf.push('\n');
        Csv { buf }
    }
    fn row(&mut self, cells: impl IntoIterator<Item = String>) {
        let cells: Vec<String> = cells.into_iter().collect();
        self.buf.push_str(&cells.join(","));
        self.buf.push('\n');
    }
    fn write(&self, dir: &Path, name: &str, written: &mut Vec<String>) -> Result<()> {
        fs::write(dir.join(name), &self.buf)?;
        written.push(name.to_string());
        Ok(())
    }
}

fn cols(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("{prefix}_{k}")).collect()
}

fn nums(v: &[f64]) -> impl Iterator<Item = String> + '_ {
    v.iter().map(|x| format!("{x}"))
}

fn head(extra: Vec<String>) -> Vec<String> {
    let mut h: Vec<String> = ["i", "j", "s", "t"].iter().map(|s| s.to_string()).collect();
    h.extend(extra);
    h
}

fn field_csv(g: &Grid, prefix: &str, f: &GridField) -> Csv {
    let mut csv = Csv::new(&head(cols(prefix, f.dim())));
    for i in 0..g.s_len() {
        for j in 0..g.t_len() {
            let mut r = vec![i.to_string(), j.to_string(), format!("{}", g.s(i)), format!("{}", g.t(j))];
            r.extend(nums(f.at(i, j)));
            csv.row(r);
        }
    }
    csv
}

fn control_csv(g: &Grid, u: &ControlField) -> Csv {
    let mut h = cols("u1", u.u1.dim());
    h.extend(cols("u2", u.u2.dim()));
    h.extend(cols("u12", u.u12.dim()));
    let mut csv = Csv::new(&head(h));
    for i in 0..g.s_len() {
        for j in 0..g.t_len() {
            let mut r = vec![i.to_string(), j.to_string(), format!("{}", g.s(i)), format!("{}", g.t(j))];
            r.extend(nums(&u.node_row(i, j)));
            csv.row(r);
        }
    }
    csv
}

fn costate_csv(g: &Grid, psi: &CoState) -> Csv {
    let mut h = cols("psi1", psi.psi1.dim());
    h.extend(cols("psi2", psi.psi2.dim()));
    h.extend(cols("psi12", psi.psi12.dim()));
    let mut csv = Csv::new(&head(h));
    for i in 0..g.s_len() {
        for j in 0..g.t_len() {
            let mut r = vec![i.to_string(), j.to_string(), format!("{}", g.s(i)), format!("{}", g.t(j))];
            r.extend(nums(psi.psi1.at(i)));
            r.extend(nums(psi.psi2.at(j)));
            r.extend(nums(psi.psi12.at(i, j)));
            csv.row(r);
        }
    }
    csv
}

fn prepare_out(cfg: &RunConfig) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.out_dir)?;
    Ok(cfg.out_dir.clone())
}

fn grid_json(g: &Grid) -> serde_json::Value {
    json!({ "a": g.a(), "b": g.b(), "ns": g.ns(), "nt": g.nt() })
}

/// Result of a command: the stdout summary and the exit code.
pub struct Outcome {
    pub summary: serde_json::Value,
    pub code: i32,
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<Outcome> {
    let g = make_run_grid(cfg)?;
    let p = build_problem(cfg, &g)?;
    let u = initial_control(p.as_ref(), cfg, &g)?;
    let sol = solve_forward(p.as_ref(), &u, &g, &cfg.forward)?;
    let j = cost(p.as_ref(), &sol.y, &u, &g)?;
    let dir = prepare_out(cfg)?;
    let mut written = Vec::new();
    field_csv(&g, "y", &sol.y).write(&dir, "state.csv", &mut written)?;
    let mut log = Csv::new(&["iter".into(), "delta_sup".into(), "delta_weighted".into()]);
    for r in &sol.log {
        log.row([r.iter.to_string(), format!("{}", r.delta_sup), r.delta_weighted.map(|v| format!("{v}")).unwrap_or_default()]);
    }
    log.write(&dir, "iterations.csv", &mut written)?;
    let last = sol.log.last().map(|r| r.delta_sup).unwrap_or(0.0);
    Ok(Outcome {
        summary: json!({
            "command": "solve",
            "problem": cfg.problem,
            "grid": grid_json(&g),
            "cost": j,
            "iterations": sol.log.len(),
            "final_delta": last,
            "files": written,
        }),
        code: 0,
    })
}

/// One row of the gradient check.
#[derive(Debug, Clone, Serialize)]
pub struct GradcheckRow {
    pub direction: usize,
    pub fd: f64,
    pub adjoint: f64,
    pub rel_error: f64,
}

pub fn cmd_gradcheck(cfg: &RunConfig) -> Result<Outcome> {
    let g = make_run_grid(cfg)?;
    let p = build_problem(cfg, &g)?;
    let p = p.as_ref();
    let u = initial_control(p, cfg, &g)?;
    let y = solve_forward(p, &u, &g, &cfg.forward)?.y;
    let psi = solve_costate(p, &y, &u, &g, cfg.costate_tol)?;
    let grad = gradient(p, &y, &u, &psi, &g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();
    for d in 0..cfg.gradcheck.directions {
        let mut du = u.clone();
        let v: Vec<f64> = u.flat().iter().map(|_| rng.gen_range(-1.0..=1.0)).collect();
        du.set_flat(&v);
        let adj = inner_product(&grad, &du, &g);
        let fd = fd_directional(p, &u, &du, &g, cfg.gradcheck.eps, &cfg.forward)?.value;
        let rel = (adj - fd).abs() / adj.abs().max(fd.abs()).max(1e-300);
        let rel = if adj == fd { 0.0 } else { rel };
        rows.push(GradcheckRow { direction: d, fd, adjoint: adj, rel_error: rel });
    }
    let dir = prepare_out(cfg)?;
    let mut written = Vec::new();
    let mut csv = Csv::new(&["direction".into(), "fd".into(), "adjoint".into(), "rel_error".into()]);
    for r in &rows {
        csv.row([r.direction.to_string(), format!("{}", r.fd), format!("{}", r.adjoint), format!("{}", r.rel_error)]);
    }
    csv.write(&dir, "gradcheck.csv", &mut written)?;
    let worst = rows.iter().fold(0.0, |m: f64, r| m.max(r.rel_error));
    let pass = worst <= cfg.gradcheck.threshold;
    Ok(Outcome {
        summary: json!({
            "command": "gradcheck",
            "problem": cfg.problem,
            "grid": grid_json(&g),
            "threshold": cfg.gradcheck.threshold,
            "max_rel_error": worst,
            "passed": pass,
            "rows": rows,
            "files": written,
        }),
        code: if pass { 0 } else { 2 },
    })
}

pub fn cmd_optimize(cfg: &RunConfig) -> Result<Outcome> {
    let g = make_run_grid(cfg)?;
    let p = build_problem(cfg, &g)?;
    let p = p.as_ref();
    let u0 = initial_control(p, cfg, &g)?;
    let res = optimize(p, &u0, &g, &cfg.optimizer)?;
    let report = check_extremum_principle(p, &res.control, &res.state, &res.costate, &g, cfg.extremum.samples, cfg.extremum.tol)?;
    let dir = prepare_out(cfg)?;
    let mut written = Vec::new();
    control_csv(&g, &res.control).write(&dir, "control.csv", &mut written)?;
    field_csv(&g, "y", &res.state).write(&dir, "state.csv", &mut written)?;
    costate_csv(&g, &res.costate).write(&dir, "costate.csv", &mut written)?;
    let mut hist = Csv::new(&["k".into(), "J".into(), "stationarity".into(), "step".into()]);
    for r in &res.history {
        hist.row([r.k.to_string(), format!("{}", r.cost), format!("{}", r.stationarity), format!("{}", r.step)]);
    }
    hist.write(&dir, "history.csv", &mut written)?;
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| GvError::Config(e.to_string()))?;
    text.push('\n');
    fs::write(dir.join("extremum.json"), text)?;
    written.push("extremum.json".into());
    let last = res.history.last().expect("history has the starting row");
    Ok(Outcome {
        summary: json!({
            "command": "optimize",
            "problem": cfg.problem,
            "grid": grid_json(&g),
            "converged": res.converged,
            "iterations": last.k,
            "cost": last.cost,
            "stationarity": last.stationarity,
            "psi0": res.costate.psi0,
            "files": written,
        }),
        code: if res.converged { 0 } else { 2 },
    })
}

pub fn cmd_gronwall(cfg: &RunConfig) -> Result<Outcome> {
    let gw = &cfg.gronwall;
    let co = gronwall_coeffs(gw.a0, gw.b1, gw.b2, gw.b12, gw.order, gw.order);
    let b = growth_constant(gw.b1, gw.b2, gw.b12);
    let dir = prepare_out(cfg)?;
    let mut written = Vec::new();
    let mut table = Csv::new(&["k".into(), "l".into(), "c".into(), "bound".into()]);
    for k in 0..=gw.order {
        for l in 0..=gw.order {
            table.row([k.to_string(), l.to_string(), format!("{}", co.c[k][l]), format!("{}", coefficient_bound(b, k, l))]);
        }
    }
    table.write(&dir, "gronwall_coeffs.csv", &mut written)?;
    let mut vals = Csv::new(&["ds".into(), "dt".into(), "zeta".into(), "bound".into(), "holds".into()]);
    let mut all = true;
    for &ds in &gw.ds {
        for &dt in &gw.dt {
            let (_, v) = gronwall_series(gw.a0, gw.b1, gw.b2, gw.b12, ds, dt)?;
            let bound = gronwall_bound(gw.a0, gw.b1, gw.b2, gw.b12, ds, dt);
            let holds = v.value.abs() <= bound * (1.0 + 1e-12);
            all &= holds;
            vals.row([format!("{ds}"), format!("{dt}"), format!("{}", v.value), format!("{bound}"), holds.to_string()]);
        }
    }
    vals.write(&dir, "gronwall.csv", &mut written)?;
    Ok(Outcome {
        summary: json!({
            "command": "gronwall",
            "a0": gw.a0, "b1": gw.b1, "b2": gw.b2, "b12": gw.b12,
            "growth_constant": b,
            "order": gw.order,
            "bound_holds": all,
            "files": written,
        }),
        code: if all { 0 } else { 2 },
    })
}

fn exit_code(e: &GvError) -> i32 {
    match e {
        GvError::Config(_) | GvError::InvalidArgument(_) | GvError::Io(_) | GvError::Validation(_) => 1,
        _ => 2,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. The summary goes to `out`, diagnostics to `err`.
pub fn run_with<I, T>(args: I, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return 1;
            }
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    let (name, common) = match &cli.command {
        Command::Solve(a) => ("solve", a),
        Command::Gradcheck(a) => ("gradcheck", a),
        Command::Optimize(a) => ("optimize", a),
        Command::Gronwall(a) => ("gronwall", a),
    };
    let result = common.resolve().and_then(|cfg| match name {
        "solve" => cmd_solve(&cfg),
        "gradcheck" => cmd_gradcheck(&cfg),
        "optimize" => cmd_optimize(&cfg),
        _ => cmd_gronwall(&cfg),
    });
    match result {
        Ok(o) => {
            let mut s = String::new();
            let _ = writeln!(s, "{}", o.summary);
            let _ = out.write_all(s.as_bytes());
            o.code
        }
        Err(e) => {
            let _ = writeln!(err, "gv {name}: {e}");
            exit_code(&e)
        }
    }
}

/// Entry point used by the binary.
pub fn main_with_args() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
