//! Primal-dual interior-point method for sparse NLPs.
//!
//! Inequality rows get slack variables, fixed variables are removed, and
//! each iteration solves the reduced primal-dual system
//!
//! ```text
//! [ W + Σ + δw·I   Jᵀ    ] [ dy ]     [ ∇φ_μ + Jᵀλ ]
//! [ J             −δc·I  ] [ dλ ] = − [ h          ]
//! ```
//!
//! with inertia correction on `δw`. Steps are globalized by backtracking
//! on an ℓ1 merit function with a second-order correction, and the barrier
//! parameter decreases monotonically.

pub mod kkt;

use std::time::Instant;

use log::{debug, info};
use serde::Serialize;

use crate::nlp::Nlp;
use kkt::SparseLdl;

/// Bounds at or beyond this magnitude are treated as absent.
pub const INF_BOUND: f64 = 1e19;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Scaled KKT tolerance for termination.
    pub tol: f64,
    pub max_iter: usize,
    pub mu_init: f64,
    /// Linear barrier reduction factor.
    pub mu_linear: f64,
    /// Superlinear barrier reduction exponent.
    pub mu_superlinear: f64,
    /// The barrier problem counts as solved when its error is below
    /// `barrier_tol_factor · μ`.
    pub barrier_tol_factor: f64,
    /// Lower bound of the fraction-to-boundary parameter τ.
    pub tau_min: f64,
    pub bound_push: f64,
    pub bound_frac: f64,
    /// Largest gradient norm allowed after problem scaling.
    pub scaling_max_gradient: f64,
    pub delta_w_init: f64,
    pub delta_w_min: f64,
    pub delta_w_max: f64,
    pub delta_w_grow_first: f64,
    pub delta_w_grow: f64,
    pub delta_w_shrink: f64,
    /// Constant regularization of the constraint block.
    pub delta_c: f64,
    pub backtrack: f64,
    pub armijo: f64,
    pub min_step: f64,
    pub second_order_correction: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-6,
            max_iter: 3000,
            mu_init: 0.1,
            mu_linear: 0.2,
            mu_superlinear: 1.5,
            barrier_tol_factor: 10.0,
            tau_min: 0.99,
            bound_push: 1e-2,
            bound_frac: 1e-2,
            scaling_max_gradient: 100.0,
            delta_w_init: 1e-4,
            delta_w_min: 1e-20,
            delta_w_max: 1e40,
            delta_w_grow_first: 100.0,
            delta_w_grow: 8.0,
            delta_w_shrink: 1.0 / 3.0,
            delta_c: 1e-9,
            backtrack: 0.5,
            armijo: 1e-4,
            min_step: 1e-14,
            second_order_correction: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Optimal,
    MaxIter,
    InfeasibleDetected,
    NumericalFailure,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Optimal => "optimal",
            Status::MaxIter => "max-iter",
            Status::InfeasibleDetected => "infeasible-detected",
            Status::NumericalFailure => "numerical-failure",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub objective: f64,
    pub mu: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub complementarity: f64,
    pub alpha_primal: f64,
    pub alpha_dual: f64,
    pub delta_w: f64,
    pub line_search_trials: usize,
}

/// Scaled KKT residuals.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub feasibility: f64,
    pub complementarity: f64,
}

#[derive(Debug, Clone)]
pub struct SolverSolution {
    pub status: Status,
    pub x: Vec<f64>,
    /// Constraint multipliers for `L = f + λᵀc`.
    pub lambda: Vec<f64>,
    pub z_lower: Vec<f64>,
    pub z_upper: Vec<f64>,
    pub objective: f64,
    pub residuals: KktResiduals,
    pub iterations: usize,
    pub log: Vec<IterationRecord>,
    pub message: Option<String>,
    pub seconds: f64,
}

fn finite(b: f64) -> bool {
    b.abs() < INF_BOUND
}

/// Problem data after fixed-variable removal, slack introduction and
/// scaling. Internal variables are `y = (x_free, s)`.
struct Reformulated<'a> {
    p: &'a dyn Nlp,
    n: usize,
    m: usize,
    free: Vec<usize>,
    nf: usize,
    ny: usize,
    /// Inequality rows and the slack index of each row (usize::MAX for
    /// equality rows).
    slack_of_row: Vec<usize>,
    rhs_eq: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    obj_scale: f64,
    row_scale: Vec<f64>,
    x_fixed: Vec<f64>,
    // Jacobian entries restricted to free columns: (row, y column, source k)
    jac_map: Vec<(usize, usize, usize)>,
    hess_map: Vec<(usize, usize, usize)>,
    jac_vals: Vec<f64>,
    hess_vals: Vec<f64>,
}

impl<'a> Reformulated<'a> {
    fn new(p: &'a dyn Nlp) -> Self {
        let (n, m) = (p.n(), p.m());
        let (xl, xu) = p.var_bounds();
        let (cl, cu) = p.con_bounds();
        let mut free = Vec::new();
        let mut free_pos = vec![usize::MAX; n];
        let mut x_fixed = vec![0.0; n];
        for i in 0..n {
            if xl[i] == xu[i] {
                x_fixed[i] = xl[i];
            } else {
                free_pos[i] = free.len();
                free.push(i);
            }
        }
        let nf = free.len();
        let mut slack_of_row = vec![usize::MAX; m];
        let mut rhs_eq = vec![0.0; m];
        let mut ni = 0;
        for r in 0..m {
            if cl[r] == cu[r] {
                rhs_eq[r] = cl[r];
            } else {
                slack_of_row[r] = nf + ni;
                ni += 1;
            }
        }
        let ny = nf + ni;
        let mut lb = Vec::with_capacity(ny);
        let mut ub = Vec::with_capacity(ny);
        for &i in &free {
            lb.push(xl[i]);
            ub.push(xu[i]);
        }
        lb.resize(ny, 0.0);
        ub.resize(ny, 0.0);

        let (jr, jc) = p.jacobian_structure();
        let jac_map = (0..jr.len())
            .filter(|&k| free_pos[jc[k]] != usize::MAX)
            .map(|k| (jr[k], free_pos[jc[k]], k))
            .collect();
        let (hr, hc) = p.hessian_structure();
        let hess_map = (0..hr.len())
            .filter(|&k| free_pos[hr[k]] != usize::MAX && free_pos[hc[k]] != usize::MAX)
            .map(|k| {
                let (a, b) = (free_pos[hr[k]], free_pos[hc[k]]);
                (a.max(b), a.min(b), k)
            })
            .collect();
        let mut me = Reformulated {
            p,
            n,
            m,
            free,
            nf,
            ny,
            slack_of_row,
            rhs_eq,
            lb,
            ub,
            obj_scale: 1.0,
            row_scale: vec![1.0; m],
            x_fixed,
            jac_map,
            hess_map,
            jac_vals: vec![0.0; jr.len()],
            hess_vals: vec![0.0; hr.len()],
        };
        me.set_slack_bounds();
        me
    }

    fn set_slack_bounds(&mut self) {
        let (cl, cu) = self.p.con_bounds();
        for r in 0..self.m {
            let k = self.slack_of_row[r];
            if k != usize::MAX {
                let d = self.row_scale[r];
                self.lb[k] = if finite(cl[r]) { d * cl[r] } else { -f64::INFINITY };
                self.ub[k] = if finite(cu[r]) { d * cu[r] } else { f64::INFINITY };
            }
        }
    }

    fn full_x(&self, y: &[f64], x: &mut [f64]) {
        x.copy_from_slice(&self.x_fixed);
        for (k, &i) in self.free.iter().enumerate() {
            x[i] = y[k];
        }
    }

    /// Gradient-based scaling at the starting point.
    fn compute_scaling(&mut self, x: &[f64], cap: f64) {
        let mut g = vec![0.0; self.n];
        self.p.gradient(x, &mut g);
        let gmax = self.free.iter().map(|&i| g[i].abs()).fold(0.0, f64::max);
        self.obj_scale = if gmax.is_finite() && gmax > cap { cap / gmax } else { 1.0 };
        self.p.jacobian_values(x, &mut self.jac_vals);
        let mut rmax = vec![0.0f64; self.m];
        for &(r, _, k) in &self.jac_map {
            rmax[r] = rmax[r].max(self.jac_vals[k].abs());
        }
        for r in 0..self.m {
            self.row_scale[r] = if rmax[r].is_finite() && rmax[r] > cap { cap / rmax[r] } else { 1.0 };
        }
        self.set_slack_bounds();
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.obj_scale * self.p.objective(x)
    }

    fn gradient(&self, x: &[f64], gy: &mut [f64]) {
        let mut g = vec![0.0; self.n];
        self.p.gradient(x, &mut g);
        gy.fill(0.0);
        for (k, &i) in self.free.iter().enumerate() {
            gy[k] = self.obj_scale * g[i];
        }
    }

    /// `h(y)`, scaled.
    fn constraints(&self, x: &[f64], y: &[f64], h: &mut [f64]) {
        self.p.constraints(x, h);
        for r in 0..self.m {
            let d = self.row_scale[r];
            let k = self.slack_of_row[r];
            h[r] = if k == usize::MAX { d * (h[r] - self.rhs_eq[r]) } else { d * h[r] - y[k] };
        }
    }

    fn update_jacobian(&mut self, x: &[f64]) {
        self.p.jacobian_values(x, &mut self.jac_vals);
    }

    /// `out += Jᵀ v` over y.
    fn jt_mul(&self, v: &[f64], out: &mut [f64]) {
        for &(r, c, k) in &self.jac_map {
            out[c] += self.row_scale[r] * self.jac_vals[k] * v[r];
        }
        for r in 0..self.m {
            let k = self.slack_of_row[r];
            if k != usize::MAX {
                out[k] -= v[r];
            }
        }
    }

    fn update_hessian(&mut self, x: &[f64], lambda: &[f64]) {
        let scaled: Vec<f64> = lambda.iter().zip(&self.row_scale).map(|(l, d)| l * d).collect();
        self.p.hessian_values(x, self.obj_scale, &scaled, &mut self.hess_vals);
    }

    fn kkt_pattern(&self) -> (Vec<usize>, Vec<usize>) {
        let mut rows = Vec::with_capacity(self.hess_map.len() + self.jac_map.len() + self.ny - self.nf);
        let mut cols = Vec::with_capacity(rows.capacity());
        for &(a, b, _) in &self.hess_map {
            rows.push(a);
            cols.push(b);
        }
        for &(r, c, _) in &self.jac_map {
            rows.push(self.ny + r);
            cols.push(c);
        }
        for r in 0..self.m {
            let k = self.slack_of_row[r];
            if k != usize::MAX {
                rows.push(self.ny + r);
                cols.push(k);
            }
        }
        (rows, cols)
    }

    fn kkt_values(&self, out: &mut Vec<f64>, include_hessian: bool) {
        out.clear();
        for &(_, _, k) in &self.hess_map {
            out.push(if include_hessian { self.hess_vals[k] } else { 0.0 });
        }
        for &(r, _, k) in &self.jac_map {
            out.push(self.row_scale[r] * self.jac_vals[k]);
        }
        for r in 0..self.m {
            if self.slack_of_row[r] != usize::MAX {
                out.push(-1.0);
            }
        }
    }

    fn first_nonfinite(&self, x: &[f64]) -> Option<String> {
        let mut c = vec![0.0; self.m];
        self.p.constraints(x, &mut c);
        if let Some(r) = c.iter().position(|v| !v.is_finite()) {
            return Some(format!("constraint `{}`", self.p.constraint_name(r)));
        }
        let mut g = vec![0.0; self.n];
        self.p.gradient(x, &mut g);
        if let Some(i) = g.iter().position(|v| !v.is_finite()) {
            return Some(format!("objective gradient at variable `{}`", self.p.variable_name(i)));
        }
        let (jr, jc) = self.p.jacobian_structure();
        let mut jv = vec![0.0; jr.len()];
        self.p.jacobian_values(x, &mut jv);
        if let Some(k) = jv.iter().position(|v| !v.is_finite()) {
            return Some(format!(
                "Jacobian of `{}` with respect to `{}`",
                self.p.constraint_name(jr[k]),
                self.p.variable_name(jc[k])
            ));
        }
        if !self.p.objective(x).is_finite() {
            return Some("objective".into());
        }
        None
    }
}

struct Iterate {
    y: Vec<f64>,
    lambda: Vec<f64>,
    zl: Vec<f64>,
    zu: Vec<f64>,
}

struct Evaluated {
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    h: Vec<f64>,
}

fn barrier_value(f: f64, y: &[f64], lb: &[f64], ub: &[f64], mu: f64) -> f64 {
    let mut v = f;
    for i in 0..y.len() {
        if lb[i].is_finite() && finite(lb[i]) {
            v -= mu * (y[i] - lb[i]).ln();
        }
        if ub[i].is_finite() && finite(ub[i]) {
            v -= mu * (ub[i] - y[i]).ln();
        }
    }
    v
}

fn norm1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Largest step in (0, 1] keeping `v + α dv` at least a fraction `1 − τ`
/// of the way from the boundary.
fn fraction_to_boundary(dist: impl Iterator<Item = (f64, f64)>, tau: f64) -> f64 {
    let mut a = 1.0f64;
    for (d, dd) in dist {
        if dd < 0.0 {
            a = a.min(-tau * d / dd);
        }
    }
    a
}

/// Solves the NLP from its own initial point.
pub fn solve(p: &dyn Nlp, opts: &SolverOptions) -> SolverSolution {
    solve_from(p, opts, None)
}

/// Solves the NLP from `x0` when given, else from `p.initial_point()`.
pub fn solve_from(p: &dyn Nlp, opts: &SolverOptions, x0: Option<&[f64]>) -> SolverSolution {
    let start = Instant::now();
    let mut sol = Solver::new(p, opts).run(x0);
    sol.seconds = start.elapsed().as_secs_f64();
    sol
}

struct Solver<'a> {
    r: Reformulated<'a>,
    o: &'a SolverOptions,
    has_l: Vec<bool>,
    has_u: Vec<bool>,
}

impl<'a> Solver<'a> {
    fn new(p: &'a dyn Nlp, o: &'a SolverOptions) -> Self {
        Solver {
            r: Reformulated::new(p),
            o,
            has_l: Vec::new(),
            has_u: Vec::new(),
        }
    }

    fn evaluate(&self, y: &[f64]) -> Evaluated {
        let mut x = vec![0.0; self.r.n];
        self.r.full_x(y, &mut x);
        let f = self.r.objective(&x);
        let mut g = vec![0.0; self.r.ny];
        self.r.gradient(&x, &mut g);
        let mut h = vec![0.0; self.r.m];
        self.r.constraints(&x, y, &mut h);
        Evaluated { x, f, g, h }
    }

    fn trial_values(&self, y: &[f64]) -> (f64, Vec<f64>) {
        let mut x = vec![0.0; self.r.n];
        self.r.full_x(y, &mut x);
        let f = self.r.objective(&x);
        let mut h = vec![0.0; self.r.m];
        self.r.constraints(&x, y, &mut h);
        (f, h)
    }

    fn failure(&self, status: Status, it: &Iterate, log: Vec<IterationRecord>, message: String) -> SolverSolution {
        let mut x = vec![0.0; self.r.n];
        self.r.full_x(&it.y, &mut x);
        SolverSolution {
            status,
            objective: self.r.p.objective(&x),
            x,
            lambda: vec![0.0; self.r.m],
            z_lower: vec![0.0; self.r.n],
            z_upper: vec![0.0; self.r.n],
            residuals: KktResiduals::default(),
            iterations: log.len(),
            log,
            message: Some(message),
            seconds: 0.0,
        }
    }

    fn run(mut self, x0: Option<&[f64]>) -> SolverSolution {
        let o = self.o;
        let (n, m, ny, nf) = (self.r.n, self.r.m, self.r.ny, self.r.nf);
        let mut x_start = x0.map(|v| v.to_vec()).unwrap_or_else(|| self.r.p.initial_point());
        assert_eq!(x_start.len(), n, "initial point has the wrong length");
        {
            let (xl, xu) = self.r.p.var_bounds();
            for i in 0..n {
                x_start[i] = x_start[i].clamp(xl[i], xu[i]);
            }
        }
        if let Some(what) = self.r.first_nonfinite(&x_start) {
            let it = Iterate { y: self.r.free.iter().map(|&i| x_start[i]).collect(), lambda: vec![], zl: vec![], zu: vec![] };
            let mut y = it.y.clone();
            y.resize(ny, 0.0);
            return self.failure(
                Status::NumericalFailure,
                &Iterate { y, ..it },
                vec![],
                format!("non-finite value in {what} at the starting point"),
            );
        }
        self.r.compute_scaling(&x_start, o.scaling_max_gradient);

        self.has_l = self.r.lb.iter().map(|&b| b.is_finite() && finite(b)).collect();
        self.has_u = self.r.ub.iter().map(|&b| b.is_finite() && finite(b)).collect();

        // starting point pushed inside the bounds
        let mut y = vec![0.0; ny];
        for (k, &i) in self.r.free.iter().enumerate() {
            y[k] = x_start[i];
        }
        {
            let mut c = vec![0.0; m];
            self.r.p.constraints(&x_start, &mut c);
            for r in 0..m {
                let k = self.r.slack_of_row[r];
                if k != usize::MAX {
                    y[k] = self.r.row_scale[r] * c[r];
                }
            }
        }
        for i in 0..ny {
            let (l, u) = (self.r.lb[i], self.r.ub[i]);
            let width = if self.has_l[i] && self.has_u[i] { u - l } else { f64::INFINITY };
            if self.has_l[i] {
                let push = (o.bound_push * l.abs().max(1.0)).min(o.bound_frac * width);
                y[i] = y[i].max(l + push);
            }
            if self.has_u[i] {
                let push = (o.bound_push * u.abs().max(1.0)).min(o.bound_frac * width);
                y[i] = y[i].min(u - push);
            }
            if self.has_l[i] && self.has_u[i] && !(y[i] > l && y[i] < u) {
                y[i] = 0.5 * (l + u);
            }
        }

        let zl: Vec<f64> = self.has_l.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        let zu: Vec<f64> = self.has_u.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        let mut it = Iterate { y, lambda: vec![0.0; m], zl, zu };

        let (krow, kcol) = self.r.kkt_pattern();
        let dim = ny + m;
        let mut ldl = match SparseLdl::analyze(dim, &krow, &kcol) {
            Ok(l) => l,
            Err(e) => return self.failure(Status::NumericalFailure, &it, vec![], e.to_string()),
        };
        debug!("KKT dimension {dim}, factor nonzeros {}", ldl.factor_nnz());
        let mut kvals = Vec::new();
        let mut shift = vec![0.0; dim];

        // least-squares multipliers
        let mut ev = self.evaluate(&it.y);
        self.r.update_jacobian(&ev.x);
        {
            self.r.kkt_values(&mut kvals, false);
            shift[..ny].fill(1.0);
            shift[ny..].fill(-o.delta_c);
            let inertia = ldl.factor(&kvals, &shift);
            if inertia.zero == 0 {
                let mut rhs = vec![0.0; dim];
                for i in 0..ny {
                    rhs[i] = -(ev.g[i] - it.zl[i] + it.zu[i]);
                }
                ldl.solve(&mut rhs);
                let lam = &rhs[ny..];
                if norm_inf(lam) <= 1e3 {
                    it.lambda.copy_from_slice(lam);
                }
            }
        }

        let mut mu = o.mu_init;
        let mut tau = o.tau_min.max(1.0 - mu);
        let mut nu = 1e-6f64;
        let mut delta_w_last = 0.0f64;
        let mut log = Vec::new();
        let mut consecutive_failures = 0usize;
        let mut status = Status::MaxIter;
        let mut message = None;
        let mut residuals = KktResiduals::default();
        let mut dy = vec![0.0; ny];
        let mut rhs = vec![0.0; dim];

        for iter in 0..=o.max_iter {
            // optimality measures
            let mut grad_l = ev.g.clone();
            self.r.jt_mul(&it.lambda, &mut grad_l);
            for i in 0..ny {
                grad_l[i] += -it.zl[i] + it.zu[i];
            }
            let s_max = 100.0f64;
            let zsum = norm1(&it.zl) + norm1(&it.zu);
            let nz = self.has_l.iter().filter(|&&b| b).count() + self.has_u.iter().filter(|&&b| b).count();
            let s_d = (s_max.max((norm1(&it.lambda) + zsum) / ((m + nz).max(1) as f64))) / s_max;
            let s_c = (s_max.max(zsum / (nz.max(1) as f64))) / s_max;
            let dual_inf = norm_inf(&grad_l);
            let primal_inf = norm_inf(&ev.h);
            let compl = |target: f64| {
                let mut c = 0.0f64;
                for i in 0..ny {
                    if self.has_l[i] {
                        c = c.max(((it.y[i] - self.r.lb[i]) * it.zl[i] - target).abs());
                    }
                    if self.has_u[i] {
                        c = c.max(((self.r.ub[i] - it.y[i]) * it.zu[i] - target).abs());
                    }
                }
                c
            };
            let c0 = compl(0.0);
            let err0 = (dual_inf / s_d).max(primal_inf).max(c0 / s_c);
            residuals = KktResiduals { stationarity: dual_inf / s_d, feasibility: primal_inf, complementarity: c0 / s_c };
            if err0 <= o.tol {
                status = Status::Optimal;
                break;
            }
            if iter == o.max_iter {
                break;
            }

            // barrier update
            loop {
                let err_mu = (dual_inf / s_d).max(primal_inf).max(compl(mu) / s_c);
                let floor = o.tol / 10.0;
                if err_mu > o.barrier_tol_factor * mu || mu <= floor {
                    break;
                }
                mu = floor.max((o.mu_linear * mu).min(mu.powf(o.mu_superlinear)));
                tau = o.tau_min.max(1.0 - mu);
                nu = 1e-6;
            }

            // Newton system
            self.r.update_hessian(&ev.x, &it.lambda);
            self.r.kkt_values(&mut kvals, true);
            let mut sigma = vec![0.0; ny];
            for i in 0..ny {
                if self.has_l[i] {
                    sigma[i] += it.zl[i] / (it.y[i] - self.r.lb[i]);
                }
                if self.has_u[i] {
                    sigma[i] += it.zu[i] / (self.r.ub[i] - it.y[i]);
                }
            }
            let mut delta_w = 0.0f64;
            let mut ok = false;
            for attempt in 0..200 {
                for i in 0..ny {
                    shift[i] = sigma[i] + delta_w;
                }
                shift[ny..].fill(-o.delta_c);
                let inertia = ldl.factor(&kvals, &shift);
                if inertia.positive == ny && inertia.negative == m && inertia.zero == 0 {
                    ok = true;
                    break;
                }
                delta_w = if attempt == 0 {
                    if delta_w_last == 0.0 {
                        o.delta_w_init
                    } else {
                        o.delta_w_min.max(o.delta_w_shrink * delta_w_last)
                    }
                } else if delta_w_last == 0.0 {
                    o.delta_w_grow_first * delta_w
                } else {
                    o.delta_w_grow * delta_w
                };
                if delta_w > o.delta_w_max {
                    break;
                }
            }
            if !ok {
                status = Status::NumericalFailure;
                message = Some("KKT matrix stayed singular after maximal regularization".into());
                break;
            }
            if delta_w > 0.0 {
                delta_w_last = delta_w;
            }

            // right-hand side: −(∇φ_μ + Jᵀλ), −h
            let mut grad_phi = ev.g.clone();
            for i in 0..ny {
                if self.has_l[i] {
                    grad_phi[i] -= mu / (it.y[i] - self.r.lb[i]);
                }
                if self.has_u[i] {
                    grad_phi[i] += mu / (self.r.ub[i] - it.y[i]);
                }
            }
            let mut top = grad_phi.clone();
            self.r.jt_mul(&it.lambda, &mut top);
            for i in 0..ny {
                rhs[i] = -top[i];
            }
            for r in 0..m {
                rhs[ny + r] = -ev.h[r];
            }
            let sol = self.solve_refined(&mut ldl, &rhs, ny, o.delta_c);
            dy.copy_from_slice(&sol[..ny]);
            let dlam = sol[ny..].to_vec();

            let dzl: Vec<f64> = (0..ny)
                .map(|i| if self.has_l[i] { mu / (it.y[i] - self.r.lb[i]) - it.zl[i] - sigma_l(&it, &self.r, i) * dy[i] } else { 0.0 })
                .collect();
            let dzu: Vec<f64> = (0..ny)
                .map(|i| if self.has_u[i] { mu / (self.r.ub[i] - it.y[i]) - it.zu[i] + sigma_u(&it, &self.r, i) * dy[i] } else { 0.0 })
                .collect();

            let alpha_max = self.primal_step_limit(&it.y, &dy, tau);
            let alpha_z = fraction_to_boundary(
                (0..ny)
                    .filter(|&i| self.has_l[i])
                    .map(|i| (it.zl[i], dzl[i]))
                    .chain((0..ny).filter(|&i| self.has_u[i]).map(|i| (it.zu[i], dzu[i]))),
                tau,
            );

            // merit function and penalty
            let theta = norm1(&ev.h);
            let grad_dir: f64 = grad_phi.iter().zip(&dy).map(|(a, b)| a * b).sum();
            if theta > 0.0 {
                let mut kd = vec![0.0; dim];
                let mut full = vec![0.0; dim];
                full[..ny].copy_from_slice(&dy);
                ldl.multiply(&full, &mut kd);
                let curvature: f64 = kd[..ny].iter().zip(&dy).map(|(a, b)| a * b).sum();
                let needed = (grad_dir + 0.5 * curvature.max(0.0)) / (0.9 * theta);
                if nu < needed {
                    nu = needed + 1.0;
                }
            }
            let phi0 = barrier_value(ev.f, &it.y, &self.r.lb, &self.r.ub, mu);
            let merit0 = phi0 + nu * theta;
            let dmerit = grad_dir - nu * theta;

            let mut alpha = alpha_max;
            let mut trials = 0;
            let mut accepted: Option<(Vec<f64>, f64)> = None;
            let mut ytrial = vec![0.0; ny];
            while alpha >= o.min_step {
                trials += 1;
                for i in 0..ny {
                    ytrial[i] = it.y[i] + alpha * dy[i];
                }
                let (ft, ht) = self.trial_values(&ytrial);
                let mt = barrier_value(ft, &ytrial, &self.r.lb, &self.r.ub, mu) + nu * norm1(&ht);
                if mt.is_finite() && mt <= merit0 + o.armijo * alpha * dmerit.min(0.0) + 1e-14 * merit0.abs() {
                    accepted = Some((ytrial.clone(), alpha));
                    break;
                }
                if trials == 1 && o.second_order_correction && m > 0 && ht.iter().all(|v| v.is_finite()) {
                    // second-order correction for the first rejected step
                    let mut rhs2 = rhs.clone();
                    for r in 0..m {
                        rhs2[ny + r] = -(alpha * ev.h[r] + ht[r]);
                    }
                    let sol2 = self.solve_refined(&mut ldl, &rhs2, ny, o.delta_c);
                    let a2 = self.primal_step_limit(&it.y, &sol2[..ny], tau);
                    let ysoc: Vec<f64> = (0..ny).map(|i| it.y[i] + a2 * sol2[i]).collect();
                    let (fs, hs) = self.trial_values(&ysoc);
                    let ms = barrier_value(fs, &ysoc, &self.r.lb, &self.r.ub, mu) + nu * norm1(&hs);
                    if ms.is_finite() && ms <= merit0 + o.armijo * alpha * dmerit.min(0.0) {
                        accepted = Some((ysoc, alpha));
                        break;
                    }
                }
                alpha *= o.backtrack;
            }

            let (ynew, alpha_p) = match accepted {
                Some(a) => {
                    consecutive_failures = 0;
                    a
                }
                None => {
                    consecutive_failures += 1;
                    if consecutive_failures >= 4 {
                        status = if primal_inf > 1e2 * o.tol {
                            Status::InfeasibleDetected
                        } else {
                            Status::NumericalFailure
                        };
                        message = Some(format!(
                            "line search failed repeatedly (primal infeasibility {primal_inf:.3e}, dual {dual_inf:.3e})"
                        ));
                        break;
                    }
                    // take a short step anyway so that the iteration can move on
                    let a = alpha_max.min(1e-2).max(o.min_step);
                    ((0..ny).map(|i| it.y[i] + a * dy[i]).collect(), a)
                }
            };

            it.y = ynew;
            for r in 0..m {
                it.lambda[r] += alpha_p * dlam[r];
            }
            for i in 0..ny {
                if self.has_l[i] {
                    let z = it.zl[i] + alpha_z * dzl[i];
                    let d = it.y[i] - self.r.lb[i];
                    it.zl[i] = z.clamp(mu / (1e10 * d), 1e10 * mu / d);
                }
                if self.has_u[i] {
                    let z = it.zu[i] + alpha_z * dzu[i];
                    let d = self.r.ub[i] - it.y[i];
                    it.zu[i] = z.clamp(mu / (1e10 * d), 1e10 * mu / d);
                }
            }
            ev = self.evaluate(&it.y);
            if !ev.f.is_finite() || ev.h.iter().any(|v| !v.is_finite()) || ev.g.iter().any(|v| !v.is_finite()) {
                status = Status::NumericalFailure;
                message = Some(format!(
                    "non-finite value in {}",
                    self.r.first_nonfinite(&ev.x).unwrap_or_else(|| "barrier terms".into())
                ));
                break;
            }
            self.r.update_jacobian(&ev.x);

            let rec = IterationRecord {
                iter,
                objective: ev.f / self.r.obj_scale,
                mu,
                primal_infeasibility: primal_inf,
                dual_infeasibility: dual_inf / s_d,
                complementarity: c0 / s_c,
                alpha_primal: alpha_p,
                alpha_dual: alpha_z,
                delta_w,
                line_search_trials: trials,
            };
            debug!(
                "iter {:4} obj {:+.8e} inf_pr {:.2e} inf_du {:.2e} mu {:.1e} alpha {:.2e} dw {:.1e} ls {}",
                rec.iter, rec.objective, rec.primal_infeasibility, rec.dual_infeasibility, mu, alpha_p, delta_w, trials
            );
            log.push(rec);
        }

        let mut x = vec![0.0; n];
        self.r.full_x(&it.y, &mut x);
        let objective = self.r.p.objective(&x);
        let lambda: Vec<f64> = (0..m).map(|r| it.lambda[r] * self.r.row_scale[r] / self.r.obj_scale).collect();
        let mut z_lower = vec![0.0; n];
        let mut z_upper = vec![0.0; n];
        for (k, &i) in self.r.free.iter().enumerate() {
            z_lower[i] = it.zl[k] / self.r.obj_scale;
            z_upper[i] = it.zu[k] / self.r.obj_scale;
        }
        info!(
            "interior point: {status} after {} iterations, objective {objective:.10e}, {nf} free variables, {m} constraints",
            log.len()
        );
        SolverSolution {
            status,
            x,
            lambda,
            z_lower,
            z_upper,
            objective,
            residuals,
            iterations: log.len(),
            log,
            message,
            seconds: 0.0,
        }
    }

    fn primal_step_limit(&self, y: &[f64], dy: &[f64], tau: f64) -> f64 {
        let r = &self.r;
        fraction_to_boundary(
            (0..y.len())
                .filter(|&i| self.has_l[i])
                .map(|i| (y[i] - r.lb[i], dy[i]))
                .chain((0..y.len()).filter(|&i| self.has_u[i]).map(|i| (r.ub[i] - y[i], -dy[i]))),
            tau,
        )
    }

    /// Solves with the current factorization and refines against the
    /// system without the constraint-block regularization.
    fn solve_refined(&self, ldl: &mut SparseLdl, rhs: &[f64], ny: usize, delta_c: f64) -> Vec<f64> {
        let dim = rhs.len();
        let mut sol = rhs.to_vec();
        ldl.solve(&mut sol);
        let resid_of = |ldl: &SparseLdl, sol: &[f64]| {
            let mut k = vec![0.0; dim];
            ldl.multiply(sol, &mut k);
            for i in ny..dim {
                k[i] += delta_c * sol[i];
            }
            (0..dim).map(|i| rhs[i] - k[i]).collect::<Vec<f64>>()
        };
        let mut res = resid_of(ldl, &sol);
        let mut rn = norm_inf(&res);
        let target = 1e-12 * norm_inf(rhs).max(1e-300);
        for _ in 0..5 {
            if rn <= target {
                break;
            }
            let mut corr = res.clone();
            ldl.solve(&mut corr);
            let cand: Vec<f64> = sol.iter().zip(&corr).map(|(a, b)| a + b).collect();
            let cres = resid_of(ldl, &cand);
            let cn = norm_inf(&cres);
            if !(cn < 0.5 * rn) {
                break;
            }
            sol = cand;
            res = cres;
            rn = cn;
        }
        sol
    }
}

fn sigma_l(it: &Iterate, r: &Reformulated, i: usize) -> f64 {
    it.zl[i] / (it.y[i] - r.lb[i])
}

fn sigma_u(it: &Iterate, r: &Reformulated, i: usize) -> f64 {
    it.zu[i] / (r.ub[i] - it.y[i])
}

#[cfg(test)]
mod tests;
