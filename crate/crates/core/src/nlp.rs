//! Sparse nonlinear programs.
//!
//! [`Nlp`] is the interface consumed by the interior-point solver:
//! `min f(x)` subject to `cl ≤ c(x) ≤ cu` and `xl ≤ x ≤ xu`, with rows where
//! `cl == cu` treated as equalities. [`ExprProblem`] implements it for
//! problems whose objective and constraints are sums of a few elementary
//! terms, which covers every equation of the transcribed control problem.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::physics::signed_square;

pub trait Nlp {
    fn n(&self) -> usize;
    fn m(&self) -> usize;
    fn var_bounds(&self) -> (&[f64], &[f64]);
    fn con_bounds(&self) -> (&[f64], &[f64]);
    fn initial_point(&self) -> Vec<f64>;
    fn objective(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], g: &mut [f64]);
    fn constraints(&self, x: &[f64], c: &mut [f64]);
    /// Row and column of every Jacobian nonzero.
    fn jacobian_structure(&self) -> (&[usize], &[usize]);
    fn jacobian_values(&self, x: &[f64], values: &mut [f64]);
    /// Lower-triangle (row ≥ column) nonzeros of the Lagrangian Hessian.
    fn hessian_structure(&self) -> (&[usize], &[usize]);
    /// Values of `σ∇²f + Σ λ_k ∇²c_k` in structure order.
    fn hessian_values(&self, x: &[f64], obj_factor: f64, lambda: &[f64], values: &mut [f64]);

    fn variable_name(&self, i: usize) -> String {
        format!("x[{i}]")
    }

    fn constraint_name(&self, j: usize) -> String {
        format!("c[{j}]")
    }
}

/// One elementary term; indices refer to variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Term {
    /// `c·x`
    Lin(usize, f64),
    /// `c·x²`
    Sq(usize, f64),
    /// `c·x|x|` (optionally smoothed)
    SignedSq(usize, f64),
    /// `c·x·y`
    Bil(usize, usize, f64),
    /// `c·x^p`, for positive `x`
    Pow(usize, f64, f64),
}

/// Sum of terms plus a constant.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Expr {
    pub terms: Vec<Term>,
    pub constant: f64,
}

impl Expr {
    pub fn new() -> Self {
        Expr::default()
    }

    pub fn lin(mut self, i: usize, c: f64) -> Self {
        self.terms.push(Term::Lin(i, c));
        self
    }

    pub fn sq(mut self, i: usize, c: f64) -> Self {
        self.terms.push(Term::Sq(i, c));
        self
    }

    pub fn signed_sq(mut self, i: usize, c: f64) -> Self {
        self.terms.push(Term::SignedSq(i, c));
        self
    }

    pub fn bil(mut self, i: usize, j: usize, c: f64) -> Self {
        self.terms.push(if i == j { Term::Sq(i, c) } else { Term::Bil(i, j, c) });
        self
    }

    pub fn pow(mut self, i: usize, c: f64, p: f64) -> Self {
        self.terms.push(Term::Pow(i, c, p));
        self
    }

    pub fn constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn push(&mut self, t: Term) {
        self.terms.push(t);
    }

    pub fn eval(&self, x: &[f64], smoothing: Option<f64>) -> f64 {
        self.constant + self.terms.iter().map(|t| term_value(t, x, smoothing)).sum::<f64>()
    }
}

fn term_value(t: &Term, x: &[f64], smoothing: Option<f64>) -> f64 {
    match *t {
        Term::Lin(i, c) => c * x[i],
        Term::Sq(i, c) => c * x[i] * x[i],
        Term::SignedSq(i, c) => c * signed_square(x[i], smoothing).0,
        Term::Bil(i, j, c) => c * x[i] * x[j],
        Term::Pow(i, c, p) => c * x[i].powf(p),
    }
}

/// Incrementally assembled [`ExprProblem`].
#[derive(Debug, Clone, Default)]
pub struct ExprBuilder {
    lb: Vec<f64>,
    ub: Vec<f64>,
    x0: Vec<f64>,
    var_names: Vec<String>,
    rows: Vec<Expr>,
    row_lb: Vec<f64>,
    row_ub: Vec<f64>,
    row_names: Vec<String>,
    objective: Expr,
}

impl ExprBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable and returns its index.
    pub fn var(&mut self, name: impl Into<String>, lb: f64, ub: f64, x0: f64) -> usize {
        self.lb.push(lb);
        self.ub.push(ub);
        self.x0.push(x0);
        self.var_names.push(name.into());
        self.lb.len() - 1
    }

    pub fn n(&self) -> usize {
        self.lb.len()
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn set_bounds(&mut self, i: usize, lb: f64, ub: f64) {
        self.lb[i] = lb;
        self.ub[i] = ub;
    }

    pub fn set_start(&mut self, i: usize, x0: f64) {
        self.x0[i] = x0;
    }

    pub fn bounds(&self, i: usize) -> (f64, f64) {
        (self.lb[i], self.ub[i])
    }

    /// `e(x) = 0`
    pub fn equality(&mut self, name: impl Into<String>, e: Expr) -> usize {
        self.row(name, e, 0.0, 0.0)
    }

    /// `lb ≤ e(x) ≤ ub`
    pub fn row(&mut self, name: impl Into<String>, e: Expr, lb: f64, ub: f64) -> usize {
        self.rows.push(e);
        self.row_lb.push(lb);
        self.row_ub.push(ub);
        self.row_names.push(name.into());
        self.rows.len() - 1
    }

    pub fn add_objective(&mut self, t: Term) {
        self.objective.push(t);
    }

    pub fn build(self, smoothing: Option<f64>) -> Result<ExprProblem> {
        let n = self.lb.len();
        for i in 0..n {
            if self.lb[i] > self.ub[i] {
                return Err(Error::InfeasibleBounds {
                    name: self.var_names[i].clone(),
                    lower: self.lb[i],
                    upper: self.ub[i],
                });
            }
        }
        for (r, name) in self.row_names.iter().enumerate() {
            if self.row_lb[r] > self.row_ub[r] {
                return Err(Error::InfeasibleBounds {
                    name: name.clone(),
                    lower: self.row_lb[r],
                    upper: self.row_ub[r],
                });
            }
        }

        let mut jac_rows = Vec::new();
        let mut jac_cols = Vec::new();
        let mut hess = HessianPattern::default();
        let mut row_ptr = Vec::with_capacity(self.rows.len() + 1);
        let mut terms = Vec::new();
        let mut constants = Vec::with_capacity(self.rows.len());
        let mut slots = Vec::new();
        row_ptr.push(0);
        let mut cols: HashMap<usize, usize> = HashMap::new();
        for (r, e) in self.rows.iter().enumerate() {
            cols.clear();
            let mut slot = |i: usize| {
                *cols.entry(i).or_insert_with(|| {
                    jac_rows.push(r);
                    jac_cols.push(i);
                    jac_rows.len() - 1
                })
            };
            for t in &e.terms {
                check_index(t, n)?;
                let (a, b) = match *t {
                    Term::Bil(i, j, _) => (slot(i), slot(j)),
                    Term::Lin(i, _) | Term::Sq(i, _) | Term::SignedSq(i, _) | Term::Pow(i, _, _) => {
                        (slot(i), usize::MAX)
                    }
                };
                slots.push(CompiledSlots { jac: [a, b], hess: hess.slot(t) });
                terms.push(*t);
            }
            constants.push(e.constant);
            row_ptr.push(terms.len());
        }
        let obj_slots = self
            .objective
            .terms
            .iter()
            .map(|t| {
                check_index(t, n)?;
                Ok(hess.slot(t))
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(ExprProblem {
            lb: self.lb,
            ub: self.ub,
            x0: self.x0,
            var_names: self.var_names,
            row_lb: self.row_lb,
            row_ub: self.row_ub,
            row_names: self.row_names,
            objective: self.objective,
            obj_hess: obj_slots,
            row_ptr,
            terms,
            slots,
            constants,
            jac_rows,
            jac_cols,
            hess_rows: hess.rows,
            hess_cols: hess.cols,
            smoothing,
        })
    }
}

fn check_index(t: &Term, n: usize) -> Result<()> {
    let ok = match *t {
        Term::Bil(i, j, _) => i < n && j < n,
        Term::Lin(i, _) | Term::Sq(i, _) | Term::SignedSq(i, _) | Term::Pow(i, _, _) => i < n,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("term {t:?} refers past {n} variables")))
    }
}

#[derive(Default)]
struct HessianPattern {
    rows: Vec<usize>,
    cols: Vec<usize>,
    map: HashMap<(usize, usize), usize>,
}

impl HessianPattern {
    fn entry(&mut self, i: usize, j: usize) -> usize {
        let key = (i.max(j), i.min(j));
        *self.map.entry(key).or_insert_with(|| {
            self.rows.push(key.0);
            self.cols.push(key.1);
            self.rows.len() - 1
        })
    }

    fn slot(&mut self, t: &Term) -> usize {
        match *t {
            Term::Lin(..) => usize::MAX,
            Term::Sq(i, _) | Term::SignedSq(i, _) | Term::Pow(i, _, _) => self.entry(i, i),
            Term::Bil(i, j, _) => self.entry(i, j),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct CompiledSlots {
    jac: [usize; 2],
    hess: usize,
}

/// A compiled expression program with fixed sparsity.
#[derive(Debug, Clone)]
pub struct ExprProblem {
    lb: Vec<f64>,
    ub: Vec<f64>,
    x0: Vec<f64>,
    var_names: Vec<String>,
    row_lb: Vec<f64>,
    row_ub: Vec<f64>,
    row_names: Vec<String>,
    objective: Expr,
    obj_hess: Vec<usize>,
    row_ptr: Vec<usize>,
    terms: Vec<Term>,
    slots: Vec<CompiledSlots>,
    constants: Vec<f64>,
    jac_rows: Vec<usize>,
    jac_cols: Vec<usize>,
    hess_rows: Vec<usize>,
    hess_cols: Vec<usize>,
    smoothing: Option<f64>,
}

impl ExprProblem {
    pub fn equality_count(&self) -> usize {
        self.row_lb.iter().zip(&self.row_ub).filter(|(l, u)| l == u).count()
    }

    pub fn inequality_count(&self) -> usize {
        self.row_lb.len() - self.equality_count()
    }

    pub fn objective_expr(&self) -> &Expr {
        &self.objective
    }

    /// Terms and constant of row `r`.
    pub fn row_terms(&self, r: usize) -> (&[Term], f64) {
        (&self.terms[self.row_ptr[r]..self.row_ptr[r + 1]], self.constants[r])
    }

    pub fn smoothing(&self) -> Option<f64> {
        self.smoothing
    }

    pub fn set_initial_point(&mut self, x0: Vec<f64>) {
        assert_eq!(x0.len(), self.x0.len());
        self.x0 = x0;
    }

    fn term_derivs(&self, t: &Term, x: &[f64]) -> ([f64; 2], f64) {
        match *t {
            Term::Lin(_, c) => ([c, 0.0], 0.0),
            Term::Sq(i, c) => ([2.0 * c * x[i], 0.0], 2.0 * c),
            Term::SignedSq(i, c) => {
                let (_, d1, d2) = signed_square(x[i], self.smoothing);
                ([c * d1, 0.0], c * d2)
            }
            Term::Bil(i, j, c) => ([c * x[j], c * x[i]], c),
            Term::Pow(i, c, p) => ([c * p * x[i].powf(p - 1.0), 0.0], c * p * (p - 1.0) * x[i].powf(p - 2.0)),
        }
    }
}

impl Nlp for ExprProblem {
    fn n(&self) -> usize {
        self.lb.len()
    }

    fn m(&self) -> usize {
        self.row_lb.len()
    }

    fn var_bounds(&self) -> (&[f64], &[f64]) {
        (&self.lb, &self.ub)
    }

    fn con_bounds(&self) -> (&[f64], &[f64]) {
        (&self.row_lb, &self.row_ub)
    }

    fn initial_point(&self) -> Vec<f64> {
        self.x0.clone()
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.objective.eval(x, self.smoothing)
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        g.fill(0.0);
        for t in &self.objective.terms {
            let (d, _) = self.term_derivs(t, x);
            match *t {
                Term::Bil(i, j, _) => {
                    g[i] += d[0];
                    g[j] += d[1];
                }
                Term::Lin(i, _) | Term::Sq(i, _) | Term::SignedSq(i, _) | Term::Pow(i, _, _) => g[i] += d[0],
            }
        }
    }

    fn constraints(&self, x: &[f64], c: &mut [f64]) {
        for (r, out) in c.iter_mut().enumerate() {
            let (terms, k) = self.row_terms(r);
            *out = k + terms.iter().map(|t| term_value(t, x, self.smoothing)).sum::<f64>();
        }
    }

    fn jacobian_structure(&self) -> (&[usize], &[usize]) {
        (&self.jac_rows, &self.jac_cols)
    }

    fn jacobian_values(&self, x: &[f64], values: &mut [f64]) {
        values.fill(0.0);
        for (t, s) in self.terms.iter().zip(&self.slots) {
            let (d, _) = self.term_derivs(t, x);
            values[s.jac[0]] += d[0];
            if s.jac[1] != usize::MAX {
                values[s.jac[1]] += d[1];
            }
        }
    }

    fn hessian_structure(&self) -> (&[usize], &[usize]) {
        (&self.hess_rows, &self.hess_cols)
    }

    fn hessian_values(&self, x: &[f64], obj_factor: f64, lambda: &[f64], values: &mut [f64]) {
        values.fill(0.0);
        if obj_factor != 0.0 {
            for (t, &s) in self.objective.terms.iter().zip(&self.obj_hess) {
                if s != usize::MAX {
                    values[s] += obj_factor * self.term_derivs(t, x).1;
                }
            }
        }
        for r in 0..self.row_lb.len() {
            let l = lambda[r];
            if l == 0.0 {
                continue;
            }
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let s = self.slots[k].hess;
                if s != usize::MAX {
                    values[s] += l * self.term_derivs(&self.terms[k], x).1;
                }
            }
        }
    }

    fn variable_name(&self, i: usize) -> String {
        self.var_names[i].clone()
    }

    fn constraint_name(&self, j: usize) -> String {
        self.row_names[j].clone()
    }
}

/// Central finite-difference checks of an [`Nlp`]'s derivatives, used by
/// tests and the acceptance suite. Returns the worst relative errors of
/// the Jacobian and of the Hessian (against differenced gradients of the
/// Lagrangian).
pub fn derivative_errors(p: &dyn Nlp, x: &[f64], obj_factor: f64, lambda: &[f64]) -> (f64, f64) {
    let (n, m) = (p.n(), p.m());
    let (jr, jc) = p.jacobian_structure();
    let mut jv = vec![0.0; jr.len()];
    p.jacobian_values(x, &mut jv);
    let mut jac = HashMap::new();
    for k in 0..jr.len() {
        *jac.entry((jr[k], jc[k])).or_insert(0.0) += jv[k];
    }
    let (hr, hc) = p.hessian_structure();
    let mut hv = vec![0.0; hr.len()];
    p.hessian_values(x, obj_factor, lambda, &mut hv);
    let mut hess = HashMap::new();
    for k in 0..hr.len() {
        *hess.entry((hr[k], hc[k])).or_insert(0.0) += hv[k];
    }

    let lagrangian_gradient = |x: &[f64]| {
        let mut g = vec![0.0; n];
        p.gradient(x, &mut g);
        g.iter_mut().for_each(|v| *v *= obj_factor);
        let (jr, jc) = p.jacobian_structure();
        let mut jv = vec![0.0; jr.len()];
        p.jacobian_values(x, &mut jv);
        for k in 0..jr.len() {
            g[jc[k]] += lambda[jr[k]] * jv[k];
        }
        g
    };

    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
    let (mut worst_j, mut worst_h) = (0.0f64, 0.0f64);
    let mut xp = x.to_vec();
    let mut cp = vec![0.0; m];
    let mut cm = vec![0.0; m];
    for i in 0..n {
        let h = 1e-6 * x[i].abs().max(1.0);
        xp[i] = x[i] + h;
        p.constraints(&xp, &mut cp);
        let gp = lagrangian_gradient(&xp);
        xp[i] = x[i] - h;
        p.constraints(&xp, &mut cm);
        let gm = lagrangian_gradient(&xp);
        xp[i] = x[i];
        for r in 0..m {
            let fd = (cp[r] - cm[r]) / (2.0 * h);
            let an = jac.get(&(r, i)).copied().unwrap_or(0.0);
            worst_j = worst_j.max(rel(fd, an));
        }
        for r in 0..n {
            let fd = (gp[r] - gm[r]) / (2.0 * h);
            let an = hess.get(&(r.max(i), r.min(i))).copied().unwrap_or(0.0);
            worst_h = worst_h.max(rel(fd, an));
        }
    }
    (worst_j, worst_h)
}
