use super::*;
use crate::nlp::{Expr, ExprBuilder, Term};
use approx::assert_relative_eq;

const INF: f64 = f64::INFINITY;

fn run(b: ExprBuilder) -> SolverSolution {
    let p = b.build(None).unwrap();
    solve(&p, &SolverOptions::default())
}

#[test]
fn bounded_quadratic_interior() {
    // (x − 2)², x ≥ 0
    let mut b = ExprBuilder::new();
    let x = b.var("x", 0.0, INF, 0.0);
    b.add_objective(Term::Sq(x, 1.0));
    b.add_objective(Term::Lin(x, -4.0));
    let s = run(b);
    assert_eq!(s.status, Status::Optimal);
    assert_relative_eq!(s.x[0], 2.0, epsilon = 1e-6);
}

#[test]
fn bounded_quadratic_active() {
    // (x + 1)², x ≥ 0: optimum on the bound, multiplier 2
    let mut b = ExprBuilder::new();
    let x = b.var("x", 0.0, INF, 3.0);
    b.add_objective(Term::Sq(x, 1.0));
    b.add_objective(Term::Lin(x, 2.0));
    let s = run(b);
    assert_eq!(s.status, Status::Optimal);
    assert!(s.x[0].abs() < 1e-6);
    assert_relative_eq!(s.z_lower[0], 2.0, epsilon = 1e-4);
}

#[test]
fn equality_qp() {
    // min x² + y² s.t. x + y = 1
    let mut b = ExprBuilder::new();
    let x = b.var("x", -INF, INF, 0.0);
    let y = b.var("y", -INF, INF, 0.0);
    b.add_objective(Term::Sq(x, 1.0));
    b.add_objective(Term::Sq(y, 1.0));
    b.equality("sum", Expr::new().lin(x, 1.0).lin(y, 1.0).constant(-1.0));
    let s = run(b);
    assert_eq!(s.status, Status::Optimal);
    assert_relative_eq!(s.x[0], 0.5, epsilon = 1e-7);
    assert_relative_eq!(s.x[1], 0.5, epsilon = 1e-7);
    // ∇f + λ∇c = 0 → λ = −1
    assert_relative_eq!(s.lambda[0], -1.0, epsilon = 1e-6);
}

#[test]
fn circle_linear_objective() {
    // min x + y s.t. x² + y² = 2 → (−1, −1)
    let mut b = ExprBuilder::new();
    let x = b.var("x", -INF, INF, 0.5);
    let y = b.var("y", -INF, INF, 0.2);
    b.add_objective(Term::Lin(x, 1.0));
    b.add_objective(Term::Lin(y, 1.0));
    b.equality("circle", Expr::new().sq(x, 1.0).sq(y, 1.0).constant(-2.0));
    let s = run(b);
    assert_eq!(s.status, Status::Optimal);
    assert_relative_eq!(s.x[0], -1.0, epsilon = 1e-6);
    assert_relative_eq!(s.x[1], -1.0, epsilon = 1e-6);
}

#[test]
fn inequality_disc() {
    // min −x − 2y s.t. x² + y² ≤ 5 → (1, 2)
    let mut b = ExprBuilder::new();
    let x = b.var("x", -INF, INF, 0.0);
    let y = b.var("y", -INF, INF, 0.0);
    b.add_objective(Term::Lin(x, -1.0));
    b.add_objective(Term::Lin(y, -2.0));
    b.row("disc", Expr::new().sq(x, 1.0).sq(y, 1.0), -INF, 5.0);
    let s = run(b);
    assert_eq!(s.status, Status::Optimal);
    assert_relative_eq!(s.x[0], 1.0, epsilon = 1e-6);
    assert_relative_eq!(s.x[1], 2.0, epsilon = 1e-6);
}

#[test]
fn linear_program() {
    // max 3x + 2y s.t. x + y ≤ 4, x + 3y ≤ 6, x ≤ 3, x,y ≥ 0 → (3, 1)
    let mut b = ExprBuilder::new();
    let x = b.var("x", 0.0, 3.0, 0.0);
    let y = b.var("y", 0.0, INF, 0.0);
    b.add_objective(Term::Lin(x, -3.0));
    b.add_objective(Term::Lin(y, -2.0));
    b.row("a", Expr::new().lin(x, 1.0).lin(y, 1.0), -INF, 4.0);
    b.row("b", Expr::new().lin(x, 1.0).lin(y, 3.0), -INF, 6.0);
    let s = run(b);
    assert_eq!(s.status, Status::Optimal);
    assert_relative_eq!(s.x[0], 3.0, epsilon = 1e-6);
    assert_relative_eq!(s.x[1], 1.0, epsilon = 1e-6);
    assert_relative_eq!(s.objective, -11.0, epsilon = 1e-6);
}

#[test]
fn rosenbrock_with_auxiliary() {
    // min (1 − x)² + 100 w², w = y − x²
    let mut b = ExprBuilder::new();
    let x = b.var("x", -INF, INF, -1.2);
    let y = b.var("y", -INF, INF, 1.0);
    let w = b.var("w", -INF, INF, 1.0 - 1.44);
    b.add_objective(Term::Sq(x, 1.0));
    b.add_objective(Term::Lin(x, -2.0));
    b.add_objective(Term::Sq(w, 100.0));
    b.equality("aux", Expr::new().lin(w, 1.0).lin(y, -1.0).sq(x, 1.0));
    let s = run(b);
    assert_eq!(s.status, Status::Optimal);
    assert_relative_eq!(s.x[0], 1.0, epsilon = 1e-5);
    assert_relative_eq!(s.x[1], 1.0, epsilon = 1e-5);
}

#[test]
fn fixed_variables_are_eliminated() {
    // min (x − y)² + y with x fixed at 3, y ≥ 0 → y = 2.5
    let mut b = ExprBuilder::new();
    let x = b.var("x", 3.0, 3.0, 3.0);
    let y = b.var("y", 0.0, INF, 1.0);
    b.add_objective(Term::Sq(x, 1.0));
    b.add_objective(Term::Bil(x, y, -2.0));
    b.add_objective(Term::Sq(y, 1.0));
    b.add_objective(Term::Lin(y, 1.0));
    let s = run(b);
    assert_eq!(s.status, Status::Optimal);
    assert_eq!(s.x[0], 3.0);
    assert_relative_eq!(s.x[1], 2.5, epsilon = 1e-6);
}

#[test]
fn nonconvex_needs_regularization() {
    // min −x² on [−1, 2] from 0.1 → x = 2
    let mut b = ExprBuilder::new();
    let x = b.var("x", -1.0, 2.0, 0.1);
    b.add_objective(Term::Sq(x, -1.0));
    let s = run(b);
    assert_eq!(s.status, Status::Optimal);
    assert_relative_eq!(s.x[0], 2.0, epsilon = 1e-6);
    assert!(s.log.iter().any(|r| r.delta_w > 0.0));
}

#[test]
fn two_sided_range_row() {
    // min (x − 5)² s.t. 1 ≤ x + 0 ≤ 3 as a row → 3
    let mut b = ExprBuilder::new();
    let x = b.var("x", -INF, INF, 0.0);
    b.add_objective(Term::Sq(x, 1.0));
    b.add_objective(Term::Lin(x, -10.0));
    b.row("range", Expr::new().lin(x, 1.0), 1.0, 3.0);
    let s = run(b);
    assert_eq!(s.status, Status::Optimal);
    assert_relative_eq!(s.x[0], 3.0, epsilon = 1e-6);
}

#[test]
fn power_term() {
    // min x^1.5 − 3x on x ≥ 0.01 → x = 4
    let mut b = ExprBuilder::new();
    let x = b.var("x", 0.01, INF, 1.0);
    b.add_objective(Term::Pow(x, 1.0, 1.5));
    b.add_objective(Term::Lin(x, -3.0));
    let s = run(b);
    assert_eq!(s.status, Status::Optimal);
    assert_relative_eq!(s.x[0], 4.0, epsilon = 1e-5);
}

#[test]
fn badly_scaled_objective() {
    // 1e6·(x − 1)², scaling keeps the solve well behaved
    let mut b = ExprBuilder::new();
    let x = b.var("x", -10.0, 10.0, 5.0);
    b.add_objective(Term::Sq(x, 1e6));
    b.add_objective(Term::Lin(x, -2e6));
    let s = run(b);
    assert_eq!(s.status, Status::Optimal);
    assert_relative_eq!(s.x[0], 1.0, epsilon = 1e-6);
}

#[test]
fn inconsistent_equalities_are_reported() {
    let mut b = ExprBuilder::new();
    let x = b.var("x", -INF, INF, 0.0);
    b.add_objective(Term::Sq(x, 1.0));
    b.equality("a", Expr::new().lin(x, 1.0).constant(-1.0));
    b.equality("b", Expr::new().lin(x, 1.0).constant(-2.0));
    let p = b.build(None).unwrap();
    let s = solve(&p, &SolverOptions { max_iter: 200, ..Default::default() });
    assert_ne!(s.status, Status::Optimal);
}

#[test]
fn iteration_limit() {
    let mut b = ExprBuilder::new();
    let x = b.var("x", -INF, INF, -1.2);
    let y = b.var("y", -INF, INF, 1.0);
    let w = b.var("w", -INF, INF, 0.0);
    b.add_objective(Term::Sq(x, 1.0));
    b.add_objective(Term::Lin(x, -2.0));
    b.add_objective(Term::Sq(w, 100.0));
    b.equality("aux", Expr::new().lin(w, 1.0).lin(y, -1.0).sq(x, 1.0));
    let p = b.build(None).unwrap();
    let s = solve(&p, &SolverOptions { max_iter: 2, ..Default::default() });
    assert_eq!(s.status, Status::MaxIter);
    assert_eq!(s.log.len(), 2);
}

#[test]
fn nonfinite_start_names_the_row() {
    // x^0.5 at a negative start gives NaN
    let mut b = ExprBuilder::new();
    let x = b.var("x", -INF, INF, -1.0);
    b.add_objective(Term::Sq(x, 1.0));
    b.equality("root", Expr::new().pow(x, 1.0, 0.5).constant(-1.0));
    let p = b.build(None).unwrap();
    let s = solve(&p, &SolverOptions::default());
    assert_eq!(s.status, Status::NumericalFailure);
    assert!(s.message.unwrap().contains("root"));
}

/// Hock–Schittkowski problem 71, hand coded.
struct Hs071 {
    lb: Vec<f64>,
    ub: Vec<f64>,
    cl: Vec<f64>,
    cu: Vec<f64>,
    jr: Vec<usize>,
    jc: Vec<usize>,
    hr: Vec<usize>,
    hc: Vec<usize>,
}

impl Hs071 {
    fn new() -> Self {
        let mut hr = Vec::new();
        let mut hc = Vec::new();
        for i in 0..4 {
            for j in 0..=i {
                hr.push(i);
                hc.push(j);
            }
        }
        Hs071 {
            lb: vec![1.0; 4],
            ub: vec![5.0; 4],
            cl: vec![25.0, 40.0],
            cu: vec![f64::INFINITY, 40.0],
            jr: vec![0, 0, 0, 0, 1, 1, 1, 1],
            jc: vec![0, 1, 2, 3, 0, 1, 2, 3],
            hr,
            hc,
        }
    }
}

impl Nlp for Hs071 {
    fn n(&self) -> usize {
        4
    }
    fn m(&self) -> usize {
        2
    }
    fn var_bounds(&self) -> (&[f64], &[f64]) {
        (&self.lb, &self.ub)
    }
    fn con_bounds(&self) -> (&[f64], &[f64]) {
        (&self.cl, &self.cu)
    }
    fn initial_point(&self) -> Vec<f64> {
        vec![1.0, 5.0, 5.0, 1.0]
    }
    fn objective(&self, x: &[f64]) -> f64 {
        x[0] * x[3] * (x[0] + x[1] + x[2]) + x[2]
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        g[0] = x[3] * (2.0 * x[0] + x[1] + x[2]);
        g[1] = x[0] * x[3];
        g[2] = x[0] * x[3] + 1.0;
        g[3] = x[0] * (x[0] + x[1] + x[2]);
    }
    fn constraints(&self, x: &[f64], c: &mut [f64]) {
        c[0] = x[0] * x[1] * x[2] * x[3];
        c[1] = x.iter().map(|v| v * v).sum();
    }
    fn jacobian_structure(&self) -> (&[usize], &[usize]) {
        (&self.jr, &self.jc)
    }
    fn jacobian_values(&self, x: &[f64], v: &mut [f64]) {
        v[0] = x[1] * x[2] * x[3];
        v[1] = x[0] * x[2] * x[3];
        v[2] = x[0] * x[1] * x[3];
        v[3] = x[0] * x[1] * x[2];
        for i in 0..4 {
            v[4 + i] = 2.0 * x[i];
        }
    }
    fn hessian_structure(&self) -> (&[usize], &[usize]) {
        (&self.hr, &self.hc)
    }
    fn hessian_values(&self, x: &[f64], s: f64, l: &[f64], v: &mut [f64]) {
        // lower triangle row by row: (0,0) (1,0) (1,1) (2,0) (2,1) (2,2) (3,0)..(3,3)
        let mut h = [[0.0; 4]; 4];
        h[0][0] = s * 2.0 * x[3];
        h[1][0] = s * x[3];
        h[2][0] = s * x[3];
        h[3][0] = s * (2.0 * x[0] + x[1] + x[2]);
        h[3][1] = s * x[0];
        h[3][2] = s * x[0];
        h[1][0] += l[0] * x[2] * x[3];
        h[2][0] += l[0] * x[1] * x[3];
        h[2][1] += l[0] * x[0] * x[3];
        h[3][0] += l[0] * x[1] * x[2];
        h[3][1] += l[0] * x[0] * x[2];
        h[3][2] += l[0] * x[0] * x[1];
        for (i, row) in h.iter_mut().enumerate() {
            row[i] += 2.0 * l[1];
        }
        let mut k = 0;
        for i in 0..4 {
            for j in 0..=i {
                v[k] = h[i][j];
                k += 1;
            }
        }
    }
}

#[test]
fn hs071() {
    let p = Hs071::new();
    let (jac, hess) = crate::nlp::derivative_errors(&p, &[1.3, 4.1, 3.7, 1.9], 0.7, &[0.3, -0.2]);
    assert!(jac < 1e-7 && hess < 1e-6);
    let s = solve(&p, &SolverOptions { tol: 1e-9, ..Default::default() });
    assert_eq!(s.status, Status::Optimal);
    let expect = [1.0, 4.742_999_64, 3.821_149_98, 1.379_408_29];
    for i in 0..4 {
        assert_relative_eq!(s.x[i], expect[i], epsilon = 1e-6);
    }
    assert_relative_eq!(s.objective, 17.014_017_29, epsilon = 1e-6);
}
