//! Independent oracles for the energy, the Gram system and the Cauchy solver.

mod common;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use treedamp_core::*;

use common::*;

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, cells: usize) -> f64 {
    let h = (b - a) / cells as f64;
    let mut acc = f(a) + f(b);
    for i in 1..cells {
        acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

#[test]
fn energy_matches_simpson_on_closed_form() {
    let (a, b, c) = (0.5, 1.0, 0.25);
    let coeffs = neutral_interval(3.0, 1.0, a, b, c);
    let tree = coeffs.tree().clone();
    let y = |t: f64| 1.0 + t - 0.3 * t * t + 0.05 * t * t * t;
    let dy = |t: f64| 1.0 - 0.6 * t + 0.15 * t * t;
    let phi = |t: f64| 1.0 + 2.0 * t;
    let dphi = |_t: f64| 2.0;
    // the delayed argument switches from phi to y at t = 1; each side is integrated separately
    let on_history = |t: f64| dy(t) + a * dphi(t - 1.0) + b * y(t) + c * phi(t - 1.0);
    let on_trajectory = |t: f64| dy(t) + a * dy(t - 1.0) + b * y(t) + c * y(t - 1.0);

    let edge = PiecewisePoly::polynomial(0.0, 3.0, &[re(1.0), re(1.0), re(-0.3), re(0.05)]);
    let f = TreeFunction::new(tree, 1, 1.0, vec![edge], affine_history(1.0, 1.0, 2.0)).unwrap();
    let exact =
        simpson(|t| on_history(t).powi(2), 0.0, 1.0, 2000) + simpson(|t| on_trajectory(t).powi(2), 1.0, 3.0, 4000);
    let got = energy(&f, &coeffs).unwrap();
    assert!((got - exact).abs() <= 1e-10 * exact, "{got} vs {exact}");
}

/// Dense finite-difference minimization of `sum_cells H |ell y|^2` for the
/// first-order neutral equation on an interval, with `y = phi` on the history,
/// `y(0) = phi(0)`, and `y = 0` on `[T - tau, T]`.
fn fd_energy(a: f64, b: f64, c: f64, tau: f64, len: f64, phi: impl Fn(f64) -> f64, per_tau: usize) -> f64 {
    let h = tau / per_tau as f64;
    let total = ((len + tau) / h).round() as usize;
    let t = |i: usize| -tau + i as f64 * h;
    let zero_from = ((len - tau + tau) / h).round() as usize;
    let origin = per_tau;
    let unknown = |i: usize| (i > origin && i < zero_from).then(|| i - origin - 1);
    let nu = zero_from - origin - 1;
    let known = |i: usize| if i <= origin { phi(t(i)) } else { 0.0 };
    let cells = total - origin;
    let mut mat = DMatrix::<f64>::zeros(cells, nu);
    let mut rhs = DVector::<f64>::zeros(cells);
    for (row, i) in (origin..total).enumerate() {
        let terms = [
            (i + 1, 1.0 / h + b / 2.0),
            (i, -1.0 / h + b / 2.0),
            (i + 1 - per_tau, a / h + c / 2.0),
            (i - per_tau, -a / h + c / 2.0),
        ];
        for (idx, w) in terms {
            match unknown(idx) {
                Some(col) => mat[(row, col)] += w,
                None => rhs[row] -= w * known(idx),
            }
        }
    }
    let normal = mat.transpose() * &mat;
    let x = normal.cholesky().unwrap().solve(&(mat.transpose() * &rhs));
    let r = &mat * x - rhs;
    h * r.norm_squared()
}

#[test]
fn slope_problem_matches_fd_oracle() {
    let coeffs = neutral_interval(3.0, 1.0, 0.0, 0.0, 0.0);
    let oracle = fd_energy(0.0, 0.0, 0.0, 1.0, 3.0, |_| 1.0, 64);
    let sol = solve_damping(&coeffs, &affine_history(1.0, 1.0, 0.0), &SolverOptions::with_q(4)).unwrap();
    assert!((sol.energy - oracle).abs() <= 1e-6 * oracle, "{} vs {oracle}", sol.energy);
    assert!((sol.energy - 0.5).abs() < 1e-12);
}

#[test]
fn neutral_interval_approaches_fd_oracle() {
    let coeffs = neutral_interval(3.0, 1.0, 0.5, 1.0, 0.25);
    let phi = |t: f64| 1.0 + t;
    let oracle = fd_energy(0.5, 1.0, 0.25, 1.0, 3.0, phi, 128);
    let sol = solve_damping(&coeffs, &affine_history(1.0, 1.0, 1.0), &SolverOptions::with_q(16)).unwrap();
    assert!((sol.energy - oracle).abs() <= 1e-3 * oracle, "{} vs {oracle}", sol.energy);
}

#[test]
fn gram_matches_dense_form_on_branching_tree() {
    let coeffs = branching_tree();
    let mesh = Arc::new(DelayMesh::build(coeffs.tree().clone(), 0.5, 1).unwrap());
    let basis = Basis::new(mesh.clone(), 2).unwrap();
    let phi = affine_history(0.5, 1.0, -0.5);
    let lift = lift_phi(&mesh, 2, &phi).unwrap();
    let gram = assemble(&basis, &lift, &coeffs, None).unwrap();
    let scale = (0..gram.dim()).map(|p| gram.matrix[(p, p)].re).fold(0.0, f64::max);
    let funcs: Vec<_> = (0..basis.dim()).map(|p| basis.function(p)).collect();
    for p in (0..basis.dim()).step_by(3) {
        for r in 0..basis.dim() {
            let dense = bilinear_form(&funcs[r], &funcs[p], &coeffs).unwrap();
            assert!((dense - gram.matrix[(p, r)]).norm() <= 1e-9 * scale, "p={p} r={r}");
        }
        let load = -bilinear_form(&lift, &funcs[p], &coeffs).unwrap();
        assert!((load - gram.load[p]).norm() <= 1e-9 * scale);
    }
}

fn poly_eval(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * t + v)
}

fn poly_deriv(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(i, v)| v * i as f64).collect()
}

/// `p(t - s)` in monomials of `t`.
fn poly_shift(c: &[f64], s: f64) -> Vec<f64> {
    let mut out = vec![0.0; c.len()];
    for (i, &ci) in c.iter().enumerate() {
        let mut binom = 1.0;
        for k in 0..=i {
            out[k] += ci * binom * (-s).powi((i - k) as i32);
            binom = binom * (i - k) as f64 / (k + 1) as f64;
        }
    }
    out
}

#[test]
fn cauchy_converges_at_fourth_order() {
    // y'' + 0.3 y' + 0.2 y + 0.5 y'(t - 1) + 0.1 y(t - 1) = u with a global sextic y
    let p = [1.0, -0.5, 0.3, 0.2, -0.1, 0.02, 0.01];
    let tree = Arc::new(Tree::interval(3.0).unwrap());
    let coeffs = CoefficientSet::constant(tree.clone(), 1.0, &[re(0.2), re(0.3), re(1.0)], &[re(0.1), re(0.5), re(0.0)])
        .unwrap();
    let d1 = poly_deriv(&p);
    let d2 = poly_deriv(&d1);
    let lag = poly_shift(&p, 1.0);
    let lag1 = poly_deriv(&lag);
    let mut u = vec![0.0; p.len()];
    for (i, slot) in u.iter_mut().enumerate() {
        let g = |v: &[f64]| v.get(i).copied().unwrap_or(0.0);
        *slot = g(&d2) + 0.3 * g(&d1) + 0.2 * g(&p) + 0.5 * g(&lag1) + 0.1 * g(&lag);
    }
    let to_c = |v: &[f64]| v.iter().map(|&x| re(x)).collect::<Vec<_>>();
    let phi = PiecewisePoly::polynomial(-1.0, 0.0, &to_c(&p));
    let control = Control::new(&tree, vec![PiecewisePoly::polynomial(0.0, 3.0, &to_c(&u))]).unwrap();
    let mut errors = Vec::new();
    for q in [2, 4, 8, 16] {
        let mesh = DelayMesh::build(tree.clone(), 1.0, q).unwrap();
        let y = solve_cauchy(&coeffs, &phi, &control, &mesh).unwrap();
        let err = (0..=300)
            .map(|i| {
                let t = i as f64 * 0.01;
                (y.edge(1).eval(t, 0).re - poly_eval(&p, t)).abs()
            })
            .fold(0.0, f64::max);
        errors.push(err);
    }
    for w in errors.windows(2) {
        assert!(w[0] / w[1] > 12.0, "{errors:?}");
    }
}

#[test]
fn cauchy_reproduces_cubic_exactly() {
    let p = [0.5, 1.0, -0.4, 0.1];
    let coeffs = retarded_second_order(1.0);
    let tree = coeffs.tree().clone();
    let d1 = poly_deriv(&p);
    let d2 = poly_deriv(&d1);
    let lag1 = poly_deriv(&poly_shift(&p, 1.0));
    let u: Vec<C64> = (0..4)
        .map(|i| re(d2.get(i).copied().unwrap_or(0.0) + lag1.get(i).copied().unwrap_or(0.0)))
        .collect();
    let phi = PiecewisePoly::polynomial(-1.0, 0.0, &p.map(re));
    let control = Control::new(&tree, vec![PiecewisePoly::polynomial(0.0, 4.0, &u)]).unwrap();
    let mesh = DelayMesh::build(tree, 1.0, 3).unwrap();
    let y = solve_cauchy(&coeffs, &phi, &control, &mesh).unwrap();
    for i in 0..=40 {
        let t = i as f64 * 0.1;
        assert!((y.edge(1).eval(t, 0).re - poly_eval(&p, t)).abs() < 1e-11);
    }
    assert!(residual_ell(&y, &coeffs, &control).unwrap()[0] < 1e-10);
}
