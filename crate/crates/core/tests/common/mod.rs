#![allow(dead_code)]

use std::sync::Arc;

use treedamp_core::{CoefficientSet, PiecewisePoly, Tree, C64};

pub fn re(v: f64) -> C64 {
    C64::new(v, 0.0)
}

pub fn line(a: f64, b: f64, c0: f64, c1: f64) -> PiecewisePoly {
    PiecewisePoly::polynomial(a, b, &[re(c0), re(c1)])
}

/// `y' + a y'(t - tau) + b y + c y(t - tau)` on `[0, len]`.
pub fn neutral_interval(len: f64, tau: f64, a: f64, b: f64, c: f64) -> CoefficientSet {
    let tree = Arc::new(Tree::interval(len).unwrap());
    CoefficientSet::constant(tree, tau, &[re(b), re(1.0)], &[re(c), re(a)]).unwrap()
}

/// Star with three edges of length 2, delay 1, smooth first-order coefficients.
pub fn smooth_star() -> CoefficientSet {
    let tree = Arc::new(Tree::star(&[2.0, 2.0, 2.0]).unwrap());
    let l = |c0, c1| line(0.0, 2.0, c0, c1);
    let b = vec![
        vec![l(0.3, 0.1), l(-0.2, 0.05), l(0.1, -0.1)],
        vec![l(1.0, 0.1), l(1.2, -0.1), l(0.9, 0.05)],
    ];
    let c = vec![
        vec![l(0.2, 0.0), l(0.1, 0.1), l(-0.3, 0.0)],
        vec![l(0.3, -0.05), l(0.2, 0.0), l(0.25, 0.1)],
    ];
    CoefficientSet::new(tree, 1, 1.0, b, c).unwrap()
}

/// `y'' + y'(t - tau)` on `[0, 4 tau]`.
pub fn retarded_second_order(tau: f64) -> CoefficientSet {
    let tree = Arc::new(Tree::interval(4.0 * tau).unwrap());
    CoefficientSet::constant(tree, tau, &[re(0.0), re(0.0), re(1.0)], &[re(0.0), re(1.0), re(0.0)]).unwrap()
}

/// Nine-edge tree with three internal edges, second order, complex coefficients.
pub fn branching_tree() -> CoefficientSet {
    let tree = Arc::new(
        Tree::from_edges(&[
            (1, 0, 1.5),
            (2, 1, 1.2),
            (3, 1, 1.4),
            (4, 2, 1.1),
            (5, 2, 1.3),
            (6, 3, 1.0),
            (7, 3, 1.2),
            (8, 3, 1.1),
            (9, 3, 1.25),
        ])
        .unwrap(),
    );
    CoefficientSet::constant(
        tree,
        0.5,
        &[re(0.2), C64::new(0.1, 0.3), C64::new(1.0, 0.1)],
        &[re(0.1), re(-0.2), C64::new(0.3, -0.1)],
    )
    .unwrap()
}

pub fn affine_history(tau: f64, c0: f64, c1: f64) -> PiecewisePoly {
    line(-tau, 0.0, c0, c1)
}

/// `(t + tau/2)_+^2 / 2` on `[-tau, 0]`.
pub fn kinked_history(tau: f64) -> PiecewisePoly {
    let h = tau / 2.0;
    PiecewisePoly::from_pieces(
        vec![-tau, -h, 0.0],
        vec![vec![re(0.0)], vec![re(0.0), re(0.0), re(0.5)]],
    )
    .unwrap()
}
