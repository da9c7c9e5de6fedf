//! Forward simulation of the controlled system by the method of steps.
//!
//! Edges are swept root to leaves. On each element the delayed terms refer to
//! data that is already known (element widths never exceed `tau`), so every
//! step is a linear ODE solved by Gauss collocation in the element space.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{CauchyError, ExprError, MeshError};
use crate::expressions::{apply_ell, CoefficientSet, TreeFunction};
use crate::hermite::gauss_legendre;
use crate::mesh::DelayMesh;
use crate::poly::{break_eps, eval_local, PiecewisePoly, C64};
use crate::tree::Tree;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Per-edge control `u_j` on `[0, T_j]`.
#[derive(Debug, Clone)]
pub struct Control {
    edges: Vec<PiecewisePoly>,
}

impl Control {
    pub fn new(tree: &Tree, edges: Vec<PiecewisePoly>) -> Result<Self, CauchyError> {
        if edges.len() != tree.num_edges() {
            return Err(CauchyError::ControlShape {
                got: edges.len(),
                expected: tree.num_edges(),
            });
        }
        for (idx, f) in edges.iter().enumerate() {
            let len = tree.length(idx + 1);
            let eps = break_eps(0.0, len);
            if f.start().abs() > eps || (f.end() - len).abs() > eps {
                return Err(ExprError::Domain {
                    family: 'u',
                    k: 0,
                    edge: idx + 1,
                    a: f.start(),
                    b: f.end(),
                    length: len,
                }
                .into());
            }
        }
        Ok(Self { edges })
    }

    pub fn zero(tree: &Tree) -> Self {
        Self {
            edges: (1..=tree.num_edges())
                .map(|j| PiecewisePoly::zero(0.0, tree.length(j)))
                .collect(),
        }
    }

    pub fn edge(&self, j: usize) -> &PiecewisePoly {
        &self.edges[j - 1]
    }

    pub fn edges(&self) -> &[PiecewisePoly] {
        &self.edges
    }

    /// `||u||^2_{L_2}` summed over edges.
    pub fn norm_sq(&self) -> f64 {
        self.edges.iter().map(PiecewisePoly::norm_l2_sq).sum()
    }
}

/// Solves the Cauchy problem with elements of degree `2n - 1`.
pub fn solve_cauchy(
    coeffs: &CoefficientSet,
    phi: &PiecewisePoly,
    u: &Control,
    mesh: &DelayMesh,
) -> Result<TreeFunction, CauchyError> {
    solve_cauchy_with_degree(coeffs, phi, u, mesh, 2 * coeffs.order() - 1)
}

/// Solves the Cauchy problem with piecewise polynomials of the given degree
/// (`>= n`), collocating at `degree + 1 - n` Gauss points per element.
pub fn solve_cauchy_with_degree(
    coeffs: &CoefficientSet,
    phi: &PiecewisePoly,
    u: &Control,
    mesh: &DelayMesh,
    degree: usize,
) -> Result<TreeFunction, CauchyError> {
    let tree: Arc<Tree> = coeffs.tree().clone();
    let n = coeffs.order();
    let tau = coeffs.tau();
    check_inputs(coeffs, phi, u, mesh, degree)?;

    let unknowns = degree + 1 - n;
    let (gauss, _) = gauss_legendre(unknowns);
    let mut edges: Vec<Option<PiecewisePoly>> = vec![None; tree.num_edges()];

    for j in tree.topological_order() {
        let nodes = mesh.nodes(j);
        let parent = tree.parent(j);
        let (head, mut init): (PiecewisePoly, Vec<C64>) = if parent == 0 {
            (
                phi.shift(tau),
                (0..n).map(|k| phi.eval_left(0.0, k)).collect(),
            )
        } else {
            let p = edges[parent - 1].as_ref().expect("parents are solved first");
            let lp = tree.length(parent);
            (
                p.restrict(lp - tau, lp).shift(tau - lp),
                (0..n).map(|k| p.eval_left(lp, k)).collect(),
            )
        };

        let mut pieces: Vec<Vec<C64>> = Vec::with_capacity(nodes.len() - 1);
        for e in 0..nodes.len() - 1 {
            let (a, b) = (nodes[e], nodes[e + 1]);
            let h = b - a;
            let fixed: Vec<C64> = init
                .iter()
                .enumerate()
                .map(|(k, v)| *v / factorial(k))
                .collect();
            let mut mat = DMatrix::<C64>::zeros(unknowns, unknowns);
            let mut rhs = DVector::<C64>::zeros(unknowns);
            for (row, &sigma) in gauss.iter().enumerate() {
                let s = sigma * h;
                let t = a + s;
                let mut r = u.edge(j).eval(t, 0);
                for k in 0..=n {
                    let bk = coeffs.b(k, j);
                    let ck = coeffs.c(k, j);
                    let bt = if bk.is_zero() { ZERO } else { bk.eval(t, 0) };
                    if !ck.is_zero() {
                        let delayed = if t < tau {
                            head.eval(t, k)
                        } else {
                            let td = t - tau;
                            let idx = nodes[..=e].partition_point(|&x| x <= td).saturating_sub(1).min(e.saturating_sub(1));
                            eval_local(&pieces[idx], td - nodes[idx], k)
                        };
                        r -= ck.eval(t, 0) * delayed;
                    }
                    if bt == ZERO {
                        continue;
                    }
                    r -= bt * eval_local(&fixed, s, k);
                    for col in 0..unknowns {
                        let i = n + col;
                        if i < k {
                            continue;
                        }
                        let d = falling(i, k) * sigma.powi((i - k) as i32) / h.powi(k as i32);
                        mat[(row, col)] += bt * d;
                    }
                }
                rhs[row] = r;
            }
            let sol = mat
                .lu()
                .solve(&rhs)
                .filter(|x| x.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
                .ok_or(CauchyError::SingularStep { edge: j, t: a })?;
            let mut coeffs_s = fixed;
            coeffs_s.resize(degree + 1, ZERO);
            for col in 0..unknowns {
                let i = n + col;
                coeffs_s[i] = sol[col] / h.powi(i as i32);
            }
            init = (0..n).map(|k| eval_local(&coeffs_s, h, k)).collect();
            pieces.push(coeffs_s);
        }
        edges[j - 1] = Some(PiecewisePoly::from_parts_unchecked(nodes.to_vec(), pieces));
    }

    let edges = edges.into_iter().map(|e| e.expect("every edge solved")).collect();
    Ok(TreeFunction::new(tree, n, tau, edges, phi.clone())?)
}

fn check_inputs(
    coeffs: &CoefficientSet,
    phi: &PiecewisePoly,
    u: &Control,
    mesh: &DelayMesh,
    degree: usize,
) -> Result<(), CauchyError> {
    let tree = coeffs.tree();
    let n = coeffs.order();
    let tau = coeffs.tau();
    if degree < n {
        return Err(MeshError::DegreeTooLow { degree, min: n }.into());
    }
    if (mesh.tau() - tau).abs() > break_eps(0.0, tau) {
        return Err(CauchyError::DelayMismatch {
            mesh_tau: mesh.tau(),
            tau,
        });
    }
    let eps = break_eps(-tau, 0.0);
    if (phi.start() + tau).abs() > eps || phi.end().abs() > eps {
        return Err(MeshError::HistoryDomain {
            a: phi.start(),
            b: phi.end(),
            tau,
        }
        .into());
    }
    if u.edges().len() != tree.num_edges() {
        return Err(CauchyError::ControlShape {
            got: u.edges().len(),
            expected: tree.num_edges(),
        });
    }
    for j in 1..=tree.num_edges() {
        let len = tree.length(j);
        if mesh.tree().length(j) != len {
            return Err(CauchyError::MissingWavefront { edge: j, t: len });
        }
        let mut t = 0.0;
        while t <= len - tau + break_eps(0.0, len) {
            if mesh.node_index(j, t).is_none() {
                return Err(CauchyError::MissingWavefront { edge: j, t });
            }
            t += tau;
        }
        if mesh.node_index(j, len - tau).is_none() {
            return Err(CauchyError::MissingWavefront { edge: j, t: len - tau });
        }
        if mesh.nodes(j).windows(2).any(|w| w[1] - w[0] > tau * (1.0 + 1e-12)) {
            return Err(CauchyError::MissingWavefront { edge: j, t: len });
        }
    }
    Ok(())
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |p, v| p * v as f64)
}

fn falling(i: usize, k: usize) -> f64 {
    ((i - k + 1)..=i).fold(1.0, |p, v| p * v as f64)
}

/// `||ell_j y - u_j||_{L_2(0, T_j)}` for every edge.
pub fn residual_ell(y: &TreeFunction, coeffs: &CoefficientSet, u: &Control) -> Result<Vec<f64>, ExprError> {
    (1..=y.tree().num_edges())
        .map(|j| Ok(apply_ell(y, coeffs, j)?.sub(u.edge(j)).norm_l2()))
        .collect()
}
