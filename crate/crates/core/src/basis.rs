//! Conforming Hermite basis of the constrained trajectory space and the
//! history lift.
//!
//! The constrained space holds tuples with zero history, derivatives
//! `0..n-1` continuous through every internal vertex, and vanishing on the
//! terminal window `[T_j - tau, T_j]` of every boundary edge. All three are
//! imposed strongly through the degree-of-freedom table.

use std::sync::Arc;

use crate::error::MeshError;
use crate::expressions::TreeFunction;
use crate::hermite::ReferenceElement;
use crate::mesh::DelayMesh;
use crate::poly::{break_eps, merge_breaks, PiecewisePoly, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofKind {
    /// `k`-th derivative at node `node` of edge `edge` (the representative copy
    /// for vertex nodes is the parent's end node).
    Nodal { edge: usize, node: usize, deriv: usize },
    Bubble { edge: usize, element: usize, index: usize },
}

#[derive(Debug, Clone)]
pub struct Basis {
    mesh: Arc<DelayMesh>,
    element: ReferenceElement,
    /// `elements[j-1][e][l]`: global dof of local shape `l`, `None` if constrained
    elements: Vec<Vec<Vec<Option<usize>>>>,
    dofs: Vec<DofKind>,
    /// `(edge, element, local)` triples touched by each dof
    support: Vec<Vec<(usize, usize, usize)>>,
}

impl Basis {
    /// Hermite basis of degree `2n - 1`.
    pub fn new(mesh: Arc<DelayMesh>, n: usize) -> Result<Self, MeshError> {
        Self::with_degree(mesh, n, 2 * n - 1)
    }

    /// `C^{n-1}` basis of the given element degree (`>= 2n - 1`); degrees above
    /// `2n - 1` add interior bubbles.
    pub fn with_degree(mesh: Arc<DelayMesh>, n: usize, degree: usize) -> Result<Self, MeshError> {
        if n == 0 || degree + 1 < 2 * n {
            return Err(MeshError::DegreeTooLow {
                degree,
                min: (2 * n).saturating_sub(1),
            });
        }
        let element = ReferenceElement::new(n, degree);
        let tree = mesh.tree().clone();
        let tau = mesh.tau();
        let m = tree.num_edges();

        let mut node_dofs: Vec<Vec<Vec<Option<usize>>>> =
            (1..=m).map(|j| vec![Vec::new(); mesh.nodes(j).len()]).collect();
        let mut dofs = Vec::new();
        for j in tree.topological_order() {
            let nodes = mesh.nodes(j);
            let len = tree.length(j);
            let eps = break_eps(0.0, len);
            for (i, &t) in nodes.iter().enumerate() {
                let entry = if i == 0 && j == 1 {
                    vec![None; n]
                } else if i == 0 {
                    let p = tree.parent(j);
                    node_dofs[p - 1].last().unwrap().clone()
                } else if tree.is_boundary(j) && t >= len - tau - eps {
                    vec![None; n]
                } else {
                    (0..n)
                        .map(|deriv| {
                            dofs.push(DofKind::Nodal {
                                edge: j,
                                node: i,
                                deriv,
                            });
                            Some(dofs.len() - 1)
                        })
                        .collect()
                };
                node_dofs[j - 1][i] = entry;
            }
        }

        let bubbles = element.num_bubbles();
        let mut elements = Vec::with_capacity(m);
        for j in 1..=m {
            let nodes = mesh.nodes(j);
            let len = tree.length(j);
            let eps = break_eps(0.0, len);
            let mut per_edge = Vec::with_capacity(nodes.len() - 1);
            for e in 0..nodes.len() - 1 {
                let mut local: Vec<Option<usize>> = Vec::with_capacity(element.num_local());
                local.extend(node_dofs[j - 1][e].iter().copied());
                local.extend(node_dofs[j - 1][e + 1].iter().copied());
                let frozen = tree.is_boundary(j) && nodes[e] >= len - tau - eps;
                for index in 0..bubbles {
                    if frozen {
                        local.push(None);
                    } else {
                        dofs.push(DofKind::Bubble {
                            edge: j,
                            element: e,
                            index,
                        });
                        local.push(Some(dofs.len() - 1));
                    }
                }
                per_edge.push(local);
            }
            elements.push(per_edge);
        }

        let mut support = vec![Vec::new(); dofs.len()];
        for (jdx, per_edge) in elements.iter().enumerate() {
            for (e, local) in per_edge.iter().enumerate() {
                for (l, dof) in local.iter().enumerate() {
                    if let Some(p) = dof {
                        support[*p].push((jdx + 1, e, l));
                    }
                }
            }
        }
        Ok(Self {
            mesh,
            element,
            elements,
            dofs,
            support,
        })
    }

    pub fn mesh(&self) -> &Arc<DelayMesh> {
        &self.mesh
    }

    pub fn order(&self) -> usize {
        self.element.order()
    }

    pub fn degree(&self) -> usize {
        self.element.degree()
    }

    pub fn dim(&self) -> usize {
        self.dofs.len()
    }

    pub fn dof(&self, p: usize) -> DofKind {
        self.dofs[p]
    }

    pub fn element(&self) -> &ReferenceElement {
        &self.element
    }

    /// Edges on which basis function `p` is nonzero.
    pub fn support_edges(&self, p: usize) -> Vec<usize> {
        let mut edges: Vec<usize> = self.support[p].iter().map(|s| s.0).collect();
        edges.dedup();
        edges
    }

    fn zero_function(&self) -> TreeFunction {
        let tree = self.mesh.tree().clone();
        TreeFunction::zero(tree, self.order(), self.mesh.tau())
    }

    fn edge_from_elements(&self, j: usize, coeffs: Vec<Vec<C64>>) -> PiecewisePoly {
        PiecewisePoly::from_parts_unchecked(self.mesh.nodes(j).to_vec(), coeffs)
    }

    /// Basis function `p` as a tree function (zero history).
    pub fn function(&self, p: usize) -> TreeFunction {
        let mut x = vec![ZERO; self.dim()];
        x[p] = C64::new(1.0, 0.0);
        self.combine_on(&x, Some(&self.support_edges(p)))
    }

    /// `sum_p x_p w_p`
    pub fn combine(&self, x: &[C64]) -> TreeFunction {
        self.combine_on(x, None)
    }

    fn combine_on(&self, x: &[C64], only: Option<&[usize]>) -> TreeFunction {
        assert_eq!(x.len(), self.dim());
        let nodes_of = |j: usize| self.mesh.nodes(j);
        let base = self.zero_function();
        base.map_edges(|j, zero| {
            if only.is_some_and(|o| !o.contains(&j)) {
                return zero.clone();
            }
            let nodes = nodes_of(j);
            let pieces = self.elements[j - 1]
                .iter()
                .enumerate()
                .map(|(e, local)| {
                    let h = nodes[e + 1] - nodes[e];
                    let mut acc = vec![ZERO; self.degree() + 1];
                    for (l, dof) in local.iter().enumerate() {
                        if let Some(p) = dof {
                            if x[*p] != ZERO {
                                for (a, c) in acc.iter_mut().zip(self.element.physical(l, h)) {
                                    *a += c * x[*p];
                                }
                            }
                        }
                    }
                    acc
                })
                .collect();
            self.edge_from_elements(j, pieces)
        })
    }

    /// Hermite shape for derivative `deriv` at `node` of edge `j` alone, ignoring
    /// constraints and vertex identification. Used to probe the membership check.
    pub fn nodal_shape(&self, j: usize, node: usize, deriv: usize) -> TreeFunction {
        let n = self.order();
        let nodes = self.mesh.nodes(j).to_vec();
        self.zero_function().map_edges(|edge, zero| {
            if edge != j {
                return zero.clone();
            }
            let pieces = (0..nodes.len() - 1)
                .map(|e| {
                    let h = nodes[e + 1] - nodes[e];
                    if e == node {
                        self.element.physical(deriv, h)
                    } else if e + 1 == node {
                        self.element.physical(n + deriv, h)
                    } else {
                        vec![ZERO]
                    }
                })
                .collect();
            PiecewisePoly::from_parts_unchecked(nodes.clone(), pieces)
        })
    }
}

/// The lift `Phi = [Phi_1, 0, ..., 0]` carrying the history `phi` and its initial
/// derivatives, with `Phi_1` a degree-`(2n-1)` Hermite polynomial on `[0, T_1 - tau]`
/// and zero afterwards.
pub fn lift_phi(mesh: &DelayMesh, n: usize, phi: &PiecewisePoly) -> Result<TreeFunction, MeshError> {
    let tau = mesh.tau();
    let eps = break_eps(-tau, 0.0);
    if (phi.start() + tau).abs() > eps || phi.end().abs() > eps {
        return Err(MeshError::HistoryDomain {
            a: phi.start(),
            b: phi.end(),
            tau,
        });
    }
    let tree = mesh.tree().clone();
    let len = tree.length(1);
    let active = len - tau;
    let element = ReferenceElement::new(n, 2 * n - 1);
    let mut lifted = vec![ZERO; 2 * n];
    for k in 0..n {
        let data = phi.eval_left(0.0, k);
        for (a, c) in lifted.iter_mut().zip(element.left_hermite(k, active)) {
            *a += c * data;
        }
    }
    let first = PiecewisePoly::from_parts_unchecked(vec![0.0, active], vec![lifted])
        .concat(&PiecewisePoly::zero(active, len));
    let grid = merge_breaks(mesh.nodes(1), first.breaks(), break_eps(0.0, len));
    let first = first.refine(&grid);
    let zero = TreeFunction::zero(tree, n, tau);
    Ok(zero
        .map_edges(|j, e| if j == 1 { first.clone() } else { e.clone() })
        .with_history(phi.clone()))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    History { sup: f64 },
    RootStart { deriv: usize, value: f64 },
    Vertex { edge: usize, deriv: usize, gap: f64 },
    Tail { edge: usize, sup: f64 },
    Smoothness { edge: usize, t: f64, deriv: usize, jump: f64 },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MembershipReport {
    pub violations: Vec<Violation>,
}

impl MembershipReport {
    pub fn is_member(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_tail_violation(&self) -> bool {
        self.violations.iter().any(|v| matches!(v, Violation::Tail { .. }))
    }
}

/// Checks every defining condition of the constrained space to `tol`.
pub fn is_in_w(y: &TreeFunction, tol: f64) -> MembershipReport {
    let tree = y.tree();
    let tau = y.tau();
    let n = y.order();
    let mut violations = Vec::new();

    let sup = y.history().sup_bound();
    if sup > tol {
        violations.push(Violation::History { sup });
    }
    for k in 0..n {
        let value = y.edge(1).eval_right(0.0, k).norm();
        if value > tol {
            violations.push(Violation::RootStart { deriv: k, value });
        }
    }
    for j in 1..=tree.num_edges() {
        let f = y.edge(j);
        let len = tree.length(j);
        for k in 0..n {
            for (t, jump) in f.jumps(k) {
                if jump.norm() > tol {
                    violations.push(Violation::Smoothness {
                        edge: j,
                        t,
                        deriv: k,
                        jump: jump.norm(),
                    });
                }
            }
        }
        let p = tree.parent(j);
        if p != 0 {
            let lp = tree.length(p);
            for k in 0..n {
                let gap = (f.eval_right(0.0, k) - y.edge(p).eval_left(lp, k)).norm();
                if gap > tol {
                    violations.push(Violation::Vertex { edge: j, deriv: k, gap });
                }
            }
        }
        if tree.is_boundary(j) {
            let sup = f.sup_bound_on(len - tau, len);
            if sup > tol {
                violations.push(Violation::Tail { edge: j, sup });
            }
        }
    }
    MembershipReport { violations }
}
