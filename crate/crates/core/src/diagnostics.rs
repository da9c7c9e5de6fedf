//! Quasi-derivatives and the boundary-value characterization of the optimum.
//!
//! With `y^<n> = ell_{n,j} y` and `y^<n+l> = ell_{n-l,j} y - (y^<n+l-1>)'`
//! the optimal trajectory has `y^<2n> = 0`, quasi-derivatives of orders
//! `n..2n-1` without jumps, and Kirchhoff balances at every internal vertex.
//! Everything here is computed by exact piecewise differentiation.

use crate::basis::Basis;
use crate::damping::{normalize, BasisImages, DampingSolution, OptimalityReport};
use crate::error::{DampingError, ExprError};
use crate::expressions::{apply_ell_all, ell_kj_from, energy, CoefficientSet, TreeFunction};
use crate::poly::{break_eps, PiecewisePoly, C64};
use crate::tree::Tree;

/// `y_j^<k>` for `k = n..=2n` on `[0, l_j]`.
#[derive(Debug, Clone)]
pub struct QuasiDerivativeSet {
    n: usize,
    /// `[j-1][k-n]`
    values: Vec<Vec<PiecewisePoly>>,
    /// `[j-1][k-n]`, `f_{k,j} = ell_{k,j} y` for `k = 0..=n`
    sources: Vec<Vec<PiecewisePoly>>,
}

/// A one-sided gap `q(t+) - q(t-)` at an interior node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub edge: usize,
    pub order: usize,
    pub t: f64,
    pub size: f64,
}

impl QuasiDerivativeSet {
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.values.len()
    }

    /// `y_j^<k>`, `n <= k <= 2n`.
    pub fn get(&self, j: usize, k: usize) -> &PiecewisePoly {
        assert!(k >= self.n && k <= 2 * self.n, "order {k} outside n..=2n");
        &self.values[j - 1][k - self.n]
    }

    /// `f_{k,j} = ell_{k,j} y`, `0 <= k <= n`.
    pub fn source(&self, j: usize, k: usize) -> &PiecewisePoly {
        &self.sources[j - 1][k]
    }

    /// Jumps of `y^<k>` at every interior break on every edge.
    pub fn jumps(&self, k: usize) -> Vec<Jump> {
        (1..=self.num_edges())
            .flat_map(|j| {
                self.get(j, k).jumps(0).into_iter().map(move |(t, d)| Jump {
                    edge: j,
                    order: k,
                    t,
                    size: d.norm(),
                })
            })
            .collect()
    }

    /// `g_{n+l,j}(t) = sum_{i=0}^{l} (-1)^i f_{n-l+i,j}^{(i)}(t)`, the unrolled
    /// recursion, evaluated pointwise (right limit).
    pub fn g_closed_form(&self, j: usize, k: usize, t: f64) -> C64 {
        let l = k - self.n;
        (0..=l)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                self.source(j, self.n - l + i).eval(t, i) * sign
            })
            .sum()
    }
}

pub fn quasi_derivatives(y: &TreeFunction, coeffs: &CoefficientSet) -> Result<QuasiDerivativeSet, ExprError> {
    let n = coeffs.order();
    let ells = apply_ell_all(y, coeffs)?;
    let m = coeffs.tree().num_edges();
    let mut values = Vec::with_capacity(m);
    let mut sources = Vec::with_capacity(m);
    for j in 1..=m {
        let f: Vec<PiecewisePoly> = (0..=n).map(|k| ell_kj_from(&ells, coeffs, k, j)).collect();
        let mut q = vec![f[n].clone()];
        for l in 1..=n {
            let next = f[n - l].sub(&q[l - 1].derivative());
            q.push(next);
        }
        values.push(q);
        sources.push(f);
    }
    Ok(QuasiDerivativeSet { n, values, sources })
}

/// Largest deviation between the recursive quasi-derivatives and the unrolled
/// sum, relative to the largest value seen, over `samples` points per piece.
pub fn g_recursion_defect(qd: &QuasiDerivativeSet, samples: usize) -> f64 {
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for j in 1..=qd.num_edges() {
        for k in qd.n..=2 * qd.n {
            let q = qd.get(j, k);
            let b = q.breaks();
            for w in b.windows(2) {
                for s in 0..samples {
                    let t = w[0] + (w[1] - w[0]) * (s as f64 + 0.5) / samples as f64;
                    let a = q.eval(t, 0);
                    let g = qd.g_closed_form(j, k, t);
                    worst = worst.max((a - g).norm());
                    scale = scale.max(a.norm());
                }
            }
        }
    }
    worst / scale.max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KirchhoffEntry {
    /// Internal edge whose right end is the vertex.
    pub vertex: usize,
    pub order: usize,
    pub residual: f64,
}

/// `|y_j^<k>(l_j-) - sum_{nu in V_j} y_nu^<k>(0+)|` for internal `j` and
/// `k = n..2n-1`.
pub fn kirchhoff_residual(qd: &QuasiDerivativeSet, tree: &Tree) -> Vec<KirchhoffEntry> {
    let mut out = Vec::new();
    for j in 1..=tree.num_internal() {
        for k in qd.n..2 * qd.n {
            let q = qd.get(j, k);
            let incoming = q.eval_left(q.end(), 0);
            let outgoing: C64 = tree.children(j).iter().map(|&nu| qd.get(nu, k).eval_right(0.0, 0)).sum();
            out.push(KirchhoffEntry {
                vertex: j,
                order: k,
                residual: (incoming - outgoing).norm(),
            });
        }
    }
    out
}

pub fn max_kirchhoff(entries: &[KirchhoffEntry]) -> f64 {
    entries.iter().map(|e| e.residual).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderJump {
    pub order: usize,
    pub max_jump: f64,
    /// Where the largest jump sits, if any break exists.
    pub at: Option<(usize, f64)>,
}

/// Largest interior jump of `y^<k>` for `k = n..2n-1`.
pub fn continuity_report(qd: &QuasiDerivativeSet) -> Vec<OrderJump> {
    (qd.n..2 * qd.n)
        .map(|k| summarize_jumps(k, &qd.jumps(k)))
        .collect()
}

fn summarize_jumps(order: usize, jumps: &[Jump]) -> OrderJump {
    let mut best = OrderJump {
        order,
        max_jump: 0.0,
        at: None,
    };
    for jp in jumps {
        if best.at.is_none() || jp.size > best.max_jump {
            best.max_jump = jp.size;
            best.at = Some((jp.edge, jp.t));
        }
    }
    best
}

/// Jumps of the classical derivative `y_j^{(k)}` at interior breaks of `[0, T_j]`.
pub fn derivative_jumps(y: &TreeFunction, k: usize) -> Vec<Jump> {
    (1..=y.tree().num_edges())
        .flat_map(|j| {
            y.edge(j).jumps(k).into_iter().map(move |(t, d)| Jump {
                edge: j,
                order: k,
                t,
                size: d.norm(),
            })
        })
        .collect()
}

/// Weak residual of `y^<2n> = 0`: `B(y, w_p)` computed through the
/// quasi-derivative form `sum_j sum_k \int_0^{l_j} ell_{k,j} y \overline{w_p^{(k)}}`,
/// normalized the same way as the optimality check.
pub fn weak_bvp_residual(
    y: &TreeFunction,
    basis: &Basis,
    coeffs: &CoefficientSet,
) -> Result<OptimalityReport, DampingError> {
    let images = BasisImages::compute(basis, coeffs)?;
    weak_bvp_with(y, basis, &images, coeffs)
}

pub(crate) fn weak_bvp_with(
    y: &TreeFunction,
    basis: &Basis,
    images: &BasisImages,
    coeffs: &CoefficientSet,
) -> Result<OptimalityReport, DampingError> {
    let tree = coeffs.tree();
    let n = coeffs.order();
    let ells = apply_ell_all(y, coeffs)?;
    let f: Vec<Vec<PiecewisePoly>> = (1..=tree.num_edges())
        .map(|j| (0..=n).map(|k| ell_kj_from(&ells, coeffs, k, j)).collect())
        .collect();
    let variation: Vec<C64> = (0..basis.dim())
        .map(|p| {
            let w = basis.function(p);
            let mut acc = C64::new(0.0, 0.0);
            for j in basis.support_edges(p) {
                let active = tree.active_length(j, coeffs.tau());
                let mut wk = w.edge(j).restrict(0.0, active);
                for fk in &f[j - 1] {
                    acc += fk.inner(&wk);
                    wk = wk.derivative();
                }
            }
            acc
        })
        .collect();
    Ok(normalize(&variation, images, energy(y, coeffs)?))
}

/// A jump that persists under refinement while dominating every other jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessLoss {
    pub edge: usize,
    pub t: f64,
    pub order: usize,
    /// Jump at the two finest levels.
    pub coarse: f64,
    pub fine: f64,
    /// Largest other jump of the same order at the finest level.
    pub others: f64,
}

/// Looks at the jumps of one order across refinement levels (coarse to fine).
/// Reports a loss of smoothness when the largest jump at the finest level
/// changes by less than 10% from the previous level and exceeds ten times every
/// other jump of that order.
pub fn detect_smoothness_loss(levels: &[Vec<Jump>]) -> Option<SmoothnessLoss> {
    if levels.len() < 2 {
        return None;
    }
    let fine = &levels[levels.len() - 1];
    let coarse = &levels[levels.len() - 2];
    let top = fine
        .iter()
        .copied()
        .max_by(|a, b| a.size.partial_cmp(&b.size).unwrap())?;
    if top.size == 0.0 {
        return None;
    }
    let eps = break_eps(top.t, 0.0) * 10.0;
    let prev = coarse
        .iter()
        .find(|jp| jp.edge == top.edge && (jp.t - top.t).abs() <= eps)?;
    let others = fine
        .iter()
        .filter(|jp| !(jp.edge == top.edge && (jp.t - top.t).abs() <= eps))
        .map(|jp| jp.size)
        .fold(0.0, f64::max);
    let stable = (top.size - prev.size).abs() < 0.1 * prev.size.max(top.size);
    if stable && top.size >= 10.0 * others {
        Some(SmoothnessLoss {
            edge: top.edge,
            t: top.t,
            order: top.order,
            coarse: prev.size,
            fine: top.size,
            others,
        })
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsSummary {
    pub optimality: OptimalityReport,
    pub weak_bvp: OptimalityReport,
    pub kirchhoff: Vec<KirchhoffEntry>,
    pub continuity: Vec<OrderJump>,
    pub g_recursion_defect: f64,
}

pub fn summarize(sol: &DampingSolution, coeffs: &CoefficientSet) -> Result<DiagnosticsSummary, DampingError> {
    let variation = crate::damping::first_variation(&sol.y, &sol.images, coeffs)?;
    let optimality = normalize(&variation, &sol.images, sol.energy);
    let weak_bvp = weak_bvp_with(&sol.y, &sol.basis, &sol.images, coeffs)?;
    let qd = quasi_derivatives(&sol.y, coeffs)?;
    Ok(DiagnosticsSummary {
        optimality,
        weak_bvp,
        kirchhoff: kirchhoff_residual(&qd, coeffs.tree()),
        continuity: continuity_report(&qd),
        g_recursion_defect: g_recursion_defect(&qd, 3),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn re(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    #[test]
    fn zero_function_has_zero_quasi_derivatives() {
        let tree = Arc::new(Tree::star(&[2.0, 1.5, 1.8]).unwrap());
        let coeffs = CoefficientSet::constant(tree.clone(), 0.5, &[re(0.1), re(0.2), re(1.0)], &[re(0.3), re(0.4), re(0.2)])
            .unwrap();
        let qd = quasi_derivatives(&TreeFunction::zero(tree.clone(), 2, 0.5), &coeffs).unwrap();
        for j in 1..=3 {
            for k in 2..=4 {
                assert!(qd.get(j, k).is_zero());
            }
        }
        assert!(continuity_report(&qd).iter().all(|o| o.max_jump == 0.0));
        assert!(kirchhoff_residual(&qd, &tree).iter().all(|e| e.residual == 0.0));
    }

    #[test]
    fn interval_has_no_kirchhoff_entries() {
        let tree = Arc::new(Tree::interval(3.0).unwrap());
        let coeffs = CoefficientSet::constant(tree.clone(), 1.0, &[re(0.0), re(1.0)], &[re(0.0), re(0.0)]).unwrap();
        let qd = quasi_derivatives(&TreeFunction::zero(tree.clone(), 1, 1.0), &coeffs).unwrap();
        assert!(kirchhoff_residual(&qd, &tree).is_empty());
    }

    #[test]
    fn detector_needs_stable_dominant_jump() {
        let j = |t: f64, size: f64| Jump {
            edge: 1,
            order: 3,
            t,
            size,
        };
        let coarse = vec![j(0.5, 1.0), j(1.0, 0.05)];
        let fine = vec![j(0.5, 0.97), j(1.0, 0.02), j(0.75, 0.01)];
        let hit = detect_smoothness_loss(&[coarse.clone(), fine]).unwrap();
        assert_eq!(hit.t, 0.5);
        assert!((hit.others - 0.02).abs() < 1e-15);
        let decaying = vec![j(0.5, 0.5), j(1.0, 0.02)];
        assert!(detect_smoothness_loss(&[coarse.clone(), decaying]).is_none());
        let crowded = vec![j(0.5, 0.97), j(1.0, 0.2)];
        assert!(detect_smoothness_loss(&[coarse, crowded]).is_none());
    }
}
