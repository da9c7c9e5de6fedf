//! Coefficients, tree functions and the delay expressions built from them.
//!
//! `ell_j y = sum_k b_{k,j} y_j^{(k)}(t) + c_{k,j} y_j^{(k)}(t - tau)`, where the
//! delayed argument crosses internal vertices: for `t < tau` on edge `j` it reads
//! the parent edge at `t - tau + T_{k_j}`, and on the root edge it reads the
//! history segment on `[-tau, 0]`.

use std::sync::Arc;

use crate::error::ExprError;
use crate::poly::{break_eps, PiecewisePoly, C64};
use crate::tree::Tree;

/// Samples per coefficient piece when checking that `b_n` stays away from zero.
const LEADING_SAMPLES: usize = 64;
/// `min |b_n| <= LEADING_FLOOR * max(1, max |b_n|)` counts as vanishing.
pub const LEADING_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct CoefficientSet {
    tree: Arc<Tree>,
    n: usize,
    tau: f64,
    /// `b[k][j-1]`
    b: Vec<Vec<PiecewisePoly>>,
    c: Vec<Vec<PiecewisePoly>>,
}

impl CoefficientSet {
    /// Validated coefficient set; `b` and `c` are indexed `[k][j-1]` for `k = 0..=n`.
    pub fn new(
        tree: Arc<Tree>,
        n: usize,
        tau: f64,
        b: Vec<Vec<PiecewisePoly>>,
        c: Vec<Vec<PiecewisePoly>>,
    ) -> Result<Self, ExprError> {
        let set = Self::new_unchecked(tree, n, tau, b, c)?;
        set.check_leading()?;
        Ok(set)
    }

    /// Checks shapes and domains but not the lower bound on `|b_n|`.
    pub fn new_unchecked(
        tree: Arc<Tree>,
        n: usize,
        tau: f64,
        b: Vec<Vec<PiecewisePoly>>,
        c: Vec<Vec<PiecewisePoly>>,
    ) -> Result<Self, ExprError> {
        if n == 0 {
            return Err(ExprError::ZeroOrder);
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(ExprError::BadDelay(tau));
        }
        tree.check_delay(tau)?;
        let m = tree.num_edges();
        for (family, table) in [('b', &b), ('c', &c)] {
            if table.len() != n + 1 {
                return Err(ExprError::OrderMismatch {
                    got: table.len().saturating_sub(1),
                    needed: n,
                });
            }
            for (k, row) in table.iter().enumerate() {
                if row.len() != m {
                    return Err(ExprError::EdgeCount {
                        got: row.len(),
                        expected: m,
                    });
                }
                for (idx, f) in row.iter().enumerate() {
                    let j = idx + 1;
                    let len = tree.length(j);
                    let eps = break_eps(0.0, len);
                    if f.start().abs() > eps || (f.end() - len).abs() > eps {
                        return Err(ExprError::Domain {
                            family,
                            k,
                            edge: j,
                            a: f.start(),
                            b: f.end(),
                            length: len,
                        });
                    }
                    if f.pieces().iter().flatten().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                        return Err(ExprError::NonFinite { family, k, edge: j });
                    }
                }
            }
        }
        Ok(Self { tree, n, tau, b, c })
    }

    /// Constant coefficients shared by every edge: `b[k]`, `c[k]` for `k = 0..=n`.
    pub fn constant(tree: Arc<Tree>, tau: f64, b: &[C64], c: &[C64]) -> Result<Self, ExprError> {
        let n = b.len().checked_sub(1).ok_or(ExprError::ZeroOrder)?;
        if c.len() != b.len() {
            return Err(ExprError::OrderMismatch {
                got: c.len().saturating_sub(1),
                needed: n,
            });
        }
        let table = |vals: &[C64]| -> Vec<Vec<PiecewisePoly>> {
            vals.iter()
                .map(|&v| {
                    (1..=tree.num_edges())
                        .map(|j| PiecewisePoly::constant(0.0, tree.length(j), v))
                        .collect()
                })
                .collect()
        };
        let (bt, ct) = (table(b), table(c));
        Self::new(tree, n, tau, bt, ct)
    }

    pub fn tree(&self) -> &Arc<Tree> {
        &self.tree
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn b(&self, k: usize, j: usize) -> &PiecewisePoly {
        &self.b[k][j - 1]
    }

    pub fn c(&self, k: usize, j: usize) -> &PiecewisePoly {
        &self.c[k][j - 1]
    }

    /// Every coefficient breakpoint, as `(edge, t)`.
    pub fn breakpoints(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for table in [&self.b, &self.c] {
            for row in table {
                for (idx, f) in row.iter().enumerate() {
                    let inner = &f.breaks()[1..f.breaks().len() - 1];
                    out.extend(inner.iter().map(|&t| (idx + 1, t)));
                }
            }
        }
        out
    }

    /// Smallest `|b_n|` found on each edge, with its location.
    pub fn leading_minimum(&self, j: usize) -> (f64, f64, f64) {
        let f = self.b(self.n, j);
        let mut best = (f64::INFINITY, 0.0);
        let mut largest: f64 = 0.0;
        for w in f.breaks().windows(2) {
            let (a, b) = (w[0], w[1]);
            let h = (b - a) / LEADING_SAMPLES as f64;
            let mut local = (f64::INFINITY, a);
            for i in 0..=LEADING_SAMPLES {
                let t = a + h * i as f64;
                let v = f.eval_left(t, 0).norm().min(f.eval_right(t, 0).norm());
                largest = largest.max(v);
                if v < local.0 {
                    local = (v, t);
                }
            }
            // polish the sampled minimum: |b| is unimodal on a bracket this short
            let (mut lo, mut hi) = ((local.1 - h).max(a), (local.1 + h).min(b));
            for _ in 0..80 {
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                if f.eval(m1, 0).norm() < f.eval(m2, 0).norm() {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            let t = 0.5 * (lo + hi);
            let v = f.eval(t, 0).norm();
            if v < local.0 {
                local = (v, t);
            }
            if local.0 < best.0 {
                best = local;
            }
        }
        (best.0, best.1, largest)
    }

    fn check_leading(&self) -> Result<(), ExprError> {
        for j in 1..=self.tree.num_edges() {
            let (min_abs, at, largest) = self.leading_minimum(j);
            if !(min_abs > LEADING_FLOOR * largest.max(1.0)) {
                return Err(ExprError::LeadingCoefficientVanishes {
                    n: self.n,
                    edge: j,
                    min_abs,
                    at,
                });
            }
        }
        Ok(())
    }
}

/// A function on the tree extended by the history segment `[-tau, 0]` of the root edge.
#[derive(Debug, Clone)]
pub struct TreeFunction {
    tree: Arc<Tree>,
    n: usize,
    tau: f64,
    edges: Vec<PiecewisePoly>,
    history: PiecewisePoly,
}

impl TreeFunction {
    pub fn new(
        tree: Arc<Tree>,
        n: usize,
        tau: f64,
        edges: Vec<PiecewisePoly>,
        history: PiecewisePoly,
    ) -> Result<Self, ExprError> {
        if edges.len() != tree.num_edges() {
            return Err(ExprError::EdgeCount {
                got: edges.len(),
                expected: tree.num_edges(),
            });
        }
        for (idx, f) in edges.iter().enumerate() {
            let len = tree.length(idx + 1);
            let eps = break_eps(0.0, len);
            if f.start().abs() > eps || (f.end() - len).abs() > eps {
                return Err(ExprError::Domain {
                    family: 'y',
                    k: 0,
                    edge: idx + 1,
                    a: f.start(),
                    b: f.end(),
                    length: len,
                });
            }
        }
        let eps = break_eps(-tau, 0.0);
        if (history.start() + tau).abs() > eps || history.end().abs() > eps {
            return Err(ExprError::Domain {
                family: 'h',
                k: 0,
                edge: 1,
                a: history.start(),
                b: history.end(),
                length: tau,
            });
        }
        Ok(Self {
            tree,
            n,
            tau,
            edges,
            history,
        })
    }

    pub fn zero(tree: Arc<Tree>, n: usize, tau: f64) -> Self {
        let edges = (1..=tree.num_edges())
            .map(|j| PiecewisePoly::zero(0.0, tree.length(j)))
            .collect();
        Self {
            tree,
            n,
            tau,
            edges,
            history: PiecewisePoly::zero(-tau, 0.0),
        }
    }

    pub fn tree(&self) -> &Arc<Tree> {
        &self.tree
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn edge(&self, j: usize) -> &PiecewisePoly {
        &self.edges[j - 1]
    }

    pub fn edges(&self) -> &[PiecewisePoly] {
        &self.edges
    }

    pub fn history(&self) -> &PiecewisePoly {
        &self.history
    }

    pub fn with_history(mut self, history: PiecewisePoly) -> Self {
        self.history = history;
        self
    }

    pub fn map_edges(&self, f: impl Fn(usize, &PiecewisePoly) -> PiecewisePoly) -> Self {
        let edges = self
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| f(i + 1, e))
            .collect();
        Self {
            edges,
            ..self.clone()
        }
    }

    /// `self + factor * other`, history included.
    pub fn axpy(&self, factor: C64, other: &Self) -> Self {
        Self {
            tree: self.tree.clone(),
            n: self.n,
            tau: self.tau,
            edges: self
                .edges
                .iter()
                .zip(&other.edges)
                .map(|(a, b)| a.axpy(factor, b))
                .collect(),
            history: self.history.axpy(factor, &other.history),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpy(C64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            edges: self.edges.iter().map(|e| e.scale(factor)).collect(),
            history: self.history.scale(factor),
            ..self.clone()
        }
    }

    /// `y_j^{(k)}(t)` for `t` in `[-tau, T_j]`, following the delay across vertices.
    pub fn eval_extended(&self, j: usize, t: f64, k: usize) -> Result<C64, ExprError> {
        if k > self.n {
            return Err(ExprError::OrderTooHigh { k, n: self.n });
        }
        if j == 0 || j > self.tree.num_edges() {
            return Err(crate::error::TreeError::EdgeOutOfRange(j, self.tree.num_edges()).into());
        }
        let len = self.tree.length(j);
        let eps = break_eps(-self.tau, len);
        if t < -self.tau - eps || t > len + eps {
            return Err(ExprError::OutOfDomain {
                t,
                lo: -self.tau,
                hi: len,
            });
        }
        if t >= 0.0 {
            return Ok(self.edge(j).eval(t, k));
        }
        Ok(match self.tree.parent(j) {
            0 => self.history.eval(t, k),
            p => self.edge(p).eval(t + self.tree.length(p), k),
        })
    }

    /// The delayed copy `t -> y_j(t - tau)` on `[0, T_j]`, spliced from the parent
    /// edge (or the history) on `[0, tau]`.
    pub fn delayed_edge(&self, j: usize) -> PiecewisePoly {
        let tau = self.tau;
        let len = self.tree.length(j);
        let head = match self.tree.parent(j) {
            0 => self.history.shift(tau),
            p => {
                let lp = self.tree.length(p);
                self.edge(p).restrict(lp - tau, lp).shift(tau - lp)
            }
        };
        let tail = self.edge(j).restrict(0.0, len - tau).shift(tau);
        head.concat(&tail)
    }
}

fn check_order(y: &TreeFunction, coeffs: &CoefficientSet) -> Result<(), ExprError> {
    if y.order() < coeffs.order() {
        return Err(ExprError::OrderMismatch {
            got: y.order(),
            needed: coeffs.order(),
        });
    }
    Ok(())
}

/// `ell_j y` on `[0, T_j]`.
pub fn apply_ell(y: &TreeFunction, coeffs: &CoefficientSet, j: usize) -> Result<PiecewisePoly, ExprError> {
    check_order(y, coeffs)?;
    let len = y.tree().length(j);
    let mut acc = PiecewisePoly::zero(0.0, len);
    let mut own = y.edge(j).clone();
    let mut delayed = y.delayed_edge(j);
    for k in 0..=coeffs.order() {
        let (b, c) = (coeffs.b(k, j), coeffs.c(k, j));
        if !b.is_zero() && !own.is_zero() {
            acc = acc.add(&b.mul(&own));
        }
        if !c.is_zero() && !delayed.is_zero() {
            acc = acc.add(&c.mul(&delayed));
        }
        if k < coeffs.order() {
            own = own.derivative();
            delayed = delayed.derivative();
        }
    }
    Ok(acc)
}

/// `[ell_1 y, ..., ell_m y]`
pub fn apply_ell_all(y: &TreeFunction, coeffs: &CoefficientSet) -> Result<Vec<PiecewisePoly>, ExprError> {
    (1..=y.tree().num_edges())
        .map(|j| apply_ell(y, coeffs, j))
        .collect()
}

/// `ell_{k,j} y` on `[0, l_j]` from precomputed `ells[j-1] = ell_j y`.
pub fn ell_kj_from(ells: &[PiecewisePoly], coeffs: &CoefficientSet, k: usize, j: usize) -> PiecewisePoly {
    let tree = coeffs.tree();
    let tau = coeffs.tau();
    let len = tree.length(j);
    let active = tree.active_length(j, tau);
    let ell = &ells[j - 1];

    let local = coeffs.b(k, j).conj().mul(ell).restrict(0.0, active);

    let c = coeffs.c(k, j);
    let advanced = if c.is_zero() {
        PiecewisePoly::zero(0.0, len - tau)
    } else {
        c.conj().mul(ell).restrict(tau, len).shift(-tau)
    };
    let advanced = if tree.is_internal(j) {
        let mut spliced = PiecewisePoly::zero(len - tau, len);
        for &nu in tree.children(j) {
            let cn = coeffs.c(k, nu);
            if cn.is_zero() {
                continue;
            }
            let piece = cn.conj().mul(&ells[nu - 1]).restrict(0.0, tau).shift(len - tau);
            spliced = spliced.add(&piece);
        }
        advanced.concat(&spliced)
    } else {
        advanced
    };
    local.add(&advanced)
}

/// `ell_{k,j} y` on `[0, l_j]`.
pub fn apply_ell_kj(
    y: &TreeFunction,
    coeffs: &CoefficientSet,
    k: usize,
    j: usize,
) -> Result<PiecewisePoly, ExprError> {
    if k > coeffs.order() {
        return Err(ExprError::OrderTooHigh {
            k,
            n: coeffs.order(),
        });
    }
    let ells = apply_ell_all(y, coeffs)?;
    Ok(ell_kj_from(&ells, coeffs, k, j))
}

/// `J(y) = sum_j \int_0^{T_j} |ell_j y|^2`
pub fn energy(y: &TreeFunction, coeffs: &CoefficientSet) -> Result<f64, ExprError> {
    Ok(apply_ell_all(y, coeffs)?
        .iter()
        .map(PiecewisePoly::norm_l2_sq)
        .sum())
}

/// `B(y, w) = sum_j \int_0^{T_j} ell_j y \overline{ell_j w}`
pub fn bilinear_form(y: &TreeFunction, w: &TreeFunction, coeffs: &CoefficientSet) -> Result<C64, ExprError> {
    let ly = apply_ell_all(y, coeffs)?;
    let lw = apply_ell_all(w, coeffs)?;
    Ok(ly.iter().zip(&lw).map(|(a, b)| a.inner(b)).sum())
}

/// The same form written as `sum_j sum_k \int_0^{l_j} ell_{k,j} y \overline{w_j^{(k)}}`;
/// equal to [`bilinear_form`] whenever `w` lies in the constrained space.
pub fn bilinear_form_reindexed(
    y: &TreeFunction,
    w: &TreeFunction,
    coeffs: &CoefficientSet,
) -> Result<C64, ExprError> {
    let ells = apply_ell_all(y, coeffs)?;
    Ok(reindexed_with(&ells, w, coeffs))
}

pub(crate) fn reindexed_with(ells: &[PiecewisePoly], w: &TreeFunction, coeffs: &CoefficientSet) -> C64 {
    let tree = coeffs.tree();
    let mut total = C64::new(0.0, 0.0);
    for j in 1..=tree.num_edges() {
        let active = tree.active_length(j, coeffs.tau());
        let mut wk = w.edge(j).restrict(0.0, active);
        for k in 0..=coeffs.order() {
            if !wk.is_zero() {
                total += ell_kj_from(ells, coeffs, k, j).inner(&wk);
            }
            wk = wk.derivative();
        }
    }
    total
}
