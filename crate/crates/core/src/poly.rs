//! Complex piecewise polynomials on a closed interval.
//!
//! Every piece stores monomial coefficients in the local variable
//! `s = t - left_break`, which keeps evaluation well conditioned on short
//! elements. Products and sums merge breakpoint sets, so the class is closed
//! under every operation the solver needs (shift, splice, multiply,
//! differentiate, integrate).

use num_complex::Complex64;

use crate::error::PolyError;

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Degree above which products start to lose digits in the local monomial basis.
pub const DEGREE_WARNING: usize = 40;

/// Relative tolerance used to identify breakpoints that differ only by rounding.
const BREAK_RTOL: f64 = 1e-11;

pub(crate) fn break_eps(a: f64, b: f64) -> f64 {
    BREAK_RTOL * a.abs().max(b.abs()).max(1.0)
}

/// Evaluates the `k`-th derivative of a local monomial polynomial at `s`.
pub fn eval_local(coeffs: &[C64], s: f64, k: usize) -> C64 {
    if coeffs.len() <= k {
        return ZERO;
    }
    let mut acc = ZERO;
    for i in (k..coeffs.len()).rev() {
        acc = acc * s + coeffs[i] * falling(i, k);
    }
    acc
}

/// `i! / (i-k)!`
fn falling(i: usize, k: usize) -> f64 {
    ((i - k + 1)..=i).fold(1.0, |p, v| p * v as f64)
}

/// Coefficients of `p(s + delta)` given those of `p(s)`.
pub fn taylor_shift(coeffs: &[C64], delta: f64) -> Vec<C64> {
    let mut c = coeffs.to_vec();
    if delta == 0.0 {
        return c;
    }
    let n = c.len();
    for i in 0..n {
        for j in (i..n.saturating_sub(1)).rev() {
            let hi = c[j + 1];
            c[j] += hi * delta;
        }
    }
    c
}

pub fn poly_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![ZERO; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == ZERO {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn poly_derivative(c: &[C64]) -> Vec<C64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(i, &v)| v * i as f64)
        .collect()
}

/// `\int_0^h p(s) \overline{q(s)} ds`
pub fn local_inner(p: &[C64], q: &[C64], h: f64) -> C64 {
    let mut acc = ZERO;
    for (i, &x) in p.iter().enumerate() {
        if x == ZERO {
            continue;
        }
        for (j, &y) in q.iter().enumerate() {
            let e = (i + j + 1) as i32;
            acc += x * y.conj() * (h.powi(e) / e as f64);
        }
    }
    acc
}

pub fn local_integral(p: &[C64], h: f64) -> C64 {
    p.iter()
        .enumerate()
        .map(|(i, &c)| c * (h.powi(i as i32 + 1) / (i + 1) as f64))
        .fold(ZERO, |a, b| a + b)
}

fn add_into(dst: &mut Vec<C64>, src: &[C64], factor: C64) {
    if dst.len() < src.len() {
        dst.resize(src.len(), ZERO);
    }
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += s * factor;
    }
}

/// Sorted union of two breakpoint sets; points closer than `eps` collapse
/// onto the one that appears first.
pub fn merge_breaks(a: &[f64], b: &[f64], eps: f64) -> Vec<f64> {
    let mut all: Vec<f64> = a.iter().chain(b).copied().collect();
    all.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for t in all {
        match out.last() {
            Some(&last) if t - last <= eps => {}
            _ => out.push(t),
        }
    }
    // Endpoints of `a` win over nearly-equal endpoints of `b`.
    if let (Some(first), Some(&a0)) = (out.first_mut(), a.first()) {
        *first = a0;
    }
    if let (Some(last), Some(&an)) = (out.last_mut(), a.last()) {
        *last = an;
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct PiecewisePoly {
    breaks: Vec<f64>,
    pieces: Vec<Vec<C64>>,
}

impl PiecewisePoly {
    pub fn zero(a: f64, b: f64) -> Self {
        Self::constant(a, b, ZERO)
    }

    pub fn constant(a: f64, b: f64, c: C64) -> Self {
        assert!(b > a, "empty domain [{a}, {b}]");
        Self {
            breaks: vec![a, b],
            pieces: vec![vec![c]],
        }
    }

    /// A single polynomial given by its coefficients in powers of the global `t`.
    pub fn polynomial(a: f64, b: f64, global: &[C64]) -> Self {
        assert!(b > a, "empty domain [{a}, {b}]");
        let local = if global.is_empty() {
            vec![ZERO]
        } else {
            taylor_shift(global, a)
        };
        Self {
            breaks: vec![a, b],
            pieces: vec![local],
        }
    }

    /// Builds from explicit breakpoints and local coefficients (powers of `t - breaks[i]`).
    pub fn from_pieces(breaks: Vec<f64>, pieces: Vec<Vec<C64>>) -> Result<Self, PolyError> {
        if breaks.len() < 2 || pieces.len() + 1 != breaks.len() {
            return Err(PolyError::Shape {
                breaks: breaks.len(),
                pieces: pieces.len(),
            });
        }
        if breaks.iter().any(|b| !b.is_finite()) {
            return Err(PolyError::NonFinite);
        }
        if breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(PolyError::NotIncreasing);
        }
        if pieces.iter().flatten().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(PolyError::NonFinite);
        }
        let pieces = pieces
            .into_iter()
            .map(|p| if p.is_empty() { vec![ZERO] } else { p })
            .collect();
        Ok(Self { breaks, pieces })
    }

    pub(crate) fn from_parts_unchecked(breaks: Vec<f64>, pieces: Vec<Vec<C64>>) -> Self {
        debug_assert_eq!(breaks.len(), pieces.len() + 1);
        Self { breaks, pieces }
    }

    pub fn start(&self) -> f64 {
        self.breaks[0]
    }

    pub fn end(&self) -> f64 {
        *self.breaks.last().unwrap()
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.start(), self.end())
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn pieces(&self) -> &[Vec<C64>] {
        &self.pieces
    }

    pub fn num_pieces(&self) -> usize {
        self.pieces.len()
    }

    pub fn degree(&self) -> usize {
        self.pieces
            .iter()
            .map(|p| p.iter().rposition(|c| *c != ZERO).unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    fn eps(&self) -> f64 {
        break_eps(self.start(), self.end())
    }

    /// Index of the piece used for the right limit at `t`.
    fn right_piece(&self, t: f64) -> usize {
        let eps = self.eps();
        let idx = self.breaks.partition_point(|&b| b <= t + eps);
        idx.saturating_sub(1).min(self.pieces.len() - 1)
    }

    /// Index of the piece used for the left limit at `t`.
    fn left_piece(&self, t: f64) -> usize {
        let eps = self.eps();
        let idx = self.breaks.partition_point(|&b| b < t - eps);
        idx.saturating_sub(1).min(self.pieces.len() - 1)
    }

    /// Right-continuous evaluation of the `k`-th derivative (left limit at the right end).
    pub fn eval(&self, t: f64, k: usize) -> C64 {
        self.eval_right(t, k)
    }

    pub fn eval_right(&self, t: f64, k: usize) -> C64 {
        let i = self.right_piece(t);
        eval_local(&self.pieces[i], t - self.breaks[i], k)
    }

    pub fn eval_left(&self, t: f64, k: usize) -> C64 {
        let i = self.left_piece(t);
        eval_local(&self.pieces[i], t - self.breaks[i], k)
    }

    pub fn derivative(&self) -> Self {
        Self {
            breaks: self.breaks.clone(),
            pieces: self
                .pieces
                .iter()
                .map(|p| {
                    let d = poly_derivative(p);
                    if d.is_empty() {
                        vec![ZERO]
                    } else {
                        d
                    }
                })
                .collect(),
        }
    }

    pub fn derivative_n(&self, k: usize) -> Self {
        (0..k).fold(self.clone(), |p, _| p.derivative())
    }

    pub fn conj(&self) -> Self {
        self.map_coeffs(|c| c.conj())
    }

    pub fn scale(&self, factor: C64) -> Self {
        self.map_coeffs(|c| c * factor)
    }

    fn map_coeffs(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            breaks: self.breaks.clone(),
            pieces: self
                .pieces
                .iter()
                .map(|p| p.iter().map(|&c| f(c)).collect())
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().flatten().all(|c| *c == ZERO)
    }

    /// Re-expresses on `grid`, which must cover the same domain and contain every
    /// breakpoint of `self` (up to rounding).
    pub fn refine(&self, grid: &[f64]) -> Self {
        let mut pieces = Vec::with_capacity(grid.len() - 1);
        for w in grid.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let i = self.right_piece(mid);
            pieces.push(taylor_shift(&self.pieces[i], w[0] - self.breaks[i]));
        }
        Self {
            breaks: grid.to_vec(),
            pieces,
        }
    }

    fn check_same_domain(&self, other: &Self) {
        let eps = self.eps();
        assert!(
            (self.start() - other.start()).abs() <= eps && (self.end() - other.end()).abs() <= eps,
            "domain mismatch: [{}, {}] vs [{}, {}]",
            self.start(),
            self.end(),
            other.start(),
            other.end()
        );
    }

    fn common_grid(&self, other: &Self) -> Vec<f64> {
        if self.breaks == other.breaks {
            return self.breaks.clone();
        }
        merge_breaks(&self.breaks, &other.breaks, self.eps())
    }

    /// `self + factor * other`
    pub fn axpy(&self, factor: C64, other: &Self) -> Self {
        self.check_same_domain(other);
        if other.is_zero() || factor == ZERO {
            return self.clone();
        }
        let grid = self.common_grid(other);
        let mut a = self.refine(&grid);
        let b = other.refine(&grid);
        for (pa, pb) in a.pieces.iter_mut().zip(&b.pieces) {
            add_into(pa, pb, factor);
        }
        a
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpy(C64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_same_domain(other);
        let grid = self.common_grid(other);
        let a = self.refine(&grid);
        let b = other.refine(&grid);
        let pieces: Vec<Vec<C64>> = a
            .pieces
            .iter()
            .zip(&b.pieces)
            .map(|(x, y)| {
                let p = poly_mul(x, y);
                if p.is_empty() {
                    vec![ZERO]
                } else {
                    p
                }
            })
            .collect();
        let out = Self {
            breaks: grid,
            pieces,
        };
        let deg = out.degree();
        if deg > DEGREE_WARNING {
            log::warn!("piecewise product reached degree {deg}; conditioning may suffer");
        }
        out
    }

    /// `g(t) = f(t - delta)` on the translated domain.
    pub fn shift(&self, delta: f64) -> Self {
        Self {
            breaks: self.breaks.iter().map(|b| b + delta).collect(),
            pieces: self.pieces.clone(),
        }
    }

    /// Restriction to `[a, b]`, which must lie inside the domain.
    pub fn restrict(&self, a: f64, b: f64) -> Self {
        let eps = self.eps();
        assert!(
            a >= self.start() - eps && b <= self.end() + eps && b > a,
            "restriction [{a}, {b}] outside [{}, {}]",
            self.start(),
            self.end()
        );
        let mut grid = vec![a];
        grid.extend(self.breaks.iter().copied().filter(|&t| t > a + eps && t < b - eps));
        grid.push(b);
        let mut pieces = Vec::with_capacity(grid.len() - 1);
        for w in grid.windows(2) {
            let i = self.right_piece(0.5 * (w[0] + w[1]));
            pieces.push(taylor_shift(&self.pieces[i], w[0] - self.breaks[i]));
        }
        Self {
            breaks: grid,
            pieces,
        }
    }

    /// Joins `self` on `[a, c]` with `next` on `[c, b]`.
    pub fn concat(&self, next: &Self) -> Self {
        let eps = self.eps();
        assert!(
            (self.end() - next.start()).abs() <= eps,
            "concat of non-adjacent domains"
        );
        let mut breaks = self.breaks.clone();
        breaks.extend_from_slice(&next.breaks[1..]);
        let mut pieces = self.pieces.clone();
        pieces.extend(next.pieces.iter().cloned());
        Self { breaks, pieces }
    }

    pub fn integral(&self) -> C64 {
        self.pieces
            .iter()
            .zip(self.breaks.windows(2))
            .map(|(p, w)| local_integral(p, w[1] - w[0]))
            .fold(ZERO, |a, b| a + b)
    }

    /// `\int f \overline{g}` over the common domain.
    pub fn inner(&self, other: &Self) -> C64 {
        self.check_same_domain(other);
        let grid = self.common_grid(other);
        let a = self.refine(&grid);
        let b = other.refine(&grid);
        a.pieces
            .iter()
            .zip(&b.pieces)
            .zip(grid.windows(2))
            .map(|((p, q), w)| local_inner(p, q, w[1] - w[0]))
            .fold(ZERO, |x, y| x + y)
    }

    pub fn norm_l2_sq(&self) -> f64 {
        self.inner(self).re.max(0.0)
    }

    pub fn norm_l2(&self) -> f64 {
        self.norm_l2_sq().sqrt()
    }

    /// Upper bound of `sup |f|`, from `sum |c_i| h^i` per piece.
    pub fn sup_bound(&self) -> f64 {
        self.pieces
            .iter()
            .zip(self.breaks.windows(2))
            .map(|(p, w)| {
                let h = w[1] - w[0];
                p.iter()
                    .enumerate()
                    .map(|(i, c)| c.norm() * h.powi(i as i32))
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Sup bound restricted to the pieces overlapping `[a, b]`.
    pub fn sup_bound_on(&self, a: f64, b: f64) -> f64 {
        let (a, b) = (a.max(self.start()), b.min(self.end()));
        if b <= a {
            return 0.0;
        }
        self.restrict(a, b).sup_bound()
    }

    /// One-sided jumps `f^{(k)}(t+) - f^{(k)}(t-)` at every interior breakpoint.
    pub fn jumps(&self, k: usize) -> Vec<(f64, C64)> {
        (1..self.pieces.len())
            .map(|i| {
                let h = self.breaks[i] - self.breaks[i - 1];
                let left = eval_local(&self.pieces[i - 1], h, k);
                let right = eval_local(&self.pieces[i], 0.0, k);
                (self.breaks[i], right - left)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn taylor_shift_matches_direct_evaluation() {
        let p = [c(1.0), c(-2.0), c(0.5), c(3.0)];
        let q = taylor_shift(&p, 0.7);
        for s in [0.0, 0.3, -1.2] {
            let lhs = eval_local(&q, s, 0);
            let rhs = eval_local(&p, s + 0.7, 0);
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_global_cubic() {
        let f = PiecewisePoly::polynomial(1.0, 3.0, &[c(0.0), c(0.0), c(0.0), c(1.0)]);
        let d = f.derivative();
        assert!((d.eval(2.0, 0) - c(12.0)).norm() < 1e-12);
        assert!((f.eval(2.0, 2) - c(12.0)).norm() < 1e-12);
        assert!((f.eval(2.0, 3) - c(6.0)).norm() < 1e-12);
        assert_eq!(f.eval(2.0, 4), ZERO);
    }

    #[test]
    fn one_sided_limits_at_break() {
        let f = PiecewisePoly::from_pieces(vec![0.0, 1.0, 2.0], vec![vec![c(0.0)], vec![c(1.0)]])
            .unwrap();
        assert_eq!(f.eval_left(1.0, 0), c(0.0));
        assert_eq!(f.eval_right(1.0, 0), c(1.0));
        assert_eq!(f.eval(2.0, 0), c(1.0));
        assert_eq!(f.eval_left(0.0, 0), c(0.0));
        let j = f.jumps(0);
        assert_eq!(j, vec![(1.0, c(1.0))]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(PiecewisePoly::from_pieces(vec![0.0], vec![]).is_err());
        assert!(PiecewisePoly::from_pieces(vec![1.0, 0.0], vec![vec![]]).is_err());
        assert!(PiecewisePoly::from_pieces(vec![0.0, 1.0], vec![vec![], vec![]]).is_err());
    }

    #[test]
    fn integral_and_inner_product() {
        // \int_0^2 t^2 dt = 8/3
        let f = PiecewisePoly::polynomial(0.0, 2.0, &[c(0.0), c(1.0)]);
        assert!((f.inner(&f) - c(8.0 / 3.0)).norm() < 1e-14);
        let g = f.scale(C64::new(0.0, 1.0));
        // \int f conj(i f) = -i 8/3
        assert!((f.inner(&g) - C64::new(0.0, -8.0 / 3.0)).norm() < 1e-14);
    }

    #[test]
    fn restrict_shift_concat_roundtrip() {
        let f = PiecewisePoly::polynomial(0.0, 3.0, &[c(1.0), c(2.0), c(-1.0)]);
        let left = f.restrict(0.0, 1.25);
        let right = f.restrict(1.25, 3.0);
        let g = left.concat(&right);
        for t in [0.0, 0.5, 1.25, 2.9] {
            assert!((g.eval(t, 0) - f.eval(t, 0)).norm() < 1e-12);
        }
        let s = f.shift(-1.0);
        assert!((s.eval(0.5, 1) - f.eval(1.5, 1)).norm() < 1e-12);
    }

    fn arb_pp() -> impl Strategy<Value = PiecewisePoly> {
        (
            prop::collection::vec(0.05f64..1.0, 1..5),
            prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 1..5), 5),
        )
            .prop_map(|(widths, coeffs)| {
                let mut breaks = vec![0.0];
                for w in &widths {
                    breaks.push(breaks.last().unwrap() + w);
                }
                let end = *breaks.last().unwrap();
                // normalise domain to [0, 2]
                let breaks: Vec<f64> = breaks.iter().map(|b| 2.0 * b / end).collect();
                let pieces = coeffs
                    .into_iter()
                    .take(widths.len())
                    .map(|p| p.into_iter().map(|v| C64::new(v, 0.5 * v)).collect())
                    .collect();
                PiecewisePoly::from_pieces(breaks, pieces).unwrap()
            })
    }

    proptest! {
        #[test]
        fn product_evaluates_pointwise(f in arb_pp(), g in arb_pp(), t in 0.0f64..2.0) {
            let h = f.mul(&g);
            let lhs = h.eval(t, 0);
            let rhs = f.eval(t, 0) * g.eval(t, 0);
            prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
        }

        #[test]
        fn inner_is_hermitian(f in arb_pp(), g in arb_pp()) {
            let a = f.inner(&g);
            let b = g.inner(&f).conj();
            prop_assert!((a - b).norm() <= 1e-10 * (1.0 + a.norm()));
            prop_assert!(f.inner(&f).re >= -1e-12);
        }

        #[test]
        fn refine_preserves_values(f in arb_pp(), extra in prop::collection::vec(0.0f64..2.0, 0..6), t in 0.0f64..2.0) {
            let grid = merge_breaks(f.breaks(), &extra, 1e-9);
            let r = f.refine(&grid);
            prop_assert!((r.eval(t, 0) - f.eval(t, 0)).norm() <= 1e-9 * (1.0 + f.sup_bound()));
        }
    }
}
