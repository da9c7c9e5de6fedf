//! Reference Hermite shape functions and Gauss-Legendre rules.

use nalgebra::{DMatrix, DVector};

use crate::poly::{poly_mul, C64};

/// Shape functions of a `C^{n-1}` element of degree `p >= 2n - 1` on `[0, 1]`.
///
/// Local ordering: left-node derivatives `0..n`, right-node derivatives `0..n`,
/// then `p + 1 - 2n` interior bubbles `s^n (1-s)^n s^i`.
#[derive(Debug, Clone)]
pub struct ReferenceElement {
    n: usize,
    degree: usize,
    shapes: Vec<Vec<f64>>,
}

impl ReferenceElement {
    pub fn new(n: usize, degree: usize) -> Self {
        assert!(n >= 1 && degree + 1 >= 2 * n, "degree {degree} too low for order {n}");
        let size = 2 * n;
        // rows: conditions (left derivs, right derivs); cols: monomials s^i, i < 2n
        let mut m = DMatrix::<f64>::zeros(size, size);
        for k in 0..n {
            m[(k, k)] = factorial(k);
            for i in k..size {
                m[(n + k, i)] = falling(i, k);
            }
        }
        let lu = m.lu();
        let mut shapes = Vec::with_capacity(degree + 1);
        for l in 0..size {
            let mut rhs = DVector::<f64>::zeros(size);
            rhs[l] = 1.0;
            let sol = lu.solve(&rhs).expect("Hermite interpolation matrix is invertible");
            let mut coeffs = sol.as_slice().to_vec();
            coeffs.resize(degree + 1, 0.0);
            shapes.push(coeffs);
        }
        // s^n (1 - s)^n
        let mut bubble = vec![1.0];
        for _ in 0..n {
            bubble = real_mul(&bubble, &[0.0, 1.0]);
            bubble = real_mul(&bubble, &[1.0, -1.0]);
        }
        for i in 0..degree + 1 - size {
            let mut mono = vec![0.0; i + 1];
            mono[i] = 1.0;
            let mut coeffs = real_mul(&bubble, &mono);
            coeffs.resize(degree + 1, 0.0);
            shapes.push(coeffs);
        }
        debug_assert_eq!(shapes.len(), degree + 1);
        Self { n, degree, shapes }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_local(&self) -> usize {
        self.shapes.len()
    }

    pub fn num_bubbles(&self) -> usize {
        self.degree + 1 - 2 * self.n
    }

    pub fn reference(&self, l: usize) -> &[f64] {
        &self.shapes[l]
    }

    /// Shape `l` on an element of width `h`, in powers of `s = t - a`, scaled so
    /// that nodal derivative data is in physical units.
    pub fn physical(&self, l: usize, h: f64) -> Vec<C64> {
        let scale = if l < 2 * self.n {
            h.powi((l % self.n) as i32)
        } else {
            1.0
        };
        self.shapes[l]
            .iter()
            .enumerate()
            .map(|(i, &c)| C64::new(c * scale / h.powi(i as i32), 0.0))
            .collect()
    }

    /// Degree-`(2n-1)` polynomials on `[0, len]` with `p_k^{(v)}(0) = delta_{kv}` and
    /// all derivatives below `n` vanishing at `len`.
    pub fn left_hermite(&self, k: usize, len: f64) -> Vec<C64> {
        let mut p = self.physical(k, len);
        p.truncate(2 * self.n);
        p
    }
}

fn real_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let ca: Vec<C64> = a.iter().map(|&v| C64::new(v, 0.0)).collect();
    let cb: Vec<C64> = b.iter().map(|&v| C64::new(v, 0.0)).collect();
    poly_mul(&ca, &cb).iter().map(|c| c.re).collect()
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |p, v| p * v as f64)
}

fn falling(i: usize, k: usize) -> f64 {
    ((i - k + 1)..=i).fold(1.0, |p, v| p * v as f64)
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(points: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(points >= 1);
    let n = points;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))`
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::eval_local;

    #[test]
    fn hermite_conditions_hold() {
        for n in 1..=3 {
            let el = ReferenceElement::new(n, 2 * n - 1);
            let h = 0.37;
            for l in 0..2 * n {
                let p = el.physical(l, h);
                for v in 0..n {
                    let at0 = eval_local(&p, 0.0, v).re;
                    let at1 = eval_local(&p, h, v).re;
                    let e0 = if l == v { 1.0 } else { 0.0 };
                    let e1 = if l == n + v { 1.0 } else { 0.0 };
                    assert!((at0 - e0).abs() < 1e-12, "n={n} l={l} v={v}");
                    assert!((at1 - e1).abs() < 1e-11, "n={n} l={l} v={v}");
                }
            }
        }
    }

    #[test]
    fn linear_lift_polynomial() {
        let el = ReferenceElement::new(1, 1);
        let p = el.left_hermite(0, 1.0);
        assert!((p[0].re - 1.0).abs() < 1e-15 && (p[1].re + 1.0).abs() < 1e-15);
    }

    #[test]
    fn bubbles_vanish_to_order_n_at_ends() {
        let el = ReferenceElement::new(2, 5);
        assert_eq!(el.num_bubbles(), 2);
        for l in 4..6 {
            let p = el.physical(l, 0.5);
            for v in 0..2 {
                assert!(eval_local(&p, 0.0, v).norm() < 1e-14);
                assert!(eval_local(&p, 0.5, v).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn reproduces_polynomials_up_to_degree_2n_minus_1() {
        let n = 2;
        let el = ReferenceElement::new(n, 3);
        let h = 0.8;
        let target = [C64::new(0.3, 0.0), C64::new(-1.0, 0.0), C64::new(2.0, 0.5), C64::new(0.7, 0.0)];
        let mut acc = vec![C64::new(0.0, 0.0); 4];
        for v in 0..n {
            for (side, s) in [(0, 0.0), (1, h)] {
                let data = eval_local(&target, s, v);
                for (i, c) in el.physical(side * n + v, h).iter().enumerate() {
                    acc[i] += *c * data;
                }
            }
        }
        for (a, t) in acc.iter().zip(target) {
            assert!((a - t).norm() < 1e-12);
        }
    }

    #[test]
    fn gauss_rule_integrates_exactly() {
        for pts in 1..=8 {
            let (x, w) = gauss_legendre(pts);
            for deg in 0..2 * pts {
                let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((approx - 1.0 / (deg + 1) as f64).abs() < 1e-14, "pts={pts} deg={deg}");
            }
        }
    }
}
