//! Dense Hermitian positive-definite factorization.

use nalgebra::DMatrix;

use crate::poly::C64;

/// `G = L L^*` with the pivots `L_ii^2` kept for inspection.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DMatrix<C64>,
    pivots: Vec<f64>,
}

/// A non-positive pivot encountered while factorizing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndefinitePivot {
    pub index: usize,
    pub pivot: f64,
}

impl Cholesky {
    /// Factorizes the Hermitian part stored in the lower triangle of `g`.
    pub fn factor(g: &DMatrix<C64>) -> Result<Self, IndefinitePivot> {
        let n = g.nrows();
        assert_eq!(n, g.ncols(), "square matrix required");
        let scale = (0..n).map(|i| g[(i, i)].re.abs()).fold(0.0, f64::max);
        let floor = scale * 1e-14;
        let mut l = DMatrix::<C64>::zeros(n, n);
        let mut pivots = Vec::with_capacity(n);
        for j in 0..n {
            let mut d = g[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > floor) {
                return Err(IndefinitePivot { index: j, pivot: d });
            }
            pivots.push(d);
            let djj = d.sqrt();
            l[(j, j)] = C64::new(djj, 0.0);
            for i in j + 1..n {
                let mut s = g[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l, pivots })
    }

    pub fn pivots(&self) -> &[f64] {
        &self.pivots
    }

    pub fn min_pivot(&self) -> f64 {
        self.pivots.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn solve(&self, rhs: &[C64]) -> Vec<C64> {
        let n = self.l.nrows();
        assert_eq!(rhs.len(), n);
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[(k, i)].conj() * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }
}

/// `max |G - G^*|`
pub fn hermitian_defect(g: &DMatrix<C64>) -> f64 {
    let n = g.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..=i {
            worst = worst.max((g[(i, j)] - g[(j, i)].conj()).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_hermitian_system() {
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[
                C64::new(4.0, 0.0),
                C64::new(1.0, 1.0),
                C64::new(0.0, -0.5),
                C64::new(1.0, -1.0),
                C64::new(3.0, 0.0),
                C64::new(0.2, 0.0),
                C64::new(0.0, 0.5),
                C64::new(0.2, 0.0),
                C64::new(2.0, 0.0),
            ],
        );
        assert!(hermitian_defect(&a) < 1e-15);
        let chol = Cholesky::factor(&a).unwrap();
        assert!(chol.min_pivot() > 0.0);
        let b = vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0), C64::new(-1.0, 1.0)];
        let x = chol.solve(&b);
        for i in 0..3 {
            let r: C64 = (0..3).map(|j| a[(i, j)] * x[j]).sum();
            assert!((r - b[i]).norm() < 1e-13);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0].map(|v| C64::new(v, 0.0)));
        let err = Cholesky::factor(&a).unwrap_err();
        assert_eq!(err.index, 1);
        assert!(err.pivot < 0.0);
    }
}
