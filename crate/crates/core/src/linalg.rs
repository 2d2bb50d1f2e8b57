//! Hermitian positive-definite factorization for the combiner and fusion
//! solves. No regularization: a non-positive pivot is reported as an error.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

// Pivots below this fraction of their diagonal entry count as breakdown.
const PIVOT_RTOL: f64 = 64.0 * f64::EPSILON;

/// Lower-triangular `L` with `A = L L^H`.
#[derive(Debug, Clone)]
pub struct HermitianCholesky {
    l: DMatrix<Complex64>,
}

impl HermitianCholesky {
    /// Factors `a`, reading only its lower triangle.
    pub fn factor(a: &DMatrix<Complex64>) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "Cholesky needs a square matrix");
        let mut l = DMatrix::<Complex64>::zeros(n, n);
        for j in 0..n {
            let diag = a[(j, j)].re;
            let mut d = diag;
            for p in 0..j {
                d -= l[(j, p)].norm_sqr();
            }
            if !(d.is_finite() && d > 0.0 && d > PIVOT_RTOL * diag.abs()) {
                return Err(Error::NotPositiveDefinite { pivot: j, value: d });
            }
            let ljj = d.sqrt();
            l[(j, j)] = Complex64::new(ljj, 0.0);
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for p in 0..j {
                    s -= l[(i, p)] * l[(j, p)].conj();
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// `L^{-1} b`.
    pub fn forward(&self, b: &DVector<Complex64>) -> DVector<Complex64> {
        let n = self.dim();
        let mut y = b.clone();
        for i in 0..n {
            let mut s = y[i];
            for p in 0..i {
                s -= self.l[(i, p)] * y[p];
            }
            y[i] = s / self.l[(i, i)].re;
        }
        y
    }

    /// `A^{-1} b`.
    pub fn solve(&self, b: &DVector<Complex64>) -> DVector<Complex64> {
        let n = self.dim();
        let mut x = self.forward(b);
        for i in (0..n).rev() {
            let mut s = x[i];
            for p in i + 1..n {
                s -= self.l[(p, i)].conj() * x[p];
            }
            x[i] = s / self.l[(i, i)].re;
        }
        x
    }

    /// `b^H A^{-1} b`, computed as `|L^{-1} b|^2` so it is never negative.
    pub fn inv_quad_form(&self, b: &DVector<Complex64>) -> f64 {
        self.forward(b).norm_squared()
    }
}
