//! Dense complex kernels.
//!
//! Products are routed through real GEMMs on the split real/imaginary parts,
//! which is several times faster than nalgebra's generic complex product.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative pivot floor below which a Hermitian matrix is treated as singular.
const PIVOT_RTOL: f64 = 1e-13;

fn split(a: &CMatrix) -> (DMatrix<f64>, DMatrix<f64>) {
    (a.map(|z| z.re), a.map(|z| z.im))
}

fn join(re: DMatrix<f64>, im: &DMatrix<f64>) -> CMatrix {
    re.zip_map(im, Complex64::new)
}

/// `a * b`.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows(), "matmul: inner dimensions differ");
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    join(re, &im)
}

/// `a^H * b`.
pub fn adjoint_matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.nrows(), b.nrows(), "adjoint_matmul: row counts differ");
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let re = ar.tr_mul(&br) + ai.tr_mul(&bi);
    let im = ar.tr_mul(&bi) - ai.tr_mul(&br);
    join(re, &im)
}

/// Gram matrix `a^H a`, returned exactly Hermitian.
pub fn gram(a: &CMatrix) -> CMatrix {
    let mut g = adjoint_matmul(a, a);
    hermitize(&mut g);
    g
}

/// Symmetrize in place: `h <- (h + h^H) / 2`, with a real diagonal.
pub fn hermitize(h: &mut CMatrix) {
    let n = h.nrows();
    for j in 0..n {
        h[(j, j)] = Complex64::new(h[(j, j)].re, 0.0);
        for i in (j + 1)..n {
            let avg = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
            h[(i, j)] = avg;
            h[(j, i)] = avg.conj();
        }
    }
}

/// Principal submatrix `h[idx, idx]`.
pub fn principal_submatrix(h: &CMatrix, idx: &[usize]) -> CMatrix {
    CMatrix::from_fn(idx.len(), idx.len(), |i, j| h[(idx[i], idx[j])])
}

/// Lower Cholesky factor of a Hermitian positive-definite matrix, stored row-major.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<Complex64>,
}

impl Cholesky {
    /// Factors `h`. Fails when a pivot drops below a relative floor of the
    /// largest diagonal entry.
    pub fn new(h: &CMatrix) -> Result<Self> {
        let n = h.nrows();
        if h.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "cholesky of a {}x{} matrix",
                n,
                h.ncols()
            )));
        }
        let scale = (0..n).map(|i| h[(i, i)].re.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let floor = PIVOT_RTOL * scale;
        let mut l = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            let mut d = h[(j, j)].re;
            for v in &l[j * n..j * n + j] {
                d -= v.norm_sqr();
            }
            if !(d > floor) {
                return Err(Error::NotPositiveDefinite { pivot: j, value: d });
            }
            let ljj = d.sqrt();
            l[j * n + j] = Complex64::new(ljj, 0.0);
            for i in (j + 1)..n {
                let mut s = h[(i, j)];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / ljj;
            }
        }
        Ok(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `ln det` of the factored matrix.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.l[i * self.n + i].re.ln()).sum::<f64>()
    }

    /// Inverse of the factored matrix, `L^{-H} L^{-1}`.
    pub fn inverse(&self) -> CMatrix {
        let n = self.n;
        // Forward substitution for X = L^{-1} (lower triangular), column by column.
        let mut x = CMatrix::zeros(n, n);
        for c in 0..n {
            x[(c, c)] = Complex64::new(1.0 / self.l[c * n + c].re, 0.0);
            for i in (c + 1)..n {
                let mut s = Complex64::new(0.0, 0.0);
                for k in c..i {
                    s -= self.l[i * n + k] * x[(k, c)];
                }
                x[(i, c)] = s / self.l[i * n + i].re;
            }
        }
        let mut w = adjoint_matmul(&x, &x);
        hermitize(&mut w);
        w
    }

    /// Solves `H z = b`.
    pub fn solve(&self, b: &CVector) -> CVector {
        let n = self.n;
        let mut z = b.clone();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= self.l[i * n + k] * z[k];
            }
            z[i] = s / self.l[i * n + i].re;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i].conj() * z[k];
            }
            z[i] = s / self.l[i * n + i].re;
        }
        z
    }
}

/// Extreme eigenvalues `(min, max)` of a Hermitian matrix.
pub fn hermitian_extreme_eigenvalues(h: &CMatrix) -> (f64, f64) {
    let eig = h.clone().symmetric_eigenvalues();
    eig.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

pub fn linf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
