use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{check_dims, check_param_index, check_params, check_sensitivity, Bound, ModelDescriptor, SensingModel};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Raw column norms below this are rejected as degenerate.
pub const DEGENERATE_NORM: f64 = 1e-14;

/// Unconstrained matrix: every entry `a_mn` is a design variable, stored as
/// `p[2(nM + m)] = Re a_mn`, `p[2(nM + m) + 1] = Im a_mn`. Columns are
/// normalized inside `assemble`.
#[derive(Debug, Clone)]
pub struct DenseModel {
    m: usize,
    n: usize,
}

impl DenseModel {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        check_dims(m, n)?;
        Ok(Self { m, n })
    }

    fn raw(&self, p: &[f64], col: usize, row: usize) -> Complex64 {
        let k = 2 * (col * self.m + row);
        Complex64::new(p[k], p[k + 1])
    }

    fn column_norm(&self, p: &[f64], col: usize) -> Result<f64> {
        let norm = (0..self.m).map(|r| self.raw(p, col, r).norm_sqr()).sum::<f64>().sqrt();
        if norm < DEGENERATE_NORM {
            return Err(Error::DegenerateColumn { column: col, norm });
        }
        Ok(norm)
    }

    /// Parameters reproducing the raw matrix `a` (before normalization).
    pub fn params_from_matrix(&self, a: &CMatrix) -> Result<Vec<f64>> {
        if a.nrows() != self.m || a.ncols() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, model is {}x{}",
                a.nrows(),
                a.ncols(),
                self.m,
                self.n
            )));
        }
        let mut p = Vec::with_capacity(2 * self.m * self.n);
        for c in 0..self.n {
            for r in 0..self.m {
                p.push(a[(r, c)].re);
                p.push(a[(r, c)].im);
            }
        }
        Ok(p)
    }
}

impl SensingModel for DenseModel {
    fn rows(&self) -> usize {
        self.m
    }

    fn cols(&self) -> usize {
        self.n
    }

    fn num_params(&self) -> usize {
        2 * self.m * self.n
    }

    fn bound(&self, _j: usize) -> Bound {
        Bound::UNBOUNDED
    }

    fn assemble(&self, p: &[f64]) -> Result<CMatrix> {
        check_params(self, p)?;
        let mut a = CMatrix::zeros(self.m, self.n);
        for c in 0..self.n {
            let inv = 1.0 / self.column_norm(p, c)?;
            for r in 0..self.m {
                a[(r, c)] = self.raw(p, c, r) * inv;
            }
        }
        Ok(a)
    }

    // With f_hat = f / |f|:  d f_hat = (df - f_hat Re(f_hat^H df)) / |f|.
    fn partial(&self, p: &[f64], j: usize) -> Result<CMatrix> {
        check_params(self, p)?;
        check_param_index(self, j)?;
        let (col, row, imaginary) = ((j / 2) / self.m, (j / 2) % self.m, j % 2 == 1);
        let norm = self.column_norm(p, col)?;
        let unit = if imaginary { Complex64::new(0.0, 1.0) } else { Complex64::new(1.0, 0.0) };
        let fhat_row = self.raw(p, col, row) / norm;
        let proj = (fhat_row.conj() * unit).re;
        let mut d = CMatrix::zeros(self.m, self.n);
        for r in 0..self.m {
            let mut v = -(self.raw(p, col, r) / norm) * proj;
            if r == row {
                v += unit;
            }
            d[(r, col)] = v / norm;
        }
        Ok(d)
    }

    fn pullback(&self, p: &[f64], a: &CMatrix, s: &CMatrix) -> Result<Vec<f64>> {
        check_params(self, p)?;
        check_sensitivity(self, s)?;
        let mut g = vec![0.0; self.num_params()];
        for c in 0..self.n {
            let norm = self.column_norm(p, c)?;
            let proj: f64 = (0..self.m).map(|r| (a[(r, c)].conj() * s[(r, c)]).re).sum();
            for r in 0..self.m {
                let h = (s[(r, c)] - a[(r, c)] * proj) / norm;
                let k = 2 * (c * self.m + r);
                g[k] = 2.0 * h.re;
                g[k + 1] = 2.0 * h.im;
            }
        }
        Ok(g)
    }

    /// i.i.d. standard complex Normal entries, `E|a|^2 = 1`.
    fn random_init(&self, seed: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid normal");
        Ok((0..self.num_params()).map(|_| normal.sample(&mut rng)).collect())
    }

    fn descriptor(&self) -> ModelDescriptor {
        ModelDescriptor::Dense { m: self.m, n: self.n }
    }
}
