use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_dims, check_param_index, check_params, check_sensitivity, Bound, ModelDescriptor, SensingModel};
use crate::error::Result;
use crate::linalg::CMatrix;

/// Incomplete Fourier measurements `A_mn = exp(-j w_m n) / sqrt(M)`, `n = 1..N`,
/// parameterized by the digital frequencies `w_m`.
#[derive(Debug, Clone)]
pub struct FourierModel {
    m: usize,
    n: usize,
}

impl FourierModel {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        check_dims(m, n)?;
        Ok(Self { m, n })
    }

    fn entry(&self, omega: f64, col: usize) -> Complex64 {
        Complex64::from_polar(1.0 / (self.m as f64).sqrt(), -omega * (col + 1) as f64)
    }
}

impl SensingModel for FourierModel {
    fn rows(&self) -> usize {
        self.m
    }

    fn cols(&self) -> usize {
        self.n
    }

    fn num_params(&self) -> usize {
        self.m
    }

    fn bound(&self, _j: usize) -> Bound {
        Bound::UNBOUNDED
    }

    fn assemble(&self, p: &[f64]) -> Result<CMatrix> {
        check_params(self, p)?;
        Ok(CMatrix::from_fn(self.m, self.n, |r, c| self.entry(p[r], c)))
    }

    fn partial(&self, p: &[f64], j: usize) -> Result<CMatrix> {
        check_params(self, p)?;
        check_param_index(self, j)?;
        let mut d = CMatrix::zeros(self.m, self.n);
        for c in 0..self.n {
            d[(j, c)] = Complex64::new(0.0, -((c + 1) as f64)) * self.entry(p[j], c);
        }
        Ok(d)
    }

    fn pullback(&self, p: &[f64], a: &CMatrix, s: &CMatrix) -> Result<Vec<f64>> {
        check_params(self, p)?;
        check_sensitivity(self, s)?;
        // d A_mn / d w_m = -j n A_mn, so 2 Re(conj(S) (-j n) A) = 2 n Im(conj(S) A).
        Ok((0..self.m)
            .map(|r| {
                2.0 * (0..self.n)
                    .map(|c| (c + 1) as f64 * (s[(r, c)].conj() * a[(r, c)]).im)
                    .sum::<f64>()
            })
            .collect())
    }

    /// Frequencies drawn uniformly from `(-pi, pi)`.
    fn random_init(&self, seed: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..self.m).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect())
    }

    fn descriptor(&self) -> ModelDescriptor {
        ModelDescriptor::Fourier { m: self.m, n: self.n }
    }
}
