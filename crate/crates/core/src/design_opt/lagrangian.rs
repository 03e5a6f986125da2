//! The scaled augmented Lagrangian of the l-inf capacity program and its
//! gradient in the design parameters.
//!
//! With `d_r(p) = ln det(A_r^H A_r + beta I)` and residual
//! `e_r = c_r - d_r + gamma_r / rho`, the smooth part is
//! `sum_r rho/2 e_r^2`. Its sensitivity with respect to `conj(A)` is
//! `A Omega`, where `Omega` accumulates `-rho e_r W_r` on the pair supports
//! and `W_r = (A_r^H A_r + beta I)^{-1}`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::blocks::PairSupport;
use crate::capacity::pair_factors;
use crate::error::{Error, Result};
use crate::linalg::{gram, linf_norm, matmul, CMatrix, Cholesky};
use crate::models::SensingModel;

/// Capacities at one design point, with the factorizations kept for the gradient.
pub(crate) struct Evaluation {
    pub a: CMatrix,
    pub d: Vec<f64>,
    factors: Vec<Cholesky>,
}

impl Evaluation {
    pub fn new(model: &dyn SensingModel, pairs: &[PairSupport], p: &[f64], beta: f64) -> Result<Self> {
        let a = model.assemble(p)?;
        let factors = pair_factors(&gram(&a), pairs, beta)?;
        let d: Vec<f64> = factors.iter().map(Cholesky::log_det).collect();
        if let Some(r) = d.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("capacity of pair {r}")));
        }
        Ok(Self { a, d, factors })
    }

    pub fn min_capacity(&self) -> f64 {
        self.d.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `dJ/dconj(A)` for `J = sum_r coef_r d_r`.
    pub fn sensitivity(&self, pairs: &[PairSupport], coef: &[f64]) -> CMatrix {
        let n = self.a.ncols();
        let weights: Vec<CMatrix> = self.factors.par_iter().map(Cholesky::inverse).collect();
        let mut omega = CMatrix::zeros(n, n);
        for ((pair, w), &k) in pairs.iter().zip(&weights).zip(coef) {
            if k == 0.0 {
                continue;
            }
            let k = Complex64::new(k, 0.0);
            for (j, &cj) in pair.columns.iter().enumerate() {
                for (i, &ci) in pair.columns.iter().enumerate() {
                    omega[(ci, cj)] += k * w[(i, j)];
                }
            }
        }
        matmul(&self.a, &omega)
    }
}

pub(crate) fn residuals(d: &[f64], c: &[f64], gamma: &[f64], rho: f64) -> Vec<f64> {
    d.iter().zip(c).zip(gamma).map(|((d, c), g)| c - d + g / rho).collect()
}

/// `sum_r rho/2 (c_r - d_r + gamma_r/rho)^2`.
pub(crate) fn smooth_value(d: &[f64], c: &[f64], gamma: &[f64], rho: f64) -> f64 {
    residuals(d, c, gamma, rho).iter().map(|e| 0.5 * rho * e * e).sum()
}

pub(crate) fn full_value(d: &[f64], c: &[f64], gamma: &[f64], rho: f64) -> f64 {
    linf_norm(c) + smooth_value(d, c, gamma, rho)
}

/// Gradient of the smooth part with respect to `p`.
pub(crate) fn smooth_gradient(
    model: &dyn SensingModel,
    pairs: &[PairSupport],
    p: &[f64],
    eval: &Evaluation,
    c: &[f64],
    gamma: &[f64],
    rho: f64,
) -> Result<Vec<f64>> {
    let coef: Vec<f64> = residuals(&eval.d, c, gamma, rho).iter().map(|e| -rho * e).collect();
    if coef.iter().all(|&k| k == 0.0) {
        return Ok(vec![0.0; p.len()]);
    }
    let sens = eval.sensitivity(pairs, &coef);
    model.pullback(p, &eval.a, &sens)
}
