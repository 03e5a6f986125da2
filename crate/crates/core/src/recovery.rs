//! Joint l2/l1 recovery of block-sparse signals:
//!
//! ```text
//! minimize  sum_k |P_k x|_2   subject to  |A x - y|_2 <= eta
//! ```
//!
//! Solved by ADMM on the graph form `w = A x` (graph projection splitting):
//! the block norm and the residual ball each have closed-form proxes, and the
//! projection onto `{(x, w) : w = A x}` only needs `(I + A A^H)^{-1}`, which is
//! factored once per matrix and does not depend on the ADMM penalty. Plain
//! l1 minimization is the same solver with singleton blocks.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::blocks::BlockStructure;
use crate::error::{Error, Result};
use crate::linalg::{hermitize, matmul, CMatrix, CVector, Cholesky};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoveryOptions {
    /// Relative tolerance on the ADMM primal and dual residuals.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial ADMM penalty.
    pub rho0: f64,
    /// Relative slack allowed on `|A x - y| <= eta` for a converged solve.
    pub feas_slack: f64,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 20_000, rho0: 1.0, feas_slack: 1e-6 }
    }
}

/// `eta = NOISELESS_ETA_REL * |y|` is used for noiseless experiments.
pub const NOISELESS_ETA_REL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct RecoveryProblem<'a> {
    pub a: &'a CMatrix,
    pub y: &'a CVector,
    pub bs: &'a BlockStructure,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub x_hat: CVector,
    pub residual: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `sum_k |P_k x|_2`.
pub fn group_objective(x: &CVector, bs: &BlockStructure) -> f64 {
    bs.block_norms(x).iter().sum()
}

/// Matrix-dependent factorizations, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct GroupBasisPursuit {
    a: CMatrix,
    a_adj: CMatrix,
    /// `(I + A A^H)^{-1} A`.
    graph_solve: CMatrix,
    /// Factor of `A A^H`, used for the final feasibility correction.
    row_gram: Option<Cholesky>,
    bs: BlockStructure,
}

impl GroupBasisPursuit {
    pub fn new(a: &CMatrix, bs: &BlockStructure) -> Result<Self> {
        if a.ncols() != bs.signal_len() {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} columns, block structure covers {}",
                a.ncols(),
                bs.signal_len()
            )));
        }
        let m = a.nrows();
        let a_adj = a.adjoint();
        let mut aat = matmul(a, &a_adj);
        hermitize(&mut aat);
        let row_gram = Cholesky::new(&aat).ok();
        let shifted = aat + CMatrix::identity(m, m);
        let inv = Cholesky::new(&shifted)?.inverse();
        let graph_solve = matmul(&inv, a);
        Ok(Self { a: a.clone(), a_adj, graph_solve, row_gram, bs: bs.clone() })
    }

    /// Same matrix, one block per column.
    pub fn l1(a: &CMatrix) -> Result<Self> {
        Self::new(a, &BlockStructure::singletons(a.ncols()))
    }

    pub fn blocks(&self) -> &BlockStructure {
        &self.bs
    }

    pub fn solve(&self, y: &CVector, eta: f64, opts: &RecoveryOptions) -> Result<RecoveryResult> {
        self.solve_traced(y, eta, opts, |_, _| ())
    }

    /// Like `solve`, calling `observe(iteration, objective)` with the group
    /// objective of the prox iterate at every step.
    pub fn solve_traced(
        &self,
        y: &CVector,
        eta: f64,
        opts: &RecoveryOptions,
        mut observe: impl FnMut(usize, f64),
    ) -> Result<RecoveryResult> {
        let (m, n) = (self.a.nrows(), self.a.ncols());
        if y.len() != m {
            return Err(Error::DimensionMismatch(format!("measurement has length {}, matrix has {m} rows", y.len())));
        }
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::InvalidArgument(format!("eta must be finite and non-negative, got {eta}")));
        }
        let y_norm = y.norm();
        let zero_n = CVector::zeros(n);
        let zero_m = CVector::zeros(m);
        let (mut xt, mut wt) = (zero_n.clone(), zero_m.clone());
        let (mut u, mut v) = (zero_n.clone(), zero_m.clone());
        let mut rho = opts.rho0;
        let abs_tol = opts.tol * 1e-3 * y_norm.max(f64::MIN_POSITIVE);
        let mut converged_iters = None;
        let mut iterations = 0;

        while iterations < opts.max_iter {
            iterations += 1;
            let xh = self.shrink(&(&xt - &u), 1.0 / rho);
            let wh = project_ball(&(&wt - &v), y, eta);
            let (xn, wn) = self.graph_project(&(&xh + &u), &(&wh + &v));
            let dx = &xh - &xn;
            let dw = &wh - &wn;
            u += &dx;
            v += &dw;
            let primal = (dx.norm_squared() + dw.norm_squared()).sqrt();
            let dual = rho * ((&xn - &xt).norm_squared() + (&wn - &wt).norm_squared()).sqrt();
            xt = xn;
            wt = wn;
            observe(iterations, group_objective(&xh, &self.bs));

            let scale_pri = (xh.norm_squared() + wh.norm_squared()).sqrt().max((xt.norm_squared() + wt.norm_squared()).sqrt());
            let scale_dual = rho * (u.norm_squared() + v.norm_squared()).sqrt();
            if primal <= opts.tol * scale_pri + abs_tol && dual <= opts.tol * scale_dual + abs_tol {
                converged_iters = Some(iterations);
                break;
            }
            // Residual balancing; the scaled duals follow the penalty.
            if iterations % 10 == 0 {
                if primal > 10.0 * dual {
                    rho *= 2.0;
                    u /= Complex64::new(2.0, 0.0);
                    v /= Complex64::new(2.0, 0.0);
                } else if dual > 10.0 * primal {
                    rho /= 2.0;
                    u *= Complex64::new(2.0, 0.0);
                    v *= Complex64::new(2.0, 0.0);
                }
            }
        }

        let x_hat = self.restore_feasibility(xt, y, eta);
        let residual = (&self.a * &x_hat - y).norm();
        let feasible = if eta > 0.0 {
            residual <= eta * (1.0 + opts.feas_slack)
        } else {
            residual <= NOISELESS_ETA_REL * y_norm
        };
        Ok(RecoveryResult {
            objective: group_objective(&x_hat, &self.bs),
            x_hat,
            residual,
            iterations,
            converged: converged_iters.is_some() && feasible,
        })
    }

    /// Block soft threshold: `P_k x <- max(0, 1 - t / |P_k x|) P_k x`.
    fn shrink(&self, x: &CVector, t: f64) -> CVector {
        let mut out = x.clone();
        for block in self.bs.blocks() {
            let norm = block.iter().map(|&i| x[i].norm_sqr()).sum::<f64>().sqrt();
            let scale = if norm > t { 1.0 - t / norm } else { 0.0 };
            for &i in block {
                out[i] = x[i] * scale;
            }
        }
        out
    }

    /// Projection of `(c, d)` onto `{(x, w) : w = A x}`.
    fn graph_project(&self, c: &CVector, d: &CVector) -> (CVector, CVector) {
        let t = c + &self.a_adj * d;
        let s = &self.graph_solve * &t;
        // w = A x = A t - A A^H s = s, since (I + A A^H) s = A t.
        let x = &t - &self.a_adj * &s;
        (x, s)
    }

    /// Minimum-norm correction bringing `|A x - y|` down to `eta`.
    fn restore_feasibility(&self, x: CVector, y: &CVector, eta: f64) -> CVector {
        let r = &self.a * &x - y;
        let rn = r.norm();
        if rn <= eta {
            return x;
        }
        let Some(row_gram) = &self.row_gram else {
            return x;
        };
        let scale = Complex64::new(1.0 - eta / rn, 0.0);
        let correction = &self.a_adj * row_gram.solve(&r);
        x - correction * scale
    }
}

fn project_ball(w: &CVector, center: &CVector, radius: f64) -> CVector {
    let diff = w - center;
    let n = diff.norm();
    if n <= radius {
        w.clone()
    } else {
        center + diff * Complex64::new(radius / n, 0.0)
    }
}

/// Joint l2/l1 minimization.
pub fn solve_group_bp(prob: &RecoveryProblem<'_>, opts: &RecoveryOptions) -> Result<RecoveryResult> {
    GroupBasisPursuit::new(prob.a, prob.bs)?.solve(prob.y, prob.eta, opts)
}

/// Standard l1 minimization; the block structure of `prob` is ignored.
pub fn solve_l1(prob: &RecoveryProblem<'_>, opts: &RecoveryOptions) -> Result<RecoveryResult> {
    GroupBasisPursuit::l1(prob.a)?.solve(prob.y, prob.eta, opts)
}

/// `|x_hat - x_true| / |x_true|`.
pub fn relative_error(x_hat: &CVector, x_true: &CVector) -> Result<f64> {
    if x_hat.len() != x_true.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} entries", x_hat.len(), x_true.len())));
    }
    let norm = x_true.norm();
    if norm == 0.0 {
        return Err(Error::ZeroGroundTruth);
    }
    Ok((x_hat - x_true).norm() / norm)
}

/// Exact recovery up to `tol_rel` relative error.
pub fn is_success(x_hat: &CVector, x_true: &CVector, tol_rel: f64) -> Result<bool> {
    Ok(relative_error(x_hat, x_true)? <= tol_rel)
}

/// Default success tolerance.
pub const DEFAULT_SUCCESS_TOL: f64 = 1e-3;
