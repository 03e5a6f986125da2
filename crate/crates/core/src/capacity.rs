//! Sensing capacity of block-pair submatrices and the exhaustive block
//! restricted isometry constant.
//!
//! Capacities are natural-log determinants `ln det(A_r^H A_r + beta I)` with
//! no `1/2` factor and no uncertainty scaling.

use rayon::prelude::*;

use crate::blocks::{BlockStructure, PairSupport};
use crate::error::{Error, Result};
use crate::linalg::{gram, hermitian_extreme_eigenvalues, principal_submatrix, CMatrix, Cholesky};
use num_complex::Complex64;

pub const DEFAULT_BETA: f64 = 1e-6;

/// Default cap on the number of supports `block_ric` will enumerate.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityReport {
    pub per_pair: Vec<f64>,
    pub min_capacity: f64,
    pub argmin_pair: usize,
    pub beta: f64,
}

impl CapacityReport {
    fn from_values(per_pair: Vec<f64>, beta: f64) -> Self {
        let (argmin_pair, min_capacity) = per_pair
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |(bi, bv), (i, v)| if v < bv { (i, v) } else { (bi, bv) });
        Self { per_pair, min_capacity, argmin_pair, beta }
    }
}

/// `ln det(A_sub^H A_sub + beta I)` via a Cholesky factorization.
pub fn pair_capacity(a_sub: &CMatrix, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if a_sub.ncols() > a_sub.nrows() {
        log::warn!(
            "capacity of a {}x{} submatrix: more columns than rows, the Gram matrix is rank deficient",
            a_sub.nrows(),
            a_sub.ncols()
        );
    }
    Ok(Cholesky::new(&shifted(gram(a_sub), beta))?.log_det())
}

/// Capacity of every block pair of `a`.
pub fn capacity_report(a: &CMatrix, bs: &BlockStructure, beta: f64) -> Result<CapacityReport> {
    check_beta(beta)?;
    check_cols(a, bs)?;
    warn_if_unnormalized(a);
    let pairs = bs.pair_supports();
    let values = pair_factors(&gram(a), &pairs, beta)?.iter().map(Cholesky::log_det).collect();
    Ok(CapacityReport::from_values(values, beta))
}

/// Cholesky factors of `G[cols_r, cols_r] + beta I` for every pair, in pair order.
pub(crate) fn pair_factors(full_gram: &CMatrix, pairs: &[PairSupport], beta: f64) -> Result<Vec<Cholesky>> {
    pairs
        .par_iter()
        .map(|pair| Cholesky::new(&shifted(principal_submatrix(full_gram, &pair.columns), beta)))
        .collect()
}

fn shifted(mut h: CMatrix, beta: f64) -> CMatrix {
    for i in 0..h.nrows() {
        h[(i, i)] += Complex64::new(beta, 0.0);
    }
    h
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("beta must be a finite non-negative number, got {beta}")));
    }
    Ok(())
}

fn check_cols(a: &CMatrix, bs: &BlockStructure) -> Result<()> {
    if a.ncols() != bs.signal_len() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} columns, block structure covers {}",
            a.ncols(),
            bs.signal_len()
        )));
    }
    Ok(())
}

fn warn_if_unnormalized(a: &CMatrix) {
    let worst = a.column_iter().map(|c| (c.norm() - 1.0).abs()).fold(0.0, f64::max);
    if worst > NORMALIZATION_TOL {
        log::warn!("sensing matrix columns are not normalized (max deviation {worst:e}); capacities may be positive");
    }
}

/// Extreme Gram eigenvalues on one `T`-block support.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportSpectrum {
    pub blocks: Vec<usize>,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl SupportSpectrum {
    pub fn deviation(&self) -> f64 {
        (1.0 - self.lambda_min).max(self.lambda_max - 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockRicResult {
    pub delta: f64,
    pub t: usize,
    /// Support with the smallest Gram eigenvalue.
    pub support_lo: Vec<usize>,
    pub lambda_min: f64,
    /// Support with the largest Gram eigenvalue.
    pub support_hi: Vec<usize>,
    pub lambda_max: f64,
}

/// `binom(n, k)`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Lexicographic `t`-subsets of `0..n`.
pub fn combinations(n: usize, t: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if t > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..t).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..t).rev().find(|&i| idx[i] != i + n - t) else {
            return out;
        };
        idx[i] += 1;
        for j in (i + 1)..t {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Extreme eigenvalues of the Gram matrix on every `T`-block support.
pub fn support_spectra(a: &CMatrix, bs: &BlockStructure, t: usize, cap: u128) -> Result<Vec<SupportSpectrum>> {
    check_cols(a, bs)?;
    if t == 0 || t > bs.num_blocks() {
        return Err(Error::InvalidArgument(format!("T={t} must lie in 1..={}", bs.num_blocks())));
    }
    let count = binomial(bs.num_blocks(), t);
    if count > cap {
        return Err(Error::EnumerationCap { count, cap });
    }
    let g = gram(a);
    Ok(combinations(bs.num_blocks(), t)
        .into_par_iter()
        .map(|blocks| {
            let sub = principal_submatrix(&g, &bs.support_columns(&blocks));
            let (lambda_min, lambda_max) = hermitian_extreme_eigenvalues(&sub);
            SupportSpectrum { blocks, lambda_min, lambda_max }
        })
        .collect())
}

/// Exact block RIC `delta_{L,T}` by exhaustive enumeration, with the default cap.
pub fn block_ric(a: &CMatrix, bs: &BlockStructure, t: usize) -> Result<BlockRicResult> {
    block_ric_with_cap(a, bs, t, DEFAULT_ENUMERATION_CAP)
}

pub fn block_ric_with_cap(a: &CMatrix, bs: &BlockStructure, t: usize, cap: u128) -> Result<BlockRicResult> {
    Ok(summarize_spectra(&support_spectra(a, bs, t, cap)?, t))
}

/// Reduces per-support spectra to the RIC. Ties keep the first support in
/// enumeration order.
pub fn summarize_spectra(spectra: &[SupportSpectrum], t: usize) -> BlockRicResult {
    let mut lo = &spectra[0];
    let mut hi = &spectra[0];
    for s in spectra {
        if s.lambda_min < lo.lambda_min {
            lo = s;
        }
        if s.lambda_max > hi.lambda_max {
            hi = s;
        }
    }
    BlockRicResult {
        delta: (1.0 - lo.lambda_min).max(hi.lambda_max - 1.0).max(0.0),
        t,
        support_lo: lo.blocks.clone(),
        lambda_min: lo.lambda_min,
        support_hi: hi.blocks.clone(),
        lambda_max: hi.lambda_max,
    }
}

/// Lower bound on the capacity of any `T`-block submatrix of a matrix with
/// normalized columns and block RIC `delta`: `(LT/2) ln(1 - delta + beta)`.
///
/// Returns `-inf` when `delta >= 1` makes the bound vacuous.
pub fn capacity_ric_bound(delta: f64, l: usize, t: usize, beta: f64) -> f64 {
    if !(delta < 1.0) {
        return f64::NEG_INFINITY;
    }
    0.5 * (l * t) as f64 * (1.0 - delta + beta).ln()
}

/// The symmetric form `(LT/2) ln((1 - delta)(1 + delta))`, which uses both
/// sides of the isometry band. Only reported, never relied upon.
pub fn symmetric_capacity_ric_bound(delta: f64, l: usize, t: usize) -> f64 {
    if !(delta < 1.0) {
        return f64::NEG_INFINITY;
    }
    0.5 * (l * t) as f64 * ((1.0 - delta) * (1.0 + delta)).ln()
}

/// Largest off-diagonal magnitude of the normalized Gram matrix.
pub fn mutual_coherence(a: &CMatrix) -> f64 {
    let norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    let g = gram(a);
    let mut mu: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..j {
            mu = mu.max(g[(i, j)].norm() / (norms[i] * norms[j]));
        }
    }
    mu
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::extract_columns;
    use crate::models::{FourierModel, SensingModel};

    fn col(v: &[(f64, f64)]) -> Vec<Complex64> {
        v.iter().map(|&(r, i)| Complex64::new(r, i)).collect()
    }

    #[test]
    fn orthonormal_pair_has_zero_capacity() {
        let a = CMatrix::identity(4, 2);
        assert!(pair_capacity(&a, 0.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn correlated_pair_closed_form() {
        // Columns (1,0) and (0.6,0.8): inner product 0.6, det = 1 - 0.36.
        let a = CMatrix::from_column_slice(2, 2, &col(&[(1.0, 0.0), (0.0, 0.0), (0.6, 0.0), (0.8, 0.0)]));
        let c = pair_capacity(&a, 0.0).unwrap();
        assert!((c - 0.64f64.ln()).abs() < 1e-14);
        assert!((c + 0.4463).abs() < 1e-4);
    }

    #[test]
    fn duplicated_column_needs_regularization() {
        let a = CMatrix::from_column_slice(2, 2, &col(&[(0.6, 0.0), (0.0, 0.8), (0.6, 0.0), (0.0, 0.8)]));
        assert!(pair_capacity(&a, 1e-6).unwrap().is_finite());
        assert!(matches!(pair_capacity(&a, 0.0), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn report_matches_direct_pair_evaluation() {
        let model = FourierModel::new(12, 16).unwrap();
        let a = model.assemble(&model.random_init(1).unwrap()).unwrap();
        let bs = BlockStructure::contiguous(16, 4).unwrap();
        let report = capacity_report(&a, &bs, DEFAULT_BETA).unwrap();
        assert_eq!(report.per_pair.len(), 6);
        for pair in bs.pair_supports() {
            let direct = pair_capacity(&extract_columns(&a, &pair.columns).unwrap(), DEFAULT_BETA).unwrap();
            assert!((direct - report.per_pair[pair.pair_id]).abs() < 1e-10);
            assert!(report.per_pair[pair.pair_id] <= 8.0 * DEFAULT_BETA.ln_1p() + 1e-12);
        }
        assert_eq!(report.min_capacity, report.per_pair[report.argmin_pair]);
        assert!(report.min_capacity < 0.0);
    }

    #[test]
    fn orthonormal_matrix_report() {
        let bs = BlockStructure::contiguous(6, 3).unwrap();
        let report = capacity_report(&CMatrix::identity(6, 6), &bs, DEFAULT_BETA).unwrap();
        for c in &report.per_pair {
            assert!((c - 4.0 * DEFAULT_BETA.ln_1p()).abs() < 1e-12);
        }
        let ric = block_ric(&CMatrix::identity(6, 6), &bs, 2).unwrap();
        assert!(ric.delta.abs() < 1e-12);
    }

    #[test]
    fn duplicated_block_is_the_argmin() {
        let model = FourierModel::new(16, 12).unwrap();
        let mut a = model.assemble(&model.random_init(2).unwrap()).unwrap();
        let bs = BlockStructure::contiguous(12, 4).unwrap();
        for j in 0..3 {
            let c = a.column(j).into_owned();
            a.set_column(3 + j, &c);
        }
        let report = capacity_report(&a, &bs, DEFAULT_BETA).unwrap();
        assert_eq!(report.argmin_pair, 0);
        assert_eq!(bs.pair_supports()[0].blocks, (0, 1));
        let ric = block_ric(&a, &bs, 2).unwrap();
        assert!(ric.lambda_min.abs() < 1e-9);
        assert!(ric.delta >= 1.0 - 1e-9);
        assert_eq!(ric.support_lo, vec![0, 1]);
        assert!(matches!(capacity_report(&a, &bs, 0.0), Err(Error::NotPositiveDefinite { .. })));

        // With orthonormal columns the duplicate pair spans [0, 2] exactly.
        let mut b = CMatrix::identity(12, 12);
        for j in 0..3 {
            let c = b.column(j).into_owned();
            b.set_column(3 + j, &c);
        }
        let ric = block_ric(&b, &bs, 2).unwrap();
        assert!((ric.delta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let bs = BlockStructure::contiguous(40, 40).unwrap();
        let a = CMatrix::identity(40, 40);
        assert!(matches!(block_ric_with_cap(&a, &bs, 3, 1000), Err(Error::EnumerationCap { count: 9880, cap: 1000 })));
    }

    #[test]
    fn combinations_are_lexicographic() {
        assert_eq!(combinations(4, 2), vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(binomial(16, 2), 120);
        assert_eq!(binomial(24, 2), 276);
    }

    #[test]
    fn bound_examples() {
        assert_eq!(capacity_ric_bound(0.0, 3, 2, 0.0), 0.0);
        assert!((capacity_ric_bound(0.5, 1, 2, 0.0) - 0.5f64.ln()).abs() < 1e-15);
        assert_eq!(capacity_ric_bound(1.0, 1, 2, 0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn beta_must_be_non_negative() {
        assert!(pair_capacity(&CMatrix::identity(2, 2), -1.0).is_err());
    }
}
