//! Monte-Carlo recovery benchmarks: success rate versus block sparsity for a
//! set of labeled sensing matrices and solvers, with paired trial signals.

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blocks::BlockStructure;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::models::EmModel;
use crate::recovery::{relative_error, GroupBasisPursuit, RecoveryOptions, NOISELESS_ETA_REL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub bs: BlockStructure,
    pub s_b: usize,
    pub trials: usize,
    pub seed: u64,
}

impl TrialSpec {
    pub fn new(bs: BlockStructure, s_b: usize, trials: usize, seed: u64) -> Result<Self> {
        if s_b == 0 || s_b > bs.num_blocks() {
            return Err(Error::InvalidArgument(format!(
                "block sparsity {s_b} outside 1..={}",
                bs.num_blocks()
            )));
        }
        if trials == 0 {
            return Err(Error::InvalidArgument("at least one trial is required".into()));
        }
        Ok(Self { bs, s_b, trials, seed })
    }
}

fn trial_rng(seed: u64, s_b: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((s_b as u64) << 32) | trial as u64);
    rng
}

/// Standard complex normal sample, `E|z|^2 = 1`.
pub fn complex_normal(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Signal with `s_b` uniformly chosen active blocks and standard complex
/// normal entries on them. Depends only on `(seed, s_b, trial)`.
pub fn random_block_sparse(spec: &TrialSpec, trial: usize) -> CVector {
    let mut rng = trial_rng(spec.seed, spec.s_b, trial);
    let mut active = sample(&mut rng, spec.bs.num_blocks(), spec.s_b).into_vec();
    active.sort_unstable();
    let mut x = CVector::zeros(spec.bs.signal_len());
    for k in active {
        for &i in spec.bs.block(k) {
            x[i] = complex_normal(&mut rng);
        }
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Joint l2/l1 over the block structure.
    Joint,
    /// Plain l1 (singleton blocks).
    L1,
}

impl Solver {
    pub fn label(&self) -> &'static str {
        match self {
            Solver::Joint => "joint_l2l1",
            Solver::L1 => "l1",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveConfig {
    /// Block sparsity levels; empty means `1..=M/(2L)`.
    pub levels: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub tol_success: f64,
    pub solvers: Vec<Solver>,
    /// Residual bound relative to `|y|`.
    pub eta_rel: f64,
    pub recovery: RecoveryOptions,
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self {
            levels: Vec::new(),
            trials: 100,
            seed: 0,
            tol_success: crate::recovery::DEFAULT_SUCCESS_TOL,
            solvers: vec![Solver::Joint, Solver::L1],
            eta_rel: NOISELESS_ETA_REL,
            recovery: RecoveryOptions { tol: 1e-6, ..RecoveryOptions::default() },
        }
    }
}

/// `1..=floor(M / (2L))`, at least level 1.
pub fn default_levels(m: usize, bs: &BlockStructure) -> Vec<usize> {
    let top = (m / (2 * bs.block_len())).clamp(1, bs.num_blocks());
    (1..=top).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub matrix_label: String,
    pub solver: Solver,
    pub s_b: usize,
    pub s_total: usize,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub nonconverged: usize,
    pub beyond_guarantee: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyCurve {
    pub levels: Vec<usize>,
    pub points: Vec<CurvePoint>,
    pub trials: usize,
    pub tol_success: f64,
    pub eta_rel: f64,
}

pub const CSV_HEADER: &str = "matrix_label,solver,S_B,S_total,trials,successes,rate,nonconverged,beyond_guarantee_flag";

impl AccuracyCurve {
    pub fn point(&self, matrix_label: &str, solver: Solver, s_b: usize) -> Option<&CurvePoint> {
        self.points.iter().find(|p| p.matrix_label == matrix_label && p.solver == solver && p.s_b == s_b)
    }

    pub fn rate(&self, matrix_label: &str, solver: Solver, s_b: usize) -> Option<f64> {
        self.point(matrix_label, solver, s_b).map(|p| p.rate)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                p.matrix_label,
                p.solver.label(),
                p.s_b,
                p.s_total,
                p.trials,
                p.successes,
                p.rate,
                p.nonconverged,
                p.beyond_guarantee
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct TrialOutcome {
    success: bool,
    converged: bool,
}

/// Success-rate curves for every (matrix, solver, level). Trial `i` at level
/// `S_B` uses the same signal for every matrix and solver.
pub fn run_curve(matrices: &[(String, CMatrix)], bs: &BlockStructure, cfg: &CurveConfig) -> Result<AccuracyCurve> {
    let Some((_, first)) = matrices.first() else {
        return Err(Error::InvalidArgument("no matrices to benchmark".into()));
    };
    let m = first.nrows();
    for (label, a) in matrices {
        if a.shape() != first.shape() || a.ncols() != bs.signal_len() {
            return Err(Error::DimensionMismatch(format!(
                "matrix {label} is {}x{}, expected {m}x{}",
                a.nrows(),
                a.ncols(),
                bs.signal_len()
            )));
        }
    }
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    if !(cfg.tol_success > 0.0) || !(cfg.eta_rel >= 0.0) {
        return Err(Error::InvalidArgument("tol_success must be positive and eta_rel non-negative".into()));
    }
    let levels = if cfg.levels.is_empty() { default_levels(m, bs) } else { cfg.levels.clone() };
    let specs: Vec<TrialSpec> =
        levels.iter().map(|&s_b| TrialSpec::new(bs.clone(), s_b, cfg.trials, cfg.seed)).collect::<Result<_>>()?;
    let signals: Vec<Vec<CVector>> =
        specs.iter().map(|spec| (0..spec.trials).map(|t| random_block_sparse(spec, t)).collect()).collect();

    let mut points = Vec::new();
    for (label, a) in matrices {
        for &solver in &cfg.solvers {
            let engine = match solver {
                Solver::Joint => GroupBasisPursuit::new(a, bs)?,
                Solver::L1 => GroupBasisPursuit::l1(a)?,
            };
            for (spec, xs) in specs.iter().zip(&signals) {
                let outcomes: Vec<TrialOutcome> = xs
                    .par_iter()
                    .map(|x| {
                        let y = a * x;
                        let r = engine.solve(&y, cfg.eta_rel * y.norm(), &cfg.recovery)?;
                        let accurate = relative_error(&r.x_hat, x)? <= cfg.tol_success;
                        Ok(TrialOutcome { success: accurate && r.converged, converged: r.converged })
                    })
                    .collect::<Result<_>>()?;
                let successes = outcomes.iter().filter(|o| o.success).count();
                let nonconverged = outcomes.iter().filter(|o| !o.converged).count();
                let s_total = spec.s_b * bs.block_len();
                log::info!(
                    "{label} {} S_B={} {successes}/{} ({nonconverged} not converged)",
                    solver.label(),
                    spec.s_b,
                    spec.trials
                );
                points.push(CurvePoint {
                    matrix_label: label.clone(),
                    solver,
                    s_b: spec.s_b,
                    s_total,
                    trials: spec.trials,
                    successes,
                    rate: successes as f64 / spec.trials as f64,
                    nonconverged,
                    beyond_guarantee: 2 * s_total > m,
                });
            }
        }
    }
    Ok(AccuracyCurve { levels, points, trials: cfg.trials, tol_success: cfg.tol_success, eta_rel: cfg.eta_rel })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoReport {
    pub x_true: CVector,
    pub x_hat: CVector,
    pub normalized_error: f64,
    pub residual: f64,
    pub converged: bool,
    pub tol_success: f64,
}

impl DemoReport {
    pub fn success(&self) -> bool {
        self.converged && self.normalized_error <= self.tol_success
    }

    /// The normalized error, with anything within the success tolerance shown as 0.
    pub fn reported_error(&self) -> f64 {
        if self.normalized_error <= self.tol_success {
            0.0
        } else {
            self.normalized_error
        }
    }

    /// Magnitudes of the truth and the reconstruction on the pixel grid.
    pub fn magnitude_grids(&self, em: &EmModel) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        (em.magnitude_grid(&self.x_true), em.magnitude_grid(&self.x_hat))
    }
}

/// Noiseless joint l2/l1 reconstruction of one signal.
pub fn single_instance_demo(
    a: &CMatrix,
    bs: &BlockStructure,
    x_true: &CVector,
    tol_success: f64,
    opts: &RecoveryOptions,
) -> Result<DemoReport> {
    if x_true.len() != a.ncols() {
        return Err(Error::DimensionMismatch(format!("signal has {} entries, matrix {} columns", x_true.len(), a.ncols())));
    }
    if x_true.norm() == 0.0 {
        return Err(Error::ZeroGroundTruth);
    }
    let y = a * x_true;
    let r = GroupBasisPursuit::new(a, bs)?.solve(&y, NOISELESS_ETA_REL * y.norm(), opts)?;
    Ok(DemoReport {
        normalized_error: relative_error(&r.x_hat, x_true)?,
        x_true: x_true.clone(),
        x_hat: r.x_hat,
        residual: r.residual,
        converged: r.converged,
        tol_success,
    })
}
